namespace ocpkit {}
