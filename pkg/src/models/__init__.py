"""Parameter, domain and report models shared by tools and graphs."""
