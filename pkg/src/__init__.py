"""Package marker."""
