"""Controllers module - command-line sub-commands."""
