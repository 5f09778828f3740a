"""Models module - domain entities and callable contracts."""
