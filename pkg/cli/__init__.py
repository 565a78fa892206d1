"""Command-line interface for prsguard."""
