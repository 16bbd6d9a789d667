"""Click-free logic behind the CLI commands."""
