"""Command-line interface of riesz-bounds."""
