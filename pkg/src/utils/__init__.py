"""Utility modules: configuration key suggestions and the progress spinner."""
