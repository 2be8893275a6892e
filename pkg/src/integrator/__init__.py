"""Time integration: stepping schemes, the run driver and particle flow."""
