"""Statistical admission tests for automatic passenger counting (APC) validation."""
