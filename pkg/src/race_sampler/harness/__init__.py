"""CLI, experiment runner and statistical verification kit."""
