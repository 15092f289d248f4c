"""Two-stage robust day-ahead dispatch."""
