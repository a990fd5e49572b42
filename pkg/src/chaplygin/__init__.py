"""Rolling of an n-dimensional Chaplygin ball over a fixed sphere."""
