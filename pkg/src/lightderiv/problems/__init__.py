"""Built-in problem families."""
