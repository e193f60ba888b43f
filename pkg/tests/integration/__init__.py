"""Integration tests for the Seesaw LT project."""
