"""Unit tests for the Seesaw LT project."""
