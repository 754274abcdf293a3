"""UI utilities for Rich-based output."""
