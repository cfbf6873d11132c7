"""Checked-in data files (emoji short names, toy grammar)."""
