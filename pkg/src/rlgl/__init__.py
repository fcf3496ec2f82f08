"""Safety-filtered multi-robot red light, green light simulator."""
