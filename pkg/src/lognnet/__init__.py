"""Chaotic-map reservoir classifier (LogNNet) for low-memory medical inference."""
