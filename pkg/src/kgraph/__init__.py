"""Computations on finite higher-rank graphs."""
