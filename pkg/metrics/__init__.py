"""Causal graph and order metrics."""
