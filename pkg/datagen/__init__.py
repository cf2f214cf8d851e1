"""Synthetic data generation and dataset/graph serialization."""
