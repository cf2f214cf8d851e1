"""Kernel Stein estimators and final-layer probing."""
