"""Numerical substrate: FFT, reverse-mode tape, hyper-dual forward mode."""
