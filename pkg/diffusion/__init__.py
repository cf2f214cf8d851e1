"""Denoising diffusion training of score networks."""
