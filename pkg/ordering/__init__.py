"""Causal ordering: leaf selection, deciduous residues, pruning."""
