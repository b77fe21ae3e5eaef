"""Synthetic ground-truth models: fractal regions, local distributions and sampling."""
