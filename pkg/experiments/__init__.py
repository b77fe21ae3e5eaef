"""Experiment drivers: synthetic noise and interaction sweeps, and the empirical model ladder."""
