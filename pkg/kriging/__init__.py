"""Ordinary kriging baseline: covariance models, variogram fitting and prediction."""
