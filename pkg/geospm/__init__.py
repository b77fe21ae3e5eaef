"""Geostatistical parametric mapping: kernel-smoothed GLMs over a grid with
random-field-theory thresholds."""
