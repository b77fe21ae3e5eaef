"""Recovery scores comparing significance maps with target maps."""
