"""Numerical core: model, data, graphs, mixing weights and random streams."""
