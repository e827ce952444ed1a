"""Experiment configuration, orchestration, persistence and reporting."""
