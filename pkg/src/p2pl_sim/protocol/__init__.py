"""Round engine: synchronization, training and consensus phases, and baselines."""
