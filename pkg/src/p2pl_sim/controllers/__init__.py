"""Flask blueprints for the read-only results API."""
