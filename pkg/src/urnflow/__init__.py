"""Immigration Polya urns, generalized gamma limits and the tree/walk embeddings."""

__version__ = "0.1.0"
