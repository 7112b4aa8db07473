"""n-gram transition graphs of protein sequences, DirectGCN embeddings and PPI evaluation."""

__version__ = "0.1.0"
