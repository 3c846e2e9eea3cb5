"""LRU map-cache miss-rate modeling under Generalized-Zipf workloads."""
__version__ = "0.1.0"
