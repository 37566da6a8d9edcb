"""Sparse meta-learning toolkit: Reptile with iterative network pruning"""

__version__ = "1.0.0"
