"""Decision-theoretic hierarchical diagnosis for combinational circuits."""

__version__ = "0.1.0"
