"""droem: a desk-scale laboratory for interactively steered image dynamics
built on exact operator calculus over truncated highest-weight modules."""

__version__ = "0.1.0"
