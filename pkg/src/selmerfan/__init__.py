"""Selmer-rank distributions over fans of S3-cubic fields.

Exact Markov-operator evolution and stationary laws, finite-geometry
enumeration over F3, the mod-3 matrix group, prime classification for
elliptic curves over Q, and fan enumeration with cubic emission.
"""

__version__ = "0.1.0"
