"""fedmid: a desk-scale federated-learning poisoning simulator.

Clients train a small deterministic network, attackers poison data or
updates, and the server aggregates with one of twelve pluggable rules.
The flagship rule scores clients by comparing relational distance matrices
of intermediate outputs on a synthetic probe batch instead of comparing raw
parameter updates.
"""

__version__ = "0.1.0"

from . import kernels

__all__ = ["kernels", "__version__"]
