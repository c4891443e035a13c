"""Deterministic simulator for differentially private federated averaging.

Subpackages: ``objectives`` (client losses, optima, sharding), ``fedopt``
(the round engine), ``analysis`` (metrics, bound evaluators, lemma checks)
and ``cli`` (config files, experiment plans, reports).
"""

__version__ = "0.1.0"
