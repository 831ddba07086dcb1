"""Spectra of products of independent non-Hermitian random matrices.

Sampling (:mod:`~prodspec.ensemble`), in-house dense eigensolvers
(:mod:`~prodspec.linalg`), closed-form limit objects
(:mod:`~prodspec.limitlaw`), empirical statistics
(:mod:`~prodspec.estimator`) and experiment orchestration
(:mod:`~prodspec.harness`, :mod:`~prodspec.cli`).
"""

__version__ = "0.1.0"
