"""Dense eigenvalue and singular-value routines.

Everything here runs on the in-house kernels in :mod:`prodspec._kernels`:
Householder reduction to Hessenberg form followed by implicitly shifted
QR for general matrices, and Householder tridiagonalization followed by
implicit QL for Hermitian ones. No LAPACK eigen-driver is involved.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

__all__ = [
    "BACKWARD_ERROR_CONSTANT",
    "ConvergenceError",
    "SpectralSample",
    "as_matrix",
    "backward_tolerance",
    "eigenvalues",
    "hermitian_eigenvalues",
    "singular_values",
    "log_abs_det",
]

#: ``c`` in the backward-error bound ``||E|| <= c * dim * eps * ||A||``.
BACKWARD_ERROR_CONSTANT = 10.0

_QL_MAX_ITER = 60


class ConvergenceError(ArithmeticError):
    """Raised when an iterative eigensolver exhausts its iteration budget."""


@dataclass
class SpectralSample:
    """Eigenvalues or singular values of one matrix realization.

    ``values`` is complex and unordered for ``kind == "eigenvalues"``,
    real and descending for ``"singular-values"``, real and ascending for
    ``"hermitian-eigenvalues"``.
    """

    kind: str
    values: np.ndarray
    dim: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("eigenvalues", "singular-values", "hermitian-eigenvalues"):
            raise ValueError(f"unknown spectral kind {self.kind!r}")
        if len(self.values) != self.dim:
            raise ValueError("value count does not match dim")

    def __len__(self):
        return self.dim


def as_matrix(a, square=True):
    """Validate and return ``a`` as a C-contiguous complex128 2-D array."""
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    if square and a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def backward_tolerance(a):
    """Backward-error budget ``c * dim * eps * ||A||_F`` for matrix ``a``."""
    a = np.asarray(a)
    return BACKWARD_ERROR_CONSTANT * a.shape[0] * np.finfo(float).eps * np.linalg.norm(a)


def eigenvalues(a, meta=None):
    """All eigenvalues of a square complex matrix, with multiplicity.

    Parameters
    ----------
    a : array_like
        Square matrix with finite entries.
    meta : dict, optional
        Provenance copied onto the returned sample.

    Returns
    -------
    SpectralSample
        ``kind="eigenvalues"``; values are unordered.

    Raises
    ------
    ConvergenceError
        If QR fails to deflate within ``30 * dim`` sweeps.
    """
    h = as_matrix(a).copy()
    n = h.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    _kernels.hessenberg_reduce(h)
    eigs, sweeps = _kernels.hessenberg_qr_eigvals(h, 30 * n)
    if sweeps < 0:
        raise ConvergenceError(f"QR iteration did not converge in {30 * n} sweeps (dim={n})")
    return SpectralSample("eigenvalues", eigs, n, dict(meta or {}))


def hermitian_eigenvalues(h, psd=False, meta=None):
    """Real eigenvalues of a Hermitian matrix in ascending order.

    The input is symmetrized as ``(H + H^*) / 2`` after checking that it is
    Hermitian to within ``1e-12 * ||H||``. With ``psd=True`` eigenvalues
    that are negative by no more than the backward-error budget are
    clamped to zero.
    """
    h = as_matrix(h)
    n = h.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    hnorm = np.linalg.norm(h)
    if np.max(np.abs(h - h.conj().T), initial=0.0) > 1e-12 * max(hnorm, np.finfo(float).tiny):
        raise ValueError("matrix is not Hermitian within tolerance")
    work = np.ascontiguousarray(0.5 * (h + h.conj().T))
    d, e = _kernels.hermitian_tridiagonalize(work)
    d, ok = _kernels.tridiagonal_ql_eigvals(d, e, _QL_MAX_ITER)
    if not ok:
        raise ConvergenceError(f"QL iteration did not converge (dim={n})")
    d = np.sort(d)
    if psd:
        tol = backward_tolerance(h)
        d[(d < 0) & (d >= -tol)] = 0.0
    return SpectralSample("hermitian-eigenvalues", d, n, dict(meta or {}))


def singular_values(a, meta=None):
    """Singular values of a square matrix, descending.

    Computed as square roots of the eigenvalues of ``A^* A``. This squares
    the condition number: singular values below roughly
    ``sqrt(eps) * ||A||`` carry only absolute accuracy ``~eps * ||A||^2 / s``.
    """
    a = as_matrix(a)
    gram = a.conj().T @ a
    lam = hermitian_eigenvalues(gram, psd=True).values
    s = np.sqrt(np.clip(lam, 0.0, None))[::-1].copy()
    return SpectralSample("singular-values", s, a.shape[0], dict(meta or {}))


def log_abs_det(a):
    """``ln |det A|^2`` as the sum of log squared singular values.

    Returns ``-inf`` when any computed singular value is exactly zero.
    """
    s = singular_values(a).values
    if np.any(s == 0.0):
        return -np.inf
    return float(np.sum(2.0 * np.log(s)))
