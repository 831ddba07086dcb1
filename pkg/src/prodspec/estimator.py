"""Empirical spectral statistics and finite-n checks of the limit theory."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import linalg
from .ensemble import build_linearization, build_product
from .linalg import SpectralSample, as_matrix

__all__ = [
    "EmpiricalDistribution",
    "ProbePoint",
    "MultiplicityReport",
    "NormReport",
    "esd_radii",
    "pushforward_radii",
    "nonzero_angles",
    "ks_statistic",
    "angular_ks",
    "empirical_stieltjes",
    "hermitian_spectrum",
    "g_empirical_two_ways",
    "levy_distance",
    "kolmogorov_distance",
    "pair_multisets",
    "multiplicity_check",
    "least_singular_probe",
    "norm_growth_check",
    "horn_margin",
    "LEAST_SINGULAR_EXPONENT",
]

log = logging.getLogger(__name__)

#: monitored threshold is ``n ** -LEAST_SINGULAR_EXPONENT``
LEAST_SINGULAR_EXPONENT = 10


class EmpiricalDistribution:
    """Uniform-weight empirical law of a 1-D sample."""

    def __init__(self, values):
        values = np.sort(np.asarray(values, dtype=float).ravel())
        if values.size == 0:
            raise ValueError("empirical distribution needs at least one value")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample has non-finite values")
        self.values = values

    def __len__(self):
        return self.values.size

    @property
    def weight(self):
        return 1.0 / self.values.size

    def cdf(self, x):
        """Right-continuous step CDF."""
        out = np.searchsorted(self.values, x, side="right") / self.values.size
        return out[()] if np.ndim(out) == 0 else out

    def cdf_left(self, x):
        """Left limit ``F(x-)``."""
        out = np.searchsorted(self.values, x, side="left") / self.values.size
        return out[()] if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ProbePoint:
    z: complex
    alpha: complex = 1j

    def __post_init__(self):
        if not complex(self.alpha).imag > 0:
            raise ValueError("probe alpha must have Im > 0")


def _values(sample, kind=None):
    if isinstance(sample, SpectralSample):
        if kind is not None and sample.kind != kind:
            raise ValueError(f"expected {kind}, got {sample.kind}")
        return np.asarray(sample.values)
    return np.asarray(sample)


def esd_radii(eigs):
    """Radial marginal of the ESD: the sorted moduli ``|lambda_k|``."""
    lam = _values(eigs, "eigenvalues")
    if lam.size == 0:
        raise ValueError("no eigenvalues")
    return EmpiricalDistribution(np.abs(lam))


def pushforward_radii(eigs, m):
    """Moduli of ``eta^m`` for eigenvalues ``eta`` of the linearization."""
    lam = _values(eigs, "eigenvalues")
    return EmpiricalDistribution(np.abs(lam) ** m)


def nonzero_angles(eigs):
    """``arg(lambda) / (2 pi) + 1/2`` for nonzero eigenvalues, and the zero count."""
    lam = _values(eigs, "eigenvalues")
    nz = lam[lam != 0]
    return np.angle(nz) / (2 * np.pi) + 0.5, int(lam.size - nz.size)


def ks_statistic(sample, cdf):
    """Two-sided Kolmogorov-Smirnov distance between a sample and a CDF.

    Both one-sided gaps are evaluated at every jump of the empirical CDF.
    """
    if not isinstance(sample, EmpiricalDistribution):
        sample = EmpiricalDistribution(sample)
    x = sample.values
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n), 0.0))


def angular_ks(eigs):
    """KS statistic of the eigenvalue arguments against the uniform law.

    Exact zeros have no argument and are dropped (the count is logged).
    """
    u, zeros = nonzero_angles(eigs)
    if zeros:
        log.warning("angular_ks: excluded %d zero eigenvalue(s)", zeros)
    if u.size == 0:
        raise ValueError("all eigenvalues are zero")
    return ks_statistic(u, lambda v: np.clip(v, 0.0, 1.0))


def empirical_stieltjes(h_eigs, alpha):
    """``mean(1 / (x_k - alpha))`` over the eigenvalues of ``H_n``."""
    alpha = complex(alpha)
    if not alpha.imag > 0:
        raise ValueError("alpha must have Im > 0")
    x = _values(h_eigs).real
    return complex(np.mean(1.0 / (x - alpha)))


def hermitian_spectrum(y, z):
    """Eigenvalues of ``(Y - z)^* (Y - z)`` (ascending)."""
    r = as_matrix(y) - complex(z) * np.eye(y.shape[0])
    return linalg.hermitian_eigenvalues(r.conj().T @ r, psd=True, meta={"z": complex(z)})


def g_empirical_two_ways(y, z, h=1e-4, eigs=None):
    """Two evaluations of ``d/ds int ln x nu_n(dx, z)`` at ``z = s + i t``.

    Returns ``(g_via_logdet, g_via_eigs)``: a central difference in ``s``
    of ``ln|det(Y - z)|^2 / dim``, and ``-2 Re(mean(1 / (eta_k - z)))``
    over the eigenvalues of ``Y``. Precomputed eigenvalues may be passed
    as ``eigs``.
    """
    y = as_matrix(y)
    dim = y.shape[0]
    z = complex(z)
    lam = _values(eigs if eigs is not None else linalg.eigenvalues(y))
    if np.min(np.abs(lam - z)) < 1e-6:
        raise ValueError("probe lies within 1e-6 of an eigenvalue")
    eye = np.eye(dim)
    up = linalg.log_abs_det(y - (z + h) * eye)
    down = linalg.log_abs_det(y - (z - h) * eye)
    if not (np.isfinite(up) and np.isfinite(down)):
        raise ValueError("Y - zI is singular at a difference node")
    g_logdet = (up - down) / (2.0 * h * dim)
    g_eigs = -2.0 * float(np.mean(1.0 / (lam - z)).real)
    return float(g_logdet), g_eigs


def kolmogorov_distance(f, g):
    """``sup_x |F(x) - G(x)|`` for two empirical distributions."""
    pts = np.concatenate([f.values, g.values])
    right = np.abs(f.cdf(pts) - g.cdf(pts))
    left = np.abs(f.cdf_left(pts) - g.cdf_left(pts))
    return float(max(right.max(), left.max()))


def _levy_ok(f, g, eps):
    # F(x - eps) - eps <= G(x): check where the left side steps up or G steps
    xs = np.concatenate([g.values, f.values + eps])
    lhs = np.concatenate([f.cdf(g.values - eps), f.cdf(f.values)])
    if np.any(lhs - eps > g.cdf(xs) + 1e-15):
        return False
    # G(x) <= F(x + eps) + eps: check where G steps up or F(x + eps) steps
    xs = np.concatenate([g.values, f.values - eps])
    rhs = np.concatenate([f.cdf(g.values + eps), f.cdf(f.values)])
    return not np.any(g.cdf(xs) > rhs + eps + 1e-15)


def levy_distance(f, g, tol=1e-12):
    """Levy distance between two empirical distributions, by bisection."""
    if not isinstance(f, EmpiricalDistribution):
        f = EmpiricalDistribution(f)
    if not isinstance(g, EmpiricalDistribution):
        g = EmpiricalDistribution(g)
    lo, hi = 0.0, min(1.0, kolmogorov_distance(f, g))
    if _levy_ok(f, g, 0.0):
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _levy_ok(f, g, mid):
            hi = mid
        else:
            lo = mid
    return hi


def pair_multisets(a, b, tol=None):
    """Match two equal-size complex multisets; returns ``(perm, max_error)``.

    Greedy nearest-neighbour matching is tried first and kept when its
    worst error is below ``tol`` and below half the spacing of ``b``;
    otherwise an optimal assignment is solved.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("multisets differ in size")
    dist = np.abs(a[:, None] - b[None, :])
    used = np.zeros(b.size, dtype=bool)
    perm = np.empty(a.size, dtype=int)
    for i in range(a.size):
        d = np.where(used, np.inf, dist[i])
        j = int(np.argmin(d))
        perm[i] = j
        used[j] = True
    err = float(dist[np.arange(a.size), perm].max()) if a.size else 0.0
    spacing = np.inf
    if b.size > 1:
        db = np.abs(b[:, None] - b[None, :])
        db[np.diag_indices(b.size)] = np.inf
        spacing = db.min()
    if (tol is None or err <= tol) and err < 0.5 * spacing:
        return perm, err
    rows, cols = linear_sum_assignment(dist)
    perm = cols[np.argsort(rows)]
    return perm, float(dist[np.arange(a.size), perm].max()) if a.size else 0.0


@dataclass
class MultiplicityReport:
    passed: bool
    max_error: float
    tolerance: float
    m: int
    n: int


def multiplicity_check(factors, rtol=1e-6):
    """Compare ``{eta^m}`` over ``spec(Y)`` with ``spec(X)`` repeated ``m`` times."""
    m = len(factors)
    if m < 2:
        raise ValueError("multiplicity check needs m >= 2")
    x = build_product(factors)
    n = x.shape[0]
    if n > 64:
        raise ValueError("multiplicity check is limited to n <= 64")
    y = build_linearization(factors)
    lam_x = linalg.eigenvalues(x).values
    eta = linalg.eigenvalues(y).values
    xnorm = linalg.singular_values(x).values[0]
    tol = rtol * max(xnorm, np.finfo(float).tiny)
    _, err = pair_multisets(eta**m, np.repeat(lam_x, m), tol)
    return MultiplicityReport(bool(err <= tol), err, tol, m, n)


def least_singular_probe(y, z):
    """``sigma_min(Y - z I)``, i.e. ``1 / ||(Y - z I)^{-1}||``."""
    y = as_matrix(y)
    return float(linalg.singular_values(y - complex(z) * np.eye(y.shape[0])).values[-1])


@dataclass
class NormReport:
    op_norm: float
    trace_average: float
    deviation: float
    threshold: float
    flagged: bool


def norm_growth_check(y, n):
    """Operator norm and ``Tr(Y^* Y) / dim`` of a linearization.

    The trace average is flagged when it is further than ``5 / sqrt(n)``
    from 1.
    """
    y = as_matrix(y)
    op = float(linalg.singular_values(y).values[0])
    tr = float(np.sum(np.abs(y) ** 2) / y.shape[0])
    thr = 5.0 / np.sqrt(n)
    dev = abs(tr - 1.0)
    return NormReport(op, tr, dev, thr, bool(dev > thr))


def horn_margin(eigs, svals):
    """Smallest ``sum_{j<=k} s_j^2 - sum_{j<=k} |lambda_j|^2`` over ``k``.

    Eigenvalues are ordered by decreasing modulus and singular values
    decreasingly. A negative margin beyond rounding is a violation.
    """
    lam = np.sort(np.abs(_values(eigs, "eigenvalues")))[::-1]
    s = np.sort(_values(svals, "singular-values"))[::-1]
    return float(np.min(np.cumsum(s**2) - np.cumsum(lam**2)))
