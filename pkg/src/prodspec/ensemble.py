"""Random factor matrices, their product, and the cyclic block linearization."""

from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix

__all__ = [
    "DISTRIBUTIONS",
    "EnsembleConfig",
    "factor_rng",
    "sample_standardized",
    "sample_factor",
    "sample_factors",
    "build_product",
    "build_linearization",
    "linearization_mask",
    "truncate_rescale",
]

DISTRIBUTIONS = ("complex-gaussian", "real-gaussian", "rademacher", "uniform-disc")

# 4th absolute moment E|xi|^4 of each standardized law
FOURTH_MOMENT = {
    "complex-gaussian": 2.0,
    "real-gaussian": 3.0,
    "rademacher": 1.0,
    "uniform-disc": 4.0 / 3.0,
}


@dataclass(frozen=True)
class EnsembleConfig:
    """Hypotheses of the product ensemble: ``m`` factors of order ``n``.

    Entries of factor ``j`` are i.i.d. copies of ``sigmas[j-1] * xi / sqrt(n)``
    with ``xi`` drawn from the standardized law ``dist``. ``moment_eta`` is
    bookkeeping only (finite ``2 + eta`` moment).
    """

    m: int
    n: int
    dist: str = "complex-gaussian"
    sigmas: tuple = field(default=None)
    seed: int = 0
    moment_eta: float = 2.0

    def __post_init__(self):
        if int(self.m) < 1:
            raise ValueError("m must be >= 1")
        if int(self.n) < 1:
            raise ValueError("n must be >= 1")
        if self.dist not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.dist!r}; choose from {DISTRIBUTIONS}")
        sigmas = (1.0,) * int(self.m) if self.sigmas is None else tuple(float(s) for s in self.sigmas)
        if len(sigmas) != self.m:
            raise ValueError(f"need {self.m} sigmas, got {len(sigmas)}")
        if any(not s > 0 for s in sigmas):
            raise ValueError("every sigma must be positive")
        if not self.moment_eta > 0:
            raise ValueError("moment_eta must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def sigma(self):
        """Product ``sigma_1 * ... * sigma_m`` (radius of the limit support)."""
        return float(np.prod(self.sigmas))


def factor_rng(seed, j, trial):
    """Generator for factor ``j`` of trial ``trial``.

    The substream is ``SeedSequence(seed, spawn_key=(j, trial))``, i.e. the
    master seed is the entropy and ``(j, trial)`` is hashed into the pool by
    numpy's documented SeedSequence mixing. Distinct keys give independent
    streams and no coordination between workers is needed.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(j), int(trial)))
    return np.random.Generator(np.random.PCG64(ss))


def sample_standardized(dist, size, rng):
    """Mean-zero, unit-variance (``E|xi|^2 = 1``) samples of the named law."""
    if dist == "complex-gaussian":
        return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)
    if dist == "real-gaussian":
        return rng.standard_normal(size).astype(np.complex128)
    if dist == "rademacher":
        return (2.0 * rng.integers(0, 2, size=size) - 1.0).astype(np.complex128)
    if dist == "uniform-disc":
        # uniform on the disc of radius sqrt(2)
        r = np.sqrt(2.0 * rng.random(size))
        theta = 2.0 * np.pi * rng.random(size)
        return r * np.exp(1j * theta)
    raise ValueError(f"unknown distribution {dist!r}")


def sample_factor(config, j, trial=0):
    """The ``j``-th factor (1-based) of realization ``trial``."""
    if not 1 <= j <= config.m:
        raise ValueError(f"factor index {j} outside 1..{config.m}")
    n = config.n
    rng = factor_rng(config.seed, j, trial)
    xi = sample_standardized(config.dist, (n, n), rng)
    return np.ascontiguousarray(config.sigmas[j - 1] * xi / np.sqrt(n))


def sample_factors(config, trial=0):
    return [sample_factor(config, j, trial) for j in range(1, config.m + 1)]


def _check_factors(factors):
    if len(factors) == 0:
        raise ValueError("need at least one factor")
    mats = [as_matrix(f) for f in factors]
    n = mats[0].shape[0]
    for f in mats:
        if f.shape != (n, n):
            raise ValueError(f"factor shapes differ: {f.shape} vs {(n, n)}")
    return mats, n


def build_product(factors):
    """Left-to-right product ``X_1 X_2 ... X_m``."""
    mats, _ = _check_factors(factors)
    out = mats[0].copy()
    for f in mats[1:]:
        out = out @ f
    return out


def build_linearization(factors):
    """Cyclic block matrix with ``X_k`` at block ``(k, k+1)`` and ``X_m`` at ``(m, 1)``.

    The result is ``(m n) x (m n)`` and equals ``X_1`` when ``m == 1``.
    Its ``m``-th power is block diagonal with the cyclic rotations of the
    product on the diagonal.
    """
    mats, n = _check_factors(factors)
    m = len(mats)
    if m == 1:
        return mats[0].copy()
    y = np.zeros((m * n, m * n), dtype=np.complex128)
    for k in range(m):
        col = (k + 1) % m
        y[k * n:(k + 1) * n, col * n:(col + 1) * n] = mats[k]
    return y


def linearization_mask(m, n):
    """Boolean mask of the ``m n^2`` positions ``build_linearization`` may fill."""
    if m == 1:
        return np.ones((n, n), dtype=bool)
    mask = np.zeros((m * n, m * n), dtype=bool)
    for k in range(m):
        col = (k + 1) % m
        mask[k * n:(k + 1) * n, col * n:(col + 1) * n] = True
    return mask


def _blocks(m, n):
    for k in range(m):
        col = (k + 1) % m if m > 1 else 0
        yield slice(k * n, (k + 1) * n), slice(col * n, (col + 1) * n)


def truncate_rescale(y, n, delta, return_hat=False):
    """Truncate, recenter and restandardize the entries of a linearization.

    Within every nonzero block, entries with ``sqrt(n) |y| > n**delta`` are
    zeroed and the block is recentered by its empirical mean (the hat
    matrix); the block is then divided by ``sqrt(n * mean |entry|^2)`` so
    that the standardized entry variance is one (the tilde matrix). Blocks
    in which nothing is truncated are returned unchanged. Zero blocks stay
    exactly zero.

    Parameters
    ----------
    y : array_like
        Output of :func:`build_linearization`, shape ``(m n, m n)``.
    n : int
        Factor dimension; ``m`` is inferred as ``y.shape[0] // n``.
    delta : float
        Truncation exponent, must be positive.
    return_hat : bool
        Also return the truncated-and-centered intermediate.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    y = as_matrix(y)
    if y.shape[0] % n:
        raise ValueError(f"dimension {y.shape[0]} is not a multiple of n={n}")
    m = y.shape[0] // n
    level = n ** delta / np.sqrt(n)
    hat = y.copy()
    tilde = y.copy()
    for rows, cols in _blocks(m, n):
        block = y[rows, cols]
        keep = np.abs(block) <= level
        if keep.all():
            continue
        b = np.where(keep, block, 0.0)
        b = b - b.mean()
        hat[rows, cols] = b
        var = np.mean(np.abs(b) ** 2)
        tilde[rows, cols] = b / np.sqrt(n * var) if var > 0 else b
    if return_hat:
        return tilde, hat
    return tilde
