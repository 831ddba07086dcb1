"""Closed-form limiting objects.

* the density of the ``m``-th power of the circular law and its radial CDF;
* the cubic satisfied by the Stieltjes transform ``Delta(alpha)`` of the
  limiting spectral distribution ``nu(., z)`` of ``(Y - z)^* (Y - z)``;
* the Stieltjes branch (selected by continuation), the support endpoints of
  ``nu(., z)``, its density by Stieltjes-Perron inversion;
* the derivative ``g(s, t)`` of the logarithmic potential and a numerical
  check of that derivative against ``nu``.

Functions taking ``alpha`` or ``x`` accept scalars or numpy arrays.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "LimitLawParams",
    "StieltjesSolution",
    "SupportInterval",
    "BranchError",
    "QuadratureError",
    "limit_density",
    "radial_cdf",
    "cubic_coefficients",
    "cubic_residual",
    "cubic_roots",
    "solve_cubic",
    "stieltjes_branch",
    "mp_stieltjes",
    "support_endpoints",
    "nu_density",
    "nu_cdf",
    "log_moment",
    "g_limit",
    "log_potential_derivative",
    "log_potential_check",
]

ROOT_RTOL = 1e-10
DEFAULT_Y_EPS = 1e-6
# log-moment quadrature: y_eps must sit well below the 1e-8 cutoff, where
# Poisson smoothing of the x^(-1/2) edge at 0 otherwise biases ln-moments
LOG_Y_EPS = 1e-9


class BranchError(ArithmeticError):
    """Continuation could not separate the Stieltjes branch from the others."""


class QuadratureError(ArithmeticError):
    """Refinement did not reach the requested quadrature tolerance."""


@dataclass(frozen=True)
class LimitLawParams:
    m: int = 1
    sigma: float = 1.0

    def __post_init__(self):
        if int(self.m) < 1:
            raise ValueError("m must be >= 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


@dataclass
class StieltjesSolution:
    alpha: complex
    z_mod: float
    roots: np.ndarray
    branch: complex = None


@dataclass(frozen=True)
class SupportInterval:
    x1: float
    x2: float
    z_mod: float

    def contains(self, x, margin=0.0):
        x = np.asarray(x)
        return (x >= self.x1 - margin) & (x <= self.x2 + margin)


# ---------------------------------------------------------------------------
# power of the circular law

def limit_density(w, params):
    """Density of the limit law at complex point(s) ``w``.

    ``(1 / (m pi)) sigma^(-2/m) |w|^(2/m - 2)`` inside the disc of radius
    ``sigma``, zero outside. At ``w = 0`` the value is ``inf`` for ``m >= 2``
    and ``1 / pi`` for ``m = 1``.
    """
    m, sigma = params.m, params.sigma
    r = np.abs(np.asarray(w, dtype=complex))
    with np.errstate(divide="ignore"):
        inside = (1.0 / (m * np.pi)) * sigma ** (-2.0 / m) * r ** (2.0 / m - 2.0)
    if m == 1:
        inside = np.full_like(r, 1.0 / (np.pi * sigma**2), dtype=float)
    out = np.where(r <= sigma, inside, 0.0)
    return out[()] if out.ndim == 0 else out


def radial_cdf(r, params):
    """``P(|w| <= r) = min(1, (r / sigma)^(2/m))``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    out = np.minimum(1.0, (r / params.sigma) ** (2.0 / params.m))
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# the cubic

def cubic_coefficients(alpha, z_mod):
    """Coefficients ``(a, b, c)`` of the monic cubic ``D^3 + a D^2 + b D + c``."""
    alpha = np.asarray(alpha, dtype=complex)
    if np.any(alpha == 0):
        raise ValueError("alpha must be nonzero")
    w = float(z_mod) ** 2
    return 2.0, (alpha + 1.0 - w) / alpha, 1.0 / alpha


def cubic_residual(root, alpha, z_mod):
    """Relative residual ``|f(r)| / (1 + |r|^3)`` of the cubic at ``root``."""
    a, b, c = cubic_coefficients(alpha, z_mod)
    r = np.asarray(root, dtype=complex)
    if np.ndim(b) < np.ndim(r):
        b = np.expand_dims(b, -1)
        c = np.expand_dims(c, -1)
    f = ((r + a) * r + b) * r + c
    return np.abs(f) / (1.0 + np.abs(r) ** 3)


def cubic_roots(alpha, z_mod):
    """All three roots of the cubic; output has shape ``alpha.shape + (3,)``.

    Cardano's formula on the depressed cubic, using the larger of the two
    candidate cube-root radicands, then Newton polishing steps that are
    kept only where they reduce the residual.
    """
    a, b, c = cubic_coefficients(alpha, z_mod)
    b = np.asarray(b)
    c = np.asarray(c)
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    disc = np.sqrt(q * q / 4.0 + p**3 / 27.0)
    c1 = -q / 2.0 + disc
    c2 = -q / 2.0 - disc
    big = np.where(np.abs(c1) >= np.abs(c2), c1, c2)
    cr = big ** (1.0 / 3.0)
    omega = np.exp(2j * np.pi / 3.0)
    roots = []
    for k in range(3):
        ck = cr * omega**k
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(ck == 0, 0.0, ck - p / (3.0 * np.where(ck == 0, 1.0, ck)))
        roots.append(u - a / 3.0)
    r = np.stack(roots, axis=-1)
    bb = b[..., None]
    cc = c[..., None]
    for _ in range(3):
        f = ((r + a) * r + bb) * r + cc
        df = (3.0 * r + 2.0 * a) * r + bb
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = r - f / df
            fc = ((cand + a) * cand + bb) * cand + cc
        better = np.isfinite(cand) & (np.abs(fc) < np.abs(f))
        r = np.where(better, cand, r)
    return r


def solve_cubic(alpha, z_mod, with_branch=True):
    """Roots of the cubic at scalar ``(alpha, |z|)``.

    The Stieltjes branch is attached when ``Im(alpha) > 0``; for real
    ``alpha`` it is attached as the limit from the upper half plane.
    """
    alpha = complex(alpha)
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    if z_mod < 0:
        raise ValueError("z_mod must be nonnegative")
    roots = cubic_roots(alpha, z_mod)
    sol = StieltjesSolution(alpha, float(z_mod), roots)
    if with_branch:
        a = alpha if alpha.imag > 0 else complex(alpha.real, 1e-12 * max(1.0, abs(alpha)))
        sol.branch = complex(stieltjes_branch(a, z_mod))
    return sol


def mp_stieltjes(alpha):
    """Stieltjes transform of Marchenko-Pastur (ratio 1), the ``z = 0`` branch.

    ``(-alpha + sqrt(alpha^2 - 4 alpha)) / (2 alpha)`` with the square-root
    sign chosen so that the imaginary part is positive.
    """
    alpha = np.asarray(alpha, dtype=complex)
    sq = np.sqrt(alpha * alpha - 4.0 * alpha)
    s1 = (-alpha + sq) / (2.0 * alpha)
    s2 = (-alpha - sq) / (2.0 * alpha)
    out = np.where(s1.imag > 0, s1, s2)
    return out[()] if out.ndim == 0 else out


def stieltjes_branch(alpha, z_mod, start_height=None, ratio=0.5, min_log_step=1e-10):
    """The root of the cubic that is the Stieltjes transform of ``nu(., |z|)``.

    Selection is by continuation. For each ``alpha = x + i y`` the path
    starts at ``x + i T`` (``T`` large), where the transform is the root
    nearest ``-1 / (x + i T)``, and descends geometrically in the imaginary
    part to ``y``, taking at each step the root nearest the previous pick.
    A step is accepted only if that nearest root is unambiguous (at most
    ``0.3`` times the distance to the runner-up); otherwise the log-step is
    halved. All points in ``alpha`` must share the same imaginary part
    (a vector of abscissae at one height) or are processed one height at a
    time.

    Raises
    ------
    BranchError
        If the log-step falls below ``min_log_step``.
    """
    alpha = np.asarray(alpha, dtype=complex)
    if np.any(alpha.imag <= 0):
        raise ValueError("stieltjes_branch needs Im(alpha) > 0")
    if z_mod < 0:
        raise ValueError("z_mod must be nonnegative")
    scalar = alpha.ndim == 0
    flat = alpha.reshape(-1)
    out = np.empty_like(flat)
    heights = flat.imag
    for y in np.unique(heights):
        sel = heights == y
        out[sel] = _continue_branch(flat.real[sel], float(y), float(z_mod),
                                    start_height, ratio, min_log_step)
    out = out.reshape(alpha.shape)
    return out[()] if scalar else out


def _continue_branch(x, y, z_mod, start_height, ratio, min_log_step):
    scale = 1.0 + np.max(np.abs(x)) + z_mod**2
    T = start_height if start_height is not None else 1e4 * scale
    T = max(T, y)
    a0 = x + 1j * T
    roots = cubic_roots(a0, z_mod)
    cur = _pick_nearest(roots, -1.0 / a0, strict=True)
    if cur is None:
        raise BranchError("ambiguous branch at the starting height")
    log_y, log_end = np.log(T), np.log(y)
    step = -np.log(ratio)
    while log_y > log_end:
        nxt = max(log_y - step, log_end)
        a = x + 1j * np.exp(nxt)
        roots = cubic_roots(a, z_mod)
        picked = _pick_nearest(roots, cur, strict=True)
        if picked is None:
            step *= 0.5
            if step < min_log_step:
                raise BranchError(f"continuation step underflow at Im(alpha)={np.exp(log_y):.3e}")
            continue
        cur = picked
        log_y = nxt
        step = min(step * 1.5, -np.log(ratio))
    return cur


def _pick_nearest(roots, target, strict):
    d = np.abs(roots - target[..., None])
    order = np.argsort(d, axis=-1)
    d1 = np.take_along_axis(d, order[..., :1], -1)[..., 0]
    d2 = np.take_along_axis(d, order[..., 1:2], -1)[..., 0]
    if strict and np.any(d1 > 0.3 * d2):
        return None
    return np.take_along_axis(roots, order[..., :1], -1)[..., 0]


# ---------------------------------------------------------------------------
# support and density of nu(., z)

def support_endpoints(z_mod):
    """Support ``[x1, x2]`` of ``nu(., z)``; ``[0, x2]`` when ``|z| <= 1``.

    ``z_mod = 0`` returns the Marchenko-Pastur support ``[0, 4]``.
    """
    z_mod = float(z_mod)
    if z_mod < 0:
        raise ValueError("z_mod must be nonnegative")
    if z_mod == 0:
        return SupportInterval(0.0, 4.0, 0.0)
    w = z_mod**2
    # (1 + 8w)^(3/2) - 1 without cancellation
    p32m1 = np.expm1(1.5 * np.log1p(8.0 * w))
    x2 = (p32m1 + 20.0 * w + 8.0 * w * w) / (8.0 * w)
    x1 = (-2.0 - p32m1 + 20.0 * w + 8.0 * w * w) / (8.0 * w)
    if z_mod <= 1.0:
        x1 = 0.0
    return SupportInterval(float(max(x1, 0.0)), float(x2), z_mod)


def nu_density(x, z_mod, y_eps=DEFAULT_Y_EPS):
    """Stieltjes-Perron approximant ``Im Delta(x + i y_eps) / pi``."""
    if not 1e-9 <= y_eps <= 1e-2:
        raise ValueError("y_eps must lie in [1e-9, 1e-2]")
    x = np.asarray(x, dtype=float)
    out = stieltjes_branch(x + 1j * y_eps, z_mod).imag / np.pi
    return out[()] if np.ndim(out) == 0 else out


def _theta_rule(order, grading=12):
    """Nodes/weights on [0, pi] for the map ``x = (1 - cos theta) / 2``.

    Panels are geometrically graded towards both ends so endpoint
    singularities of the integrand are resolved.
    """
    g, wg = leggauss(order)
    half = np.pi / 2
    edges = half * 0.25 ** np.arange(grading)[::-1]
    edges = np.concatenate([[0.0], edges])
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (hi - lo) * g + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * wg)
    t = np.concatenate(nodes)
    w = np.concatenate(weights)
    return np.concatenate([t, np.pi - t[::-1]]), np.concatenate([w, w[::-1]])


def _integrate_nu(fn, lo, hi, z_mod, y_eps, rtol, atol, max_order=256):
    """``int_lo^hi fn(x) nu_density(x) dx`` with order doubling until stable."""
    prev = None
    order = 16
    while order <= max_order:
        t, w = _theta_rule(order)
        x = lo + (hi - lo) * 0.5 * (1.0 - np.cos(t))
        jac = (hi - lo) * 0.5 * np.sin(t)
        val = float(np.sum(w * jac * fn(x) * nu_density(x, z_mod, y_eps)))
        if prev is not None and abs(val - prev) <= max(atol, rtol * abs(val)):
            return val
        prev = val
        order *= 2
    raise QuadratureError(f"no convergence: last two estimates differ by {abs(val - prev):.3e}")


def nu_cdf(u, z_mod, y_eps=DEFAULT_Y_EPS, rtol=1e-10, atol=1e-9):
    """Distribution function ``nu(u, z)`` by quadrature of :func:`nu_density`."""
    sup = support_endpoints(z_mod)
    u = float(u)
    if u <= sup.x1:
        return 0.0
    hi = min(u, sup.x2)
    return _integrate_nu(np.ones_like, sup.x1, hi, z_mod, y_eps, rtol, atol)


def log_moment(z_mod, y_eps=LOG_Y_EPS, cutoff=1e-8, rtol=1e-10, atol=1e-10):
    """``int ln x nu(dx, z)`` over ``[max(x1, cutoff), x2]``."""
    sup = support_endpoints(z_mod)
    lo = max(sup.x1, cutoff)
    return _integrate_nu(np.log, lo, sup.x2, z_mod, y_eps, rtol, atol)


def g_limit(s, t):
    """``2 s / (s^2 + t^2)`` outside the unit circle, ``2 s`` inside."""
    r2 = s * s + t * t
    return 2.0 * s / r2 if r2 > 1.0 else 2.0 * s


def log_potential_derivative(s, t, h=1e-3, y_eps=LOG_Y_EPS, cutoff=1e-8):
    """Central difference in ``s`` of :func:`log_moment` at ``z = s + i t``."""
    up = log_moment(np.hypot(s + h, t), y_eps=y_eps, cutoff=cutoff)
    down = log_moment(np.hypot(s - h, t), y_eps=y_eps, cutoff=cutoff)
    return (up - down) / (2.0 * h)


def log_potential_check(s, t, h=1e-3, y_eps=LOG_Y_EPS, cutoff=1e-8):
    """Finite-difference derivative of the log moment minus :func:`g_limit`."""
    if abs(np.hypot(s, t) - 1.0) < 0.1:
        raise ValueError("probe must satisfy ||z| - 1| >= 0.1")
    return log_potential_derivative(s, t, h, y_eps, cutoff) - g_limit(s, t)
