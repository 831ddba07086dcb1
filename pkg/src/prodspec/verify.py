"""Acceptance suites.

``identity_suite`` holds the deterministic analytic checks (no sampling
beyond fixed-seed test matrices). ``statistical_suite`` runs the
checked-in Monte Carlo configurations and compares aggregates with their
thresholds. Each check returns a :class:`CheckResult`.
"""

import json
import os
import time
from dataclasses import dataclass

import numpy as np

from . import ensemble, estimator, harness, limitlaw, linalg
from .config import build_config, load_config

__all__ = ["CheckResult", "identity_suite", "statistical_suite", "plumbing_suite", "format_result"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""
    seconds: float = 0.0


def format_result(r):
    flag = "PASS" if r.passed else "FAIL"
    return f"[{flag}] {r.name}: value={r.value:.3e} threshold={r.threshold:.3e} {r.detail} ({r.seconds:.2f}s)"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    return wrapper


def _rng(tag):
    return np.random.default_rng(np.random.SeedSequence(20240611, spawn_key=(tag,)))


@_timed
def check_cubic_factorization(probes=50, tol=1e-10):
    rng = _rng(1)
    mod = 10 ** rng.uniform(-1, 1, probes)
    arg = rng.uniform(-np.pi, np.pi, probes)
    alphas = mod * np.exp(1j * arg)
    worst = 0.0
    for a in alphas:
        roots = limitlaw.cubic_roots(a, 0.0)
        sq = np.sqrt(a * a - 4 * a)
        oracle = np.array([-1.0, (-a + sq) / (2 * a), (-a - sq) / (2 * a)])
        _, err = estimator.pair_multisets(roots, oracle)
        worst = max(worst, err)
    return CheckResult("1a cubic factorization at z=0", worst < tol, worst, tol, f"{probes} probes")


@_timed
def check_branch_mp(probes=100, tol=1e-10):
    rng = _rng(2)
    alphas = rng.uniform(-2, 10, probes) + 1j * 10 ** rng.uniform(-3, 1, probes)
    err = float(np.max(np.abs(limitlaw.stieltjes_branch(alphas, 0.0) - limitlaw.mp_stieltjes(alphas))))
    return CheckResult("1b Stieltjes branch = MP closed form", err < tol, err, tol, f"{probes} probes")


@_timed
def check_support_endpoints():
    s1 = limitlaw.support_endpoints(1.0)
    e1 = max(abs(s1.x1 - 0.0), abs(s1.x2 - 6.75))
    e2 = abs(limitlaw.support_endpoints(1e-4).x2 - 4.0)
    ok = e1 <= 1e-12 and e2 <= 1e-6
    return CheckResult("1c support endpoints", ok, e1, 1e-12,
                       f"|z|=1 err={e1:.1e}, |z|=1e-4 x2 err={e2:.1e} (tol 1e-6)")


LOG_POTENTIAL_PROBES = ((0.3, 0.2), (1.5, 0.8), (-0.4, 0.1), (0.6, 0.6),
                        (0.1, -0.85), (2.0, 1.0), (-1.2, 0.3), (0.05, 1.3))


@_timed
def check_log_potential(tol=1e-2):
    diffs = [abs(limitlaw.log_potential_check(s, t, h=1e-3)) for s, t in LOG_POTENTIAL_PROBES]
    worst = max(diffs)
    return CheckResult("1d log-potential derivative = g(s,t)", worst < tol, worst, tol,
                       f"{len(diffs)} probes")


def random_factors(rng, m, n, dist="complex-gaussian"):
    cfg = ensemble.EnsembleConfig(m=m, n=n, dist=dist, seed=int(rng.integers(2**63)))
    return ensemble.sample_factors(cfg, 0)


@_timed
def check_g_two_routes(cases=10, n=32, h=1e-4, tol=1e-5):
    rng = _rng(5)
    worst = 0.0
    for k in range(cases):
        m = 2 + (k % 2)
        y = ensemble.build_linearization(random_factors(rng, m, n))
        eigs = linalg.eigenvalues(y)
        while True:
            z = complex(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))
            if np.min(np.abs(eigs.values - z)) > 0.05:
                break
        gl, ge = estimator.g_empirical_two_ways(y, z, h, eigs=eigs)
        worst = max(worst, abs(gl - ge))
    return CheckResult("1e g_n two-route identity", worst < tol, worst, tol, f"{cases} cases, n={n}")


@_timed
def check_multiplicity(tol=1e-8):
    rng = _rng(6)
    worst = 0.0
    for m in (2, 3, 4):
        for n in (1, 8, 32):
            rep = estimator.multiplicity_check(random_factors(rng, m, n))
            worst = max(worst, rep.max_error)
    return CheckResult("1f multiplicity structure of Y^m", worst < tol, worst, tol, "m in {2,3,4}, n<=32")


@_timed
def check_horn(count=100, slack=1e-8):
    rng = _rng(7)
    dists = ensemble.DISTRIBUTIONS
    violations = 0
    worst = np.inf
    for k in range(count):
        n = int(rng.integers(1, 65))
        m = int(rng.integers(1, 4))
        f = random_factors(rng, m, max(1, n // m), dists[k % len(dists)])
        a = ensemble.build_product(f) if k % 2 else ensemble.build_linearization(f)
        margin = estimator.horn_margin(linalg.eigenvalues(a), linalg.singular_values(a))
        scale = max(1.0, float(np.sum(np.abs(a) ** 2)))
        worst = min(worst, margin / scale)
        violations += margin < -slack * scale
    return CheckResult("1g Horn inequality", violations == 0, float(violations), 0.0,
                       f"{count} matrices, min relative margin {worst:.2e}")


def identity_suite():
    return [check_cubic_factorization(), check_branch_mp(), check_support_endpoints(),
            check_log_potential(), check_g_two_routes(), check_multiplicity(), check_horn()]


# ---------------------------------------------------------------------------
# statistical suite

def _config(config_dir, name, **overrides):
    return build_config(load_config(os.path.join(config_dir, name)), overrides)


def _result(name, value, threshold, detail="", lower_is_better=True, seconds=0.0):
    ok = value is not None and (value <= threshold if lower_is_better else value > threshold)
    return CheckResult(name, bool(ok), float("nan") if value is None else float(value),
                       float(threshold), detail, seconds)


def statistical_suite(config_dir, only=None):
    """Run the checked-in Monte Carlo configurations; returns CheckResults."""
    results = []

    def want(tag):
        return only is None or tag in only

    def run(name):
        t0 = time.perf_counter()
        rep = harness.run_experiment(_config(config_dir, name), write=False)
        return rep, time.perf_counter() - t0

    if want("2a"):
        rep, sec = run("thm1_m2.cfg")
        results.append(_result("2a m=2 mean radial KS", rep.mean("radial_ks"), 0.06, seconds=sec))
        results.append(_result("2a m=2 mean angular KS", rep.mean("angular_ks"), 0.08))
    if want("2b"):
        rep, sec = run("thm1_m3.cfg")
        results.append(_result("2b m=3 mean radial KS", rep.mean("radial_ks"), 0.07, seconds=sec))
    if want("2c"):
        rep, sec = run("circular_m1.cfg")
        results.append(_result("2c m=1 mean radial KS", rep.mean("radial_ks"), 0.05, seconds=sec))
    if want("2d"):
        rep, sec = run("stieltjes_grid.cfg")
        results.append(_result("2d sup |Delta_n - Delta| (trial mean)",
                               rep.aggregates.get("stieltjes_err_sup_of_mean"), 0.05,
                               f"{len(rep.config['probes'])} grid points", seconds=sec))
    if want("2e"):
        rep, sec = run("support.cfg")
        agg = rep.aggregates["support_outside_frac"]
        results.append(_result("2e H_n eigenvalues outside support +-0.5",
                               agg and agg["max"], 0.01, seconds=sec))
    if want("2f"):
        rep, sec = run("least_singular.cfg")
        thr = rep.config["ensemble"]["n"] ** -estimator.LEAST_SINGULAR_EXPONENT
        results.append(_result("2f min sigma_min(Y - z) over trials",
                               rep.aggregates.get("sigma_min_overall"), thr,
                               f"{rep.aggregates['trials']} trials", lower_is_better=False, seconds=sec))
    if want("2g"):
        t0 = time.perf_counter()
        sweep = harness.convergence_sweep(_config(config_dir, "sweep.cfg"), write=False)
        ks = sweep.mean_radial_ks
        results.append(CheckResult("2g KS(n=512) < KS(n=64)", bool(ks[-1] < ks[0]), ks[-1], ks[0],
                                   f"sequence {[round(k, 4) for k in ks]}", time.perf_counter() - t0))
    if want("2h"):
        rep, sec = run("truncation.cfg")
        agg = rep.aggregates["truncation_levy"]
        results.append(_result("2h Levy(nu_n(Y), nu_n(Y~)) at z=1", agg and agg["max"], 0.05, seconds=sec))
    return results


def plumbing_suite(tmpdir):
    """Parallel/serial equivalence, seed determinism and JSON round trip."""
    t0 = time.perf_counter()
    base = build_config({"m": 2, "n": 24, "trials": 4, "seed": 11,
                         "probes": (estimator.ProbePoint(0.5 + 0.5j, 1 + 1j),),
                         "sigma_min_z": (0.5,)})
    serial = harness.dumps_report(harness.run_experiment(base, write=False))
    par_cfg = build_config({"m": 2, "n": 24, "trials": 4, "seed": 11, "workers": 2,
                            "probes": (estimator.ProbePoint(0.5 + 0.5j, 1 + 1j),),
                            "sigma_min_z": (0.5,)})
    parallel = harness.dumps_report(harness.run_experiment(par_cfg, write=False))
    again = harness.dumps_report(harness.run_experiment(base, write=False))
    prefix = os.path.join(tmpdir, "roundtrip")
    rep = harness.run_experiment(base, write=False)
    harness.export(rep, prefix, "json")
    with open(prefix + ".json", encoding="utf-8") as fh:
        parsed = json.load(fh)
    sec = time.perf_counter() - t0
    return [
        CheckResult("3 parallel/serial bytewise equality", serial == parallel, 0.0, 0.0, seconds=sec),
        CheckResult("3 seed determinism (bytewise)", serial == again, 0.0, 0.0),
        CheckResult("3 JSON round trip", parsed == rep.to_dict(), 0.0, 0.0),
    ]
