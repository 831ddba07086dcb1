"""Monte Carlo orchestration: trials, sweeps, reports and file export."""

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, ensemble, estimator, limitlaw, linalg
from .linalg import ConvergenceError

__all__ = [
    "SCHEMA_VERSION",
    "CSV_COLUMNS",
    "Report",
    "SweepReport",
    "run_trial",
    "run_experiment",
    "convergence_sweep",
    "export",
    "export_sweep",
    "dumps_report",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "trial", "n", "m", "dist", "radial_ks", "angular_ks", "sigma_min",
    "stieltjes_err_max", "g_identity_resid", "horn_margin", "status",
)

# numeric per-trial fields that get aggregated
AGGREGATED = (
    "radial_ks", "angular_ks", "sigma_min", "stieltjes_err_max",
    "g_identity_resid", "horn_margin", "support_outside_frac",
    "truncation_levy", "trace_average", "op_norm",
)

SWEEP_SLACK = 0.01


def _nan_to_none(x):
    if x is None:
        return None
    x = float(x)
    return None if math.isnan(x) else x


def run_trial(config, trial):
    """Every statistic for one realization; never raises on numerical failure."""
    ens = config.ensemble
    m, n = ens.m, ens.n
    rec = {
        "trial": trial, "n": n, "m": m, "dist": ens.dist,
        "radial_ks": None, "angular_ks": None, "sigma_min": None,
        "stieltjes_err_max": None, "g_identity_resid": None, "horn_margin": None,
        "status": "ok",
        "zero_eigenvalues": 0,
        "sigma_min_by_z": [],
        "stieltjes_errors": [],
        "support_outside_frac": None,
        "truncation_levy": None,
        "trace_average": None,
        "op_norm": None,
        "radii": [],
    }
    try:
        factors = ensemble.sample_factors(ens, trial)
        x = ensemble.build_product(factors)
        eigs_x = linalg.eigenvalues(x, meta={"trial": trial})
        params = limitlaw.LimitLawParams(m, ens.sigma)
        radii = estimator.esd_radii(eigs_x)
        rec["radii"] = radii.values.tolist()
        rec["radial_ks"] = estimator.ks_statistic(radii, lambda r: limitlaw.radial_cdf(r, params))
        angles, zeros = estimator.nonzero_angles(eigs_x)
        rec["zero_eigenvalues"] = zeros
        rec["angular_ks"] = estimator.ks_statistic(angles, lambda v: np.clip(v, 0.0, 1.0))
        rec["horn_margin"] = estimator.horn_margin(eigs_x, linalg.singular_values(x))

        y = ensemble.build_linearization(factors)
        norm = estimator.norm_growth_check(y, n) if m * n <= config.identity_max_dim else None
        if norm is not None:
            rec["op_norm"] = norm.op_norm
            rec["trace_average"] = norm.trace_average
        else:
            rec["trace_average"] = float(np.sum(np.abs(y) ** 2) / y.shape[0])

        if config.sigma_min_z:
            rec["sigma_min_by_z"] = [estimator.least_singular_probe(y, z) for z in config.sigma_min_z]
            rec["sigma_min"] = min(rec["sigma_min_by_z"])

        if config.probes:
            spectra = {}
            errs = []
            outside = []
            for p in config.probes:
                if p.z not in spectra:
                    h = estimator.hermitian_spectrum(y, p.z)
                    spectra[p.z] = h
                    sup = limitlaw.support_endpoints(abs(p.z))
                    outside.append(float(np.mean(~sup.contains(h.values, config.support_margin))))
                dn = estimator.empirical_stieltjes(spectra[p.z], p.alpha)
                d = complex(limitlaw.stieltjes_branch(p.alpha, abs(p.z)))
                errs.append(abs(dn - d))
            rec["stieltjes_errors"] = errs
            rec["stieltjes_err_max"] = max(errs)
            rec["support_outside_frac"] = max(outside)
            if m * n <= config.identity_max_dim:
                eigs_y = linalg.eigenvalues(y)
                resid = []
                for z in dict.fromkeys(p.z for p in config.probes):
                    if np.min(np.abs(eigs_y.values - z)) < 1e-3:
                        continue
                    gl, ge = estimator.g_empirical_two_ways(y, z, config.g_h, eigs=eigs_y)
                    resid.append(abs(gl - ge))
                if resid:
                    rec["g_identity_resid"] = max(resid)

        if config.truncation_delta is not None:
            yt = ensemble.truncate_rescale(y, n, config.truncation_delta)
            z = config.truncation_z
            f = estimator.EmpiricalDistribution(estimator.hermitian_spectrum(y, z).values)
            g = estimator.EmpiricalDistribution(estimator.hermitian_spectrum(yt, z).values)
            rec["truncation_levy"] = estimator.levy_distance(f, g)
    except (ConvergenceError, limitlaw.BranchError) as e:
        rec["status"] = f"failed: {type(e).__name__}: {e}"
        log.warning("trial %d failed: %s", trial, e)
    return rec


def _run_trial_star(args):
    return run_trial(*args)


def _quantiles(v):
    q = np.quantile(v, [0.1, 0.5, 0.9])
    return {"q10": float(q[0]), "q50": float(q[1]), "q90": float(q[2])}


def aggregate(records):
    """Mean, min, max and quantiles of every numeric per-trial field."""
    agg = {"trials": len(records), "failed": sum(r["status"] != "ok" for r in records)}
    for key in AGGREGATED:
        vals = [r[key] for r in records if r.get(key) is not None]
        if not vals:
            agg[key] = None
            continue
        a = np.asarray(vals, dtype=float)
        agg[key] = {"mean": float(a.mean()), "min": float(a.min()), "max": float(a.max()),
                    "count": int(a.size), **_quantiles(a)}
    errs = [r["stieltjes_errors"] for r in records if r.get("stieltjes_errors")]
    if errs:
        per_probe = np.mean(np.asarray(errs, dtype=float), axis=0)
        agg["stieltjes_err_mean_by_probe"] = per_probe.tolist()
        agg["stieltjes_err_sup_of_mean"] = float(per_probe.max())
    mins = [r["sigma_min_by_z"] for r in records if r.get("sigma_min_by_z")]
    if mins:
        agg["sigma_min_overall"] = float(np.min(mins))
    return agg


def _histogram(records, m, sigma, bins):
    radii = np.concatenate([np.asarray(r["radii"], dtype=float) for r in records]) if records else np.array([])
    edges = np.linspace(0.0, 1.25 * sigma, bins + 1)
    counts, _ = np.histogram(radii, bins=edges)
    total = max(radii.size, 1)
    params = limitlaw.LimitLawParams(m, sigma)
    lo, hi = edges[:-1], edges[1:]
    expected = limitlaw.radial_cdf(hi, params) - limitlaw.radial_cdf(lo, params)
    return {
        "edges": edges.tolist(),
        "counts": counts.astype(int).tolist(),
        "empirical_density": (counts / total / np.diff(edges)).tolist(),
        "limit_density": (expected / np.diff(edges)).tolist(),
    }


@dataclass
class Report:
    config: dict
    records: list
    aggregates: dict
    provenance: dict
    histogram: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self, include_radii=False):
        recs = self.records
        if not include_radii:
            recs = [{k: v for k, v in r.items() if k != "radii"} for r in recs]
        return {
            "schema_version": self.schema_version,
            "provenance": self.provenance,
            "config": self.config,
            "aggregates": self.aggregates,
            "histogram": self.histogram,
            "records": recs,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(config=d["config"], records=d["records"], aggregates=d["aggregates"],
                   provenance=d["provenance"], histogram=d.get("histogram", {}),
                   schema_version=d["schema_version"])

    def mean(self, key):
        a = self.aggregates.get(key)
        return None if a is None else a["mean"]


def run_experiment(config, write=True):
    """Run ``config.trials`` independent realizations and aggregate them.

    Trial ``k`` draws its factors from substreams keyed by
    ``(seed, j, k)``, so the report is the same for any worker count.
    Results are merged in trial order. Failed trials are kept with their
    status; the run continues.
    """
    tasks = [(config, k) for k in range(config.trials)]
    if config.workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_trial_star, tasks))
    else:
        records = [run_trial(*t) for t in tasks]
    records.sort(key=lambda r: r["trial"])
    ens = config.ensemble
    report = Report(
        config=config.semantic_dict(),
        records=records,
        aggregates=aggregate(records),
        provenance={"config_hash": config.config_hash(), "seed": ens.seed,
                    "code_version": __version__},
        histogram=_histogram([r for r in records if r["status"] == "ok"], ens.m, ens.sigma,
                             config.hist_bins),
    )
    if write and config.output:
        export(report, config.output, config.format)
    return report


@dataclass
class SweepReport:
    ns: list
    reports: list
    mean_radial_ks: list
    trend_ok: bool
    final_below_first: bool

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "n_sweep": self.ns,
            "mean_radial_ks": self.mean_radial_ks,
            "trend_ok": self.trend_ok,
            "final_below_first": self.final_below_first,
            "reports": [r.to_dict() for r in self.reports],
        }


def convergence_sweep(config, write=True):
    """``run_experiment`` for each ``n`` in ``config.n_sweep``.

    ``trend_ok`` holds when the mean radial KS never rises by more than
    0.01 from one ``n`` to the next.
    """
    ns = list(config.n_sweep)
    if not ns:
        raise ValueError("n_sweep is empty")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_sweep must be strictly increasing")
    reports = [run_experiment(config.with_n(n), write=False) for n in ns]
    ks = [r.mean("radial_ks") for r in reports]
    trend = all(b is not None and a is not None and b <= a + SWEEP_SLACK for a, b in zip(ks, ks[1:]))
    sweep = SweepReport(ns, reports, ks, trend, bool(len(ks) == 1 or ks[-1] < ks[0]))
    if write and config.output:
        export_sweep(sweep, config.output, config.format)
    return sweep


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dumps_report(report):
    """Canonical JSON text; floats use the shortest round-trip repr."""
    return json.dumps(report.to_dict(), indent=1, sort_keys=True, allow_nan=False) + "\n"


def _open(path):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="")


def export(report, prefix, fmt="json"):
    """Write report files; returns the list of paths written.

    ``csv`` writes ``PREFIX.csv`` (one row per trial, :data:`CSV_COLUMNS`),
    ``json`` writes ``PREFIX.json``; ``both`` writes both. The histogram
    tables ``PREFIX_radius_hist.csv`` and ``PREFIX_radial_density.csv`` are
    always written.
    """
    if fmt not in ("csv", "json", "both"):
        raise ValueError(f"unknown format {fmt!r}")
    paths = []
    if fmt in ("csv", "both"):
        path = prefix + ".csv"
        with _open(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in report.records:
                w.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
        paths.append(path)
    if fmt in ("json", "both"):
        path = prefix + ".json"
        with _open(path) as fh:
            fh.write(dumps_report(report))
        paths.append(path)
    hist = report.histogram
    if hist:
        path = prefix + "_radius_hist.csv"
        with _open(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("r_lo", "r_hi", "count", "empirical_density", "limit_density"))
            e = hist["edges"]
            for i, c in enumerate(hist["counts"]):
                w.writerow((_fmt(e[i]), _fmt(e[i + 1]), c, _fmt(hist["empirical_density"][i]),
                            _fmt(hist["limit_density"][i])))
        paths.append(path)
    ens = report.config.get("ensemble", {})
    if "m" in ens:
        path = prefix + "_radial_density.csv"
        _write_radial_table(path, ens["m"], float(np.prod(ens["sigmas"])))
        paths.append(path)
    return paths


def _write_radial_table(path, m, sigma, points=200):
    params = limitlaw.LimitLawParams(m, sigma)
    r = np.linspace(0.0, 1.25 * sigma, points + 1)[1:]
    pdf = 2 * np.pi * r * limitlaw.limit_density(r.astype(complex), params)
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("r", "radial_density", "radial_cdf"))
        for ri, pi, ci in zip(r, pdf, limitlaw.radial_cdf(r, params)):
            w.writerow((_fmt(float(ri)), _fmt(float(pi)), _fmt(float(ci))))


def export_sweep(sweep, prefix, fmt="json"):
    paths = []
    for n, rep in zip(sweep.ns, sweep.reports):
        paths += export(rep, f"{prefix}_n{n}", fmt)
    path = prefix + "_sweep.json"
    with _open(path) as fh:
        fh.write(json.dumps(sweep.to_dict(), indent=1, sort_keys=True, allow_nan=False) + "\n")
    paths.append(path)
    return paths
