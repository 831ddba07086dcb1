"""Experiment configuration and the flat ``key = value`` config format.

Grammar, one entry per line::

    line    := blank | comment | entry
    comment := '#' anything
    entry   := key WS? '=' WS? value (WS? '#' comment)?
    value   := scalar | scalar (',' scalar)*

Keys (all optional; defaults in :class:`ExperimentConfig`)::

    m, n, dist, seed, moment_eta, sigmas        ensemble
    trials, workers, n_sweep                    orchestration
    probes        list of z@alpha, e.g. 0.5+0.5j@2+1j, 1.5@1j
    sigma_min_z   list of complex probes for sigma_min(Y - z)
    truncation_delta, truncation_z
    g_h, identity_max_dim, support_margin, hist_bins
    output, format

Complex numbers use Python literal syntax (``1+2j``). Precedence when
building a config is CLI flag > file > default.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace

from .ensemble import EnsembleConfig
from .estimator import ProbePoint

__all__ = ["ExperimentConfig", "ConfigError", "parse_config_text", "load_config", "build_config"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    ensemble: EnsembleConfig
    trials: int = 1
    n_sweep: tuple = ()
    probes: tuple = ()
    sigma_min_z: tuple = ()
    truncation_delta: float = None
    truncation_z: complex = 1.0
    g_h: float = 1e-4
    identity_max_dim: int = 256
    support_margin: float = 0.5
    hist_bins: int = 50
    workers: int = 1
    output: str = None
    format: str = "json"

    # fields that do not change report contents
    NON_SEMANTIC = ("workers", "output", "format")

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.format not in ("csv", "json", "both"):
            raise ConfigError(f"unknown format {self.format!r}")
        if self.truncation_delta is not None and not self.truncation_delta > 0:
            raise ConfigError("truncation_delta must be positive")
        for p in self.probes:
            if not isinstance(p, ProbePoint):
                raise ConfigError("probes must be ProbePoint instances")
        if not self.g_h > 0:
            raise ConfigError("g_h must be positive")

    def with_n(self, n):
        return replace(self, ensemble=replace(self.ensemble, n=n, sigmas=self.ensemble.sigmas))

    def semantic_dict(self):
        d = {}
        for f in fields(self):
            if f.name in self.NON_SEMANTIC:
                continue
            d[f.name] = _jsonable(getattr(self, f.name))
        return d

    def config_hash(self):
        blob = json.dumps(self.semantic_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _jsonable(v):
    if isinstance(v, EnsembleConfig):
        return {k: _jsonable(x) for k, x in asdict(v).items()}
    if isinstance(v, ProbePoint):
        return {"z": _jsonable(v.z), "alpha": _jsonable(v.alpha)}
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _complex(text):
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise ConfigError(f"not a complex number: {text!r}") from None


def _list(text, conv):
    return tuple(conv(t.strip()) for t in text.split(",") if t.strip())


def _probe(text):
    if "@" not in text:
        raise ConfigError(f"probe must look like z@alpha, got {text!r}")
    z, a = text.split("@", 1)
    try:
        return ProbePoint(_complex(z), _complex(a))
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _opt_float(text):
    return None if text.lower() in ("", "none") else float(text)


_CONVERTERS = {
    "m": int,
    "n": int,
    "dist": str,
    "seed": int,
    "moment_eta": float,
    "sigmas": lambda t: _list(t, float),
    "trials": int,
    "workers": int,
    "n_sweep": lambda t: _list(t, int),
    "probes": lambda t: _list(t, _probe),
    "sigma_min_z": lambda t: _list(t, _complex),
    "truncation_delta": _opt_float,
    "truncation_z": _complex,
    "g_h": float,
    "identity_max_dim": int,
    "support_margin": float,
    "hist_bins": int,
    "output": str,
    "format": str,
}


def parse_config_text(text):
    """Parse the flat config format into a dict of typed values."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            out[key] = _CONVERTERS[key](value)
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(f"line {lineno}: bad value for {key}: {e}") from None
    return out


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


_ENSEMBLE_KEYS = ("m", "n", "dist", "seed", "moment_eta", "sigmas")


def build_config(file_values=None, overrides=None):
    """Merge defaults, file values and CLI overrides (``None`` means unset)."""
    merged = dict(file_values or {})
    for k, v in (overrides or {}).items():
        if v is not None:
            merged[k] = v
    ens_kwargs = {k: merged.pop(k) for k in _ENSEMBLE_KEYS if k in merged}
    ens_kwargs.setdefault("m", 1)
    ens_kwargs.setdefault("n", 64)
    if "sigmas" in ens_kwargs and len(ens_kwargs["sigmas"]) != ens_kwargs["m"]:
        raise ConfigError("number of sigmas must equal m")
    try:
        ensemble = EnsembleConfig(**ens_kwargs)
        return ExperimentConfig(ensemble=ensemble, **merged)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None
