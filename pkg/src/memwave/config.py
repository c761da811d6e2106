"""Run configuration: a single JSON document drives every experiment.

Fail-closed parsing: any key the schema does not know is an error that
names the offending path, so a typo cannot silently fall back to a
default.  The config hash (first 12 hex digits of the sha256 of the
canonicalized document) names the artifact directory and is stamped
into every file written, which makes reruns byte-reproducible and
collisions between different configs visible.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .kernels import KernelSpec
from .spectral import DomainSpec

EXPERIMENTS = ("spectrum", "responses", "gram", "synthesize", "verify", "sweep-T")

# section -> allowed keys; None marks a scalar leaf
_SCHEMA = {
    "experiment": None,
    "domain": {"geometry", "lengths", "a", "q", "c", "gamma_subset"},
    "kernel": {"family", "c", "coefficients", "rates",
               "samples", "samples_d1", "samples_d2"},
    "T": None,
    "h": None,
    "K": None,
    "N_modes": None,
    "K_sim": None,
    "target": {"xi", "eta"},
    "sweep": {"T_min", "T_max", "steps"},
    "out": None,
    "seed": None,
}


@dataclass(frozen=True)
class SweepSpec:
    T_min: float
    T_max: float
    steps: int

    def horizons(self) -> np.ndarray:
        return np.linspace(self.T_min, self.T_max, self.steps)


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    domain: DomainSpec
    kernel: KernelSpec
    T: Optional[float]
    h: object                   # float or the literal string "auto"
    K: int
    N_modes: int
    K_sim: int
    target: object              # {"xi": [...], "eta": [...]}, "random", or None
    sweep: Optional[SweepSpec]
    out: Optional[str]
    seed: int
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)


def config_hash(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _unknown_keys(doc: dict) -> list:
    bad = []
    for key, val in doc.items():
        if key not in _SCHEMA:
            bad.append(key)
            continue
        allowed = _SCHEMA[key]
        if allowed is not None and isinstance(val, dict):
            bad.extend(f"{key}.{sub}" for sub in val if sub not in allowed)
    return bad


def _number(doc, key, default=None, required=False, integer=False, low=None):
    if key not in doc or doc[key] is None:
        if required:
            raise ConfigError(f"config is missing required key {key!r}")
        return default
    val = doc[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{key} must be a number, got {val!r}")
    if integer:
        if int(val) != val:
            raise ConfigError(f"{key} must be an integer, got {val!r}")
        val = int(val)
    if low is not None and val <= low:
        raise ConfigError(f"{key} must be > {low}, got {val}")
    return val


def _build_domain(doc: dict) -> DomainSpec:
    sec = doc.get("domain")
    if not isinstance(sec, dict):
        raise ConfigError("config needs a 'domain' section")
    if "geometry" not in sec or "lengths" not in sec:
        raise ConfigError("domain section needs 'geometry' and 'lengths'")
    lengths = sec["lengths"]
    if not isinstance(lengths, (list, tuple)):
        raise ConfigError("domain.lengths must be a list")
    # the config surface supports constant coefficients only; variable
    # a(x), q(x) are a library-level feature (callables cannot be JSON)
    a = _number(sec, "a", default=1.0, low=0.0)
    q = _number(sec, "q", default=0.0)
    c = _number(sec, "c", default=0.0)
    gamma = tuple(sec.get("gamma_subset", ("right",)))
    return DomainSpec(sec["geometry"], tuple(float(l) for l in lengths),
                      a=a, q=q, c=c, gamma_subset=gamma)


def _build_kernel(doc: dict, c: float) -> KernelSpec:
    sec = doc.get("kernel")
    if sec is None:
        return KernelSpec("zero", c=c)
    if not isinstance(sec, dict) or "family" not in sec:
        raise ConfigError("kernel section needs a 'family'")
    kc = _number(sec, "c", default=None)
    if kc is not None and kc != c:
        raise ConfigError(
            f"kernel.c={kc} contradicts domain.c={c}; set it in one place")
    def arr(key):
        v = sec.get(key)
        return None if v is None else np.asarray(v, dtype=float)
    return KernelSpec(sec["family"], c=c,
                      coefficients=tuple(sec.get("coefficients", ())),
                      rates=tuple(sec.get("rates", ())),
                      samples=arr("samples"),
                      samples_d1=arr("samples_d1"),
                      samples_d2=arr("samples_d2"))


def _build_target(doc: dict, K: int):
    tgt = doc.get("target")
    if tgt is None or tgt == "random":
        return tgt
    if not isinstance(tgt, dict):
        raise ConfigError("target must be 'random' or an object with xi, eta")
    xi = np.asarray(tgt.get("xi", ()), dtype=float)
    eta = np.asarray(tgt.get("eta", ()), dtype=float)
    if xi.shape != (K,) or eta.shape != (K,):
        raise ConfigError(
            f"target.xi and target.eta must each list K={K} numbers")
    return {"xi": xi, "eta": eta}


def from_dict(doc: dict, experiment: Optional[str] = None) -> RunConfig:
    """Validate a parsed config document.  `experiment` is the CLI
    subcommand; it fills in a missing experiment key and must agree
    with an explicit one."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    bad = _unknown_keys(doc)
    if bad:
        raise ConfigError("unknown config keys: " + ", ".join(sorted(bad)))

    exp = doc.get("experiment", experiment)
    if exp == "sweep-t":
        exp = "sweep-T"
    if exp is None:
        raise ConfigError("no experiment requested (key or subcommand)")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}; one of {EXPERIMENTS}")
    if experiment is not None and exp != experiment:
        raise ConfigError(
            f"config says experiment={exp!r} but the {experiment!r} "
            "subcommand was invoked")

    domain = _build_domain(doc)
    kernel = _build_kernel(doc, domain.c)

    K = _number(doc, "K", default=12, integer=True, low=0)
    N_modes = _number(doc, "N_modes", default=max(40, K), integer=True, low=0)
    if N_modes < K:
        raise ConfigError(f"N_modes={N_modes} smaller than truncation K={K}")
    K_sim = _number(doc, "K_sim", default=4 * K, integer=True, low=0)

    needs_T = exp in ("responses", "gram", "synthesize", "verify")
    T = _number(doc, "T", required=needs_T, low=0.0)

    h = doc.get("h", "auto")
    if h != "auto":
        h = _number(doc, "h", low=0.0)

    sweep = None
    if "sweep" in doc and doc["sweep"] is not None:
        sec = doc["sweep"]
        sweep = SweepSpec(_number(sec, "T_min", required=True, low=0.0),
                          _number(sec, "T_max", required=True, low=0.0),
                          _number(sec, "steps", required=True, integer=True,
                                  low=1))
        if not sweep.T_min < sweep.T_max:
            raise ConfigError(
                f"sweep needs T_min < T_max, got [{sweep.T_min}, {sweep.T_max}]")
    if exp == "sweep-T" and sweep is None:
        raise ConfigError("experiment sweep-T needs a 'sweep' section")

    target = _build_target(doc, K)
    if exp in ("synthesize", "verify") and target is None:
        raise ConfigError(f"experiment {exp} needs a 'target'")

    out = doc.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out must be a path string")
    seed = _number(doc, "seed", default=0, integer=True)

    return RunConfig(exp, domain, kernel, T, h, K, N_modes, K_sim,
                     target, sweep, out, seed, raw=doc)


def load(path: str, experiment: Optional[str] = None) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    return from_dict(doc, experiment)
