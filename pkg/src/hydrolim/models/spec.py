"""JSON model specifications and the environment sampler.

Schema (all keys except ``model`` optional)::

    {
      "model": "misanthrope" | "kstep_exclusion" | "overtaking" | "kstep_misanthrope",
      "K": 1,                                  # cap per site
      "k": 1,                                  # path length
      "kernel": [[z, p], ...] | {"nearest_neighbor": p_right}
              | {"geometric": ratio, "p_right": ...} | {"power_law": exponent, "p_right": ..., "r_max": ...},
      "rate_table": [[...], ...] | "k_exclusion" | "linear",
      "beta": {"forward": [b1, ..., bk], "backward": [b-1, ..., b-k]},
      "paths": [ [ {"path": [...], "prob": q, "rates": [k matrices]} , ...], ... ],   # one list per site type
      "disorder": {"kind": ..., "law": "uniform", "low": a, "high": b, "c": c}
                | {"kind": ..., "law": "choice", "values": [...], "probs": [...]},
      "flux": {"polynomial": [a0, a1, ...]} | {"table": [[rho, G], ...]},
      "name": "label"
    }

Documents round-trip bit-exactly through :meth:`ModelSpec.to_json`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .environment import DisorderSpec, Environment
from .families import KStepExclusion, KStepMisanthrope, Misanthrope, Overtaking, PathType, TransformationFamily
from .kernels import NAMED_RATE_TABLES, JumpKernel

MODELS = ("misanthrope", "kstep_exclusion", "overtaking", "kstep_misanthrope")


@dataclass
class ModelSpec:
    model: str
    K: int = 1
    k: int = 1
    kernel: list | dict | None = None
    rate_table: list | str | None = None
    beta: dict | None = None
    paths: list | None = None
    disorder: dict = field(default_factory=lambda: {"kind": "none"})
    flux: dict | None = None
    name: str | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if int(self.K) != self.K or self.K < 1 or int(self.k) != self.k or self.k < 1:
            raise ValueError("K and k must be positive integers")

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown model spec fields: {sorted(extra)}")
        if "model" not in d:
            raise ValueError("model spec needs a 'model' field")
        return cls(**d)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            if val is not None:
                out[f.name] = val
        return out

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def load(cls, path) -> "ModelSpec":
        return cls.from_json(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    def jump_kernel(self) -> JumpKernel:
        return parse_kernel(self.kernel)

    def disorder_spec(self) -> DisorderSpec:
        return DisorderSpec.from_dict(self.disorder)

    def build(self, strict: bool = True) -> TransformationFamily:
        return build_family(self, strict=strict)


def parse_kernel(spec) -> JumpKernel:
    if spec is None:
        return JumpKernel.nearest_neighbor(1.0)
    if isinstance(spec, dict):
        if "nearest_neighbor" in spec:
            return JumpKernel.nearest_neighbor(float(spec["nearest_neighbor"]))
        if "geometric" in spec:
            return JumpKernel.geometric(float(spec["geometric"]), float(spec.get("p_right", 1.0)), float(spec.get("tol", 1e-6)))
        if "power_law" in spec:
            return JumpKernel.power_law(
                float(spec["power_law"]), float(spec.get("p_right", 1.0)), float(spec.get("tol", 1e-6)), spec.get("r_max")
            )
        raise ValueError(f"unrecognised kernel spec {spec!r}")
    return JumpKernel.from_pairs(spec)


def parse_rate_table(spec, K: int) -> np.ndarray:
    if spec is None:
        spec = "k_exclusion"
    if isinstance(spec, str):
        if spec not in NAMED_RATE_TABLES:
            raise ValueError(f"unknown rate table {spec!r}")
        return NAMED_RATE_TABLES[spec](K)
    b = np.asarray(spec, dtype=float)
    if b.shape != (K + 1, K + 1):
        raise ValueError(f"rate table must be {(K + 1, K + 1)}, got {b.shape}")
    return b


def build_family(spec: ModelSpec, strict: bool = True) -> TransformationFamily:
    """Instantiate the transformation family described by ``spec``.

    ``strict=False`` skips the monotonicity assumptions on rates so that
    deliberately broken models can be fed to :func:`check_monotone`.
    """
    dis = spec.disorder_spec()
    if spec.model == "misanthrope":
        return Misanthrope(spec.jump_kernel(), parse_rate_table(spec.rate_table, spec.K), dis, strict=strict)
    if spec.model == "kstep_exclusion":
        if spec.K != 1:
            raise ValueError("k-step exclusion needs K = 1")
        return KStepExclusion(spec.jump_kernel(), spec.k, dis)
    if spec.model == "overtaking":
        if spec.K != 1:
            raise ValueError("overtaking needs K = 1")
        beta = spec.beta or {"forward": [1.0] * spec.k}
        return Overtaking(spec.k, beta["forward"], beta.get("backward"), dis)
    if not spec.paths:
        raise ValueError("k-step misanthrope spec needs 'paths'")
    types = [PathType.from_json(t) for t in spec.paths]
    fam = KStepMisanthrope(types, dis, strict=strict)
    if fam.K != spec.K or fam.k != spec.k:
        raise ValueError("path table disagrees with K or k")
    return fam


def _field_columns(family: TransformationFamily) -> int | None:
    if family.disorder.kind == "bond_rates":
        return 2 * family.locality_radius + 1
    return None


def sample_environment_for(family: TransformationFamily, window, seed: int, periodic: bool = False) -> Environment | None:
    """Environment for ``family`` covering ``window`` and, unless periodic, the event band."""
    dis = family.disorder
    if dis.kind == "none":
        return None
    lo, hi = window
    pad = 0 if periodic else family.locality_radius
    n = hi - lo + 1 + 2 * pad
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xE,)))
    if dis.kind == "site_rates":
        vals = dis.draw(rng, n)
        kind = "site_rates"
    elif dis.kind == "bond_rates":
        cols = _field_columns(family)
        vals = np.zeros((n, cols))
        z = np.asarray(family.kernel.offsets) + family.locality_radius
        vals[:, z] = dis.draw(rng, (n, z.size))
        kind = "bond_rates"
    elif dis.kind == "overtaking_scale":
        scale = dis.draw(rng, n)
        base = np.concatenate([family.forward, family.backward])
        vals = scale[:, None] * base
        kind = "overtaking_rates"
    else:
        vals = dis.draw(rng, n).astype(np.int64)
        kind = "kstep_mis"
    return Environment(kind, lo - pad, vals, c=dis.c_effective, periodic=periodic, seed=seed)


def sample_environment(spec: ModelSpec, window, seed: int, periodic: bool = False) -> Environment:
    """Deterministic i.i.d. environment for ``spec`` over ``window`` (inclusive bounds).

    A disorder-free spec yields the homogeneous field alpha = 1.
    """
    fam = build_family(spec)
    env = sample_environment_for(fam, window, seed, periodic)
    if env is None:
        lo, hi = window
        env = Environment("none", lo, np.ones(hi - lo + 1), periodic=periodic, seed=seed)
    return env
