"""Reference model specifications used by the tests, scripts and CLI."""

from __future__ import annotations

import numpy as np

from .spec import ModelSpec


def tasep() -> ModelSpec:
    return ModelSpec("misanthrope", K=1, kernel=[[1, 1.0]], rate_table="k_exclusion", name="tasep",
                     flux={"polynomial": [0.0, 1.0, -1.0]})


def asep(p_right: float = 0.75) -> ModelSpec:
    return ModelSpec("misanthrope", K=1, kernel=[[-1, 1.0 - p_right], [1, p_right]], rate_table="k_exclusion",
                     name=f"asep_{p_right}")


def two_step_tasep() -> ModelSpec:
    return ModelSpec("kstep_exclusion", K=1, k=2, kernel=[[1, 1.0]], name="two_step_tasep",
                     flux={"polynomial": [0.0, 1.0, 1.0, -2.0]})


def overtaking(beta2: float = 0.5) -> ModelSpec:
    return ModelSpec("overtaking", K=1, k=2, beta={"forward": [1.0, beta2], "backward": [0.0, 0.0]},
                     name=f"overtaking_1_{beta2}")


def misanthrope_site_disorder() -> ModelSpec:
    """K = 2 misanthrope, b(n, m) = n (K - m), i.i.d. site rates on [0.5, 2]."""
    return ModelSpec("misanthrope", K=2, kernel=[[-1, 0.3], [1, 0.7]], rate_table="linear",
                     disorder={"kind": "site_rates", "law": "uniform", "low": 0.5, "high": 2.0, "c": 0.5},
                     name="misanthrope_k2_site")


def misanthrope_k2() -> ModelSpec:
    """Disorder-free K = 2 exclusion with asymmetric nearest-neighbour jumps."""
    return ModelSpec("misanthrope", K=2, kernel=[[-1, 0.3], [1, 0.7]], rate_table="k_exclusion",
                     name="misanthrope_k2")


def misanthrope_bond_disorder() -> ModelSpec:
    return ModelSpec("misanthrope", K=2, kernel=[[-1, 0.25], [1, 0.75]], rate_table="k_exclusion",
                     disorder={"kind": "bond_rates", "law": "choice", "values": [0.5, 1.0, 2.0],
                               "probs": [0.25, 0.5, 0.25], "c": 0.5},
                     name="misanthrope_k2_bond")


def _kstep_mis_type(forward_weight: float, second_scale: float, K: int = 2) -> list:
    b1 = np.zeros((K + 1, K + 1))
    b1[1:, :K] = 1.0
    b1[2:, :K] += 0.5
    # b^2(K, 0) must not exceed b^1(1, K - 1) = 1
    b2 = second_scale * (b1 > 0)
    rates = [b1.tolist(), b2.tolist()]
    return [
        {"path": [-1, -2], "prob": 1.0 - forward_weight, "rates": rates},
        {"path": [1, 2], "prob": forward_weight, "rates": rates},
    ]


def kstep_misanthrope() -> ModelSpec:
    return ModelSpec("kstep_misanthrope", K=2, k=2, paths=[_kstep_mis_type(0.7, 0.8), _kstep_mis_type(0.9, 0.4)],
                     disorder={"kind": "site_types", "law": "choice", "values": [0, 1], "probs": [0.5, 0.5]},
                     name="kstep_misanthrope_k2")


def shipped_models() -> dict[str, ModelSpec]:
    """The five model instances certified by the verification suite."""
    return {
        "misanthrope_site": misanthrope_site_disorder(),
        "misanthrope_bond": misanthrope_bond_disorder(),
        "two_step_tasep": two_step_tasep(),
        "overtaking": overtaking(0.5),
        "kstep_misanthrope": kstep_misanthrope(),
    }


def broken_misanthrope() -> ModelSpec:
    """b(2, 0) < b(1, 0): not nondecreasing in the first argument."""
    return ModelSpec("misanthrope", K=2, kernel=[[1, 1.0]], rate_table=[[0, 0, 0], [1.0, 0.5, 0], [0.25, 0.25, 0]],
                     name="broken_misanthrope")


def broken_kstep_misanthrope() -> ModelSpec:
    """Two-step jumps faster than one-step jumps."""
    K = 2
    b1 = np.zeros((K + 1, K + 1))
    b1[1:, :K] = 0.5
    b2 = 2.0 * (b1 > 0)
    rates = [b1.tolist(), b2.tolist()]
    return ModelSpec("kstep_misanthrope", K=2, k=2, paths=[[{"path": [1, 2], "prob": 1.0, "rates": rates}]],
                     name="broken_kstep_misanthrope")
