from __future__ import annotations

import math
from dataclasses import dataclass, fields

SMW_MODES = ("exact", "as_printed")


@dataclass(frozen=True)
class HyperParams:
    alpha: float = 5e-3
    delta: float = 1.0
    gamma: float = 1.0
    d_init: float = 1e-5
    lr: float = 1e-3
    div_floor: float = 1e-8
    smw_mode: str = "exact"
    # weight on J J^T in the full Jacobian system
    jacobian_weight: float = 1.0
    # baselines
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    accum_init: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "delta", "d_init", "div_floor"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.smw_mode not in SMW_MODES:
            raise ValueError(f"smw_mode must be one of {SMW_MODES}, got {self.smw_mode!r}")
        if self.eps < 0.0 or self.accum_init < 0.0:
            raise ValueError("eps and accum_init must be >= 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not self.jacobian_weight > 0.0:
            raise ValueError(f"jacobian_weight must be > 0, got {self.jacobian_weight!r}")


HYPERPARAM_FIELDS = tuple(f.name for f in fields(HyperParams))

# Per-optimizer starting points; delta is filled from delta_default when not given
OPTIMIZER_DEFAULTS: dict[str, dict[str, object]] = {
    "nlls1": {"alpha": 5e-3, "d_init": 1e-5},
    "nllsl": {"alpha": 5e-2, "d_init": 1e-10},
    "full_jacobian": {"alpha": 5e-3, "d_init": 1e-5},
    "sgd": {"lr": 1e-2},
    "adagrad": {"lr": 1e-2, "eps": 1e-7, "accum_init": 0.0},
    "adam": {"lr": 1e-3, "beta1": 0.9, "beta2": 0.999, "eps": 1e-7},
}


def delta_default(L: int, B: int) -> float:
    if L < 1 or B < 1:
        raise ValueError(f"L and B must be >= 1, got L={L}, B={B}")
    return math.sqrt(L / (4.0 * B))


def jacobian_weight_default(L: int, delta: float) -> float:
    """4 delta^2 / L: the weight NLLS1's v v^T gives its rank-1 Jacobian estimate.

    With delta = delta_default(L, B) this is 1 / B.
    """
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    return 4.0 * delta * delta / L


def resolve_hyperparams(name: str, L: int, B: int, overrides: dict | None = None) -> HyperParams:
    """Defaults for `name`, then user overrides; gamma is always B.

    `delta_scale` (not a HyperParams field) scales delta_default when no
    explicit delta is given.
    """
    if name not in OPTIMIZER_DEFAULTS:
        raise ValueError(f"unknown optimizer {name!r}")
    values: dict[str, object] = dict(OPTIMIZER_DEFAULTS[name])
    overrides = dict(overrides or {})
    delta_scale = float(overrides.pop("delta_scale", 1.0))
    unknown = set(overrides) - set(HYPERPARAM_FIELDS)
    if unknown:
        raise ValueError(f"unknown hyperparameter(s) for {name}: {', '.join(sorted(unknown))}")
    values.update(overrides)
    if "delta" not in overrides:
        values["delta"] = delta_scale * delta_default(L, B)
    if name == "full_jacobian" and "jacobian_weight" not in overrides:
        values["jacobian_weight"] = jacobian_weight_default(L, values["delta"])
    values["gamma"] = float(B)
    return HyperParams(**values)
