"""Per-dataset threshold presets, indexed by mislabeling level and clustering kernel."""
from __future__ import annotations

from dataclasses import replace

from .tree import Hyperparameters

NOISE_LEVELS = (0.0, 0.1, 0.2, 0.3)

# name -> noise level -> algorithm -> (lambda_cem, lambda_cs, lambda_ol)
_TABLE = {
    "coal": {lvl: {"kmeans": (0.9, 0.9, 0.01), "kmedoids": (0.9, 0.9, 0.01)} for lvl in NOISE_LEVELS},
    "ecoli": {lvl: {"kmeans": (0.75, 0.75, 0.04), "kmedoids": (0.75, 0.75, 0.04)} for lvl in NOISE_LEVELS},
    "wine": {lvl: {"kmeans": (0.7, 0.65, 0.03), "kmedoids": (0.7, 0.65, 0.03)} for lvl in NOISE_LEVELS},
    "eucalyptus": {
        0.0: {"kmeans": (0.85, 0.8, 0.02), "kmedoids": (0.9, 0.8, 0.02)},
        0.1: {"kmeans": (0.85, 0.8, 0.02), "kmedoids": (0.9, 0.8, 0.02)},
        0.2: {"kmeans": (0.85, 0.75, 0.02), "kmedoids": (0.9, 0.75, 0.02)},
        0.3: {"kmeans": (0.85, 0.75, 0.02), "kmedoids": (0.9, 0.75, 0.02)},
    },
}

PRESETS = tuple(_TABLE)
DEFAULT_THRESHOLDS = (0.9, 0.85, 0.01)


def thresholds(name: str, algorithm: str = "kmeans", noise: float = 0.0) -> tuple[float, float, float]:
    """(lambda_cem, lambda_cs, lambda_ol); ``noise`` snaps to the nearest tabulated level."""
    try:
        rows = _TABLE[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    level = min(NOISE_LEVELS, key=lambda lvl: (abs(lvl - noise), lvl))
    return rows[level][algorithm]


def preset_hyperparameters(name: str, algorithm: str = "kmeans", noise: float = 0.0, base: Hyperparameters | None = None) -> Hyperparameters:
    lcem, lcs, lol = thresholds(name, algorithm, noise)
    base = base or Hyperparameters()
    return replace(base, lambda_cem=lcem, lambda_cs=lcs, lambda_ol=lol, algorithm=algorithm)
