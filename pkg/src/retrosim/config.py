"""Central numerical tolerances and capacity limits.

Every default can be overridden per call; the ``RETRO_TOL`` environment
variable scales all tolerances at import time and ``RETRO_SEED`` replaces
the default RNG seed.
"""

from __future__ import annotations

import dataclasses
import os

DEFAULT_SEED = 20240601


@dataclasses.dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-9        # relative, times ||op||_F
    eig: float = 1e-9         # relative eigendecomposition residual
    psd: float = 1e-9         # absolute slack on minimum eigenvalue
    trace: float = 1e-9       # state normalisation
    povm: float = 1e-9        # POVM completeness
    tp: float = 1e-8          # Tr_out C == domain projector
    feasibility: float = 1e-8  # min eig of rho0 (x) I - p C
    covariance: float = 1e-8
    rank: float = 1e-10       # eigenvalues below this count as zero

    def scaled(self, factor: float) -> "Tolerances":
        return Tolerances(**{f.name: getattr(self, f.name) * factor
                             for f in dataclasses.fields(self)})


@dataclasses.dataclass(frozen=True)
class Capacity:
    max_dim: int = 2 ** 14    # largest embedded matrix dimension
    max_perm_copies: int = 8  # k! permutation sums above this are refused


def _env_scale() -> float:
    raw = os.environ.get("RETRO_TOL")
    if not raw:
        return 1.0
    value = float(raw)
    if not value > 0:
        raise ValueError(f"RETRO_TOL must be positive, got {raw!r}")
    return value


def default_seed() -> int:
    raw = os.environ.get("RETRO_SEED")
    return int(raw) if raw else DEFAULT_SEED


TOL = Tolerances().scaled(_env_scale())
CAPACITY = Capacity()
