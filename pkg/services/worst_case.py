# services/worst_case.py
"""Closed-form worst-case analytics for the trivial-syndrome chain.

All formulas keep terms up to kappa^2 and are written in x = (pi*kappa)^2.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from errors import UsageError

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["d", "kappa", "m", "p_chain", "alpha", "f_min", "r"]
DEFAULT_FIT_FROM = 13
DEFAULT_FIT_TO = 101

# reference large-distance fit at kappa = 0.4, m = 3: (centre, half-width)
REFERENCE_KAPPA = 0.4
REFERENCE_M = 3
REFERENCE_SLOPE = (-2.1, 0.3)
REFERENCE_INTERCEPT = (0.47, 0.25)


@dataclass(frozen=True)
class RoundWeights:
    identity: Fraction       # k^2 (2d^2-3d+1)^2 / 4
    trivial_data: Fraction   # (4d^2-7d+2) / 8
    carried_data: Fraction   # theta(k-2) (4d^2-7d+2) / 8
    nontrivial: Fraction     # (5d^2-9d+4) / 4

    @property
    def numerator(self) -> Fraction:
        return self.identity + self.trivial_data

    @property
    def inverse_normalization(self) -> Fraction:
        return self.identity + self.trivial_data + self.carried_data + self.nontrivial


@dataclass(frozen=True)
class WorstCaseResult:
    d: int
    kappa: float
    m: int
    round_probabilities: Tuple[float, ...]
    p_chain: float
    alpha: float
    f_min: float

    @property
    def r(self) -> float:
        return 1.0 - self.f_min


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept_log10: float
    window: Tuple[int, int]
    points: int

    def to_dict(self) -> Dict[str, object]:
        return {"slope": self.slope, "intercept_log10": self.intercept_log10,
                "window": list(self.window), "points": self.points}


def _check(d: int, kappa: float) -> None:
    if d < 3 or d % 2 == 0:
        raise UsageError(f"code distance must be odd and >= 3, got {d}")
    if kappa < 0:
        raise UsageError(f"kappa must be >= 0, got {kappa}")

def theta(x: int) -> int:
    return 1 if x >= 0 else 0

def round_weight_coefficients(d: int, k: int) -> RoundWeights:
    """Exact (pi*kappa)^2 coefficients of the round-k trivial weight and of 1/N_k."""
    if k < 1:
        raise UsageError(f"round index must be >= 1, got {k}")
    _check(d, 0.0)
    data = Fraction(4 * d * d - 7 * d + 2, 8)
    return RoundWeights(
        identity=Fraction(k * k * (2 * d * d - 3 * d + 1) ** 2, 4),
        trivial_data=data,
        carried_data=theta(k - 2) * data,
        nontrivial=Fraction(5 * d * d - 9 * d + 4, 4),
    )

def p_k_given_km1(d: int, kappa: float, k: int) -> float:
    w = round_weight_coefficients(d, k)
    _check(d, kappa)
    x = (np.pi * kappa) ** 2
    return float((1 + float(w.numerator) * x) / (1 + float(w.inverse_normalization) * x))

def chain_probability(d: int, kappa: float, m: int) -> float:
    if m < 1:
        raise UsageError(f"cycle count must be >= 1, got {m}")
    return float(np.prod([p_k_given_km1(d, kappa, k) for k in range(1, 2 * m + 1)]))

def alpha_magnitude(d: int, kappa: float, m: int) -> float:
    _check(d, kappa)
    if m < 1:
        raise UsageError(f"cycle count must be >= 1, got {m}")
    x = (np.pi * kappa) ** 2
    main = 1 + m * m * (2 * d * d - 3 * d + 1) ** 2 * x
    return float(np.sqrt(main / (main + (4 * d * d - 7 * d + 2) * x / 8)))

def f_min(d: int, kappa: float, m: int) -> float:
    return chain_probability(d, kappa, m) * alpha_magnitude(d, kappa, m)

def infidelity(d: int, kappa: float, m: int) -> float:
    return 1.0 - f_min(d, kappa, m)

def worst_case(d: int, kappa: float, m: int) -> WorstCaseResult:
    probs = tuple(p_k_given_km1(d, kappa, k) for k in range(1, 2 * m + 1))
    p_chain = float(np.prod(probs))
    alpha = alpha_magnitude(d, kappa, m)
    return WorstCaseResult(d, kappa, m, probs, p_chain, alpha, p_chain * alpha)


# ---------- sweeps and fits ----------

def sweep_curve(d_list: Iterable[int], kappa: float, m: int) -> pd.DataFrame:
    rows = []
    for d in d_list:
        res = worst_case(d, kappa, m)
        rows.append({"d": d, "kappa": kappa, "m": m, "p_chain": res.p_chain,
                     "alpha": res.alpha, "f_min": res.f_min, "r": res.r})
        logger.debug("d=%d kappa=%g m=%d: r=%.6g", d, kappa, m, res.r)
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)

def sweep_grid(d_list: Iterable[int], kappas: Iterable[float], ms: Iterable[int]) -> pd.DataFrame:
    d_list = list(d_list)
    frames = [sweep_curve(d_list, kappa, m) for kappa in kappas for m in ms]
    if not frames or not d_list:
        raise UsageError("empty sweep")
    return pd.concat(frames, ignore_index=True)

def m_spread(table: pd.DataFrame, small_m: int, large_m: int) -> pd.DataFrame:
    """Per (kappa, d) gap |r(large_m) - r(small_m)|."""
    pivot = table.pivot_table(index=["kappa", "d"], columns="m", values="r")
    for m in (small_m, large_m):
        if m not in pivot.columns:
            raise UsageError(f"m={m} is not in the sweep")
    gap = (pivot[large_m] - pivot[small_m]).abs()
    return gap.rename("gap").reset_index()

def power_law_fit(table: pd.DataFrame, d_min_fit: int = DEFAULT_FIT_FROM,
                  d_max_fit: Optional[int] = None) -> PowerLawFit:
    """Least-squares line through (log10 d, log10 r) on the window."""
    d_max_fit = d_max_fit if d_max_fit is not None else int(table["d"].max())
    window = table[(table["d"] >= d_min_fit) & (table["d"] <= d_max_fit)]
    if len(window) < 3:
        raise UsageError(f"fit window [{d_min_fit}, {d_max_fit}] holds {len(window)} points, need 3")
    if (window["r"] <= 0).any():
        raise UsageError("infidelity is zero in the fit window; a power law is undefined")
    slope, intercept = np.polyfit(np.log10(window["d"].to_numpy(float)),
                                  np.log10(window["r"].to_numpy(float)), 1)
    fit = PowerLawFit(float(slope), float(intercept), (d_min_fit, d_max_fit), len(window))
    logger.info("power law on d in [%d, %d]: r ~ 10^%.3f d^%.3f",
                d_min_fit, d_max_fit, fit.intercept_log10, fit.slope)
    return fit

def strictly_decreasing(values: List[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))

def is_reference_window(distances: Iterable[int], d_min_fit: int, d_max_fit: Optional[int] = None) -> bool:
    """True when the fit sees exactly the odd distances 13..101."""
    distances = list(distances)
    upper = d_max_fit if d_max_fit is not None else max(distances)
    window = [d for d in distances if d_min_fit <= d <= upper]
    return window == list(range(DEFAULT_FIT_FROM, DEFAULT_FIT_TO + 1, 2))

def within_reference(slope: float, intercept_log10: float) -> bool:
    (s0, ds), (c0, dc) = REFERENCE_SLOPE, REFERENCE_INTERCEPT
    return abs(slope - s0) <= ds and abs(intercept_log10 - c0) <= dc
