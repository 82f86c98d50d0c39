"""Error exponents for privacy amplification fed by entropy accumulation.

Everything is in bits. With ``beta = (alpha - 1)/alpha`` the trace-distance
bound after hashing to ``nR`` bits is
``(2/p_w) * 2^{n beta (R - f_w + beta V^2 / 2)}``, optimized over
``beta in (0, 1/2]``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .entropy import check_order


@dataclass(frozen=True)
class EatParams:
    n: int
    f_w: float
    V: float
    R: float
    p_w: float = 1.0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if not self.V > 0:
            raise ValueError("V must be positive")
        if not 0 < self.p_w <= 1:
            raise ValueError("p_w must lie in (0, 1]")


@dataclass(frozen=True)
class EatResult:
    exponent: float
    beta_star: float
    alpha_star: float
    valid: bool
    rhs_at_n: float | None = None


def _check_alpha(alpha: float) -> float:
    alpha = check_order(alpha)
    if not 1 < alpha <= 2:
        raise ValueError(f"alpha must lie in (1, 2], got {alpha}")
    return alpha


def eat_renyi_lower_bound(p: EatParams, alpha: float) -> float:
    """``n f_w - n ((alpha-1)/4) V^2 - (alpha/(alpha-1)) log2(1/p_w)``."""
    alpha = _check_alpha(alpha)
    return (p.n * p.f_w - p.n * (alpha - 1) / 4 * p.V ** 2
            - alpha / (alpha - 1) * math.log2(1 / p.p_w))


def _bound_from_beta(p: EatParams, beta: float) -> float:
    return 2 / p.p_w * 2.0 ** (p.n * beta * (p.R - p.f_w + beta * p.V ** 2 / 2))


def eat_bound_rhs(p: EatParams, alpha: float) -> float:
    alpha = _check_alpha(alpha)
    return _bound_from_beta(p, (alpha - 1) / alpha)


def error_exponent(f_w: float, R: float, V: float) -> EatResult:
    """Optimal exponent ``((f_w - R)/V)^2 / 2`` and its order.

    Outside ``0 < f_w - R <= V^2/2`` the result is flagged invalid: above the
    range it reports the boundary value at ``beta = 1/2``; for ``R >= f_w``
    it reports ``E = 0`` at ``beta = 0``.
    """
    if not V > 0:
        raise ValueError("V must be positive")
    gap = f_w - R
    if gap <= 0:
        return EatResult(0.0, 0.0, 1.0, False)
    if gap > V * V / 2:
        beta = 0.5
        return EatResult(beta * gap - beta * beta * V * V / 2, beta, 2.0, False)
    beta = gap / (V * V)
    return EatResult((gap / V) ** 2 / 2, beta, 1 / (1 - beta), True)


@dataclass(frozen=True)
class GridOptimum:
    exponent: float
    beta: float


def exponent_grid_opt(f_w: float, R: float, V: float, resolution: int = 200_001) -> GridOptimum:
    """Brute-force ``-min beta^2 V^2/2 - beta (f_w - R)`` over an even grid on ``[0, 1/2]``."""
    if resolution < 1000:
        raise ValueError("resolution must be at least 1000 points")
    beta = np.linspace(0.0, 0.5, resolution)
    obj = beta ** 2 * V ** 2 / 2 - beta * (f_w - R)
    k = int(np.argmin(obj))
    return GridOptimum(float(-obj[k]), float(beta[k]))


RATE_HEADER = ("R", "E", "beta_star", "alpha_star", "valid", "bound_at_n")


def rate_sweep(f_w: float, V: float, R_min: float, R_max: float, steps: int,
               n: int, p_w: float = 1.0) -> list[dict]:
    if not R_min < R_max:
        raise ValueError("need R_min < R_max")
    if steps < 2:
        raise ValueError("steps must be >= 2")
    rows = []
    for R in np.linspace(R_min, R_max, steps):
        rows.append(rate_row(f_w, V, float(R), n, p_w))
    return rows


def rate_row(f_w: float, V: float, R: float, n: int, p_w: float = 1.0) -> dict:
    res = error_exponent(f_w, R, V)
    bound = _bound_from_beta(EatParams(n, f_w, V, R, p_w), res.beta_star)
    return {"R": R, "E": res.exponent, "beta_star": res.beta_star,
            "alpha_star": res.alpha_star, "valid": res.valid, "bound_at_n": bound}


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RATE_HEADER)
    for r in rows:
        w.writerow([f"{r['R']:.12g}", f"{r['E']:.12g}", f"{r['beta_star']:.12g}",
                    f"{r['alpha_star']:.12g}", str(r["valid"]).lower(), f"{r['bound_at_n']:.12g}"])
    return buf.getvalue()
