"""Sandwiched Renyi conditional entropies and related quantities, in bits."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .qops import (
    DensityOperator,
    dagger,
    herm_eig,
    herm_power,
    make_rng,
    partial_trace,
    random_density,
    support_mask,
    support_projector,
)

log = logging.getLogger(__name__)

NEG_INFINITY = -math.inf

SUPPORT_LEAK_TOL = 1e-10
OVERLAP_TOL = 1e-14


def check_order(alpha: float) -> float:
    """Validate a Renyi order, which must lie in ``[1/2, 1) U (1, inf)``."""
    alpha = float(alpha)
    if not (alpha >= 0.5 and alpha != 1.0 and math.isfinite(alpha)):
        raise ValueError(f"Renyi order must lie in [1/2, 1) U (1, inf), got {alpha}")
    return alpha


def _bipartite(rho: DensityOperator) -> tuple[int, int]:
    if len(rho.dims) != 2:
        raise ValueError(f"expected a bipartite state, got dims {rho.dims}")
    return rho.dims


def _sigma_matrix(sigma, dB: int) -> np.ndarray:
    s = sigma.matrix if isinstance(sigma, DensityOperator) else np.asarray(sigma, dtype=complex)
    if s.shape != (dB, dB):
        raise ValueError(f"sigma has shape {s.shape}, expected ({dB}, {dB})")
    return s


def _sandwich(rho_m: np.ndarray, sigma_m: np.ndarray, dA: int, alpha: float) -> np.ndarray:
    s = herm_power(sigma_m, (1 - alpha) / (2 * alpha))
    big = np.kron(np.eye(dA), s)
    return big @ rho_m @ big


def _trace_power(gamma: np.ndarray, alpha: float) -> float:
    w, _ = herm_eig(gamma)
    w = w[support_mask(w)]
    return float(np.sum(w ** alpha))


def sandwiched_norm(rho: DensityOperator, sigma, alpha: float) -> float:
    """``|| (1 x sigma^s) rho (1 x sigma^s) ||_alpha`` with ``s = (1-alpha)/(2 alpha)``.

    For ``alpha < 1`` this is the corresponding Schatten quasi-norm.
    """
    alpha = check_order(alpha)
    dA, dB = _bipartite(rho)
    gamma = _sandwich(rho.matrix, _sigma_matrix(sigma, dB), dA, alpha)
    return _trace_power(gamma, alpha) ** (1 / alpha)


def supported_on(rho: DensityOperator, sigma) -> bool:
    """True if ``rho`` lives in ``A x Supp(sigma)``, up to ``SUPPORT_LEAK_TOL``."""
    dA, dB = _bipartite(rho)
    proj = support_projector(_sigma_matrix(sigma, dB))
    comp = np.kron(np.eye(dA), np.eye(dB) - proj)
    leak = float(np.trace(comp @ rho.matrix @ comp).real)
    return leak <= SUPPORT_LEAK_TOL


def renyi_cond_entropy_fixed(rho: DensityOperator, sigma, alpha: float) -> float:
    """``H_alpha(A|B)_{rho|sigma}`` in bits; ``NEG_INFINITY`` outside its finite branch."""
    alpha = check_order(alpha)
    dA, dB = _bipartite(rho)
    sig = _sigma_matrix(sigma, dB)
    if alpha > 1:
        if not supported_on(rho, sig):
            return NEG_INFINITY
    else:
        overlap = float(np.trace(rho.matrix @ np.kron(np.eye(dA), sig)).real)
        if overlap <= OVERLAP_TOL:
            return NEG_INFINITY
    q = _trace_power(_sandwich(rho.matrix, sig, dA, alpha), alpha)
    if q <= 0:
        return NEG_INFINITY
    return math.log2(q) / (1 - alpha)


class OptimizedEntropy(NamedTuple):
    value: float
    sigma: DensityOperator
    converged: bool


@dataclass(frozen=True)
class OptimizerSettings:
    damping: float = 0.5
    iterations: int = 200
    restarts: int = 8
    tol: float = 1e-9
    seed: int = 0


def _fixed_point_step(rho_m, sig, dA, dB, alpha):
    gamma = _sandwich(rho_m, sig, dA, alpha)
    g = herm_power(gamma, alpha)
    t = partial_trace(g, 1, (dA, dB))
    t = 0.5 * (t + dagger(t))
    return t / np.trace(t).real


def renyi_cond_entropy_opt(rho: DensityOperator, alpha: float,
                           opts: OptimizerSettings | None = None) -> OptimizedEntropy:
    """Maximize ``H_alpha(A|B)_{rho|sigma}`` over ``sigma``.

    Damped fixed-point iteration on
    ``sigma <- normalize(tr_A[(sigma^s rho sigma^s)^alpha])``, started from
    the marginal, the maximally mixed state and ``opts.restarts`` random
    states. Every iterate is evaluated exactly, so the returned value is
    attained by the returned witness and is a lower bound on the maximum.
    """
    alpha = check_order(alpha)
    opts = opts or OptimizerSettings()
    dA, dB = _bipartite(rho)
    # linearized step multiplier is 1 - gamma*alpha; cap gamma so large orders still contract
    gamma = min(opts.damping, 1 / alpha)
    rho_b = partial_trace(rho.matrix, 1, (dA, dB))
    starts = [rho_b, np.eye(dB, dtype=complex) / dB]
    for k in range(opts.restarts):
        starts.append(random_density(dB, dB, make_rng(opts.seed, k)).matrix)

    best_val, best_sig = NEG_INFINITY, rho_b
    converged = False
    for sig in starts:
        prev = NEG_INFINITY
        run_converged = False
        for _ in range(opts.iterations):
            val = renyi_cond_entropy_fixed(rho, sig, alpha)
            if val > best_val:
                best_val, best_sig = val, sig
            if math.isfinite(val) and math.isfinite(prev) and abs(val - prev) <= opts.tol:
                run_converged = True
                break
            prev = val
            step = _fixed_point_step(rho.matrix, sig, dA, dB, alpha)
            sig = (1 - gamma) * sig + gamma * step
        converged = converged or run_converged
    if not converged:
        log.warning("sigma optimization did not converge for alpha=%g; returning best iterate", alpha)
    sig = 0.5 * (best_sig + dagger(best_sig))
    sig = sig / np.trace(sig).real
    return OptimizedEntropy(best_val, DensityOperator(sig, (dB,)), converged)


def _entropy_bits(m: np.ndarray) -> float:
    w, _ = herm_eig(m)
    w = w[w > 0]
    return float(-np.sum(w * np.log2(w)))


def von_neumann_cond(rho: DensityOperator) -> float:
    """``H(A|B) = H(AB) - H(B)`` in bits, with ``0 log 0 = 0``."""
    dA, dB = _bipartite(rho)
    return _entropy_bits(rho.matrix) - _entropy_bits(partial_trace(rho.matrix, 1, (dA, dB)))


def relative_entropy_cond(rho: DensityOperator, sigma) -> float:
    """``-D(rho_AB || 1_A x sigma_B)`` in bits (the ``alpha -> 1`` limit at fixed sigma)."""
    dA, dB = _bipartite(rho)
    sig = _sigma_matrix(sigma, dB)
    if not supported_on(rho, sig):
        return NEG_INFINITY
    w, v = herm_eig(sig)
    mask = support_mask(w)
    logw = np.zeros_like(w)
    logw[mask] = np.log2(w[mask])
    log_sig = np.kron(np.eye(dA), (v * logw) @ dagger(v))
    return _entropy_bits(rho.matrix) + float(np.trace(rho.matrix @ log_sig).real)


def min_entropy_cc(joint) -> float:
    """Classical min-entropy ``-log2 sum_e max_a P(a, e)`` of a table indexed ``[a, e]``."""
    p = np.asarray(joint, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    if p.ndim != 2:
        raise ValueError("joint distribution must be a 2-d table P[a, e]")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
        raise ValueError("joint distribution must be nonnegative and sum to 1")
    return -math.log2(float(p.max(axis=0).sum()))
