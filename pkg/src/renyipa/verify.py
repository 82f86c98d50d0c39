"""Numerical check of the Renyi privacy-amplification / decoupling bound.

For a randomizing family ``{R^h}`` and a state ``rho_AE``, compares

    LHS = E_h || (R^h - U)(rho_AE) ||_1
    RHS = 2^{2/alpha - 1} * 2^{((alpha-1)/alpha) (log|C| - H_alpha(A|E)_{rho|sigma} + 2 log lambda)}

over a grid of orders ``alpha`` in (1, 2].
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .decouple import ChannelEnsemble, deviation_norms, mean_stderr
from .entropy import (
    NEG_INFINITY,
    OptimizerSettings,
    renyi_cond_entropy_fixed,
    renyi_cond_entropy_opt,
    supported_on,
)
from .hashfam import MAX_ENUMERATION, CQOperator, HashFamily, deviation_blocks
from .qops import DensityOperator, dagger, haar_unitary, op_norm, partial_trace

EXACT_TOL = 1e-9
Z_SCORE = 3.0
DEFAULT_ALPHAS = tuple(round(1 + 0.1 * k, 10) for k in range(1, 11))

HOLDS, VIOLATED, INCONCLUSIVE, VACUOUS = "holds", "violated", "inconclusive", "vacuous"


# --- the two sides -----------------------------------------------------------

def lhs_exact(fam: HashFamily, state: CQOperator) -> float:
    """Exact ``E_h ||(R^h - U)(rho)||_1`` for an enumerable hash family.

    The difference is block diagonal on ``C``, so each trace norm is the sum
    over ``c`` of ``||sigma_E(c) - rho_E/|C| ||_1``.
    """
    if fam.size > MAX_ENUMERATION:
        raise ValueError(f"family of size {fam.size} is too large to enumerate; use lhs_mc")
    dev = deviation_blocks(fam, state)
    dev = 0.5 * (dev + dagger(dev))
    tn = np.abs(np.linalg.eigvalsh(dev)).sum(axis=(1, 2))
    return float(np.dot(fam.weights, tn))


@dataclass(frozen=True)
class LhsEstimate:
    mean: float
    stderr: float


def lhs_mc(ens, state, samples: int, rng: np.random.Generator) -> LhsEstimate:
    """Sample mean and standard error of ``||(R^h - U)(rho)||_1``.

    ``ens`` is a :class:`ChannelEnsemble` (``state`` a density operator or
    matrix on ``A x E``) or a :class:`HashFamily` (``state`` a CQ operator),
    in which case members are drawn from the family weights.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    if isinstance(ens, HashFamily):
        idx = rng.choice(ens.size, size=samples, p=ens.weights)
        dev = deviation_blocks(ens, state)[idx]
        dev = 0.5 * (dev + dagger(dev))
        vals = np.abs(np.linalg.eigvalsh(dev)).sum(axis=(1, 2))
    else:
        m = state.matrix if isinstance(state, DensityOperator) else np.asarray(state)
        vals = deviation_norms(ens, m, ens.sample(rng, samples), 1)
    est = mean_stderr(vals)
    return LhsEstimate(est.mean, est.stderr)


def rhs_bound(alpha: float, log_c: float, h_alpha: float, lam: float = 1.0) -> float:
    """Right-hand side of the bound; ``+inf`` when the entropy is ``-inf``."""
    alpha = float(alpha)
    if not 1 < alpha <= 2:
        raise ValueError(f"alpha must lie in (1, 2], got {alpha}")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if h_alpha == NEG_INFINITY:
        return math.inf
    beta = (alpha - 1) / alpha
    return 2.0 ** (2 / alpha - 1) * 2.0 ** (beta * (log_c - h_alpha + 2 * math.log2(lam)))


def verdict(lhs: float, stderr: float, rhs: float) -> str:
    if math.isinf(rhs):
        return VACUOUS
    if stderr == 0:
        return HOLDS if rhs - lhs >= -EXACT_TOL else VIOLATED
    if lhs + Z_SCORE * stderr <= rhs:
        return HOLDS
    if lhs - Z_SCORE * stderr > rhs:
        return VIOLATED
    return INCONCLUSIVE


# --- reports -----------------------------------------------------------------

def fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


@dataclass(frozen=True)
class BoundRow:
    alpha: float
    lhs: float
    stderr: float
    rhs: float
    slack: float
    verdict: str
    h_alpha: float = math.nan


@dataclass
class BoundReport:
    rows: list[BoundRow]
    metadata: dict = field(default_factory=dict)

    CSV_HEADER = ("alpha", "lhs", "stderr", "rhs", "slack", "verdict")

    @property
    def any_violated(self) -> bool:
        return any(r.verdict == VIOLATED for r in self.rows)

    @property
    def all_hold(self) -> bool:
        return all(r.verdict in (HOLDS, VACUOUS) for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_HEADER)
        for r in sorted(self.rows, key=lambda r: r.alpha):
            w.writerow([fmt(r.alpha), fmt(r.lhs), fmt(r.stderr), fmt(r.rhs), fmt(r.slack), r.verdict])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [{k: (fmt(v) if isinstance(v, float) else v) for k, v in asdict(r).items()}
                for r in sorted(self.rows, key=lambda r: r.alpha)]
        return json.dumps({"metadata": self.metadata, "rows": rows}, indent=2, sort_keys=True) + "\n"


def _as_density(state) -> DensityOperator:
    if isinstance(state, DensityOperator):
        return state
    if isinstance(state, CQOperator):
        return DensityOperator(state.to_matrix(), state.dims)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def verify_sweep(state, family, alphas: Sequence[float] = DEFAULT_ALPHAS,
                 sigma_mode: str = "marginal", sigma=None, rng: np.random.Generator | None = None,
                 samples: int = 2000, lam: float = 1.0,
                 opts: OptimizerSettings | None = None, seed: int | None = None) -> BoundReport:
    """Evaluate both sides of the bound on each ``alpha``.

    Parameters
    ----------
    state : CQState or DensityOperator
        ``rho_AE`` with dims ``(|A|, |E|)``.
    family : HashFamily or ChannelEnsemble
        Hash families need a CQ state and give an exact LHS; channel
        ensembles are estimated by Monte Carlo with ``samples`` draws.
    sigma_mode : {"marginal", "optimized", "explicit"}
        ``sigma_E`` used in the entropy: ``rho_E``, the per-alpha optimized
        witness, or the caller's ``sigma``.
    lam : float
        Randomizing constant of the family; 1 for the built-in families.
    """
    rho = _as_density(state)
    if len(rho.dims) != 2:
        raise ValueError("state must be bipartite (A, E)")
    dim_a, dim_e = rho.dims
    outside = False
    if isinstance(family, HashFamily):
        if not isinstance(state, CQOperator):
            raise TypeError("hash families act on CQ states; pass a CQState")
        if family.n_inputs != dim_a:
            raise ValueError(f"family expects |A|={family.n_inputs}, state has |A|={dim_a}")
        lhs, se = lhs_exact(family, state), 0.0
        dim_c = family.n_outputs
        fam_desc = family.describe()
    elif isinstance(family, ChannelEnsemble):
        if family.dim_a != dim_a:
            raise ValueError(f"ensemble expects |A|={family.dim_a}, state has |A|={dim_a}")
        if rng is None:
            raise ValueError("Monte Carlo LHS needs an rng")
        # the theorem pairs CQ states with hash families
        outside = isinstance(state, CQOperator)
        est = lhs_mc(family, rho, samples, rng)
        lhs, se = est.mean, est.stderr
        dim_c = family.dim_c
        fam_desc = {"name": family.name, "dim_c": family.dim_c, "dim_d": family.dim_d,
                    "samples": samples}
    else:
        raise TypeError(f"unsupported family type {type(family).__name__}")

    log_c = math.log2(dim_c)
    rho_e = partial_trace(rho.matrix, 1, rho.dims)
    if sigma_mode == "marginal":
        sig = rho_e
    elif sigma_mode == "explicit":
        if sigma is None:
            raise ValueError("sigma_mode='explicit' needs sigma")
        sig = sigma.matrix if isinstance(sigma, DensityOperator) else np.asarray(sigma, dtype=complex)
    elif sigma_mode != "optimized":
        raise ValueError(f"unknown sigma mode {sigma_mode!r}")
    support_ok = True if sigma_mode != "explicit" else supported_on(rho, sig)

    rows = []
    for a in sorted(float(x) for x in alphas):
        if sigma_mode == "optimized":
            h = renyi_cond_entropy_opt(rho, a, opts).value
        elif not support_ok:
            h = NEG_INFINITY
        else:
            h = renyi_cond_entropy_fixed(rho, sig, a)
        rhs = rhs_bound(a, log_c, h, lam)
        rows.append(BoundRow(a, lhs, se, rhs, rhs - lhs, verdict(lhs, se, rhs), h))

    meta = {
        "state": {"dims": list(rho.dims), "type": type(state).__name__},
        "family": fam_desc,
        "sigma_mode": sigma_mode,
        "support_ok": support_ok,
        "lambda": lam,
        "log_c_bits": log_c,
        "seed": seed,
        "outside_theorem": outside,
    }
    return BoundReport(rows, meta)


# --- 1-norm contraction of trace non-increasing CP maps on normal operators ---

def apply_kraus(kraus: np.ndarray, m: np.ndarray) -> np.ndarray:
    k = np.asarray(kraus)
    return np.einsum("rij,jk,rlk->il", k, m, k.conj())


@dataclass(frozen=True)
class ContractionCheck:
    lhs: float
    rhs: float
    ok: bool


def lemma_a1_check(kraus: np.ndarray, m: np.ndarray, tol: float = EXACT_TOL) -> ContractionCheck:
    """Check ``||N(M)||_1 <= ||M||_1`` for a trace non-increasing CP map and normal ``M``.

    ``kraus`` has shape ``(r, d_out, d_in)``. Raises ``ValueError`` when the
    map is trace increasing or ``M`` is not normal.
    """
    k = np.asarray(kraus, dtype=complex)
    if k.ndim == 2:
        k = k[None]
    m = np.asarray(m, dtype=complex)
    if m.shape != (k.shape[2], k.shape[2]):
        raise ValueError(f"operator shape {m.shape} does not match map input dim {k.shape[2]}")
    s = np.einsum("rji,rjk->ik", k.conj(), k)
    top = float(np.linalg.eigvalsh(0.5 * (s + dagger(s)))[-1])
    if top > 1 + 1e-10:
        raise ValueError(f"map is trace increasing (largest eigenvalue of sum K^dag K = {top:.6g})")
    if op_norm(m @ dagger(m) - dagger(m) @ m) > 1e-10:
        raise ValueError("operator is not normal")
    lhs = float(np.linalg.svd(apply_kraus(k, m), compute_uv=False).sum())
    rhs = float(np.linalg.svd(m, compute_uv=False).sum())
    return ContractionCheck(lhs, rhs, lhs <= rhs + tol)


def random_tni_cp_map(dim_in: int, dim_out: int, rng: np.random.Generator,
                      n_kraus: int | None = None) -> np.ndarray:
    """Random trace non-increasing CP map as Kraus operators ``(r, dim_out, dim_in)``.

    Ginibre Kraus operators rescaled so ``sum K^dag K`` has top eigenvalue
    ``s`` drawn from [0.5, 1]; half the draws use ``s = 1`` exactly.
    """
    r = n_kraus or int(rng.integers(1, dim_in * dim_out + 1))
    k = rng.standard_normal((r, dim_out, dim_in)) + 1j * rng.standard_normal((r, dim_out, dim_in))
    s = np.einsum("rji,rjk->ik", k.conj(), k)
    top = float(np.linalg.eigvalsh(s)[-1])
    scale = 1.0 if rng.random() < 0.5 else float(rng.uniform(0.5, 1.0))
    # keep the top eigenvalue a hair under the target so rounding cannot push it over 1
    return k * math.sqrt(scale * (1 - 1e-12) / top)


def isometry_map(dim_in: int, dim_out: int, rng: np.random.Generator) -> np.ndarray:
    """Single Kraus operator ``V`` with ``V^dag V = 1`` (needs ``dim_out >= dim_in``)."""
    if dim_out < dim_in:
        raise ValueError("isometry needs dim_out >= dim_in")
    return haar_unitary(dim_out, rng)[:, :dim_in][None]


def partial_trace_kraus(dim_keep: int, dim_traced: int) -> np.ndarray:
    """Kraus operators ``1 x <j|`` of the map tracing out the second factor."""
    eye = np.eye(dim_keep)
    return np.stack([np.kron(eye, np.eye(dim_traced)[j][None, :]) for j in range(dim_traced)])


def random_normal_operator(dim: int, rng: np.random.Generator, hermitian: bool = False) -> np.ndarray:
    """``W diag(l_i e^{i phi_i}) W^dag``: commuting unitary and PSD parts in a Haar eigenbasis."""
    w = haar_unitary(dim, rng)
    mags = rng.exponential(size=dim)
    if hermitian:
        phases = np.where(rng.random(dim) < 0.5, 1.0, -1.0)
    else:
        phases = np.exp(2j * np.pi * rng.random(dim))
    return (w * (mags * phases)) @ dagger(w)


@dataclass(frozen=True)
class ContractionSuite:
    trials: int
    failures: int
    worst_slack: float

    @property
    def ok(self) -> bool:
        return self.failures == 0


def lemma_a1_suite(trials: int, rng: np.random.Generator, min_dim: int = 2, max_dim: int = 6) -> ContractionSuite:
    """Random (map, normal operator) pairs with input/output dims in ``[min_dim, max_dim]``."""
    failures = 0
    worst = math.inf
    for i in range(trials):
        d_in = int(rng.integers(min_dim, max_dim + 1))
        d_out = int(rng.integers(min_dim, max_dim + 1))
        kraus = random_tni_cp_map(d_in, d_out, rng)
        m = random_normal_operator(d_in, rng, hermitian=bool(i % 2))
        res = lemma_a1_check(kraus, m)
        failures += not res.ok
        worst = min(worst, res.rhs - res.lhs)
    return ContractionSuite(trials, failures, worst)
