"""Fully quantum randomizing channels: unitary conjugation followed by partial trace.

Input system ``A = C x D`` (C most significant); a member ``U`` maps
``rho_AE`` to ``tr_D[(U x 1_E) rho_AE (U x 1_E)^dagger]`` on ``C x E``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .qops import dagger, haar_unitary


def perfect_randomizer(dim_c: int) -> Callable[[np.ndarray], np.ndarray]:
    """The channel ``theta -> tr[theta] 1_C / |C|``."""
    if dim_c < 1:
        raise ValueError("dim_c must be >= 1")

    def channel(theta: np.ndarray) -> np.ndarray:
        return np.trace(np.asarray(theta)) * np.eye(dim_c, dtype=complex) / dim_c

    return channel


def randomize_ae(op: np.ndarray, dim_a: int, dim_c: int) -> np.ndarray:
    """``U_{A->C} x id_E`` applied to an operator on ``A x E``: ``1_C/|C| x tr_A[op]``."""
    op = np.asarray(op)
    dim_e = op.shape[0] // dim_a
    t = op.reshape(dim_a, dim_e, dim_a, dim_e)
    op_e = np.einsum("aiaj->ij", t)
    return np.kron(np.eye(dim_c), op_e) / dim_c


@dataclass(frozen=True)
class ChannelEnsemble:
    """Unitary-then-partial-trace channels on ``A = C x D``.

    With ``unitaries`` unset, members are Haar-random unitaries on ``A``;
    otherwise the ensemble is uniform over the given explicit list.
    """

    dim_c: int
    dim_d: int
    unitaries: np.ndarray | None = None

    def __post_init__(self):
        if self.dim_c < 1 or self.dim_d < 1:
            raise ValueError("dim_c and dim_d must be >= 1")
        if self.unitaries is not None:
            u = np.asarray(self.unitaries, dtype=complex)
            if u.ndim != 3 or u.shape[1:] != (self.dim_a, self.dim_a):
                raise ValueError(f"unitaries must have shape (k, {self.dim_a}, {self.dim_a})")
            object.__setattr__(self, "unitaries", u)

    @property
    def dim_a(self) -> int:
        return self.dim_c * self.dim_d

    @property
    def name(self) -> str:
        kind = "haar" if self.unitaries is None else f"explicit[{len(self.unitaries)}]"
        return f"{kind}(C={self.dim_c},D={self.dim_d})"

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.unitaries is None:
            return haar_unitary(self.dim_a, rng, size=size)
        return self.unitaries[rng.integers(len(self.unitaries), size=size)]

    def apply(self, unitaries: np.ndarray, op: np.ndarray) -> np.ndarray:
        """Apply one member (``(dA, dA)``) or a stack of members to ``op`` on ``A x E``."""
        op = np.asarray(op, dtype=complex)
        dim_e = op.shape[0] // self.dim_a
        if dim_e * self.dim_a != op.shape[0]:
            raise ValueError(f"operator of side {op.shape[0]} is not on A x E with |A|={self.dim_a}")
        u = np.asarray(unitaries)
        single = u.ndim == 2
        u = u[None] if single else u
        ue = np.kron(u, np.eye(dim_e)) if dim_e > 1 else u
        conj = ue @ op @ dagger(ue)
        dc, dd = self.dim_c, self.dim_d
        t = conj.reshape(-1, dc, dd, dim_e, dc, dd, dim_e)
        out = np.einsum("nadebdf->naebf", t).reshape(-1, dc * dim_e, dc * dim_e)
        return out[0] if single else out

    def reference(self, op: np.ndarray) -> np.ndarray:
        return randomize_ae(op, self.dim_a, self.dim_c)


def haar_family(dim_c: int, dim_d: int, dim_a: int | None = None) -> ChannelEnsemble:
    if dim_a is not None and dim_c * dim_d != dim_a:
        raise ValueError(f"dim_c * dim_d = {dim_c * dim_d} does not match |A| = {dim_a}")
    return ChannelEnsemble(dim_c, dim_d)


def random_ae_operator(dim: int, rng: np.random.Generator, kind: str) -> np.ndarray:
    """Random operator on ``A x E`` of class ``state``/``hermitian``/``normal``/``general``."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    if kind == "general":
        return z
    if kind == "state":
        m = z @ dagger(z)
        return m / np.trace(m).real
    q, _ = np.linalg.qr(z)
    ev = rng.standard_normal(dim).astype(complex)
    if kind == "normal":
        ev = ev + 1j * rng.standard_normal(dim)
    elif kind != "hermitian":
        raise ValueError(f"unknown operator kind {kind!r}")
    return (q * ev) @ dagger(q)


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    stderr: float
    n: int


def mean_stderr(values: Sequence[float]) -> MeanEstimate:
    """Sample mean (compensated sum) and standard error of the mean."""
    v = np.asarray(values, dtype=float)
    n = len(v)
    mean = math.fsum(v) / n
    if n < 2:
        return MeanEstimate(mean, math.inf, n)
    var = math.fsum((v - mean) ** 2) / (n - 1)
    return MeanEstimate(mean, math.sqrt(var / n), n)


def deviation_norms(ens: ChannelEnsemble, op: np.ndarray, unitaries: np.ndarray, p: int) -> np.ndarray:
    """Schatten-``p`` norms (``p`` in {1, 2}) of ``(R^U - U)(op)`` for each sampled ``U``."""
    out = ens.apply(unitaries, op) - ens.reference(op)[None]
    if p == 2:
        return np.sqrt(np.sum(np.abs(out) ** 2, axis=(1, 2)))
    if p == 1:
        return np.linalg.svd(out, compute_uv=False).sum(axis=1)
    raise ValueError("only p in {1, 2} supported")


@dataclass(frozen=True)
class QuantumLambdaEstimate:
    max_ratio: float
    ratios: np.ndarray
    stderrs: np.ndarray

    @property
    def max_upper(self) -> float:
        """Largest ``ratio + 3 stderr`` over the trials."""
        return float(np.max(self.ratios + 3 * self.stderrs))


def randomizing_ratio_q(ens: ChannelEnsemble, op: np.ndarray, samples: int,
                        rng: np.random.Generator) -> MeanEstimate:
    """Monte Carlo ``E_U ||(R^U - U)(op)||_2 / ||op||_2``."""
    nrm = float(np.linalg.norm(op))
    vals = deviation_norms(ens, op, ens.sample(rng, samples), 2)
    est = mean_stderr(vals)
    if nrm == 0:
        return MeanEstimate(0.0, 0.0, est.n)
    return MeanEstimate(est.mean / nrm, est.stderr / nrm, est.n)


def empirical_lambda_q(ens: ChannelEnsemble, trials: int, samples: int, rng: np.random.Generator,
                       dim_e: int = 2,
                       kinds: Sequence[str] = ("state", "hermitian", "normal", "general")
                       ) -> QuantumLambdaEstimate:
    if trials < 1 or samples < 1:
        raise ValueError("trials and samples must be >= 1")
    ratios = np.empty(trials)
    errs = np.empty(trials)
    for i in range(trials):
        op = random_ae_operator(ens.dim_a * dim_e, rng, kinds[i % len(kinds)])
        est = randomizing_ratio_q(ens, op, samples, rng)
        ratios[i], errs[i] = est.mean, est.stderr
    return QuantumLambdaEstimate(float(ratios.max()), ratios, errs)
