"""Strongly 2-universal hashing over GF(2^n) and the induced CQ channels.

A hash ``h: {0,1}^n -> {0,1}^m`` acts on a CQ operator
``sum_a |a><a| x X_E(a)`` by moving block ``a`` to output symbol ``h(a)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .qops import dagger, herm_eig

# bit k of the integer is the coefficient of x^k
IRREDUCIBLE = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0b100011011,
}

MAX_BITS = 8
MAX_ENUMERATION = 1 << 16


def gf_mul(a: int, b: int, n: int) -> int:
    """Product in GF(2^n) with the fixed polynomial basis of ``IRREDUCIBLE[n]``."""
    poly = IRREDUCIBLE[n]
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> n:
            a ^= poly
    return out


def gf_mul_table(n: int) -> np.ndarray:
    size = 1 << n
    return np.array([[gf_mul(a, b, n) for b in range(size)] for a in range(size)], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class HashFamily:
    """Finite family of functions ``{0..|A|-1} -> {0..|C|-1}`` with weights.

    ``table[k, a]`` is the output of member ``k`` on input ``a``.
    """

    table: np.ndarray
    n_outputs: int
    weights: np.ndarray | None = None
    n_bits: int | None = None
    m_bits: int | None = None
    params: tuple[tuple[int, int], ...] | None = None
    poly: int | None = None
    name: str = "custom"
    uniform: bool = field(init=False, default=True)

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.int64)
        if t.ndim != 2 or t.shape[0] < 1:
            raise ValueError("table must be a nonempty 2-d array (members x inputs)")
        if t.min() < 0 or t.max() >= self.n_outputs:
            raise ValueError("table entries must lie in range(n_outputs)")
        if self.weights is None:
            w = np.full(t.shape[0], 1.0 / t.shape[0])
            uniform = True
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (t.shape[0],) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
                raise ValueError("weights must be a nonnegative vector summing to 1")
            uniform = bool(np.all(w == w[0]))
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "uniform", uniform)

    @property
    def size(self) -> int:
        return self.table.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.table.shape[1]

    def __call__(self, k: int, a: int) -> int:
        return int(self.table[k, a])

    def describe(self) -> dict:
        return {"name": self.name, "size": self.size, "n_inputs": self.n_inputs,
                "n_outputs": self.n_outputs, "n_bits": self.n_bits, "m_bits": self.m_bits}


def affine_family(n: int, m: int) -> HashFamily:
    """All maps ``x -> low_m(a*x + b)`` over GF(2^n), uniform over ``(a, b)``.

    Member ``k`` has ``a = k >> n`` and ``b = k & (2^n - 1)``.
    """
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got n={n}, m={m}")
    if n > MAX_BITS:
        raise ValueError(f"n={n} exceeds the enumeration budget of {MAX_BITS} bits")
    size = 1 << n
    mul = gf_mul_table(n)
    a = np.repeat(np.arange(size), size)
    b = np.tile(np.arange(size), size)
    table = (mul[a] ^ b[:, None]) & ((1 << m) - 1)
    params = tuple(zip(a.tolist(), b.tolist()))
    return HashFamily(table, 1 << m, n_bits=n, m_bits=m, params=params,
                      poly=IRREDUCIBLE[n], name=f"affine(n={n},m={m})")


def identity_family(n: int) -> HashFamily:
    size = 1 << n
    return HashFamily(np.arange(size)[None, :], size, n_bits=n, m_bits=n, name=f"identity(n={n})")


def constant_family(n: int, m: int) -> HashFamily:
    """Every constant map ``{0,1}^n -> {0,1}^m``."""
    cs = 1 << m
    return HashFamily(np.repeat(np.arange(cs)[:, None], 1 << n, axis=1), cs,
                      n_bits=n, m_bits=m, name=f"constant(n={n},m={m})")


def family_from_table(table, n_outputs: int, weights=None, name: str = "custom") -> HashFamily:
    return HashFamily(np.asarray(table), n_outputs, weights=weights, name=name)


@dataclass(frozen=True)
class UniversalityReport:
    ok: bool
    worst_pair: tuple[int, int] | None
    worst_outputs: tuple[int, int] | None
    worst_deviation: Fraction


def verify_strong_2universal(fam: HashFamily) -> UniversalityReport:
    """Exhaustively check ``Pr[h(a)=c, h(a')=c'] = 1/|C|^2`` for all ``a != a'``.

    Probabilities are exact rationals: integer counts for uniform weights,
    ``Fraction`` of the float weights otherwise.
    """
    nA, nC = fam.n_inputs, fam.n_outputs
    if nA > 256:
        raise ValueError("verification is limited to |A| <= 256")
    target = Fraction(1, nC * nC)
    worst = Fraction(0)
    worst_pair = worst_out = None
    if nA < 2:
        return UniversalityReport(True, None, None, worst)
    t = fam.table
    if fam.uniform:
        denom = fam.size
        weights = None
    else:
        denom = None
        weights = [Fraction(float(w)) for w in fam.weights]
    for a in range(nA):
        # joint code (a', c, c') for all a' at once
        codes = (np.arange(nA)[None, :] * nC + t[:, [a]]) * nC + t
        if weights is None:
            counts = np.bincount(codes.ravel(), minlength=nA * nC * nC).reshape(nA, nC, nC)
            dev = np.abs(counts * nC * nC - denom)
            dev[a] = 0
            idx = np.unravel_index(int(np.argmax(dev)), dev.shape)
            d = Fraction(int(dev[idx]), denom * nC * nC)
            if d > worst:
                worst, worst_pair, worst_out = d, (a, int(idx[0])), (int(idx[1]), int(idx[2]))
        else:
            for a2 in range(nA):
                if a2 == a:
                    continue
                probs: dict[tuple[int, int], Fraction] = {}
                for k in range(fam.size):
                    key = (int(t[k, a]), int(t[k, a2]))
                    probs[key] = probs.get(key, Fraction(0)) + weights[k]
                for c in range(nC):
                    for c2 in range(nC):
                        d = abs(probs.get((c, c2), Fraction(0)) - target)
                        if d > worst:
                            worst, worst_pair, worst_out = d, (a, a2), (c, c2)
    return UniversalityReport(worst == 0, worst_pair, worst_out, worst)


# --- CQ operators -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CQOperator:
    """``sum_a |a><a| x blocks[a]``; ``blocks`` has shape ``(|A|, dE, dE)``."""

    blocks: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=complex)
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise ValueError(f"blocks must have shape (|A|, dE, dE), got {b.shape}")
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @property
    def n_symbols(self) -> int:
        return self.blocks.shape[0]

    @property
    def dim_e(self) -> int:
        return self.blocks.shape[1]

    @property
    def dims(self) -> tuple[int, int]:
        return (self.n_symbols, self.dim_e)

    def marginal_e(self) -> np.ndarray:
        return self.blocks.sum(axis=0)

    def pmf(self) -> np.ndarray:
        return np.einsum("aii->a", self.blocks).real

    def norm2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.blocks) ** 2)))

    def to_matrix(self) -> np.ndarray:
        nA, dE = self.dims
        out = np.zeros((nA * dE, nA * dE), dtype=complex)
        for a in range(nA):
            out[a * dE:(a + 1) * dE, a * dE:(a + 1) * dE] = self.blocks[a]
        return out

    @classmethod
    def from_matrix(cls, m: np.ndarray, n_symbols: int, tol: float = 1e-12):
        """Extract blocks, rejecting matrices with off-diagonal weight in the A basis."""
        m = np.asarray(m, dtype=complex)
        dE = m.shape[0] // n_symbols
        if n_symbols * dE != m.shape[0]:
            raise ValueError("matrix side is not a multiple of n_symbols")
        t = m.reshape(n_symbols, dE, n_symbols, dE).transpose(0, 2, 1, 3)
        blocks = t[np.arange(n_symbols), np.arange(n_symbols)]
        off = t.copy()
        off[np.arange(n_symbols), np.arange(n_symbols)] = 0
        if np.abs(off).max(initial=0.0) > tol:
            raise ValueError("operator is not classical on A")
        return cls(blocks)


class CQState(CQOperator):
    """CQ operator that is a normalized state (blocks PSD, total trace 1)."""

    def __post_init__(self):
        super().__post_init__()
        b = self.blocks
        herm_dev = np.abs(b - dagger(b)).max(initial=0.0)
        if herm_dev > 1e-10:
            raise ValueError("CQ state blocks must be Hermitian")
        if abs(self.pmf().sum() - 1) > 1e-8:
            raise ValueError("CQ state must have unit trace")
        for blk in b:
            if herm_eig(blk)[0][0] < -1e-10:
                raise ValueError("CQ state blocks must be positive semidefinite")


def random_cq_state(n_symbols: int, dim_e: int, rng: np.random.Generator,
                    rank: int | None = None) -> CQState:
    """Dirichlet(1,...,1) pmf with Ginibre-random blocks of the given rank."""
    p = rng.dirichlet(np.ones(n_symbols))
    r = dim_e if rank is None else rank
    blocks = np.empty((n_symbols, dim_e, dim_e), dtype=complex)
    for a in range(n_symbols):
        g = rng.standard_normal((dim_e, r)) + 1j * rng.standard_normal((dim_e, r))
        m = g @ dagger(g)
        blocks[a] = p[a] * m / np.trace(m).real
    return CQState(blocks)


OPERATOR_KINDS = ("state", "hermitian", "normal", "general")


def random_cq_operator(n_symbols: int, dim_e: int, rng: np.random.Generator,
                       kind: str = "general") -> CQOperator:
    """Random CQ operator; ``kind`` selects the block class.

    ``state`` gives a CQ state, ``hermitian``/``normal`` give blocks of that
    class with random spectra, ``general`` gives Ginibre blocks.
    """
    shape = (n_symbols, dim_e, dim_e)
    if kind == "state":
        return random_cq_state(n_symbols, dim_e, rng)
    if kind == "general":
        return CQOperator(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    if kind in ("hermitian", "normal"):
        z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        q, _ = np.linalg.qr(z)
        ev = rng.standard_normal((n_symbols, dim_e)).astype(complex)
        if kind == "normal":
            ev = ev + 1j * rng.standard_normal((n_symbols, dim_e))
        return CQOperator(np.einsum("aij,aj,akj->aik", q, ev, q.conj()))
    raise ValueError(f"unknown operator kind {kind!r}; choose from {OPERATOR_KINDS}")


def hash_channel_apply(fam: HashFamily, h: int, state: CQOperator) -> CQOperator:
    """Output blocks ``sum_{a: h(a)=c} X_E(a)`` on ``C x E``."""
    if not 0 <= h < fam.size:
        raise IndexError(f"member index {h} out of range for family of size {fam.size}")
    if state.n_symbols != fam.n_inputs:
        raise ValueError(f"state has {state.n_symbols} symbols, family expects {fam.n_inputs}")
    out = np.zeros((fam.n_outputs, state.dim_e, state.dim_e), dtype=complex)
    np.add.at(out, fam.table[h], state.blocks)
    cls = type(state)
    return cls(out)


def hash_outputs_all(fam: HashFamily, op: CQOperator) -> np.ndarray:
    """Output blocks for every member at once, shape ``(|H|, |C|, dE, dE)``."""
    nC, dE = fam.n_outputs, op.dim_e
    onehot = np.zeros((fam.size, nC, fam.n_inputs))
    k = np.repeat(np.arange(fam.size), fam.n_inputs)
    a = np.tile(np.arange(fam.n_inputs), fam.size)
    onehot[k, fam.table.ravel(), a] = 1.0
    flat = op.blocks.reshape(fam.n_inputs, dE * dE)
    return (onehot @ flat).reshape(fam.size, nC, dE, dE)


def deviation_blocks(fam: HashFamily, op: CQOperator) -> np.ndarray:
    """Blocks of ``(R^h - U)(op)`` for every member, shape ``(|H|, |C|, dE, dE)``."""
    out = hash_outputs_all(fam, op)
    return out - op.marginal_e()[None, None] / fam.n_outputs


@dataclass(frozen=True)
class FamilyAverage:
    mean: float
    stderr: float
    exact: bool


def family_average(fam: HashFamily, values_fn, rng: np.random.Generator | None = None,
                   max_members: int = MAX_ENUMERATION, samples: int = 4096) -> FamilyAverage:
    """Average ``values_fn(member_indices)`` over the family.

    Exact weighted enumeration when ``fam.size <= max_members``; otherwise
    ``samples`` members drawn from the weights, with the standard error.
    """
    if fam.size <= max_members:
        idx = np.arange(fam.size)
        vals = np.asarray(values_fn(idx), dtype=float)
        return FamilyAverage(float(np.dot(fam.weights, vals)), 0.0, True)
    if rng is None:
        raise ValueError("family too large to enumerate; pass an rng for subsampling")
    idx = rng.choice(fam.size, size=samples, p=fam.weights)
    vals = np.asarray(values_fn(idx), dtype=float)
    return FamilyAverage(math.fsum(vals) / len(vals), float(vals.std(ddof=1) / np.sqrt(len(vals))), False)


def _deviation_norm2(fam: HashFamily, op: CQOperator, idx: np.ndarray) -> np.ndarray:
    dev = deviation_blocks(fam, op)[idx]
    return np.sqrt(np.sum(np.abs(dev) ** 2, axis=(1, 2, 3)))


@dataclass(frozen=True)
class LambdaEstimate:
    max_ratio: float
    ratios: np.ndarray
    stderrs: np.ndarray


def randomizing_ratio_cq(fam: HashFamily, op: CQOperator,
                         rng: np.random.Generator | None = None) -> FamilyAverage:
    """``E_h ||(R^h - U)(op)||_2 / ||op||_2``."""
    nrm = op.norm2()
    avg = family_average(fam, lambda idx: _deviation_norm2(fam, op, idx), rng)
    if nrm == 0:
        return FamilyAverage(0.0, 0.0, avg.exact)
    return FamilyAverage(avg.mean / nrm, avg.stderr / nrm, avg.exact)


def empirical_lambda_cq(fam: HashFamily, trials: int, rng: np.random.Generator,
                        dim_e: int = 2, kinds: Iterable[str] = OPERATOR_KINDS) -> LambdaEstimate:
    """Largest observed 2-norm contraction ratio over random CQ operators.

    Operator classes cycle through ``kinds`` trial by trial.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    kinds = tuple(kinds)
    ratios = np.empty(trials)
    errs = np.empty(trials)
    for i in range(trials):
        op = random_cq_operator(fam.n_inputs, dim_e, rng, kinds[i % len(kinds)])
        r = randomizing_ratio_cq(fam, op, rng)
        ratios[i], errs[i] = r.mean, r.stderr
    return LambdaEstimate(float(ratios.max()), ratios, errs)


def second_moment(fam: HashFamily, op: CQOperator) -> float:
    """``E_h tr[R^h(op) R^h(op)^dagger]`` by exact enumeration."""
    out = hash_outputs_all(fam, op)
    return float(np.dot(fam.weights, np.sum(np.abs(out) ** 2, axis=(1, 2, 3))))


# --- serialization ----------------------------------------------------------

def dump_family(fam: HashFamily) -> str:
    """Text form of an affine family: header line then one ``a b`` hex pair per member."""
    if fam.params is None or fam.n_bits is None:
        raise ValueError("only parameterized (affine) families can be serialized")
    width = (fam.n_bits + 3) // 4
    lines = [f"n={fam.n_bits} m={fam.m_bits} poly={fam.poly:#x}"]
    lines += [f"{a:0{width}x} {b:0{width}x}" for a, b in fam.params]
    return "\n".join(lines) + "\n"


def load_family(text: str) -> HashFamily:
    """Parse the output of :func:`dump_family`; members may be any subset of ``(a, b)`` pairs."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty family file")
    try:
        header = dict(tok.split("=", 1) for tok in lines[0].split())
        n, m, poly = int(header["n"]), int(header["m"]), int(header["poly"], 0)
    except (KeyError, ValueError) as exc:
        raise ValueError(f"bad family header {lines[0]!r}") from exc
    if n not in IRREDUCIBLE or poly != IRREDUCIBLE[n] or not 1 <= m <= n:
        raise ValueError(f"unsupported family parameters n={n} m={m} poly={poly:#x}")
    params = []
    for ln in lines[1:]:
        a, b = (int(tok, 16) for tok in ln.split())
        if not (0 <= a < 1 << n and 0 <= b < 1 << n):
            raise ValueError(f"member {ln!r} out of range")
        params.append((a, b))
    if not params:
        raise ValueError("family file lists no members")
    mul = gf_mul_table(n)
    table = np.array([(mul[a] ^ b) & ((1 << m) - 1) for a, b in params])
    return HashFamily(table, 1 << m, n_bits=n, m_bits=m, params=tuple(params), poly=poly,
                      name=f"affine(n={n},m={m})" if len(params) == 1 << (2 * n) else "affine-subset")
