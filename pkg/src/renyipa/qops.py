"""Dense complex linear algebra for small quantum systems.

Composite systems use row-major indexing with subsystems in the order
given by ``dims``: for ``dims = (dA, dB)`` the basis vector ``|a>|b>``
sits at index ``a * dB + b``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

TOL_HERM = 1e-10
TOL_PSD = 1e-10
TOL_TRACE = 1e-8
SUPPORT_CUTOFF = 1e-12


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Return a generator determined by ``(seed, stream)``.

    Distinct streams of the same seed are statistically independent.
    """
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def dagger(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def op_norm(x: np.ndarray) -> float:
    """Largest singular value."""
    if x.size == 0:
        return 0.0
    return float(np.linalg.norm(x, ord=2))


def hermitize(x: np.ndarray, tol: float = TOL_HERM) -> np.ndarray:
    """Return ``(X + X^dagger)/2``, rejecting inputs further than ``tol`` from Hermitian."""
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {x.shape}")
    dev = op_norm(x - dagger(x))
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian (deviation {dev:.3g})")
    return 0.5 * (x + dagger(x))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Unit-trace positive semidefinite matrix with subsystem dimensions.

    The matrix is Hermitized on construction; construction fails if it is
    not Hermitian, has eigenvalues below ``-TOL_PSD`` or trace away from 1.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims):
            raise ValueError(f"subsystem dimensions must be positive, got {dims}")
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density operator must be square, got shape {m.shape}")
        if int(np.prod(dims)) != m.shape[0]:
            raise ValueError(f"dims {dims} do not multiply to matrix side {m.shape[0]}")
        m = hermitize(m)
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > TOL_TRACE:
            raise ValueError(f"trace must be 1, got {tr}")
        lmin = float(np.linalg.eigvalsh(m)[0])
        if lmin < -TOL_PSD:
            raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {lmin:.3g})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def marginal(self, keep) -> "DensityOperator":
        """Reduced state on the subsystems listed in ``keep``."""
        keep = (keep,) if np.isscalar(keep) else tuple(keep)
        m = partial_trace(self.matrix, keep, self.dims)
        return DensityOperator(m, tuple(self.dims[k] for k in sorted(keep)))

    def __repr__(self):
        return f"DensityOperator(dims={self.dims})"


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product, first factor most significant."""
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, np.asarray(op))
    return out


def partial_trace(x: np.ndarray, keep, dims: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Parameters
    ----------
    x : ndarray
        Square matrix on the composite space.
    keep : int or sequence of int
        Indices (into ``dims``) of the subsystems to keep.
    dims : sequence of int
        Subsystem dimensions; their product must equal the matrix side.
    """
    x = np.asarray(x)
    dims = [int(d) for d in dims]
    keep = [keep] if np.isscalar(keep) else sorted(int(k) for k in keep)
    n = len(dims)
    if x.ndim != 2 or x.shape[0] != x.shape[1] or int(np.prod(dims)) != x.shape[0]:
        raise ValueError(f"dims {dims} incompatible with matrix of shape {x.shape}")
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} subsystems")
    t = x.reshape(dims + dims)
    traced = [k for k in range(n) if k not in keep]
    # einsum subscripts: row labels 0..n-1, column labels n..2n-1, traced columns reuse row labels
    rows = list(range(n))
    cols = [k if k in traced else n + k for k in range(n)]
    out_labels = [k for k in keep] + [n + k for k in keep]
    res = np.einsum(t, rows + cols, out_labels)
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return res.reshape(d, d)


def schatten_norm(x: np.ndarray, p: float) -> float:
    """Schatten p-norm ``tr[(X^dagger X)^{p/2}]^{1/p}`` from singular values."""
    if not p >= 1:
        raise ValueError(f"Schatten norm needs p >= 1, got {p}")
    s = np.linalg.svd(np.asarray(x, dtype=complex), compute_uv=False)
    if s.size == 0:
        return 0.0
    if np.isinf(p):
        return float(s[0])
    smax = s[0]
    if smax == 0:
        return 0.0
    # scaled to avoid overflow for large p
    return float(smax * np.sum((s / smax) ** p) ** (1.0 / p))


def support_mask(evals: np.ndarray) -> np.ndarray:
    """Boolean mask of eigenvalues counted as nonzero by the support cutoff."""
    lmax = evals.max() if evals.size else 0.0
    if lmax <= 0:
        return np.zeros(evals.shape, dtype=bool)
    return evals >= SUPPORT_CUTOFF * lmax


def herm_eig(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(hermitize(x))
    return w, v


def herm_power(x: np.ndarray, t: float) -> np.ndarray:
    """Matrix power of a PSD matrix, acting on its support only.

    Eigenvalues below ``SUPPORT_CUTOFF * lambda_max`` map to zero for every
    exponent, so negative powers are generalized inverses.
    """
    w, v = herm_eig(x)
    scale = max(1.0, float(np.abs(w).max()) if w.size else 1.0)
    if w.size and w[0] < -1e-8 * scale:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3g})")
    mask = support_mask(w)
    wp = np.zeros_like(w)
    wp[mask] = w[mask] ** t
    return (v * wp) @ dagger(v)


def support_projector(x: np.ndarray) -> np.ndarray:
    w, v = herm_eig(x)
    mask = support_mask(w)
    vs = v[:, mask]
    return vs @ dagger(vs)


def haar_unitary(dim: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-distributed unitary (or a stack of ``size`` of them).

    QR of a complex Ginibre matrix with the phases of ``diag(R)`` pushed into Q.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    shape = (dim, dim) if size is None else (size, dim, dim)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    ph = d / np.abs(d)
    return q * ph[..., None, :]


def random_density(dim: int, rank: int | None, rng: np.random.Generator,
                   dims: Sequence[int] | None = None) -> DensityOperator:
    """Random density matrix of the given rank, ``G G^dagger / tr`` with ``G`` Ginibre ``dim x rank``."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must lie in [1, {dim}], got {rank}")
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ dagger(g)
    m /= np.trace(m).real
    return DensityOperator(m, tuple(dims) if dims is not None else (dim,))


def maximally_entangled(d: int) -> DensityOperator:
    """``|Phi><Phi|`` with ``|Phi> = sum_i |ii>/sqrt(d)`` on ``d x d``."""
    psi = np.eye(d, dtype=complex).reshape(d * d) / np.sqrt(d)
    return DensityOperator(np.outer(psi, psi.conj()), (d, d))


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d
