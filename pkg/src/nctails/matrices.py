"""Small dense matrix kernel.

Singular values by two-sided Jacobi (Kogbetliantz) rotations, Schatten
norms, the block description of a series and its s-sequence, and the
diagonal / off-diagonal split.
"""

from __future__ import annotations

import functools
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .sequences import lp_norm

__all__ = [
    "BlockSpec",
    "SVDConvergenceError",
    "as_matrix",
    "blocks_digest",
    "operator_norms",
    "s_sequence",
    "schatten_norm",
    "singular_values",
    "split_diag_offdiag",
]

MAX_SWEEPS = 30
OFFDIAG_RTOL = 1e-12
CLAMP_RTOL = 1e-13


class SVDConvergenceError(ArithmeticError):
    """Jacobi sweeps did not drive the off-diagonal mass below tolerance."""


def as_matrix(entries) -> np.ndarray:
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"expected a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


@functools.lru_cache(maxsize=64)
def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # circle-method tournament: each round is a set of disjoint index pairs
    # and every pair appears exactly once per sweep
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            p, q = players[i], players[m - 1 - i]
            if p >= 0 and q >= 0:
                ps.append(min(p, q))
                qs.append(max(p, q))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _offdiag_norm(a: np.ndarray) -> float:
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return math.sqrt(float(np.sum(off * off)))


def singular_values(entries) -> np.ndarray:
    """Singular values of a square matrix, non-increasing.

    Cyclic two-sided Jacobi: each 2x2 pivot block is first symmetrized by a
    left rotation and then diagonalized by a symmetric Jacobi rotation applied
    on both sides. Disjoint pivot pairs are rotated together.

    Raises
    ------
    SVDConvergenceError
        If the off-diagonal Frobenius mass is still above
        ``1e-12 * ||A||_F`` after 30 sweeps.
    """
    a = as_matrix(entries)
    d = a.shape[0]
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return np.zeros(d)
    a /= scale
    fro = float(np.sqrt(np.sum(a * a)))
    if d > 1:
        tol = OFFDIAG_RTOL * fro
        rounds = _round_robin(d)
        for _ in range(MAX_SWEEPS):
            if _offdiag_norm(a) <= tol:
                break
            for ps, qs in rounds:
                a = _rotate(a, ps, qs)
        else:
            if _offdiag_norm(a) > tol:
                raise SVDConvergenceError(
                    f"no convergence after {MAX_SWEEPS} sweeps "
                    f"(off-diagonal {_offdiag_norm(a):.3e}, tolerance {tol:.3e})"
                )
    sv = np.sort(np.abs(np.diag(a)))[::-1]
    sv[sv < CLAMP_RTOL * fro] = 0.0
    return scale * sv


def _rotate(a: np.ndarray, ps: np.ndarray, qs: np.ndarray) -> np.ndarray:
    w, x = a[ps, ps], a[ps, qs]
    y, z = a[qs, ps], a[qs, qs]

    # left rotation making the pivot block symmetric, |theta| <= pi/2
    flip = np.where(w + z < 0, -1.0, 1.0)
    theta = np.arctan2(flip * (x - y), flip * (w + z))
    c1, s1 = np.cos(theta), np.sin(theta)
    m11 = c1 * w - s1 * y
    m12 = c1 * x - s1 * z
    m22 = s1 * x + c1 * z

    # symmetric Schur rotation (Golub & Van Loan, sym.schur2)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        tau = (m22 - m11) / (2.0 * m12)
        tt = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
    tt = np.where(np.isfinite(tau), tt, 0.0)
    c2 = 1.0 / np.sqrt(1.0 + tt * tt)
    s2 = tt * c2

    # A <- L^T A R with L = Phi J and R = J, embedded as d x d rotations
    d = a.shape[0]
    lt = np.eye(d)
    r = np.eye(d)
    lt[ps, ps] = c1 * c2 - s1 * s2
    lt[ps, qs] = -s1 * c2 - c1 * s2
    lt[qs, ps] = c1 * s2 + s1 * c2
    lt[qs, qs] = c1 * c2 - s1 * s2
    r[ps, ps] = c2
    r[ps, qs] = s2
    r[qs, ps] = -s2
    r[qs, qs] = c2
    return lt @ a @ r


def schatten_norm(entries, p: float) -> float:
    """l_p norm of the singular values (p=inf operator, 2 Frobenius, 1 trace)."""
    return lp_norm(singular_values(entries), p)


def operator_norms(stack: np.ndarray) -> np.ndarray:
    """Largest singular value of each matrix in a ``(..., d, d)`` stack.

    LAPACK-backed batch path for the Monte Carlo hot loops; ``singular_values``
    remains the reference.
    """
    stack = np.asarray(stack, dtype=float)
    if stack.shape[-1] == 1:
        return np.abs(stack[..., 0, 0])
    return np.linalg.svd(stack, compute_uv=False)[..., 0]


def split_diag_offdiag(entries) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(A_d, A_ad)``: the diagonal part and the off-diagonal part."""
    a = as_matrix(entries)
    diag = np.diag(np.diag(a))
    return diag, a - diag


@dataclass(frozen=True)
class BlockSpec:
    """One term ``d_n tr(eps_n A_n)`` of the series.

    Exactly one of ``matrix`` (a ``d x d`` array) or ``singular_values``
    (``d`` nonnegative reals, standing for the diagonal matrix) is set.
    """

    d: int
    matrix: np.ndarray | None = None
    sv: np.ndarray | None = None

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"block dimension must be a positive integer, got {self.d}")
        object.__setattr__(self, "d", int(self.d))
        if (self.matrix is None) == (self.sv is None):
            raise ValueError("block needs exactly one of matrix or singular values")
        if self.matrix is not None:
            m = as_matrix(self.matrix)
            if m.shape[0] != self.d:
                raise ValueError(f"matrix is {m.shape[0]}x{m.shape[0]} but d={self.d}")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        else:
            s = np.array(self.sv, dtype=float).reshape(-1)
            if s.size != self.d:
                raise ValueError(f"{s.size} singular values given for d={self.d}")
            if not np.all(np.isfinite(s)) or np.any(s < 0):
                raise ValueError("singular values must be finite and nonnegative")
            s.setflags(write=False)
            object.__setattr__(self, "sv", s)

    @classmethod
    def from_singular_values(cls, values: Sequence[float]) -> BlockSpec:
        values = list(values)
        return cls(d=len(values), sv=np.asarray(values, dtype=float))

    @classmethod
    def from_matrix(cls, entries) -> BlockSpec:
        m = as_matrix(entries)
        return cls(d=m.shape[0], matrix=m)

    def singular_values(self) -> np.ndarray:
        if self.sv is not None:
            return np.sort(self.sv)[::-1]
        return singular_values(self.matrix)

    def dense(self) -> np.ndarray:
        """The block's matrix; the diagonal matrix for singular-value payloads."""
        if self.matrix is not None:
            return np.array(self.matrix)
        return np.diag(self.sv)

    def scaled(self, alpha: float) -> BlockSpec:
        if self.matrix is not None:
            return BlockSpec(self.d, matrix=alpha * self.matrix)
        return BlockSpec(self.d, sv=abs(alpha) * self.sv)

    def to_json(self) -> dict:
        if self.matrix is not None:
            return {"d": self.d, "matrix": self.matrix.tolist()}
        return {"d": self.d, "singular_values": self.sv.tolist()}


def s_sequence(blocks: Iterable[BlockSpec]) -> np.ndarray:
    """Each block's singular values repeated ``d_n`` times, merged and sorted
    non-increasingly."""
    parts = [np.repeat(b.singular_values(), b.d) for b in blocks]
    if not parts:
        return np.zeros(0)
    return np.sort(np.concatenate(parts))[::-1].copy()


def blocks_digest(blocks: Iterable[BlockSpec]) -> str:
    payload = json.dumps([b.to_json() for b in blocks], sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()
