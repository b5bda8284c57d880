"""Reproducible random generators.

Every random draw is a pure function of ``(master_seed, stream_path,
counter)``: the path is folded into a 64-bit key by a SplitMix64-style mixer
and the key seeds a SplitMix64 counter stream. Because nothing is stateful,
a trial can be regenerated on its own, batches of trials are produced with
vectorized integer arithmetic, and results do not depend on how work is
split across workers.

Normal variates come from the Box-Muller transform applied to consecutive
uniform pairs ``(2j, 2j+1)`` of the stream.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .matrices import operator_norms, split_diag_offdiag

__all__ = [
    "RngSubstream",
    "TruncationMode",
    "TruncationPolicy",
    "apply_truncation",
    "gaussian_matrix",
    "haar_orthogonal",
    "fold_keys",
    "parse_seed",
    "rademacher_signs",
    "stream_keys",
    "batch_uniforms",
    "batch_normals",
    "batch_signs",
    "batch_gaussian_matrices",
    "batch_haar",
    "truncation_mask",
]

_MASK64 = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)
_S11 = np.uint64(11)
_S63 = np.uint64(63)
_TWO_M53 = 2.0 ** -53

# redraws of a numerically singular Gaussian draw before giving up
_MAX_REDRAWS = 8


def parse_seed(value: int | str) -> int:
    """Accept a decimal int/str or a ``0x`` hex string; reduce mod 2**64."""
    if isinstance(value, str):
        text = value.strip().lower()
        try:
            value = int(text, 16) if text.startswith("0x") else int(text, 10)
        except ValueError:
            raise ValueError(f"seed must be a decimal or 0x-hex integer, got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValueError(f"seed must be an integer, got {value!r}")
    return int(value) & _MASK64


def _mix64(z: np.ndarray) -> np.ndarray:
    # wrapping uint64 arithmetic is intended
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def fold_keys(keys: np.ndarray, element) -> np.ndarray:
    """Extend the stream path behind each key by ``element``."""
    e = np.asarray(element).astype(np.uint64)
    with np.errstate(over="ignore"):
        return _mix64(keys ^ _mix64(e * _GAMMA + _GAMMA))


def stream_keys(master_seed: int, path: tuple[int, ...], last=None) -> np.ndarray:
    """Keys for ``path`` (and, if given, each element of ``last`` appended).

    Returns a uint64 array; shape ``()`` without ``last``, ``(len(last),)``
    with it.
    """
    key = _mix64(np.uint64(parse_seed(master_seed)))
    for element in path:
        key = fold_keys(key, int(element))
    if last is not None:
        key = fold_keys(key, np.asarray(last, dtype=np.int64))
    return key


def _bits(keys: np.ndarray, n: int, offset: int = 0) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint64)
    counters = np.arange(offset + 1, offset + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64(keys[..., None] + counters * _GAMMA)


def batch_uniforms(keys: np.ndarray, n: int, offset: int = 0) -> np.ndarray:
    """Uniforms on the open interval (0, 1), shape ``keys.shape + (n,)``."""
    return ((_bits(keys, n, offset) >> _S11).astype(np.float64) + 0.5) * _TWO_M53


def batch_normals(keys: np.ndarray, n: int, offset: int = 0) -> np.ndarray:
    pairs = (n + 1) // 2
    u = batch_uniforms(keys, 2 * pairs, offset)
    radius = np.sqrt(-2.0 * np.log(u[..., 0::2]))
    angle = 2.0 * np.pi * u[..., 1::2]
    z = np.empty(u.shape, dtype=np.float64)
    z[..., 0::2] = radius * np.cos(angle)
    z[..., 1::2] = radius * np.sin(angle)
    return z[..., :n]


def batch_signs(keys: np.ndarray, n: int, offset: int = 0) -> np.ndarray:
    top = (_bits(keys, n, offset) >> _S63).astype(np.float64)
    return 2.0 * top - 1.0


def batch_gaussian_matrices(keys: np.ndarray, d: int) -> np.ndarray:
    """Stack of ``d x d`` matrices with i.i.d. N(0, 1/d) entries."""
    z = batch_normals(keys, d * d)
    return z.reshape(np.shape(keys) + (d, d)) / math.sqrt(d)


def batch_haar(keys: np.ndarray, d: int) -> np.ndarray:
    """Stack of Haar-distributed orthogonal ``d x d`` matrices.

    QR of a standard Gaussian matrix with the columns of Q multiplied by the
    signs of R's diagonal. A draw whose R has a (numerically) zero diagonal
    entry is redrawn from the next block of ``d*d`` counters.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    shape = keys.shape
    flat = keys.reshape(-1)
    out = np.empty((flat.size, d, d))
    pending = np.arange(flat.size)
    for attempt in range(_MAX_REDRAWS):
        g = batch_normals(flat[pending], d * d, offset=attempt * d * d).reshape(-1, d, d)
        if d == 1:
            q = np.ones_like(g)
            diag = g[:, 0, :]
        else:
            q, r = np.linalg.qr(g)
            diag = np.diagonal(r, axis1=-2, axis2=-1)
        scale = np.max(np.abs(g), axis=(-2, -1))
        ok = np.all(np.abs(diag) > 1e-12 * scale[:, None], axis=-1)
        out[pending[ok]] = q[ok] * np.sign(diag[ok])[:, None, :]
        pending = pending[~ok]
        if pending.size == 0:
            return out.reshape(shape + (d, d))
    raise ArithmeticError(f"{pending.size} Gaussian draws stayed singular after {_MAX_REDRAWS} redraws")


@dataclass(frozen=True)
class RngSubstream:
    """An independent random stream addressed by ``(master_seed, path)``."""

    master_seed: int
    stream_path: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "master_seed", parse_seed(self.master_seed))
        object.__setattr__(self, "stream_path", tuple(int(e) for e in self.stream_path))

    def child(self, *elements: int) -> RngSubstream:
        return RngSubstream(self.master_seed, self.stream_path + tuple(elements))

    @property
    def key(self) -> np.ndarray:
        return stream_keys(self.master_seed, self.stream_path)

    def uniforms(self, n: int, offset: int = 0) -> np.ndarray:
        return batch_uniforms(self.key, n, offset)

    def normals(self, n: int, offset: int = 0) -> np.ndarray:
        return batch_normals(self.key, n, offset)


def gaussian_matrix(d: int, stream: RngSubstream) -> np.ndarray:
    """``d x d`` matrix of i.i.d. N(0,1)/sqrt(d) entries."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return batch_gaussian_matrices(stream.key, d)


def haar_orthogonal(d: int, stream: RngSubstream) -> np.ndarray:
    """Haar-distributed element of O(d)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return batch_haar(stream.key, d)


def rademacher_signs(n: int, stream: RngSubstream) -> np.ndarray:
    """``n`` independent fair signs in {-1, +1}."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return batch_signs(stream.key, n)


class TruncationMode(enum.Enum):
    WHOLE = "whole"
    DIAG_OFFDIAG = "diag_offdiag"


@dataclass(frozen=True)
class TruncationPolicy:
    """Zero a Gaussian block when its operator norm exceeds ``lam``.

    ``WHOLE`` tests ``||G||``; ``DIAG_OFFDIAG`` tests the diagonal and the
    off-diagonal parts separately.
    """

    lam: float = 4.0
    mode: TruncationMode = TruncationMode.WHOLE

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        object.__setattr__(self, "mode", TruncationMode(self.mode))


def truncation_mask(stack: np.ndarray, policy: TruncationPolicy) -> np.ndarray:
    """Boolean array, True where the block survives truncation."""
    stack = np.asarray(stack, dtype=float)
    if policy.mode is TruncationMode.WHOLE:
        return operator_norms(stack) <= policy.lam
    diag_norm = np.max(np.abs(np.diagonal(stack, axis1=-2, axis2=-1)), axis=-1)
    off = stack.copy()
    d = stack.shape[-1]
    off[..., np.arange(d), np.arange(d)] = 0.0
    return (diag_norm <= policy.lam) & (operator_norms(off) <= policy.lam)


def apply_truncation(g, policy: TruncationPolicy) -> np.ndarray:
    """Return ``g`` unchanged if it survives ``policy``, else the zero matrix."""
    g = np.array(g, dtype=float)
    if policy.mode is TruncationMode.DIAG_OFFDIAG:
        diag, off = split_diag_offdiag(g)
        keep = max(np.abs(np.diag(diag)).max(), operator_norms(off)) <= policy.lam
    else:
        keep = operator_norms(g) <= policy.lam
    return g if keep else np.zeros_like(g)
