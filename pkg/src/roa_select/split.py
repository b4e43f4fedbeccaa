"""Decoupling of a network into anti-stable and stable subsystems.

The transform ``x = V z`` is assembled in three stages:

1. an ordered real Schur form puts the anti-stable eigenvalues first;
2. a Sylvester solve removes the coupling block between the two groups;
3. inside each group the remaining triangular coupling is removed as well,
   so that every real eigenvalue gets its own eigenvector column.

Columns of ``V`` are finally scaled to unit 2-norm.  For a diagonalizable
matrix with real spectrum this makes ``V`` the unit-norm eigenvector matrix
(up to column signs and order, neither of which changes any ellipsoid
measure computed downstream).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CenterSpectrumError, DimensionError, RoaSelectError
from .kernel import as_matrix, real_schur, reorder_schur, schur_blocks, solve_sylvester

__all__ = ["SubsystemSplit", "split_spectrum", "partition_input", "transform_state"]

# Beyond this the within-group eigenbasis is too ill-conditioned to trust and
# the Schur basis of that group is kept.
_MAX_COUPLING_NORM = 1e8


@dataclass(frozen=True)
class SubsystemSplit:
    """Similarity transform separating the anti-stable modes.

    Attributes
    ----------
    k : int
        Number of anti-stable states.
    transform, transform_inverse : ndarray, shape (n, n)
        ``V`` and ``V^-1`` with ``x = V z``.
    antistable_block : ndarray, shape (k, k)
    stable_block : ndarray, shape (n-k, n-k)
    eigenvalues : tuple of complex
        Spectrum of the original matrix, anti-stable eigenvalues first.
    """

    k: int
    transform: np.ndarray
    transform_inverse: np.ndarray
    antistable_block: np.ndarray
    stable_block: np.ndarray
    eigenvalues: tuple[complex, ...]

    @property
    def n(self) -> int:
        return self.transform.shape[0]


def _decouple_group(t: np.ndarray) -> np.ndarray:
    """Unit upper block-triangular ``Y`` with ``Y^-1 T Y`` block diagonal.

    `t` is quasi-triangular.  Falls back to the identity if two diagonal
    blocks cannot be separated reliably (repeated or clustered eigenvalues).
    """
    m = t.shape[0]
    y = np.eye(m)
    blocks = schur_blocks(t)
    for start, size in blocks[:-1]:
        head = slice(start, start + size)
        tail = slice(start + size, m)
        # current t (already transformed) has zero coupling left of `start`
        try:
            x = solve_sylvester(t[head, head], -t[tail, tail], -t[head, tail])
        except RoaSelectError:
            return np.eye(m)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > _MAX_COUPLING_NORM:
            return np.eye(m)
        w = np.eye(m)
        w[head, tail] = x
        w_inv = np.eye(m)
        w_inv[head, tail] = -x
        t = w_inv @ t @ w
        t[tail, head] = 0.0
        t[head, tail] = 0.0
        y = y @ w
    return y


def split_spectrum(a, margin: float = 1e-8) -> SubsystemSplit:
    """Split `a` into decoupled anti-stable and stable blocks.

    Raises
    ------
    CenterSpectrumError
        If some eigenvalue has ``|Re| < margin``.
    RoaSelectError
        If the decoupled transform fails its accuracy check.
    """
    a = as_matrix(a, "a", square=True)
    n = a.shape[0]
    schur = real_schur(a)
    center = [ev for ev in schur.eigenvalues if abs(ev.real) < margin]
    if center:
        listing = ", ".join(f"{ev.real:.6g}{ev.imag:+.6g}j" for ev in center)
        raise CenterSpectrumError(f"eigenvalues within {margin:g} of the imaginary axis: {listing}", center)
    schur, k = reorder_schur(schur, lambda ev: ev.real > 0)
    u = schur.orthogonal
    t = schur.quasi_triangular

    w = np.eye(n)
    w_inv = np.eye(n)
    if 0 < k < n:
        x = solve_sylvester(t[:k, :k], -t[k:, k:], -t[:k, k:])
        w[:k, k:] = x
        w_inv[:k, k:] = -x

    y = np.zeros((n, n))
    y[:k, :k] = _decouple_group(t[:k, :k])
    y[k:, k:] = _decouple_group(t[k:, k:])
    y_inv = np.linalg.inv(y)

    v = u @ w @ y
    scale = np.linalg.norm(v, axis=0)
    v = v / scale
    v_inv = (scale[:, None] * y_inv) @ w_inv @ u.T

    at = v_inv @ a @ v
    coupling = np.linalg.norm(at[:k, k:]) + np.linalg.norm(at[k:, :k])
    if coupling > 1e-8 * max(float(np.linalg.norm(a)), 1e-300):
        raise RoaSelectError(f"spectral decoupling is ill-conditioned (coupling {coupling:.3e})")
    return SubsystemSplit(
        k=k,
        transform=v,
        transform_inverse=v_inv,
        antistable_block=at[:k, :k].copy(),
        stable_block=at[k:, k:].copy(),
        eigenvalues=schur.eigenvalues,
    )


def partition_input(split: SubsystemSplit, b) -> tuple[np.ndarray, np.ndarray]:
    """Rows of ``V^-1 b`` belonging to the anti-stable and the stable part."""
    b = np.asarray(b, dtype=float).reshape(-1, 1)
    if b.shape[0] != split.n:
        raise DimensionError(f"input has {b.shape[0]} rows, expected {split.n}")
    bt = split.transform_inverse @ b
    return bt[: split.k], bt[split.k :]


def transform_state(split: SubsystemSplit, x, direction: str = "forward") -> np.ndarray:
    """``z = V^-1 x`` (forward) or ``x = V z`` (inverse)."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != split.n:
        raise DimensionError(f"state has length {x.shape[0]}, expected {split.n}")
    if direction == "forward":
        return split.transform_inverse @ x
    if direction == "inverse":
        return split.transform @ x
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
