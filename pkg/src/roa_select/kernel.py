"""Dense real linear-algebra primitives.

Matrices are plain two-dimensional ``float64`` numpy arrays.  The real Schur
decomposition, its reordering and the Sylvester solver are implemented here
directly (Francis double-shift QR, adjacent block swapping, Bartels-Stewart
back substitution) so that every routine keeps its own convergence and
failure reporting.  LU and pivoted QR come from scipy.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import (
    ConvergenceError,
    DimensionError,
    DomainError,
    ReorderError,
    SingularEquationError,
)

__all__ = [
    "SchurForm",
    "as_matrix",
    "lu_determinant",
    "real_schur",
    "reorder_schur",
    "solve_sylvester",
    "numerical_rank",
    "schur_blocks",
]

_EPS = np.finfo(float).eps


def as_matrix(m, name: str = "matrix", *, square: bool = False) -> np.ndarray:
    """Return `m` as a finite 2-D float64 array (copy).

    Scalars become 1x1 matrices.  Raises `DimensionError` for the wrong rank
    or a non-square input when `square` is set, and `DomainError` for
    non-finite entries.
    """
    arr = np.array(m, dtype=float, ndmin=2)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class SchurForm:
    """Real Schur decomposition ``A = U T U^T``.

    `quasi_triangular` is upper triangular except for 2x2 diagonal blocks that
    carry complex-conjugate eigenvalue pairs.  Those blocks are kept in the
    standardized form ``[[a, b], [c, a]]`` with ``b * c < 0``.
    """

    orthogonal: np.ndarray
    quasi_triangular: np.ndarray
    eigenvalues: tuple[complex, ...]

    @property
    def blocks(self) -> list[tuple[int, int]]:
        """(start row, size) of each diagonal block."""
        return schur_blocks(self.quasi_triangular)

    @property
    def n(self) -> int:
        return self.quasi_triangular.shape[0]


def schur_blocks(t: np.ndarray) -> list[tuple[int, int]]:
    """Split a quasi-triangular matrix into its 1x1 and 2x2 diagonal blocks."""
    n = t.shape[0]
    blocks = []
    i = 0
    while i < n:
        if i + 1 < n and t[i + 1, i] != 0.0:
            blocks.append((i, 2))
            i += 2
        else:
            blocks.append((i, 1))
            i += 1
    return blocks


def _block_eigenvalues(t: np.ndarray) -> tuple[complex, ...]:
    eigs: list[complex] = []
    for start, size in schur_blocks(t):
        if size == 1:
            eigs.append(complex(t[start, start], 0.0))
        else:
            a = t[start, start]
            b = t[start, start + 1]
            c = t[start + 1, start]
            im = math.sqrt(abs(b)) * math.sqrt(abs(c))
            eigs.extend([complex(a, im), complex(a, -im)])
    return tuple(eigs)


def lu_determinant(m) -> float:
    """Determinant through LU factorization with partial pivoting."""
    a = as_matrix(m, "m", square=True)
    if a.shape[0] == 0:
        return 1.0
    with warnings.catch_warnings():
        # an exactly singular matrix is a valid input with determinant 0
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    swaps = int(np.count_nonzero(piv != np.arange(a.shape[0])))
    det = float(np.prod(np.diag(lu)))
    return -det if swaps % 2 else det


def numerical_rank(m, tol: float = 1e-9) -> int:
    """Rank from column-pivoted QR.

    Counts the diagonal entries of ``R`` whose magnitude exceeds
    ``tol * max|R_ii|``.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    a = np.array(m, dtype=float, ndmin=2)
    if a.size == 0:
        return 0
    r = scipy.linalg.qr(a, mode="r", pivoting=True, check_finite=False)[0]
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return 0
    return int(np.count_nonzero(diag > tol * diag.max()))


# --------------------------------------------------------------------------
# real Schur decomposition


def _house(x: np.ndarray) -> tuple[np.ndarray, float]:
    """Householder vector ``v`` and ``beta`` with ``(I - beta v v^T) x = alpha e_1``."""
    v = x.astype(float).copy()
    norm = math.sqrt(float(v @ v))
    if norm == 0.0:
        return v, 0.0
    alpha = -norm if v[0] >= 0 else norm
    v[0] -= alpha
    vv = float(v @ v)
    return v, (2.0 / vv if vv > 0 else 0.0)


def _hessenberg(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = a.shape[0]
    h = a.copy()
    q = np.eye(n)
    for k in range(n - 2):
        v, beta = _house(h[k + 1 :, k])
        if beta == 0.0:
            continue
        h[k + 1 :, k:] -= beta * np.outer(v, v @ h[k + 1 :, k:])
        h[:, k + 1 :] -= beta * np.outer(h[:, k + 1 :] @ v, v)
        q[:, k + 1 :] -= beta * np.outer(q[:, k + 1 :] @ v, v)
        h[k + 2 :, k] = 0.0
    return h, q


def _standardize_2x2(a: float, b: float, c: float, d: float):
    """Schur-factor the 2x2 block ``[[a, b], [c, d]]`` (LAPACK dlanv2).

    Returns the new entries and ``(cs, sn)`` such that
    ``[[a', b'], [c', d']] = G^T [[a, b], [c, d]] G`` with
    ``G = [[cs, -sn], [sn, cs]]``.  ``c' == 0`` iff the eigenvalues are real.
    """
    if c == 0.0:
        cs, sn = 1.0, 0.0
    elif b == 0.0:
        cs, sn = 0.0, 1.0
        a, d = d, a
        b = -c
        c = 0.0
    elif (a - d) == 0.0 and math.copysign(1.0, b) != math.copysign(1.0, c):
        cs, sn = 1.0, 0.0
    else:
        temp = a - d
        p = 0.5 * temp
        bcmax = max(abs(b), abs(c))
        bcmis = min(abs(b), abs(c)) * math.copysign(1.0, b) * math.copysign(1.0, c)
        scale = max(abs(p), bcmax)
        z = (p / scale) * p + (bcmax / scale) * bcmis
        if z >= 4.0 * _EPS:
            # real eigenvalues
            z = p + math.copysign(math.sqrt(scale) * math.sqrt(z), p)
            a = d + z
            d = d - (bcmax / z) * bcmis
            tau = math.hypot(c, z)
            cs = z / tau
            sn = c / tau
            b = b - c
            c = 0.0
        else:
            # complex or nearly equal real eigenvalues: equalize the diagonal
            sigma = b + c
            tau = math.hypot(sigma, temp)
            cs = math.sqrt(0.5 * (1.0 + abs(sigma) / tau))
            sn = -(p / (tau * cs)) * math.copysign(1.0, sigma)
            aa = a * cs + b * sn
            bb = -a * sn + b * cs
            cc = c * cs + d * sn
            dd = -c * sn + d * cs
            a = aa * cs + cc * sn
            b = bb * cs + dd * sn
            c = -aa * sn + cc * cs
            d = -bb * sn + dd * cs
            temp = 0.5 * (a + d)
            a = d = temp
            if c != 0.0:
                if b != 0.0:
                    if math.copysign(1.0, b) == math.copysign(1.0, c):
                        # real eigenvalues after all
                        sab = math.sqrt(abs(b))
                        sac = math.sqrt(abs(c))
                        p = math.copysign(sab * sac, c)
                        tau = 1.0 / math.sqrt(abs(b + c))
                        a = temp + p
                        d = temp - p
                        b = b - c
                        c = 0.0
                        cs1 = sab * tau
                        sn1 = sac * tau
                        temp = cs * cs1 - sn * sn1
                        sn = cs * sn1 + sn * cs1
                        cs = temp
                else:
                    b = -c
                    c = 0.0
                    temp = cs
                    cs = -sn
                    sn = temp
    return a, b, c, d, cs, sn


def _apply_standardization(t: np.ndarray, u: np.ndarray, i: int) -> bool:
    """Standardize the 2x2 block at rows ``i, i+1`` in place.

    Returns True when the block carries a complex pair.
    """
    a, b, c, d, cs, sn = _standardize_2x2(t[i, i], t[i, i + 1], t[i + 1, i], t[i + 1, i + 1])
    g = np.array([[cs, -sn], [sn, cs]])
    t[i : i + 2, :] = g.T @ t[i : i + 2, :]
    t[:, i : i + 2] = t[:, i : i + 2] @ g
    u[:, i : i + 2] = u[:, i : i + 2] @ g
    t[i, i], t[i, i + 1], t[i + 1, i], t[i + 1, i + 1] = a, b, c, d
    return c != 0.0


def _francis_step(h: np.ndarray, z: np.ndarray, lo: int, hi: int, s: float, t: float) -> None:
    """One implicit double-shift QR sweep on the active window ``[lo, hi]``."""
    n = h.shape[0]
    x = h[lo, lo] * h[lo, lo] + h[lo, lo + 1] * h[lo + 1, lo] - s * h[lo, lo] + t
    y = h[lo + 1, lo] * (h[lo, lo] + h[lo + 1, lo + 1] - s)
    w = h[lo + 1, lo] * h[lo + 2, lo + 1]
    for k in range(lo, hi - 1):
        v, beta = _house(np.array([x, y, w]))
        if beta != 0.0:
            q = max(lo, k - 1)
            h[k : k + 3, q:n] -= beta * np.outer(v, v @ h[k : k + 3, q:n])
            r = min(k + 3, hi)
            h[: r + 1, k : k + 3] -= beta * np.outer(h[: r + 1, k : k + 3] @ v, v)
            z[:, k : k + 3] -= beta * np.outer(z[:, k : k + 3] @ v, v)
        x = h[k + 1, k]
        y = h[k + 2, k]
        if k < hi - 2:
            w = h[k + 3, k]
    v, beta = _house(np.array([x, y]))
    if beta != 0.0:
        h[hi - 1 : hi + 1, hi - 2 : n] -= beta * np.outer(v, v @ h[hi - 1 : hi + 1, hi - 2 : n])
        h[: hi + 1, hi - 1 : hi + 1] -= beta * np.outer(h[: hi + 1, hi - 1 : hi + 1] @ v, v)
        z[:, hi - 1 : hi + 1] -= beta * np.outer(z[:, hi - 1 : hi + 1] @ v, v)
    # bulge chasing leaves round-off below the subdiagonal
    for j in range(lo, hi - 1):
        h[j + 2 : hi + 1, j] = 0.0


def real_schur(m, max_iter: int = 30) -> SchurForm:
    """Real Schur decomposition by Hessenberg reduction and Francis QR.

    Parameters
    ----------
    m : array_like, shape (n, n)
        Real square matrix.
    max_iter : int
        Maximum number of QR sweeps spent on any single eigenvalue (or
        conjugate pair) before giving up.  Exceptional shifts are used after
        every 10 unsuccessful sweeps.

    Returns
    -------
    SchurForm

    Raises
    ------
    ConvergenceError
        If an eigenvalue fails to deflate within `max_iter` sweeps.
    """
    a = as_matrix(m, "m", square=True)
    n = a.shape[0]
    if n == 0:
        return SchurForm(np.eye(0), np.zeros((0, 0)), ())
    h, z = _hessenberg(a)
    tol = 1e-12 * float(np.linalg.norm(h))

    hi = n - 1
    sweeps = 0
    while hi >= 0:
        if hi == 0:
            break
        lo = hi
        while lo > 0 and abs(h[lo, lo - 1]) > tol:
            lo -= 1
        if lo > 0:
            h[lo, lo - 1] = 0.0
        if lo == hi:
            hi -= 1
            sweeps = 0
            continue
        if lo == hi - 1:
            if not _apply_standardization(h, z, hi - 1):
                h[hi, hi - 1] = 0.0
            hi -= 2
            sweeps = 0
            continue
        sweeps += 1
        if sweeps > max_iter:
            raise ConvergenceError(
                f"QR iteration did not converge for row {hi} after {max_iter} sweeps",
                iterations=sweeps - 1,
            )
        if sweeps % 10 == 0:
            # ad hoc shifts as in LAPACK dlahqr, alternating between the top and
            # the bottom of the window; they break symmetric stalls such as the
            # +-lambda quadruples of Hamiltonian matrices
            if sweeps % 20 == 10:
                e = abs(h[lo + 1, lo]) + abs(h[lo + 2, lo + 1])
                d = 0.75 * e + h[lo, lo]
            else:
                e = abs(h[hi, hi - 1]) + abs(h[hi - 1, hi - 2])
                d = 0.75 * e + h[hi, hi]
            s, t = 2.0 * d, d * d + 0.4375 * e * e
        else:
            s = h[hi - 1, hi - 1] + h[hi, hi]
            t = h[hi - 1, hi - 1] * h[hi, hi] - h[hi - 1, hi] * h[hi, hi - 1]
            disc = 0.25 * s * s - t
            if disc >= 0.0:
                # real trailing eigenvalues: double the one nearer h[hi, hi]
                # (as dlahqr does) so +-lambda pairs are not shifted alike
                root = math.sqrt(disc)
                r1, r2 = 0.5 * s + root, 0.5 * s - root
                sigma = r1 if abs(r1 - h[hi, hi]) <= abs(r2 - h[hi, hi]) else r2
                s, t = 2.0 * sigma, sigma * sigma
        _francis_step(h, z, lo, hi, s, t)

    h = np.triu(h, -1)
    return SchurForm(z, h, _block_eigenvalues(h))


# --------------------------------------------------------------------------
# reordering


def _swap_blocks(t: np.ndarray, u: np.ndarray, p: int, n1: int, n2: int) -> None:
    """Exchange adjacent diagonal blocks of sizes `n1`, `n2` starting at row `p`."""
    win = slice(p, p + n1 + n2)
    t11 = t[p : p + n1, p : p + n1]
    t12 = t[p : p + n1, p + n1 : p + n1 + n2]
    t22 = t[p + n1 : p + n1 + n2, p + n1 : p + n1 + n2]
    kron = np.kron(np.eye(n2), t11) - np.kron(t22.T, np.eye(n1))
    pair = (p, p + n1)
    try:
        vec = np.linalg.solve(kron, t12.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise ReorderError(f"blocks at rows {pair} share an eigenvalue", pair) from exc
    x = vec.reshape(n1, n2, order="F")
    if not np.all(np.isfinite(x)):
        raise ReorderError(f"swap of blocks at rows {pair} is ill-conditioned", pair)

    dnorm = float(np.linalg.norm(t[win, win]))
    q, _ = np.linalg.qr(np.vstack([-x, np.eye(n2)]), mode="complete")
    t[win, :] = q.T @ t[win, :]
    t[:, win] = t[:, win] @ q
    u[:, win] = u[:, win] @ q

    below = t[p + n2 : p + n1 + n2, p : p + n2]
    if np.linalg.norm(below) > 100.0 * _EPS * max(dnorm, 1.0):
        raise ReorderError(
            f"swap of blocks at rows {pair} lost accuracy "
            f"(residual {np.linalg.norm(below):.3e})",
            pair,
        )
    below[...] = 0.0
    for start, size in ((p, n2), (p + n2, n1)):
        if size == 2 and not _apply_standardization(t, u, start):
            raise ReorderError(f"complex pair split while swapping blocks at rows {pair}", pair)


def reorder_schur(s: SchurForm, select: Callable[[complex], bool]) -> tuple[SchurForm, int]:
    """Move the selected eigenvalues to the leading diagonal blocks.

    `select` is evaluated once per diagonal block on its first eigenvalue, so a
    predicate on the real part never splits a conjugate pair.  Relative order
    inside the selected and the unselected groups is preserved.

    Returns the reordered form and the number of selected eigenvalues.
    """
    t = s.quasi_triangular.copy()
    u = s.orthogonal.copy()
    blocks = schur_blocks(t)
    eig_of_block = []
    idx = 0
    for _, size in blocks:
        eig_of_block.append(s.eigenvalues[idx])
        idx += size
    chosen = [bool(select(ev)) for ev in eig_of_block]
    sizes = [size for _, size in blocks]

    leading = 0  # number of blocks already in place at the top
    for j in range(len(sizes)):
        if not chosen[j]:
            continue
        for pos in range(j, leading, -1):
            start = sum(sizes[: pos - 1])
            _swap_blocks(t, u, start, sizes[pos - 1], sizes[pos])
            sizes[pos - 1], sizes[pos] = sizes[pos], sizes[pos - 1]
            chosen[pos - 1], chosen[pos] = chosen[pos], chosen[pos - 1]
        leading += 1

    t = np.triu(t, -1)
    n_selected = sum(size for size, c in zip(sizes, chosen) if c)
    return SchurForm(u, t, _block_eigenvalues(t)), n_selected


# --------------------------------------------------------------------------
# Sylvester equation


def _solve_quasi_triangular_sylvester(r: np.ndarray, s: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Solve ``R Y + Y S = F`` for upper quasi-triangular `R` and `S`."""
    k, m = f.shape
    y = np.zeros((k, m))
    rblocks = schur_blocks(r)
    for cj, cn in schur_blocks(s):
        cols = slice(cj, cj + cn)
        rhs_col = f[:, cols] - y[:, :cj] @ s[:cj, cols]
        for ri, rn in reversed(rblocks):
            rows = slice(ri, ri + rn)
            rhs = rhs_col[rows] - r[rows, ri + rn :] @ y[ri + rn :, cols]
            kron = np.kron(np.eye(cn), r[rows, rows]) + np.kron(s[cols, cols].T, np.eye(rn))
            vec = np.linalg.solve(kron, rhs.reshape(-1, order="F"))
            y[rows, cols] = vec.reshape(rn, cn, order="F")
    return y


def solve_sylvester(a, b, c, sep_tol: float = 1e-12) -> np.ndarray:
    """Solve ``a X + X b = c`` by the Bartels-Stewart method.

    Parameters
    ----------
    a : array_like, shape (k, k)
    b : array_like, shape (m, m)
    c : array_like, shape (k, m)
    sep_tol : float
        Relative separation below which the spectra of `a` and ``-b`` are
        treated as overlapping.

    Raises
    ------
    SingularEquationError
        If some eigenvalue pair satisfies
        ``|lambda(a) + mu(b)| <= sep_tol * (||a|| + ||b||)``.
    """
    a = as_matrix(a, "a", square=True) if np.size(a) else np.zeros((0, 0))
    b = as_matrix(b, "b", square=True) if np.size(b) else np.zeros((0, 0))
    k, m = a.shape[0], b.shape[0]
    c = np.array(c, dtype=float).reshape(k, m)
    if k == 0 or m == 0:
        return np.zeros((k, m))

    sa = real_schur(a)
    sb = real_schur(b)
    ea = np.array(sa.eigenvalues)
    eb = np.array(sb.eigenvalues)
    gap = np.min(np.abs(ea[:, None] + eb[None, :]))
    scale = float(np.linalg.norm(a) + np.linalg.norm(b))
    if gap <= sep_tol * max(scale, 1.0):
        raise SingularEquationError(
            f"spectra of a and -b overlap (min |lambda + mu| = {gap:.3e})"
        )
    f = sa.orthogonal.T @ c @ sb.orthogonal
    y = _solve_quasi_triangular_sylvester(sa.quasi_triangular, sb.quasi_triangular, f)
    return sa.orthogonal @ y @ sb.orthogonal.T
