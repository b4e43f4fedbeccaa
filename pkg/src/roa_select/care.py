"""Continuous algebraic Riccati equation for a single input column."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, NoStabilizingSolutionError, RoaSelectError
from .kernel import as_matrix, real_schur, reorder_schur, solve_sylvester

__all__ = ["RiccatiSolution", "solve_care", "care_residual"]

log = logging.getLogger(__name__)

_NEWTON_STEPS = 5


@dataclass(frozen=True)
class RiccatiSolution:
    """Stabilizing CARE solution and the LQ gain ``K = r^-1 b^T P``."""

    p_matrix: np.ndarray
    gain: np.ndarray
    residual_norm: float
    closed_loop_eigs: tuple[complex, ...]


def care_residual(a, b, q, r, p) -> float:
    """Frobenius norm of ``A^T P + P A - P B r^-1 B^T P + Q``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float).reshape(a.shape[0], -1)
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    pb = p @ b
    res = a.T @ p + p @ a - (pb @ pb.T) / float(r) + q
    return float(np.linalg.norm(res))


def _hamiltonian_solution(a, s, q) -> np.ndarray:
    m = a.shape[0]
    ham = np.block([[a, -s], [-q, -a.T]])
    schur, n_stable = reorder_schur(real_schur(ham), lambda ev: ev.real < 0)
    if n_stable != m:
        raise NoStabilizingSolutionError(
            f"Hamiltonian has {n_stable} stable eigenvalues, expected {m} "
            "(eigenvalues on the imaginary axis)"
        )
    basis = schur.orthogonal[:, :m]
    x1, x2 = basis[:m], basis[m:]
    if np.linalg.cond(x1) > 1e12:
        raise NoStabilizingSolutionError("invariant subspace basis is singular; pair not stabilizable")
    p = np.linalg.solve(x1.T, x2.T).T
    return 0.5 * (p + p.T)


def solve_care(a, b, q, r: float, residual_tol: float = 1e-8) -> RiccatiSolution:
    """Stabilizing solution of ``A^T P + P A - P B r^-1 B^T P + Q = 0``.

    The invariant subspace of the Hamiltonian matrix belonging to its stable
    eigenvalues gives a first solution, which is then polished by at most
    five Newton (Kleinman) steps for as long as the residual keeps falling.

    Parameters
    ----------
    a : array_like, shape (m, m)
    b : array_like, shape (m, 1)
    q : array_like, shape (m, m)
        Symmetric positive definite state weight.
    r : float
        Positive input weight.
    residual_tol : float
        The solution is rejected unless the residual is at most
        ``residual_tol * (1 + ||P||_F**2)``.

    Raises
    ------
    NoStabilizingSolutionError
        If the pair is not stabilizable or the result is not positive definite.
    """
    a = as_matrix(a, "a", square=True)
    m = a.shape[0]
    b = as_matrix(b, "b")
    if b.shape == (1, m) and m != 1:
        b = b.T
    if b.shape != (m, 1):
        raise DimensionError(f"b must be {m}x1, got {b.shape}")
    q = as_matrix(q, "q", square=True)
    if q.shape != (m, m):
        raise DimensionError(f"q must be {m}x{m}, got {q.shape}")
    if not r > 0:
        raise DomainError("r must be positive")

    s = (b @ b.T) / r
    p = _hamiltonian_solution(a, s, q)
    res = care_residual(a, b, q, r, p)
    for step in range(_NEWTON_STEPS):
        if res == 0.0:
            break
        ak = a - s @ p
        try:
            p_new = solve_sylvester(ak.T, ak, -(q + p @ s @ p))
        except RoaSelectError:
            break
        p_new = 0.5 * (p_new + p_new.T)
        res_new = care_residual(a, b, q, r, p_new)
        log.debug("newton step %d: residual %.3e -> %.3e", step, res, res_new)
        if not res_new < res:
            break
        p, res = p_new, res_new

    try:
        np.linalg.cholesky(p)
    except np.linalg.LinAlgError:
        raise NoStabilizingSolutionError("Riccati solution is not positive definite") from None
    gain = (b.T @ p) / r
    cl = real_schur(a - b @ gain).eigenvalues
    if any(ev.real >= 0 for ev in cl):
        raise NoStabilizingSolutionError("closed loop is not Hurwitz")
    pnorm = float(np.linalg.norm(p))
    if res > residual_tol * (1.0 + pnorm**2):
        raise NoStabilizingSolutionError(
            f"Riccati residual {res:.3e} exceeds tolerance for ||P|| = {pnorm:.3e}"
        )
    return RiccatiSolution(p, gain, res, cl)
