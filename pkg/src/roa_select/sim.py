"""Saturated closed-loop simulation and empirical ROA checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .roa import EllipsoidRoa, boundary_points

__all__ = [
    "ControlLaw",
    "TrajectoryRecord",
    "VerificationReport",
    "saturate",
    "simulate",
    "verify_roa",
    "write_trajectory_csv",
]


def saturate(u: float, limit: float) -> float:
    """``sign(u) * min(limit, |u|)``."""
    if not limit > 0:
        raise DomainError("saturation limit must be positive")
    return max(-limit, min(limit, u))


@dataclass(frozen=True)
class ControlLaw:
    """State feedback ``u = -gain @ x`` passed through a symmetric saturation.

    The split into equal low-gain and high-gain halves is kept for reporting;
    the dynamics always see ``sat(u)`` of the total law.
    """

    gain: np.ndarray
    saturation_limit: float = 1.0

    def __post_init__(self):
        g = np.array(self.gain, dtype=float).reshape(1, -1)
        g.flags.writeable = False
        object.__setattr__(self, "gain", g)
        if not self.saturation_limit > 0:
            raise DomainError("saturation limit must be positive")

    @property
    def low_gain(self) -> np.ndarray:
        return self.gain / 2

    @property
    def high_gain(self) -> np.ndarray:
        return self.gain / 2


@dataclass(frozen=True)
class TrajectoryRecord:
    """One simulated trajectory, a row per integration step.

    Arrays share their first dimension.  `truncated` marks an early stop by
    the divergence guard.
    """

    times: np.ndarray
    states: np.ndarray
    inputs_unsaturated: np.ndarray
    inputs_applied: np.ndarray
    lyapunov_values: np.ndarray
    converged: bool
    truncated: bool = False


@dataclass(frozen=True)
class VerificationReport:
    samples_total: int
    samples_converged: int
    samples_failed: int
    worst_lyapunov_increase: float
    boundary_scale: float
    passed: bool


def _check_system(a, b, law: ControlLaw):
    a = np.array(a, dtype=float, ndmin=2)
    m = a.shape[0]
    if a.shape != (m, m):
        raise DimensionError("system matrix must be square")
    b = np.array(b, dtype=float).reshape(-1, 1)
    if b.shape[0] != m or law.gain.shape[1] != m:
        raise DimensionError(f"input column and gain must have length {m}")
    return a, b


def _integrate(a, b, gain, limit, x0, step, nsteps, guard, shape, record=False):
    """Fixed-step RK4 on a batch of initial states (columns of `x0`).

    Returns the final states, the divergence mask, the worst per-step increase
    of ``x^T P x`` for each column and, when `record` is set, the stacked
    states of a single-column batch up to the stopping step.
    """
    x = x0.copy()
    diverged = np.zeros(x.shape[1], dtype=bool)
    worst = np.full(x.shape[1], -np.inf)
    lyap = np.einsum("ij,ik,kj->j", x, shape, x)
    states = [x[:, 0].copy()] if record else None

    def f(z):
        u = np.clip(-(gain @ z), -limit, limit)
        return a @ z + b @ u

    h = step
    for _ in range(nsteps):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        new_lyap = np.einsum("ij,ik,kj->j", x, shape, x)
        worst = np.maximum(worst, new_lyap - lyap)
        lyap = new_lyap
        if record:
            states.append(x[:, 0].copy())
        blown = np.linalg.norm(x, axis=0) > guard
        if blown.any():
            diverged |= blown
            if record:
                break
            # frozen at the origin so the rest of the batch can continue
            x[:, blown] = 0.0
            lyap[blown] = 0.0
    return x, diverged, worst, (np.array(states) if record else None)


def simulate(
    a,
    b,
    law: ControlLaw,
    x0,
    horizon: float = 50.0,
    step: float = 1e-3,
    conv_tol: float | None = None,
    divergence_guard: float = 1e6,
    shape=None,
) -> TrajectoryRecord:
    """Integrate ``dx/dt = A x + b sat(-K x)`` with classical RK4.

    Parameters
    ----------
    a, b : array_like
        System matrix (m x m) and input column (length m).
    law : ControlLaw
    x0 : array_like
        Initial state.
    horizon, step : float
        Simulated time and fixed step.
    conv_tol : float, optional
        Converged iff ``||x(horizon)|| <= conv_tol``.  Defaults to
        ``1e-4 * (1 + ||x0||)``.
    divergence_guard : float
        The run stops (not converged, truncated) once ``||x||`` exceeds this.
    shape : array_like, optional
        Matrix of the recorded quadratic form; identity if omitted.
    """
    a, b = _check_system(a, b, law)
    m = a.shape[0]
    x0 = np.array(x0, dtype=float).reshape(-1)
    if x0.size != m:
        raise DimensionError(f"initial state has length {x0.size}, expected {m}")
    if not step > 0 or horizon < step:
        raise DomainError("need step > 0 and horizon >= step")
    p = np.eye(m) if shape is None else np.array(shape, dtype=float)
    if conv_tol is None:
        conv_tol = 1e-4 * (1.0 + float(np.linalg.norm(x0)))
    nsteps = int(round(horizon / step))

    _, diverged, _, states = _integrate(
        a, b, law.gain, law.saturation_limit, x0[:, None], step, nsteps, divergence_guard, p, record=True
    )
    times = step * np.arange(states.shape[0])
    raw = -(states @ law.gain[0])
    applied = np.clip(raw, -law.saturation_limit, law.saturation_limit)
    lyap = np.einsum("ti,ij,tj->t", states, p, states)
    converged = (not diverged[0]) and float(np.linalg.norm(states[-1])) <= conv_tol
    return TrajectoryRecord(times, states, raw, applied, lyap, converged, bool(diverged[0]))


def verify_roa(
    a,
    b,
    law: ControlLaw,
    roa: EllipsoidRoa,
    samples: int | None = None,
    boundary_scale: float = 0.99,
    horizon: float = 50.0,
    step: float = 1e-3,
    divergence_guard: float = 1e6,
    lyapunov_slack: float = 1e-8,
) -> VerificationReport:
    """Simulate from scaled boundary points of `roa` and check contraction.

    A sample passes when its trajectory converges (``||x(T)|| <= 1e-4 (1 +
    ||x0||)``) and ``x^T P x`` never grows by more than
    ``lyapunov_slack * radius`` in one step.
    """
    if not 0 < boundary_scale <= 1:
        raise DomainError("boundary_scale must lie in (0, 1]")
    a, b = _check_system(a, b, law)
    m = roa.dimension
    if a.shape[0] != m:
        raise DimensionError("ellipsoid and system dimensions differ")
    if samples is None:
        samples = 32 if m <= 2 else 128
    if samples < 1:
        raise DomainError("samples must be at least 1")

    if m == 1:
        end = math.sqrt(roa.radius / roa.shape[0, 0])
        pts = np.array([[end], [-end]])
    else:
        pts = boundary_points(roa, max(samples, 3))[:samples]
    x0 = boundary_scale * pts.T
    nsteps = int(round(horizon / step))
    xf, diverged, worst, _ = _integrate(
        a, b, law.gain, law.saturation_limit, x0, step, nsteps, divergence_guard, roa.shape
    )
    tol = 1e-4 * (1.0 + np.linalg.norm(x0, axis=0))
    converged = (~diverged) & (np.linalg.norm(xf, axis=0) <= tol)
    contracting = worst <= lyapunov_slack * roa.radius
    ok = converged & contracting
    worst_inc = float(np.max(worst)) if worst.size else 0.0
    return VerificationReport(
        samples_total=int(x0.shape[1]),
        samples_converged=int(converged.sum()),
        samples_failed=int((~ok).sum()),
        worst_lyapunov_increase=worst_inc,
        boundary_scale=boundary_scale,
        passed=bool(ok.all()),
    )


def write_trajectory_csv(record: TrajectoryRecord, fh) -> None:
    """CSV with header ``t,x1..xn,u_raw,u_sat,V`` at full double precision."""
    n = record.states.shape[1]
    header = ",".join(["t"] + [f"x{i + 1}" for i in range(n)] + ["u_raw", "u_sat", "V"])
    table = np.column_stack(
        [record.times, record.states, record.inputs_unsaturated, record.inputs_applied, record.lyapunov_values]
    )
    np.savetxt(fh, table, delimiter=",", header=header, comments="", fmt="%.17g")
