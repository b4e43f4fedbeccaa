"""Invariant ellipsoids of the saturated LQ loop and driver-node ranking.

For a candidate input column ``b`` the LQ law ``u = -r^-1 b^T P x`` keeps its
low-gain half unsaturated on ``{x : x^T P x <= delta}`` with

    delta = 4 r^2 u_max^2 / (b^T P b),

and that ellipsoid is contractively invariant.  Candidates are ranked by its
Lebesgue measure ``V_m delta^(m/2) / sqrt(det P)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, TypeVar

import numpy as np
from scipy.stats import norm, qmc

from .care import RiccatiSolution, solve_care
from .errors import (
    CenterSpectrumError,
    DegenerateInputError,
    DimensionError,
    DomainError,
    NoStabilizingSolutionError,
    NoValidCandidatesError,
)
from .kernel import lu_determinant, real_schur
from .network import AnalysisConfig, NetworkSpec, input_matrix, is_controllable
from .split import SubsystemSplit, partition_input, split_spectrum

__all__ = [
    "EllipsoidRoa",
    "CandidateResult",
    "DriverReport",
    "MODE_FULL",
    "MODE_SUBSYSTEM",
    "MODE_GLOBAL",
    "ellipsoid_radius",
    "unit_ball_volume",
    "ellipsoid_measure",
    "make_ellipsoid",
    "contains",
    "boundary_points",
    "rank_drivers_antistable",
    "rank_drivers_general",
    "rank_drivers",
]

MODE_FULL = "full-antistable"
MODE_SUBSYSTEM = "subsystem"
MODE_GLOBAL = "globally-stabilizable"

T = TypeVar("T")
R = TypeVar("R")


def ellipsoid_radius(p, b, r: float = 1.0, u_max: float = 1.0) -> float:
    """Level ``delta = 4 r^2 u_max^2 / (b^T P b)`` of the invariant ellipsoid."""
    p = np.asarray(p, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    if p.shape != (b.size, b.size):
        raise DimensionError(f"shape {p.shape} does not match input of length {b.size}")
    sigma = float(b @ p @ b)
    if not sigma > 0:
        raise DegenerateInputError(f"b^T P b = {sigma:g} is not positive")
    return 4.0 * r * r * u_max * u_max / sigma


def unit_ball_volume(m: int) -> float:
    """Lebesgue measure of the unit ball in ``R^m``."""
    if m < 1:
        raise DomainError("dimension must be at least 1")
    return math.pi ** (m / 2) / math.gamma(m / 2 + 1)


def _sqrt_det_pd(p: np.ndarray) -> float:
    try:
        np.linalg.cholesky(p)
    except np.linalg.LinAlgError:
        raise DomainError("ellipsoid shape must be positive definite") from None
    return math.sqrt(lu_determinant(p))


@dataclass(frozen=True)
class EllipsoidRoa:
    """The set ``{x : x^T P x <= radius}``.

    `measure` is filled in on construction: interval length for m = 1, area
    for m = 2 and volume for m >= 3.
    """

    shape: np.ndarray
    radius: float
    input_quadratic: float = math.nan
    measure: float = field(init=False)

    def __post_init__(self):
        p = np.array(self.shape, dtype=float, ndmin=2)
        if p.shape[0] != p.shape[1]:
            raise DimensionError("ellipsoid shape must be square")
        p.flags.writeable = False
        object.__setattr__(self, "shape", p)
        if not self.radius > 0:
            raise DomainError("ellipsoid radius must be positive")
        object.__setattr__(self, "measure", ellipsoid_measure(p, self.radius))

    @property
    def dimension(self) -> int:
        return self.shape.shape[0]

    @property
    def sqrt_det(self) -> float:
        return math.sqrt(lu_determinant(self.shape))


def ellipsoid_measure(shape, radius: float | None = None) -> float:
    """Lebesgue measure of ``{x : x^T P x <= radius}``.

    Accepts either an :class:`EllipsoidRoa` or a shape matrix plus radius.
    """
    if isinstance(shape, EllipsoidRoa):
        shape, radius = shape.shape, shape.radius
    p = np.array(shape, dtype=float, ndmin=2)
    m = p.shape[0]
    if radius is None or not radius > 0:
        raise DomainError("radius must be positive")
    root_det = _sqrt_det_pd(p)
    if m == 1:
        return 2.0 * math.sqrt(radius / p[0, 0])
    if m == 2:
        return math.pi * radius / root_det
    return unit_ball_volume(m) * radius ** (m / 2) / root_det


def make_ellipsoid(p, b, r: float = 1.0, u_max: float = 1.0) -> EllipsoidRoa:
    """Invariant ellipsoid of the LQ law with Riccati matrix `p` and input `b`."""
    b = np.asarray(b, dtype=float).reshape(-1)
    p = np.asarray(p, dtype=float)
    return EllipsoidRoa(p, ellipsoid_radius(p, b, r, u_max), float(b @ p @ b))


def contains(roa: EllipsoidRoa, x, rtol: float = 1e-12) -> bool:
    """Membership in the closed ellipsoid.

    `rtol` absorbs round-off for points placed on the boundary.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != roa.dimension:
        raise DimensionError(f"state has length {x.size}, expected {roa.dimension}")
    return float(x @ roa.shape @ x) <= roa.radius * (1.0 + rtol)


def boundary_points(roa: EllipsoidRoa, count: int) -> np.ndarray:
    """Deterministic points on the boundary ``x^T P x = radius``.

    In 2-D the points are equally spaced in the angle of the principal-axes
    parameterization, starting on the first principal axis.  In higher
    dimensions directions come from an unscrambled Halton sequence mapped
    through the normal quantile function.

    Returns
    -------
    ndarray, shape (count, m)
    """
    m = roa.dimension
    if m < 2:
        raise DomainError("boundary sampling needs dimension >= 2")
    if count < 3:
        raise DomainError("need at least 3 boundary points")
    p = roa.shape
    if m == 2:
        lam, axes = np.linalg.eigh(p)
        theta = 2.0 * math.pi * np.arange(count) / count
        local = np.column_stack(
            [np.sqrt(roa.radius / lam[0]) * np.cos(theta), np.sqrt(roa.radius / lam[1]) * np.sin(theta)]
        )
        pts = local @ axes.T
    else:
        u = qmc.Halton(d=m, scramble=False).random(count + 1)[1:]
        pts = norm.ppf(u)
    level = np.einsum("ij,jk,ik->i", pts, p, pts)
    return pts * np.sqrt(roa.radius / level)[:, None]


# --------------------------------------------------------------------------
# ranking


@dataclass
class CandidateResult:
    """Analysis outcome for one candidate driver node.

    `input_column` is the column actually used in the Riccati equation: the
    original ``B_i`` in full mode, its anti-stable part in subsystem mode.
    """

    node: int
    controllable: bool
    subsystem_controllable: bool = True
    excluded_reason: str | None = None
    input_column: np.ndarray | None = None
    riccati: RiccatiSolution | None = None
    roa: EllipsoidRoa | None = None
    ratio: float = math.nan
    rank: int | None = None
    unbounded: bool = False

    @property
    def valid(self) -> bool:
        return self.roa is not None

    @property
    def radius(self) -> float:
        if self.unbounded:
            return math.inf
        return self.roa.radius if self.roa else math.nan

    @property
    def sqrt_det(self) -> float:
        return self.roa.sqrt_det if self.roa else math.nan

    @property
    def measure(self) -> float:
        if self.unbounded:
            return math.inf
        return self.roa.measure if self.roa else math.nan


@dataclass
class DriverReport:
    """Per-candidate results (ordered by node index) and the winner.

    In :data:`MODE_GLOBAL` the network is open-loop stable, every record has
    infinite measure and there is no ranking (`best_candidate` is None).
    """

    mode: str
    records: list[CandidateResult]
    best_candidate: int | None
    k: int
    system_matrix: np.ndarray | None = None
    split: SubsystemSplit | None = None
    eigenvalues: tuple[complex, ...] = ()

    def record(self, node: int) -> CandidateResult:
        for rec in self.records:
            if rec.node == node:
                return rec
        raise DomainError(f"node {node} is not a candidate driver node")

    def ranked(self) -> list[CandidateResult]:
        """Valid records, best first."""
        return sorted((r for r in self.records if r.valid), key=lambda r: r.rank)

    def full_state_gain(self, node: int) -> np.ndarray:
        """Feedback gain acting on the original state ``x``."""
        rec = self.record(node)
        if rec.riccati is None:
            raise DomainError(f"node {node} has no feedback law")
        if self.mode == MODE_SUBSYSTEM:
            return rec.riccati.gain @ self.split.transform_inverse[: self.k]
        return rec.riccati.gain

    def full_state_shape(self, node: int) -> np.ndarray:
        """Ellipsoid shape expressed in the original coordinates."""
        rec = self.record(node)
        if self.mode == MODE_SUBSYSTEM:
            proj = self.split.transform_inverse[: self.k]
            return proj.T @ rec.roa.shape @ proj
        return np.array(rec.roa.shape)


def _thread_count() -> int:
    raw = os.environ.get("ROA_SELECT_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    items = list(items)
    workers = min(_thread_count(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _analyze(a, b, q, r, cfg: AnalysisConfig, rec: CandidateResult, require_full: bool = True) -> CandidateResult:
    # in subsystem mode unreachable stable modes are harmless
    if require_full and not rec.controllable:
        rec.excluded_reason = "pair (A, B_i) is not controllable"
        return rec
    if not rec.subsystem_controllable:
        rec.excluded_reason = "anti-stable subsystem is not controllable from this node"
        return rec
    try:
        sol = solve_care(a, b, q, r, cfg.care_residual_tol)
        rec.riccati = sol
        rec.roa = make_ellipsoid(sol.p_matrix, b, r, cfg.saturation_limit)
    except (NoStabilizingSolutionError, DegenerateInputError) as exc:
        rec.excluded_reason = str(exc)
        rec.riccati = None
        rec.roa = None
    rec.input_column = np.asarray(b, dtype=float).reshape(-1, 1)
    return rec


def _finish(mode, records, k, system, split, eigenvalues) -> DriverReport:
    records = sorted(records, key=lambda r: r.node)
    valid = [r for r in records if r.valid]
    if not valid:
        reasons = "; ".join(f"node {r.node}: {r.excluded_reason}" for r in records)
        raise NoValidCandidatesError(f"no valid driver node ({reasons})")
    # ties: lowest node index first (records are sorted by node)
    order = sorted(valid, key=lambda r: (-r.measure, r.node))
    best = order[0]
    for pos, rec in enumerate(order, start=1):
        rec.rank = pos
        rec.ratio = rec.measure / best.measure
    best.ratio = 1.0
    return DriverReport(mode, records, best.node, k, system, split, tuple(eigenvalues))


def rank_drivers_antistable(net: NetworkSpec, cfg: AnalysisConfig | None = None) -> DriverReport:
    """Rank candidates of a network whose eigenvalues all lie in the open RHP.

    Every candidate gets its own Riccati solution on the full system; the
    winner has the largest ellipsoid measure.
    """
    cfg = cfg or AnalysisConfig()
    a = net.adjacency
    n = net.node_count
    eigs = real_schur(a).eigenvalues
    low = [ev for ev in eigs if ev.real < cfg.antistable_margin]
    if low:
        raise CenterSpectrumError("network is not anti-stable; use the subsystem path", low)
    q = cfg.q(n)

    def run(pos: int) -> CandidateResult:
        b = input_matrix(net, pos)
        ok = is_controllable(a, b, cfg.rank_tol)
        rec = CandidateResult(net.candidates[pos], ok, ok)
        return _analyze(a, b, q, cfg.input_cost, cfg, rec)

    records = _map(run, range(len(net.candidates)))
    return _finish(MODE_FULL, records, n, np.array(a), None, eigs)


def rank_drivers_general(
    net: NetworkSpec, cfg: AnalysisConfig | None = None, force_subsystem: bool = False
) -> DriverReport:
    """Rank candidates using only the anti-stable part of the network.

    A fully anti-stable network is handed to :func:`rank_drivers_antistable`
    unless `force_subsystem` is set.  An open-loop stable network yields a
    :data:`MODE_GLOBAL` report.
    """
    cfg = cfg or AnalysisConfig()
    a = net.adjacency
    n = net.node_count
    split = split_spectrum(a, cfg.antistable_margin)
    k = split.k
    if k == n and not force_subsystem:
        return rank_drivers_antistable(net, cfg)
    if k == 0:
        records = []
        for pos, node in enumerate(net.candidates):
            ok = is_controllable(a, input_matrix(net, pos), cfg.rank_tol)
            records.append(CandidateResult(node, ok, True, unbounded=True, ratio=1.0))
        return DriverReport(MODE_GLOBAL, records, None, 0, None, split, split.eigenvalues)

    a1 = split.antistable_block
    q1 = cfg.q1(k)

    def run(pos: int) -> CandidateResult:
        b = input_matrix(net, pos)
        top, _ = partition_input(split, b)
        rec = CandidateResult(
            net.candidates[pos],
            is_controllable(a, b, cfg.rank_tol),
            is_controllable(a1, top, cfg.rank_tol),
        )
        return _analyze(a1, top, q1, cfg.subsystem_input_cost, cfg, rec, require_full=False)

    records = _map(run, range(len(net.candidates)))
    return _finish(MODE_SUBSYSTEM, records, k, np.array(a1), split, split.eigenvalues)


def rank_drivers(net: NetworkSpec, cfg: AnalysisConfig | None = None, force_subsystem: bool = False) -> DriverReport:
    """Pick the full or the subsystem procedure by inspecting the spectrum."""
    cfg = cfg or AnalysisConfig()
    eigs = real_schur(net.adjacency).eigenvalues
    center = [ev for ev in eigs if abs(ev.real) < cfg.antistable_margin]
    if center:
        listing = ", ".join(f"{ev.real:.6g}{ev.imag:+.6g}j" for ev in center)
        raise CenterSpectrumError(f"eigenvalues on the imaginary axis: {listing}", center)
    if all(ev.real > 0 for ev in eigs) and not force_subsystem:
        return rank_drivers_antistable(net, cfg)
    return rank_drivers_general(net, cfg, force_subsystem)
