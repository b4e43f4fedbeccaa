"""Network description, analysis settings and the controllability checks.

Node indices are 1-based everywhere a user can see them (documents, reports,
CLI flags) and 0-based only for array indexing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .errors import DimensionError, DomainError, ParseError
from .kernel import lu_determinant, numerical_rank

__all__ = [
    "NetworkSpec",
    "AnalysisConfig",
    "CandidateCheck",
    "parse_network",
    "parse_document",
    "load_document",
    "serialize_network",
    "input_matrix",
    "is_controllable",
    "validate_candidates",
    "check_spd",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


def check_spd(m: np.ndarray, name: str) -> None:
    """Raise `DomainError` unless `m` is symmetric with positive leading minors."""
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square")
    if not np.allclose(m, m.T, rtol=1e-12, atol=1e-14):
        raise DomainError(f"{name} must be symmetric")
    for j in range(1, m.shape[0] + 1):
        if lu_determinant(m[:j, :j]) <= 0.0:
            raise DomainError(f"{name} must be positive definite (leading minor {j} <= 0)")


@dataclass(frozen=True)
class NetworkSpec:
    """Weighted directed network with its candidate driver nodes.

    Attributes
    ----------
    adjacency : ndarray, shape (n, n)
        Weighted adjacency matrix, used as the system matrix.
    candidates : tuple of int
        1-based node indices that may act as the single driver node.
    input_weights : tuple of float
        Input gain ``b_i`` of each candidate, same order as `candidates`.
    """

    adjacency: np.ndarray
    candidates: tuple[int, ...]
    input_weights: tuple[float, ...] = ()

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] == 0:
            raise DimensionError(f"adjacency must be a non-empty square matrix, got {adj.shape}")
        if not np.all(np.isfinite(adj)):
            raise DomainError("adjacency has non-finite entries")
        n = adj.shape[0]
        cands = tuple(int(c) for c in self.candidates)
        if not cands:
            raise DomainError("at least one candidate driver node is required")
        for c in cands:
            if not 1 <= c <= n:
                raise DomainError(f"candidate {c} index out of range [1, {n}]")
        if len(set(cands)) != len(cands):
            raise DomainError("duplicate candidate driver nodes")
        weights = tuple(float(w) for w in self.input_weights) or (1.0,) * len(cands)
        if len(weights) != len(cands):
            raise DimensionError("input_weights must have one entry per candidate")
        if not all(math.isfinite(w) for w in weights):
            raise DomainError("input_weights must be finite")
        object.__setattr__(self, "adjacency", _frozen(adj))
        object.__setattr__(self, "candidates", cands)
        object.__setattr__(self, "input_weights", weights)

    @property
    def node_count(self) -> int:
        return self.adjacency.shape[0]

    def position_of(self, node: int) -> int:
        """Position of 1-based `node` in the candidate list."""
        try:
            return self.candidates.index(node)
        except ValueError:
            raise DomainError(f"node {node} is not a candidate driver node") from None


@dataclass(frozen=True)
class SimSettings:
    """Defaults for the closed-loop simulations."""

    step: float = 1e-3
    horizon: float = 50.0
    conv_tol: float = 1e-4
    divergence_guard: float = 1e6

    def __post_init__(self):
        if self.step <= 0 or self.horizon < self.step:
            raise DomainError("simulation needs step > 0 and horizon >= step")


@dataclass(frozen=True)
class AnalysisConfig:
    """Weights and tolerances of the analysis.

    ``None`` for `state_cost` or `subsystem_state_cost` means the identity of
    the matching size, which is only known once the network (or its
    anti-stable order) is.
    """

    state_cost: np.ndarray | None = None
    input_cost: float = 1.0
    subsystem_state_cost: np.ndarray | None = None
    subsystem_input_cost: float = 1.0
    saturation_limit: float = 1.0
    antistable_margin: float = 1e-8
    rank_tol: float = 1e-9
    care_residual_tol: float = 1e-8
    sim: SimSettings = field(default_factory=SimSettings)

    def __post_init__(self):
        for name in ("state_cost", "subsystem_state_cost"):
            m = getattr(self, name)
            if m is not None:
                m = np.array(m, dtype=float, ndmin=2)
                check_spd(m, name)
                object.__setattr__(self, name, _frozen(m))
        for name in ("input_cost", "subsystem_input_cost", "saturation_limit"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.antistable_margin < 0 or self.rank_tol <= 0 or self.care_residual_tol <= 0:
            raise DomainError("tolerances must be positive")

    def q(self, n: int) -> np.ndarray:
        """State weight for the full system."""
        if self.state_cost is None:
            return np.eye(n)
        if self.state_cost.shape != (n, n):
            raise DimensionError(f"Q must be {n}x{n}, got {self.state_cost.shape}")
        return np.array(self.state_cost)

    def q1(self, k: int) -> np.ndarray:
        """State weight for the anti-stable subsystem of order `k`."""
        if self.subsystem_state_cost is None:
            return np.eye(k)
        if self.subsystem_state_cost.shape != (k, k):
            raise DimensionError(f"Q1 must be {k}x{k}, got {self.subsystem_state_cost.shape}")
        return np.array(self.subsystem_state_cost)


# --------------------------------------------------------------------------
# documents


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ParseError(path, "must be finite")
    return float(value)


def _matrix(value: Any, path: str, n: int | None = None) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ParseError(path, "expected a non-empty list of rows")
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list):
            raise ParseError(f"{path}[{i}]", "expected a list")
        rows.append([_number(x, f"{path}[{i}][{j}]") for j, x in enumerate(row)])
    size = len(rows)
    for i, row in enumerate(rows):
        if len(row) != size:
            raise ParseError(f"{path}[{i}]", f"matrix is not square (row has {len(row)} entries, expected {size})")
    if n is not None and size != n:
        raise ParseError(path, f"expected a {n}x{n} matrix, got {size}x{size}")
    return np.array(rows, dtype=float)


def _cost(value: Any, path: str) -> np.ndarray | None:
    if value == "identity":
        return None
    m = _matrix(value, path)
    try:
        check_spd(m, path)
    except DomainError as exc:
        raise ParseError(path, str(exc)) from None
    return m


def _positive(value: Any, path: str) -> float:
    x = _number(value, path)
    if x <= 0:
        raise ParseError(path, "must be positive")
    return x


def _parse_config(doc: Any, n: int) -> AnalysisConfig:
    if doc is None:
        return AnalysisConfig()
    if not isinstance(doc, dict):
        raise ParseError("config", "expected an object")
    kwargs: dict[str, Any] = {}
    if "Q" in doc:
        q = _cost(doc["Q"], "config.Q")
        if q is not None and q.shape[0] != n:
            raise ParseError("config.Q", f"expected a {n}x{n} matrix")
        kwargs["state_cost"] = q
    if "R" in doc:
        kwargs["input_cost"] = _positive(doc["R"], "config.R")
    if "Q1" in doc:
        kwargs["subsystem_state_cost"] = _cost(doc["Q1"], "config.Q1")
    if "R1" in doc:
        kwargs["subsystem_input_cost"] = _positive(doc["R1"], "config.R1")
    if "u_max" in doc:
        kwargs["saturation_limit"] = _positive(doc["u_max"], "config.u_max")
    if "antistable_margin" in doc:
        kwargs["antistable_margin"] = _positive(doc["antistable_margin"], "config.antistable_margin")
    if "rank_tol" in doc:
        kwargs["rank_tol"] = _positive(doc["rank_tol"], "config.rank_tol")
    return AnalysisConfig(**kwargs)


def parse_document(text: str) -> tuple[NetworkSpec, AnalysisConfig]:
    """Parse a JSON network document into the network and its settings.

    Raises `ParseError` carrying the path of the first offending field.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("", f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("", "document must be a JSON object")
    for key in ("nodes", "adjacency", "drivers"):
        if key not in doc:
            raise ParseError(key, "missing required field")
    nodes = doc["nodes"]
    if isinstance(nodes, bool) or not isinstance(nodes, int) or nodes < 1:
        raise ParseError("nodes", "must be a positive integer")
    adjacency = _matrix(doc["adjacency"], "adjacency", nodes)

    drivers = doc["drivers"]
    if not isinstance(drivers, list) or not drivers:
        raise ParseError("drivers", "expected a non-empty list of node indices")
    seen = set()
    for i, d in enumerate(drivers):
        if isinstance(d, bool) or not isinstance(d, int):
            raise ParseError(f"drivers[{i}]", f"expected an integer, got {d!r}")
        if not 1 <= d <= nodes:
            raise ParseError(f"drivers[{i}]", f"index out of range [1, {nodes}]")
        if d in seen:
            raise ParseError(f"drivers[{i}]", f"duplicate driver node {d}")
        seen.add(d)

    weights: tuple[float, ...] = ()
    if doc.get("input_weights") is not None:
        raw = doc["input_weights"]
        if not isinstance(raw, list) or len(raw) != len(drivers):
            raise ParseError("input_weights", "expected one number per driver")
        weights = tuple(_number(w, f"input_weights[{i}]") for i, w in enumerate(raw))

    net = NetworkSpec(adjacency, tuple(drivers), weights)
    return net, _parse_config(doc.get("config"), nodes)


def parse_network(text: str) -> NetworkSpec:
    """Parse the network part of a JSON document."""
    return parse_document(text)[0]


def load_document(path) -> tuple[NetworkSpec, AnalysisConfig]:
    with open(path, encoding="utf-8") as fh:
        return parse_document(fh.read())


def serialize_network(net: NetworkSpec, cfg: AnalysisConfig | None = None) -> str:
    """Inverse of :func:`parse_document`."""
    doc: dict[str, Any] = {
        "nodes": net.node_count,
        "adjacency": net.adjacency.tolist(),
        "drivers": list(net.candidates),
        "input_weights": list(net.input_weights),
    }
    if cfg is not None:
        doc["config"] = {
            "Q": "identity" if cfg.state_cost is None else cfg.state_cost.tolist(),
            "R": cfg.input_cost,
            "Q1": "identity" if cfg.subsystem_state_cost is None else cfg.subsystem_state_cost.tolist(),
            "R1": cfg.subsystem_input_cost,
            "u_max": cfg.saturation_limit,
        }
    return json.dumps(doc, indent=2)


# --------------------------------------------------------------------------
# controllability


def input_matrix(net: NetworkSpec, candidate_position: int) -> np.ndarray:
    """Input column ``B_i``: the weight ``b_i`` at the candidate's row."""
    if not 0 <= candidate_position < len(net.candidates):
        raise DomainError(f"candidate position {candidate_position} out of range")
    b = np.zeros((net.node_count, 1))
    b[net.candidates[candidate_position] - 1, 0] = net.input_weights[candidate_position]
    return b


def is_controllable(a, b, tol: float = 1e-9) -> bool:
    """Kalman rank test with every power column scaled to unit norm."""
    a = np.array(a, dtype=float, ndmin=2)
    b = np.array(b, dtype=float).reshape(-1)
    n = a.shape[0]
    if a.shape != (n, n) or b.shape != (n,):
        raise DimensionError(f"incompatible shapes {a.shape} and {b.shape}")
    if n == 0:
        return True
    cols = []
    v = b
    for _ in range(n):
        norm = np.linalg.norm(v)
        if norm == 0.0:
            break
        v = v / norm
        cols.append(v)
        v = a @ v
    if len(cols) < n:
        return False
    return numerical_rank(np.column_stack(cols), tol) == n


class CandidateCheck(NamedTuple):
    node: int
    controllable: bool
    subsystem_controllable: bool


def validate_candidates(net: NetworkSpec, cfg: AnalysisConfig, split=None) -> list[CandidateCheck]:
    """Check each candidate against the full system and the anti-stable part.

    `split` is a precomputed :class:`~roa_select.split.SubsystemSplit`; when
    omitted it is computed here (which raises for a center spectrum).
    """
    from .split import partition_input, split_spectrum

    if split is None:
        split = split_spectrum(net.adjacency, cfg.antistable_margin)
    out = []
    for pos, node in enumerate(net.candidates):
        b = input_matrix(net, pos)
        full = is_controllable(net.adjacency, b, cfg.rank_tol)
        if split.k == net.node_count:
            sub = full
        elif split.k == 0:
            sub = True
        else:
            top, _ = partition_input(split, b)
            sub = is_controllable(split.antistable_block, top, cfg.rank_tol)
        out.append(CandidateCheck(node, full, sub))
    return out
