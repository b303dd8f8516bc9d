"""Gamma sensitivity model for the response class ratios.

Each scaled ratio ``delta_UI * (1 - N)`` (and ``delta_OI * (1 - A)`` for
overreporters) must lie in ``[1/Gamma, Gamma]``.  Together with the two
sum constraints and nonnegativity of every cell, this carves out a
polytope of admissible ratio vectors.  ``reduce`` rewrites that polytope
in at most four free coordinates so the optimizer and the grid oracle can
work on it directly.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

import numpy as np

from .population import (
    DELTA_NAMES,
    SUM_TOL,
    DeltaVector,
    Margins,
    block_weights,
    delta_consistency_violations,
    independence_deltas,
)

FEAS_TOL = 1e-10
# preferred coordinate to eliminate in each block: the one absent from the bias
_ELIMINATE = (2, 5)


class InfeasibleModelError(ValueError):
    pass


@dataclass(frozen=True)
class GammaModel:
    gamma: float
    margins: Margins

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma < 1.0:
            raise ValueError(f"Gamma must be a finite number >= 1, got {self.gamma}")
        m = self.margins
        indep = independence_deltas(m)
        problems = delta_consistency_violations(m, indep)
        if problems:
            raise InfeasibleModelError(
                "margins admit no table with misreporting independent of response class: "
                + "; ".join(problems)
            )

    @property
    def scaling(self) -> np.ndarray:
        """Diagonal that maps ratios onto the scaled ratios bounded by Gamma."""
        m = self.margins
        return np.array([1 - m.N] * 3 + [1 - m.A] * 3)


def delta_box(model: GammaModel) -> np.ndarray:
    """Gamma bounds on each ratio as a (6, 2) array of [lo, hi]."""
    s = model.scaling
    g = model.gamma
    return np.column_stack([1.0 / (g * s), g / s])


def natural_bounds(m: Margins) -> np.ndarray:
    """Bounds every ratio obeys for any joint table with these margins.

    Coordinates whose cell is identically zero (``U * I == 0`` etc.) are
    unconstrained and get ``(-inf, inf)``.
    """
    out = np.empty((6, 2))
    wu, wo = block_weights(m)
    for k, (share, w) in enumerate([(m.U, x) for x in wu] + [(m.O, x) for x in wo]):
        if share * w > 0:
            out[k] = ((share + w - 1) / (share * w), min(1 / w, 1 / share))
        else:
            out[k] = (-np.inf, np.inf)
    return out


def _active_mask(m: Margins) -> np.ndarray:
    wu, wo = block_weights(m)
    return np.concatenate([m.U * wu > 0, m.O * wo > 0])


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def is_feasible(delta: DeltaVector, model: GammaModel) -> FeasibilityReport:
    """Check the Gamma box, natural bounds, sum constraints and cell signs.

    Ratios attached to an empty cell (zero misreporter share or zero
    response class) do not affect any table and are not checked.
    """
    m = model.margins
    d = delta.as_array()
    active = _active_mask(m)
    box = delta_box(model)
    nat = natural_bounds(m)
    problems = []
    for k in np.flatnonzero(active):
        name = DELTA_NAMES[k]
        lo, hi = box[k]
        if d[k] < lo - FEAS_TOL or d[k] > hi + FEAS_TOL:
            problems.append(f"delta_{name}={d[k]:.10g} outside Gamma box [{lo:.10g}, {hi:.10g}]")
        lo, hi = nat[k]
        if d[k] < lo - FEAS_TOL or d[k] > hi + FEAS_TOL:
            problems.append(f"delta_{name}={d[k]:.10g} outside natural bounds [{lo:.10g}, {hi:.10g}]")
    problems.extend(delta_consistency_violations(m, delta))
    return FeasibilityReport(tuple(problems))


def effective_bounds(model: GammaModel) -> np.ndarray:
    """Gamma box intersected with the natural bounds."""
    box = delta_box(model)
    nat = natural_bounds(model.margins)
    return np.column_stack([np.maximum(box[:, 0], nat[:, 0]), np.minimum(box[:, 1], nat[:, 1])])


@dataclass(frozen=True)
class Face:
    rows: tuple[int, ...]
    point: np.ndarray  # any point on the face's affine hull
    basis: np.ndarray  # (d, k) orthonormal directions spanning the affine hull


@dataclass(frozen=True, eq=False)
class ReducedPolytope:
    """Feasible ratio vectors as ``{x0 + M y : G y <= h}``.

    ``free`` names the ratios used as coordinates ``y``; ``eliminated``
    names the ratios solved from a sum constraint.  Every other ratio is
    pinned to its value in ``x0``.
    """

    x0: np.ndarray
    M: np.ndarray
    G: np.ndarray
    h: np.ndarray
    row_labels: tuple[str, ...]
    free: tuple[str, ...]
    eliminated: tuple[str, ...]
    scaling: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.M.shape[1]

    def lift(self, y) -> DeltaVector:
        return DeltaVector.from_array(self.lift_array(y))

    def lift_array(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return self.x0 + y @ self.M.T

    def project(self, delta: DeltaVector) -> np.ndarray:
        d = delta.as_array()
        return np.array([d[DELTA_NAMES.index(name)] for name in self.free])

    def contains(self, y, tol: float = FEAS_TOL) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if self.G.shape[0] == 0:
            return np.ones(y.shape[0], dtype=bool)
        return np.all(y @ self.G.T <= self.h + tol, axis=1)

    def vertices(self) -> np.ndarray:
        """All vertices as a (V, d) array, by solving every d-subset of rows."""
        if "vertices" not in self._cache:
            self._cache["vertices"] = _enumerate_vertices(self.G, self.h, self.dim)
        return self._cache["vertices"]

    def faces(self) -> list[Face]:
        """Every nonempty face, each described by its set of tight rows."""
        if "faces" not in self._cache:
            self._cache["faces"] = _enumerate_faces(self.G, self.h, self.vertices())
        return self._cache["faces"]


def _enumerate_vertices(G, h, d) -> np.ndarray:
    if d == 0:
        return np.zeros((1, 0))
    R = G.shape[0]
    subsets = np.array(list(itertools.combinations(range(R), d)))
    A = G[subsets]  # (S, d, d)
    b = h[subsets]
    det = np.linalg.det(A)
    scale = np.prod(np.linalg.norm(A, axis=2), axis=1)
    ok = np.abs(det) > 1e-12 * scale
    pts = np.linalg.solve(A[ok], b[ok][..., None])[..., 0]
    slack = pts @ G.T - h
    pts = pts[np.all(slack <= 1e-9, axis=1)]
    if len(pts) == 0:
        raise InfeasibleModelError("reduced polytope has no vertices")
    # dedupe degenerate vertices hit by several row subsets
    keys = np.round(pts, 9)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return pts[np.sort(idx)]


def _enumerate_faces(G, h, verts) -> list[Face]:
    d = verts.shape[1]
    if d == 0:
        return [Face((), np.zeros(0), np.zeros((0, 0)))]
    tight = [frozenset(np.flatnonzero(np.abs(v @ G.T - h) <= 1e-9).tolist()) for v in verts]
    # tight-row sets of faces are exactly the intersections of vertex tight sets
    found = set(tight)
    frontier = set(tight)
    while frontier:
        new = set()
        for a in frontier:
            for b in tight:
                c = a & b
                if c not in found:
                    new.add(c)
        found |= new
        frontier = new
    found.add(frozenset())
    faces = []
    for rows in sorted(found, key=lambda s: (len(s), sorted(s))):
        r = sorted(rows)
        if r:
            Gs, hs = G[r], h[r]
            point = np.linalg.lstsq(Gs, hs, rcond=None)[0]
            _, sv, vt = np.linalg.svd(Gs)
            rank = int(np.sum(sv > 1e-10 * max(sv.max(), 1.0)))
            basis = vt[rank:].T
        else:
            point = np.zeros(d)
            basis = np.eye(d)
        faces.append(Face(tuple(r), point, basis))
    return faces


@functools.lru_cache(maxsize=256)
def reduce(model: GammaModel) -> ReducedPolytope:
    """Eliminate one ratio per block through its sum constraint.

    Inactive ratios (empty cells) and ratios whose bounds coincide (Gamma
    equal to one) are pinned.  In each block the eliminated coordinate is
    UA (resp. ON) when it is free, otherwise the free coordinate with the
    largest marginal, ties going to the earlier coordinate.
    """
    m = model.margins
    indep = independence_deltas(m).as_array()
    bounds = effective_bounds(model)
    active = _active_mask(m)
    wu, wo = block_weights(m)
    weights = np.concatenate([wu, wo])

    pinned = ~active | (bounds[:, 1] - bounds[:, 0] <= 1e-15)
    x0 = np.where(pinned, indep, 0.0)
    # clip pinned active values into their bounds against round-off
    x0 = np.where(pinned & active, np.clip(x0, bounds[:, 0], bounds[:, 1]), x0)

    free_idx: list[int] = []
    elim: dict[int, int] = {}  # eliminated coordinate -> block
    for block, share in ((0, m.U), (1, m.O)):
        coords = [3 * block + j for j in range(3)]
        cand = [k for k in coords if not pinned[k]]
        if share <= 0 or not cand:
            continue
        pref = _ELIMINATE[block]
        if pref in cand:
            e = pref
        else:
            e = max(cand, key=lambda k: (weights[k], -k))
        elim[e] = block
        free_idx.extend(k for k in cand if k != e)

    d = len(free_idx)
    M = np.zeros((6, d))
    for j, k in enumerate(free_idx):
        M[k, j] = 1.0
    for e, block in elim.items():
        coords = [3 * block + j for j in range(3)]
        others = [k for k in coords if k != e]
        # w_e x_e = 1 - sum_{k != e} w_k x_k
        x0[e] = (1.0 - sum(weights[k] * x0[k] for k in others if pinned[k])) / weights[e]
        for k in others:
            if not pinned[k]:
                M[e, free_idx.index(k)] = -weights[k] / weights[e]

    rows, rhs, labels = [], [], []

    def add_row(coef6, bound, label):
        # coef6 . (x0 + M y) <= bound
        g = coef6 @ M
        hh = bound - coef6 @ x0
        if np.allclose(g, 0.0, atol=1e-15):
            if hh < -SUM_TOL:
                raise InfeasibleModelError(f"constraint {label} violated by pinned ratios")
            return
        rows.append(g)
        rhs.append(hh)
        labels.append(label)

    for k in free_idx + list(elim):
        e_k = np.zeros(6)
        e_k[k] = 1.0
        add_row(-e_k, -bounds[k, 0], f"{DELTA_NAMES[k]}>=lo")
        add_row(e_k, bounds[k, 1], f"{DELTA_NAMES[k]}<=hi")
    if m.U > 0 and m.O > 0:
        # truth-teller cells TI and TD must stay nonnegative
        for name, (ku, ko) in (("TI", (0, 3)), ("TD", (1, 4))):
            if weights[ku] > 0:
                coef = np.zeros(6)
                coef[ku], coef[ko] = m.U, m.O
                add_row(coef, 1.0, f"{name}>=0")

    G = np.array(rows).reshape(len(rows), d)
    h = np.array(rhs, dtype=float)
    return ReducedPolytope(
        x0=x0,
        M=M,
        G=G,
        h=h,
        row_labels=tuple(labels),
        free=tuple(DELTA_NAMES[k] for k in free_idx),
        eliminated=tuple(DELTA_NAMES[k] for k in elim),
        scaling=model.scaling,
    )
