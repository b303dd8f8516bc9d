"""Worst-case sample size over the Gamma feasible set.

For a ratio vector ``delta`` let ``Delta = mu1 - mu0`` and
``g = mu1 (1 - mu1) + mu0 (1 - mu0)``.  The per-arm sample size needed
for power ``1 - beta`` is ``z^2 / lambda`` with ``lambda = Delta^2 / g``,
so the worst case is the smallest ``lambda`` over the polytope.  Both
means are affine in ``delta``; ``Delta^2`` is convex and ``g`` concave,
so ``min Delta^2 - lam * g`` is a convex problem whose optimal value
changes sign exactly at the optimal ratio.  We bisect on ``lam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .population import DeltaVector, Margins, independence_deltas
from .power import DesignParams, EffectSignIndeterminate, sample_size_from_lambda
from .sensitivity import GammaModel, ReducedPolytope, reduce

REL_EPS = 1e-10
MAX_VARIANCE_SUM = 0.5


@dataclass(frozen=True)
class AffineMeans:
    """mu1 = a1 + b1 . y and mu0 = a0 + b0 . y in reduced coordinates."""

    a1: float
    b1: np.ndarray
    a0: float
    b0: np.ndarray

    @classmethod
    def for_model(cls, model: GammaModel, poly: ReducedPolytope) -> "AffineMeans":
        m = model.margins
        c1, c0 = m.I + m.A, m.D + m.A
        B1 = np.array([-m.U * m.I, 0.0, -m.U * m.A, 0.0, m.O * m.D, m.O * m.N])
        B0 = np.array([0.0, -m.U * m.D, -m.U * m.A, m.O * m.I, 0.0, m.O * m.N])
        return cls(
            a1=c1 + B1 @ poly.x0,
            b1=poly.M.T @ B1,
            a0=c0 + B0 @ poly.x0,
            b0=poly.M.T @ B0,
        )

    def means(self, y) -> tuple[np.ndarray, np.ndarray]:
        y = np.asarray(y, dtype=float)
        return self.a1 + y @ self.b1, self.a0 + y @ self.b0

    def effect(self, y):
        mu1, mu0 = self.means(y)
        return mu1 - mu0

    def variance_sum(self, y):
        mu1, mu0 = self.means(y)
        return mu1 * (1 - mu1) + mu0 * (1 - mu0)

    def ratio(self, y):
        mu1, mu0 = self.means(y)
        return (mu1 - mu0) ** 2 / (mu1 * (1 - mu1) + mu0 * (1 - mu0))

    def parametric(self, y, lam: float):
        mu1, mu0 = self.means(y)
        return (mu1 - mu0) ** 2 - lam * (mu1 * (1 - mu1) + mu0 * (1 - mu0))

    def quadratic(self, lam: float) -> tuple[np.ndarray, np.ndarray]:
        """Hessian Q and gradient-at-zero c of Delta^2 - lam * g."""
        bd = self.b1 - self.b0
        ad = self.a1 - self.a0
        Q = 2 * (np.outer(bd, bd) + lam * (np.outer(self.b1, self.b1) + np.outer(self.b0, self.b0)))
        c = 2 * ad * bd - lam * (self.b1 * (1 - 2 * self.a1) + self.b0 * (1 - 2 * self.a0))
        return Q, c


@dataclass(frozen=True)
class InnerSolution:
    h: float
    delta: DeltaVector
    y: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class WorstCaseResult:
    lambda_star: float
    delta_star: DeltaVector
    n_per_arm: int
    n_total: int
    bias_at_worst: float
    mu1: float
    mu0: float
    lambda_independence: float
    iterations: int

    @property
    def effect(self) -> float:
        return self.mu1 - self.mu0


class _Problem:
    def __init__(self, model: GammaModel):
        self.model = model
        self.poly = reduce(model)
        self.means = AffineMeans.for_model(model, self.poly)
        self._groups = None

    def groups(self):
        # faces grouped by dimension so each group solves as one batch
        if self._groups is None:
            by_k: dict[int, list] = {}
            for face in self.poly.faces():
                by_k.setdefault(face.basis.shape[1], []).append(face)
            self._groups = [
                (k, np.array([f.point for f in fs]), np.array([f.basis for f in fs]))
                for k, fs in sorted(by_k.items())
            ]
        return self._groups

    def independence_y(self) -> np.ndarray:
        return self.poly.project(independence_deltas(self.model.margins))

    def solve_inner(self, lam: float) -> tuple[float, np.ndarray]:
        """Minimise Delta^2 - lam * g over the polytope.

        The minimiser lies in the relative interior of some face, where it
        is a stationary point of the objective on the face's affine hull.
        Stationary points of every face are computed in closed form and
        the best feasible one is kept; vertices are among the faces.
        """
        poly = self.poly
        if poly.dim == 0:
            y = np.zeros(0)
            return float(self.means.parametric(y, lam)), y
        Q, c = self.means.quadratic(lam)
        cands = []
        for k, P, B in self.groups():
            if k == 0:
                cands.append(P)
                continue
            H = np.einsum("fdk,de,fel->fkl", B, Q, B)
            r = np.einsum("fdk,fd->fk", B, P @ Q + c)
            z = -np.einsum("fkl,fl->fk", np.linalg.pinv(H, hermitian=True), r)
            resid = np.einsum("fkl,fl->fk", H, z) + r
            scale = np.abs(r).max(axis=1) + np.abs(H).max(axis=(1, 2)) + 1e-300
            ok = np.abs(resid).max(axis=1) <= 1e-9 * scale
            cands.append((P + np.einsum("fdk,fk->fd", B, z))[ok])
        Y = np.concatenate(cands)
        Y = Y[poly.contains(Y, tol=1e-11)]
        vals = self.means.parametric(Y, lam)
        best = int(np.argmin(vals))
        return float(vals[best]), Y[best]


_PROBLEMS: dict[GammaModel, _Problem] = {}


def _problem(model: GammaModel) -> _Problem:
    prob = _PROBLEMS.get(model)
    if prob is None:
        if len(_PROBLEMS) > 256:
            _PROBLEMS.clear()
        prob = _PROBLEMS[model] = _Problem(model)
    return prob


def inner_subproblem(lam: float, model: GammaModel) -> InnerSolution:
    """Optimal value and minimiser of ``Delta^2 - lam * g`` over the feasible set."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    prob = _problem(model)
    h, y = prob.solve_inner(lam)
    return InnerSolution(h=h, delta=prob.poly.lift(y), y=y)


def max_effect(model: GammaModel) -> tuple[float, DeltaVector]:
    """Largest Delta = mu1 - mu0 over the feasible set (attained at a vertex)."""
    prob = _problem(model)
    verts = prob.poly.vertices()
    eff = prob.means.effect(verts)
    i = int(np.argmax(eff))
    return float(eff[i]), prob.poly.lift(verts[i])


def effect_range(model: GammaModel) -> tuple[float, float]:
    """Smallest and largest expected reported effect over the feasible set."""
    prob = _problem(model)
    eff = prob.means.effect(prob.poly.vertices())
    return float(eff.min()), float(eff.max())


def worst_case_lambda(model: GammaModel, params: DesignParams) -> WorstCaseResult:
    """Smallest squared standardised effect over the Gamma feasible set.

    Raises:
        EffectSignIndeterminate: some admissible ratio vector makes the
            expected reported effect zero or positive.
    """
    prob = _problem(model)
    poly, means = prob.poly, prob.means
    top, top_delta = max_effect(model)
    if top >= 0:
        raise EffectSignIndeterminate(
            f"expected reported effect reaches {top:.6g} >= 0 within Gamma={model.gamma}",
            delta=top_delta,
            effect=top,
        )

    y_ind = prob.independence_y()
    lam_ind = float(means.ratio(y_ind))
    iterations = 0
    if poly.dim == 0:
        y_star = np.zeros(0)
    else:
        lo, hi = 0.0, lam_ind
        eps = REL_EPS * lam_ind
        y_hi = None
        while hi - lo > eps:
            mid = 0.5 * (lo + hi)
            h, y = prob.solve_inner(mid)
            iterations += 1
            if h < 0:
                hi, y_hi = mid, y
            else:
                lo = mid
        if y_hi is None:
            _, y_hi = prob.solve_inner(hi)
        # f(y_hi) - hi * g(y_hi) <= 0, so its ratio sits in [lambda*, hi]
        y_star = y_hi if means.ratio(y_hi) <= lam_ind else y_ind

    lam = float(means.ratio(y_star))
    # Delta^2 / g >= Delta^2 / 0.5 because g never exceeds 1/2
    assert lam >= top**2 / MAX_VARIANCE_SUM * (1 - 1e-12), "worst-case lambda below its analytic floor"
    delta_star = poly.lift(y_star)
    mu1, mu0 = (float(v) for v in means.means(y_star))
    m = model.margins
    bias = (
        -m.U * m.I * delta_star.UI + m.U * m.D * delta_star.UD - m.O * m.I * delta_star.OI + m.O * m.D * delta_star.OD
    )
    n = sample_size_from_lambda(lam, params)
    return WorstCaseResult(
        lambda_star=lam,
        delta_star=delta_star,
        n_per_arm=n,
        n_total=2 * n,
        bias_at_worst=bias,
        mu1=mu1,
        mu0=mu0,
        lambda_independence=lam_ind,
        iterations=iterations,
    )


def parametric_value(lam: float, model: GammaModel) -> float:
    """h(lam) = min Delta^2 - lam * g, exposed for checks."""
    return inner_subproblem(lam, model).h


# --- independent brute-force oracle ---------------------------------------


@dataclass(frozen=True)
class OracleResult:
    lambda_estimate: float
    delta: DeltaVector
    sign_indeterminate: bool
    max_effect: float
    points_evaluated: int


def _edge_points(verts2: np.ndarray, per_edge: int) -> np.ndarray:
    """Points along the boundary of a convex polygon given its vertices in order."""
    nxt = np.roll(verts2, -1, axis=0)
    t = np.linspace(0.0, 1.0, per_edge)[:, None, None]
    return (verts2[None] * (1 - t) + nxt[None] * t).reshape(-1, verts2.shape[1])


def _convex_hull_order(pts: np.ndarray) -> np.ndarray:
    """Indices of the convex hull of 2-D points, counter-clockwise (monotone chain)."""
    order = np.lexsort((pts[:, 1], pts[:, 0]))

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[int] = []
    for i in order:
        while len(lower) >= 2 and cross(pts[lower[-2]], pts[lower[-1]], pts[i]) <= 1e-18:
            lower.pop()
        lower.append(i)
    upper: list[int] = []
    for i in order[::-1]:
        while len(upper) >= 2 and cross(pts[upper[-2]], pts[upper[-1]], pts[i]) <= 1e-18:
            upper.pop()
        upper.append(i)
    return np.array(lower[:-1] + upper[:-1])


def grid_oracle(model: GammaModel, resolution: float = 0.005, per_edge: int = 2001) -> OracleResult:
    """Brute-force minimum of Delta^2 / g over the feasible set.

    With at most two free coordinates the polytope itself is gridded at
    ``resolution`` in scaled-ratio units, plus every vertex and dense
    samples along every edge.  With more free coordinates a literal grid
    is too large, so the polygon traced out in the (mu1, mu0) plane is
    gridded instead: the ratio depends on the ratios only through the two
    means, and the image polygon is the hull of the vertex images.
    """
    poly = reduce(model)
    means = AffineMeans.for_model(model, poly)
    verts = poly.vertices()
    d = poly.dim

    if d <= 2:
        pts = [verts]
        if d >= 1:
            step = resolution / poly.scaling[[_DELTA_INDEX[name] for name in poly.free]]
            lo, hi = verts.min(axis=0), verts.max(axis=0)
            axes = [np.arange(lo[j], hi[j] + step[j], step[j]) for j in range(d)]
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
            pts.append(grid[poly.contains(grid)])
            if d == 1:
                pts.append(np.linspace(lo, hi, per_edge))
            else:
                hull = verts[_convex_hull_order(verts)] if len(verts) > 2 else verts
                pts.append(_edge_points(hull, per_edge))
        Y = np.concatenate(pts)
        Y = Y[poly.contains(Y)]
        eff = means.effect(Y)
        if eff.max() >= 0:
            i = int(np.argmax(eff))
            return OracleResult(float("nan"), poly.lift(Y[i]), True, float(eff[i]), len(Y))
        lam = means.ratio(Y)
        i = int(np.argmin(lam))
        return OracleResult(float(lam[i]), poly.lift(Y[i]), False, float(eff.max()), len(Y))

    img = np.column_stack(means.means(verts))
    hull_idx = _convex_hull_order(img)
    hull = img[hull_idx]
    # sign is decided exactly on the vertices since Delta is affine
    eff_v = img[:, 0] - img[:, 1]
    if eff_v.max() >= 0:
        i = int(np.argmax(eff_v))
        return OracleResult(float("nan"), poly.lift(verts[i]), True, float(eff_v[i]), len(verts))
    n_axis = max(int(round(1.0 / resolution)), 50)
    lo, hi = hull.min(axis=0), hull.max(axis=0)
    g1, g0 = np.meshgrid(np.linspace(lo[0], hi[0], n_axis + 1), np.linspace(lo[1], hi[1], n_axis + 1))
    grid = np.column_stack([g1.ravel(), g0.ravel()])
    grid = grid[_inside_convex(hull, grid)]
    Z = np.concatenate([img, grid, _edge_points(hull, per_edge)])
    mu1, mu0 = Z[:, 0], Z[:, 1]
    lam = (mu1 - mu0) ** 2 / (mu1 * (1 - mu1) + mu0 * (1 - mu0))
    i = int(np.argmin(lam))
    y = _preimage(Z[i], hull, verts[hull_idx])
    return OracleResult(float(lam[i]), poly.lift(y), False, float(eff_v.max()), len(Z))


_DELTA_INDEX = {name: k for k, name in enumerate(("UI", "UD", "UA", "OI", "OD", "ON"))}


def _inside_convex(hull: np.ndarray, pts: np.ndarray, tol: float = 1e-15) -> np.ndarray:
    a = hull
    b = np.roll(hull, -1, axis=0)
    cross = (b[:, 0] - a[:, 0])[None] * (pts[:, 1:2] - a[None, :, 1]) - (b[:, 1] - a[:, 1])[None] * (
        pts[:, 0:1] - a[None, :, 0]
    )
    return np.all(cross >= -tol, axis=1)


def _preimage(z: np.ndarray, hull: np.ndarray, hull_pre: np.ndarray) -> np.ndarray:
    """A polytope point mapping onto z, as a convex combination of hull vertices."""
    best, best_err = hull_pre[0], np.inf
    for j in range(1, len(hull) - 1):
        tri = np.array([hull[0], hull[j], hull[j + 1]])
        T = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
        try:
            uv = np.linalg.solve(T, z - tri[0])
        except np.linalg.LinAlgError:
            continue
        w = np.array([1 - uv.sum(), uv[0], uv[1]])
        err = -min(w.min(), 0.0)
        if err < best_err:
            w = np.clip(w, 0.0, None)
            w /= w.sum()
            best = w[0] * hull_pre[0] + w[1] * hull_pre[j] + w[2] * hull_pre[j + 1]
            best_err = err
    return best


# --- sweeps ----------------------------------------------------------------

SPLITS = ("under", "over", "half")


@dataclass(frozen=True)
class SweepRow:
    share: float
    gamma: float
    status: str
    n_total: int | None = None
    lambda_star: float | None = None
    bias: float | None = None
    mu1: float | None = None
    mu0: float | None = None
    delta_star: DeltaVector | None = None
    message: str = ""


def split_share(share: float, split: str) -> tuple[float, float]:
    if split == "under":
        return share, 0.0
    if split == "over":
        return 0.0, share
    if split == "half":
        return share / 2, share / 2
    raise ValueError(f"split must be one of {SPLITS}, got {split!r}")


def sweep(
    template: Margins,
    shares: Sequence[float],
    split: str,
    gammas: Sequence[float],
    params: DesignParams,
) -> list[SweepRow]:
    """Worst-case sample size for every (share, Gamma) pair, in input order.

    Rows that cannot be solved carry ``status`` ``unattainable`` (the
    worst-case effect is not negative) or ``invalid`` (the margins or
    Gamma are not admissible); the sweep never aborts.
    """
    if split not in SPLITS:
        raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
    rows = []
    for share in shares:
        for gamma in gammas:
            try:
                U, O = split_share(share, split)  # noqa: E741
                model = GammaModel(gamma, template.with_misreporters(U, O))
                res = worst_case_lambda(model, params)
            except EffectSignIndeterminate as exc:
                rows.append(SweepRow(share, gamma, "unattainable", message=str(exc)))
                continue
            except ValueError as exc:
                rows.append(SweepRow(share, gamma, "invalid", message=str(exc)))
                continue
            rows.append(
                SweepRow(
                    share,
                    gamma,
                    "ok",
                    n_total=res.n_total,
                    lambda_star=res.lambda_star,
                    bias=res.bias_at_worst,
                    mu1=res.mu1,
                    mu0=res.mu0,
                    delta_star=res.delta_star,
                )
            )
    return rows


def n_total_upper_bound(model: GammaModel, params: DesignParams) -> float:
    """Analytic ceiling on the worst-case total from g <= 1/2."""
    top, _ = max_effect(model)
    if top >= 0:
        return math.inf
    return 2 * params.z_total**2 * MAX_VARIANCE_SUM / top**2
