"""Learnable rational maps for approximating graph metrics with tree
metrics, plus the relative-Frobenius evaluator.

Training minimizes the mean squared error between graph distances and the
rational map applied to tree distances over a sampled pair dataset, with
analytic gradients and an adaptive per-parameter step. Distances are
standardized by the mean tree distance for conditioning; the returned
parameters are mapped back so the fitted map acts on raw distances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, PreconditionError
from .graphs import (
    WeightedGraph,
    WeightedTree,
    all_pairs_distances,
    graph_shortest_paths,
    tree_distances_from,
)
from .maps import Rational, ScalarMap, evaluate

__all__ = [
    "MetricPairDataset",
    "RationalParams",
    "FitResult",
    "sample_dataset",
    "fit_rational",
    "relative_frobenius_error",
]

DENSE_EVAL_GUARD = 3_000
DENOMINATOR_MARGIN = 1e-3
DENOMINATOR_GRID = 256


@dataclass(frozen=True)
class MetricPairDataset:
    """Sampled vertex pairs with their graph and tree distances."""

    pairs: np.ndarray        # (count, 2) vertex ids, v != w
    graph_dist: np.ndarray   # (count,)
    tree_dist: np.ndarray    # (count,)

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True)
class RationalParams:
    """Fitted numerator/denominator coefficients (ascending)."""

    num: tuple[float, ...]
    den: tuple[float, ...]

    def scalar_map(self) -> Rational:
        return Rational(self.num, self.den)


@dataclass(frozen=True)
class FitResult:
    params: RationalParams
    loss_trace: np.ndarray   # raw-unit MSE per step, includes the initial loss
    steps: int


def _check_spanning(g: WeightedGraph, t: WeightedTree):
    if g.n != t.n:
        raise PreconditionError("tree and graph vertex counts differ")
    graph_edges = {}
    for u, v, w in g.edges:
        graph_edges[(min(u, v), max(u, v))] = w
    for u, v, w in t.edges():
        key = (min(u, v), max(u, v))
        if key not in graph_edges or graph_edges[key] != w:
            raise PreconditionError(f"tree edge {key} is not a graph edge; tree must span the graph")


def sample_dataset(g: WeightedGraph, t: WeightedTree, count: int = 100,
                   seed: int = 0, replace: bool = False) -> MetricPairDataset:
    """Uniformly sampled vertex pairs (v != w) with both metrics.

    Sampling is without replacement of unordered pairs unless replace=True.
    """
    _check_spanning(g, t)
    n = g.n
    max_pairs = n * (n - 1) // 2
    if not replace and count > max_pairs:
        raise PreconditionError(
            f"{count} distinct pairs requested but only {max_pairs} exist; "
            "pass replace=True to sample with replacement"
        )
    rng = np.random.default_rng(seed)
    chosen = []
    seen = set()
    while len(chosen) < count:
        v = int(rng.integers(0, n))
        w = int(rng.integers(0, n))
        if v == w:
            continue
        key = (min(v, w), max(v, w))
        if not replace:
            if key in seen:
                continue
            seen.add(key)
        chosen.append((v, w))
    pairs = np.asarray(chosen, dtype=np.int64)

    sources = np.unique(pairs[:, 0])
    rows = {int(s): i for i, s in enumerate(sources)}
    gdist = graph_shortest_paths(g, sources)
    graph_d = np.array([gdist[rows[int(v)], w] for v, w in pairs])
    tree_rows = {}
    tree_d = np.empty(len(pairs))
    for i, (v, w) in enumerate(pairs):
        if int(v) not in tree_rows:
            tree_rows[int(v)] = tree_distances_from(t, int(v))
        tree_d[i] = tree_rows[int(v)][w]
    return MetricPairDataset(pairs=pairs, graph_dist=graph_d, tree_dist=tree_d)


def _design(x: np.ndarray, degree: int) -> np.ndarray:
    cols = np.empty((len(x), degree + 1))
    cols[:, 0] = 1.0
    for k in range(1, degree + 1):
        cols[:, k] = cols[:, k - 1] * x
    return cols


def _mse_and_grads(a, b, Xn, Xs, y):
    """MSE of (Xn a)/(Xs b) against y with analytic coefficient gradients."""
    A = Xn @ a
    B = Xs @ b
    if np.abs(B).min() < 1e-12:
        raise NumericError("denominator collapsed to zero on the data")
    r = A / B - y
    mse = float(np.mean(r * r))
    ga = (2.0 / len(y)) * (Xn.T @ (r / B))
    gb = (2.0 / len(y)) * (Xs.T @ (r * (-A / (B * B))))
    return mse, ga, gb


def fit_rational(ds: MetricPairDataset, degrees: tuple[int, int] = (2, 2),
                 steps: int = 200, learning_rate: float = 1e-2,
                 seed: int = 0) -> FitResult:
    """Adam on the MSE with analytic gradients; deterministic given seed.

    Starts at the identity map (numerator x, denominator 1). A soft hinge
    penalty keeps the denominator above a small margin on a grid over the
    observed tree distances. Returns the best parameters encountered, so
    the final loss never exceeds the initial one.
    """
    t_deg, s_deg = degrees
    if t_deg < 1 or s_deg < 0:
        raise PreconditionError("need numerator degree >= 1 and denominator degree >= 0")
    if steps < 1:
        raise PreconditionError("need steps >= 1")
    if len(ds) == 0:
        raise PreconditionError("empty dataset")

    mu = float(ds.tree_dist.mean())
    if mu <= 0:
        raise PreconditionError("tree distances must be positive")
    x = ds.tree_dist / mu
    y = ds.graph_dist / mu
    Xn = _design(x, t_deg)
    Xs = _design(x, s_deg)
    grid = np.linspace(0.0, float(x.max()), DENOMINATOR_GRID)
    Gs = _design(grid, s_deg)

    a = np.zeros(t_deg + 1)
    a[1] = 1.0
    b = np.zeros(s_deg + 1)
    b[0] = 1.0

    def objective_and_grads(a, b):
        mse, ga, gb = _mse_and_grads(a, b, Xn, Xs, y)
        gvals = Gs @ b
        m = float(gvals.min())
        pen = 0.0
        if m < DENOMINATOR_MARGIN:
            gap = DENOMINATOR_MARGIN - m
            pen = gap * gap
            gb = gb - 2.0 * gap * Gs[int(np.argmin(gvals))]
        return mse, pen, ga, gb

    beta1, beta2, eps = 0.9, 0.999, 1e-8
    ma = np.zeros_like(a)
    va = np.zeros_like(a)
    mb = np.zeros_like(b)
    vb = np.zeros_like(b)

    trace = []
    best = None
    for step in range(steps + 1):
        mse, pen, ga, gb = objective_and_grads(a, b)
        if not np.isfinite(mse):
            raise NumericError(f"training diverged at step {step}")
        trace.append(mse * mu * mu)
        obj = mse + pen
        if best is None or obj < best[0]:
            best = (obj, a.copy(), b.copy())
        if step == steps:
            break
        tpow = step + 1
        ma = beta1 * ma + (1 - beta1) * ga
        va = beta2 * va + (1 - beta2) * ga * ga
        mb = beta1 * mb + (1 - beta1) * gb
        vb = beta2 * vb + (1 - beta2) * gb * gb
        a = a - learning_rate * (ma / (1 - beta1 ** tpow)) / (np.sqrt(va / (1 - beta2 ** tpow)) + eps)
        b = b - learning_rate * (mb / (1 - beta1 ** tpow)) / (np.sqrt(vb / (1 - beta2 ** tpow)) + eps)

    _, a, b = best
    gvals = Gs @ b
    if gvals.min() <= 0:
        raise NumericError("fitted denominator is not positive on the observed range")
    # map back to raw distances: f_raw(z) = mu * f_scaled(z / mu)
    num_raw = tuple(a[i] * mu ** (1 - i) for i in range(t_deg + 1))
    den_raw = tuple(b[j] * mu ** (-j) for j in range(s_deg + 1))
    return FitResult(
        params=RationalParams(num=num_raw, den=den_raw),
        loss_trace=np.asarray(trace),
        steps=steps,
    )


def relative_frobenius_error(g: WeightedGraph, t: WeightedTree, f: ScalarMap,
                             force: bool = False) -> float:
    """|| f(tree distances) - graph distances ||_F / || graph distances ||_F.

    Materializes both dense matrices through the same all-pairs helper the
    brute-force integrators use, so the two routes agree bit for bit.
    """
    if g.n != t.n:
        raise PreconditionError("tree and graph vertex counts differ")
    if g.n > DENSE_EVAL_GUARD and not force:
        raise PreconditionError(
            f"{g.n} vertices exceeds the dense evaluation guard {DENSE_EVAL_GUARD}"
        )
    graph_mat = all_pairs_distances(g)
    tree_mat = np.asarray(evaluate(f, all_pairs_distances(t)), dtype=np.float64)
    denom = np.linalg.norm(graph_mat)
    if denom == 0.0:
        raise PreconditionError("graph distance matrix is identically zero")
    return float(np.linalg.norm(tree_mat - graph_mat) / denom)
