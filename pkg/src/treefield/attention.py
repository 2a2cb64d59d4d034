"""Masked low-rank attention with distance-kernel masks on grid trees.

The mask matrix is g(a0 + a1 d + ... + at d^t) of the tree distance d
between token positions, with g either exp or the reciprocal. The fast
path never materializes the mask: the key/value outer products are pushed
through the fast integrator column-wise, and each token's embedding is the
ratio of the two integrated blocks. The dense formulation doubles as the
oracle. No training loop ships here; the contract is mechanism
correctness plus coefficient differentiability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, PreconditionError
from .engine import IntegrationSession
from .graphs import (
    TensorField,
    WeightedGraph,
    WeightedTree,
    all_pairs_distances,
    minimum_spanning_tree,
)
from .itree import DEFAULT_LEAF_THRESHOLD, IntegratorTree, build_integrator_tree
from .maps import Tabulated

__all__ = [
    "FEATURE_MAPS",
    "AttentionInputs",
    "TopologicalMask",
    "grid_mst",
    "masked_attention_explicit",
    "masked_attention_fast",
    "mask_gradients",
]

FEATURE_MAPS = {
    "relu": lambda z: np.maximum(z, 0.0),
    "square": lambda z: z * z,
    "fourth": lambda z: (z * z) * (z * z),
    "exp": np.exp,
}

SUPPORTED_MASK_DEGREES = (1, 2, 5, 10)
MASK_CHECK_GUARD = 4096


@dataclass(frozen=True)
class AttentionInputs:
    """Queries, keys, values and the element-wise feature map name."""

    queries: np.ndarray
    keys: np.ndarray
    values: np.ndarray
    phi: str = "relu"

    def __post_init__(self):
        if self.phi not in FEATURE_MAPS:
            raise PreconditionError(f"unknown feature map {self.phi!r}")
        q, k, v = self.queries, self.keys, self.values
        if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
            raise PreconditionError("queries, keys and values must be 2-d")
        if q.shape != k.shape or q.shape[0] != v.shape[0] or q.shape[0] < 1:
            raise PreconditionError(
                f"shape mismatch: Q {q.shape}, K {k.shape}, V {v.shape}"
            )

    @property
    def length(self) -> int:
        return self.queries.shape[0]


def grid_mst(rows: int, cols: int) -> WeightedTree:
    """Deterministic MST of the unit-weight rows x cols grid graph.

    Vertices are row-major token positions; with equal weights the Kruskal
    (weight, u, v) order pins one canonical tree.
    """
    if rows < 1 or cols < 1 or rows * cols < 1:
        raise PreconditionError("grid must be at least 1x1")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, 1.0))
            if r + 1 < rows:
                edges.append((v, v + cols, 1.0))
    if rows * cols == 1:
        return WeightedTree(1, [[]], _validated=True)
    return minimum_spanning_tree(WeightedGraph(rows * cols, tuple(edges)))


class TopologicalMask:
    """Distance-kernel mask over a tree: entries g(poly(tree distance)).

    Exposes exactly degree+1 learnable coefficients. For the reciprocal g
    the polynomial must stay positive over the realized tree distances,
    which is checked at construction rather than clamped away.
    """

    def __init__(self, tree: WeightedTree, g: str, coeffs,
                 leaf_threshold: int = DEFAULT_LEAF_THRESHOLD,
                 quantization=1):
        if g not in ("exp", "recip"):
            raise PreconditionError(f"mask transform must be 'exp' or 'recip', got {g!r}")
        coeffs = tuple(float(c) for c in coeffs)
        degree = len(coeffs) - 1
        if degree not in SUPPORTED_MASK_DEGREES:
            raise PreconditionError(
                f"mask polynomial degree must be one of {SUPPORTED_MASK_DEGREES}"
            )
        self.tree = tree
        self.g = g
        self.coeffs = coeffs
        if g == "recip":
            if tree.n > MASK_CHECK_GUARD:
                raise PreconditionError(
                    f"reciprocal-mask positivity check is limited to {MASK_CHECK_GUARD} tokens"
                )
            realized = np.unique(all_pairs_distances(tree))
            vals = self._poly(realized)
            if vals.min() <= 0.0:
                bad = realized[int(np.argmin(vals))]
                raise NumericError(
                    f"mask polynomial is not positive at tree distance {bad:g}; "
                    "a reciprocal mask would cross a pole"
                )
        self.it: IntegratorTree = build_integrator_tree(
            tree, leaf_threshold, quantization=quantization
        )
        self._session = IntegrationSession(self.it)
        self._scalar_map = None
        self._deriv_maps = {}

    @property
    def num_parameters(self) -> int:
        return len(self.coeffs)

    def _poly(self, z):
        acc = np.full_like(np.asarray(z, dtype=np.float64), self.coeffs[-1])
        for c in self.coeffs[-2::-1]:
            acc = acc * z + c
        return acc

    def scalar_map(self) -> Tabulated:
        if self._scalar_map is None:
            if self.g == "exp":
                self._scalar_map = Tabulated(lambda z: np.exp(self._poly(z)))
            else:
                self._scalar_map = Tabulated(lambda z: 1.0 / self._poly(z))
        return self._scalar_map

    def derivative_map(self, i: int) -> Tabulated:
        """d mask / d coeffs[i] as a scalar map of distance."""
        if not (0 <= i < len(self.coeffs)):
            raise PreconditionError(f"no coefficient {i}")
        if i not in self._deriv_maps:
            if self.g == "exp":
                self._deriv_maps[i] = Tabulated(lambda z: np.exp(self._poly(z)) * z ** i)
            else:
                self._deriv_maps[i] = Tabulated(lambda z: -(z ** i) / self._poly(z) ** 2)
        return self._deriv_maps[i]

    def matrix(self) -> np.ndarray:
        """Dense mask materialization (oracle/testing path)."""
        if self.tree.n > MASK_CHECK_GUARD:
            raise PreconditionError("dense mask materialization guard exceeded")
        dist = all_pairs_distances(self.tree)
        if self.g == "exp":
            return np.exp(self._poly(dist))
        return 1.0 / self._poly(dist)


def masked_attention_explicit(inp: AttentionInputs, mask_matrix: np.ndarray) -> np.ndarray:
    """Reference attention: normalize (mask * feature kernel) row-wise."""
    L = inp.length
    if mask_matrix.shape != (L, L):
        raise PreconditionError(f"mask must be {L}x{L}, got {mask_matrix.shape}")
    if L > MASK_CHECK_GUARD:
        raise PreconditionError("explicit attention guard exceeded")
    phi = FEATURE_MAPS[inp.phi]
    qf = phi(inp.queries)
    kf = phi(inp.keys)
    attn = mask_matrix * (qf @ kf.T)
    normalizer = attn.sum(axis=1)
    if np.abs(normalizer).min() == 0.0:
        raise NumericError("zero row normalizer in explicit attention")
    return (attn @ inp.values) / normalizer[:, None]


def _fast_blocks(inp: AttentionInputs, mask: TopologicalMask, scalar_map):
    """One integrator pass over the stacked key/value blocks.

    Returns (num, den) where num[i] = phi(q_i)^T devec(block1_i) and
    den[i] = phi(q_i)^T block2_i, with row-major devectorization.
    """
    L = inp.length
    if mask.tree.n != L:
        raise PreconditionError(
            f"mask tree has {mask.tree.n} vertices but inputs have {L} tokens"
        )
    phi = FEATURE_MAPS[inp.phi]
    qf = phi(inp.queries)
    kf = phi(inp.keys)
    m = kf.shape[1]
    d = inp.values.shape[1]
    block1 = (kf[:, :, None] * inp.values[:, None, :]).reshape(L, m * d)
    stacked = np.concatenate([block1, kf], axis=1)
    integrated = mask._session.integrate(
        scalar_map, TensorField(L, (m * d + m,), stacked)
    ).data
    num = np.einsum("im,imd->id", qf, integrated[:, : m * d].reshape(L, m, d))
    den = np.einsum("im,im->i", qf, integrated[:, m * d:])
    return num, den


def masked_attention_fast(inp: AttentionInputs, mask: TopologicalMask) -> np.ndarray:
    """Mask-free-multiplication attention; equals the explicit path."""
    num, den = _fast_blocks(inp, mask, mask.scalar_map())
    if den.min() <= 0.0:
        raise NumericError(
            f"non-positive attention normalizer (min {den.min():.3g}); "
            "check the mask sign and the feature map"
        )
    return num / den[:, None]


def mask_gradients(inp: AttentionInputs, mask: TopologicalMask,
                   upstream: np.ndarray) -> np.ndarray:
    """Gradient of <upstream, output> w.r.t. the mask coefficients.

    The mask enters only through scalar evaluations of distance, so each
    coefficient's derivative is one more integrator pass with the
    differentiated map, combined by the quotient rule.
    """
    if upstream.shape != (inp.length, inp.values.shape[1]):
        raise PreconditionError("upstream shape must match the attention output")
    num, den = _fast_blocks(inp, mask, mask.scalar_map())
    if np.abs(den).min() == 0.0:
        raise NumericError("zero attention normalizer")
    grads = np.empty(len(mask.coeffs))
    inv_den = 1.0 / den
    for i in range(len(mask.coeffs)):
        dnum, dden = _fast_blocks(inp, mask, mask.derivative_map(i))
        term = (dnum * den[:, None] - num * dden[:, None]) * (inv_den ** 2)[:, None]
        grads[i] = float(np.sum(upstream * term))
    return grads
