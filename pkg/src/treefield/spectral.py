"""Smallest eigenvalues of the implied map-of-distances matrix, using only
fast integrations as matrix-vector products.

The operator is symmetric (a scalar map of a symmetric distance matrix),
so Lanczos with full reorthogonalization applies; the algebraically
smallest Ritz values are read off the tridiagonal spectrum directly.
Residual estimates are the standard |beta * last-component| bounds, which
equal ||M x - theta x|| for Lanczos Ritz pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import NumericError, PreconditionError
from .engine import IntegrationSession
from .graphs import TensorField
from .itree import IntegratorTree
from .maps import ScalarMap

__all__ = ["SpectralFeatures", "smallest_eigenvalues"]


@dataclass(frozen=True)
class SpectralFeatures:
    """Ascending smallest eigenvalues with residual estimates."""

    eigenvalues: np.ndarray
    residual_norms: np.ndarray
    iterations: int
    converged: bool


def smallest_eigenvalues(it: IntegratorTree, f: ScalarMap, k: int = 10,
                         tol: float = 1e-8, max_iter: int | None = None,
                         seed: int = 0, validate: bool = True) -> SpectralFeatures:
    """k algebraically smallest eigenvalues via matvec-only Lanczos.

    Deterministic given seed. Returns partial results with converged=False
    when max_iter matvecs are exhausted first. validate runs a two-matvec
    operator symmetry check before iterating.
    """
    n = it.n
    if not (0 < k < n):
        raise PreconditionError(f"need 0 < k < n, got k={k}, n={n}")
    if max_iter is None:
        max_iter = 5 * k + 50
    session = IntegrationSession(it)

    def matvec(v: np.ndarray) -> np.ndarray:
        field = TensorField(n, (), v[:, None])
        return session.integrate(f, field).data[:, 0]

    rng = np.random.Generator(np.random.Philox(key=seed))
    if validate:
        xv = rng.standard_normal(n)
        yv = rng.standard_normal(n)
        lhs = float(np.dot(matvec(xv), yv))
        rhs = float(np.dot(xv, matvec(yv)))
        bound = 1e-9 * np.linalg.norm(xv) * np.linalg.norm(yv) * max(
            1.0, abs(lhs), abs(rhs)
        )
        if abs(lhs - rhs) > bound:
            raise PreconditionError(
                f"operator is not symmetric: <Mx,y>={lhs} vs <x,My>={rhs}"
            )

    basis: list[np.ndarray] = []
    alphas: list[float] = []
    betas: list[float] = []
    scale_hint = 0.0

    v = _fresh_vector(rng, basis, n)
    iterations = 0
    result = None
    while iterations < max_iter and len(basis) < n:
        basis.append(v)
        w = matvec(v)
        iterations += 1
        scale_hint = max(scale_hint, float(np.linalg.norm(w)))
        alpha = float(np.dot(v, w))
        alphas.append(alpha)
        w = w - alpha * v
        if len(basis) > 1:
            w = w - betas[-1] * basis[-2]
        # full reorthogonalization, twice for numerical safety
        for _ in range(2):
            for q in basis:
                w = w - np.dot(q, w) * q
        beta = float(np.linalg.norm(w))

        result = _extract(alphas, betas, k, beta)
        if len(basis) >= k and (result[1] <= tol).all():
            return SpectralFeatures(result[0], result[1], iterations, True)

        if beta < 1e-12 * max(scale_hint, 1.0):
            # invariant subspace exhausted; restart with a fresh direction
            if len(basis) >= n:
                break
            betas.append(0.0)
            v = _fresh_vector(rng, basis, n)
        else:
            betas.append(beta)
            v = w / beta

    if result is None:
        raise NumericError("no Ritz values produced")
    eigenvalues, residuals = result
    converged = bool((residuals <= tol).all()) and len(eigenvalues) == k
    return SpectralFeatures(eigenvalues, residuals, iterations, converged)


def _fresh_vector(rng, basis, n):
    for _ in range(20):
        v = rng.standard_normal(n)
        for q in basis:
            v = v - np.dot(q, v) * q
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            return v / norm
    raise NumericError("could not draw a vector outside the current subspace")


def _extract(alphas, betas, k, current_beta):
    m = len(alphas)
    diag = np.asarray(alphas)
    off = np.asarray(betas[: m - 1])
    vals, vecs = eigh_tridiagonal(diag, off)
    idx = np.argsort(vals)[: min(k, m)]
    eigenvalues = vals[idx]
    residuals = np.abs(current_beta * vecs[-1, idx])
    order = np.argsort(eigenvalues)
    return eigenvalues[order], residuals[order]
