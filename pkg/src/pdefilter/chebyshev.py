"""Chebyshev collocation machinery.

Provides the Gauss-Lobatto node family, the spectral differentiation matrix,
Clenshaw-Curtis quadrature weights, barycentric Lagrange interpolation and
the affine map between a physical interval and the reference interval
[-1, 1].  Everything here is a pure function of its arguments; the cached
node/weight/matrix arrays are returned read-only so they can be shared
freely.

Conventions
-----------
Nodes are ascending, ``x_j = -cos(pi j / N)`` for ``j = 0..N``, evaluated in
the numerically symmetric form ``sin(pi (2j - N) / (2N))`` so the grid is
exactly antisymmetric.  The differentiation matrix follows the same ordering;
its entries are fixed by requiring exact differentiation of polynomials up to
degree N (the off-diagonal barycentric formula plus the negative-row-sum
diagonal), which also pins the corner magnitudes to ``(2 N^2 + 1) / 6``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class Interval:
    """A physical interval [lo, hi] with lo < hi."""

    lo: float
    hi: float

    def __post_init__(self):
        lo = float(self.lo)
        hi = float(self.hi)
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError("interval endpoints must be finite")
        if lo >= hi:
            raise ValueError(f"degenerate interval: [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        return bool(np.all((self.lo <= np.asarray(x)) & (np.asarray(x) <= self.hi)))


def affine_map(domain: Interval, x):
    """Map physical coordinates in *domain* onto the reference interval [-1, 1]."""
    return (2.0 * np.asarray(x, dtype=float) - (domain.lo + domain.hi)) / domain.width


def affine_unmap(domain: Interval, xi):
    """Inverse of :func:`affine_map`: reference coordinates back to physical."""
    return (domain.lo + domain.hi + np.asarray(xi, dtype=float) * domain.width) / 2.0


def affine_scale(domain: Interval) -> float:
    """d(xi)/dx, the factor that converts physical velocities to reference ones."""
    return 2.0 / domain.width


def gauss_lobatto_nodes(order: int) -> np.ndarray:
    """Chebyshev Gauss-Lobatto nodes -cos(pi j / order), ascending in [-1, 1]."""
    return _reference_nodes(_checked_order(order)).copy()


def eval_chebyshev(j: int, x: float) -> float:
    """First-kind Chebyshev polynomial T_j(x) = cos(j arccos x) on [-1, 1]."""
    if j < 0:
        raise ValueError(f"polynomial index must be >= 0, got {j}")
    x = float(x)
    if abs(x) > 1.0:
        raise ValueError(f"argument outside [-1, 1]: {x}")
    return float(np.cos(j * np.arccos(x)))


def diff_matrix(order: int) -> np.ndarray:
    """Spectral differentiation matrix on the Gauss-Lobatto nodes.

    Applied to samples of a polynomial of degree <= order at the nodes, the
    matrix returns samples of the exact derivative (up to rounding).  The
    returned array is a cached read-only view; copy before modifying.
    """
    return _diff_matrix_cached(_checked_order(order))


def cc_weights(order: int) -> np.ndarray:
    """Clenshaw-Curtis quadrature weights on the Gauss-Lobatto nodes.

    Closed-form cosine series (rather than a Vandermonde solve, which would
    be badly conditioned).  The rule is interpolatory, hence exact for
    polynomials of degree <= order, and all weights are positive.  Cached,
    read-only.
    """
    return _cc_weights_cached(_checked_order(order))


def barycentric_weights(order: int) -> np.ndarray:
    """Barycentric interpolation weights for the Gauss-Lobatto nodes.

    The classical pattern (-1)^j, halved at both endpoints (any common
    scaling cancels in the barycentric quotient).  Cached, read-only.
    """
    return _barycentric_weights_cached(_checked_order(order))


@dataclass(frozen=True)
class SpectralGrid:
    """A Gauss-Lobatto collocation grid mapped onto a physical interval.

    Attributes
    ----------
    order : int
        Number of node intervals; the grid has ``order + 1`` nodes.
    domain : Interval
        Physical interval covered by the grid.
    reference_nodes : ndarray
        Nodes on [-1, 1], ascending.
    quad_weights : ndarray
        Clenshaw-Curtis weights on the reference interval (they sum to 2).
    nodes : ndarray
        Physical node locations.
    physical_weights : ndarray
        Quadrature weights scaled to the physical interval.
    """

    order: int
    domain: Interval
    reference_nodes: np.ndarray
    quad_weights: np.ndarray
    nodes: np.ndarray
    physical_weights: np.ndarray

    @classmethod
    def build(cls, order: int, domain: Interval) -> "SpectralGrid":
        order = _checked_order(order)
        ref = _reference_nodes(order)
        qw = _cc_weights_cached(order)
        nodes = _readonly(affine_unmap(domain, ref))
        pw = _readonly(qw * (domain.width / 2.0))
        return cls(order, domain, ref, qw, nodes, pw)

    @property
    def n_nodes(self) -> int:
        return self.order + 1


def barycentric_interp(grid: SpectralGrid, values, x):
    """Evaluate the grid interpolant of *values* at physical point(s) *x*.

    Uses the barycentric form of the Lagrange interpolant, which is stable
    arbitrarily close to the nodes; an exact node hit returns that node's
    value.  Scalar input returns a float, array input an array.

    Raises
    ------
    ValueError
        If *x* falls outside the grid domain or *values* has the wrong length.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_nodes,):
        raise ValueError(
            f"expected {grid.n_nodes} nodal values, got shape {values.shape}"
        )
    scalar = np.isscalar(x) or np.ndim(x) == 0
    xq = np.atleast_1d(np.asarray(x, dtype=float))
    if not grid.domain.contains(xq):
        raise ValueError(
            f"interpolation point outside domain "
            f"[{grid.domain.lo}, {grid.domain.hi}]"
        )
    xi = affine_map(grid.domain, xq)
    lam = barycentric_weights(grid.order)
    diff = xi[:, None] - grid.reference_nodes[None, :]
    hit = np.abs(diff) < 1e-15
    kernel = lam[None, :] / np.where(hit, 1.0, diff)
    out = (kernel @ values) / kernel.sum(axis=1)
    rows, cols = np.nonzero(hit)
    out[rows] = values[cols]
    return float(out[0]) if scalar else out


def _checked_order(order: int) -> int:
    order = int(order)
    if order < 1:
        raise ValueError(f"grid order must be >= 1, got {order}")
    return order


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=64)
def _reference_nodes(order: int) -> np.ndarray:
    j = np.arange(order + 1)
    # sin form of -cos(pi j / order): exactly antisymmetric about the midpoint
    return _readonly(np.sin(np.pi * (2 * j - order) / (2 * order)))


@lru_cache(maxsize=32)
def _diff_matrix_cached(order: int) -> np.ndarray:
    x = _reference_nodes(order)
    lam = _barycentric_weights_cached(order)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    d = (lam[None, :] / lam[:, None]) / diff
    np.fill_diagonal(d, 0.0)
    # negative-sum trick: rows of the exact matrix annihilate constants
    np.fill_diagonal(d, -d.sum(axis=1))
    return _readonly(d)


@lru_cache(maxsize=64)
def _cc_weights_cached(order: int) -> np.ndarray:
    j = np.arange(order + 1)
    w = np.zeros(order + 1)
    for m in range(order // 2 + 1):
        term = np.cos(2.0 * np.pi * m * j / order) / (1.0 - 4.0 * m * m)
        halved = m == 0 or 2 * m == order
        w += (0.5 if halved else 1.0) * term
    w *= 4.0 / order
    w[0] *= 0.5
    w[-1] *= 0.5
    return _readonly(w)


@lru_cache(maxsize=64)
def _barycentric_weights_cached(order: int) -> np.ndarray:
    lam = (-1.0) ** np.arange(order + 1)
    lam[0] *= 0.5
    lam[-1] *= 0.5
    return _readonly(lam)
