"""Node sets, shape parameters and the multiquadric basis.

The basis function centred at node j is ``g_j(p) = sqrt(|p - x_j|^2 + c_j^2)``.
Every evaluator below accepts scalar or array arguments and broadcasts over
leading axes, so the same code fills single values and whole collocation
matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

H1_RANGE = (0.1, 0.5)
DEFAULT_S = 6.0


@dataclass(frozen=True)
class NodeSet:
    """Collocation nodes on the unit interval or the unit square.

    ``interior`` has shape (N, dim), ``boundary`` (N_b, dim) and ``normals``
    (N_b, dim). ``Ns`` is the number of grid intervals per axis, so the
    nominal spacing is ``1/Ns``.
    """

    dim: int
    Ns: int
    interior: np.ndarray
    boundary: np.ndarray
    normals: np.ndarray
    adaptation_h1: float | None = None

    @property
    def spacing_h(self) -> float:
        return 1.0 / self.Ns

    @property
    def n_interior(self) -> int:
        return self.interior.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.boundary.shape[0]

    @property
    def all_nodes(self) -> np.ndarray:
        return np.vstack([self.interior, self.boundary])

    def min_separation(self) -> float:
        pts = self.all_nodes
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        d[np.diag_indices_from(d)] = np.inf
        return float(d.min())


@dataclass(frozen=True)
class ShapeParameters:
    c: np.ndarray
    s: float

    def __post_init__(self):
        if np.any(np.asarray(self.c) <= 0):
            raise ValueError("shape parameters must be positive")


def _boundary_2d(Ns):
    t = np.arange(Ns + 1) / Ns
    pts, normals = [], []
    for k in range(Ns + 1):
        for l in range(Ns + 1):
            if k not in (0, Ns) and l not in (0, Ns):
                continue
            nx = -1.0 if k == 0 else (1.0 if k == Ns else 0.0)
            ny = -1.0 if l == 0 else (1.0 if l == Ns else 0.0)
            n = np.array([nx, ny])
            pts.append((t[k], t[l]))
            normals.append(n / np.linalg.norm(n))
    return np.array(pts), np.array(normals)


def _build(dim, Ns, axis_interior, h1):
    if dim == 1:
        interior = axis_interior[:, None]
        boundary = np.array([[0.0], [1.0]])
        normals = np.array([[-1.0], [1.0]])
    elif dim == 2:
        X, Y = np.meshgrid(axis_interior, axis_interior, indexing="ij")
        interior = np.column_stack([X.ravel(), Y.ravel()])
        boundary, normals = _boundary_2d(Ns)
    else:
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    nodes = NodeSet(dim, Ns, interior, boundary, normals, h1)
    if nodes.min_separation() <= 0.0:
        raise RuntimeError("node generation produced coincident nodes")
    return nodes


def generate_uniform_nodes(dim: int, Ns: int) -> NodeSet:
    """Grid nodes ``k/Ns``; those on the boundary of the domain form the boundary set.

    In 2D the corners are boundary nodes, each counted once, with the mean of the
    two side normals as their normal.
    """
    if Ns < 2:
        raise ValueError(f"Ns must be >= 2, got {Ns}")
    return _build(dim, Ns, np.arange(1, Ns) / Ns, None)


def generate_adapted_nodes(dim: int, Ns: int, h1: float) -> NodeSet:
    """Uniform grid with the boundary-adjacent rows pulled to distance ``h1/Ns``.

    ``h1`` is a fraction of the grid spacing. In 2D the rule applies to each
    coordinate separately.
    """
    if Ns < 3:
        raise ValueError(f"adapted nodes need Ns >= 3, got {Ns}")
    if not (H1_RANGE[0] <= h1 <= H1_RANGE[1]):
        raise ValueError(f"h1 must lie in {list(H1_RANGE)}, got {h1}")
    axis = np.arange(1, Ns) / Ns
    axis[0] = h1 / Ns
    axis[-1] = 1.0 - h1 / Ns
    return _build(dim, Ns, axis, h1)


def generate_nodes(dim: int, Ns: int, distribution: str = "uniform", h1: float | None = None) -> NodeSet:
    if distribution == "uniform":
        return generate_uniform_nodes(dim, Ns)
    if distribution == "adapted":
        if h1 is None:
            raise ValueError("adapted distribution requires h1")
        return generate_adapted_nodes(dim, Ns, h1)
    raise ValueError(f"unknown node distribution {distribution!r}")


def shape_params(nodes: NodeSet, s: float = DEFAULT_S) -> ShapeParameters:
    """Constant shape parameter ``c_j = s/(Ns - 1)`` for every node."""
    if s <= 0:
        raise ValueError(f"s must be positive, got {s}")
    total = nodes.n_interior + nodes.n_boundary
    return ShapeParameters(np.full(total, s / (nodes.Ns - 1)), float(s))


def _diff(center, point):
    center = np.asarray(center, dtype=float)
    point = np.asarray(point, dtype=float)
    if center.ndim == 0:
        center = center[None]
    if point.ndim == 0:
        point = point[None]
    return point - center


def eval_basis(center, c, point):
    d = _diff(center, point)
    return np.sqrt((d**2).sum(-1) + np.asarray(c, dtype=float) ** 2)


def eval_gradient(center, c, point):
    """Gradient with respect to ``point``; last axis indexes the coordinate."""
    d = _diff(center, point)
    g = np.sqrt((d**2).sum(-1) + np.asarray(c, dtype=float) ** 2)
    return d / g[..., None]


def eval_second_derivatives(center, c, point):
    """Diagonal of the Hessian, ``(g^2 - d_k^2)/g^3`` for each axis k."""
    d = _diff(center, point)
    g = np.sqrt((d**2).sum(-1) + np.asarray(c, dtype=float) ** 2)
    return (g[..., None] ** 2 - d**2) / g[..., None] ** 3


def eval_laplacian(center, c, point, dim=None):
    """Laplacian of the multiquadric: ``c^2/g^3`` in 1D, ``(r^2 + 2c^2)/g^3`` in 2D."""
    return eval_second_derivatives(center, c, point).sum(-1)
