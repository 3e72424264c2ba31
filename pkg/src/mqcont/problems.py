"""Benchmark problems, their closed-form oracles and a finite-difference comparison discretization.

All problems are written as ``D(alpha) L_w u - f(grad u, u, x, alpha) = 0`` with
``f`` chosen so that the time-dependent version ``u_t = D L_w u - f`` is the
usual reaction-diffusion model. The Jacobian eigenvalues of the discrete
system then carry the stability information used for Hopf detection.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable

import numpy as np

from .collocation import LinearBC, ProblemDefinition, dirichlet

PROBLEM_IDS = ("laplace_eigen_1d", "bratu_1d", "brusselator_1d", "pattern_1d", "bratu_2d", "brusselator_2d")


class InvalidParameters(ValueError):
    pass


class FDUnavailable(ValueError):
    pass


@dataclass(frozen=True)
class BratuParams:
    lam: float = 0.0

    def validate(self):
        pass


@dataclass(frozen=True)
class BrusselatorParams:
    d1: float = 1.0
    d2: float = 2.0
    a: float = 4.0
    b: float = 10.0
    l: float = 1.0

    def validate(self):
        if not (self.d1 > 0 and self.d2 > 0 and self.l > 0):
            raise InvalidParameters("d1, d2 and l must be positive")
        if not self.a > 0:
            raise InvalidParameters("a must be positive")


@dataclass(frozen=True)
class PatternParams:
    d1: float = 1e-5
    omega: float = 1e-2
    delta: float = 0.14
    beta: float = 1.0
    kappa: float = 0.001
    theta1: float = 1.0
    theta2: float = 1.0
    theta3: float = 0.0
    rho: float = 1.0
    us: float | None = None  # reference boundary values; default to the homogeneous state
    vs: float | None = None
    l: float = 0.035

    def validate(self):
        for name in ("theta1", "theta2", "theta3"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidParameters(f"{name} must lie in [0, 1]")
        if not (self.d1 > 0 and self.omega > 0 and self.delta > 0):
            raise InvalidParameters("d1, omega and delta must be positive")

    @property
    def homogeneous_state(self) -> tuple[float, float]:
        v = self.beta
        return self.beta / (self.kappa + v * v), v

    @property
    def reference_values(self) -> tuple[float, float]:
        u0, v0 = self.homogeneous_state
        return (u0 if self.us is None else self.us, v0 if self.vs is None else self.vs)


@dataclass(frozen=True)
class LaplaceParams:
    def validate(self):
        pass


PARAM_TYPES = {
    "laplace_eigen_1d": LaplaceParams,
    "bratu_1d": BratuParams,
    "brusselator_1d": BrusselatorParams,
    "pattern_1d": PatternParams,
    "bratu_2d": BratuParams,
    "brusselator_2d": BrusselatorParams,
}


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    problem: ProblemDefinition
    params: object
    alpha_name: str
    alpha0: float
    alpha_range: tuple
    initial_state: Callable  # (N,) -> (n, N) nodal values at alpha0
    detect: tuple = ("fold", "branch", "hopf")
    u_max: float = np.inf
    oracles: dict = field(default_factory=dict)

    def initial_nodal(self, n_interior: int) -> np.ndarray:
        return np.asarray(self.initial_state(n_interior), dtype=float).reshape(self.problem.n, n_interior)


def params_from_dict(problem_id: str, values: dict | None = None):
    cls = PARAM_TYPES[problem_id]
    values = dict(values or {})
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise InvalidParameters(f"unknown parameters for {problem_id}: {sorted(unknown)}")
    return cls(**values)


def params_to_dict(params) -> dict:
    return asdict(params)


# -- oracles


def oracle_brusselator_1d(params: BrusselatorParams, n: int) -> float:
    if n < 1:
        raise InvalidParameters("mode index must be >= 1")
    p = params
    k2 = (np.pi * n) ** 2
    return 1 + p.d1 / p.d2 * p.a**2 + k2 * p.d1 / p.l**2 + p.l**2 / k2 * p.a**2 / p.d2


def oracle_brusselator_2d_stationary(params: BrusselatorParams, m: int, n: int) -> float:
    if m < 1 or n < 1:
        raise InvalidParameters("mode indices must be >= 1")
    p = params
    q = m**2 / p.l**2 + n**2
    return 1 + p.d1 / p.d2 * p.a**2 + p.d1 * np.pi**2 * q + p.a**2 / (np.pi**2 * p.d2) * (p.l**2 / (m**2 + p.l**2 * n**2))


def oracle_brusselator_2d_hopf(params: BrusselatorParams, m: int, n: int) -> float:
    if m < 1 or n < 1:
        raise InvalidParameters("mode indices must be >= 1")
    p = params
    return 1 + p.a**2 + (p.d1 + p.d2) * (m**2 / p.l**2 + n**2) * np.pi**2


def oracle_laplace_eigen(m: int):
    """Dirichlet eigenpair of -u'' on (0, 1): ((pi m)^2, sin(pi m x))."""
    if m < 1:
        raise InvalidParameters("mode index must be >= 1")
    return (np.pi * m) ** 2, (lambda x: np.sin(np.pi * m * np.asarray(x)))


def pattern_kinetics_jacobian(params: PatternParams) -> np.ndarray:
    """Jacobian of ``-f`` (the kinetics) at the homogeneous state."""
    u, v = params.homogeneous_state
    k = params.kappa
    return np.array([[-(k + v * v), -2 * u * v], [k + v * v, 2 * u * v - 1.0]])


def oracle_pattern_bifurcations(params: PatternParams, l_range=(0.03, 0.34), max_mode=40) -> list[tuple[float, int]]:
    """Values of l where a Neumann mode cos(n pi x) destabilizes the homogeneous state.

    With ``d = d1/omega`` the linearization about the homogeneous state is
    singular when ``det(J - s diag(1, delta)) = 0`` for ``s = d (n pi / l)^2``.
    Each positive root s gives l = n pi sqrt(d / s).
    """
    J = pattern_kinetics_jacobian(params)
    dl = params.delta
    # det(J - s diag(1, delta)) = delta s^2 - (delta J11 + J22) s + det J
    roots = np.roots([dl, -(dl * J[0, 0] + J[1, 1]), np.linalg.det(J)])
    roots = [r.real for r in roots if abs(r.imag) < 1e-12 and r.real > 0]
    d = params.d1 / params.omega
    out = []
    for n in range(1, max_mode + 1):
        for s in roots:
            lv = n * np.pi * np.sqrt(d / s)
            if l_range[0] <= lv <= l_range[1]:
                out.append((float(lv), n))
    return sorted(out)


def fd_laplace_eigen(N: int) -> np.ndarray:
    """Closed-form eigenvalues 4 N^2 sin^2(pi m / 2N), m = 1..N-1, of the FD Dirichlet Laplacian."""
    if N < 2:
        raise InvalidParameters("N must be >= 2")
    m = np.arange(1, N)
    return 4.0 * N**2 * np.sin(np.pi * m / (2 * N)) ** 2


def fd_laplace_matrix(N: int) -> np.ndarray:
    """Matrix of -u'' by central differences on the mesh x_k = k/N, interior k = 1..N-1."""
    if N < 2:
        raise InvalidParameters("N must be >= 2")
    h2 = float(N) ** 2
    A = 2.0 * np.eye(N - 1) - np.eye(N - 1, k=1) - np.eye(N - 1, k=-1)
    return h2 * A


# -- problem constructors


def _zeros(n):
    return lambda x: np.zeros((n, len(x)))


def _laplace_1d():
    zero = lambda g, u, x, a: np.zeros_like(u)  # noqa: E731
    return ProblemDefinition(
        n=1,
        dim=1,
        diffusion=lambda a: np.ones(1),
        reaction=zero,
        boundary=dirichlet(0.0),
        reaction_du=lambda g, u, x, a: np.zeros((1, 1, u.shape[1])),
        reaction_dalpha=zero,
        diffusion_dalpha=lambda a: np.zeros(1),
        name="laplace_eigen_1d",
    )


def _bratu(dim):
    # u'' + lam e^u = 0  ->  f = -lam e^u
    return ProblemDefinition(
        n=1,
        dim=dim,
        diffusion=lambda a: np.ones(1),
        reaction=lambda g, u, x, a: -a * np.exp(u),
        boundary=dirichlet(0.0),
        reaction_du=lambda g, u, x, a: (-a * np.exp(u))[None],
        reaction_dalpha=lambda g, u, x, a: -np.exp(u),
        diffusion_dalpha=lambda a: np.zeros(1),
        name=f"bratu_{dim}d",
    )


def _brusselator(p: BrusselatorParams, dim):
    a = p.a

    def reaction(g, U, x, b):
        u, v = U
        return np.stack([(b + 1) * u - u * u * v - a, -b * u + u * u * v])

    def reaction_du(g, U, x, b):
        u, v = U
        return np.array([[(b + 1) - 2 * u * v, -u * u], [-b + 2 * u * v, u * u]])

    def reaction_db(g, U, x, b):
        u, _ = U
        return np.stack([u, -u])

    if dim == 1:
        diff = np.array([p.d1, p.d2]) / p.l**2
        weights = None
    else:
        # x is scaled by l, y is not: D = diag(d1, d2) with L_w = d_xx / l^2 + d_yy
        diff = np.array([p.d1, p.d2])
        weights = (1.0 / p.l**2, 1.0)

    def values(x, b):
        return np.stack([np.full(len(x), a), np.full(len(x), b / a)])

    def dvalues(x, b):
        return np.stack([np.zeros(len(x)), np.full(len(x), 1.0 / a)])

    return ProblemDefinition(
        n=2,
        dim=dim,
        diffusion=lambda b: diff.copy(),
        reaction=reaction,
        boundary=dirichlet(values, n=2, dvalues=dvalues),
        reaction_du=reaction_du,
        reaction_dalpha=reaction_db,
        diffusion_dalpha=lambda b: np.zeros(2),
        axis_weights=weights,
        name=f"brusselator_{dim}d",
    )


def _pattern(p: PatternParams):
    beta, kappa, delta = p.beta, p.kappa, p.delta
    scale = p.d1 / p.omega
    us, vs = p.reference_values

    def reaction(g, U, x, l):
        u, v = U
        return np.stack([-beta + kappa * u + u * v * v, -kappa * u - u * v * v + v])

    def reaction_du(g, U, x, l):
        u, v = U
        return np.array([[kappa + v * v, 2 * u * v], [-kappa - v * v, 1.0 - 2 * u * v]])

    def diffusion(l):
        return scale / l**2 * np.array([1.0, delta])

    def ddiffusion(l):
        return -2.0 * diffusion(l) / l

    t1, t2, t3, rho = p.theta1, p.theta2, p.theta3, p.rho
    beta1 = lambda x: np.stack([np.full(len(x), t1), np.full(len(x), delta * t2)])  # noqa: E731
    beta0 = lambda x: np.stack(  # noqa: E731
        [np.full(len(x), rho * (1 - t1)), np.full(len(x), delta * rho * (1 - t2))]
    )
    gamma = lambda x, l: np.stack(  # noqa: E731
        [np.full(len(x), -rho * (1 - t1) * t3 * us), np.full(len(x), -delta * rho * (1 - t2) * t3 * vs)]
    )
    bc = LinearBC(beta1, beta0, gamma, lambda x, l: np.zeros((2, len(x))))
    return ProblemDefinition(
        n=2,
        dim=1,
        diffusion=diffusion,
        reaction=reaction,
        boundary=bc,
        reaction_du=reaction_du,
        reaction_dalpha=lambda g, U, x, l: np.zeros_like(U),
        diffusion_dalpha=ddiffusion,
        name="pattern_1d",
    )


def catalog(problem_id: str, params=None) -> CatalogEntry:
    if problem_id not in PROBLEM_IDS:
        raise InvalidParameters(f"unknown problem id {problem_id!r}")
    if params is None or isinstance(params, dict):
        params = params_from_dict(problem_id, params)
    params.validate()

    if problem_id == "laplace_eigen_1d":
        return CatalogEntry(
            problem_id, _laplace_1d(), params, "alpha", 0.0, (0.0, 1.0),
            lambda N: np.zeros((1, N)), detect=(),
            oracles={"eigen": [oracle_laplace_eigen(m)[0] for m in range(1, 8)]},
        )
    if problem_id in ("bratu_1d", "bratu_2d"):
        dim = 1 if problem_id == "bratu_1d" else 2
        oracles = {"fold": 3.513830719} if dim == 1 else {"fold": 6.808124}
        return CatalogEntry(
            problem_id, _bratu(dim), params, "lambda", params.lam, (0.0, 4.0 if dim == 1 else 7.5),
            lambda N: np.zeros((1, N)), detect=("fold", "branch"), u_max=5.0 if dim == 1 else 6.0,
            oracles=oracles,
        )
    if problem_id == "brusselator_1d":
        a = params.a
        return CatalogEntry(
            problem_id, _brusselator(params, 1), params, "b", params.b, (10.0, 55.0),
            lambda N, b=params.b: np.stack([np.full(N, a), np.full(N, b / a)]),
            detect=("fold", "branch", "hopf"),
            oracles={"branch": [oracle_brusselator_1d(params, n) for n in (1, 2)]},
        )
    if problem_id == "brusselator_2d":
        a = params.a
        return CatalogEntry(
            problem_id, _brusselator(params, 2), params, "b", params.b, (10.0, 95.0),
            lambda N, b=params.b: np.stack([np.full(N, a), np.full(N, b / a)]),
            detect=("fold", "branch", "hopf"),
            oracles={
                "branch": [oracle_brusselator_2d_stationary(params, m, m) for m in (1, 2)],
                "hopf": [oracle_brusselator_2d_hopf(params, 1, 2)],
            },
        )
    u0, v0 = params.homogeneous_state
    return CatalogEntry(
        problem_id, _pattern(params), params, "l", params.l, (0.035, 0.32),
        lambda N: np.stack([np.full(N, u0), np.full(N, v0)]), detect=("fold", "branch"),
        oracles={"branch": [lv for lv, _ in oracle_pattern_bifurcations(params)]},
    )


# -- finite-difference comparison discretization


class FDSystem:
    """Second-order central differences on a uniform mesh with Dirichlet data.

    ``M`` interior points per axis at spacing ``1/(M+1)``. Unknowns use the
    same component-major layout as the collocation systems.
    """

    def __init__(self, problem: ProblemDefinition, M: int):
        bc = problem.boundary
        if not bc.linear:
            raise FDUnavailable("FD comparison unavailable: nonlinear boundary conditions")
        probe = np.array([[0.0] * problem.dim, [1.0] * problem.dim])
        if np.any(np.asarray(bc.beta1(probe)) != 0) or np.any(np.asarray(bc.beta0(probe)) == 0):
            raise FDUnavailable("FD comparison unavailable: only Dirichlet boundary conditions are supported")
        if M < 1:
            raise InvalidParameters("need at least one interior mesh point")
        self.problem, self.M, self.n = problem, M, problem.n
        h = 1.0 / (M + 1)
        t = np.arange(1, M + 1) * h
        self.h = h
        if problem.dim == 1:
            self.x = t[:, None]
        else:
            X, Y = np.meshgrid(t, t, indexing="ij")
            self.x = np.column_stack([X.ravel(), Y.ravel()])
        self.N = len(self.x)
        self.size = self.n * self.N
        self._build_operators()

    def _build_operators(self):
        M, h, dim = self.M, self.h, self.problem.dim
        T = (np.eye(M, k=1) - 2 * np.eye(M) + np.eye(M, k=-1)) / h**2
        C = (np.eye(M, k=1) - np.eye(M, k=-1)) / (2 * h)
        I = np.eye(M)
        w = self.problem.weights
        if dim == 1:
            self.L = w[0] * T
            self.Dx = [C]
        else:
            self.L = w[0] * np.kron(T, I) + w[1] * np.kron(I, T)
            self.Dx = [np.kron(C, I), np.kron(I, C)]
        # boundary neighbours: for every interior point, its ghost-free boundary neighbours
        side = np.array([0.0, 1.0])
        self._bnd = []
        for d in range(dim):
            for k, end in enumerate((0, M - 1)):
                idx = np.where(np.isclose(self.x[:, d], self.x[:, d].min() if k == 0 else self.x[:, d].max()))[0]
                pts = self.x[idx].copy()
                pts[:, d] = side[k]
                self._bnd.append((d, k, idx, pts))

    def _boundary_values(self, alpha):
        bc = self.problem.boundary
        out = []
        for d, k, idx, pts in self._bnd:
            g = np.asarray(bc.gamma(pts, alpha)).reshape(self.n, len(pts))
            b0 = np.asarray(bc.beta0(pts)).reshape(self.n, len(pts))
            out.append(-g / b0)
        return out

    def _fields(self, U, alpha):
        w = self.problem.weights
        bvals = self._boundary_values(alpha)
        lap = U @ self.L.T
        grad = np.stack([U @ D.T for D in self.Dx], axis=1)
        for (d, k, idx, _), ub in zip(self._bnd, bvals):
            lap[:, idx] += w[d] * ub / self.h**2
            sgn = -1.0 if k == 0 else 1.0
            grad[:, d, idx] += sgn * ub / (2 * self.h)
        return lap, grad

    def evaluate(self, u, alpha):
        U = np.asarray(u, dtype=float).reshape(self.n, self.N)
        lap, grad = self._fields(U, alpha)
        D = np.asarray(self.problem.diffusion(alpha)).reshape(self.n)
        f = np.asarray(self.problem.reaction(grad, U, self.x, alpha)).reshape(self.n, self.N)
        return (D[:, None] * lap - f).ravel()

    def jac_u(self, u, alpha):
        u = np.asarray(u, dtype=float)
        f0 = self.evaluate(u, alpha)
        J = np.empty((self.size, self.size))
        for i in range(self.size):
            h = 1e-7 * (1 + abs(u[i]))
            up = u.copy()
            up[i] += h
            J[:, i] = (self.evaluate(up, alpha) - f0) / h
        return J

    def jac_alpha(self, u, alpha):
        h = 1e-7 * (1 + abs(alpha))
        return (self.evaluate(u, alpha + h) - self.evaluate(u, alpha - h)) / (2 * h)


def fd_discretize(entry: CatalogEntry, mesh_points: int) -> FDSystem:
    """FD system on ``mesh_points`` interior points per axis."""
    return FDSystem(entry.problem, mesh_points)
