"""Multiquadric collocation of a parametrized elliptic system ``D(a) L u - f = 0``.

Unknowns per component are ordered as the expansion

    u_h = a0 + sum_{j<N} a_j (g_j - g_N) + sum_{boundary j} a_j (g_j - g_N)

with the first block ``a1 = (a0, a_1, ..., a_{N-1})`` and the boundary block
``a2``. The last interior node is the reference centre ``g_N``. Boundary
collocation is solved for ``a2`` (the map psi), the interior values of
``u_h`` define the square map Gamma from ``a1`` to nodal values U, and the
interior collocation residual expressed in U is the continuation system.

For linear boundary conditions everything is affine, so Gamma, psi and the
nodal differentiation matrices are formed once per system; only the
boundary data ``gamma(x, alpha)`` changes with the parameter.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import basis
from .basis import NodeSet, ShapeParameters
from .linalg import EPS, LinAlgFailure, cond_svd, lu_factor, lu_solve

log = logging.getLogger(__name__)

ILL_CONDITIONED = 1.0 / (100.0 * EPS)
NEWTON_BC_MAXIT = 25
NEWTON_BC_TOL = 1e-10


class AssemblyError(RuntimeError):
    pass


class BoundarySolveError(RuntimeError):
    pass


class GammaInversionError(RuntimeError):
    def __init__(self, message, condition=np.inf):
        super().__init__(f"{message} (cond(Gamma) ~ {condition:.3e})")
        self.condition = condition


@dataclass(frozen=True)
class LinearBC:
    """``beta1 * du/dn + beta0 * u + gamma = 0`` on the boundary, per component.

    ``beta1(x)`` and ``beta0(x)`` return arrays of shape (n, N_b) and do not
    depend on the parameter; ``gamma(x, alpha)`` may.
    """

    beta1: Callable
    beta0: Callable
    gamma: Callable
    dgamma_dalpha: Callable | None = None

    linear = True

    def evaluate(self, dudn, u, x, alpha):
        return self.beta1(x) * dudn + self.beta0(x) * u + self.gamma(x, alpha)


@dataclass(frozen=True)
class NonlinearBC:
    """General pointwise boundary operator ``fb(du/dn, u, x, alpha)`` -> (n, N_b)."""

    fb: Callable

    linear = False

    def evaluate(self, dudn, u, x, alpha):
        return self.fb(dudn, u, x, alpha)


def dirichlet(values: Callable | float | np.ndarray, n: int = 1, dvalues: Callable | None = None) -> LinearBC:
    """``u = values(x, alpha)`` on the boundary."""
    if not callable(values):
        const = np.broadcast_to(np.asarray(values, dtype=float), (n,)).copy()
        values = lambda x, alpha: np.repeat(const[:, None], len(x), axis=1)  # noqa: E731
        dvalues = lambda x, alpha: np.zeros((n, len(x)))  # noqa: E731
    ones = lambda x: np.ones((n, len(x)))  # noqa: E731
    zeros = lambda x: np.zeros((n, len(x)))  # noqa: E731
    gamma = lambda x, alpha: -values(x, alpha)  # noqa: E731
    dgamma = None if dvalues is None else (lambda x, alpha: -dvalues(x, alpha))
    return LinearBC(zeros, ones, gamma, dgamma)


@dataclass(frozen=True)
class ProblemDefinition:
    """``diag(diffusion(a)) * L_w u - reaction(grad u, u, x, a) = 0`` with boundary operator.

    ``L_w = sum_k axis_weights[k] d^2/dx_k^2``; unit weights give the Laplacian.
    Array conventions, with P evaluation points: ``u`` (n, P), ``grad``
    (n, dim, P), ``x`` (P, dim); ``reaction`` returns (n, P),
    ``reaction_du`` (n, n, P), ``reaction_dgrad`` (n, n, dim, P),
    ``reaction_dalpha`` (n, P) and ``diffusion_dalpha`` (n,).
    """

    n: int
    dim: int
    diffusion: Callable
    reaction: Callable
    boundary: LinearBC | NonlinearBC
    reaction_du: Callable | None = None
    reaction_dgrad: Callable | None = None
    reaction_dalpha: Callable | None = None
    diffusion_dalpha: Callable | None = None
    uses_gradient: bool = False
    axis_weights: tuple | None = None
    name: str = ""

    @property
    def weights(self) -> np.ndarray:
        if self.axis_weights is None:
            return np.ones(self.dim)
        return np.asarray(self.axis_weights, dtype=float)

    @property
    def has_analytic_jacobians(self) -> bool:
        return self.reaction_du is not None and (not self.uses_gradient or self.reaction_dgrad is not None)


@dataclass(frozen=True)
class Expansion:
    a0: np.ndarray  # (n,)
    a1: np.ndarray  # (n, N-1)
    a2: np.ndarray  # (n, N_b)

    @property
    def first_block(self) -> np.ndarray:
        return np.concatenate([self.a0[:, None], self.a1], axis=1)

    @classmethod
    def from_blocks(cls, first, second):
        first = np.atleast_2d(first)
        return cls(first[:, 0].copy(), first[:, 1:].copy(), np.atleast_2d(second).copy())


@dataclass(frozen=True)
class NodalState:
    U: np.ndarray  # (n, N)
    alpha: float

    @property
    def flat(self) -> np.ndarray:
        return self.U.ravel()


def basis_columns(nodes: NodeSet, shapes: ShapeParameters, points):
    """Values, gradients and second derivatives of the expansion columns at ``points``.

    Returns (V, Gr, S) with V (P, N+N_b), Gr (dim, P, N+N_b), S (dim, P, N+N_b).
    Column 0 is the constant, columns 1..N-1 the interior differences and
    the last N_b the boundary differences.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    N = nodes.n_interior
    centers = nodes.all_nodes
    c = shapes.c
    keep = np.r_[0 : N - 1, N : len(centers)]
    ref = N - 1
    P = points[:, None, :]
    val = basis.eval_basis(centers[None, :, :], c[None, :], P)
    grd = basis.eval_gradient(centers[None, :, :], c[None, :], P)
    sec = basis.eval_second_derivatives(centers[None, :, :], c[None, :], P)
    V = np.hstack([np.ones((len(points), 1)), val[:, keep] - val[:, ref : ref + 1]])
    Gr = np.stack(
        [np.hstack([np.zeros((len(points), 1)), grd[:, keep, d] - grd[:, ref : ref + 1, d]]) for d in range(nodes.dim)]
    )
    S = np.stack(
        [np.hstack([np.zeros((len(points), 1)), sec[:, keep, d] - sec[:, ref : ref + 1, d]]) for d in range(nodes.dim)]
    )
    return V, Gr, S


@dataclass
class _ComponentOperator:
    """Affine elimination data for one component with linear boundary conditions."""

    Q: np.ndarray  # inverse of the boundary block, (N_b, N_b)
    B: np.ndarray  # a2 = B a1 - Q gamma, (N_b, N)
    Gamma: np.ndarray  # (N, N)
    gamma_lu: object
    C_gamma: np.ndarray  # U = Gamma a1 + C_gamma gamma
    L: np.ndarray  # nodal L_w matrix, (N, N)
    L_gamma: np.ndarray  # (N, N_b)
    D: list  # nodal first-derivative matrices per axis
    D_gamma: list
    cond: float
    beta0: np.ndarray

    def constant_shift(self, g) -> float:
        """A constant c with data gamma = -beta0 c; subtracting it avoids cancellation in L U + L_gamma g."""
        if np.all(self.beta0 != 0):
            return float(-np.mean(g / self.beta0))
        return 0.0


def _fd_step(x):
    return np.sqrt(EPS) * (1.0 + np.abs(x))


@dataclass
class DiscretizedSystem:
    problem: ProblemDefinition
    nodes: NodeSet
    shapes: ShapeParameters
    V_int: np.ndarray = field(repr=False)
    G_int: np.ndarray = field(repr=False)
    L_int: np.ndarray = field(repr=False)
    V_bnd: np.ndarray = field(repr=False)
    Dn_bnd: np.ndarray = field(repr=False)
    ops: list | None = field(default=None, repr=False)
    gamma_condition: float = np.nan
    warnings: list = field(default_factory=list)

    # -- sizes
    @property
    def n(self) -> int:
        return self.problem.n

    @property
    def N(self) -> int:
        return self.nodes.n_interior

    @property
    def Nb(self) -> int:
        return self.nodes.n_boundary

    @property
    def size(self) -> int:
        return self.n * self.N

    @property
    def linear_bc(self) -> bool:
        return self.problem.boundary.linear

    # -- boundary data
    def _gamma(self, alpha):
        return np.asarray(self.problem.boundary.gamma(self.nodes.boundary, alpha), dtype=float).reshape(self.n, self.Nb)

    def _dgamma(self, alpha):
        bc = self.problem.boundary
        if bc.dgamma_dalpha is not None:
            return np.asarray(bc.dgamma_dalpha(self.nodes.boundary, alpha), dtype=float).reshape(self.n, self.Nb)
        h = _fd_step(alpha)
        return (self._gamma(alpha + h) - self._gamma(alpha - h)) / (2 * h)

    def _diffusion(self, alpha):
        return np.asarray(self.problem.diffusion(alpha), dtype=float).reshape(self.n)

    def _ddiffusion(self, alpha):
        if self.problem.diffusion_dalpha is not None:
            return np.asarray(self.problem.diffusion_dalpha(alpha), dtype=float).reshape(self.n)
        h = _fd_step(alpha)
        return (self._diffusion(alpha + h) - self._diffusion(alpha - h)) / (2 * h)

    # -- expansion blocks
    def boundary_coeffs(self, a1, alpha):
        a1 = np.asarray(a1, dtype=float).reshape(self.n, self.N)
        if self.linear_bc:
            g = self._gamma(alpha)
            out = []
            for k, op in enumerate(self.ops):
                c = op.constant_shift(g[k])
                d1 = a1[k].copy()
                d1[0] -= c
                out.append(op.B @ d1 - op.Q @ (g[k] + op.beta0 * c))
            return np.stack(out)
        return self._psi_nonlinear(a1, alpha)

    def gamma_map(self, a1, alpha):
        a1 = np.asarray(a1, dtype=float).reshape(self.n, self.N)
        a2 = self.boundary_coeffs(a1, alpha)
        N = self.N
        return a1 @ self.V_int[:, :N].T + a2 @ self.V_int[:, N:].T

    def gamma_inverse(self, U, alpha):
        U = np.asarray(U, dtype=float).reshape(self.n, self.N)
        if self.linear_bc:
            g = self._gamma(alpha)
            out = []
            for k, op in enumerate(self.ops):
                # remove the constant matching the boundary data, solve, add it back
                c = op.constant_shift(g[k])
                a = lu_solve(op.gamma_lu, U[k] - c - op.C_gamma @ (g[k] + op.beta0 * c))
                a[0] += c
                out.append(a)
            return np.stack(out)
        return self._gamma_inverse_nonlinear(U, alpha)[0]

    def expansion(self, state: NodalState) -> Expansion:
        if not self.linear_bc:
            U = np.asarray(state.U, dtype=float).reshape(self.n, self.N)
            return Expansion.from_blocks(*self._gamma_inverse_nonlinear(U, state.alpha))
        a1 = self.gamma_inverse(state.U, state.alpha)
        return Expansion.from_blocks(a1, self.boundary_coeffs(a1, state.alpha))

    # -- the nodal system
    def fields(self, U, alpha):
        """(L_w u, grad u) at interior nodes for nodal values U."""
        U = np.asarray(U, dtype=float).reshape(self.n, self.N)
        if self.linear_bc:
            g = self._gamma(alpha)
            # constants are reproduced exactly, so shifting U and gamma by one is exact
            c = [op.constant_shift(g[k]) for k, op in enumerate(self.ops)]
            dU = [U[k] - c[k] for k in range(self.n)]
            dg = [g[k] + op.beta0 * c[k] for k, op in enumerate(self.ops)]
            lap = np.stack([op.L @ dU[k] + op.L_gamma @ dg[k] for k, op in enumerate(self.ops)])
            grad = np.stack(
                [
                    np.stack([op.D[d] @ dU[k] + op.D_gamma[d] @ dg[k] for d in range(self.nodes.dim)])
                    for k, op in enumerate(self.ops)
                ]
            )
            return lap, grad
        coef = np.concatenate(self._gamma_inverse_nonlinear(U, alpha), axis=1)
        lap = coef @ self.L_int.T
        grad = np.stack([coef @ self.G_int[d].T for d in range(self.nodes.dim)], axis=1)
        return lap, grad

    def evaluate(self, u, alpha) -> np.ndarray:
        """Flat residual G(U, alpha) of length n*N."""
        U = np.asarray(u, dtype=float).reshape(self.n, self.N)
        lap, grad = self.fields(U, alpha)
        f = self.problem.reaction(grad, U, self.nodes.interior, alpha)
        return (self._diffusion(alpha)[:, None] * lap - np.asarray(f).reshape(self.n, self.N)).ravel()

    def jac_u(self, u, alpha) -> np.ndarray:
        if not (self.linear_bc and self.problem.has_analytic_jacobians):
            return self.fd_jac_u(u, alpha)
        n, N, dim = self.n, self.N, self.nodes.dim
        U = np.asarray(u, dtype=float).reshape(n, N)
        x = self.nodes.interior
        dif = self._diffusion(alpha)
        grad = None
        if self.problem.uses_gradient:
            _, grad = self.fields(U, alpha)
        fu = np.asarray(self.problem.reaction_du(grad, U, x, alpha)).reshape(n, n, N)
        J = np.zeros((n * N, n * N))
        for k in range(n):
            rows = slice(k * N, (k + 1) * N)
            J[rows, rows] += dif[k] * self.ops[k].L
            for l in range(n):
                cols = slice(l * N, (l + 1) * N)
                J[rows, cols] -= np.diag(fu[k, l])
        if self.problem.uses_gradient:
            fg = np.asarray(self.problem.reaction_dgrad(grad, U, x, alpha)).reshape(n, n, dim, N)
            for k in range(n):
                for l in range(n):
                    for d in range(dim):
                        J[k * N : (k + 1) * N, l * N : (l + 1) * N] -= fg[k, l, d][:, None] * self.ops[l].D[d]
        return J

    def _reaction_dalpha(self, grad, U, alpha):
        x = self.nodes.interior
        if self.problem.reaction_dalpha is not None:
            return np.asarray(self.problem.reaction_dalpha(grad, U, x, alpha)).reshape(self.n, self.N)
        h = _fd_step(alpha)
        fp = self.problem.reaction(grad, U, x, alpha + h)
        fm = self.problem.reaction(grad, U, x, alpha - h)
        return (np.asarray(fp) - np.asarray(fm)).reshape(self.n, self.N) / (2 * h)

    def jac_alpha(self, u, alpha) -> np.ndarray:
        if not (self.linear_bc and self.problem.has_analytic_jacobians):
            return self.fd_jac_alpha(u, alpha)
        n, N, dim = self.n, self.N, self.nodes.dim
        U = np.asarray(u, dtype=float).reshape(n, N)
        x = self.nodes.interior
        lap, grad = self.fields(U, alpha)
        dg = self._dgamma(alpha)
        out = self._ddiffusion(alpha)[:, None] * lap
        dif = self._diffusion(alpha)
        for k, op in enumerate(self.ops):
            out[k] += dif[k] * (op.L_gamma @ dg[k])
        if self.problem.uses_gradient:
            fg = np.asarray(self.problem.reaction_dgrad(grad, U, x, alpha)).reshape(n, n, dim, N)
            for k in range(n):
                for l in range(n):
                    for d in range(dim):
                        out[k] -= fg[k, l, d] * (self.ops[l].D_gamma[d] @ dg[l])
        out -= self._reaction_dalpha(grad, U, alpha)
        return out.ravel()

    # -- finite-difference fallbacks and verification
    def fd_jac_u(self, u, alpha, central=False) -> np.ndarray:
        u = np.asarray(u, dtype=float).ravel()
        f0 = None if central else self.evaluate(u, alpha)
        J = np.empty((u.size, u.size))
        for i in range(u.size):
            h = _fd_step(u[i]) if not central else 1e-6 * (1.0 + abs(u[i]))
            up = u.copy()
            up[i] += h
            if central:
                um = u.copy()
                um[i] -= h
                J[:, i] = (self.evaluate(up, alpha) - self.evaluate(um, alpha)) / (2 * h)
            else:
                J[:, i] = (self.evaluate(up, alpha) - f0) / h
        return J

    def fd_jac_alpha(self, u, alpha, central=False) -> np.ndarray:
        if central:
            h = 1e-6 * (1.0 + abs(alpha))
            return (self.evaluate(u, alpha + h) - self.evaluate(u, alpha - h)) / (2 * h)
        h = _fd_step(alpha)
        return (self.evaluate(u, alpha + h) - self.evaluate(u, alpha)) / h

    def verify_jacobians(self, u, alpha) -> float:
        """Largest relative discrepancy between the Jacobians and central differences.

        Measured as max|J - J_fd| / max|J| over [G_U | G_alpha].
        """
        J = np.column_stack([self.jac_u(u, alpha), self.jac_alpha(u, alpha)])
        Jfd = np.column_stack([self.fd_jac_u(u, alpha, central=True), self.fd_jac_alpha(u, alpha, central=True)])
        return float(np.abs(J - Jfd).max() / max(np.abs(J).max(), 1e-300))

    # -- nonlinear boundary path
    def _bc_split(self):
        N = self.N
        return self.Dn_bnd[:, :N], self.Dn_bnd[:, N:], self.V_bnd[:, :N], self.V_bnd[:, N:]

    def _bc_residual(self, a1, a2, alpha):
        Dn1, Dn2, V1, V2 = self._bc_split()
        dudn = a1 @ Dn1.T + a2 @ Dn2.T
        u = a1 @ V1.T + a2 @ V2.T
        return np.asarray(self.problem.boundary.evaluate(dudn, u, self.nodes.boundary, alpha)).reshape(self.n, self.Nb)

    def _bc_pointwise_derivs(self, a1, a2, alpha):
        """d fb / d(du/dn) and d fb / du per boundary node, each (n, n, N_b)."""
        Dn1, Dn2, V1, V2 = self._bc_split()
        dudn = a1 @ Dn1.T + a2 @ Dn2.T
        u = a1 @ V1.T + a2 @ V2.T
        xb = self.nodes.boundary
        fb = self.problem.boundary.evaluate
        out = []
        for arg in (0, 1):
            d = np.empty((self.n, self.n, self.Nb))
            for l in range(self.n):
                base = [dudn.copy(), u.copy()]
                h = _fd_step(base[arg][l])
                plus = [b.copy() for b in base]
                minus = [b.copy() for b in base]
                plus[arg][l] += h
                minus[arg][l] -= h
                d[:, l, :] = (fb(*plus, xb, alpha) - fb(*minus, xb, alpha)) / (2 * h)
            out.append(d)
        return out

    def _bc_jacobian(self, a1, a2, alpha, block):
        Dn1, Dn2, V1, V2 = self._bc_split()
        Dn, V = (Dn2, V2) if block == 2 else (Dn1, V1)
        fdn, fu = self._bc_pointwise_derivs(a1, a2, alpha)
        m = Dn.shape[1]
        J = np.zeros((self.n * self.Nb, self.n * m))
        for k in range(self.n):
            for l in range(self.n):
                J[k * self.Nb : (k + 1) * self.Nb, l * m : (l + 1) * m] = fdn[k, l][:, None] * Dn + fu[k, l][:, None] * V
        return J

    def _psi_nonlinear(self, a1, alpha, a2=None):
        a2 = np.zeros((self.n, self.Nb)) if a2 is None else a2.copy()
        r = self._bc_residual(a1, a2, alpha)
        vmax = max(np.abs(self.V_bnd).max(), np.abs(self.Dn_bnd).max())
        for _ in range(NEWTON_BC_MAXIT):
            tol = NEWTON_BC_TOL + 100 * EPS * vmax * max(np.abs(a1).max(), np.abs(a2).max())
            if np.abs(r).max() <= tol and _ > 0:
                return a2
            J = self._bc_jacobian(a1, a2, alpha, block=2)
            fac = lu_factor(J)
            if fac.singular:
                raise AssemblyError("boundary elimination failed: singular boundary block")
            step = lu_solve(fac, r.ravel()).reshape(a2.shape)
            t, r_norm = 1.0, np.abs(r).max()
            while t > 1e-4:
                trial = a2 - t * step
                rt = self._bc_residual(a1, trial, alpha)
                if np.abs(rt).max() < r_norm or np.abs(rt).max() <= NEWTON_BC_TOL:
                    break
                t *= 0.5
            a2, r = trial, rt
        if np.abs(r).max() <= tol:
            return a2
        raise BoundarySolveError(f"boundary solve failed: residual {np.abs(r).max():.3e} after {NEWTON_BC_MAXIT} iterations")

    def _gamma_inverse_nonlinear(self, U, alpha):
        """Solve ``Gamma(a1) = U`` by damped Newton on the joint (a1, a2) system; returns both blocks."""
        n, N, Nb = self.n, self.N, self.Nb
        V1, V2 = self.V_int[:, :N], self.V_int[:, N:]
        I = np.eye(n)

        def residual(a1, a2):
            return np.concatenate([(a1 @ V1.T + a2 @ V2.T - U).ravel(), self._bc_residual(a1, a2, alpha).ravel()])

        a1, a2 = np.zeros((n, N)), np.zeros((n, Nb))
        r = residual(a1, a2)
        J = None
        vmax = max(np.abs(self.V_int).max(), np.abs(self.V_bnd).max(), np.abs(self.Dn_bnd).max())
        for _ in range(60):
            # roundoff floor grows with the coefficient size (coefficients reach ~cond(Gamma))
            floor = 1e-12 * (1.0 + np.abs(U).max()) + 100 * EPS * vmax * max(np.abs(a1).max(), np.abs(a2).max())
            if np.abs(r).max() <= floor:
                return a1, a2
            J = np.block([
                [np.kron(I, V1), np.kron(I, V2)],
                [self._bc_jacobian(a1, a2, alpha, block=1), self._bc_jacobian(a1, a2, alpha, block=2)],
            ])
            fac = lu_factor(J)
            if fac.singular:
                raise GammaInversionError("Gamma inversion failed")
            step = lu_solve(fac, r)
            t = 1.0
            while True:
                a1t = a1 - t * step[: n * N].reshape(n, N)
                a2t = a2 - t * step[n * N :].reshape(n, Nb)
                rt = residual(a1t, a2t)
                if np.abs(rt).max() < np.abs(r).max() or t < 1e-6:
                    break
                t *= 0.5
            a1, a2, r = a1t, a2t, rt
        raise GammaInversionError("Gamma inversion failed: Newton did not converge", cond_svd(J).ratio)

    # -- pointwise evaluation of u_h
    def eval_uh(self, expansion: Expansion, points, derivative=None):
        V, Gr, S = basis_columns(self.nodes, self.shapes, points)
        coef = np.concatenate([expansion.first_block, expansion.a2], axis=1)
        if derivative is None:
            return coef @ V.T
        if derivative == "grad":
            return np.stack([coef @ Gr[d].T for d in range(self.nodes.dim)], axis=1)
        if derivative == "second":
            return np.stack([coef @ S[d].T for d in range(self.nodes.dim)], axis=1)
        raise ValueError(derivative)

    def residual_field(self, state: NodalState, points) -> np.ndarray:
        """PDE residual of the reconstructed u_h at arbitrary points, shape (n, P)."""
        points = np.atleast_2d(points)
        exp = self.expansion(state)
        u = self.eval_uh(exp, points)
        grad = self.eval_uh(exp, points, "grad")
        sec = self.eval_uh(exp, points, "second")
        lw = np.tensordot(sec, self.problem.weights, axes=([1], [0]))
        f = np.asarray(self.problem.reaction(grad, u, points, state.alpha)).reshape(self.n, -1)
        return self._diffusion(state.alpha)[:, None] * lw - f

    def boundary_residual(self, state: NodalState) -> np.ndarray:
        exp = self.expansion(state)
        return self._bc_residual(exp.first_block, exp.a2, state.alpha)


def _component_operator(system: DiscretizedSystem, beta1, beta0) -> _ComponentOperator:
    N = system.N
    P = beta1[:, None] * system.Dn_bnd + beta0[:, None] * system.V_bnd
    P1, P2 = P[:, :N], P[:, N:]
    fac2 = lu_factor(P2)
    if fac2.singular or cond_svd(P2).ratio > 1e16:
        raise AssemblyError("boundary elimination failed: singular boundary block")
    Q = lu_solve(fac2, np.eye(system.Nb))
    B = -Q @ P1
    VI1, VI2 = system.V_int[:, :N], system.V_int[:, N:]
    Gamma = VI1 + VI2 @ B
    cond = cond_svd(Gamma).ratio
    glu = lu_factor(Gamma)
    if glu.singular or not np.isfinite(cond):
        raise GammaInversionError("Gamma inversion failed", cond)
    C_gamma = -VI2 @ Q

    def nodal(M):
        # M acts on (a1, a2); return M_U acting on U and M_gamma acting on gamma
        M1, M2 = M[:, :N], M[:, N:]
        MU = lu_solve(glu, (M1 + M2 @ B).T, trans=1).T
        Mg = -MU @ C_gamma - M2 @ Q
        return MU, Mg

    L, L_gamma = nodal(system.L_int)
    D, D_gamma = [], []
    for d in range(system.nodes.dim):
        Dd, Dg = nodal(system.G_int[d])
        D.append(Dd)
        D_gamma.append(Dg)
    return _ComponentOperator(Q, B, Gamma, glu, C_gamma, L, L_gamma, D, D_gamma, cond, np.asarray(beta0, dtype=float))


def build_system(problem: ProblemDefinition, nodes: NodeSet, shapes: ShapeParameters) -> DiscretizedSystem:
    if problem.dim != nodes.dim:
        raise ValueError(f"problem is {problem.dim}D but nodes are {nodes.dim}D")
    if len(shapes.c) != nodes.n_interior + nodes.n_boundary:
        raise ValueError("one shape parameter per node is required")
    Vi, Gi, Si = basis_columns(nodes, shapes, nodes.interior)
    Vb, Gb, _ = basis_columns(nodes, shapes, nodes.boundary)
    Li = np.tensordot(problem.weights, Si, axes=([0], [0]))
    Dn = np.einsum("bd,dbj->bj", nodes.normals, Gb)
    for M in (Vi, Gi, Li, Vb, Dn):
        if not np.all(np.isfinite(M)):
            raise AssemblyError("basis matrices are not finite")
    system = DiscretizedSystem(problem, nodes, shapes, Vi, Gi, Li, Vb, Dn)
    bc = problem.boundary
    if bc.linear:
        xb = nodes.boundary
        b1 = np.asarray(bc.beta1(xb), dtype=float).reshape(problem.n, nodes.n_boundary)
        b0 = np.asarray(bc.beta0(xb), dtype=float).reshape(problem.n, nodes.n_boundary)
        ops, cache = [], {}
        for k in range(problem.n):
            key = (b1[k].tobytes(), b0[k].tobytes())
            if key not in cache:
                cache[key] = _component_operator(system, b1[k], b0[k])
            ops.append(cache[key])
        system.ops = ops
        system.gamma_condition = max(op.cond for op in ops)
    else:
        VI1 = Vi[:, : nodes.n_interior]
        system.gamma_condition = cond_svd(VI1).ratio
    if system.gamma_condition > ILL_CONDITIONED:
        msg = f"ill-conditioned Gamma: cond ~ {system.gamma_condition:.3e}"
        system.warnings.append(msg)
        log.warning(msg)
    return system


# Module-level operations mirroring the methods above.


def eval_uh(system: DiscretizedSystem, expansion: Expansion, point) -> np.ndarray:
    out = system.eval_uh(expansion, np.atleast_2d(point))
    return out[:, 0] if np.ndim(point) <= 1 and np.atleast_2d(point).shape[0] == 1 else out


def solve_boundary_coeffs(system: DiscretizedSystem, a1, alpha) -> np.ndarray:
    return system.boundary_coeffs(a1, alpha)


def gamma_map(system: DiscretizedSystem, a1, alpha) -> np.ndarray:
    return system.gamma_map(a1, alpha)


def gamma_inverse(system: DiscretizedSystem, U, alpha) -> np.ndarray:
    return system.gamma_inverse(U, alpha)


def residual(system: DiscretizedSystem, state: NodalState) -> np.ndarray:
    return system.evaluate(state.U, state.alpha).reshape(system.n, system.N)


def jacobian_u(system: DiscretizedSystem, state: NodalState) -> np.ndarray:
    return system.jac_u(state.U, state.alpha)


def jacobian_alpha(system: DiscretizedSystem, state: NodalState) -> np.ndarray:
    return system.jac_alpha(state.U, state.alpha)


def build_nodal_operator(system: DiscretizedSystem, alpha: float = 0.0) -> np.ndarray:
    """Matrix A with ``G(U) = -A U`` for a linear problem with homogeneous boundary data."""
    zero = np.zeros(system.size)
    if np.abs(system.evaluate(zero, alpha)).max() > 1e-12:
        raise ValueError("nodal operator needs a homogeneous problem (G(0) != 0)")
    J0 = system.jac_u(zero, alpha)
    probe = np.linspace(0.3, 1.7, system.size)
    if np.abs(system.jac_u(probe, alpha) - J0).max() > 1e-9 * max(np.abs(J0).max(), 1.0):
        raise ValueError("nodal operator needs a linear problem")
    return -J0
