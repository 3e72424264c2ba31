"""Choose (s, h1) by the smallest L2 norm of the off-node residual.

Collocation makes the residual vanish at the nodes, so the quality of a
discretization is measured between them. For bifurcation problems the
quantity of interest is the critical mode, so the score combines

* the residual of the reconstructed solution ``u_h`` at the event, relative
  to the size of its terms,
* in 2D, the boundary-condition residual between boundary nodes, and
* the residual of the linearized operator applied to the critical
  eigenfunction, ``D L_w phi - f_u phi - mu phi``, relative to ``D L_w phi``.

Both are measured with a midpoint rule on a grid strictly inside the domain.
For continuation tables only candidates detecting the grid's most common
number of events compete, since merging two events can lower the mean residual.
"""

from __future__ import annotations

import itertools
from collections import Counter
import logging
from dataclasses import dataclass

import numpy as np

from .collocation import DiscretizedSystem, NodalState, basis_columns
from .linalg import eigen_full, lu_solve

log = logging.getLogger(__name__)


def quadrature_points(dim: int, m: int = 200) -> np.ndarray:
    t = (np.arange(m) + 0.5) / m
    if dim == 1:
        return t[:, None]
    X, Y = np.meshgrid(t, t, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def boundary_points(dim: int, m: int = 40):
    """Midpoints along the edges of the unit square with outward normals; None in 1D."""
    if dim == 1:
        return None
    t = (np.arange(m) + 0.5) / m
    z, o = np.zeros(m), np.ones(m)
    pts = np.concatenate([np.column_stack(c) for c in ((t, z), (o, t), (t, o), (z, t))])
    nrm = np.concatenate([np.tile(v, (m, 1)) for v in ((0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0))])
    return pts, nrm


def boundary_residual(system: DiscretizedSystem, state: NodalState, m: int = 40) -> float:
    """L2 residual of the boundary condition between boundary nodes, relative to max|u|.

    Collocation enforces the boundary condition only at boundary nodes; an
    expansion that satisfies the PDE inside can still drift between them.
    """
    bp = boundary_points(system.nodes.dim, m)
    if bp is None:
        return 0.0
    pts, nrm = bp
    exp = system.expansion(state)
    u = system.eval_uh(exp, pts)
    grad = system.eval_uh(exp, pts, "grad")
    dudn = np.einsum("kdp,pd->kp", grad, nrm)
    R = np.asarray(system.problem.boundary.evaluate(dudn, u, pts, state.alpha)).reshape(system.n, -1)
    scale = np.abs(state.U).max()
    return _l2(R) / scale if scale > 0 else _l2(R)


def _l2(values) -> float:
    return float(np.sqrt(np.mean(np.abs(values) ** 2)))


def _mode_fields(system: DiscretizedSystem, phi, points):
    """phi, grad phi and L_w phi at points for nodal values phi with homogeneous boundary data."""
    if not system.linear_bc:
        raise ValueError("mode residuals need linear boundary conditions")
    phi = np.asarray(phi).reshape(system.n, system.N)
    coef = []
    for k, op in enumerate(system.ops):
        a1 = lu_solve(op.gamma_lu, phi[k].real) + 1j * lu_solve(op.gamma_lu, phi[k].imag)
        coef.append(np.concatenate([a1, op.B @ a1]))
    coef = np.array(coef)
    V, Gr, S = basis_columns(system.nodes, system.shapes, points)
    w = system.problem.weights
    val = coef @ V.T
    grad = np.stack([coef @ Gr[d].T for d in range(system.nodes.dim)], axis=1)
    lw = sum(w[d] * (coef @ S[d].T) for d in range(system.nodes.dim))
    return val, grad, lw


def solution_residual(system: DiscretizedSystem, state: NodalState, points) -> float:
    """L2 residual of u_h between the nodes relative to the size of the terms that balance.

    The reaction size includes ``|f_u u|`` so that states where the terms cancel
    identically (e.g. a homogeneous steady state) are measured against the
    magnitude of the kinetics rather than against zero.
    """
    pb = system.problem
    exp = system.expansion(state)
    u = system.eval_uh(exp, points)
    grad = system.eval_uh(exp, points, "grad")
    sec = system.eval_uh(exp, points, "second")
    lw = np.tensordot(sec, pb.weights, axes=([1], [0]))
    D = system._diffusion(state.alpha)[:, None]
    f = np.asarray(pb.reaction(grad, u, points, state.alpha)).reshape(pb.n, -1)
    R = D * lw - f
    scale = _l2(D * lw) + _l2(f)
    if pb.reaction_du is not None:
        fu = np.asarray(pb.reaction_du(grad, u, points, state.alpha)).reshape(pb.n, pb.n, -1)
        scale += _l2(np.einsum("klp,lp->kp", fu, u))
    return _l2(R) / scale if scale > 0 else 0.0


def mode_residual(system: DiscretizedSystem, state: NodalState, mu: complex, phi, points) -> float:
    """Relative L2 residual of ``D L_w phi - f_u(u_h) phi - mu phi`` between the nodes."""
    pb = system.problem
    exp = system.expansion(state)
    u = system.eval_uh(exp, points)
    grad = system.eval_uh(exp, points, "grad")
    val, _, lw = _mode_fields(system, phi, points)
    D = system._diffusion(state.alpha)[:, None]
    if pb.reaction_du is None:
        raise ValueError("mode residuals need analytic reaction Jacobians")
    fu = np.asarray(pb.reaction_du(grad, u, points, state.alpha)).reshape(pb.n, pb.n, -1)
    R = D * lw - np.einsum("klp,lp->kp", fu, val) - mu * val
    return _l2(R) / max(_l2(D * lw), 1e-300)


def critical_mode(system: DiscretizedSystem, state: NodalState, target: complex = 0.0):
    """Eigenpair of G_u with eigenvalue closest to ``target``."""
    J = system.jac_u(state.U, state.alpha)
    spec = eigen_full(J, vectors=True)
    i = int(np.argmin(np.abs(spec.eigenvalues - target)))
    return complex(spec.eigenvalues[i]), spec.eigenvectors[:, i]


def event_score(system: DiscretizedSystem, state: NodalState, kind: str, im: float = 0.0, m: int = 200) -> float:
    pts = quadrature_points(system.nodes.dim, m if system.nodes.dim == 1 else 40)
    mu, phi = critical_mode(system, state, 1j * abs(im) if kind == "hopf" else 0.0)
    return solution_residual(system, state, pts) + boundary_residual(system, state) + mode_residual(system, state, mu, phi, pts)


def eigen_score(system: DiscretizedSystem, modes: int = 2, m: int = 200) -> float:
    """Score for the linear eigenproblem: residuals of the ``modes`` lowest eigenpairs."""
    pts = quadrature_points(system.nodes.dim, m)
    state = NodalState(np.zeros((system.n, system.N)), 0.0)
    J = system.jac_u(state.U, 0.0)
    spec = eigen_full(J, vectors=True)
    order = np.argsort(np.abs(spec.eigenvalues))[:modes]
    return float(sum(mode_residual(system, state, spec.eigenvalues[i], spec.eigenvectors[:, i], pts) for i in order))


@dataclass(frozen=True)
class ScanResult:
    s: float
    h1: float | None
    score: float
    detail: object = None


def scan(evaluate, s_values, h1_values=(None,)) -> list[ScanResult]:
    """Evaluate ``evaluate(s, h1) -> (score, detail)`` on a grid; failures score +inf. Sorted best first."""
    out = []
    for s, h1 in itertools.product(s_values, h1_values):
        try:
            score, detail = evaluate(float(s), None if h1 is None else float(h1))
        except Exception as exc:  # noqa: BLE001 - a failed candidate is just a bad candidate
            log.info("candidate s=%s h1=%s failed: %s", s, h1, exc)
            score, detail = np.inf, None
        if not np.isfinite(score):
            score = np.inf
        out.append(ScanResult(float(s), h1, float(score), detail))
    return sorted(out, key=lambda r: r.score)


# -- calibration of the committed table presets

S_GRID = np.arange(2.0, 20.0 + 1e-9, 0.25)
H1_GRID = np.round(np.arange(0.1, 0.5 + 1e-9, 0.05), 2)


def run_score(result, kinds=("fold", "branch", "hopf")) -> float:
    """Residual score of a finished run; ill-conditioned or failed runs score +inf."""
    system = result.system
    if system.warnings or result.error:
        return np.inf
    if result.config.mode == "eigen":
        return eigen_score(system)
    events = [e for e in result.events if e.kind in kinds]
    if not events:
        return np.inf
    scores = [event_score(system, e.point.state(system), e.kind, e.certificate.im) for e in events]
    return float(np.mean(scores))


def _candidate(args):
    from . import pipeline
    from .tables import TABLES

    name, index, s, h1 = args
    table = TABLES[name]
    row = table.rows[index]
    extra = {"s": s} if h1 is None else {"s": s, "h1": h1}
    try:
        result = pipeline.run(table.config(row, **extra))
        n_events = sum(1 for e in result.events if e.kind in table.kinds)
        return float(run_score(result, table.kinds)), n_events
    except Exception as exc:  # noqa: BLE001
        log.info("%s s=%s h1=%s failed: %s", row.preset, s, h1, exc)
        return np.inf, 0


def consensus_count(outcomes) -> int | None:
    """Most common event count among finite-score candidates (larger count on ties)."""
    counts = Counter(n for score, n in outcomes if np.isfinite(score))
    if not counts:
        return None
    return max(counts, key=lambda n: (counts[n], n))


def calibrate_table(name: str, s_values=S_GRID, h1_values=H1_GRID, processes: int | None = None) -> dict:
    """Best (s, h1) per row of ``name``; h1 is searched only for adapted rows of tables with a free h1."""
    from multiprocessing import Pool

    from .presets import PRESETS
    from .tables import TABLES

    table = TABLES[name]
    best = {}
    with Pool(processes) as pool:
        for i, row in enumerate(table.rows):
            p = PRESETS[row.preset]
            hs = tuple(h1_values) if (table.free_h1 and p.distribution == "adapted") else (p.h1,)
            grid = [(float(s), None if h is None else float(h)) for s in s_values for h in hs]
            outcomes = pool.map(_candidate, [(name, i, s, h) for s, h in grid])
            # a low residual is no merit when the run merged or skipped events
            target = None if table.mode == "eigen" else consensus_count(outcomes)
            ranked = sorted((sc if n == target or target is None else np.inf, g) for (sc, n), g in zip(outcomes, grid))
            best[row.preset] = ScanResult(ranked[0][1][0], ranked[0][1][1], ranked[0][0])
            log.warning("%s: s=%s h1=%s score=%.3e", row.preset, *ranked[0][1], ranked[0][0])
    return best


def main(argv=None) -> int:
    import argparse

    from .tables import TABLES

    ap = argparse.ArgumentParser(prog="python3 -m mqcont.calibrate", description=__doc__.splitlines()[0])
    ap.add_argument("tables", nargs="*", default=sorted(TABLES))
    ap.add_argument("--processes", type=int, default=None)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(message)s")
    for name in args.tables:
        for preset, r in calibrate_table(name, processes=args.processes).items():
            print(f'    "{preset}": s={r.s} h1={r.h1} score={r.score:.3e}', flush=True)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
