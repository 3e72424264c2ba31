"""Build, run and summarize one configured experiment."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import basis
from .collocation import DiscretizedSystem, build_nodal_operator, build_system
from .config import RunConfig
from .continuation import ContinuationError, hopf_certified, run_continuation
from .linalg import eigen_full
from .problems import CatalogEntry, catalog


def relative_error(computed: float, exact: float) -> float:
    """``(exact - computed) / exact``, the sign convention of the reference tables."""
    return (exact - computed) / exact


@dataclass
class EigenRow:
    m: int
    exact: float
    computed: float
    rel_error: float
    vector_error: float
    residual: float


@dataclass
class Comparison:
    kind: str
    exact: float
    computed: float | None

    @property
    def rel_error(self) -> float:
        return float("nan") if self.computed is None else relative_error(self.computed, self.exact)


@dataclass
class RunResult:
    config: RunConfig
    entry: CatalogEntry
    system: DiscretizedSystem
    branch: list = field(default_factory=list)
    events: list = field(default_factory=list)
    eigen: list = field(default_factory=list)
    comparisons: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    error: str | None = None
    wall_time: float = 0.0

    @property
    def gamma_condition(self) -> float:
        return self.system.gamma_condition

    def events_of(self, kind: str) -> list:
        return [e for e in self.events if e.kind == kind]


def build(config: RunConfig):
    entry = catalog(config.problem, config.params)
    d = config.discretization
    nodes = basis.generate_nodes(entry.problem.dim, d.Ns, d.distribution, d.h1)
    system = build_system(entry.problem, nodes, basis.shape_params(nodes, d.s))
    return entry, system


def nearest(values, target):
    values = list(values)
    if not values:
        return None
    return min(values, key=lambda v: abs(v - target))


def _eigen_rows(system, count):
    A = build_nodal_operator(system)
    spec = eigen_full(A, vectors=True)
    order = np.argsort(spec.eigenvalues.real)
    x = system.nodes.interior[:, 0]
    rows = []
    norm_a = np.abs(A).sum(axis=1).max()
    for m, i in enumerate(order[:count], start=1):
        lam = (np.pi * m) ** 2
        v = spec.eigenvectors[:, i].real
        ref = np.sin(np.pi * m * x)
        scale = np.dot(v, ref) / np.dot(v, v)
        verr = np.abs(scale * v - ref).max() / np.abs(ref).max()
        lm = float(spec.eigenvalues[i].real)
        rows.append(EigenRow(m, lam, lm, relative_error(lm, lam), float(verr), float(spec.residuals[i] / norm_a)))
    return rows


def run(config: RunConfig) -> RunResult:
    t0 = time.perf_counter()
    entry, system = build(config)
    result = RunResult(config, entry, system, warnings=list(system.warnings))
    if config.mode == "eigen":
        result.eigen = _eigen_rows(system, config.eigen_count)
    else:
        settings = config.settings(entry.alpha_range, entry.detect, entry.u_max)
        u0 = entry.initial_nodal(system.N).ravel()
        try:
            res = run_continuation(system, u0, entry.alpha0, settings)
            result.branch, result.events = res.branch, res.events
            result.warnings += res.warnings
        except ContinuationError as exc:
            result.branch, result.events = exc.branch, exc.events
            result.error = str(exc)
        for kind, exact in entry.oracles.items():
            if kind not in settings.detect:
                continue
            found = [e.alpha_star for e in result.events if e.kind == kind and (kind != "hopf" or hopf_certified(e))]
            for value in np.atleast_1d(exact):
                result.comparisons.append(Comparison(kind, float(value), nearest(found, value)))
    result.wall_time = time.perf_counter() - t0
    return result
