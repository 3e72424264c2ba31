"""Reference benchmark tables: run every row and juxtapose computed values with exact ones."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import pipeline
from .config import Discretization, RunConfig
from .continuation import hopf_certified
from .presets import PRESETS
from .problems import catalog, oracle_pattern_bifurcations, params_from_dict


@dataclass(frozen=True)
class Quantity:
    key: str
    kind: str  # "eigen" or an event kind
    exact: float
    index: int = 0  # eigen mode number for kind "eigen"


@dataclass(frozen=True)
class Row:
    label: str
    preset: str
    published: dict = field(default_factory=dict)  # quantity key -> published value


@dataclass(frozen=True)
class Table:
    name: str
    title: str
    problem: str
    quantities: tuple
    rows: tuple
    params: dict = field(default_factory=dict)
    mode: str = "continue"
    continuation: dict = field(default_factory=dict)
    free_h1: bool = False

    def config(self, row: Row, output_dir: str = "out", **disc) -> RunConfig:
        d = PRESETS[row.preset].discretization()
        d.update(disc)
        return RunConfig(
            problem=self.problem,
            params=dict(self.params),
            discretization=replace(Discretization(), preset=row.preset, **d),
            mode="eigen" if self.mode == "eigen" else "continue",
            eigen_count=max((q.index for q in self.quantities), default=4),
            continuation=dict(self.continuation),
            output_dir=output_dir,
            name=f"{self.name}_{row.preset}",
            plot=False,
        )

    @property
    def kinds(self) -> tuple:
        return tuple(sorted({q.kind for q in self.quantities}))


def measure(result: pipeline.RunResult, q: Quantity):
    """Computed value of ``q`` in ``result``, or None when it was not found."""
    if q.kind == "eigen":
        rows = [r for r in result.eigen if r.m == q.index]
        return rows[0].computed if rows else None
    found = [e.alpha_star for e in result.events if e.kind == q.kind and (q.kind != "hopf" or hopf_certified(e))]
    return pipeline.nearest(found, q.exact)


@dataclass
class TableResult:
    table: Table
    runs: list  # RunResult per row

    def value(self, row_index: int, key: str):
        q = next(q for q in self.table.quantities if q.key == key)
        return measure(self.runs[row_index], q)

    def rel_error(self, row_index: int, key: str) -> float:
        q = next(q for q in self.table.quantities if q.key == key)
        v = measure(self.runs[row_index], q)
        return np.nan if v is None else pipeline.relative_error(v, q.exact)


def run_table(table: Table, output_dir: str = "out") -> TableResult:
    return TableResult(table, [pipeline.run(table.config(row, output_dir)) for row in table.rows])


def _num(v, spec=".7g"):
    return "-" if v is None or (isinstance(v, float) and np.isnan(v)) else format(v, spec)


def format_table(res: TableResult) -> str:
    t = res.table
    lines = [f"{t.name}: {t.title}"]
    head = f"{'quantity':<12}{'exact':>14}"
    for row in t.rows:
        head += f" | {row.label:>26}"
    lines.append(head)
    for q in t.quantities:
        vals = f"{q.key:<12}{_num(q.exact, '.8g'):>14}"
        errs = f"{'rel. error':<12}{'':>14}"
        pubs = f"{'published':<12}{'':>14}"
        for i, row in enumerate(t.rows):
            v = measure(res.runs[i], q)
            e = np.nan if v is None else pipeline.relative_error(v, q.exact)
            p = row.published.get(q.key)
            pe = None if p is None else pipeline.relative_error(p, q.exact)
            vals += f" | {_num(v, '.8g'):>26}"
            errs += f" | {_num(e, '.2e'):>26}"
            pubs += f" | {_num(p, '.8g') + ' (' + _num(pe, '.1e') + ')':>26}"
        lines += [vals, errs, pubs]
    for i, row in enumerate(t.rows):
        r = res.runs[i]
        d = r.config.discretization
        lines.append(
            f"  {row.label}: Ns={d.Ns} {d.distribution} h1={d.h1} s={d.s} cond(Gamma)={r.gamma_condition:.2e} "
            f"time={r.wall_time:.2f}s" + (f" error={r.error}" if r.error else "")
        )
        for w in r.warnings:
            lines.append(f"    warning: {w}")
    return "\n".join(lines) + "\n"


def _eigen_quantities(count):
    return tuple(Quantity(f"lambda_{m}", "eigen", float((np.pi * m) ** 2), m) for m in range(1, count + 1))


def _pattern_quantities():
    p = params_from_dict("pattern_1d", {})
    vals = [lv for lv, _ in oracle_pattern_bifurcations(p, (0.035, 0.32))]
    return tuple(Quantity(f"l_{i + 1}", "branch", v) for i, v in enumerate(vals))


_BRATU_2D = catalog("bratu_2d").oracles["fold"]
_BRUSS_2D = catalog("brusselator_2d").oracles["branch"]
_HOPF_PARAMS = {"a": 10.0, "b": 150.0, "l": 10.0, "d1": 1.0, "d2": 1.0}

TABLES = {
    "table1a": Table(
        "table1a", "Laplacian eigenvalues, uniform nodes", "laplace_eigen_1d", _eigen_quantities(4),
        (
            Row("MQ(u), K=5", "table1a_K5", {"lambda_1": 9.86596, "lambda_2": 39.6492}),
            Row("MQ(u), K=7", "table1a_K7", {"lambda_1": 9.86821, "lambda_2": 39.4738, "lambda_3": 89.3648}),
            Row("MQ(u), K=9", "table1a_K9",
                {"lambda_1": 9.86901, "lambda_2": 39.4846, "lambda_3": 89.1667, "lambda_4": 159.689}),
        ),
        mode="eigen",
    ),
    "table1b": Table(
        "table1b", "Laplacian eigenvalues, adapted nodes h1 = 0.25", "laplace_eigen_1d", _eigen_quantities(4),
        (
            Row("MQ(nu), K=7", "table1b_K7", {"lambda_1": 9.86961, "lambda_2": 39.4782, "lambda_3": 88.8139}),
            Row("MQ(nu), K=9", "table1b_K9",
                {"lambda_1": 9.86960, "lambda_2": 39.4783, "lambda_3": 88.8241, "lambda_4": 157.882}),
        ),
        mode="eigen",
    ),
    "table2": Table(
        "table2", "1D Bratu limit point", "bratu_1d", (Quantity("lambda*", "fold", 3.513830719),),
        (
            Row("MQ(u), K=5", "table2_u_K5", {"lambda*": 3.512609}),
            Row("MQ(u), K=7", "table2_u_K7", {"lambda*": 3.514224}),
            Row("MQ(u), K=9", "table2_u_K9", {"lambda*": 3.514047}),
            Row("MQ(nu), K=5", "table2_nu_K5", {"lambda*": 3.514010}),
            Row("MQ(nu), K=7", "table2_nu_K7", {"lambda*": 3.513809}),
            Row("MQ(nu), K=9", "table2_nu_K9", {"lambda*": 3.513828}),
        ),
        free_h1=True,
    ),
    "table3": Table(
        "table3", "1D Brusselator branch points", "brusselator_1d",
        tuple(Quantity(f"b_{i + 1}", "branch", v) for i, v in enumerate(catalog("brusselator_1d").oracles["branch"])),
        (
            Row("MQ(u), K=10", "table3_u_K10", {"b_1": 19.67366, "b_2": 48.57476}),
            Row("MQ(u), K=14", "table3_u_K14", {"b_1": 19.67786, "b_2": 48.63168}),
            Row("MQ(u), K=18", "table3_u_K18", {"b_1": 19.67919, "b_2": 48.65605}),
        ),
        continuation={"detect": ("branch",)},
    ),
    "table4": Table(
        "table4", "1D pattern formation bifurcation points in l", "pattern_1d", _pattern_quantities(),
        (
            Row("MQ(nu), K=18", "table4_nu_K18", {
                "l_1": 0.0465, "l_2": 0.0793, "l_3": 0.093, "l_4": 0.140, "l_5": 0.159,
                "l_6": 0.186, "l_7": 0.233, "l_8": 0.238, "l_9": 0.279, "l_10": 0.317,
            }),
        ),
        continuation={"alpha_range": (0.035, 0.32), "ds_initial": 0.002, "ds_max": 0.002, "detect": ("branch",)},
        free_h1=True,
    ),
    "table5": Table(
        "table5", "2D Bratu limit point", "bratu_2d", (Quantity("lambda*", "fold", _BRATU_2D),),
        (
            Row("MQ(u), K=25", "table5_u_K25", {"lambda*": 6.873498}),
            Row("MQ(u), K=49", "table5_u_K49", {"lambda*": 6.840836}),
            Row("MQ(u), K=81", "table5_u_K81", {"lambda*": 6.827400}),
        ),
    ),
    "table6": Table(
        "table6", "2D Brusselator branch points, uniform nodes", "brusselator_2d",
        (Quantity("b_11", "branch", _BRUSS_2D[0]), Quantity("b_22", "branch", _BRUSS_2D[1])),
        (
            Row("MQ(u), K=50", "table6_u_K50", {"b_11": 29.16280, "b_22": 87.61578}),
            Row("MQ(u), K=72", "table6_u_K72", {"b_11": 29.17050, "b_22": 87.86924}),
            Row("MQ(u), K=98", "table6_u_K98", {"b_11": 29.16062, "b_22": 88.00143}),
        ),
        continuation={"detect": ("branch",)},
    ),
    "table7": Table(
        "table7", "2D Brusselator branch points, adapted nodes", "brusselator_2d",
        (Quantity("b_11", "branch", _BRUSS_2D[0]), Quantity("b_22", "branch", _BRUSS_2D[1])),
        (
            Row("MQ(nu), K=50", "table7_nu_K50", {"b_11": 29.14621, "b_22": 88.15470}),
            Row("MQ(nu), K=72", "table7_nu_K72", {"b_11": 29.14726, "b_22": 87.93391}),
            Row("MQ(nu), K=98", "table7_nu_K98", {"b_11": 29.14431, "b_22": 88.07288}),
        ),
        continuation={"detect": ("branch",)},
        free_h1=True,
    ),
    "table8": Table(
        "table8", "2D Brusselator Hopf point, a = 10, l = 10, d1 = d2 = 1", "brusselator_2d",
        (Quantity("b_12", "hopf", catalog("brusselator_2d", _HOPF_PARAMS).oracles["hopf"][0]),),
        (
            Row("MQ(u), K=50", "table8_u_K50", {"b_12": 181.8625}),
            Row("MQ(nu), K=50", "table8_nu_K50", {"b_12": 180.7880}),
            Row("MQ(u), K=72", "table8_u_K72", {"b_12": 181.0696}),
            Row("MQ(u), K=98", "table8_u_K98", {"b_12": 180.492}),
        ),
        params=_HOPF_PARAMS,
        continuation={"alpha_range": (150.0, 200.0), "detect": ("hopf",)},
        free_h1=True,
    ),
}

