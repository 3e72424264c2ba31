"""Delimited and text output of a run."""

from __future__ import annotations

import csv
import os

import numpy as np

from .config import dumps

BRANCH_HEADER = ("alpha", "norm2", "normInf", "newton_iters", "det_sign", "n_unstable")
EVENT_HEADER = ("kind", "alpha", "bracket", "re", "im")
EIGEN_HEADER = ("m", "exact", "computed", "rel_error", "vector_error", "residual")


def fmt(x) -> str:
    """Shortest round-trip text of a number (``repr`` of a float)."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def branch_rows(branch):
    for p in branch:
        s = p.spectrum_summary
        yield (p.alpha, np.linalg.norm(p.u), np.linalg.norm(p.u, np.inf), p.newton_iters,
               p.det_sign_bordered, None if s is None else s.n_unstable)


def event_rows(events):
    for e in events:
        c = e.certificate
        yield (e.kind, e.alpha_star, c.bracket_width, c.re, c.im)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in r])


def text_report(result) -> str:
    cfg = result.config
    lines = ["# configuration", dumps(cfg).rstrip(), "", "# run"]
    lines.append(f"problem: {result.entry.id}  unknowns: {result.system.size}")
    lines.append(f"cond(Gamma): {result.gamma_condition:.6e}")
    lines.append(f"wall time: {result.wall_time:.3f} s")
    if result.error:
        lines.append(f"error: {result.error}")
    for w in result.warnings:
        lines.append(f"warning: {w}")
    if result.eigen:
        lines += ["", "# eigenvalues", "m  exact  computed  rel_error  vector_error  residual"]
        for r in result.eigen:
            lines.append(f"{r.m}  {r.exact:.6f}  {r.computed:.6f}  {r.rel_error:.2e}  {r.vector_error:.2e}  {r.residual:.2e}")
    if cfg.mode != "eigen":
        lines += ["", f"# branch: {len(result.branch)} points"]
        for p in result.branch[:: max(1, len(result.branch) // 20)]:
            lines.append(f"{result.entry.alpha_name}={p.alpha:.8g}  |U|_2={np.linalg.norm(p.u):.6g}  "
                         f"|U|_inf={np.linalg.norm(p.u, np.inf):.6g}")
        lines += ["", "# events", "kind  alpha*  bracket  re  im"]
        for e in result.events:
            c = e.certificate
            lines.append(f"{e.kind}  {e.alpha_star:.10g}  {c.bracket_width:.2e}  {c.re:.3e}  {c.im:.3e}")
        if result.comparisons:
            lines += ["", "# comparison", "kind  exact  computed  rel_error"]
            for c in result.comparisons:
                comp = "-" if c.computed is None else f"{c.computed:.10g}"
                lines.append(f"{c.kind}  {c.exact:.10g}  {comp}  {c.rel_error:.2e}")
    return "\n".join(lines) + "\n"


def write_outputs(result, out_dir=None) -> dict:
    """Write CSVs, the text report and (if enabled) a PNG branch diagram. Returns the paths."""
    cfg = result.config
    out_dir = out_dir or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    base = os.path.join(out_dir, cfg.name)
    paths = {}
    if cfg.mode == "eigen":
        paths["eigen"] = base + "_eigen.csv"
        _write_csv(paths["eigen"], EIGEN_HEADER,
                   ((r.m, r.exact, r.computed, r.rel_error, r.vector_error, r.residual) for r in result.eigen))
    else:
        paths["branch"] = base + "_branch.csv"
        paths["events"] = base + "_events.csv"
        _write_csv(paths["branch"], BRANCH_HEADER, branch_rows(result.branch))
        _write_csv(paths["events"], EVENT_HEADER, event_rows(result.events))
        if cfg.plot and result.branch:
            from .plotting import branch_diagram

            paths["plot"] = branch_diagram(result, base + "_branch.png", title=result.entry.id)
    paths["report"] = base + "_report.txt"
    with open(paths["report"], "w", encoding="utf-8") as fh:
        fh.write(text_report(result))
    return paths
