"""Committed (Ns, node distribution, h1, s) choices for the reference tables.

Each s (and each free h1) was chosen by ``python3 -m mqcont.calibrate``:
the smallest off-node L2 residual among candidates whose Gamma map is not
flagged ill-conditioned. See ``mqcont.calibrate`` for the score.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Preset:
    Ns: int
    distribution: str
    s: float
    h1: float | None = None

    def discretization(self) -> dict:
        return {"Ns": self.Ns, "distribution": self.distribution, "h1": self.h1, "s": self.s}


PRESETS = {
    # eigenproblem, K = Ns - 1
    "table1a_K5": Preset(6, "uniform", 7.75),
    "table1a_K7": Preset(8, "uniform", 17.0),
    "table1a_K9": Preset(10, "uniform", 10.25),
    "table1b_K7": Preset(8, "adapted", 17.0, 0.25),
    "table1b_K9": Preset(10, "adapted", 14.5, 0.25),
    # 1D Bratu fold
    "table2_u_K5": Preset(6, "uniform", 4.75),
    "table2_u_K7": Preset(8, "uniform", 7.0),
    "table2_u_K9": Preset(10, "uniform", 9.25),
    "table2_nu_K5": Preset(6, "adapted", 5.0, 0.1),
    "table2_nu_K7": Preset(8, "adapted", 7.25, 0.35),
    "table2_nu_K9": Preset(10, "adapted", 9.25, 0.3),
    # 1D Brusselator, K = 2 (Ns - 1)
    "table3_u_K10": Preset(6, "uniform", 7.75),
    "table3_u_K14": Preset(8, "uniform", 17.0),
    "table3_u_K18": Preset(10, "uniform", 10.25),
    # 1D pattern formation
    "table4_nu_K18": Preset(10, "adapted", 4.25, 0.35),
    # 2D Bratu, K = (Ns - 1)^2
    "table5_u_K25": Preset(6, "uniform", 5.5),
    "table5_u_K49": Preset(8, "uniform", 6.25),
    "table5_u_K81": Preset(10, "uniform", 5.75),
    # 2D Brusselator, K = 2 (Ns - 1)^2
    "table6_u_K50": Preset(6, "uniform", 4.25),
    "table6_u_K72": Preset(7, "uniform", 7.0),
    "table6_u_K98": Preset(8, "uniform", 5.25),
    "table7_nu_K50": Preset(6, "adapted", 4.25, 0.5),
    "table7_nu_K72": Preset(7, "adapted", 6.75, 0.45),
    "table7_nu_K98": Preset(8, "adapted", 7.5, 0.5),
    "table8_u_K50": Preset(6, "uniform", 5.5),
    "table8_nu_K50": Preset(6, "adapted", 16.25, 0.5),
    "table8_u_K72": Preset(7, "uniform", 7.75),
    "table8_u_K98": Preset(8, "uniform", 6.25),
}
