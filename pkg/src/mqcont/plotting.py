"""Branch diagram rendered to PNG next to the CSV output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

MARKERS = {"fold": ("o", "tab:red"), "branch": ("s", "tab:blue"), "hopf": ("^", "tab:green")}


def branch_diagram(result, path, title=None):
    alpha = np.array([p.alpha for p in result.branch])
    norm = np.array([np.linalg.norm(p.u, np.inf) for p in result.branch])
    fig, ax = plt.subplots(figsize=(6, 4), dpi=100)
    ax.plot(alpha, norm, "-", color="k", lw=1)
    for kind, (m, c) in MARKERS.items():
        ev = [e for e in result.events if e.kind == kind]
        if ev:
            ax.plot([e.alpha_star for e in ev], [np.linalg.norm(e.u_star, np.inf) for e in ev],
                    m, color=c, ls="none", label=kind)
    ax.set_xlabel(result.entry.alpha_name)
    ax.set_ylabel("max |U|")
    if title:
        ax.set_title(title)
    if result.events:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path
