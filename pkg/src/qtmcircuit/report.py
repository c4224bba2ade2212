"""Summary tables (CSV) and a figure (PNG) for the main constructions."""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .compiler import CellLayout, compile_machine  # noqa: E402
from .decompose import approx_angle  # noqa: E402
from .harness import universal_simulate  # noqa: E402
from .qcfcode import QFT_FAMILY, family_size  # noqa: E402
from .toys import TOY_MACHINES  # noqa: E402


def compiler_rows(machine_name: str = "hadamard", t_max: int = 3):
    m = TOY_MACHINES[machine_name]()
    rows = []
    for t in range(1, t_max + 1):
        layout = CellLayout.for_machine(m, t)
        rows.append({"machine": machine_name, "t": t, "width": layout.width,
                     "steps": compile_machine(m, t).size, "formula": 2 * t * t})
    return rows


def qft_rows(n_max: int = 8):
    return [{"n": n, "entries": c, "formula": QFT_FAMILY.size(n)} for n, c in family_size(QFT_FAMILY, n_max)]


def angle_rows(theta: float = 1.0, exponents=(1, 1.5, 2, 2.5, 3)):
    rows = []
    for e in exponents:
        eps = 10.0 ** (-e)
        a = approx_angle(theta, eps)
        rows.append({"theta": theta, "epsilon": eps, "k": a.k, "residual": a.residual})
    return rows


def universal_rows(machine_name: str = "hwalker3", t: int = 2, epsilons=(0.2, 0.1, 0.05)):
    m = TOY_MACHINES[machine_name]()
    rows = []
    for eps in epsilons:
        r = universal_simulate(m, t, eps, "")
        rows.append({"machine": machine_name, "t": t, "epsilon": eps, "budget": r.budget,
                     "g1_error": r.g1_error, "tv": r.tv})
    return rows


def _write_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def write_report(out_dir: str) -> list[str]:
    """Write the CSV tables and report.png into ``out_dir``; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    tables = {"compiler_sizes.csv": compiler_rows(), "qft_sizes.csv": qft_rows(),
              "angle_approx.csv": angle_rows(), "universal_tv.csv": universal_rows()}
    paths = []
    for name, rows in tables.items():
        path = os.path.join(out_dir, name)
        _write_csv(path, rows)
        paths.append(path)

    fig, axes = plt.subplots(1, 3, figsize=(13, 3.8))
    q = tables["qft_sizes.csv"]
    axes[0].plot([r["n"] for r in q], [r["entries"] for r in q], "o-", label="generated")
    axes[0].plot([r["n"] for r in q], [r["formula"] for r in q], "k--", label="2n + 7n(n-1)/2")
    axes[0].set(xlabel="n", ylabel="code entries", title="QFT family size")
    axes[0].legend()
    c = tables["compiler_sizes.csv"]
    axes[1].bar([str(r["t"]) for r in c], [r["steps"] for r in c])
    axes[1].set(xlabel="t", ylabel="G1/G2 placements", title="Compiled circuit size")
    a = tables["angle_approx.csv"]
    axes[2].loglog([r["epsilon"] for r in a], [max(r["k"], 1) for r in a], "o-")
    axes[2].set(xlabel="epsilon", ylabel="k", title="Multiples of R needed")
    fig.tight_layout()
    png = os.path.join(out_dir, "report.png")
    fig.savefig(png, dpi=100)
    plt.close(fig)
    paths.append(png)
    return paths
