"""Report emission: delimited tables, structured JSON, and rendered figures.

Every run writes machine-readable artifacts (CSV with a fixed header order,
JSON with sorted keys and round-trip-exact floats) plus PNG figures rendered
alongside them.  Identical inputs produce byte-identical tables.
"""

from __future__ import annotations

import csv
import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .certify import Certificate, OracleReport
from .construct import ProductRecord
from .schedules import AngleSolution, ChainMargin
from .verdicts import FAIL, INCONCLUSIVE, PASS, SKIPPED

__all__ = [
    "write_certificate_csv",
    "write_certificate_json",
    "write_product_csv",
    "write_solution_csv",
    "write_margins_csv",
    "write_analysis_csv",
    "render_certificate_figure",
    "render_product_figure",
    "render_solution_figure",
    "render_margin_figure",
    "render_analysis_figure",
]

CERT_HEADER = ["condition_id", "j", "n", "k", "residual", "verdict"]

_VERDICT_COLORS = {PASS: "tab:green", FAIL: "tab:red", INCONCLUSIVE: "tab:orange", SKIPPED: "tab:gray"}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_certificate_csv(cert: Certificate, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CERT_HEADER)
        for r in cert.records:
            writer.writerow(
                [r.condition, _fmt(r.level), _fmt(r.freq), _fmt(r.shift), _fmt(r.residual), r.verdict]
            )


def write_certificate_json(cert: Certificate, path, extra: dict | None = None) -> None:
    payload = {
        "global_verdict": cert.global_verdict,
        "horizon": cert.horizon,
        "tolerances": cert.tolerances,
        "counts": cert.counts(),
        "records": [
            {
                "condition_id": r.condition,
                "j": r.level,
                "n": r.freq,
                "k": r.shift,
                "residual": r.residual,
                "verdict": r.verdict,
                "detail": r.detail,
            }
            for r in cert.records
        ],
    }
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def oracle_to_dict(report: OracleReport) -> dict:
    return {
        "trials": report.trials,
        "degree": report.degree,
        "horizon": report.horizon,
        "max_rel_error": report.max_rel_error,
        "verdict": report.verdict,
        "tol": report.tol,
    }


def write_product_csv(records: list[ProductRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "j1", "product", "target", "xi", "verdict"])
        for r in records:
            writer.writerow(
                [r.n, r.j1, _fmt(r.product), _fmt(r.target), _fmt(r.xi), r.verdict]
            )


def write_solution_csv(solution: AngleSolution, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "n", "cos2"])
        for level in sorted(solution.cos2):
            for n, val in enumerate(solution.cos2[level]):
                if np.isfinite(val):
                    writer.writerow([level, n, _fmt(float(val))])


def write_margins_csv(margins: list[ChainMargin], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["inequality", "k", "m_level", "margin", "tail_estimate", "terms", "verdict"])
        for r in margins:
            writer.writerow(
                [r.inequality, r.k, r.m_level, _fmt(r.margin), _fmt(r.tail_estimate), r.terms, r.verdict]
            )


def write_analysis_csv(tables: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]], path) -> None:
    """tables maps (level, generator) to (shifts, coefficients)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "m", "k", "re", "im", "abs2"])
        for (j, m) in sorted(tables):
            shifts, coeffs = tables[(j, m)]
            for k, c in zip(shifts, coeffs):
                writer.writerow(
                    [j, m, int(k), _fmt(float(c.real)), _fmt(float(c.imag)), _fmt(float(abs(c) ** 2))]
                )


def _save(fig, path):
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_certificate_figure(cert: Certificate, path) -> None:
    """Residuals per condition on a log scale, colored by verdict."""
    fig, ax = plt.subplots(figsize=(9, 4.5))
    conditions = sorted({r.condition for r in cert.records})
    floor = 1e-18
    for ci, cond in enumerate(conditions):
        rows = [r for r in cert.records if r.condition == cond]
        xs = ci + np.linspace(-0.3, 0.3, len(rows))
        ys = [max(r.residual, floor) for r in rows]
        colors = [_VERDICT_COLORS.get(r.verdict, "k") for r in rows]
        ax.scatter(xs, ys, s=8, c=colors, alpha=0.7, linewidths=0)
    ax.set_yscale("log")
    ax.set_xticks(range(len(conditions)))
    ax.set_xticklabels(conditions, rotation=15)
    ax.set_ylabel("residual")
    ax.set_title(f"certificate: {cert.global_verdict} (horizon {cert.horizon})")
    for tol_name, tol in cert.tolerances.items():
        ax.axhline(tol, ls="--", lw=0.8, alpha=0.5)
        ax.annotate(tol_name, (0.02, tol), fontsize=7, xycoords=("axes fraction", "data"))
    fig.tight_layout()
    _save(fig, path)


def render_product_figure(records: list[ProductRecord], path) -> None:
    fig, ax = plt.subplots(figsize=(8, 4))
    ns = [r.n for r in records]
    xis = [r.xi for r in records]
    colors = [_VERDICT_COLORS.get(r.verdict, "k") for r in records]
    ax.scatter(ns, xis, s=10, c=colors, linewidths=0)
    ax.axhline(1.0, color="k", lw=0.8, ls="--")
    ax.set_xlabel("frequency n")
    ax.set_ylabel("xi at horizon")
    ax.set_title("truncated product vs completion target")
    fig.tight_layout()
    _save(fig, path)


def render_solution_figure(solution: AngleSolution, path) -> None:
    fig, ax = plt.subplots(figsize=(8, 4))
    for level in sorted(solution.cos2):
        vals = solution.cos2[level]
        ns = np.arange(vals.size)
        good = np.isfinite(vals)
        ax.plot(ns[good], vals[good], marker=".", ms=3, lw=0.8, label=f"level {level}")
    ax.set_xlabel("frequency n")
    ax.set_ylabel("squared cosine")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(fontsize=7, ncols=2)
    ax.set_title("solved angle profile")
    fig.tight_layout()
    _save(fig, path)


def render_margin_figure(margins: list[ChainMargin], path) -> None:
    fig, ax = plt.subplots(figsize=(8, 4))
    labels = [f"k={r.k},M={r.m_level}" for r in margins]
    vals = [r.margin for r in margins]
    colors = [_VERDICT_COLORS.get(r.verdict, "k") for r in margins]
    ax.bar(range(len(margins)), vals, color=colors)
    ax.set_xticks(range(len(margins)))
    ax.set_xticklabels(labels, rotation=90, fontsize=6)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_ylabel("margin")
    ax.set_title("budget-chain margins")
    fig.tight_layout()
    _save(fig, path)


def render_analysis_figure(tables, path) -> None:
    fig, ax = plt.subplots(figsize=(8, 4))
    levels = sorted({j for j, _ in tables})
    energies = []
    for j in levels:
        total = 0.0
        for (jj, m), (_, coeffs) in tables.items():
            if jj == j:
                total += float(np.sum(np.abs(coeffs) ** 2))
        energies.append(total)
    ax.bar(levels, energies, color="tab:blue")
    ax.set_xlabel("level j")
    ax.set_ylabel("analysis energy")
    ax.set_title("frame-coefficient energy per level")
    fig.tight_layout()
    _save(fig, path)
