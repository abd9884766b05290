"""Figure rendering for the report path.

Figures are written next to the delimited output file, using its stem as a
prefix.  Everything goes through the Agg backend so the harness works
headless.  Zero residuals are clipped to a display floor before the log-log
axes see them.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np  # noqa: E402

from .runner import RunRecord

_DISPLAY_FLOOR = 1e-18


def _clip(values):
    return np.maximum(np.asarray(values, dtype=float), _DISPLAY_FLOOR)


def _mean_over_seeds(rows, key, group_keys):
    """Average ``key`` over seeds for each distinct tuple of ``group_keys``."""
    buckets: dict = {}
    for row in rows:
        if row["epsilon"] <= 0:
            continue
        group = tuple(row[k] for k in group_keys)
        buckets.setdefault(group, []).append(row[key])
    return {g: float(np.mean(v)) for g, v in sorted(buckets.items())}


def _guide(ax, epsilons, anchor, order, label):
    eps = np.asarray(sorted(epsilons), dtype=float)
    if eps.size == 0 or anchor <= _DISPLAY_FLOOR:
        return
    ref = anchor * (eps / eps.max()) ** order
    ax.loglog(eps, ref, "k--", linewidth=0.8, alpha=0.6, label=label)


def render_second_laws_figures(record: RunRecord, out: Path) -> "list[Path]":
    """Residual-vs-epsilon per element, plus the coherence scaling figure."""
    out = Path(out)
    stem = out.parent / out.stem
    paths = []

    by_element = _mean_over_seeds(record.rows, "residual", ("i", "j", "epsilon"))
    elements = sorted({(i, j) for (i, j, _) in by_element})
    epsilons = sorted({e for (_, _, e) in by_element})

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    anchor = 0.0
    for (i, j) in elements:
        vals = [by_element[(i, j, e)] for e in epsilons]
        anchor = max(anchor, max(vals))
        ax.loglog(epsilons, _clip(vals), marker="o", markersize=3,
                  linewidth=1.0, label=f"({i},{j})")
    _guide(ax, epsilons, anchor, 2.0, r"$\epsilon^2$ guide")
    ax.set_xlabel(r"$\epsilon$")
    ax.set_ylabel("max-entry residual")
    ax.set_title(f"{record.scenario_name} [{record.fingerprint}] — "
                 f"{record.summary.get('law_form', 'derived')} form")
    ax.legend(fontsize=6, ncol=2)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    path = Path(f"{stem}_residuals.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    by_eps = _mean_over_seeds(record.rows, "coherence", ("epsilon",))
    if by_eps:
        eps = sorted(e for (e,) in by_eps)
        vals = [by_eps[(e,)] for e in eps]
        fig, ax = plt.subplots(figsize=(6.0, 4.5))
        ax.loglog(eps, _clip(vals), marker="s", color="tab:red",
                  linewidth=1.0, label="generated coherence")
        _guide(ax, eps, max(vals), 1.0, r"$\epsilon$ guide")
        ax.set_xlabel(r"$\epsilon$")
        ax.set_ylabel(r"$\ell_1$ coherence of the output")
        ax.set_title(f"{record.scenario_name} [{record.fingerprint}]")
        ax.legend(fontsize=8)
        ax.grid(True, which="both", alpha=0.25)
        fig.tight_layout()
        path = Path(f"{stem}_coherence.png")
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths


def render_ergotropy_figure(record: RunRecord, out: Path) -> Path:
    """Closed-form and brute-force extraction next to their gap."""
    out = Path(out)
    stem = out.parent / out.stem
    closed = _mean_over_seeds(record.rows, "closed_form", ("epsilon",))
    brute = _mean_over_seeds(record.rows, "brute_force", ("epsilon",))
    gap = _mean_over_seeds(record.rows, "gap", ("epsilon",))
    eps = sorted(e for (e,) in closed)

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.loglog(eps, _clip([closed[(e,)] for e in eps]), marker="o",
              linewidth=1.0, label="closed form")
    ax.loglog(eps, _clip([brute[(e,)] for e in eps]), marker="x",
              linewidth=1.0, linestyle=":", label="brute force")
    gap_vals = [gap[(e,)] for e in eps]
    ax.loglog(eps, _clip(gap_vals), marker="d", linewidth=1.0,
              color="tab:green", label="|gap|")
    _guide(ax, eps, max(gap_vals), 2.0, r"$\epsilon^2$ guide")
    ax.set_xlabel(r"$\epsilon$")
    ax.set_ylabel("extracted work")
    ax.set_title(f"{record.scenario_name} [{record.fingerprint}]")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    path = Path(f"{stem}_ergotropy.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
