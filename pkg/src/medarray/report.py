"""CSV tables and the matplotlib figures rendered next to them.

Every command that emits a delimited report also drops a rendered
figure alongside it, so a run leaves both machine- and eyeball-readable
artifacts in one directory. Figures use the Agg backend; nothing here
opens a window.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .dvr import PipelineReport  # noqa: E402
from .pearray import LedgerRow  # noqa: E402

__all__ = [
    "write_csv",
    "render_pipeline_figure",
    "render_ledger_figure",
    "render_bench_figure",
    "ledger_csv_rows",
]


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def render_pipeline_figure(report: PipelineReport, path) -> None:
    """Per-frame latency against the target, residual impulses below."""
    idx = [r.frame_index for r in report.rows]
    ms = [r.ms for r in report.rows]
    residual = [r.residual_impulses for r in report.rows]
    budget_ms = 1000.0 / report.fps_target

    fig, (ax_ms, ax_res) = plt.subplots(
        2, 1, figsize=(7, 5), sharex=True, height_ratios=[2, 1]
    )
    ax_ms.plot(idx, ms, marker="o", ms=3, lw=1, label="frame time")
    ax_ms.axhline(budget_ms, color="tab:red", ls="--", lw=1,
                  label=f"{report.fps_target:g} fps budget")
    ax_ms.set_ylabel("ms per frame")
    ax_ms.legend(loc="upper right", fontsize=8)
    ax_ms.set_title(
        f"{report.frame_count} frames, achieved {report.achieved_fps:.1f} fps"
    )
    ax_res.bar(idx, residual, color="tab:gray")
    ax_res.set_ylabel("residual impulses")
    ax_res.set_xlabel("frame")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def ledger_csv_rows(rows: list[LedgerRow]):
    header = ("conversion", "pe", "pixels", "compute_cycles",
              "message_words", "ppc_compute", "ppc_with_ipc")
    data = [
        (r.conversion, r.pe, r.pixels, r.compute_cycles, r.message_words,
         f"{r.ppc_compute:.6f}", f"{r.ppc_with_ipc:.6f}")
        for r in rows
    ]
    return header, data


def render_ledger_figure(rows: list[LedgerRow], path) -> None:
    """Pixels per compute-cycle per conversion, with and without traffic."""
    names = [r.conversion for r in rows]
    compute = [r.ppc_compute for r in rows]
    with_ipc = [r.ppc_with_ipc for r in rows]
    x = range(len(names))

    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.38
    ax.bar([i - width / 2 for i in x], compute, width, label="compute only")
    ax.bar([i + width / 2 for i in x], with_ipc, width, label="with messaging")
    ax.set_xticks(list(x), names)
    ax.set_ylabel("pixels per compute-cycle")
    ax.set_title("conversion throughput")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_bench_figure(rows, path) -> None:
    """Median-kernel timing sweep; rows are (size, naive_ms, widereg_ms, speedup, equal)."""
    sizes = [r[0] for r in rows]
    naive = [r[1] for r in rows]
    widereg = [r[2] for r in rows]
    speed = [r[3] for r in rows]

    fig, (ax_t, ax_s) = plt.subplots(1, 2, figsize=(9, 4))
    ax_t.plot(sizes, naive, marker="o", label="naive")
    ax_t.plot(sizes, widereg, marker="s", label="widereg")
    ax_t.set_xlabel("image side (px)")
    ax_t.set_ylabel("ms per image")
    ax_t.set_title("3x3 median runtime")
    ax_t.legend(fontsize=8)
    ax_s.plot(sizes, speed, marker="d", color="tab:green")
    ax_s.axhline(1.0, color="tab:gray", ls=":", lw=1)
    ax_s.set_xlabel("image side (px)")
    ax_s.set_ylabel("naive / widereg")
    ax_s.set_title("measured speedup")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
