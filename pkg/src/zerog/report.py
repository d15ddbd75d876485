"""Report rendering: JSON, plain-text tables, CSV, and matplotlib figures.

Timings go to a separate file so the canonical report bytes are
reproducible across runs with the same seed.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .pipeline import EvalReport  # noqa: E402


def text_table(rows: list[list[str]], header: list[str]) -> str:
    widths = [
        max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))
    ]
    def fmt(row):
        return "  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip()
    sep = "-" * (sum(widths) + 2 * (len(widths) - 1))
    return "\n".join([fmt(header), sep, *(fmt(r) for r in rows)]) + "\n"


def write_eval_reports(reports: list[EvalReport], out_dir: str | Path) -> Path:
    """Write report.json / report.txt / per-dataset confusion CSV + PNG.

    Returns the path of the canonical JSON report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    report_path = out / "report.json"
    report_path.write_text(
        json.dumps([r.to_jsonable() for r in reports], indent=2, sort_keys=True)
        + "\n",
        encoding="utf-8",
    )
    (out / "timings.json").write_text(
        json.dumps(
            {r.dataset: r.wall_clock_seconds for r in reports}, indent=2
        )
        + "\n",
        encoding="utf-8",
    )

    rows = [
        [r.dataset, f"{r.accuracy:.4f}", str(r.labeled_total)] for r in reports
    ]
    (out / "report.txt").write_text(
        text_table(rows, ["dataset", "accuracy", "labeled"]), encoding="utf-8"
    )

    for r in reports:
        stem = out / f"confusion_{r.dataset}"
        with open(f"{stem}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["true\\pred"] + list(range(r.confusion.shape[1])))
            for i, row in enumerate(r.confusion):
                writer.writerow([i] + [int(x) for x in row])
        _confusion_figure(r, f"{stem}.png")
    return report_path


def _confusion_figure(r: EvalReport, path: str) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 4))
    im = ax.imshow(r.confusion, cmap="Blues")
    ax.set_title(f"{r.dataset} (acc {r.accuracy:.3f})")
    ax.set_xlabel("predicted class")
    ax.set_ylabel("true class")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_training_figures(step_losses: list[float], out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "training_log.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss"])
        for i, loss in enumerate(step_losses):
            writer.writerow([i, f"{loss:.8g}"])

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(step_losses, lw=0.8)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_title("per-step pre-training loss")
    fig.tight_layout()
    fig.savefig(out / "loss_curve.png", dpi=120)
    plt.close(fig)


def write_ablation_report(
    results: dict[str, list[EvalReport]], out_dir: str | Path
) -> Path:
    """Comparison table (txt + csv) and accuracy bar chart per variant."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    datasets = [r.dataset for r in next(iter(results.values()))]
    header = ["variant"] + datasets
    rows = [
        [name] + [f"{r.accuracy:.4f}" for r in reps]
        for name, reps in results.items()
    ]
    table = text_table(rows, header)
    (out / "ablation.txt").write_text(table, encoding="utf-8")
    with open(out / "ablation.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)

    fig, ax = plt.subplots(figsize=(6, 3.5))
    x = range(len(results))
    for di, ds in enumerate(datasets):
        accs = [reps[di].accuracy for reps in results.values()]
        ax.bar(
            [xi + di * 0.8 / len(datasets) for xi in x],
            accs,
            width=0.8 / len(datasets),
            label=ds,
        )
    ax.set_xticks([xi + 0.4 - 0.4 / len(datasets) for xi in x])
    ax.set_xticklabels(list(results), rotation=20, ha="right")
    ax.set_ylabel("accuracy")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out / "ablation.png", dpi=120)
    plt.close(fig)
    return out / "ablation.txt"
