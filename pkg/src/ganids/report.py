"""Evaluation reports: JSON documents, sweep CSVs and rendered figures.

The JSON layer is deliberately boring and deterministic (sorted keys,
repr-exact floats) so same-seed runs produce byte-identical files. Latency
numbers are wall-clock and therefore never written into report JSON; they
travel in a separate timings document. Figures are rendered with the Agg
backend straight to files next to the delimited output.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .gan import EpochStats  # noqa: E402
from .metrics import Metrics  # noqa: E402


def model_report(kind: str, dataset_id: str, seed: int, threshold: float | None,
                 metrics: Metrics, sweep: list[tuple[float, Metrics]] | None = None) -> dict:
    doc = {
        "model_kind": kind,
        "dataset_id": dataset_id,
        "seed": seed,
        "threshold": threshold,
        "metrics": asdict(metrics),
        "sweep": [{"threshold": t, **asdict(m)} for t, m in (sweep or [])],
    }
    # Wall-clock fields stay out of the deterministic report when unset.
    for entry in [doc["metrics"], *doc["sweep"]]:
        for key in ("mean_inference_ms", "p95_inference_ms"):
            if entry.get(key) is None:
                entry.pop(key, None)
    return doc


def write_json(path: str | Path, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_sweep_csv(path: str | Path, sweep: list[tuple[float, Metrics]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "tp", "fp", "tn", "fn", "precision", "recall"])
        for t, m in sweep:
            writer.writerow([repr(float(t)), m.tp, m.fp, m.tn, m.fn,
                             repr(m.precision), repr(m.recall)])


# ------------------------------------------------------------------ figures

def _new_fig(w: float = 6.4, h: float = 4.0):
    fig, ax = plt.subplots(figsize=(w, h), dpi=110)
    ax.grid(alpha=0.3)
    return fig, ax


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def fig_detection_bars(entries: list[tuple[str, Metrics]], path: str | Path) -> None:
    """Grouped precision/recall bars, one group per model."""
    fig, ax = _new_fig()
    xs = range(len(entries))
    width = 0.38
    ax.bar([x - width / 2 for x in xs], [m.precision for _, m in entries],
           width, label="precision", color="#3b6aa0")
    ax.bar([x + width / 2 for x in xs], [m.recall for _, m in entries],
           width, label="recall", color="#c46a3a")
    ax.set_xticks(list(xs), [name for name, _ in entries])
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score on test split")
    ax.legend(loc="lower right")
    _save(fig, path)


def fig_latency_bars(entries: list[tuple[str, float]], path: str | Path) -> None:
    """Mean per-sample inference latency per model, in ms."""
    fig, ax = _new_fig()
    names = [name for name, _ in entries]
    ax.bar(names, [ms for _, ms in entries], color="#4a8f5d", width=0.5)
    ax.set_ylabel("mean per-sample latency (ms)")
    _save(fig, path)


def fig_sweep(sweep: list[tuple[float, Metrics]], path: str | Path,
              title: str = "") -> None:
    """Precision and recall against the swept threshold."""
    fig, ax = _new_fig()
    ts = [t for t, _ in sweep]
    ax.plot(ts, [m.precision for _, m in sweep], label="precision", color="#3b6aa0")
    ax.plot(ts, [m.recall for _, m in sweep], label="recall", color="#c46a3a")
    ax.set_xlabel("threshold")
    ax.set_ylim(-0.02, 1.05)
    if title:
        ax.set_title(title)
    ax.legend(loc="center left")
    _save(fig, path)


def fig_training_trace(trace: list[EpochStats], path: str | Path) -> None:
    """Adversarial losses and the value estimate per epoch."""
    fig, ax = _new_fig()
    epochs = [s.epoch for s in trace]
    ax.plot(epochs, [s.ge_loss for s in trace], label="generator+encoder")
    ax.plot(epochs, [s.dx_loss for s in trace], label="disc (feature)")
    ax.plot(epochs, [s.dz_loss for s in trace], label="disc (latent)")
    ax.plot(epochs, [s.value_v for s in trace], label="value estimate", ls="--", color="gray")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.legend()
    _save(fig, path)
