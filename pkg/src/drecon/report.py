"""Batch statistics over correction reports: size-bucketed summaries as TSV,
aligned text, and matplotlib figures rendered next to the delimited output."""

import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .errors import ConsistencyError

REPORT_COLUMNS = ("instance", "cost_spec", "n_genes", "baseline", "output",
                  "reduction", "modified", "sum_delta", "dups_baseline",
                  "losses_baseline", "ms")


def report_row(instance, rep, timings=True):
    """One TSV row for a CorrectionReport."""
    ms = f"{rep.millis:.3f}" if timings else "0"
    return "\t".join(str(v) for v in (
        instance, rep.cost_spec, rep.n_genes, rep.baseline_cost,
        rep.output_cost, rep.reduction, int(rep.modified),
        sum(rep.deltas), rep.baseline_duplications, rep.baseline_losses, ms))


def report_header():
    return "\t".join(REPORT_COLUMNS)


def parse_report_rows(text, origin="<report>"):
    """Rows of a correction-report TSV as dicts; validates the header."""
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines or lines[0].split("\t") != list(REPORT_COLUMNS):
        raise ConsistencyError(f"{origin}: not a correction report table")
    rows = []
    for line in lines[1:]:
        parts = line.split("\t")
        if len(parts) != len(REPORT_COLUMNS):
            raise ConsistencyError(f"{origin}: malformed report row")
        row = dict(zip(REPORT_COLUMNS, parts))
        for key in ("n_genes", "baseline", "output", "reduction", "modified",
                    "sum_delta", "dups_baseline", "losses_baseline"):
            row[key] = int(row[key])
        row["ms"] = float(row["ms"])
        rows.append(row)
    return rows


@dataclass
class BucketSummary:
    """Statistics for one tree-size bucket of a correction batch."""

    lo: int
    hi: int
    count: int
    modified: int
    avg_dups_unmodified: float
    avg_losses_unmodified: float
    avg_dups_modified: float
    avg_losses_modified: float
    avg_reduction: float
    avg_reduction_pct: float
    avg_ms: float

    @property
    def modified_pct(self):
        return 100.0 * self.modified / self.count if self.count else 0.0

    @property
    def label(self):
        return f"{self.lo}-{self.hi}"


def parse_buckets(text):
    """Bucket boundaries like ``1-9,10-99,100-199``."""
    out = []
    for part in text.split(","):
        lo, _, hi = part.strip().partition("-")
        try:
            out.append((int(lo), int(hi)))
        except ValueError:
            raise ConsistencyError(f"bad bucket {part!r}") from None
    if not out:
        raise ConsistencyError("no buckets given")
    return out


DEFAULT_BUCKETS = ((1, 9), (10, 99), (100, 199))


def _mean(values):
    values = list(values)
    return sum(values) / len(values) if values else 0.0


def summarize(rows, buckets=DEFAULT_BUCKETS):
    """Bucketed batch summary; buckets without trees are omitted."""
    out = []
    for lo, hi in buckets:
        here = [r for r in rows if lo <= r["n_genes"] <= hi]
        if not here:
            continue
        modified = [r for r in here if r["modified"]]
        unmodified = [r for r in here if not r["modified"]]
        out.append(BucketSummary(
            lo=lo, hi=hi,
            count=len(here),
            modified=len(modified),
            avg_dups_unmodified=_mean(r["dups_baseline"] for r in unmodified),
            avg_losses_unmodified=_mean(r["losses_baseline"] for r in unmodified),
            avg_dups_modified=_mean(r["dups_baseline"] for r in modified),
            avg_losses_modified=_mean(r["losses_baseline"] for r in modified),
            avg_reduction=_mean(r["reduction"] for r in modified),
            avg_reduction_pct=_mean(100.0 * r["reduction"] / r["baseline"]
                                    for r in modified if r["baseline"]),
            avg_ms=_mean(r["ms"] for r in here),
        ))
    return out


SUMMARY_COLUMNS = ("bucket", "trees", "modified", "modified_pct",
                   "avg_dups_unmod", "avg_losses_unmod", "avg_dups_mod",
                   "avg_losses_mod", "avg_reduction", "avg_reduction_pct",
                   "avg_ms")


def summary_tsv(summaries):
    lines = ["\t".join(SUMMARY_COLUMNS)]
    for s in summaries:
        lines.append("\t".join((
            s.label, str(s.count), str(s.modified), f"{s.modified_pct:.2f}",
            f"{s.avg_dups_unmodified:.2f}", f"{s.avg_losses_unmodified:.2f}",
            f"{s.avg_dups_modified:.2f}", f"{s.avg_losses_modified:.2f}",
            f"{s.avg_reduction:.2f}", f"{s.avg_reduction_pct:.2f}",
            f"{s.avg_ms:.2f}")))
    return "\n".join(lines) + "\n"


def summary_text(summaries):
    """Aligned five-column view: counts, event averages, reduction, runtime."""
    header = ("bucket", "modified", "dups/losses unmod", "dups/losses mod",
              "reduction", "avg ms")
    rows = [header]
    for s in summaries:
        rows.append((
            f"{s.label} ({s.count})",
            f"{s.modified} / {s.modified_pct:.2f}%",
            f"{s.avg_dups_unmodified:.2f} / {s.avg_losses_unmodified:.2f}",
            f"{s.avg_dups_modified:.2f} / {s.avg_losses_modified:.2f}",
            f"{s.avg_reduction:.2f} / {s.avg_reduction_pct:.2f}%",
            f"{s.avg_ms:.2f}",
        ))
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in rows]
    return "\n".join(lines) + "\n"


def render_figures(summaries, out_dir):
    """Bar charts of modification rate, cost reduction, and runtime.

    Returns the list of files written.
    """
    os.makedirs(out_dir, exist_ok=True)
    labels = [s.label for s in summaries]
    written = []

    def bars(values, title, ylabel, fname, fmt="{:.2f}"):
        fig, ax = plt.subplots(figsize=(4.2, 3.0))
        xs = range(len(labels))
        ax.bar(xs, values, color="#4878a8")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(labels)
        ax.set_xlabel("tree size (leaves)")
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        for x, v in zip(xs, values):
            ax.annotate(fmt.format(v), (x, v), ha="center", va="bottom",
                        fontsize=8)
        fig.tight_layout()
        path = os.path.join(out_dir, fname)
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    bars([s.modified_pct for s in summaries],
         "Trees changed by correction", "modified trees (%)",
         "modified_pct.png")
    bars([s.avg_reduction for s in summaries],
         "Double-cost reduction (modified trees)", "average reduction",
         "cost_reduction.png")
    bars([s.avg_ms for s in summaries],
         "Correction runtime", "average ms per tree", "runtime_ms.png")
    return written
