"""Per-section metric reports and human-annotation aggregation.

Reports group hypothesis/reference pairs by source section, compute the
requested metrics per section plus pooled overall, and render an
aligned-column table, a TSV machine form, and a bar-chart figure.
Annotations are aggregated pessimistically: the per-pair rating is the worst
score across annotators, and a pair is acceptable when that minimum is at
least the threshold.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .metrics import corpus_bleu, corpus_chrf_pp

SECTIONS = ("bible", "tales", "constitution", "games", "fiction", "wiki",
            "other")
METRIC_FNS = {
    "bleu": lambda h, r: corpus_bleu(h, r).score,
    "chrfpp": lambda h, r: corpus_chrf_pp(h, r).score,
}


@dataclass(frozen=True)
class EvalItem:
    hyp: str
    ref: str
    section: str

    def __post_init__(self):
        if self.section not in SECTIONS:
            raise ValueError(f"unknown section {self.section!r}; "
                             f"expected one of {SECTIONS}")


@dataclass(frozen=True)
class AnnotationRecord:
    pair_id: str
    annotator_id: str
    score: int

    def __post_init__(self):
        if self.score not in (1, 2, 3, 4, 5):
            raise ValueError(f"score {self.score} outside 1..5")


@dataclass
class AnnotationSummary:
    per_pair_min: dict[str, int]
    mean_pessimistic: float
    acceptance_rate: float
    n_pairs: int
    n_records: int


def score_by_section(items: list[EvalItem], metric: str) -> dict[str, float]:
    """Metric per section plus pooled 'overall'; empty sections omitted."""
    if not items:
        raise ValueError("no items")
    fn = METRIC_FNS.get(metric)
    if fn is None:
        raise ValueError(f"unknown metric {metric!r}")
    out = {}
    for section in SECTIONS:
        group = [it for it in items if it.section == section]
        if group:
            out[section] = fn([it.hyp for it in group],
                              [it.ref for it in group])
    out["overall"] = fn([it.hyp for it in items], [it.ref for it in items])
    return out


def aggregate_annotations(records: list[AnnotationRecord],
                          acceptance_threshold: int = 3) -> AnnotationSummary:
    if not records:
        raise ValueError("no annotation records")
    # Re-annotations overwrite: for each (pair, annotator) keep the last.
    latest: dict[tuple[str, str], int] = {}
    for r in records:
        latest[(r.pair_id, r.annotator_id)] = r.score
    per_pair: dict[str, int] = {}
    for (pair_id, _), score in latest.items():
        cur = per_pair.get(pair_id)
        per_pair[pair_id] = score if cur is None else min(cur, score)
    n_pairs = len(per_pair)
    mean = sum(per_pair.values()) / n_pairs
    accepted = sum(1 for m in per_pair.values() if m >= acceptance_threshold)
    return AnnotationSummary(per_pair_min=per_pair, mean_pessimistic=mean,
                             acceptance_rate=accepted / n_pairs,
                             n_pairs=n_pairs, n_records=len(records))


def annotator_calibration(records: list[AnnotationRecord]) -> dict[str, float]:
    if not records:
        raise ValueError("no annotation records")
    sums: dict[str, list[int]] = {}
    for r in records:
        sums.setdefault(r.annotator_id, []).append(r.score)
    return {a: sum(v) / len(v) for a, v in sorted(sums.items())}


# ---------------------------------------------------------------------------
# I/O and rendering

def read_eval_items(path: str | Path) -> list[EvalItem]:
    """JSONL lines {"hyp", "ref", "section"}."""
    items = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            items.append(EvalItem(hyp=rec["hyp"], ref=rec["ref"],
                                  section=rec.get("section", "other")))
    return items


def read_annotations_csv(path: str | Path) -> list[AnnotationRecord]:
    """CSV columns pair_id,annotator_id,score; a header row is optional."""
    records = []
    with open(path, encoding="utf-8", newline="") as f:
        for row in csv.reader(f):
            if not row or not any(cell.strip() for cell in row):
                continue
            if row[0].strip() == "pair_id":
                continue
            if len(row) != 3:
                raise ValueError(f"{path}: expected 3 columns, got {row}")
            records.append(AnnotationRecord(pair_id=row[0].strip(),
                                            annotator_id=row[1].strip(),
                                            score=int(row[2])))
    return records


def render_section_table(scores: dict[str, dict[str, float]]) -> str:
    """Aligned text table: rows = sections, columns = metrics."""
    metrics = list(scores)
    rows = []
    for section in list(SECTIONS) + ["overall"]:
        if any(section in scores[m] for m in metrics):
            rows.append(section)
    width = max(len(r) for r in rows + ["section"]) + 2
    header = "section".ljust(width) + "".join(m.rjust(10) for m in metrics)
    lines = [header, "-" * len(header)]
    for section in rows:
        cells = "".join(
            (f"{scores[m][section]:.2f}" if section in scores[m] else "-")
            .rjust(10) for m in metrics)
        lines.append(section.ljust(width) + cells)
    return "\n".join(lines)


def write_section_report(items: list[EvalItem], metrics: list[str],
                         out_dir: str | Path) -> dict[str, dict[str, float]]:
    """Writes the text table, a TSV machine form, and a bar-chart figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scores = {m: score_by_section(items, m) for m in metrics}

    table = render_section_table(scores)
    (out_dir / "report.txt").write_text(table + "\n", encoding="utf-8")

    with open(out_dir / "report.tsv", "w", encoding="utf-8") as f:
        f.write("section\t" + "\t".join(metrics) + "\n")
        for section in list(SECTIONS) + ["overall"]:
            if not any(section in scores[m] for m in metrics):
                continue
            cells = "\t".join(
                f"{scores[m][section]:.4f}" if section in scores[m] else ""
                for m in metrics)
            f.write(f"{section}\t{cells}\n")

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    sections = [s for s in SECTIONS if s in scores[metrics[0]]]
    x = range(len(sections))
    width = 0.8 / max(1, len(metrics))
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, m in enumerate(metrics):
        vals = [scores[m][s] for s in sections]
        ax.bar([xi + i * width for xi in x], vals, width=width, label=m)
    ax.set_xticks([xi + width * (len(metrics) - 1) / 2 for xi in x])
    ax.set_xticklabels(sections, rotation=30, ha="right")
    ax.set_ylabel("score")
    ax.set_title("Scores by section")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "scores_by_section.png", dpi=120)
    plt.close(fig)
    return scores
