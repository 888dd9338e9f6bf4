"""Rebuild experiment tables from files left behind by earlier runs.

Nothing here re-runs a planner or an oracle. The report scans a directory
tree for three kinds of artifact:

* ``success.json`` from the evaluation protocol (success-rate table)
* ``predictions.jsonl`` with ``prediction`` and ``target`` transcripts
  (string-match table, one column per transcript section)
* pipeline ``manifest.json`` files with per-iteration scores (score histogram)

and writes CSV tables plus a histogram PNG.
"""
from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .pipeline import SECTIONS, string_match_rate

HIST_BINS = np.linspace(0.0, 1.0, 11)


@dataclass
class Report:
    success: list[dict] = field(default_factory=list)
    string_match: list[dict] = field(default_factory=list)
    scores: dict[str, list[float]] = field(default_factory=dict)
    final_scores: dict[str, list[float]] = field(default_factory=dict)
    runs: int = 0

    def histogram(self, final: bool = False) -> list[dict]:
        """Counts per score bin and domain; the last bin includes 1.0."""
        src = self.final_scores if final else self.scores
        rows = []
        for dom, vals in sorted(src.items()):
            counts, edges = np.histogram(vals, bins=HIST_BINS)
            for lo, hi, n in zip(edges[:-1], edges[1:], counts):
                rows.append({"domain": dom, "bin_lo": round(float(lo), 2), "bin_hi": round(float(hi), 2), "count": int(n)})
        return rows

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "success_rate": self.success,
            "string_match": self.string_match,
            "ew_histogram": self.histogram(),
            "ew_final_histogram": self.histogram(final=True),
        }


def _json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        return None


def collect(root) -> Report:
    root = Path(root)
    rep = Report()
    for path in sorted(root.rglob("success.json")):
        data = _json(path)
        if not data or "inputs" not in data:
            continue
        rows = data["inputs"]
        rep.success.append({
            "source": str(path.parent.relative_to(root)) or ".",
            "domain": data["domain"],
            "mode": data.get("mode", "per-input"),
            "inputs": len(rows),
            "converged": sum(bool(r.get("converged")) for r in rows),
            "instances": data.get("instances", 0),
            "rate": data["rate"],
            "planner_rate": data.get("planner_rate", data["rate"]),
        })
    for path in sorted(root.rglob("predictions.jsonl")):
        groups: dict[tuple, list[dict]] = defaultdict(list)
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                r = json.loads(line)
                groups[(r.get("domain", "?"), r.get("split", "seen"))].append(r)
        for (dom, split), recs in sorted(groups.items()):
            pred = [r["prediction"] for r in recs]
            gold = [r["target"] for r in recs]
            row = {"source": str(path.parent.relative_to(root)) or ".", "domain": dom, "split": split, "n": len(recs)}
            row.update({s: string_match_rate(pred, gold, s) for s in SECTIONS})
            rep.string_match.append(row)
    for path in sorted(root.rglob("manifest.json")):
        data = _json(path)
        if not data or "iterations" not in data or "domain" not in data:
            continue
        rep.runs += 1
        scores = [float(it["score"]) for it in data["iterations"]]
        rep.scores.setdefault(data["domain"], []).extend(scores)
        if scores:
            rep.final_scores.setdefault(data["domain"], []).append(scores[-1])
    return rep


def to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def plot_histogram(rep: Report, path) -> Path | None:
    if not rep.scores:
        return None
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 3.5))
    doms = sorted(rep.scores)
    ax.hist([rep.scores[d] for d in doms], bins=HIST_BINS, label=doms, stacked=True)
    ax.set_xlabel("consistency score")
    ax.set_ylabel("checks")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)


def write_report(root, out=None) -> dict[str, Path]:
    """Write the CSV tables (and the histogram plot) and return their paths."""
    rep = collect(root)
    dest = Path(out) if out is not None else Path(root)
    dest.mkdir(parents=True, exist_ok=True)
    written = {}
    tables = {
        "success_rate.csv": rep.success,
        "string_match.csv": rep.string_match,
        "ew_histogram.csv": rep.histogram(),
    }
    for name, rows in tables.items():
        path = dest / name
        path.write_text(to_csv(rows), encoding="utf-8")
        written[name] = path
    png = plot_histogram(rep, dest / "ew_histogram.png")
    if png is not None:
        written["ew_histogram.png"] = png
    return written


def format_text(rep: Report) -> str:
    lines = [f"pipeline runs: {rep.runs}", "", "success rate"]
    for r in rep.success:
        lines.append(
            f"  {r['domain']:<11} {r['mode']:<9} inputs={r['inputs']} converged={r['converged']} "
            f"rate={r['rate']:.3f} planner={r['planner_rate']:.3f}"
        )
    lines += ["", "string match (" + ", ".join(SECTIONS) + ")"]
    for r in rep.string_match:
        vals = " ".join(f"{r[s]:.3f}" for s in SECTIONS)
        lines.append(f"  {r['domain']:<11} {r['split']:<6} n={r['n']} {vals}")
    lines += ["", "score histogram (all checks)"]
    for dom, vals in sorted(rep.scores.items()):
        counts, _ = np.histogram(vals, bins=HIST_BINS)
        lines.append(f"  {dom:<11} " + " ".join(str(int(c)) for c in counts))
    return "\n".join(lines) + "\n"
