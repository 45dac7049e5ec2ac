#!/usr/bin/env python3
"""Render experiment CSVs into SVG figures.

Consumes the size and surrogate CSV files the shardlab CLI writes and draws
the corresponding curves:

  bpp        one bits-per-posting curve per (policy, scheme, codec) tag,
             x-axis m on a log scale
  bpp_oh     the same with dictionary overhead included
  surrogates avg_td (solid) and avg_tc (dashed) per policy, log-log axes

Usage: figures.py --csv <path> --kind <bpp|bpp_oh|surrogates> --out <path>

Output is deterministic for a fixed input: timestamps are suppressed and the
SVG hash salt is pinned.  Inputs are never modified.
"""

from __future__ import annotations

import argparse
import csv
import sys
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "figures"
import matplotlib.pyplot as plt  # noqa: E402

KINDS = ("bpp", "bpp_oh", "surrogates")

_REQUIRED = {
    "bpp": ("policy", "scheme", "codec", "m", "bpp"),
    "bpp_oh": ("policy", "scheme", "codec", "m", "bpp_oh"),
    "surrogates": ("policy", "m", "avg_td", "avg_tc"),
}


class FigureInputError(ValueError):
    """Bad CSV input: missing columns, empty body, or non-numeric cells."""


@dataclass(frozen=True)
class FigureSpec:
    csv_path: Path
    kind: str
    out_path: Path

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise FigureInputError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")


def _read_rows(path: Path, kind: str) -> list[dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in _REQUIRED[kind]:
            if column not in header:
                raise FigureInputError(f"column {column!r} missing from {path} (have {header})")
        rows = list(reader)
    if not rows:
        raise FigureInputError(f"{path} has no data rows")
    return rows


def _number(row: dict[str, str], column: str) -> float:
    try:
        return float(row[column])
    except (TypeError, ValueError):
        raise FigureInputError(f"non-numeric value {row.get(column)!r} in column {column!r}") from None


def _series(rows: list[dict[str, str]], tag_columns: tuple[str, ...], y_col: str):
    """Curves keyed by tag tuple: m -> mean y over rows sharing (tag, m)."""
    buckets: dict[tuple, dict[float, list[float]]] = defaultdict(lambda: defaultdict(list))
    for row in rows:
        tag = tuple(row[c] for c in tag_columns)
        buckets[tag][_number(row, "m")].append(_number(row, y_col))
    out = {}
    for tag in sorted(buckets):
        points = sorted((m, sum(ys) / len(ys)) for m, ys in buckets[tag].items())
        out[tag] = ([m for m, _ in points], [y for _, y in points])
    return out


def _label(tag: tuple, columns: tuple[str, ...], varying: list[bool]) -> str:
    parts = [value for value, is_varying in zip(tag, varying) if is_varying]
    return "/".join(parts) if parts else "/".join(tag)


def render(spec: FigureSpec) -> Path:
    """Draw the figure and write it; returns the output path."""
    rows = _read_rows(spec.csv_path, spec.kind)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    try:
        if spec.kind in ("bpp", "bpp_oh"):
            tag_columns = ("policy", "scheme", "codec")
            series = _series(rows, tag_columns, spec.kind)
            varying = [len({tag[i] for tag in series}) > 1 for i in range(len(tag_columns))]
            for tag, (xs, ys) in series.items():
                ax.plot(xs, ys, marker="o", label=_label(tag, tag_columns, varying))
            ax.set_xscale("log", base=2)
            ax.set_ylabel("bits per posting" + (" (with overhead)" if spec.kind == "bpp_oh" else ""))
        else:
            series_td = _series(rows, ("policy",), "avg_td")
            series_tc = _series(rows, ("policy",), "avg_tc")
            for tag, (xs, ys) in series_td.items():
                ax.plot(xs, ys, marker="o", label=f"{tag[0]} avg_td")
            for tag, (xs, ys) in series_tc.items():
                ax.plot(xs, ys, marker="s", linestyle="--", label=f"{tag[0]} avg_tc")
            ax.set_xscale("log", base=2)
            ax.set_yscale("log", base=2)
            ax.set_ylabel("average query-time surrogate (postings)")
        ax.set_xlabel("shards (m)")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        spec.out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.out_path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return spec.out_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Render experiment CSVs into SVG figures.")
    parser.add_argument("--csv", required=True, help="input CSV (sizes or surrogates schema)")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True, help="output SVG path")
    args = parser.parse_args(argv)
    try:
        out = render(FigureSpec(csv_path=Path(args.csv), kind=args.kind, out_path=Path(args.out)))
    except (FigureInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
