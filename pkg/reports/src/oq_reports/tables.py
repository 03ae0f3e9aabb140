"""Markdown summary tables from summary.csv, one per network.

Formatting only: values are taken as emitted (empty cells mean the cell
had no hitting trials) and rounded to two decimals for display.
"""

import csv
import math

SUMMARY_COLUMNS = (
    "network",
    "rho",
    "tau_mean",
    "tau_std",
    "r",
    "switches_mean",
    "persistence_mean",
)
STAT_COLUMNS = SUMMARY_COLUMNS[2:]
NETWORK_LABELS = {
    "all_positive": "cooperative network",
    "all_negative": "anti-cooperative network",
}
MISSING = "—"  # em dash for cells with no hitting trials


class SummaryFormatError(ValueError):
    pass


def _read_summary(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = tuple(reader.fieldnames or ())
        missing = [c for c in SUMMARY_COLUMNS if c not in fields]
        if missing:
            raise SummaryFormatError(
                f"{path}: summary is missing columns {missing} (found {list(fields)})"
            )
        rows = list(reader)
    if not rows:
        raise SummaryFormatError(f"{path}: summary has no data rows")
    return rows


def _fmt(text):
    if text is None or text == "":
        return MISSING
    value = float(text)
    if math.isnan(value):
        return MISSING
    return f"{value:.2f}"  # python's format rounds half to even


def render_tables(summary_path, out_path):
    """Write one markdown table per network; returns the output path."""
    rows = _read_summary(summary_path)
    networks = []
    for row in rows:
        if row["network"] not in networks:
            networks.append(row["network"])

    lines = ["# Summary statistics", ""]
    for network in networks:
        label = NETWORK_LABELS.get(network, network)
        lines.append(f"## {label} ({network})")
        lines.append("")
        lines.append("| rho | tau_mean | tau_std | r | switches_mean | persistence_mean |")
        lines.append("|----:|---------:|--------:|--:|--------------:|-----------------:|")
        for row in rows:
            if row["network"] != network:
                continue
            cells = [f"{float(row['rho']):g}"] + [_fmt(row[c]) for c in STAT_COLUMNS]
            lines.append("| " + " | ".join(cells) + " |")
        lines.append("")
    lines.append(
        f"Values rounded to two decimals (round-half-even); {MISSING} marks "
        "cells with no hitting trials."
    )
    lines.append("")
    with open(out_path, "w") as fh:
        fh.write("\n".join(lines))
    return str(out_path)
