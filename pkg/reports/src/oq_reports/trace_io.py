"""Strict parser for the trial trace CSV format.

Layout: t,n_A,n_B,n_W,in_band,z_0..z_{N-1},loc_0..loc_{N-1} with one row
per epoch boundary. N is deduced from the header; every violation is
reported with its row and column so malformed files fail loudly.
"""

import csv
from dataclasses import dataclass

import numpy as np

LOCATION_CODES = (0, 1, -1, 9)
FIXED_COLUMNS = ("t", "n_A", "n_B", "n_W", "in_band")


class TraceFormatError(ValueError):
    pass


@dataclass
class TraceFrame:
    t: np.ndarray
    n_a: np.ndarray
    n_b: np.ndarray
    n_w: np.ndarray
    in_band: np.ndarray
    opinions: np.ndarray    # (rows, n)
    locations: np.ndarray   # (rows, n)

    @property
    def n(self) -> int:
        return self.opinions.shape[1]

    @property
    def rows(self) -> int:
        return self.t.size


def _parse_header(header, path):
    if tuple(header[:5]) != FIXED_COLUMNS:
        raise TraceFormatError(
            f"{path}: header must start with {','.join(FIXED_COLUMNS)}, "
            f"got {header[:5]}"
        )
    n_cols = len(header)
    if (n_cols - 5) % 2 != 0 or n_cols < 7:
        raise TraceFormatError(
            f"{path}: expected 5 + 2N columns, got {n_cols}"
        )
    n = (n_cols - 5) // 2
    expected = list(FIXED_COLUMNS) + [f"z_{i}" for i in range(n)] + [
        f"loc_{i}" for i in range(n)
    ]
    if header != expected:
        for col, (got, want) in enumerate(zip(header, expected)):
            if got != want:
                raise TraceFormatError(
                    f"{path}: header column {col} is {got!r}, expected {want!r}"
                )
    return n


def _cell(row_values, row_index, col_index, kind, path):
    text = row_values[col_index]
    try:
        if kind is float:
            return float(text)
        return int(text)
    except ValueError:
        raise TraceFormatError(
            f"{path}: row {row_index}, column {col_index}: "
            f"could not parse {text!r} as {kind.__name__}"
        ) from None


def read_trace(path) -> TraceFrame:
    """Parse and validate one trace CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceFormatError(f"{path}: file is empty") from None
        n = _parse_header(header, path)
        width = 5 + 2 * n
        t, n_a, n_b, n_w, in_band, zs, locs = [], [], [], [], [], [], []
        for row_index, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != width:
                raise TraceFormatError(
                    f"{path}: row {row_index} has {len(row)} columns, expected {width}"
                )
            t.append(_cell(row, row_index, 0, float, path))
            n_a.append(_cell(row, row_index, 1, int, path))
            n_b.append(_cell(row, row_index, 2, int, path))
            n_w.append(_cell(row, row_index, 3, int, path))
            in_band.append(_cell(row, row_index, 4, int, path))
            zs.append([_cell(row, row_index, 5 + i, float, path) for i in range(n)])
            row_locs = [_cell(row, row_index, 5 + n + i, int, path) for i in range(n)]
            for i, code in enumerate(row_locs):
                if code not in LOCATION_CODES:
                    raise TraceFormatError(
                        f"{path}: row {row_index}, column {5 + n + i}: "
                        f"unknown location code {code}"
                    )
            locs.append(row_locs)
    if not t:
        raise TraceFormatError(f"{path}: trace has a header but no records")
    t = np.array(t)
    if not (np.diff(t) > 0).all():
        bad = int(np.flatnonzero(np.diff(t) <= 0)[0]) + 2
        raise TraceFormatError(f"{path}: time is not strictly increasing at row {bad}")
    return TraceFrame(
        t=t,
        n_a=np.array(n_a),
        n_b=np.array(n_b),
        n_w=np.array(n_w),
        in_band=np.array(in_band, dtype=bool),
        opinions=np.array(zs),
        locations=np.array(locs, dtype=int),
    )
