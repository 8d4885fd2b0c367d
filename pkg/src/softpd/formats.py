"""Reading and writing datasets, site files and diagram models.

Two point formats are supported:

* LIBSVM: ``label idx:val idx:val ...`` with 1-based, strictly increasing
  indices; absent indices are zero.
* CSV: header ``x1,...,xd,label`` followed by one point per row.

Label tokens map to 0-based clusters in sorted token order (numeric order when
every token is a number).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, TextIO

import numpy as np

from .geometry import Dataset, PowerDiagram, SiteSet


class FormatError(ValueError):
    pass


def _token_key(tokens: Iterable[str]):
    tokens = list(tokens)
    try:
        [float(t) for t in tokens]
    except ValueError:
        return lambda t: (0, t)
    return lambda t: (float(t), t)


def label_map(tokens: Iterable[str]) -> dict[str, int]:
    distinct = set(tokens)
    return {t: i for i, t in enumerate(sorted(distinct, key=_token_key(distinct)))}


def _build(points: list, tokens: list[str], mapping: Optional[dict[str, int]]):
    if mapping is None:
        mapping = label_map(tokens)
    else:
        unknown = sorted(set(tokens) - set(mapping))
        if unknown:
            raise FormatError(f"labels not present in the label map: {unknown}")
    labels = np.array([mapping[t] for t in tokens], dtype=int)
    return Dataset(np.array(points, dtype=float), labels, k=len(mapping)), mapping


@dataclass(frozen=True)
class LibsvmRecord:
    label: str
    entries: tuple[tuple[int, float], ...]


def parse_libsvm_line(line: str, lineno: int = 0) -> LibsvmRecord:
    parts = line.split()
    if not parts:
        raise FormatError(f"line {lineno}: empty record")
    entries = []
    last = 0
    for tok in parts[1:]:
        idx_text, sep, val_text = tok.partition(":")
        if not sep:
            raise FormatError(f"line {lineno}: malformed token {tok!r}")
        try:
            idx = int(idx_text)
            val = float(val_text)
        except ValueError:
            raise FormatError(f"line {lineno}: malformed token {tok!r}") from None
        if idx <= last:
            raise FormatError(f"line {lineno}: index {idx} does not increase (previous {last})")
        if not math.isfinite(val):
            raise FormatError(f"line {lineno}: non-finite value in {tok!r}")
        entries.append((idx, val))
        last = idx
    return LibsvmRecord(parts[0], tuple(entries))


def parse_libsvm(
    stream: TextIO,
    d: Optional[int] = None,
    mapping: Optional[dict[str, int]] = None,
) -> tuple[Dataset, dict[str, int]]:
    """Dense dataset and label map from LIBSVM text.

    ``d`` fixes the dimension (needed when a test file never uses the highest
    feature index); it may not be smaller than any index in the file.
    """
    records = []
    max_idx = 0
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        rec = parse_libsvm_line(line, lineno)
        if rec.entries:
            top = rec.entries[-1][0]
            if d is not None and top > d:
                raise FormatError(f"line {lineno}: index {top} exceeds dimension {d}")
            max_idx = max(max_idx, top)
        records.append(rec)
    dim = d if d is not None else max_idx
    if dim < 1:
        raise FormatError("no features found")
    points = np.zeros((len(records), dim))
    for row, rec in enumerate(records):
        for idx, val in rec.entries:
            points[row, idx - 1] = val
    return _build(points, [r.label for r in records], mapping)


def write_libsvm(data: Dataset, out: TextIO, tokens: Optional[list[str]] = None) -> None:
    tokens = tokens or [str(i + 1) for i in range(data.k)]
    for x, lab in zip(data.points, data.labels):
        feats = " ".join(f"{j + 1}:{float(v)!r}" for j, v in enumerate(x) if v != 0)
        out.write(f"{tokens[lab]} {feats}".rstrip() + "\n")


def parse_csv(stream: TextIO, mapping: Optional[dict[str, int]] = None) -> tuple[Dataset, dict[str, int]]:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty CSV input") from None
    header = [h.strip() for h in header]
    if not header or header[-1] != "label":
        raise FormatError("CSV header must end with a 'label' column")
    d = len(header) - 1
    points, tokens = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or not any(c.strip() for c in row):
            continue
        if len(row) != d + 1:
            raise FormatError(f"line {lineno}: expected {d + 1} fields, got {len(row)}")
        try:
            points.append([float(v) for v in row[:d]])
        except ValueError:
            raise FormatError(f"line {lineno}: non-numeric coordinate") from None
        tokens.append(row[d].strip())
    return _build(points, tokens, mapping)


def write_csv(data: Dataset, out: TextIO, tokens: Optional[list[str]] = None) -> None:
    tokens = tokens or [str(i + 1) for i in range(data.k)]
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([f"x{j + 1}" for j in range(data.d)] + ["label"])
    for x, lab in zip(data.points, data.labels):
        writer.writerow([repr(float(v)) for v in x] + [tokens[lab]])


def guess_format(path: str | Path) -> str:
    return "csv" if str(path).lower().endswith(".csv") else "libsvm"


def load_dataset(
    path: str | Path,
    fmt: Optional[str] = None,
    d: Optional[int] = None,
    mapping: Optional[dict[str, int]] = None,
) -> tuple[Dataset, dict[str, int]]:
    fmt = fmt or guess_format(path)
    with open(path, newline="") as fh:
        if fmt == "csv":
            data, mp = parse_csv(fh, mapping)
            if d is not None and data.d != d:
                raise FormatError(f"{path}: dimension {data.d}, expected {d}")
            return data, mp
        if fmt == "libsvm":
            return parse_libsvm(fh, d, mapping)
    raise FormatError(f"unknown format {fmt!r}")


def load_points(path: str | Path, fmt: Optional[str] = None, d: Optional[int] = None) -> np.ndarray:
    """Query points from a CSV (label column optional) or LIBSVM file; labels are ignored."""
    fmt = fmt or guess_format(path)
    with open(path, newline="") as fh:
        if fmt == "libsvm":
            recs = [parse_libsvm_line(l, i) for i, l in enumerate(fh, start=1) if l.strip()]
            dim = d or max((r.entries[-1][0] for r in recs if r.entries), default=0)
            pts = np.zeros((len(recs), dim))
            for row, rec in enumerate(recs):
                for idx, val in rec.entries:
                    if idx > dim:
                        raise FormatError(f"record {row + 1}: index {idx} exceeds dimension {dim}")
                    pts[row, idx - 1] = val
            return pts
        rows = list(csv.reader(fh))
    header = [h.strip() for h in rows[0]]
    width = len(header) - 1 if header[-1] == "label" else len(header)
    return np.array([[float(v) for v in r[:width]] for r in rows[1:] if r], dtype=float)


def load_sites(path: str | Path) -> SiteSet:
    """Sites from a comma- or whitespace-separated text file, one site per row.

    A non-numeric first row is treated as a header.
    """
    rows = []
    for line in Path(path).read_text().splitlines():
        fields = line.replace(",", " ").split()
        if not fields:
            continue
        try:
            rows.append([float(v) for v in fields])
        except ValueError:
            if rows:
                raise FormatError(f"{path}: non-numeric site row {line!r}") from None
    return SiteSet(np.array(rows))


def model_to_dict(
    diagram: PowerDiagram,
    epsilon: float,
    variant: Optional[str],
    t: Optional[int],
    labels: Optional[list[str]] = None,
) -> dict:
    out = {
        "d": diagram.d,
        "k": diagram.k,
        "sites": diagram.sites.sites.tolist(),
        "gamma": diagram.gamma.tolist(),
        "epsilon": epsilon,
        "variant": variant,
        "t": t,
    }
    if labels is not None:
        out["labels"] = list(labels)
    return out


def save_model(path: str | Path, **kwargs) -> None:
    Path(path).write_text(json.dumps(model_to_dict(**kwargs), sort_keys=True, indent=1) + "\n")


def load_model(path: str | Path) -> tuple[PowerDiagram, dict]:
    raw = json.loads(Path(path).read_text())
    for key in ("d", "k", "sites", "gamma"):
        if key not in raw:
            raise FormatError(f"{path}: model lacks {key!r}")
    diagram = PowerDiagram(SiteSet(raw["sites"]), raw["gamma"])
    if diagram.k != raw["k"] or diagram.d != raw["d"]:
        raise FormatError(f"{path}: declared shape does not match sites")
    return diagram, raw
