"""Plain-text formats for graphs, matrices and partitions.

Edge list
    one undirected edge per line as two whitespace-separated 0-based node
    indices.  Blank lines and lines starting with ``#`` are ignored, except
    that a ``# nodes N`` line declares the node count (needed when the last
    nodes are isolated).
Matrix
    headerless CSV of non-negative decimal numbers, one row per line.
Partition
    one integer block label per line, in item order.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .blockmodels import Graph, Partition


class DataError(ValueError):
    """An input file does not follow its format."""


def _fmt(x) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def read_edge_list(path, n: int | None = None) -> Graph:
    declared = None
    edges, seen = [], {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "nodes":
                    try:
                        declared = int(parts[1])
                    except ValueError:
                        raise DataError(f"{path}:{lineno}: bad node count {parts[1]!r}") from None
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise DataError(f"{path}:{lineno}: expected two node indices, got {len(tokens)} tokens")
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer token in {line!r}") from None
            if u < 0 or v < 0:
                raise DataError(f"{path}:{lineno}: negative node index")
            if u == v:
                raise DataError(f"{path}:{lineno}: self-loop at node {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DataError(f"{path}:{lineno}: duplicate edge {u} {v} (first on line {seen[key]})")
            seen[key] = lineno
            edges.append(key)
    size = n if n is not None else declared
    top = max((v for e in edges for v in e), default=-1) + 1
    if size is None:
        size = top
    if top > size:
        raise DataError(f"{path}: node index {top - 1} exceeds declared node count {size}")
    if size < 1:
        raise DataError(f"{path}: graph has no nodes; declare them with '# nodes N'")
    return Graph.from_edges(size, np.array(edges, dtype=np.int64).reshape(-1, 2))


def write_edge_list(path, G: Graph) -> None:
    lines = [f"# nodes {G.n}"] + [f"{u} {v}" for u, v in G.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {width}")
            vals = []
            for col, cell in enumerate(row, start=1):
                try:
                    x = float(cell)
                except ValueError:
                    raise DataError(f"{path}: row {lineno}, column {col}: not a number: {cell!r}") from None
                if not np.isfinite(x):
                    raise DataError(f"{path}: row {lineno}, column {col}: non-finite entry")
                if x < 0:
                    raise DataError(f"{path}: row {lineno}, column {col}: negative entry {cell.strip()}")
                vals.append(x)
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: empty matrix")
    return np.array(rows, dtype=float)


def write_matrix_csv(path, M) -> None:
    M = np.atleast_2d(np.asarray(M))
    Path(path).write_text("".join(",".join(_fmt(x) for x in row) + "\n" for row in M))


def read_partition(path) -> Partition:
    labels = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                labels.append(int(line))
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer label {line!r}") from None
    try:
        return Partition(labels)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_partition(path, partition: Partition) -> None:
    Path(path).write_text("".join(f"{x}\n" for x in partition.labels))
