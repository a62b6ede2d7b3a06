"""Text export and import of map grids and fit profiles.

CSV bodies are deterministic: fixed 17-significant-digit float
formatting (lossless for doubles), fixed row order, invalid cells
spelled ``NA``, Unix newlines, and no timestamps, so the same grid
always serializes to the same bytes.  Wall-clock information lives only
in the JSON sidecar written next to the data file.
"""

import json
import math
import os
from datetime import datetime, timezone

import numpy as np

from .errors import DataFormatError
from .maps import MapGrid

FORMAT_NAME = "spdcmaps map"


def _fmt(v):
    v = float(v)
    if math.isnan(v):
        return "NA"
    return "%.17g" % v


def _parse(tok):
    if tok == "NA":
        return math.nan
    return float(tok)


def sidecar_path(path):
    """Metadata sidecar next to a data file: out.csv -> out.json."""
    base, _ = os.path.splitext(str(path))
    return base + ".json"


def write_map_csv(grid, path, version):
    """Serialize a MapGrid to CSV.  Returns the path written."""
    ny, nx = grid.values[0].shape
    lines = [
        f"# {FORMAT_NAME}",
        f"# version: {version}",
        f"# kind: {grid.kind}",
        f"# mode: {grid.mode}",
        f"# shape: {ny} {nx}",
        "# columns: " + ",".join(grid.coord_names + grid.value_names),
        "# meta: " + json.dumps(grid.metadata, sort_keys=True,
                                separators=(",", ":")),
    ]
    for i in range(ny):
        c2 = _fmt(grid.coord2[i])
        for j in range(nx):
            cells = [_fmt(grid.coord1[j]), c2]
            cells += [_fmt(plane[i, j]) for plane in grid.values]
            lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_sidecar(path, grid, version, extra=None):
    """JSON metadata sidecar (the only place a timestamp appears)."""
    ny, nx = grid.values[0].shape
    doc = {
        "format": FORMAT_NAME,
        "version": version,
        "kind": grid.kind,
        "mode": grid.mode,
        "shape": [ny, nx],
        "columns": list(grid.coord_names + grid.value_names),
        "meta": grid.metadata,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        doc.update(extra)
    out = sidecar_path(path)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def read_map_csv(path):
    """Parse a CSV written by write_map_csv back into a MapGrid.

    The reconstruction is exact: every float (coordinates included)
    round-trips bitwise through the 17-digit formatting.
    """
    header = {}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != f"# {FORMAT_NAME}":
            raise DataFormatError(
                f"{path}: not a {FORMAT_NAME} file (leading line {first!r})")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].strip().partition(":")
                if sep:
                    header[key.strip()] = value.strip()
                continue
            rows.append(line.split(","))
    try:
        ny, nx = (int(t) for t in header["shape"].split())
        cols = tuple(header["columns"].split(","))
        kind = header["kind"]
        mode = header["mode"]
    except (KeyError, ValueError) as exc:
        raise DataFormatError(f"{path}: missing or bad header ({exc})") \
            from None
    if len(rows) != ny * nx or any(len(r) != len(cols) for r in rows):
        raise DataFormatError(
            f"{path}: expected {ny * nx} rows of {len(cols)} columns")
    try:
        data = np.array([[_parse(tok) for tok in row] for row in rows])
    except ValueError as exc:
        raise DataFormatError(f"{path}: bad numeric cell ({exc})") from None
    meta = json.loads(header.get("meta", "{}"))
    return MapGrid(
        kind=kind, mode=mode,
        coord1=data[:nx, 0].copy(),
        coord2=data[::nx, 1].copy(),
        coord_names=cols[:2], value_names=cols[2:],
        values=tuple(data[:, 2 + k].reshape(ny, nx).copy()
                     for k in range(len(cols) - 2)),
        metadata=meta)


def write_profile_csv(path, version, columns, arrays, meta):
    """Three-or-so-column profile export (fit output), same conventions."""
    n = len(arrays[0])
    lines = [
        f"# {FORMAT_NAME} profile",
        f"# version: {version}",
        "# columns: " + ",".join(columns),
        "# meta: " + json.dumps(meta, sort_keys=True, separators=(",", ":")),
    ]
    for i in range(n):
        lines.append(",".join(_fmt(a[i]) for a in arrays))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path
