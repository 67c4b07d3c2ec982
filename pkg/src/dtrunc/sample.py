"""Doubly truncated samples: domain type, file ingestion, existence diagnostics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, SchemaError, ValidationError

DEFAULT_COLUMNS = ("x", "u", "v")


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TruncatedSample:
    """Aligned records (x_i, u_i, v_i) observed under u_i <= x_i <= v_i.

    ``z`` is an optional covariate matrix (one row per record) and ``event``
    an optional vector of integer event-type labels. All arrays are
    immutable after construction and safe to share across threads.
    """

    x: np.ndarray
    u: np.ndarray
    v: np.ndarray
    z: np.ndarray | None = None
    event: np.ndarray | None = None
    z_names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        u = np.ascontiguousarray(self.u, dtype=np.float64)
        v = np.ascontiguousarray(self.v, dtype=np.float64)
        if x.ndim != 1 or x.size < 1:
            raise ValidationError("x must be a non-empty 1-d vector")
        if u.shape != x.shape or v.shape != x.shape:
            raise ValidationError("x, u, v must have identical length")
        for name, arr in (("x", x), ("u", u), ("v", v)):
            if not np.all(np.isfinite(arr)):
                rows = np.flatnonzero(~np.isfinite(arr)).tolist()
                raise ValidationError(f"non-finite values in {name} at rows {rows}", rows)
        bad = np.flatnonzero((u > x) | (x > v))
        if bad.size:
            raise ValidationError(
                f"observability condition u <= x <= v violated at rows {bad.tolist()}",
                bad.tolist(),
            )
        object.__setattr__(self, "x", _freeze(x))
        object.__setattr__(self, "u", _freeze(u))
        object.__setattr__(self, "v", _freeze(v))
        if self.z is not None:
            z = np.ascontiguousarray(self.z, dtype=np.float64)
            if z.ndim == 1:
                z = z.reshape(-1, 1)
            if z.shape[0] != x.size:
                raise ValidationError("z must have one row per record")
            if not np.all(np.isfinite(z)):
                raise ValidationError("non-finite covariate values")
            object.__setattr__(self, "z", _freeze(z))
            if not self.z_names:
                object.__setattr__(
                    self, "z_names", tuple(f"z{i + 1}" for i in range(z.shape[1]))
                )
            elif len(self.z_names) != z.shape[1]:
                raise ValidationError("z_names length must match covariate columns")
        if self.event is not None:
            ev = np.ascontiguousarray(self.event, dtype=np.int64)
            if ev.shape != x.shape:
                raise ValidationError("event must have one label per record")
            object.__setattr__(self, "event", _freeze(ev))

    @property
    def n(self) -> int:
        return self.x.size

    def take(self, idx) -> "TruncatedSample":
        """Row subset/resample; preserves covariates and event labels."""
        idx = np.asarray(idx)
        return TruncatedSample(
            x=self.x[idx],
            u=self.u[idx],
            v=self.v[idx],
            z=None if self.z is None else self.z[idx],
            event=None if self.event is None else self.event[idx],
            z_names=self.z_names,
        )


@dataclass(frozen=True)
class ExistenceReport:
    """Xiao-Hudgens counts: the NPMLE needs min(s1) > 1 and min(s2) > 1.

    s1[i] counts windows covering x_i; s2[i] counts event values inside
    window i. Each record covers itself, so both counts are always >= 1.
    """

    s1: np.ndarray
    s2: np.ndarray
    ok: bool
    violating_indices: tuple[int, ...]


def existence_check(s: TruncatedSample) -> ExistenceReport:
    """Count truncation-compatibility witnesses for each record.

    s1[i] = #{k : u_k <= x_i <= v_k},  s2[i] = #{k : u_i <= x_k <= v_i};
    ``ok`` iff both counts strictly exceed 1 everywhere. O(n log n).
    """
    xs = np.sort(s.x)
    us = np.sort(s.u)
    vs = np.sort(s.v)
    s1 = np.searchsorted(us, s.x, side="right") - np.searchsorted(vs, s.x, side="left")
    s2 = np.searchsorted(xs, s.v, side="right") - np.searchsorted(xs, s.u, side="left")
    bad = np.flatnonzero((s1 <= 1) | (s2 <= 1))
    return ExistenceReport(
        s1=_freeze(s1.astype(np.int64)),
        s2=_freeze(s2.astype(np.int64)),
        ok=bad.size == 0,
        violating_indices=tuple(int(i) for i in bad),
    )


def _sniff_rows(path: str) -> list[list[str]]:
    with io.open(path, "r", encoding="utf-8", newline="") as fh:
        head = fh.readline()
        fh.seek(0)
        if "," in head:
            return [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
        return [line.split() for line in fh if line.strip()]


def load_sample(
    path: str,
    column_map: dict[str, str | list[str]] | None = None,
    *,
    drop_invalid: bool = False,
) -> TruncatedSample:
    """Read a delimited text file (comma or whitespace, header row).

    The header must name the x, u, v columns (defaults; ``column_map``
    overrides with entries like ``{"x": "age"}``). Any mapping value for
    "z" may be a list of column names; remaining conventions: a column
    named ``z`` or ``z1..zk`` becomes the covariate matrix, a column named
    ``event`` the event labels. With ``drop_invalid`` rows violating
    u <= x <= v are dropped instead of raising; the count is reported in
    the returned sample's ``dropped_rows`` attribute.
    """
    rows = _sniff_rows(path)
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise SchemaError(f"{path}: no data rows")
    cmap = dict(column_map or {})
    names = {"x": cmap.get("x", "x"), "u": cmap.get("u", "u"), "v": cmap.get("v", "v")}
    col_idx: dict[str, int] = {}
    for key, name in names.items():
        if name not in header:
            raise SchemaError(f"{path}: required column {name!r} (for {key}) not in header {header}")
        col_idx[key] = header.index(name)
    if "z" in cmap:
        zcols = cmap["z"] if isinstance(cmap["z"], (list, tuple)) else [cmap["z"]]
        for name in zcols:
            if name not in header:
                raise SchemaError(f"{path}: covariate column {name!r} not in header")
        z_names = tuple(str(c) for c in zcols)
    else:
        z_names = tuple(h for h in header if h == "z" or (h.startswith("z") and h[1:].isdigit()))
    event_name = cmap.get("event", "event")
    has_event = event_name in header

    def parse_cell(row_i: int, row: list[str], j: int) -> float:
        try:
            return float(row[j])
        except (ValueError, IndexError) as exc:
            raise ParseError(
                f"{path}: row {row_i + 2}: cannot parse column {header[j] if j < len(header) else j!r}"
                f" value {row[j] if j < len(row) else '<missing>'!r} as a number"
            ) from exc

    ncols_needed = max(
        [col_idx["x"], col_idx["u"], col_idx["v"]]
        + [header.index(c) for c in z_names]
        + ([header.index(event_name)] if has_event else [])
    )
    data = np.empty((len(body), len(header)), dtype=np.float64)
    for i, row in enumerate(body):
        if len(row) <= ncols_needed:
            raise ParseError(f"{path}: row {i + 2}: expected {len(header)} fields, got {len(row)}")
        for j in range(len(header)):
            data[i, j] = parse_cell(i, row, j) if j < len(row) else np.nan

    x = data[:, col_idx["x"]]
    u = data[:, col_idx["u"]]
    v = data[:, col_idx["v"]]
    keep = slice(None)
    dropped = 0
    if not drop_invalid:
        bad = np.flatnonzero(~(np.isfinite(x) & np.isfinite(u) & np.isfinite(v) & (u <= x) & (x <= v)))
        if bad.size:
            lines = [int(i) + 2 for i in bad]
            raise ValidationError(
                f"{path}: observability condition u <= x <= v violated at file lines {lines}",
                lines,
            )
    if drop_invalid:
        good = np.isfinite(x) & np.isfinite(u) & np.isfinite(v) & (u <= x) & (x <= v)
        dropped = int(np.count_nonzero(~good))
        if dropped == len(body):
            raise ValidationError(f"{path}: every row violates u <= x <= v")
        keep = good
    z = None
    if z_names:
        z = np.column_stack([data[:, header.index(c)] for c in z_names])
    sample = TruncatedSample(
        x=x[keep],
        u=u[keep],
        v=v[keep],
        z=None if z is None else z[keep],
        event=None if not has_event else data[keep, header.index(event_name)].astype(np.int64),
        z_names=z_names,
    )
    object.__setattr__(sample, "dropped_rows", dropped)
    return sample


def write_sample(s: TruncatedSample, path: str) -> None:
    """Write a sample as comma-delimited text that round-trips bit-exactly."""
    header = ["x", "u", "v", *s.z_names] + (["event"] if s.event is not None else [])
    with io.open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(s.n):
            cells = [repr(float(s.x[i])), repr(float(s.u[i])), repr(float(s.v[i]))]
            if s.z is not None:
                cells += [repr(float(val)) for val in s.z[i]]
            if s.event is not None:
                cells.append(str(int(s.event[i])))
            fh.write(",".join(cells) + "\n")
