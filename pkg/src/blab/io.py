"""Sampled-field ingestion and run manifests."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import RBFInterpolator, RegularGridInterpolator

from . import __version__
from .errors import DomainError, IngestError
from .fields import MANIFOLDS, ScalarField

_SPHERE_TOL = 1e-8
_PERIODIC_PAD = 3


@dataclass(frozen=True)
class SampledField:
    """Externally computed samples of a field on one of the model domains."""

    domain: str
    points: np.ndarray
    values: np.ndarray
    gradients: np.ndarray | None = None
    band_limit: float | None = None
    provenance: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.domain not in MANIFOLDS:
            raise IngestError(f"unknown domain {self.domain!r}")
        P = np.atleast_2d(np.asarray(self.points, dtype=float))
        v = np.asarray(self.values, dtype=float).ravel()
        if P.shape[0] != v.size:
            raise IngestError(f"{P.shape[0]} points but {v.size} values")
        g = None
        if self.gradients is not None:
            g = np.atleast_2d(np.asarray(self.gradients, dtype=float))
            if g.shape != P.shape:
                raise IngestError(f"gradients have shape {g.shape}, points {P.shape}")
        if self.band_limit is not None and not self.band_limit > 0:
            raise IngestError("band limit must be positive")
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "gradients", g)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.values.size

    def _tensor_axes(self) -> list[np.ndarray] | None:
        axes = [np.unique(self.points[:, i]) for i in range(self.dim)]
        if math.prod(a.size for a in axes) != len(self) or any(a.size < 4 for a in axes):
            return None
        return axes

    def _grid_interpolator(self, axes, data: np.ndarray, periodic: bool):
        idx = [np.searchsorted(a, self.points[:, i]) for i, a in enumerate(axes)]
        grid = np.empty(tuple(a.size for a in axes) + data.shape[1:])
        grid[tuple(idx)] = data
        if periodic:
            p = _PERIODIC_PAD
            axes = [np.concatenate([a[-p:] - 2 * np.pi, a, a[:p] + 2 * np.pi]) for a in axes]
            grid = np.pad(grid, [(p, p)] * len(axes) + [(0, 0)] * (grid.ndim - len(axes)), mode="wrap")
        return RegularGridInterpolator(axes, grid, method="cubic", bounds_error=False, fill_value=np.nan)

    def to_field(self) -> ScalarField:
        """Interpolating ScalarField (cubic on tensor grids, RBF otherwise)."""
        axes = self._tensor_axes() if self.domain in ("euclidean", "torus") else None
        periodic = False
        if axes is not None and self.domain == "torus":
            # a periodic grid must be uniform and cover one period
            periodic = all(np.allclose(np.diff(a), 2 * np.pi / a.size) for a in axes)
        data = self.values if self.gradients is None else np.concatenate([self.values[:, None], self.gradients], 1)
        if axes is not None:
            interp = self._grid_interpolator(axes, data, periodic)
        else:
            interp = RBFInterpolator(self.points, data, neighbors=min(64, len(self)),
                                     kernel="thin_plate_spline")
        has_grad = self.gradients is not None
        domain = self.domain
        name = self.provenance or "sampled field"

        def ev(pts):
            x = pts
            if periodic:
                x = np.mod(pts, 2 * np.pi)
            out = np.asarray(interp(x))
            if np.any(np.isnan(out)):
                raise DomainError(f"{name}: evaluation outside the sampled region")
            if has_grad:
                return out[:, 0], out[:, 1:]
            return out, None

        return ScalarField(self.dim, ev, domain, self.band_limit, False, name, {"sampled": self})


def _check_domain(domain: str, P: np.ndarray, rows: list[int]) -> None:
    bad = []
    if domain == "sphere":
        nrm = np.linalg.norm(P, axis=1)
        bad = [rows[i] for i in np.flatnonzero(np.abs(nrm - 1.0) > _SPHERE_TOL)]
    elif domain == "sphere_lift":
        nrm = np.linalg.norm(P[:, :-1], axis=1)
        bad = [rows[i] for i in np.flatnonzero(np.abs(nrm - 1.0) > _SPHERE_TOL)]
    if bad:
        shown = ", ".join(str(b) for b in bad[:10])
        raise IngestError(f"{len(bad)} points off the unit sphere (lines {shown}{', ...' if len(bad) > 10 else ''})")


def _check_duplicates(P: np.ndarray, rows: list[int]) -> None:
    _, first, counts = np.unique(P, axis=0, return_index=True, return_counts=True)
    if np.any(counts > 1):
        dup = sorted(rows[i] for i in first[counts > 1])
        raise IngestError(f"duplicate points (first occurrences at lines {', '.join(map(str, dup[:10]))})")


def _parse_header(lines: list[str]) -> dict:
    meta = {}
    for line in lines:
        body = line.lstrip("#").strip()
        if ":" in body:
            key, val = body.split(":", 1)
            meta[key.strip().lower()] = val.strip()
    return meta


def _read_csv(path: Path) -> SampledField:
    text = path.read_text().splitlines()
    comments = [ln for ln in text if ln.startswith("#")]
    meta = _parse_header(comments)
    body = [(i + 1, ln) for i, ln in enumerate(text) if ln.strip() and not ln.startswith("#")]
    if not body:
        raise IngestError(f"{path}: no column header")
    header_line, header = body[0]
    cols = [c.strip() for c in next(csv.reader([header]))]
    xcols = [i for i, c in enumerate(cols) if c.startswith("x")]
    gcols = [i for i, c in enumerate(cols) if c.startswith("g")]
    if "value" not in cols or not xcols:
        raise IngestError(f"{path}:{header_line}: header needs x* coordinate columns and a value column")
    vcol = cols.index("value")
    if gcols and len(gcols) != len(xcols):
        raise IngestError(f"{path}:{header_line}: {len(gcols)} gradient columns for {len(xcols)} coordinates")
    P, V, G, rows = [], [], [], []
    for lineno, ln in body[1:]:
        fields = next(csv.reader([ln]))
        if len(fields) != len(cols):
            raise IngestError(f"{path}:{lineno}: expected {len(cols)} fields, got {len(fields)}")
        try:
            nums = [float(f) for f in fields]
        except ValueError as exc:
            raise IngestError(f"{path}:{lineno}: non-numeric field ({exc})") from None
        if not all(math.isfinite(v) for v in nums):
            raise IngestError(f"{path}:{lineno}: NaN or infinite entry")
        P.append([nums[i] for i in xcols])
        V.append(nums[vcol])
        if gcols:
            G.append([nums[i] for i in gcols])
        rows.append(lineno)
    if not rows:
        raise IngestError(f"{path}: no data rows")
    return _finish(meta, np.array(P), np.array(V), np.array(G) if gcols else None, rows, path)


def _read_json(path: Path) -> SampledField:
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise IngestError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    try:
        P = np.array(data["points"], dtype=float)
        V = np.array(data["values"], dtype=float)
        G = None if data.get("gradients") is None else np.array(data["gradients"], dtype=float)
    except (KeyError, ValueError, TypeError) as exc:
        raise IngestError(f"{path}: malformed sample arrays ({exc})") from None
    P = np.atleast_2d(P)
    bad = np.flatnonzero(~np.isfinite(V) | ~np.all(np.isfinite(P), axis=1))
    if G is not None:
        bad = np.union1d(bad, np.flatnonzero(~np.all(np.isfinite(np.atleast_2d(G)), axis=1)))
    if bad.size:
        raise IngestError(f"{path}: NaN or infinite entries at sample indices {bad[:10].tolist()}")
    meta = {k: str(v) for k, v in data.items() if k in ("domain", "band_limit", "provenance", "domain_radius")}
    return _finish(meta, P, V, G, list(range(V.size)), path)


def _finish(meta: dict, P, V, G, rows, path: Path) -> SampledField:
    if "domain" not in meta:
        raise IngestError(f"{path}: header must declare the domain")
    if "band_limit" not in meta:
        raise IngestError(f"{path}: header must declare band_limit (use 'none' to opt out)")
    domain = meta["domain"]
    bl = meta["band_limit"].lower()
    try:
        band = None if bl in ("none", "null", "") else float(bl)
    except ValueError:
        raise IngestError(f"{path}: band_limit {meta['band_limit']!r} is not a number") from None
    if P.shape[0] != V.size:
        raise IngestError(f"{path}: {P.shape[0]} points but {V.size} values")
    _check_domain(domain, P, rows)
    if "domain_radius" in meta:
        R = float(meta["domain_radius"])
        out = np.flatnonzero(np.linalg.norm(P, axis=1) > R * (1 + 1e-12))
        if out.size:
            raise IngestError(f"{path}: points outside radius {R} at lines {[rows[i] for i in out[:10]]}")
    _check_duplicates(P, rows)
    return SampledField(domain, P, V, G, band, meta.get("provenance", str(path)), {"source": str(path)})


def ingest(path: str | Path, fmt: str | None = None) -> SampledField:
    """Read a sampled field from CSV (header comments) or JSON."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt not in ("csv", "json"):
        raise IngestError(f"unsupported format {fmt!r}; use csv or json")
    if not path.exists():
        raise FileNotFoundError(path)
    return _read_csv(path) if fmt == "csv" else _read_json(path)


def write_sampled_csv(path: str | Path, domain: str, points, values, gradients=None,
                      band_limit: float | None = None, provenance: str = "") -> None:
    P = np.atleast_2d(np.asarray(points, dtype=float))
    d = P.shape[1]
    with open(path, "w", newline="") as fh:
        fh.write(f"# domain: {domain}\n# band_limit: {'none' if band_limit is None else '%.17g' % band_limit}\n")
        if provenance:
            fh.write(f"# provenance: {provenance}\n")
        w = csv.writer(fh, lineterminator="\n")
        cols = [f"x{i + 1}" for i in range(d)] + ["value"]
        if gradients is not None:
            cols += [f"g{i + 1}" for i in range(d)]
        w.writerow(cols)
        for i in range(P.shape[0]):
            row = list(P[i]) + [values[i]]
            if gradients is not None:
                row += list(gradients[i])
            w.writerow(["%.17g" % v for v in row])


# ------------------------------------------------------------- manifests

def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    config: dict
    seed: int | None = None
    version: str = __version__
    started: str = field(default_factory=_now)
    finished: str | None = None
    outputs: dict = field(default_factory=dict)

    def record(self, *paths) -> None:
        for p in paths:
            p = Path(p)
            if p.exists():
                self.outputs[str(p)] = file_digest(p)

    def finish(self) -> None:
        self.finished = _now()

    def verify(self) -> list[str]:
        """Paths whose current digest differs from the recorded one."""
        return [p for p, dg in self.outputs.items() if not Path(p).exists() or file_digest(p) != dg]

    def to_dict(self) -> dict:
        return {"config": self.config, "seed": self.seed, "version": self.version,
                "started": self.started, "finished": self.finished, "outputs": self.outputs}

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, default=str) + "\n")

    @classmethod
    def read(cls, path: str | Path) -> "RunManifest":
        data = json.loads(Path(path).read_text())
        return cls(data["config"], data.get("seed"), data.get("version", ""), data.get("started", ""),
                   data.get("finished"), data.get("outputs", {}))
