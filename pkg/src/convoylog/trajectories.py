"""Coordinate-based convoy discovery, the classical baseline.

Works on a trajectory database: per object, positions sampled on a shared
integer timestamp grid (missing samples allowed). A convoy is a set of at
least m objects that stay density-connected, within distance e, for at
least k consecutive grid timestamps.

Per timestamp, objects are grouped by density clustering: an object is a
core when at least m objects (itself included) lie within distance e of it
(inclusive); clusters grow from cores through overlapping neighborhoods,
non-core edge objects join the first cluster that reaches them, and objects
in no cluster are noise and are omitted. Iteration is in ascending object
id everywhere, which pins down the one free choice in the textbook
procedure: an edge object reachable from two clusters lands in the cluster
whose seed core has the smallest id. Results are therefore a pure function
of the input.

Across timestamps, candidate groups are intersected with the clusters of
the next timestamp and survive while the intersection keeps at least m
members; a candidate whose run just ended is emitted when it lasted at
least k timestamps. A missing sample drops the object from that timestamp's
clustering, which breaks any run it was part of; no interpolation is done.
Finally, results dominated by another result (member subset, same or wider
time interval) are discarded.

On-disk format is JSONL, one position per line:

    {"object": "o1", "t": 3, "x": 12.5, "y": -4.0}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping, NamedTuple

from .errors import LogFormatError, NonMonotoneTimestampError, UnknownDeviceError

ObjectId = str


class Point(NamedTuple):
    """Planar position in meters."""

    x: float
    y: float

    def distance_to(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def _check_point(p: Point) -> Point:
    p = Point(float(p[0]), float(p[1]))
    if not (math.isfinite(p.x) and math.isfinite(p.y)):
        raise ValueError(f"coordinates must be finite, got {p}")
    return p


@dataclass(frozen=True)
class ConvoyParams:
    """Thresholds for convoy discovery.

    e: distance threshold in meters for the density neighborhood.
    m: minimum objects per dense group (and minimum convoy size).
    k: minimum lifetime in consecutive grid timestamps.
    """

    e: float
    m: int
    k: int

    def __post_init__(self):
        if self.e <= 0:
            raise ValueError(f"e must be positive, got {self.e}")
        if self.m < 1:
            raise ValueError(f"m must be at least 1, got {self.m}")
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")


@dataclass(frozen=True)
class Convoy:
    """A maximal group that stayed density-connected over a time interval."""

    members: frozenset[ObjectId]
    t_start: int
    t_end: int

    def __post_init__(self):
        if self.t_end < self.t_start:
            raise ValueError("convoy interval is empty")

    @property
    def lifetime(self) -> int:
        return self.t_end - self.t_start + 1


class TrajectoryDb:
    """Positions of identified objects on a shared integer timestamp grid."""

    def __init__(self):
        self._objects: dict[ObjectId, dict[int, Point]] = {}

    def add(self, obj: ObjectId, t: int, point: Point) -> None:
        if isinstance(t, bool) or not isinstance(t, int):
            raise ValueError(f"grid timestamp must be an integer, got {t!r}")
        if not obj:
            raise ValueError("object id must be non-empty")
        samples = self._objects.setdefault(obj, {})
        if t in samples:
            raise NonMonotoneTimestampError(f"object {obj}: duplicate sample at t={t}")
        samples[t] = _check_point(point)

    @property
    def objects(self) -> list[ObjectId]:
        return sorted(self._objects)

    def __len__(self) -> int:
        return len(self._objects)

    def __contains__(self, obj: ObjectId) -> bool:
        return obj in self._objects

    def positions(self, obj: ObjectId) -> dict[int, Point]:
        try:
            return dict(self._objects[obj])
        except KeyError:
            raise UnknownDeviceError(f"no trajectory for object {obj}") from None

    def positions_at(self, t: int) -> list[tuple[ObjectId, Point]]:
        """Objects present at grid time t, sorted by object id."""
        out = []
        for obj in sorted(self._objects):
            p = self._objects[obj].get(t)
            if p is not None:
                out.append((obj, p))
        return out

    def time_range(self) -> tuple[int, int] | None:
        """(earliest, latest) grid timestamp with any sample, or None."""
        lo: int | None = None
        hi: int | None = None
        for samples in self._objects.values():
            for t in samples:
                lo = t if lo is None or t < lo else lo
                hi = t if hi is None or t > hi else hi
        if lo is None or hi is None:
            return None
        return lo, hi


def neighborhood(
    center: Point, points: Iterable[tuple[ObjectId, Point]], e: float
) -> list[ObjectId]:
    """Ids of points within distance e of center, inclusive, sorted."""
    if e <= 0:
        raise ValueError(f"e must be positive, got {e}")
    return sorted(obj for obj, p in points if center.distance_to(p) <= e)


def density_clusters(
    points: Iterable[tuple[ObjectId, Point]], e: float, m: int
) -> list[frozenset[ObjectId]]:
    """Cluster labeled points by density; noise objects are omitted.

    Deterministic: clusters come out ordered by their smallest-id core, and
    contested edge objects always land in the earlier cluster.
    """
    if e <= 0:
        raise ValueError(f"e must be positive, got {e}")
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    pos: dict[ObjectId, Point] = {}
    for obj, p in points:
        if obj in pos:
            raise ValueError(f"duplicate object id {obj!r}")
        pos[obj] = p
    ids = sorted(pos)
    near = {
        obj: [o for o in ids if pos[obj].distance_to(pos[o]) <= e] for obj in ids
    }
    cores = {obj for obj in ids if len(near[obj]) >= m}

    assigned: set[ObjectId] = set()
    clusters: list[frozenset[ObjectId]] = []
    for seed in ids:
        if seed not in cores or seed in assigned:
            continue
        cluster: set[ObjectId] = set()
        queue = [seed]
        assigned.add(seed)
        while queue:
            cur = queue.pop(0)
            cluster.add(cur)
            if cur in cores:
                for other in near[cur]:
                    if other not in assigned:
                        assigned.add(other)
                        queue.append(other)
        clusters.append(frozenset(cluster))
    return clusters


def discover_convoys(db: TrajectoryDb, params: ConvoyParams) -> list[Convoy]:
    """All maximal convoys of at least m objects lasting at least k steps.

    Scans the grid once, carrying candidate groups forward by intersection
    with each timestamp's clusters; every grid timestamp between the first
    and last sample is visited, so a gap with no data ends all runs.
    """
    span = db.time_range()
    if span is None:
        return []
    t_lo, t_hi = span

    found: set[tuple[frozenset[ObjectId], int, int]] = set()
    cands: dict[frozenset[ObjectId], int] = {}
    for t in range(t_lo, t_hi + 1):
        clusters = density_clusters(db.positions_at(t), params.e, params.m)
        nxt: dict[frozenset[ObjectId], int] = {}
        for members, start in cands.items():
            survived_whole = False
            for cluster in clusters:
                kept = members & cluster
                if len(kept) >= params.m:
                    prior = nxt.get(kept)
                    nxt[kept] = start if prior is None else min(prior, start)
                    if kept == members:
                        survived_whole = True
            if not survived_whole and (t - 1) - start + 1 >= params.k:
                found.add((members, start, t - 1))
        for cluster in clusters:
            if cluster not in nxt:
                nxt[cluster] = t
        cands = nxt
    for members, start in cands.items():
        if t_hi - start + 1 >= params.k:
            found.add((members, start, t_hi))

    def dominated(c: tuple[frozenset[ObjectId], int, int]) -> bool:
        members, start, end = c
        return any(
            o != c and members <= o[0] and o[1] <= start and end <= o[2]
            for o in found
        )

    kept = [Convoy(m, a, b) for (m, a, b) in found if not dominated((m, a, b))]
    kept.sort(key=lambda c: (c.t_start, c.t_end, sorted(c.members)))
    return kept


# --- JSONL serialization ---------------------------------------------------


def read_trajectories_jsonl(source: str | Path | IO[str]) -> TrajectoryDb:
    """Read a JSONL trajectory file; malformed lines raise line-numbered errors."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return read_trajectories_jsonl(fh)
    db = TrajectoryDb()
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"invalid JSON: {exc.msg}", line=lineno) from None
        if not isinstance(obj, Mapping):
            raise LogFormatError("record must be a JSON object", line=lineno)
        try:
            name = obj["object"]
            t = obj["t"]
            x = obj["x"]
            y = obj["y"]
        except KeyError as exc:
            raise LogFormatError(f"missing field {exc.args[0]!r}", line=lineno) from None
        if not isinstance(name, str):
            raise LogFormatError("field 'object' has wrong type", line=lineno)
        if isinstance(t, bool) or not isinstance(t, int):
            raise LogFormatError("field 't' must be an integer", line=lineno)
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (x, y)):
            raise LogFormatError("fields 'x' and 'y' must be numbers", line=lineno)
        try:
            db.add(name, t, Point(float(x), float(y)))
        except (ValueError, NonMonotoneTimestampError) as exc:
            raise LogFormatError(str(exc), line=lineno) from None
    return db


def write_trajectories_jsonl(db: TrajectoryDb, dest: str | Path | IO[str]) -> None:
    """Write objects sorted by id, samples in time order."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8") as fh:
            write_trajectories_jsonl(db, fh)
            return
    for obj in db.objects:
        samples = db.positions(obj)
        for t in sorted(samples):
            p = samples[t]
            dest.write(
                json.dumps({"object": obj, "t": t, "x": p.x, "y": p.y}) + "\n"
            )
