"""Synthetic mobility and radio traces with planted co-travel groups.

Produces paired views of the same walk: the coordinate trajectories a
tracking system would see, and the Wi-Fi proximity log the devices
themselves would record. Ground-truth labels say which devices were planted
as a group, so discovery quality can be scored.

Radio propagation is log-distance path loss with optional Gaussian noise:

    rssi(d) = tx_power_dbm - 10 * gamma * log10(max(d, d0) / d0) + N(0, sigma)

with reference distance d0 = 1 m; tx_power_dbm is the level at d0 and the
distance clamp avoids the singularity at d = 0. An access point is listed
in a fingerprint only when the (noisy) level reaches its detection floor,
and levels are rounded to integer dBm like real scan APIs report.

Devices move along waypoint paths at constant speed and hold the final
waypoint once reached. Each device samples every sample_interval seconds;
sample i lands at grid timestamp i in the trajectory database and at
t = i * sample_interval seconds in the proximity log. dropout_rate is the
probability that a device skips one sampling cycle entirely (no trajectory
point, no fingerprint), modeling patchy collection.

Everything random (noise, dropout) is driven by one generator seeded from
the radio model, drawn in a fixed order (devices in declaration order,
groups before loners, access points in declaration order), so the same
scenario always yields bit-identical outputs.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Callable, Iterable, Mapping

from .errors import InvalidScenarioError, LogFormatError
from .proximity import (
    ApObservation,
    DeviceId,
    EnvironmentSnapshot,
    Fingerprint,
    ProximityLog,
    canonical_id,
)
from .trajectories import Point, TrajectoryDb

REFERENCE_DISTANCE_M = 1.0


@dataclass(frozen=True)
class ApNode:
    """A fixed omni-directional access point."""

    bssid: str
    ssid: str
    position: Point
    tx_power_dbm: float
    detection_floor_dbm: float

    def __post_init__(self):
        object.__setattr__(self, "bssid", canonical_id(self.bssid))
        object.__setattr__(self, "position", Point(*self.position))
        if not self.detection_floor_dbm < self.tx_power_dbm:
            raise InvalidScenarioError(
                f"ap {self.bssid}: detection floor must sit below tx power"
            )


@dataclass(frozen=True)
class RadioModel:
    """Path-loss and noise parameters plus the seed for all randomness."""

    path_loss_exponent: float = 2.5
    noise_sigma_db: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.path_loss_exponent <= 0:
            raise InvalidScenarioError("path_loss_exponent must be positive")
        if self.noise_sigma_db < 0:
            raise InvalidScenarioError("noise_sigma_db must be non-negative")


@dataclass(frozen=True)
class WaypointPath:
    """Piecewise-linear motion at constant speed, holding the last waypoint."""

    waypoints: tuple[Point, ...]
    speed: float

    def __post_init__(self):
        pts = tuple(Point(*p) for p in self.waypoints)
        object.__setattr__(self, "waypoints", pts)
        if not pts:
            raise InvalidScenarioError("path needs at least one waypoint")
        if self.speed <= 0:
            raise InvalidScenarioError(f"speed must be positive, got {self.speed}")

    def position_at(self, t: float) -> Point:
        if t < 0:
            raise ValueError(f"time must be non-negative, got {t}")
        remaining = self.speed * t
        pos = self.waypoints[0]
        for nxt in self.waypoints[1:]:
            leg = pos.distance_to(nxt)
            if leg <= 0:
                pos = nxt
                continue
            if remaining < leg:
                f = remaining / leg
                return Point(pos.x + (nxt.x - pos.x) * f, pos.y + (nxt.y - pos.y) * f)
            remaining -= leg
            pos = nxt
        return pos


def path_through(waypoints: Iterable[tuple[float, float]], travel_time: float) -> WaypointPath:
    """A path covering the given waypoints in exactly travel_time seconds."""
    pts = tuple(Point(*p) for p in waypoints)
    if travel_time <= 0:
        raise InvalidScenarioError("travel_time must be positive")
    length = sum(a.distance_to(b) for a, b in zip(pts, pts[1:]))
    if length <= 0:
        raise InvalidScenarioError("path has no length to travel")
    return WaypointPath(pts, length / travel_time)


@dataclass(frozen=True)
class GroupSpec:
    """Devices planted to walk one shared path.

    Each member follows the group path displaced by its own fixed offset,
    so members stay in formation without sitting on identical coordinates.
    """

    group_id: str
    members: tuple[DeviceId, ...]
    path: WaypointPath
    offsets: tuple[Point, ...] = ()

    def __post_init__(self):
        if not self.group_id:
            raise InvalidScenarioError("group id must be non-empty")
        members = tuple(canonical_id(d) for d in self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise InvalidScenarioError(f"group {self.group_id} has no members")
        offsets = tuple(Point(*p) for p in self.offsets)
        if not offsets:
            offsets = tuple(Point(0.0, 0.0) for _ in members)
        object.__setattr__(self, "offsets", offsets)
        if len(offsets) != len(members):
            raise InvalidScenarioError(
                f"group {self.group_id}: offsets must match members one-to-one"
            )


@dataclass(frozen=True)
class LonerSpec:
    """An independent walker, planted as convoy noise."""

    device: DeviceId
    path: WaypointPath

    def __post_init__(self):
        object.__setattr__(self, "device", canonical_id(self.device))


@dataclass(frozen=True)
class MobilityScenario:
    name: str
    aps: tuple[ApNode, ...]
    groups: tuple[GroupSpec, ...]
    loners: tuple[LonerSpec, ...]
    radio: RadioModel
    sample_interval: float
    duration: float
    dropout_rate: float = 0.0

    def validate(self) -> None:
        if self.sample_interval <= 0:
            raise InvalidScenarioError("sample_interval must be positive")
        if self.duration < 0:
            raise InvalidScenarioError("duration must be non-negative")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InvalidScenarioError("dropout_rate must be in [0, 1)")
        seen_bssids: set[str] = set()
        for ap in self.aps:
            if ap.bssid in seen_bssids:
                raise InvalidScenarioError(f"duplicate access point {ap.bssid}")
            seen_bssids.add(ap.bssid)
        seen_groups: set[str] = set()
        seen_devices: set[str] = set()
        for group in self.groups:
            if group.group_id in seen_groups:
                raise InvalidScenarioError(f"duplicate group id {group.group_id}")
            seen_groups.add(group.group_id)
            for device in group.members:
                if device in seen_devices:
                    raise InvalidScenarioError(f"device {device} appears twice")
                seen_devices.add(device)
        for loner in self.loners:
            if loner.device in seen_devices:
                raise InvalidScenarioError(f"device {loner.device} appears twice")
            seen_devices.add(loner.device)


@dataclass(frozen=True)
class GroundTruthRecord:
    """Planted label for one device: its group (None for loners) and the
    interval, in seconds, over which the plant holds."""

    device: DeviceId
    group: str | None
    t_start: float
    t_end: float


@dataclass(frozen=True)
class SimulationResult:
    trajectories: TrajectoryDb
    proximity: ProximityLog
    ground_truth: tuple[GroundTruthRecord, ...]


def rssi_at(
    ap: ApNode, pos: Point, model: RadioModel, rng: random.Random | None = None
) -> float | None:
    """Modeled received level at pos, or None when below the detection floor.

    Noise is drawn from rng (the module-level generator when omitted), so
    pass the scenario generator for reproducible traces.
    """
    d = max(Point(*pos).distance_to(ap.position), REFERENCE_DISTANCE_M)
    level = ap.tx_power_dbm - 10.0 * model.path_loss_exponent * math.log10(
        d / REFERENCE_DISTANCE_M
    )
    if model.noise_sigma_db > 0:
        gauss = rng.gauss if rng is not None else random.gauss
        level += gauss(0.0, model.noise_sigma_db)
    if level < ap.detection_floor_dbm:
        return None
    return level


def _riders(
    scenario: MobilityScenario,
) -> list[tuple[DeviceId, str | None, Callable[[float], Point]]]:
    riders: list[tuple[DeviceId, str | None, Callable[[float], Point]]] = []
    for group in scenario.groups:
        for device, offset in zip(group.members, group.offsets):
            def pos_at(t: float, path=group.path, off=offset) -> Point:
                p = path.position_at(t)
                return Point(p.x + off.x, p.y + off.y)

            riders.append((device, group.group_id, pos_at))
    for loner in scenario.loners:
        riders.append((loner.device, None, loner.path.position_at))
    return riders


def simulate(scenario: MobilityScenario) -> SimulationResult:
    """Run one scenario; deterministic for a fixed scenario (seed included).

    Trajectory samples land on grid timestamps 0..steps-1; the fingerprint
    for grid timestamp i carries t = i * sample_interval seconds, so the two
    views of one sample are index-aligned.
    """
    scenario.validate()
    rng = random.Random(scenario.radio.seed)
    dt = scenario.sample_interval
    steps = int(math.floor(scenario.duration / dt + 1e-9)) + 1
    riders = _riders(scenario)

    trajectories = TrajectoryDb()
    log = ProximityLog()
    for i in range(steps):
        t = i * dt
        for device, _, pos_at in riders:
            if scenario.dropout_rate > 0 and rng.random() < scenario.dropout_rate:
                continue
            pos = pos_at(t)
            trajectories.add(device, i, pos)
            observations = []
            for ap in scenario.aps:
                level = rssi_at(ap, pos, scenario.radio, rng)
                if level is not None:
                    observations.append(
                        ApObservation(bssid=ap.bssid, rssi=round(level), ssid=ap.ssid)
                    )
            log.ingest(device, Fingerprint(t=t, env=EnvironmentSnapshot(tuple(observations))))

    end_t = (steps - 1) * dt
    truth = tuple(
        GroundTruthRecord(device=device, group=group, t_start=0.0, t_end=end_t)
        for device, group, _ in riders
    )
    return SimulationResult(trajectories=trajectories, proximity=log, ground_truth=truth)


# --- Built-in scenarios ------------------------------------------------------


def fig4_scenario(seed: int = 7) -> MobilityScenario:
    """Two mirrored pairs approach one access point from opposite sides.

    The geometry makes the radio views of the two pairs coincide: a walker
    at x and its mirror twin at -x are equidistant from the antenna at the
    origin, so with zero noise their RSSI sequences are identical sample by
    sample. Radio-only group discovery therefore sees one big group, while
    the coordinate baseline keeps the two pairs (which stay 20 m apart or
    more) in separate convoys.
    """
    duration = 50.0
    approach_left = path_through([(-80.0, 0.0), (-10.0, 0.0)], duration)
    approach_right = path_through([(80.0, 0.0), (10.0, 0.0)], duration)
    pair_offsets = (Point(0.0, 0.5), Point(0.0, -0.5))
    return MobilityScenario(
        name="fig4",
        aps=(
            ApNode(
                bssid="0a:00:00:00:00:01",
                ssid="crossing",
                position=Point(0.0, 0.0),
                tx_power_dbm=-40.0,
                detection_floor_dbm=-95.0,
            ),
        ),
        groups=(
            GroupSpec(
                group_id="g1",
                members=("02:00:00:00:01:01", "02:00:00:00:01:02"),
                path=approach_left,
                offsets=pair_offsets,
            ),
            GroupSpec(
                group_id="g2",
                members=("02:00:00:00:02:01", "02:00:00:00:02:02"),
                path=approach_right,
                offsets=pair_offsets,
            ),
        ),
        loners=(),
        radio=RadioModel(path_loss_exponent=2.5, noise_sigma_db=0.0, seed=seed),
        sample_interval=5.0,
        duration=duration,
        dropout_rate=0.0,
    )


_CORRIDOR_DURATION = 60.0

# Loner walks: start in range of the corridor, wander far off it mid-run
# (beyond any access point's detection range), and return by the final
# sample. The off-corridor stretch guarantees steps where a loner's radio
# view is empty, so no loner can track the planted group over the full run.
_CORRIDOR_LONERS: tuple[tuple[str, tuple[tuple[float, float], ...]], ...] = (
    ("03:00:00:00:00:01", ((120.0, 6.0), (60.0, 40.0), (0.0, 6.0))),
    ("03:00:00:00:00:02", ((0.0, 16.0), (30.0, 40.0), (90.0, 16.0))),
    ("03:00:00:00:00:03", ((70.0, 3.0), (85.0, 40.0), (100.0, 3.0))),
    ("03:00:00:00:00:04", ((100.0, 18.0), (45.0, 40.0), (10.0, 18.0))),
    ("03:00:00:00:00:05", ((120.0, 14.0), (95.0, 40.0), (60.0, 14.0))),
    ("03:00:00:00:00:06", ((90.0, 4.0), (45.0, 40.0), (30.0, 4.0))),
    ("03:00:00:00:00:07", ((10.0, 19.0), (25.0, 40.0), (40.0, 19.0))),
)


def corridor_scenario(seed: int = 7, noise_sigma_db: float = 0.0) -> MobilityScenario:
    """A planted group of three walks a corridor of access points; seven
    loners move independently around the same corridor.

    Access points line the corridor every 20 m with a detection range of
    about 25 m, so a device's radio view is dominated by its nearest one or
    two access points and changes as it walks.
    """
    aps = tuple(
        ApNode(
            bssid=f"0a:00:00:00:00:{i + 1:02x}",
            ssid="corridor",
            position=Point(20.0 * i, 0.0),
            tx_power_dbm=-40.0,
            detection_floor_dbm=-78.0,
        )
        for i in range(7)
    )
    group = GroupSpec(
        group_id="g1",
        members=("02:00:00:00:01:01", "02:00:00:00:01:02", "02:00:00:00:01:03"),
        path=path_through([(0.0, 10.0), (120.0, 10.0)], _CORRIDOR_DURATION),
        offsets=(Point(0.0, 0.8), Point(0.0, 0.0), Point(0.0, -0.8)),
    )
    loners = tuple(
        LonerSpec(device=device, path=path_through(waypoints, _CORRIDOR_DURATION))
        for device, waypoints in _CORRIDOR_LONERS
    )
    return MobilityScenario(
        name="corridor",
        aps=aps,
        groups=(group,),
        loners=loners,
        radio=RadioModel(path_loss_exponent=2.5, noise_sigma_db=noise_sigma_db, seed=seed),
        sample_interval=5.0,
        duration=_CORRIDOR_DURATION,
        dropout_rate=0.0,
    )


# --- Scenario and ground-truth serialization --------------------------------


def scenario_to_json(scenario: MobilityScenario) -> dict:
    return {
        "name": scenario.name,
        "sample_interval": scenario.sample_interval,
        "duration": scenario.duration,
        "dropout_rate": scenario.dropout_rate,
        "radio": {
            "path_loss_exponent": scenario.radio.path_loss_exponent,
            "noise_sigma_db": scenario.radio.noise_sigma_db,
            "seed": scenario.radio.seed,
        },
        "aps": [
            {
                "bssid": ap.bssid,
                "ssid": ap.ssid,
                "x": ap.position.x,
                "y": ap.position.y,
                "tx_power_dbm": ap.tx_power_dbm,
                "detection_floor_dbm": ap.detection_floor_dbm,
            }
            for ap in scenario.aps
        ],
        "groups": [
            {
                "group": g.group_id,
                "members": list(g.members),
                "speed": g.path.speed,
                "waypoints": [[p.x, p.y] for p in g.path.waypoints],
                "offsets": [[p.x, p.y] for p in g.offsets],
            }
            for g in scenario.groups
        ],
        "loners": [
            {
                "device": l.device,
                "speed": l.path.speed,
                "waypoints": [[p.x, p.y] for p in l.path.waypoints],
            }
            for l in scenario.loners
        ],
    }


def _points(raw, where: str) -> tuple[Point, ...]:
    try:
        return tuple(Point(float(x), float(y)) for x, y in raw)
    except (TypeError, ValueError):
        raise InvalidScenarioError(f"{where}: waypoints must be [x, y] pairs") from None


def scenario_from_json(obj: Mapping) -> MobilityScenario:
    if not isinstance(obj, Mapping):
        raise InvalidScenarioError("scenario must be a JSON object")

    def get(mapping: Mapping, key: str, where: str):
        if key not in mapping:
            raise InvalidScenarioError(f"{where}: missing field {key!r}")
        return mapping[key]

    radio_raw = get(obj, "radio", "scenario")
    radio = RadioModel(
        path_loss_exponent=float(get(radio_raw, "path_loss_exponent", "radio")),
        noise_sigma_db=float(get(radio_raw, "noise_sigma_db", "radio")),
        seed=int(get(radio_raw, "seed", "radio")),
    )
    aps = tuple(
        ApNode(
            bssid=get(ap, "bssid", "ap"),
            ssid=ap.get("ssid", ""),
            position=Point(float(get(ap, "x", "ap")), float(get(ap, "y", "ap"))),
            tx_power_dbm=float(get(ap, "tx_power_dbm", "ap")),
            detection_floor_dbm=float(get(ap, "detection_floor_dbm", "ap")),
        )
        for ap in get(obj, "aps", "scenario")
    )
    groups = []
    for g in get(obj, "groups", "scenario"):
        waypoints = _points(get(g, "waypoints", "group"), "group")
        offsets_raw = g.get("offsets")
        groups.append(
            GroupSpec(
                group_id=get(g, "group", "group"),
                members=tuple(get(g, "members", "group")),
                path=WaypointPath(waypoints, float(get(g, "speed", "group"))),
                offsets=_points(offsets_raw, "group") if offsets_raw else (),
            )
        )
    loners = tuple(
        LonerSpec(
            device=get(l, "device", "loner"),
            path=WaypointPath(
                _points(get(l, "waypoints", "loner"), "loner"),
                float(get(l, "speed", "loner")),
            ),
        )
        for l in get(obj, "loners", "scenario")
    )
    return MobilityScenario(
        name=get(obj, "name", "scenario"),
        aps=aps,
        groups=tuple(groups),
        loners=loners,
        radio=radio,
        sample_interval=float(get(obj, "sample_interval", "scenario")),
        duration=float(get(obj, "duration", "scenario")),
        dropout_rate=float(obj.get("dropout_rate", 0.0)),
    )


def read_scenario(source: str | Path | IO[str]) -> MobilityScenario:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return read_scenario(fh)
    try:
        obj = json.load(source)
    except json.JSONDecodeError as exc:
        raise InvalidScenarioError(f"scenario is not valid JSON: {exc.msg}") from None
    scenario = scenario_from_json(obj)
    scenario.validate()
    return scenario


def write_scenario(scenario: MobilityScenario, dest: str | Path | IO[str]) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8") as fh:
            write_scenario(scenario, fh)
            return
    json.dump(scenario_to_json(scenario), dest, indent=2)
    dest.write("\n")


def write_ground_truth_jsonl(
    records: Iterable[GroundTruthRecord], dest: str | Path | IO[str]
) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8") as fh:
            write_ground_truth_jsonl(records, fh)
            return
    for r in records:
        dest.write(
            json.dumps(
                {"device": r.device, "group": r.group, "t_start": r.t_start, "t_end": r.t_end}
            )
            + "\n"
        )


def read_ground_truth_jsonl(source: str | Path | IO[str]) -> tuple[GroundTruthRecord, ...]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return read_ground_truth_jsonl(fh)
    records = []
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"invalid JSON: {exc.msg}", line=lineno) from None
        try:
            records.append(
                GroundTruthRecord(
                    device=obj["device"],
                    group=obj["group"],
                    t_start=float(obj["t_start"]),
                    t_end=float(obj["t_end"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise LogFormatError(f"bad ground-truth record: {exc}", line=lineno) from None
    return tuple(records)
