"""Timestamped Wi-Fi visibility logs.

A fingerprint is one snapshot of the wireless environment a device saw at a
point in time: which access points were audible and at what received signal
strength. A track collects one device's fingerprints in strictly increasing
time order, and the log keeps one track per device. Access points are
identified by their hardware address (bssid); network names (ssid) are
carried along for display and rule matching but are never used as identity.

Time is seconds on a shared clock (epoch seconds work, any consistent origin
does). Signal strength is integer dBm, more negative meaning weaker.

The on-disk format is JSONL, one fingerprint per line:

    {"device": "aa:bb:cc:dd:ee:ff", "t": 1357000000.0,
     "aps": [{"ssid": "mycafe", "bssid": "00:11:22:33:44:55", "rssi": -55}]}

Lines need not be globally time-sorted, but each device's lines must appear
in increasing time order. The writer emits tracks sorted by device id and
samples in time order, so a write/read cycle is lossless and deterministic.

Reads are pure and never mutate the store; a log may serve many concurrent
readers as long as at most one writer calls ingest at a time.
"""

from __future__ import annotations

import json
import math
import re
from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping

from .errors import (
    DuplicateBssidError,
    LogFormatError,
    NonMonotoneTimestampError,
    UnknownDeviceError,
)

DeviceId = str

_HW_ADDR = re.compile(r"^[0-9a-f]{12}$")
_SEPARATORS = str.maketrans("", "", ":-.")


def looks_like_hw_addr(value: str) -> bool:
    """True when value is 12 hex digits, ignoring :, - and . separators."""
    return bool(_HW_ADDR.match(value.strip().lower().translate(_SEPARATORS)))


def canonical_id(value: str) -> str:
    """Normalize a device or access-point identifier.

    Identifiers that look like hardware addresses come out as lowercase
    colon-separated octet pairs ("AA-BB-CC-DD-EE-FF" -> "aa:bb:cc:dd:ee:ff");
    anything else is only stripped and lowercased. Idempotent, so stored ids
    can be compared byte-for-byte.
    """
    v = value.strip().lower()
    if not v:
        raise ValueError("identifier must be non-empty")
    if looks_like_hw_addr(v):
        digits = v.translate(_SEPARATORS)
        return ":".join(digits[i : i + 2] for i in range(0, 12, 2))
    return v


@dataclass(frozen=True)
class ApObservation:
    """One access point heard in a snapshot: identity plus signal strength."""

    bssid: str
    rssi: int
    ssid: str = ""

    def __post_init__(self):
        object.__setattr__(self, "bssid", canonical_id(self.bssid))
        if isinstance(self.rssi, bool) or not isinstance(self.rssi, int):
            raise ValueError(f"rssi must be an integer dBm value, got {self.rssi!r}")


@dataclass(frozen=True)
class EnvironmentSnapshot:
    """The set of access points visible in one measurement.

    At most one observation per bssid; an empty snapshot means the device
    heard nothing, which is valid data.
    """

    observations: tuple[ApObservation, ...] = ()

    def __post_init__(self):
        obs = tuple(self.observations)
        object.__setattr__(self, "observations", obs)
        seen: set[str] = set()
        for o in obs:
            if o.bssid in seen:
                raise DuplicateBssidError(f"duplicate access point {o.bssid}")
            seen.add(o.bssid)

    @classmethod
    def from_levels(cls, levels: Mapping[str, int]) -> "EnvironmentSnapshot":
        """Build a snapshot from a bssid -> rssi mapping (ssids left empty)."""
        return cls(tuple(ApObservation(b, r) for b, r in levels.items()))

    def rssi(self, bssid: str) -> int | None:
        """Signal strength of one access point, or None if it is not visible."""
        key = canonical_id(bssid)
        for o in self.observations:
            if o.bssid == key:
                return o.rssi
        return None

    @property
    def bssids(self) -> frozenset[str]:
        return frozenset(o.bssid for o in self.observations)

    def __len__(self) -> int:
        return len(self.observations)


@dataclass(frozen=True)
class Fingerprint:
    """A snapshot stamped with the time it was taken."""

    t: float
    env: EnvironmentSnapshot

    def __post_init__(self):
        t = float(self.t)
        if not math.isfinite(t):
            raise ValueError(f"timestamp must be finite, got {self.t!r}")
        object.__setattr__(self, "t", t)


class ProximityTrack:
    """One device's fingerprints in strictly increasing time order."""

    __slots__ = ("device", "_samples", "_times")

    def __init__(self, device: DeviceId, samples: Iterable[Fingerprint] = ()):
        self.device = canonical_id(device)
        self._samples: list[Fingerprint] = []
        self._times: list[float] = []
        for fp in samples:
            self.append(fp)

    @property
    def samples(self) -> list[Fingerprint]:
        """Time-ordered samples. Treat as read-only; use append to add."""
        return self._samples

    def append(self, fp: Fingerprint) -> None:
        if self._times and fp.t <= self._times[-1]:
            raise NonMonotoneTimestampError(
                f"device {self.device}: sample at t={fp.t} does not follow t={self._times[-1]}"
            )
        self._samples.append(fp)
        self._times.append(fp.t)

    def __len__(self) -> int:
        return len(self._samples)

    def __iter__(self) -> Iterator[Fingerprint]:
        return iter(self._samples)

    def last(self) -> Fingerprint | None:
        return self._samples[-1] if self._samples else None

    def nearest_in_window(self, t: float, delta: float) -> Fingerprint | None:
        """The sample closest in time to t with |sample.t - t| <= delta.

        Ties between an earlier and a later sample at equal distance go to
        the earlier one. None when the window holds no sample.
        """
        if delta < 0:
            raise ValueError("delta must be non-negative")
        if not self._samples:
            return None
        i = bisect_left(self._times, t)
        best: Fingerprint | None = None
        for j in (i - 1, i):
            if 0 <= j < len(self._samples):
                cand = self._samples[j]
                if abs(cand.t - t) <= delta:
                    if best is None or abs(cand.t - t) < abs(best.t - t):
                        best = cand
        return best

    def previous_before(self, t: float) -> Fingerprint | None:
        """The latest sample strictly earlier than t, or None."""
        i = bisect_left(self._times, t)
        return self._samples[i - 1] if i > 0 else None


class ProximityLog:
    """Store of per-device proximity tracks with window queries.

    Ingest keeps per-device time order; everything else is a pure read.
    """

    def __init__(self):
        self._tracks: dict[DeviceId, ProximityTrack] = {}
        self._order: list[DeviceId] = []  # sorted, for deterministic iteration

    def ingest(self, device: DeviceId, fp: Fingerprint) -> None:
        """Append one fingerprint to the device's track, creating it if new."""
        key = canonical_id(device)
        track = self._tracks.get(key)
        if track is None:
            track = ProximityTrack(key)
            self._tracks[key] = track
            insort(self._order, key)
        track.append(fp)

    @property
    def devices(self) -> list[DeviceId]:
        """Device ids in sorted order."""
        return list(self._order)

    def __contains__(self, device: DeviceId) -> bool:
        return canonical_id(device) in self._tracks

    def __len__(self) -> int:
        return len(self._tracks)

    def track(self, device: DeviceId) -> ProximityTrack:
        key = canonical_id(device)
        try:
            return self._tracks[key]
        except KeyError:
            raise UnknownDeviceError(f"no track for device {key}") from None

    def measurements_in_window(
        self, t_lo: float, t_hi: float, exclude: DeviceId | None = None
    ) -> list[tuple[DeviceId, Fingerprint]]:
        """Per device, the sample in [t_lo, t_hi] nearest to t_hi.

        Equivalently the latest in-window sample, since nearer to t_hi means
        later. Devices with no sample in the window are omitted; exclude
        drops one device entirely. Results are sorted by device id.
        """
        if t_lo > t_hi:
            raise ValueError(f"empty window: [{t_lo}, {t_hi}]")
        skip = canonical_id(exclude) if exclude is not None else None
        out: list[tuple[DeviceId, Fingerprint]] = []
        for device in self._order:
            if device == skip:
                continue
            track = self._tracks[device]
            i = bisect_right(track._times, t_hi) - 1
            if i >= 0 and track._times[i] >= t_lo:
                out.append((device, track._samples[i]))
        return out

    def previous_measurement(self, device: DeviceId, before: float) -> Fingerprint | None:
        """The device's latest sample strictly earlier than before, or None."""
        return self.track(device).previous_before(before)


# --- JSONL serialization ---------------------------------------------------


def fingerprint_to_json(device: DeviceId, fp: Fingerprint) -> dict:
    return {
        "device": device,
        "t": fp.t,
        "aps": [
            {"ssid": o.ssid, "bssid": o.bssid, "rssi": o.rssi}
            for o in fp.env.observations
        ],
    }


def _require(obj: Mapping, key: str, kinds, where: str):
    if key not in obj:
        raise LogFormatError(f"{where}: missing field {key!r}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, kinds):
        raise LogFormatError(f"{where}: field {key!r} has wrong type")
    return value


def fingerprint_from_json(obj: Mapping) -> tuple[DeviceId, Fingerprint]:
    """Decode one record; raises LogFormatError on shape problems."""
    if not isinstance(obj, Mapping):
        raise LogFormatError("record must be a JSON object")
    device = _require(obj, "device", str, "record")
    t = _require(obj, "t", (int, float), "record")
    aps = _require(obj, "aps", list, "record")
    observations = []
    for ap in aps:
        if not isinstance(ap, Mapping):
            raise LogFormatError("record: each ap must be a JSON object")
        bssid = _require(ap, "bssid", str, "ap")
        rssi = _require(ap, "rssi", (int, float), "ap")
        if isinstance(rssi, float):
            if not rssi.is_integer():
                raise LogFormatError(f"ap: rssi must be integer dBm, got {rssi}")
            rssi = int(rssi)
        ssid = ap.get("ssid", "")
        if not isinstance(ssid, str):
            raise LogFormatError("ap: field 'ssid' has wrong type")
        try:
            observations.append(ApObservation(bssid=bssid, rssi=rssi, ssid=ssid))
        except (ValueError, DuplicateBssidError) as exc:
            raise LogFormatError(str(exc)) from None
    try:
        env = EnvironmentSnapshot(tuple(observations))
        return canonical_id(device), Fingerprint(t=t, env=env)
    except (ValueError, DuplicateBssidError) as exc:
        raise LogFormatError(str(exc)) from None


def read_log_jsonl(source: str | Path | IO[str]) -> ProximityLog:
    """Read a JSONL proximity log; malformed lines raise line-numbered errors."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return read_log_jsonl(fh)
    log = ProximityLog()
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"invalid JSON: {exc.msg}", line=lineno) from None
        try:
            device, fp = fingerprint_from_json(obj)
            log.ingest(device, fp)
        except NonMonotoneTimestampError as exc:
            raise LogFormatError(str(exc), line=lineno) from None
        except LogFormatError as exc:
            raise LogFormatError(str(exc), line=lineno) from None
    return log


def write_log_jsonl(log: ProximityLog, dest: str | Path | IO[str]) -> None:
    """Write tracks sorted by device id, samples in time order."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8") as fh:
            write_log_jsonl(log, fh)
            return
    for device in log.devices:
        for fp in log.track(device):
            dest.write(json.dumps(fingerprint_to_json(device, fp)) + "\n")
