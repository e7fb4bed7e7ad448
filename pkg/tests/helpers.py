"""Shared builders and reference implementations for the test suite.

The oracles here are deliberately written as brute-force re-derivations,
independent of the library's scan/cluster implementations, so tests compare
two different routes to the same answer.
"""

from __future__ import annotations

import random
from itertools import combinations

from convoylog import (
    ApObservation,
    ComparabilityParams,
    EnvironmentSnapshot,
    Fingerprint,
    GroupQueryParams,
    ProximityLog,
    canonical_id,
    density_clusters,
    tracks_similar,
)
from convoylog.trajectories import Point, TrajectoryDb

AP_POOL = tuple(f"0a:00:00:00:00:{i:02x}" for i in range(1, 7))
DEVICE_POOL = tuple(f"02:00:00:00:00:{i:02x}" for i in range(1, 9))


def snapshot(levels: dict[str, int]) -> EnvironmentSnapshot:
    return EnvironmentSnapshot(tuple(ApObservation(b, r) for b, r in levels.items()))


def put(log: ProximityLog, device: str, t: float, levels: dict[str, int]) -> None:
    log.ingest(device, Fingerprint(t, snapshot(levels)))


def random_snapshot(rng: random.Random, max_aps: int = 3) -> EnvironmentSnapshot:
    bssids = rng.sample(AP_POOL, rng.randint(1, max_aps))
    return snapshot({b: rng.randint(-90, -30) for b in bssids})


def random_case(
    rng: random.Random, *, disjoint: bool
) -> tuple[ProximityLog, str, float, EnvironmentSnapshot, GroupQueryParams]:
    """One randomized group query: a log, a querying device, and params.

    With disjoint=True every device's inter-sample spacing exceeds 2*delta,
    so each matching window holds at most one sample.
    """
    delta = rng.uniform(0.5, 3.0)
    devices = list(DEVICE_POOL[: rng.randint(3, 6)])
    log = ProximityLog()
    for device in devices:
        t = rng.uniform(0.0, 30.0)
        for _ in range(rng.randint(3, 6)):
            log.ingest(device, Fingerprint(t, random_snapshot(rng)))
            if disjoint:
                t += rng.uniform(2.1 * delta, 5.0 * delta)
            else:
                t += rng.uniform(0.2 * delta, 3.0 * delta)
    user = devices[0]
    last = log.track(user).last()
    t0, e0 = last.t, last.env
    span = t0 - log.track(user).samples[0].t
    params = GroupQueryParams(
        delta=delta,
        omega=rng.choice([5.0, 8.0, 12.0, 20.0]),
        t_max=max(rng.uniform(0.3, 1.3) * max(span, 1.0), 0.5),
        n=2,
        min_steps=rng.choice([1, 2, 3]),
    )
    return log, user, t0, e0, params


def processed_user_steps(
    log: ProximityLog, user: str, t0: float, e0: EnvironmentSnapshot, params: GroupQueryParams
) -> list[Fingerprint]:
    """The user samples a full backward walk would process, oldest first."""
    steps = [Fingerprint(t0, e0)]
    if user in log:
        horizon = t0 - params.t_max
        steps += [fp for fp in log.track(user).samples if horizon <= fp.t < t0]
    return sorted(steps, key=lambda fp: fp.t)


def oracle_members(
    log: ProximityLog, user: str, t0: float, e0: EnvironmentSnapshot, params: GroupQueryParams
) -> frozenset[str]:
    """Members by exhaustive track matching over the scan's windows.

    Valid as an exact oracle only in the disjoint-window regime, where the
    nearest-sample choice and any order-preserving matching coincide.
    """
    user = canonical_id(user)
    steps = processed_user_steps(log, user, t0, e0, params)
    if len(steps) < params.min_steps:
        return frozenset()
    windows = [
        (fp.t - params.delta, fp.t if fp.t == t0 else fp.t + params.delta) for fp in steps
    ]
    cp = ComparabilityParams(omega=params.omega, delta=params.delta)
    members = set()
    for device in log.devices:
        if device == user:
            continue
        restricted = [
            fp
            for fp in log.track(device).samples
            if any(lo <= fp.t <= hi for lo, hi in windows)
        ]
        if restricted and tracks_similar(steps, restricted, cp):
            members.add(device)
    return frozenset(members)


def witness_violations(
    log: ProximityLog,
    user: str,
    t0: float,
    e0: EnvironmentSnapshot,
    params: GroupQueryParams,
    members: frozenset[str],
) -> list[tuple[str, float]]:
    """(device, step time) pairs where a member lacks any comparable sample
    in the step's window. Soundness demands this list be empty."""
    from convoylog import comparable

    user = canonical_id(user)
    steps: list[tuple[float, EnvironmentSnapshot, bool]] = [(t0, e0, True)]
    if user in log:
        track = log.track(user)
        t = t0
        while t > t0 - params.t_max:
            prev = track.previous_before(t)
            if prev is None or prev.t < t0 - params.t_max:
                break
            t = prev.t
            steps.append((prev.t, prev.env, False))
    out = []
    for device in members:
        for t, env, seed in steps:
            lo = t - params.delta
            hi = t if seed else t + params.delta
            if not any(
                lo <= fp.t <= hi and comparable(fp.env, env, params.omega)
                for fp in log.track(device).samples
            ):
                out.append((device, t))
    return out


def rebuild_without(log: ProximityLog, device: str, index: int) -> ProximityLog:
    """A copy of the log with one sample of one device removed."""
    out = ProximityLog()
    for d in log.devices:
        for i, fp in enumerate(log.track(d).samples):
            if d == device and i == index:
                continue
            out.ingest(d, fp)
    return out


# --- Trajectory oracles ------------------------------------------------------


def dbscan_oracle(
    points: list[tuple[str, Point]], e: float, m: int
) -> set[frozenset[str]]:
    """Clusters by transitive closure of direct density reachability.

    Independent route: computes each core's reachable set, dedupes them into
    components, then resolves contested edge objects to the component whose
    smallest core id is smallest.
    """
    pos = dict(points)
    ids = sorted(pos)
    nh = {a: {b for b in ids if pos[a].distance_to(pos[b]) <= e} for a in ids}
    cores = {a for a in ids if len(nh[a]) >= m}
    reach: dict[str, set[str]] = {}
    for seed in cores:
        seen = {seed}
        frontier = [seed]
        while frontier:
            cur = frontier.pop()
            if cur in cores:
                for nxt in nh[cur]:
                    if nxt not in seen:
                        seen.add(nxt)
                        frontier.append(nxt)
        reach[seed] = seen
    components: dict[frozenset[str], set[str]] = {}
    for seed, seen in reach.items():
        key = frozenset(seen & cores)
        components.setdefault(key, set()).update(seen)
    claimed: dict[str, frozenset[str]] = {}
    for key in sorted(components, key=min):
        for obj in components[key]:
            if obj not in claimed:
                claimed[obj] = key
    out: dict[frozenset[str], set[str]] = {key: set() for key in components}
    for obj, key in claimed.items():
        out[key].add(obj)
    return {frozenset(objs) for objs in out.values() if objs}


def convoy_oracle(db: TrajectoryDb, e: float, m: int, k: int) -> set[tuple[frozenset[str], int, int]]:
    """Convoys by enumerating every subset and its co-clustered runs."""
    span = db.time_range()
    if span is None:
        return set()
    t_lo, t_hi = span
    clusters_at = {
        t: density_clusters(db.positions_at(t), e, m) for t in range(t_lo, t_hi + 1)
    }
    found: set[tuple[frozenset[str], int, int]] = set()
    objects = db.objects
    for size in range(m, len(objects) + 1):
        for combo in combinations(objects, size):
            group = frozenset(combo)
            start: int | None = None
            for t in range(t_lo, t_hi + 1):
                if any(group <= c for c in clusters_at[t]):
                    if start is None:
                        start = t
                else:
                    if start is not None and (t - 1) - start + 1 >= k:
                        found.add((group, start, t - 1))
                    start = None
            if start is not None and t_hi - start + 1 >= k:
                found.add((group, start, t_hi))
    return {
        c
        for c in found
        if not any(
            o != c and c[0] <= o[0] and o[1] <= c[1] and c[2] <= o[2] for o in found
        )
    }
