"""Co-travel group discovery over Wi-Fi proximity logs.

Devices that move together see nearly the same access points at nearly the
same signal strengths, so groups can be discovered from visibility logs
alone, without coordinates. This package provides the proximity log data
model, the backward-scan group query, a classical coordinate-convoy
baseline for comparison, a synthetic mobility/radio simulator, a production
rule engine over proximity context, and a CLI tying them together.
"""

from .comparability import ComparabilityParams, comparable, tracks_similar
from .errors import (
    ConvoylogError,
    DuplicateBssidError,
    DuplicateRuleIdError,
    EmptyEnvironmentError,
    EmptyTrackError,
    InvalidScenarioError,
    LogFormatError,
    NonMonotoneTimestampError,
    RuleSyntaxError,
    UnknownDeviceError,
)
from .groups import GroupQueryParams, GroupResult, discover_group, in_group_of
from .proximity import (
    ApObservation,
    DeviceId,
    EnvironmentSnapshot,
    Fingerprint,
    ProximityLog,
    ProximityTrack,
    canonical_id,
    looks_like_hw_addr,
    read_log_jsonl,
    write_log_jsonl,
)
from .rules import (
    And,
    CloseThan,
    EngineConfig,
    EvalContext,
    FirstVisit,
    FollowUpVisit,
    InGroupOf,
    IsVisible,
    Not,
    NotVisible,
    Or,
    Predicate,
    Rule,
    TimeCompare,
    TimeWithin,
    eval_predicate,
    eval_rules,
    format_predicate,
    format_rules,
    parse_rules,
)
from .simulation import (
    ApNode,
    GroundTruthRecord,
    GroupSpec,
    LonerSpec,
    MobilityScenario,
    RadioModel,
    SimulationResult,
    WaypointPath,
    corridor_scenario,
    fig4_scenario,
    path_through,
    read_ground_truth_jsonl,
    read_scenario,
    rssi_at,
    scenario_from_json,
    scenario_to_json,
    simulate,
    write_ground_truth_jsonl,
    write_scenario,
)
from .trajectories import (
    Convoy,
    ConvoyParams,
    Point,
    TrajectoryDb,
    density_clusters,
    discover_convoys,
    neighborhood,
    read_trajectories_jsonl,
    write_trajectories_jsonl,
)

__version__ = "0.1.0"

__all__ = [
    "And",
    "ApNode",
    "ApObservation",
    "CloseThan",
    "ComparabilityParams",
    "Convoy",
    "ConvoyParams",
    "ConvoylogError",
    "DeviceId",
    "DuplicateBssidError",
    "DuplicateRuleIdError",
    "EmptyEnvironmentError",
    "EmptyTrackError",
    "EngineConfig",
    "EnvironmentSnapshot",
    "EvalContext",
    "Fingerprint",
    "FirstVisit",
    "FollowUpVisit",
    "GroundTruthRecord",
    "GroupQueryParams",
    "GroupResult",
    "GroupSpec",
    "InGroupOf",
    "InvalidScenarioError",
    "IsVisible",
    "LogFormatError",
    "LonerSpec",
    "MobilityScenario",
    "NonMonotoneTimestampError",
    "Not",
    "NotVisible",
    "Or",
    "Point",
    "Predicate",
    "ProximityLog",
    "ProximityTrack",
    "RadioModel",
    "Rule",
    "RuleSyntaxError",
    "SimulationResult",
    "TimeCompare",
    "TimeWithin",
    "TrajectoryDb",
    "UnknownDeviceError",
    "WaypointPath",
    "canonical_id",
    "comparable",
    "corridor_scenario",
    "density_clusters",
    "discover_convoys",
    "discover_group",
    "eval_predicate",
    "eval_rules",
    "fig4_scenario",
    "format_predicate",
    "format_rules",
    "in_group_of",
    "looks_like_hw_addr",
    "neighborhood",
    "parse_rules",
    "path_through",
    "read_ground_truth_jsonl",
    "read_log_jsonl",
    "read_scenario",
    "read_trajectories_jsonl",
    "rssi_at",
    "scenario_from_json",
    "scenario_to_json",
    "simulate",
    "tracks_similar",
    "write_ground_truth_jsonl",
    "write_log_jsonl",
    "write_scenario",
    "write_trajectories_jsonl",
]
