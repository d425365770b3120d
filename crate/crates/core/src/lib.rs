//! Joint caching, computing and multicast bandwidth optimization for
//! multi-user mobile edge computing.
//!
//! Devices request tasks independently. Each request is served from a
//! cached output (route 1), a cached input computed locally (route 2), a
//! downloaded input computed locally (route 3) or an output computed at the
//! edge server (route 4). Transmissions are multicast, so the bandwidth of a
//! task stream is set by the weakest requester and the highest rate.

pub mod bandwidth;
pub mod cccp;
pub mod error;
pub mod exact;
pub mod model;
pub mod symmetric;

pub use bandwidth::{
    average_bandwidth, average_bandwidth_by_requesters, average_bandwidth_exact, average_bandwidth_mc,
    per_state_bandwidth, unicast_bandwidth, BandwidthBreakdown, McEstimate, RequestStates, DEFAULT_STATE_CAP,
};
pub use cccp::{
    build_penalized_model, cccp_run, multi_start_solve, round_and_repair, solve_convex_subproblem, CccpConfig,
    CccpTrace, ContinuousPoint, MultiStartResult, PenalizedModel,
};
pub use error::{Error, Result};
pub use exact::{
    solve_exact_multicast, solve_exact_multicast_with_routes, solve_exact_unicast, solve_mec_baseline, Solution,
    DEFAULT_ENUM_CAP,
};
pub use model::{
    check_feasible, decision_to_policy, device_usage, is_feasible, policy_to_decision, route_rate, zipf_popularity,
    CacheComputeDecision, ConstraintKind, DeviceSpec, Instance, RequestState, Route, ServicePolicy, TaskSpec,
    Violation, DEFAULT_DEADLINE,
};
pub use symmetric::{
    integer_policy, mec_gain, mec_gain_monotonicity_table, multicast_gain, optimal_counts, symmetric_bandwidth,
    symmetric_mec_bandwidth, symmetric_policy, GainParameter, GainRegime, OptimalCounts, SymmetricInstance, Trend,
};
