//! Agent-based commuting simulation used to compare perimeter types.

mod agents;
pub mod config;
mod density;
mod metrics;
mod output;
mod perimeters;
mod round;

pub use agents::{bias_vectors, step_agents, AgentState, AgentTrajectory};
pub use config::{
    sample_config, ConfigRanges, DensitySettings, Movement, SimulationConfig, StartMode, StepKernel,
};
pub use density::estimate_density_snapshot;
pub use metrics::{record_metrics, MetricsAccumulator, RoundMetrics};
pub use output::{
    agent_rows, round_rows, summarize, write_csv, write_csv_file, AgentRow, PerimeterSummary, RoundRow,
};
pub use perimeters::{maintain_perimeters, MaintenanceCounts, PerimeterKind, PerimeterRoster, SitePerimeters};
pub use round::{round_seeds, run_round, run_rounds, RoundResult};
