use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::agents::{step_agents, AgentState, AgentTrajectory};
use super::config::{sample_config, ConfigRanges, SimulationConfig};
use super::density::estimate_density_snapshot;
use super::metrics::{MetricsAccumulator, RoundMetrics};
use super::perimeters::{maintain_perimeters, MaintenanceCounts, PerimeterRoster};
use crate::error::Result;
use crate::geometry::Point;

/// Everything one round produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundResult {
    pub round_id: usize,
    pub config: SimulationConfig,
    pub metrics: RoundMetrics,
    /// Final roster, with per-site maintenance counters.
    pub roster: PerimeterRoster,
    pub maintenance: MaintenanceCounts,
    pub trajectories: Option<Vec<AgentTrajectory>>,
}

fn movement_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Run one configured round: at every time point the density snapshot is
/// taken, perimeters are maintained and tags recorded, then agents step.
pub fn run_round(round_id: usize, cfg: SimulationConfig, keep_trajectories: bool) -> Result<RoundResult> {
    cfg.validate()?;
    let mut rng = movement_rng(cfg.seed);
    let n = cfg.n_agents();
    let bandwidth = cfg.density.bandwidth_fraction * cfg.window.hypotenuse();

    let mut state = AgentState::new(cfg.initial_positions.clone());
    let mut roster = PerimeterRoster::new(&cfg.sites, &cfg.fixed_radii);
    let mut acc = MetricsAccumulator::new(cfg.k, n, cfg.sites.len());
    let mut paths: Option<Vec<Vec<Point>>> =
        keep_trajectories.then(|| state.positions.iter().map(|&p| {
            let mut v = Vec::with_capacity(cfg.n_steps + 1);
            v.push(p);
            v
        }).collect());

    for t in 0..=cfg.n_steps {
        let snapshot = estimate_density_snapshot(&state.positions, &cfg.window, bandwidth, cfg.density.cells)?;
        maintain_perimeters(&mut roster, &state.positions, &cfg, &snapshot);
        acc.record(&state.positions, &roster);
        if t < cfg.n_steps {
            step_agents(&mut state, &cfg.window, &cfg.movement, &mut rng);
            if let Some(paths) = paths.as_mut() {
                for (path, &p) in paths.iter_mut().zip(&state.positions) {
                    path.push(p);
                }
            }
        }
    }

    let trajectories = paths.map(|paths| {
        paths
            .into_iter()
            .zip(&state.paused_until)
            .enumerate()
            .map(|(agent_id, (positions, &paused_until))| AgentTrajectory {
                agent_id,
                positions,
                paused_until,
            })
            .collect()
    });
    Ok(RoundResult {
        round_id,
        maintenance: roster.totals(),
        metrics: acc.finish(),
        roster,
        config: cfg,
        trajectories,
    })
}

/// Per-round seeds drawn in order from the master seed.
pub fn round_seeds(master_seed: u64, rounds: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    (0..rounds).map(|_| rng.next_u64()).collect()
}

/// Sample and run `rounds` independent rounds in parallel. Results are in
/// round order and depend only on `master_seed` and `ranges`.
pub fn run_rounds(master_seed: u64, rounds: usize, ranges: &ConfigRanges, keep_trajectories: bool) -> Result<Vec<RoundResult>> {
    round_seeds(master_seed, rounds)
        .into_par_iter()
        .enumerate()
        .map(|(round_id, seed)| {
            let cfg = sample_config(seed, ranges, &mut ChaCha8Rng::seed_from_u64(seed))?;
            run_round(round_id, cfg, keep_trajectories)
        })
        .collect()
}
