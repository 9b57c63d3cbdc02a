use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::agents::AgentTrajectory;
use super::perimeters::{PerimeterKind, PerimeterRoster};
use crate::estimators::PrivacyConstraint;
use crate::geometry::Point;

const P: usize = PerimeterKind::COUNT;

/// Outcome measures of one round.
///
/// * `captured[(site, perimeter, t)]`: agents inside the perimeter at time `t`;
/// * `mean_abs_dev[(site, perimeter)]`: mean over time of `|captured - k|`;
/// * `steps_inside[(site, perimeter, agent)]`: tags inside the perimeter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub k: f64,
    pub n_agents: usize,
    pub n_sites: usize,
    /// Number of recorded time points (tags per agent).
    pub n_tags: usize,
    captured: Vec<u32>,
    mean_abs_dev: Vec<f64>,
    steps_inside: Vec<u32>,
}

impl RoundMetrics {
    pub fn captured(&self, site: usize, kind: PerimeterKind, t: usize) -> u32 {
        self.captured[(site * P + kind.index()) * self.n_tags + t]
    }

    pub fn mean_abs_dev(&self, site: usize, kind: PerimeterKind) -> f64 {
        self.mean_abs_dev[site * P + kind.index()]
    }

    pub fn steps_inside(&self, site: usize, kind: PerimeterKind, agent: usize) -> u32 {
        self.steps_inside[(site * P + kind.index()) * self.n_agents + agent]
    }

    /// In-perimeter tags over all tags for one agent.
    pub fn surveillance_fraction(&self, site: usize, kind: PerimeterKind, agent: usize) -> f64 {
        if self.n_tags == 0 {
            return 0.0;
        }
        self.steps_inside(site, kind, agent) as f64 / self.n_tags as f64
    }

    pub fn mean_surveillance_fraction(&self, site: usize, kind: PerimeterKind) -> f64 {
        if self.n_agents == 0 {
            return 0.0;
        }
        let base = (site * P + kind.index()) * self.n_agents;
        let total: u64 = self.steps_inside[base..base + self.n_agents].iter().map(|&v| v as u64).sum();
        total as f64 / (self.n_agents * self.n_tags.max(1)) as f64
    }

    /// Baseline `k / n` for agents re-randomized uniformly every step.
    pub fn expected_fraction(&self) -> f64 {
        self.k / self.n_agents as f64
    }
}

/// Streams per-step counts into [`RoundMetrics`] without storing trajectories.
#[derive(Debug, Clone)]
pub struct MetricsAccumulator {
    k: f64,
    n_agents: usize,
    n_sites: usize,
    captured: Vec<Vec<u32>>,
    abs_dev_sum: Vec<f64>,
    steps_inside: Vec<u32>,
    n_tags: usize,
}

impl MetricsAccumulator {
    pub fn new(k: PrivacyConstraint, n_agents: usize, n_sites: usize) -> Self {
        MetricsAccumulator {
            k: k.get(),
            n_agents,
            n_sites,
            captured: vec![Vec::new(); n_sites * P],
            abs_dev_sum: vec![0.0; n_sites * P],
            steps_inside: vec![0; n_sites * P * n_agents],
            n_tags: 0,
        }
    }

    /// Record one time point: agent positions against the current roster.
    pub fn record(&mut self, positions: &[Point], roster: &PerimeterRoster) {
        assert_eq!(positions.len(), self.n_agents, "agent count changed mid-round");
        assert_eq!(roster.sites.len(), self.n_sites, "site count changed mid-round");
        let n = self.n_agents;
        let k = self.k;
        let chunk = P * n;
        let per_site: Vec<[u32; P]> = if chunk == 0 {
            vec![[0; P]; self.n_sites]
        } else {
            self.steps_inside
                .par_chunks_mut(chunk)
                .zip(roster.sites.par_iter())
                .map(|(inside, sp)| {
                    let mut y = [0u32; P];
                    for kind in PerimeterKind::ALL {
                        let r = sp.radius(kind);
                        let r2 = r * r;
                        let slot = &mut inside[kind.index() * n..(kind.index() + 1) * n];
                        for (a, p) in positions.iter().enumerate() {
                            if p.distance_sq(&sp.site) <= r2 {
                                slot[a] += 1;
                                y[kind.index()] += 1;
                            }
                        }
                    }
                    y
                })
                .collect()
        };
        for (s, y) in per_site.iter().enumerate() {
            for (j, &count) in y.iter().enumerate() {
                self.captured[s * P + j].push(count);
                self.abs_dev_sum[s * P + j] += (count as f64 - k).abs();
            }
        }
        self.n_tags += 1;
    }

    pub fn finish(self) -> RoundMetrics {
        let t = self.n_tags;
        let mean_abs_dev = self
            .abs_dev_sum
            .iter()
            .map(|s| if t == 0 { 0.0 } else { s / t as f64 })
            .collect();
        RoundMetrics {
            k: self.k,
            n_agents: self.n_agents,
            n_sites: self.n_sites,
            n_tags: t,
            captured: self.captured.into_iter().flatten().collect(),
            mean_abs_dev,
            steps_inside: self.steps_inside,
        }
    }
}

/// Batch form: `rosters[t]` holds the perimeters in force at time `t`, and
/// every trajectory has one position per time point.
pub fn record_metrics(trajectories: &[AgentTrajectory], rosters: &[PerimeterRoster], k: PrivacyConstraint) -> RoundMetrics {
    let n_sites = rosters.first().map_or(0, |r| r.sites.len());
    let mut acc = MetricsAccumulator::new(k, trajectories.len(), n_sites);
    for (t, roster) in rosters.iter().enumerate() {
        let positions: Vec<Point> = trajectories.iter().map(|tr| tr.positions[t]).collect();
        acc.record(&positions, roster);
    }
    acc.finish()
}
