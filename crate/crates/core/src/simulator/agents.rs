use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::Movement;
use crate::geometry::{Point, StudyWindow};

/// Positions and pause bookkeeping of every agent at the current step.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub positions: Vec<Point>,
    /// Step index at which each agent resumes walking.
    pub paused_until: Vec<usize>,
    pub step: usize,
}

impl AgentState {
    pub fn new(positions: Vec<Point>) -> Self {
        let n = positions.len();
        AgentState {
            positions,
            paused_until: vec![0; n],
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// One agent's geolocation tags: the start plus one position per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrajectory {
    pub agent_id: usize,
    pub positions: Vec<Point>,
    pub paused_until: usize,
}

/// Uniform bucket grid for fixed-radius neighbour queries.
struct NeighbourIndex<'a> {
    points: &'a [Point],
    x0: f64,
    y0: f64,
    cell: f64,
    cols: usize,
    rows: usize,
    starts: Vec<usize>,
    members: Vec<usize>,
}

impl<'a> NeighbourIndex<'a> {
    const MAX_CELLS_PER_SIDE: usize = 256;

    fn new(points: &'a [Point], window: &StudyWindow, radius: f64) -> Self {
        let long = window.width().max(window.height());
        let cell = radius.max(long / Self::MAX_CELLS_PER_SIDE as f64);
        let cols = (window.width() / cell).ceil().max(1.0) as usize;
        let rows = (window.height() / cell).ceil().max(1.0) as usize;
        let mut index = NeighbourIndex {
            points,
            x0: window.x_min(),
            y0: window.y_min(),
            cell,
            cols,
            rows,
            starts: vec![0; cols * rows + 1],
            members: vec![0; points.len()],
        };
        let buckets: Vec<usize> = points.iter().map(|p| index.bucket(p)).collect();
        for &b in &buckets {
            index.starts[b + 1] += 1;
        }
        for i in 0..cols * rows {
            index.starts[i + 1] += index.starts[i];
        }
        let mut fill = index.starts.clone();
        for (i, &b) in buckets.iter().enumerate() {
            index.members[fill[b]] = i;
            fill[b] += 1;
        }
        index
    }

    fn coords(&self, p: &Point) -> (usize, usize) {
        let c = ((p.x - self.x0) / self.cell).floor().clamp(0.0, (self.cols - 1) as f64) as usize;
        let r = ((p.y - self.y0) / self.cell).floor().clamp(0.0, (self.rows - 1) as f64) as usize;
        (c, r)
    }

    fn bucket(&self, p: &Point) -> usize {
        let (c, r) = self.coords(p);
        r * self.cols + c
    }

    /// Mean unit vector from agent `i` toward neighbours within `radius`.
    fn mean_direction(&self, i: usize, radius: f64) -> (f64, f64) {
        let p = self.points[i];
        let (c, r) = self.coords(&p);
        let span = (radius / self.cell).ceil() as usize;
        let r2 = radius * radius;
        let (mut sx, mut sy, mut count) = (0.0, 0.0, 0usize);
        for row in r.saturating_sub(span)..=(r + span).min(self.rows - 1) {
            for col in c.saturating_sub(span)..=(c + span).min(self.cols - 1) {
                let b = row * self.cols + col;
                for &j in &self.members[self.starts[b]..self.starts[b + 1]] {
                    if j == i {
                        continue;
                    }
                    let q = self.points[j];
                    let (dx, dy) = (q.x - p.x, q.y - p.y);
                    let d2 = dx * dx + dy * dy;
                    if d2 > 0.0 && d2 <= r2 {
                        let d = d2.sqrt();
                        sx += dx / d;
                        sy += dy / d;
                        count += 1;
                    }
                }
            }
        }
        if count == 0 {
            (0.0, 0.0)
        } else {
            (sx / count as f64, sy / count as f64)
        }
    }
}

fn nearest_target_direction(p: Point, targets: &[Point]) -> (f64, f64) {
    let nearest = targets
        .iter()
        .min_by(|a, b| p.distance_sq(a).total_cmp(&p.distance_sq(b)));
    match nearest {
        Some(t) => {
            let d = p.distance(t);
            if d > 0.0 {
                ((t.x - p.x) / d, (t.y - p.y) / d)
            } else {
                (0.0, 0.0)
            }
        }
        None => (0.0, 0.0),
    }
}

/// Deterministic drift of every agent in units of the step scale.
pub fn bias_vectors(positions: &[Point], window: &StudyWindow, movement: &Movement) -> Vec<(f64, f64)> {
    let use_agents = movement.agent_interaction_strength != 0.0 && movement.interaction_radius > 0.0;
    let use_targets = movement.target_interaction_strength != 0.0 && !movement.targets.is_empty();
    if !use_agents && !use_targets {
        return vec![(0.0, 0.0); positions.len()];
    }
    let index = use_agents.then(|| NeighbourIndex::new(positions, window, movement.interaction_radius));
    (0..positions.len())
        .into_par_iter()
        .map(|i| {
            let (mut bx, mut by) = (0.0, 0.0);
            if let Some(index) = &index {
                let (ux, uy) = index.mean_direction(i, movement.interaction_radius);
                bx += movement.agent_interaction_strength * ux;
                by += movement.agent_interaction_strength * uy;
            }
            if use_targets {
                let (ux, uy) = nearest_target_direction(positions[i], &movement.targets);
                bx += movement.target_interaction_strength * ux;
                by += movement.target_interaction_strength * uy;
            }
            (bx, by)
        })
        .collect()
}

/// Advance every agent by one step.
///
/// Paused agents hold position. An active agent first rolls for a pause
/// (duration uniform on `1..=max_paused_steps`, starting this step); if it
/// keeps walking it moves by `sigma * (eps + bias)`, capped at
/// `cap_sigmas * sigma`, and is reflected back into the window. Biases are
/// computed from the positions before the step.
pub fn step_agents<R: Rng + ?Sized>(state: &mut AgentState, window: &StudyWindow, movement: &Movement, rng: &mut R) {
    let sigma = movement.kernel.sigma_fraction * window.hypotenuse();
    let cap = movement.kernel.cap_sigmas * sigma;
    let bias = bias_vectors(&state.positions, window, movement);
    let t = state.step;

    for (i, &(bx, by)) in bias.iter().enumerate() {
        if state.paused_until[i] > t {
            continue;
        }
        if movement.max_paused_steps > 0 && rng.random::<f64>() < movement.pause_probability {
            let duration = rng.random_range(1..=movement.max_paused_steps);
            state.paused_until[i] = t + duration;
            continue;
        }
        let ex: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        let (mut dx, mut dy) = (sigma * (ex + bx), sigma * (ey + by));
        let len = dx.hypot(dy);
        if len > cap {
            dx *= cap / len;
            dy *= cap / len;
        }
        let p = state.positions[i];
        state.positions[i] = window.reflect(Point::new(p.x + dx, p.y + dy));
    }
    state.step += 1;
}
