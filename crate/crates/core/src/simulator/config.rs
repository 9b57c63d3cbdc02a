use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::PrivacyConstraint;
use crate::geometry::{random_point_in_window, Point, StudyWindow};
use crate::point_process::{
    sample_poisson_homogeneous, sample_poisson_inhomogeneous, GrfConfig, GrfSampler, Grid,
};

/// How agents' starting positions were drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum StartMode {
    UniformPoisson { lambda: f64 },
    ExpGrf(GrfConfig),
}

/// Biased Gaussian step kernel.
///
/// Each active agent moves by `sigma * (eps + bias)` with `eps ~ N(0, I)` and
/// `sigma = sigma_fraction * hypotenuse`; the displacement is capped at
/// `cap_sigmas * sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepKernel {
    pub sigma_fraction: f64,
    pub cap_sigmas: f64,
}

impl Default for StepKernel {
    fn default() -> Self {
        StepKernel {
            sigma_fraction: 0.01,
            cap_sigmas: 3.0,
        }
    }
}

/// Movement parameters of one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Movement {
    pub targets: Vec<Point>,
    pub interaction_radius: f64,
    /// Positive values attract agents to their neighbours, negative repel.
    pub agent_interaction_strength: f64,
    /// Positive values attract agents to the nearest target, negative repel.
    pub target_interaction_strength: f64,
    pub pause_probability: f64,
    pub max_paused_steps: usize,
    pub kernel: StepKernel,
}

impl Movement {
    /// Unbiased walk with no pauses.
    pub fn unbiased() -> Self {
        Movement {
            targets: Vec::new(),
            interaction_radius: 0.0,
            agent_interaction_strength: 0.0,
            target_interaction_strength: 0.0,
            pause_probability: 0.0,
            max_paused_steps: 0,
            kernel: StepKernel::default(),
        }
    }
}

/// Kernel density snapshot settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySettings {
    /// Gaussian bandwidth as a fraction of the window hypotenuse.
    pub bandwidth_fraction: f64,
    /// Cells along the window's longer edge.
    pub cells: usize,
}

impl Default for DensitySettings {
    fn default() -> Self {
        DensitySettings {
            bandwidth_fraction: 0.05,
            cells: 64,
        }
    }
}

/// Everything needed to replay one simulation round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub seed: u64,
    pub window: StudyWindow,
    pub n_steps: usize,
    pub start_mode: StartMode,
    pub initial_positions: Vec<Point>,
    pub movement: Movement,
    pub k: PrivacyConstraint,
    pub sites: Vec<Point>,
    /// Radius of each site's fixed perimeter.
    pub fixed_radii: Vec<f64>,
    pub density: DensitySettings,
    /// Lambda search tolerance override; `None` uses the estimator default.
    pub lambda_tolerance: Option<f64>,
}

impl SimulationConfig {
    pub fn n_agents(&self) -> usize {
        self.initial_positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_positions.is_empty() {
            return Err(Error::InvalidConfig("round has no agents".into()));
        }
        if self.sites.is_empty() || self.sites.len() != self.fixed_radii.len() {
            return Err(Error::InvalidConfig(
                "need at least one site and one fixed radius per site".into(),
            ));
        }
        if self.k.get() > self.n_agents() as f64 {
            return Err(Error::InvalidConfig(format!(
                "k = {} exceeds agent count {}",
                self.k,
                self.n_agents()
            )));
        }
        if !(0.0..=1.0).contains(&self.movement.pause_probability) {
            return Err(Error::InvalidConfig("pause probability outside [0, 1]".into()));
        }
        if !self.initial_positions.iter().all(|p| self.window.contains(p)) {
            return Err(Error::InvalidConfig("starting position outside window".into()));
        }
        Ok(())
    }
}

/// Supports of the sampled round parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRanges {
    pub n_steps: (usize, usize),
    pub window_max: (f64, f64),
    /// Probability that starts come from the exponentiated GRF.
    pub grf_probability: f64,
    pub poisson_lambda: (f64, f64),
    pub psill: (f64, f64),
    /// Lower end of the range; the upper end is the window hypotenuse.
    pub range_min: f64,
    pub nugget: (f64, f64),
    pub beta: (f64, f64),
    /// Cells along the longer window edge for the starting GRF.
    pub grf_cells: usize,
    pub n_targets: (usize, usize),
    pub interaction_radius: (f64, f64),
    pub interaction_strength: (f64, f64),
    pub pause_probability: (f64, f64),
    /// Mean of the Poisson draw for the maximum pause, per step.
    pub pause_rate: f64,
    pub n_sites: usize,
    /// Lower end of the fixed-perimeter radius; the upper end is the hypotenuse.
    pub fixed_radius_min: f64,
    pub kernel: StepKernel,
    pub density: DensitySettings,
}

impl ConfigRanges {
    /// Distributions of the simulation parameter table.
    pub fn table() -> Self {
        ConfigRanges {
            n_steps: (1, 1000),
            window_max: (10.0, 35.0),
            grf_probability: 0.5,
            poisson_lambda: (0.01, 1.0),
            psill: (0.25, 2.5),
            range_min: 2.0,
            nugget: (0.0, 0.25),
            beta: (-2.5, 1.0),
            grf_cells: 32,
            n_targets: (1, 5),
            interaction_radius: (0.0, 5.0),
            interaction_strength: (-1.0, 1.0),
            pause_probability: (0.0, 0.5),
            pause_rate: 0.25,
            n_sites: 30,
            fixed_radius_min: 0.5,
            kernel: StepKernel::default(),
            density: DensitySettings::default(),
        }
    }

    /// The table with rounds shortened to at most 100 steps, for runs that
    /// must finish on a desktop in minutes.
    pub fn desk() -> Self {
        ConfigRanges {
            n_steps: (1, 100),
            ..Self::table()
        }
    }

    pub fn with_sites(mut self, n_sites: usize) -> Self {
        self.n_sites = n_sites;
        self
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn uniform_int<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (usize, usize)) -> usize {
    rng.random_range(lo..=hi.max(lo))
}

/// Draw a round configuration, including the agents' starting positions.
///
/// A start pattern with no agents is redrawn (up to 100 times, then a single
/// uniform agent is placed) because every estimator needs `n >= 1`. The
/// privacy constraint is uniform on `{1, ..., n}`.
pub fn sample_config<R: Rng + ?Sized>(seed: u64, ranges: &ConfigRanges, rng: &mut R) -> Result<SimulationConfig> {
    let n_steps = uniform_int(rng, ranges.n_steps);
    let window = StudyWindow::from_extent(uniform(rng, ranges.window_max), uniform(rng, ranges.window_max))?;
    let hyp = window.hypotenuse();

    let use_grf = rng.random::<f64>() < ranges.grf_probability;
    let start_mode = if use_grf {
        StartMode::ExpGrf(GrfConfig {
            psill: uniform(rng, ranges.psill),
            range: uniform(rng, (ranges.range_min, hyp)),
            nugget: uniform(rng, ranges.nugget),
            beta: uniform(rng, ranges.beta),
            smoothness: GrfConfig::DEFAULT_SMOOTHNESS,
        })
    } else {
        StartMode::UniformPoisson {
            lambda: uniform(rng, ranges.poisson_lambda),
        }
    };

    let mut initial_positions = Vec::new();
    let grf = match start_mode {
        StartMode::ExpGrf(cfg) => Some(GrfSampler::new(window, Grid::covering(&window, ranges.grf_cells)?, &cfg)?),
        StartMode::UniformPoisson { .. } => None,
    };
    for _ in 0..100 {
        initial_positions = match (&grf, start_mode) {
            (Some(sampler), _) => sample_poisson_inhomogeneous(&sampler.sample(rng)?, rng).points,
            (None, StartMode::UniformPoisson { lambda }) => sample_poisson_homogeneous(&window, lambda, rng).points,
            (None, StartMode::ExpGrf(_)) => unreachable!(),
        };
        if !initial_positions.is_empty() {
            break;
        }
    }
    if initial_positions.is_empty() {
        initial_positions.push(random_point_in_window(&window, rng));
    }
    let n = initial_positions.len();

    let n_targets = uniform_int(rng, ranges.n_targets);
    let targets = (0..n_targets).map(|_| random_point_in_window(&window, rng)).collect();
    let interaction_radius = uniform(rng, ranges.interaction_radius);
    let agent_interaction_strength = uniform(rng, ranges.interaction_strength);
    let target_interaction_strength = uniform(rng, ranges.interaction_strength);
    let pause_probability = uniform(rng, ranges.pause_probability);
    let pause_mean = n_steps as f64 * ranges.pause_rate;
    let max_paused_steps = if pause_mean > 0.0 {
        Poisson::new(pause_mean).map_or(0, |d| d.sample(rng) as usize)
    } else {
        0
    };

    let k = PrivacyConstraint::new(rng.random_range(1..=n) as f64)?;
    let sites: Vec<Point> = (0..ranges.n_sites).map(|_| random_point_in_window(&window, rng)).collect();
    let fixed_radii = (0..ranges.n_sites)
        .map(|_| uniform(rng, (ranges.fixed_radius_min, hyp)))
        .collect();

    let cfg = SimulationConfig {
        seed,
        window,
        n_steps,
        start_mode,
        initial_positions,
        movement: Movement {
            targets,
            interaction_radius,
            agent_interaction_strength,
            target_interaction_strength,
            pause_probability,
            max_paused_steps,
            kernel: ranges.kernel,
        },
        k,
        sites,
        fixed_radii,
        density: ranges.density,
        lambda_tolerance: None,
    };
    cfg.validate()?;
    Ok(cfg)
}
