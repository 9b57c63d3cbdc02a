use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::field::{Grid, IntensityField};
use crate::error::{Error, Result};
use crate::geometry::{Point, StudyWindow};

/// Largest grid handled by dense covariance factorization.
pub const MAX_GRF_CELLS: usize = 4096;

const JITTER_FLOOR: f64 = 1e-10;

/// Log-intensity Gaussian process with Matérn covariance.
///
/// `range` is the length scale in the `sqrt(2 nu) d / range` parameterization;
/// `nugget` adds independent variance at each centroid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrfConfig {
    pub psill: f64,
    pub range: f64,
    pub nugget: f64,
    pub beta: f64,
    #[serde(default = "GrfConfig::default_smoothness")]
    pub smoothness: f64,
}

impl GrfConfig {
    pub const DEFAULT_SMOOTHNESS: f64 = 1.5;

    fn default_smoothness() -> f64 {
        Self::DEFAULT_SMOOTHNESS
    }

    pub fn new(psill: f64, range: f64, nugget: f64, beta: f64) -> Result<Self> {
        let cfg = GrfConfig {
            psill,
            range,
            nugget,
            beta,
            smoothness: Self::DEFAULT_SMOOTHNESS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.psill.is_finite() && self.psill >= 0.0) {
            return Err(Error::InvalidConfig(format!("psill {} must be >= 0", self.psill)));
        }
        if !(self.range.is_finite() && self.range > 0.0) {
            return Err(Error::InvalidConfig(format!("range {} must be > 0", self.range)));
        }
        if !(self.nugget.is_finite() && self.nugget >= 0.0) {
            return Err(Error::InvalidConfig(format!("nugget {} must be >= 0", self.nugget)));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidConfig("beta must be finite".into()));
        }
        if ![0.5, 1.5, 2.5].contains(&self.smoothness) {
            return Err(Error::InvalidConfig(format!(
                "Matérn smoothness {} unsupported (use 0.5, 1.5 or 2.5)",
                self.smoothness
            )));
        }
        Ok(())
    }

    /// Partial-sill covariance at distance `d` (nugget excluded).
    pub fn matern(&self, d: f64) -> f64 {
        let s = (2.0 * self.smoothness).sqrt() * d / self.range;
        let shape = if self.smoothness == 0.5 {
            1.0
        } else if self.smoothness == 1.5 {
            1.0 + s
        } else {
            1.0 + s + s * s / 3.0
        };
        self.psill * shape * (-s).exp()
    }
}

/// Reusable sampler holding the Cholesky factor of the centroid covariance.
#[derive(Debug, Clone)]
pub struct GrfSampler {
    window: StudyWindow,
    grid: Grid,
    beta: f64,
    factor: Option<DMatrix<f64>>,
}

impl GrfSampler {
    pub fn new(window: StudyWindow, grid: Grid, cfg: &GrfConfig) -> Result<Self> {
        cfg.validate()?;
        let n = grid.len();
        if n > MAX_GRF_CELLS {
            return Err(Error::InvalidConfig(format!(
                "GRF grid has {n} cells; dense factorization is capped at {MAX_GRF_CELLS}"
            )));
        }
        // Validates coverage before paying for the factorization.
        let template = IntensityField::constant(window, grid, 0.0)?;
        if cfg.psill == 0.0 && cfg.nugget == 0.0 {
            return Ok(GrfSampler {
                window,
                grid,
                beta: cfg.beta,
                factor: None,
            });
        }

        let centroids: Vec<Point> = (0..grid.n_rows)
            .flat_map(|r| (0..grid.n_cols).map(move |c| (c, r)))
            .map(|(c, r)| template.centroid(c, r))
            .collect();
        let mut cov = DMatrix::from_fn(n, n, |i, j| cfg.matern(centroids[i].distance(&centroids[j])));
        let mut jitter = cfg.nugget.max(JITTER_FLOOR);
        for _ in 0..6 {
            let mut attempt = cov.clone();
            for i in 0..n {
                attempt[(i, i)] += jitter;
            }
            if let Some(chol) = attempt.cholesky() {
                return Ok(GrfSampler {
                    window,
                    grid,
                    beta: cfg.beta,
                    factor: Some(chol.l()),
                });
            }
            log::debug!("cholesky failed with jitter {jitter}, escalating");
            jitter *= 100.0;
        }
        cov.fill_with_identity();
        Err(Error::Factorization(format!(
            "covariance over {n} centroids is not positive definite (psill {}, range {}, nugget {})",
            cfg.psill, cfg.range, cfg.nugget
        )))
    }

    /// Draw the Gaussian log-intensity `Z` at each centroid, row-major.
    pub fn sample_log<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.grid.len();
        match &self.factor {
            None => vec![self.beta; n],
            Some(l) => {
                let eps = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let z = l * eps;
                z.iter().map(|v| v + self.beta).collect()
            }
        }
    }

    /// Draw an intensity field `exp(Z)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<IntensityField> {
        let values = self.sample_log(rng).into_iter().map(f64::exp).collect();
        IntensityField::new(self.window, self.grid, values)
    }
}

/// One-shot `exp(Z)` field on `grid`; see [`GrfSampler`] for repeated draws.
pub fn generate_grf_field<R: Rng + ?Sized>(
    window: StudyWindow,
    grid: Grid,
    cfg: &GrfConfig,
    rng: &mut R,
) -> Result<IntensityField> {
    GrfSampler::new(window, grid, cfg)?.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(cells: usize) -> (StudyWindow, Grid) {
        let w = StudyWindow::from_extent(10.0, 10.0).unwrap();
        let g = Grid::covering(&w, cells).unwrap();
        (w, g)
    }

    #[test]
    fn degenerate_process_is_constant() {
        let (w, g) = setup(8);
        let cfg = GrfConfig::new(0.0, 3.0, 0.0, 0.7).unwrap();
        let f = generate_grf_field(w, g, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(f.values().iter().all(|v| (v - 0.7f64.exp()).abs() < 1e-9));
    }

    #[test]
    fn values_positive_and_seeded() {
        let (w, g) = setup(12);
        let cfg = GrfConfig::new(2.5, 4.0, 0.25, -2.5).unwrap();
        let a = generate_grf_field(w, g, &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let b = generate_grf_field(w, g, &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a, b);
        assert!(a.values().iter().all(|v| *v > 0.0));
    }

    #[test]
    fn log_mean_is_beta() {
        let (w, g) = setup(6);
        let cfg = GrfConfig::new(1.0, 2.0, 0.0, 0.0).unwrap();
        let sampler = GrfSampler::new(w, g, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // Per-field averages are independent across draws.
        let field_means: Vec<f64> = (0..4000).map(|_| mean(&sampler.sample_log(&mut rng))).collect();
        let m = mean(&field_means);
        let sd = crate::stats::variance(&field_means).sqrt();
        assert!(m.abs() <= 3.0 * sd / (field_means.len() as f64).sqrt(), "mean {m}");
    }

    #[test]
    fn correlation_decays_with_distance() {
        let (w, g) = setup(10);
        let cfg = GrfConfig::new(1.0, 5.0, 0.0, 0.0).unwrap();
        let sampler = GrfSampler::new(w, g, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mut near, mut far) = (0.0, 0.0);
        let reps = 3000;
        for _ in 0..reps {
            let z = sampler.sample_log(&mut rng);
            // cells (0,0), (1,0) adjacent; (9,9) far corner
            near += z[0] * z[1];
            far += z[0] * z[99];
        }
        let near = near / reps as f64;
        let far = far / reps as f64;
        let expected_near = cfg.matern(1.0);
        assert!((near - expected_near).abs() < 0.1, "near {near} vs {expected_near}");
        assert!(near > far + 0.3, "near {near} far {far}");
    }

    #[test]
    fn rejects_oversized_grid_and_bad_params() {
        let w = StudyWindow::from_extent(10.0, 10.0).unwrap();
        let g = Grid::covering(&w, 65).unwrap();
        let cfg = GrfConfig::new(1.0, 2.0, 0.0, 0.0).unwrap();
        assert!(matches!(GrfSampler::new(w, g, &cfg), Err(Error::InvalidConfig(_))));
        assert!(GrfConfig::new(-1.0, 2.0, 0.0, 0.0).is_err());
        assert!(GrfConfig::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(GrfConfig::new(1.0, 1.0, -0.1, 0.0).is_err());
        let odd = GrfConfig {
            smoothness: 0.7,
            ..cfg
        };
        assert!(odd.validate().is_err());
    }

    #[test]
    fn matern_closed_forms() {
        let mut cfg = GrfConfig::new(2.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(cfg.matern(0.0), 2.0);
        cfg.smoothness = 0.5;
        assert!((cfg.matern(1.0) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        cfg.smoothness = 2.5;
        let s = 5f64.sqrt();
        assert!((cfg.matern(1.0) - 2.0 * (1.0 + s + 5.0 / 3.0) * (-s).exp()).abs() < 1e-15);
    }
}
