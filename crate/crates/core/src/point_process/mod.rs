//! Point patterns on a study window: Binomial, homogeneous and
//! inhomogeneous Poisson sampling, gridded intensity fields, and
//! exponentiated Gaussian random field intensities.

mod field;
mod grf;
pub mod raster;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::geometry::{random_point_in_window, Geofence, Point, StudyWindow};

pub use field::{intensity_measure, Grid, IntensityField, QUADRATURE_SUBDIVISIONS};
pub use grf::{generate_grf_field, GrfConfig, GrfSampler, MAX_GRF_CELLS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPattern {
    pub points: Vec<Point>,
    pub window: StudyWindow,
}

impl PointPattern {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Draw from Poisson(mean), treating a zero mean as the point mass at 0.
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map_or(0, |d| d.sample(rng) as usize)
}

/// Exactly `n` i.i.d. uniform points.
pub fn sample_binomial<R: Rng + ?Sized>(window: &StudyWindow, n: usize, rng: &mut R) -> PointPattern {
    let points = (0..n).map(|_| random_point_in_window(window, rng)).collect();
    PointPattern {
        points,
        window: *window,
    }
}

/// Stationary Poisson process: Poisson(lambda * area) points, uniform given the count.
pub fn sample_poisson_homogeneous<R: Rng + ?Sized>(
    window: &StudyWindow,
    lambda: f64,
    rng: &mut R,
) -> PointPattern {
    let n = poisson_count(lambda * window.area(), rng);
    sample_binomial(window, n, rng)
}

/// Piecewise-constant inhomogeneous Poisson process: each cell (clipped to
/// the window) independently receives Poisson(value * area) uniform points.
pub fn sample_poisson_inhomogeneous<R: Rng + ?Sized>(field: &IntensityField, rng: &mut R) -> PointPattern {
    let mut points = Vec::new();
    for row in 0..field.n_rows() {
        for col in 0..field.n_cols() {
            let v = field.value(col, row);
            if v <= 0.0 {
                continue;
            }
            let Some(cell) = field.cell_bounds(col, row) else {
                continue;
            };
            let n = poisson_count(v * cell.area(), rng);
            points.extend((0..n).map(|_| random_point_in_window(&cell, rng)));
        }
    }
    PointPattern {
        points,
        window: *field.window(),
    }
}

/// eta(G): number of pattern points inside the geofence.
pub fn count_points(pattern: &PointPattern, g: &Geofence) -> usize {
    pattern.points.iter().filter(|p| g.contains(p)).count()
}
