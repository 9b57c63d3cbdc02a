//! Plug-in estimators: the perimeter size that captures `k` individuals in
//! expectation, given progressively richer density information.
//!
//! | estimator | density information        | shape            |
//! |-----------|----------------------------|------------------|
//! | window    | population `n` over `nu(Omega)` | circle      |
//! | focal     | `lambda(a_i)` at the site  | circle           |
//! | sector    | `lambda(a_i)`, angle theta | circular sector  |
//! | polygon   | `lambda(a_i)`, sides p     | regular polygon  |
//! | lambda    | full intensity raster      | circle (searched)|

use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{validate_theta, Geofence, Point};
use crate::point_process::{intensity_measure, IntensityField};

/// Expected number of captured individuals; real-valued.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrivacyConstraint(f64);

impl PrivacyConstraint {
    pub fn new(k: f64) -> Result<Self> {
        if k.is_finite() && k > 0.0 {
            Ok(PrivacyConstraint(k))
        } else {
            Err(Error::InvalidConstraint(k))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Default acceptance band `max(0.01 k, 0.05)` for the lambda search.
    pub fn default_tolerance(self) -> f64 {
        (0.01 * self.0).max(0.05)
    }
}

impl fmt::Display for PrivacyConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Window,
    Focal,
    Sector,
    PolygonCircumradius,
    Lambda,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Window => "window",
            EstimatorKind::Focal => "focal",
            EstimatorKind::Sector => "sector",
            EstimatorKind::PolygonCircumradius => "polygon-circumradius",
            EstimatorKind::Lambda => "lambda",
        }
    }
}

/// Outcome of the lambda-adaptive radius search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchDiagnostics {
    /// Focal-adaptive seed radius.
    pub seed_radius: f64,
    /// Lambda(B(site, r)) at the returned radius.
    pub expected_count: f64,
    /// `(expected_count - k)^2`.
    pub objective: f64,
    pub iterations: usize,
    pub tolerance: f64,
    pub within_tolerance: bool,
    pub used_grid_scan: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub radius: f64,
    pub estimator: EstimatorKind,
    pub diagnostics: Option<SearchDiagnostics>,
}

impl RadiusEstimate {
    fn closed_form(radius: f64, estimator: EstimatorKind) -> Self {
        RadiusEstimate {
            radius,
            estimator,
            diagnostics: None,
        }
    }
}

/// Binomial model: `r = sqrt(nu(Omega) k / (n pi))`, so the disc covers the
/// fraction `k/n` of the window.
pub fn radius_window(window_area: f64, n: usize, k: PrivacyConstraint) -> Result<RadiusEstimate> {
    if n == 0 {
        return Err(Error::UndefinedDensity);
    }
    if !(window_area.is_finite() && window_area > 0.0) {
        return Err(Error::InvalidWindow(format!("area {window_area} must be > 0")));
    }
    if k.get() > n as f64 {
        log::warn!("privacy constraint k = {k} exceeds population n = {n}; the disc outgrows the window");
    }
    let r = (window_area * k.get() / (n as f64 * PI)).sqrt();
    Ok(RadiusEstimate::closed_form(r, EstimatorKind::Window))
}

fn check_density(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateDensity(lambda))
    }
}

/// Homogeneous Poisson model: `r = sqrt(k / (pi lambda))`.
pub fn radius_focal(lambda_at_site: f64, k: PrivacyConstraint) -> Result<RadiusEstimate> {
    check_density(lambda_at_site)?;
    let r = (k.get() / (PI * lambda_at_site)).sqrt();
    Ok(RadiusEstimate::closed_form(r, EstimatorKind::Focal))
}

/// Sector of central angle `theta`: `r = sqrt(2k / (lambda theta))`.
pub fn radius_sector(lambda_at_site: f64, k: PrivacyConstraint, theta: f64) -> Result<RadiusEstimate> {
    check_density(lambda_at_site)?;
    validate_theta(theta)?;
    if theta == TAU {
        // Same expression as the focal radius, bit for bit.
        let r = radius_focal(lambda_at_site, k)?.radius;
        return Ok(RadiusEstimate::closed_form(r, EstimatorKind::Sector));
    }
    let r = (2.0 * k.get() / (lambda_at_site * theta)).sqrt();
    Ok(RadiusEstimate::closed_form(r, EstimatorKind::Sector))
}

/// Regular `sides`-gon; returns the circumradius
/// `sqrt(2k / (lambda p sin(2 pi / p)))`.
pub fn radius_polygon(lambda_at_site: f64, k: PrivacyConstraint, sides: usize) -> Result<RadiusEstimate> {
    check_density(lambda_at_site)?;
    if sides < 3 {
        return Err(Error::InvalidPolygon { sides });
    }
    let p = sides as f64;
    let r = (2.0 * k.get() / (lambda_at_site * p * (TAU / p).sin())).sqrt();
    Ok(RadiusEstimate::closed_form(r, EstimatorKind::PolygonCircumradius))
}

pub fn polygon_apothem(circumradius: f64, sides: usize) -> Result<f64> {
    check_polygon(circumradius, sides)?;
    Ok(circumradius * (PI / sides as f64).cos())
}

pub fn polygon_side(circumradius: f64, sides: usize) -> Result<f64> {
    check_polygon(circumradius, sides)?;
    Ok(2.0 * (PI / sides as f64).sin() * circumradius)
}

fn check_polygon(r: f64, sides: usize) -> Result<()> {
    if sides < 3 {
        return Err(Error::InvalidPolygon { sides });
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidRadius(r));
    }
    Ok(())
}

/// Search settings for [`radius_lambda`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSearch {
    /// Accepted `|Lambda(B) - k|`; `None` uses `max(0.01 k, 0.05)`.
    pub tolerance: Option<f64>,
    /// Upper end of the search interval as a multiple of the focal seed.
    pub max_seed_multiple: f64,
    /// Bisection stops once the bracket is narrower than this fraction of the seed.
    pub relative_precision: f64,
    pub max_iterations: usize,
    /// Radii evaluated by the fallback scan.
    pub scan_points: usize,
}

impl Default for LambdaSearch {
    fn default() -> Self {
        LambdaSearch {
            tolerance: None,
            max_seed_multiple: 3.0,
            relative_precision: 1e-6,
            max_iterations: 64,
            scan_points: 256,
        }
    }
}

/// Lambda-adaptive radius: the circle about `site` whose expected count under
/// `field` is closest to `k`.
///
/// Seeds with the focal radius `r0` from the raster value at the site, then
/// searches `(0, 3 r0]`. `Lambda(B(site, r))` is non-decreasing in `r`, so the
/// root of `Lambda - k` is bracketed and bisected; when the bisection result
/// misses the tolerance (a jump in the piecewise-constant quadrature), a
/// uniform scan of the interval is tried as well and the better radius kept.
pub fn radius_lambda(
    field: &IntensityField,
    site: Point,
    k: PrivacyConstraint,
    search: &LambdaSearch,
) -> Result<RadiusEstimate> {
    let lambda_site = field.value_at(&site);
    let seed = radius_focal(lambda_site, k)?.radius;
    let target = k.get();
    let tolerance = search.tolerance.unwrap_or_else(|| k.default_tolerance());
    let measure = |r: f64| -> f64 {
        match Geofence::circle(site, r) {
            Ok(g) => intensity_measure(field, &g),
            Err(_) => 0.0,
        }
    };

    let upper = search.max_seed_multiple * seed;
    let at_upper = measure(upper);
    let mut iterations = 1;
    let mut used_grid_scan = false;

    let (radius, count) = if at_upper < target {
        if target - at_upper > tolerance {
            return Err(Error::ConstraintUnreachable {
                k: target,
                best_radius: upper,
                best_count: at_upper,
            });
        }
        (upper, at_upper)
    } else {
        // Invariant: measure(lo) < target <= measure(hi).
        let (mut lo, mut lo_count) = (0.0, 0.0);
        let (mut hi, mut hi_count) = (upper, at_upper);
        while iterations < search.max_iterations && hi - lo > search.relative_precision * seed {
            let mid = 0.5 * (lo + hi);
            let m = measure(mid);
            iterations += 1;
            if m < target {
                lo = mid;
                lo_count = m;
            } else {
                hi = mid;
                hi_count = m;
            }
        }
        let mut best = if lo > 0.0 && (target - lo_count) < (hi_count - target) {
            (lo, lo_count)
        } else {
            (hi, hi_count)
        };
        if (best.1 - target).abs() > tolerance && search.scan_points > 0 {
            used_grid_scan = true;
            for i in 1..=search.scan_points {
                let r = upper * i as f64 / search.scan_points as f64;
                let m = measure(r);
                iterations += 1;
                if (m - target).abs() < (best.1 - target).abs() {
                    best = (r, m);
                }
            }
        }
        best
    };

    let objective = (count - target).powi(2);
    Ok(RadiusEstimate {
        radius,
        estimator: EstimatorKind::Lambda,
        diagnostics: Some(SearchDiagnostics {
            seed_radius: seed,
            expected_count: count,
            objective,
            iterations,
            tolerance,
            within_tolerance: (count - target).abs() <= tolerance,
            used_grid_scan,
        }),
    })
}

/// Fisher information and asymptotic covariance of the focal Poisson MLE
/// over `(lambda, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalMleDiagnostics {
    pub information: [[f64; 2]; 2],
    /// `(1/n) * information^{-1}`, a true matrix inverse.
    pub asymptotic_covariance: [[f64; 2]; 2],
    /// `(1/n)` times the entry-by-entry reciprocal form
    /// `[[lambda, 1/(2 pi n r)], [1/(2 pi n r), 1/(2 n lambda pi) + r^2/(2 lambda)]]`.
    /// This is not an inverse of `information`; kept for comparison only.
    pub termwise_reciprocal: [[f64; 2]; 2],
}

pub fn focal_mle_diagnostics(lambda: f64, r: f64, n: usize) -> Result<FocalMleDiagnostics> {
    check_density(lambda)?;
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidRadius(r));
    }
    if n == 0 {
        return Err(Error::UndefinedDensity);
    }
    let nf = n as f64;
    let off = TAU * nf * r;
    let info = Matrix2::new(1.0 / lambda, off, off, 2.0 * nf * lambda * PI + 2.0 * lambda / (r * r));

    let det = info.determinant();
    let scale = info.abs().max().powi(2);
    if det.abs() <= 1e-14 * scale {
        return Err(Error::SingularMatrix(det));
    }
    let inv = info.try_inverse().ok_or(Error::SingularMatrix(det))?;
    let cov = inv / nf;

    let to_array = |m: &Matrix2<f64>| [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]];
    let termwise = Matrix2::new(
        lambda,
        1.0 / off,
        1.0 / off,
        1.0 / (2.0 * nf * lambda * PI) + r * r / (2.0 * lambda),
    ) / nf;
    Ok(FocalMleDiagnostics {
        information: to_array(&info),
        asymptotic_covariance: to_array(&cov),
        termwise_reciprocal: to_array(&termwise),
    })
}
