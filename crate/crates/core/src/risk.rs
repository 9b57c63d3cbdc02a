//! Selective-expansion risk: how likely is a proposed perimeter to capture
//! no more than `k` individuals, compared with perimeters drawn at random
//! sites using the optimal radii of the density map?

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{radius_lambda, LambdaSearch, PrivacyConstraint};
use crate::geometry::{random_point_in_window, Geofence, Point, StudyWindow};
use crate::point_process::{intensity_measure, poisson_count, IntensityField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentroidStatus {
    Resolved,
    /// No density at the centroid; no perimeter can be sized.
    ZeroDensity,
    /// The search interval never reaches `k`.
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiiEntry {
    pub centroid: Point,
    pub lambda: f64,
    pub status: CentroidStatus,
    pub optimal_radius: Option<f64>,
    /// `Lambda(B(centroid, optimal_radius))` on the map extended past its
    /// border with its edge values.
    pub expected_count: Option<f64>,
    /// `expected_count / (pi r^2)`: the density on the optimal frontier.
    pub frontier_density: Option<f64>,
    pub within_tolerance: bool,
}

/// Optimal lambda-adaptive radius at each centroid of a square grid laid
/// over the density map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiiMap {
    pub k: PrivacyConstraint,
    pub grid_step: f64,
    pub tolerance: f64,
    pub entries: Vec<RadiiEntry>,
}

impl RadiiMap {
    pub fn resolved(&self) -> impl Iterator<Item = &RadiiEntry> {
        self.entries.iter().filter(|e| e.status == CentroidStatus::Resolved)
    }

    pub fn optimal_radii(&self) -> Vec<f64> {
        self.resolved().filter_map(|e| e.optimal_radius).collect()
    }

    pub fn count(&self, status: CentroidStatus) -> usize {
        self.entries.iter().filter(|e| e.status == status).count()
    }
}

/// Centroids of a square grid of spacing `step` over `window`; cells on the
/// far edges are clipped to the window and use the clipped midpoint.
pub fn grid_centroids(window: &StudyWindow, step: f64) -> Result<Vec<Point>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidConfig(format!("grid step {step} must be > 0")));
    }
    let axis = |lo: f64, hi: f64| -> Vec<f64> {
        let n = ((hi - lo) / step).ceil().max(1.0) as usize;
        (0..n)
            .map(|i| {
                let a = lo + i as f64 * step;
                let b = (a + step).min(hi);
                0.5 * (a + b)
            })
            .collect()
    };
    let xs = axis(window.x_min(), window.x_max());
    let ys = axis(window.y_min(), window.y_max());
    Ok(ys.iter().flat_map(|&y| xs.iter().map(move |&x| Point::new(x, y))).collect())
}

/// [`build_radii_map_with`] using a search tolerance of `0.01 k`.
pub fn build_radii_map(field: &IntensityField, grid_step: f64, k: PrivacyConstraint) -> Result<RadiiMap> {
    let search = LambdaSearch {
        tolerance: Some(0.01 * k.get()),
        ..LambdaSearch::default()
    };
    build_radii_map_with(field, grid_step, k, &search)
}

/// The field padded with its edge values far enough that no search circle
/// around a centroid leaves it (capped at the raster's own size), so edge
/// centroids are sized as if the map continued past its border.
fn edge_extended(field: &IntensityField, k: PrivacyConstraint, search: &LambdaSearch) -> Result<IntensityField> {
    let min_positive = field.values().iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let reach = search.max_seed_multiple * (k.get() / (PI * min_positive)).sqrt();
    let cap = field.n_cols().max(field.n_rows());
    let cells = ((reach / field.cell_size()).ceil() as usize).saturating_add(1).min(cap);
    field.padded(cells)
}

/// Radii map using `search`. Optimal radii are searched on the edge-extended
/// map; see [`RadiiEntry::expected_count`].
pub fn build_radii_map_with(
    field: &IntensityField,
    grid_step: f64,
    k: PrivacyConstraint,
    search: &LambdaSearch,
) -> Result<RadiiMap> {
    if field.max_value() <= 0.0 {
        return Err(Error::EmptyMap);
    }
    let tolerance = search.tolerance.unwrap_or_else(|| k.default_tolerance());
    let centroids = grid_centroids(field.window(), grid_step)?;
    let sizing = edge_extended(field, k, search)?;
    let entries: Vec<RadiiEntry> = centroids
        .into_par_iter()
        .map(|c| {
            let lambda = field.value_at(&c);
            let mut entry = RadiiEntry {
                centroid: c,
                lambda,
                status: CentroidStatus::ZeroDensity,
                optimal_radius: None,
                expected_count: None,
                frontier_density: None,
                within_tolerance: false,
            };
            if lambda <= 0.0 {
                return entry;
            }
            match radius_lambda(&sizing, c, k, search) {
                Ok(est) => {
                    let r = est.radius;
                    let count = est.diagnostics.map_or_else(
                        || Geofence::circle(c, r).map_or(0.0, |g| intensity_measure(&sizing, &g)),
                        |d| d.expected_count,
                    );
                    entry.status = CentroidStatus::Resolved;
                    entry.optimal_radius = Some(r);
                    entry.expected_count = Some(count);
                    entry.frontier_density = Some(count / (PI * r * r));
                    entry.within_tolerance = (count - k.get()).abs() <= tolerance;
                }
                Err(Error::ConstraintUnreachable { .. }) => entry.status = CentroidStatus::Unreachable,
                Err(_) => {}
            }
            entry
        })
        .collect();
    let map = RadiiMap {
        k,
        grid_step,
        tolerance,
        entries,
    };
    if map.resolved().next().is_none() {
        return Err(Error::EmptyMap);
    }
    Ok(map)
}

/// Where null radii come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NullRadii {
    /// Uniform over the map's resolved optimal radii.
    OptimalRadii,
    /// Continuous uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullCounts {
    /// `k_hat = Lambda(B)`.
    Expected,
    /// `k_hat ~ Poisson(Lambda(B))`.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullOptions {
    pub radii: NullRadii,
    pub counts: NullCounts,
}

impl Default for NullOptions {
    fn default() -> Self {
        NullOptions {
            radii: NullRadii::OptimalRadii,
            counts: NullCounts::Expected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullSample {
    pub site: Point,
    pub radius: f64,
    pub k_hat: f64,
    /// `k_hat / (pi r^2)`.
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullDistribution {
    pub options: NullOptions,
    pub samples: Vec<NullSample>,
}

/// Random circles: sites uniform over the field's window, radii per `options`.
///
/// Sites and radii are drawn sequentially, the expected counts are computed
/// in parallel, and in sampled mode the Poisson draws follow in order, so the
/// result depends only on the rng state.
pub fn sample_null_distribution<R: Rng + ?Sized>(
    field: &IntensityField,
    map: &RadiiMap,
    n_samples: usize,
    options: NullOptions,
    rng: &mut R,
) -> Result<NullDistribution> {
    if n_samples == 0 {
        return Err(Error::InvalidConfig("null distribution needs at least one sample".into()));
    }
    let pool = map.optimal_radii();
    if pool.is_empty() {
        return Err(Error::EmptyMap);
    }
    if let NullRadii::Uniform { lo, hi } = options.radii {
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
            return Err(Error::InvalidConfig(format!("null radius range [{lo}, {hi}] is invalid")));
        }
    }
    let window = field.window();
    let draws: Vec<(Point, f64)> = (0..n_samples)
        .map(|_| {
            let site = random_point_in_window(window, rng);
            let radius = match options.radii {
                NullRadii::OptimalRadii => pool[rng.random_range(0..pool.len())],
                NullRadii::Uniform { lo, hi } if hi > lo => rng.random_range(lo..=hi),
                NullRadii::Uniform { lo, .. } => lo,
            };
            (site, radius)
        })
        .collect();
    let expected: Vec<f64> = draws
        .par_iter()
        .map(|&(site, r)| Geofence::circle(site, r).map(|g| intensity_measure(field, &g)))
        .collect::<Result<_>>()?;
    let samples = draws
        .into_iter()
        .zip(expected)
        .map(|((site, radius), mu)| {
            let k_hat = match options.counts {
                NullCounts::Expected => mu,
                NullCounts::Sampled => poisson_count(mu, rng) as f64,
            };
            NullSample {
                site,
                radius,
                k_hat,
                density: k_hat / (PI * radius * radius),
            }
        })
        .collect();
    Ok(NullDistribution { options, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandResult {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
    /// `None` when no null radius falls in the band.
    pub probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalAssessment {
    pub center: Point,
    pub shape: String,
    pub radius: f64,
    pub k_hat: f64,
    pub density: f64,
    /// Fraction of null `k_hat` strictly below the proposal's.
    pub percentile: f64,
    pub captures_at_most_k: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub k: f64,
    /// Slack on the `k_hat <= k` comparison.
    pub threshold_tolerance: f64,
    pub n_samples: usize,
    pub capture_probability: f64,
    pub band: Option<BandResult>,
    pub proposal: Option<ProposalAssessment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScoreOptions {
    pub band: Option<(f64, f64)>,
    /// Counts within `k + threshold_tolerance` are treated as capturing at
    /// most `k`.
    pub threshold_tolerance: f64,
}

fn captures(k_hat: f64, k: f64, tol: f64) -> bool {
    k_hat <= k + tol
}

pub fn score_risk(
    nd: &NullDistribution,
    k: PrivacyConstraint,
    options: ScoreOptions,
    proposal: Option<&Geofence>,
    field: &IntensityField,
) -> Result<RiskReport> {
    let n = nd.samples.len();
    if n == 0 {
        return Err(Error::InvalidConfig("empty null distribution".into()));
    }
    let kv = k.get();
    let tol = options.threshold_tolerance;
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidConfig(format!("threshold tolerance {tol} must be >= 0")));
    }
    let hits = nd.samples.iter().filter(|s| captures(s.k_hat, kv, tol)).count();

    let band = match options.band {
        Some((lo, hi)) => {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(format!("band [{lo}, {hi}] is invalid")));
            }
            let in_band: Vec<&NullSample> = nd.samples.iter().filter(|s| s.radius >= lo && s.radius <= hi).collect();
            let probability = (!in_band.is_empty()).then(|| {
                in_band.iter().filter(|s| captures(s.k_hat, kv, tol)).count() as f64 / in_band.len() as f64
            });
            Some(BandResult {
                lo,
                hi,
                samples: in_band.len(),
                probability,
            })
        }
        None => None,
    };

    let proposal = proposal.map(|g| {
        let k_hat = intensity_measure(field, g);
        let below = nd.samples.iter().filter(|s| s.k_hat < k_hat).count();
        ProposalAssessment {
            center: g.center(),
            shape: g.shape().name().to_string(),
            radius: g.shape().radius(),
            k_hat,
            density: k_hat / g.area(),
            percentile: below as f64 / n as f64,
            captures_at_most_k: captures(k_hat, kv, tol),
        }
    });

    Ok(RiskReport {
        k: kv,
        threshold_tolerance: tol,
        n_samples: n,
        capture_probability: hits as f64 / n as f64,
        band,
        proposal,
    })
}

#[derive(Serialize)]
struct ScatterRow {
    radius: f64,
    k_hat: f64,
    density: f64,
}

/// `radius,k_hat,density` rows, one per null sample.
pub fn write_scatter_csv<W: Write>(nd: &NullDistribution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in &nd.samples {
        w.serialize(ScatterRow {
            radius: s.radius,
            k_hat: s.k_hat,
            density: s.density,
        })?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_scatter_csv_file(nd: &NullDistribution, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_scatter_csv(nd, std::io::BufWriter::new(file))
}
