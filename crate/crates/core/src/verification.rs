//! Monte-Carlo checks of the point-process identities behind the estimators.
//!
//! Each check reports one [`VerificationResult`]. Multi-part checks fold
//! their parts into a single normalized statistic (worst deviation divided
//! by its own tolerance, tolerance 1) and list the raw parts in `details`.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{radius_focal, radius_window, PrivacyConstraint};
use crate::geometry::{random_point_in_window, Geofence, Point, StudyWindow};
use crate::point_process::{poisson_count, sample_binomial, sample_poisson_homogeneous};
use crate::stats::{mean, skewness, standard_error, variance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub check_name: String,
    /// Parameter setting within the check, e.g. `n=100`.
    pub case: String,
    pub statistic: f64,
    pub expected: f64,
    pub tolerance: f64,
    /// `|statistic - expected| <= tolerance`, or a skipped check.
    pub passed: bool,
    pub replications: usize,
    pub skipped: bool,
    pub flags: Vec<String>,
    pub details: BTreeMap<String, f64>,
}

impl VerificationResult {
    fn new(check: &str, case: String, statistic: f64, expected: f64, tolerance: f64, replications: usize) -> Self {
        VerificationResult {
            check_name: check.to_string(),
            case,
            statistic,
            expected,
            tolerance,
            passed: (statistic - expected).abs() <= tolerance,
            replications,
            skipped: false,
            flags: Vec::new(),
            details: BTreeMap::new(),
        }
    }

    fn detail(mut self, key: impl Into<String>, value: f64) -> Self {
        self.details.insert(key.into(), value);
        self
    }
}

impl fmt::Display for VerificationResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match (self.skipped, self.passed) {
            (true, _) => "SKIP",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        write!(
            f,
            "{status} {} [{}] statistic={:.6} expected={:.6} tolerance={:.6} reps={}",
            self.check_name, self.case, self.statistic, self.expected, self.tolerance, self.replications
        )?;
        if !self.flags.is_empty() {
            write!(f, " flags={}", self.flags.join(","))?;
        }
        Ok(())
    }
}

/// Area of the part of `circle` inside `window`.
fn clipped_circle_area(window: &StudyWindow, circle: &Geofence) -> f64 {
    let c = circle.center();
    let r = circle.shape().radius();
    let x0 = (c.x - r).max(window.x_min());
    let x1 = (c.x + r).min(window.x_max());
    if x1 <= x0 {
        return 0.0;
    }
    let steps = 20_000;
    let dx = (x1 - x0) / steps as f64;
    (0..steps)
        .map(|i| {
            let x = x0 + (i as f64 + 0.5) * dx;
            let h = (r * r - (x - c.x).powi(2)).max(0.0).sqrt();
            ((c.y + h).min(window.y_max()) - (c.y - h).max(window.y_min())).max(0.0)
        })
        .sum::<f64>()
        * dx
}

fn count_inside(points: &[Point], g: &Geofence) -> f64 {
    points.iter().filter(|p| g.contains(p)).count() as f64
}

/// Poisson process restricted to the bounding box of `g` within `window`;
/// counts in `g` match those of the full-window process.
fn captured_poisson<R: Rng + ?Sized>(window: &StudyWindow, lambda: f64, g: &Geofence, rng: &mut R) -> f64 {
    let c = g.center();
    let r = g.shape().radius();
    let Ok(bbox) = StudyWindow::new(c.x - r, c.y - r, c.x + r, c.y + r) else {
        return 0.0;
    };
    match bbox.intersection(window) {
        Some(b) => count_inside(&sample_poisson_homogeneous(&b, lambda, rng).points, g),
        None => 0.0,
    }
}

/// Dispersion of captured counts: a thinned Poisson process is Poisson, so
/// variance/mean = 1.
pub fn check_thinning_poisson<R: Rng + ?Sized>(
    lambda: f64,
    window: &StudyWindow,
    geofence: &Geofence,
    reps: usize,
    rng: &mut R,
) -> Result<VerificationResult> {
    const NAME: &str = "check_thinning_poisson";
    let case = format!("lambda={lambda},area={:.6}", geofence.area());
    if lambda == 0.0 {
        let mut r = VerificationResult::new(NAME, case, f64::NAN, 1.0, 0.05, 0);
        r.passed = true;
        r.skipped = true;
        r.flags.push("degenerate_zero_intensity".into());
        return Ok(r);
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::DegenerateDensity(lambda));
    }
    if !window.encloses(geofence) {
        return Err(Error::InvalidConfig("geofence must lie inside the window".into()));
    }
    let mu = lambda * geofence.area();
    if mu < 20.0 * (1.0 - 1e-9) {
        return Err(Error::InvalidConfig(format!("expected count {mu} is below 20")));
    }
    if reps < 2 {
        return Err(Error::InvalidConfig("need at least 2 replications".into()));
    }
    let counts: Vec<f64> = (0..reps)
        .map(|_| count_inside(&sample_poisson_homogeneous(window, lambda, rng).points, geofence))
        .collect();
    let m = mean(&counts);
    Ok(VerificationResult::new(NAME, case, variance(&counts) / m, 1.0, 0.05, reps)
        .detail("mean", m)
        .detail("mean_se", standard_error(&counts))
        .detail("expected_mean", mu))
}

/// Focal-adaptive circles capture `k` in expectation whatever the intensity.
/// Statistic: the largest of the per-intensity z-scores `|mean - k| / SE`
/// and the pairwise z-scores between intensities.
pub fn check_privacy_only<R: Rng + ?Sized>(
    k: PrivacyConstraint,
    lambdas: &[f64],
    window: &StudyWindow,
    site: Point,
    reps: usize,
    rng: &mut R,
) -> Result<VerificationResult> {
    const NAME: &str = "check_privacy_only";
    if lambdas.is_empty() || reps < 2 {
        return Err(Error::InvalidConfig("need at least one intensity and 2 replications".into()));
    }
    let mut stats = Vec::with_capacity(lambdas.len());
    let mut flags = Vec::new();
    for &lambda in lambdas {
        let g = Geofence::circle(site, radius_focal(lambda, k)?.radius)?;
        if !window.encloses(&g) {
            flags.push(format!("overhang_lambda={lambda}"));
        }
        let counts: Vec<f64> = (0..reps).map(|_| captured_poisson(window, lambda, &g, rng)).collect();
        stats.push((lambda, mean(&counts), standard_error(&counts)));
    }
    let kv = k.get();
    let mut worst: f64 = 0.0;
    let mut result_details = Vec::new();
    for &(lambda, m, se) in &stats {
        worst = worst.max((m - kv).abs() / se);
        result_details.push((format!("mean_lambda={lambda}"), m));
        result_details.push((format!("se_lambda={lambda}"), se));
    }
    let mut pairwise: f64 = 0.0;
    for (i, a) in stats.iter().enumerate() {
        for b in &stats[i + 1..] {
            pairwise = pairwise.max((a.1 - b.1).abs() / (a.2 * a.2 + b.2 * b.2).sqrt());
        }
    }
    let case = format!(
        "k={kv},lambda={}",
        lambdas.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("/")
    );
    let mut r = VerificationResult::new(NAME, case, worst.max(pairwise), 0.0, 3.0, reps).detail("max_pairwise_z", pairwise);
    for (key, v) in result_details {
        r = r.detail(key, v);
    }
    r.flags = flags;
    Ok(r)
}

/// Standardized Poisson counts `Z = (X - mu) / sqrt(mu)` approach N(0, 1):
/// `|mean| <= 9 / sqrt(reps)`, variance within 0.05 of 1, skewness within
/// 0.05 of `1 / sqrt(mu)`, and skewness decreasing in `mu`.
pub fn check_normality<R: Rng + ?Sized>(mu_values: &[f64], reps: usize, rng: &mut R) -> Result<VerificationResult> {
    const NAME: &str = "check_normality";
    if mu_values.is_empty() || reps < 3 {
        return Err(Error::InvalidConfig("need at least one mean and 3 replications".into()));
    }
    if let Some(bad) = mu_values.iter().find(|m| !(m.is_finite() && **m >= 50.0)) {
        return Err(Error::InvalidConfig(format!("mean {bad} is below 50")));
    }
    let mean_tol = 9.0 / (reps as f64).sqrt();
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    let mut skews = Vec::new();
    for &mu in mu_values {
        let sd = mu.sqrt();
        let z: Vec<f64> = (0..reps).map(|_| (poisson_count(mu, rng) as f64 - mu) / sd).collect();
        let (m, v, s) = (mean(&z), variance(&z), skewness(&z));
        worst = worst
            .max(m.abs() / mean_tol)
            .max((v - 1.0).abs() / 0.05)
            .max((s - 1.0 / sd).abs() / 0.05);
        details.push((format!("mean_mu={mu}"), m));
        details.push((format!("variance_mu={mu}"), v));
        details.push((format!("skewness_mu={mu}"), s));
        skews.push((mu, s));
    }
    skews.sort_by(|a, b| a.0.total_cmp(&b.0));
    let decreasing = skews.windows(2).all(|w| w[1].1 < w[0].1);
    let case = format!("mu={}", mu_values.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("/"));
    let mut r = VerificationResult::new(NAME, case, worst, 0.0, 1.0, reps);
    if !decreasing {
        r.flags.push("skewness_not_decreasing".into());
        r.passed = false;
    }
    for (key, v) in details {
        r = r.detail(key, v);
    }
    Ok(r)
}

/// Binomial patterns of `n` points; mean captured count inside the
/// window-adaptive circle at `site` is `k`, or the clipped share of `k` when
/// the circle overhangs (flagged). Statistic: `|mean - expected| / SE`.
pub fn check_window_estimator<R: Rng + ?Sized>(
    window: &StudyWindow,
    site: Point,
    n: usize,
    k: PrivacyConstraint,
    reps: usize,
    rng: &mut R,
) -> Result<VerificationResult> {
    const NAME: &str = "check_window_estimator";
    if k.get() > n as f64 {
        return Err(Error::InvalidConfig(format!("k = {} exceeds n = {n}", k.get())));
    }
    if reps < 2 {
        return Err(Error::InvalidConfig("need at least 2 replications".into()));
    }
    let g = Geofence::circle(site, radius_window(window.area(), n, k)?.radius)?;
    let overhang = !window.encloses(&g);
    let expected = if overhang {
        k.get() * clipped_circle_area(window, &g) / g.area()
    } else {
        k.get()
    };
    let counts: Vec<f64> = (0..reps)
        .map(|_| count_inside(&sample_binomial(window, n, rng).points, &g))
        .collect();
    let (m, se) = (mean(&counts), standard_error(&counts));
    let mut r = VerificationResult::new(NAME, format!("n={n},k={}", k.get()), (m - expected).abs() / se, 0.0, 3.0, reps)
        .detail("mean", m)
        .detail("se", se)
        .detail("expected_mean", expected)
        .detail("radius", g.shape().radius());
    if overhang {
        r.flags.push("overhang".into());
    }
    Ok(r)
}

/// Agents re-drawn uniformly at every step spend a fraction `k / n` of their
/// steps inside the window-adaptive circle at the window centre (the clipped
/// share when it overhangs). Statistic: `|mean fraction - expected| / SE`
/// over agents of all rounds.
pub fn check_surveillance_baseline<R: Rng + ?Sized>(
    window: &StudyWindow,
    n: usize,
    k: PrivacyConstraint,
    steps: usize,
    rounds: usize,
    rng: &mut R,
) -> Result<VerificationResult> {
    const NAME: &str = "check_surveillance_baseline";
    if k.get() > n as f64 {
        return Err(Error::InvalidConfig(format!("k = {} exceeds n = {n}", k.get())));
    }
    if steps == 0 || rounds == 0 || n * rounds < 2 {
        return Err(Error::InvalidConfig("need steps >= 1 and at least 2 agents overall".into()));
    }
    let g = Geofence::circle(window.center(), radius_window(window.area(), n, k)?.radius)?;
    let overhang = !window.encloses(&g);
    let expected = k.get() / n as f64 * if overhang { clipped_circle_area(window, &g) / g.area() } else { 1.0 };
    let mut fractions = Vec::with_capacity(n * rounds);
    for _ in 0..rounds {
        let mut inside = vec![0usize; n];
        for _ in 0..steps {
            for slot in inside.iter_mut() {
                if g.contains(&random_point_in_window(window, rng)) {
                    *slot += 1;
                }
            }
        }
        fractions.extend(inside.iter().map(|&c| c as f64 / steps as f64));
    }
    let (m, se) = (mean(&fractions), standard_error(&fractions));
    let statistic = if se > 0.0 {
        (m - expected).abs() / se
    } else if m == expected {
        0.0
    } else {
        f64::INFINITY
    };
    let mut r = VerificationResult::new(NAME, format!("n={n},k={}", k.get()), statistic, 0.0, 3.0, rounds * n * steps)
        .detail("mean_fraction", m)
        .detail("se", se)
        .detail("expected_fraction", expected);
    if overhang {
        r.flags.push("overhang".into());
    }
    Ok(r)
}

/// Names accepted by [`run_suite`].
pub const CHECK_NAMES: [&str; 5] = [
    "check_thinning_poisson",
    "check_privacy_only",
    "check_normality",
    "check_window_estimator",
    "check_surveillance_baseline",
];

struct Case {
    check: &'static str,
    run: fn(usize, &mut ChaCha8Rng) -> Result<VerificationResult>,
}

fn k_of(k: f64) -> PrivacyConstraint {
    PrivacyConstraint::new(k).expect("positive constant")
}

fn square(side: f64) -> StudyWindow {
    StudyWindow::from_extent(side, side).expect("positive constant")
}

fn window_case(n: usize, reps: usize, rng: &mut ChaCha8Rng) -> Result<VerificationResult> {
    let w = square(100.0);
    check_window_estimator(&w, w.center(), n, k_of(50.0), reps, rng)
}

fn baseline_case(n: usize, k: f64, reps: usize, rng: &mut ChaCha8Rng) -> Result<VerificationResult> {
    check_surveillance_baseline(&square(100.0), n, k_of(k), 500, reps.div_ceil(1000), rng)
}

const CASES: [Case; 9] = [
    Case {
        check: "check_thinning_poisson",
        run: |reps, rng| {
            let w = square(10.0);
            let g = Geofence::circle(w.center(), (4.0 / std::f64::consts::PI).sqrt())?;
            check_thinning_poisson(5.0, &w, &g, reps, rng)
        },
    },
    Case {
        check: "check_privacy_only",
        run: |reps, rng| check_privacy_only(k_of(50.0), &[1.0, 5.0, 10.0], &square(10.0), Point::new(5.0, 5.0), reps, rng),
    },
    Case {
        check: "check_privacy_only",
        run: |reps, rng| check_privacy_only(k_of(1.0), &[1.0, 5.0, 10.0], &square(10.0), Point::new(5.0, 5.0), reps, rng),
    },
    Case {
        check: "check_normality",
        run: |reps, rng| check_normality(&[100.0, 10_000.0], reps, rng),
    },
    Case {
        check: "check_window_estimator",
        run: |reps, rng| window_case(100, reps, rng),
    },
    Case {
        check: "check_window_estimator",
        run: |reps, rng| window_case(500, reps, rng),
    },
    Case {
        check: "check_window_estimator",
        run: |reps, rng| window_case(1000, reps, rng),
    },
    Case {
        check: "check_surveillance_baseline",
        run: |reps, rng| baseline_case(100, 50.0, reps, rng),
    },
    Case {
        check: "check_surveillance_baseline",
        run: |reps, rng| baseline_case(100, 1.0, reps, rng),
    },
];

/// Parse a suite selector: `all` or one of [`CHECK_NAMES`].
pub fn parse_suite(name: &str) -> Result<Option<&'static str>> {
    if name == "all" {
        return Ok(None);
    }
    CHECK_NAMES
        .iter()
        .find(|n| **n == name)
        .map(|n| Some(*n))
        .ok_or_else(|| Error::InvalidConfig(format!("unknown suite '{name}' (expected all or one of {})", CHECK_NAMES.join(", "))))
}

/// Run the selected checks in parallel. Every case draws from its own
/// stream of the `seed`, fixed by its position in the catalogue, so a
/// filtered run reproduces the statistics of the full one.
pub fn run_suite(suite: &str, reps: usize, seed: u64) -> Result<Vec<VerificationResult>> {
    let only = parse_suite(suite)?;
    if reps == 0 {
        return Err(Error::InvalidConfig("reps must be >= 1".into()));
    }
    CASES
        .par_iter()
        .enumerate()
        .filter(|(_, c)| only.is_none_or(|n| n == c.check))
        .map(|(i, c)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            (c.run)(reps, &mut rng)
        })
        .collect()
}

pub fn all_passed(results: &[VerificationResult]) -> bool {
    results.iter().all(|r| r.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn thinning_dispersion_and_linearity() {
        let w = square(10.0);
        let small = Geofence::circle(w.center(), (4.0 / std::f64::consts::PI).sqrt()).unwrap();
        let big = Geofence::circle(w.center(), (8.0 / std::f64::consts::PI).sqrt()).unwrap();
        let a = check_thinning_poisson(5.0, &w, &small, 20_000, &mut rng(1)).unwrap();
        assert!(a.passed, "{a}");
        let b = check_thinning_poisson(5.0, &w, &big, 20_000, &mut rng(2)).unwrap();
        let (ma, mb) = (a.details["mean"], b.details["mean"]);
        let se = (4.0 * a.details["mean_se"].powi(2) + b.details["mean_se"].powi(2)).sqrt();
        assert!((mb - 2.0 * ma).abs() <= 3.0 * se);
    }

    #[test]
    fn zero_intensity_is_skipped() {
        let w = square(10.0);
        let g = Geofence::circle(w.center(), 1.0).unwrap();
        let r = check_thinning_poisson(0.0, &w, &g, 10, &mut rng(1)).unwrap();
        assert!(r.skipped && r.passed);
        assert_eq!(r.flags, vec!["degenerate_zero_intensity".to_string()]);
    }

    #[test]
    fn privacy_only_small_k_and_single_lambda() {
        let w = square(10.0);
        let r = check_privacy_only(k_of(1.0), &[1.0, 5.0, 10.0], &w, w.center(), 20_000, &mut rng(3)).unwrap();
        assert!(r.passed, "{r}");
        let single = check_privacy_only(k_of(50.0), &[5.0], &w, w.center(), 2_000, &mut rng(4)).unwrap();
        assert_eq!(single.details["max_pairwise_z"], 0.0);
    }

    #[test]
    fn normality_skewness_matches_poisson() {
        let r = check_normality(&[100.0, 10_000.0], 20_000, &mut rng(5)).unwrap();
        assert!(r.passed, "{r} {:?}", r.details);
        assert!((r.details["skewness_mu=100"] - 0.1).abs() < 0.05);
        assert!(check_normality(&[10.0], 100, &mut rng(5)).is_err());
    }

    #[test]
    fn window_estimator_flags_overhang() {
        let w = square(100.0);
        let r = check_window_estimator(&w, w.center(), 100, k_of(100.0), 500, &mut rng(6)).unwrap();
        assert_eq!(r.flags, vec!["overhang".to_string()]);
        assert!(r.details["expected_mean"] < 100.0);
        assert!(r.passed, "{r}");
        let fits = check_window_estimator(&w, w.center(), 100, k_of(50.0), 5_000, &mut rng(7)).unwrap();
        assert!(fits.flags.is_empty() && fits.passed, "{fits}");
    }

    #[test]
    fn baseline_fractions() {
        let w = square(100.0);
        let r = check_surveillance_baseline(&w, 100, k_of(1.0), 500, 2, &mut rng(8)).unwrap();
        assert!(r.passed, "{r}");
        let full = check_surveillance_baseline(&w, 100, k_of(100.0), 200, 1, &mut rng(9)).unwrap();
        assert!(full.flags.contains(&"overhang".to_string()));
        assert!(full.details["mean_fraction"] > 0.9, "{full}");
    }

    #[test]
    fn clipped_area_of_centered_window_filling_circle() {
        let w = square(1.0);
        let g = Geofence::circle(w.center(), 1.0 / std::f64::consts::PI.sqrt()).unwrap();
        // Four caps of height r - 1/2 removed from the disc.
        let r: f64 = 1.0 / std::f64::consts::PI.sqrt();
        let h = r - 0.5;
        let cap = r * r * ((r - h) / r).acos() - (r - h) * (2.0 * r * h - h * h).sqrt();
        let exact = std::f64::consts::PI * r * r - 4.0 * cap;
        assert!((clipped_circle_area(&w, &g) - exact).abs() < 1e-6);
    }

    #[test]
    fn suite_filtering_and_determinism() {
        assert!(parse_suite("nope").is_err());
        let all = run_suite("all", 2_000, 11).unwrap();
        assert_eq!(all.len(), CASES.len());
        let only = run_suite("check_normality", 2_000, 11).unwrap();
        assert_eq!(only.len(), 1);
        let from_all = all.iter().find(|r| r.check_name == "check_normality").unwrap();
        assert_eq!(&only[0], from_all);
        assert_eq!(run_suite("check_window_estimator", 500, 3).unwrap(), run_suite("check_window_estimator", 500, 3).unwrap());
    }
}
