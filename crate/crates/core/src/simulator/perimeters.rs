use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SimulationConfig;
use crate::error::Error;
use crate::estimators::{radius_focal, radius_lambda, radius_window, LambdaSearch};
use crate::geometry::Point;
use crate::point_process::IntensityField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerimeterKind {
    Fixed,
    Window,
    Focal,
    FocalFixed,
    Lambda,
    LambdaFixed,
}

impl PerimeterKind {
    pub const ALL: [PerimeterKind; 6] = [
        PerimeterKind::Fixed,
        PerimeterKind::Window,
        PerimeterKind::Focal,
        PerimeterKind::FocalFixed,
        PerimeterKind::Lambda,
        PerimeterKind::LambdaFixed,
    ];
    pub const COUNT: usize = Self::ALL.len();

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PerimeterKind::Fixed => "fixed",
            PerimeterKind::Window => "window",
            PerimeterKind::Focal => "focal",
            PerimeterKind::FocalFixed => "focal_fixed",
            PerimeterKind::Lambda => "lambda",
            PerimeterKind::LambdaFixed => "lambda_fixed",
        }
    }

    /// Recomputed every step.
    pub fn is_adaptive(self) -> bool {
        matches!(self, PerimeterKind::Window | PerimeterKind::Focal | PerimeterKind::Lambda)
    }
}

impl fmt::Display for PerimeterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a perimeter kept its previous radius at some step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaintenanceCounts {
    /// Zero density at the site: previous radius carried forward.
    pub carried_forward: usize,
    /// Zero density at step 0: window-adaptive radius used instead.
    pub window_fallback: usize,
    /// Lambda search could not reach `k`; largest searched radius used.
    pub unreachable: usize,
}

/// The six circular perimeters around one surveillance site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitePerimeters {
    pub site: Point,
    radii: [f64; PerimeterKind::COUNT],
    pub counts: MaintenanceCounts,
}

impl SitePerimeters {
    pub fn radius(&self, kind: PerimeterKind) -> f64 {
        self.radii[kind.index()]
    }

    pub fn radii(&self) -> &[f64; PerimeterKind::COUNT] {
        &self.radii
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerimeterRoster {
    pub sites: Vec<SitePerimeters>,
    initialized: bool,
}

impl PerimeterRoster {
    /// Roster with fixed radii set and adaptive radii pending the first
    /// [`maintain_perimeters`] call.
    pub fn new(sites: &[Point], fixed_radii: &[f64]) -> Self {
        let sites = sites
            .iter()
            .zip(fixed_radii)
            .map(|(&site, &fixed)| {
                let mut radii = [f64::NAN; PerimeterKind::COUNT];
                radii[PerimeterKind::Fixed.index()] = fixed;
                SitePerimeters {
                    site,
                    radii,
                    counts: MaintenanceCounts::default(),
                }
            })
            .collect();
        PerimeterRoster {
            sites,
            initialized: false,
        }
    }

    /// Build from explicit radii (all six per site), already initialised.
    pub fn from_radii(entries: Vec<(Point, [f64; PerimeterKind::COUNT])>) -> Self {
        PerimeterRoster {
            sites: entries
                .into_iter()
                .map(|(site, radii)| SitePerimeters {
                    site,
                    radii,
                    counts: MaintenanceCounts::default(),
                })
                .collect(),
            initialized: true,
        }
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn totals(&self) -> MaintenanceCounts {
        self.sites.iter().fold(MaintenanceCounts::default(), |a, s| MaintenanceCounts {
            carried_forward: a.carried_forward + s.counts.carried_forward,
            window_fallback: a.window_fallback + s.counts.window_fallback,
            unreachable: a.unreachable + s.counts.unreachable,
        })
    }
}

/// Recompute the adaptive perimeters for the current agent positions.
///
/// * window: from the number of agents currently inside the window;
/// * focal: from the snapshot density at the site;
/// * lambda: radius search on the snapshot.
///
/// On the first call the step-0 radii are also frozen into the `*_fixed`
/// variants. Fixed perimeters are never touched. When the site density is
/// zero the previous radius is carried forward (at step 0, where there is
/// none, the window-adaptive radius stands in).
pub fn maintain_perimeters(
    roster: &mut PerimeterRoster,
    positions: &[Point],
    cfg: &SimulationConfig,
    snapshot: &IntensityField,
) {
    let window = &cfg.window;
    let n_inside = positions.iter().filter(|p| window.contains(p)).count();
    let search = LambdaSearch {
        tolerance: cfg.lambda_tolerance,
        ..LambdaSearch::default()
    };
    let window_radius = radius_window(window.area(), n_inside, cfg.k).ok().map(|e| e.radius);
    let first = !roster.initialized;

    roster.sites.par_iter_mut().for_each(|sp| {
        use PerimeterKind::*;
        let previous = |sp: &SitePerimeters, kind: PerimeterKind| {
            let r = sp.radius(kind);
            (!r.is_nan()).then_some(r)
        };

        if let Some(r) = window_radius {
            sp.radii[Window.index()] = r;
        }

        let focal = radius_focal(snapshot.value_at(&sp.site), cfg.k).ok().map(|e| e.radius);
        let focal = match (focal, previous(sp, Focal)) {
            (Some(r), _) => Some(r),
            (None, Some(prev)) => {
                sp.counts.carried_forward += 1;
                Some(prev)
            }
            (None, None) => {
                sp.counts.window_fallback += 1;
                window_radius
            }
        };
        if let Some(r) = focal {
            sp.radii[Focal.index()] = r;
        }

        let lambda = match radius_lambda(snapshot, sp.site, cfg.k, &search) {
            Ok(est) => Some(est.radius),
            Err(Error::ConstraintUnreachable { best_radius, .. }) => {
                sp.counts.unreachable += 1;
                Some(best_radius)
            }
            Err(_) => match previous(sp, Lambda) {
                Some(prev) => {
                    sp.counts.carried_forward += 1;
                    Some(prev)
                }
                None => {
                    sp.counts.window_fallback += 1;
                    window_radius
                }
            },
        };
        if let Some(r) = lambda {
            sp.radii[Lambda.index()] = r;
        }

        if first {
            sp.radii[FocalFixed.index()] = sp.radii[Focal.index()];
            sp.radii[LambdaFixed.index()] = sp.radii[Lambda.index()];
        }
    });
    roster.initialized = true;
}
