use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::perimeters::PerimeterKind;
use super::round::RoundResult;
use crate::error::{Error, Result};

/// One row of the per-round table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub round_id: usize,
    pub seed: u64,
    pub site_x: f64,
    pub site_y: f64,
    pub perimeter_type: PerimeterKind,
    pub k: f64,
    pub n: usize,
    pub mean_abs_dev: f64,
    pub mean_surveillance_fraction: f64,
    pub expected_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRow {
    pub round_id: usize,
    pub agent_id: usize,
    pub site_index: usize,
    pub perimeter_type: PerimeterKind,
    pub steps_inside: u32,
    pub total_steps: usize,
    pub surveillance_fraction: f64,
}

/// Means over all (round, site) rows of one perimeter type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerimeterSummary {
    pub perimeter_type: PerimeterKind,
    pub rows: usize,
    pub mean_abs_dev: f64,
    /// Mean of `|mean_surveillance_fraction - expected_fraction|`.
    pub mean_fraction_error: f64,
}

pub fn round_rows(results: &[RoundResult]) -> Vec<RoundRow> {
    let mut rows = Vec::new();
    for r in results {
        let m = &r.metrics;
        for (s, site) in r.config.sites.iter().enumerate() {
            for kind in PerimeterKind::ALL {
                rows.push(RoundRow {
                    round_id: r.round_id,
                    seed: r.config.seed,
                    site_x: site.x,
                    site_y: site.y,
                    perimeter_type: kind,
                    k: m.k,
                    n: m.n_agents,
                    mean_abs_dev: m.mean_abs_dev(s, kind),
                    mean_surveillance_fraction: m.mean_surveillance_fraction(s, kind),
                    expected_fraction: m.expected_fraction(),
                });
            }
        }
    }
    rows
}

pub fn agent_rows(results: &[RoundResult]) -> Vec<AgentRow> {
    let mut rows = Vec::new();
    for r in results {
        let m = &r.metrics;
        for s in 0..m.n_sites {
            for kind in PerimeterKind::ALL {
                for a in 0..m.n_agents {
                    rows.push(AgentRow {
                        round_id: r.round_id,
                        agent_id: a,
                        site_index: s,
                        perimeter_type: kind,
                        steps_inside: m.steps_inside(s, kind, a),
                        total_steps: m.n_tags,
                        surveillance_fraction: m.surveillance_fraction(s, kind, a),
                    });
                }
            }
        }
    }
    rows
}

pub fn summarize(rows: &[RoundRow]) -> Vec<PerimeterSummary> {
    PerimeterKind::ALL
        .iter()
        .map(|&kind| {
            let sel: Vec<&RoundRow> = rows.iter().filter(|r| r.perimeter_type == kind).collect();
            let count = sel.len();
            let avg = |f: &dyn Fn(&RoundRow) -> f64| {
                if count == 0 {
                    f64::NAN
                } else {
                    sel.iter().map(|r| f(r)).sum::<f64>() / count as f64
                }
            };
            PerimeterSummary {
                perimeter_type: kind,
                rows: count,
                mean_abs_dev: avg(&|r| r.mean_abs_dev),
                mean_fraction_error: avg(&|r| (r.mean_surveillance_fraction - r.expected_fraction).abs()),
            }
        })
        .collect()
}

/// Serialize rows as CSV with a header.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_csv_file<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(rows, std::io::BufWriter::new(file))
}
