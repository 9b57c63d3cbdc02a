use crate::error::{Error, Result};
use crate::geometry::{Point, StudyWindow};
use crate::point_process::{Grid, IntensityField};

/// Gaussian kernel density of agent positions on a square grid, rescaled so
/// the field's total mass equals the number of agents.
///
/// Agents are binned to cells and the counts are blurred with a separable
/// Gaussian of standard deviation `bandwidth`.
pub fn estimate_density_snapshot(
    positions: &[Point],
    window: &StudyWindow,
    bandwidth: f64,
    cells_long_side: usize,
) -> Result<IntensityField> {
    if positions.is_empty() {
        return Err(Error::InvalidConfig("density snapshot needs at least one agent".into()));
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::InvalidConfig(format!("bandwidth {bandwidth} must be > 0")));
    }
    let grid = Grid::covering(window, cells_long_side)?;
    let template = IntensityField::constant(*window, grid, 0.0)?;
    let (nc, nr) = (grid.n_cols, grid.n_rows);

    let mut counts = vec![0.0; nc * nr];
    for p in positions {
        if let Some((c, r)) = template.cell_of(p) {
            counts[r * nc + c] += 1.0;
        }
    }

    let kernel = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|d| {
                let z = d as f64 * grid.cell_size / bandwidth;
                (-0.5 * z * z).exp()
            })
            .collect()
    };
    let kx = kernel(nc);
    let ky = kernel(nr);

    let mut rows_blurred = vec![0.0; nc * nr];
    for r in 0..nr {
        let src = &counts[r * nc..(r + 1) * nc];
        if src.iter().all(|v| *v == 0.0) {
            continue;
        }
        for c in 0..nc {
            rows_blurred[r * nc + c] = src
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| v * kx[c.abs_diff(j)])
                .sum();
        }
    }
    let mut values = vec![0.0; nc * nr];
    for c in 0..nc {
        for r in 0..nr {
            values[r * nc + c] = (0..nr).map(|i| rows_blurred[i * nc + c] * ky[r.abs_diff(i)]).sum();
        }
    }

    let raw = IntensityField::new(*window, grid, values)?;
    let mass = raw.total_mass();
    let scale = positions.len() as f64 / mass;
    let values = raw.values().iter().map(|v| v * scale).collect();
    IntensityField::new(*window, grid, values)
}
