use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Geofence, Point, Shape, StudyWindow};

/// Sub-centroids per cell side used when a cell straddles a perimeter.
pub const QUADRATURE_SUBDIVISIONS: usize = 4;

/// Square-cell lattice anchored at the window's lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n_cols: usize,
    pub n_rows: usize,
    pub cell_size: f64,
}

impl Grid {
    /// Square cells with `cells_long_side` cells along the window's longer
    /// edge; the shorter edge is rounded up to whole cells.
    pub fn covering(window: &StudyWindow, cells_long_side: usize) -> Result<Self> {
        if cells_long_side == 0 {
            return Err(Error::InvalidConfig("grid needs at least one cell".into()));
        }
        let long = window.width().max(window.height());
        let cell_size = long / cells_long_side as f64;
        let fit = |extent: f64| ((extent / cell_size) - 1e-9).ceil().max(1.0) as usize;
        Ok(Grid {
            n_cols: fit(window.width()),
            n_rows: fit(window.height()),
            cell_size,
        })
    }

    pub fn len(&self) -> usize {
        self.n_cols * self.n_rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Gridded intensity raster `lambda(omega)` in points per unit area.
///
/// Values are stored row-major with row 0 at the top (largest y), matching
/// the ASCII raster layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityField {
    window: StudyWindow,
    grid: Grid,
    values: Vec<f64>,
}

impl IntensityField {
    pub fn new(window: StudyWindow, grid: Grid, values: Vec<f64>) -> Result<Self> {
        if grid.n_cols == 0 || grid.n_rows == 0 {
            return Err(Error::InvalidField("grid must have at least one cell".into()));
        }
        if !(grid.cell_size.is_finite() && grid.cell_size > 0.0) {
            return Err(Error::InvalidField(format!(
                "cell size {} must be > 0",
                grid.cell_size
            )));
        }
        let covers = |cells: usize, extent: f64| {
            let span = cells as f64 * grid.cell_size;
            span + 1e-9 * extent >= extent && span - grid.cell_size < extent
        };
        if !covers(grid.n_cols, window.width()) || !covers(grid.n_rows, window.height()) {
            return Err(Error::InvalidField(format!(
                "{}x{} cells of size {} do not cover a {}x{} window",
                grid.n_cols,
                grid.n_rows,
                grid.cell_size,
                window.width(),
                window.height()
            )));
        }
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidField(format!(
                "intensity {bad} is not finite and non-negative"
            )));
        }
        Ok(IntensityField {
            window,
            grid,
            values,
        })
    }

    /// Field whose window is exactly the grid extent.
    pub fn from_origin(x_min: f64, y_min: f64, grid: Grid, values: Vec<f64>) -> Result<Self> {
        let window = StudyWindow::new(
            x_min,
            y_min,
            x_min + grid.n_cols as f64 * grid.cell_size,
            y_min + grid.n_rows as f64 * grid.cell_size,
        )?;
        Self::new(window, grid, values)
    }

    pub fn constant(window: StudyWindow, grid: Grid, value: f64) -> Result<Self> {
        Self::new(window, grid, vec![value; grid.len()])
    }

    /// Evaluate `f` at every cell centroid.
    pub fn from_fn(window: StudyWindow, grid: Grid, f: impl Fn(Point) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for row in 0..grid.n_rows {
            for col in 0..grid.n_cols {
                values.push(f(centroid_of(&window, &grid, col, row)));
            }
        }
        Self::new(window, grid, values)
    }

    /// Copy extended by `cells` on every side, each new cell taking the value
    /// of the nearest original cell. The window becomes the full grid extent.
    pub fn padded(&self, cells: usize) -> Result<Self> {
        let (nc, nr) = (self.grid.n_cols, self.grid.n_rows);
        let grid = Grid {
            n_cols: nc + 2 * cells,
            n_rows: nr + 2 * cells,
            cell_size: self.grid.cell_size,
        };
        let mut values = Vec::with_capacity(grid.len());
        for row in 0..grid.n_rows {
            let r = row.saturating_sub(cells).min(nr - 1);
            for col in 0..grid.n_cols {
                let c = col.saturating_sub(cells).min(nc - 1);
                values.push(self.value(c, r));
            }
        }
        let pad = cells as f64 * grid.cell_size;
        Self::from_origin(self.window.x_min() - pad, self.window.y_min() - pad, grid, values)
    }

    pub fn window(&self) -> &StudyWindow {
        &self.window
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn n_cols(&self) -> usize {
        self.grid.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.grid.n_rows
    }

    pub fn cell_size(&self) -> f64 {
        self.grid.cell_size
    }

    pub fn cell_area(&self) -> f64 {
        self.grid.cell_size * self.grid.cell_size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.grid.n_cols + col]
    }

    pub fn centroid(&self, col: usize, row: usize) -> Point {
        centroid_of(&self.window, &self.grid, col, row)
    }

    /// Axis-aligned extent of a cell, clipped to the window.
    pub fn cell_bounds(&self, col: usize, row: usize) -> Option<StudyWindow> {
        let cs = self.grid.cell_size;
        let x0 = self.window.x_min() + col as f64 * cs;
        let y1 = self.window.y_min() + (self.grid.n_rows - row) as f64 * cs;
        StudyWindow::new(x0, y1 - cs, x0 + cs, y1)
            .ok()
            .and_then(|cell| cell.intersection(&self.window))
    }

    /// Grid cell containing `q`, if any. Points on the outer edge map to the
    /// adjacent boundary cell.
    pub fn cell_of(&self, q: &Point) -> Option<(usize, usize)> {
        if !self.window.contains(q) {
            return None;
        }
        let cs = self.grid.cell_size;
        let col = ((q.x - self.window.x_min()) / cs).floor() as isize;
        let from_top = ((self.top() - q.y) / cs).floor() as isize;
        let col = col.clamp(0, self.grid.n_cols as isize - 1) as usize;
        let row = from_top.clamp(0, self.grid.n_rows as isize - 1) as usize;
        Some((col, row))
    }

    /// Intensity at `q`; zero outside the window.
    pub fn value_at(&self, q: &Point) -> f64 {
        self.cell_of(q).map_or(0.0, |(c, r)| self.value(c, r))
    }

    /// Lambda(Omega): integral of the intensity over the window.
    pub fn total_mass(&self) -> f64 {
        let mut total = 0.0;
        for row in 0..self.grid.n_rows {
            for col in 0..self.grid.n_cols {
                let v = self.value(col, row);
                if v > 0.0 {
                    if let Some(b) = self.cell_bounds(col, row) {
                        total += v * b.area();
                    }
                }
            }
        }
        total
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    fn top(&self) -> f64 {
        self.window.y_min() + self.grid.n_rows as f64 * self.grid.cell_size
    }

    /// Column/row index ranges of cells overlapping the square
    /// `[c - half, c + half]^2`.
    fn index_range(&self, c: Point, half: f64) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let cs = self.grid.cell_size;
        let clamp = |v: f64, n: usize| -> usize { v.floor().clamp(0.0, n as f64) as usize };
        let c0 = clamp((c.x - half - self.window.x_min()) / cs, self.grid.n_cols);
        let c1 = clamp((c.x + half - self.window.x_min()) / cs + 1.0, self.grid.n_cols);
        let r0 = clamp((self.top() - (c.y + half)) / cs, self.grid.n_rows);
        let r1 = clamp((self.top() - (c.y - half)) / cs + 1.0, self.grid.n_rows);
        (c0..c1, r0..r1)
    }
}

fn centroid_of(window: &StudyWindow, grid: &Grid, col: usize, row: usize) -> Point {
    let cs = grid.cell_size;
    Point::new(
        window.x_min() + (col as f64 + 0.5) * cs,
        window.y_min() + (grid.n_rows as f64 - row as f64 - 0.5) * cs,
    )
}

/// Expected count Lambda(G) = sum_k w_k lambda(s_k).
///
/// Each cell weight is its area times the fraction of its 4x4 sub-centroids
/// that fall inside both the geofence and the window. Cells wholly inside or
/// outside a circle are resolved without sub-sampling; the result is the
/// same as sub-sampling them.
pub fn intensity_measure(field: &IntensityField, g: &Geofence) -> f64 {
    let center = g.center();
    let reach = g.shape().radius();
    let (cols, rows) = field.index_range(center, reach);
    let cs = field.cell_size();
    let cell_area = field.cell_area();
    let circle_radius = match g.shape() {
        Shape::Circle { radius } => Some(*radius),
        _ => None,
    };
    let n_sub = QUADRATURE_SUBDIVISIONS;
    let sub = cs / n_sub as f64;
    let window = field.window();

    let mut total = 0.0;
    for row in rows {
        for col in cols.clone() {
            let v = field.value(col, row);
            if v == 0.0 {
                continue;
            }
            let c = field.centroid(col, row);
            let x0 = c.x - 0.5 * cs;
            let y0 = c.y - 0.5 * cs;
            let inside_window =
                x0 >= window.x_min() && x0 + cs <= window.x_max() && y0 >= window.y_min() && y0 + cs <= window.y_max();

            if let (Some(r), true) = (circle_radius, inside_window) {
                let fx = (center.x - x0).abs().max((center.x - x0 - cs).abs());
                let fy = (center.y - y0).abs().max((center.y - y0 - cs).abs());
                if fx * fx + fy * fy <= r * r {
                    total += v * cell_area;
                    continue;
                }
                let nx = (x0 - center.x).max(0.0).max(center.x - x0 - cs);
                let ny = (y0 - center.y).max(0.0).max(center.y - y0 - cs);
                if nx * nx + ny * ny > r * r {
                    continue;
                }
            }

            let mut hits = 0usize;
            for i in 0..n_sub {
                for j in 0..n_sub {
                    let q = Point::new(x0 + (i as f64 + 0.5) * sub, y0 + (j as f64 + 0.5) * sub);
                    if (inside_window || window.contains(&q)) && g.contains(&q) {
                        hits += 1;
                    }
                }
            }
            if hits > 0 {
                total += v * cell_area * hits as f64 / (n_sub * n_sub) as f64;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square(side: f64, cells: usize) -> (StudyWindow, Grid) {
        let w = StudyWindow::from_extent(side, side).unwrap();
        let g = Grid::covering(&w, cells).unwrap();
        (w, g)
    }

    #[test]
    fn grid_covering_uses_square_cells() {
        let w = StudyWindow::from_extent(30.0, 12.5).unwrap();
        let g = Grid::covering(&w, 64).unwrap();
        assert_eq!(g.n_cols, 64);
        assert_eq!(g.n_rows, 27);
        assert!(IntensityField::constant(w, g, 1.0).is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        let (w, g) = square(2.0, 2);
        assert!(IntensityField::new(w, g, vec![1.0; 3]).is_err());
        assert!(IntensityField::new(w, g, vec![1.0, -1.0, 0.0, 0.0]).is_err());
        assert!(IntensityField::new(w, g, vec![1.0, f64::NAN, 0.0, 0.0]).is_err());
        let short = Grid {
            n_cols: 1,
            n_rows: 2,
            cell_size: 1.0,
        };
        assert!(IntensityField::new(w, short, vec![1.0; 2]).is_err());
    }

    #[test]
    fn layout_is_top_row_first() {
        let grid = Grid {
            n_cols: 2,
            n_rows: 2,
            cell_size: 1.0,
        };
        let f = IntensityField::from_origin(0.0, 0.0, grid, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.value_at(&Point::new(0.5, 1.5)), 1.0);
        assert_eq!(f.value_at(&Point::new(1.5, 1.5)), 2.0);
        assert_eq!(f.value_at(&Point::new(0.5, 0.5)), 3.0);
        assert_eq!(f.value_at(&Point::new(2.0, 0.0)), 4.0);
        assert_eq!(f.value_at(&Point::new(2.1, 0.0)), 0.0);
        assert_eq!(f.centroid(0, 0), Point::new(0.5, 1.5));
        assert!((f.total_mass() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn worked_example_expected_count() {
        let (w, g) = square(20.0, 80);
        let f = IntensityField::constant(w, g, 1.0).unwrap();
        let b = Geofence::circle(Point::new(10.0, 10.0), 3.9894).unwrap();
        assert!((intensity_measure(&f, &b) - 50.0).abs() < 0.5);
    }

    #[test]
    fn zero_field_measures_zero() {
        let (w, g) = square(10.0, 10);
        let f = IntensityField::constant(w, g, 0.0).unwrap();
        let b = Geofence::circle(Point::new(5.0, 5.0), 3.0).unwrap();
        assert_eq!(intensity_measure(&f, &b), 0.0);
        assert_eq!(f.total_mass(), 0.0);
    }

    #[test]
    fn constant_field_matches_area_for_all_shapes() {
        let (w, g) = square(20.0, 200);
        let c = 2.5;
        let f = IntensityField::constant(w, g, c).unwrap();
        let site = Point::new(10.3, 9.7);
        for geofence in [
            Geofence::circle(site, 2.0).unwrap(),
            Geofence::sector(site, 3.0, 1.2, 0.4).unwrap(),
            Geofence::polygon(site, 2.5, 5, 0.1).unwrap(),
        ] {
            let got = intensity_measure(&f, &geofence);
            let want = c * geofence.area();
            assert!((got - want).abs() / want < 0.01, "{:?}: {got} vs {want}", geofence.shape());
        }
    }

    #[test]
    fn clipped_at_window_edge() {
        let (w, g) = square(10.0, 100);
        let f = IntensityField::constant(w, g, 1.0).unwrap();
        let corner = Geofence::circle(Point::new(0.0, 0.0), 2.0).unwrap();
        let quarter = PI * 4.0 / 4.0;
        assert!((intensity_measure(&f, &corner) - quarter).abs() / quarter < 0.01);
    }

    #[test]
    fn additive_over_disjoint_sectors() {
        let (w, g) = square(10.0, 100);
        let f = IntensityField::from_fn(w, g, |p| 0.5 + p.x * 0.3).unwrap();
        let c = Point::new(5.0, 5.0);
        let whole = intensity_measure(&f, &Geofence::circle(c, 3.0).unwrap());
        let a = intensity_measure(&f, &Geofence::sector(c, 3.0, PI, 0.0).unwrap());
        let b = intensity_measure(&f, &Geofence::sector(c, 3.0, PI, PI).unwrap());
        assert!((a + b - whole).abs() / whole < 0.01);
    }

    #[test]
    fn monotone_in_radius() {
        let (w, g) = square(10.0, 40);
        let f = IntensityField::from_fn(w, g, |p| (p.x * p.y).sin().abs()).unwrap();
        let c = Point::new(4.1, 6.3);
        let mut last = 0.0;
        for i in 1..200 {
            let m = intensity_measure(&f, &Geofence::circle(c, i as f64 * 0.05).unwrap());
            assert!(m >= last);
            last = m;
        }
    }

    #[test]
    fn padding_repeats_edge_values() {
        let (w, g) = square(3.0, 3);
        let f = IntensityField::from_fn(w, g, |p| p.x + 10.0 * p.y).unwrap();
        let p = f.padded(2).unwrap();
        assert_eq!((p.n_cols(), p.n_rows()), (7, 7));
        assert_eq!(p.window().x_min(), -2.0);
        for (q, src) in [((-1.5, -1.5), (0.5, 0.5)), ((4.5, 1.5), (2.5, 1.5)), ((1.5, 1.5), (1.5, 1.5))] {
            assert_eq!(p.value_at(&Point::new(q.0, q.1)), f.value_at(&Point::new(src.0, src.1)));
        }
        let c = Geofence::circle(Point::new(1.5, 1.5), 1.0).unwrap();
        assert_eq!(intensity_measure(&p, &c), intensity_measure(&f, &c));
    }
}
