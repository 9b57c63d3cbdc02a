//! ASCII raster format.
//!
//! ```text
//! ncols nrows xmin ymin cellsize
//! v v v ...   (nrows lines of ncols values, top row first)
//! ```
//!
//! Values are written with the shortest representation that parses back to
//! the same `f64`, so a write/read cycle is lossless.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use super::field::{Grid, IntensityField};
use crate::error::{Error, Result};

pub fn parse_raster(text: &str) -> Result<IntensityField> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or(Error::RasterParse {
        line: 1,
        message: "missing header".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(Error::RasterParse {
            line: hline,
            message: format!("header needs `ncols nrows xmin ymin cellsize`, got {} fields", fields.len()),
        });
    }
    let parse_usize = |s: &str, what: &str| {
        s.parse::<usize>().map_err(|e| Error::RasterParse {
            line: hline,
            message: format!("{what}: {e}"),
        })
    };
    let parse_f64 = |s: &str, what: &str, line: usize| {
        s.parse::<f64>().map_err(|e| Error::RasterParse {
            line,
            message: format!("{what} `{s}`: {e}"),
        })
    };
    let n_cols = parse_usize(fields[0], "ncols")?;
    let n_rows = parse_usize(fields[1], "nrows")?;
    let x_min = parse_f64(fields[2], "xmin", hline)?;
    let y_min = parse_f64(fields[3], "ymin", hline)?;
    let cell_size = parse_f64(fields[4], "cellsize", hline)?;

    let mut values = Vec::with_capacity(n_cols * n_rows);
    let mut rows_read = 0;
    for (line, text) in lines {
        if rows_read == n_rows {
            return Err(Error::RasterParse {
                line,
                message: format!("more than {n_rows} data rows"),
            });
        }
        let before = values.len();
        for tok in text.split_whitespace() {
            values.push(parse_f64(tok, "value", line)?);
        }
        if values.len() - before != n_cols {
            return Err(Error::RasterParse {
                line,
                message: format!("expected {n_cols} values, found {}", values.len() - before),
            });
        }
        rows_read += 1;
    }
    if rows_read != n_rows {
        return Err(Error::RasterParse {
            line: hline,
            message: format!("expected {n_rows} data rows, found {rows_read}"),
        });
    }
    let grid = Grid {
        n_cols,
        n_rows,
        cell_size,
    };
    IntensityField::from_origin(x_min, y_min, grid, values)
}

pub fn format_raster(field: &IntensityField) -> String {
    let w = field.window();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {} {}",
        field.n_cols(),
        field.n_rows(),
        w.x_min(),
        w.y_min(),
        field.cell_size()
    );
    for row in field.values().chunks(field.n_cols()) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_raster(path: &Path) -> Result<IntensityField> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_raster(&text)
}

pub fn write_raster(path: &Path, field: &IntensityField) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(format_raster(field).as_bytes())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_small_grid() {
        let f = parse_raster("2 2 10 20 0.5\n1 2\n3 4\n").unwrap();
        assert_eq!(f.n_cols(), 2);
        assert_eq!(f.window().x_max(), 11.0);
        assert_eq!(f.window().y_max(), 21.0);
        assert_eq!(f.value(1, 0), 2.0);
        assert_eq!(f.value_at(&crate::geometry::Point::new(10.25, 20.25)), 3.0);
    }

    #[test]
    fn malformed_input() {
        assert!(matches!(parse_raster(""), Err(Error::RasterParse { .. })));
        assert!(matches!(parse_raster("2 2 0 0\n"), Err(Error::RasterParse { .. })));
        assert!(matches!(
            parse_raster("2 2 0 0 1\n1 2\n3\n"),
            Err(Error::RasterParse { line: 3, .. })
        ));
        assert!(matches!(parse_raster("2 1 0 0 1\n1 x\n"), Err(Error::RasterParse { .. })));
        assert!(matches!(parse_raster("1 1 0 0 1\n1\n2\n"), Err(Error::RasterParse { .. })));
        assert!(matches!(parse_raster("1 2 0 0 1\n1\n"), Err(Error::RasterParse { .. })));
        assert!(matches!(parse_raster("1 1 0 0 1\n-1\n"), Err(Error::InvalidField(_))));
    }

    proptest! {
        #[test]
        fn write_read_is_lossless(
            vals in proptest::collection::vec(0.0f64..1e6, 12),
            x in -1e3f64..1e3,
            cs in 0.01f64..10.0,
        ) {
            let grid = Grid { n_cols: 4, n_rows: 3, cell_size: cs };
            let f = IntensityField::from_origin(x, -x, grid, vals).unwrap();
            let back = parse_raster(&format_raster(&f)).unwrap();
            prop_assert_eq!(back.values(), f.values());
            prop_assert_eq!(back.grid(), f.grid());
            prop_assert_eq!(back.window().x_min(), f.window().x_min());
        }
    }
}
