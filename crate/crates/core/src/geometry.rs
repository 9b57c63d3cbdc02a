//! Planar geometry for study windows and geofence perimeters.
//!
//! A [`Geofence`] is a closed region anchored at a focal site: a disc, a
//! circular sector, or a regular polygon given by its circumradius. All
//! shapes are validated on construction, so area and containment never fail.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Axis-aligned rectangular jurisdiction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyWindow {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl StudyWindow {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let all_finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidWindow("non-finite bounds".into()));
        }
        if x_max <= x_min || y_max <= y_min {
            return Err(Error::InvalidWindow(format!(
                "[{x_min}, {x_max}] x [{y_min}, {y_max}] has no area"
            )));
        }
        Ok(StudyWindow {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Window `[0, width] x [0, height]`.
    pub fn from_extent(width: f64, height: f64) -> Result<Self> {
        Self::new(0.0, 0.0, width, height)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn hypotenuse(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Point {
        Point::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn contains(&self, q: &Point) -> bool {
        q.x >= self.x_min && q.x <= self.x_max && q.y >= self.y_min && q.y <= self.y_max
    }

    /// Mirror a point back into the window across whichever edges it crossed.
    pub fn reflect(&self, q: Point) -> Point {
        Point::new(
            reflect_into(q.x, self.x_min, self.x_max),
            reflect_into(q.y, self.y_min, self.y_max),
        )
    }

    /// True when the geofence's bounding disc lies entirely inside the window.
    pub fn encloses(&self, g: &Geofence) -> bool {
        let r = g.shape().radius();
        let c = g.center();
        c.x - r >= self.x_min && c.x + r <= self.x_max && c.y - r >= self.y_min && c.y + r <= self.y_max
    }

    /// Intersection with another rectangle, if it has positive area.
    pub fn intersection(&self, other: &StudyWindow) -> Option<StudyWindow> {
        StudyWindow::new(
            self.x_min.max(other.x_min),
            self.y_min.max(other.y_min),
            self.x_max.min(other.x_max),
            self.y_max.min(other.y_max),
        )
        .ok()
    }
}

fn reflect_into(mut v: f64, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    // A handful of bounces covers any step shorter than a few window widths.
    for _ in 0..8 {
        if v < lo {
            v = 2.0 * lo - v;
        } else if v > hi {
            v = 2.0 * hi - v;
        } else {
            return v;
        }
    }
    lo + (v - lo).rem_euclid(span)
}

pub fn random_point_in_window<R: Rng + ?Sized>(w: &StudyWindow, rng: &mut R) -> Point {
    Point::new(
        w.x_min + rng.random::<f64>() * w.width(),
        w.y_min + rng.random::<f64>() * w.height(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Circle {
        radius: f64,
    },
    /// Sector of angular width `theta`, starting at `orientation` and
    /// sweeping counter-clockwise.
    Sector {
        radius: f64,
        theta: f64,
        orientation: f64,
    },
    /// Regular polygon with circumradius `radius`, first vertex at angle `rotation`.
    RegularPolygon {
        radius: f64,
        sides: usize,
        rotation: f64,
    },
}

impl Shape {
    pub fn radius(&self) -> f64 {
        match *self {
            Shape::Circle { radius }
            | Shape::Sector { radius, .. }
            | Shape::RegularPolygon { radius, .. } => radius,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Circle { radius } => PI * radius * radius,
            Shape::Sector { radius, theta, .. } => {
                if theta == TAU {
                    PI * radius * radius
                } else {
                    0.5 * radius * radius * theta
                }
            }
            Shape::RegularPolygon { radius, sides, .. } => {
                let p = sides as f64;
                0.5 * p * radius * radius * (TAU / p).sin()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Circle { .. } => "circle",
            Shape::Sector { .. } => "sector",
            Shape::RegularPolygon { .. } => "polygon",
        }
    }

    fn validate(&self) -> Result<()> {
        let r = self.radius();
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidRadius(r));
        }
        match *self {
            Shape::Circle { .. } => Ok(()),
            Shape::Sector {
                theta, orientation, ..
            } => {
                validate_theta(theta)?;
                validate_rotation(orientation)
            }
            Shape::RegularPolygon {
                sides, rotation, ..
            } => {
                if sides < 3 {
                    return Err(Error::InvalidPolygon { sides });
                }
                validate_rotation(rotation)
            }
        }
    }
}

pub(crate) fn validate_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 && theta <= TAU {
        Ok(())
    } else {
        Err(Error::InvalidAngle {
            value: theta,
            reason: "central angle must lie in (0, 2*pi]",
        })
    }
}

fn validate_rotation(angle: f64) -> Result<()> {
    if angle.is_finite() && (0.0..TAU).contains(&angle) {
        Ok(())
    } else {
        Err(Error::InvalidAngle {
            value: angle,
            reason: "orientation must lie in [0, 2*pi)",
        })
    }
}

/// A perimeter anchored at a focal site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geofence {
    center: Point,
    shape: Shape,
    /// Counter-clockwise vertex ring, cached for polygons.
    #[serde(skip)]
    vertices: Vec<Point>,
}

impl Geofence {
    pub fn new(center: Point, shape: Shape) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::InvalidConfig(format!("non-finite center {center}")));
        }
        shape.validate()?;
        let vertices = match shape {
            Shape::RegularPolygon {
                radius,
                sides,
                rotation,
            } => polygon_vertices(center, radius, sides, rotation)?,
            _ => Vec::new(),
        };
        Ok(Geofence {
            center,
            shape,
            vertices,
        })
    }

    pub fn circle(center: Point, radius: f64) -> Result<Self> {
        Self::new(center, Shape::Circle { radius })
    }

    pub fn sector(center: Point, radius: f64, theta: f64, orientation: f64) -> Result<Self> {
        Self::new(
            center,
            Shape::Sector {
                radius,
                theta,
                orientation,
            },
        )
    }

    pub fn polygon(center: Point, radius: f64, sides: usize, rotation: f64) -> Result<Self> {
        Self::new(
            center,
            Shape::RegularPolygon {
                radius,
                sides,
                rotation,
            },
        )
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn area(&self) -> f64 {
        self.shape.area()
    }

    /// Polygon vertex ring; empty for circles and sectors.
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Closed-region membership: boundary points count as inside.
    pub fn contains(&self, q: &Point) -> bool {
        let dx = q.x - self.center.x;
        let dy = q.y - self.center.y;
        match self.shape {
            Shape::Circle { radius } => dx * dx + dy * dy <= radius * radius,
            Shape::Sector {
                radius,
                theta,
                orientation,
            } => {
                let d2 = dx * dx + dy * dy;
                if d2 > radius * radius {
                    return false;
                }
                if d2 == 0.0 || theta >= TAU {
                    return true;
                }
                let offset = (dy.atan2(dx) - orientation).rem_euclid(TAU);
                offset <= theta
            }
            Shape::RegularPolygon { radius, .. } => {
                // Cheap reject against the circumcircle before the edge walk.
                if dx * dx + dy * dy > radius * radius {
                    return false;
                }
                let eps = 1e-12 * radius * radius;
                let n = self.vertices.len();
                (0..n).all(|i| {
                    let a = self.vertices[i];
                    let b = self.vertices[(i + 1) % n];
                    (b.x - a.x) * (q.y - a.y) - (b.y - a.y) * (q.x - a.x) >= -eps
                })
            }
        }
    }
}

/// Vertices of a regular `sides`-gon with circumradius `radius` about `center`,
/// counter-clockwise from angle `rotation`. Emits exactly `sides` vertices;
/// ring closure is implicit.
pub fn polygon_vertices(center: Point, radius: f64, sides: usize, rotation: f64) -> Result<Vec<Point>> {
    if sides < 3 {
        return Err(Error::InvalidPolygon { sides });
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidRadius(radius));
    }
    let p = sides as f64;
    Ok((0..sides)
        .map(|i| {
            let angle = TAU * i as f64 / p + rotation;
            Point::new(
                angle.cos() * radius + center.x,
                angle.sin() * radius + center.y,
            )
        })
        .collect())
}

/// Shoelace area of a simple polygon ring (absolute value).
pub fn shoelace_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            a.x * b.y - b.x * a.y
        })
        .sum();
    0.5 * twice.abs()
}
