//! Convex domains, quasi-uniform point generation and fill/separation
//! metrics.
//!
//! The boundary is handled through a single periodic chart: normalized
//! arclength `t ∈ [0, 1)`. Boundary fill and separation distances are
//! measured along that chart and rescaled to physical length.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::Point;
use crate::spatial::SpatialBins;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    UnitDisk,
    /// Centered at the origin with semi-axes `a` (along x) and `b` (along y).
    Ellipse {
        a: f64,
        b: f64,
    },
    /// `[0, 1]²`.
    UnitSquare,
}

// 5-point Gauss-Legendre on [-1, 1].
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];
const ELLIPSE_PANELS: usize = 256;
/// Points of curved boundaries are computed through `cos`/`sin`, so the
/// interior test leaves a rounding margin that keeps them outside.
const BOUNDARY_EPS: f64 = 1e-12;

impl Domain {
    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0 && b > 0.0 && b <= 1.0) {
            return Err(Error::Domain(format!(
                "ellipse semi-axes must lie in (0, 1], got ({a}, {b})"
            )));
        }
        Ok(Domain::Ellipse { a, b })
    }

    pub fn name(&self) -> String {
        match self {
            Domain::UnitDisk => "unit_disk".into(),
            Domain::Ellipse { a, b } => format!("ellipse({a}, {b})"),
            Domain::UnitSquare => "unit_square".into(),
        }
    }

    /// Whether the boundary is smooth and uniformly convex.
    pub fn has_smooth_boundary(&self) -> bool {
        !matches!(self, Domain::UnitSquare)
    }

    /// Number of boundary charts. Always one periodic arclength chart.
    pub fn chart_count(&self) -> usize {
        1
    }

    /// Strict interior membership.
    pub fn inside(&self, p: &Point) -> bool {
        match *self {
            Domain::UnitDisk => p.x * p.x + p.y * p.y < 1.0 - BOUNDARY_EPS,
            Domain::Ellipse { a, b } => (p.x / a).powi(2) + (p.y / b).powi(2) < 1.0 - BOUNDARY_EPS,
            Domain::UnitSquare => p.x > 0.0 && p.x < 1.0 && p.y > 0.0 && p.y < 1.0,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Domain::UnitDisk => PI,
            Domain::Ellipse { a, b } => PI * a * b,
            Domain::UnitSquare => 1.0,
        }
    }

    pub fn perimeter(&self) -> f64 {
        match *self {
            Domain::UnitDisk => 2.0 * PI,
            Domain::Ellipse { a, b } => ellipse_arc(a, b, 2.0 * PI),
            Domain::UnitSquare => 4.0,
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        match *self {
            Domain::UnitDisk => (Point::new(-1.0, -1.0), Point::new(1.0, 1.0)),
            Domain::Ellipse { a, b } => (Point::new(-a, -b), Point::new(a, b)),
            Domain::UnitSquare => (Point::new(0.0, 0.0), Point::new(1.0, 1.0)),
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::UnitDisk => 2.0,
            Domain::Ellipse { a, b } => 2.0 * a.max(b),
            Domain::UnitSquare => 2f64.sqrt(),
        }
    }

    /// Boundary point at normalized arclength `t` (taken modulo 1),
    /// counterclockwise. Disk and ellipse start at `(a, 0)`, the square at
    /// the origin.
    pub fn boundary_param(&self, t: f64) -> Point {
        let t = t.rem_euclid(1.0);
        match *self {
            Domain::UnitDisk => {
                let th = 2.0 * PI * t;
                Point::new(th.cos(), th.sin())
            }
            Domain::Ellipse { a, b } => {
                let th = ellipse_angle_at_arc(a, b, t * self.perimeter());
                Point::new(a * th.cos(), b * th.sin())
            }
            Domain::UnitSquare => {
                let s = 4.0 * t;
                let side = (s.floor() as usize).min(3);
                let u = s - side as f64;
                match side {
                    0 => Point::new(u, 0.0),
                    1 => Point::new(1.0, u),
                    2 => Point::new(1.0 - u, 1.0),
                    _ => Point::new(0.0, 1.0 - u),
                }
            }
        }
    }

    /// Chart coordinate of a point on the boundary (inverse of
    /// [`Domain::boundary_param`]).
    pub fn boundary_coordinate(&self, p: &Point) -> f64 {
        let t = match *self {
            Domain::UnitDisk => p.y.atan2(p.x).rem_euclid(2.0 * PI) / (2.0 * PI),
            Domain::Ellipse { a, b } => {
                let th = (p.y / b).atan2(p.x / a).rem_euclid(2.0 * PI);
                ellipse_arc(a, b, th) / self.perimeter()
            }
            Domain::UnitSquare => {
                let (x, y) = (p.x.clamp(0.0, 1.0), p.y.clamp(0.0, 1.0));
                let dist = [y, 1.0 - x, 1.0 - y, x];
                let side = (0..4)
                    .min_by(|&i, &j| dist[i].total_cmp(&dist[j]))
                    .unwrap_or(0);
                let u = match side {
                    0 => x,
                    1 => y,
                    2 => 1.0 - x,
                    _ => 1.0 - y,
                };
                (side as f64 + u) / 4.0
            }
        };
        t.rem_euclid(1.0)
    }

    /// Euclidean distance from `p` to the boundary curve.
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        match *self {
            Domain::UnitDisk => (1.0 - p.coords.norm()).abs(),
            Domain::UnitSquare => {
                if self.inside(p) {
                    p.x.min(1.0 - p.x).min(p.y).min(1.0 - p.y)
                } else {
                    let dx = (-p.x).max(p.x - 1.0).max(0.0);
                    let dy = (-p.y).max(p.y - 1.0).max(0.0);
                    (dx * dx + dy * dy).sqrt()
                }
            }
            Domain::Ellipse { a, b } => ellipse_distance(a, b, p),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

fn ellipse_speed(a: f64, b: f64, th: f64) -> f64 {
    (a * a * th.sin().powi(2) + b * b * th.cos().powi(2)).sqrt()
}

/// Arclength of the ellipse from angle 0 to `th` (`th` in `[0, 2π]`).
fn ellipse_arc(a: f64, b: f64, th: f64) -> f64 {
    let panel = 2.0 * PI / ELLIPSE_PANELS as f64;
    let full = (th / panel).floor() as usize;
    let gl = |lo: f64, hi: f64| {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        GL5.iter()
            .map(|&(x, w)| w * ellipse_speed(a, b, mid + half * x))
            .sum::<f64>()
            * half
    };
    let mut s = 0.0;
    for k in 0..full.min(ELLIPSE_PANELS) {
        s += gl(k as f64 * panel, (k + 1) as f64 * panel);
    }
    let start = full as f64 * panel;
    if th > start {
        s += gl(start, th);
    }
    s
}

fn ellipse_angle_at_arc(a: f64, b: f64, s: f64) -> f64 {
    let total = ellipse_arc(a, b, 2.0 * PI);
    let mut th = 2.0 * PI * s / total;
    for _ in 0..50 {
        let step = (ellipse_arc(a, b, th) - s) / ellipse_speed(a, b, th);
        th = (th - step).clamp(0.0, 2.0 * PI);
        if step.abs() < 1e-15 {
            break;
        }
    }
    th
}

fn ellipse_distance(a: f64, b: f64, p: &Point) -> f64 {
    const SAMPLES: usize = 720;
    let dist2 = |th: f64| (p.x - a * th.cos()).powi(2) + (p.y - b * th.sin()).powi(2);
    let mut th = (0..SAMPLES)
        .map(|k| 2.0 * PI * k as f64 / SAMPLES as f64)
        .min_by(|x, y| dist2(*x).total_cmp(&dist2(*y)))
        .unwrap_or(0.0);
    // Newton on the derivative of the squared distance
    for _ in 0..30 {
        let (s, c) = th.sin_cos();
        let d1 = 2.0 * ((a * c - p.x) * (-a * s) + (b * s - p.y) * (b * c));
        let d2 = 2.0
            * (a * a * s * s + b * b * c * c + (a * c - p.x) * (-a * c) + (b * s - p.y) * (-b * s));
        if d2 <= 0.0 {
            break;
        }
        let step = d1 / d2;
        th -= step;
        if step.abs() < 1e-14 {
            break;
        }
    }
    dist2(th).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Trial,
    Test,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Trial => "trial",
            Role::Test => "test",
        }
    }
}

/// Interior and boundary points of one discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub interior: Vec<Point>,
    pub boundary: Vec<Point>,
    pub role: Role,
}

impl PointSet {
    pub fn new(interior: Vec<Point>, boundary: Vec<Point>, role: Role) -> Self {
        PointSet {
            interior,
            boundary,
            role,
        }
    }

    pub fn len(&self) -> usize {
        self.interior.len() + self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Interior points followed by boundary points.
    pub fn all(&self) -> impl Iterator<Item = &Point> + '_ {
        self.interior.iter().chain(self.boundary.iter())
    }

    pub fn to_vec(&self) -> Vec<Point> {
        self.all().copied().collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "role,x,y,on_boundary")?;
        let role = self.role.as_str();
        for p in &self.interior {
            writeln!(w, "{role},{},{},false", p.x, p.y)?;
        }
        for p in &self.boundary {
            writeln!(w, "{role},{},{},true", p.x, p.y)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> io::Result<Self> {
        let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
        let mut lines = r.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "role,x,y,on_boundary" => {}
            _ => return Err(bad("missing header role,x,y,on_boundary".into())),
        }
        let mut set = PointSet::new(Vec::new(), Vec::new(), Role::Trial);
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(bad(format!("line {}: expected 4 fields", lineno + 2)));
            }
            set.role = match fields[0] {
                "trial" => Role::Trial,
                "test" => Role::Test,
                other => return Err(bad(format!("line {}: unknown role {other}", lineno + 2))),
            };
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| bad(format!("line {}: {e}", lineno + 2)))
            };
            let p = Point::new(num(fields[1])?, num(fields[2])?);
            match fields[3] {
                "true" => set.boundary.push(p),
                "false" => set.interior.push(p),
                other => return Err(bad(format!("line {}: bad on_boundary {other}", lineno + 2))),
            }
        }
        Ok(set)
    }
}

/// Grid interior points plus arclength-equispaced boundary points.
///
/// Interior points lie on an axis-aligned grid of spacing `target_h`
/// centred on the bounding box, keeping only those at least `target_h / 4`
/// from the boundary. A nonzero `seed` shifts the grid phase by up to
/// `target_h / 4` per axis.
pub fn generate_points(domain: &Domain, target_h: f64, role: Role, seed: u64) -> Result<PointSet> {
    if !(target_h > 0.0 && target_h.is_finite()) {
        return Err(Error::Domain(format!(
            "target spacing must be positive, got {target_h}"
        )));
    }
    let phase = if seed == 0 {
        (0.0, 0.0)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = target_h / 4.0;
        (rng.random_range(-q..q), rng.random_range(-q..q))
    };
    let (lo, hi) = domain.bounding_box();
    let centre = nalgebra::center(&lo, &hi);
    let half_x = ((hi.x - lo.x) / (2.0 * target_h)).ceil() as i64 + 1;
    let half_y = ((hi.y - lo.y) / (2.0 * target_h)).ceil() as i64 + 1;
    let clearance = target_h / 4.0;

    let mut interior = Vec::new();
    for j in -half_y..half_y {
        for i in -half_x..half_x {
            let p = Point::new(
                centre.x + (i as f64 + 0.5) * target_h + phase.0,
                centre.y + (j as f64 + 0.5) * target_h + phase.1,
            );
            if domain.inside(&p) && domain.boundary_distance(&p) >= clearance {
                interior.push(p);
            }
        }
    }
    if interior.is_empty() {
        return Err(Error::DegenerateDiscretization(format!(
            "no interior points for spacing {target_h} on {domain}"
        )));
    }

    let n_boundary = ((domain.perimeter() / target_h).ceil() as usize).max(3);
    let boundary = (0..n_boundary)
        .map(|k| domain.boundary_param(k as f64 / n_boundary as f64))
        .collect();
    Ok(PointSet::new(interior, boundary, role))
}

/// Cell centres of a `resolution × resolution` grid over the bounding box
/// that fall strictly inside the domain.
pub fn probe_grid(domain: &Domain, resolution: usize) -> Vec<Point> {
    let (lo, hi) = domain.bounding_box();
    let dx = (hi.x - lo.x) / resolution as f64;
    let dy = (hi.y - lo.y) / resolution as f64;
    let mut out = Vec::new();
    for j in 0..resolution {
        for i in 0..resolution {
            let p = Point::new(lo.x + (i as f64 + 0.5) * dx, lo.y + (j as f64 + 0.5) * dy);
            if domain.inside(&p) {
                out.push(p);
            }
        }
    }
    out
}

/// `h_I`: the largest distance from a probe point in the domain to the
/// nearest interior point of `pts`.
pub fn fill_distance_interior(
    domain: &Domain,
    pts: &PointSet,
    probe_resolution: usize,
) -> Result<f64> {
    fill_distance(domain, &pts.interior, probe_resolution)
}

pub fn fill_distance(domain: &Domain, sites: &[Point], probe_resolution: usize) -> Result<f64> {
    if sites.is_empty() {
        return Err(Error::EmptySet("fill distance needs at least one site"));
    }
    if probe_resolution == 0 {
        return Err(Error::Domain("probe resolution must be positive".into()));
    }
    let probes = probe_grid(domain, probe_resolution);
    let spacing = (domain.area() / sites.len() as f64).sqrt().max(1e-6);
    let bins = SpatialBins::new(sites, spacing);
    Ok(probes
        .par_iter()
        .map(|p| bins.nearest(sites, p).map_or(0.0, |(_, d)| d))
        .reduce(|| 0.0, f64::max))
}

/// Half the minimum pairwise Euclidean distance.
pub fn separation(points: &[Point]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::EmptySet("separation needs at least two points"));
    }
    let min = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            points[i + 1..]
                .iter()
                .map(|q| (p - q).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(0.5 * min)
}

/// Arclength gaps between consecutive boundary points, wrapping around.
fn arclength_gaps(domain: &Domain, boundary: &[Point]) -> Result<Vec<f64>> {
    if boundary.is_empty() {
        return Err(Error::EmptySet(
            "boundary fill distance needs at least one point",
        ));
    }
    let mut ts: Vec<f64> = boundary
        .iter()
        .map(|p| domain.boundary_coordinate(p))
        .collect();
    ts.sort_by(f64::total_cmp);
    let perimeter = domain.perimeter();
    let mut gaps: Vec<f64> = ts.windows(2).map(|w| (w[1] - w[0]) * perimeter).collect();
    gaps.push((1.0 - ts[ts.len() - 1] + ts[0]) * perimeter);
    Ok(gaps)
}

/// `h_B`: half the largest arclength gap between consecutive boundary points.
pub fn boundary_fill_distance(domain: &Domain, boundary: &[Point]) -> Result<f64> {
    let gaps = arclength_gaps(domain, boundary)?;
    Ok(0.5 * gaps.into_iter().fold(0.0, f64::max))
}

/// `q_B`: half the smallest arclength gap between consecutive boundary points.
pub fn boundary_separation(domain: &Domain, boundary: &[Point]) -> Result<f64> {
    let gaps = arclength_gaps(domain, boundary)?;
    Ok(0.5 * gaps.into_iter().fold(f64::INFINITY, f64::min))
}

/// Fill and separation distances of one point set.
///
/// For trial sets the fields read `h_I, h_B, q_I, q_B`; for test sets the
/// fill distances are `s_I, s_B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshMetrics {
    pub role: Role,
    pub fill_interior: f64,
    pub fill_boundary: f64,
    pub separation_interior: f64,
    pub separation_boundary: f64,
}

impl MeshMetrics {
    /// `h_Y` (trial) or `s_X` (test).
    pub fn fill(&self) -> f64 {
        self.fill_interior.max(self.fill_boundary)
    }

    /// `q_Y`.
    pub fn separation(&self) -> f64 {
        self.separation_interior.min(self.separation_boundary)
    }

    pub fn mesh_ratio(&self) -> f64 {
        self.fill() / self.separation()
    }

    /// `(name, value)` pairs with role-appropriate names.
    pub fn labelled(&self) -> Vec<(&'static str, f64)> {
        match self.role {
            Role::Trial => vec![
                ("h_I", self.fill_interior),
                ("h_B", self.fill_boundary),
                ("q_I", self.separation_interior),
                ("q_B", self.separation_boundary),
                ("h_Y", self.fill()),
                ("q_Y", self.separation()),
            ],
            Role::Test => vec![
                ("s_I", self.fill_interior),
                ("s_B", self.fill_boundary),
                ("s_X", self.fill()),
            ],
        }
    }
}

pub fn metrics(domain: &Domain, pts: &PointSet, probe_resolution: usize) -> Result<MeshMetrics> {
    let fill_interior = fill_distance_interior(domain, pts, probe_resolution)?;
    let fill_boundary = boundary_fill_distance(domain, &pts.boundary)?;
    let separation_interior = if pts.interior.len() >= 2 {
        separation(&pts.interior)?
    } else {
        fill_interior
    };
    let separation_boundary = boundary_separation(domain, &pts.boundary)?;
    Ok(MeshMetrics {
        role: pts.role,
        fill_interior,
        fill_boundary,
        separation_interior,
        separation_boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn shoelace_area(domain: &Domain, n: usize) -> f64 {
        let pts: Vec<Point> = (0..n)
            .map(|k| domain.boundary_param(k as f64 / n as f64))
            .collect();
        let mut a = 0.0;
        for k in 0..n {
            let (p, q) = (pts[k], pts[(k + 1) % n]);
            a += p.x * q.y - q.x * p.y;
        }
        0.5 * a
    }

    #[test]
    fn areas_by_boundary_quadrature() {
        for d in [
            Domain::UnitDisk,
            Domain::UnitSquare,
            Domain::ellipse(1.0, 0.6).unwrap(),
        ] {
            assert_relative_eq!(shoelace_area(&d, 40_000), d.area(), epsilon = 1e-6);
        }
    }

    #[test]
    fn boundary_chart_round_trip() {
        for d in [
            Domain::UnitDisk,
            Domain::UnitSquare,
            Domain::ellipse(0.8, 0.5).unwrap(),
        ] {
            for k in 0..97 {
                let t = k as f64 / 97.0;
                let p = d.boundary_param(t);
                assert!(!d.inside(&p), "{d} at t={t}");
                assert!(d.boundary_distance(&p) < 1e-12);
                assert_relative_eq!(d.boundary_coordinate(&p), t, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn ellipse_perimeter_reduces_to_circle() {
        let d = Domain::ellipse(1.0, 1.0).unwrap();
        assert_relative_eq!(d.perimeter(), 2.0 * PI, epsilon = 1e-13);
        assert!(Domain::ellipse(1.2, 0.5).is_err());
    }

    #[test]
    fn generate_square_coarse() {
        let pts = generate_points(&Domain::UnitSquare, 0.5, Role::Trial, 0).unwrap();
        let mut want = vec![(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)];
        let mut got: Vec<(f64, f64)> = pts.interior.iter().map(|p| (p.x, p.y)).collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, want);
        let gaps = arclength_gaps(&Domain::UnitSquare, &pts.boundary).unwrap();
        assert!(gaps.iter().all(|g| g / 4.0 <= 0.125 + 1e-15));
    }

    #[test]
    fn generate_degenerate() {
        let err = generate_points(&Domain::UnitDisk, 2.5, Role::Trial, 0).unwrap_err();
        assert!(matches!(err, Error::DegenerateDiscretization(_)));
        assert!(err.to_string().contains("degenerate discretization"));
    }

    #[test]
    fn generate_is_deterministic() {
        for seed in [0, 7] {
            let a = generate_points(&Domain::UnitDisk, 0.2, Role::Test, seed).unwrap();
            let b = generate_points(&Domain::UnitDisk, 0.2, Role::Test, seed).unwrap();
            assert_eq!(a, b);
        }
        let a = generate_points(&Domain::UnitDisk, 0.2, Role::Test, 3).unwrap();
        let b = generate_points(&Domain::UnitDisk, 0.2, Role::Test, 0).unwrap();
        assert_eq!(a.boundary, b.boundary);
        assert_ne!(a.interior, b.interior);
    }

    #[test]
    fn fill_distance_examples() {
        let four = PointSet::new(
            vec![
                Point::new(0.25, 0.25),
                Point::new(0.25, 0.75),
                Point::new(0.75, 0.25),
                Point::new(0.75, 0.75),
            ],
            vec![],
            Role::Trial,
        );
        let h = fill_distance_interior(&Domain::UnitSquare, &four, 400).unwrap();
        assert!((h - 0.25 * 2f64.sqrt()).abs() <= 0.005, "{h}");

        let one = PointSet::new(vec![Point::new(0.5, 0.5)], vec![], Role::Trial);
        let h = fill_distance_interior(&Domain::UnitSquare, &one, 400).unwrap();
        assert!((h - 0.5f64.sqrt()).abs() <= 0.005, "{h}");

        let covering = PointSet::new(probe_grid(&Domain::UnitDisk, 50), vec![], Role::Trial);
        assert_eq!(
            fill_distance_interior(&Domain::UnitDisk, &covering, 50).unwrap(),
            0.0
        );

        let empty = PointSet::new(vec![], vec![], Role::Trial);
        assert!(fill_distance_interior(&Domain::UnitDisk, &empty, 50).is_err());
    }

    #[test]
    fn separation_examples() {
        let s = separation(&[
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(s, 0.5);
        let s = separation(&[
            Point::new(0.0, 0.0),
            Point::new(0.0, 0.2),
            Point::new(5.0, 5.0),
        ])
        .unwrap();
        assert_relative_eq!(s, 0.1, epsilon = 1e-15);
        let h = 0.07;
        let grid: Vec<Point> = (0..100)
            .map(|k| Point::new((k % 10) as f64 * h, (k / 10) as f64 * h))
            .collect();
        assert_relative_eq!(separation(&grid).unwrap(), h / 2.0, epsilon = 1e-15);
        assert!(separation(&[Point::new(0.0, 0.0)]).is_err());
    }

    #[test]
    fn boundary_fill_examples() {
        let d = Domain::UnitDisk;
        let circle = |n: usize| -> Vec<Point> {
            (0..n)
                .map(|k| d.boundary_param(k as f64 / n as f64))
                .collect()
        };
        assert_relative_eq!(
            boundary_fill_distance(&d, &circle(4)).unwrap(),
            PI / 4.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            boundary_fill_distance(&d, &circle(37)).unwrap(),
            PI / 37.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            boundary_fill_distance(&d, &circle(1)).unwrap(),
            PI,
            epsilon = 1e-12
        );
        assert!(boundary_fill_distance(&d, &[]).is_err());
    }

    #[test]
    fn metrics_composition() {
        let m = MeshMetrics {
            role: Role::Trial,
            fill_interior: 0.3,
            fill_boundary: 0.2,
            separation_interior: 0.1,
            separation_boundary: 0.15,
        };
        assert_eq!((m.fill(), m.separation()), (0.3, 0.1));
        let names: Vec<&str> = MeshMetrics {
            role: Role::Test,
            ..m
        }
        .labelled()
        .iter()
        .map(|p| p.0)
        .collect();
        assert_eq!(names, ["s_I", "s_B", "s_X"]);
    }

    #[test]
    fn generated_square_is_quasi_uniform() {
        let pts = generate_points(&Domain::UnitSquare, 0.25, Role::Trial, 0).unwrap();
        let m = metrics(&Domain::UnitSquare, &pts, 400).unwrap();
        assert!(m.mesh_ratio() <= 4.0, "{m:?}");
        assert!(m.separation_interior <= m.fill_interior);
    }

    #[test]
    fn csv_round_trip() {
        let pts = generate_points(&Domain::ellipse(0.9, 0.6).unwrap(), 0.3, Role::Test, 5).unwrap();
        let mut buf = Vec::new();
        pts.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"role,x,y,on_boundary\n"));
        let back = PointSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, pts);
    }
}
