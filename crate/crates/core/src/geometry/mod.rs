//! Concrete δ-hyperbolic models: the Cayley tree of a free group and the
//! upper half-plane.

pub mod h2;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::arith::Boundary;
use crate::error::{Error, Result};
use h2::{H2Geodesic, H2Point};
use tree::{FreeWord, RaySeq, TreePath};

/// Slack for derived inequalities in the floating-point model.
pub const DERIVED_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Tree { valence: usize },
    UpperHalfPlane,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceModel {
    pub kind: ModelKind,
    pub delta: f64,
    pub tolerance: f64,
}

impl SpaceModel {
    /// The Cayley tree of the free group of the given rank.
    pub fn tree(rank: usize) -> Self {
        SpaceModel { kind: ModelKind::Tree { valence: 2 * rank }, delta: 0.0, tolerance: 0.0 }
    }

    pub fn h2() -> Self {
        Self::h2_with_delta(1.0)
    }

    pub fn h2_with_delta(delta: f64) -> Self {
        SpaceModel { kind: ModelKind::UpperHalfPlane, delta, tolerance: 1e-9 }
    }

    pub fn is_tree(&self) -> bool {
        matches!(self.kind, ModelKind::Tree { .. })
    }

    /// Slack used when checking a derived inequality.
    pub fn slack(&self) -> f64 {
        if self.is_tree() {
            0.0
        } else {
            DERIVED_TOLERANCE
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    Tree(FreeWord),
    H2(H2Point),
}

impl Point {
    pub fn h2(x: f64, y: f64) -> Result<Point> {
        Ok(Point::H2(H2Point::new(x, y)?))
    }

    pub fn root() -> Point {
        Point::Tree(FreeWord::identity())
    }

    pub fn as_h2(&self) -> Result<&H2Point> {
        match self {
            Point::H2(p) => Ok(p),
            Point::Tree(_) => Err(Error::ModelMismatch("expected an upper half-plane point".into())),
        }
    }

    pub fn as_tree(&self) -> Result<&FreeWord> {
        match self {
            Point::Tree(w) => Ok(w),
            Point::H2(_) => Err(Error::ModelMismatch("expected a tree vertex".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum IdealPoint {
    Tree(RaySeq),
    H2(Boundary),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Segment,
    Ray,
    Line,
}

/// A unit-speed geodesic segment, ray or complete line.
#[derive(Clone, Debug)]
pub enum GeodesicLine {
    Tree(TreePath),
    H2(H2Geodesic),
}

impl GeodesicLine {
    pub fn shape(&self) -> Shape {
        let (lo, hi) = self.domain();
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => Shape::Segment,
            (false, false) => Shape::Line,
            _ => Shape::Ray,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            GeodesicLine::Tree(p) => p.domain(),
            GeodesicLine::H2(g) => (g.lo, g.hi),
        }
    }

    /// The point at parameter `t`. Tree paths only have vertices at integer
    /// parameters; `t` is rounded.
    pub fn point_at(&self, t: f64) -> Point {
        match self {
            GeodesicLine::Tree(p) => Point::Tree(p.vertex_at(t.round() as i64)),
            GeodesicLine::H2(g) => Point::H2(g.point_at(t)),
        }
    }

    pub fn endpoints(&self) -> (Option<IdealPoint>, Option<IdealPoint>) {
        match self {
            GeodesicLine::Tree(p) => match p.absolute_endpoints() {
                Some((m, q)) => (Some(IdealPoint::Tree(m)), Some(IdealPoint::Tree(q))),
                None => {
                    let (_, f) = p.endpoints();
                    (None, f.map(|r| IdealPoint::Tree(r.act(&p.base))))
                }
            },
            GeodesicLine::H2(g) => {
                let m = (g.lo == f64::NEG_INFINITY).then(|| IdealPoint::H2(g.minus.clone()));
                let p = (g.hi == f64::INFINITY).then(|| IdealPoint::H2(g.plus.clone()));
                (m, p)
            }
        }
    }

    pub fn as_h2(&self) -> Result<&H2Geodesic> {
        match self {
            GeodesicLine::H2(g) => Ok(g),
            GeodesicLine::Tree(_) => Err(Error::ModelMismatch("expected an upper half-plane geodesic".into())),
        }
    }

    pub fn as_tree(&self) -> Result<&TreePath> {
        match self {
            GeodesicLine::Tree(p) => Ok(p),
            GeodesicLine::H2(_) => Err(Error::ModelMismatch("expected a tree path".into())),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Projection {
    pub param: f64,
    pub point: Point,
    pub distance: f64,
    /// The nearest point is a finite end of a segment or ray.
    pub at_boundary: bool,
}

fn mismatch() -> Error {
    Error::ModelMismatch("points belong to different models".into())
}

pub fn distance(p: &Point, q: &Point) -> Result<f64> {
    match (p, q) {
        (Point::Tree(a), Point::Tree(b)) => Ok(a.inverse().mul(b).len() as f64),
        (Point::H2(a), Point::H2(b)) => Ok(a.distance(b)),
        _ => Err(mismatch()),
    }
}

pub fn geodesic(p: &Point, q: &Point) -> Result<GeodesicLine> {
    match (p, q) {
        (Point::Tree(a), Point::Tree(b)) => {
            if a == b {
                return Err(Error::DegenerateSegment);
            }
            Ok(GeodesicLine::Tree(TreePath::segment(a, b)))
        }
        (Point::H2(a), Point::H2(b)) => Ok(GeodesicLine::H2(H2Geodesic::segment(a, b)?)),
        _ => Err(mismatch()),
    }
}

pub fn ray(p: &Point, xi: &IdealPoint) -> Result<GeodesicLine> {
    match (p, xi) {
        (Point::Tree(a), IdealPoint::Tree(r)) => Ok(GeodesicLine::Tree(TreePath::ray(a, r))),
        (Point::H2(a), IdealPoint::H2(b)) => Ok(GeodesicLine::H2(H2Geodesic::ray(a, b)?)),
        _ => Err(mismatch()),
    }
}

pub fn line(minus: &IdealPoint, plus: &IdealPoint) -> Result<GeodesicLine> {
    match (minus, plus) {
        (IdealPoint::Tree(m), IdealPoint::Tree(p)) => Ok(GeodesicLine::Tree(TreePath::line(m, p)?)),
        (IdealPoint::H2(m), IdealPoint::H2(p)) => {
            if m == p {
                return Err(Error::DegenerateLine);
            }
            Ok(GeodesicLine::H2(H2Geodesic::line(m.clone(), p.clone())?))
        }
        _ => Err(mismatch()),
    }
}

pub fn project(c: &GeodesicLine, x: &Point) -> Result<Projection> {
    match (c, x) {
        (GeodesicLine::Tree(path), Point::Tree(v)) => {
            let (t, d) = path.project(v);
            let (lo, hi) = path.domain();
            let tf = t as f64;
            Ok(Projection {
                param: tf,
                point: Point::Tree(path.vertex_at(t)),
                distance: d as f64,
                at_boundary: d > 0 && (tf == lo || tf == hi),
            })
        }
        (GeodesicLine::H2(g), Point::H2(p)) => {
            let (s, d, at_boundary) = g.project(p);
            Ok(Projection { param: s, point: Point::H2(g.point_at(s)), distance: d, at_boundary })
        }
        _ => Err(mismatch()),
    }
}

/// Nearest-point parameter found by golden-section search over `[lo, hi]`;
/// an independent route to [`project`] for the half-plane.
pub fn project_numeric(c: &GeodesicLine, x: &Point, lo: f64, hi: f64) -> Result<f64> {
    Ok(h2::project_by_search(c.as_h2()?, x.as_h2()?, lo, hi))
}

fn same_ideal(a: &IdealPoint, b: &IdealPoint) -> bool {
    match (a, b) {
        (IdealPoint::H2(Boundary::Real(x)), IdealPoint::H2(y)) | (IdealPoint::H2(y), IdealPoint::H2(Boundary::Real(x))) => {
            let y = y.to_f64();
            x == &y || (x - y).abs() <= 1e-9 * (1.0 + x.abs())
        }
        _ => a == b,
    }
}

/// Sampled symmetric Hausdorff distance between two complete geodesics with
/// the same ideal endpoints, over `samples` points in the parameter window
/// `[-window, window]` of each.
pub fn hausdorff_same_endpoints(c: &GeodesicLine, c2: &GeodesicLine, window: f64, samples: usize) -> Result<f64> {
    let (Some(m1), Some(p1)) = c.endpoints() else {
        return Err(Error::Precondition("first geodesic is not complete".into()));
    };
    let (Some(m2), Some(p2)) = c2.endpoints() else {
        return Err(Error::Precondition("second geodesic is not complete".into()));
    };
    if !(same_ideal(&m1, &m2) && same_ideal(&p1, &p2)) {
        return Err(Error::EndpointMismatch("geodesics have different ideal endpoints".into()));
    }
    let one_way = |a: &GeodesicLine, b: &GeodesicLine| -> Result<f64> {
        let mut worst = 0f64;
        for i in 0..samples.max(2) {
            let t = -window + 2.0 * window * i as f64 / (samples.max(2) - 1) as f64;
            worst = worst.max(project(b, &a.point_at(t))?.distance);
        }
        Ok(worst)
    };
    Ok(one_way(c, c2)?.max(one_way(c2, c)?))
}

/// Largest distance from a sampled point of one edge of the triangle `pqr` to
/// the union of the other two edges.
pub fn thin_triangle_defect(p: &Point, q: &Point, r: &Point, samples: usize) -> Result<f64> {
    let pts = [p, q, r];
    distance(p, q)?;
    distance(q, r)?;
    if p == q || q == r || r == p {
        // Some edge is a single point lying on the other two.
        return Ok(0.0);
    }
    let edges: Vec<GeodesicLine> = (0..3).map(|i| geodesic(pts[i], pts[(i + 1) % 3])).collect::<Result<_>>()?;
    let mut worst = 0f64;
    for i in 0..3 {
        let e = &edges[i];
        let (lo, hi) = e.domain();
        let params: Vec<f64> = match e {
            GeodesicLine::Tree(_) => (lo as i64..=hi as i64).map(|t| t as f64).collect(),
            GeodesicLine::H2(_) => (0..=samples).map(|k| lo + (hi - lo) * k as f64 / samples.max(1) as f64).collect(),
        };
        for t in params {
            let x = e.point_at(t);
            let d1 = project(&edges[(i + 1) % 3], &x)?.distance;
            let d2 = project(&edges[(i + 2) % 3], &x)?.distance;
            worst = worst.max(d1.min(d2));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::Alphabet;

    fn v(s: &str) -> Point {
        let ab = Alphabet::lower_upper(2);
        Point::Tree(FreeWord::from_letters(
            ab.parse(s).unwrap().letters().into_iter().map(|(g, e)| tree::letter(g, e)),
        ))
    }

    #[test]
    fn distances() {
        let d = distance(&Point::h2(0.0, 1.0).unwrap(), &Point::h2(0.0, std::f64::consts::E).unwrap()).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        assert_eq!(distance(&v("ab"), &v("a")).unwrap(), 1.0);
        assert!(distance(&v("a"), &Point::h2(0.0, 1.0).unwrap()).is_err());
        assert!(Point::h2(0.0, 0.0).is_err());
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let p = Point::h2(1.0, 2.0).unwrap();
        assert_eq!(geodesic(&p, &p).unwrap_err(), Error::DegenerateSegment);
        let z = IdealPoint::H2(Boundary::integer(0));
        assert_eq!(line(&z, &z).unwrap_err(), Error::DegenerateLine);
    }

    #[test]
    fn projection_onto_the_imaginary_axis() {
        let axis = line(&IdealPoint::H2(Boundary::integer(0)), &IdealPoint::H2(Boundary::Infinity)).unwrap();
        let pr = project(&axis, &Point::h2(0.0, 2.0).unwrap()).unwrap();
        assert!(pr.distance < 1e-12);
        let pr = project(&axis, &Point::h2(3.0, 1.0).unwrap()).unwrap();
        let Point::H2(z) = pr.point else { unreachable!() };
        assert!(z.x.abs() < 1e-12 && (z.y - 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn tree_line_projection() {
        let a = FreeWord::from_letters([tree::letter(0, 1)]);
        let axis = line(
            &IdealPoint::Tree(RaySeq::periodic(&a.inverse()).unwrap()),
            &IdealPoint::Tree(RaySeq::periodic(&a).unwrap()),
        )
        .unwrap();
        let pr = project(&axis, &v("ab")).unwrap();
        assert_eq!(pr.point, v("a"));
        assert_eq!(pr.distance, 1.0);
    }

    #[test]
    fn segment_projection_flags_boundary() {
        let seg = geodesic(&Point::h2(0.0, 1.0).unwrap(), &Point::h2(0.0, 4.0).unwrap()).unwrap();
        assert_eq!(seg.shape(), Shape::Segment);
        let pr = project(&seg, &Point::h2(0.0, 100.0).unwrap()).unwrap();
        assert!(pr.at_boundary);
        assert!((pr.param - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn thin_triangles() {
        let d = thin_triangle_defect(&v("ab"), &v("B"), &v("aab"), 0).unwrap();
        assert_eq!(d, 0.0);
        let d = thin_triangle_defect(
            &Point::h2(0.0, 1.0).unwrap(),
            &Point::h2(0.0, 10.0).unwrap(),
            &Point::h2(5.0, 1.0).unwrap(),
            400,
        )
        .unwrap();
        assert!(d > 0.0 && d <= 1.0);
    }

    #[test]
    fn hausdorff_of_reparameterized_semicircle_is_zero() {
        let m = Boundary::integer(-1);
        let p = Boundary::integer(1);
        let c = GeodesicLine::H2(H2Geodesic::line(m.clone(), p.clone()).unwrap());
        let g = H2Geodesic::line(m, p).unwrap();
        let shifted = GeodesicLine::H2(H2Geodesic::from_frame(
            g.frame,
            0.7,
            f64::NEG_INFINITY,
            f64::INFINITY,
            g.minus.clone(),
            g.plus.clone(),
        ));
        assert!(hausdorff_same_endpoints(&c, &shifted, 10.0, 101).unwrap() < 1e-9);
    }
}
