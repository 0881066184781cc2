//! Group elements as isometries of the models.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::arith::Mat2;
use crate::error::{Error, Result};
use crate::geometry::h2::{H2Point, Mobius};
use crate::geometry::tree::{FreeWord, RaySeq};
use crate::geometry::{self, GeodesicLine, IdealPoint, Point, SpaceModel};
use crate::word::Word;

/// A realized isometry. Equality is equality of isometries (PSL(2) matrices
/// are sign-normalized, free-group words are reduced).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Isometry {
    /// Left multiplication on the Cayley tree.
    Tree(FreeWord),
    Mobius(Mat2),
    /// Rotation about `i` through `2 pi k / n`.
    Rotation { k: u64, n: u64 },
}

impl Isometry {
    pub fn identity_like(&self) -> Isometry {
        match self {
            Isometry::Tree(_) => Isometry::Tree(FreeWord::identity()),
            Isometry::Mobius(_) => Isometry::Mobius(Mat2::identity()),
            Isometry::Rotation { n, .. } => Isometry::Rotation { k: 0, n: *n },
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Isometry::Tree(w) => w.is_empty(),
            Isometry::Mobius(m) => m.is_identity(),
            Isometry::Rotation { k, n } => k % n == 0,
        }
    }

    /// The product `self * o`, acting as `o` first.
    pub fn compose(&self, o: &Isometry) -> Result<Isometry> {
        match (self, o) {
            (Isometry::Tree(a), Isometry::Tree(b)) => Ok(Isometry::Tree(a.mul(b))),
            (Isometry::Mobius(a), Isometry::Mobius(b)) => Ok(Isometry::Mobius(a.mul(b))),
            (Isometry::Rotation { k: a, n }, Isometry::Rotation { k: b, n: m }) if n == m => {
                Ok(Isometry::Rotation { k: (a + b) % n, n: *n })
            }
            _ => Err(Error::ModelMismatch("isometries of different kinds".into())),
        }
    }

    pub fn inverse(&self) -> Isometry {
        match self {
            Isometry::Tree(w) => Isometry::Tree(w.inverse()),
            Isometry::Mobius(m) => Isometry::Mobius(m.inverse()),
            Isometry::Rotation { k, n } => Isometry::Rotation { k: (n - k % n) % n, n: *n },
        }
    }

    pub fn pow(&self, e: i64) -> Isometry {
        match self {
            Isometry::Tree(w) => Isometry::Tree(w.pow(e)),
            Isometry::Mobius(m) => Isometry::Mobius(m.powi(e)),
            Isometry::Rotation { k, n } => {
                let r = (*k as i128 * e as i128).rem_euclid(*n as i128);
                Isometry::Rotation { k: r as u64, n: *n }
            }
        }
    }

    /// Floating-point Möbius map for half-plane isometries.
    pub fn mobius(&self) -> Result<Mobius> {
        match self {
            Isometry::Mobius(m) => Ok(m.mobius()),
            Isometry::Rotation { k, n } => {
                let th = PI * *k as f64 / *n as f64;
                Ok(Mobius::unimodular([th.cos(), th.sin(), -th.sin(), th.cos()]))
            }
            Isometry::Tree(_) => Err(Error::ModelMismatch("tree isometry has no Möbius form".into())),
        }
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        match (self, x) {
            (Isometry::Tree(g), Point::Tree(v)) => Ok(Point::Tree(g.mul(v))),
            (_, Point::H2(p)) => Ok(Point::H2(self.mobius()?.apply_point(p))),
            _ => Err(Error::ModelMismatch("isometry and point belong to different models".into())),
        }
    }

    pub fn apply_ideal(&self, xi: &IdealPoint) -> Result<IdealPoint> {
        match (self, xi) {
            (Isometry::Tree(g), IdealPoint::Tree(r)) => Ok(IdealPoint::Tree(r.act(g))),
            (Isometry::Mobius(m), IdealPoint::H2(b)) => Ok(IdealPoint::H2(m.act_boundary(b))),
            (Isometry::Rotation { .. }, IdealPoint::H2(b)) => {
                let x = self.mobius()?.on_boundary(b.to_f64());
                Ok(IdealPoint::H2(if x.is_infinite() {
                    crate::arith::Boundary::Infinity
                } else {
                    crate::arith::Boundary::Real(x)
                }))
            }
            _ => Err(Error::ModelMismatch("isometry and ideal point belong to different models".into())),
        }
    }

    pub fn as_matrix(&self) -> Option<&Mat2> {
        match self {
            Isometry::Mobius(m) => Some(m),
            _ => None,
        }
    }
}

/// A group element carried both as a word in the preset's generators and as
/// the isometry that word evaluates to.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub word: Word,
    pub iso: Isometry,
}

impl GroupElement {
    pub fn new(word: Word, iso: Isometry) -> Self {
        GroupElement { word, iso }
    }

    pub fn mul(&self, o: &GroupElement) -> Result<GroupElement> {
        Ok(GroupElement::new(self.word.concat(&o.word), self.iso.compose(&o.iso)?))
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement::new(self.word.inverse(), self.iso.inverse())
    }

    pub fn pow(&self, e: i64) -> GroupElement {
        GroupElement::new(self.word.pow(e), self.iso.pow(e))
    }

    /// `g self g^-1`.
    pub fn conjugate_by(&self, g: &GroupElement) -> Result<GroupElement> {
        g.mul(self)?.mul(&g.inverse())
    }

    pub fn word_length(&self) -> u64 {
        self.word.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Kind::Identity => "identity",
            Kind::Elliptic => "elliptic",
            Kind::Parabolic => "parabolic",
            Kind::Hyperbolic => "hyperbolic",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub kind: Kind,
    /// Hyperbolic: `[attracting, repelling]`. Parabolic: the single fixed point.
    pub fixed_points: Vec<IdealPoint>,
    pub translation_length: f64,
    /// `|trace|` as an exact rational, for matrices.
    pub trace: Option<String>,
}

pub fn classify(g: &Isometry) -> Classification {
    let none = |kind| Classification { kind, fixed_points: vec![], translation_length: 0.0, trace: None };
    match g {
        Isometry::Tree(w) => {
            if w.is_empty() {
                return none(Kind::Identity);
            }
            let (conj, core) = w.cyclic_decomposition();
            let plus = RaySeq::periodic(&core).expect("cyclically reduced core").act(&conj);
            let minus = RaySeq::periodic(&core.inverse()).expect("cyclically reduced core").act(&conj);
            Classification {
                kind: Kind::Hyperbolic,
                fixed_points: vec![IdealPoint::Tree(plus), IdealPoint::Tree(minus)],
                translation_length: core.len() as f64,
                trace: None,
            }
        }
        Isometry::Rotation { k, n } => none(if k % n == 0 { Kind::Identity } else { Kind::Elliptic }),
        Isometry::Mobius(m) => {
            let trace = Some(m.abs_trace().to_string());
            if m.is_identity() {
                return Classification { trace, ..none(Kind::Identity) };
            }
            match m.cmp_trace_with_two() {
                Ordering::Less => Classification { trace, ..none(Kind::Elliptic) },
                Ordering::Equal => Classification {
                    kind: Kind::Parabolic,
                    fixed_points: m.fixed_points().into_iter().map(IdealPoint::H2).collect(),
                    translation_length: 0.0,
                    trace,
                },
                Ordering::Greater => Classification {
                    kind: Kind::Hyperbolic,
                    fixed_points: m.fixed_points().into_iter().map(IdealPoint::H2).collect(),
                    translation_length: m.translation_length(),
                    trace,
                },
            }
        }
    }
}

fn require_hyperbolic(g: &Isometry) -> Result<Classification> {
    let c = classify(g);
    if c.kind != Kind::Hyperbolic {
        return Err(Error::NotHyperbolic { kind: c.kind.to_string() });
    }
    Ok(c)
}

/// The canonical axis, oriented from the repelling toward the attracting
/// fixed point. Half-plane axes are parameterized from the apex, tree axes
/// from the vertex where the two fixed rays split.
pub fn axis(g: &Isometry) -> Result<GeodesicLine> {
    let c = require_hyperbolic(g)?;
    geometry::line(&c.fixed_points[1], &c.fixed_points[0])
}

pub fn displacement(g: &Isometry, x: &Point) -> Result<f64> {
    geometry::distance(x, &g.apply(x)?)
}

/// Spread of displacement over points of the canonical axis and points up to
/// `2 delta` off it. Requires an axis point displaced at least `200 delta`.
pub fn translation_variation(g: &Isometry, model: &SpaceModel, sample_count: usize) -> Result<f64> {
    let c = require_hyperbolic(g)?;
    let delta = model.delta;
    if c.translation_length < 200.0 * delta - model.tolerance {
        return Err(Error::HypothesisNotSatisfied(format!(
            "axis displacement {:.4} is below 200 delta = {}",
            c.translation_length,
            200.0 * delta
        )));
    }
    let ax = axis(g)?;
    let n = sample_count.max(1);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        // Spread along one period of the axis and across five offset levels.
        let t = c.translation_length * (i as f64 / n as f64) - c.translation_length / 2.0;
        let d = match &ax {
            GeodesicLine::Tree(path) => displacement(g, &Point::Tree(path.vertex_at(t.round() as i64)))?,
            GeodesicLine::H2(_) => {
                // In the axis frame g is z -> e^tau z; this keeps far axis
                // points representable where the plane image would not be.
                let r = 2.0 * delta * ((i % 5) as f64 / 2.0 - 1.0);
                let w = H2Point::imaginary_fermi(t, r);
                let gw = H2Point::imaginary_fermi(t + c.translation_length, r);
                w.distance(&gw)
            }
        };
        lo = lo.min(d);
        hi = hi.max(d);
    }
    Ok(hi - lo)
}

/// Displacement at signed distance `r` from the axis of a half-plane
/// isometry with translation length `tau`, in closed form.
pub fn displacement_off_axis(tau: f64, r: f64) -> f64 {
    let ch = r.cosh();
    let sh = r.sinh();
    (ch * ch * tau.cosh() - sh * sh).acosh()
}

/// Axial coordinates of a half-plane point relative to a geodesic line:
/// the foot parameter and signed distance.
pub fn axial_coordinates(ax: &GeodesicLine, x: &H2Point) -> Result<(f64, f64)> {
    Ok(ax.as_h2()?.fermi(x))
}
