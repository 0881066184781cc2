//! The upper half-plane model.
//!
//! Every geodesic carries a *frame*: a real Möbius map sending the imaginary
//! axis (`i e^t`) onto it. Projection, distance to the geodesic and Fermi
//! coordinates are all read off after pulling a point back through the frame.

use num_complex::Complex64;

use crate::arith::Boundary;
use crate::error::{Error, Result};

/// Frame parameters are clamped to this range before exponentiating. Past it
/// a point sits within `e^-600` of its ideal endpoint, far below f64 resolution.
pub const PARAM_SATURATION: f64 = 600.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct H2Point {
    pub x: f64,
    pub y: f64,
}

impl H2Point {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if y.is_nan() || y <= 0.0 || !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidPoint(format!("({x}, {y}) is not in the upper half-plane")));
        }
        Ok(H2Point { x, y })
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    fn from_z(z: Complex64) -> Self {
        // Far along a geodesic y can underflow; keep the point in the model.
        H2Point { x: z.re, y: z.im.max(f64::MIN_POSITIVE) }
    }

    /// The point with Fermi coordinates `(t, r)` relative to the imaginary axis.
    pub fn imaginary_fermi(t: f64, r: f64) -> Self {
        H2Point { x: t.exp() * r.tanh(), y: t.exp() / r.cosh() }
    }

    pub fn distance(&self, o: &H2Point) -> f64 {
        let chord = (self.x - o.x).hypot(self.y - o.y);
        2.0 * (chord / (2.0 * (self.y * o.y).sqrt())).asinh()
    }
}

/// A real Möbius transformation as f64 entries, with the log of its exact
/// determinant carried alongside: rounded entries of large matrices lose the
/// determinant to cancellation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mobius(pub [f64; 4], pub f64);

impl Mobius {
    /// Entries of a determinant-one matrix.
    pub fn unimodular(m: [f64; 4]) -> Mobius {
        Mobius(m, 0.0)
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        let [a, b, c, d] = self.0;
        (z * a + b) / (z * c + d)
    }

    pub fn apply_point(&self, p: &H2Point) -> H2Point {
        let [_, _, c, d] = self.0;
        let w = self.apply(p.z());
        let den = p.z() * c + d;
        let y = (p.y.ln() + self.1 - 2.0 * den.norm().ln()).exp();
        H2Point::from_z(Complex64::new(w.re, if y > 0.0 { y } else { w.im }))
    }

    pub fn inverse(&self) -> Mobius {
        let [a, b, c, d] = self.0;
        Mobius([d, -b, -c, a], self.1)
    }

    pub fn compose(&self, o: &Mobius) -> Mobius {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        Mobius([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h], self.1 + o.1)
    }

    pub fn on_boundary(&self, x: f64) -> f64 {
        let [a, b, c, d] = self.0;
        if x.is_infinite() {
            return if c == 0.0 { f64::INFINITY } else { a / c };
        }
        let den = c * x + d;
        if den == 0.0 {
            f64::INFINITY
        } else {
            (a * x + b) / den
        }
    }

    /// Frame sending `0 -> minus`, `inf -> plus`; `i` lands on the apex of a
    /// semicircle, or at height 1 on a vertical line.
    pub fn frame(minus: f64, plus: f64) -> Result<Mobius> {
        if minus == plus {
            return Err(Error::DegenerateLine);
        }
        let m = match (minus.is_infinite(), plus.is_infinite()) {
            (false, true) => Mobius::unimodular([1.0, minus, 0.0, 1.0]),
            (true, false) => Mobius::unimodular([plus, -1.0, 1.0, 0.0]),
            (false, false) if plus > minus => {
                let s = (plus - minus).sqrt();
                Mobius::unimodular([plus / s, minus / s, 1.0 / s, 1.0 / s])
            }
            (false, false) => {
                let s = (minus - plus).sqrt();
                Mobius::unimodular([plus / s, -minus / s, 1.0 / s, -1.0 / s])
            }
            (true, true) => return Err(Error::DegenerateLine),
        };
        Ok(m)
    }
}

/// A unit-speed geodesic piece. Parameter `s` maps to frame parameter `s + shift`.
#[derive(Clone, Debug)]
pub struct H2Geodesic {
    pub frame: Mobius,
    inverse: Mobius,
    pub shift: f64,
    pub lo: f64,
    pub hi: f64,
    pub minus: Boundary,
    pub plus: Boundary,
}

impl H2Geodesic {
    pub fn from_frame(frame: Mobius, shift: f64, lo: f64, hi: f64, minus: Boundary, plus: Boundary) -> Self {
        H2Geodesic { frame, inverse: frame.inverse(), shift, lo, hi, minus, plus }
    }

    /// The complete geodesic between two boundary points, parameterized from
    /// the apex (or from height 1 when vertical).
    pub fn line(minus: Boundary, plus: Boundary) -> Result<Self> {
        let frame = Mobius::frame(minus.to_f64(), plus.to_f64())?;
        Ok(Self::from_frame(frame, 0.0, f64::NEG_INFINITY, f64::INFINITY, minus, plus))
    }

    fn carrier(p: &H2Point, q: &H2Point) -> (f64, f64) {
        let scale = 1.0 + p.x.abs().max(q.x.abs());
        if (p.x - q.x).abs() <= 1e-14 * scale {
            return if q.y > p.y { (p.x, f64::INFINITY) } else { (f64::INFINITY, p.x) };
        }
        let c = ((q.x * q.x + q.y * q.y) - (p.x * p.x + p.y * p.y)) / (2.0 * (q.x - p.x));
        let r = (p.x - c).hypot(p.y);
        if q.x > p.x {
            (c - r, c + r)
        } else {
            (c + r, c - r)
        }
    }

    pub fn segment(p: &H2Point, q: &H2Point) -> Result<Self> {
        if p == q {
            return Err(Error::DegenerateSegment);
        }
        let (minus, plus) = Self::carrier(p, q);
        let frame = Mobius::frame(minus, plus)?;
        let inv = frame.inverse();
        let shift = inv.apply(p.z()).norm().ln();
        let end = inv.apply(q.z()).norm().ln() - shift;
        Ok(Self::from_frame(frame, shift, 0.0, end, Boundary::Real(minus), Boundary::Real(plus)))
    }

    pub fn ray(p: &H2Point, toward: &Boundary) -> Result<Self> {
        let xi = toward.to_f64();
        let minus = if xi.is_infinite() {
            p.x
        } else if (p.x - xi).abs() < 1e-300 {
            f64::INFINITY
        } else {
            let c = (p.x * p.x + p.y * p.y - xi * xi) / (2.0 * (p.x - xi));
            2.0 * c - xi
        };
        let frame = Mobius::frame(minus, xi)?;
        let shift = frame.inverse().apply(p.z()).norm().ln();
        Ok(Self::from_frame(frame, shift, 0.0, f64::INFINITY, Boundary::Real(minus), toward.clone()))
    }

    pub fn is_complete(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }

    pub fn point_at(&self, s: f64) -> H2Point {
        self.point_at_fermi(s, 0.0)
    }

    /// Point at arclength `s` along the geodesic, pushed a signed distance `r`
    /// along the perpendicular.
    pub fn point_at_fermi(&self, s: f64, r: f64) -> H2Point {
        let t = (s + self.shift).clamp(-PARAM_SATURATION, PARAM_SATURATION);
        let w = Complex64::new(r.tanh(), 1.0 / r.cosh()) * t.exp();
        H2Point::from_z(self.frame.apply(w))
    }

    /// `(s, r)`: the parameter of the nearest point on the complete carrier
    /// and the signed distance to it.
    pub fn fermi(&self, p: &H2Point) -> (f64, f64) {
        let w = self.inverse.apply(p.z());
        (w.norm().ln() - self.shift, (w.re / w.im).asinh())
    }

    /// Parameter of the nearest point on this piece, distance, and whether the
    /// nearest point is a finite end of the piece rather than an interior foot.
    pub fn project(&self, p: &H2Point) -> (f64, f64, bool) {
        let (s, r) = self.fermi(p);
        if s < self.lo || s > self.hi {
            let e = s.clamp(self.lo, self.hi);
            return (e, p.distance(&self.point_at(e)), true);
        }
        (s, r.abs(), false)
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Nearest point on a geodesic piece by golden-section search on the distance
/// profile, independent of the closed-form projection.
pub fn project_by_search(g: &H2Geodesic, p: &H2Point, lo: f64, hi: f64) -> f64 {
    let f = |s: f64| p.distance(&g.point_at(s));
    // Coarse scan to bracket the (convex) minimum, then refine.
    let n = 64;
    let step = (hi - lo) / n as f64;
    let best = (0..=n)
        .map(|i| lo + step * i as f64)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap();
    let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    (a + b) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> H2Point {
        H2Point::new(x, y).unwrap()
    }

    #[test]
    fn distance_matches_arccosh_formula() {
        let cases = [((0.0, 1.0), (1.0, 1.0)), ((0.3, 0.2), (-2.0, 5.0)), ((1.0, 1.0), (1.0, 1e-5))];
        for ((x1, y1), (x2, y2)) in cases {
            let d = pt(x1, y1).distance(&pt(x2, y2));
            let f = (1.0 + ((x1 - x2).powi(2) + (y1 - y2).powi(2)) / (2.0 * y1 * y2)).acosh();
            assert!((d - f).abs() < 1e-9 * (1.0 + f));
        }
    }

    #[test]
    fn frame_is_unit_speed_and_orientation_preserving() {
        for (m, p) in [(-1.0, 1.0), (3.0, -2.0), (0.5, f64::INFINITY), (f64::INFINITY, -4.0)] {
            let g = H2Geodesic::line(Boundary::Real(m), Boundary::Real(p)).unwrap();
            let [a, b, c, d] = g.frame.0;
            assert!(a * d - b * c > 0.0);
            for (s, t) in [(0.0, 1.0), (-2.5, 3.0), (4.0, 4.5)] {
                let dd = g.point_at(s).distance(&g.point_at(t));
                assert!((dd - (t - s)).abs() < 1e-9);
            }
            // Toward plus as the parameter grows.
            let far = g.point_at(30.0);
            if p.is_finite() {
                assert!((far.x - p).abs() < 1e-6);
            } else {
                assert!(far.y > 1e10);
            }
        }
    }

    #[test]
    fn fermi_roundtrip() {
        let g = H2Geodesic::line(Boundary::Real(-0.7), Boundary::Real(2.2)).unwrap();
        for (s, r) in [(0.0, 0.0), (1.5, -0.8), (-3.0, 2.0)] {
            let p = g.point_at_fermi(s, r);
            let (s2, r2) = g.fermi(&p);
            assert!((s - s2).abs() < 1e-9 && (r - r2).abs() < 1e-9);
            assert!((p.distance(&g.point_at(s)) - r.abs()).abs() < 1e-9);
        }
    }

    #[test]
    fn segment_endpoints_and_length() {
        let (p, q) = (pt(-1.0, 1.0), pt(1.0, 1.0));
        let g = H2Geodesic::segment(&p, &q).unwrap();
        assert!((g.length() - p.distance(&q)).abs() < 1e-12);
        let mid = g.point_at(g.length() / 2.0);
        assert!(mid.x.abs() < 1e-12 && (mid.y - 2f64.sqrt()).abs() < 1e-12);
        for s in [0.0, g.length()] {
            let z = g.point_at(s);
            assert!((z.x * z.x + z.y * z.y - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn golden_section_agrees_with_closed_form() {
        let g = H2Geodesic::line(Boundary::Real(0.0), Boundary::Infinity).unwrap();
        let p = pt(3.0, 1.0);
        let (s, _, _) = g.project(&p);
        assert!((s - 10f64.sqrt().ln()).abs() < 1e-12);
        let s2 = project_by_search(&g, &p, -10.0, 10.0);
        assert!((s - s2).abs() < 1e-6);
    }
}
