//! Horoballs in the upper half-plane: Busemann functions, the Ford system of
//! the modular group, exact invariance checks, the truncated space and the
//! census constant `k1`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{rational_to_f64, Boundary, Mat2};
use crate::error::{Error, Result};
use crate::geometry::h2::H2Point;
use crate::geometry::Point;
use crate::isometry::{GroupElement, Isometry};
use crate::preset::{Preset, PresetKind};
use crate::search::ball_spheres;

/// Busemann function about `center`, normalized to vanish at `i` for the
/// point at infinity: `-ln y`. A rational center `p/q` is first moved to
/// infinity by an integer matrix sending `p/q` to infinity.
pub fn busemann(center: &Boundary, x: &H2Point) -> Result<f64> {
    match center {
        Boundary::Infinity => Ok(-x.y.ln()),
        _ => {
            let r = center
                .as_rational()
                .ok_or_else(|| Error::UnsupportedCenter(format!("{center} is not rational")))?;
            let m = to_infinity(&r);
            let [a, b, c, d] = m.to_f64();
            let z = x.z();
            let w = (z * a + b) / (z * c + d);
            Ok(-w.im.ln())
        }
    }
}

/// An integer matrix of determinant one sending `p/q` to infinity.
fn to_infinity(r: &BigRational) -> Mat2 {
    let (p, q) = (r.numer().clone(), r.denom().clone());
    // p s - q t = 1 from the extended gcd of (p, q).
    let e = p.extended_gcd(&q);
    let (s, t) = (e.x, -e.y);
    Mat2::new(s, -t, -q, p, BigInt::one()).expect("determinant p s - q t = 1")
}

/// The horofunction in the sign convention that grows toward the center.
pub fn horofunction(center: &Boundary, x: &H2Point) -> Result<f64> {
    Ok(-busemann(center, x)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Horoball {
    /// `{y >= height}`.
    HalfPlane {
        #[serde(with = "crate::arith::rational_text")]
        height: BigRational,
    },
    /// Euclidean disk tangent to the real axis at `center`.
    Disk {
        #[serde(with = "crate::arith::rational_text")]
        center: BigRational,
        #[serde(with = "crate::arith::rational_text")]
        diameter: BigRational,
    },
}

impl Horoball {
    pub fn center(&self) -> Boundary {
        match self {
            Horoball::HalfPlane { .. } => Boundary::Infinity,
            Horoball::Disk { center, .. } => Boundary::rational(center.clone()),
        }
    }

    /// Strict interior membership.
    pub fn interior_contains(&self, x: &H2Point) -> bool {
        match self {
            Horoball::HalfPlane { height } => x.y > rational_to_f64(height),
            Horoball::Disk { center, diameter } => {
                let r = rational_to_f64(diameter) / 2.0;
                let dx = x.x - rational_to_f64(center);
                let dy = x.y - r;
                dx * dx + dy * dy < r * r
            }
        }
    }

    /// Image under a Möbius transformation, computed exactly.
    pub fn transport(&self, m: &Mat2) -> Horoball {
        let den = BigRational::from(m.den().clone());
        let [a, b, c, d] = m.entries().map(|x| BigRational::from(x.clone()) / &den);
        match self {
            Horoball::HalfPlane { height } => {
                if c.is_zero() {
                    Horoball::HalfPlane { height: height * &a * &a }
                } else {
                    Horoball::Disk { center: &a / &c, diameter: (&c * &c * height).recip() }
                }
            }
            Horoball::Disk { center, diameter } => {
                let j = &c * center + &d;
                if j.is_zero() {
                    Horoball::HalfPlane { height: (&c * &c * diameter).recip() }
                } else {
                    Horoball::Disk { center: (&a * center + &b) / &j, diameter: diameter / (&j * &j) }
                }
            }
        }
    }
}

/// Hyperbolic distance between two horoballs, negative when they overlap
/// (the value is then `-ln` of the overlap ratio). Returns also whether the
/// interiors are disjoint, decided exactly.
pub fn horoball_gap(p: &Horoball, q: &Horoball) -> (f64, bool) {
    let ln = |r: &BigRational| rational_to_f64(r).ln();
    match (p, q) {
        (Horoball::HalfPlane { height: h1 }, Horoball::HalfPlane { height: h2 }) => {
            // Nested half-planes share their center; never separated.
            let _ = (h1, h2);
            (f64::NEG_INFINITY, false)
        }
        (Horoball::HalfPlane { height }, Horoball::Disk { diameter, .. })
        | (Horoball::Disk { diameter, .. }, Horoball::HalfPlane { height }) => {
            let ratio = height / diameter;
            (ln(&ratio), ratio >= BigRational::one())
        }
        (Horoball::Disk { center: x1, diameter: d1 }, Horoball::Disk { center: x2, diameter: d2 }) => {
            let dx = x1 - x2;
            let ratio = &dx * &dx / (d1 * d2);
            (ln(&ratio), ratio >= BigRational::one())
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HoroballSystem {
    pub q_bound: u64,
    /// Numerator window: cusps `p/q` with `|p| <= numerator_bound`.
    pub numerator_bound: u64,
    #[serde(with = "crate::arith::rational_text")]
    pub h0: BigRational,
    pub balls: Vec<Horoball>,
}

impl HoroballSystem {
    /// No horoballs, as for tree models.
    pub fn empty() -> Self {
        HoroballSystem { q_bound: 0, numerator_bound: 0, h0: BigRational::one(), balls: vec![] }
    }

    pub fn cusps(&self) -> Vec<Boundary> {
        self.balls.iter().map(Horoball::center).collect()
    }

    fn in_window(&self, c: &Boundary) -> bool {
        match c {
            Boundary::Infinity => true,
            _ => c.as_rational().is_some_and(|r| {
                r.denom() <= &BigInt::from(self.q_bound) && r.numer().abs() <= BigInt::from(self.numerator_bound)
            }),
        }
    }

    pub fn ball_at(&self, c: &Boundary) -> Option<&Horoball> {
        self.balls.iter().find(|b| b.center() == *c)
    }

    /// Nominal separation `2 ln h0` of a Ford system.
    pub fn nominal_separation(&self) -> f64 {
        2.0 * rational_to_f64(&self.h0).ln()
    }
}

/// Ford horoballs scaled by `h0`: `{y >= h0}` at infinity and a disk of
/// diameter `1/(h0 q^2)` at each reduced `p/q` with `q <= q_bound`, `|p| <= numerator_bound`.
pub fn ford_system(q_bound: u64, h0: &BigRational, numerator_bound: u64) -> Result<HoroballSystem> {
    if q_bound < 1 {
        return Err(Error::Precondition("Q must be at least 1".into()));
    }
    if h0 < &BigRational::one() {
        return Err(Error::SeparationViolation(format!("h0 = {h0} < 1 makes the Ford disks overlap the horoball at infinity")));
    }
    let mut balls = vec![Horoball::HalfPlane { height: h0.clone() }];
    let nb = numerator_bound as i64;
    for q in 1..=q_bound as i64 {
        for p in -nb..=nb {
            if p.gcd(&q) != 1 {
                continue;
            }
            let center = BigRational::new(p.into(), q.into());
            let diameter = (h0 * BigRational::from(BigInt::from(q * q))).recip();
            balls.push(Horoball::Disk { center, diameter });
        }
    }
    Ok(HoroballSystem { q_bound, numerator_bound, h0: h0.clone(), balls })
}

/// `h0` as an exact rational from a float.
pub fn rational_h0(h0: f64) -> Result<BigRational> {
    BigRational::from_float(h0).ok_or_else(|| Error::Precondition(format!("h0 = {h0} is not finite")))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairCheck {
    pub first: String,
    pub second: String,
    pub distance: f64,
    pub disjoint: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparationReport {
    pub pairs_checked: usize,
    pub all_disjoint: bool,
    /// `None` when fewer than two balls are listed.
    pub min_distance: Option<f64>,
    pub violations: Vec<PairCheck>,
}

/// Pairwise separation over all listed balls, decided in exact arithmetic.
pub fn separation_check(sys: &HoroballSystem) -> SeparationReport {
    let n = sys.balls.len();
    let rows: Vec<Vec<PairCheck>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| {
                    let (distance, disjoint) = horoball_gap(&sys.balls[i], &sys.balls[j]);
                    PairCheck {
                        first: sys.balls[i].center().to_string(),
                        second: sys.balls[j].center().to_string(),
                        distance,
                        disjoint,
                    }
                })
                .collect()
        })
        .collect();
    let mut report = SeparationReport { pairs_checked: 0, all_disjoint: true, min_distance: None, violations: vec![] };
    for pc in rows.into_iter().flatten() {
        report.pairs_checked += 1;
        report.min_distance = Some(report.min_distance.map_or(pc.distance, |m: f64| m.min(pc.distance)));
        if !pc.disjoint {
            report.all_disjoint = false;
            report.violations.push(pc);
        }
    }
    report
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvarianceFailure {
    pub generator: String,
    pub cusp: String,
    pub image: String,
    pub expected: String,
    pub got: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub checked: usize,
    pub passed: usize,
    /// Pairs whose image cusp falls outside the enumerated window.
    pub skipped: usize,
    pub failures: Vec<InvarianceFailure>,
}

impl InvarianceReport {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// For each generator and each listed cusp whose image is listed, checks
/// that the transported ball equals the ball at the image cusp exactly.
pub fn invariance_check(sys: &HoroballSystem, gens: &[(String, Mat2)]) -> InvarianceReport {
    let mut r = InvarianceReport { checked: 0, passed: 0, skipped: 0, failures: vec![] };
    for (name, m) in gens {
        for ball in &sys.balls {
            let img = ball.transport(m);
            let c = img.center();
            if !sys.in_window(&c) {
                r.skipped += 1;
                continue;
            }
            r.checked += 1;
            match sys.ball_at(&c) {
                Some(b) if *b == img => r.passed += 1,
                other => r.failures.push(InvarianceFailure {
                    generator: name.clone(),
                    cusp: ball.center().to_string(),
                    image: c.to_string(),
                    expected: other.map_or("missing".into(), |b| format!("{b:?}")),
                    got: format!("{img:?}"),
                }),
            }
        }
    }
    r
}

/// Membership in the truncated space: outside every listed open horoball.
pub fn truncated_contains(sys: &HoroballSystem, x: &Point) -> bool {
    match x {
        Point::Tree(_) => true,
        Point::H2(p) => !sys.balls.iter().any(|b| b.interior_contains(p)),
    }
}

/// The Ford system used by the pipeline, scaled by `h0 = exp(200 delta)`.
/// Its separation `2 ln h0 = 400 delta` exceeds the `200 delta` required.
pub fn pipeline_system(delta: f64, q_bound: u64) -> Result<HoroballSystem> {
    let h0 = rational_h0((200.0 * delta).exp().max(1.0))?;
    ford_system(q_bound, &h0, 4 * q_bound)
}

/// Basepoints for the census: a lattice in the standard fundamental domain of
/// PSL(2,Z) (five abscissae, ten log-spaced heights up to `h0`), intersected
/// with the truncated space. Presets of finite index in PSL(2,Z) use the
/// translates by coset representatives.
pub fn census_basepoints(preset: &Preset, sys: &HoroballSystem) -> Result<Vec<Point>> {
    if preset.model.is_tree() {
        return Ok(vec![Point::root()]);
    }
    let top = rational_to_f64(&sys.h0).max(2.0);
    let mut base = Vec::new();
    for i in 0..5 {
        let x = -0.5 + 0.25 * i as f64;
        let y0 = (1.0 - x * x).sqrt() + 1e-9;
        for j in 0..10 {
            let y = y0 * (top / y0).powf(j as f64 / 9.0);
            base.push(H2Point::new(x, y)?);
        }
    }
    let reps: Vec<Mat2> = match preset.kind {
        PresetKind::Sanov => {
            let s = Mat2::from_ints(0, -1, 1, 0)?;
            let t = Mat2::from_ints(1, 1, 0, 1)?;
            vec![Mat2::identity(), t.clone(), s.clone(), s.mul(&t), t.mul(&s), t.mul(&s).mul(&t)]
        }
        _ => vec![Mat2::identity()],
    };
    let mut pts = Vec::new();
    for m in &reps {
        let f = Isometry::Mobius(m.clone()).mobius()?;
        for p in &base {
            let q = Point::H2(f.apply_point(p));
            if truncated_contains(sys, &q) {
                pts.push(q);
            }
        }
    }
    Ok(pts)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct K1Census {
    pub k1: u64,
    pub certified: bool,
    pub radius: usize,
    pub ball_size: usize,
    pub basepoints: usize,
    pub threshold: f64,
    /// Largest count and the basepoint attaining it.
    pub max_count: u64,
    pub argmax: (f64, f64),
}

/// Stops growing the census ball once it holds this many elements; the
/// result is then reported as uncertified with the partial value.
pub const CENSUS_BUDGET: usize = 2500;

/// Census behind `k1`: one more than the largest number of elements of the
/// word ball of radius `cap` moving a sampled basepoint by at most
/// `threshold` (negative thresholds count as zero). Certified when every
/// element of the outermost sphere moves every basepoint farther than
/// `threshold + 2 diam(sample)`.
pub fn k1_census(preset: &Preset, sys: &HoroballSystem, threshold: f64, cap: usize) -> Result<K1Census> {
    let threshold = threshold.max(0.0);
    let pts = census_basepoints(preset, sys)?;
    let gens = preset.generators();
    let spheres = ball_spheres(&gens, cap, CENSUS_BUDGET)?;
    let radius = spheres.len() - 1;
    let elements: Vec<&GroupElement> = spheres.iter().flatten().collect();
    let maps: Vec<Option<crate::geometry::h2::Mobius>> = elements.iter().map(|g| g.iso.mobius().ok()).collect();

    let counts: Vec<u64> = pts
        .par_iter()
        .map(|x| {
            elements
                .iter()
                .zip(&maps)
                .filter(|(g, m)| {
                    let d = match (m, x) {
                        (Some(m), Point::H2(p)) => p.distance(&m.apply_point(p)),
                        _ => crate::isometry::displacement(&g.iso, x).unwrap_or(f64::INFINITY),
                    };
                    d <= threshold
                })
                .count() as u64
        })
        .collect();
    let (imax, &max_count) = counts.iter().enumerate().max_by_key(|(_, c)| **c).expect("nonempty sample");
    let argmax = match &pts[imax] {
        Point::H2(p) => (p.x, p.y),
        Point::Tree(_) => (0.0, 0.0),
    };

    let diam = pts
        .iter()
        .flat_map(|p| pts.iter().map(move |q| crate::geometry::distance(p, q).unwrap_or(0.0)))
        .fold(0.0, f64::max);
    let outer = spheres.last().expect("ball has a sphere");
    let certified = radius == cap
        && !outer.is_empty()
        && outer.iter().all(|g| {
            pts.iter().all(|x| crate::isometry::displacement(&g.iso, x).is_ok_and(|d| d > threshold + 2.0 * diam))
        });
    // A finite group is exhausted once a sphere comes back empty.
    let exhausted = outer.is_empty();
    Ok(K1Census {
        k1: max_count + 1,
        certified: certified || exhausted,
        radius,
        ball_size: elements.len(),
        basepoints: pts.len(),
        threshold,
        max_count,
        argmax,
    })
}

/// `k1` with the census certification enforced.
pub fn compute_k1(preset: &Preset, sys: &HoroballSystem, threshold: f64, cap: usize) -> Result<u64> {
    let c = k1_census(preset, sys, threshold, cap)?;
    if !c.certified {
        return Err(Error::K1Uncertified { partial: c.k1, cap });
    }
    Ok(c.k1)
}

/// Nearest parameter to 0, scanning at step `delta` over a window of
/// `500 delta` (at least 500 steps of 0.01 when `delta` vanishes), of a point
/// of the geodesic lying in the truncated space.
pub fn axis_point_in_truncated(
    line: &crate::geometry::GeodesicLine,
    sys: &HoroballSystem,
    delta: f64,
) -> Option<f64> {
    let step = if delta > 0.0 { delta } else { 0.01 };
    let n = 250;
    (0..=n).flat_map(|k| [k as f64 * step, -(k as f64) * step]).find(|&t| truncated_contains(sys, &line.point_at(t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn busemann_at_infinity() {
        let e2 = std::f64::consts::E.powi(2);
        assert!((busemann(&Boundary::Infinity, &H2Point::new(0.0, e2).unwrap()).unwrap() + 2.0).abs() < 1e-12);
        assert_eq!(busemann(&Boundary::Infinity, &H2Point::new(7.0, 1.0).unwrap()).unwrap(), 0.0);
        assert!(matches!(
            busemann(&Boundary::Real(0.3), &H2Point::new(0.0, 1.0).unwrap()),
            Err(Error::UnsupportedCenter(_))
        ));
    }

    #[test]
    fn busemann_at_rational_center_decreases_toward_it() {
        let c = Boundary::rational(q(2, 3));
        let near = busemann(&c, &H2Point::new(2.0 / 3.0, 0.01).unwrap()).unwrap();
        let nearer = busemann(&c, &H2Point::new(2.0 / 3.0, 0.001).unwrap()).unwrap();
        // Moving toward the center along the vertical geodesic lowers it by the distance.
        assert!((near - nearer - 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn ford_tangency_at_h0_one() {
        let sys = ford_system(1, &q(1, 1), 3).unwrap();
        let rep = separation_check(&sys);
        assert!(rep.all_disjoint);
        assert!(rep.min_distance.unwrap().abs() < 1e-12);
    }

    #[test]
    fn ford_separation_scales_with_h0() {
        let sys = ford_system(2, &q(4, 1), 4).unwrap();
        let rep = separation_check(&sys);
        assert!(rep.all_disjoint);
        assert!((rep.min_distance.unwrap() - 16f64.ln()).abs() < 1e-12);
        let (d, ok) = horoball_gap(&sys.balls[0], sys.ball_at(&Boundary::integer(0)).unwrap());
        assert!(ok && (d - 16f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn h0_below_one_is_rejected() {
        assert!(matches!(ford_system(2, &q(1, 2), 2), Err(Error::SeparationViolation(_))));
    }

    #[test]
    fn generators_permute_ford_balls() {
        let sys = ford_system(3, &q(2, 1), 6).unwrap();
        let gens = vec![
            ("S".to_string(), Mat2::from_ints(0, -1, 1, 0).unwrap()),
            ("T".to_string(), Mat2::from_ints(1, 1, 0, 1).unwrap()),
        ];
        let r = invariance_check(&sys, &gens);
        assert!(r.all_passed(), "{:?}", r.failures);
        assert!(r.checked > 0 && r.skipped > 0);
        let s = Mat2::from_ints(0, -1, 1, 0).unwrap();
        assert_eq!(sys.ball_at(&Boundary::integer(0)).unwrap().transport(&s), sys.balls[0]);
    }

    #[test]
    fn truncated_membership() {
        let sys = ford_system(1, &q(2, 1), 3).unwrap();
        assert!(truncated_contains(&sys, &Point::h2(0.5, 1.0).unwrap()));
        assert!(!truncated_contains(&sys, &Point::h2(0.0, 3.0).unwrap()));
        assert!(!truncated_contains(&sys, &Point::h2(1.0, 0.2).unwrap()));
        assert!(truncated_contains(&HoroballSystem::empty(), &Point::root()));
    }

    #[test]
    fn k1_for_free_group_and_negative_threshold() {
        let p = Preset::free(2).unwrap();
        let sys = HoroballSystem::empty();
        assert_eq!(compute_k1(&p, &sys, 0.0, 3).unwrap(), 2);
        assert_eq!(compute_k1(&p, &sys, -5.0, 3).unwrap(), 2);
    }
}
