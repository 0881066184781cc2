//! The free pair `g1 = s^(10 k1)`, `g2 = gamma g1 gamma^-1`, its ping-pong
//! table, the geometric checks of the table, and an exact word oracle.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{Mat2, ModMat};
use crate::error::{Error, Result};
use crate::geometry::h2::{H2Geodesic, PARAM_SATURATION};
use crate::geometry::tree::{letter, FreeWord, TreePath, TreeSeq};
use crate::geometry::{self, GeodesicLine, IdealPoint, Point, SpaceModel};
use crate::isometry::{classify, GroupElement, Isometry, Kind};

/// Primes just below `2^61` used for the modular word oracle.
pub const ORACLE_PRIMES: [u64; 3] = [2305843009213693951, 2305843009213693921, 2305843009213693907];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dichotomy {
    Same,
    Disjoint,
}

/// Compares the fixed pair of `g` with its image under `gamma`, exactly.
pub fn fixed_point_dichotomy(g: &GroupElement, gamma: &GroupElement) -> Result<Dichotomy> {
    let c = classify(&g.iso);
    if c.kind != Kind::Hyperbolic {
        return Err(Error::NotHyperbolic { kind: c.kind.to_string() });
    }
    let imgs = c.fixed_points.iter().map(|p| gamma.iso.apply_ideal(p)).collect::<Result<Vec<_>>>()?;
    let shared = imgs.iter().filter(|p| c.fixed_points.contains(p)).count();
    match shared {
        0 => Ok(Dichotomy::Disjoint),
        2 => Ok(Dichotomy::Same),
        _ => Err(Error::DichotomyViolation("the conjugator fixes exactly one endpoint of the axis".into())),
    }
}

/// `gamma(line)`, keeping the parameterization: `gamma(line(t)) = image(t)`.
pub fn transport_line(line: &GeodesicLine, gamma: &Isometry) -> Result<GeodesicLine> {
    match (line, gamma) {
        (GeodesicLine::Tree(p), Isometry::Tree(w)) => Ok(GeodesicLine::Tree(TreePath {
            base: w.mul(&p.base),
            forward: p.forward.clone(),
            backward: p.backward.clone(),
        })),
        (GeodesicLine::H2(h), g) => {
            let image = |b: &crate::arith::Boundary| -> Result<crate::arith::Boundary> {
                match g.apply_ideal(&IdealPoint::H2(b.clone()))? {
                    IdealPoint::H2(x) => Ok(x),
                    IdealPoint::Tree(_) => Err(Error::ModelMismatch("tree ideal point".into())),
                }
            };
            Ok(GeodesicLine::H2(H2Geodesic::from_frame(
                g.mobius()?.compose(&h.frame),
                h.shift,
                h.lo,
                h.hi,
                image(&h.minus)?,
                image(&h.plus)?,
            )))
        }
        _ => Err(Error::ModelMismatch("line and isometry belong to different models".into())),
    }
}

/// Fermi coordinates on `to` of the point with Fermi coordinates `(t, r)` on
/// `from`. Parameters past the saturation bound are treated as the ideal end.
/// Far along `from` the map is evaluated with `e^t` scaled out, and the
/// height in log space.
pub fn cross_fermi(from: &H2Geodesic, to: &H2Geodesic, t: f64, r: f64) -> (f64, f64) {
    let m = to.frame.inverse().compose(&from.frame);
    let [a, b, c, d] = m.0;
    let tt = (t + from.shift).clamp(-PARAM_SATURATION, PARAM_SATURATION);
    let u = Complex64::new(r.tanh(), 1.0 / r.cosh());
    let ln_sech = -(r.abs() + (1.0 + (-2.0 * r.abs()).exp()).ln() - std::f64::consts::LN_2);
    let (z, ln_im) = if tt >= 0.0 {
        let e = (-tt).exp();
        let den = u * c + d * e;
        ((u * a + b * e) / den, m.1 - tt + ln_sech - 2.0 * den.norm().ln())
    } else {
        let w = u * tt.exp();
        let den = w * c + d;
        ((w * a + b) / den, m.1 + tt + ln_sech - 2.0 * den.norm().ln())
    };
    let im = ln_im.exp();
    let ln_abs = if im > 0.0 { z.re.hypot(im).ln() } else if z.re != 0.0 { z.re.abs().ln() } else { ln_im };
    let ratio = z.re / im;
    let off = if ratio.is_finite() {
        ratio.asinh()
    } else {
        z.re.signum() * ((2.0 * z.re.abs()).ln() - ln_im)
    };
    (ln_abs - to.shift, off)
}

fn ensure_complete(l: &GeodesicLine) -> Result<()> {
    match l.endpoints() {
        (Some(_), Some(_)) => Ok(()),
        _ => Err(Error::Precondition("axes must be complete lines".into())),
    }
}

fn disjoint_endpoints(a1: &GeodesicLine, a2: &GeodesicLine) -> Result<()> {
    ensure_complete(a1)?;
    ensure_complete(a2)?;
    let (Some(m1), Some(p1)) = a1.endpoints() else { unreachable!() };
    let (Some(m2), Some(p2)) = a2.endpoints() else { unreachable!() };
    let close = |a: &IdealPoint, b: &IdealPoint| match (a, b) {
        (IdealPoint::H2(x), IdealPoint::H2(y)) => {
            let (x, y) = (x.to_f64(), y.to_f64());
            x == y || (x.is_finite() && y.is_finite() && (x - y).abs() <= 1e-12 * (1.0 + x.abs()))
        }
        _ => a == b,
    };
    if close(&m1, &m2) || close(&m1, &p2) || close(&p1, &m2) || close(&p1, &p2) {
        return Err(Error::Precondition("axes share an ideal endpoint".into()));
    }
    Ok(())
}

/// Parameter on `to` of the projection of `from(t)`.
fn project_param(from: &GeodesicLine, to: &GeodesicLine, t: f64) -> Result<f64> {
    match (from, to) {
        (GeodesicLine::H2(f), GeodesicLine::H2(g)) => Ok(cross_fermi(f, g, t, 0.0).0),
        _ => Ok(geometry::project(to, &from.point_at(t))?.param),
    }
}

/// A number of edges past which both ends of a tree line have settled into
/// their periodic parts.
fn tree_reach(p: &TreePath) -> i64 {
    let per = |s: &TreeSeq| match s {
        TreeSeq::Ray(r) => r.prefix().len() + r.period().len(),
        TreeSeq::Finite(v) => v.len(),
    };
    (p.base.len() + per(&p.forward) + per(&p.backward)) as i64
}

/// Nearest-point data between two complete lines: the gap, a parameter on
/// each line realizing it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AxisGap {
    pub distance: f64,
    pub t1: f64,
    pub t2: f64,
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    (a + b) / 2.0
}

/// Parameters on `a1` of the feet of the ideal endpoints of `a2`.
fn endpoint_feet(a1: &H2Geodesic, a2: &H2Geodesic) -> (f64, f64) {
    let inv = a1.frame.inverse();
    let foot = |b: &crate::arith::Boundary| inv.on_boundary(b.to_f64()).abs().ln() - a1.shift;
    let (u, v) = (foot(&a2.minus), foot(&a2.plus));
    (u.min(v), u.max(v))
}

pub fn axis_gap(a1: &GeodesicLine, a2: &GeodesicLine) -> Result<AxisGap> {
    disjoint_endpoints(a1, a2)?;
    match (a1, a2) {
        (GeodesicLine::H2(h1), GeodesicLine::H2(h2)) => {
            let (lo, hi) = endpoint_feet(h1, h2);
            let lo = lo.max(-PARAM_SATURATION) - 1.0;
            let hi = hi.min(PARAM_SATURATION) + 1.0;
            let dist = |t: f64| cross_fermi(h1, h2, t, 0.0).1.abs();
            let t1 = golden_min(dist, lo, hi);
            let (t2, r) = cross_fermi(h1, h2, t1, 0.0);
            Ok(AxisGap { distance: r.abs(), t1, t2 })
        }
        (GeodesicLine::Tree(p1), GeodesicLine::Tree(p2)) => {
            let m = 2 * (tree_reach(p1) + tree_reach(p2)) + 8;
            let (u, _) = p1.project(&p2.vertex_at(-m));
            let (v, _) = p1.project(&p2.vertex_at(m));
            let t1 = u.min(v);
            let (t2, d) = p2.project(&p1.vertex_at(t1));
            Ok(AxisGap { distance: d as f64, t1: t1 as f64, t2: t2 as f64 })
        }
        _ => Err(Error::ModelMismatch("axes belong to different models".into())),
    }
}

/// Where `a1` comes within `2 delta` of `a2`.
#[derive(Clone, Debug)]
pub struct Overlap {
    pub y: Point,
    pub z: Point,
    pub a: f64,
    pub b: f64,
}

/// The parameters `a <= b` bounding the set where `a1` is `2 delta`-close to
/// `a2`, or `None` when the lines stay farther apart.
pub fn overlap_segment(a1: &GeodesicLine, a2: &GeodesicLine, model: &SpaceModel) -> Result<Option<Overlap>> {
    let gap = axis_gap(a1, a2)?;
    let level = 2.0 * model.delta;
    if gap.distance > level + model.tolerance {
        return Ok(None);
    }
    let (a, b) = match (a1, a2) {
        (GeodesicLine::H2(h1), GeodesicLine::H2(h2)) => {
            let dist = |t: f64| cross_fermi(h1, h2, t, 0.0).1.abs();
            let level = level.max(model.tolerance);
            let edge = |dir: f64| {
                let mut step = 1.0;
                while dist(gap.t1 + dir * step) <= level && step < 2.0 * PARAM_SATURATION {
                    step *= 2.0;
                }
                let (mut inside, mut outside) = (gap.t1, gap.t1 + dir * step);
                for _ in 0..200 {
                    let mid = (inside + outside) / 2.0;
                    if dist(mid) <= level {
                        inside = mid;
                    } else {
                        outside = mid;
                    }
                }
                inside
            };
            (edge(-1.0), edge(1.0))
        }
        (GeodesicLine::Tree(p1), GeodesicLine::Tree(p2)) => {
            let m = 2 * (tree_reach(p1) + tree_reach(p2)) + 8;
            let (u, _) = p1.project(&p2.vertex_at(-m));
            let (v, _) = p1.project(&p2.vertex_at(m));
            (u.min(v) as f64, u.max(v) as f64)
        }
        _ => unreachable!("models checked by axis_gap"),
    };
    Ok(Some(Overlap { y: a1.point_at(a), z: a1.point_at(b), a, b }))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoAxReport {
    pub skipped: Option<String>,
    pub overlap_length: f64,
    pub bound: f64,
    pub passed: bool,
}

/// The overlap of the axes of `g` and `gamma g gamma^-1` against
/// `3 k1 tau(g)`.
pub fn twoax_bound_check(g: &GroupElement, gamma: &GroupElement, k1: u64, model: &SpaceModel) -> Result<TwoAxReport> {
    let skip = |why: String| TwoAxReport { skipped: Some(why), overlap_length: 0.0, bound: 0.0, passed: true };
    let c = classify(&g.iso);
    if c.kind != Kind::Hyperbolic {
        return Ok(skip(format!("g is {}", c.kind)));
    }
    if c.translation_length < 200.0 * model.delta - model.tolerance {
        return Ok(skip(format!("axis displacement {:.4} below 200 delta", c.translation_length)));
    }
    if fixed_point_dichotomy(g, gamma)? == Dichotomy::Same {
        return Ok(skip("the conjugator preserves the axis".into()));
    }
    let a1 = crate::isometry::axis(&g.iso)?;
    let a2 = transport_line(&a1, &gamma.iso)?;
    let len = overlap_segment(&a1, &a2, model)?.map_or(0.0, |o| o.b - o.a);
    let bound = 3.0 * k1 as f64 * c.translation_length;
    Ok(TwoAxReport { skipped: None, overlap_length: len, bound, passed: len <= bound + model.tolerance })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn around(lo: f64, hi: f64, r: f64) -> Self {
        Interval { lo: lo.min(hi) - r, hi: lo.max(hi) + r }
    }

    pub fn contains(&self, t: f64, tol: f64) -> bool {
        t >= self.lo - tol && t <= self.hi + tol
    }

    pub fn shrink(&self, r: f64) -> Option<Interval> {
        (self.hi - self.lo >= 2.0 * r).then_some(Interval { lo: self.lo + r, hi: self.hi - r })
    }

    /// Distance from `t` to the interval; zero inside.
    pub fn gap(&self, t: f64) -> f64 {
        (self.lo - t).max(t - self.hi).max(0.0)
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum TableCase {
    /// The axes come `2 delta`-close over `[a, b]` on `A1`; `a2`, `b2` are
    /// the projections of `y`, `z` to `A2`.
    Overlap { a: f64, b: f64, a2: f64, b2: f64 },
    Far { distance: f64, t1: f64, t2: f64 },
}

#[derive(Clone, Debug)]
pub struct PingPongTable {
    pub model: SpaceModel,
    pub s: GroupElement,
    pub gamma: GroupElement,
    pub k1: u64,
    pub g1: GroupElement,
    pub g2: GroupElement,
    pub axes: [GeodesicLine; 2],
    pub b: [Interval; 2],
    /// Translation length of `s`.
    pub s_translation: f64,
    /// Translation of `g_i` along `A_i`, `10 k1 tau(s)`.
    pub translation: f64,
    pub case: TableCase,
}

/// Builds `g1 = s^(10 k1)`, `g2 = gamma g1 gamma^-1` with axes
/// `A1 = axis(s)`, `A2 = gamma(A1)` and the segments `B_i`.
pub fn build_table(s: &GroupElement, gamma: &GroupElement, k1: u64, model: &SpaceModel) -> Result<PingPongTable> {
    if k1 == 0 {
        return Err(Error::Precondition("k1 must be positive".into()));
    }
    let c = classify(&s.iso);
    if c.kind != Kind::Hyperbolic {
        return Err(Error::NotHyperbolic { kind: c.kind.to_string() });
    }
    let a1 = crate::isometry::axis(&s.iso)?;
    let reach = (200.0 * model.delta - model.tolerance).max(0.0);
    if c.translation_length < reach {
        return Err(Error::HypothesisNotSatisfied(format!(
            "axis displacement {:.4} of s is below 200 delta = {}",
            c.translation_length,
            200.0 * model.delta
        )));
    }
    if fixed_point_dichotomy(s, gamma)? == Dichotomy::Same {
        return Err(Error::VirtuallyCyclic);
    }
    let a2 = transport_line(&a1, &gamma.iso)?;
    let g1 = s.pow(10 * k1 as i64);
    let g2 = g1.conjugate_by(gamma)?;
    let d = model.delta;
    let (case, b) = match overlap_segment(&a1, &a2, model)? {
        Some(o) => {
            let a2p = project_param(&a1, &a2, o.a)?;
            let b2p = project_param(&a1, &a2, o.b)?;
            (
                TableCase::Overlap { a: o.a, b: o.b, a2: a2p, b2: b2p },
                [Interval::around(o.a, o.b, 20.0 * d), Interval::around(a2p, b2p, 20.0 * d)],
            )
        }
        None => {
            let g = axis_gap(&a1, &a2)?;
            (
                TableCase::Far { distance: g.distance, t1: g.t1, t2: g.t2 },
                [Interval::around(g.t1, g.t1, 10.0 * d), Interval::around(g.t2, g.t2, 10.0 * d)],
            )
        }
    };
    Ok(PingPongTable {
        model: *model,
        s: s.clone(),
        gamma: gamma.clone(),
        k1,
        g1,
        g2,
        axes: [a1, a2],
        b,
        s_translation: c.translation_length,
        translation: 10.0 * k1 as f64 * c.translation_length,
        case,
    })
}

/// A point of the space recorded by its position relative to axis `A_i`:
/// Fermi coordinates in the half-plane, an axis vertex and a hanging branch
/// in the tree.
#[derive(Clone, Debug)]
enum Sample {
    H2 { t: f64, r: f64 },
    Tree { t: i64, branch: FreeWord },
}

fn branch_letters(rank: usize) -> Vec<u8> {
    (0..rank).flat_map(|g| [letter(g, 1), letter(g, -1)]).collect()
}

impl PingPongTable {
    fn rank(&self) -> usize {
        match self.model.kind {
            crate::geometry::ModelKind::Tree { valence } => valence / 2,
            _ => 0,
        }
    }

    /// Points whose projection to `A_i` lies in `B_i`: on the segment and up
    /// to `50 delta` off it (hanging branches of depth 1 to 3 in the tree).
    fn fiber_samples(&self, i: usize) -> Vec<Sample> {
        let b = self.b[i];
        let d = self.model.delta;
        match &self.axes[i] {
            GeodesicLine::H2(_) => {
                let n = ((b.length() / d.max(1e-9)).ceil() as usize).clamp(4, 2000);
                let offsets: Vec<f64> = if d > 0.0 {
                    [0.0, 1.0, -1.0, 2.0, -2.0, 3.0, -3.0].iter().map(|k| k * 50.0 * d / 3.0).collect()
                } else {
                    vec![0.0]
                };
                (0..=n)
                    .flat_map(|k| {
                        let t = b.lo + b.length() * k as f64 / n as f64;
                        offsets.iter().map(move |&r| Sample::H2 { t, r })
                    })
                    .collect()
            }
            GeodesicLine::Tree(path) => {
                let letters = branch_letters(self.rank());
                let mut out = Vec::new();
                for t in b.lo.ceil() as i64..=b.hi.floor() as i64 {
                    out.push(Sample::Tree { t, branch: FreeWord::identity() });
                    let v = path.vertex_at(t);
                    for &l in &letters {
                        let mut br = FreeWord::from_letters([l]);
                        if path.project(&v.mul(&br)) != (t, 1) {
                            continue;
                        }
                        out.push(Sample::Tree { t, branch: br.clone() });
                        for depth in 2..=3u64 {
                            let next = letters.iter().map(|&m| {
                                let mut w = br.clone();
                                w.push(m);
                                w
                            });
                            match next.into_iter().find(|w| path.project(&v.mul(w)) == (t, depth)) {
                                Some(w) => {
                                    br = w;
                                    out.push(Sample::Tree { t, branch: br.clone() });
                                }
                                None => break,
                            }
                        }
                    }
                }
                out
            }
        }
    }

    fn g(&self, i: usize) -> &GroupElement {
        if i == 0 {
            &self.g1
        } else {
            &self.g2
        }
    }

    fn tree_point(&self, i: usize, t: i64, branch: &FreeWord) -> Result<FreeWord> {
        Ok(self.axes[i].as_tree()?.vertex_at(t).mul(branch))
    }

    /// `(p_i(g_i^n u), p_j(g_i^n u), p_j(g_i^n p_i(u)))` as parameters.
    fn moved_projections(&self, i: usize, u: &Sample, n: i64) -> Result<(f64, f64, f64)> {
        let j = 1 - i;
        match u {
            Sample::H2 { t, r } => {
                let (ai, aj) = (self.axes[i].as_h2()?, self.axes[j].as_h2()?);
                let t2 = t + n as f64 * self.translation;
                Ok((t2, cross_fermi(ai, aj, t2, *r).0, cross_fermi(ai, aj, t2, 0.0).0))
            }
            Sample::Tree { t, branch } => {
                let gn = match &self.g(i).iso {
                    Isometry::Tree(w) => w.pow(n),
                    _ => return Err(Error::ModelMismatch("tree table with a non-tree element".into())),
                };
                let moved = gn.mul(&self.tree_point(i, *t, branch)?);
                let foot = gn.mul(&self.tree_point(i, *t, &FreeWord::identity())?);
                let (pi, _) = self.axes[i].as_tree()?.project(&moved);
                let (pj, _) = self.axes[j].as_tree()?.project(&moved);
                let (pf, _) = self.axes[j].as_tree()?.project(&foot);
                Ok((pi as f64, pj as f64, pf as f64))
            }
        }
    }

    fn describe(&self, i: usize, u: &Sample) -> String {
        match u {
            Sample::H2 { t, r } => format!("A{} Fermi coordinates ({t:.6}, {r:.6})", i + 1),
            Sample::Tree { t, branch } => {
                format!("vertex {}", self.tree_point(i, *t, branch).map(|w| w.to_string()).unwrap_or_default())
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NestingWitness {
    /// Axis index, 1 or 2.
    pub axis: usize,
    pub n: i64,
    pub point: String,
    pub condition: String,
    pub projected: f64,
    pub interval: Interval,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NestingReport {
    pub n_range: i64,
    pub samples: usize,
    pub checks: usize,
    pub passed: bool,
    pub witness: Option<NestingWitness>,
    pub violations: usize,
    /// Largest observed `d(P(g^n u), P(g^n p(u)))` on the other axis.
    pub projection_spread_max: f64,
    pub projection_spread_ok: bool,
    /// Smallest distance of `p_i(g_i^n u)` from `B_i` for each `n > 0`.
    pub margins: Vec<(i64, f64)>,
    pub slope: f64,
    pub predicted_slope: f64,
    pub slope_ok: bool,
    pub sampled: bool,
}

/// Condition (2) of the ping-pong table on sampled fiber points, its
/// consequence `p_j(g_i^n u) in B_j`, and the `13 delta` bound on projection spread.
pub fn check_nesting(table: &PingPongTable, n_range: i64) -> Result<NestingReport> {
    if n_range < 1 {
        return Err(Error::Precondition("n_range must be at least 1".into()));
    }
    let tol = table.model.slack();
    let d = table.model.delta;
    let ns: Vec<i64> = (-n_range..=n_range).filter(|&n| n != 0).collect();
    let mut samples = 0;
    let mut checks = 0;
    let mut violations = 0;
    let mut witness: Option<NestingWitness> = None;
    let mut spread = 0f64;
    let mut margins: Vec<(i64, f64)> = (1..=n_range).map(|n| (n, f64::INFINITY)).collect();
    for i in 0..2 {
        let j = 1 - i;
        let us = table.fiber_samples(i);
        samples += us.len();
        let results: Vec<(usize, i64, (f64, f64, f64))> = us
            .par_iter()
            .enumerate()
            .flat_map_iter(|(k, _)| ns.iter().map(move |&n| (k, n)))
            .map(|(k, n)| table.moved_projections(i, &us[k], n).map(|r| (k, n, r)))
            .collect::<Result<_>>()?;
        for (k, n, (pi, pj, pf)) in results {
            checks += 1;
            let bi = table.b[i];
            let bj = table.b[j];
            let mut fail = |cond: &str, projected: f64, interval: Interval| {
                violations += 1;
                if witness.is_none() {
                    witness = Some(NestingWitness {
                        axis: i + 1,
                        n,
                        point: table.describe(i, &us[k]),
                        condition: cond.into(),
                        projected,
                        interval,
                    });
                }
            };
            let inside = pi > bi.lo + tol && pi < bi.hi - tol;
            if inside || (bi.length() <= tol && (pi - bi.lo).abs() <= tol) {
                fail("p_i(g_i^n u) lies in B_i", pi, bi);
            }
            if !bj.contains(pj, tol) {
                fail("p_j(g_i^n u) lies outside B_j", pj, bj);
            }
            spread = spread.max((pj - pf).abs());
            if n > 0 {
                let m = &mut margins[(n - 1) as usize].1;
                *m = m.min(bi.gap(pi));
            }
        }
    }
    let spread_ok = spread <= 13.0 * d + tol;
    let slope = if n_range >= 2 {
        (margins[n_range as usize - 1].1 - margins[0].1) / (n_range - 1) as f64
    } else {
        margins[0].1 + table.b[0].length().max(table.b[1].length())
    };
    let predicted = 10.0 * table.k1 as f64 * (table.s_translation - 4.0 * d);
    let slope_ok = predicted <= 0.0 || slope >= 0.8 * predicted;
    Ok(NestingReport {
        n_range,
        samples,
        checks,
        passed: violations == 0 && spread_ok,
        witness,
        violations,
        projection_spread_max: spread,
        projection_spread_ok: spread_ok,
        margins,
        slope,
        predicted_slope: predicted,
        slope_ok,
        sampled: !table.model.is_tree(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DisjointFailure {
    pub axis: usize,
    pub param: f64,
    pub projected: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DisjointReport {
    pub samples: usize,
    pub failures: usize,
    pub first_failure: Option<DisjointFailure>,
    /// The projections of both ideal ends land in the shrunk segment.
    pub tail_ok: bool,
    /// Smallest distance of a projection from the complement of the shrunk segment.
    pub worst_margin: f64,
    pub verified: bool,
}

/// Condition (1): every sampled point of `A_i - B_i` projects into `B_j`
/// shrunk by `6 delta`, over a `1000 delta` window, and so do the ideal ends.
pub fn check_disjoint(table: &PingPongTable) -> Result<DisjointReport> {
    let d = table.model.delta;
    let tol = table.model.slack();
    let tree = table.model.is_tree();
    let (step, half) = if tree { (1.0, 50.0f64.max(500.0 * d)) } else { (d.max(1e-3), 500.0 * d.max(1e-3)) };
    let mut samples = 0;
    let mut failures = 0;
    let mut first = None;
    let mut tail_ok = true;
    let mut worst = f64::INFINITY;
    for i in 0..2 {
        let j = 1 - i;
        let bi = table.b[i];
        let Some(target) = table.b[j].shrink(6.0 * d) else {
            failures += 1;
            tail_ok = false;
            first.get_or_insert(DisjointFailure { axis: i + 1, param: f64::NAN, projected: f64::NAN });
            continue;
        };
        let count = (half / step).round() as i64;
        let params: Vec<f64> = (1..=count)
            .flat_map(|k| [bi.lo - k as f64 * step, bi.hi + k as f64 * step])
            .filter(|&t| !bi.contains(t, 0.0))
            .collect();
        let projs: Vec<f64> = params
            .par_iter()
            .map(|&t| project_param(&table.axes[i], &table.axes[j], t))
            .collect::<Result<_>>()?;
        for (t, p) in params.iter().zip(&projs) {
            samples += 1;
            worst = worst.min(target.hi - p).min(p - target.lo);
            if !target.contains(*p, tol) {
                failures += 1;
                first.get_or_insert(DisjointFailure { axis: i + 1, param: *t, projected: *p });
            }
        }
        let far = match &table.axes[i] {
            GeodesicLine::Tree(p) => (4 * tree_reach(p)) as f64 + bi.hi.abs().max(bi.lo.abs()) + half,
            GeodesicLine::H2(_) => 2.0 * PARAM_SATURATION,
        };
        for end in [-far, far] {
            let p = project_param(&table.axes[i], &table.axes[j], end)?;
            if !target.contains(p, tol) {
                tail_ok = false;
            }
        }
    }
    Ok(DisjointReport {
        samples,
        failures,
        first_failure: first,
        tail_ok,
        worst_margin: worst,
        verified: failures == 0 && tail_ok,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleReport {
    pub max_len: usize,
    pub words_checked: u64,
    /// `exact` or `modular` (residues modulo three primes near `2^61`,
    /// with exact confirmation of any candidate relation).
    pub method: String,
    pub passed: bool,
}

/// Letters `g1, g1^-1, g2, g2^-1` as indices `0..4`; `i ^ 1` inverts.
fn letter_name(l: u8) -> &'static str {
    ["g1", "g1^-1", "g2", "g2^-1"][l as usize]
}

pub fn format_oracle_word(w: &[u8]) -> String {
    w.iter().map(|&l| letter_name(l)).collect::<Vec<_>>().join("*")
}

#[derive(Clone)]
enum OracleValue {
    Exact(Isometry),
    Modular(Vec<ModMat>),
}

fn huge(iso: &Isometry) -> Option<&Mat2> {
    match iso {
        Isometry::Mobius(m) if m.entries().iter().map(|e| e.bits()).max().unwrap_or(0) > 256 => Some(m),
        _ => None,
    }
}

/// Every freely reduced word of length `1..=max_len` in `g1^±1, g2^±1`,
/// shortest first and lexicographically within a length, evaluated exactly.
/// The first word equal to the identity is returned as `RelationFound`.
pub fn algebraic_free_oracle(g1: &GroupElement, g2: &GroupElement, max_len: usize) -> Result<OracleReport> {
    let gens = [g1.iso.clone(), g1.iso.inverse(), g2.iso.clone(), g2.iso.inverse()];
    let modular = huge(&g1.iso).is_some() || huge(&g2.iso).is_some();
    let letters: Vec<OracleValue> = if modular {
        let mut out = Vec::new();
        for g in &gens {
            let m = g.as_matrix().ok_or_else(|| Error::ModelMismatch("modular oracle needs matrices".into()))?;
            let rs = ORACLE_PRIMES
                .iter()
                .map(|&p| m.residue(p))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Precondition("oracle prime divides a denominator".into()))?;
            out.push(OracleValue::Modular(rs));
        }
        out
    } else {
        gens.iter().cloned().map(OracleValue::Exact).collect()
    };
    let step = |v: &OracleValue, l: u8| -> Result<OracleValue> {
        Ok(match (v, &letters[l as usize]) {
            (OracleValue::Exact(a), OracleValue::Exact(b)) => OracleValue::Exact(a.compose(b)?),
            (OracleValue::Modular(a), OracleValue::Modular(b)) => {
                OracleValue::Modular(a.iter().zip(b).map(|(x, y)| x.mul(y)).collect())
            }
            _ => unreachable!("one representation per run"),
        })
    };
    let is_relation = |w: &[u8], v: &OracleValue| -> Result<bool> {
        match v {
            OracleValue::Exact(x) => Ok(x.is_identity()),
            OracleValue::Modular(rs) => {
                if !rs.iter().all(ModMat::is_pm_identity) {
                    return Ok(false);
                }
                let mut acc = gens[0].identity_like();
                for &l in w {
                    acc = acc.compose(&gens[l as usize])?;
                }
                Ok(acc.is_identity())
            }
        }
    };
    let mut level: Vec<(Vec<u8>, OracleValue)> = (0..4u8).map(|l| (vec![l], letters[l as usize].clone())).collect();
    let mut checked = 0u64;
    for len in 1..=max_len {
        if len > 1 {
            level = level
                .par_iter()
                .flat_map_iter(|(w, v)| {
                    let last = *w.last().expect("nonempty word");
                    (0..4u8).filter(move |&l| l != last ^ 1).map(move |l| {
                        let mut w2 = w.clone();
                        w2.push(l);
                        step(v, l).map(|v2| (w2, v2))
                    })
                })
                .collect::<Result<_>>()?;
        }
        checked += level.len() as u64;
        let hit = level
            .par_iter()
            .map(|(w, v)| is_relation(w, v))
            .collect::<Result<Vec<bool>>>()?
            .iter()
            .position(|&b| b);
        if let Some(k) = hit {
            return Err(Error::RelationFound { word: format_oracle_word(&level[k].0) });
        }
    }
    Ok(OracleReport {
        max_len,
        words_checked: checked,
        method: if modular { "modular".into() } else { "exact".into() },
        passed: true,
    })
}

/// Number of freely reduced nonempty words of length at most `n` in two letters and their inverses.
pub fn reduced_word_count(n: usize) -> u64 {
    (1..=n as u32).map(|k| 4 * 3u64.pow(k - 1)).sum()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FreeCertificate {
    pub g1: String,
    pub g2: String,
    pub k1: u64,
    /// Word length of `g2` in the generators, `10 k1 |s| + 2 |gamma|`.
    pub word_length_bound: u64,
    pub g1_word_length: u64,
    pub table_case: TableCase,
    pub b1: Interval,
    pub b2: Interval,
    pub nesting: NestingReport,
    pub disjoint: DisjointReport,
    pub oracle: OracleReport,
    pub caveats: Vec<String>,
}

/// Word length the oracle uses by default.
pub const ORACLE_LENGTH: usize = 8;

/// Builds the table, runs both geometric checks and the word oracle. The
/// oracle gates the certificate; geometric shortfalls become caveats.
pub fn certify_free(
    s: &GroupElement,
    gamma: &GroupElement,
    k1: u64,
    model: &SpaceModel,
    oracle_len: usize,
    display: &dyn Fn(&crate::word::Word) -> String,
) -> Result<FreeCertificate> {
    let table = build_table(s, gamma, k1, model)?;
    let nesting = check_nesting(&table, 5)?;
    let disjoint = check_disjoint(&table)?;
    let oracle = algebraic_free_oracle(&table.g1, &table.g2, oracle_len)?;
    let mut caveats = Vec::new();
    if !model.is_tree() {
        caveats.push("geometric conditions checked on sampled windows".to_string());
    }
    if !nesting.passed {
        caveats.push("nesting check failed on samples".into());
    }
    if !nesting.slope_ok {
        caveats.push("nesting margins grow slower than predicted".into());
    }
    if !disjoint.verified {
        caveats.push("disjointness unverified; certificate rests on the word oracle".into());
    }
    Ok(FreeCertificate {
        g1: display(&table.g1.word),
        g2: display(&table.g2.word),
        k1,
        word_length_bound: table.g2.word_length(),
        g1_word_length: table.g1.word_length(),
        table_case: table.case.clone(),
        b1: table.b[0],
        b2: table.b[1],
        nesting,
        disjoint,
        oracle,
        caveats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset::Preset;

    #[test]
    fn dichotomy_cases() {
        let f = Preset::free(2).unwrap();
        let a = f.parse("a").unwrap();
        assert_eq!(fixed_point_dichotomy(&a, &f.parse("aa").unwrap()).unwrap(), Dichotomy::Same);
        assert_eq!(fixed_point_dichotomy(&a, &f.parse("b").unwrap()).unwrap(), Dichotomy::Disjoint);
        let m = Preset::modular();
        let g = m.parse("TTST").unwrap();
        assert_eq!(fixed_point_dichotomy(&g, &m.parse("T").unwrap()).unwrap(), Dichotomy::Disjoint);
        assert!(matches!(fixed_point_dichotomy(&m.parse("T").unwrap(), &g), Err(Error::NotHyperbolic { .. })));
    }

    #[test]
    fn tree_axes_are_one_apart() {
        let f = Preset::free(2).unwrap();
        let a1 = crate::isometry::axis(&f.parse("a").unwrap().iso).unwrap();
        let a2 = transport_line(&a1, &f.parse("b").unwrap().iso).unwrap();
        assert!(overlap_segment(&a1, &a2, &f.model).unwrap().is_none());
        assert_eq!(axis_gap(&a1, &a2).unwrap().distance, 1.0);
        assert!(matches!(overlap_segment(&a1, &a1, &f.model), Err(Error::Precondition(_))));
        // Axes of `a` and `b` cross at the root only.
        let b1 = crate::isometry::axis(&f.parse("b").unwrap().iso).unwrap();
        let o = overlap_segment(&a1, &b1, &f.model).unwrap().unwrap();
        assert_eq!((o.a, o.b), (0.0, 0.0));
    }

    #[test]
    fn crossing_lines_in_the_half_plane() {
        use crate::arith::Boundary;
        let model = SpaceModel::h2();
        let v = GeodesicLine::H2(H2Geodesic::line(Boundary::integer(0), Boundary::Infinity).unwrap());
        let c = GeodesicLine::H2(H2Geodesic::line(Boundary::integer(-1), Boundary::integer(1)).unwrap());
        let o = overlap_segment(&v, &c, &model).unwrap().unwrap();
        assert!(o.a < 0.0 && o.b > 0.0);
        // The lines are perpendicular at i, so i e^t is at distance |t| from the circle.
        assert!((o.b - 2.0).abs() < 1e-6 && (o.a + 2.0).abs() < 1e-6);
    }

    #[test]
    fn tree_table_and_checks() {
        let f = Preset::free(2).unwrap();
        let t = build_table(&f.parse("a").unwrap(), &f.parse("b").unwrap(), 2, &f.model).unwrap();
        assert_eq!(f.display(&t.g1.word), "a^20");
        assert_eq!(t.b[0].length(), 0.0);
        let n = check_nesting(&t, 5).unwrap();
        assert!(n.passed, "{n:?}");
        assert_eq!(n.margins[0].1, 20.0);
        assert!(n.slope_ok);
        assert!(check_disjoint(&t).unwrap().verified);
    }

    #[test]
    fn oracle_examples() {
        let f = Preset::free(2).unwrap();
        let r = algebraic_free_oracle(&f.generator(0), &f.generator(1), 6).unwrap();
        assert_eq!(r.words_checked, reduced_word_count(6));
        let m = Preset::modular();
        match algebraic_free_oracle(&m.parse("T").unwrap(), &m.parse("T^2").unwrap(), 4) {
            Err(Error::RelationFound { word }) => assert_eq!(word, "g1*g1*g2^-1"),
            other => panic!("expected a relation, got {other:?}"),
        }
    }
}
