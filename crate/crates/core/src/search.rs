//! Word balls, the search for short hyperbolic elements, and the desk-scale
//! constants of the growth argument.

use std::collections::HashSet;
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Point, SpaceModel};
use crate::horoballs::{self, HoroballSystem};
use crate::isometry::{self, classify, GroupElement, Isometry, Kind};
use crate::preset::Preset;

/// Default ceiling on the number of enumerated elements.
pub const DEFAULT_CAP: usize = 10_000_000;

/// Breadth-first enumeration of a Cayley graph by spheres.
///
/// `visit` sees each sphere in order, starting with `{start}`, and returns
/// whether to continue. Only the two most recent spheres are kept for
/// deduplication, which suffices because neighbors of a sphere lie in the
/// adjacent spheres. Returns the last completed radius (an empty sphere
/// stops the search early), or `Err(completed)` once the running total would
/// exceed `cap`.
pub(crate) fn shells<T, K, N, KF>(
    start: T,
    radius: usize,
    cap: usize,
    next: N,
    key: KF,
    mut visit: impl FnMut(usize, &[T]) -> bool,
) -> std::result::Result<usize, usize>
where
    T: Send + Sync,
    K: Hash + Eq + Send,
    N: Fn(&T) -> Vec<T> + Sync,
    KF: Fn(&T) -> K + Sync,
{
    let mut prev: HashSet<K> = HashSet::new();
    let mut cur: HashSet<K> = HashSet::from([key(&start)]);
    let mut sphere = vec![start];
    let mut total = 1usize;
    if !visit(0, &sphere) {
        return Ok(0);
    }
    for r in 1..=radius {
        let cand: Vec<(K, T)> = sphere
            .par_iter()
            .flat_map_iter(|t| next(t).into_iter().map(|n| (key(&n), n)))
            .collect();
        let mut seen = HashSet::new();
        let mut fresh = Vec::new();
        for (k, t) in cand {
            if prev.contains(&k) || cur.contains(&k) || seen.contains(&k) {
                continue;
            }
            seen.insert(k);
            fresh.push(t);
        }
        if fresh.is_empty() {
            return Ok(r - 1);
        }
        if total + fresh.len() > cap {
            return Err(r - 1);
        }
        total += fresh.len();
        if !visit(r, &fresh) {
            return Ok(r);
        }
        prev = std::mem::replace(&mut cur, seen);
        sphere = fresh;
    }
    Ok(radius)
}

/// `S ∪ S^-1` in the order `s1, s1^-1, s2, ...`, without repeated isometries.
pub fn symmetrize(gens: &[GroupElement]) -> Vec<GroupElement> {
    let mut out: Vec<GroupElement> = Vec::new();
    for g in gens {
        for h in [g.clone(), g.inverse()] {
            if !out.iter().any(|o| o.iso == h.iso) {
                out.push(h);
            }
        }
    }
    out
}

/// Spheres of the word ball of radius `radius`, each in shortlex order of the
/// representing words. Elements past `cap` stop the enumeration early; the
/// completed spheres are returned. A finite group ends with an empty sphere.
pub fn ball_spheres(gens: &[GroupElement], radius: usize, cap: usize) -> Result<Vec<Vec<GroupElement>>> {
    if gens.is_empty() {
        return Err(Error::EmptySet);
    }
    let sym = symmetrize(gens);
    let id = GroupElement::new(crate::word::Word::identity(), gens[0].iso.identity_like());
    let mut spheres = Vec::new();
    let res = shells(
        id,
        radius,
        cap,
        |g: &GroupElement| sym.iter().filter_map(|s| g.mul(s).ok()).collect(),
        |g: &GroupElement| g.iso.clone(),
        |_, s| {
            spheres.push(s.to_vec());
            true
        },
    );
    if matches!(res, Ok(r) if r < radius) {
        // The group is exhausted: record the empty sphere.
        spheres.push(Vec::new());
    }
    Ok(spheres)
}

#[derive(Clone, Debug)]
pub struct GeneratingSet {
    pub elements: Vec<GroupElement>,
    pub closed_under_inverse: bool,
    /// Known to generate the preset group.
    pub verified: bool,
}

impl GeneratingSet {
    pub fn new(preset: &Preset, elements: Vec<GroupElement>) -> Self {
        let closed = elements.iter().all(|g| {
            let inv = g.iso.inverse();
            elements.iter().any(|h| h.iso == inv)
        });
        let verified = preset.reaches_generators(&elements);
        GeneratingSet { elements, closed_under_inverse: closed, verified }
    }
}

/// `max_f d(f x, x)`.
pub fn lambda(x: &Point, f: &[GroupElement]) -> Result<f64> {
    if f.is_empty() {
        return Err(Error::EmptySet);
    }
    f.iter().map(|g| isometry::displacement(&g.iso, x)).try_fold(0f64, |m, d| Ok(m.max(d?)))
}

/// All distinct elements of word length at most `n`. Refuses rather than
/// truncates when the ball exceeds `cap`.
pub fn ball_generating_set(preset: &Preset, s: &GeneratingSet, n: usize, cap: usize) -> Result<GeneratingSet> {
    if n == 0 {
        return Err(Error::Precondition("ball radius must be at least 1".into()));
    }
    let mut counts = Vec::new();
    let mut elems = Vec::new();
    let sym = symmetrize(&s.elements);
    let id = preset.identity();
    let res = shells(
        id,
        n,
        cap,
        |g: &GroupElement| sym.iter().filter_map(|h| g.mul(h).ok()).collect(),
        |g: &GroupElement| g.iso.clone(),
        |_, sph| {
            counts.push(sph.len() as u64);
            elems.extend_from_slice(sph);
            true
        },
    );
    match res {
        Err(completed) => {
            let mut partial = Vec::new();
            let mut acc = 0;
            for c in counts {
                acc += c;
                partial.push(acc);
            }
            Err(Error::SizeCap { cap, completed, partial })
        }
        Ok(_) => Ok(GeneratingSet::new(preset, elems)),
    }
}

#[derive(Clone, Debug)]
pub struct HyperbolicWitness {
    pub element: GroupElement,
    /// Smallest radius whose ball contains a hyperbolic element.
    pub radius: usize,
    /// Number of elements classified at each radius.
    pub checked: Vec<usize>,
}

/// The first hyperbolic element in shortlex order within the smallest ball
/// that contains one. Every element of the smaller balls is classified.
pub fn find_hyperbolic_in_ball(gens: &[GroupElement], n_max: usize, cap: usize) -> Result<HyperbolicWitness> {
    if n_max == 0 {
        return Err(Error::Precondition("n_max must be at least 1".into()));
    }
    if gens.is_empty() {
        return Err(Error::EmptySet);
    }
    let sym = symmetrize(gens);
    let id = GroupElement::new(crate::word::Word::identity(), gens[0].iso.identity_like());
    let mut found: Option<(usize, GroupElement)> = None;
    let mut checked = Vec::new();
    let _ = shells(
        id,
        n_max,
        cap,
        |g: &GroupElement| sym.iter().filter_map(|h| g.mul(h).ok()).collect(),
        |g: &GroupElement| g.iso.clone(),
        |k, sph| {
            checked.push(sph.len());
            found = sph.par_iter().find_first(|g| classify(&g.iso).kind == Kind::Hyperbolic).map(|g| (k, g.clone()));
            found.is_none()
        },
    );
    match found {
        Some((radius, element)) => Ok(HyperbolicWitness { element, radius, checked }),
        None => Err(Error::NotFound { n_max }),
    }
}

/// Smallest `k <= k1` for which `g^k` moves a point of the axis of `g` lying
/// in the truncated space at least `200 delta`.
pub fn boost_displacement(
    g: &GroupElement,
    k1: u64,
    model: &SpaceModel,
    sys: &HoroballSystem,
) -> Result<(GroupElement, u64, Point)> {
    let c = classify(&g.iso);
    if c.kind != Kind::Hyperbolic {
        return Err(Error::Precondition(format!("cannot boost a {} element", c.kind)));
    }
    let ax = isometry::axis(&g.iso)?;
    let t = horoballs::axis_point_in_truncated(&ax, sys, model.delta)
        .ok_or_else(|| Error::Precondition("no axis point found in the truncated space".into()))?;
    let x = ax.point_at(t);
    let threshold = 200.0 * model.delta - model.tolerance;
    let mut h: Isometry = g.iso.clone();
    for k in 1..=k1 {
        if isometry::displacement(&h, &x)? >= threshold {
            return Ok((g.pow(k as i64), k, x));
        }
        h = h.compose(&g.iso)?;
    }
    Err(Error::K1TooSmall { k1, threshold: 200.0 * model.delta })
}

/// Whether every generator preserves the fixed pair of `s`.
pub fn virtually_cyclic_detect(gens: &[GroupElement], s: &GroupElement) -> Result<bool> {
    let c = classify(&s.iso);
    if c.kind != Kind::Hyperbolic {
        return Err(Error::NotHyperbolic { kind: c.kind.to_string() });
    }
    for g in gens {
        let imgs = c.fixed_points.iter().map(|p| g.iso.apply_ideal(p)).collect::<Result<Vec<_>>>()?;
        let same = imgs.iter().all(|p| c.fixed_points.contains(p));
        if !same {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ProductOutcome {
    Found { word: String, length: u64, trace: Option<String> },
    /// `lambda(x, S) <= 100 delta` at a sampled point.
    HypothesisFails { x: f64, y: f64, lambda: f64 },
    NoHyperbolicProduct,
}

/// Sample points for hypotheses quantified over the whole space: the ball of
/// radius 2 in the tree, a grid over the fundamental domain in the half-plane.
pub fn space_samples(preset: &Preset) -> Result<Vec<Point>> {
    if preset.model.is_tree() {
        let mut pts = Vec::new();
        for sph in ball_spheres(&preset.generators(), 2, 1_000)? {
            pts.extend(sph.iter().map(|g| g.iso.apply(&Point::root())).collect::<Result<Vec<_>>>()?);
        }
        return Ok(pts);
    }
    let sys = horoballs::ford_system(1, &horoballs::rational_h0(10.0)?, 2)?;
    horoballs::census_basepoints(preset, &sys)
}

/// Short product search: if `lambda(x, S) > 100 delta` on every sample point, the
/// first hyperbolic element of word length at most 2.
pub fn hyperbolic_product_search(preset: &Preset, gens: &[GroupElement]) -> Result<ProductOutcome> {
    let bound = 100.0 * preset.model.delta;
    for x in space_samples(preset)? {
        let l = lambda(&x, gens)?;
        if l <= bound {
            let (px, py) = match &x {
                Point::H2(p) => (p.x, p.y),
                Point::Tree(w) => (w.len() as f64, 0.0),
            };
            return Ok(ProductOutcome::HypothesisFails { x: px, y: py, lambda: l });
        }
    }
    let sym = symmetrize(gens);
    let mut cands: Vec<GroupElement> = sym.clone();
    for a in &sym {
        for b in &sym {
            cands.push(a.mul(b)?);
        }
    }
    for g in cands {
        let c = classify(&g.iso);
        if c.kind == Kind::Hyperbolic {
            return Ok(ProductOutcome::Found { word: preset.display(&g.word), length: g.word_length(), trace: c.trace });
        }
    }
    Ok(ProductOutcome::NoHyperbolicProduct)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    Exact,
    Heuristic,
    Uncertified,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Thresholds {
    pub t20: f64,
    pub t100: f64,
    pub t200: f64,
}

impl Thresholds {
    pub fn new(delta: f64) -> Self {
        Thresholds { t20: 20.0 * delta, t100: 100.0 * delta, t200: 200.0 * delta }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantsLedger {
    pub preset: String,
    pub delta: f64,
    pub k1: u64,
    pub k1_status: Certification,
    pub k1_radius: usize,
    pub k1_ball_size: usize,
    pub n0: Option<u64>,
    pub n0_status: Certification,
    pub n0_detail: String,
    /// Diameter of the compact sample `K`.
    pub a: f64,
    pub basepoint: String,
    /// Elements found with `d(g p, p) <= 2a + 100 delta` (exact when certified).
    pub a_set_size: usize,
    pub g0: Option<String>,
    pub g0_displacement: Option<f64>,
    pub thresholds: Thresholds,
}

fn point_label(p: &Point) -> String {
    match p {
        Point::Tree(w) => format!("vertex {w}"),
        Point::H2(z) => format!("({}, {})", z.x, z.y),
    }
}

/// The displacement census behind `n0` for the preset's own generators.
struct ACensus {
    members: Vec<GroupElement>,
    certified: bool,
    g0: Option<(GroupElement, f64)>,
}

fn a_census(preset: &Preset, p: &Point, bound: f64, g0_bound: f64, cap: usize) -> Result<ACensus> {
    let gens = preset.generators();
    let spheres = ball_spheres(&gens, cap, 200_000)?;
    let radius = spheres.len() - 1;
    let mut members = Vec::new();
    let mut g0 = None;
    for sph in &spheres {
        for g in sph {
            let d = isometry::displacement(&g.iso, p)?;
            if d <= bound {
                members.push(g.clone());
            }
            if g0.is_none() && d > g0_bound {
                g0 = Some((g.clone(), d));
            }
        }
    }
    let outer = spheres.last().expect("nonempty");
    let certified = outer.is_empty()
        || (radius == cap
            && outer.iter().all(|g| isometry::displacement(&g.iso, p).is_ok_and(|d| d > bound)));
    Ok(ACensus { members, certified, g0 })
}

/// Word length of `target` over `set`, by breadth-first search within a budget.
fn word_distance(set: &[GroupElement], target: &Isometry, budget: usize) -> Option<u64> {
    let sym = symmetrize(set);
    let mut hit = None;
    let _ = shells(
        target.identity_like(),
        usize::MAX,
        budget,
        |g: &Isometry| sym.iter().filter_map(|s| g.compose(&s.iso).ok()).collect(),
        |g: &Isometry| g.clone(),
        |r, sph| {
            if sph.contains(target) {
                hit = Some(r as u64);
            }
            hit.is_none()
        },
    );
    hit
}

/// Desk-scale `n0`: enumerates `A = {g : d(g p, p) <= 2a + 100 delta}`
/// inside the word ball of radius `cap`, finds `g0` beyond `100 delta + 2a`,
/// and maximizes the word length of `g0` over generating subsets of `A`.
/// Fails with `N0Uncertified` when `A` cannot be certified complete.
pub fn compute_n0(preset: &Preset, cap: usize) -> Result<ConstantsLedger> {
    let ledger = constants_ledger(preset, 12, cap)?;
    match ledger.n0_status {
        Certification::Uncertified => Err(Error::N0Uncertified { cap, detail: ledger.n0_detail }),
        _ => Ok(ledger),
    }
}

/// All constants, recording certification status instead of failing.
pub fn constants_ledger(preset: &Preset, k1_cap: usize, n0_cap: usize) -> Result<ConstantsLedger> {
    let delta = preset.model.delta;
    let sys = if preset.model.is_tree() { HoroballSystem::empty() } else { horoballs::pipeline_system(delta, 12)? };
    let census = horoballs::k1_census(preset, &sys, 200.0 * delta, k1_cap)?;
    let sample = horoballs::census_basepoints(preset, &sys)?;
    let a = sample
        .iter()
        .flat_map(|p| sample.iter().map(move |q| geometry::distance(p, q).unwrap_or(0.0)))
        .fold(0.0, f64::max);
    let p = preset.basepoint();
    let bound = 2.0 * a + 100.0 * delta;
    let ac = a_census(preset, &p, bound, bound, n0_cap)?;

    let mut g0 = ac.g0.clone();
    let mut g0_note = String::new();
    if g0.is_none() {
        // Outside the ball: power the shortest hyperbolic element.
        if let Ok(w) = find_hyperbolic_in_ball(&preset.generators(), n0_cap.max(4), 100_000) {
            let tau = classify(&w.element.iso).translation_length;
            if tau > 0.0 {
                let mut k = ((bound / tau).ceil() as i64).max(1);
                loop {
                    let h = w.element.pow(k);
                    let d = isometry::displacement(&h.iso, &p)?;
                    if d > bound {
                        g0 = Some((h, d));
                        g0_note = format!("g0 taken as the power {k} of a shortest hyperbolic element; ");
                        break;
                    }
                    k += 1;
                }
            }
        }
    }

    let (n0, n0_status, detail) = if !ac.certified {
        (
            None,
            Certification::Uncertified,
            format!(
                "{g0_note}A not certified complete within word length {n0_cap}: {} elements found with displacement <= {bound:.3}",
                ac.members.len()
            ),
        )
    } else if let Some((g, _)) = &g0 {
        let nontrivial: Vec<GroupElement> = ac.members.iter().filter(|m| !m.iso.is_identity()).cloned().collect();
        let (subsets, exact): (Vec<Vec<GroupElement>>, bool) = if nontrivial.len() <= 12 {
            let n = nontrivial.len();
            let subs = (1u32..(1 << n))
                .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| nontrivial[i].clone()).collect())
                .collect();
            (subs, true)
        } else {
            let mut subs: Vec<Vec<GroupElement>> = nontrivial.iter().map(|m| vec![m.clone()]).collect();
            subs.push(nontrivial.clone());
            (subs, false)
        };
        let mut best: Option<u64> = None;
        let mut budget_hit = false;
        for sub in &subsets {
            if !generates(preset, sub) {
                continue;
            }
            match word_distance(sub, &g.iso, 200_000) {
                Some(d) => best = Some(best.map_or(d, |b| b.max(d))),
                None => budget_hit = true,
            }
        }
        let status = if exact && !budget_hit { Certification::Exact } else { Certification::Heuristic };
        let detail = match best {
            Some(v) => format!("{g0_note}n0 = {v} over {} candidate subsets of A (|A| = {})", subsets.len(), ac.members.len()),
            None => format!(
                "{g0_note}no generating subset of A (|A| = {}); the pipeline searches balls directly",
                ac.members.len()
            ),
        };
        (best, status, detail)
    } else {
        (None, Certification::Exact, format!("{g0_note}no element moves p beyond {bound:.3}: the group is finite"))
    };

    Ok(ConstantsLedger {
        preset: preset.id.clone(),
        delta,
        k1: census.k1,
        k1_status: if census.certified { Certification::Exact } else { Certification::Uncertified },
        k1_radius: census.radius,
        k1_ball_size: census.ball_size,
        n0,
        n0_status,
        n0_detail: detail,
        a,
        basepoint: point_label(&p),
        a_set_size: ac.members.len(),
        g0: g0.as_ref().map(|(g, _)| preset.display(&g.word)),
        g0_displacement: g0.as_ref().map(|(_, d)| *d),
        thresholds: Thresholds::new(delta),
    })
}

/// Whether `set` generates the preset group: every preset generator is
/// reached within a bounded search.
fn generates(preset: &Preset, set: &[GroupElement]) -> bool {
    preset.gens.iter().all(|g| word_distance(set, g, 50_000).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_group_balls() {
        let p = Preset::free(2).unwrap();
        let s = GeneratingSet::new(&p, p.generators());
        assert!(s.verified);
        let b = ball_generating_set(&p, &s, 2, DEFAULT_CAP).unwrap();
        assert_eq!(b.elements.len(), 17);
        assert!(b.closed_under_inverse);
        assert!(matches!(ball_generating_set(&p, &s, 0, 10), Err(Error::Precondition(_))));
        match ball_generating_set(&p, &s, 5, 100) {
            Err(Error::SizeCap { completed, partial, .. }) => {
                assert_eq!(completed, 3);
                assert_eq!(partial, vec![1, 5, 17, 53]);
            }
            other => panic!("expected a size cap, got {other:?}"),
        }
    }

    #[test]
    fn modular_ball_of_radius_one() {
        let p = Preset::modular();
        let s = GeneratingSet::new(&p, p.generators());
        assert_eq!(ball_generating_set(&p, &s, 1, DEFAULT_CAP).unwrap().elements.len(), 4);
    }

    #[test]
    fn lambda_values() {
        let p = Preset::modular();
        let l = lambda(&Point::h2(0.0, 1.0).unwrap(), &p.generators()).unwrap();
        assert!((l - 1.5f64.acosh()).abs() < 1e-12);
        assert_eq!(lambda(&Point::root(), &Preset::free(2).unwrap().generators()).unwrap(), 1.0);
        assert_eq!(lambda(&Point::root(), &[Preset::free(2).unwrap().identity()]).unwrap(), 0.0);
        assert!(matches!(lambda(&Point::root(), &[]), Err(Error::EmptySet)));
    }

    #[test]
    fn hyperbolic_search() {
        let f = Preset::free(2).unwrap();
        let w = find_hyperbolic_in_ball(&f.generators(), 3, DEFAULT_CAP).unwrap();
        assert_eq!((w.radius, f.display(&w.element.word).as_str()), (1, "a"));
        let m = Preset::modular();
        let w = find_hyperbolic_in_ball(&m.generators(), 6, DEFAULT_CAP).unwrap();
        assert_eq!(w.radius, 4);
        assert_eq!(classify(&w.element.iso).trace.as_deref(), Some("3"));
        let z6 = Preset::finite_cyclic(6).unwrap();
        assert!(matches!(find_hyperbolic_in_ball(&z6.generators(), 10, DEFAULT_CAP), Err(Error::NotFound { .. })));
    }

    #[test]
    fn virtually_cyclic() {
        let c = Preset::cyclic();
        assert!(virtually_cyclic_detect(&c.generators(), &c.generator(0)).unwrap());
        let f = Preset::free(2).unwrap();
        assert!(!virtually_cyclic_detect(&f.generators(), &f.generator(0)).unwrap());
        let m = Preset::modular();
        assert!(!virtually_cyclic_detect(&m.generators(), &m.parse("TTST").unwrap()).unwrap());
    }

    #[test]
    fn boosting_powers() {
        let f = Preset::free(2).unwrap();
        let (g, k, _) = boost_displacement(&f.generator(0), 2, &f.model, &HoroballSystem::empty()).unwrap();
        assert_eq!((k, g.word_length()), (1, 1));
        let m = Preset::modular();
        let sys = horoballs::pipeline_system(1.0, 4).unwrap();
        let (_, k, _) = boost_displacement(&m.parse("TTST").unwrap(), 2000, &m.model, &sys).unwrap();
        let tau = 2.0 * 1.5f64.acosh();
        assert_eq!(k, (200.0 / tau).ceil() as u64);
        assert!(matches!(
            boost_displacement(&m.parse("TTST").unwrap(), 10, &m.model, &sys),
            Err(Error::K1TooSmall { .. })
        ));
        assert!(matches!(boost_displacement(&m.parse("S").unwrap(), 10, &m.model, &sys), Err(Error::Precondition(_))));
    }

    #[test]
    fn product_search_outcomes() {
        let f = Preset::free(2).unwrap();
        assert!(matches!(hyperbolic_product_search(&f, &f.generators()).unwrap(), ProductOutcome::Found { length: 1, .. }));
        let m = Preset::modular();
        assert!(matches!(hyperbolic_product_search(&m, &m.generators()).unwrap(), ProductOutcome::HypothesisFails { .. }));
        let s = Preset::sanov().with_delta(0.0);
        match hyperbolic_product_search(&s, &s.generators()).unwrap() {
            ProductOutcome::Found { word, length, trace } => {
                assert_eq!((word.as_str(), length, trace.as_deref()), ("ab", 2, Some("6")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn n0_for_free_group_degenerates() {
        let f = Preset::free(2).unwrap();
        let l = compute_n0(&f, 3).unwrap();
        assert_eq!(l.a_set_size, 1);
        assert_eq!(l.n0, None);
        assert_eq!(l.k1, 2);
        assert!(matches!(compute_n0(&Preset::modular(), 1), Err(Error::N0Uncertified { .. })));
    }
}
