//! Ball counts, bounds on the exponential growth rate, and the end-to-end
//! uniform growth certificate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::horoballs::{self, HoroballSystem, K1Census};
use crate::isometry::{classify, GroupElement, Isometry};
use crate::pingpong::{self, Dichotomy, FreeCertificate};
use crate::preset::{Preset, PresetKind};
use crate::search::{self, Certification, Thresholds};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthTable {
    /// `beta(k)` for `k = 0..=K`.
    pub counts: Vec<u64>,
    /// `beta(k)^(1/k)` for `k = 1..=K`.
    pub upper_bounds: Vec<f64>,
    /// `3^(1/l)` from a free pair of word length `l`.
    pub lower_bound: Option<f64>,
    pub lower_bound_length: Option<u64>,
}

impl GrowthTable {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let upper_bounds = counts.iter().enumerate().skip(1).map(|(k, &b)| (b as f64).powf(1.0 / k as f64)).collect();
        GrowthTable { counts, upper_bounds, lower_bound: None, lower_bound_length: None }
    }

    pub fn radius(&self) -> usize {
        self.counts.len() - 1
    }

    /// Records the lower bound from a free pair inside the ball of radius `l`.
    pub fn with_free_pair(mut self, l: u64) -> Self {
        self.lower_bound = Some(free_pair_lower_bound(l));
        self.lower_bound_length = Some(l);
        self
    }

    /// CSV with columns `k,beta,upper_bound`; the bound is empty at `k = 0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,beta,upper_bound\n");
        for (k, b) in self.counts.iter().enumerate() {
            let ub = if k == 0 { String::new() } else { format!("{}", self.upper_bounds[k - 1]) };
            out.push_str(&format!("{k},{b},{ub}\n"));
        }
        out
    }
}

/// `3^(1/l)`.
pub fn free_pair_lower_bound(l: u64) -> f64 {
    match l {
        0 | 1 => 3.0,
        _ => (3f64.ln() / l as f64).exp(),
    }
}

/// Exact ball counts by breadth-first enumeration, deduplicating isometries
/// (reduced words in the tree, normalized matrices in PSL(2)).
pub fn beta(gens: &[GroupElement], k: usize, cap: usize) -> Result<GrowthTable> {
    if gens.is_empty() {
        return Err(Error::EmptySet);
    }
    let sym: Vec<Isometry> = search::symmetrize(gens).into_iter().map(|g| g.iso).collect();
    let mut counts = Vec::with_capacity(k + 1);
    let mut total = 0u64;
    let res = search::shells(
        gens[0].iso.identity_like(),
        k,
        cap,
        |g: &Isometry| sym.iter().filter_map(|s| g.compose(s).ok()).collect(),
        |g: &Isometry| g.clone(),
        |_, sph| {
            total += sph.len() as u64;
            counts.push(total);
            true
        },
    );
    match res {
        Err(completed) => Err(Error::SizeCap { cap, completed, partial: counts }),
        Ok(_) => {
            // A finite group stops early; the ball is constant from then on.
            while counts.len() < k + 1 {
                counts.push(total);
            }
            Ok(GrowthTable::from_counts(counts))
        }
    }
}

/// `(upper, lower)`: the Fekete minimum of `beta(k)^(1/k)` and the free-pair bound.
pub fn omega_bounds(table: &GrowthTable) -> (f64, Option<f64>) {
    let upper = table.upper_bounds.iter().copied().fold(f64::INFINITY, f64::min);
    (upper, table.lower_bound)
}

/// First `(m, n)` with `beta(m + n) > beta(m) beta(n)`, if any.
pub fn submultiplicativity_violation(table: &GrowthTable) -> Option<(usize, usize)> {
    let c = &table.counts;
    for m in 0..c.len() {
        for n in 0..c.len() - m {
            if (c[m + n] as u128) > c[m] as u128 * c[n] as u128 {
                return Some((m, n));
            }
        }
    }
    None
}

/// Distinct elements represented by the freely reduced words of length
/// exactly `n` in `g1^±1, g2^±1`.
pub fn free_pair_sphere_count(g1: &GroupElement, g2: &GroupElement, n: usize) -> Result<usize> {
    let letters = [g1.iso.clone(), g1.iso.inverse(), g2.iso.clone(), g2.iso.inverse()];
    let mut level: Vec<(u8, Isometry)> = (0..4u8).map(|l| (l, letters[l as usize].clone())).collect();
    for _ in 1..n {
        let mut next = Vec::with_capacity(level.len() * 3);
        for (last, v) in &level {
            for l in (0..4u8).filter(|&l| l != last ^ 1) {
                next.push((l, v.compose(&letters[l as usize])?));
            }
        }
        level = next;
    }
    let set: std::collections::HashSet<Isometry> = level.into_iter().map(|(_, v)| v).collect();
    Ok(set.len())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineConstants {
    pub delta: f64,
    pub k1: u64,
    pub k1_status: Certification,
    pub k1_radius: usize,
    pub k1_ball_size: usize,
    pub thresholds: Thresholds,
    /// Height of the horoball at infinity in the truncation, `exp(200 delta)`.
    pub h0: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HyperbolicSummary {
    pub word: String,
    pub radius: usize,
    pub trace: Option<String>,
    pub translation_length: f64,
    pub checked: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniformGrowthCertificate {
    pub group: String,
    pub generators: Vec<String>,
    pub hyperbolic: HyperbolicSummary,
    /// `s` is the witness raised to this power.
    pub boost: u64,
    pub s: String,
    pub gamma: String,
    pub free_pair: FreeCertificate,
    /// The `l` behind the reported lower bound.
    pub lower_bound_length: u64,
    pub lower_bound: f64,
    /// `ln(3) / l`, readable when the bound rounds to 1.
    pub ln_lower_bound: f64,
    /// The generators themselves form a free basis; the bound uses `l = 1`.
    pub direct_free_basis: bool,
    /// Word length of the pipeline's own pair, `10 k1 |s| + 2 |gamma|`.
    pub pipeline_length: u64,
    pub constants: PipelineConstants,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VirtuallyCyclicReport {
    pub group: String,
    pub witness: String,
    pub radius: usize,
    /// Every generator maps the witness's fixed pair onto itself.
    pub generators_checked: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum GrowthOutcome {
    Certificate(Box<UniformGrowthCertificate>),
    VirtuallyCyclic(VirtuallyCyclicReport),
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub n_max: usize,
    /// Word-length cap for the `k1` census.
    pub k1_cap: usize,
    /// Denominator bound of the Ford system used for the truncation.
    pub ford_q: u64,
    pub cap: usize,
    pub oracle_len: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { n_max: 10, k1_cap: 12, ford_q: 12, cap: search::DEFAULT_CAP, oracle_len: pingpong::ORACLE_LENGTH }
    }
}

fn is_free_basis(preset: &Preset, gens: &[GroupElement]) -> bool {
    matches!(preset.kind, PresetKind::Free { rank } if rank >= 2)
        && gens.len() == preset.rank()
        && gens.iter().zip(&preset.gens).all(|(g, h)| g.iso == *h)
}

/// The truncation and `k1` census the pipeline runs with.
pub fn pipeline_k1(preset: &Preset, opts: &PipelineOptions) -> Result<(HoroballSystem, K1Census)> {
    let model = &preset.model;
    let sys = if model.is_tree() {
        HoroballSystem::empty()
    } else {
        horoballs::pipeline_system(model.delta, opts.ford_q).map_err(|e| e.in_stage("horoballs"))?
    };
    let census = horoballs::k1_census(preset, &sys, 200.0 * model.delta, opts.k1_cap).map_err(|e| e.in_stage("k1"))?;
    Ok((sys, census))
}

/// Shortest hyperbolic element, its boost past `200 delta`, the first
/// generator moving its fixed pair, and a certified free pair.
pub fn uniform_growth_certificate(preset: &Preset, gens: &[GroupElement], opts: &PipelineOptions) -> Result<GrowthOutcome> {
    let model = &preset.model;
    let w = search::find_hyperbolic_in_ball(gens, opts.n_max, opts.cap).map_err(|e| e.in_stage("find-hyperbolic"))?;
    let wc = classify(&w.element.iso);
    let hyperbolic = HyperbolicSummary {
        word: preset.display(&w.element.word),
        radius: w.radius,
        trace: wc.trace.clone(),
        translation_length: wc.translation_length,
        checked: w.checked.clone(),
    };

    let mut gamma = None;
    for g in gens {
        if pingpong::fixed_point_dichotomy(&w.element, g).map_err(|e| e.in_stage("dichotomy"))? == Dichotomy::Disjoint {
            gamma = Some(g.clone());
            break;
        }
    }
    let Some(gamma) = gamma else {
        return Ok(GrowthOutcome::VirtuallyCyclic(VirtuallyCyclicReport {
            group: preset.id.clone(),
            witness: hyperbolic.word,
            radius: w.radius,
            generators_checked: gens.iter().map(|g| preset.display(&g.word)).collect(),
        }));
    };

    let (sys, census) = pipeline_k1(preset, opts)?;
    let constants = PipelineConstants {
        delta: model.delta,
        k1: census.k1,
        k1_status: if census.certified { Certification::Exact } else { Certification::Uncertified },
        k1_radius: census.radius,
        k1_ball_size: census.ball_size,
        thresholds: Thresholds::new(model.delta),
        h0: (!model.is_tree()).then(|| crate::arith::rational_to_f64(&sys.h0)),
    };
    let (s, boost, _) =
        search::boost_displacement(&w.element, census.k1, model, &sys).map_err(|e| e.in_stage("boost"))?;
    let display = |x: &crate::word::Word| preset.display(x);
    let mut cert =
        pingpong::certify_free(&s, &gamma, census.k1, model, opts.oracle_len, &display).map_err(|e| e.in_stage("certify"))?;
    if !census.certified {
        cert.caveats.push(format!("k1 = {} is a partial census value over {} elements", census.k1, census.ball_size));
    }
    let pipeline_length = cert.word_length_bound;
    let direct = is_free_basis(preset, gens);
    let l = if direct { 1 } else { pipeline_length };
    Ok(GrowthOutcome::Certificate(Box::new(UniformGrowthCertificate {
        group: preset.id.clone(),
        generators: gens.iter().map(|g| preset.display(&g.word)).collect(),
        hyperbolic,
        boost,
        s: preset.display(&s.word),
        gamma: preset.display(&gamma.word),
        free_pair: cert,
        lower_bound_length: l,
        lower_bound: free_pair_lower_bound(l),
        ln_lower_bound: 3f64.ln() / l as f64,
        direct_free_basis: direct,
        pipeline_length,
        constants,
    })))
}
