//! Machine-readable documents emitted by the command-line tool, with the
//! structural checks every document must pass after a round trip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::IdealPoint;
use crate::growth::{GrowthOutcome, GrowthTable};
use crate::horoballs::{HoroballSystem, InvarianceReport, SeparationReport};
use crate::isometry::{Classification, Isometry, Kind};
use crate::pingpong::FreeCertificate;
use crate::preset::Preset;
use crate::search::ConstantsLedger;
use crate::verify::{DeltaCalibration, LemmaReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassificationDoc {
    pub group: String,
    pub word: String,
    pub kind: Kind,
    /// `|trace|` for matrices.
    pub trace: Option<String>,
    pub translation_length: f64,
    pub fixed_points: Vec<String>,
    /// `[a, b, c, d]` over a common denominator, sign-normalized.
    pub matrix: Option<[String; 4]>,
    pub denominator: Option<String>,
}

impl ClassificationDoc {
    pub fn new(preset: &Preset, word: &str, g: &Isometry, c: &Classification) -> Self {
        let (matrix, denominator) = match g.as_matrix() {
            Some(m) => {
                let [a, b, c, d] = m.entries();
                (Some([a.to_string(), b.to_string(), c.to_string(), d.to_string()]), Some(m.den().to_string()))
            }
            None => (None, None),
        };
        ClassificationDoc {
            group: preset.id.clone(),
            word: word.into(),
            kind: c.kind,
            trace: c.trace.clone(),
            translation_length: c.translation_length,
            fixed_points: c
                .fixed_points
                .iter()
                .map(|p| match p {
                    IdealPoint::H2(b) => b.to_string(),
                    IdealPoint::Tree(r) => r.display(&preset.alphabet),
                })
                .collect(),
            matrix,
            denominator,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthDoc {
    pub group: String,
    pub generators: Vec<String>,
    pub table: GrowthTable,
    /// `min_k beta(k)^(1/k)`.
    pub omega_upper: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub group: String,
    pub generators: Vec<String>,
    pub word: String,
    pub radius: usize,
    pub trace: Option<String>,
    pub translation_length: f64,
    /// Elements classified per radius; all below `radius` are non-hyperbolic.
    pub checked: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PingPongDoc {
    pub group: String,
    pub s: String,
    /// Power applied to `s` to reach displacement `200 delta`.
    pub boost: u64,
    pub gamma: String,
    pub certificate: FreeCertificate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HoroballDoc {
    pub group: String,
    pub system: HoroballSystem,
    pub separation: SeparationReport,
    pub invariance: InvarianceReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaDoc {
    pub model: String,
    pub delta: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub trials: usize,
    pub reports: Vec<LemmaReport>,
    pub calibration: DeltaCalibration,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorDoc {
    pub command: String,
    pub error: String,
    pub exit_code: i32,
    /// A relation or failing configuration, when the failure has one.
    pub witness: Option<String>,
}

impl ErrorDoc {
    pub fn new(command: &str, e: &Error) -> Self {
        let witness = match root(e) {
            Error::RelationFound { word } => Some(word.clone()),
            Error::NestingFailure(w) => Some(w.clone()),
            Error::SizeCap { partial, .. } => Some(format!("{partial:?}")),
            _ => None,
        };
        ErrorDoc { command: command.into(), error: e.to_string(), exit_code: e.exit_code(), witness }
    }
}

fn root(e: &Error) -> &Error {
    match e {
        Error::Stage { source, .. } => root(source),
        e => e,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "document", rename_all = "snake_case")]
pub enum Document {
    Classification(ClassificationDoc),
    Growth(GrowthDoc),
    HyperbolicWitness(WitnessDoc),
    PingPong(Box<PingPongDoc>),
    Certify(Box<GrowthOutcome>),
    Horoballs(HoroballDoc),
    Lemmas(LemmaDoc),
    Constants(ConstantsLedger),
    Error(ErrorDoc),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Envelope {
    pub schema_version: u32,
    /// Seconds since the Unix epoch; omitted in deterministic mode.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generated_unix: Option<u64>,
    #[serde(flatten)]
    pub document: Document,
}

impl Envelope {
    pub fn new(document: Document, deterministic: bool) -> Self {
        let generated_unix = (!deterministic).then(|| {
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
        });
        Envelope { schema_version: SCHEMA_VERSION, generated_unix, document }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Envelope> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return invalid(format!("schema version {}", self.schema_version));
        }
        self.document.validate()
    }
}

fn invalid<T>(msg: String) -> Result<T> {
    Err(Error::Parse(format!("invalid document: {msg}")))
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        invalid(msg.to_string())
    }
}

fn validate_table(t: &GrowthTable) -> Result<()> {
    check(t.counts.first() == Some(&1), "beta(0) must be 1")?;
    check(t.counts.windows(2).all(|w| w[0] <= w[1]), "ball counts must be nondecreasing")?;
    check(t.upper_bounds.len() + 1 == t.counts.len(), "one upper bound per positive radius")?;
    check(t.lower_bound.is_none_or(|l| l >= 1.0), "lower bound below 1")
}

fn validate_certificate(c: &FreeCertificate) -> Result<()> {
    check(c.oracle.passed, "certificate with a failed oracle")?;
    check(c.b1.lo <= c.b1.hi && c.b2.lo <= c.b2.hi, "empty attracting interval")?;
    check(c.nesting.checks >= c.nesting.violations, "more nesting violations than checks")
}

impl Document {
    pub fn validate(&self) -> Result<()> {
        match self {
            Document::Classification(c) => {
                let expected = match c.kind {
                    Kind::Hyperbolic => 2,
                    Kind::Parabolic => 1,
                    _ => 0,
                };
                check(c.fixed_points.len() == expected, "fixed points do not match the kind")?;
                check((c.kind == Kind::Hyperbolic) == (c.translation_length > 0.0), "translation length does not match the kind")
            }
            Document::Growth(g) => {
                validate_table(&g.table)?;
                check(g.omega_upper >= 1.0 || g.table.counts.len() < 2, "growth upper bound below 1")
            }
            Document::HyperbolicWitness(w) => {
                check(w.radius >= 1 && w.checked.len() == w.radius + 1, "checked counts must cover radii 0..=radius")?;
                check(w.translation_length > 0.0, "witness is not hyperbolic")
            }
            Document::PingPong(p) => {
                check(p.boost >= 1, "boost must be positive")?;
                validate_certificate(&p.certificate)
            }
            Document::Certify(o) => match o.as_ref() {
                GrowthOutcome::Certificate(c) => {
                    validate_certificate(&c.free_pair)?;
                    check(c.lower_bound > 1.0, "lower bound must exceed 1")?;
                    let expected = crate::growth::free_pair_lower_bound(c.lower_bound_length);
                    check((c.lower_bound - expected).abs() <= 1e-12, "lower bound is not 3^(1/l)")
                }
                GrowthOutcome::VirtuallyCyclic(v) => check(!v.generators_checked.is_empty(), "no generators checked"),
            },
            Document::Horoballs(h) => {
                let n = h.system.balls.len();
                check(h.separation.pairs_checked == n * n.saturating_sub(1) / 2, "pair count mismatch")?;
                check(h.separation.all_disjoint == h.separation.violations.is_empty(), "separation verdict mismatch")?;
                check(h.invariance.passed + h.invariance.failures.len() <= h.invariance.checked, "invariance counts")
            }
            Document::Lemmas(l) => {
                for r in &l.reports {
                    check(r.passed + r.failed + r.skipped == r.trials, "trial counts do not add up")?;
                    check(r.failed == 0 || !r.witnesses.is_empty(), "failures without witnesses")?;
                }
                Ok(())
            }
            Document::Constants(c) => check(c.k1 >= 1, "k1 must be positive"),
            Document::Error(e) => check((1..=3).contains(&e.exit_code), "error exit code out of range"),
        }
    }

    /// Process exit code for this document.
    pub fn exit_code(&self) -> i32 {
        match self {
            Document::Error(e) => e.exit_code,
            Document::Lemmas(l) if l.reports.iter().any(|r| r.failed > 0) => 1,
            Document::Horoballs(h) if !h.separation.all_disjoint || !h.invariance.all_passed() => 1,
            _ => 0,
        }
    }
}
