//! `hypgrowth`: growth, ping-pong and lemma checks for groups acting on
//! trees and the hyperbolic plane.

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hypgrowth::geometry::SpaceModel;
use hypgrowth::growth::{self, PipelineOptions};
use hypgrowth::horoballs;
use hypgrowth::isometry::{classify, GroupElement};
use hypgrowth::pingpong;
use hypgrowth::preset::{Preset, PresetKind};
use hypgrowth::report::{
    ClassificationDoc, Document, Envelope, ErrorDoc, GrowthDoc, HoroballDoc, LemmaDoc, PingPongDoc, WitnessDoc,
};
use hypgrowth::search;
use hypgrowth::verify::{self, TrialConfig};
use hypgrowth::{Error, Result};

#[derive(Parser)]
#[command(name = "hypgrowth", version, about = "Uniform exponential growth for groups acting on hyperbolic spaces")]
struct Cli {
    /// Omit timestamps so identical invocations give byte-identical output.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true, env = "HYPGROWTH_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GroupArgs {
    /// free2, free(r), modular, sanov, cyclic, finite-cyclic(n) or custom.
    #[arg(long)]
    group: String,
    /// Generator matrices `a,b;c,d` for the custom group, in order.
    #[arg(long = "matrix")]
    matrices: Vec<String>,
    /// Override delta of the half-plane model.
    #[arg(long)]
    delta: Option<f64>,
}

impl GroupArgs {
    fn preset(&self) -> Result<Preset> {
        let p = if self.group == "custom" {
            let m: Vec<&str> = self.matrices.iter().map(String::as_str).collect();
            Preset::custom(&m)?
        } else {
            if !self.matrices.is_empty() {
                return Err(Error::Parse("--matrix only applies to --group custom".into()));
            }
            Preset::by_name(&self.group)?
        };
        p.self_check()?;
        Ok(match self.delta {
            Some(d) => p.with_delta(d),
            None => p,
        })
    }
}

/// The generating set: comma-separated words, or the preset generators.
fn generating_set(p: &Preset, gens: &Option<String>) -> Result<Vec<GroupElement>> {
    match gens {
        Some(text) => p.parse_set(text),
        None => Ok(p.generators()),
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Tree,
    H2,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the isometry given by a word.
    Classify {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        word: String,
    },
    /// Ball counts beta(k) for k up to the radius.
    Growth {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        gens: Option<String>,
        #[arg(long)]
        radius: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long, default_value_t = search::DEFAULT_CAP)]
        cap: usize,
    },
    /// Shortest hyperbolic word in the smallest ball containing one.
    FindHyperbolic {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        gens: Option<String>,
        #[arg(long, default_value_t = 10)]
        max_radius: usize,
        #[arg(long, default_value_t = search::DEFAULT_CAP)]
        cap: usize,
    },
    /// Build and check the ping-pong table for `s^k` and its conjugate by gamma.
    Pingpong {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        s: String,
        #[arg(long)]
        gamma: String,
        #[arg(long, default_value_t = pingpong::ORACLE_LENGTH)]
        oracle_len: usize,
        /// Use this k1 instead of the census value.
        #[arg(long)]
        k1: Option<u64>,
    },
    /// The full pipeline: a growth certificate or a virtually cyclic report.
    Certify {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        gens: Option<String>,
        #[arg(long, default_value_t = pingpong::ORACLE_LENGTH)]
        oracle_len: usize,
        #[arg(long, default_value_t = 10)]
        max_radius: usize,
    },
    /// Ford horoballs: pairwise separation and invariance under the generators.
    Horoballs {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long = "Q")]
        q: u64,
        #[arg(long)]
        h0: f64,
        /// Cusps p/q with |p| up to this bound (default 2Q).
        #[arg(long)]
        numerator_bound: Option<u64>,
    },
    /// Randomized checks of the geometric lemmas.
    VerifyLemmas {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        delta: Option<f64>,
        /// Rank of the free group whose tree is sampled.
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// k1, n0 and the thresholds for a preset.
    Constants {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long, default_value_t = 12)]
        k1_cap: usize,
        #[arg(long, default_value_t = 6)]
        n0_cap: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classify { .. } => "classify",
            Command::Growth { .. } => "growth",
            Command::FindHyperbolic { .. } => "find-hyperbolic",
            Command::Pingpong { .. } => "pingpong",
            Command::Certify { .. } => "certify",
            Command::Horoballs { .. } => "horoballs",
            Command::VerifyLemmas { .. } => "verify-lemmas",
            Command::Constants { .. } => "constants",
        }
    }
}

enum Output {
    Doc(Box<Document>),
    Text(String),
}

fn run(cmd: &Command) -> Result<Output> {
    let doc = match cmd {
        Command::Classify { group, word } => {
            let p = group.preset()?;
            let g = p.parse(word)?;
            let c = classify(&g.iso);
            Document::Classification(ClassificationDoc::new(&p, word, &g.iso, &c))
        }
        Command::Growth { group, gens, radius, format, cap } => {
            let p = group.preset()?;
            let set = generating_set(&p, gens)?;
            let mut table = growth::beta(&set, *radius, *cap)?;
            if matches!(p.kind, PresetKind::Free { rank } if rank >= 2) && gens.is_none() {
                table = table.with_free_pair(1);
            }
            if let Format::Csv = format {
                return Ok(Output::Text(table.to_csv()));
            }
            let (omega_upper, _) = growth::omega_bounds(&table);
            Document::Growth(GrowthDoc {
                group: p.id.clone(),
                generators: set.iter().map(|g| p.display(&g.word)).collect(),
                table,
                omega_upper: if omega_upper.is_finite() { omega_upper } else { 1.0 },
            })
        }
        Command::FindHyperbolic { group, gens, max_radius, cap } => {
            let p = group.preset()?;
            let set = generating_set(&p, gens)?;
            let w = search::find_hyperbolic_in_ball(&set, *max_radius, *cap)?;
            let c = classify(&w.element.iso);
            Document::HyperbolicWitness(WitnessDoc {
                group: p.id.clone(),
                generators: set.iter().map(|g| p.display(&g.word)).collect(),
                word: p.display(&w.element.word),
                radius: w.radius,
                trace: c.trace,
                translation_length: c.translation_length,
                checked: w.checked,
            })
        }
        Command::Pingpong { group, s, gamma, oracle_len, k1 } => {
            let p = group.preset()?;
            let (s_el, gamma_el) = (p.parse(s)?, p.parse(gamma)?);
            let opts = PipelineOptions::default();
            let (sys, census) = growth::pipeline_k1(&p, &opts)?;
            let k1 = k1.unwrap_or(census.k1);
            let (boosted, boost, _) = search::boost_displacement(&s_el, k1, &p.model, &sys)?;
            let display = |w: &hypgrowth::word::Word| p.display(w);
            let cert = pingpong::certify_free(&boosted, &gamma_el, k1, &p.model, *oracle_len, &display)?;
            Document::PingPong(Box::new(PingPongDoc {
                group: p.id.clone(),
                s: s.clone(),
                boost,
                gamma: gamma.clone(),
                certificate: cert,
            }))
        }
        Command::Certify { group, gens, oracle_len, max_radius } => {
            let p = group.preset()?;
            let set = generating_set(&p, gens)?;
            let opts = PipelineOptions { n_max: *max_radius, oracle_len: *oracle_len, ..PipelineOptions::default() };
            Document::Certify(Box::new(growth::uniform_growth_certificate(&p, &set, &opts)?))
        }
        Command::Horoballs { group, q, h0, numerator_bound } => {
            let p = group.preset()?;
            if p.kind != PresetKind::Modular {
                return Err(Error::Precondition("horoball systems are built for the modular group".into()));
            }
            let sys = horoballs::ford_system(*q, &horoballs::rational_h0(*h0)?, numerator_bound.unwrap_or(2 * q))?;
            let gens: Vec<_> = p
                .generators()
                .iter()
                .map(|g| (p.display(&g.word), g.iso.as_matrix().expect("modular generators are matrices").clone()))
                .collect();
            Document::Horoballs(HoroballDoc {
                group: p.id.clone(),
                separation: horoballs::separation_check(&sys),
                invariance: horoballs::invariance_check(&sys, &gens),
                system: sys,
            })
        }
        Command::VerifyLemmas { model, trials, seed, delta, rank, tolerance } => {
            let m = match model {
                ModelArg::Tree => {
                    if delta.is_some_and(|d| d != 0.0) {
                        return Err(Error::Precondition("trees are 0-hyperbolic".into()));
                    }
                    SpaceModel::tree(*rank)
                }
                ModelArg::H2 => SpaceModel::h2_with_delta(delta.unwrap_or(1.0)),
            };
            let mut cfg = TrialConfig::new(m, *seed, *trials);
            if let Some(t) = tolerance {
                cfg.tolerance = *t;
            }
            let reports = verify::run_all(&cfg)?;
            Document::Lemmas(LemmaDoc {
                model: if m.is_tree() { "tree".into() } else { "h2".into() },
                delta: m.delta,
                tolerance: cfg.tolerance,
                seed: *seed,
                trials: *trials,
                calibration: verify::calibrate_delta(&reports),
                reports,
            })
        }
        Command::Constants { group, k1_cap, n0_cap } => {
            let p = group.preset()?;
            Document::Constants(search::constants_ledger(&p, *k1_cap, *n0_cap)?)
        }
    };
    Ok(Output::Doc(Box::new(doc)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("hypgrowth: could not size the worker pool: {e}");
        }
    }
    let (out, code) = match run(&cli.command) {
        Ok(Output::Text(t)) => (t, 0),
        Ok(Output::Doc(d)) => {
            let code = d.exit_code();
            (render(*d, cli.deterministic), code)
        }
        Err(e) => {
            eprintln!("hypgrowth {}: {e}", cli.command.name());
            let code = e.exit_code();
            (render(Document::Error(ErrorDoc::new(cli.command.name(), &e)), cli.deterministic), code)
        }
    };
    // A closed pipe downstream is not an error of ours.
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.as_bytes());
    if !out.ends_with('\n') {
        let _ = stdout.write_all(b"\n");
    }
    ExitCode::from(code as u8)
}

fn render(doc: Document, deterministic: bool) -> String {
    Envelope::new(doc, deterministic).to_json().expect("documents serialize")
}
