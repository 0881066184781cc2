//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
//!
//! Runs the release criteria against the built `hypgrowth` binary where the
//! criterion is phrased as a command, and against the library otherwise.

use std::process::Command;
use std::time::{Duration, Instant};

use hypgrowth::arith::Mat2;
use hypgrowth::error::Error;
use hypgrowth::geometry::SpaceModel;
use hypgrowth::growth::GrowthOutcome;
use hypgrowth::isometry::{classify, Isometry, Kind};
use hypgrowth::pingpong::{self, Dichotomy, Interval};
use hypgrowth::preset::Preset;
use hypgrowth::report::{Document, Envelope};
use hypgrowth::verify::{self, TrialConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Runs the binary with `--deterministic`, returning raw stdout and the parsed document.
fn cli(args: &[&str]) -> Result<(String, Document), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_hypgrowth"))
        .arg("--deterministic")
        .args(args)
        .output()
        .map_err(|e| format!("spawn failed: {e}"))?;
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr).trim()));
    }
    let env = Envelope::from_json(&text).map_err(|e| e.to_string())?;
    env.validate().map_err(|e| e.to_string())?;
    Ok((text, env.document))
}

fn timed<T>(limit: Duration, f: impl FnOnce() -> Result<T, String>) -> Result<(T, Duration), String> {
    let start = Instant::now();
    let v = f()?;
    let took = start.elapsed();
    ensure(took < limit, format!("took {took:.2?}, limit {limit:?}"))?;
    Ok((v, took))
}

fn free_growth_exact() -> Outcome {
    let (doc, took) = timed(Duration::from_secs(10), || cli(&["growth", "--group", "free2", "--radius", "12"]))?;
    let Document::Growth(g) = doc.1 else { return Err("not a growth document".into()) };
    let expected: Vec<u64> = (0..=12).map(|k| 2 * 3u64.pow(k) - 1).collect();
    ensure(g.table.counts == expected, format!("counts {:?}", g.table.counts))?;
    Ok(format!("beta(12) = {} in {took:.2?}", g.table.counts[12]))
}

fn growth_sandwich() -> Outcome {
    let (_, doc) = cli(&["growth", "--group", "free2", "--radius", "12"])?;
    let Document::Growth(g) = doc else { return Err("not a growth document".into()) };
    let upper = g.table.upper_bounds.iter().copied().fold(f64::INFINITY, f64::min);
    ensure((3.0..=3.2).contains(&upper), format!("upper bound {upper}"))?;
    ensure(g.omega_upper == upper, "reported upper bound is not the minimum")?;
    ensure(g.table.lower_bound == Some(3.0), format!("lower bound {:?}", g.table.lower_bound))?;
    Ok(format!("3 <= omega <= {upper:.6}"))
}

fn sanov_oracle() -> Outcome {
    let p = Preset::sanov();
    let expected = [[1, 2, 0, 1], [1, 0, 2, 1]];
    for (i, m) in expected.iter().enumerate() {
        let want = Mat2::from_ints(m[0], m[1], m[2], m[3]).map_err(|e| e.to_string())?;
        ensure(p.generator(i).iso.as_matrix() == Some(&want), "unexpected generators")?;
    }
    let (r, took) = timed(Duration::from_secs(30), || {
        pingpong::algebraic_free_oracle(&p.generator(0), &p.generator(1), 10).map_err(|e| e.to_string())
    })?;
    ensure(r.passed && r.method == "exact", format!("{r:?}"))?;
    ensure(r.words_checked == pingpong::reduced_word_count(10), "not every reduced word was checked")?;
    Ok(format!("{} reduced words, exact, in {took:.2?}", r.words_checked))
}

fn minimal_modular_witness() -> Outcome {
    // Exhaustive: every product of at most three of S^±1, T^±1 has |trace| <= 2.
    let m = Preset::modular();
    let letters: Vec<Isometry> = ["S", "s", "T", "t"]
        .iter()
        .map(|w| m.parse(w).map(|g| g.iso))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut level = vec![m.identity().iso];
    for len in 1..=3 {
        let mut next = Vec::new();
        for g in &level {
            for l in &letters {
                let h = g.compose(l).map_err(|e| e.to_string())?;
                ensure(classify(&h).kind != Kind::Hyperbolic, format!("hyperbolic word of length {len}"))?;
                next.push(h);
            }
        }
        level = next;
    }
    let (_, doc) = cli(&["find-hyperbolic", "--group", "modular", "--gens", "S,T"])?;
    let Document::HyperbolicWitness(w) = doc else { return Err("not a witness document".into()) };
    ensure(w.radius == 4, format!("radius {}", w.radius))?;
    ensure(w.trace.as_deref() == Some("3"), format!("trace {:?}", w.trace))?;
    let (_, doc) = cli(&["classify", "--group", "modular", "--word", "T^2ST"])?;
    let Document::Classification(c) = doc else { return Err("not a classification".into()) };
    let golden = ["2", "1", "1", "1"].map(String::from);
    ensure(c.matrix.as_ref() == Some(&golden) && c.trace.as_deref() == Some("3"), format!("T^2ST -> {:?}", c.matrix))?;
    Ok(format!("none at length <= 3; {} at length 4 with |trace| 3", w.word))
}

fn lemma_suites() -> Outcome {
    let mut total = 0;
    for seed in 1..=5 {
        let cfg = TrialConfig::new(SpaceModel::h2(), seed, 10_000);
        ensure(cfg.model.delta == 1.0 && cfg.tolerance == 1e-6, "unexpected H2 configuration")?;
        for r in verify::run_all(&cfg).map_err(|e| e.to_string())? {
            ensure(r.failed == 0, format!("h2 {} seed {seed}: {} failures, first {:?}", r.lemma, r.failed, r.witnesses.first()))?;
            ensure(r.passed > 0, format!("h2 {} seed {seed}: every trial skipped", r.lemma))?;
            total += r.passed;
        }
        let cfg = TrialConfig::new(SpaceModel::tree(2), seed, 10_000);
        ensure(cfg.tolerance == 0.0, "tree tolerance must be zero")?;
        for r in verify::run_all(&cfg).map_err(|e| e.to_string())? {
            ensure(r.failed == 0, format!("tree {} seed {seed}: {} failures", r.lemma, r.failed))?;
            total += r.passed;
        }
    }
    Ok(format!("{} suites x 5 seeds x 2 models, {total} passing trials", verify::SUITES.len()))
}

fn modular_certificate() -> Outcome {
    let args = ["certify", "--group", "modular", "--gens", "S,T", "--oracle-len", "8"];
    let (first, doc) = cli(&args)?;
    let (second, _) = cli(&args)?;
    ensure(first == second, "two runs differ")?;
    let Document::Certify(o) = doc else { return Err("not a certify document".into()) };
    let GrowthOutcome::Certificate(c) = *o else { return Err("no certificate issued".into()) };
    ensure(c.free_pair.oracle.passed && c.free_pair.oracle.max_len == 8, "oracle did not pass at length 8")?;
    ensure(c.lower_bound > 1.0, format!("lower bound {}", c.lower_bound))?;
    ensure(c.lower_bound == 3f64.powf(1.0 / c.lower_bound_length as f64), "lower bound is not 3^(1/l)")?;
    Ok(format!("l = {}, bound {}, byte-identical reruns", c.lower_bound_length, c.lower_bound))
}

fn ford_system() -> Outcome {
    let (_, doc) = cli(&["horoballs", "--group", "modular", "--Q", "3", "--h0", "2"])?;
    let Document::Horoballs(h) = doc else { return Err("not a horoball document".into()) };
    ensure(h.separation.all_disjoint, format!("violations {:?}", h.separation.violations))?;
    ensure(h.invariance.all_passed() && h.invariance.passed > 0, format!("{:?}", h.invariance.failures))?;
    Ok(format!(
        "{} balls, {} pairs disjoint, {} invariance checks",
        h.system.balls.len(),
        h.separation.pairs_checked,
        h.invariance.passed
    ))
}

fn virtually_cyclic() -> Outcome {
    let (_, doc) = cli(&["certify", "--group", "cyclic", "--gens", "t"])?;
    let Document::Certify(o) = doc else { return Err("not a certify document".into()) };
    let GrowthOutcome::VirtuallyCyclic(v) = *o else { return Err("a certificate for a cyclic group".into()) };
    ensure(v.generators_checked == ["t"], format!("checked {:?}", v.generators_checked))?;
    let p = Preset::cyclic();
    let w = p.parse(&v.witness).map_err(|e| e.to_string())?;
    for g in p.generators() {
        let d = pingpong::fixed_point_dichotomy(&w, &g).map_err(|e| e.to_string())?;
        ensure(d == Dichotomy::Same, "a generator moves the fixed pair")?;
    }
    Ok(format!("witness {}, Same for every generator", v.witness))
}

fn adversarial() -> Outcome {
    let m = Preset::modular();
    let s = m.parse("STSt").map_err(|e| e.to_string())?.pow(104);
    let gamma = m.parse("T").map_err(|e| e.to_string())?;
    let mut t = pingpong::build_table(&s, &gamma, 1, &m.model).map_err(|e| e.to_string())?;
    ensure(matches!(t.case, pingpong::TableCase::Overlap { .. }), "axes do not overlap")?;
    for b in &mut t.b {
        let mid = (b.lo + b.hi) / 2.0;
        *b = Interval { lo: mid, hi: mid };
    }
    let rep = pingpong::check_nesting(&t, 2).map_err(|e| e.to_string())?;
    ensure(!rep.passed, "corrupted table passed")?;
    let w = rep.witness.ok_or("no nesting witness")?;
    let relation = match pingpong::algebraic_free_oracle(&m.parse("T").unwrap(), &m.parse("T^2").unwrap(), 4) {
        Err(Error::RelationFound { word }) => word,
        other => return Err(format!("T, T^2 not rejected: {other:?}")),
    };
    Ok(format!("nesting witness n = {} on axis {}; relation {relation}", w.n, w.axis))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("free-group growth exactness", free_growth_exact),
        ("upper/lower bound sandwich", growth_sandwich),
        ("sanov freeness oracle", sanov_oracle),
        ("minimal hyperbolic witness", minimal_modular_witness),
        ("lemma suites", lemma_suites),
        ("end-to-end certificate", modular_certificate),
        ("ford horoball system", ford_system),
        ("virtually cyclic path", virtually_cyclic),
        ("adversarial ping-pong", adversarial),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
