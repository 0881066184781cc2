//! Values checked against independent computations: closed forms, brute-force
//! enumeration with machine integers, and frozen pipeline outputs.

use std::collections::HashSet;

use hypgrowth::arith::Mat2;
use hypgrowth::geometry::h2::H2Point;
use hypgrowth::growth::{self, GrowthOutcome, PipelineOptions};
use hypgrowth::horoballs::{self, Horoball};
use hypgrowth::isometry::{classify, Isometry, Kind};
use hypgrowth::pingpong;
use hypgrowth::preset::Preset;
use hypgrowth::search;
use num_rational::BigRational;
use num_traits::ToPrimitive;

type M = [i64; 4];

fn mul(x: M, y: M) -> M {
    [x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3]]
}

/// Sign-normalized, so `m` and `-m` agree in PSL(2).
fn normal(m: M) -> M {
    let first = m.iter().find(|&&e| e != 0).copied().unwrap_or(1);
    if first < 0 {
        m.map(|e| -e)
    } else {
        m
    }
}

const S: M = [0, -1, 1, 0];
const SI: M = [0, 1, -1, 0];
const T: M = [1, 1, 0, 1];
const TI: M = [1, -1, 0, 1];

#[test]
fn free_ball_counts_match_closed_form() {
    let f = Preset::free(2).unwrap();
    let t = growth::beta(&f.generators(), 10, 1_000_000).unwrap();
    for (k, &b) in t.counts.iter().enumerate() {
        assert_eq!(b, 2 * 3u64.pow(k as u32) - 1);
    }
    let f3 = Preset::free(3).unwrap();
    let t3 = growth::beta(&f3.generators(), 5, 1_000_000).unwrap();
    // 1 + 6 (5^k - 1) / 4
    for (k, &b) in t3.counts.iter().enumerate() {
        assert_eq!(b, 1 + 6 * (5u64.pow(k as u32) - 1) / 4);
    }
}

#[test]
fn modular_ball_counts_match_brute_force() {
    let radius = 7;
    let mut seen: HashSet<M> = HashSet::from([normal([1, 0, 0, 1])]);
    let mut frontier = vec![[1, 0, 0, 1]];
    let mut counts = vec![1u64];
    for _ in 0..radius {
        let mut next = Vec::new();
        for m in &frontier {
            for g in [S, SI, T, TI] {
                let p = mul(*m, g);
                if seen.insert(normal(p)) {
                    next.push(p);
                }
            }
        }
        frontier = next;
        counts.push(seen.len() as u64);
    }
    let t = growth::beta(&Preset::modular().generators(), radius, 1_000_000).unwrap();
    assert_eq!(t.counts, counts);
}

#[test]
fn sanov_ball_counts_are_free() {
    let t = growth::beta(&Preset::sanov().generators(), 6, 1_000_000).unwrap();
    assert_eq!(t.counts, vec![1, 5, 17, 53, 161, 485, 1457]);
}

#[test]
fn no_short_hyperbolic_modular_words() {
    // Every word of length <= 3 in S^±1, T^±1 has |trace| <= 2.
    let letters = [S, SI, T, TI];
    let mut words: Vec<M> = vec![[1, 0, 0, 1]];
    for len in 1..=4 {
        words = words.iter().flat_map(|w| letters.iter().map(move |l| mul(*w, *l))).collect();
        let max_trace = words.iter().map(|m| (m[0] + m[3]).abs()).max().unwrap();
        if len <= 3 {
            assert!(max_trace <= 2, "length {len}");
        } else {
            assert_eq!(max_trace, 3);
        }
    }
    let w = search::find_hyperbolic_in_ball(&Preset::modular().generators(), 6, 1_000_000).unwrap();
    assert_eq!(w.radius, 4);
    assert_eq!(classify(&w.element.iso).trace.as_deref(), Some("3"));
}

#[test]
fn ttst_is_the_golden_matrix() {
    let m = Preset::modular();
    let g = m.parse("TTST").unwrap();
    assert_eq!(g.iso, Isometry::Mobius(Mat2::from_ints(2, 1, 1, 1).unwrap()));
    let c = classify(&g.iso);
    assert_eq!(c.kind, Kind::Hyperbolic);
    // 2 arccosh(3/2) = 2 ln((3 + sqrt 5) / 2)
    let expected = 2.0 * ((3.0 + 5f64.sqrt()) / 2.0).ln();
    assert!((c.translation_length - expected).abs() < 1e-12);
    assert!((c.translation_length - 1.9248473002384143).abs() < 1e-15);
}

#[test]
fn distance_along_the_imaginary_axis() {
    for t in [0.1, 1.0, 7.5, 30.0] {
        let p = H2Point::new(0.0, 1.0).unwrap();
        let q = H2Point::new(0.0, f64::exp(t)).unwrap();
        assert!((p.distance(&q) - t).abs() < 1e-12 * t.max(1.0));
    }
    // cosh d = 1 + |z - w|^2 / (2 y y')
    let p = H2Point::new(0.3, 0.7).unwrap();
    let q = H2Point::new(-1.2, 2.5).unwrap();
    let cosh = 1.0 + ((0.3f64 + 1.2).powi(2) + (0.7f64 - 2.5).powi(2)) / (2.0 * 0.7 * 2.5);
    assert!((p.distance(&q) - cosh.acosh()).abs() < 1e-12);
}

#[test]
fn sanov_oracle_matches_machine_integer_enumeration() {
    // Reduced words of length <= 7 evaluated in i64, none is +-identity.
    let gens = [[1, 2, 0, 1], [1, -2, 0, 1], [1, 0, 2, 1], [1, 0, -2, 1]];
    let mut level: Vec<(usize, M)> = (0..4).map(|i| (i, gens[i])).collect();
    let mut total = level.len() as u64;
    for _ in 2..=7 {
        level = level
            .iter()
            .flat_map(|&(last, m)| (0..4).filter(move |&l| l != last ^ 1).map(move |l| (l, mul(m, gens[l]))))
            .collect();
        assert!(level.iter().all(|(_, m)| normal(*m) != [1, 0, 0, 1]));
        total += level.len() as u64;
    }
    let p = Preset::sanov();
    let r = pingpong::algebraic_free_oracle(&p.generator(0), &p.generator(1), 7).unwrap();
    assert!(r.passed);
    assert_eq!(r.words_checked, total);
    assert_eq!(total, pingpong::reduced_word_count(7));
}

#[test]
fn ford_disks_separation_by_hand() {
    // Disks tangent at p/q, p'/q' with diameters D = 1/(h q^2), D': disjoint
    // iff (x - x')^2 >= D D' (exact tangency criterion), in rationals.
    let h0 = BigRational::from_integer(2.into());
    let sys = horoballs::ford_system(3, &h0, 6).unwrap();
    let rep = horoballs::separation_check(&sys);
    let disks: Vec<(BigRational, BigRational)> = sys
        .balls
        .iter()
        .filter_map(|b| match b {
            Horoball::Disk { center, diameter } => Some((center.clone(), diameter.clone())),
            Horoball::HalfPlane { .. } => None,
        })
        .collect();
    let mut by_hand = true;
    for (i, (x, d)) in disks.iter().enumerate() {
        // Versus {y >= h0}: the top of the disk is at height d < h0.
        by_hand &= d < &h0;
        for (x2, d2) in &disks[i + 1..] {
            let dx = x - x2;
            by_hand &= &dx * &dx > d * d2;
        }
    }
    assert!(by_hand);
    assert!(rep.all_disjoint);
    assert_eq!(rep.pairs_checked, sys.balls.len() * (sys.balls.len() - 1) / 2);
    // Adjacent Farey pair 0/1, 1/3 at h0 = 2: distance ln(h0^2) exactly.
    assert!((rep.min_distance.unwrap() - 4f64.ln()).abs() < 1e-12);
}

#[test]
fn free_pair_bound_is_a_root_of_three() {
    assert_eq!(growth::free_pair_lower_bound(1), 3.0);
    assert!((growth::free_pair_lower_bound(2) - 3f64.sqrt()).abs() < 1e-15);
    let l = 8_191_042u64;
    let x = 3f64.ln() / l as f64;
    // 3^(1/l) - 1 = x + x^2/2 + ..., resolved to the f64 spacing near 1.
    assert!((growth::free_pair_lower_bound(l) - 1.0 - x - x * x / 2.0).abs() < 1e-15);
    assert!((growth::free_pair_lower_bound(l) - 1.0000001341236393).abs() < 1e-15);
}

#[test]
fn frozen_modular_pipeline() {
    let m = Preset::modular();
    let out = growth::uniform_growth_certificate(&m, &m.generators(), &PipelineOptions::default()).unwrap();
    let GrowthOutcome::Certificate(c) = out else { panic!("expected a certificate") };
    assert_eq!(c.hyperbolic.word, "STSt");
    assert_eq!(c.hyperbolic.checked, vec![1, 3, 6, 10, 16]);
    assert_eq!(c.boost, 104);
    assert_eq!(c.gamma, "T");
    assert_eq!(c.constants.k1, 1969);
    // 10 k1 |s| + 2 |gamma| = 10 * 1969 * 416 + 2
    assert_eq!(c.lower_bound_length, 10 * 1969 * 416 + 2);
    assert!(c.free_pair.oracle.passed);
    assert_eq!(c.free_pair.oracle.words_checked, pingpong::reduced_word_count(8));
    assert!(c.lower_bound > 1.0);
    assert_eq!(c.lower_bound, growth::free_pair_lower_bound(c.lower_bound_length));
}

#[test]
fn frozen_sanov_pipeline() {
    let p = Preset::sanov();
    let out = growth::uniform_growth_certificate(&p, &p.generators(), &PipelineOptions::default()).unwrap();
    let GrowthOutcome::Certificate(c) = out else { panic!("expected a certificate") };
    assert_eq!((c.hyperbolic.word.as_str(), c.boost, c.gamma.as_str()), ("ab", 57, "a"));
    assert_eq!(c.constants.k1, 1458);
    assert!(c.free_pair.disjoint.verified && c.free_pair.nesting.passed);
}

#[test]
fn k1_for_the_free_group_is_frozen() {
    let p = Preset::free(2).unwrap();
    let sys = horoballs::HoroballSystem::empty();
    let c = horoballs::k1_census(&p, &sys, 0.0, 4).unwrap();
    // Only the identity fixes the root.
    assert_eq!((c.k1, c.max_count), (2, 1));
    assert_eq!(c.ball_size, 161);
    assert_eq!(c.threshold.to_f64(), Some(0.0));
}
