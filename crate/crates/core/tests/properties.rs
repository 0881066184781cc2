use proptest::prelude::*;

use hypgrowth::arith::Mat2;
use hypgrowth::geometry::h2::{H2Geodesic, H2Point, Mobius};
use hypgrowth::geometry::tree::{inv, FreeWord, Letter, TreePath};
use hypgrowth::growth::{self, GrowthTable};
use hypgrowth::isometry::classify;
use hypgrowth::preset::Preset;
use hypgrowth::report::{ClassificationDoc, Document, Envelope, GrowthDoc};

fn mat() -> impl Strategy<Value = Mat2> {
    // Products of T^a S T^b: integral, determinant one.
    (-6i64..=6, -6i64..=6, 0usize..3).prop_map(|(a, b, n)| {
        let t = |k| Mat2::from_ints(1, k, 0, 1).unwrap();
        let s = Mat2::from_ints(0, -1, 1, 0).unwrap();
        let mut m = t(a).mul(&s).mul(&t(b));
        for _ in 0..n {
            m = m.mul(&s).mul(&t(a - b));
        }
        m
    })
}

fn letters(rank: u8, max: usize) -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec(0..2 * rank, 0..max)
}

fn point() -> impl Strategy<Value = H2Point> {
    (-5.0f64..5.0, -3.0f64..3.0).prop_map(|(x, ly)| H2Point::new(x, ly.exp()).unwrap())
}

fn is_reduced(w: &[Letter]) -> bool {
    w.windows(2).all(|p| p[1] != inv(p[0]))
}

proptest! {
    #[test]
    fn mat2_group_laws(a in mat(), b in mat(), c in mat()) {
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert!(a.mul(&a.inverse()).is_identity());
        prop_assert_eq!(a.mul(&b).inverse(), b.inverse().mul(&a.inverse()));
        prop_assert_eq!(a.pow(3), a.mul(&a).mul(&a));
    }

    #[test]
    fn free_words_reduce(x in letters(3, 24), y in letters(3, 24)) {
        let u = FreeWord::from_letters(x.iter().copied());
        let v = FreeWord::from_letters(y.iter().copied());
        prop_assert!(is_reduced(u.letters()));
        prop_assert!(u.len() <= x.len());
        let uv = u.mul(&v);
        prop_assert!(is_reduced(uv.letters()));
        prop_assert_eq!(uv.clone(), FreeWord::from_letters(x.iter().chain(&y).copied()));
        prop_assert!(u.mul(&u.inverse()).is_empty());
        prop_assert_eq!(uv.inverse(), v.inverse().mul(&u.inverse()));
    }

    #[test]
    fn h2_distance_is_a_metric(p in point(), q in point(), r in point()) {
        let (pq, qr, pr) = (p.distance(&q), q.distance(&r), p.distance(&r));
        prop_assert!(p.distance(&p).abs() < 1e-12);
        prop_assert!((pq - q.distance(&p)).abs() < 1e-12);
        prop_assert!(pr <= pq + qr + 1e-9);
    }

    #[test]
    fn mobius_maps_are_isometries(m in mat(), p in point(), q in point()) {
        let g: Mobius = m.mobius();
        let (gp, gq) = (g.apply_point(&p), g.apply_point(&q));
        let d = p.distance(&q);
        prop_assert!((gp.distance(&gq) - d).abs() < 1e-7 * (1.0 + d));
    }

    #[test]
    fn fermi_coordinates_round_trip(
        a in -4.0f64..4.0, gap in 0.1f64..6.0, s in -8.0f64..8.0, r in -4.0f64..4.0
    ) {
        use hypgrowth::arith::Boundary;
        let minus = Boundary::Real(a);
        let plus = Boundary::Real(a + gap);
        let g = H2Geodesic::line(minus, plus).unwrap();
        let p = g.point_at_fermi(s, r);
        let (s2, r2) = g.fermi(&p);
        prop_assert!((s - s2).abs() < 1e-7, "s {} vs {}", s, s2);
        prop_assert!((r - r2).abs() < 1e-7, "r {} vs {}", r, r2);
        // The signed offset is the distance to the foot.
        prop_assert!((p.distance(&g.point_at(s)) - r.abs()).abs() < 1e-7);
    }

    #[test]
    fn tree_projection_is_the_nearest_vertex(
        p in letters(2, 10), q in letters(2, 10), x in letters(2, 14)
    ) {
        let (p, q, x) = (FreeWord::from_letters(p), FreeWord::from_letters(q), FreeWord::from_letters(x));
        prop_assume!(p != q);
        let path = TreePath::segment(&p, &q);
        let (t, d) = path.project(&x);
        let dist = |v: &FreeWord| v.inverse().mul(&x).len() as u64;
        prop_assert_eq!(dist(&path.vertex_at(t)), d);
        let n = p.inverse().mul(&q).len() as i64;
        for s in 0..=n {
            if s != t {
                prop_assert!(dist(&path.vertex_at(s)) > d);
            }
        }
    }

    #[test]
    fn growth_is_submultiplicative(rank in 1usize..=3, radius in 1usize..=6) {
        let f = Preset::free(rank).unwrap();
        let t = growth::beta(&f.generators(), radius, 1_000_000).unwrap();
        prop_assert_eq!(growth::submultiplicativity_violation(&t), None);
        for k in 1..=radius {
            for j in 0..=k {
                prop_assert!(t.counts[k] <= t.counts[j] * t.counts[k - j]);
            }
        }
    }

    #[test]
    fn documents_round_trip(word in "[STst]{1,8}", counts in prop::collection::vec(1u64..50, 1..6)) {
        let m = Preset::modular();
        let g = m.parse(&word).unwrap();
        let c = classify(&g.iso);
        let mut cumulative = vec![1u64];
        for d in counts {
            cumulative.push(cumulative.last().unwrap() + d);
        }
        let table = GrowthTable::from_counts(cumulative);
        let docs = vec![
            Document::Classification(ClassificationDoc::new(&m, &word, &g.iso, &c)),
            Document::Growth(GrowthDoc {
                group: m.id.clone(),
                generators: vec!["S".into(), "T".into()],
                omega_upper: growth::omega_bounds(&table).0,
                table,
            }),
        ];
        for d in docs {
            let env = Envelope::new(d, true);
            let text = env.to_json().unwrap();
            let back = Envelope::from_json(&text).unwrap();
            back.validate().unwrap();
            prop_assert_eq!(back.to_json().unwrap(), text);
        }
    }
}
