//! Property tests for the structural invariants the library promises:
//! gauge transforms never change evaluations, serialization round-trips
//! bit-exactly, pivot indexing reconstructs its input, and reconstructed
//! ranks respect their caps.

use proptest::prelude::*;
use ttkit::site::{Configuration, SiteValue};
use ttkit::{
    decompose, index_pivots, random_tt_oracle, relative_error, sample_pivots_uniform,
    PivotSet, SketchConfig, TensorTrain,
};

/// A random tensor train described by scalar knobs, so failures shrink
/// toward tiny instances.
fn arb_tt() -> impl Strategy<Value = TensorTrain<f64>> {
    (2usize..=5, 1usize..=3, 1usize..=3, 0u64..1000).prop_map(|(n, d, rank, seed)| {
        random_tt_oracle(n, d, rank, seed).unwrap().tt().clone()
    })
}

fn probe_points(tt: &TensorTrain<f64>, seed: u64) -> Vec<Configuration> {
    match sample_pivots_uniform(tt.sites(), 3, seed) {
        Ok(p) => p.points().to_vec(),
        // Tiny domains may not hold three distinct points; one is enough.
        Err(_) => vec![tt
            .sites()
            .iter()
            .map(|_| SiteValue::Index(1))
            .collect()],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn canonicalize_keeps_evaluations_and_fixes_gauge(tt in arb_tt(), seed in 0u64..100) {
        let can = tt.left_canonicalize().unwrap();
        prop_assert!(can.left_gauge_residual() <= 1e-10);
        for x in probe_points(&tt, seed) {
            let a = tt.evaluate(&x).unwrap();
            let b = can.evaluate(&x).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn obfuscation_is_invisible_pointwise(tt in arb_tt(), seed in 0u64..100) {
        let hidden = tt.obfuscate(seed).unwrap();
        prop_assert_eq!(hidden.ranks(), tt.ranks());
        for x in probe_points(&tt, seed) {
            let a = tt.evaluate(&x).unwrap();
            let b = hidden.evaluate(&x).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn json_round_trip_is_identity(tt in arb_tt()) {
        let text = ttkit::io::tt_to_string(&tt);
        let back = match ttkit::io::tt_from_string(&text).unwrap() {
            ttkit::AnyTt::Real(t) => t,
            _ => return Err(TestCaseError::fail("field changed in round trip")),
        };
        prop_assert_eq!(back, tt);
    }

    #[test]
    fn relative_error_is_zero_on_self_and_scale_free(
        v in prop::collection::vec(-10.0f64..10.0, 1..20),
        w in prop::collection::vec(-10.0f64..10.0, 1..20),
        alpha in 0.1f64..100.0,
    ) {
        if v.iter().all(|x| *x == 0.0) {
            return Ok(());
        }
        prop_assert_eq!(relative_error(&v, &v, 0.0).unwrap(), 0.0);
        let w = &w[..v.len().min(w.len())];
        let v = &v[..w.len()];
        if v.iter().any(|x| *x != 0.0) {
            let base = relative_error(v, w, 0.0).unwrap();
            let sv: Vec<f64> = v.iter().map(|x| alpha * x).collect();
            let sw: Vec<f64> = w.iter().map(|x| alpha * x).collect();
            let scaled = relative_error(&sv, &sw, 0.0).unwrap();
            prop_assert!((base - scaled).abs() <= 1e-10 * (1.0 + base));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pivot_indexing_reconstructs_every_level(
        n in 2usize..=5,
        d in 2usize..=3,
        count in 2usize..=6,
        seed in 0u64..1000,
    ) {
        let sites: Vec<_> = (0..n)
            .map(|_| ttkit::SiteSpec::discrete(d).unwrap())
            .collect();
        let count = count.min(d.pow(n as u32));
        let pivots = match sample_pivots_uniform(&sites, count, seed) {
            Ok(p) => p,
            Err(_) => return Ok(()),
        };
        let idx = index_pivots(&pivots);

        // Full-length prefixes are exactly the pivot rows, in order.
        prop_assert_eq!(idx.prefix_configs(&pivots, n), pivots.points().to_vec());

        for k in 0..=n {
            let m = n - k;
            // First-occurrence dedup of heads and tails, recomputed directly.
            let mut heads: Vec<Vec<SiteValue>> = Vec::new();
            let mut tails: Vec<Vec<SiteValue>> = Vec::new();
            for row in pivots.points() {
                let head = row[..k].to_vec();
                if !heads.contains(&head) {
                    heads.push(head);
                }
                let tail = row[n - m..].to_vec();
                if !tails.contains(&tail) {
                    tails.push(tail);
                }
            }
            prop_assert_eq!(idx.prefix_count(k), heads.len());
            prop_assert_eq!(idx.suffix_count(m), tails.len());
            prop_assert_eq!(idx.prefix_configs(&pivots, k), heads.clone());
            prop_assert_eq!(idx.suffix_configs(&pivots, m), tails);

            // Parent links: every prefix extends its parent by its value.
            if k >= 1 {
                let parents = idx.prefix_parents(k);
                let values = idx.prefix_values(k);
                let shorter = idx.prefix_configs(&pivots, k - 1);
                for (i, config) in heads.iter().enumerate() {
                    let mut rebuilt = shorter[parents[i]].clone();
                    rebuilt.push(values[i]);
                    prop_assert_eq!(&rebuilt, config);
                }
            }
        }
    }

    #[test]
    fn pivot_csv_round_trip(
        n in 2usize..=4,
        d in 2usize..=3,
        count in 2usize..=5,
        seed in 0u64..1000,
    ) {
        let sites: Vec<_> = (0..n)
            .map(|_| ttkit::SiteSpec::discrete(d).unwrap())
            .collect();
        let count = count.min(d.pow(n as u32));
        let pivots = match sample_pivots_uniform(&sites, count, seed) {
            Ok(p) => p,
            Err(_) => return Ok(()),
        };
        let text = ttkit::io::pivots_to_string(&pivots);
        let back = ttkit::io::pivots_from_string(&text, &sites, false).unwrap();
        prop_assert_eq!(back.points(), pivots.points());
    }

    #[test]
    fn reconstruction_respects_rank_caps(
        n in 3usize..=5,
        rank in 1usize..=3,
        r_max in 1usize..=4,
        count in 3usize..=6,
        seed in 0u64..500,
    ) {
        let oracle = random_tt_oracle(n, 2, rank, seed).unwrap();
        let pivots = match sample_pivots_uniform(
            oracle.tt().sites(),
            count.min(1 << n),
            seed,
        ) {
            Ok(p) => p,
            Err(_) => return Ok(()),
        };
        let cfg = SketchConfig::new(r_max, seed);
        let (tt, report) = decompose(&oracle, &pivots, &cfg).unwrap();
        prop_assert_eq!(&report.ranks, &tt.ranks());
        let ranks = tt.ranks();
        prop_assert_eq!(ranks[0], 1);
        prop_assert_eq!(ranks[n], 1);
        for r in &ranks[1..n] {
            prop_assert!(*r <= r_max);
        }
        for x in probe_points(oracle.tt(), seed) {
            prop_assert!(tt.evaluate(&x).unwrap().is_finite());
        }
    }
}

#[test]
fn pivot_set_requires_two_distinct_rows() {
    let sites: Vec<_> = (0..3)
        .map(|_| ttkit::SiteSpec::discrete(2).unwrap())
        .collect();
    let row: Configuration = vec![
        SiteValue::Index(1),
        SiteValue::Index(2),
        SiteValue::Index(1),
    ];
    assert!(PivotSet::new(vec![row.clone(), row], &sites).is_err());
}
