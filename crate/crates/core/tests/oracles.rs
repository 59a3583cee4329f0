use num_bigint::BigUint;
use num_traits::Zero;
use salemca::analysis::{build_function_table, classify_salem, Verdict};
use salemca::closedform::ClosedFormFamily;
use salemca::engine::{run_counts, EngineOptions};
use salemca::salem::SalemParams;
use salemca::Rule;

const HORIZONS: [(u32, u32); 5] = [(1, 12), (2, 8), (3, 6), (4, 4), (5, 3)];

fn families(dim: u32) -> [(Rule, ClosedFormFamily); 2] {
    [
        (Rule::f_d(dim).unwrap(), ClosedFormFamily::f_d(dim).unwrap()),
        (Rule::g_d(dim).unwrap(), ClosedFormFamily::g_d(dim).unwrap()),
    ]
}

#[test]
fn engine_counts_equal_closed_forms() {
    let opts = EngineOptions::default();
    for (dim, k) in HORIZONS {
        for (rule, fam) in families(dim) {
            let top = (1u64 << k) - 1;
            let counts = run_counts(&rule, top, &opts).unwrap();
            for n in 0..=top {
                assert_eq!(counts.num()[n as usize], fam.closed_num(n), "{rule} num({n})");
                assert_eq!(
                    counts.cum()[n as usize],
                    fam.cum_decompose(n + 1, k).unwrap(),
                    "{rule} cum({n})"
                );
            }
            for j in 0..=k {
                assert_eq!(counts.cum()[(1usize << j) - 1], fam.closed_cum_pow2(j));
            }
        }
    }
}

#[test]
fn hexagonal_counts_equal_closed_forms() {
    let opts = EngineOptions::default();
    for (idx, fam) in [(2, ClosedFormFamily::h2()), (3, ClosedFormFamily::h3())] {
        let counts = run_counts(&Rule::hexagonal(idx).unwrap(), 255, &opts).unwrap();
        for n in 0..=255u64 {
            assert_eq!(counts.num()[n as usize], fam.closed_num(n));
            assert_eq!(counts.cum()[n as usize], fam.cum_decompose(n + 1, 8).unwrap());
        }
    }
}

#[test]
fn g2_decomposition_matches_engine() {
    let fam = ClosedFormFamily::g_d(2).unwrap();
    let counts = run_counts(&Rule::g_d(2).unwrap(), 21, &EngineOptions::default()).unwrap();
    assert_eq!(fam.cum_decompose(22, 5).unwrap(), counts.cum()[21]);
}

#[test]
fn function_tables_equal_salem() {
    let opts = EngineOptions::default();
    for (dim, k) in HORIZONS {
        for (rule, fam) in families(dim) {
            let counts = run_counts(&rule, (1u64 << k) - 1, &opts).unwrap();
            let table = build_function_table(&counts, k).unwrap();
            let params = SalemParams::reciprocal(fam.mass()).unwrap();
            assert_eq!(table.first_salem_mismatch(&params), None, "{rule}");
            assert!(table.is_strictly_increasing());
        }
    }
    for (idx, m) in [(2, 5), (3, 4)] {
        let counts = run_counts(&Rule::hexagonal(idx).unwrap(), 255, &opts).unwrap();
        let table = build_function_table(&counts, 8).unwrap();
        assert_eq!(table.first_salem_mismatch(&SalemParams::reciprocal(m).unwrap()), None);
    }
}

#[test]
fn tables_agree_across_precisions_for_self_similar_rules() {
    let opts = EngineOptions::default();
    let rules = [
        Rule::f_d(2).unwrap(),
        Rule::g_d(3).unwrap(),
        Rule::hexagonal(2).unwrap(),
        Rule::hexagonal(3).unwrap(),
    ];
    for rule in rules {
        let counts = run_counts(&rule, 63, &opts).unwrap();
        let fine = build_function_table(&counts, 6).unwrap();
        for j in 1..6 {
            let coarse = build_function_table(&counts, j).unwrap();
            for (m, v) in coarse.iter() {
                assert_eq!(fine.at(m << (6 - j)).unwrap(), v, "{rule} at {m}/2^{j}");
            }
        }
    }
}

#[test]
fn f_and_g_are_never_refuted() {
    let opts = EngineOptions::default();
    for (dim, k) in HORIZONS {
        for (rule, fam) in families(dim) {
            if k < 2 {
                continue;
            }
            let report = classify_salem(&rule, k, &opts).unwrap();
            assert_eq!(
                report.verdict,
                Verdict::Match {
                    m: BigUint::from(fam.branching())
                },
                "{rule}"
            );
        }
    }
}

#[test]
fn zero_rule_counts() {
    let counts = run_counts(&"sq:2:000".parse().unwrap(), 4, &EngineOptions::default()).unwrap();
    assert!(counts.num()[1..].iter().all(Zero::is_zero));
    assert_eq!(counts.cum()[4], BigUint::from(1u32));
}
