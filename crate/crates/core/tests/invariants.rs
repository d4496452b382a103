use proptest::prelude::*;

use snakeweaver::operator::jensen_gap_nats;
use snakeweaver::oracles::random::{random_density, rng};
use snakeweaver::oracles::{LineMarkovState, Orientation};
use snakeweaver::{
    med, right_merge, BlockPath, DensityOperator, MarginalFile, LogBase, Region, Vertex, Window,
};

fn row(range: std::ops::Range<i64>) -> Region {
    range.map(|x| Vertex::new(x, 0)).collect()
}

fn state(n: i64, rank: usize, seed: u64) -> DensityOperator {
    let rank = rank.clamp(1, 1 << n);
    random_density(row(0..n), 2, Some(rank), &mut rng(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_keeps_unit_trace_and_psd(n in 2i64..=5, rank in 1usize..32, seed in any::<u64>(), k in 1i64..5) {
        let rho = state(n, rank, seed);
        let keep = row(0..k.min(n));
        let red = rho.partial_trace(&keep).unwrap();
        prop_assert!((red.matrix().trace().re - 1.0).abs() < 1e-10);
        prop_assert!(red.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn entropy_within_bounds(n in 1i64..=5, rank in 1usize..32, seed in any::<u64>()) {
        let rho = state(n, rank, seed);
        let s = rho.entropy();
        prop_assert!(s >= -1e-12);
        prop_assert!(s <= n as f64 + 1e-10);
        prop_assert!(s <= (rank.clamp(1, 1 << n) as f64).log2() + 1e-9);
    }

    #[test]
    fn strong_subadditivity(n in 3i64..=5, seed in any::<u64>(), cut in 1i64..4) {
        let rho = state(n, 1 << n, seed);
        let c1 = cut.min(n - 2);
        let (a, b, c) = (row(0..c1), row(c1..n - 1), row(n - 1..n));
        prop_assert!(rho.cmi(&a, &b, &c).unwrap() >= -1e-10);
    }

    #[test]
    fn weak_monotonicity(seed in any::<u64>(), rank in 1usize..9) {
        let rho = state(3, rank, seed);
        let (a, b, c) = (row(0..1), row(1..2), row(2..3));
        let lhs = rho.entropy_of(&a.union(&b)).unwrap() + rho.entropy_of(&b.union(&c)).unwrap();
        let rhs = rho.entropy_of(&a).unwrap() + rho.entropy_of(&c).unwrap();
        prop_assert!(lhs >= rhs - 1e-10);
    }

    #[test]
    fn jensen_gap_bounds_trace_norm(n in 1i64..=3, s1 in any::<u64>(), s2 in any::<u64>()) {
        let (x, y) = (state(n, 1 << n, s1), state(n, 1 << n, s2));
        let gap = jensen_gap_nats(&x, &y).unwrap();
        let l1 = 2.0 * x.trace_distance(&y).unwrap();
        prop_assert!(gap >= -1e-12 && gap <= std::f64::consts::LN_2 + 1e-12);
        prop_assert!(l1 * l1 <= 8.0 * gap + 1e-9);
    }

    #[test]
    fn med_bounds_entropy(w in 2i64..=3, seed in any::<u64>()) {
        let region: Region = (0..2).flat_map(|y| (0..w).map(move |x| Vertex::new(x, y))).collect();
        let rho = random_density(region.clone(), 2, None, &mut rng(seed)).unwrap();
        let m = med(&rho, &BlockPath::row_major(&region).unwrap()).unwrap();
        prop_assert!(m >= rho.entropy() - 1e-9);
    }

    #[test]
    fn merge_recovers_markov_chains(seed in any::<u64>()) {
        let st = LineMarkovState::random(Window::new(4, 1).unwrap(), 2, Orientation::Rows, seed, true);
        let left = st.marginal(&row(0..3)).unwrap();
        let right = st.marginal(&row(1..4)).unwrap();
        let merged = right_merge(&left, &right).unwrap();
        prop_assert!(merged.trace_distance(&st.global().unwrap()).unwrap() < 1e-8);
    }

    #[test]
    fn merge_output_is_a_state(s1 in any::<u64>(), s2 in any::<u64>()) {
        let sigma = random_density(row(0..2), 2, None, &mut rng(s1)).unwrap();
        let rho = random_density(row(1..3), 2, None, &mut rng(s2)).unwrap();
        let out = right_merge(&sigma, &rho).unwrap();
        prop_assert_eq!(out.region(), &row(0..3));
        prop_assert!(out.min_eigenvalue() > -1e-9);
        prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn marginal_files_round_trip(seed in 0u64..1000) {
        let ms = LineMarkovState::random(Window::new(3, 3).unwrap(), 2, Orientation::Columns, seed, true)
            .marginal_set()
            .unwrap();
        let text = MarginalFile::from_set(&ms, LogBase::E, Some(seed), None).to_json().unwrap();
        let back = MarginalFile::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json().unwrap(), text);
        let again = back.into_set().unwrap();
        for (anchor, op) in ms.marginals() {
            prop_assert_eq!(again.marginal(*anchor).unwrap().matrix(), op.matrix());
        }
    }
}
