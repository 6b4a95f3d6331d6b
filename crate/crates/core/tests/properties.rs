use center_outward::assignment::solve_slots;
use center_outward::grid::{GridSpec, SphericalGrid};
use center_outward::points::PointSet;
use center_outward::potential::EmpiricalMap;
use center_outward::rng::derive_seed;
use proptest::prelude::*;

fn points(d: usize, n: usize, scale: f64) -> impl Strategy<Value = PointSet<f64>> {
    prop::collection::vec(-scale..scale, n * d).prop_map(move |c| PointSet::from_flat(d, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn duals_certify_optimality((sample, slots) in (1usize..12).prop_flat_map(|n| (points(2, n, 3.0), points(2, n, 1.0)))) {
        let r = solve_slots(&sample, &slots).unwrap();
        prop_assert!(r.max_dual_violation(&sample, &slots) <= 1e-9);
        prop_assert!((r.total_cost - r.dual_objective).abs() <= 1e-9 * (1.0 + r.total_cost));
        let mut seen = r.sigma.clone();
        seen.sort();
        prop_assert_eq!(seen, (0..sample.len()).collect::<Vec<_>>());
    }

    #[test]
    fn fitted_map_contract(seed in any::<u64>(), nr in 1usize..4, ns in 2usize..7, n0 in 0usize..3) {
        let grid = SphericalGrid::<f64>::build(GridSpec::new(2, nr, ns, n0, Some(seed))).unwrap();
        let sample = center_outward::oracles::Distribution::TwoBall { d: 2 }
            .sample::<f64>(grid.n(), derive_seed(seed, &[1]))
            .unwrap();
        let m = EmpiricalMap::fit(&sample, &grid, None).unwrap();
        prop_assert!(m.is_strict());
        for (i, x) in sample.rows().enumerate() {
            prop_assert_eq!(m.moreau_map(x).unwrap(), grid.points().row(m.piece_of_sample()[i]).to_vec());
        }
        let probe = [seed as f64 % 7.0 - 3.5, (seed >> 8) as f64 % 5.0 - 2.5];
        let f = m.moreau_map(&probe).unwrap();
        prop_assert!(f.iter().map(|c| c * c).sum::<f64>() <= 1.0 + 1e-12);
    }

    #[test]
    fn envelope_sandwich(seed in any::<u64>(), x in prop::array::uniform2(-4.0f64..4.0)) {
        // φ̂ − ε/2 ≤ e_ε φ̂ ≤ φ̂ because φ̂ is 1-Lipschitz
        let grid = SphericalGrid::<f64>::build(GridSpec::new(2, 2, 5, 1, Some(seed))).unwrap();
        let sample = center_outward::measure::SphericalUniform::<f64>::new(2).unwrap().sample(grid.n(), seed);
        let m = EmpiricalMap::fit(&sample, &grid, Some(0.1)).unwrap();
        let phi = m.potential().eval(&x);
        let e = m.envelope(&x).unwrap();
        prop_assert!(e <= phi + 1e-12 && e >= phi - 0.05 - 1e-12);
    }
}
