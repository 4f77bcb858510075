//! Randomized invariants over generated models.

use mrf_relax::generate::{gen_grid, gen_random, Connectivity, PairwisePotential};
use mrf_relax::io::{parse_model, serialize_native};
use mrf_relax::model::init_random;
use mrf_relax::oracle::{brute_force_map, brute_force_map_with, DEFAULT_ORACLE_CAP};
use mrf_relax::par::Execution;
use mrf_relax::solvers::{bcd_solve, fw_solve, pgd_solve, round_bcd, solve, SolverConfig, SolverKind};
use mrf_relax::tensor::{bcd_coefficient, CoefficientCache};
use mrf_relax::{Clique, ContinuousAssignment, DiscreteLabeling, MrfModel};
use proptest::prelude::*;

fn small_model() -> impl Strategy<Value = MrfModel> {
    (2usize..6, 1usize..4, 1usize..7, any::<u64>())
        .prop_map(|(n, order, cliques, seed)| gen_random(n, 1..=3, order.min(n), cliques, seed).unwrap())
}

fn labeling_for(model: &MrfModel, seed: u64) -> DiscreteLabeling {
    let x = init_random(model, seed);
    DiscreteLabeling::new(
        x.blocks()
            .iter()
            .map(|b| {
                b.iter()
                    .enumerate()
                    .fold(0, |best, (s, &v)| if v > b[best] { s } else { best })
            })
            .collect(),
    )
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn non_increasing(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn indicator_energy_matches_discrete(model in small_model(), seed in any::<u64>()) {
        let l = labeling_for(&model, seed);
        let x = ContinuousAssignment::one_hot(model.label_counts(), &l);
        prop_assert!(close(model.energy_continuous(&x).unwrap(), model.energy_discrete(&l), 1e-12));
    }

    #[test]
    fn energy_is_affine_in_each_block(model in small_model(), seed in any::<u64>(), t in 0.0f64..=1.0) {
        let x = init_random(&model, seed);
        let other = init_random(&model, seed ^ 0x5555);
        for i in 0..model.num_nodes() {
            let (mut a, mut b, mut mix) = (x.clone(), x.clone(), x.clone());
            *a.block_mut(i) = x.block(i).to_vec();
            *b.block_mut(i) = other.block(i).to_vec();
            *mix.block_mut(i) = x.block(i).iter().zip(other.block(i)).map(|(p, q)| t * p + (1.0 - t) * q).collect();
            let lhs = model.energy_continuous(&mix).unwrap();
            let rhs = t * model.energy_continuous(&a).unwrap() + (1.0 - t) * model.energy_continuous(&b).unwrap();
            prop_assert!(close(lhs, rhs, 1e-10));
        }
    }

    #[test]
    fn energy_ignores_clique_order(model in small_model(), seed in any::<u64>()) {
        let mut cliques = model.cliques().to_vec();
        cliques.reverse();
        let reversed = MrfModel::new(model.label_counts().to_vec(), cliques).unwrap();
        let x = init_random(&model, seed);
        prop_assert!(close(model.energy_continuous(&x).unwrap(), reversed.energy_continuous(&x).unwrap(), 1e-12));
    }

    #[test]
    fn cached_coefficients_stay_fresh(model in small_model(), seed in any::<u64>(), steps in prop::collection::vec((any::<prop::sample::Index>(), any::<u64>()), 1..20)) {
        let mut x = init_random(&model, seed);
        let mut cache = CoefficientCache::new(&model, 1);
        for (pick, s) in steps {
            let i = pick.index(model.num_nodes());
            *x.block_mut(i) = init_random(&model, s).block(i).to_vec();
            cache.invalidate(&model, None, i);
            for j in 0..model.num_nodes() {
                prop_assert_eq!(cache.bcd(&model, &x, j).to_vec(), bcd_coefficient(&model, &x, j).unwrap());
            }
        }
    }

    #[test]
    fn rounding_is_tight(model in small_model(), seed in any::<u64>()) {
        let x = init_random(&model, seed);
        let l = round_bcd(&model, &x).unwrap();
        prop_assert!(model.energy_discrete(&l) <= model.energy_continuous(&x).unwrap() + 1e-9);
    }

    #[test]
    fn descent_traces_do_not_increase(model in small_model(), seed in any::<u64>()) {
        let x0 = init_random(&model, seed);
        let cfg = SolverConfig { max_iters: 300, ..SolverConfig::default() };
        for report in [bcd_solve(&model, &x0, &cfg).unwrap(), pgd_solve(&model, &x0, &cfg).unwrap(), fw_solve(&model, &x0, &cfg).unwrap()] {
            prop_assert!(non_increasing(&report.energy_trace), "{:?}: {:?}", report.solver, report.energy_trace);
            prop_assert!(report.discrete_energy <= report.continuous_energy + 1e-9);
        }
    }

    #[test]
    fn power_of_two_scaling_is_equivariant(model in small_model(), seed in any::<u64>(), power in -6i32..6) {
        let c = 2f64.powi(power);
        let scaled = model.scaled(c);
        let x0 = init_random(&model, seed);
        let cfg = SolverConfig { max_iters: 200, ..SolverConfig::default() };
        for kind in [SolverKind::Bcd, SolverKind::Pgd, SolverKind::Fw, SolverKind::Admm] {
            let a = solve(kind, &model, &x0, &cfg).unwrap();
            let b = solve(kind, &scaled, &x0, &cfg).unwrap();
            prop_assert_eq!(&a.final_labeling, &b.final_labeling);
            prop_assert_eq!(a.iterations, b.iterations);
            prop_assert!(close(a.discrete_energy * c, b.discrete_energy, 1e-12));
        }
    }

    #[test]
    fn native_format_round_trips(model in small_model()) {
        prop_assert_eq!(parse_model(&serialize_native(&model)).unwrap(), model);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn oracle_is_permutation_equivariant(model in small_model(), perm_seed in any::<u64>()) {
        let n = model.num_nodes();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.sort_by_key(|&i| (i as u64 ^ perm_seed).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let counts: Vec<usize> = (0..n).map(|new| model.label_counts()[perm.iter().position(|&p| p == new).unwrap()]).collect();
        let cliques = model.cliques().iter().map(|c| Clique::new(c.nodes.iter().map(|&v| perm[v]).collect(), c.potential.clone())).collect();
        let permuted = MrfModel::new(counts, cliques).unwrap();
        let (la, ea) = brute_force_map(&model, DEFAULT_ORACLE_CAP).unwrap();
        let (lb, eb) = brute_force_map(&permuted, DEFAULT_ORACLE_CAP).unwrap();
        prop_assert!(close(ea, eb, 1e-12));
        let mapped = DiscreteLabeling::new((0..n).map(|new| la.labels()[perm.iter().position(|&p| p == new).unwrap()]).collect());
        prop_assert!(close(permuted.energy_discrete(&mapped), eb, 1e-12));
        prop_assert!(close(model.energy_discrete(&la), permuted.energy_discrete(&lb), 1e-12));
    }
}

#[test]
fn serial_and_parallel_runs_are_bitwise_identical() {
    // 20x20 lies above the parallel threshold for node-level maps.
    let model = gen_grid(20, 20, 3, Connectivity::N8, PairwisePotential::Random, 11).unwrap();
    let x0 = init_random(&model, 3);
    for kind in [
        SolverKind::Bcd,
        SolverKind::Pgd,
        SolverKind::Fw,
        SolverKind::Admm,
        SolverKind::Cqp,
    ] {
        let serial = SolverConfig {
            max_iters: 150,
            execution: Execution::Serial,
            ..SolverConfig::default()
        };
        let parallel = SolverConfig {
            execution: Execution::Parallel,
            ..serial.clone()
        };
        let a = solve(kind, &model, &x0, &serial).unwrap();
        let b = solve(kind, &model, &x0, &parallel).unwrap();
        assert!(
            a.same_outcome(&b),
            "{kind} differs between serial and parallel execution"
        );
    }
    let small = gen_grid(3, 5, 2, Connectivity::N8, PairwisePotential::Random, 2).unwrap();
    assert_eq!(
        brute_force_map_with(&small, DEFAULT_ORACLE_CAP, Execution::Serial).unwrap(),
        brute_force_map_with(&small, DEFAULT_ORACLE_CAP, Execution::Parallel).unwrap()
    );
}
