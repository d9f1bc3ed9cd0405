use seqmatch::decision::Mode;
use seqmatch::exponents::bernoulli_pair;
use seqmatch::simulate::{compare_tests, run_plan, SimPlan, TestKind};
use seqmatch::Matching;

fn plan(mode: Mode, rho: f64, lambda: f64, n_grid: Vec<usize>, trials: usize) -> SimPlan {
    SimPlan {
        mode,
        sources: bernoulli_pair(rho).unwrap(),
        observations: 2,
        outsiders: vec![],
        truth: Matching::identity(2, 2, 2).unwrap(),
        n_grid,
        trials,
        lambda,
        seed: 31,
        test: TestKind::Constrained,
    }
}

#[test]
fn example_one_error_rate_within_guarantee() {
    let p = plan(Mode::Known, 0.1, 0.05, vec![50, 100, 200, 400], 10_000);
    let r = run_plan(&p).unwrap();
    let rates: Vec<f64> = r.rows.iter().map(|row| row.error_rate()).collect();
    assert!(rates.windows(2).all(|w| w[1] <= w[0]), "{rates:?}");
    assert!(rates[3] <= 10.0 * (-0.04f64 * 400.0).exp2());
}

#[test]
fn indistinguishable_sources_are_rejected() {
    // Ber(½) twice; known mode refuses identical sources, so use training
    // sequences.
    let mut p = plan(Mode::Unknown, 0.5, 0.05, vec![4000], 200);
    let r = compare_tests(&p).unwrap();
    for rep in [&r.constrained, &r.unconstrained] {
        assert!(rep.rows[0].rejection_rate() > 0.95, "{:?}", rep.rows[0]);
    }
    p.mode = Mode::Known;
    assert!(run_plan(&p).is_err());
}

#[test]
fn reports_are_reproducible_across_thread_pools() {
    let p = plan(Mode::Unknown, 0.3, 0.05, vec![10, 30], 500);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(6).build().unwrap();
    let a = one.install(|| compare_tests(&p).unwrap());
    let b = many.install(|| compare_tests(&p).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, compare_tests(&p).unwrap());
}

#[test]
fn constrained_rejects_no_more_than_unconstrained() {
    let p = plan(Mode::Known, 0.35, 0.065, vec![400, 1600], 2000);
    let r = compare_tests(&p).unwrap();
    let (c, u) = (r.constrained.rows[1], r.unconstrained.rows[1]);
    let se = |q: f64| (q * (1.0 - q) / c.trials as f64).sqrt();
    let (qc, qu) = (c.rejection_rate(), u.rejection_rate());
    assert!(qc <= qu + 2.0 * (se(qc).powi(2) + se(qu).powi(2)).sqrt(), "{qc} vs {qu}");
    assert!(qu > qc);
}

#[test]
fn partial_matching_with_outsiders() {
    let mus = bernoulli_pair(0.1).unwrap();
    let p = SimPlan {
        mode: Mode::Known,
        sources: mus.clone(),
        observations: 2,
        outsiders: vec![seqmatch::Distribution::new(vec![0.2, 0.8]).unwrap()],
        truth: Matching::new(vec![(1, 0)], 2, 2).unwrap(),
        n_grid: vec![100],
        trials: 300,
        lambda: 0.01,
        seed: 4,
        test: TestKind::Constrained,
    };
    let row = run_plan(&p).unwrap().rows[0];
    assert_eq!(row.trials, 300);
    assert!(row.correct_rate() > 0.9, "{row:?}");
}
