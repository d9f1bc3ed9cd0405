//! Seeded simulation of both tests on shared samples, reporting error and
//! rejection rates per length and the fitted error exponent.
//!
//! Run with `cargo run --release --example monte_carlo`.

use seqmatch::decision::Mode;
use seqmatch::exponents::bernoulli_pair;
use seqmatch::simulate::{compare_tests, two_proportion_z, SimPlan, TestKind};
use seqmatch::Matching;

fn main() -> seqmatch::Result<()> {
    let plan = SimPlan {
        mode: Mode::Known,
        sources: bernoulli_pair(0.35)?,
        observations: 2,
        outsiders: vec![],
        truth: Matching::identity(2, 2, 2)?,
        n_grid: vec![200, 400, 800, 1600],
        trials: 2000,
        lambda: 0.065,
        seed: 5,
        test: TestKind::Constrained,
    };
    let report = compare_tests(&plan)?;
    for r in [&report.constrained, &report.unconstrained] {
        println!("{} test, fitted exponent {:.4} ({:?})", r.test.name(), r.fit.value(), r.fit);
        for row in &r.rows {
            println!(
                "  n = {:>4}  error {:.4}  reject {:.4}  correct {:.4}",
                row.n,
                row.error_rate(),
                row.rejection_rate(),
                row.correct_rate()
            );
        }
    }
    for ((n, gap), (c, u)) in report
        .rejection_gap()
        .into_iter()
        .zip(report.constrained.rows.iter().zip(&report.unconstrained.rows))
    {
        let z = two_proportion_z(u.rejections, u.trials, c.rejections, c.trials);
        println!("n = {n:>4}: rejection gap {gap:+.4}, z = {z:.2}");
    }
    Ok(())
}
