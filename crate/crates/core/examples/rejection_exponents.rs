//! Rejection exponents as the target error exponent lambda grows past the
//! no-rejection error exponents.
//!
//! Run with `cargo run --example rejection_exponents`.

use seqmatch::exponents::{bernoulli_pair, e_eta, chernoff_with_alpha, rejection_exponents};

fn main() -> seqmatch::Result<()> {
    let mus = bernoulli_pair(0.3)?;
    let (c, alpha) = chernoff_with_alpha(&mus[0], &mus[1])?;
    println!("C(mu1, mu2) = {c:.6} at alpha = {alpha:.4}");
    println!("E at eta = C is {:.6}", e_eta(&mus[0], &mus[1], c)?);

    println!("{:>6}  {:>10}  {:>10}  {:>12}  {:>12}", "lambda", "C*", "C_uc*", "rej joint", "rej single");
    for i in 1..=8 {
        let lambda = i as f64 * 0.01;
        let r = rejection_exponents(&mus, lambda)?;
        println!(
            "{lambda:>6.2}  {:>10.6}  {:>10.6}  {:>12.6}  {:>12.6}",
            r.c_star, r.c_uc_star, r.rejection_constrained, r.rejection_unconstrained
        );
    }
    Ok(())
}
