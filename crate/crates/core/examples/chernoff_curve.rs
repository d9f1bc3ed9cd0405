//! Error exponents of the joint and per-sequence tests for the sources
//! Ber(1/2) and Ber(rho), printed as a table over rho.
//!
//! Run with `cargo run --example chernoff_curve`.

use seqmatch::exponents::{bernoulli_pair, c_star, c_uc_star};

fn main() -> seqmatch::Result<()> {
    println!("{:>5}  {:>10}  {:>10}  {:>6}", "rho", "C*", "C_uc*", "ratio");
    for i in 1..20 {
        let rho = i as f64 * 0.05;
        let mus = bernoulli_pair(rho)?;
        let joint = c_star(&mus)?;
        let single = c_uc_star(&mus)?;
        let ratio = if single > 0.0 { joint / single } else { f64::NAN };
        println!("{rho:>5.2}  {joint:>10.6}  {single:>10.6}  {ratio:>6.3}");
    }
    Ok(())
}
