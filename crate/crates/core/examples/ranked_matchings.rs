//! Best and second-best cardinality-K matchings of a weight matrix, checked
//! against brute-force enumeration.
//!
//! Run with `cargo run --example ranked_matchings`.

use seqmatch::divergence::WeightMatrix;
use seqmatch::matching::{enumerate_matchings, matching_weight, rank_matchings, SecondBest};

fn main() -> seqmatch::Result<()> {
    let inf = f64::INFINITY;
    let w = WeightMatrix::from_rows(vec![
        vec![4.0, 1.0, 3.0, inf],
        vec![2.0, 0.5, 5.0, 1.5],
        vec![3.0, 2.0, 2.0, 0.25],
    ])?;
    let k = 2;

    let ranked = rank_matchings(&w, k)?;
    println!("best   {} weight {}", ranked.best.0, ranked.best.1);
    match &ranked.second {
        SecondBest::Found(m, weight) => println!("second {m} weight {weight}"),
        other => println!("second {other:?}"),
    }

    let mut all: Vec<_> = enumerate_matchings(w.rows(), w.cols(), k)?
        .into_iter()
        .map(|m| (matching_weight(&w, &m), m))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    println!("{} hypotheses; cheapest three by enumeration:", all.len());
    for (weight, m) in all.iter().take(3) {
        println!("  {m} weight {weight}");
    }
    Ok(())
}
