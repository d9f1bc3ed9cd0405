//! Link observed sequences to training sequences when the sources are
//! unknown, with fewer observations than candidates and unequal lengths.
//!
//! Run with `cargo run --example training_sequences`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seqmatch::decision::{unknown_source_test, unconstrained_unknown_test};
use seqmatch::simulate::sample_sequence;
use seqmatch::{Distribution, UnknownInstance};

fn main() -> seqmatch::Result<()> {
    let profiles = [
        Distribution::new(vec![0.7, 0.2, 0.1])?,
        Distribution::new(vec![0.1, 0.3, 0.6])?,
        Distribution::new(vec![0.3, 0.4, 0.3])?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let train = profiles
        .iter()
        .map(|p| sample_sequence(p, 800, &mut rng))
        .collect::<seqmatch::Result<Vec<_>>>()?;
    // Observed sequences come from profiles 2 and 0, in that order.
    let observed = vec![
        sample_sequence(&profiles[2], 600, &mut rng)?,
        sample_sequence(&profiles[0], 500, &mut rng)?,
    ];

    let instance = UnknownInstance::with_unequal_lengths(train.clone(), observed, 2)?;
    let outcome = unknown_source_test(&instance, 0.01)?;
    println!("partial matching, unequal lengths: {:?}", outcome.verdict);
    println!("  second-best weight {:.4} vs threshold {:.4}", outcome.second_weight, outcome.threshold);

    // The per-sequence test needs one observation per training sequence.
    let observed = profiles
        .iter()
        .rev()
        .map(|p| sample_sequence(p, 800, &mut rng))
        .collect::<seqmatch::Result<Vec<_>>>()?;
    let full = UnknownInstance::new(train, observed, 3)?;
    for (name, outcome) in [
        ("constrained", unknown_source_test(&full, 0.01)?),
        ("unconstrained", unconstrained_unknown_test(&full, 0.01)?),
    ] {
        println!("{name}: {:?}", outcome.verdict);
    }
    Ok(())
}
