//! Match two observed sequences to two known coins and show how the
//! verdict changes when the sequences carry no information.
//!
//! Run with `cargo run --example known_sources`.

use seqmatch::decision::known_source_test;
use seqmatch::{Alphabet, Distribution, KnownInstance, Sequence, Verdict};

fn sequence(symbols: &[usize]) -> Sequence {
    Sequence::new(symbols.to_vec(), Alphabet::new(2).unwrap()).unwrap()
}

fn main() -> seqmatch::Result<()> {
    let sources = vec![Distribution::new(vec![0.5, 0.5])?, Distribution::new(vec![0.9, 0.1])?];

    let fair = sequence(&[0, 1, 0, 1, 1, 0, 1, 0, 0, 1]);
    let biased = sequence(&[0, 0, 0, 0, 1, 0, 0, 0, 0, 0]);
    let instance = KnownInstance::new(sources.clone(), vec![biased.clone(), fair.clone()], 2)?;
    let outcome = known_source_test(&instance, 0.05)?;
    println!("distinct sequences:");
    report(&outcome);

    // Two copies of the same string: both assignments have equal weight.
    let instance = KnownInstance::new(sources, vec![fair.clone(), fair], 2)?;
    let outcome = known_source_test(&instance, 3.0)?;
    println!("identical sequences, lambda = 3:");
    report(&outcome);
    Ok(())
}

fn report(outcome: &seqmatch::DecisionOutcome) {
    match &outcome.verdict {
        Verdict::Accept(m) => println!("  accept {m}"),
        Verdict::Reject => println!("  reject"),
        Verdict::Collision { assignment } => println!("  collision {assignment:?}"),
    }
    println!(
        "  best {:.4}  second {:.4}  threshold {:.4}",
        outcome.best_weight, outcome.second_weight, outcome.threshold
    );
}
