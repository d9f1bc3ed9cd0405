//! Decision rules with a no-match (reject) option.
//!
//! The constrained tests use the best and second-best cardinality-K
//! matchings and accept the best one only when the runner-up weight clears a
//! length-dependent threshold. The unconstrained tests classify every
//! observed sequence on its own and reject when any of them has a close
//! runner-up.
//!
//! Thresholds can be negative for short sequences. That is legal and means
//! the test never rejects.

use crate::divergence::{entropy_of, weight_matrix_known, weight_matrix_unknown, WeightMatrix};
use crate::error::{input, Error, Result};
use crate::matching::rank_matchings;
use crate::model::{DecisionOutcome, KnownInstance, Matching, UnknownInstance, Verdict};

/// Which problem a rule addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Observed sequences against known source distributions.
    Known,
    /// Observed sequences against training sequences.
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionConfig {
    /// Target error exponent in bits.
    pub lambda: f64,
    pub mode: Mode,
    /// Whether the rule exploits the fact that distinct sources produced the
    /// sequences.
    pub constrained: bool,
}

impl DecisionConfig {
    pub fn new(lambda: f64, mode: Mode, constrained: bool) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self {
            lambda,
            mode,
            constrained,
        })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return input(format!("lambda = {lambda} must be finite and positive"));
    }
    Ok(())
}

/// Finite-length rejection threshold `λ - c·|Z|·log2(n+1)/n` where the
/// multiplier `c` is `N` (known, constrained), `1` (known, unconstrained),
/// `M + N` (unknown, constrained) or `N + 1` (unknown, unconstrained).
pub fn threshold(config: &DecisionConfig, m: usize, n_seqs: usize, zsize: usize, n: usize) -> f64 {
    let multiplier = match (config.mode, config.constrained) {
        (Mode::Known, true) => n_seqs,
        (Mode::Known, false) => 1,
        (Mode::Unknown, true) => m + n_seqs,
        (Mode::Unknown, false) => n_seqs + 1,
    };
    let n = n.max(1) as f64;
    config.lambda - multiplier as f64 * zsize as f64 * (n + 1.0).log2() / n
}

/// Constrained unknown-sources threshold when sequence lengths differ:
/// `λ - |Z|·(Σ log2(n_i^x + 1) + Σ log2(n_j^y + 1)) / n_ref`.
pub fn threshold_unequal(
    lambda: f64,
    zsize: usize,
    train_lengths: &[usize],
    observed_lengths: &[usize],
    n_ref: usize,
) -> f64 {
    let offsets: f64 = train_lengths
        .iter()
        .chain(observed_lengths)
        .map(|&len| (len as f64 + 1.0).log2())
        .sum();
    lambda - zsize as f64 * offsets / n_ref.max(1) as f64
}

/// Optimal known-sources test: accept the minimum-weight matching when the
/// second-best weight reaches the threshold, reject otherwise.
pub fn known_source_test(instance: &KnownInstance, lambda: f64) -> Result<DecisionOutcome> {
    check_lambda(lambda)?;
    let (m, n_seqs) = instance.dims();
    let config = DecisionConfig::new(lambda, Mode::Known, true)?;
    let thr = threshold(&config, m, n_seqs, instance.alphabet().size(), instance.n());
    constrained_outcome(&weight_matrix_known(instance), instance.k(), thr)
}

/// Optimal unknown-sources test. Uses the unequal-length threshold when the
/// instance allows different lengths.
pub fn unknown_source_test(instance: &UnknownInstance, lambda: f64) -> Result<DecisionOutcome> {
    unknown_source_test_with(instance, lambda, false)
}

/// As [`unknown_source_test`], optionally marking edges between sequences
/// with disjoint supports as absent.
pub fn unknown_source_test_with(
    instance: &UnknownInstance,
    lambda: f64,
    prune_disjoint: bool,
) -> Result<DecisionOutcome> {
    check_lambda(lambda)?;
    let thr = unknown_threshold(instance, lambda)?;
    constrained_outcome(
        &weight_matrix_unknown(instance, prune_disjoint),
        instance.k(),
        thr,
    )
}

fn unknown_threshold(instance: &UnknownInstance, lambda: f64) -> Result<f64> {
    let zsize = instance.alphabet().size();
    if instance.unequal_lengths() {
        let tl: Vec<usize> = instance.train().iter().map(|s| s.len()).collect();
        let ol: Vec<usize> = instance.observations().iter().map(|s| s.len()).collect();
        Ok(threshold_unequal(lambda, zsize, &tl, &ol, instance.n()))
    } else {
        let (m, n_seqs) = instance.dims();
        let config = DecisionConfig::new(lambda, Mode::Unknown, true)?;
        Ok(threshold(&config, m, n_seqs, zsize, instance.n()))
    }
}

/// Applies the constrained rule to a weight matrix and threshold.
pub fn constrained_outcome(w: &WeightMatrix, k: usize, threshold: f64) -> Result<DecisionOutcome> {
    let ranked = rank_matchings(w, k)?;
    let second_weight = ranked.second_weight();
    let (best, best_weight) = ranked.best;
    let verdict = if second_weight >= threshold {
        Verdict::Accept(best)
    } else {
        Verdict::Reject
    };
    Ok(DecisionOutcome {
        verdict,
        best_weight,
        second_weight,
        threshold,
    })
}

/// Known-sources test without the distinct-sources constraint: each
/// sequence goes to its closest source, and the batch is rejected when some
/// sequence has a second-closest source below the threshold. Requires
/// `M ≥ N = K`.
pub fn unconstrained_known_test(instance: &KnownInstance, lambda: f64) -> Result<DecisionOutcome> {
    check_lambda(lambda)?;
    let (m, n_seqs) = instance.dims();
    if n_seqs > m || instance.k() != n_seqs {
        return input(format!(
            "unconstrained known test needs M >= N = K, got M = {m}, N = {n_seqs}, K = {}",
            instance.k()
        ));
    }
    let config = DecisionConfig::new(lambda, Mode::Known, false)?;
    let thr = threshold(&config, m, n_seqs, instance.alphabet().size(), instance.n());
    unconstrained_outcome(&weight_matrix_known(instance), thr)
}

/// Unknown-sources analogue of [`unconstrained_known_test`]. Requires
/// `M = N = K` and equal lengths.
pub fn unconstrained_unknown_test(
    instance: &UnknownInstance,
    lambda: f64,
) -> Result<DecisionOutcome> {
    check_lambda(lambda)?;
    let (m, n_seqs) = instance.dims();
    if m != n_seqs || instance.k() != n_seqs {
        return input(format!(
            "unconstrained unknown test needs M = N = K, got M = {m}, N = {n_seqs}, K = {}",
            instance.k()
        ));
    }
    if instance.unequal_lengths() {
        return input("unconstrained unknown test is only defined for equal lengths");
    }
    let config = DecisionConfig::new(lambda, Mode::Unknown, false)?;
    let thr = threshold(&config, m, n_seqs, instance.alphabet().size(), instance.n());
    unconstrained_outcome(&weight_matrix_unknown(instance, false), thr)
}

/// Column-wise rule on a weight matrix whose rows are candidates and whose
/// columns are the sequences to classify.
pub fn unconstrained_outcome(w: &WeightMatrix, threshold: f64) -> Result<DecisionOutcome> {
    let mut assignment = Vec::with_capacity(w.cols());
    // (column, best weight, runner-up weight) of the tightest column so far
    let mut decisive: Option<(usize, f64, f64)> = None;
    for j in 0..w.cols() {
        let mut best = (usize::MAX, f64::INFINITY);
        let mut runner_up = f64::INFINITY;
        for i in 0..w.rows() {
            let wij = w.get(i, j);
            if wij < best.1 {
                runner_up = best.1;
                best = (i, wij);
            } else if wij < runner_up {
                runner_up = wij;
            }
        }
        if best.0 == usize::MAX {
            return Err(Error::Infeasible { k: w.cols() });
        }
        assignment.push(best.0);
        if decisive.is_none_or(|(_, _, r)| runner_up < r) {
            decisive = Some((j, best.1, runner_up));
        }
    }
    let (best_weight, second_weight) = decisive.map_or((0.0, f64::INFINITY), |(_, b, s)| (b, s));
    let verdict = if second_weight < threshold {
        Verdict::Reject
    } else {
        let mut seen = vec![false; w.rows()];
        if assignment.iter().all(|&i| !std::mem::replace(&mut seen[i], true)) {
            let edges = assignment.iter().enumerate().map(|(j, &i)| (i, j)).collect();
            Verdict::Accept(Matching::new(edges, w.rows(), w.cols())?)
        } else {
            Verdict::Collision { assignment }
        }
    };
    Ok(DecisionOutcome {
        verdict,
        best_weight,
        second_weight,
        threshold,
    })
}

/// Normalised log2 of the likelihood of the observations under hypothesis
/// `m`, maximised over the distributions of unmatched sequences:
/// `Σ_{(i,j)∈m} Σ_z Γ_j(z) log2 μ_i(z) − Σ_{j unmatched} H(Γ_j)`.
///
/// `−∞` when a matched sequence contains a symbol its source cannot emit.
pub fn generalized_log_likelihood_known(instance: &KnownInstance, m: &Matching) -> Result<f64> {
    let (rows, cols) = instance.dims();
    check_hypothesis(m, rows, cols, instance.k())?;
    let gammas: Vec<_> = instance
        .observations()
        .iter()
        .map(|y| y.empirical())
        .collect();
    let mut total = 0.0;
    for &(i, j) in m.edges() {
        let mu = instance.sources()[i].mass();
        for (z, &g) in gammas[j].mass().iter().enumerate() {
            if g > 0.0 {
                if mu[z] == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                total += g * mu[z].log2();
            }
        }
    }
    for j in m.unmatched_right() {
        total -= entropy_of(gammas[j].mass());
    }
    Ok(total)
}

/// Normalised log2 of the likelihood of all training and observed sequences
/// under hypothesis `m`, maximised over every source distribution. A matched
/// pair shares one distribution, estimated from the concatenated sequence.
pub fn generalized_log_likelihood_unknown(instance: &UnknownInstance, m: &Matching) -> Result<f64> {
    let (rows, cols) = instance.dims();
    check_hypothesis(m, rows, cols, instance.k())?;
    let n_ref = instance.n() as f64;
    let mut total = 0.0;
    for &(i, j) in m.edges() {
        let x = &instance.train()[i];
        let y = &instance.observations()[j];
        let counts: Vec<u64> = x
            .counts()
            .iter()
            .zip(y.counts())
            .map(|(a, b)| a + b)
            .collect();
        let len = (x.len() + y.len()) as f64;
        let pooled: Vec<f64> = counts.iter().map(|&c| c as f64 / len).collect();
        total -= len / n_ref * entropy_of(&pooled);
    }
    for i in m.unmatched_left() {
        let x = &instance.train()[i];
        total -= x.len() as f64 / n_ref * entropy_of(x.empirical().mass());
    }
    for j in m.unmatched_right() {
        let y = &instance.observations()[j];
        total -= y.len() as f64 / n_ref * entropy_of(y.empirical().mass());
    }
    Ok(total)
}

fn check_hypothesis(m: &Matching, rows: usize, cols: usize, k: usize) -> Result<()> {
    if k == 0 {
        return input("generalized likelihood needs K >= 1");
    }
    if m.dims() != (rows, cols) || m.cardinality() != k {
        return input("matching does not describe a hypothesis of this instance");
    }
    Ok(())
}
