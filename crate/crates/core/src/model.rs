//! Alphabets, sequences, distributions, matchings and the two problem
//! instances shared by the rest of the crate.
//!
//! Symbols are dense indices `0..alphabet.size()`. Anything richer (string
//! labels, byte values) has to be mapped before it reaches this module.

use std::fmt;

use crate::error::{input, Error, Result};

/// Tolerance on the total mass of a [`Distribution`].
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Total-variation distance below which two sources count as identical.
pub const DISTINCT_TOLERANCE: f64 = 1e-12;

/// A finite alphabet `{0, .., size-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return input("alphabet size must be at least 1");
        }
        Ok(Self(size))
    }

    pub fn size(self) -> usize {
        self.0
    }
}

/// A non-empty string of symbol indices over some alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sequence {
    symbols: Vec<usize>,
    alphabet: Alphabet,
}

impl Sequence {
    pub fn new(symbols: Vec<usize>, alphabet: Alphabet) -> Result<Self> {
        if symbols.is_empty() {
            return input("sequence must contain at least one symbol");
        }
        if let Some((pos, &s)) = symbols
            .iter()
            .enumerate()
            .find(|(_, &s)| s >= alphabet.size())
        {
            return input(format!(
                "symbol {s} at position {pos} is outside the alphabet of size {}",
                alphabet.size()
            ));
        }
        Ok(Self { symbols, alphabet })
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    /// Always false; sequences are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// Symbol counts, indexed by symbol.
    pub fn counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.alphabet.size()];
        for &s in &self.symbols {
            counts[s] += 1;
        }
        counts
    }

    /// The empirical distribution (type) of this sequence.
    pub fn empirical(&self) -> Distribution {
        Distribution::from_counts(&self.counts())
    }
}

/// A probability mass function on a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    mass: Vec<f64>,
}

impl Distribution {
    /// Validates and wraps a probability vector. The entries are kept exactly
    /// as given; no renormalisation takes place.
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return input("distribution must have at least one entry");
        }
        if let Some((z, p)) = mass
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return input(format!("probability {p} for symbol {z} is not a finite non-negative number"));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return input(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self { mass })
    }

    /// Builds `count / total` for each symbol. Each entry is a single
    /// division of exact integers.
    pub fn from_counts(counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        assert!(total > 0, "counts must not all be zero");
        let t = total as f64;
        Self {
            mass: counts.iter().map(|&c| c as f64 / t).collect(),
        }
    }

    /// Uniform distribution over `size` symbols.
    pub fn uniform(size: usize) -> Self {
        assert!(size > 0);
        Self {
            mass: vec![1.0 / size as f64; size],
        }
    }

    /// Bernoulli distribution `(1 - p, p)` over `{0, 1}`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return input(format!("Bernoulli parameter {p} outside [0, 1]"));
        }
        Self::new(vec![1.0 - p, p])
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn alphabet_size(&self) -> usize {
        self.mass.len()
    }

    pub fn get(&self, z: usize) -> f64 {
        self.mass[z]
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(z, _)| z)
    }

    /// Total-variation distance `½ Σ |p - q|`.
    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>()
    }

    /// Convex combination `wa·a + wb·b` with `wa + wb = 1`.
    pub(crate) fn mixture(a: &Self, wa: f64, b: &Self, wb: f64) -> Self {
        Self {
            mass: a
                .mass
                .iter()
                .zip(&b.mass)
                .map(|(p, q)| wa * p + wb * q)
                .collect(),
        }
    }

    /// Wraps a vector that is already known to be a distribution.
    pub(crate) fn from_raw(mass: Vec<f64>) -> Self {
        Self { mass }
    }
}

/// Empirical distribution of `seq`, checked against `alphabet`.
pub fn empirical_distribution(seq: &[usize], alphabet: Alphabet) -> Result<Distribution> {
    Ok(Sequence::new(seq.to_vec(), alphabet)?.empirical())
}

/// Number of cardinality-`k` matchings in the complete `m × n` bipartite
/// graph: `C(m, k) · C(n, k) · k!`.
pub fn hypothesis_count(m: usize, n: usize, k: usize) -> Result<u128> {
    if k > m.min(n) {
        return input(format!("k = {k} exceeds min(M, N) = {}", m.min(n)));
    }
    // C(m,k)·k! = m!/(m-k)!, the falling factorial.
    let mut falling: u128 = 1;
    for i in 0..k {
        falling = falling
            .checked_mul((m - i) as u128)
            .ok_or(Error::Overflow("hypothesis count"))?;
    }
    binomial(n, k)?
        .checked_mul(falling)
        .ok_or(Error::Overflow("hypothesis count"))
}

fn binomial(n: usize, k: usize) -> Result<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc · (n - i) is divisible by (i + 1) at every step.
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or(Error::Overflow("binomial coefficient"))?
            / (i as u128 + 1);
    }
    Ok(acc)
}

/// A set of disjoint edges between a left vertex set of size `left` and a
/// right vertex set of size `right`.
///
/// Edges are stored sorted, so the derived ordering is the lexicographic
/// order on sorted edge lists used for tie-breaking throughout the crate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    edges: Vec<(usize, usize)>,
    left: usize,
    right: usize,
}

impl Matching {
    pub fn new(mut edges: Vec<(usize, usize)>, left: usize, right: usize) -> Result<Self> {
        edges.sort_unstable();
        let mut row_used = vec![false; left];
        let mut col_used = vec![false; right];
        for &(i, j) in &edges {
            if i >= left || j >= right {
                return input(format!("edge ({i}, {j}) outside a {left}×{right} graph"));
            }
            if std::mem::replace(&mut row_used[i], true) {
                return input(format!("left vertex {i} appears in two edges"));
            }
            if std::mem::replace(&mut col_used[j], true) {
                return input(format!("right vertex {j} appears in two edges"));
            }
        }
        Ok(Self { edges, left, right })
    }

    pub fn empty(left: usize, right: usize) -> Self {
        Self {
            edges: Vec::new(),
            left,
            right,
        }
    }

    /// The matching `{(i, i) : i < k}`.
    pub fn identity(k: usize, left: usize, right: usize) -> Result<Self> {
        Self::new((0..k).map(|i| (i, i)).collect(), left, right)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn cardinality(&self) -> usize {
        self.edges.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.left, self.right)
    }

    pub fn contains(&self, edge: (usize, usize)) -> bool {
        self.edges.binary_search(&edge).is_ok()
    }

    /// Right vertex matched to left vertex `i`, if any.
    pub fn partner_of_left(&self, i: usize) -> Option<usize> {
        self.edges.iter().find(|e| e.0 == i).map(|e| e.1)
    }

    /// Left vertices not incident to any edge, ascending.
    pub fn unmatched_left(&self) -> Vec<usize> {
        let mut used = vec![false; self.left];
        for &(i, _) in &self.edges {
            used[i] = true;
        }
        (0..self.left).filter(|&i| !used[i]).collect()
    }

    /// Right vertices not incident to any edge, ascending.
    pub fn unmatched_right(&self) -> Vec<usize> {
        let mut used = vec![false; self.right];
        for &(_, j) in &self.edges {
            used[j] = true;
        }
        (0..self.right).filter(|&j| !used[j]).collect()
    }

    /// Checks the disjointness invariant in O(K).
    pub fn is_valid(&self) -> bool {
        let mut rows = std::collections::HashSet::with_capacity(self.edges.len());
        let mut cols = std::collections::HashSet::with_capacity(self.edges.len());
        self.edges
            .iter()
            .all(|&(i, j)| i < self.left && j < self.right && rows.insert(i) && cols.insert(j))
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, j) in &self.edges {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{i}:{j}")?;
            first = false;
        }
        Ok(())
    }
}

fn check_k(k: usize, m: usize, n: usize) -> Result<()> {
    if k > m.min(n) {
        return input(format!("k = {k} exceeds min(M = {m}, N = {n})"));
    }
    Ok(())
}

/// Known-sources problem: match `k` of the observed sequences to `k` of the
/// known source distributions.
#[derive(Debug, Clone)]
pub struct KnownInstance {
    alphabet: Alphabet,
    sources: Vec<Distribution>,
    observations: Vec<Sequence>,
    k: usize,
    n: usize,
}

impl KnownInstance {
    pub fn new(sources: Vec<Distribution>, observations: Vec<Sequence>, k: usize) -> Result<Self> {
        let Some(first) = sources.first() else {
            return input("at least one source distribution is required");
        };
        let alphabet = Alphabet::new(first.alphabet_size())?;
        if let Some(i) = sources
            .iter()
            .position(|s| s.alphabet_size() != alphabet.size())
        {
            return input(format!(
                "source {i} has {} symbols, expected {}",
                sources[i].alphabet_size(),
                alphabet.size()
            ));
        }
        let n = observations.first().map_or(0, Sequence::len);
        for (j, y) in observations.iter().enumerate() {
            if y.alphabet() != alphabet {
                return input(format!(
                    "sequence {j} is over an alphabet of size {}, sources use {}",
                    y.alphabet().size(),
                    alphabet.size()
                ));
            }
            if y.len() != n {
                return input(format!("sequence {j} has length {}, expected {n}", y.len()));
            }
        }
        check_k(k, sources.len(), observations.len())?;
        for a in 0..sources.len() {
            for b in a + 1..sources.len() {
                if sources[a].total_variation(&sources[b]) <= DISTINCT_TOLERANCE {
                    return input(format!("sources {a} and {b} are not distinct"));
                }
            }
        }
        Ok(Self {
            alphabet,
            sources,
            observations,
            k,
            n,
        })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn sources(&self) -> &[Distribution] {
        &self.sources
    }

    pub fn observations(&self) -> &[Sequence] {
        &self.observations
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Common sequence length (0 when there are no observations).
    pub fn n(&self) -> usize {
        self.n
    }

    /// `(M, N)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.sources.len(), self.observations.len())
    }
}

/// Unknown-sources problem: match `k` observed sequences to `k` training
/// sequences.
#[derive(Debug, Clone)]
pub struct UnknownInstance {
    alphabet: Alphabet,
    train: Vec<Sequence>,
    observations: Vec<Sequence>,
    k: usize,
    unequal_lengths: bool,
}

impl UnknownInstance {
    /// All sequences must have the same length.
    pub fn new(train: Vec<Sequence>, observations: Vec<Sequence>, k: usize) -> Result<Self> {
        Self::build(train, observations, k, false)
    }

    /// Sequences may have different lengths; the shortest one sets the
    /// reference length.
    pub fn with_unequal_lengths(
        train: Vec<Sequence>,
        observations: Vec<Sequence>,
        k: usize,
    ) -> Result<Self> {
        Self::build(train, observations, k, true)
    }

    fn build(
        train: Vec<Sequence>,
        observations: Vec<Sequence>,
        k: usize,
        unequal_lengths: bool,
    ) -> Result<Self> {
        let Some(first) = train.iter().chain(&observations).next() else {
            return input("at least one sequence is required");
        };
        let alphabet = first.alphabet();
        let n = first.len();
        for (label, set) in [("training", &train), ("observed", &observations)] {
            for (idx, s) in set.iter().enumerate() {
                if s.alphabet() != alphabet {
                    return input(format!("{label} sequence {idx} uses a different alphabet"));
                }
                if !unequal_lengths && s.len() != n {
                    return input(format!(
                        "{label} sequence {idx} has length {}, expected {n}",
                        s.len()
                    ));
                }
            }
        }
        check_k(k, train.len(), observations.len())?;
        Ok(Self {
            alphabet,
            train,
            observations,
            k,
            unequal_lengths,
        })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn train(&self) -> &[Sequence] {
        &self.train
    }

    pub fn observations(&self) -> &[Sequence] {
        &self.observations
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn unequal_lengths(&self) -> bool {
        self.unequal_lengths
    }

    /// Reference length `n`: the common length, or the shortest length when
    /// unequal lengths are enabled.
    pub fn n(&self) -> usize {
        self.train
            .iter()
            .chain(&self.observations)
            .map(Sequence::len)
            .min()
            .unwrap_or(0)
    }

    /// `(M, N)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.train.len(), self.observations.len())
    }
}

/// What a decision rule emitted.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Accept(Matching),
    Reject,
    /// An unconstrained test mapped two sequences to the same source.
    /// `assignment[j]` is the left vertex chosen for sequence `j`.
    Collision { assignment: Vec<usize> },
}

/// A verdict together with the quantities it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionOutcome {
    pub verdict: Verdict,
    /// Weight of the best hypothesis. For the unconstrained tests this is
    /// the smallest weight in the row that decided the verdict.
    pub best_weight: f64,
    /// Weight of the second-best hypothesis (`+∞` when there is none). For
    /// the unconstrained tests, the minimum over rows of the second-smallest
    /// weight.
    pub second_weight: f64,
    pub threshold: f64,
}

impl DecisionOutcome {
    pub fn is_accept(&self) -> bool {
        matches!(self.verdict, Verdict::Accept(_))
    }

    pub fn is_reject(&self) -> bool {
        matches!(self.verdict, Verdict::Reject)
    }

    pub fn accepted(&self) -> Option<&Matching> {
        match &self.verdict {
            Verdict::Accept(m) => Some(m),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    #[test]
    fn empirical_examples() {
        let d = empirical_distribution(&[0, 1, 0, 1], bin()).unwrap();
        assert_eq!(d.mass(), &[0.5, 0.5]);
        let d = empirical_distribution(&[0, 0, 0, 0], bin()).unwrap();
        assert_eq!(d.mass(), &[1.0, 0.0]);
        let d = empirical_distribution(&[0, 1, 2, 2, 2], Alphabet::new(3).unwrap()).unwrap();
        assert_eq!(d.mass(), &[0.2, 0.2, 0.6]);
    }

    #[test]
    fn empirical_rejects_out_of_range() {
        assert!(matches!(
            empirical_distribution(&[0, 2], bin()),
            Err(Error::Input(_))
        ));
        assert!(empirical_distribution(&[], bin()).is_err());
    }

    #[test]
    fn hypothesis_count_examples() {
        assert_eq!(hypothesis_count(2, 2, 2).unwrap(), 2);
        assert_eq!(hypothesis_count(3, 2, 1).unwrap(), 6);
        assert_eq!(hypothesis_count(7, 4, 0).unwrap(), 1);
        assert!(hypothesis_count(2, 3, 3).is_err());
        assert_eq!(hypothesis_count(35, 35, 35), Err(Error::Overflow("hypothesis count")));
        // 34! still fits in u128
        assert!(hypothesis_count(34, 34, 34).is_ok());
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![0.5, 0.5]).is_ok());
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![-0.1, 1.1]).is_err());
        assert!(Distribution::new(vec![f64::NAN, 1.0]).is_err());
        assert!(Distribution::new(vec![]).is_err());
        assert!(Alphabet::new(0).is_err());
    }

    #[test]
    fn matching_rejects_shared_vertices() {
        assert!(Matching::new(vec![(0, 0), (0, 1)], 2, 2).is_err());
        assert!(Matching::new(vec![(0, 1), (1, 1)], 2, 2).is_err());
        assert!(Matching::new(vec![(2, 0)], 2, 2).is_err());
        let m = Matching::new(vec![(2, 0), (0, 1)], 3, 4).unwrap();
        assert_eq!(m.edges(), &[(0, 1), (2, 0)]);
        assert_eq!(m.unmatched_left(), vec![1]);
        assert_eq!(m.unmatched_right(), vec![2, 3]);
        assert!(m.is_valid());
        assert_eq!(m.to_string(), "0:1 2:0");
    }

    #[test]
    fn known_instance_rejects_identical_sources() {
        let a = Distribution::new(vec![0.3, 0.7]).unwrap();
        let y = Sequence::new(vec![0, 1], bin()).unwrap();
        let err = KnownInstance::new(vec![a.clone(), a], vec![y], 1).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn known_instance_checks_lengths_and_k() {
        let a = Distribution::new(vec![0.3, 0.7]).unwrap();
        let b = Distribution::new(vec![0.6, 0.4]).unwrap();
        let y1 = Sequence::new(vec![0, 1], bin()).unwrap();
        let y2 = Sequence::new(vec![0, 1, 1], bin()).unwrap();
        assert!(KnownInstance::new(vec![a.clone(), b.clone()], vec![y1.clone(), y2], 1).is_err());
        assert!(KnownInstance::new(vec![a, b], vec![y1], 2).is_err());
    }

    #[test]
    fn unknown_instance_lengths() {
        let x = Sequence::new(vec![0, 1, 1], bin()).unwrap();
        let y = Sequence::new(vec![0, 1], bin()).unwrap();
        assert!(UnknownInstance::new(vec![x.clone()], vec![y.clone()], 1).is_err());
        let inst = UnknownInstance::with_unequal_lengths(vec![x], vec![y], 1).unwrap();
        assert_eq!(inst.n(), 2);
    }
}
