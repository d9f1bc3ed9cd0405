//! Seeded Monte Carlo estimates of error, rejection and correct-match rates.
//!
//! Randomness comes from ChaCha8. A trial at grid index `g` with trial
//! number `t` draws from the generator seeded by `seed_from_u64(seed)` on
//! stream `(g << 32) | t`, so results do not depend on how trials are
//! scheduled across threads. Within a trial, training sequences are drawn
//! first (unknown-sources mode only), then observed sequences, each in index
//! order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::decision::{
    known_source_test, unconstrained_known_test, unconstrained_unknown_test, unknown_source_test,
    Mode,
};
use crate::error::{input, Error, Result};
use crate::model::{
    Alphabet, DecisionOutcome, Distribution, KnownInstance, Matching, Sequence, UnknownInstance,
    Verdict,
};

/// Which decision rule to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestKind {
    Constrained,
    Unconstrained,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::Constrained => "constrained",
            TestKind::Unconstrained => "unconstrained",
        }
    }
}

/// Everything needed to reproduce a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPlan {
    pub mode: Mode,
    /// Known mode: the source distributions. Unknown mode: the distribution
    /// behind each training sequence.
    pub sources: Vec<Distribution>,
    /// Number of observed sequences `N`.
    pub observations: usize,
    /// Distributions for observed sequences that the truth leaves
    /// unmatched, consumed in column order.
    pub outsiders: Vec<Distribution>,
    /// Ground-truth hypothesis: `(i, j)` means observed sequence `j` comes
    /// from source (or shares the source of training sequence) `i`.
    pub truth: Matching,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub lambda: f64,
    pub seed: u64,
    pub test: TestKind,
}

impl SimPlan {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return input("trials must be at least 1");
        }
        if self.trials as u64 > u32::MAX as u64 {
            return input("trials must fit in 32 bits");
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return input("n_grid must be non-empty with positive lengths");
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return input("n_grid must be strictly increasing");
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return input("lambda must be finite and positive");
        }
        let Some(first) = self.sources.first() else {
            return input("at least one source is required");
        };
        let z = first.alphabet_size();
        if self
            .sources
            .iter()
            .chain(&self.outsiders)
            .any(|d| d.alphabet_size() != z)
        {
            return input("all distributions must share one alphabet");
        }
        if self.truth.dims() != (self.sources.len(), self.observations) {
            return input("truth matching does not fit the plan dimensions");
        }
        let unmatched = self.observations - self.truth.cardinality();
        if self.outsiders.len() < unmatched {
            return input(format!(
                "{unmatched} observed sequences are unmatched but only {} outsider distributions were given",
                self.outsiders.len()
            ));
        }
        Ok(())
    }

    fn k(&self) -> usize {
        self.truth.cardinality()
    }
}

/// Draws i.i.d. symbols by inverse CDF over the fixed symbol order.
#[derive(Debug, Clone)]
pub struct Sampler {
    cdf: Vec<f64>,
    last: usize,
    alphabet: Alphabet,
}

impl Sampler {
    pub fn new(mu: &Distribution) -> Self {
        let mut acc = 0.0;
        let cdf = mu
            .mass()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let last = mu.support().last().expect("a distribution has support");
        Self {
            cdf,
            last,
            alphabet: Alphabet::new(mu.alphabet_size()).expect("non-empty"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Sequence {
        let symbols = (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                self.cdf.iter().position(|&c| u < c).unwrap_or(self.last)
            })
            .collect();
        Sequence::new(symbols, self.alphabet).expect("sampled symbols are in range")
    }
}

/// `n` i.i.d. draws from `mu`.
pub fn sample_sequence<R: Rng + ?Sized>(mu: &Distribution, n: usize, rng: &mut R) -> Result<Sequence> {
    if n == 0 {
        return input("sequence length must be positive");
    }
    Ok(Sampler::new(mu).sample(n, rng))
}

/// The generator for one `(seed, grid index, trial)` triple.
pub fn trial_rng(seed: u64, grid_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((grid_index as u64) << 32) | trial as u64);
    rng
}

/// How a single trial ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    Correct,
    Error,
    Rejected,
}

/// Classifies a decision against the ground truth. Accepting another
/// matching and an unconstrained collision both count as errors.
pub fn classify(outcome: &DecisionOutcome, truth: &Matching) -> TrialOutcome {
    match &outcome.verdict {
        Verdict::Accept(m) if m == truth => TrialOutcome::Correct,
        Verdict::Accept(_) | Verdict::Collision { .. } => TrialOutcome::Error,
        Verdict::Reject => TrialOutcome::Rejected,
    }
}

/// Outcome counts at one sequence length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RateRow {
    pub n: usize,
    pub trials: u64,
    pub correct: u64,
    pub errors: u64,
    pub rejections: u64,
}

impl RateRow {
    pub fn error_rate(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }

    pub fn rejection_rate(&self) -> f64 {
        self.rejections as f64 / self.trials as f64
    }

    pub fn correct_rate(&self) -> f64 {
        self.correct as f64 / self.trials as f64
    }

    fn add(mut self, o: TrialOutcome) -> Self {
        match o {
            TrialOutcome::Correct => self.correct += 1,
            TrialOutcome::Error => self.errors += 1,
            TrialOutcome::Rejected => self.rejections += 1,
        }
        self.trials += 1;
        self
    }

    fn merge(mut self, other: Self) -> Self {
        self.trials += other.trials;
        self.correct += other.correct;
        self.errors += other.errors;
        self.rejections += other.rejections;
        self
    }
}

/// Error exponent estimated from the observed error rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExponentFit {
    /// Least-squares slope of `-log2(error_rate)` against `n` over the
    /// lengths with at least one error.
    Slope { value: f64, points: usize },
    /// Only one length had errors: `-log2(error_rate)/n` at that length.
    SinglePoint { value: f64 },
    /// No errors were observed anywhere; no fit is possible.
    NoErrors,
}

impl ExponentFit {
    /// The estimate, `+∞` when no errors were seen.
    pub fn value(&self) -> f64 {
        match *self {
            ExponentFit::Slope { value, .. } | ExponentFit::SinglePoint { value } => value,
            ExponentFit::NoErrors => f64::INFINITY,
        }
    }

    pub fn from_rows(rows: &[RateRow]) -> Self {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.errors > 0)
            .map(|r| (r.n as f64, -r.error_rate().log2()))
            .collect();
        match pts.len() {
            0 => ExponentFit::NoErrors,
            1 => ExponentFit::SinglePoint {
                value: pts[0].1 / pts[0].0,
            },
            k => {
                let kf = k as f64;
                let mx = pts.iter().map(|p| p.0).sum::<f64>() / kf;
                let my = pts.iter().map(|p| p.1).sum::<f64>() / kf;
                let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
                let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
                ExponentFit::Slope {
                    value: sxy / sxx,
                    points: k,
                }
            }
        }
    }
}

/// Per-length counts for one decision rule plus the fitted error exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub test: TestKind,
    pub rows: Vec<RateRow>,
    pub fit: ExponentFit,
}

impl RateReport {
    fn new(test: TestKind, rows: Vec<RateRow>) -> Self {
        let fit = ExponentFit::from_rows(&rows);
        Self { test, rows, fit }
    }
}

/// Constrained and unconstrained reports computed on the same samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedReport {
    pub constrained: RateReport,
    pub unconstrained: RateReport,
}

impl PairedReport {
    /// Unconstrained minus constrained rejection rate, per length.
    pub fn rejection_gap(&self) -> Vec<(usize, f64)> {
        self.constrained
            .rows
            .iter()
            .zip(&self.unconstrained.rows)
            .map(|(c, u)| (c.n, u.rejection_rate() - c.rejection_rate()))
            .collect()
    }
}

/// Pooled two-proportion z statistic for `x1/n1` exceeding `x2/n2`. Zero
/// when the pooled variance vanishes.
pub fn two_proportion_z(x1: u64, n1: u64, x2: u64, n2: u64) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let p1 = x1 as f64 / n1f;
    let p2 = x2 as f64 / n2f;
    let pooled = (x1 + x2) as f64 / (n1f + n2f);
    let var = pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f);
    if var <= 0.0 {
        0.0
    } else {
        (p1 - p2) / var.sqrt()
    }
}

/// One trial's data.
enum Sample {
    Known(KnownInstance),
    Unknown(UnknownInstance),
}

struct Samplers {
    sources: Vec<Sampler>,
    /// Sampler for each observed column.
    columns: Vec<Sampler>,
}

impl Samplers {
    fn new(plan: &SimPlan) -> Self {
        let sources: Vec<Sampler> = plan.sources.iter().map(Sampler::new).collect();
        let mut outsiders = plan.outsiders.iter();
        let columns = (0..plan.observations)
            .map(|j| {
                match plan.truth.edges().iter().find(|e| e.1 == j) {
                    Some(&(i, _)) => sources[i].clone(),
                    None => Sampler::new(outsiders.next().expect("validated")),
                }
            })
            .collect();
        Self { sources, columns }
    }

    fn draw(&self, plan: &SimPlan, n: usize, grid_index: usize, trial: usize) -> Result<Sample> {
        let mut rng = trial_rng(plan.seed, grid_index, trial);
        match plan.mode {
            Mode::Known => {
                let obs = self.columns.iter().map(|s| s.sample(n, &mut rng)).collect();
                Ok(Sample::Known(KnownInstance::new(plan.sources.clone(), obs, plan.k())?))
            }
            Mode::Unknown => {
                let train = self.sources.iter().map(|s| s.sample(n, &mut rng)).collect();
                let obs = self.columns.iter().map(|s| s.sample(n, &mut rng)).collect();
                Ok(Sample::Unknown(UnknownInstance::new(train, obs, plan.k())?))
            }
        }
    }
}

fn run_test(sample: &Sample, test: TestKind, lambda: f64) -> Result<DecisionOutcome> {
    match (sample, test) {
        (Sample::Known(i), TestKind::Constrained) => known_source_test(i, lambda),
        (Sample::Known(i), TestKind::Unconstrained) => unconstrained_known_test(i, lambda),
        (Sample::Unknown(i), TestKind::Constrained) => unknown_source_test(i, lambda),
        (Sample::Unknown(i), TestKind::Unconstrained) => unconstrained_unknown_test(i, lambda),
    }
}

fn classify_run(sample: &Sample, test: TestKind, plan: &SimPlan) -> Result<TrialOutcome> {
    match run_test(sample, test, plan.lambda) {
        Ok(out) => Ok(classify(&out, &plan.truth)),
        // Data drawn under the truth always gives the truth finite weight,
        // so infeasibility cannot happen; anything else is a plan error.
        Err(Error::Infeasible { .. }) => Ok(TrialOutcome::Error),
        Err(e) => Err(e),
    }
}

fn simulate<const T: usize>(plan: &SimPlan, tests: [TestKind; T]) -> Result<[RateReport; T]> {
    plan.validate()?;
    let samplers = Samplers::new(plan);
    let mut rows: [Vec<RateRow>; T] = std::array::from_fn(|_| Vec::with_capacity(plan.n_grid.len()));
    for (g, &n) in plan.n_grid.iter().enumerate() {
        let counts = (0..plan.trials)
            .into_par_iter()
            .map(|t| -> Result<[RateRow; T]> {
                let sample = samplers.draw(plan, n, g, t)?;
                let mut out = [RateRow::default(); T];
                for (slot, &test) in out.iter_mut().zip(&tests) {
                    *slot = RateRow::default().add(classify_run(&sample, test, plan)?);
                }
                Ok(out)
            })
            .try_reduce(
                || [RateRow::default(); T],
                |a, b| {
                    let mut m = a;
                    for (x, y) in m.iter_mut().zip(b) {
                        *x = x.merge(y);
                    }
                    Ok(m)
                },
            )?;
        for (r, mut c) in rows.iter_mut().zip(counts) {
            c.n = n;
            r.push(c);
        }
    }
    let mut rows = rows.into_iter();
    Ok(std::array::from_fn(|k| RateReport::new(tests[k], rows.next().unwrap())))
}

/// Runs the plan's selected test on `trials` fresh samples per length.
pub fn run_plan(plan: &SimPlan) -> Result<RateReport> {
    let [r] = simulate(plan, [plan.test])?;
    Ok(r)
}

/// Runs the constrained and the unconstrained test on the same samples.
pub fn compare_tests(plan: &SimPlan) -> Result<PairedReport> {
    let [constrained, unconstrained] =
        simulate(plan, [TestKind::Constrained, TestKind::Unconstrained])?;
    Ok(PairedReport {
        constrained,
        unconstrained,
    })
}
