//! Chernoff information, the `E_η` rejection-exponent building block, and
//! the constrained/unconstrained exponents for the `M = N = K` known-sources
//! setting.
//!
//! `E_η(π1, π2)` is the largest `β` such that the open divergence balls
//! `{ν : D(ν‖π2) < β}` and `{ν : D(ν‖π1) < η}` do not meet, which equals
//! `min { D(ν‖π2) : D(ν‖π1) ≤ η }`. The minimiser lies on the geometric
//! path `ν_α ∝ π1^α π2^(1-α)`, so the computation is a 1-D root find.

use rayon::prelude::*;

use crate::divergence::kl_unchecked;
use crate::error::{input, Error, Result};
use crate::model::Distribution;

/// Bracketing grid used before golden-section refinement.
const SCAN_POINTS: usize = 1000;
/// Final width of the golden-section bracket on `α`.
const ALPHA_TOL: f64 = 1e-10;
/// Largest product alphabet [`product_distribution`] will build.
pub const PRODUCT_LIMIT: usize = 1_000_000;
/// Largest number of sources for the permutation-based exponents (6! = 720).
pub const MAX_PERMUTED_SOURCES: usize = 6;

/// A bijection on `{0, .., n-1}`; `map[k]` is the source used at
/// coordinate `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &v in &map {
            if v >= map.len() || std::mem::replace(&mut seen[v], true) {
                return input(format!("{map:?} is not a permutation"));
            }
        }
        Ok(Self(map))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// All permutations of `{0, .., n-1}` in lexicographic order.
    pub fn all(n: usize) -> Vec<Self> {
        let mut cur: Vec<usize> = (0..n).collect();
        let mut out = vec![Self(cur.clone())];
        loop {
            let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
                return out;
            };
            let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
            cur.swap(i - 1, j);
            cur[i..].reverse();
            out.push(Self(cur.clone()));
        }
    }
}

/// Exponents for one set of sources and one target exponent `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentReport {
    pub lambda: f64,
    /// Error exponent of the constrained test without rejection.
    pub c_star: f64,
    /// Error exponent of the unconstrained test without rejection.
    pub c_uc_star: f64,
    /// Rejection exponent of the constrained test; `+∞` when `λ ≤ C*`.
    pub rejection_constrained: f64,
    /// Rejection exponent of the unconstrained test; `+∞` when `λ ≤ C^uc*`.
    pub rejection_unconstrained: f64,
}

/// The sources of the two-Bernoulli example: `Ber(½)` and `Ber(ρ)`, each
/// written as `(P(0), P(1))`.
pub fn bernoulli_pair(rho: f64) -> Result<Vec<Distribution>> {
    Ok(vec![Distribution::bernoulli(0.5)?, Distribution::bernoulli(rho)?])
}

/// `log2 Σ_{z ∈ S} p1(z)^α p2(z)^(1-α)` over the common support `S`.
fn log_moment(common: &[(f64, f64)], alpha: f64) -> f64 {
    common
        .iter()
        .map(|&(a, b)| a.powf(alpha) * b.powf(1.0 - alpha))
        .sum::<f64>()
        .log2()
}

fn common_support(p1: &Distribution, p2: &Distribution) -> Vec<(f64, f64)> {
    p1.mass()
        .iter()
        .zip(p2.mass())
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (*a, *b))
        .collect()
}

fn check_alphabets(p1: &Distribution, p2: &Distribution) -> Result<()> {
    if p1.alphabet_size() != p2.alphabet_size() {
        return input(format!(
            "alphabet sizes differ: {} vs {}",
            p1.alphabet_size(),
            p2.alphabet_size()
        ));
    }
    Ok(())
}

/// Minimises a convex function on `[lo, hi]`: a uniform scan locates the
/// bracket, then golden-section search narrows it to `tol`.
pub fn minimize_convex(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let step = (hi - lo) / SCAN_POINTS as f64;
    let (mut idx, mut best) = (0, f(lo));
    for k in 1..=SCAN_POINTS {
        let v = f(lo + k as f64 * step);
        if v < best {
            idx = k;
            best = v;
        }
    }
    let mut a = lo + idx.saturating_sub(1) as f64 * step;
    let mut b = (lo + (idx + 1) as f64 * step).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // The scan point itself may beat the refined one on flat functions.
    if best < fx {
        (lo + idx as f64 * step, best)
    } else {
        (x, fx)
    }
}

/// Chernoff information `-min_{α∈[0,1]} log2 Σ p1^α p2^(1-α)` in bits,
/// together with a minimising `α`.
///
/// Symbols outside the common support contribute nothing for `α ∈ (0, 1)`,
/// so the minimum is taken over the continuous extension of the common
/// support sum. Disjoint supports give `+∞`.
pub fn chernoff_with_alpha(p1: &Distribution, p2: &Distribution) -> Result<(f64, f64)> {
    check_alphabets(p1, p2)?;
    if p1 == p2 {
        return Ok((0.0, 0.5));
    }
    let common = common_support(p1, p2);
    if common.is_empty() {
        return Ok((f64::INFINITY, 0.5));
    }
    let (alpha, g) = minimize_convex(|a| log_moment(&common, a), 0.0, 1.0, ALPHA_TOL);
    Ok(((-g).max(0.0), alpha))
}

/// Chernoff information in bits.
pub fn chernoff_information(p1: &Distribution, p2: &Distribution) -> Result<f64> {
    Ok(chernoff_with_alpha(p1, p2)?.0)
}

/// `ν_α ∝ p1^α p2^(1-α)` on the common support of `p1` and `p2`.
/// `α = 0` and `α = 1` give `p2` and `p1` conditioned on that support.
pub fn tilted(p1: &Distribution, p2: &Distribution, alpha: f64) -> Distribution {
    let raw: Vec<f64> = p1
        .mass()
        .iter()
        .zip(p2.mass())
        .map(|(&a, &b)| {
            if a > 0.0 && b > 0.0 {
                a.powf(alpha) * b.powf(1.0 - alpha)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    Distribution::from_raw(raw.into_iter().map(|v| v / total).collect())
}

/// `E_η(p1, p2) = min { D(ν‖p2) : D(ν‖p1) ≤ η }` in bits.
///
/// Zero once `η ≥ D(p2‖p1)`; `D(p1‖p2)` at `η = 0`; `+∞` when no `ν` with
/// finite `D(ν‖p2)` fits inside the `η`-ball around `p1`.
pub fn e_eta(p1: &Distribution, p2: &Distribution, eta: f64) -> Result<f64> {
    check_alphabets(p1, p2)?;
    if eta.is_nan() || eta < 0.0 {
        return input(format!("eta = {eta} must be non-negative"));
    }
    let d21 = kl_unchecked(p2.mass(), p1.mass());
    if eta >= d21 {
        return Ok(0.0);
    }
    if eta == 0.0 {
        return Ok(kl_unchecked(p1.mass(), p2.mass()));
    }
    if common_support(p1, p2).is_empty() {
        return Ok(f64::INFINITY);
    }
    let radius = |alpha: f64| kl_unchecked(tilted(p1, p2, alpha).mass(), p1.mass());
    let value = |alpha: f64| kl_unchecked(tilted(p1, p2, alpha).mass(), p2.mass());
    // D(ν_α‖p1) decreases from radius(0) to radius(1) as α goes 0 → 1.
    if eta < radius(1.0) {
        return Ok(f64::INFINITY);
    }
    if eta >= radius(0.0) {
        return Ok(value(0.0));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if radius(mid) > eta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(value(hi))
}

/// `μ^σ(z_1, .., z_N) = Π_k μ_{σ(k)}(z_k)` over `|Z|^N` symbols in
/// row-major order, coordinate 1 most significant.
pub fn product_distribution(mus: &[Distribution], sigma: &Permutation) -> Result<Distribution> {
    let n = mus.len();
    if sigma.as_slice().len() != n || n == 0 {
        return input("permutation length must equal the number of distributions");
    }
    let z = mus[0].alphabet_size();
    if mus.iter().any(|m| m.alphabet_size() != z) {
        return input("distributions must share an alphabet");
    }
    let size = (0..n)
        .try_fold(1usize, |acc, _| acc.checked_mul(z))
        .filter(|&s| s <= PRODUCT_LIMIT)
        .ok_or_else(|| Error::Guard(format!("product alphabet {z}^{n} exceeds {PRODUCT_LIMIT}")))?;
    let mut mass = vec![1.0; size];
    for (idx, p) in mass.iter_mut().enumerate() {
        let mut rest = idx;
        for k in (0..n).rev() {
            *p *= mus[sigma.as_slice()[k]].get(rest % z);
            rest /= z;
        }
    }
    Ok(Distribution::from_raw(mass))
}

fn check_permuted(mus: &[Distribution]) -> Result<()> {
    if mus.is_empty() {
        return input("at least one distribution is required");
    }
    if mus.len() > MAX_PERMUTED_SOURCES {
        return Err(Error::Guard(format!(
            "{} sources exceed the limit of {MAX_PERMUTED_SOURCES} for permutation exponents",
            mus.len()
        )));
    }
    Ok(())
}

fn products(mus: &[Distribution]) -> Result<Vec<Distribution>> {
    check_permuted(mus)?;
    Permutation::all(mus.len())
        .iter()
        .map(|s| product_distribution(mus, s))
        .collect()
}

/// Ordered pairs `(i, j)`, `i ≠ j`.
fn ordered_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect()
}

fn min_over_pairs(
    dists: &[Distribution],
    f: impl Fn(&Distribution, &Distribution) -> Result<f64> + Sync,
) -> Result<f64> {
    let vals: Vec<f64> = ordered_pairs(dists.len())
        .into_par_iter()
        .map(|(i, j)| f(&dists[i], &dists[j]))
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(f64::INFINITY, f64::min))
}

/// `C* = min_{σ ≠ σ'} C(μ^σ, μ^σ')`, the no-rejection error exponent of the
/// constrained test. `+∞` for a single source.
pub fn c_star(mus: &[Distribution]) -> Result<f64> {
    min_over_pairs(&products(mus)?, chernoff_information)
}

/// `C^uc* = min_{i ≠ j} C(μ_i, μ_j)`, the no-rejection error exponent of the
/// unconstrained test. `+∞` for a single source.
pub fn c_uc_star(mus: &[Distribution]) -> Result<f64> {
    check_permuted(mus)?;
    min_over_pairs(mus, chernoff_information)
}

/// Both Chernoff quantities and both rejection exponents at `λ`.
pub fn rejection_exponents(mus: &[Distribution], lambda: f64) -> Result<ExponentReport> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return input(format!("lambda = {lambda} must be finite and positive"));
    }
    let prods = products(mus)?;
    let c_star = min_over_pairs(&prods, chernoff_information)?;
    let c_uc_star = min_over_pairs(mus, chernoff_information)?;
    let rejection_constrained = if c_star < lambda {
        min_over_pairs(&prods, |a, b| e_eta(a, b, lambda))?
    } else {
        f64::INFINITY
    };
    let rejection_unconstrained = if c_uc_star < lambda {
        min_over_pairs(mus, |a, b| e_eta(a, b, lambda))?
    } else {
        f64::INFINITY
    };
    Ok(ExponentReport {
        lambda,
        c_star,
        c_uc_star,
        rejection_constrained,
        rejection_unconstrained,
    })
}
