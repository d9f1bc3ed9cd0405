//! Information measures in bits and the edge weights built from them.

use crate::error::{input, Result};
use crate::model::{Distribution, KnownInstance, UnknownInstance};

/// `Σ ν(z) log2(ν(z)/μ(z))`, with `0·log(0/q) = 0`. Infinite when `ν` puts
/// mass where `μ` has none.
pub fn kl_divergence(nu: &Distribution, mu: &Distribution) -> Result<f64> {
    same_alphabet(nu, mu)?;
    Ok(kl_unchecked(nu.mass(), mu.mass()))
}

pub(crate) fn kl_unchecked(nu: &[f64], mu: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&p, &q) in nu.iter().zip(mu) {
        if p > 0.0 {
            if q <= 0.0 {
                return f64::INFINITY;
            }
            total += p * (p / q).log2();
        }
    }
    // Rounding can leave a tiny negative residue for nearly equal inputs.
    total.max(0.0)
}

/// Shannon entropy in bits.
pub fn entropy(mu: &Distribution) -> f64 {
    entropy_of(mu.mass())
}

pub(crate) fn entropy_of(mass: &[f64]) -> f64 {
    let h: f64 = mass
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Known-sources edge weight `alpha · D(Γ_y ‖ μ)`. `alpha` is the ratio of
/// the sequence length to the reference length and must be at least 1.
pub fn known_edge_weight(gamma_y: &Distribution, mu: &Distribution, alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha < 1.0 || alpha.is_infinite() {
        return input(format!("length ratio {alpha} must be finite and at least 1"));
    }
    let d = kl_divergence(gamma_y, mu)?;
    Ok(if alpha == 1.0 { d } else { alpha * d })
}

/// Unknown-sources edge weight between two empirical distributions of
/// sequences of lengths `nx` and `ny`, normalised by the reference length
/// `n_ref`.
///
/// With `m = (nx·Γx + ny·Γy)/(nx + ny)`, the empirical distribution of the
/// concatenated sequence, the weight is
/// `(nx/n_ref)·D(Γx ‖ m) + (ny/n_ref)·D(Γy ‖ m)`. It is always finite.
pub fn unknown_edge_weight_ref(
    gamma_x: &Distribution,
    gamma_y: &Distribution,
    nx: usize,
    ny: usize,
    n_ref: usize,
) -> Result<f64> {
    same_alphabet(gamma_x, gamma_y)?;
    if nx == 0 || ny == 0 || n_ref == 0 {
        return input("sequence lengths must be positive");
    }
    // Evaluate in a canonical argument order so that swapping the pair gives
    // bit-identical results.
    let (a, na, b, nb) = if (nx, gamma_x.mass()) <= (ny, gamma_y.mass()) {
        (gamma_x, nx, gamma_y, ny)
    } else {
        (gamma_y, ny, gamma_x, nx)
    };
    let total = (na + nb) as f64;
    let mix = Distribution::mixture(a, na as f64 / total, b, nb as f64 / total);
    let da = kl_unchecked(a.mass(), mix.mass());
    let db = kl_unchecked(b.mass(), mix.mass());
    let r = n_ref as f64;
    Ok((na as f64 / r) * da + (nb as f64 / r) * db)
}

/// Unknown-sources edge weight with the shorter of the two lengths as the
/// reference. For equal lengths this is
/// `D(Γx ‖ ½(Γx+Γy)) + D(Γy ‖ ½(Γx+Γy))`.
pub fn unknown_edge_weight(
    gamma_x: &Distribution,
    gamma_y: &Distribution,
    nx: usize,
    ny: usize,
) -> Result<f64> {
    unknown_edge_weight_ref(gamma_x, gamma_y, nx, ny, nx.min(ny))
}

/// `M × N` matrix of edge weights in bits, `+∞` marking absent edges.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    /// Builds a matrix from rows. Entries must be finite or `+∞`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != c {
                return input(format!("row {i} has {} entries, expected {c}", row.len()));
            }
            if let Some(w) = row.iter().find(|w| w.is_nan() || **w == f64::NEG_INFINITY) {
                return input(format!("weight {w} in row {i} is not allowed"));
            }
            data.extend(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub(crate) fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, w: f64) {
        self.data[i * self.cols + j] = w;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Adds `c` to every finite entry.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|&w| if w.is_finite() { w + c } else { w })
                .collect(),
        }
    }
}

/// Edge weights `D(Γ_{y_j} ‖ μ_i)` for a known-sources instance. Rows are
/// sources, columns are observed sequences.
pub fn weight_matrix_known(instance: &KnownInstance) -> WeightMatrix {
    let gammas: Vec<Distribution> = instance
        .observations()
        .iter()
        .map(|y| y.empirical())
        .collect();
    let (m, n) = instance.dims();
    WeightMatrix::from_fn(m, n, |i, j| {
        kl_unchecked(gammas[j].mass(), instance.sources()[i].mass())
    })
}

/// Edge weights for an unknown-sources instance. Rows are training
/// sequences, columns are observed sequences.
///
/// With `prune_disjoint`, pairs whose empirical distributions have disjoint
/// supports are marked `+∞`. Their weights are finite, so pruning can change
/// the optimal matching; it is off unless asked for.
pub fn weight_matrix_unknown(instance: &UnknownInstance, prune_disjoint: bool) -> WeightMatrix {
    let gx: Vec<Distribution> = instance.train().iter().map(|s| s.empirical()).collect();
    let gy: Vec<Distribution> = instance
        .observations()
        .iter()
        .map(|s| s.empirical())
        .collect();
    let n_ref = instance.n();
    let (m, n) = instance.dims();
    WeightMatrix::from_fn(m, n, |i, j| {
        if prune_disjoint && disjoint_supports(&gx[i], &gy[j]) {
            return f64::INFINITY;
        }
        let nx = instance.train()[i].len();
        let ny = instance.observations()[j].len();
        unknown_edge_weight_ref(&gx[i], &gy[j], nx, ny, n_ref)
            .expect("instance sequences share an alphabet")
    })
}

fn disjoint_supports(a: &Distribution, b: &Distribution) -> bool {
    a.mass()
        .iter()
        .zip(b.mass())
        .all(|(p, q)| *p == 0.0 || *q == 0.0)
}

fn same_alphabet(a: &Distribution, b: &Distribution) -> Result<()> {
    if a.alphabet_size() != b.alphabet_size() {
        return input(format!(
            "alphabet sizes differ: {} vs {}",
            a.alphabet_size(),
            b.alphabet_size()
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Alphabet, Sequence};
    use proptest::prelude::*;

    fn d(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    // Two-term sums written out by hand.
    fn kl2(p: [f64; 2], q: [f64; 2]) -> f64 {
        p[0] * (p[0] / q[0]).log2() + p[1] * (p[1] / q[1]).log2()
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&d(&[0.3, 0.7]), &d(&[0.3, 0.7])).unwrap(), 0.0);
        let v = kl_divergence(&d(&[0.5, 0.5]), &d(&[0.25, 0.75])).unwrap();
        assert!((v - kl2([0.5, 0.5], [0.25, 0.75])).abs() < 1e-15);
        assert!((v - 0.207519).abs() < 1e-6);
        assert_eq!(
            kl_divergence(&d(&[0.5, 0.5]), &d(&[1.0, 0.0])).unwrap(),
            f64::INFINITY
        );
        // zero mass in ν is skipped even where μ is zero
        assert_eq!(kl_divergence(&d(&[1.0, 0.0]), &d(&[1.0, 0.0])).unwrap(), 0.0);
        assert!(kl_divergence(&d(&[1.0]), &d(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&d(&[1.0, 0.0])), 0.0);
        assert_eq!(entropy(&Distribution::uniform(4)), 2.0);
        let h = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!((entropy(&d(&[0.25, 0.75])) - h).abs() < 1e-15);
        assert!((h - 0.811278).abs() < 1e-6);
    }

    #[test]
    fn known_weight_examples() {
        let g = d(&[0.5, 0.5]);
        let mu = d(&[0.25, 0.75]);
        assert_eq!(known_edge_weight(&mu, &mu, 3.0).unwrap(), 0.0);
        let w1 = known_edge_weight(&g, &mu, 1.0).unwrap();
        assert_eq!(w1, kl_divergence(&g, &mu).unwrap());
        assert!((w1 - 0.207519).abs() < 1e-6);
        let w2 = known_edge_weight(&g, &mu, 2.0).unwrap();
        assert!((w2 - 0.415037).abs() < 1e-6);
        assert!(known_edge_weight(&g, &mu, 0.5).is_err());
        assert!(known_edge_weight(&g, &mu, f64::NAN).is_err());
    }

    #[test]
    fn unknown_weight_examples() {
        let h = d(&[0.5, 0.5]);
        assert_eq!(unknown_edge_weight(&h, &h, 10, 10).unwrap(), 0.0);
        let w = unknown_edge_weight(&d(&[1.0, 0.0]), &d(&[0.0, 1.0]), 8, 8).unwrap();
        assert!((w - 2.0).abs() < 1e-15);
        // brute force: m = (0.4, 0.6)
        let oracle = kl2([0.6, 0.4], [0.4, 0.6]) + kl2([0.2, 0.8], [0.4, 0.6]);
        let w = unknown_edge_weight(&d(&[0.6, 0.4]), &d(&[0.2, 0.8]), 5, 5).unwrap();
        assert!((w - oracle).abs() < 1e-15);
        assert!((w - 0.249022).abs() < 1e-6);
    }

    #[test]
    fn unknown_weight_unequal_lengths_is_concatenation() {
        // x = 0 0 0 1 (n=4), y = 1 1 (n=2); concatenation has 3 zeros, 3 ones
        let gx = d(&[0.75, 0.25]);
        let gy = d(&[0.0, 1.0]);
        let m = [0.5, 0.5];
        let oracle = (4.0 / 2.0) * kl2([0.75, 0.25], m) + (2.0 / 2.0) * (1.0f64 * (1.0f64 / 0.5).log2());
        let w = unknown_edge_weight(&gx, &gy, 4, 2).unwrap();
        assert!((w - oracle).abs() < 1e-12);
    }

    #[test]
    fn weight_matrices() {
        let bin = Alphabet::new(2).unwrap();
        let mu1 = d(&[0.5, 0.5]);
        let mu2 = d(&[1.0, 0.0]);
        let y1 = Sequence::new(vec![0, 1, 0, 1], bin).unwrap();
        let y2 = Sequence::new(vec![0, 0, 0, 0], bin).unwrap();
        let inst = KnownInstance::new(vec![mu1.clone()], vec![y1.clone()], 1).unwrap();
        assert_eq!(weight_matrix_known(&inst).get(0, 0), 0.0);
        let inst = KnownInstance::new(vec![mu2.clone()], vec![y1.clone()], 1).unwrap();
        assert_eq!(weight_matrix_known(&inst).get(0, 0), f64::INFINITY);
        let inst = KnownInstance::new(vec![mu1.clone(), mu2.clone()], vec![y1.clone(), y2.clone()], 2)
            .unwrap();
        let w = weight_matrix_known(&inst);
        let mus = [&mu1, &mu2];
        let ys = [&y1, &y2];
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(w.get(i, j), kl_divergence(&ys[j].empirical(), mus[i]).unwrap());
            }
        }

        let x = Sequence::new(vec![0, 0, 0], bin).unwrap();
        let y = Sequence::new(vec![1, 1, 1], bin).unwrap();
        let inst = UnknownInstance::new(vec![x.clone(), y.clone()], vec![x.clone(), y.clone()], 2).unwrap();
        let w = weight_matrix_unknown(&inst, false);
        assert_eq!(w.get(0, 0), 0.0);
        assert_eq!(w.get(1, 1), 0.0);
        assert!((w.get(0, 1) - 2.0).abs() < 1e-15);
        assert_eq!(w.get(0, 1), w.get(1, 0));
        let pruned = weight_matrix_unknown(&inst, true);
        assert_eq!(pruned.get(0, 1), f64::INFINITY);
        assert_eq!(pruned.get(0, 0), 0.0);
    }

    fn dist(size: usize) -> impl Strategy<Value = Distribution> {
        prop::collection::vec(0u32..20, size).prop_filter_map("non-zero", |c| {
            let c: Vec<u64> = c.into_iter().map(u64::from).collect();
            (c.iter().sum::<u64>() > 0).then(|| Distribution::from_counts(&c))
        })
    }

    proptest! {
        #[test]
        fn kl_nonnegative_zero_iff_equal((p, q) in (2usize..5).prop_flat_map(|k| (dist(k), dist(k)))) {
            let v = kl_divergence(&p, &q).unwrap();
            prop_assert!(v >= 0.0);
            if p.total_variation(&q) <= 1e-12 {
                prop_assert!(v <= 1e-12);
            } else {
                prop_assert!(v > 0.0);
            }
        }

        #[test]
        fn unknown_weight_symmetric((p, q, n) in (2usize..5).prop_flat_map(|k| (dist(k), dist(k), 1usize..50))) {
            prop_assert_eq!(
                unknown_edge_weight(&p, &q, n, n).unwrap(),
                unknown_edge_weight(&q, &p, n, n).unwrap()
            );
        }

        #[test]
        fn unknown_weight_entropy_identity((p, q) in (2usize..5).prop_flat_map(|k| (dist(k), dist(k)))) {
            let mix = Distribution::mixture(&p, 0.5, &q, 0.5);
            let via_entropy = 2.0 * entropy(&mix) - entropy(&p) - entropy(&q);
            let w = unknown_edge_weight(&p, &q, 7, 7).unwrap();
            prop_assert!((w - via_entropy).abs() < 1e-9);
        }

        #[test]
        fn known_weight_alpha_one_is_kl((p, q) in (2usize..5).prop_flat_map(|k| (dist(k), dist(k)))) {
            let a = known_edge_weight(&p, &q, 1.0).unwrap();
            let b = kl_divergence(&p, &q).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
