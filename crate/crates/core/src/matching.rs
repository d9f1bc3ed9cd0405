//! Minimum-weight cardinality-K bipartite matching and the second-best
//! matching.
//!
//! The solver is successive shortest augmenting paths on the bipartite flow
//! network `source → rows → columns → sink`, with Johnson potentials so each
//! phase is a Dijkstra run. K phases on a dense `M × N` matrix cost
//! `O(K·(M+N)²)`. Infinite entries are absent edges.
//!
//! Among matchings of equal weight (within [`TIE_TOLERANCE`], relative) the
//! one with the lexicographically smallest sorted edge list is reported.

use crate::divergence::WeightMatrix;
use crate::error::{input, Error, Result};
use crate::model::{hypothesis_count, Matching};

/// Relative tolerance under which two matching weights count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Largest hypothesis space [`enumerate_matchings`] will materialise.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// True when `candidate` is no worse than `best` up to the tie tolerance.
pub fn within_tie(candidate: f64, best: f64) -> bool {
    candidate <= best + TIE_TOLERANCE * (1.0 + best.abs())
}

/// Sum of edge weights, accumulated in sorted edge order.
pub fn matching_weight(w: &WeightMatrix, m: &Matching) -> f64 {
    m.edges().iter().map(|&(i, j)| w.get(i, j)).sum()
}

/// Best and second-best matchings.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedMatchings {
    pub best: (Matching, f64),
    pub second: SecondBest,
}

impl RankedMatchings {
    /// Second-best weight, `+∞` when there is no finite alternative.
    pub fn second_weight(&self) -> f64 {
        match &self.second {
            SecondBest::Found(_, w) => *w,
            _ => f64::INFINITY,
        }
    }
}

/// Outcome of the second-best search.
#[derive(Debug, Clone, PartialEq)]
pub enum SecondBest {
    Found(Matching, f64),
    /// The hypothesis space has a single element.
    Single,
    /// Other hypotheses exist but all of them have infinite weight.
    AllInfinite,
}

/// Minimum-weight matching of cardinality exactly `k`, ties broken towards
/// the lexicographically smallest edge list.
pub fn min_weight_matching(w: &WeightMatrix, k: usize) -> Result<(Matching, f64)> {
    check_k(w, k)?;
    let all_rows: Vec<usize> = (0..w.rows()).collect();
    let all_cols: Vec<usize> = (0..w.cols()).collect();
    let (_, opt) = solve_restricted(w, &all_rows, &all_cols, k).ok_or(Error::Infeasible { k })?;
    let m = canonical(w, k, opt);
    let weight = matching_weight(w, &m);
    Ok((m, weight))
}

/// Some minimum-weight matching of cardinality `k`, without the
/// lexicographic tie-break. Cheaper than [`min_weight_matching`] when many
/// weights are tied.
pub fn min_weight_matching_any(w: &WeightMatrix, k: usize) -> Result<(Matching, f64)> {
    check_k(w, k)?;
    let all_rows: Vec<usize> = (0..w.rows()).collect();
    let all_cols: Vec<usize> = (0..w.cols()).collect();
    let (edges, _) = solve_restricted(w, &all_rows, &all_cols, k).ok_or(Error::Infeasible { k })?;
    let m = Matching::new(edges, w.rows(), w.cols()).expect("solver returns a valid matching");
    let weight = matching_weight(w, &m);
    Ok((m, weight))
}

/// The minimum-weight cardinality-`k` matching other than `best`, found by
/// forbidding each edge of `best` in turn and re-solving.
///
/// Every matching distinct from `best` with the same cardinality misses at
/// least one of its edges, so one of the sub-problems contains the answer.
pub fn second_min_weight_matching(w: &WeightMatrix, k: usize, best: &Matching) -> Result<SecondBest> {
    check_k(w, k)?;
    if best.cardinality() != k || best.dims() != (w.rows(), w.cols()) {
        return input("best matching does not fit the weight matrix");
    }
    if hypothesis_count(w.rows(), w.cols(), k).is_ok_and(|j| j == 1) {
        return Ok(SecondBest::Single);
    }
    let mut found: Option<(Matching, f64)> = None;
    for &(i, j) in best.edges() {
        let mut restricted = w.clone();
        restricted.set(i, j, f64::INFINITY);
        let (m, weight) = match min_weight_matching(&restricted, k) {
            Ok(r) => r,
            Err(Error::Infeasible { .. }) => continue,
            Err(e) => return Err(e),
        };
        found = match found {
            None => Some((m, weight)),
            Some((bm, bw)) => {
                let lower = weight < bw && !within_tie(bw, weight);
                let tied = within_tie(weight, bw) && within_tie(bw, weight);
                if lower || (tied && m < bm) {
                    Some((m, weight))
                } else {
                    Some((bm, bw))
                }
            }
        };
    }
    Ok(match found {
        Some((m, weight)) => SecondBest::Found(m, weight),
        None => SecondBest::AllInfinite,
    })
}

/// Best and second-best matchings in one call.
pub fn rank_matchings(w: &WeightMatrix, k: usize) -> Result<RankedMatchings> {
    let best = min_weight_matching(w, k)?;
    let second = second_min_weight_matching(w, k, &best.0)?;
    Ok(RankedMatchings { best, second })
}

/// All cardinality-`k` matchings of the complete `m × n` bipartite graph,
/// in lexicographic order of their sorted edge lists.
pub fn enumerate_matchings(m: usize, n: usize, k: usize) -> Result<Vec<Matching>> {
    let count = hypothesis_count(m, n, k)?;
    if count > ENUMERATION_LIMIT {
        return Err(Error::Guard(format!(
            "{count} matchings exceed the enumeration limit of {ENUMERATION_LIMIT}"
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut edges = Vec::with_capacity(k);
    let mut col_used = vec![false; n];
    enumerate_rec(m, n, k, 0, &mut edges, &mut col_used, &mut out);
    debug_assert_eq!(out.len() as u128, count);
    Ok(out)
}

fn enumerate_rec(
    m: usize,
    n: usize,
    k: usize,
    next_row: usize,
    edges: &mut Vec<(usize, usize)>,
    col_used: &mut [bool],
    out: &mut Vec<Matching>,
) {
    if edges.len() == k {
        out.push(Matching::new(edges.clone(), m, n).expect("disjoint by construction"));
        return;
    }
    let still_needed = k - edges.len();
    for i in next_row..m {
        if m - i < still_needed {
            break;
        }
        for j in 0..n {
            if col_used[j] {
                continue;
            }
            col_used[j] = true;
            edges.push((i, j));
            enumerate_rec(m, n, k, i + 1, edges, col_used, out);
            edges.pop();
            col_used[j] = false;
        }
    }
}

fn check_k(w: &WeightMatrix, k: usize) -> Result<()> {
    if k > w.rows().min(w.cols()) {
        return input(format!(
            "k = {k} exceeds min({}, {})",
            w.rows(),
            w.cols()
        ));
    }
    Ok(())
}

/// Rebuilds the lexicographically smallest matching whose weight ties `opt`.
///
/// Edges are fixed one at a time in increasing order. A candidate `(i, j)`
/// is kept when the cheapest completion over rows after `i` and the unused
/// columns still reaches `opt`.
fn canonical(w: &WeightMatrix, k: usize, opt: f64) -> Matching {
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(k);
    let mut col_used = vec![false; w.cols()];
    let mut prefix = 0.0;
    let mut first_row = 0;
    while edges.len() < k {
        let still_needed = k - edges.len();
        let mut chosen = None;
        'rows: for i in first_row..w.rows() {
            if w.rows() - i < still_needed {
                break;
            }
            let later_rows: Vec<usize> = (i + 1..w.rows()).collect();
            for j in 0..w.cols() {
                let wij = w.get(i, j);
                if col_used[j] || !wij.is_finite() {
                    continue;
                }
                let cols: Vec<usize> = (0..w.cols()).filter(|&c| c != j && !col_used[c]).collect();
                let Some((_, rest)) = solve_restricted(w, &later_rows, &cols, still_needed - 1) else {
                    continue;
                };
                if within_tie(prefix + wij + rest, opt) {
                    chosen = Some((i, j, wij));
                    break 'rows;
                }
            }
        }
        let (i, j, wij) = chosen.expect("an optimal completion always exists");
        edges.push((i, j));
        col_used[j] = true;
        prefix += wij;
        first_row = i + 1;
    }
    Matching::new(edges, w.rows(), w.cols()).expect("disjoint by construction")
}

/// Minimum-weight matching of cardinality `k` using only the listed rows and
/// columns. Returns the edges (in original indices) and the total weight, or
/// `None` when no finite matching of that size exists.
fn solve_restricted(
    w: &WeightMatrix,
    rows: &[usize],
    cols: &[usize],
    k: usize,
) -> Option<(Vec<(usize, usize)>, f64)> {
    if k == 0 {
        return Some((Vec::new(), 0.0));
    }
    if k > rows.len().min(cols.len()) {
        return None;
    }
    let m = rows.len();
    let n = cols.len();
    let cost = |a: usize, b: usize| w.get(rows[a], cols[b]);

    // Node layout: source, rows 0..m, columns 0..n, sink.
    let source = 0;
    let row_node = |a: usize| 1 + a;
    let col_node = |b: usize| 1 + m + b;
    let sink = 1 + m + n;
    let nodes = sink + 1;

    let mut pot = vec![0.0f64; nodes];
    let mut sink_pot = f64::INFINITY;
    for b in 0..n {
        let min = (0..m).map(|a| cost(a, b)).fold(f64::INFINITY, f64::min);
        if min.is_finite() {
            pot[col_node(b)] = min;
            sink_pot = sink_pot.min(min);
        }
    }
    if !sink_pot.is_finite() {
        return None;
    }
    pot[sink] = sink_pot;

    let mut row_match: Vec<Option<usize>> = vec![None; m];
    let mut col_match: Vec<Option<usize>> = vec![None; n];
    let mut dist = vec![f64::INFINITY; nodes];
    let mut parent = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];

    for _ in 0..k {
        dist.fill(f64::INFINITY);
        parent.fill(usize::MAX);
        done.fill(false);
        dist[source] = 0.0;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX || u == sink {
                break;
            }
            done[u] = true;
            let du = dist[u];
            let relax = |v: usize, c: f64, dist: &mut [f64], parent: &mut [usize]| {
                let reduced = (c + pot[u] - pot[v]).max(0.0);
                if du + reduced < dist[v] {
                    dist[v] = du + reduced;
                    parent[v] = u;
                }
            };
            if u == source {
                for a in 0..m {
                    if row_match[a].is_none() {
                        relax(row_node(a), 0.0, &mut dist, &mut parent);
                    }
                }
            } else if u <= m {
                let a = u - 1;
                for b in 0..n {
                    let c = cost(a, b);
                    if c.is_finite() && row_match[a] != Some(b) {
                        relax(col_node(b), c, &mut dist, &mut parent);
                    }
                }
            } else {
                let b = u - 1 - m;
                match col_match[b] {
                    Some(a) => relax(row_node(a), -cost(a, b), &mut dist, &mut parent),
                    None => relax(sink, 0.0, &mut dist, &mut parent),
                }
            }
        }
        let reach = dist[sink];
        if !reach.is_finite() {
            return None;
        }
        for v in 0..nodes {
            pot[v] += dist[v].min(reach);
        }
        // Walk back from the sink flipping matched/unmatched edges.
        let mut v = parent[sink];
        while v != source {
            let b = v - 1 - m;
            let row = parent[v];
            let a = row - 1;
            let prev = parent[row];
            row_match[a] = Some(b);
            col_match[b] = Some(a);
            v = prev;
        }
    }

    let mut edges = Vec::with_capacity(k);
    let mut total = 0.0;
    for (a, b) in row_match.iter().enumerate() {
        if let Some(b) = *b {
            edges.push((rows[a], cols[b]));
        }
    }
    edges.sort_unstable();
    for &(i, j) in &edges {
        total += w.get(i, j);
    }
    Some((edges, total))
}
