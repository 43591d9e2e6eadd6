//! Edge weights of the matching graph and maximum product matchings.
//!
//! Products are maximized as sums of `ln â`. Only edges with `â` above the
//! floor and a positive log gain take part; vertices may stay unmatched.

mod auction;
mod blossom;
mod bruteforce;
mod preis;
mod suitor;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub use auction::match_auction;
pub use blossom::match_exact;
pub use bruteforce::match_bruteforce;
pub use preis::match_preis;
pub use suitor::match_suitor;

/// Partner value of an unmatched vertex.
pub const UNMATCHED: usize = usize::MAX;

/// Default exclusion floor for edge weights.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// Vertex budget of the exact matcher.
pub const EXACT_BUDGET: usize = 20_000;

/// Vertex budget of the brute-force matcher.
pub const BRUTEFORCE_BUDGET: usize = 16;

/// Edge weights â_ij on the off-diagonal pattern of A, stored by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeights {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    weight: Vec<f64>,
    gain: Vec<f64>,
    zero_weight: Vec<usize>,
}

impl EdgeWeights {
    /// Builds a graph directly from undirected weighted edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], floor: f64) -> Result<Self> {
        let mut trip = Vec::with_capacity(2 * edges.len());
        for &(i, j, w) in edges {
            if i == j {
                return Err(Error::Invalid("self loop in matching graph".into()));
            }
            trip.push((i, j, w));
            trip.push((j, i, w));
        }
        let s = SparseMatrix::from_triplets(n, n, &trip)?;
        let gain = s.values().iter().map(|&w| log_gain(w, floor)).collect();
        Ok(EdgeWeights {
            n,
            row_ptr: s.row_ptr().to_vec(),
            col_idx: s.col_idx().to_vec(),
            weight: s.values().to_vec(),
            gain,
            zero_weight: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Neighbours of `i` with their weights â.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.weight[r].iter().copied())
    }

    /// Neighbours of `i` reachable through candidate edges, with their log gains.
    pub fn candidates(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.gain[r].iter().copied())
            .filter(|&(_, g)| g > 0.0)
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].binary_search(&j).ok().map(|k| self.weight[r.start + k])
    }

    /// Log gain of edge (i, j), zero if it is not a candidate.
    pub fn gain(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.gain[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// Candidate edges (i < j, gain).
    pub fn candidate_edges(&self) -> Vec<(usize, usize, f64)> {
        let mut e = Vec::new();
        for i in 0..self.n {
            for (j, g) in self.candidates(i) {
                if i < j {
                    e.push((i, j, g));
                }
            }
        }
        e
    }

    /// Vertices whose weight entry was zero.
    pub fn zero_weight_vertices(&self) -> &[usize] {
        &self.zero_weight
    }
}

fn log_gain(w: f64, floor: f64) -> f64 {
    if w > floor && w > 1.0 {
        libm::log(w)
    } else {
        0.0
    }
}

/// â_ij = 1 − 2 a_ij w_i w_j / (a_ii w_i² + a_jj w_j²).
pub fn compute_edge_weights(a: &SparseMatrix, w: &[f64]) -> Result<EdgeWeights> {
    compute_edge_weights_with_floor(a, w, WEIGHT_FLOOR)
}

pub fn compute_edge_weights_with_floor(a: &SparseMatrix, w: &[f64], floor: f64) -> Result<EdgeWeights> {
    let n = a.n();
    if w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: w.len() });
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::NonPositiveDiagonal { index: i });
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(a.nnz());
    let mut weight = Vec::with_capacity(a.nnz());
    row_ptr.push(0);
    for i in 0..n {
        for (j, _) in a.off_diagonal(i) {
            let (p, q) = (i.min(j), i.max(j));
            let apq = a.get(p, q);
            let den = diag[p] * w[p] * w[p] + diag[q] * w[q] * w[q];
            let hat = if den > 0.0 { 1.0 - 2.0 * apq * w[p] * w[q] / den } else { 1.0 };
            col_idx.push(j);
            weight.push(hat);
        }
        row_ptr.push(col_idx.len());
    }
    let gain = weight.iter().map(|&x| log_gain(x, floor)).collect();
    let zero_weight = (0..n).filter(|&i| w[i] == 0.0).collect();
    Ok(EdgeWeights { n, row_ptr, col_idx, weight, gain, zero_weight })
}

/// Partner map of a matching.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub partner: Vec<usize>,
    /// Σ ln â over matched edges.
    pub product_log: f64,
}

impl Matching {
    pub fn empty(n: usize) -> Self {
        Matching { partner: vec![UNMATCHED; n], product_log: 0.0 }
    }

    /// Builds a matching from a partner array, recomputing the objective.
    pub fn from_partner(ew: &EdgeWeights, partner: Vec<usize>) -> Self {
        let product_log = objective(ew, &partner);
        Matching { partner, product_log }
    }

    pub fn n_pairs(&self) -> usize {
        self.partner.iter().enumerate().filter(|&(i, &p)| p != UNMATCHED && i < p).count()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.partner
            .iter()
            .enumerate()
            .filter(|&(i, &p)| p != UNMATCHED && i < p)
            .map(|(i, &p)| (i, p))
            .collect()
    }

    /// Involution, edge membership and positivity of every matched gain.
    pub fn is_valid(&self, ew: &EdgeWeights) -> bool {
        self.partner.len() == ew.n()
            && self.partner.iter().enumerate().all(|(i, &p)| {
                p == UNMATCHED || (p < ew.n() && p != i && self.partner[p] == i && ew.gain(i, p) > 0.0)
            })
    }
}

/// Σ ln â over the matched candidate edges of a partner array.
pub fn objective(ew: &EdgeWeights, partner: &[usize]) -> f64 {
    let mut s = 0.0;
    for (i, &p) in partner.iter().enumerate() {
        if p != UNMATCHED && i < p {
            s += ew.gain(i, p);
        }
    }
    s
}

/// Available matching algorithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Matcher {
    Exact,
    Suitor,
    Preis,
    Auction { eps: f64 },
    BruteForce,
}

impl Matcher {
    pub fn run(&self, ew: &EdgeWeights) -> Result<Matching> {
        match *self {
            Matcher::Exact => match_exact(ew),
            Matcher::Suitor => Ok(match_suitor(ew)),
            Matcher::Preis => Ok(match_preis(ew)),
            Matcher::Auction { eps } => match_auction(ew, eps),
            Matcher::BruteForce => match_bruteforce(ew),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Matcher::Exact => "exact",
            Matcher::Suitor => "suitor",
            Matcher::Preis => "preis",
            Matcher::Auction { .. } => "auction",
            Matcher::BruteForce => "bruteforce",
        }
    }
}

/// Strict total order on edges: larger gain first, then lexicographically smaller endpoints.
#[inline]
pub(crate) fn heavier(g1: f64, a1: usize, b1: usize, g2: f64, a2: usize, b2: usize) -> bool {
    if g1 != g2 {
        return g1 > g2;
    }
    let k1 = (a1.min(b1), a1.max(b1));
    let k2 = (a2.min(b2), a2.max(b2));
    k1 < k2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_matrix(aij: f64) -> SparseMatrix {
        SparseMatrix::from_triplets(2, 2, &[(0, 0, 4.0), (1, 1, 4.0), (0, 1, aij), (1, 0, aij)]).unwrap()
    }

    #[test]
    fn weight_formula_hand_values() {
        let ew = compute_edge_weights(&pair_matrix(-1.0), &[1.0, 1.0]).unwrap();
        assert!((ew.weight(0, 1).unwrap() - 1.25).abs() < 1e-15);
        let ew = compute_edge_weights(&pair_matrix(-1.0), &[1.0, -1.0]).unwrap();
        assert!((ew.weight(0, 1).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(ew.gain(0, 1), 0.0);
        let ew = compute_edge_weights(&pair_matrix(0.0), &[1.0, 1.0]).unwrap();
        assert_eq!(ew.weight(0, 1).unwrap(), 1.0);
    }

    #[test]
    fn zero_weights_are_flagged() {
        let ew = compute_edge_weights(&pair_matrix(-1.0), &[0.0, 0.0]).unwrap();
        assert_eq!(ew.weight(0, 1).unwrap(), 1.0);
        assert_eq!(ew.zero_weight_vertices(), &[0, 1]);
    }

    #[test]
    fn nonpositive_diagonal_rejected() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 0.0), (1, 1, 4.0), (0, 1, -1.0), (1, 0, -1.0)])
            .unwrap();
        assert_eq!(compute_edge_weights(&a, &[1.0, 1.0]), Err(Error::NonPositiveDiagonal { index: 0 }));
    }

    fn path() -> EdgeWeights {
        EdgeWeights::from_edges(3, &[(0, 1, 3.0), (1, 2, 2.0)], WEIGHT_FLOOR).unwrap()
    }

    #[test]
    fn all_matchers_on_path() {
        for m in [Matcher::Exact, Matcher::Suitor, Matcher::Preis, Matcher::Auction { eps: 1e-2 }, Matcher::BruteForce] {
            let r = m.run(&path()).unwrap();
            assert_eq!(r.partner, vec![1, 0, UNMATCHED], "{}", m.name());
        }
    }

    #[test]
    fn single_edge_and_empty_graph() {
        let one = EdgeWeights::from_edges(2, &[(0, 1, 2.0)], WEIGHT_FLOOR).unwrap();
        let none = EdgeWeights::from_edges(3, &[], WEIGHT_FLOOR).unwrap();
        for m in [Matcher::Exact, Matcher::Suitor, Matcher::Preis, Matcher::Auction { eps: 1e-2 }, Matcher::BruteForce] {
            assert_eq!(m.run(&one).unwrap().partner, vec![1, 0]);
            assert_eq!(m.run(&none).unwrap().partner, vec![UNMATCHED; 3]);
        }
    }

    #[test]
    fn equal_weight_four_cycle_is_perfect() {
        let ew = EdgeWeights::from_edges(4, &[(0, 1, 2.0), (1, 2, 2.0), (2, 3, 2.0), (3, 0, 2.0)], WEIGHT_FLOOR)
            .unwrap();
        for m in [Matcher::Exact, Matcher::Suitor, Matcher::Preis, Matcher::Auction { eps: 1e-2 }] {
            assert_eq!(m.run(&ew).unwrap().n_pairs(), 2, "{}", m.name());
        }
    }

    #[test]
    fn star_matches_heaviest_edge() {
        let ew = EdgeWeights::from_edges(4, &[(0, 1, 2.0), (0, 2, 5.0), (0, 3, 3.0)], WEIGHT_FLOOR).unwrap();
        for m in [Matcher::Exact, Matcher::Suitor, Matcher::Preis, Matcher::Auction { eps: 1e-2 }] {
            let r = m.run(&ew).unwrap();
            assert_eq!(r.pairs(), vec![(0, 2)], "{}", m.name());
        }
    }

    #[test]
    fn exact_triangle() {
        let ew = EdgeWeights::from_edges(3, &[(0, 1, 5.0), (1, 2, 3.0), (0, 2, 3.0)], WEIGHT_FLOOR).unwrap();
        assert_eq!(match_exact(&ew).unwrap().pairs(), vec![(0, 1)]);
    }

    #[test]
    fn grid_2x2_product() {
        let a = crate::problems::gen_fd_diffusion(2, &crate::problems::CoefficientField::Constant).unwrap();
        let ew = compute_edge_weights(&a, &[1.0; 4]).unwrap();
        let m = match_exact(&ew).unwrap();
        assert_eq!(m.n_pairs(), 2);
        assert!((libm::exp(m.product_log) - 1.5625).abs() < 1e-12);
    }
}
