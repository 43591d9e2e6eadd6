//! Aggregates from matchings, piecewise constant prolongators and
//! multi-sweep hierarchies.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matching::{compute_edge_weights, Matcher, Matching, UNMATCHED};
use crate::sparse::{galerkin_product, DiagonalMatrix, SparseMatrix};

/// Pair weights below this magnitude are treated as zero.
pub const ZERO_PAIR_WEIGHT: f64 = 1e-300;

/// Partition of `0..n` into disjoint aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSet {
    pub agg_of: Vec<usize>,
    pub aggregates: Vec<Vec<usize>>,
    pub n_pairs: usize,
    pub n_singletons: usize,
}

impl AggregateSet {
    /// Builds the set from explicit aggregates; each list is sorted.
    pub fn from_aggregates(n: usize, mut aggregates: Vec<Vec<usize>>) -> Result<Self> {
        let mut agg_of = vec![UNMATCHED; n];
        for (id, a) in aggregates.iter_mut().enumerate() {
            if a.is_empty() {
                return Err(Error::Invalid("empty aggregate".into()));
            }
            a.sort_unstable();
            for &i in a.iter() {
                if i >= n || agg_of[i] != UNMATCHED {
                    return Err(Error::Invalid("aggregates do not partition the index set".into()));
                }
                agg_of[i] = id;
            }
        }
        if agg_of.contains(&UNMATCHED) {
            return Err(Error::Invalid("aggregates do not cover the index set".into()));
        }
        let n_singletons = aggregates.iter().filter(|a| a.len() == 1).count();
        let n_pairs = aggregates.iter().filter(|a| a.len() == 2).count();
        Ok(AggregateSet { agg_of, aggregates, n_pairs, n_singletons })
    }

    pub fn n(&self) -> usize {
        self.agg_of.len()
    }

    pub fn len(&self) -> usize {
        self.aggregates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aggregates.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.aggregates.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Checks the partition property.
    pub fn is_partition(&self) -> bool {
        let mut seen = vec![false; self.n()];
        for (id, a) in self.aggregates.iter().enumerate() {
            for &i in a {
                if i >= seen.len() || seen[i] || self.agg_of[i] != id {
                    return false;
                }
                seen[i] = true;
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Preimages of the aggregates of `coarse`, a partition of this set's aggregate ids.
    pub fn compose(&self, coarse: &AggregateSet) -> Result<AggregateSet> {
        if coarse.n() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: coarse.n() });
        }
        let aggregates = coarse
            .aggregates
            .iter()
            .map(|c| c.iter().flat_map(|&a| self.aggregates[a].iter().copied()).collect())
            .collect();
        AggregateSet::from_aggregates(self.n(), aggregates)
    }
}

/// One aggregate per matched edge, then one per unmatched vertex.
pub fn build_aggregates(m: &Matching) -> AggregateSet {
    let n = m.partner.len();
    let mut aggregates: Vec<Vec<usize>> = m.pairs().into_iter().map(|(i, j)| vec![i, j]).collect();
    let n_pairs = aggregates.len();
    aggregates.extend((0..n).filter(|&i| m.partner[i] == UNMATCHED).map(|i| vec![i]));
    let n_singletons = aggregates.len() - n_pairs;
    let mut agg_of = vec![0; n];
    for (id, a) in aggregates.iter().enumerate() {
        for &i in a {
            agg_of[i] = id;
        }
    }
    AggregateSet { agg_of, aggregates, n_pairs, n_singletons }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Pair,
    Singleton,
}

/// Piecewise constant prolongator of one matching sweep.
#[derive(Debug, Clone)]
pub struct Prolongator {
    pub p: SparseMatrix,
    /// h with P h = w.
    pub coarse_weight: Vec<f64>,
    pub column_kind: Vec<ColumnKind>,
    /// Aggregates actually used, after demotion of zero-weight pairs.
    pub aggregates: AggregateSet,
}

/// Pair columns spanning the D-orthogonal complement of the coarse space.
#[derive(Debug, Clone)]
pub struct ComplementProlongator {
    pub p_f: SparseMatrix,
}

/// Builds P and P_f from pairwise aggregates and the weight vector.
pub fn build_prolongator(
    agg: &AggregateSet,
    w: &[f64],
    d: &DiagonalMatrix,
) -> Result<(Prolongator, ComplementProlongator)> {
    let n = agg.n();
    if w.len() != n || d.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: w.len().min(d.len()) });
    }
    let mut w = w.to_vec();
    let mut pairs = Vec::new();
    let mut singles = Vec::new();
    for a in &agg.aggregates {
        match a.len() {
            1 => singles.push(a[0]),
            2 => {
                if w[a[0]].abs() < ZERO_PAIR_WEIGHT && w[a[1]].abs() < ZERO_PAIR_WEIGHT {
                    w[a[0]] = 1.0;
                    w[a[1]] = 1.0;
                    singles.push(a[0]);
                    singles.push(a[1]);
                } else {
                    pairs.push((a[0], a[1]));
                }
            }
            k => return Err(Error::AggregateTooLarge { size: k, cap: 2 }),
        }
    }
    singles.sort_unstable();
    let nc = pairs.len() + singles.len();
    let mut trip = Vec::with_capacity(n);
    let mut trip_f = Vec::with_capacity(2 * pairs.len());
    let mut coarse_weight = Vec::with_capacity(nc);
    let mut column_kind = Vec::with_capacity(nc);
    let mut aggregates = Vec::with_capacity(nc);
    let dd = d.entries();
    for (c, &(i, j)) in pairs.iter().enumerate() {
        let (wi, wj) = (w[i], w[j]);
        let nrm = libm::hypot(wi, wj);
        trip.push((i, c, wi / nrm));
        trip.push((j, c, wj / nrm));
        let (fi, fj) = (-wj / dd[i], wi / dd[j]);
        let nf = libm::hypot(fi, fj);
        trip_f.push((i, c, fi / nf));
        trip_f.push((j, c, fj / nf));
        coarse_weight.push(nrm);
        column_kind.push(ColumnKind::Pair);
        aggregates.push(vec![i, j]);
    }
    for (s, &k) in singles.iter().enumerate() {
        let c = pairs.len() + s;
        trip.push((k, c, if w[k] < 0.0 { -1.0 } else { 1.0 }));
        coarse_weight.push(w[k].abs());
        column_kind.push(ColumnKind::Singleton);
        aggregates.push(vec![k]);
    }
    let p = SparseMatrix::from_triplets(n, nc, &trip)?;
    let p_f = SparseMatrix::from_triplets(n, pairs.len(), &trip_f)?;
    let aggregates = AggregateSet::from_aggregates(n, aggregates)?;
    Ok((Prolongator { p, coarse_weight, column_kind, aggregates }, ComplementProlongator { p_f }))
}

/// One matching sweep on the current graph.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub matching: Matching,
    pub prolongator: Prolongator,
    pub complement: ComplementProlongator,
    /// Galerkin operator PᵀAP of this sweep.
    pub coarse_matrix: SparseMatrix,
}

/// Result of ℓ matching sweeps.
#[derive(Debug, Clone)]
pub struct Coarsening {
    pub sweeps: Vec<Sweep>,
    /// P₁ P₂ ⋯ P_ℓ.
    pub p_total: SparseMatrix,
    /// Preimages of the final coarse indices.
    pub aggregates: AggregateSet,
    pub coarse_weight: Vec<f64>,
}

impl Coarsening {
    pub fn coarse_matrix(&self) -> &SparseMatrix {
        &self.sweeps.last().expect("at least one sweep").coarse_matrix
    }

    /// Complement of the first sweep.
    pub fn complement(&self) -> &ComplementProlongator {
        &self.sweeps[0].complement
    }
}

/// Repeats weights → matching → aggregates → prolongator → Galerkin product `sweeps` times.
pub fn coarsen_sweeps(a: &SparseMatrix, w: &[f64], matcher: Matcher, sweeps: usize) -> Result<Coarsening> {
    if sweeps == 0 {
        return Err(Error::Invalid("at least one matching sweep is required".into()));
    }
    if w.len() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: w.len() });
    }
    let mut out = Vec::with_capacity(sweeps);
    let mut cur_a = a.clone();
    let mut cur_w = w.to_vec();
    let mut p_total: Option<SparseMatrix> = None;
    let mut composite: Option<AggregateSet> = None;
    for _ in 0..sweeps {
        if cur_a.n() == 0 {
            return Err(Error::EmptyCoarse);
        }
        let ew = compute_edge_weights(&cur_a, &cur_w)?;
        let matching = matcher.run(&ew)?;
        let agg = build_aggregates(&matching);
        let d = DiagonalMatrix::of(&cur_a)?;
        let (prolongator, complement) = build_prolongator(&agg, &cur_w, &d)?;
        if prolongator.p.cols() == 0 {
            return Err(Error::EmptyCoarse);
        }
        let coarse_matrix = galerkin_product(&prolongator.p, &cur_a)?;
        p_total = Some(match p_total {
            None => prolongator.p.clone(),
            Some(pt) => pt.matmul(&prolongator.p)?,
        });
        composite = Some(match composite {
            None => prolongator.aggregates.clone(),
            Some(c) => c.compose(&prolongator.aggregates)?,
        });
        cur_w = prolongator.coarse_weight.clone();
        cur_a = coarse_matrix.clone();
        out.push(Sweep { matching, prolongator, complement, coarse_matrix });
    }
    Ok(Coarsening {
        sweeps: out,
        p_total: p_total.expect("at least one sweep"),
        aggregates: composite.expect("at least one sweep"),
        coarse_weight: cur_w,
    })
}

/// Level of a multilevel hierarchy.
#[derive(Debug, Clone)]
pub struct Level {
    pub a: SparseMatrix,
    /// Prolongator to this level from the next coarser one; `None` on the coarsest.
    pub p: Option<SparseMatrix>,
    /// ℓ1-Jacobi diagonal of `a`.
    pub m: DiagonalMatrix,
}

/// Multilevel hierarchy A_{k+1} = P_kᵀ A_k P_k.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub levels: Vec<Level>,
    /// Composite aggregates of the first coarsening.
    pub first_aggregates: AggregateSet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyOptions {
    pub matcher: Matcher,
    /// Matching sweeps per level.
    pub sweeps: usize,
    /// Coarsening stops once a level has at most this many unknowns.
    pub coarsest: usize,
    pub max_levels: usize,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        HierarchyOptions { matcher: Matcher::Suitor, sweeps: 2, coarsest: 40, max_levels: 30 }
    }
}

impl Hierarchy {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.a.n()).collect()
    }

    /// Two-level hierarchy with the given prolongator.
    pub fn two_level(a: &SparseMatrix, p: &SparseMatrix, aggregates: AggregateSet) -> Result<Self> {
        let ac = galerkin_product(p, a)?;
        let levels = vec![
            Level { a: a.clone(), p: Some(p.clone()), m: crate::sparse::l1_jacobi_diagonal(a)? },
            Level { m: crate::sparse::l1_jacobi_diagonal(&ac)?, a: ac, p: None },
        ];
        Ok(Hierarchy { levels, first_aggregates: aggregates })
    }
}

/// Coarsens repeatedly with compatible weighted matching until the coarsest size is reached.
pub fn build_hierarchy(a: &SparseMatrix, w: &[f64], opts: &HierarchyOptions) -> Result<Hierarchy> {
    let mut levels = Vec::new();
    let mut cur_a = a.clone();
    let mut cur_w = w.to_vec();
    let mut first = None;
    while cur_a.n() > opts.coarsest && levels.len() + 1 < opts.max_levels {
        let c = coarsen_sweeps(&cur_a, &cur_w, opts.matcher, opts.sweeps)?;
        if c.p_total.cols() >= cur_a.n() {
            break;
        }
        if first.is_none() {
            first = Some(c.aggregates.clone());
        }
        let m = crate::sparse::l1_jacobi_diagonal(&cur_a)?;
        let next = c.coarse_matrix().clone();
        levels.push(Level { a: cur_a, p: Some(c.p_total), m });
        cur_a = next;
        cur_w = c.coarse_weight;
    }
    let m = crate::sparse::l1_jacobi_diagonal(&cur_a)?;
    let n = cur_a.n();
    levels.push(Level { a: cur_a, p: None, m });
    let first_aggregates = match first {
        Some(f) => f,
        None => AggregateSet::from_aggregates(n, (0..n).map(|i| vec![i]).collect())?,
    };
    Ok(Hierarchy { levels, first_aggregates })
}
