//! Exhaustive optimum over all matchings of small graphs.

use alloc::vec;
use alloc::vec::Vec;

use super::{EdgeWeights, Matching, BRUTEFORCE_BUDGET, UNMATCHED};
use crate::error::{Error, Result};

/// Optimal matching by dynamic programming over vertex subsets.
pub fn match_bruteforce(ew: &EdgeWeights) -> Result<Matching> {
    let n = ew.n();
    if n > BRUTEFORCE_BUDGET {
        return Err(Error::BudgetExceeded { what: "brute-force matching", size: n, limit: BRUTEFORCE_BUDGET });
    }
    let full = (1usize << n) - 1;
    let adj: Vec<Vec<(usize, f64)>> = (0..n).map(|i| ew.candidates(i).collect()).collect();
    // best[S]: optimum on vertex set S; choice[S]: partner of the lowest vertex of S.
    let mut best = vec![0.0f64; full + 1];
    let mut choice = vec![UNMATCHED; full + 1];
    for s in 1..=full {
        let v = s.trailing_zeros() as usize;
        let rest = s & !(1 << v);
        let mut b = best[rest];
        let mut c = UNMATCHED;
        for &(u, g) in &adj[v] {
            if rest & (1 << u) != 0 {
                let val = g + best[rest & !(1 << u)];
                if val > b {
                    b = val;
                    c = u;
                }
            }
        }
        best[s] = b;
        choice[s] = c;
    }
    let mut partner = vec![UNMATCHED; n];
    let mut s = full;
    while s != 0 {
        let v = s.trailing_zeros() as usize;
        let c = choice[s];
        s &= !(1 << v);
        if c != UNMATCHED {
            partner[v] = c;
            partner[c] = v;
            s &= !(1 << c);
        }
    }
    Ok(Matching::from_partner(ew, partner))
}
