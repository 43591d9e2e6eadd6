//! Locally dominant edge matching.

use alloc::collections::VecDeque;
use alloc::vec;

use super::{heavier, EdgeWeights, Matching, UNMATCHED};

fn best_free(ew: &EdgeWeights, u: usize, partner: &[usize]) -> usize {
    let mut best = UNMATCHED;
    let mut best_gain = 0.0;
    for (v, g) in ew.candidates(u) {
        if partner[v] == UNMATCHED && (best == UNMATCHED || heavier(g, u, v, best_gain, u, best)) {
            best = v;
            best_gain = g;
        }
    }
    best
}

/// Matches edges that are heaviest for both endpoints until none remain.
pub fn match_preis(ew: &EdgeWeights) -> Matching {
    let n = ew.n();
    let mut partner = vec![UNMATCHED; n];
    let mut cand: alloc::vec::Vec<usize> = (0..n).map(|u| best_free(ew, u, &partner)).collect();
    let mut queue = VecDeque::new();
    for u in 0..n {
        let c = cand[u];
        if c != UNMATCHED && cand[c] == u && partner[u] == UNMATCHED {
            partner[u] = c;
            partner[c] = u;
            queue.push_back(u);
            queue.push_back(c);
        }
    }
    while let Some(x) = queue.pop_front() {
        for (y, _) in ew.candidates(x) {
            if partner[y] != UNMATCHED || cand[y] != x {
                continue;
            }
            cand[y] = best_free(ew, y, &partner);
            let c = cand[y];
            if c != UNMATCHED && cand[c] == y {
                partner[y] = c;
                partner[c] = y;
                queue.push_back(y);
                queue.push_back(c);
            }
        }
    }
    Matching::from_partner(ew, partner)
}
