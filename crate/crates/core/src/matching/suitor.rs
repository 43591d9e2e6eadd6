//! Sequential suitor matching.

use alloc::vec;

use super::{heavier, EdgeWeights, Matching, UNMATCHED};

/// Half-approximate matching by proposals; every vertex keeps its heaviest
/// suitor and displaced suitors propose again.
pub fn match_suitor(ew: &EdgeWeights) -> Matching {
    let n = ew.n();
    let mut suitor = vec![UNMATCHED; n];
    let mut ws = vec![0.0f64; n];
    for u in 0..n {
        let mut current = u;
        loop {
            let mut best = UNMATCHED;
            let mut best_gain = 0.0;
            for (v, g) in ew.candidates(current) {
                let beats_suitor = suitor[v] == UNMATCHED || heavier(g, current, v, ws[v], suitor[v], v);
                let beats_best = best == UNMATCHED || heavier(g, current, v, best_gain, current, best);
                if beats_suitor && beats_best {
                    best = v;
                    best_gain = g;
                }
            }
            if best == UNMATCHED {
                break;
            }
            let displaced = suitor[best];
            suitor[best] = current;
            ws[best] = best_gain;
            if displaced == UNMATCHED {
                break;
            }
            current = displaced;
        }
    }
    let mut partner = vec![UNMATCHED; n];
    for v in 0..n {
        let s = suitor[v];
        if s != UNMATCHED && suitor[s] == v {
            partner[v] = s;
        }
    }
    Matching::from_partner(ew, partner)
}
