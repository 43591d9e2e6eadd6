//! Auction matching.
//!
//! Every vertex is a bidder for an object among itself (value 0) and its
//! candidate neighbours (value ln â). The ε-optimal assignment found by
//! forward auction with ε-scaling is a permutation whose 2-cycles are
//! matched edges; longer cycles are resolved by an optimal matching on the
//! cycle, and a final greedy pass makes the result maximal.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::{heavier, EdgeWeights, Matching, UNMATCHED};
use crate::error::{Error, Result};

/// Bid budget per scaling phase, in multiples of the vertex count.
const BIDS_PER_VERTEX: usize = 50;

/// Auction matching with final accuracy `eps · max gain / n` on the assignment value.
pub fn match_auction(ew: &EdgeWeights, eps: f64) -> Result<Matching> {
    if !(eps > 0.0) {
        return Err(Error::Invalid("auction epsilon must be positive".into()));
    }
    let n = ew.n();
    let arcs: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let mut a: Vec<(usize, f64)> = ew.candidates(i).collect();
            a.push((i, 0.0));
            a.sort_by_key(|&(j, _)| j);
            a
        })
        .collect();
    let wmax = (0..n).flat_map(|i| ew.candidates(i).map(|(_, g)| g)).fold(0.0f64, f64::max);
    if wmax == 0.0 {
        return Ok(Matching::empty(n));
    }
    let eps_final = eps * wmax / n as f64;
    let mut eps_phase = (wmax / 4.0).max(eps_final);
    let mut price = vec![0.0f64; n];
    let mut owner = vec![UNMATCHED; n];
    let mut assigned = vec![UNMATCHED; n];
    loop {
        owner.iter_mut().for_each(|o| *o = UNMATCHED);
        assigned.iter_mut().for_each(|o| *o = UNMATCHED);
        let mut queue: VecDeque<usize> = (0..n).collect();
        let mut bids = 0usize;
        let budget = BIDS_PER_VERTEX * n.max(1);
        while let Some(i) = queue.pop_front() {
            let mut j1 = UNMATCHED;
            let mut v1 = f64::NEG_INFINITY;
            let mut v2 = f64::NEG_INFINITY;
            for &(j, a) in &arcs[i] {
                let v = a - price[j];
                if v > v1 {
                    v2 = v1;
                    v1 = v;
                    j1 = j;
                } else if v > v2 {
                    v2 = v;
                }
            }
            let raise = if v2 == f64::NEG_INFINITY { eps_phase } else { v1 - v2 + eps_phase };
            price[j1] += raise;
            let prev = owner[j1];
            owner[j1] = i;
            assigned[i] = j1;
            if prev != UNMATCHED {
                assigned[prev] = UNMATCHED;
                queue.push_back(prev);
            }
            bids += 1;
            if bids > budget {
                return Err(Error::NoConvergence { what: "auction", iterations: bids });
            }
        }
        if eps_phase <= eps_final {
            break;
        }
        eps_phase = (eps_phase / 4.0).max(eps_final);
    }
    let mut partner = extract_cycles(ew, &assigned);
    greedy_complete(ew, &mut partner);
    Ok(Matching::from_partner(ew, partner))
}

/// Turns the assignment permutation into a matching.
fn extract_cycles(ew: &EdgeWeights, sigma: &[usize]) -> Vec<usize> {
    let n = sigma.len();
    let mut partner = vec![UNMATCHED; n];
    let mut seen = vec![false; n];
    let mut cycle = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        cycle.clear();
        let mut v = s;
        while !seen[v] {
            seen[v] = true;
            cycle.push(v);
            v = sigma[v];
        }
        match cycle.len() {
            1 => {}
            2 => {
                partner[cycle[0]] = cycle[1];
                partner[cycle[1]] = cycle[0];
            }
            k => {
                let g: Vec<f64> = (0..k).map(|t| ew.gain(cycle[t], cycle[(t + 1) % k])).collect();
                for t in best_cycle_matching(&g) {
                    let (a, b) = (cycle[t], cycle[(t + 1) % k]);
                    partner[a] = b;
                    partner[b] = a;
                }
            }
        }
    }
    partner
}

/// Edge positions of a maximum weight matching on a cycle with edge gains `g`,
/// edge `t` joining cycle positions `t` and `t + 1`.
fn best_cycle_matching(g: &[f64]) -> Vec<usize> {
    let k = g.len();
    let (w1, s1) = best_path_matching(&g[..k - 1], 0);
    let mut best = (w1, s1);
    if k >= 4 {
        let (w2, mut s2) = best_path_matching(&g[1..k - 2], 1);
        if w2 + g[k - 1] > best.0 {
            s2.push(k - 1);
            best = (w2 + g[k - 1], s2);
        }
    } else if g[k - 1] > best.0 {
        best = (g[k - 1], vec![k - 1]);
    }
    best.1
}

/// Maximum weight matching on a path of edges, returned as offset positions.
fn best_path_matching(g: &[f64], offset: usize) -> (f64, Vec<usize>) {
    let m = g.len();
    let mut f = vec![0.0f64; m + 1];
    for t in 0..m {
        let take = g[t] + if t >= 1 { f[t - 1] } else { 0.0 };
        f[t + 1] = f[t].max(take);
    }
    let mut chosen = Vec::new();
    let mut t = m;
    while t > 0 {
        let take = g[t - 1] + if t >= 2 { f[t - 2] } else { 0.0 };
        if take > f[t - 1] && take >= f[t] {
            chosen.push(t - 1 + offset);
            t = t.saturating_sub(2);
        } else {
            t -= 1;
        }
    }
    chosen.reverse();
    (f[m], chosen)
}

/// Adds remaining candidate edges between free vertices, heaviest first.
fn greedy_complete(ew: &EdgeWeights, partner: &mut [usize]) {
    let mut edges = ew.candidate_edges();
    edges.sort_by(|a, b| {
        if heavier(a.2, a.0, a.1, b.2, b.0, b.1) {
            core::cmp::Ordering::Less
        } else if heavier(b.2, b.0, b.1, a.2, a.0, a.1) {
            core::cmp::Ordering::Greater
        } else {
            core::cmp::Ordering::Equal
        }
    });
    for (i, j, _) in edges {
        if partner[i] == UNMATCHED && partner[j] == UNMATCHED {
            partner[i] = j;
            partner[j] = i;
        }
    }
}
