//! Profile-reducing symmetric orderings.

use std::collections::VecDeque;

use crate::grid::SparseSymMatrix;

/// `perm[new] = old`.
pub type Permutation = Vec<usize>;

pub fn identity(n: usize) -> Permutation {
    (0..n).collect()
}

pub fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

/// Envelope size `Σ_i (i - first_i)` of the lower triangle under `perm`.
pub fn profile(a: &SparseSymMatrix, perm: &[usize]) -> usize {
    let inv = inverse(perm);
    (0..a.dim())
        .map(|new| {
            let old = perm[new];
            let first = a.row_cols(old).iter().map(|&c| inv[c]).min().unwrap_or(new).min(new);
            new - first
        })
        .sum()
}

fn bfs_levels(a: &SparseSymMatrix, start: usize, seen: &mut [bool], order: &mut Vec<usize>) -> (usize, usize) {
    // returns (depth, last node of the deepest level)
    let mut queue = VecDeque::new();
    queue.push_back((start, 0usize));
    seen[start] = true;
    let mut depth = 0;
    let mut last = start;
    let mut nbrs: Vec<usize> = Vec::new();
    while let Some((v, d)) = queue.pop_front() {
        order.push(v);
        if d > depth || (d == depth && a.row_cols(v).len() < a.row_cols(last).len()) {
            depth = d;
            last = v;
        }
        nbrs.clear();
        nbrs.extend(a.row_cols(v).iter().copied().filter(|&u| !seen[u]));
        nbrs.sort_by_key(|&u| (a.row_cols(u).len(), u));
        for &u in &nbrs {
            seen[u] = true;
            queue.push_back((u, d + 1));
        }
    }
    (depth, last)
}

/// Reverse Cuthill-McKee with a pseudo-peripheral start per component.
pub fn reverse_cuthill_mckee(a: &SparseSymMatrix) -> Permutation {
    let n = a.dim();
    let mut done = vec![false; n];
    let mut perm = Vec::with_capacity(n);
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.sort_by_key(|&v| (a.row_cols(v).len(), v));
    for &seed in &nodes {
        if done[seed] {
            continue;
        }
        // pseudo-peripheral node: repeat BFS from the far end until depth stops growing
        let mut start = seed;
        let mut best_depth = 0;
        for _ in 0..8 {
            let mut seen = done.clone();
            let mut scratch = Vec::new();
            let (depth, last) = bfs_levels(a, start, &mut seen, &mut scratch);
            if depth <= best_depth && start != seed {
                break;
            }
            best_depth = depth;
            if last == start {
                break;
            }
            start = last;
        }
        let mut component = Vec::new();
        bfs_levels(a, start, &mut done, &mut component);
        perm.extend(component);
    }
    perm.reverse();
    perm
}

/// Identity or RCM, whichever has the smaller envelope.
pub fn best_profile_ordering(a: &SparseSymMatrix) -> Permutation {
    let id = identity(a.dim());
    let rcm = reverse_cuthill_mckee(a);
    if profile(a, &rcm) < profile(a, &id) {
        rcm
    } else {
        id
    }
}
