//! Maximum bipartite matching by augmenting paths.
//!
//! Left vertices are processed in index order and each adjacency list is
//! tried in the order given, so the result is deterministic. Sizes here are
//! at most a few hundred per side, where simple augmenting paths are enough.

/// Returns `mate[l] = Some(r)` for a maximum matching.
pub fn max_matching(adj: &[Vec<usize>], right: usize) -> Vec<Option<usize>> {
    let mut mate_left = vec![None; adj.len()];
    let mut mate_right: Vec<Option<usize>> = vec![None; right];
    for l in 0..adj.len() {
        let mut seen = vec![false; right];
        augment(l, adj, &mut seen, &mut mate_left, &mut mate_right);
    }
    mate_left
}

fn augment(
    l: usize,
    adj: &[Vec<usize>],
    seen: &mut [bool],
    mate_left: &mut [Option<usize>],
    mate_right: &mut [Option<usize>],
) -> bool {
    for &r in &adj[l] {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        let free = match mate_right[r] {
            None => true,
            Some(other) => augment(other, adj, seen, mate_left, mate_right),
        };
        if free {
            mate_left[l] = Some(r);
            mate_right[r] = Some(l);
            return true;
        }
    }
    false
}
