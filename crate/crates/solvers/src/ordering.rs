//! Fill-reducing ordering for symmetric sparsity patterns.

use std::collections::BTreeSet;

/// Minimum-degree ordering of an undirected graph given by adjacency lists
/// (self loops and duplicates are ignored). Returns `perm` where `perm[k]` is
/// the node eliminated at step `k`. Ties are broken by the smaller node index,
/// so the result is deterministic.
///
/// This is the plain quotient-free variant: the elimination graph is kept
/// explicitly. That is adequate for the staircase patterns produced by
/// optimal-control transcriptions, where cliques stay small.
pub fn minimum_degree(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut adj: Vec<Vec<usize>> = adjacency
        .iter()
        .enumerate()
        .map(|(i, nb)| {
            let mut v: Vec<usize> = nb.iter().copied().filter(|&j| j != i).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    // symmetrize
    let mut extra: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in &adj[i] {
            if adj[j].binary_search(&i).is_err() {
                extra[j].push(i);
            }
        }
    }
    for (i, e) in extra.into_iter().enumerate() {
        if !e.is_empty() {
            adj[i].extend(e);
            adj[i].sort_unstable();
            adj[i].dedup();
        }
    }

    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (adj[i].len(), i)).collect();
    let mut perm = Vec::with_capacity(n);
    let mut merged = Vec::new();
    while let Some((_, p)) = queue.pop_first() {
        perm.push(p);
        let nbrs = std::mem::take(&mut adj[p]);
        for &u in &nbrs {
            queue.remove(&(adj[u].len(), u));
            // adj[u] := (adj[u] ∪ nbrs) \ {u, p}
            merged.clear();
            let (a, b) = (&adj[u], &nbrs);
            let (mut ia, mut ib) = (0, 0);
            while ia < a.len() || ib < b.len() {
                let next = match (a.get(ia), b.get(ib)) {
                    (Some(&x), Some(&y)) if x == y => {
                        ia += 1;
                        ib += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        ia += 1;
                        x
                    }
                    (Some(_), Some(&y)) => {
                        ib += 1;
                        y
                    }
                    (Some(&x), None) => {
                        ia += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        ib += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                if next != u && next != p {
                    merged.push(next);
                }
            }
            std::mem::swap(&mut adj[u], &mut merged);
            queue.insert((adj[u].len(), u));
        }
    }
    perm
}

/// Adjacency lists of the symmetric pattern `A + A^T` of a square CSC matrix.
pub fn symmetric_adjacency(n: usize, colptr: &[usize], rowind: &[usize]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for j in 0..n {
        for &i in &rowind[colptr[j]..colptr[j + 1]] {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}
