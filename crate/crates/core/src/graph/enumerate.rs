//! Isomorphism-free enumeration of small connected graphs and trees, used
//! by the exhaustive verification suites.

use std::collections::HashSet;

use itertools::Itertools;

use super::Graph;

/// All connected graphs with `2 <= m <= max_edges` edges (and no isolated
/// vertices), one representative per isomorphism class. Deduplication is by
/// the minimum edge-set signature over all vertex permutations, which is
/// affordable because `m <= max_edges` bounds `n <= max_edges + 1`.
pub fn connected_graphs_up_to_iso(max_edges: usize) -> Vec<Graph> {
    assert!(max_edges <= 7, "permutation-based dedup is for desk scale");
    let mut out = Vec::new();
    let mut seen: HashSet<Vec<(usize, usize)>> = HashSet::new();
    for n in 2..=max_edges + 1 {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        for mask in 0u32..(1 << pairs.len()) {
            let m = mask.count_ones() as usize;
            if m < 2 || m > max_edges || m < n - 1 {
                continue;
            }
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            let g = Graph::new(n, &edges).unwrap();
            if (0..n).any(|v| g.degree(v) == 0) || !g.is_connected() {
                continue;
            }
            if seen.insert(canonical_signature(n, &edges)) {
                out.push(g);
            }
        }
    }
    out
}

/// All trees on `2..=max_n` vertices, one per isomorphism class, generated
/// from Prüfer sequences and deduplicated by a canonical rooted encoding.
pub fn trees_up_to_iso(max_n: usize) -> Vec<Graph> {
    let mut out = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for n in 2..=max_n {
        if n == 2 {
            let g = Graph::new(2, &[(0, 1)]).unwrap();
            seen.insert(tree_canonical(&g));
            out.push(g);
            continue;
        }
        let seqs = (0..n - 2).map(|_| 0..n).multi_cartesian_product();
        for seq in seqs {
            let g = prufer_decode(n, &seq);
            if seen.insert(tree_canonical(&g)) {
                out.push(g);
            }
        }
    }
    out
}

fn canonical_signature(n: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    (0..n)
        .permutations(n)
        .map(|perm| {
            let mut relabeled: Vec<(usize, usize)> = edges
                .iter()
                .map(|&(u, v)| {
                    let (a, b) = (perm[u], perm[v]);
                    (a.min(b), a.max(b))
                })
                .collect();
            relabeled.sort_unstable();
            relabeled
        })
        .min()
        .unwrap()
}

fn prufer_decode(n: usize, seq: &[usize]) -> Graph {
    let mut degree = vec![1usize; n];
    for &v in seq {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut deg = degree.clone();
    for &v in seq {
        let leaf = (0..n).find(|&u| deg[u] == 1).unwrap();
        edges.push((leaf, v));
        deg[leaf] = 0;
        deg[v] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&u| deg[u] == 1).collect();
    edges.push((rest[0], rest[1]));
    Graph::new(n, &edges).unwrap()
}

/// Canonical string of an unrooted tree: the rooted encoding minimized over
/// the (one or two) centroids.
fn tree_canonical(g: &Graph) -> String {
    centroids(g)
        .into_iter()
        .map(|c| encode_rooted(g, c, usize::MAX))
        .min()
        .unwrap()
}

fn encode_rooted(g: &Graph, v: usize, parent: usize) -> String {
    let mut parts: Vec<String> = g
        .neighbors(v)
        .iter()
        .filter(|&&w| w != parent)
        .map(|&w| encode_rooted(g, w, v))
        .collect();
    parts.sort();
    format!("({})", parts.concat())
}

fn centroids(g: &Graph) -> Vec<usize> {
    let n = g.n();
    if n == 1 {
        return vec![0];
    }
    let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut removed = vec![false; n];
    let mut layer: Vec<usize> = (0..n).filter(|&v| degree[v] <= 1).collect();
    let mut remaining = n;
    while remaining > 2 {
        let mut next = Vec::new();
        for &v in &layer {
            removed[v] = true;
            remaining -= 1;
            for &w in g.neighbors(v) {
                if !removed[w] {
                    degree[w] -= 1;
                    if degree[w] == 1 {
                        next.push(w);
                    }
                }
            }
        }
        layer = next;
    }
    (0..n).filter(|&v| !removed[v]).collect()
}
