//! Maximum matching in general graphs via augmenting-path search with
//! blossom contraction (Edmonds). Unweighted, O(V^3), deterministic for a
//! fixed graph: vertices are tried in ascending order and neighbor lists
//! are sorted.

use serde::{Deserialize, Serialize};

use super::Graph;

/// A matching: a set of pairwise vertex-disjoint edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    edges: Vec<(usize, usize)>,
    partner: Vec<Option<usize>>,
}

impl Matching {
    pub fn from_mate(mate: &[Option<usize>]) -> Self {
        let mut edges = Vec::new();
        for (v, &m) in mate.iter().enumerate() {
            if let Some(w) = m {
                if v < w {
                    edges.push((v, w));
                }
            }
        }
        Matching {
            edges,
            partner: mate.to_vec(),
        }
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn partner(&self, v: usize) -> Option<usize> {
        self.partner.get(v).copied().flatten()
    }

    pub fn size(&self) -> usize {
        self.edges.len()
    }

    /// True when the matching covers every vertex of `g`.
    pub fn is_perfect_on(&self, g: &Graph) -> bool {
        g.n().is_multiple_of(2) && self.size() * 2 == g.n()
    }

    /// Checks disjointness and that every matched pair is an edge of `g`.
    pub fn is_valid_on(&self, g: &Graph) -> bool {
        let mut used = vec![false; g.n()];
        for &(u, v) in &self.edges {
            if u >= g.n() || v >= g.n() || !g.has_edge(u, v) || used[u] || used[v] {
                return false;
            }
            used[u] = true;
            used[v] = true;
        }
        true
    }
}

/// Computes a maximum matching of `g`, returned as a mate table.
pub fn maximum_matching(g: &Graph) -> Matching {
    let n = g.n();
    let mut mate: Vec<Option<usize>> = vec![None; n];

    // Greedy seed pass; the augmenting search below makes it maximum.
    for u in 0..n {
        if mate[u].is_none() {
            for &v in g.neighbors(u) {
                if mate[v].is_none() {
                    mate[u] = Some(v);
                    mate[v] = Some(u);
                    break;
                }
            }
        }
    }

    let mut parent = vec![usize::MAX; n];
    let mut base = vec![0usize; n];
    let mut queue = Vec::new();
    let mut in_queue = vec![false; n];
    let mut in_blossom = vec![false; n];

    for root in 0..n {
        if mate[root].is_some() {
            continue;
        }
        // BFS for an augmenting path from `root`, contracting blossoms.
        for v in 0..n {
            parent[v] = usize::MAX;
            base[v] = v;
            in_queue[v] = false;
        }
        queue.clear();
        queue.push(root);
        in_queue[root] = true;
        let mut finish = None;

        let mut head = 0;
        'bfs: while head < queue.len() {
            let v = queue[head];
            head += 1;
            for &w in g.neighbors(v) {
                if base[v] == base[w] || mate[v] == Some(w) {
                    continue;
                }
                if w == root || mate[w].is_some_and(|mw| parent[mw] != usize::MAX) {
                    // Odd cycle: contract the blossom around the common base.
                    let b = lowest_common_base(&base, &parent, &mate, v, w, root);
                    for f in in_blossom.iter_mut() {
                        *f = false;
                    }
                    mark_path(&mut in_blossom, &base, &mate, &mut parent, v, b, w);
                    mark_path(&mut in_blossom, &base, &mate, &mut parent, w, b, v);
                    for u in 0..n {
                        if in_blossom[base[u]] {
                            base[u] = b;
                            if !in_queue[u] {
                                in_queue[u] = true;
                                queue.push(u);
                            }
                        }
                    }
                } else if parent[w] == usize::MAX {
                    parent[w] = v;
                    match mate[w] {
                        None => {
                            // Augmenting path found; flip it.
                            finish = Some(w);
                            break 'bfs;
                        }
                        Some(mw) => {
                            if !in_queue[mw] {
                                in_queue[mw] = true;
                                queue.push(mw);
                            }
                        }
                    }
                }
            }
        }

        if let Some(mut w) = finish {
            while w != usize::MAX {
                let pv = parent[w];
                let ppv = mate[pv];
                mate[w] = Some(pv);
                mate[pv] = Some(w);
                w = match ppv {
                    Some(x) => x,
                    None => usize::MAX,
                };
            }
        }
    }

    Matching::from_mate(&mate)
}

/// Returns a perfect matching of `g` when one exists.
pub fn perfect_matching(g: &Graph) -> Option<Matching> {
    if !g.n().is_multiple_of(2) {
        return None;
    }
    let m = maximum_matching(g);
    if m.is_perfect_on(g) {
        Some(m)
    } else {
        None
    }
}

fn lowest_common_base(
    base: &[usize],
    parent: &[usize],
    mate: &[Option<usize>],
    mut v: usize,
    mut w: usize,
    root: usize,
) -> usize {
    let n = base.len();
    let mut seen = vec![false; n];
    loop {
        v = base[v];
        seen[v] = true;
        if v == root {
            break;
        }
        v = parent[mate[v].expect("non-root tree vertex is matched")];
    }
    loop {
        w = base[w];
        if seen[w] {
            return w;
        }
        w = parent[mate[w].expect("non-root tree vertex is matched")];
    }
}

fn mark_path(
    in_blossom: &mut [bool],
    base: &[usize],
    mate: &[Option<usize>],
    parent: &mut [usize],
    mut v: usize,
    b: usize,
    mut child: usize,
) {
    while base[v] != b {
        let mv = mate[v].expect("blossom path vertex is matched");
        in_blossom[base[v]] = true;
        in_blossom[base[mv]] = true;
        parent[v] = child;
        child = mv;
        v = parent[mv];
    }
}
