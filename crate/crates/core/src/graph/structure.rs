//! Structural subroutines: rooted spanning trees, the star peel used by the
//! tree strategy, the 7-path + matching partition for random graphs, small
//! obstruction detection, and the three-way classification that drives the
//! 1-fair schedule construction.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::matching::perfect_matching;
use super::{Graph, GraphError};

/// A spanning tree of a connected graph, rooted and with a parent map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootedTree {
    tree: Graph,
    root: usize,
    parent: Vec<Option<usize>>,
}

impl RootedTree {
    pub fn graph(&self) -> &Graph {
        &self.tree
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        self.tree
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&w| self.parent[w] == Some(v))
            .collect()
    }
}

/// Depth-first spanning tree rooted at `root`, visiting neighbors in
/// ascending index order.
pub fn spanning_tree(g: &Graph, root: usize) -> Result<RootedTree, GraphError> {
    if root >= g.n() {
        return Err(GraphError::VertexOutOfRange(root, g.n()));
    }
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    let mut parent = vec![None; g.n()];
    let mut visited = vec![false; g.n()];
    let mut edges = Vec::with_capacity(g.n().saturating_sub(1));
    // Explicit stack; each frame remembers how far we got in the
    // neighbor list so children are expanded in ascending order.
    let mut stack = vec![(root, 0usize)];
    visited[root] = true;
    while let Some(&mut (v, ref mut i)) = stack.last_mut() {
        let neighbors = g.neighbors(v);
        if *i >= neighbors.len() {
            stack.pop();
            continue;
        }
        let w = neighbors[*i];
        *i += 1;
        if !visited[w] {
            visited[w] = true;
            parent[w] = Some(v);
            edges.push((v, w));
            stack.push((w, 0));
        }
    }
    let tree = Graph::new(g.n(), &edges).expect("tree edges are valid");
    Ok(RootedTree { tree, root, parent })
}

/// One star of a decomposition: a center and its (nonempty) leaf set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Star {
    pub center: usize,
    pub leaves: Vec<usize>,
}

/// A partition of the tree's vertices into node-disjoint stars whose
/// center-leaf pairs are all tree edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarDecomposition {
    pub stars: Vec<Star>,
}

impl StarDecomposition {
    /// Checks the partition and edge-validity invariants against `g`.
    pub fn validate(&self, g: &Graph) -> bool {
        let mut seen = vec![false; g.n()];
        let mut count = 0;
        for star in &self.stars {
            if star.leaves.is_empty() {
                return false;
            }
            for &v in std::iter::once(&star.center).chain(star.leaves.iter()) {
                if v >= g.n() || seen[v] {
                    return false;
                }
                seen[v] = true;
                count += 1;
            }
            if !star.leaves.iter().all(|&l| g.has_edge(star.center, l)) {
                return false;
            }
        }
        count == g.n()
    }
}

/// Peels a rooted tree into node-disjoint stars: the root and its children
/// form a star, the star is removed, and the peel recurses on the remaining
/// subtrees (rooted at the grandchildren).
///
/// The peel can strand a childless grandchild `v`. Its parent `p` is a leaf
/// of the star above, so `v` is not adjacent to any center; to keep every
/// center-leaf pair a real edge we re-form stars instead of attaching `v`
/// directly: `p` is detached from its star and becomes the center of a new
/// star over its stranded children, and a star left with no leaves donates
/// its center to that new star as a leaf (the center-to-`p` edge exists).
pub fn star_decomposition(t: &RootedTree) -> Result<StarDecomposition, GraphError> {
    let n = t.graph().n();
    if n < 2 {
        return Err(GraphError::InvalidParameter(
            "cannot decompose a single-vertex tree into stars".into(),
        ));
    }
    let mut stars: Vec<Star> = Vec::new();
    let mut star_of_leaf: HashMap<usize, usize> = HashMap::new();
    let mut stranded: Vec<usize> = Vec::new();

    let mut roots = vec![t.root()];
    while let Some(v) = roots.pop() {
        let children = t.children(v);
        if children.is_empty() {
            stranded.push(v);
            continue;
        }
        for &c in &children {
            star_of_leaf.insert(c, stars.len());
            roots.extend(t.children(c));
        }
        stars.push(Star {
            center: v,
            leaves: children,
        });
    }

    // Group stranded vertices by parent and let the parent center them.
    stranded.sort_unstable();
    let mut by_parent: HashMap<usize, Vec<usize>> = HashMap::new();
    for v in stranded {
        let p = t.parent(v).expect("stranded vertex is not the root");
        by_parent.entry(p).or_default().push(v);
    }
    let mut parents: Vec<_> = by_parent.keys().copied().collect();
    parents.sort_unstable();
    let mut new_star_of_ex_leaf: HashMap<usize, usize> = HashMap::new();
    for p in parents {
        let old = star_of_leaf[&p];
        stars[old].leaves.retain(|&l| l != p);
        new_star_of_ex_leaf.insert(p, stars.len());
        stars.push(Star {
            center: p,
            leaves: by_parent.remove(&p).unwrap(),
        });
    }
    // A star drained of all leaves donates its center as a leaf of one of
    // the new stars centered at its former leaves.
    for i in 0..stars.len() {
        if !stars[i].leaves.is_empty() {
            continue;
        }
        let r = stars[i].center;
        let target = t
            .children(r)
            .into_iter()
            .find_map(|c| new_star_of_ex_leaf.get(&c).copied())
            .expect("drained star lost its leaves to a new star");
        stars[target].leaves.push(r);
        stars[target].leaves.sort_unstable();
    }
    stars.retain(|s| !s.leaves.is_empty());
    Ok(StarDecomposition { stars })
}

/// A split of the vertex set into a 7-vertex path and a perfectly matched
/// remainder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct L7Partition {
    /// The seven path vertices, in path order.
    pub path: [usize; 7],
    /// The remaining vertices.
    pub rest: Vec<usize>,
    /// A perfect matching on `rest` (empty when `rest` is).
    pub rest_matching: Vec<(usize, usize)>,
}

impl L7Partition {
    pub fn validate(&self, g: &Graph) -> bool {
        let mut seen = vec![false; g.n()];
        for w in self.path.windows(2) {
            if !g.has_edge(w[0], w[1]) {
                return false;
            }
        }
        for &v in self.path.iter().chain(self.rest.iter()) {
            if seen[v] {
                return false;
            }
            seen[v] = true;
        }
        if !seen.iter().all(|&s| s) {
            return false;
        }
        let mut covered = vec![false; g.n()];
        for &(u, v) in &self.rest_matching {
            if !g.has_edge(u, v) || covered[u] || covered[v] {
                return false;
            }
            covered[u] = true;
            covered[v] = true;
        }
        self.rest.iter().all(|&v| covered[v])
    }
}

/// Splits `V` into a 7-vertex path and a perfectly matched remainder.
///
/// The primary route starts from a degree-1 vertex and walks
/// neighbor/matching-partner steps through a perfect matching of the rest;
/// when no degree-1 vertex exists (typical above the isolation threshold)
/// it falls back to enumerating 7-paths, up to `budget` candidates, and
/// keeps the first whose removal leaves a perfectly matchable graph.
pub fn find_l7_partition(g: &Graph, budget: usize) -> Option<L7Partition> {
    let n = g.n();
    if n < 7 || !(n - 7).is_multiple_of(2) {
        return None;
    }

    for x0 in 0..n {
        if g.degree(x0) != 1 {
            continue;
        }
        if let Some(part) = degree_one_route(g, x0) {
            return Some(part);
        }
    }
    seven_path_search(g, budget)
}

fn degree_one_route(g: &Graph, x0: usize) -> Option<L7Partition> {
    let n = g.n();
    let x1 = g.neighbors(x0)[0];
    let keep: Vec<usize> = (0..n).filter(|&v| v != x0).collect();
    let (h, ids) = g.induced(&keep);
    let m = perfect_matching(&h)?;
    let back: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mate = |v: usize| ids[m.partner(back[&v]).unwrap()];

    let x2 = mate(x1);
    for &x3 in g.neighbors(x2) {
        if x3 == x1 || x3 == x0 {
            continue;
        }
        let x4 = mate(x3);
        debug_assert!(![x0, x1, x2, x3].contains(&x4));
        for &x5 in g.neighbors(x4) {
            if [x0, x1, x2, x3].contains(&x5) {
                continue;
            }
            let x6 = mate(x5);
            let path = [x0, x1, x2, x3, x4, x5, x6];
            let mut distinct = path.to_vec();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() != 7 {
                continue;
            }
            // The path consumes matching pairs whole, so the rest of the
            // matching is perfect on what is left.
            let rest_matching: Vec<(usize, usize)> = m
                .edges()
                .iter()
                .map(|&(a, b)| (ids[a], ids[b]))
                .filter(|&(a, b)| !path.contains(&a) && !path.contains(&b))
                .collect();
            let rest: Vec<usize> = (0..n).filter(|v| !path.contains(v)).collect();
            return Some(L7Partition {
                path,
                rest,
                rest_matching,
            });
        }
    }
    None
}

fn seven_path_search(g: &Graph, budget: usize) -> Option<L7Partition> {
    let n = g.n();
    let mut tried = 0usize;
    let mut path = Vec::with_capacity(7);
    let mut on_path = vec![false; n];

    fn dfs(
        g: &Graph,
        path: &mut Vec<usize>,
        on_path: &mut Vec<bool>,
        tried: &mut usize,
        budget: usize,
    ) -> Option<L7Partition> {
        if path.len() == 7 {
            *tried += 1;
            if *tried > budget {
                return None;
            }
            let rest: Vec<usize> = (0..g.n()).filter(|&v| !on_path[v]).collect();
            let (h, ids) = g.induced(&rest);
            if let Some(m) = perfect_matching(&h) {
                let rest_matching = m.edges().iter().map(|&(a, b)| (ids[a], ids[b])).collect();
                return Some(L7Partition {
                    path: path[..].try_into().unwrap(),
                    rest,
                    rest_matching,
                });
            }
            return None;
        }
        let last = *path.last().unwrap();
        for &w in g.neighbors(last) {
            if on_path[w] {
                continue;
            }
            path.push(w);
            on_path[w] = true;
            let found = dfs(g, path, on_path, tried, budget);
            path.pop();
            on_path[w] = false;
            if found.is_some() {
                return found;
            }
            if *tried > budget {
                return None;
            }
        }
        None
    }

    for start in 0..n {
        path.push(start);
        on_path[start] = true;
        let found = dfs(g, &mut path, &mut on_path, &mut tried, budget);
        path.pop();
        on_path[start] = false;
        if found.is_some() {
            return found;
        }
        if tried > budget {
            return None;
        }
    }
    None
}

/// Obstruction structures from the random-graph argument.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    /// Two degree-1 vertices at distance exactly 2.
    pub has_cherry: bool,
    /// Five distinct vertices forming a path whose endpoints have degree 1.
    pub has_deg1_path5: bool,
    pub isolated_vertices: Vec<usize>,
}

pub fn detect_structures(g: &Graph) -> StructureReport {
    let n = g.n();
    let deg1: Vec<usize> = (0..n).filter(|&v| g.degree(v) == 1).collect();

    let mut has_cherry = false;
    'outer: for (i, &u) in deg1.iter().enumerate() {
        for &v in &deg1[i + 1..] {
            if g.neighbors(u)[0] == g.neighbors(v)[0] {
                has_cherry = true;
                break 'outer;
            }
        }
    }

    let mut has_deg1_path5 = false;
    'path: for &x0 in &deg1 {
        // Simple 4-edge paths from x0; endpoints of degree 1 qualify.
        let mut stack = vec![(vec![x0], x0)];
        while let Some((path, last)) = stack.pop() {
            if path.len() == 5 {
                if g.degree(last) == 1 {
                    has_deg1_path5 = true;
                    break 'path;
                }
                continue;
            }
            for &w in g.neighbors(last) {
                if !path.contains(&w) {
                    let mut next = path.clone();
                    next.push(w);
                    stack.push((next, w));
                }
            }
        }
    }

    StructureReport {
        has_cherry,
        has_deg1_path5,
        isolated_vertices: (0..n).filter(|&v| g.degree(v) == 0).collect(),
    }
}

/// The classes for which a non-stabilizing 1-fair edge schedule exists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphClass {
    /// Contains a cycle of length at least four.
    G1,
    /// No cycle of length at least four, and an even number of edges.
    G2,
    /// A tree on `4k` vertices.
    G3,
    /// None of the above.
    None,
}

impl std::fmt::Display for GraphClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphClass::G1 => write!(f, "G1"),
            GraphClass::G2 => write!(f, "G2"),
            GraphClass::G3 => write!(f, "G3"),
            GraphClass::None => write!(f, "none"),
        }
    }
}

/// Classifies a connected graph with at least two edges, checking G1 first.
pub fn classify_for_1fair_adversary(g: &Graph) -> Result<GraphClass, GraphError> {
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    if g.m() < 2 {
        return Err(GraphError::InvalidParameter(
            "classification requires at least two edges".into(),
        ));
    }
    if has_long_cycle(g) {
        return Ok(GraphClass::G1);
    }
    if g.m().is_multiple_of(2) {
        return Ok(GraphClass::G2);
    }
    if g.m() == g.n() - 1 && g.n().is_multiple_of(4) {
        return Ok(GraphClass::G3);
    }
    Ok(GraphClass::None)
}

/// True when `g` contains a cycle of length >= 4, i.e. some biconnected
/// block spans at least four vertices.
pub fn has_long_cycle(g: &Graph) -> bool {
    blocks(g).iter().any(|b| b.len() >= 4)
}

/// Biconnected components as vertex sets (iterative lowlink).
fn blocks(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0usize;
    let mut edge_stack: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::new();

    for start in 0..n {
        if disc[start] != usize::MAX {
            continue;
        }
        let mut stack: Vec<(usize, usize, usize)> = vec![(start, usize::MAX, 0)];
        disc[start] = timer;
        low[start] = timer;
        timer += 1;
        while let Some(&mut (v, parent, ref mut i)) = stack.last_mut() {
            let neighbors = g.neighbors(v);
            if *i < neighbors.len() {
                let w = neighbors[*i];
                *i += 1;
                if w == parent {
                    continue;
                }
                if disc[w] == usize::MAX {
                    edge_stack.push((v, w));
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, v, 0));
                } else if disc[w] < disc[v] {
                    edge_stack.push((v, w));
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&mut (p, _, _)) = stack.last_mut() {
                    low[p] = low[p].min(low[v]);
                    if low[v] >= disc[p] {
                        let mut verts = Vec::new();
                        while let Some(&(a, b)) = edge_stack.last() {
                            edge_stack.pop();
                            for x in [a, b] {
                                if !verts.contains(&x) {
                                    verts.push(x);
                                }
                            }
                            if (a, b) == (p, v) {
                                break;
                            }
                        }
                        if !verts.is_empty() {
                            out.push(verts);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Shrinks `g` by greedy vertex deletion to a minimal induced subgraph that
/// still contains a cycle of length >= 4. Such a minimal graph is a plain
/// cycle, `K_4`, or two triangles sharing an edge. Returns the vertex set
/// (original ids), or `None` when `g` has no long cycle.
pub fn minimal_long_cycle_core(g: &Graph) -> Option<Vec<usize>> {
    if !has_long_cycle(g) {
        return None;
    }
    let mut keep: Vec<usize> = (0..g.n()).collect();
    'shrink: loop {
        for i in 0..keep.len() {
            let mut smaller = keep.clone();
            smaller.remove(i);
            let (h, _) = g.induced(&smaller);
            if has_long_cycle(&h) {
                keep = smaller;
                continue 'shrink;
            }
        }
        return Some(keep);
    }
}

/// Lays out one of the three minimal long-cycle graphs: the long cycle in
/// cyclic vertex order plus the edges not on it.
///
/// Panics if `h` is not a cycle, `K_4`, or two merged triangles.
pub fn basic_graph_layout(h: &Graph) -> (Vec<usize>, Vec<(usize, usize)>) {
    let n = h.n();
    let m = h.m();
    if m == n && n >= 4 {
        // The cycle itself.
        let mut order = vec![0usize];
        let mut prev = usize::MAX;
        let mut cur = 0usize;
        while order.len() < n {
            let next = *h
                .neighbors(cur)
                .iter()
                .find(|&&w| w != prev)
                .expect("cycle vertex has two neighbors");
            order.push(next);
            prev = cur;
            cur = next;
        }
        (order, Vec::new())
    } else if n == 4 && m == 5 {
        // Two triangles on a shared edge; the chord joins the degree-3
        // vertices and the remaining four edges form the unique 4-cycle.
        let a = (0..4).find(|&v| h.degree(v) == 3).unwrap();
        let b = (a + 1..4).find(|&v| h.degree(v) == 3).unwrap();
        let others: Vec<usize> = (0..4).filter(|&v| v != a && v != b).collect();
        (vec![a, others[0], b, others[1]], vec![(a, b)])
    } else if n == 4 && m == 6 {
        (vec![0, 1, 2, 3], vec![(0, 2), (1, 3)])
    } else {
        panic!("not a minimal long-cycle graph: n={n}, m={m}");
    }
}
