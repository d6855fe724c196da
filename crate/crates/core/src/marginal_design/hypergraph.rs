use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::DesignError;

/// Requested marginals: vertices are qubits, each hyperedge a qubit subset
/// whose reduced state must be reconstructable.
///
/// Edges are stored sorted, without duplicates, and with dominated edges
/// (proper subsets of another edge) removed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawHypergraph", into = "RawHypergraph")]
pub struct ConnectivityHypergraph {
    n: usize,
    edges: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawHypergraph {
    n: usize,
    edges: Vec<Vec<usize>>,
}

impl TryFrom<RawHypergraph> for ConnectivityHypergraph {
    type Error = DesignError;

    fn try_from(raw: RawHypergraph) -> Result<Self, Self::Error> {
        ConnectivityHypergraph::new(raw.n, raw.edges)
    }
}

impl From<ConnectivityHypergraph> for RawHypergraph {
    fn from(h: ConnectivityHypergraph) -> Self {
        RawHypergraph { n: h.n, edges: h.edges }
    }
}

impl ConnectivityHypergraph {
    pub fn new(n: usize, edges: Vec<Vec<usize>>) -> Result<Self, DesignError> {
        let mut set = BTreeSet::new();
        for mut e in edges {
            e.sort_unstable();
            e.dedup();
            if e.is_empty() {
                return Err(DesignError::InvalidHypergraph("empty edge".into()));
            }
            if let Some(&v) = e.iter().find(|&&v| v >= n) {
                return Err(DesignError::InvalidHypergraph(format!("vertex {v} out of range for n = {n}")));
            }
            set.insert(e);
        }
        let all: Vec<Vec<usize>> = set.into_iter().collect();
        let edges = all
            .iter()
            .filter(|e| !all.iter().any(|f| f.len() > e.len() && is_subset(e, f)))
            .cloned()
            .collect();
        Ok(ConnectivityHypergraph { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn max_edge_size(&self) -> usize {
        self.edges.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `Some(k)` when every edge has exactly `k` vertices.
    pub fn uniform_edge_size(&self) -> Option<usize> {
        let k = self.edges.first()?.len();
        self.edges.iter().all(|e| e.len() == k).then_some(k)
    }

    /// Primal (2-section) graph adjacency: two vertices are adjacent when they
    /// share an edge. Strong colourings of `self` are proper colourings of it.
    pub fn primal_adjacency(&self) -> Vec<Vec<bool>> {
        let mut adj = vec![vec![false; self.n]; self.n];
        for e in &self.edges {
            for (i, &u) in e.iter().enumerate() {
                for &v in &e[i + 1..] {
                    adj[u][v] = true;
                    adj[v][u] = true;
                }
            }
        }
        adj
    }

    /// Complete k-uniform hypergraph on `n` vertices.
    pub fn complete(n: usize, k: usize) -> Result<Self, DesignError> {
        if k == 0 || k > n {
            return Err(DesignError::InvalidHypergraph(format!("complete({n},{k}) needs 1 <= k <= n")));
        }
        ConnectivityHypergraph::new(n, k_subsets(n, k))
    }

    /// Cyclic hyperedges `{i, i+1, ..., i+k-1} mod n`.
    pub fn ring(n: usize, k: usize) -> Result<Self, DesignError> {
        if k == 0 || k > n {
            return Err(DesignError::InvalidHypergraph(format!("ring({n},{k}) needs 1 <= k <= n")));
        }
        let edges = (0..n).map(|i| (0..k).map(|j| (i + j) % n).collect()).collect();
        ConnectivityHypergraph::new(n, edges)
    }

    /// Open chain of hyperedges `{i, ..., i+k-1}` for `i = 0..=n-k`.
    pub fn line(n: usize, k: usize) -> Result<Self, DesignError> {
        if k == 0 || k > n {
            return Err(DesignError::InvalidHypergraph(format!("line({n},{k}) needs 1 <= k <= n")));
        }
        let edges = (0..=n - k).map(|i| (i..i + k).collect()).collect();
        ConnectivityHypergraph::new(n, edges)
    }

    /// 4x4 square lattice with nearest and diagonal (second) neighbours.
    /// Qubit `4 * row + col`.
    pub fn grid16() -> Self {
        let mut edges = Vec::new();
        for r in 0..4i32 {
            for c in 0..4i32 {
                for (dr, dc) in [(0, 1), (1, 0), (1, 1), (1, -1)] {
                    let (r2, c2) = (r + dr, c + dc);
                    if (0..4).contains(&r2) && (0..4).contains(&c2) {
                        edges.push(vec![(4 * r + c) as usize, (4 * r2 + c2) as usize]);
                    }
                }
            }
        }
        ConnectivityHypergraph::new(16, edges).expect("grid16 is valid")
    }

    /// Seven-qubit graph with clique number 4 and chromatic number 5: a
    /// five-cycle `0-1-3-4-5-0` joined to the edge `{2, 6}`.
    pub fn g7() -> Self {
        let cycle = [0, 1, 3, 4, 5];
        let mut edges = vec![vec![2, 6]];
        for i in 0..5 {
            edges.push(vec![cycle[i], cycle[(i + 1) % 5]]);
            edges.push(vec![cycle[i], 2]);
            edges.push(vec![cycle[i], 6]);
        }
        ConnectivityHypergraph::new(7, edges).expect("g7 is valid")
    }

    /// Named instances: `complete:n:k`, `ring:n:k`, `line:n:k`, `grid16`, `g7`.
    pub fn preset(name: &str) -> Result<Self, DesignError> {
        let parts: Vec<&str> = name.trim().split(':').collect();
        let nums = |parts: &[&str]| -> Result<(usize, usize), DesignError> {
            if parts.len() != 2 {
                return Err(DesignError::UnknownPreset(name.to_string()));
            }
            let n = parts[0].parse().map_err(|_| DesignError::UnknownPreset(name.to_string()))?;
            let k = parts[1].parse().map_err(|_| DesignError::UnknownPreset(name.to_string()))?;
            Ok((n, k))
        };
        match parts[0] {
            "complete" => {
                let (n, k) = nums(&parts[1..])?;
                Self::complete(n, k)
            }
            "ring" => {
                let (n, k) = nums(&parts[1..])?;
                Self::ring(n, k)
            }
            "line" => {
                let (n, k) = nums(&parts[1..])?;
                Self::line(n, k)
            }
            "grid16" if parts.len() == 1 => Ok(Self::grid16()),
            "g7" if parts.len() == 1 => Ok(Self::g7()),
            _ => Err(DesignError::UnknownPreset(name.to_string())),
        }
    }

    /// Size of the largest vertex set all of whose k-subsets are edges.
    /// Exact by backtracking; refuses instances above 32 vertices.
    pub fn clique_number(&self) -> Result<usize, DesignError> {
        const LIMIT: usize = 32;
        if self.n > LIMIT {
            return Err(DesignError::SizeLimit { n: self.n, limit: LIMIT });
        }
        let k = self.uniform_edge_size().ok_or(DesignError::NonUniform)?;
        if k == 1 {
            return Ok(1);
        }
        let edges: HashSet<Vec<usize>> = self.edges.iter().cloned().collect();
        let adj = self.primal_adjacency();
        let mut best = 0;
        let mut current = Vec::new();
        grow_clique(&edges, &adj, k, self.n, 0, &mut current, &mut best);
        Ok(best)
    }

    /// Minimum number of colours such that vertices sharing an edge get
    /// distinct colours. Exact up to 20 vertices, DSATUR greedy above.
    pub fn strong_chromatic_number(&self) -> StrongColouring {
        const EXACT_LIMIT: usize = 20;
        const LARGE_NODE_BUDGET: u64 = 200_000;
        let adj = self.primal_adjacency();
        let greedy = dsatur_greedy(&adj);
        let greedy_colours = count_colours(&greedy);
        let budget = if self.n > EXACT_LIMIT { Some(LARGE_NODE_BUDGET) } else { None };
        let (lower, lower_proven) = graph_clique_number(&adj, budget);
        let lower = lower.max(usize::from(self.n > 0));
        let mut best = StrongColouring { colours: greedy_colours, colouring: greedy, exact: false };
        for c in lower..greedy_colours {
            match colour_with(&adj, c, budget) {
                Search::Found(colouring) => {
                    best = StrongColouring { colours: c, colouring, exact: false };
                    break;
                }
                Search::Infeasible => continue,
                Search::OutOfBudget => break,
            }
        }
        best.exact = if self.n > EXACT_LIMIT {
            lower_proven && best.colours == lower
        } else {
            // below the limit every smaller colour count was refuted exhaustively
            true
        };
        best
    }
}

/// Result of [`ConnectivityHypergraph::strong_chromatic_number`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrongColouring {
    pub colours: usize,
    /// `colouring[v]` in `0..colours`.
    pub colouring: Vec<usize>,
    pub exact: bool,
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    small.iter().all(|v| big.binary_search(v).is_ok())
}

/// All k-element subsets of `0..n`, sorted, in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            if n - v < k - cur.len() {
                break;
            }
            cur.push(v);
            rec(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn grow_clique(
    edges: &HashSet<Vec<usize>>,
    adj: &[Vec<bool>],
    k: usize,
    n: usize,
    start: usize,
    current: &mut Vec<usize>,
    best: &mut usize,
) {
    if current.len() > *best {
        *best = current.len();
    }
    if current.len() + (n - start) <= *best {
        return;
    }
    for v in start..n {
        if !current.iter().all(|&u| adj[u][v]) {
            continue;
        }
        // every (k-1)-subset of the current set plus v must be an edge
        let ok = current.len() + 1 < k
            || k_subsets(current.len(), k - 1).iter().all(|idx| {
                let mut e: Vec<usize> = idx.iter().map(|&i| current[i]).collect();
                e.push(v);
                e.sort_unstable();
                edges.contains(&e)
            });
        if ok {
            current.push(v);
            grow_clique(edges, adj, k, n, v + 1, current, best);
            current.pop();
        }
    }
}

/// Returns the clique number found and whether the search completed.
fn graph_clique_number(adj: &[Vec<bool>], budget: Option<u64>) -> (usize, bool) {
    let mut best = 0;
    let mut current = Vec::new();
    let mut nodes = 0u64;
    fn rec(adj: &[Vec<bool>], start: usize, current: &mut Vec<usize>, best: &mut usize, nodes: &mut u64, budget: Option<u64>) -> bool {
        let n = adj.len();
        *nodes += 1;
        if budget.is_some_and(|b| *nodes > b) {
            return false;
        }
        *best = (*best).max(current.len());
        if current.len() + (n - start) <= *best {
            return true;
        }
        for v in start..n {
            if current.iter().all(|&u| adj[u][v]) {
                current.push(v);
                let done = rec(adj, v + 1, current, best, nodes, budget);
                current.pop();
                if !done {
                    return false;
                }
            }
        }
        true
    }
    let complete = rec(adj, 0, &mut current, &mut best, &mut nodes, budget);
    (best, complete)
}

fn count_colours(colouring: &[usize]) -> usize {
    colouring.iter().map(|c| c + 1).max().unwrap_or(0)
}

fn dsatur_greedy(adj: &[Vec<bool>]) -> Vec<usize> {
    let n = adj.len();
    let mut colour = vec![usize::MAX; n];
    let degree: Vec<usize> = adj.iter().map(|r| r.iter().filter(|&&b| b).count()).collect();
    for _ in 0..n {
        let saturation = |v: usize| {
            let mut seen: Vec<usize> = (0..n).filter(|&u| adj[v][u] && colour[u] != usize::MAX).map(|u| colour[u]).collect();
            seen.sort_unstable();
            seen.dedup();
            seen.len()
        };
        let v = (0..n)
            .filter(|&v| colour[v] == usize::MAX)
            .max_by(|&a, &b| (saturation(a), degree[a], std::cmp::Reverse(a)).cmp(&(saturation(b), degree[b], std::cmp::Reverse(b))))
            .expect("an uncoloured vertex remains");
        let mut c = 0;
        while (0..n).any(|u| adj[v][u] && colour[u] == c) {
            c += 1;
        }
        colour[v] = c;
    }
    colour
}

enum Search {
    Found(Vec<usize>),
    Infeasible,
    OutOfBudget,
}

/// Backtracking test for a proper colouring with `c` colours.
fn colour_with(adj: &[Vec<bool>], c: usize, budget: Option<u64>) -> Search {
    let n = adj.len();
    let mut order: Vec<usize> = (0..n).collect();
    let degree: Vec<usize> = adj.iter().map(|r| r.iter().filter(|&&b| b).count()).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(degree[v]), v));
    let mut colour = vec![usize::MAX; n];
    let mut nodes = 0u64;
    struct Ctx<'a> {
        order: &'a [usize],
        adj: &'a [Vec<bool>],
        c: usize,
        budget: Option<u64>,
    }
    // Some(true) found, Some(false) exhausted, None out of budget
    fn rec(ctx: &Ctx, i: usize, used: usize, colour: &mut [usize], nodes: &mut u64) -> Option<bool> {
        if i == ctx.order.len() {
            return Some(true);
        }
        *nodes += 1;
        if ctx.budget.is_some_and(|b| *nodes > b) {
            return None;
        }
        let v = ctx.order[i];
        // new colours are only opened in increasing order
        for col in 0..ctx.c.min(used + 1) {
            if (0..ctx.adj.len()).any(|u| ctx.adj[v][u] && colour[u] == col) {
                continue;
            }
            colour[v] = col;
            match rec(ctx, i + 1, used.max(col + 1), colour, nodes) {
                Some(true) => return Some(true),
                Some(false) => {}
                None => return None,
            }
            colour[v] = usize::MAX;
        }
        Some(false)
    }
    let ctx = Ctx { order: &order, adj, c, budget };
    match rec(&ctx, 0, 0, &mut colour, &mut nodes) {
        Some(true) => Search::Found(colour),
        Some(false) => Search::Infeasible,
        None => Search::OutOfBudget,
    }
}
