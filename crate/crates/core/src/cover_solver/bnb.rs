use std::collections::HashSet;
use std::time::Instant;

use super::{greedy_cover, CoverInstance, SolveBudget, SolveReport, SolverError};
use crate::marginal_design::{PauliSet, PauliString};

/// Exact minimum cover by depth-first branch-and-bound.
///
/// Branches on the uncovered requirement with the fewest remaining candidates;
/// children are its candidates by decreasing number of newly covered
/// requirements, and each child's candidate is excluded from later siblings.
/// A node is pruned when `depth + bound >= incumbent`, the bound being the
/// per-vertex refinement of the per-edge count: for a vertex `v`, every axis
/// `s` needs at least `max_{e ∋ v}` (uncovered assignments on `e` with `v = s`)
/// more settings measuring `s` on `v`.
///
/// On axis-symmetric instances the all-X string is fixed at the root, and a
/// child is skipped when a qubit automorphism fixing every chosen setting,
/// composed with axis swaps on qubits where all chosen settings agree, maps
/// an earlier sibling onto it.
/// The incumbent is seeded with the greedy cover and `incumbent`, if smaller.
pub fn branch_and_bound(
    inst: &CoverInstance,
    budget: SolveBudget,
    incumbent: Option<&PauliSet>,
) -> Result<SolveReport, SolverError> {
    solve(inst, budget, incumbent, true)
}

pub(crate) fn solve(
    inst: &CoverInstance,
    budget: SolveBudget,
    incumbent: Option<&PauliSet>,
    use_symmetry: bool,
) -> Result<SolveReport, SolverError> {
    let start = Instant::now();
    let mut best = greedy_cover(inst);
    if let Some(given) = incumbent {
        let missing = inst.uncovered_by(given)?;
        if let Some(r) = missing.first() {
            return Err(SolverError::InvalidIncumbent(format!("requirement {r} is not covered")));
        }
        if given.settings().iter().any(|s| inst.candidate_index(s).is_none()) {
            return Err(SolverError::InvalidIncumbent("setting outside the candidate pool".into()));
        }
        if given.len() < best.len() {
            best = given.clone();
        }
    }

    let mut search = Search::new(inst, budget, start, best.settings().iter().map(|s| inst.candidate_index(s).unwrap() as u32).collect());
    let root_bound = search.bound();
    if use_symmetry && inst.is_axis_symmetric() && !inst.universe().is_empty() {
        search.symmetry = Some(vec![automorphisms(inst.n(), inst.edges(), AUTOMORPHISM_CAP)]);
        search.apply(0);
        search.stack.push(0);
        search.run(1);
    } else {
        search.run(0);
    }

    let mut solution: Vec<PauliString> = search.best.iter().map(|&c| inst.candidate(c as usize)).collect();
    solution.sort();
    let size = solution.len();
    let budget_hit = search.budget_hit;
    Ok(SolveReport {
        solution: PauliSet::new(inst.n(), solution).expect("distinct candidates"),
        size,
        lower_bound: if budget_hit { root_bound.min(size) } else { size },
        optimal: !budget_hit,
        nodes_explored: search.nodes,
        wall_time: start.elapsed(),
        budget_hit,
    })
}

const AUTOMORPHISM_CAP: usize = 50_000;
const CANONICAL_WORK: usize = 20_000_000;

/// Vertex permutations `p` (vertex `q` maps to `p[q]`) preserving the edge
/// set, in lexicographic order, at most `cap` of them.
fn automorphisms(n: usize, edges: &[Vec<usize>], cap: usize) -> Vec<Vec<usize>> {
    let edge_set: HashSet<Vec<usize>> = edges.iter().cloned().collect();
    let mut by_last: Vec<Vec<&Vec<usize>>> = vec![Vec::new(); n];
    for e in edges {
        by_last[*e.iter().max().expect("non-empty edge")].push(e);
    }
    let mut out = Vec::new();
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn rec(
        q: usize,
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
        by_last: &[Vec<&Vec<usize>>],
        edge_set: &HashSet<Vec<usize>>,
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) {
        if out.len() >= cap {
            return;
        }
        if q == perm.len() {
            out.push(perm.clone());
            return;
        }
        for v in 0..perm.len() {
            if used[v] {
                continue;
            }
            perm[q] = v;
            let ok = by_last[q].iter().all(|e| {
                let mut img: Vec<usize> = e.iter().map(|&u| perm[u]).collect();
                img.sort_unstable();
                edge_set.contains(&img)
            });
            if ok {
                used[v] = true;
                rec(q + 1, perm, used, by_last, edge_set, out, cap);
                used[v] = false;
            }
        }
        perm[q] = usize::MAX;
    }
    rec(0, &mut perm, &mut used, &by_last, &edge_set, &mut out, cap);
    out
}

struct Search<'a> {
    inst: &'a CoverInstance,
    budget: SolveBudget,
    start: Instant,
    cover_count: Vec<u32>,
    uncovered: usize,
    /// `uncov_pos[slot][s]`: uncovered requirements on the slot's edge whose
    /// slot vertex carries axis `s`.
    uncov_pos: Vec<[u32; 3]>,
    /// Slots `(edge, position)` per vertex.
    vertex_slots: Vec<Vec<usize>>,
    slot_base: Vec<usize>,
    avail: Vec<u32>,
    forbidden: Vec<bool>,
    stack: Vec<u32>,
    best: Vec<u32>,
    nodes: u64,
    budget_hit: bool,
    digits: Vec<u8>,
    reqs: Vec<u32>,
    /// Per depth, automorphisms fixing every setting on the stack.
    symmetry: Option<Vec<Vec<Vec<usize>>>>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a CoverInstance, budget: SolveBudget, start: Instant, best: Vec<u32>) -> Self {
        let edges = inst.edges();
        let mut slot_base = Vec::with_capacity(edges.len());
        let mut vertex_slots = vec![Vec::new(); inst.n()];
        let mut slots = 0;
        for e in edges {
            slot_base.push(slots);
            for (p, &v) in e.iter().enumerate() {
                vertex_slots[v].push(slots + p);
            }
            slots += e.len();
        }
        let mut uncov_pos = vec![[0u32; 3]; slots];
        let mut avail = vec![0u32; inst.universe().len()];
        let mut buf = Vec::new();
        for (r, a) in avail.iter_mut().enumerate() {
            let e = inst.edge_of(r);
            let assignment = PauliString::from_index(edges[e].len(), inst.assignment_of(r));
            for (p, axis) in assignment.axes().iter().enumerate() {
                uncov_pos[slot_base[e] + p][axis.index()] += 1;
            }
            inst.covering_candidates(r, &mut buf);
            *a = buf.len() as u32;
        }
        Search {
            inst,
            budget,
            start,
            cover_count: vec![0; inst.universe().len()],
            uncovered: inst.universe().len(),
            uncov_pos,
            vertex_slots,
            slot_base,
            avail,
            forbidden: vec![false; inst.num_candidates()],
            stack: Vec::new(),
            best,
            nodes: 0,
            budget_hit: false,
            digits: Vec::new(),
            reqs: Vec::new(),
            symmetry: None,
        }
    }

    fn bound(&self) -> usize {
        let mut best = 0;
        for slots in &self.vertex_slots {
            let mut total = 0;
            for s in 0..3 {
                total += slots.iter().map(|&slot| self.uncov_pos[slot][s]).max().unwrap_or(0);
            }
            best = best.max(total);
        }
        best as usize
    }

    fn toggle_requirement(&mut self, r: usize, delta: i32) {
        let e = self.inst.edge_of(r);
        let len = self.inst.edges()[e].len();
        let mut a = self.inst.assignment_of(r);
        for p in (0..len).rev() {
            let slot = &mut self.uncov_pos[self.slot_base[e] + p][a % 3];
            *slot = slot.wrapping_add_signed(delta);
            a /= 3;
        }
    }

    fn apply(&mut self, c: u32) {
        let mut reqs = std::mem::take(&mut self.reqs);
        self.inst.requirements_of(c as usize, &mut self.digits, &mut reqs);
        for &r in &reqs {
            self.cover_count[r as usize] += 1;
            if self.cover_count[r as usize] == 1 {
                self.uncovered -= 1;
                self.toggle_requirement(r as usize, -1);
            }
        }
        self.reqs = reqs;
    }

    fn undo(&mut self, c: u32) {
        let mut reqs = std::mem::take(&mut self.reqs);
        self.inst.requirements_of(c as usize, &mut self.digits, &mut reqs);
        for &r in &reqs {
            self.cover_count[r as usize] -= 1;
            if self.cover_count[r as usize] == 0 {
                self.uncovered += 1;
                self.toggle_requirement(r as usize, 1);
            }
        }
        self.reqs = reqs;
    }

    fn set_forbidden(&mut self, c: u32, value: bool) {
        self.forbidden[c as usize] = value;
        let mut reqs = std::mem::take(&mut self.reqs);
        self.inst.requirements_of(c as usize, &mut self.digits, &mut reqs);
        for &r in &reqs {
            if value {
                self.avail[r as usize] -= 1;
            } else {
                self.avail[r as usize] += 1;
            }
        }
        self.reqs = reqs;
    }

    fn out_of_budget(&mut self) -> bool {
        if self.budget_hit {
            return true;
        }
        if self.budget.max_nodes.is_some_and(|m| self.nodes >= m) {
            self.budget_hit = true;
        } else if let Some(t) = self.budget.max_time {
            if self.nodes % 256 == 0 && self.start.elapsed() >= t {
                self.budget_hit = true;
            }
        }
        self.budget_hit
    }

    fn newly_covered(&mut self, c: u32) -> usize {
        let mut reqs = std::mem::take(&mut self.reqs);
        self.inst.requirements_of(c as usize, &mut self.digits, &mut reqs);
        let n = reqs.iter().filter(|&&r| self.cover_count[r as usize] == 0).count();
        self.reqs = reqs;
        n
    }

    fn digits_of(&self, c: u32) -> Vec<u8> {
        self.inst.candidate(c as usize).axes().iter().map(|a| a.index() as u8).collect()
    }

    /// Orbit labels of the children under the stabilizer of the stack, or
    /// `None` when only the identity remains.
    fn child_classes(&self, children: &[(usize, u32)]) -> Option<Vec<u64>> {
        let perms = self.symmetry.as_ref()?.last()?;
        let n = self.inst.n();
        // per qubit: Some(a) when every stacked setting measures a there
        let mut constant: Vec<Option<u8>> = vec![None; n];
        let stack: Vec<Vec<u8>> = self.stack.iter().map(|&c| self.digits_of(c)).collect();
        for (q, slot) in constant.iter_mut().enumerate() {
            let a = stack[0][q];
            if stack.iter().all(|s| s[q] == a) {
                *slot = Some(a);
            }
        }
        if perms.len() <= 1 && constant.iter().all(Option::is_none) {
            return None;
        }
        // a prefix of the list still yields sound (coarser) classes
        let perms = &perms[..perms.len().min((CANONICAL_WORK / (children.len() * n).max(1)).max(1))];
        let mut img = vec![0u8; n];
        let classes = children
            .iter()
            .map(|&(_, c)| {
                let d = self.digits_of(c);
                let mut best = u64::MAX;
                for p in perms {
                    for q in 0..n {
                        img[p[q]] = d[q];
                    }
                    let mut key = 0u64;
                    for (q, &v) in img.iter().enumerate() {
                        let v = match constant[q] {
                            Some(a) if v != a => if a == 0 { 1 } else { 0 },
                            _ => v,
                        };
                        key = key * 3 + u64::from(v);
                    }
                    best = best.min(key);
                }
                best
            })
            .collect();
        Some(classes)
    }

    fn push_symmetry(&mut self, c: u32) {
        if self.symmetry.is_none() {
            return;
        }
        let d = self.digits_of(c);
        let levels = self.symmetry.as_mut().expect("checked");
        let next: Vec<Vec<usize>> =
            levels.last().expect("root level").iter().filter(|p| (0..d.len()).all(|q| d[p[q]] == d[q])).cloned().collect();
        levels.push(next);
    }

    fn pop_symmetry(&mut self) {
        if let Some(levels) = self.symmetry.as_mut() {
            levels.pop();
        }
    }

    fn run(&mut self, depth: usize) {
        if self.out_of_budget() {
            return;
        }
        self.nodes += 1;
        if self.uncovered == 0 {
            if depth < self.best.len() {
                self.best = self.stack.clone();
            }
            return;
        }
        if depth + self.bound() >= self.best.len() {
            return;
        }
        let mut branch = None;
        for r in 0..self.cover_count.len() {
            if self.cover_count[r] == 0 && branch.is_none_or(|b: usize| self.avail[r] < self.avail[b]) {
                branch = Some(r);
            }
        }
        let r = branch.expect("an uncovered requirement exists");
        if self.avail[r] == 0 {
            return;
        }
        let mut children = Vec::new();
        self.inst.covering_candidates(r, &mut children);
        children.retain(|&c| !self.forbidden[c as usize]);
        let mut scored: Vec<(usize, u32)> = children.iter().map(|&c| (self.newly_covered(c), c)).collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

        let classes = self.child_classes(&scored);
        let mut seen = HashSet::new();
        let mut excluded = Vec::new();
        for (i, &(_, c)) in scored.iter().enumerate() {
            if let Some(classes) = &classes {
                if !seen.insert(classes[i]) {
                    self.set_forbidden(c, true);
                    excluded.push(c);
                    continue;
                }
            }
            self.push_symmetry(c);
            self.apply(c);
            self.stack.push(c);
            self.run(depth + 1);
            self.stack.pop();
            self.undo(c);
            self.pop_symmetry();
            if self.budget_hit {
                break;
            }
            self.set_forbidden(c, true);
            excluded.push(c);
            if depth + self.bound() >= self.best.len() {
                break;
            }
        }
        for c in excluded {
            self.set_forbidden(c, false);
        }
    }
}
