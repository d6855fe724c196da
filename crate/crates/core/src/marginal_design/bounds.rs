use serde::{Deserialize, Serialize};

use super::ConnectivityHypergraph;

/// Bounds on the minimal number of Pauli settings, with the contributing sources.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiBounds {
    pub lower: u64,
    pub upper: u64,
    /// `lower == upper`.
    pub exact: bool,
    pub sources: Vec<BoundSource>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundSource {
    pub name: String,
    /// "lower" or "upper".
    pub side: String,
    pub value: u64,
}

/// Largest n for which the built-in table is exact, per k.
fn table_limit(k: usize) -> usize {
    match k {
        1 => usize::MAX,
        2 => 20,
        3 => 6,
        _ => k + 1,
    }
}

/// Exactly known covering array numbers over three symbols.
pub(crate) fn known_phi(n: usize, k: usize) -> Option<u64> {
    if k == 0 || n < k {
        return None;
    }
    if k == 1 {
        return Some(3);
    }
    if n <= k + 1 {
        return Some(3u64.pow(k as u32));
    }
    match (k, n) {
        (2, 4) => Some(9),
        (2, 5) => Some(11),
        (2, 6..=7) => Some(12),
        (2, 8..=9) => Some(13),
        (2, 10) => Some(14),
        (2, 11..=20) => Some(15),
        (3, 5..=6) => Some(33),
        _ => None,
    }
}

/// Smallest `x` with `base^x >= n`.
fn ceil_log(base: usize, n: usize) -> u32 {
    let mut x = 0;
    let mut p = 1usize;
    while p < n {
        p = p.saturating_mul(base);
        x += 1;
    }
    x
}

fn lower_for(n: usize, k: usize, sources: &mut Vec<BoundSource>, tag: &str) -> u64 {
    let base = 3u64.pow(k as u32);
    push(sources, &format!("{tag}3^k"), "lower", base);
    let mut lower = base;
    if let Some(v) = known_phi(n, k) {
        push(sources, &format!("{tag}table"), "lower", v);
        lower = lower.max(v);
    } else if n > table_limit(k) {
        // monotone in n: the largest tabulated value still bounds from below
        if let Some(v) = known_phi(table_limit(k), k) {
            push(sources, &format!("{tag}table-monotone(n={})", table_limit(k)), "lower", v);
            lower = lower.max(v);
        }
    }
    lower
}

fn upper_for(n: usize, k: usize, sources: &mut Vec<BoundSource>, tag: &str) -> u64 {
    let mut upper = 3u64.saturating_pow(n as u32);
    push(sources, &format!("{tag}all-strings"), "upper", upper);
    if let Some(v) = known_phi(n, k) {
        push(sources, &format!("{tag}table"), "upper", v);
        upper = upper.min(v);
    }
    if k == 2 {
        let de_caen = 6 * u64::from(ceil_log(3, n)) + 3;
        push(sources, &format!("{tag}de-caen"), "upper", de_caen);
        upper = upper.min(de_caen);
        for alpha in 2..=20usize {
            let phi_alpha = known_phi(alpha, 2).expect("tabulated");
            let v = (phi_alpha - 1) * u64::from(ceil_log(alpha, n)) + 1;
            if v < upper {
                push(sources, &format!("{tag}recursion(alpha={alpha})"), "upper", v);
                upper = v;
            }
        }
    }
    if k == 3 && n > table_limit(3) {
        let v = doubling_k3(n);
        push(sources, &format!("{tag}doubling"), "upper", v);
        upper = upper.min(v);
    }
    upper
}

/// Upper bound from phi_3(2m) <= phi_3(m) + 2 phi_2(m).
fn doubling_k3(n: usize) -> u64 {
    if let Some(v) = known_phi(n, 3) {
        return v;
    }
    let half = n.div_ceil(2);
    let mut scratch = Vec::new();
    doubling_k3(half) + 2 * upper_for(half, 2, &mut scratch, "")
}

fn push(sources: &mut Vec<BoundSource>, name: &str, side: &str, value: u64) {
    sources.push(BoundSource { name: name.to_string(), side: side.to_string(), value });
}

/// Lower and upper bounds on phi_k(n), or on phi_k(G) when `g` is given.
///
/// With a connectivity hypergraph the lower bound uses its clique number
/// (sub-instance monotonicity) and the upper bound its strong chromatic
/// number (colouring construction), in addition to the complete-instance
/// bounds on `n` qubits.
pub fn phi_bounds(n: usize, k: usize, g: Option<&ConnectivityHypergraph>) -> PhiBounds {
    let k = k.max(1);
    let n = n.max(k);
    let mut sources = Vec::new();
    let (lower, upper) = match g {
        None => (lower_for(n, k, &mut sources, ""), upper_for(n, k, &mut sources, "")),
        Some(g) => {
            let mut lower = 3u64.pow(k as u32);
            push(&mut sources, "3^k", "lower", lower);
            if let Ok(omega) = g.clique_number() {
                if omega >= k {
                    lower = lower.max(lower_for(omega, k, &mut sources, "clique:"));
                }
            }
            let mut upper = upper_for(g.n().max(k), k, &mut sources, "complete:");
            let chi = g.strong_chromatic_number().colours.max(k);
            upper = upper.min(upper_for(chi, k, &mut sources, "colouring:"));
            (lower, upper)
        }
    };
    PhiBounds { lower, upper, exact: lower == upper, sources }
}
