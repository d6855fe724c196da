use super::{is_complete_cover, permutation_to_x, ConnectivityHypergraph, DesignError, PauliAxis, PauliSet, PauliString};

/// Built-in Pauli sets that cover all pairs of their qubits.
pub mod presets {
    use super::PauliSet;

    /// Nine settings covering every pair of four qubits.
    pub const PAULI9_4Q: [&str; 9] = ["XXXX", "ZYYX", "YZZX", "YYXY", "XZYY", "ZXZY", "ZZXZ", "YXYZ", "XYZZ"];

    /// Eleven settings covering every pair of five qubits (contains the all-X row).
    pub const PAULI11_5Q: [&str; 11] =
        ["XXXXX", "XXZYZ", "XYYYY", "XZYZX", "YXZZY", "YYZXX", "YZXYY", "YZYXZ", "ZXYYX", "ZYXZZ", "ZZZXY"];

    /// Twelve settings covering every pair of six qubits (contains the all-X row).
    pub const PAULI12_6Q: [&str; 12] = [
        "XXXXXX", "XXZYYZ", "XYYYZY", "XZZZXY", "YXXZZY", "YYYZXZ", "YYZXZZ", "YZYYYX", "ZXYXYY", "ZYXZYX", "ZZXYXZ",
        "ZZZXZX",
    ];

    pub fn pauli9_4q() -> PauliSet {
        PauliSet::parse_strings(&PAULI9_4Q).expect("valid preset")
    }

    /// The four-qubit set restricted to its first three qubits.
    pub fn pauli9_3q() -> PauliSet {
        pauli9_4q().select_columns(&[0, 1, 2])
    }

    /// All nine two-qubit strings `XX ... ZZ`.
    pub fn pauli9_2q() -> PauliSet {
        PauliSet::all_strings(2)
    }

    pub fn pauli11_5q() -> PauliSet {
        PauliSet::parse_strings(&PAULI11_5Q).expect("valid preset")
    }

    pub fn pauli12_6q() -> PauliSet {
        PauliSet::parse_strings(&PAULI12_6Q).expect("valid preset")
    }

    /// Looks a preset up by name (`pauli9_2q`, `pauli9_3q`, `pauli9_4q`, `pauli11_5q`, `pauli12_6q`).
    pub fn by_name(name: &str) -> Option<PauliSet> {
        match name {
            "pauli9_2q" | "pauli9" => Some(pauli9_2q()),
            "pauli9_3q" => Some(pauli9_3q()),
            "pauli9_4q" => Some(pauli9_4q()),
            "pauli11_5q" => Some(pauli11_5q()),
            "pauli12_6q" | "pauli12" => Some(pauli12_6q()),
            _ => None,
        }
    }
}

/// `3^k` settings on `k + 1` qubits covering every k-subset: all k-digit
/// strings followed by their digit sum mod 3.
pub fn parity_base(k: usize) -> PauliSet {
    let rows = (0..3usize.pow(k as u32)).map(|idx| {
        let head = PauliString::from_index(k, idx);
        let sum: usize = head.axes().iter().map(|a| a.index()).sum();
        let mut axes = head.axes().to_vec();
        axes.push(PauliAxis::from_index(sum % 3));
        PauliString::new(axes)
    });
    PauliSet::new(k + 1, rows.collect()).expect("distinct heads give distinct rows")
}

/// Copies the base columns onto `h` through a strong colouring: qubit `i`
/// receives the column of its colour. The base must cover every
/// `k`-subset of its own qubits, `k` being the largest edge size of `h`.
pub fn colouring_construction(h: &ConnectivityHypergraph, base: &PauliSet) -> Result<PauliSet, DesignError> {
    let k = h.max_edge_size().max(1);
    if !is_complete_cover(base, k) {
        return Err(DesignError::IncompleteBase { n: base.n(), k });
    }
    let colouring = h.strong_chromatic_number();
    if colouring.colours > base.n() {
        return Err(DesignError::BaseTooSmall { needed: colouring.colours, available: base.n() });
    }
    let rows = base
        .settings()
        .iter()
        .map(|s| PauliString::new(colouring.colouring.iter().map(|&c| s.get(c)).collect()));
    // rows can only coincide when fewer colours than base columns are used
    PauliSet::from_strings_dedup(h.n(), rows)
}

/// Whether the constant row shared by both blocks of the recursive
/// construction is merged into one setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowMerge {
    /// Relabel axes so both inputs contain the all-X row and keep it once.
    Merge,
    /// Keep both blocks in full (`m1 + m2` settings when the blocks can be
    /// made disjoint by a global axis relabelling of `b`).
    Keep,
}

/// Product construction: from pair-covers on `n1` and `n2` qubits, a
/// pair-cover on `n1 * n2` qubits. Qubit `x * n1 + z` takes column `z` of `a`
/// in the first block and column `x` of `b` in the second.
pub fn recursive_construction(a: &PauliSet, b: &PauliSet, merge: RowMerge) -> Result<PauliSet, DesignError> {
    for set in [a, b] {
        if set.n() < 2 || !is_complete_cover(set, 2) {
            return Err(DesignError::IncompleteBase { n: set.n(), k: 2 });
        }
    }
    let (n1, n2) = (a.n(), b.n());
    let (a, b) = match merge {
        RowMerge::Merge => (with_all_x(a), with_all_x(b)),
        RowMerge::Keep => (a.clone(), separate_constants(a, b)),
    };
    let first = a.settings().iter().map(|s| PauliString::new((0..n1 * n2).map(|q| s.get(q % n1)).collect()));
    let second = b.settings().iter().map(|s| PauliString::new((0..n1 * n2).map(|q| s.get(q / n1)).collect()));
    PauliSet::from_strings_dedup(n1 * n2, first.chain(second))
}

/// Relabels axes per qubit so that the set contains `X...X`, mapping the
/// lexicographically first row onto it when the all-X row is absent.
fn with_all_x(set: &PauliSet) -> PauliSet {
    let all_x = PauliString::constant(set.n(), PauliAxis::X);
    if set.contains(&all_x) {
        return set.clone();
    }
    let pivot = set.settings().iter().min().expect("non-empty set").clone();
    let perms: Vec<_> = pivot.axes().iter().map(|&a| permutation_to_x(a)).collect();
    set.relabel(&perms)
}

/// Cycles the axes of `b` globally until none of its constant rows equals a
/// constant row of `a`; returns `b` unchanged when no shift achieves that.
fn separate_constants(a: &PauliSet, b: &PauliSet) -> PauliSet {
    let constants = |set: &PauliSet| -> Vec<PauliAxis> {
        PauliAxis::ALL.into_iter().filter(|&c| set.contains(&PauliString::constant(set.n(), c))).collect()
    };
    let ca = constants(a);
    for shift in 0..3 {
        let perm = [0, 1, 2].map(|i| PauliAxis::from_index((i + shift) % 3));
        let shifted = b.relabel(&vec![perm; b.n()]);
        if constants(&shifted).iter().all(|c| !ca.contains(c)) {
            return shifted;
        }
    }
    b.clone()
}

/// Pair-cover on `n` qubits obtained by iterating the product construction
/// on `base` and keeping the first `n` columns. Its size is at most
/// `(m - 1) * ceil(log_alpha(n)) + 1` for a base of `m` settings on `alpha` qubits.
pub fn recursive_pauli_set(n: usize, base: &PauliSet) -> Result<PauliSet, DesignError> {
    let base = with_all_x(base);
    let mut current = base.clone();
    while current.n() < n {
        current = recursive_construction(&current, &base, RowMerge::Merge)?;
    }
    let columns: Vec<usize> = (0..n).collect();
    Ok(current.select_columns(&columns))
}
