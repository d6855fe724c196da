use std::fmt::Write as _;
use std::path::Path;

use super::{CoverInstance, SolverError};

const TERMS_PER_LINE: usize = 8;

fn var(inst: &CoverInstance, c: usize) -> String {
    format!("z_{}", inst.candidate(c))
}

fn push_sum(out: &mut String, terms: impl Iterator<Item = String>) {
    for (i, t) in terms.enumerate() {
        if i > 0 {
            out.push_str(if i % TERMS_PER_LINE == 0 { "\n   + " } else { " + " });
        }
        out.push_str(&t);
    }
}

/// The instance as a CPLEX LP file: one binary `z_<string>` per candidate,
/// minimize their sum, one `>= 1` row per requirement.
pub fn ilp_string(inst: &CoverInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ minimal Pauli cover: {} qubits, {} requirements", inst.n(), inst.universe().len());
    out.push_str("Minimize\n obj: ");
    push_sum(&mut out, (0..inst.num_candidates()).map(|c| var(inst, c)));
    out.push_str("\nSubject To\n");
    let mut cands = Vec::new();
    for (r, req) in inst.universe().iter().enumerate() {
        let subset: Vec<String> = req.subset.iter().map(|q| q.to_string()).collect();
        let assignment: String = req.assignment.iter().map(|a| a.symbol()).collect();
        let _ = write!(out, " c_{}_{}: ", subset.join("_"), assignment);
        inst.covering_candidates(r, &mut cands);
        push_sum(&mut out, cands.iter().map(|&c| var(inst, c as usize)));
        out.push_str(" >= 1\n");
    }
    out.push_str("Binary\n");
    for c in 0..inst.num_candidates() {
        let _ = writeln!(out, " {}", var(inst, c));
    }
    out.push_str("End\n");
    out
}

/// Writes [`ilp_string`] to `path`.
pub fn ilp_export(inst: &CoverInstance, path: impl AsRef<Path>) -> Result<(), SolverError> {
    std::fs::write(path, ilp_string(inst))?;
    Ok(())
}
