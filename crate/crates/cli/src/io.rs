//! Input resolution, manifests and output writing.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use otomo::cover_solver::SolverError;
use otomo::direction_design::{paper_table_a1, pauli_to_directions, DirectionError, DirectionSet};
use otomo::marginal_design::{presets, ConnectivityHypergraph, DesignError, PauliSet};
use otomo::tomography_sim::{dicke_state, noise_state, DensityMatrix, TomographyError};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Failure carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INCOMPLETE: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INPUT, message: message.into() }
    }

    pub fn incomplete(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INCOMPLETE, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError { code: EXIT_NUMERICAL, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::IncompleteBase { .. } => CliError::incomplete(e.to_string()),
            _ => CliError::input(e.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Design(d) => d.into(),
            _ => CliError::input(e.to_string()),
        }
    }
}

impl From<DirectionError> for CliError {
    fn from(e: DirectionError) -> Self {
        match e {
            DirectionError::Incomplete { .. } => CliError::incomplete(e.to_string()),
            _ => CliError::input(e.to_string()),
        }
    }
}

impl From<TomographyError> for CliError {
    fn from(e: TomographyError) -> Self {
        match e {
            TomographyError::Direction(d) => d.into(),
            TomographyError::Numerical(_) => CliError::numerical(e.to_string()),
            _ => CliError::input(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Command line, seed, input hashes and tool version of one invocation.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub seed: Option<u64>,
    /// Input path or preset name to `sha256:<hex>` of its bytes.
    pub inputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(seed: Option<u64>) -> Self {
        Manifest {
            tool: "otomo".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: std::env::args().skip(1).collect(),
            seed,
            inputs: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, name: &str, bytes: &[u8]) {
        self.inputs.insert(name.to_string(), sha256(bytes));
    }
}

pub fn sha256(bytes: &[u8]) -> String {
    let hex: String = Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

pub fn read_file(path: &Path, manifest: &mut Manifest) -> CliResult<String> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    manifest.record(&path.display().to_string(), text.as_bytes());
    Ok(text)
}

/// Writes `text` to `out`, or to stdout without a path.
pub fn write_output(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn canonical<T: Serialize>(value: &T) -> CliResult<String> {
    otomo::json::to_canonical_string(value).map_err(|e| CliError::numerical(e.to_string()))
}

/// `value` (a JSON object) with a `manifest` key added.
pub fn with_manifest<T: Serialize>(value: &T, manifest: &Manifest) -> CliResult<Value> {
    let mut v = serde_json::to_value(value).map_err(|e| CliError::numerical(e.to_string()))?;
    let m = serde_json::to_value(manifest).map_err(|e| CliError::numerical(e.to_string()))?;
    match v.as_object_mut() {
        Some(obj) => {
            obj.insert("manifest".into(), m);
            Ok(v)
        }
        None => Err(CliError::numerical("output is not a JSON object")),
    }
}

/// A measurement plan in direction form.
pub struct Settings {
    pub directions: DirectionSet,
}

/// Resolves a preset name (`pauli9_2q`, `pauli12_6q`, `paper_table_a1`, ...)
/// or a file holding Pauli text, PauliSet JSON, DirectionSet JSON, or a
/// `design-directions` output.
pub fn load_settings(spec: &str, manifest: &mut Manifest) -> CliResult<Settings> {
    if spec == "paper_table_a1" {
        manifest.inputs.insert(spec.into(), "preset".into());
        return Ok(Settings { directions: paper_table_a1() });
    }
    if let Some(p) = presets::by_name(spec) {
        manifest.inputs.insert(spec.into(), "preset".into());
        return Ok(Settings { directions: pauli_to_directions(&p) });
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::input(format!("{spec:?} is neither a settings preset nor a file")));
    }
    let text = read_file(path, manifest)?;
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{spec}: {e}")))?;
        let inner = v.get("directions").cloned().unwrap_or(v);
        if inner.get("angles").is_some() {
            let ds: DirectionSet = serde_json::from_value(inner).map_err(|e| CliError::input(format!("{spec}: {e}")))?;
            return Ok(Settings { directions: ds });
        }
        let p: PauliSet = serde_json::from_value(inner).map_err(|e| CliError::input(format!("{spec}: {e}")))?;
        return Ok(Settings { directions: pauli_to_directions(&p) });
    }
    let p = PauliSet::parse_text(&text)?;
    if p.is_empty() {
        return Err(CliError::input(format!("{spec}: no settings")));
    }
    Ok(Settings { directions: pauli_to_directions(&p) })
}

pub fn load_hypergraph(
    connectivity: Option<&Path>,
    preset: Option<&str>,
    manifest: &mut Manifest,
) -> CliResult<ConnectivityHypergraph> {
    match (connectivity, preset) {
        (Some(path), None) => {
            let text = read_file(path, manifest)?;
            serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
        }
        (None, Some(name)) => {
            manifest.inputs.insert(name.into(), "preset".into());
            Ok(ConnectivityHypergraph::preset(name)?)
        }
        _ => Err(CliError::input("exactly one of --connectivity and --preset is required")),
    }
}

/// `dicke:N:M` or `noise:P`.
pub fn parse_state(spec: &str) -> CliResult<DensityMatrix> {
    let bad = || CliError::input(format!("invalid state {spec:?}; expected dicke:N:M or noise:P"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["dicke", n, m] => {
            let n: usize = n.parse().map_err(|_| bad())?;
            let m: usize = m.parse().map_err(|_| bad())?;
            Ok(dicke_state(n, m)?)
        }
        ["noise", p] => {
            let p: f64 = p.parse().map_err(|_| bad())?;
            Ok(noise_state(p)?)
        }
        _ => Err(bad()),
    }
}

/// `all-pairs`, `all-triples`, or `0-1,2-5,...`.
pub fn parse_subsets(spec: &str, n: usize) -> CliResult<Vec<Vec<usize>>> {
    let all = |k: usize| {
        if k > n {
            Err(CliError::input(format!("{spec} needs at least {k} qubits")))
        } else {
            Ok(otomo::marginal_design::k_subsets(n, k))
        }
    };
    match spec {
        "all-pairs" => all(2),
        "all-triples" => all(3),
        _ => spec
            .split(',')
            .map(|s| {
                let mut q: Vec<usize> = s
                    .split('-')
                    .map(|x| x.trim().parse().map_err(|_| CliError::input(format!("invalid subset {s:?}"))))
                    .collect::<CliResult<_>>()?;
                q.sort_unstable();
                if q.windows(2).any(|w| w[0] == w[1]) || q.iter().any(|&x| x >= n) {
                    return Err(CliError::input(format!("invalid subset {s:?} for {n} qubits")));
                }
                Ok(q)
            })
            .collect(),
    }
}

/// `--threads`, else `OTOMO_THREADS`, else the available parallelism.
pub fn resolve_threads(flag: Option<usize>) -> CliResult<usize> {
    if let Some(t) = flag {
        return if t == 0 { Err(CliError::input("--threads must be positive")) } else { Ok(t) };
    }
    if let Ok(v) = std::env::var("OTOMO_THREADS") {
        return match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(t),
            _ => Err(CliError::input(format!("OTOMO_THREADS={v:?} is not a positive integer"))),
        };
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets() {
        assert_eq!(parse_subsets("all-pairs", 3).unwrap(), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(parse_subsets("2-0,1-3", 4).unwrap(), vec![vec![0, 2], vec![1, 3]]);
        assert!(parse_subsets("0-0", 4).is_err());
        assert!(parse_subsets("0-4", 4).is_err());
        assert!(parse_subsets("all-triples", 2).is_err());
    }

    #[test]
    fn states() {
        assert_eq!(parse_state("dicke:2:1").unwrap().n_qubits(), 2);
        assert_eq!(parse_state("noise:0.5").unwrap().n_qubits(), 6);
        for bad in ["dicke:2", "ghz:3", "noise:2", "dicke:2:3"] {
            assert_eq!(parse_state(bad).unwrap_err().code, EXIT_INPUT, "{bad}");
        }
    }
}
