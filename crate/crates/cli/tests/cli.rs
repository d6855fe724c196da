use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use otomo::direction_design::pauli_to_directions;
use otomo::marginal_design::{presets, verify_cover, ConnectivityHypergraph, PauliSet};
use otomo::tomography_sim::{dicke_state, expected_counts, settings_id};
use serde_json::Value;
use tempfile::TempDir;

fn otomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otomo")).args(args).env_remove("OTOMO_THREADS").output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = otomo(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(args: &[&str]) -> i32 {
    otomo(args).status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn exact_design_of_four_qubit_pairs() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "c4.pauli");
    ok(&["design-pauli", "--preset", "complete:4:2", "--method", "exact", "--out", s(&out)]);
    let set = PauliSet::parse_text(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(set.len(), 9);
    assert!(verify_cover(&set, &ConnectivityHypergraph::complete(4, 2).unwrap()).unwrap().complete);
    let report = json(&p(&dir, "c4.pauli.report.json"));
    assert_eq!(report["report"]["optimal"], true);
    assert_eq!(report["report"]["size"], 9);
    assert_eq!(report["verification"]["complete"], true);
    assert!(report["manifest"]["command"].is_array());
}

#[test]
fn ring_and_grid_designs() {
    let dir = TempDir::new().unwrap();
    let ring = p(&dir, "ring.pauli");
    ok(&["design-pauli", "--preset", "ring:7:3", "--method", "exact", "--out", s(&ring)]);
    assert_eq!(json(&p(&dir, "ring.pauli.report.json"))["report"]["size"], 27);
    let grid = p(&dir, "grid.pauli");
    ok(&["design-pauli", "--preset", "grid16", "--method", "colouring", "--out", s(&grid)]);
    let set = PauliSet::parse_text(&std::fs::read_to_string(&grid).unwrap()).unwrap();
    assert_eq!(set.len(), 9);
    assert!(verify_cover(&set, &ConnectivityHypergraph::grid16()).unwrap().complete);
}

#[test]
fn connectivity_file_and_lp_export() {
    let dir = TempDir::new().unwrap();
    let graph = p(&dir, "g.json");
    std::fs::write(&graph, r#"{"n": 3, "edges": [[0, 1], [1, 2]]}"#).unwrap();
    let lp = p(&dir, "g.lp");
    let out = p(&dir, "g.pauli");
    ok(&["design-pauli", "--connectivity", s(&graph), "--method", "exact", "--lp", s(&lp), "--out", s(&out)]);
    assert!(std::fs::read_to_string(&lp).unwrap().contains("Minimize"));
    assert_eq!(json(&p(&dir, "g.pauli.report.json"))["report"]["size"], 9);
}

#[test]
fn unusable_bases_are_exit_two() {
    assert_eq!(code(&["design-pauli", "--preset", "complete:5:2", "--method", "recursive", "--base", "nonsense"]), 2);
    assert_eq!(code(&["design-pauli", "--preset", "complete:4:3", "--method", "recursive"]), 2);
}

#[test]
fn invalid_inputs_are_exit_two() {
    assert_eq!(code(&["design-pauli", "--preset", "nosuch"]), 2);
    assert_eq!(code(&["design-pauli"]), 2);
    assert_eq!(code(&["simulate", "--state", "ghz:3", "--settings", "pauli9_2q", "--shots", "10"]), 2);
    assert_eq!(code(&["simulate", "--state", "dicke:2:1", "--settings", "/no/such/file", "--shots", "10"]), 2);
    assert_eq!(code(&["analyze", "samples", "--sigma", "-1"]), 2);
    assert_eq!(code(&["design-directions", "--n", "2", "--k", "3"]), 2);
    assert_eq!(code(&["design-pauli", "--preset", "complete:4:2", "--threads", "0"]), 2);
}

#[test]
fn incomplete_settings_are_exit_three() {
    let dir = TempDir::new().unwrap();
    let file = p(&dir, "bad.pauli");
    std::fs::write(&file, "XX\nYY\nZZ\n").unwrap();
    assert_eq!(code(&["analyze", "sigma", "--settings", s(&file)]), 3);
}

#[test]
fn sigma_of_presets() {
    let v: Value = serde_json::from_slice(&ok(&["analyze", "sigma", "--settings", "pauli9_2q"]).stdout).unwrap();
    assert!((v["sigma_max"].as_f64().unwrap() - 5.0).abs() < 1e-9);
    let v: Value = serde_json::from_slice(&ok(&["analyze", "sigma", "--settings", "paper_table_a1"]).stdout).unwrap();
    assert!((v["sigma_max"].as_f64().unwrap() - 7.78).abs() <= 0.02);
    assert_eq!(v["per_subset"].as_array().unwrap().len(), 15);
}

#[test]
fn sample_ratio_example() {
    let v: Value =
        serde_json::from_slice(&ok(&["analyze", "samples", "--sigma", "6.52", "--radius", "0.1"]).stdout).unwrap();
    assert!((v["ratio"].as_f64().unwrap() - 1.70).abs() < 0.03);
    assert!(v["samples"].as_u64().unwrap() > v["reference_samples"].as_u64().unwrap());
}

#[test]
fn random_directions_are_complete_and_reproducible() {
    let a = ok(&["design-directions", "--n", "6", "--k", "2", "--method", "random", "--seed", "1"]).stdout;
    let b = ok(&["design-directions", "--n", "6", "--k", "2", "--method", "random", "--seed", "1"]).stdout;
    assert_eq!(a, b);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["directions"]["m"], 9);
    assert_eq!(v["report"]["complete"], true);
    assert_eq!(v["report"]["subsets"].as_array().unwrap().len(), 15);
}

#[test]
fn directions_file_feeds_analysis() {
    let dir = TempDir::new().unwrap();
    let file = p(&dir, "d.json");
    ok(&["design-directions", "--n", "4", "--k", "2", "--seed", "3", "--out", s(&file)]);
    let design = json(&file);
    let v: Value = serde_json::from_slice(&ok(&["analyze", "sigma", "--settings", s(&file)]).stdout).unwrap();
    assert!((v["sigma_max"].as_f64().unwrap() - design["report"]["sigma_max"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn portfolio_sweep_rows() {
    let out = ok(&["analyze", "portfolio-sweep", "--n", "4", "--k", "2", "--seeds", "5", "--sweep-grid", "0,0.5", "--restarts", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), "kind,seed,w2,mean_abs_det,std_abs_det,sigma_max");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.iter().filter(|r| r.starts_with("random,")).count(), 5);
    assert_eq!(rows.iter().filter(|r| r.starts_with("optimized,")).count(), 2);
}

#[test]
fn small_simulation_totals() {
    let v: Value = serde_json::from_slice(
        &ok(&["simulate", "--state", "dicke:2:1", "--settings", "pauli9_2q", "--shots", "10", "--seed", "2"]).stdout,
    )
    .unwrap();
    let counts = v["counts"].as_array().unwrap();
    assert_eq!(counts.len(), 9);
    for c in counts {
        assert_eq!(c["outcomes"].as_object().unwrap().values().map(|x| x.as_u64().unwrap()).sum::<u64>(), 10);
    }
}

#[test]
fn simulate_and_reconstruct_are_byte_identical_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let c = p(&dir, "c.json");
    let sim = ["simulate", "--state", "dicke:6:3", "--settings", "pauli12_6q", "--shots", "2000", "--seed", "9", "--out", s(&c)];
    ok(&sim);
    let first = std::fs::read(&c).unwrap();
    ok(&sim);
    assert_eq!(first, std::fs::read(&c).unwrap());
    let r = p(&dir, "r.json");
    let run = |threads: &str| {
        ok(&["reconstruct", "--counts", s(&c), "--settings", "pauli12_6q", "--subsets", "0-1,2-5,3-4", "--seed", "4", "--threads", threads, "--out", s(&r)]);
        std::fs::read(&r).unwrap()
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    let (a, b): (Value, Value) = (serde_json::from_slice(&one).unwrap(), serde_json::from_slice(&run("3")).unwrap());
    assert_eq!(a["marginals"], b["marginals"]);
}

#[test]
fn counts_for_other_settings_are_rejected() {
    let dir = TempDir::new().unwrap();
    let c = p(&dir, "c.json");
    ok(&["simulate", "--state", "dicke:6:3", "--settings", "pauli12_6q", "--shots", "100", "--out", s(&c)]);
    assert_eq!(code(&["reconstruct", "--counts", s(&c), "--settings", "paper_table_a1"]), 2);
    assert_eq!(code(&["reconstruct", "--counts", s(&p(&dir, "missing.json")), "--settings", "pauli12_6q"]), 2);
    std::fs::write(p(&dir, "junk.json"), "{\"settings\": 3}").unwrap();
    assert_eq!(code(&["reconstruct", "--counts", s(&p(&dir, "junk.json")), "--settings", "pauli12_6q"]), 2);
    assert_eq!(code(&["reconstruct", "--counts", s(&c), "--settings", "pauli12_6q", "--mc-repeats", "2"]), 2);
}

#[test]
fn exact_counts_reconstruct_to_the_truth() {
    let dir = TempDir::new().unwrap();
    let ds = pauli_to_directions(&presets::pauli12_6q());
    let rho = dicke_state(6, 3).unwrap();
    let rec = expected_counts(&rho, &ds, 1_000_000_000_000).unwrap();
    assert_eq!(rec.settings, settings_id(&ds));
    let c = p(&dir, "exact.json");
    std::fs::write(&c, serde_json::to_string(&rec).unwrap()).unwrap();
    for (method, floor) in [("mle", 0.9999), ("linear", 1.0 - 1e-8)] {
        let out = p(&dir, &format!("{method}.json"));
        ok(&["reconstruct", "--counts", s(&c), "--settings", "pauli12_6q", "--method", method, "--reference", "dicke:6:3", "--out", s(&out)]);
        let marginals = json(&out)["marginals"].as_array().unwrap().clone();
        assert_eq!(marginals.len(), 15);
        for m in &marginals {
            assert!(m["fidelity"].as_f64().unwrap() >= floor, "{method}: {}", m["fidelity"]);
        }
    }
    let lin = json(&p(&dir, "linear.json"));
    let truth = otomo::tomography_sim::partial_trace(&rho, &[0, 1]).unwrap();
    let rows = lin["marginals"][0]["estimate"].as_array().unwrap();
    for (i, row) in rows.iter().enumerate() {
        for (j, z) in row.as_array().unwrap().iter().enumerate() {
            let t = truth.matrix()[(i, j)];
            assert!((z[0].as_f64().unwrap() - t.re).abs() < 1e-8 && (z[1].as_f64().unwrap() - t.im).abs() < 1e-8);
        }
    }
}

#[test]
fn monte_carlo_error_bars() {
    let dir = TempDir::new().unwrap();
    let c = p(&dir, "c.json");
    ok(&["simulate", "--state", "dicke:6:3", "--settings", "pauli12_6q", "--shots", "20000", "--seed", "1", "--out", s(&c)]);
    let out = p(&dir, "r.json");
    ok(&[
        "reconstruct", "--counts", s(&c), "--settings", "pauli12_6q", "--subsets", "0-1", "--reference", "dicke:6:3",
        "--mc-repeats", "100", "--out", s(&out),
    ]);
    let m = &json(&out)["marginals"][0];
    let (mean, std) = (m["mc_mean"].as_f64().unwrap(), m["mc_std"].as_f64().unwrap());
    assert!(mean > 0.98 && mean <= 1.0);
    assert!(std > 0.0 && std < 0.01);
}

#[test]
fn written_files_reload() {
    let dir = TempDir::new().unwrap();
    let pauli = p(&dir, "c5.pauli");
    ok(&["design-pauli", "--preset", "complete:5:2", "--method", "greedy", "--out", s(&pauli)]);
    let set = PauliSet::parse_text(&std::fs::read_to_string(&pauli).unwrap()).unwrap();
    let v: Value = serde_json::from_slice(&ok(&["analyze", "sigma", "--settings", s(&pauli)]).stdout).unwrap();
    assert_eq!(v["per_subset"].as_array().unwrap().len(), 10);
    let c = p(&dir, "c.json");
    ok(&["simulate", "--state", "dicke:2:1", "--settings", "pauli9_2q", "--shots", "50", "--out", s(&c)]);
    let rec: otomo::CountsRecord = serde_json::from_str(&std::fs::read_to_string(&c).unwrap()).unwrap();
    assert_eq!(rec.num_settings(), 9);
    assert!(set.len() >= 11);
}
