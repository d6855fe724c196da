use std::path::{Path, PathBuf};
use std::time::Instant;

use otomo::cover_solver::{
    branch_and_bound, construction_incumbent, greedy_cover, ilp_string, lower_bound, CoverInstance, SolveBudget,
    SolveReport,
};
use otomo::direction_design::{
    completeness_check, continuous_samples_for_radius, optimize_directions, portfolio_objective, sample_ratio,
    sample_uniform_directions, samples_for_radius, sigma_max, subset_determinants, table_a1_partitions,
    confidence_epsilon, Constraint, DirectionSet, OptimizerConfig,
};
use otomo::marginal_design::{
    colouring_construction, phi_bounds, presets, recursive_pauli_set, verify_cover, ConnectivityHypergraph, PauliSet,
};
use otomo::tomography_sim::{
    fidelity, monte_carlo_errors, partial_trace, reconstruct_subsets, settings_id, simulate_counts, CountsRecord,
    Method, MleOptions, SamplingModel,
};
use serde::Serialize;
use serde_json::json;

use crate::io::{
    canonical, load_hypergraph, load_settings, parse_state, parse_subsets, read_file, resolve_threads, with_manifest,
    write_output, CliError, CliResult, Manifest,
};
use crate::{
    ConstraintKind, DesignDirectionsArgs, DesignPauliArgs, DirectionMethod, ModelKind, PauliMethod, ReconstructArgs,
    ReconstructMethod, SamplesArgs, SigmaArgs, SimulateArgs, SweepArgs,
};

fn base_preset(name: &str) -> CliResult<PauliSet> {
    presets::by_name(name).ok_or_else(|| CliError::input(format!("unknown base preset {name:?}")))
}

fn default_report_path(out: Option<&Path>) -> Option<PathBuf> {
    out.map(|p| {
        let mut s = p.as_os_str().to_owned();
        s.push(".report.json");
        PathBuf::from(s)
    })
}

/// Heuristic result in report form: no search, bound from the counting
/// arguments.
fn heuristic_report(h: &ConnectivityHypergraph, set: PauliSet, start: Instant) -> SolveReport {
    let k = h.max_edge_size();
    let bound = 3usize.pow(k as u32).max(phi_bounds(h.n(), k, Some(h)).lower as usize);
    SolveReport {
        size: set.len(),
        lower_bound: bound.min(set.len()),
        optimal: bound >= set.len(),
        solution: set,
        nodes_explored: 0,
        wall_time: start.elapsed(),
        budget_hit: false,
    }
}

pub fn design_pauli(a: &DesignPauliArgs) -> CliResult<()> {
    let mut manifest = Manifest::new(Some(a.seed));
    resolve_threads(a.threads)?;
    let h = load_hypergraph(a.connectivity.as_deref(), a.preset.as_deref(), &mut manifest)?;
    if let Some(lp) = &a.lp {
        write_output(Some(lp), &ilp_string(&CoverInstance::from_hypergraph(&h)?))?;
    }
    let start = Instant::now();
    let report = match a.method {
        PauliMethod::Exact => {
            let budget = match a.budget {
                Some(s) if !(s > 0.0) || !s.is_finite() => return Err(CliError::input("--budget must be positive")),
                Some(s) => SolveBudget::seconds(s),
                None => SolveBudget::unlimited(),
            };
            let inst = CoverInstance::from_hypergraph(&h)?;
            let incumbent = construction_incumbent(&h);
            branch_and_bound(&inst, budget, incumbent.as_ref())?
        }
        PauliMethod::Greedy => {
            let inst = CoverInstance::from_hypergraph(&h)?;
            let mut report = heuristic_report(&h, greedy_cover(&inst), start);
            report.lower_bound = report.lower_bound.max(lower_bound(&inst, &[]).min(report.size));
            report.optimal = report.lower_bound >= report.size;
            report
        }
        PauliMethod::Colouring => {
            let set = match &a.base {
                Some(name) => colouring_construction(&h, &base_preset(name)?)?,
                None => construction_incumbent(&h)
                    .ok_or_else(|| CliError::incomplete("no built-in base is large enough for this colouring"))?,
            };
            heuristic_report(&h, set, start)
        }
        PauliMethod::Recursive => {
            if h.max_edge_size() > 2 {
                return Err(CliError::input("the recursive construction covers pairs only"));
            }
            let bases = match &a.base {
                Some(name) => vec![base_preset(name)?],
                None => vec![presets::pauli9_4q(), presets::pauli11_5q(), presets::pauli12_6q()],
            };
            let mut best: Option<PauliSet> = None;
            for b in &bases {
                let set = if h.n() <= b.n() { b.select_columns(&(0..h.n()).collect::<Vec<_>>()) } else { recursive_pauli_set(h.n(), b)? };
                if best.as_ref().is_none_or(|x| set.len() < x.len()) {
                    best = Some(set);
                }
            }
            heuristic_report(&h, best.expect("at least one base"), start)
        }
    };
    let check = verify_cover(&report.solution, &h)?;
    if !check.complete {
        return Err(if report.budget_hit {
            CliError::incomplete("budget exhausted without a complete cover")
        } else {
            CliError::numerical(format!("produced set misses {} requirements", check.missing.len()))
        });
    }
    let header = format!(
        "# otomo design-pauli\n# manifest {}\n# size {} lower_bound {} optimal {}\n",
        serde_json::to_string(&manifest).map_err(|e| CliError::numerical(e.to_string()))?,
        report.size,
        report.lower_bound,
        report.optimal
    );
    write_output(a.out.as_deref(), &(header + &report.solution.to_text()))?;
    let doc = with_manifest(
        &json!({
            "report": report,
            "verification": {
                "complete": check.complete,
                "min_multiplicity": check.min_multiplicity,
                "max_multiplicity": check.max_multiplicity,
            },
        }),
        &manifest,
    )?;
    let text = canonical(&doc)?;
    match a.report.clone().or_else(|| default_report_path(a.out.as_deref())) {
        Some(p) => write_output(Some(&p), &text),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SubsetRow {
    subset: Vec<usize>,
    det: f64,
    sigma: f64,
}

fn direction_report(ds: &DirectionSet, k: usize, w2: f64) -> CliResult<serde_json::Value> {
    let check = completeness_check(ds, k, 1e-8)?;
    if !check.complete {
        return Err(CliError::incomplete(format!(
            "direction set is incomplete on {:?} (|det| = {:e})",
            check.worst_subset, check.worst_det
        )));
    }
    let sig = sigma_max(ds, k)?;
    let dets = subset_determinants(ds, k)?;
    let rows: Vec<SubsetRow> = dets
        .into_iter()
        .zip(&sig.per_subset)
        .map(|(d, s)| SubsetRow { subset: d.subset, det: d.det, sigma: s.sigma })
        .collect();
    let w1 = (1.0 - w2 * w2).sqrt();
    Ok(json!({
        "complete": true,
        "objective": portfolio_objective(ds, k, w1, w2)?,
        "sigma_max": sig.sigma_max,
        "subsets": rows,
        "w2": w2,
        "worst_det": check.worst_det,
    }))
}

pub fn design_directions(a: &DesignDirectionsArgs) -> CliResult<()> {
    let manifest = Manifest::new(Some(a.seed));
    resolve_threads(a.threads)?;
    if a.k == 0 || a.k > a.n {
        return Err(CliError::input(format!("k = {} for {} qubits", a.k, a.n)));
    }
    let m = 3usize.pow(a.k as u32);
    let ds = match a.method {
        DirectionMethod::Random => sample_uniform_directions(a.n, m, a.seed),
        DirectionMethod::Optimize => {
            let constraint = match a.constraint {
                ConstraintKind::Free => Constraint::Free,
                ConstraintKind::Orthonormal if a.n == 6 && a.k == 2 => Constraint::Orthonormal(table_a1_partitions()),
                ConstraintKind::Orthonormal => {
                    Constraint::Orthonormal(vec![(0..m / 3).map(|t| [3 * t, 3 * t + 1, 3 * t + 2]).collect(); a.n])
                }
            };
            let cfg = OptimizerConfig {
                restarts: a.restarts,
                max_iters: a.max_iters,
                ..OptimizerConfig::with_w2(a.w2, constraint)?
            };
            optimize_directions(a.n, a.k, &cfg, a.seed)?.directions
        }
    };
    let report = direction_report(&ds, a.k, a.w2)?;
    let doc = with_manifest(&json!({ "directions": ds, "report": report }), &manifest)?;
    write_output(a.out.as_deref(), &canonical(&doc)?)
}

pub fn analyze_sigma(a: &SigmaArgs) -> CliResult<()> {
    let mut manifest = Manifest::new(None);
    let s = load_settings(&a.settings, &mut manifest)?;
    let report = sigma_max(&s.directions, a.k)?;
    let doc = with_manifest(&json!({ "k": a.k, "sigma_max": report.sigma_max, "per_subset": report.per_subset }), &manifest)?;
    write_output(a.out.as_deref(), &canonical(&doc)?)
}

pub fn analyze_samples(a: &SamplesArgs) -> CliResult<()> {
    let mut manifest = Manifest::new(None);
    let sigma = match (&a.settings, a.sigma) {
        (Some(spec), _) => sigma_max(&load_settings(spec, &mut manifest)?.directions, a.k)?.sigma_max,
        (None, Some(s)) => s,
        (None, None) => return Err(CliError::input("one of --sigma and --settings is required")),
    };
    let samples = samples_for_radius(sigma, a.radius, a.delta)?;
    let reference = samples_for_radius(a.reference, a.radius, a.delta)?;
    let doc = with_manifest(
        &json!({
            "delta": a.delta,
            "radius": a.radius,
            "sigma": sigma,
            "reference_sigma": a.reference,
            "samples": samples,
            "reference_samples": reference,
            "continuous_samples": continuous_samples_for_radius(sigma, a.radius, a.delta),
            "ratio": sample_ratio(sigma, a.reference, a.radius),
            "integer_ratio": samples as f64 / reference as f64,
            "epsilon_at_samples": confidence_epsilon(samples as f64, a.delta),
        }),
        &manifest,
    )?;
    write_output(a.out.as_deref(), &canonical(&doc)?)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
    (mean, var.sqrt())
}

pub fn portfolio_sweep(a: &SweepArgs) -> CliResult<()> {
    let threads = resolve_threads(a.threads)?;
    if a.k == 0 || a.k > a.n || a.seeds == 0 {
        return Err(CliError::input("need 0 < k <= n and at least one seed"));
    }
    let grid: Vec<f64> = a
        .sweep_grid
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| CliError::input(format!("invalid w2 value {s:?}"))))
        .collect::<CliResult<_>>()?;
    let m = 3usize.pow(a.k as u32);
    let mut jobs: Vec<(String, u64, Option<f64>)> = (0..a.seeds).map(|s| ("random".to_string(), s, None)).collect();
    jobs.extend(grid.iter().map(|&w| ("optimized".to_string(), a.seed, Some(w))));
    let rows = parallel(&jobs, threads, |(kind, seed, w2)| -> CliResult<Vec<String>> {
        let ds = match w2 {
            None => sample_uniform_directions(a.n, m, *seed),
            Some(w) => {
                let cfg = OptimizerConfig { restarts: a.restarts, ..OptimizerConfig::with_w2(*w, Constraint::Free)? };
                optimize_directions(a.n, a.k, &cfg, *seed)?.directions
            }
        };
        let dets: Vec<f64> = subset_determinants(&ds, a.k)?.into_iter().map(|d| d.det).collect();
        let (mean, std) = mean_std(&dets);
        let sigma = sigma_max(&ds, a.k).map(|r| r.sigma_max).unwrap_or(f64::INFINITY);
        Ok(vec![
            kind.clone(),
            seed.to_string(),
            w2.map_or(String::new(), otomo::json::format_float),
            otomo::json::format_float(mean),
            otomo::json::format_float(std),
            otomo::json::format_float(sigma),
        ])
    })?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::numerical(e.to_string());
    w.write_record(["kind", "seed", "w2", "mean_abs_det", "std_abs_det", "sigma_max"]).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::numerical(e.to_string()))?;
    let manifest = serde_json::to_string(&Manifest::new(Some(a.seed))).map_err(|e| CliError::numerical(e.to_string()))?;
    let text = format!("# manifest {manifest}\n{}", String::from_utf8_lossy(&bytes));
    write_output(a.out.as_deref(), &text)
}

/// Runs `f` over `items` on up to `threads` threads, keeping item order and
/// returning the first error in item order.
fn parallel<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> CliResult<R> + Sync,
) -> CliResult<Vec<R>> {
    let chunk = items.len().div_ceil(threads.max(1)).max(1);
    let results: Vec<CliResult<R>> = std::thread::scope(|scope| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| scope.spawn(|| c.iter().map(&f).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    });
    results.into_iter().collect()
}

pub fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let mut manifest = Manifest::new(Some(a.seed));
    let rho = parse_state(&a.state)?;
    manifest.inputs.insert(a.state.clone(), "state".into());
    let s = load_settings(&a.settings, &mut manifest)?;
    if s.directions.n() != rho.n_qubits() {
        return Err(CliError::input(format!(
            "settings act on {} qubits, the state on {}",
            s.directions.n(),
            rho.n_qubits()
        )));
    }
    let model = match a.model {
        ModelKind::Multinomial => SamplingModel::Multinomial,
        ModelKind::Poisson => SamplingModel::Poisson,
    };
    let rec = simulate_counts(&rho, &s.directions, a.shots, a.seed, model)?;
    write_output(a.out.as_deref(), &canonical(&with_manifest(&rec, &manifest)?)?)
}

#[derive(Serialize)]
struct MarginalRow {
    #[serde(flatten)]
    result: serde_json::Value,
    fidelity: Option<f64>,
    mc_mean: Option<f64>,
    mc_std: Option<f64>,
}

pub fn reconstruct(a: &ReconstructArgs) -> CliResult<()> {
    let mut manifest = Manifest::new(Some(a.seed));
    let threads = resolve_threads(a.threads)?;
    let text = read_file(&a.counts, &mut manifest)?;
    let rec: CountsRecord =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", a.counts.display())))?;
    rec.validate()?;
    let s = load_settings(&a.settings, &mut manifest)?;
    let ds = &s.directions;
    if rec.settings != settings_id(ds) {
        return Err(CliError::input(format!(
            "counts were recorded for settings {}, but {} has id {}",
            rec.settings,
            a.settings,
            settings_id(ds)
        )));
    }
    let subsets = parse_subsets(&a.subsets, rec.n)?;
    let reference = a.reference.as_deref().map(parse_state).transpose()?;
    if let Some(r) = &reference {
        if r.n_qubits() != rec.n {
            return Err(CliError::input(format!("reference has {} qubits, the record {}", r.n_qubits(), rec.n)));
        }
    }
    if a.mc_repeats > 0 && reference.is_none() {
        return Err(CliError::input("--mc-repeats needs --reference"));
    }
    let method = match a.method {
        ReconstructMethod::Mle => Method::Mle,
        ReconstructMethod::Linear => Method::Linear,
    };
    let opts = MleOptions { seed: a.seed, ..MleOptions::default() };
    let results = reconstruct_subsets(&rec, ds, &subsets, method, &opts, threads)?;
    let mc = match (&reference, a.mc_repeats) {
        (Some(r), repeats) if repeats > 0 => Some(monte_carlo_errors(&rec, ds, &subsets, r, repeats, a.seed, &opts, threads)?),
        _ => None,
    };
    let mut rows = Vec::with_capacity(results.len());
    for (i, res) in results.iter().enumerate() {
        let fid = match &reference {
            Some(r) => Some(fidelity(res.physical_state().matrix(), partial_trace(r, &res.subset)?.matrix())?),
            None => None,
        };
        rows.push(MarginalRow {
            result: serde_json::to_value(res).map_err(|e| CliError::numerical(e.to_string()))?,
            fidelity: fid,
            mc_mean: mc.as_ref().map(|m| m[i].mean),
            mc_std: mc.as_ref().map(|m| m[i].std),
        });
    }
    let doc = with_manifest(&json!({ "settings": rec.settings, "marginals": rows }), &manifest)?;
    write_output(a.out.as_deref(), &canonical(&doc)?)
}
