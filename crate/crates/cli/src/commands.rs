use std::path::Path as FsPath;

use rayon::prelude::*;

use gptw_core::ansatz::{constant, perturb, VortexAnsatz};
use gptw_core::field::io::load;
use gptw_core::functionals::{self, action, certify, Params};
use gptw_core::minimize::{classify, minimize_with_observer, CriticalPoint, ExistenceRow, MinimizeOptions};
use gptw_core::mountainpass::{
    find_saddle, init_path, path_bound, relax_path, Path, RelaxOptions, SaddleOptions, SaddleResult,
};
use gptw_core::report::fmt_f64;
use gptw_core::spectrum::{
    constancy_scan, hessian_spectrum_at_constant, ScanConfig, SpectrumReport, ThresholdReport,
};
use gptw_core::TorusGrid;

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::output::{display, OutDir};

pub fn run(cfg: &RunConfig, file: Option<&FsPath>) -> Result<(), CliError> {
    match cfg.command {
        Command::Minimize => minimize(cfg),
        Command::Mp => mountain_pass(cfg),
        Command::Spectrum => spectrum(cfg),
        Command::Scan => scan(cfg),
        Command::Testfn => test_function(cfg),
        Command::Certify => certify_file(cfg, file.expect("file argument")),
        Command::Info => info(file.expect("file argument")),
    }
}

fn out_dir(cfg: &RunConfig) -> Result<OutDir, CliError> {
    Ok(OutDir::create(cfg)?.expect("commands with artifacts always have an output directory"))
}

fn grid(cfg: &RunConfig) -> Result<TorusGrid, CliError> {
    Ok(TorusGrid::cubic(cfg.dim, cfg.size, cfg.period())?)
}

const START_AMPLITUDE: f64 = 0.5;
const START_BAND: usize = 4;
/// Iterations between progress log lines.
const LOG_EVERY: usize = 50;

fn minimize(cfg: &RunConfig) -> Result<(), CliError> {
    let g = grid(cfg)?;
    let p = Params::new(cfg.c)?;
    let mut opts = MinimizeOptions::for_grid(&g);
    if let Some(t) = cfg.tol {
        opts.grad_tol = t;
    }
    if let Some(m) = cfg.max_iters {
        opts.max_iters = m;
    }
    let mut starts = Vec::new();
    if let Some(&r) = cfg.radii.first() {
        starts.push(("ansatz".to_string(), VortexAnsatz::new(r)?.field(&g)?));
    }
    for i in 0..cfg.starts {
        let seed = cfg.seed.wrapping_add(i as u64);
        let f = perturb(&constant(0.0, g), START_AMPLITUDE, START_BAND, seed)?;
        starts.push((format!("seed{seed}"), f));
    }
    if starts.is_empty() {
        return Err(CliError::Usage("minimize needs R or starts >= 1".into()));
    }
    let dir = out_dir(cfg)?;
    let runs = starts
        .par_iter()
        .map(|(_, init)| {
            let mut log = String::from("iteration action residual\n");
            let line = |i: usize, a: f64, r: f64| format!("{i} {} {}\n", fmt_f64(a), fmt_f64(r));
            let mut last = None;
            let cp = minimize_with_observer(init, &p, &opts, |s| {
                if s.iteration % LOG_EVERY == 0 {
                    log.push_str(&line(s.iteration, s.action, s.residual));
                    last = Some(s.iteration);
                }
            })?;
            if last != Some(cp.iterations) {
                log.push_str(&line(cp.iterations, cp.report.action, cp.residual));
            }
            Ok((cp, log))
        })
        .collect::<Result<Vec<(CriticalPoint, String)>, CliError>>()?;
    let mut results = Vec::with_capacity(runs.len());
    for ((label, _), (cp, log)) in starts.iter().zip(runs) {
        dir.write(&format!("logs/{label}.log"), log.as_bytes())?;
        results.push(cp);
    }
    let rows: Vec<String> = starts
        .iter()
        .zip(&results)
        .map(|((label, _), cp)| {
            let row = ExistenceRow {
                c: p.c,
                period: g.period(),
                action: cp.report.action,
                residual: cp.residual,
                classification: cp.classification,
                converged: cp.converged,
            };
            format!("{label},{}", row.csv())
        })
        .collect();
    dir.csv("runs.csv", &format!("start,{}", ExistenceRow::CSV_HEADER), &rows)?;

    // lowest action, converged runs first
    let best = results
        .iter()
        .min_by(|a, b| {
            (!a.converged, a.report.action)
                .partial_cmp(&(!b.converged, b.report.action))
                .expect("finite actions")
        })
        .expect("at least one start");
    dir.field("minimizer.gptw", &best.field, p.c)?;
    dir.images("minimizer", &best.field)?;
    dir.csv(
        "certificate.csv",
        functionals::CSV_HEADER,
        &[functionals::csv_row(&g, p.c, &best.report, &best.certificate)],
    )?;
    let history: Vec<String> = best
        .history
        .iter()
        .enumerate()
        .map(|(i, a)| format!("{i},{}", fmt_f64(*a)))
        .collect();
    dir.csv("history.csv", "iteration,action", &history)?;
    println!(
        "minimizer: action {} residual {:.3e} class {} after {} iterations -> {}",
        fmt_f64(best.report.action),
        best.residual,
        best.classification,
        best.iterations,
        display(&dir.path("minimizer.gptw"))
    );
    if !best.converged {
        return Err(CliError::NotConverged(format!(
            "minimization stopped at residual {:e} (tolerance {:e})",
            best.residual, opts.grad_tol
        )));
    }
    Ok(())
}

fn write_path(dir: &OutDir, name: &str, path: &Path, p: &Params) -> Result<(), CliError> {
    dir.csv(&format!("{name}.csv"), Path::CSV_HEADER, &path.csv_rows(p))
}

fn mountain_pass(cfg: &RunConfig) -> Result<(), CliError> {
    let g = grid(cfg)?;
    let p = Params::new(cfg.c)?;
    let ansatz = VortexAnsatz::new(cfg.radii[0])?;
    let initial = init_path(&g, &ansatz, cfg.nodes)?;
    let bound = path_bound(&initial, &p);
    let dir = out_dir(cfg)?;
    write_path(&dir, "initial_path", &initial, &p)?;

    let mut relax = RelaxOptions::default();
    if let Some(m) = cfg.max_iters {
        relax.max_sweeps = m;
    }
    let relaxed = relax_path(&initial, &p, &relax)?;
    write_path(&dir, "path", &relaxed.path, &p)?;
    for (j, node) in relaxed.path.nodes().iter().enumerate() {
        dir.field(&format!("path/node_{j:03}.gptw"), node, p.c)?;
    }
    let history: Vec<String> = relaxed
        .history
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{i},{}", fmt_f64(*v)))
        .collect();
    dir.csv("relax.csv", "sweep,gamma", &history)?;
    println!(
        "path: M {} gamma {} after {} sweeps{}",
        fmt_f64(bound),
        fmt_f64(relaxed.gamma),
        relaxed.sweeps,
        if relaxed.stalled { " (stalled)" } else { "" }
    );

    let mut opts = SaddleOptions::for_grid(&g);
    if let Some(t) = cfg.tol {
        opts.grad_tol = t;
    }
    opts.seed = cfg.seed;
    let s = find_saddle(&relaxed.path, &p, bound, &opts)?;
    dir.field("saddle.gptw", &s.saddle.field, p.c)?;
    dir.field("witness.gptw", &s.index_witness, p.c)?;
    dir.images("saddle", &s.saddle.field)?;
    dir.csv("saddle.csv", SaddleResult::CSV_HEADER, &[s.csv_row(p.c)])?;
    dir.csv(
        "certificate.csv",
        functionals::CSV_HEADER,
        &[functionals::csv_row(&g, p.c, &s.saddle.report, &s.saddle.certificate)],
    )?;
    println!(
        "saddle: action {} residual {:.3e} witness quotient {:.6} class {} -> {}",
        fmt_f64(s.saddle.report.action),
        s.saddle.residual,
        s.witness_quotient,
        s.saddle.classification,
        display(&dir.path("saddle.gptw"))
    );
    Ok(())
}

fn spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    let g = grid(cfg)?;
    let p = Params::new(cfg.c)?;
    let dir = out_dir(cfg)?;
    let r = hessian_spectrum_at_constant(cfg.theta, &p, &g, cfg.count)?;
    dir.csv("spectrum.csv", SpectrumReport::CSV_HEADER, &r.csv_rows())?;
    println!(
        "smallest eigenvalue {} (symbol {}), positive: {}",
        fmt_f64(r.smallest[0].0),
        fmt_f64(r.analytic_min),
        r.positive
    );
    Ok(())
}

fn scan(cfg: &RunConfig) -> Result<(), CliError> {
    let mut sc = ScanConfig::new(cfg.c, cfg.periods.clone());
    sc.starts = cfg.starts;
    sc.resolution = cfg.size;
    sc.dim = cfg.dim;
    sc.seed = cfg.seed;
    if let Some(m) = cfg.max_iters {
        sc.max_iters = m;
    }
    sc.ansatz = cfg.radii.first().map(|&r| VortexAnsatz::new(r)).transpose()?;
    let dir = out_dir(cfg)?;
    let r = constancy_scan(&sc)?;
    dir.csv("scan.csv", ThresholdReport::CSV_HEADER, &r.csv_rows())?;
    dir.csv("summary.csv", ThresholdReport::SUMMARY_HEADER, &[r.summary_row()])?;
    let show = |x: Option<f64>| x.map(fmt_f64).unwrap_or_else(|| "none".into());
    println!(
        "case-1 bound {} empirical onset {} first nonconstant {} plane-wave onset {}",
        fmt_f64(r.case1_bound),
        show(r.empirical_onset),
        show(r.first_nonconstant),
        fmt_f64(r.plane_wave_onset)
    );
    Ok(())
}

fn test_function(cfg: &RunConfig) -> Result<(), CliError> {
    let g = grid(cfg)?;
    let p = Params::new(cfg.c)?;
    let reports = cfg
        .radii
        .par_iter()
        .map(|&r| Ok(action(&VortexAnsatz::new(r)?.field(&g)?, &p)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let dir = out_dir(cfg)?;
    let rows: Vec<String> = cfg
        .radii
        .iter()
        .zip(&reports)
        .enumerate()
        .map(|(i, (r, a))| {
            let ratio = if i > 0 { fmt_f64(a.kinetic / reports[i - 1].kinetic) } else { String::new() };
            format!(
                "{},{},{},{},{},{}",
                fmt_f64(*r),
                fmt_f64(a.kinetic),
                fmt_f64(a.potential),
                fmt_f64(a.momentum),
                fmt_f64(a.action),
                ratio
            )
        })
        .collect();
    dir.csv("testfn.csv", "R,kinetic,potential,momentum,action,kinetic_ratio", &rows)?;
    let points: Vec<(f64, f64)> = cfg
        .radii
        .iter()
        .zip(&reports)
        .filter(|(_, a)| a.momentum > 0.0)
        .map(|(r, a)| (r.ln(), a.momentum.ln()))
        .collect();
    if points.len() >= 2 {
        let n = points.len() as f64;
        let mx = points.iter().map(|q| q.0).sum::<f64>() / n;
        let my = points.iter().map(|q| q.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|q| (q.0 - mx).powi(2)).sum();
        if sxx > 0.0 {
            let slope = points.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum::<f64>() / sxx;
            dir.csv("testfn_summary.csv", "momentum_slope", &[fmt_f64(slope)])?;
            println!("log-log momentum slope {slope:.4}");
        }
    }
    Ok(())
}

fn load_file(file: &FsPath) -> Result<gptw_core::field::io::FieldFile, CliError> {
    load(file).map_err(|e| CliError::Format(format!("{}: {e}", file.display())))
}

fn certify_file(cfg: &RunConfig, file: &FsPath) -> Result<(), CliError> {
    let ff = load_file(file)?;
    let c = if cfg.speed_from_file { ff.speed } else { cfg.c };
    let p = Params::new(c)?;
    let tol = cfg.tol.unwrap_or(p.cert_tol);
    let report = action(&ff.field, &p);
    let cert = certify(&ff.field, &p);
    let row = functionals::csv_row(ff.field.grid(), c, &report, &cert);
    print!("{}", gptw_core::report::csv_document(functionals::CSV_HEADER, &[row.clone()]));
    if let Some(dir) = OutDir::create(cfg)? {
        dir.csv("certificate.csv", functionals::CSV_HEADER, &[row])?;
    }
    if !cert.passes(tol) {
        return Err(CliError::NotConverged(format!(
            "certificate magnitude {:e} exceeds tolerance {tol:e}",
            cert.max_magnitude()
        )));
    }
    Ok(())
}

fn info(file: &FsPath) -> Result<(), CliError> {
    let ff = load_file(file)?;
    let f = &ff.field;
    let g = f.grid();
    let sizes: Vec<String> = g.sizes().iter().map(|m| m.to_string()).collect();
    println!("file: {}", file.display());
    println!("dimension: {}", g.dim());
    println!("points: {}", sizes.join(" x "));
    println!("period: {}", fmt_f64(g.period()));
    println!("spacing: {}", fmt_f64(g.spacing(0)));
    println!("speed: {}", fmt_f64(ff.speed));
    println!("l2 norm: {}", fmt_f64(f.l2_norm()));
    println!("max modulus: {}", fmt_f64(f.sup_norm()));
    println!("min modulus: {}", fmt_f64(f.min_modulus()));
    let mean = f.mean();
    println!("mean: {} {}", fmt_f64(mean.re), fmt_f64(mean.im));
    if let Ok(p) = Params::new(ff.speed) {
        println!("action: {}", fmt_f64(action(f, &p).action));
    }
    println!("classification: {}", classify(f, 1e-6));
    Ok(())
}
