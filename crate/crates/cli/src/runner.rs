//! Executes a validated configuration and writes its artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bsgni::analysis::{error_on_grid, rate_table, EvalGrid, NodalSolution};
use bsgni::experiments::{spatial_ratios, ExperimentError, RunOutput, Solver, StepRule};
use bsgni::time::SdirkScheme;
use thiserror::Error;

use crate::config::{ExperimentConfig, Mode};

/// Environment variable that replaces the default output root `results`.
pub const OUTPUT_ROOT_ENV: &str = "BSGNI_OUTPUT_ROOT";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{label}: {source}")]
    Numerical {
        label: String,
        #[source]
        source: Box<ExperimentError>,
    },
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

/// File contents produced by one configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub errors_csv: String,
    pub rates_csv: String,
    pub table_md: String,
    /// `(file name, contents)` under `snapshots/`.
    pub snapshots: Vec<(String, String)>,
    pub notes: Vec<String>,
}

/// Fixed-width scientific notation with 12 significant digits.
pub fn sci(v: f64) -> String {
    format!("{v:.11e}")
}

fn short(v: f64) -> String {
    format!("{v:.4e}")
}

pub fn scheme_tag(scheme: &SdirkScheme) -> &'static str {
    if scheme.order == 3 {
        "third-order"
    } else {
        "midpoint"
    }
}

fn scheme_title(scheme: &SdirkScheme) -> &'static str {
    if scheme.order == 3 {
        "gamma=(3+sqrt3)/6"
    } else {
        "gamma=1/2"
    }
}

/// Output directory: `$BSGNI_OUTPUT_ROOT/<output>` (default root `results`);
/// absolute `output` paths are used as given.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    if cfg.output.is_absolute() {
        return cfg.output.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("results"));
    root.join(&cfg.output)
}

fn numerical(cfg: &ExperimentConfig, what: String) -> impl Fn(ExperimentError) -> RunError + '_ {
    move |source| RunError::Numerical {
        label: format!("{} ({what})", cfg.label),
        source: Box::new(source),
    }
}

fn snapshot_csv(sol: &NodalSolution) -> String {
    let mut out = String::from("x,eta,u,depth\n");
    for ((xi, eta), u) in sol.basis().nodes().iter().zip(sol.eta()).zip(sol.u()) {
        let x = sol.map().to_physical(*xi);
        let _ = writeln!(out, "{},{},{},{}", sci(x), sci(*eta), sci(*u), sci(1.0 + eta));
    }
    out
}

fn push_snapshots(cfg: &ExperimentConfig, run: &RunOutput, scheme: &SdirkScheme, out: &mut Artifacts) {
    for (t, sol) in &run.snapshots {
        let name = format!(
            "{}_n{}_{}_k{:e}_t{}.csv",
            cfg.label,
            run.n,
            scheme_tag(scheme),
            run.k,
            t
        );
        out.snapshots.push((name, snapshot_csv(sol)));
    }
}

/// Runs the experiment and returns the artifact contents.
pub fn execute(cfg: &ExperimentConfig) -> Result<Artifacts, RunError> {
    let mut out = Artifacts::default();
    if let Some(m) = cfg.problem().compatibility_warning() {
        out.notes
            .push(format!("initial data and boundary values differ by {m:.3e} at t = 0"));
    }
    match cfg.mode {
        Mode::Time => execute_time(cfg, &mut out)?,
        Mode::Space => execute_space(cfg, &mut out)?,
        Mode::Single => execute_single(cfg, &mut out)?,
    }
    Ok(out)
}

fn execute_time(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), RunError> {
    let exact = cfg.exact.as_ref().expect("validated");
    let ks: Vec<f64> = cfg
        .step_rules()
        .iter()
        .map(|r| match r {
            StepRule::Absolute(k) => *k,
            StepRule::MeshMultiple(_) => unreachable!("validated"),
        })
        .collect();
    let problem = cfg.problem();
    out.errors_csv.push_str("n,gamma,k,norm,error\n");
    out.rates_csv.push_str("n,gamma,norm,k,ratio,rate\n");
    let _ = writeln!(out.table_md, "# {}\n", cfg.label);
    let _ = writeln!(out.table_md, "{}\n", describe(cfg));
    for &n in &cfg.ns {
        let solver = Solver::new(&problem, n).map_err(numerical(cfg, format!("N={n}")))?;
        let grids = cfg
            .norms
            .iter()
            .map(|spec| EvalGrid::for_spec(cfg.map, spec, n))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| numerical(cfg, format!("N={n}"))(e.into()))?;
        // records[scheme][norm]
        let mut records = Vec::new();
        for scheme in &cfg.schemes {
            let mut errors = vec![Vec::new(); cfg.norms.len()];
            for &k in &ks {
                let what = format!("N={n}, {}, k={k}", scheme_tag(scheme));
                let run = solver
                    .run(scheme, k, &cfg.snapshots)
                    .map_err(numerical(cfg, what.clone()))?;
                for (j, (spec, grid)) in cfg.norms.iter().zip(&grids).enumerate() {
                    let e = error_on_grid(&run.solution, exact, cfg.t_end, spec, grid)
                        .map_err(|e| numerical(cfg, what.clone())(e.into()))?;
                    let _ = writeln!(
                        out.errors_csv,
                        "{n},{},{},{},{}",
                        sci(scheme.gamma),
                        sci(k),
                        spec.label(),
                        sci(e)
                    );
                    errors[j].push(e);
                }
                push_snapshots(cfg, &run, scheme, out);
            }
            let recs = errors
                .into_iter()
                .map(|e| {
                    rate_table(scheme_tag(scheme), ks.clone(), e)
                        .map_err(|e| numerical(cfg, format!("N={n}"))(e.into()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            for (spec, rec) in cfg.norms.iter().zip(&recs) {
                for (i, (ratio, rate)) in rec.ratios.iter().zip(&rec.rates).enumerate() {
                    let _ = writeln!(
                        out.rates_csv,
                        "{n},{},{},{},{},{}",
                        sci(scheme.gamma),
                        spec.label(),
                        sci(ks[i + 1]),
                        sci(*ratio),
                        sci(*rate)
                    );
                }
            }
            records.push(recs);
        }
        for (j, spec) in cfg.norms.iter().enumerate() {
            let _ = writeln!(out.table_md, "N = {n}, {} norm\n", spec.label());
            let mut header = String::from("| k |");
            let mut rule = String::from("|---|");
            for scheme in &cfg.schemes {
                let _ = write!(header, " {} error ({}) | rate |", spec.label(), scheme_title(scheme));
                rule.push_str("---|---|");
            }
            let _ = writeln!(out.table_md, "{header}\n{rule}");
            for (i, k) in ks.iter().enumerate() {
                let mut row = format!("| {} |", short(*k));
                for recs in &records {
                    let rate = if i == 0 {
                        String::new()
                    } else {
                        format!("{:.2}", recs[j].rates[i - 1])
                    };
                    let _ = write!(row, " {} | {rate} |", short(recs[j].errors[i]));
                }
                let _ = writeln!(out.table_md, "{row}");
            }
            out.table_md.push('\n');
        }
    }
    Ok(())
}

fn execute_space(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), RunError> {
    let scheme = cfg.schemes[0];
    let step = cfg.step_rules()[0];
    let study = spatial_ratios(&cfg.problem(), &cfg.ns, &scheme, step, &cfg.norms, &cfg.snapshots)
        .map_err(numerical(cfg, format!("N={:?}", cfg.ns)))?;
    out.errors_csv.push_str("n,norm,difference\n");
    out.rates_csv.push_str("n,norm,e_n,log2_e_n,ln_e_n\n");
    for (spec, diffs) in cfg.norms.iter().zip(&study.differences) {
        for (n, d) in cfg.ns.iter().zip(diffs) {
            let _ = writeln!(out.errors_csv, "{n},{},{}", spec.label(), sci(*d));
        }
    }
    for (spec, rows) in cfg.norms.iter().zip(&study.rows) {
        for r in rows {
            let _ = writeln!(
                out.rates_csv,
                "{},{},{},{},{}",
                r.n,
                spec.label(),
                sci(r.e),
                sci(r.log2),
                sci(r.ln)
            );
        }
    }
    for run in &study.runs {
        push_snapshots(cfg, run, &scheme, out);
    }
    let _ = writeln!(out.table_md, "# {}\n", cfg.label);
    let _ = writeln!(out.table_md, "{}\n", describe(cfg));
    let mut header = String::from("| N |");
    let mut rule = String::from("|---|");
    for spec in &cfg.norms {
        let _ = write!(header, " E_N ({}) | log2(E_N) | log(E_N) |", spec.label());
        rule.push_str("---|---|---|");
    }
    let _ = writeln!(out.table_md, "{header}\n{rule}");
    for (i, n) in cfg.ns.iter().enumerate().take(study.rows[0].len()) {
        let mut row = format!("| {n} |");
        for rows in &study.rows {
            let r = rows[i];
            let _ = write!(row, " {:.4} | {:.4} | {:.4} |", r.e, r.log2, r.ln);
        }
        let _ = writeln!(out.table_md, "{row}");
    }
    Ok(())
}

fn execute_single(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<(), RunError> {
    let problem = cfg.problem();
    out.errors_csv.push_str("n,gamma,k,norm,error\n");
    out.rates_csv.push_str("n,gamma,norm,k,ratio,rate\n");
    let _ = writeln!(out.table_md, "# {}\n", cfg.label);
    let _ = writeln!(out.table_md, "{}\n", describe(cfg));
    let _ = writeln!(
        out.table_md,
        "| N | scheme | k | steps | max stage iterations | error |\n|---|---|---|---|---|---|"
    );
    for &n in &cfg.ns {
        let solver = Solver::new(&problem, n).map_err(numerical(cfg, format!("N={n}")))?;
        for scheme in &cfg.schemes {
            for rule in cfg.step_rules() {
                let k = rule.step(&cfg.map, n);
                let what = format!("N={n}, {}, k={k}", scheme_tag(scheme));
                let run = solver
                    .run(scheme, k, &cfg.snapshots)
                    .map_err(numerical(cfg, what.clone()))?;
                let mut shown = Vec::new();
                if let Some(exact) = &cfg.exact {
                    for spec in &cfg.norms {
                        let grid =
                            EvalGrid::for_spec(cfg.map, spec, n).map_err(|e| numerical(cfg, what.clone())(e.into()))?;
                        let e = error_on_grid(&run.solution, exact, cfg.t_end, spec, &grid)
                            .map_err(|e| numerical(cfg, what.clone())(e.into()))?;
                        let _ = writeln!(
                            out.errors_csv,
                            "{n},{},{},{},{}",
                            sci(scheme.gamma),
                            sci(k),
                            spec.label(),
                            sci(e)
                        );
                        shown.push(format!("{} {}", spec.label(), short(e)));
                    }
                }
                let _ = writeln!(
                    out.table_md,
                    "| {n} | {} | {} | {} | {} | {} |",
                    scheme_tag(scheme),
                    short(k),
                    run.steps,
                    run.max_stage_iters,
                    if shown.is_empty() {
                        "-".to_string()
                    } else {
                        shown.join(", ")
                    }
                );
                push_snapshots(cfg, &run, scheme, out);
            }
        }
    }
    Ok(())
}

fn describe(cfg: &ExperimentConfig) -> String {
    let p = cfg.params;
    let theta = p.theta2.map(|t| format!(", theta2 = {t:.6}")).unwrap_or_default();
    format!(
        "b = {:.6}, c = {:.6}, d = {:.6}{theta}; interval [{}, {}]; mu = {}; T = {}; initial data {}; boundary data {}",
        p.b,
        p.c,
        p.d,
        cfg.map.left(),
        cfg.map.right(),
        cfg.mu.value(),
        cfg.t_end,
        cfg.raw.get("initial").unwrap_or("-"),
        cfg.raw.get("boundary").unwrap_or("homogeneous")
    )
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    fs::write(path, contents).map_err(|e| RunError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Writes `errors.csv`, `rates.csv`, `table.md`, `meta.txt` and `snapshots/`.
pub fn write_artifacts(
    dir: &Path,
    cfg: &ExperimentConfig,
    artifacts: &Artifacts,
    wall_seconds: f64,
) -> Result<(), RunError> {
    let mkdir = |p: &Path| {
        fs::create_dir_all(p).map_err(|e| RunError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        })
    };
    mkdir(dir)?;
    write_file(&dir.join("errors.csv"), &artifacts.errors_csv)?;
    write_file(&dir.join("rates.csv"), &artifacts.rates_csv)?;
    write_file(&dir.join("table.md"), &artifacts.table_md)?;
    if !artifacts.snapshots.is_empty() {
        let snap = dir.join("snapshots");
        mkdir(&snap)?;
        for (name, contents) in &artifacts.snapshots {
            write_file(&snap.join(name), contents)?;
        }
    }
    let mut meta = String::new();
    for (k, v) in cfg.raw.entries() {
        let _ = writeln!(meta, "{k} = {v}");
    }
    let _ = writeln!(meta, "resolved-mode = {}", cfg.mode);
    let _ = writeln!(meta, "code-version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(meta, "wall-time-seconds = {wall_seconds:.3}");
    for note in &artifacts.notes {
        let _ = writeln!(meta, "note = {note}");
    }
    write_file(&dir.join("meta.txt"), &meta)
}

/// Executes and writes; returns the output directory.
pub fn run_to_disk(cfg: &ExperimentConfig) -> Result<(PathBuf, Artifacts), RunError> {
    let clock = Instant::now();
    let artifacts = execute(cfg)?;
    let dir = output_dir(cfg);
    write_artifacts(&dir, cfg, &artifacts, clock.elapsed().as_secs_f64())?;
    Ok((dir, artifacts))
}
