//! Command-line front end: `forward`, `synth`, `invert` and `analyze`.
//!
//! Every subcommand validates the scenario and overrides first, computes all
//! outputs in memory, and only then creates the run directory and writes.
//! Exit codes: 0 success, 1 usage/configuration/I-O error, 2 numerical
//! non-convergence.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::convergence::{EXACT_ORDER, GROWTH_SAFETY};
use crate::discretization::{
    sup_norm, DISK_SCHEME, INTERVAL_SCHEME, MU_FULL_ROW_LIMIT, RESONANCE_GUARD,
};
use crate::error::{Error, Result};
use crate::experiments::{
    build_grids, convergence_report, evaluate, synthesize, write_cross_section_csv,
    write_reconstruction_csv, InversionSetup, Scenario, CONVERGENCE_ORDER,
};
use crate::forward::{
    born_partial_sum, check_contraction_conditions, fixed_point_solve, write_term_norms_csv,
    ConditionReport, FixedPointOptions, FixedPointReport, ForwardModel, TermCache, TermNorm,
};
use crate::inverse::{LinearizedMap, Parameterization, RegularizedPseudoinverse, ScatteringData};

#[derive(Debug, Parser)]
#[command(name = "kerr-born", version, about = "Forward and inverse Born series for the Kerr-Helmholtz equation")]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fixed-point solve and Born partial sums on the synthesis grid.
    Forward(Common),
    /// Synthesize scattering data.
    Synth(Common),
    /// Reconstruct the medium from scattering data.
    Invert(DataArgs),
    /// Convergence constants and radii.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Inverse series order M.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker thread cap (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub synthesis_resolution: Option<usize>,
    #[arg(long)]
    pub inversion_resolution: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scattering data (default: `<out>/phi.csv`).
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Also check the first inverse term against the radius for the data.
    #[arg(long)]
    pub check_data: bool,
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Forward(c) | Command::Synth(c) => c,
        Command::Invert(d) => &d.common,
        Command::Analyze(a) => &a.data.common,
    }
}

/// Scenario with overrides applied and validated.
pub fn load_scenario(c: &Common) -> Result<Scenario> {
    let mut s = Scenario::load(&c.scenario)?;
    if let Some(m) = c.order {
        s.order = m;
    }
    if let Some(t) = c.tau {
        s.tau = t;
    }
    if let Some(n) = c.noise {
        s.noise = n;
    }
    if let Some(seed) = c.seed {
        s.seed = seed;
    }
    if let Some(r) = c.synthesis_resolution {
        s.resolution.synthesis = r;
    }
    if let Some(r) = c.inversion_resolution {
        s.resolution.inversion = r;
    }
    if c.threads == Some(0) {
        return Err(Error::Config("--threads must be positive".into()));
    }
    s.validate()?;
    build_grids(&s)?;
    Ok(s)
}

fn execute(cmd: &Command) -> Result<i32> {
    let c = common(cmd);
    let scenario = load_scenario(c)?;
    if let Some(n) = c.threads {
        // the global pool can only be set once per process
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread cap not applied: {e}");
        }
    }
    let data_path = |d: &DataArgs| d.data.clone().unwrap_or_else(|| d.common.out.join("phi.csv"));
    let (files, code) = match cmd {
        Command::Forward(_) => cmd_forward(&scenario)?,
        Command::Synth(_) => cmd_synth(&scenario)?,
        Command::Invert(d) => cmd_invert(&scenario, &read_data(&data_path(d))?)?,
        Command::Analyze(a) => {
            let data = if a.check_data {
                Some(read_data(&data_path(&a.data))?)
            } else {
                None
            };
            cmd_analyze(&scenario, data.as_ref())?
        }
    };
    let name = match cmd {
        Command::Forward(_) => "forward",
        Command::Synth(_) => "synth",
        Command::Invert(_) => "invert",
        Command::Analyze(_) => "analyze",
    };
    write_outputs(&c.out, name, &scenario, c.threads, files)?;
    Ok(code)
}

fn read_data(path: &Path) -> Result<ScatteringData> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot open data file {}: {e}", path.display())))?;
    ScatteringData::read_csv(std::io::BufReader::new(f))
}

type Files = Vec<(&'static str, Vec<u8>)>;

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(v)?;
    buf.push(b'\n');
    Ok(buf)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: String,
    versions: serde_json::Value,
    parameters: serde_json::Value,
    scenario: &'a Scenario,
    outputs: Vec<&'a str>,
}

/// SHA-256 of the effective scenario serialized as TOML.
pub fn config_hash(s: &Scenario) -> Result<String> {
    let text = s.to_toml_string()?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

fn write_outputs(out: &Path, command: &str, s: &Scenario, threads: Option<usize>, files: Files) -> Result<()> {
    let version = env!("CARGO_PKG_VERSION");
    let manifest = Manifest {
        command,
        config_hash: config_hash(s)?,
        versions: serde_json::json!({
            "kerr-born": version,
            "discretization": version,
            "forward": version,
            "convergence": version,
            "inverse": version,
            "experiments": version,
        }),
        parameters: serde_json::json!({
            "order": s.order,
            "tau": s.tau,
            "noise": s.noise,
            "seed": s.seed,
            "born_order": s.born_order,
            "resolution": s.resolution,
            "threads": threads,
            "forward": s.forward,
            "scheme": match s.domain {
                crate::discretization::DomainKind::Interval => INTERVAL_SCHEME,
                crate::discretization::DomainKind::Disk => DISK_SCHEME,
            },
            "resonance_guard": RESONANCE_GUARD,
            "mu_full_row_limit": MU_FULL_ROW_LIMIT,
            "growth_estimator": "tail-ratio",
            "growth_safety_factor": GROWTH_SAFETY,
            "exact_nu_order": EXACT_ORDER,
            "nu_sequence_order": CONVERGENCE_ORDER,
            "pinv_norm": "spectral norm of the truncated pseudoinverse",
            "data_norm": "root mean square over (source, receiver)",
            "parameter_norm": "sup over alpha and beta",
            "noise_model": "additive gaussian, sigma = noise * rms(phi)",
            "float_format": "17 significant digits",
        }),
        scenario: s,
        outputs: files.iter().map(|(n, _)| *n).collect(),
    };
    let manifest = json(&manifest)?;
    std::fs::create_dir_all(out)?;
    for (name, bytes) in files.iter().chain(std::iter::once(&("manifest.json", manifest))) {
        let tmp = out.join(format!(".{name}.tmp"));
        std::fs::write(&tmp, bytes)?;
        std::fs::rename(&tmp, out.join(name))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SourceForward {
    index: usize,
    scale: f64,
    wavenumber: f64,
    fixed_point: Option<FixedPointReport>,
    error: Option<String>,
    residual_history: Option<Vec<f64>>,
    conditions: ConditionReport,
}

#[derive(Serialize)]
struct ForwardReport {
    grid: crate::discretization::GridMetadata,
    mu: f64,
    born_order: usize,
    all_converged: bool,
    sources: Vec<SourceForward>,
}

fn cmd_forward(s: &Scenario) -> Result<(Files, i32)> {
    use rayon::prelude::*;
    let (grid, _) = build_grids(s)?;
    let model = ForwardModel::new(grid.clone(), &s.sources.expand())?;
    let zeta = s.truth_on(&grid)?;
    let mus: Vec<f64> = model.solvers().iter().map(|x| x.estimate_mu().value).collect();
    let results: Vec<(SourceForward, Vec<TermNorm>)> = (0..model.source_count())
        .into_par_iter()
        .map(|i| -> Result<_> {
            let solver = model.solver(i);
            let bg = model.background(i);
            let u0n = sup_norm(&bg.values);
            let mu = mus[model.solver_index(i)];
            let conditions = check_contraction_conditions(&zeta, u0n, mu, s.forward.gamma)?;
            let opts = FixedPointOptions {
                tol: s.forward.tol * u0n.max(1.0),
                max_iter: s.forward.max_iter,
                gamma: s.forward.gamma,
            };
            let (report, error, history, reference) = match fixed_point_solve(solver, &zeta, &bg.values, &opts) {
                Ok((u, r)) => (Some(r), None, None, Some(u)),
                Err(Error::NonConvergence { residuals, .. }) => {
                    (None, Some("fixed point did not converge".to_string()), Some(residuals), None)
                }
                Err(e) => return Err(e),
            };
            let (_, norms) = born_partial_sum(
                model.context(i),
                &zeta,
                s.born_order,
                reference.as_deref(),
                &mut TermCache::new(true),
            )?;
            Ok((
                SourceForward {
                    index: i,
                    scale: bg.source.scale,
                    wavenumber: bg.source.wavenumber,
                    fixed_point: report,
                    error,
                    residual_history: history,
                    conditions,
                },
                norms,
            ))
        })
        .collect::<Result<_>>()?;
    let mut terms = Vec::new();
    {
        use std::io::Write;
        let mut first = true;
        for (src, norms) in &results {
            let mut buf = Vec::new();
            write_term_norms_csv(&mut buf, norms)?;
            let text = String::from_utf8(buf).expect("ascii");
            for (j, line) in text.lines().enumerate() {
                if j == 0 {
                    if first {
                        writeln!(terms, "source,{line}")?;
                        first = false;
                    }
                } else {
                    writeln!(terms, "{},{line}", src.index)?;
                }
            }
        }
    }
    let all = results.iter().all(|(r, _)| r.fixed_point.is_some());
    let report = ForwardReport {
        grid: grid.metadata(),
        mu: mus.iter().copied().fold(0.0, f64::max),
        born_order: s.born_order,
        all_converged: all,
        sources: results.into_iter().map(|(r, _)| r).collect(),
    };
    if !all {
        eprintln!("warning: fixed-point iteration did not converge for every source");
    }
    Ok((
        vec![("forward_report.json", json(&report)?), ("terms.csv", terms)],
        if all { 0 } else { 2 },
    ))
}

fn cmd_synth(s: &Scenario) -> Result<(Files, i32)> {
    let (data, summary) = synthesize(s)?;
    let mut phi = Vec::new();
    data.write_csv(&mut phi)?;
    Ok((vec![("phi.csv", phi), ("synth_report.json", json(&summary)?)], 0))
}

#[derive(Serialize)]
struct InvertReport<'a> {
    diagnostics: &'a crate::inverse::InverseDiagnostics,
    errors: crate::experiments::ErrorReport,
    convergence: &'a crate::convergence::ConvergenceReport,
    unknowns: usize,
    data_norm: &'static str,
    parameter_norm: &'static str,
}

fn cmd_invert(s: &Scenario, data: &ScatteringData) -> Result<(Files, i32)> {
    let setup = InversionSetup::new(s, data)?;
    let rec = setup.reconstruct(data, s.order)?;
    // the radius warning is logged by `reconstruct`
    let errors = evaluate(s, &setup.param, &rec)?;
    let truth = s.truth_on(&setup.grid)?;
    let mut recon = Vec::new();
    write_reconstruction_csv(&mut recon, &setup.param, &rec.zeta, Some(&truth))?;
    let mut cross = Vec::new();
    write_cross_section_csv(&mut cross, &errors.cross_section)?;
    let mut conv = setup.convergence.clone();
    conv.check_data(rec.diagnostics.first_term_norm);
    let report = InvertReport {
        diagnostics: &rec.diagnostics,
        errors,
        convergence: &conv,
        unknowns: setup.param.len(),
        data_norm: "root mean square over (source, receiver)",
        parameter_norm: "sup over alpha and beta",
    };
    Ok((
        vec![
            ("recon.csv", recon),
            ("crosssection.csv", cross),
            ("report.json", json(&report)?),
        ],
        0,
    ))
}

fn cmd_analyze(s: &Scenario, data: Option<&ScatteringData>) -> Result<(Files, i32)> {
    let mut report = match data {
        Some(d) => {
            let setup = InversionSetup::new(s, d)?;
            let first = setup.pinv.apply(d.values())?;
            let mut r = setup.convergence.clone();
            r.check_data(sup_norm(&first));
            r
        }
        None => {
            let (_, grid) = build_grids(s)?;
            let model = ForwardModel::new(grid.clone(), &s.sources.expand())?;
            let receivers = grid.boundary().to_vec();
            let param = Parameterization::new(grid.clone(), s.region.select(&grid), s.unknowns)?;
            let map = LinearizedMap::assemble(&model, &param, &receivers)?;
            let pinv = RegularizedPseudoinverse::new(map.matrix(), s.tau)?;
            convergence_report(model.mu(), model.nu0(), Some(pinv.norm()))?
        }
    };
    report.parameter_norm = "sup over alpha and beta".into();
    Ok((vec![("convergence.json", json(&report)?)], 0))
}
