//! TOML-config driven command-line front end.
//!
//! One config file per run (section reference on [`RunConfig`]); subcommands
//! select the pipeline. Artifacts are deterministic: CSV series use fixed
//! 17-significant-digit float formatting, JSON reports embed a stable
//! `config_hash` of the canonicalized configuration. Exit codes: 0 success,
//! 1 configuration/validation error, 2 numerical failure.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    resolvent_growth, resolvent_growth_refined, spectral_abscissa, DecayKind, ResolventGrowth,
};
use crate::coefficients::CoefficientModel;
use crate::discretization::{
    DiscretizationParams, GeneratorSystem, InitialPreset, TransmissionParams,
};
use crate::evolution::{run_simulation, EvolutionParams};
use crate::kernel::MemoryKernel;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Run configuration: TOML with sections `[coefficient]`, `[kernel]`,
/// `[discretization]`, `[evolution]`, `[analysis]`, `[output]`. Every key is
/// optional with a documented default; unknown keys are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub coefficient: CoefficientSection,
    pub kernel: KernelSection,
    pub discretization: DiscretizationSection,
    pub evolution: EvolutionSection,
    pub analysis: AnalysisSection,
    pub output: OutputSection,
}

/// `[coefficient]`: wave coefficients on (0,1) — either the power-law keys
/// a(x) = x^a_exponent, b(x) = b_amplitude·x^b_exponent, or a sampled
/// `coefficient_table`, not both.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientSection {
    /// Exponent of a(x) = x^p (p ≥ 0). Default 0.5.
    pub a_exponent: Option<f64>,
    /// Amplitude of b(x) = c_b·x^q (finite). Default 0.2.
    pub b_amplitude: Option<f64>,
    /// Exponent of b(x) = c_b·x^q (q ≥ 0). Default 0.5.
    pub b_exponent: Option<f64>,
    /// Tabulated alternative: samples on a strictly increasing grid spanning
    /// \[0,1\], linearly interpolated. Excludes the power-law keys.
    pub coefficient_table: Option<CoefficientTable>,
}

/// Inline table for sampled coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientTable {
    pub x: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// `[kernel]`: exponential memory kernel μ(s) = k²e^{−ks} (unit first
/// moment) and its truncated history grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    /// Decay rate k > 0. Default 1.0.
    pub kernel_k: f64,
    /// Tail-mass bound for the truncation horizon, in (0,1). Default 1e−8.
    pub history_eps_tail: f64,
    /// Number of history slices (≥ 2). Default 64.
    pub history_nodes: usize,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            kernel_k: 1.0,
            history_eps_tail: 1e-8,
            history_nodes: 64,
        }
    }
}

/// `[discretization]`: meshes and the transmission parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationSection {
    /// Wave cells (≥ 2). Default 64.
    pub wave_cells: usize,
    /// Wave mesh grading exponent (≥ 1); omit for the class-based default
    /// (2 for degenerate coefficients, 1 otherwise).
    pub wave_grading: Option<f64>,
    /// Heat cells (≥ 2). Default 64.
    pub heat_cells: usize,
    /// Memory weight m ∈ [0, 1]. Default 0.5.
    pub m: f64,
    /// Thermal conductivity c > 0. Default 1.0.
    pub c: f64,
}

impl Default for DiscretizationSection {
    fn default() -> Self {
        DiscretizationSection {
            wave_cells: 64,
            wave_grading: None,
            heat_cells: 64,
            m: 0.5,
            c: 1.0,
        }
    }
}

/// `[evolution]`: Crank-Nicolson run parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionSection {
    /// Initial data: "zero" | "pluck" | "thermal". Default "pluck".
    pub preset: String,
    /// Time step (> 0); omit for the stability-scaled default
    /// min(h_min/√(max a), 0.25/k).
    pub dt: Option<f64>,
    /// Final time (> 0). Default 1.0.
    pub t_final: f64,
    /// Record every n-th step (≥ 1). Default 1.
    pub record_stride: usize,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        EvolutionSection {
            preset: "pluck".into(),
            dt: None,
            t_final: 1.0,
            record_stride: 1,
        }
    }
}

/// `[analysis]`: frequency sweeps and decay fits.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Sweep lower frequency (> 0). Default 1.0.
    pub lambda_min: f64,
    /// Sweep upper frequency (> lambda_min). Default 1000.0.
    pub lambda_max: f64,
    /// Log-spaced sample count (≥ 4). Default 24.
    pub lambda_points: usize,
    /// Resonance-refined sampling for transmission-system sweeps: each grid
    /// point also evaluates the norm at the nearest located resonance inside
    /// its grid cell. Default true.
    pub refine: bool,
    /// Decay law for `fit`: "polynomial" | "exponential". Default
    /// "exponential".
    pub decay_kind: String,
    /// Fit window start (≥ 0); omit for half of the window end.
    pub fit_t_lo: Option<f64>,
    /// Fit window end (> fit_t_lo); omit for the last trace time.
    pub fit_t_hi: Option<f64>,
    /// Memory weights for `sweep`, each in [0, 1]. Default [0.0, 0.5, 1.0].
    pub m_values: Vec<f64>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            lambda_min: 1.0,
            lambda_max: 1000.0,
            lambda_points: 24,
            refine: true,
            decay_kind: "exponential".into(),
            fit_t_lo: None,
            fit_t_hi: None,
            m_values: vec![0.0, 0.5, 1.0],
        }
    }
}

/// `[output]`: artifact destination and series format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Artifact directory (created if absent); the environment variable
    /// `DEGENWAVE_OUT` overrides it. Default "out".
    pub out_dir: String,
    /// Series format; only "csv" is defined. Default "csv".
    pub format: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            out_dir: "out".into(),
            format: "csv".into(),
        }
    }
}

fn range_err(key: &str, got: impl Display, accepted: &str) -> Error {
    Error::Config(format!(
        "key '{key}' out of range: got {got}; accepted {accepted}"
    ))
}

/// Validated physics bundle, ready to assemble.
#[derive(Debug)]
pub struct Lab {
    pub model: CoefficientModel,
    pub kernel: MemoryKernel,
    pub disc: DiscretizationParams,
    pub trans: TransmissionParams,
    pub preset: InitialPreset,
    pub decay: DecayKind,
}

impl Lab {
    pub fn assemble(&self) -> Result<GeneratorSystem> {
        GeneratorSystem::assemble(&self.model, &self.kernel, &self.disc, &self.trans)
    }

    /// Assembly with an overridden memory weight (the `sweep` grid).
    pub fn assemble_with_m(&self, m: f64) -> Result<GeneratorSystem> {
        GeneratorSystem::assemble(
            &self.model,
            &self.kernel,
            &self.disc,
            &TransmissionParams {
                conductivity: self.trans.conductivity,
                memory_weight: m,
            },
        )
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parse TOML text; unknown keys are rejected with the offending name.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Range-validate every key and build the physics objects.
    pub fn validate(&self) -> Result<Lab> {
        let cs = &self.coefficient;
        let model = if let Some(table) = &cs.coefficient_table {
            if cs.a_exponent.is_some() || cs.b_amplitude.is_some() || cs.b_exponent.is_some() {
                return Err(Error::Config(
                    "key 'coefficient_table' excludes the power-law keys \
                     a_exponent/b_amplitude/b_exponent"
                        .into(),
                ));
            }
            CoefficientModel::sampled(table.x.clone(), table.a.clone(), table.b.clone())
                .map_err(|e| Error::Config(format!("key 'coefficient_table' invalid: {e}")))?
        } else {
            let p = cs.a_exponent.unwrap_or(0.5);
            let cb = cs.b_amplitude.unwrap_or(0.2);
            let q = cs.b_exponent.unwrap_or(0.5);
            if !p.is_finite() || p < 0.0 {
                return Err(range_err("a_exponent", p, "[0, inf)"));
            }
            if !q.is_finite() || q < 0.0 {
                return Err(range_err("b_exponent", q, "[0, inf)"));
            }
            if !cb.is_finite() {
                return Err(range_err("b_amplitude", cb, "finite reals"));
            }
            CoefficientModel::power_law(p, cb, q).map_err(|e| Error::Config(e.to_string()))?
        };

        let ks = &self.kernel;
        if !ks.kernel_k.is_finite() || ks.kernel_k <= 0.0 {
            return Err(range_err("kernel_k", ks.kernel_k, "(0, inf)"));
        }
        if !ks.history_eps_tail.is_finite()
            || ks.history_eps_tail <= 0.0
            || ks.history_eps_tail >= 1.0
        {
            return Err(range_err("history_eps_tail", ks.history_eps_tail, "(0, 1)"));
        }
        if ks.history_nodes < 2 {
            return Err(range_err("history_nodes", ks.history_nodes, "[2, inf)"));
        }
        let kernel =
            MemoryKernel::exponential(ks.kernel_k).map_err(|e| Error::Config(e.to_string()))?;

        let ds = &self.discretization;
        if ds.wave_cells < 2 {
            return Err(range_err("wave_cells", ds.wave_cells, "[2, inf)"));
        }
        if ds.heat_cells < 2 {
            return Err(range_err("heat_cells", ds.heat_cells, "[2, inf)"));
        }
        if let Some(g) = ds.wave_grading {
            if !g.is_finite() || g < 1.0 {
                return Err(range_err("wave_grading", g, "[1, inf)"));
            }
        }
        if !ds.m.is_finite() || !(0.0..=1.0).contains(&ds.m) {
            return Err(range_err("m", ds.m, "[0, 1]"));
        }
        if !ds.c.is_finite() || ds.c <= 0.0 {
            return Err(range_err("c", ds.c, "(0, inf)"));
        }

        let es = &self.evolution;
        let preset: InitialPreset = es
            .preset
            .parse()
            .map_err(|_| range_err("preset", &es.preset, "{zero, pluck, thermal}"))?;
        if let Some(dt) = es.dt {
            if !dt.is_finite() || dt <= 0.0 {
                return Err(range_err("dt", dt, "(0, inf)"));
            }
        }
        if !es.t_final.is_finite() || es.t_final <= 0.0 {
            return Err(range_err("t_final", es.t_final, "(0, inf)"));
        }
        if es.record_stride < 1 {
            return Err(range_err("record_stride", es.record_stride, "[1, inf)"));
        }

        let an = &self.analysis;
        if !an.lambda_min.is_finite() || an.lambda_min <= 0.0 {
            return Err(range_err("lambda_min", an.lambda_min, "(0, inf)"));
        }
        if !an.lambda_max.is_finite() || an.lambda_max <= an.lambda_min {
            return Err(range_err("lambda_max", an.lambda_max, "(lambda_min, inf)"));
        }
        if an.lambda_points < 4 {
            return Err(range_err("lambda_points", an.lambda_points, "[4, inf)"));
        }
        let decay: DecayKind = an
            .decay_kind
            .parse()
            .map_err(|_| range_err("decay_kind", &an.decay_kind, "{polynomial, exponential}"))?;
        if let Some(lo) = an.fit_t_lo {
            if !lo.is_finite() || lo < 0.0 {
                return Err(range_err("fit_t_lo", lo, "[0, inf)"));
            }
        }
        if let Some(hi) = an.fit_t_hi {
            if !hi.is_finite() || hi <= an.fit_t_lo.unwrap_or(0.0) {
                return Err(range_err("fit_t_hi", hi, "(fit_t_lo, inf)"));
            }
        }
        if an.m_values.is_empty() {
            return Err(range_err(
                "m_values",
                "[]",
                "non-empty list of values in [0, 1]",
            ));
        }
        for &m in &an.m_values {
            if !m.is_finite() || !(0.0..=1.0).contains(&m) {
                return Err(range_err("m_values", m, "[0, 1]"));
            }
        }

        if self.output.format != "csv" {
            return Err(range_err("format", &self.output.format, "{csv}"));
        }

        Ok(Lab {
            model,
            kernel,
            disc: DiscretizationParams {
                wave_cells: ds.wave_cells,
                heat_cells: ds.heat_cells,
                history_nodes: ks.history_nodes,
                eps_tail: ks.history_eps_tail,
                wave_grading: ds.wave_grading,
            },
            trans: TransmissionParams {
                conductivity: ds.c,
                memory_weight: ds.m,
            },
            preset,
            decay,
        })
    }

    /// Canonical form: power-law coefficient defaults are materialized, so a
    /// config that omits a key hashes identically to one spelling out its
    /// default. Keys whose omission means "resolve at run time"
    /// (wave_grading, dt, fit window) stay as given.
    fn canonicalized(&self) -> RunConfig {
        let mut c = self.clone();
        if c.coefficient.coefficient_table.is_none() {
            c.coefficient.a_exponent = Some(c.coefficient.a_exponent.unwrap_or(0.5));
            c.coefficient.b_amplitude = Some(c.coefficient.b_amplitude.unwrap_or(0.2));
            c.coefficient.b_exponent = Some(c.coefficient.b_exponent.unwrap_or(0.5));
        }
        c
    }

    /// SHA-256 over the canonicalized config's JSON serialization.
    pub fn config_hash(&self) -> String {
        let canon =
            serde_json::to_string(&self.canonicalized()).expect("config serializes to JSON");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

// ---------------------------------------------------------------------------
// Command-line interface
// ---------------------------------------------------------------------------

/// Numerical laboratory for a degenerate-wave / thermal-memory transmission
/// system: hypothesis checks, Crank-Nicolson simulation, spectra, resolvent
/// sweeps and decay fits.
#[derive(Debug, Parser)]
#[command(name = "degenwave", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate coefficient/kernel hypotheses; print the reports as JSON.
    Check(ConfigArg),
    /// Integrate by Crank-Nicolson; write trace.csv and run.json.
    Simulate(ConfigArg),
    /// Dense eigensolve; write eigenvalues.csv and abscissa.json.
    Spectrum(ConfigArg),
    /// Resolvent-norm sweep on the imaginary axis; write resolvent.csv and
    /// resolvent_fit.json.
    Resolvent(ConfigArg),
    /// Fit a decay law to a simulated trace; write decay_fit.json.
    Fit(FitArgs),
    /// Resolvent sweeps over the m_values grid; write sweep.csv and
    /// sweep.json.
    Sweep(ConfigArg),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Path to the TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Trace CSV to fit; defaults to <out_dir>/trace.csv.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

/// Parse argv, dispatch, and map errors to the exit-code contract.
pub fn run() -> u8 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Numerical failures exit 2; everything else is a configuration or input
/// validation problem and exits 1.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SingularSystem(_) | Error::NearSingular(_) | Error::NonPositiveEnergy(_) => 2,
        _ => 1,
    }
}

fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Check(a) => cmd_check(&RunConfig::load(&a.config)?),
        Command::Simulate(a) => cmd_simulate(&RunConfig::load(&a.config)?),
        Command::Spectrum(a) => cmd_spectrum(&RunConfig::load(&a.config)?),
        Command::Resolvent(a) => cmd_resolvent(&RunConfig::load(&a.config)?),
        Command::Fit(a) => cmd_fit(&RunConfig::load(&a.config)?, a.trace.as_deref()),
        Command::Sweep(a) => cmd_sweep(&RunConfig::load(&a.config)?),
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_check(cfg: &RunConfig) -> Result<()> {
    let lab = cfg.validate()?;
    let hypotheses = crate::coefficients::check_hypotheses(&lab.model)?;
    let doc = serde_json::json!({
        "config_hash": cfg.config_hash(),
        "coefficients": hypotheses,
        "kernel": lab.kernel.report(),
    });
    println!("{}", to_pretty(&doc)?);
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let lab = cfg.validate()?;
    let sys = lab.assemble()?;
    let dt = cfg.evolution.dt.unwrap_or_else(|| sys.default_dt());
    let params = EvolutionParams {
        dt,
        t_final: cfg.evolution.t_final,
        sample_stride: cfg.evolution.record_stride,
    };
    let initial = sys.project_initial_data(lab.preset);
    let (trace, _) = run_simulation(&sys, &initial, &params)?;

    let dir = out_dir(cfg)?;
    let columns: [&[f64]; 5] = [
        &trace.times,
        &trace.energy,
        &trace.dissipation,
        &trace.interface_trace,
        &trace.interface_flux,
    ];
    write_csv(
        &dir.join("trace.csv"),
        "t,energy,dissipation,interface_trace,interface_flux",
        trace.times.len(),
        |i| columns.iter().map(|c| c[i]).collect(),
    )?;
    write_json(
        &dir.join("run.json"),
        &serde_json::json!({
            "config_hash": cfg.config_hash(),
            "dim": sys.dim(),
            "preset": cfg.evolution.preset,
            "dt": dt,
            "t_final": cfg.evolution.t_final,
            "record_stride": cfg.evolution.record_stride,
            "samples": trace.times.len(),
            "energy_initial": trace.energy.first(),
            "energy_final": trace.energy.last(),
        }),
    )
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<()> {
    let lab = cfg.validate()?;
    let sys = lab.assemble()?;
    let spec = spectral_abscissa(&sys)?;
    let dir = out_dir(cfg)?;
    write_csv(
        &dir.join("eigenvalues.csv"),
        "re,im",
        spec.eigenvalues.len(),
        |i| vec![spec.eigenvalues[i].0, spec.eigenvalues[i].1],
    )?;
    write_json(
        &dir.join("abscissa.json"),
        &serde_json::json!({
            "config_hash": cfg.config_hash(),
            "dim": spec.dim,
            "abscissa": spec.abscissa,
            "axis_distance": spec.axis_distance,
            "max_relative_residual": spec.max_relative_residual,
        }),
    )
}

fn growth_for(lab: &Lab, cfg: &RunConfig, m: f64) -> Result<ResolventGrowth> {
    let sys = lab.assemble_with_m(m)?;
    let an = &cfg.analysis;
    if an.refine {
        resolvent_growth_refined(&sys, an.lambda_min, an.lambda_max, an.lambda_points)
    } else {
        resolvent_growth(&sys, an.lambda_min, an.lambda_max, an.lambda_points)
    }
}

fn cmd_resolvent(cfg: &RunConfig) -> Result<()> {
    let lab = cfg.validate()?;
    let growth = growth_for(&lab, cfg, cfg.discretization.m)?;
    let dir = out_dir(cfg)?;
    write_csv(
        &dir.join("resolvent.csv"),
        "lambda,resolvent_norm",
        growth.lambdas.len(),
        |i| vec![growth.lambdas[i], growth.norms[i]],
    )?;
    write_json(
        &dir.join("resolvent_fit.json"),
        &serde_json::json!({
            "config_hash": cfg.config_hash(),
            "m": cfg.discretization.m,
            "exponent": growth.exponent,
            "r2": growth.r_squared,
            "window": [cfg.analysis.lambda_min, cfg.analysis.lambda_max],
            "points": growth.lambdas.len(),
            "fit_points": growth.fit_points,
            "refined": cfg.analysis.refine,
        }),
    )
}

fn cmd_fit(cfg: &RunConfig, trace: Option<&Path>) -> Result<()> {
    let lab = cfg.validate()?;
    let dir = out_dir(cfg)?;
    let path = trace
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join("trace.csv"));
    let (times, energies) = read_trace(&path)?;
    let t_hi = cfg
        .analysis
        .fit_t_hi
        .unwrap_or_else(|| times.last().copied().unwrap_or(0.0));
    let t_lo = cfg.analysis.fit_t_lo.unwrap_or(t_hi / 2.0);
    let fit = crate::analysis::fit_decay(&times, &energies, lab.decay, t_lo, t_hi)?;
    let mut doc = serde_json::json!({
        "config_hash": cfg.config_hash(),
        "trace": path.display().to_string(),
        "kind": fit.kind,
        "r2": fit.r_squared,
        "window": [fit.t_lo, fit.t_hi],
        "amplitude": fit.amplitude,
        "samples": fit.samples,
    });
    // E ≈ A·t^exponent (polynomial) or A·e^{−rate·t} (exponential).
    match lab.decay {
        DecayKind::Polynomial => doc["exponent"] = (-fit.rate).into(),
        DecayKind::Exponential => doc["rate"] = fit.rate.into(),
    }
    write_json(&dir.join("decay_fit.json"), &doc)
}

fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let lab = cfg.validate()?;
    let ms = &cfg.analysis.m_values;
    // Fan out one worker per grid value; merge deterministically in m order.
    let results: Vec<Result<ResolventGrowth>> = std::thread::scope(|s| {
        let lab = &lab;
        let handles: Vec<_> = ms
            .iter()
            .map(|&m| s.spawn(move || growth_for(lab, cfg, m)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut rows = Vec::with_capacity(ms.len());
    for (m, r) in ms.iter().zip(results) {
        rows.push((*m, r?));
    }

    let dir = out_dir(cfg)?;
    write_csv(&dir.join("sweep.csv"), "m,exponent", rows.len(), |i| {
        vec![rows[i].0, rows[i].1.exponent]
    })?;
    let entries: Vec<serde_json::Value> = rows
        .iter()
        .map(|(m, g)| {
            serde_json::json!({
                "m": m,
                "exponent": g.exponent,
                "r2": g.r_squared,
                "fit_points": g.fit_points,
            })
        })
        .collect();
    write_json(
        &dir.join("sweep.json"),
        &serde_json::json!({
            "config_hash": cfg.config_hash(),
            "window": [cfg.analysis.lambda_min, cfg.analysis.lambda_max],
            "points": cfg.analysis.lambda_points,
            "refined": cfg.analysis.refine,
            "results": entries,
        }),
    )
}

// ---------------------------------------------------------------------------
// Artifact plumbing
// ---------------------------------------------------------------------------

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = std::env::var("DEGENWAVE_OUT").unwrap_or_else(|_| cfg.output.out_dir.clone());
    let path = PathBuf::from(dir);
    fs::create_dir_all(&path)?;
    Ok(path)
}

/// Fixed-format CSV: 17 significant digits per float, `\n` line endings, so
/// identical configs produce byte-identical files.
fn write_csv(
    path: &Path,
    header: &str,
    rows: usize,
    row: impl Fn(usize) -> Vec<f64>,
) -> Result<()> {
    let mut text = String::with_capacity(32 * (rows + 1));
    text.push_str(header);
    text.push('\n');
    for i in 0..rows {
        let values = row(i);
        for (j, v) in values.iter().enumerate() {
            if j > 0 {
                text.push(',');
            }
            text.push_str(&format!("{v:.16e}"));
        }
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn to_pretty(doc: &serde_json::Value) -> Result<String> {
    serde_json::to_string_pretty(doc).map_err(|e| Error::Config(format!("JSON emission: {e}")))
}

fn write_json(path: &Path, doc: &serde_json::Value) -> Result<()> {
    let mut text = to_pretty(doc)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Parse `t` and `energy` columns back out of a trace CSV.
fn read_trace(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read trace {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("trace {} is empty", path.display())))?;
    let names: Vec<&str> = header.split(',').collect();
    let t_col = names
        .iter()
        .position(|n| *n == "t")
        .ok_or_else(|| Error::Config("trace header lacks a 't' column".into()))?;
    let e_col = names
        .iter()
        .position(|n| *n == "energy")
        .ok_or_else(|| Error::Config("trace header lacks an 'energy' column".into()))?;
    let mut times = Vec::new();
    let mut energies = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let get = |col: usize| -> Result<f64> {
            fields
                .get(col)
                .ok_or_else(|| Error::Config(format!("trace line {} is short", lineno + 2)))?
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("trace line {}: {e}", lineno + 2)))
        };
        times.push(get(t_col)?);
        energies.push(get(e_col)?);
    }
    Ok((times, energies))
}
