//! Batch front door: one config file describes one experiment, the runner
//! executes it and leaves CSV tables, JSON summaries and a metadata file in
//! the output directory.
//!
//! The contract is deterministic reporting: identical config and seed produce
//! byte-identical CSV and JSON, whatever the worker count. Everything that
//! cannot be deterministic (wall time, start stamp) is segregated into
//! `run_meta.json`; the data files never contain it. Every summary embeds the
//! SHA-256 of the config file it was produced from and the crate version;
//! CSV tables carry the same provenance in one leading `#` comment above the
//! header, which the usual plotting stacks skip on their own.
//!
//! Exit codes tier the failure: 0 all checks passed, 1 the config did not
//! parse or validate (the message names the offending key), 2 a numerical
//! stage failed (the message names the stage), 3 a mathematical invariant was
//! violated at runtime (the message carries the violating values).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime};

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::birman::{counting_chain, BirmanSchwinger, F_SATURATING_AT_ONE};
use crate::bounds::{bound_scan, default_beta, half_power_constant, lt_sum, stieltjes_lt};
use crate::discrete::{
    add_diagonal, build_levy, eigh, eigvalsh, gauge_conjugate, max_entry_distance, Grid, Operator,
    SITE_CAP,
};
use crate::fields::{GaugeFunction, Potential, VectorPotential};
use crate::kernel::{
    chapman_kolmogorov_residual, free_kernel_mass, free_kernel_radial, levy_khinchin_residual,
    symbol_h, QuadSpec, DIAGONAL_ENVELOPE_COEFF,
};
use crate::levy::{diamagnetic_mc_check, feynman_kac, fki_magnetic};
use crate::{Error, Result};

/// Coupling floor used by `bs-count` to keep the Birman-Schwinger operator
/// faithful where the potential vanishes.
pub const BS_COUNT_FLOOR: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(
    name = "relmag",
    version,
    about = "Batch experiments for the relativistic magnetic laboratory"
)]
struct Cli {
    /// Experiment description (TOML); see --catalog for the vocabulary.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Worker threads for the parallel stages.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Root seed for the Monte Carlo commands, overriding the config.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Print the catalog of commands, field names and parameter schemas.
    #[arg(long)]
    catalog: bool,
    /// With --catalog: emit the catalog as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    KernelCheck,
    LevyKhinchin,
    GaugeCheck,
    Diamagnetic,
    BsCount,
    Chain,
    BoundScan,
    LtScan,
    FkMc,
    FkiMc,
}

impl CommandName {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandName::KernelCheck => "kernel-check",
            CommandName::LevyKhinchin => "levy-khinchin",
            CommandName::GaugeCheck => "gauge-check",
            CommandName::Diamagnetic => "diamagnetic",
            CommandName::BsCount => "bs-count",
            CommandName::Chain => "chain",
            CommandName::BoundScan => "bound-scan",
            CommandName::LtScan => "lt-scan",
            CommandName::FkMc => "fk-mc",
            CommandName::FkiMc => "fki-mc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    pub n: usize,
    /// Box half-width; the lattice covers `[-l, l)^d`.
    #[serde(alias = "L")]
    pub l: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl GridConfig {
    fn build(&self) -> Result<Grid> {
        Grid::new(self.d, self.n, self.l)
    }
}

fn default_couplings() -> Vec<f64> {
    vec![1.0, 2.0, 5.0]
}
fn default_alphas() -> Vec<f64> {
    vec![0.05, 0.1, 0.5]
}
fn default_k_exponents() -> Vec<f64> {
    vec![1.0, 2.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default = "default_couplings")]
    pub couplings: Vec<f64>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_k_exponents")]
    pub k_exponents: Vec<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            couplings: default_couplings(),
            alphas: default_alphas(),
            k_exponents: default_k_exponents(),
        }
    }
}

fn default_paths() -> usize {
    10_000
}
fn default_steps() -> usize {
    32
}
fn default_seed() -> u64 {
    1
}
fn default_time() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Time horizon of the sampled paths.
    #[serde(default = "default_time")]
    pub t: f64,
    /// Start point; empty means the origin.
    #[serde(default)]
    pub x0: Vec<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: default_paths(),
            steps: default_steps(),
            seed: default_seed(),
            t: default_time(),
            x0: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Csv,
    Json,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<ReportFormat> {
    vec![ReportFormat::Csv, ReportFormat::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Which deterministic files to write; `run_meta.json` is always written.
    #[serde(default = "default_formats")]
    pub formats: Vec<ReportFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandName,
    pub grid: GridConfig,
    #[serde(default)]
    pub potential: Option<Potential>,
    #[serde(default)]
    pub magnetic: Option<VectorPotential>,
    #[serde(default)]
    pub gauge: Option<GaugeFunction>,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    fn potential_or_zero(&self) -> Potential {
        self.potential.clone().unwrap_or(Potential::Zero)
    }

    fn magnetic_or_zero(&self) -> VectorPotential {
        self.magnetic.clone().unwrap_or(VectorPotential::Zero)
    }

    fn start_point(&self) -> Vec<f64> {
        if self.mc.x0.is_empty() {
            vec![0.0; self.grid.d]
        } else {
            self.mc.x0.clone()
        }
    }
}

/// Parses and validates a config file; returns it with the SHA-256 of the
/// raw bytes, the hash every report embeds.
pub fn load_config(path: &Path) -> Result<(ExperimentConfig, String)> {
    let raw = fs::read_to_string(path)
        .map_err(|e| Error::domain("config", format!("cannot read {}: {e}", path.display())))?;
    let cfg: ExperimentConfig = toml::from_str(&raw)
        .map_err(|e| Error::domain("config", format!("{}:\n{e}", path.display())))?;
    let hash: String = Sha256::digest(raw.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    validate_config(&cfg)?;
    Ok((cfg, hash))
}

fn needs_dense_matrices(command: CommandName) -> bool {
    matches!(
        command,
        CommandName::GaugeCheck
            | CommandName::Diamagnetic
            | CommandName::BsCount
            | CommandName::Chain
            | CommandName::BoundScan
            | CommandName::LtScan
    )
}

fn validate_config(cfg: &ExperimentConfig) -> Result<()> {
    let grid = cfg.grid.build()?;
    let d = grid.d;
    if needs_dense_matrices(cfg.command) && grid.site_count() > SITE_CAP {
        return Err(Error::domain(
            "config",
            format!(
                "grid has {} sites, above the dense-solve cap {SITE_CAP} that command '{}' needs",
                grid.site_count(),
                cfg.command.as_str()
            ),
        ));
    }
    if let Some(v) = &cfg.potential {
        v.validate(d)?;
    }
    if let Some(a) = &cfg.magnetic {
        a.validate(d)?;
    }
    if let Some(g) = &cfg.gauge {
        g.validate(d)?;
    }

    let require = |present: bool, block: &str| -> Result<()> {
        if present {
            Ok(())
        } else {
            Err(Error::domain(
                "config",
                format!(
                    "command '{}' needs a [{block}] block",
                    cfg.command.as_str()
                ),
            ))
        }
    };
    match cfg.command {
        CommandName::GaugeCheck => require(cfg.gauge.is_some(), "gauge")?,
        CommandName::BsCount | CommandName::Chain | CommandName::BoundScan | CommandName::LtScan => {
            require(cfg.potential.is_some(), "potential")?
        }
        CommandName::Diamagnetic | CommandName::FkiMc => {
            require(cfg.magnetic.is_some(), "magnetic")?
        }
        _ => {}
    }

    match cfg.command {
        CommandName::BsCount | CommandName::Chain => {
            if cfg.scan.alphas.is_empty() {
                return Err(Error::domain("config", "scan.alphas must not be empty"));
            }
            if cfg.scan.alphas.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
                return Err(Error::domain(
                    "config",
                    format!("scan.alphas must be positive and finite, got {:?}", cfg.scan.alphas),
                ));
            }
        }
        CommandName::BoundScan | CommandName::LtScan => {
            if cfg.scan.couplings.is_empty() {
                return Err(Error::domain("config", "scan.couplings must not be empty"));
            }
            if !cfg
                .scan
                .couplings
                .windows(2)
                .all(|w| w[0] < w[1])
                || cfg
                    .scan
                    .couplings
                    .iter()
                    .any(|&g| !(g > 0.0 && g.is_finite()))
            {
                return Err(Error::domain(
                    "config",
                    format!(
                        "scan.couplings must be positive, finite and strictly ascending, got {:?}",
                        cfg.scan.couplings
                    ),
                ));
            }
            if cfg.command == CommandName::BoundScan && cfg.scan.k_exponents.len() != 2 {
                return Err(Error::domain(
                    "config",
                    format!(
                        "bound-scan reports exactly two moment columns, so scan.k_exponents \
                         needs exactly 2 entries, got {}",
                        cfg.scan.k_exponents.len()
                    ),
                ));
            }
            if cfg.scan.k_exponents.is_empty() {
                return Err(Error::domain("config", "scan.k_exponents must not be empty"));
            }
            if cfg
                .scan
                .k_exponents
                .iter()
                .any(|&k| !(k > 0.0 && k.is_finite()))
            {
                return Err(Error::domain(
                    "config",
                    format!(
                        "scan.k_exponents must be positive and finite, got {:?}",
                        cfg.scan.k_exponents
                    ),
                ));
            }
        }
        _ => {}
    }

    if matches!(
        cfg.command,
        CommandName::FkMc | CommandName::FkiMc | CommandName::Diamagnetic
    ) {
        if cfg.mc.paths == 0 || cfg.mc.steps == 0 {
            return Err(Error::domain(
                "config",
                "mc.paths and mc.steps must be at least 1",
            ));
        }
        if !(cfg.mc.t > 0.0 && cfg.mc.t.is_finite()) {
            return Err(Error::domain(
                "config",
                format!("mc.t must be positive and finite, got {}", cfg.mc.t),
            ));
        }
        if !cfg.mc.x0.is_empty() && cfg.mc.x0.len() != d {
            return Err(Error::domain(
                "config",
                format!("mc.x0 has {} coordinates for a {d}-dimensional grid", cfg.mc.x0.len()),
            ));
        }
        if cfg.mc.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(
                "config",
                format!("mc.x0 must be finite, got {:?}", cfg.mc.x0),
            ));
        }
    }
    Ok(())
}

/// One produced experiment: deterministic tables and a summary body, plus
/// console lines. The runner adds provenance keys and writes the files.
struct CommandOutput {
    tables: Vec<(&'static str, String)>,
    summary: Value,
    console: Vec<String>,
}

fn execute(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    match cfg.command {
        CommandName::KernelCheck => run_kernel_check(cfg),
        CommandName::LevyKhinchin => run_levy_khinchin(cfg),
        CommandName::GaugeCheck => run_gauge_check(cfg),
        CommandName::Diamagnetic => run_diamagnetic(cfg),
        CommandName::BsCount => run_bs_count(cfg),
        CommandName::Chain => run_chain(cfg),
        CommandName::BoundScan => run_bound_scan(cfg),
        CommandName::LtScan => run_lt_scan(cfg),
        CommandName::FkMc => run_fk_mc(cfg),
        CommandName::FkiMc => run_fki_mc(cfg),
    }
}

fn run_kernel_check(_cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let mut mass_rows = Vec::new();
    let mut worst_mass: f64 = 0.0;
    for d in 1..=3usize {
        for &t in &[0.5, 1.0, 2.0] {
            let defect = free_kernel_mass(t, d)? - 1.0;
            worst_mass = worst_mass.max(defect.abs());
            mass_rows.push(json!({ "d": d, "t": t, "defect": defect }));
        }
    }
    let mut ck_rows = Vec::new();
    let mut worst_ck: f64 = 0.0;
    for &(t, s, x, y) in &[(0.5, 0.5, 0.0, 0.0), (1.0, 0.5, 1.0, -0.5), (0.25, 1.25, 3.0, 2.0)] {
        let r = chapman_kolmogorov_residual(t, s, x, y)?;
        worst_ck = worst_ck.max(r.abs());
        ck_rows.push(json!({ "t": t, "s": s, "x": x, "y": y, "residual": r }));
    }
    let quad = QuadSpec::default();
    let mut lk_rows = Vec::new();
    let mut worst_lk: f64 = 0.0;
    for d in 1..=3usize {
        for &xi_abs in &[0.5, 1.0, 2.0] {
            let mut xi = vec![0.0; d];
            xi[d - 1] = xi_abs;
            let res = levy_khinchin_residual(&xi, &quad)?;
            worst_lk = worst_lk.max(res.abs());
            lk_rows.push(json!({ "d": d, "xi": xi_abs, "symbol": symbol_h(&xi), "residual": res }));
        }
    }
    let mut envelope_rows = Vec::new();
    let mut worst_envelope: f64 = 0.0;
    for d in 1..=3usize {
        let coeff = DIAGONAL_ENVELOPE_COEFF[d - 1];
        let mut ratio: f64 = 0.0;
        let mut t = 1e-3;
        while t < 200.0 {
            let p0 = free_kernel_radial(t, 0.0, d)?;
            let envelope = coeff * t.powi(-(d as i32)) * (1.0 + t.powf(0.5 * d as f64));
            ratio = ratio.max(p0 / envelope);
            t *= 1.05;
        }
        worst_envelope = worst_envelope.max(ratio);
        envelope_rows.push(json!({ "d": d, "coeff": coeff, "sharpest_ratio": ratio }));
    }

    if worst_mass > 1e-6 {
        return Err(Error::invariant(
            "kernel mass",
            format!("worst |mass - 1| = {worst_mass}, above 1e-6"),
        ));
    }
    if worst_ck > 1e-9 {
        return Err(Error::invariant(
            "Chapman-Kolmogorov",
            format!("worst residual {worst_ck}, above 1e-9"),
        ));
    }
    if worst_lk > 1e-3 {
        return Err(Error::invariant(
            "Levy-Khinchin reconstruction",
            format!("worst residual {worst_lk}, above 1e-3"),
        ));
    }
    if worst_envelope >= 1.0 {
        return Err(Error::invariant(
            "diagonal envelope",
            format!("kernel exceeds its envelope, ratio {worst_envelope}"),
        ));
    }

    Ok(CommandOutput {
        tables: Vec::new(),
        summary: json!({
            "mass": mass_rows,
            "chapman_kolmogorov": ck_rows,
            "levy_khinchin": lk_rows,
            "envelope": envelope_rows,
            "worst": {
                "mass_defect": worst_mass,
                "chapman_kolmogorov": worst_ck,
                "levy_khinchin": worst_lk,
                "envelope_ratio": worst_envelope,
            },
        }),
        console: vec![format!(
            "kernel checks passed: mass defect {worst_mass:.2e}, CK residual {worst_ck:.2e}, \
             LK residual {worst_lk:.2e}, envelope ratio {worst_envelope:.4}"
        )],
    })
}

fn run_levy_khinchin(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let d = cfg.grid.d;
    let quad = QuadSpec::default();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &xi_abs in &[0.25, 0.5, 1.0, 2.0, 4.0] {
        let mut xi = vec![0.0; d];
        xi[d - 1] = xi_abs;
        let res = levy_khinchin_residual(&xi, &quad)?;
        worst = worst.max(res.abs());
        rows.push(json!({ "xi": xi_abs, "symbol": symbol_h(&xi), "residual": res }));
    }
    if worst > 1e-3 {
        return Err(Error::invariant(
            "Levy-Khinchin reconstruction",
            format!("worst residual {worst} in dimension {d}, above 1e-3"),
        ));
    }
    Ok(CommandOutput {
        tables: Vec::new(),
        summary: json!({ "d": d, "rows": rows, "worst_residual": worst }),
        console: vec![format!(
            "Levy-Khinchin reconstruction in d = {d}: worst residual {worst:.2e}"
        )],
    })
}

fn run_gauge_check(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let grid = cfg.grid.build()?;
    let a = cfg.magnetic_or_zero();
    let v = cfg.potential_or_zero();
    let phi = cfg.gauge.clone().expect("validated");

    let h_a = build_levy(&grid, &a, &v)?;
    let h_shifted = build_levy(&grid, &a.clone().gauged(phi.clone()), &v)?;
    let conjugated = gauge_conjugate(&h_a.matrix, &grid, &phi);
    let defect = max_entry_distance(&conjugated, &h_shifted.matrix);

    let spec_a = eigvalsh(&h_a.matrix)?;
    let spec_shifted = eigvalsh(&h_shifted.matrix)?;
    let shift = spec_a
        .iter()
        .zip(&spec_shifted)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);

    if defect > 1e-12 {
        return Err(Error::invariant(
            "gauge covariance",
            format!("entrywise defect {defect} above 1e-12"),
        ));
    }
    Ok(CommandOutput {
        tables: Vec::new(),
        summary: json!({
            "entrywise_defect": defect,
            "spectral_shift": shift,
            "lowest_levels": &spec_a[..spec_a.len().min(6)],
        }),
        console: vec![format!(
            "gauge covariance holds: entrywise defect {defect:.2e}, spectral shift {shift:.2e}"
        )],
    })
}

fn run_diamagnetic(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let grid = cfg.grid.build()?;
    let a = cfg.magnetic_or_zero();
    let v = cfg.potential_or_zero();
    let t = cfg.mc.t;

    // Matrix level: the magnetic semigroup is entrywise dominated by the
    // free one, so the excess of |e^{-tH_A}| over e^{-tH_0} stays at rounding.
    let h_mag = build_levy(&grid, &a, &v)?;
    let h_free = build_levy(&grid, &VectorPotential::Zero, &v)?;
    let semi_mag = eigh(&h_mag.matrix)?.semigroup(t);
    let semi_free = eigh(&h_free.matrix)?.semigroup(t);
    let mut matrix_excess = f64::NEG_INFINITY;
    for i in 0..semi_mag.nrows() {
        for j in 0..semi_mag.ncols() {
            matrix_excess = matrix_excess.max(semi_mag[(i, j)].norm() - semi_free[(i, j)].re);
        }
    }
    if matrix_excess > 1e-8 {
        return Err(Error::invariant(
            "matrix diamagnetic domination",
            format!("|e^(-tH_A)| exceeds e^(-tH_0) entrywise by {matrix_excess}"),
        ));
    }

    // Path level, on common random numbers; violations surface as invariant
    // errors carrying the offending stream.
    let x0 = cfg.start_point();
    let report = diamagnetic_mc_check(
        |_| 1.0,
        |x: &[f64]| v.eval(x),
        &a,
        t,
        &x0,
        cfg.mc.paths,
        cfg.mc.steps,
        cfg.mc.seed,
    )?;

    Ok(CommandOutput {
        tables: Vec::new(),
        summary: json!({
            "matrix_excess": matrix_excess,
            "mc": {
                "magnetic": { "re": report.magnetic.mean.re, "im": report.magnetic.mean.im,
                              "stderr": report.magnetic.stderr },
                "free": { "mean": report.free.mean, "stderr": report.free.stderr },
                "margin": report.margin,
                "worst_pathwise_excess": report.worst_pathwise_excess,
                "n_paths": cfg.mc.paths,
                "m": cfg.mc.steps,
                "seed": cfg.mc.seed,
                "t": t,
                "x0": x0,
            },
        }),
        console: vec![
            format!("matrix semigroup domination: worst entrywise excess {matrix_excess:.2e}"),
            format!(
                "path domination on common numbers: margin {:.6}, worst pathwise excess {:.2e}",
                report.margin, report.worst_pathwise_excess
            ),
        ],
    })
}

fn build_kinetic(cfg: &ExperimentConfig, grid: &Grid) -> Result<Operator> {
    build_levy(grid, &cfg.magnetic_or_zero(), &Potential::Zero)
}

fn run_bs_count(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let grid = cfg.grid.build()?;
    let v = cfg.potential_or_zero();
    let kinetic = build_kinetic(cfg, &grid)?;
    let raw = BirmanSchwinger::new(&kinetic, &v)?;
    let floored = BirmanSchwinger::with_floor(&kinetic, &v, BS_COUNT_FLOOR)?;

    let attracted: Vec<f64> = raw.v_minus().iter().map(|&w| -w).collect();
    let full = add_diagonal(&kinetic, &attracted)?;
    let spectrum = eigvalsh(&full.matrix)?;

    let mut csv = String::from("alpha,n_count,bs_count,bs_count_floored\n");
    let mut rows = Vec::new();
    for &alpha in &cfg.scan.alphas {
        let n_count = spectrum.partition_point(|&l| l < -alpha);
        let bs_raw = raw.eigenvalues(alpha)?.iter().filter(|&&m| m > 1.0).count();
        let bs_floor = floored
            .eigenvalues(alpha)?
            .iter()
            .filter(|&&m| m > 1.0)
            .count();
        if bs_floor != n_count {
            return Err(Error::invariant(
                "Birman-Schwinger counting",
                format!(
                    "floored count {bs_floor} != direct count {n_count} at alpha = {alpha}"
                ),
            ));
        }
        if bs_raw < n_count {
            return Err(Error::invariant(
                "Birman-Schwinger counting",
                format!(
                    "raw count {bs_raw} lost bound states against the direct count {n_count} at alpha = {alpha}"
                ),
            ));
        }
        csv.push_str(&format!("{alpha},{n_count},{bs_raw},{bs_floor}\n"));
        rows.push(json!({
            "alpha": alpha, "n_count": n_count,
            "bs_count": bs_raw, "bs_count_floored": bs_floor,
        }));
    }
    let count = rows.len();
    Ok(CommandOutput {
        tables: vec![("bs-count", csv)],
        summary: json!({ "floor": BS_COUNT_FLOOR, "rows": rows }),
        console: vec![format!(
            "Birman-Schwinger counting agrees with the direct spectrum at all {count} levels"
        )],
    })
}

fn run_chain(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let grid = cfg.grid.build()?;
    let v = cfg.potential_or_zero();
    let free = build_levy(&grid, &VectorPotential::Zero, &Potential::Zero)?;
    let mag = build_kinetic(cfg, &grid)?;
    let rows = counting_chain(&free, &mag, &v, &cfg.scan.alphas)?;

    let mut csv = String::from("alpha,n_count,bs_count,trace_free,trace_mag,bound_value\n");
    for link in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            link.alpha, link.n_count, link.bs_count, link.trace_free, link.trace_mag,
            link.bound_value
        ));
    }
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|l| serde_json::to_value(l).expect("chain links serialize"))
        .collect();
    let count = rows.len();
    Ok(CommandOutput {
        tables: vec![("chain", csv)],
        summary: json!({ "f_at_one": F_SATURATING_AT_ONE, "rows": json_rows }),
        console: vec![format!(
            "counting chain verified at {count} spectral shifts: direct count <= \
             Birman-Schwinger <= magnetic trace <= free trace"
        )],
    })
}

fn run_bound_scan(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let grid = cfg.grid.build()?;
    let v = cfg.potential_or_zero();
    let kinetic = build_kinetic(cfg, &grid)?;
    let scan = bound_scan(&kinetic, &v, &cfg.scan.couplings, &cfg.scan.k_exponents)?;

    let n_points = scan.len();
    let mut csv = String::from("g,N,rhs_d,rhs_half,ratio,lambda_min,lt_k1,lt_k2\n");
    let mut rows = Vec::new();
    let mut empirical_cd: f64 = 0.0;
    for (g, outcome) in scan {
        let report = outcome?;
        let lambda_min = report.eigenvalues.first().copied().unwrap_or(0.0);
        let lt_k1 = report.lt_sums.first().map(|p| p.1).unwrap_or(0.0);
        let lt_k2 = report.lt_sums.get(1).map(|p| p.1).unwrap_or(0.0);
        empirical_cd = empirical_cd.max(report.ratio);
        csv.push_str(&format!(
            "{g},{},{},{},{},{lambda_min},{lt_k1},{lt_k2}\n",
            report.count, report.rhs_d, report.rhs_half, report.ratio
        ));
        rows.push(json!({
            "g": g, "N": report.count, "rhs_d": report.rhs_d, "rhs_half": report.rhs_half,
            "ratio": report.ratio, "lambda_min": lambda_min, "lt_k1": lt_k1, "lt_k2": lt_k2,
        }));
    }
    let half_power = half_power_constant(grid.d, DIAGONAL_ENVELOPE_COEFF[grid.d - 1]).ok();
    Ok(CommandOutput {
        tables: vec![("bound-scan", csv)],
        summary: json!({
            "empirical_c_d": empirical_cd,
            "half_power_constant": half_power,
            "k_exponents": cfg.scan.k_exponents,
            "rows": rows,
        }),
        console: vec![format!(
            "counting bound scanned over {n_points} couplings: empirical C_d = {empirical_cd:.4}"
        )],
    })
}

fn run_lt_scan(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let grid = cfg.grid.build()?;
    let v = cfg.potential_or_zero();
    let kinetic = build_kinetic(cfg, &grid)?;
    let vm: Vec<f64> = (0..grid.site_count())
        .map(|i| {
            let site = grid.site(i);
            -v.v_minus(&site[..grid.d])
        })
        .collect();

    let mut csv = String::from("g,k,beta,n_below,direct,stieltjes,difference\n");
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &g in &cfg.scan.couplings {
        let scaled: Vec<f64> = vm.iter().map(|&w| g * w).collect();
        let full = add_diagonal(&kinetic, &scaled)?;
        let spectrum = eigvalsh(&full.matrix).map_err(|e| e.at_stage("lt-scan eigensolve"))?;
        let negatives: Vec<f64> = spectrum.iter().copied().filter(|&l| l < 0.0).collect();
        let beta = default_beta(&spectrum).unwrap_or(0.0);
        let bottom = negatives.first().copied().unwrap_or(-1.0);
        for &k in &cfg.scan.k_exponents {
            let below: Vec<f64> = negatives.iter().copied().filter(|&l| l < -beta).collect();
            let direct = lt_sum(&below, k)?;
            let stieltjes = if negatives.is_empty() {
                0.0
            } else {
                stieltjes_lt(&spectrum, k, beta, bottom)?
            };
            let difference = (direct - stieltjes).abs();
            worst = worst.max(difference / (1.0 + direct.abs()));
            if difference > 1e-9 * (1.0 + direct.abs()) {
                return Err(Error::invariant(
                    "Stieltjes moment identity",
                    format!(
                        "direct sum {direct} and layer-cake form {stieltjes} differ by \
                         {difference} at g = {g}, k = {k}"
                    ),
                ));
            }
            csv.push_str(&format!(
                "{g},{k},{beta},{},{direct},{stieltjes},{difference}\n",
                below.len()
            ));
            rows.push(json!({
                "g": g, "k": k, "beta": beta, "n_below": below.len(),
                "direct": direct, "stieltjes": stieltjes, "difference": difference,
            }));
        }
    }
    Ok(CommandOutput {
        tables: vec![("lt-scan", csv)],
        summary: json!({ "rows": rows, "worst_relative_difference": worst }),
        console: vec![format!(
            "Stieltjes moment identity verified over {} (g, k) pairs, worst relative \
             difference {worst:.2e}",
            rows.len()
        )],
    })
}

fn mc_report(est_re: f64, est_im: f64, stderr: f64, cfg: &ExperimentConfig, x0: &[f64]) -> Value {
    json!({
        "estimate": { "re": est_re, "im": est_im },
        "stderr": stderr,
        "n_paths": cfg.mc.paths,
        "m": cfg.mc.steps,
        "seed": cfg.mc.seed,
        "t": cfg.mc.t,
        "x0": x0,
    })
}

fn run_fk_mc(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let v = cfg.potential_or_zero();
    let x0 = cfg.start_point();
    let est = feynman_kac(
        |_| 1.0,
        |x: &[f64]| v.eval(x),
        cfg.mc.t,
        &x0,
        cfg.mc.paths,
        cfg.mc.steps,
        cfg.mc.seed,
    )?;
    Ok(CommandOutput {
        tables: Vec::new(),
        summary: mc_report(est.mean, 0.0, est.stderr, cfg, &x0),
        console: vec![format!(
            "(e^(-tH(0,V)) 1)({x0:?}) = {:.6} +- {:.6} over {} paths",
            est.mean, est.stderr, cfg.mc.paths
        )],
    })
}

fn run_fki_mc(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let v = cfg.potential_or_zero();
    let a = cfg.magnetic_or_zero();
    let x0 = cfg.start_point();
    let est = fki_magnetic(
        |_| 1.0,
        |x: &[f64]| v.eval(x),
        &a,
        cfg.mc.t,
        &x0,
        cfg.mc.paths,
        cfg.mc.steps,
        cfg.mc.seed,
    )?;
    Ok(CommandOutput {
        tables: Vec::new(),
        summary: mc_report(est.mean.re, est.mean.im, est.stderr, cfg, &x0),
        console: vec![format!(
            "(e^(-tH(A,V)) 1)({x0:?}) = {:.6} + {:.6}i +- {:.6} over {} paths",
            est.mean.re, est.mean.im, est.stderr, cfg.mc.paths
        )],
    })
}

/// Classifies an error into the exit-code tier it belongs to: invariant
/// violations are 3, everything else that survives config validation is a
/// numerical failure, 2. Stage wrappers are transparent.
pub fn exit_code_for(err: &Error) -> i32 {
    let mut e = err;
    while let Error::Stage { source, .. } = e {
        e = source;
    }
    match e {
        Error::Invariant { .. } => 3,
        _ => 2,
    }
}

fn write_reports(
    cfg: &ExperimentConfig,
    out: &CommandOutput,
    provenance: &Value,
    wall_time: f64,
) -> Result<Vec<String>> {
    let dir = &cfg.output.directory;
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let stem = cfg.command.as_str();

    if cfg.output.formats.contains(&ReportFormat::Csv) {
        // One provenance comment, then pure header + rows; `#` comments are
        // skipped natively by the usual plotting stacks.
        let stamp = format!(
            "# command={} config_hash={} version={}\n",
            provenance["command"].as_str().unwrap_or(""),
            provenance["config_hash"].as_str().unwrap_or(""),
            provenance["version"].as_str().unwrap_or(""),
        );
        for (name, body) in &out.tables {
            let path = dir.join(format!("{name}.csv"));
            fs::write(&path, format!("{stamp}{body}"))?;
            written.push(path.display().to_string());
        }
    }
    if cfg.output.formats.contains(&ReportFormat::Json) {
        let mut summary = out.summary.clone();
        if let Value::Object(map) = &mut summary {
            if let Value::Object(prov) = provenance {
                for (k, v) in prov {
                    map.insert(k.clone(), v.clone());
                }
            }
        }
        let path = dir.join(format!("{stem}.json"));
        fs::write(&path, format!("{:#}\n", summary))?;
        written.push(path.display().to_string());
    }

    let started = SystemTime::now()
        .duration_since(SystemTime::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut meta = provenance.clone();
    if let Value::Object(map) = &mut meta {
        map.insert("wall_time_seconds".into(), json!(wall_time));
        map.insert("finished_unix".into(), json!(started));
    }
    let meta_path = dir.join("run_meta.json");
    fs::write(&meta_path, format!("{:#}\n", meta))?;
    written.push(meta_path.display().to_string());
    Ok(written)
}

fn catalog_value() -> Value {
    json!({
        "commands": {
            "kernel-check": "closed-form kernel identities: mass, Chapman-Kolmogorov, Levy-Khinchin, diagonal envelope",
            "levy-khinchin": "jump-measure reconstruction of the symbol in the configured dimension",
            "gauge-check": "entrywise gauge covariance of the lattice Hamiltonian under [gauge]",
            "diamagnetic": "semigroup domination |e^(-tH_A)| <= e^(-tH_0), matrix level and pathwise Monte Carlo",
            "bs-count": "Birman-Schwinger eigenvalue counts against the direct spectrum at each alpha",
            "chain": "direct count <= Birman-Schwinger <= magnetic trace <= free trace, per alpha",
            "bound-scan": "eigenvalue counts against the two-moment bound over a coupling ladder",
            "lt-scan": "moment sums of the negative spectrum against their layer-cake rewriting",
            "fk-mc": "Monte Carlo estimate of (e^(-tH(0,V)) 1)(x0)",
            "fki-mc": "Monte Carlo estimate of (e^(-tH(A,V)) 1)(x0) with the circulation phase",
        },
        "potentials": {
            "zero": {},
            "square-well": { "depth": "f64", "radius": "f64", "center": "[f64] (optional)" },
            "gaussian-well": { "amplitude": "f64", "width": "f64", "center": "[f64] (optional)" },
            "compact-bump": { "amplitude": "f64", "radius": "f64", "center": "[f64] (optional)" },
            "sum": { "parts": "[potential]" },
        },
        "magnetic-fields": {
            "zero": {},
            "constant-b": { "b": "f64" },
            "linear-b": { "slope": "f64" },
        },
        "vector-potentials": {
            "zero": {},
            "transversal": { "field": "magnetic-field" },
            "landau": { "b": "f64" },
            "gauged": { "base": "vector-potential", "gauge": "gauge function" },
        },
        "gauge": { "constant": "f64", "linear": "[f64]", "quad": "[[f64]]" },
        "blocks": {
            "grid": { "d": "1..=3", "n": "even, >= 8", "l": "box half-width (alias L)", "boundary": "periodic" },
            "potential": "one of the potentials above",
            "magnetic": "one of the vector potentials above",
            "gauge": "a quadratic gauge function",
            "scan": { "couplings": "[f64], ascending", "alphas": "[f64], positive", "k_exponents": "[f64], positive (exactly 2 for bound-scan)" },
            "mc": { "paths": "usize", "steps": "usize", "seed": "u64", "t": "f64", "x0": "[f64] (empty = origin)" },
            "output": { "directory": "path", "formats": "subset of [csv, json]" },
        },
    })
}

/// Writes to stdout, swallowing broken pipes so `relmag ... | head` exits
/// quietly instead of panicking.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn print_catalog(as_json: bool) {
    let cat = catalog_value();
    if as_json {
        emit(&format!("{:#}\n", cat));
        return;
    }
    let Value::Object(sections) = &cat else {
        unreachable!()
    };
    let mut text = String::new();
    for (section, content) in sections {
        text.push_str(&format!("{section}:\n"));
        let Value::Object(entries) = content else {
            continue;
        };
        for (name, detail) in entries {
            match detail {
                Value::String(s) => text.push_str(&format!("  {name}: {s}\n")),
                Value::Object(params) if params.is_empty() => {
                    text.push_str(&format!("  {name}\n"))
                }
                Value::Object(params) => {
                    let fields: Vec<String> =
                        params.iter().map(|(k, v)| format!("{k}: {}", render(v))).collect();
                    text.push_str(&format!("  {name} {{ {} }}\n", fields.join(", ")));
                }
                other => text.push_str(&format!("  {name}: {other}\n")),
            }
        }
        text.push('\n');
    }
    emit(&text);
}

fn render(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Entry point of the `relmag` binary; returns the process exit code.
pub fn main_entry() -> i32 {
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
    run_cli(cli)
}

fn run_cli(cli: Cli) -> i32 {
    if cli.catalog {
        print_catalog(cli.json);
        return 0;
    }
    let Some(path) = cli.config.as_deref() else {
        eprintln!("config: pass --config PATH, or --catalog for the vocabulary");
        return 1;
    };
    let (mut cfg, hash) = match load_config(path) {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("{e}");
            return 1;
        }
    };
    if let Some(seed) = cli.seed {
        cfg.mc.seed = seed;
    }
    if let Some(dir) = cli.out {
        cfg.output.directory = dir;
    }
    if let Some(workers) = cli.workers {
        if workers == 0 {
            eprintln!("config: --workers must be at least 1");
            return 1;
        }
        // A second build_global in one process is harmless: the pool is set
        // once and later calls fail quietly.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }

    let provenance = json!({
        "command": cfg.command.as_str(),
        "config_hash": hash,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let clock = Instant::now();
    match execute(&cfg) {
        Ok(output) => {
            let wall = clock.elapsed().as_secs_f64();
            match write_reports(&cfg, &output, &provenance, wall) {
                Ok(files) => {
                    for line in &output.console {
                        emit(&format!("{line}\n"));
                    }
                    for f in files {
                        emit(&format!("wrote {f}\n"));
                    }
                    0
                }
                Err(e) => {
                    eprintln!("numerical: {}", e.at_stage("writing reports"));
                    2
                }
            }
        }
        Err(e) => {
            let code = exit_code_for(&e);
            let tier = if code == 3 { "invariant" } else { "numerical" };
            eprintln!("{tier}: {e}");
            code
        }
    }
}
