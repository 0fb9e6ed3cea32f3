//! Command-line front end: capacity regions, design rates, density
//! evolution, degree-distribution optimization and broadcast simulation.

pub mod config;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use bcldpc::capacity::{binary_superposition_region, gaussian_region, proposed_region, RegionCurve};
use bcldpc::channel::{llr_density, User};
use bcldpc::codec::{simulate_broadcast, CodeInstance, SimulationOptions};
use bcldpc::de::evolve_observed;
use bcldpc::design::{optimize_lambda, DesignProblem, OperatingPoint};
use bcldpc::ensemble::{published_ensemble, published_ensembles, DegreeDistribution};
use bcldpc::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use config::ExperimentConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    NonConvergence(String),
    Other(anyhow::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::NonConvergence(m) => write!(f, "did not converge: {m}"),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::NonConvergence(_) => EXIT_NON_CONVERGENCE,
            CliError::Other(_) => EXIT_FAILURE,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::IntegrationNotConverged { .. }
            | Error::NotBracketed { .. }
            | Error::SeedDoesNotConverge
            | Error::LpInfeasible { .. }
            | Error::LpSolver(_) => CliError::NonConvergence(e.to_string()),
            Error::Construction(_) => CliError::Other(e.into()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "bcldpc", version, about = "LDPC coding for the two-user Gaussian broadcast channel")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed; required by `simulate`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Only errors on stderr, nothing on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Gaussian,
    Binary,
    Proposed,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity-region curves plus the published rate pairs as an overlay.
    Region {
        #[arg(long, value_enum, default_value = "all")]
        method: MethodArg,
        /// Also emit the upper concave envelope of the proposed curve.
        #[arg(long)]
        envelope: bool,
    },
    /// Design rate and normalization report of a degree distribution.
    Rate {
        /// JSON file, or `table:<user>:<alpha>` for a published column.
        dist: String,
    },
    /// Density evolution of a distribution on one user's channel.
    De {
        /// JSON file, or `table:<user>:<alpha>`.
        #[arg(long)]
        dist: String,
        /// `y` or `z`.
        #[arg(long)]
        user: User,
        /// Power split, in [0, 1].
        #[arg(long)]
        alpha: f64,
        /// Added to this user's SNR.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        snr_offset_db: f64,
        /// Dump the check-to-variable density every k iterations.
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Optimize lambda for a fixed rho on one user's channel.
    Optimize {
        /// Check distribution, e.g. `5:1` or `8:0.471,9:0.529`.
        #[arg(long)]
        rho: String,
        #[arg(long)]
        user: User,
        #[arg(long)]
        alpha: f64,
        /// Largest variable degree the LP may use.
        #[arg(long, default_value_t = 50)]
        max_var_degree: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        snr_offset_db: f64,
    },
    /// Finite-length Monte Carlo with independent per-user decoders.
    Simulate {
        #[arg(long)]
        dist_y: String,
        #[arg(long)]
        dist_z: String,
        /// Block length.
        #[arg(long)]
        n: usize,
        /// Blocks to simulate.
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        alpha: f64,
        /// Added to both users' SNRs.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        snr_offset_db: f64,
        #[arg(long, default_value_t = bcldpc::codec::DEFAULT_DECODER_ITERATIONS)]
        max_iter: usize,
        #[arg(long)]
        no_scrambling: bool,
        /// Write one CSV row per trial and user.
        #[arg(long)]
        trial_log: bool,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.common.quiet { log::LevelFilter::Error } else { log::LevelFilter::Info };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.common.seed {
        cfg.seed = Some(s);
    }
    let out = cli
        .common
        .out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Context {
        out,
        quiet: cli.common.quiet,
    };
    match &cli.command {
        Command::Region { method, envelope } => cmd_region(&ctx, &cfg, *method, *envelope),
        Command::Rate { dist } => cmd_rate(&ctx, dist),
        Command::De {
            dist,
            user,
            alpha,
            snr_offset_db,
            snapshot_every,
        } => {
            cfg.shift_snr(*user, *snr_offset_db);
            cmd_de(&ctx, &cfg, dist, *user, *alpha, *snapshot_every)
        }
        Command::Optimize {
            rho,
            user,
            alpha,
            max_var_degree,
            snr_offset_db,
        } => {
            cfg.shift_snr(*user, *snr_offset_db);
            cmd_optimize(&ctx, &cfg, rho, *user, *alpha, *max_var_degree)
        }
        Command::Simulate {
            dist_y,
            dist_z,
            n,
            trials,
            alpha,
            snr_offset_db,
            max_iter,
            no_scrambling,
            trial_log,
        } => {
            let seed = cfg
                .seed
                .ok_or_else(|| CliError::Validation("simulate requires --seed (or a seed in the config)".into()))?;
            cfg.shift_snr(User::Y, *snr_offset_db);
            cfg.shift_snr(User::Z, *snr_offset_db);
            let mut opts = SimulationOptions::new(*trials, seed);
            opts.max_iter = *max_iter;
            opts.scrambling = !no_scrambling;
            cmd_simulate(&ctx, &cfg, dist_y, dist_z, *n, *alpha, &opts, *trial_log)
        }
    }
}

struct Context {
    out: PathBuf,
    quiet: bool,
}

impl Context {
    fn dir(&self) -> Result<&Path, CliError> {
        fs::create_dir_all(&self.out)?;
        Ok(&self.out)
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.dir()?.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.into()))?;
        fs::write(&path, text + "\n")?;
        info!("wrote {}", path.display());
        Ok(path)
    }
}

/// Provenance wrapper written around every result.
#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    config: &'a ExperimentConfig,
    snr: config::SnrSummary,
    #[serde(flatten)]
    body: T,
}

fn artifact<'a, T: Serialize>(cfg: &'a ExperimentConfig, body: T) -> Artifact<'a, T> {
    Artifact {
        config: cfg,
        snr: cfg.snr_summary(),
        body,
    }
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(CliError::Validation(format!("--alpha: {alpha} outside [0, 1]")))
    }
}

/// Loads a distribution from a JSON file or `table:<user>:<alpha>`.
pub fn load_distribution(spec: &str) -> Result<DegreeDistribution, CliError> {
    if let Some(rest) = spec.strip_prefix("table:") {
        let (user, alpha) = rest
            .split_once(':')
            .ok_or_else(|| CliError::Validation(format!("{spec}: expected table:<user>:<alpha>")))?;
        let user: User = user.parse()?;
        let alpha: f64 = alpha
            .parse()
            .map_err(|_| CliError::Validation(format!("{spec}: bad alpha '{alpha}'")))?;
        return published_ensemble(user, alpha)
            .map(|e| e.distribution)
            .ok_or_else(|| CliError::Validation(format!("{spec}: no published column (alphas 0.1, 0.2, 0.3, 0.8)")));
    }
    let text = fs::read_to_string(spec).map_err(|e| CliError::Validation(format!("{spec}: {e}")))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        CliError::Validation(format!("{spec}:{}:{}: {}: {}", inner.line(), inner.column(), e.path(), inner))
    })
}

/// Parses `5:1` or `8:0.471,9:0.529`.
pub fn parse_rho(spec: &str) -> Result<BTreeMap<usize, f64>, CliError> {
    spec.split(',')
        .map(|part| {
            let (d, v) = part
                .split_once(':')
                .ok_or_else(|| CliError::Validation(format!("--rho: '{part}' is not degree:fraction")))?;
            let d: usize = d.trim().parse().map_err(|_| CliError::Validation(format!("--rho: bad degree '{d}'")))?;
            let v: f64 = v.trim().parse().map_err(|_| CliError::Validation(format!("--rho: bad fraction '{v}'")))?;
            Ok((d, v))
        })
        .collect()
}

fn cmd_region(ctx: &Context, cfg: &ExperimentConfig, method: MethodArg, envelope: bool) -> Result<(), CliError> {
    let alphas = cfg.alpha_values();
    let base = cfg.channel(0.5)?;
    let want = |m| method == MethodArg::All || method == m;
    let mut curves: Vec<RegionCurve> = Vec::new();
    if want(MethodArg::Gaussian) {
        curves.push(gaussian_region(&base, &alphas)?);
    }
    if want(MethodArg::Binary) {
        curves.push(binary_superposition_region(&base, &alphas)?);
    }
    if want(MethodArg::Proposed) {
        let c = proposed_region(&base, &alphas, &cfg.quadrature)?;
        if envelope {
            let env = c.upper_concave_envelope();
            curves.push(c);
            curves.push(env);
        } else {
            curves.push(c);
        }
    }
    let dir = ctx.dir()?.to_path_buf();
    for c in &curves {
        let path = dir.join(format!("region_{}.csv", c.method.as_str()));
        let mut w = BufWriter::new(File::create(&path)?);
        c.write_csv(&mut w, true)?;
        ctx.say(format!("{}: {} points -> {}", c.method.as_str(), c.points.len(), path.display()));
    }
    // Published rate pairs, one row per power split.
    let cross = dir.join("cross_points.csv");
    let mut text = String::from("method,alpha,R_y_bits,R_z_bits\n");
    let published = published_ensembles();
    for y in published.iter().filter(|e| e.user == User::Y) {
        if let Some(z) = published.iter().find(|e| e.user == User::Z && e.alpha == y.alpha) {
            text.push_str(&format!("published,{:.6},{:.9},{:.9}\n", y.alpha, y.reported_rate, z.reported_rate));
        }
    }
    fs::write(&cross, text)?;
    ctx.say(format!("cross points -> {}", cross.display()));
    #[derive(Serialize)]
    struct Body<'a> {
        curves: &'a [RegionCurve],
    }
    ctx.write_json("region.json", &artifact(cfg, Body { curves: &curves }))?;
    Ok(())
}

fn cmd_rate(ctx: &Context, spec: &str) -> Result<(), CliError> {
    let dd = load_distribution(spec)?;
    let (norm, report) = dd.validate_and_normalize()?;
    let rate = norm.design_rate();
    ctx.say(format!("design rate: {rate:.6}"));
    ctx.say(format!(
        "lambda sum {:.6} (scaled by {:.6}), rho sum {:.6} (scaled by {:.6})",
        report.lambda_sum, report.lambda_scale, report.rho_sum, report.rho_scale
    ));
    #[derive(Serialize)]
    struct Body<'a> {
        source: &'a str,
        design_rate: f64,
        normalization: bcldpc::ensemble::NormalizationReport,
        normalized: &'a DegreeDistribution,
    }
    if ctx.out.exists() || !ctx.quiet {
        ctx.write_json(
            "rate.json",
            &Body {
                source: spec,
                design_rate: rate,
                normalization: report,
                normalized: &norm,
            },
        )?;
    }
    Ok(())
}

fn cmd_de(
    ctx: &Context,
    cfg: &ExperimentConfig,
    spec: &str,
    user: User,
    alpha: f64,
    snapshot_every: Option<usize>,
) -> Result<(), CliError> {
    check_alpha(alpha)?;
    let (dd, _) = load_distribution(spec)?.validate_and_normalize()?;
    let ch = cfg.channel(alpha)?;
    let dens = llr_density(user, &ch, cfg.labeling, cfg.grid, cfg.density_quadrature)?;
    let dir = ctx.dir()?.to_path_buf();
    let header = vec![format!("user={user} alpha={alpha} snr_y_db={} snr_z_db={}", cfg.snr_y_db, cfg.snr_z_db)];
    dens.write_csv_files(&dir, "channel_density", &header)?;
    let mut snapshot_err = None;
    let result = evolve_observed(&dd, &dens.symmetrized, &cfg.de, |stage| {
        if let Some(k) = snapshot_every.filter(|&k| k > 0) {
            if stage.iteration % k == 0 && snapshot_err.is_none() {
                let path = dir.join(format!("de_snapshot_{:04}.csv", stage.iteration));
                let mut lines = header.clone();
                lines.push(format!("iteration={} check_output", stage.iteration));
                if let Err(e) = File::create(&path).and_then(|f| stage.check_output.write_csv(BufWriter::new(f), &lines)) {
                    snapshot_err = Some(e);
                }
            }
        }
    });
    if let Some(e) = snapshot_err {
        return Err(e.into());
    }
    #[derive(Serialize)]
    struct Body<'a> {
        source: &'a str,
        user: User,
        alpha: f64,
        design_rate: f64,
        result: &'a bcldpc::de::DeResult,
    }
    ctx.write_json(
        "de_result.json",
        &artifact(
            cfg,
            Body {
                source: spec,
                user,
                alpha,
                design_rate: dd.design_rate(),
                result: &result,
            },
        ),
    )?;
    ctx.say(format!(
        "converged: {} after {} iterations, terminal error {:e}",
        result.converged, result.iterations, result.terminal_error
    ));
    if result.converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!("terminal error {:e}", result.terminal_error)))
    }
}

fn cmd_optimize(
    ctx: &Context,
    cfg: &ExperimentConfig,
    rho_spec: &str,
    user: User,
    alpha: f64,
    max_var_degree: usize,
) -> Result<(), CliError> {
    check_alpha(alpha)?;
    let rho = parse_rho(rho_spec)?;
    let ch = cfg.channel(alpha)?;
    let dens = llr_density(user, &ch, cfg.labeling, cfg.grid, cfg.density_quadrature)?;
    let mut problem = DesignProblem::new(rho, dens.symmetrized);
    problem.max_var_degree = max_var_degree;
    problem.max_iterations = cfg.de.max_iterations;
    problem.target_error = cfg.de.target_error;
    let mut outcome = optimize_lambda(&problem, None)?;
    outcome.certificate.operating_point = Some(OperatingPoint {
        user: user.to_string(),
        alpha,
        snr_y_db: cfg.snr_y_db,
        snr_z_db: cfg.snr_z_db,
    });
    ctx.write_json("lambda.json", &artifact(cfg, &outcome.distribution))?;
    ctx.write_json("certificate.json", &artifact(cfg, &outcome.certificate))?;
    ctx.say(format!(
        "design rate {:.4} after {} LP rounds (verification: {} iterations, error {:e})",
        outcome.certificate.design_rate,
        outcome.certificate.lp_rounds,
        outcome.verification.iterations,
        outcome.verification.terminal_error
    ));
    if outcome.verification.converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence("final verification failed".into()))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    ctx: &Context,
    cfg: &ExperimentConfig,
    spec_y: &str,
    spec_z: &str,
    n: usize,
    alpha: f64,
    opts: &SimulationOptions,
    trial_log: bool,
) -> Result<(), CliError> {
    check_alpha(alpha)?;
    let (dy, _) = load_distribution(spec_y)?.validate_and_normalize()?;
    let (dz, _) = load_distribution(spec_z)?.validate_and_normalize()?;
    let ch = cfg.channel(alpha)?;
    let code_y = Arc::new(CodeInstance::sample(&dy, n, opts.seed)?);
    let code_z = Arc::new(CodeInstance::sample(&dz, n, opts.seed.wrapping_add(1))?);
    info!("codes built: k_y = {}, k_z = {}", code_y.k(), code_z.k());
    let report = simulate_broadcast(&ch, cfg.labeling, code_y, code_z, opts)?;
    ctx.write_json("simulate_report.json", &artifact(cfg, &report))?;
    if trial_log {
        let path = ctx.dir()?.join("simulate_trials.csv");
        report.write_trial_csv(BufWriter::new(File::create(&path)?))?;
    }
    for (user, s) in &report.per_user {
        ctx.say(format!(
            "user {user}: BER {:.3e} [{:.2e}, {:.2e}], BLER {:.3} over {} blocks, avg iterations {:.1}",
            s.ber, s.ber_ci95[0], s.ber_ci95[1], s.bler, s.blocks, s.avg_iterations
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_parsing() {
        assert_eq!(parse_rho("5:1").unwrap(), BTreeMap::from([(5, 1.0)]));
        assert_eq!(parse_rho("8:0.471, 9:0.529").unwrap().len(), 2);
        assert!(matches!(parse_rho("8"), Err(CliError::Validation(_))));
    }

    #[test]
    fn table_specs() {
        let d = load_distribution("table:z:0.8").unwrap();
        assert!((d.validate_and_normalize().unwrap().0.design_rate() - 0.244).abs() < 0.005);
        assert!(load_distribution("table:y:0.5").is_err());
        assert!(load_distribution("table:q:0.1").is_err());
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::SeedDoesNotConverge).exit_code(), EXIT_NON_CONVERGENCE);
        assert_eq!(CliError::from(Error::NegativeSnr(-1.0)).exit_code(), EXIT_VALIDATION);
    }
}
