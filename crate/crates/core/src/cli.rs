//! Command-line front end. [`run`] returns the process exit code:
//! `0` on success, `1` for usage and input errors, `2` when a numerical
//! invariant fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::channels::{db_to_reflectivity, db_to_transmittance};
use crate::error::{FocklineError, Result};
use crate::experiments::{
    distribution_table, emit_table, fluctuation_mc, fluctuation_samples_table, fluctuation_summary_table,
    ideal_table, run_sweep, sweep_table, with_thread_pool, FluctuationSpec, GridPoint, SweepMode, SweepSpec,
    Cell, Table,
};
use crate::measures::{log_negativity, BipartiteSplit};
use crate::protocol::{
    efficiency, success_probability_from_transmittance, symmetric_decomposition, Cutoff, DEFAULT_CUTOFF_TOL,
};

#[derive(Debug, Parser)]
#[command(name = "fockline", version, about = "Multiphoton entanglement swapping in the Fock basis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lossless E_N and quantum Fisher information for every readout of S photons.
    Ideal(IdealArgs),
    /// E_N and click probabilities over a grid of loss settings.
    Sweep(SweepArgs),
    /// Terms of the symmetric-loss decomposition.
    Decompose(DecomposeArgs),
    /// Readout efficiencies, vacuum probability and success rate.
    Rates(RatesArgs),
    /// Monte Carlo over fluctuating idler attenuation.
    Fluctuate(FluctuateArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// Write the table here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IdealArgs {
    /// Total number of detected photons.
    #[arg(long = "S", value_name = "S")]
    s: u32,
    /// Print |A_S(k,n)|² instead of E_N and QFI.
    #[arg(long)]
    distribution: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.1)]
    g: f64,
    #[arg(long, default_value_t = 4)]
    sigma: u32,
    /// Comma-separated readouts k; `all` for 0..=σ, empty for none.
    #[arg(long, default_value = "all")]
    k: String,
    /// Comma-separated symmetric idler attenuations in dB.
    #[arg(long, value_name = "DB,...")]
    idler_db: Option<String>,
    /// Explicit grid point `r_a2,r_b2,r_s,r_d` as reflectivities (repeatable).
    #[arg(long, value_name = "RA2,RB2,RS,RD")]
    point: Vec<String>,
    /// Explicit grid point `a2,b2,s,d` as attenuations in dB (repeatable).
    #[arg(long, value_name = "DB,DB,DB,DB")]
    point_db: Vec<String>,
    /// Signal reflectivity used with --idler-db.
    #[arg(long, default_value_t = 0.0)]
    r_s: f64,
    /// Detector reflectivity used with --idler-db.
    #[arg(long, default_value_t = 0.0)]
    r_d: f64,
    /// `full` simulation or `closed` form.
    #[arg(long, default_value = "full")]
    mode: String,
    #[command(flatten)]
    cutoff: CutoffArgs,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct CutoffArgs {
    /// Fock cutoff per source; derived from --tol when absent.
    #[arg(long)]
    n_max: Option<u32>,
    /// Truncated Schmidt weight allowed relative to the readout probability.
    #[arg(long, default_value_t = DEFAULT_CUTOFF_TOL)]
    tol: f64,
}

impl CutoffArgs {
    fn cutoff(&self) -> Cutoff {
        match self.n_max {
            Some(n) => Cutoff::Explicit(n),
            None => Cutoff::Conditional(self.tol),
        }
    }
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long, default_value_t = 0.1)]
    g: f64,
    /// Idler reflectivity on both sides.
    #[arg(long, conflicts_with = "db")]
    r: Option<f64>,
    /// Idler attenuation in dB on both sides.
    #[arg(long)]
    db: Option<f64>,
    #[arg(long, default_value_t = 4)]
    sigma: u32,
    #[arg(long, default_value_t = 0)]
    k: u32,
    /// Last pair number kept; chosen from the weight tail when absent.
    #[arg(long)]
    s_max: Option<u32>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct RatesArgs {
    #[arg(long, default_value_t = 0.1)]
    g: f64,
    /// Idler attenuation in dB on both sides.
    #[arg(long, default_value_t = 80.0)]
    db: f64,
    /// Alice's idler attenuation in dB (overrides --db).
    #[arg(long)]
    db_a: Option<f64>,
    /// Bob's idler attenuation in dB (overrides --db).
    #[arg(long)]
    db_b: Option<f64>,
    /// Pulse repetition rate in Hz.
    #[arg(long, default_value_t = 80e6)]
    frep: f64,
    /// Photon numbers for the lossless efficiency rows.
    #[arg(long = "S", value_name = "S,...", value_delimiter = ',', default_value = "2,4")]
    s: Vec<u32>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct FluctuateArgs {
    #[arg(long, default_value_t = 0.1)]
    g: f64,
    #[arg(long, default_value_t = 4)]
    sigma: u32,
    /// Comma-separated readouts k; `all` for 0..=σ.
    #[arg(long, default_value = "0,1,2")]
    k: String,
    #[arg(long, default_value_t = 80.0)]
    mean_db: f64,
    /// Standard deviation of the attenuation in dB.
    #[arg(long, default_value_t = 1.0)]
    spread_db: f64,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    /// Bob's fixed idler attenuation in dB; defaults to --mean-db.
    #[arg(long)]
    t_b2_db: Option<f64>,
    /// Draw Bob's attenuation independently as well.
    #[arg(long)]
    both: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-sample values are written here when given.
    #[arg(long)]
    samples_output: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

/// Input that parsed as flags but is not meaningful.
struct Usage(String);

enum Failure {
    Usage(String),
    Numeric(FocklineError),
}

impl From<FocklineError> for Failure {
    fn from(e: FocklineError) -> Self {
        Failure::Numeric(e)
    }
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u.0)
    }
}

fn parse_real(text: &str, what: &str) -> std::result::Result<f64, Usage> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Usage(format!("invalid {what} {text:?}")))
}

fn parse_list(text: &str, what: &str) -> std::result::Result<Vec<f64>, Usage> {
    text.split(',').map(|t| parse_real(t, what)).collect()
}

fn parse_k_set(text: &str, sigma: u32) -> std::result::Result<Vec<u32>, Usage> {
    match text.trim() {
        "all" => Ok((0..=sigma).collect()),
        "" => Ok(Vec::new()),
        list => list
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Usage(format!("invalid readout k {t:?}")))
            })
            .collect(),
    }
}

fn parse_point(text: &str, in_db: bool) -> std::result::Result<GridPoint, Failure> {
    let what = if in_db { "dB value" } else { "reflectivity" };
    let v = parse_list(text, what)?;
    if v.len() != 4 {
        return Err(Failure::Usage(format!("grid point {text:?} needs four values")));
    }
    if in_db {
        let r = |db: f64| db_to_reflectivity(db).map_err(|_| Usage(format!("invalid dB value {db}")));
        Ok(GridPoint::new(r(v[0])?, r(v[1])?, r(v[2])?, r(v[3])?))
    } else {
        Ok(GridPoint::new(v[0], v[1], v[2], v[3]))
    }
}

fn write_out(table: &Table, out: &Output) -> Result<()> {
    match &out.output {
        Some(path) => emit_table(table, path),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(table.to_csv().as_bytes())
                .map_err(|source| FocklineError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn ideal(args: &IdealArgs) -> std::result::Result<(), Failure> {
    let table = if args.distribution {
        distribution_table(args.s)?
    } else {
        ideal_table(args.s)?
    };
    Ok(write_out(&table, &args.out)?)
}

fn sweep(args: &SweepArgs) -> std::result::Result<(), Failure> {
    let mode = match args.mode.as_str() {
        "full" => SweepMode::FullSim,
        "closed" => SweepMode::ClosedForm,
        other => return Err(Failure::Usage(format!("unknown mode {other:?}, expected full or closed"))),
    };
    let k_set = parse_k_set(&args.k, args.sigma)?;
    let mut grid = Vec::new();
    if let Some(list) = &args.idler_db {
        for db in parse_list(list, "dB value")? {
            let point = GridPoint::symmetric_db(db, args.r_s, args.r_d)
                .map_err(|_| Usage(format!("invalid dB value {db}")))?;
            grid.push(point);
        }
    }
    for p in &args.point {
        grid.push(parse_point(p, false)?);
    }
    for p in &args.point_db {
        grid.push(parse_point(p, true)?);
    }
    if grid.is_empty() {
        return Err(Failure::Usage("no grid points; use --idler-db, --point or --point-db".into()));
    }
    let mut spec = SweepSpec::new(args.g, args.sigma, k_set, grid).with_mode(mode);
    spec.cutoff = args.cutoff.cutoff();
    let rows = with_thread_pool(|| run_sweep(&spec))??;
    Ok(write_out(&sweep_table(&rows), &args.out)?)
}

fn decompose(args: &DecomposeArgs) -> std::result::Result<(), Failure> {
    let r = match (args.r, args.db) {
        (Some(r), _) => r,
        (None, Some(db)) => db_to_reflectivity(db).map_err(|_| Usage(format!("invalid dB value {db}")))?,
        (None, None) => 0.0,
    };
    let dec = symmetric_decomposition(args.g, r, args.sigma, args.k, args.s_max)?;
    if dec.truncated {
        eprintln!(
            "warning: terms up to S = {} hold {:.3e} of the total weight {:.3e}",
            dec.s_max(),
            dec.captured_weight(),
            dec.total_weight
        );
    }
    let mut table = Table::new(vec!["S", "chi", "chi_fraction", "e_n_int"]);
    for term in &dec.terms {
        table.push(vec![
            term.s.into(),
            term.chi.into(),
            (term.chi / dec.total_weight).into(),
            log_negativity(&term.rho_int, &BipartiteSplit::two_mode())?.into(),
        ]);
    }
    let full = dec.reconstruct()?;
    eprintln!(
        "E_N of the reconstructed state: {:.12}",
        log_negativity(&full, &BipartiteSplit::two_mode())?
    );
    Ok(write_out(&table, &args.out)?)
}

fn rates(args: &RatesArgs) -> std::result::Result<(), Failure> {
    if !(args.frep >= 0.0 && args.frep.is_finite()) {
        return Err(Failure::Usage(format!("invalid repetition rate {}", args.frep)));
    }
    let db_a = args.db_a.unwrap_or(args.db);
    let db_b = args.db_b.unwrap_or(args.db);
    let t = |db: f64| db_to_transmittance(db).map_err(|_| Usage(format!("invalid dB value {db}")));
    let (t_a, t_b) = (t(db_a)?, t(db_b)?);
    let p_success = success_probability_from_transmittance(args.g, t_a, t_b)?;
    let mut table = Table::new(vec!["quantity", "value"]);
    table.push(vec!["p_vacuum".into(), (1.0 - p_success).into()]);
    table.push(vec!["p_success".into(), p_success.into()]);
    table.push(vec!["success_rate_hz".into(), (p_success * args.frep).into()]);
    for &s in &args.s {
        let p = efficiency(args.g, s)?;
        table.push(vec![Cell::Text(format!("efficiency_S{s}")), p.into()]);
        table.push(vec![Cell::Text(format!("event_rate_S{s}_hz")), (p * args.frep).into()]);
        table.push(vec![Cell::Text(format!("events_per_minute_S{s}")), (60.0 * p * args.frep).into()]);
    }
    write_out(&table, &args.out)?;
    if args.frep > 0.0 {
        eprintln!(
            "note: success rate {:.3e} Hz; a rate of 1.6 Hz would need p_success = {:.1e} at this repetition rate",
            p_success * args.frep,
            1.6 / args.frep
        );
    }
    Ok(())
}

fn fluctuate(args: &FluctuateArgs) -> std::result::Result<(), Failure> {
    let mut spec = FluctuationSpec::new(args.g, args.sigma, parse_k_set(&args.k, args.sigma)?, args.mean_db);
    spec.spread_db = args.spread_db;
    spec.samples = args.samples;
    spec.t_b2_db = args.t_b2_db;
    spec.both = args.both;
    spec.seed = args.seed;
    let report = with_thread_pool(|| fluctuation_mc(&spec))??;
    if let Some(path) = &args.samples_output {
        emit_table(&fluctuation_samples_table(&spec, &report), path)?;
    }
    Ok(write_out(&fluctuation_summary_table(&report), &args.out)?)
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Ideal(a) => ideal(a),
        Command::Sweep(a) => sweep(a),
        Command::Decompose(a) => decompose(a),
        Command::Rates(a) => rates(a),
        Command::Fluctuate(a) => fluctuate(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e}");
            match e {
                FocklineError::InvariantViolation(_) | FocklineError::NotNormalized { .. } => 2,
                _ => 1,
            }
        }
    }
}
