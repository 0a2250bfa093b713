//! Parameter sweeps, fluctuating-loss Monte Carlo and table output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::channels::{db_to_transmittance, LossConfig};
use crate::error::{domain, FocklineError, Result};
use crate::kravchuk::photon_distribution;
use crate::measures::{log_negativity_pure_closed, qfi_pure};
use crate::protocol::{
    closed_form_epsilon_pair, closed_form_lossless, closed_form_symmetric, simulate_pipeline, ConditionalResult,
    Cutoff, PipelineConfig, Readout, Source, DEFAULT_CUTOFF_TOL,
};

/// Environment variable capping the worker count (`0` or unset: automatic).
pub const THREADS_ENV: &str = "FOCKLINE_THREADS";

/// Runs `f` on a pool sized by [`THREADS_ENV`].
pub fn with_thread_pool<T, F>(f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .or_else(|_| domain(format!("{THREADS_ENV} must be a nonnegative integer, got {v:?}")))?,
        _ => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| FocklineError::Domain(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// One loss setting of a sweep. Signal and detector losses are applied
/// equally on both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub r_a2: f64,
    pub r_b2: f64,
    pub r_s: f64,
    pub r_d: f64,
}

impl GridPoint {
    pub fn new(r_a2: f64, r_b2: f64, r_s: f64, r_d: f64) -> Self {
        Self { r_a2, r_b2, r_s, r_d }
    }

    /// Equal idler attenuation in dB on both sides.
    pub fn symmetric_db(db: f64, r_s: f64, r_d: f64) -> Result<Self> {
        let r = crate::channels::db_to_reflectivity(db)?;
        Ok(Self::new(r, r, r_s, r_d))
    }

    pub fn losses(&self) -> LossConfig {
        LossConfig::lossless()
            .with_idlers(self.r_a2, self.r_b2)
            .with_signals(self.r_s, self.r_s)
            .with_detectors(self.r_d, self.r_d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMode {
    #[default]
    FullSim,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub g: f64,
    pub sigma: u32,
    pub k_set: Vec<u32>,
    pub grid: Vec<GridPoint>,
    pub mode: SweepMode,
    pub cutoff: Cutoff,
}

impl SweepSpec {
    pub fn new(g: f64, sigma: u32, k_set: Vec<u32>, grid: Vec<GridPoint>) -> Self {
        Self {
            g,
            sigma,
            k_set,
            grid,
            mode: SweepMode::FullSim,
            cutoff: Cutoff::Conditional(DEFAULT_CUTOFF_TOL),
        }
    }

    pub fn with_mode(mut self, mode: SweepMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return domain("the loss grid is empty");
        }
        if let Some(&k) = self.k_set.iter().find(|&&k| k > self.sigma) {
            return domain(format!("readout k = {k} exceeds σ = {}", self.sigma));
        }
        for (i, p) in self.grid.iter().enumerate() {
            p.losses()
                .validate()
                .map_err(|e| FocklineError::Domain(format!("grid entry {i}: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub g: f64,
    pub sigma: u32,
    pub k: u32,
    pub point: GridPoint,
    pub probability: f64,
    pub e_n: Option<f64>,
    pub source: Source,
}

fn closed_form(g: f64, sigma: u32, k: u32, p: &GridPoint) -> Result<ConditionalResult> {
    if p.r_s != 0.0 {
        return domain("no closed form with signal loss");
    }
    if p.r_a2 == p.r_b2 {
        if p.r_a2 == 0.0 && p.r_d == 0.0 {
            return closed_form_lossless(g, sigma, k);
        }
        return closed_form_symmetric(g, p.r_a2, p.r_d, sigma, k);
    }
    if p.r_d == 0.0 && p.r_a2.min(p.r_b2) == 0.0 {
        return closed_form_epsilon_pair(g, 1.0 - p.r_a2, 1.0 - p.r_b2, sigma, k);
    }
    domain("closed forms need equal idler losses, or one lossless idler and ideal detectors")
}

fn sweep_point(spec: &SweepSpec, point: &GridPoint) -> Result<Vec<ConditionalResult>> {
    match spec.mode {
        SweepMode::FullSim => {
            let cfg = PipelineConfig::new(spec.g, Readout::Total(spec.sigma))
                .with_cutoff(spec.cutoff)
                .with_losses(point.losses());
            let all = simulate_pipeline(&cfg)?;
            Ok(spec.k_set.iter().map(|&k| all[k as usize].clone()).collect())
        }
        SweepMode::ClosedForm => spec
            .k_set
            .iter()
            .map(|&k| closed_form(spec.g, spec.sigma, k, point))
            .collect(),
    }
}

/// One row per `(grid point, k)`, grid-major in the order given.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    if spec.k_set.is_empty() {
        return Ok(Vec::new());
    }
    let per_point: Vec<Result<Vec<ConditionalResult>>> = spec
        .grid
        .par_iter()
        .enumerate()
        .map(|(i, point)| {
            sweep_point(spec, point).map_err(|e| match e {
                FocklineError::Domain(m) => FocklineError::Domain(format!("grid entry {i}: {m}")),
                other => other,
            })
        })
        .collect();
    let mut rows = Vec::with_capacity(spec.grid.len() * spec.k_set.len());
    for (point, results) in spec.grid.iter().zip(per_point) {
        for res in results? {
            rows.push(SweepRow {
                g: spec.g,
                sigma: spec.sigma,
                k: res.k,
                point: *point,
                probability: res.probability,
                e_n: res.e_n,
                source: res.source,
            });
        }
    }
    Ok(rows)
}

/// Fluctuating idler attenuation. Alice's attenuation is drawn per sample;
/// Bob's stays at `t_b2_db` unless `both` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationSpec {
    pub g: f64,
    pub sigma: u32,
    pub k_set: Vec<u32>,
    pub mean_db: f64,
    /// Standard deviation of the attenuation in dB.
    pub spread_db: f64,
    pub samples: usize,
    /// Bob's attenuation; defaults to `mean_db`.
    pub t_b2_db: Option<f64>,
    pub both: bool,
    pub seed: u64,
}

impl FluctuationSpec {
    pub fn new(g: f64, sigma: u32, k_set: Vec<u32>, mean_db: f64) -> Self {
        Self {
            g,
            sigma,
            k_set,
            mean_db,
            spread_db: 1.0,
            samples: 500,
            t_b2_db: None,
            both: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return domain("at least one sample is required");
        }
        if !(self.spread_db >= 0.0 && self.spread_db.is_finite()) {
            return domain(format!("spread must be nonnegative, got {} dB", self.spread_db));
        }
        db_to_transmittance(self.mean_db)?;
        db_to_transmittance(self.bob_db())?;
        if let Some(&k) = self.k_set.iter().find(|&&k| k > self.sigma) {
            return domain(format!("readout k = {k} exceeds σ = {}", self.sigma));
        }
        Ok(())
    }

    pub fn bob_db(&self) -> f64 {
        self.t_b2_db.unwrap_or(self.mean_db)
    }
}

/// Standard normal deviates for one sample.
///
/// Stream `index` of ChaCha8 seeded with `seed` yields 64-bit words `x`;
/// each becomes `u = (⌊x / 2¹¹⌋ + ½) / 2⁵³ ∈ (0, 1)` and then `Φ⁻¹(u)`.
pub fn normal_deviates(seed: u64, index: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let normal = Normal::standard();
    (0..count)
        .map(|_| {
            let u = ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
            normal.inverse_cdf(u)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationSample {
    pub index: usize,
    pub db_a: f64,
    pub db_b: f64,
    /// One value per entry of `k_set`.
    pub e_n: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationSummary {
    pub k: u32,
    /// Value at the unperturbed attenuations.
    pub baseline: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl FluctuationSummary {
    pub fn gap(&self) -> f64 {
        self.baseline - self.mean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationReport {
    pub samples: Vec<FluctuationSample>,
    pub summaries: Vec<FluctuationSummary>,
}

fn epsilon_entanglement(spec: &FluctuationSpec, db_a: f64, db_b: f64) -> Result<Vec<f64>> {
    // Attenuations drawn below zero are treated as a lossless channel.
    let t_a = db_to_transmittance(db_a.max(0.0))?;
    let t_b = db_to_transmittance(db_b.max(0.0))?;
    spec.k_set
        .iter()
        .map(|&k| {
            let res = closed_form_epsilon_pair(spec.g, t_a, t_b, spec.sigma, k)?;
            res.e_n.ok_or_else(|| {
                FocklineError::Degenerate(format!("readout k = {k} has zero probability at {db_a} dB"))
            })
        })
        .collect()
}

/// Draws per-sample attenuations and evaluates `E_N` through the ε state.
/// Results do not depend on the number of worker threads.
pub fn fluctuation_mc(spec: &FluctuationSpec) -> Result<FluctuationReport> {
    spec.validate()?;
    let samples: Vec<FluctuationSample> = (0..spec.samples)
        .into_par_iter()
        .map(|index| {
            let z = normal_deviates(spec.seed, index as u64, if spec.both { 2 } else { 1 });
            let db_a = spec.mean_db + spec.spread_db * z[0];
            let db_b = if spec.both {
                spec.bob_db() + spec.spread_db * z[1]
            } else {
                spec.bob_db()
            };
            let e_n = epsilon_entanglement(spec, db_a, db_b)?;
            Ok(FluctuationSample { index, db_a, db_b, e_n })
        })
        .collect::<Result<_>>()?;
    let baseline = epsilon_entanglement(spec, spec.mean_db, spec.bob_db())?;
    let summaries = spec
        .k_set
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let values = samples.iter().map(|s| s.e_n[j]);
            let mean = values.clone().sum::<f64>() / samples.len() as f64;
            FluctuationSummary {
                k,
                baseline: baseline[j],
                mean,
                min: values.clone().fold(f64::INFINITY, f64::min),
                max: values.fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    Ok(FluctuationReport { samples, summaries })
}

/// A table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    /// `None` prints as `nan`.
    Real(Option<f64>),
    Text(String),
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(Some(v))
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Comma-separated text with a header line, reals in scientific notation
    /// with 12 significant digits, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Int(v) => write!(out, "{v}").unwrap(),
                    Cell::Real(Some(v)) if v.is_finite() => write!(out, "{v:.11e}").unwrap(),
                    Cell::Real(Some(v)) if v.is_infinite() => {
                        out.push_str(if *v > 0.0 { "inf" } else { "-inf" })
                    }
                    Cell::Real(_) => out.push_str("nan"),
                    Cell::Text(s) => out.push_str(s),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Writes `table` to `path` as produced by [`Table::to_csv`].
pub fn emit_table(table: &Table, path: &Path) -> Result<()> {
    fs::write(path, table.to_csv()).map_err(|source| FocklineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(vec![
        "g", "sigma", "k", "r_a2", "r_b2", "r_s", "r_d", "probability", "e_n", "source",
    ]);
    for r in rows {
        t.push(vec![
            r.g.into(),
            r.sigma.into(),
            r.k.into(),
            r.point.r_a2.into(),
            r.point.r_b2.into(),
            r.point.r_s.into(),
            r.point.r_d.into(),
            r.probability.into(),
            r.e_n.into(),
            r.source.as_str().into(),
        ]);
    }
    t
}

/// Lossless `E_N` and Fisher information for every readout of `S`.
pub fn ideal_table(s: u32) -> Result<Table> {
    let mut t = Table::new(vec!["k", "e_n", "qfi"]);
    for k in 0..=s {
        t.push(vec![
            k.into(),
            log_negativity_pure_closed(s, k)?.into(),
            qfi_pure(s, k)?.into(),
        ]);
    }
    Ok(t)
}

/// `|A_S(k, n)|²` for every readout of `S`, one row per `(k, n)`.
pub fn distribution_table(s: u32) -> Result<Table> {
    let mut t = Table::new(vec!["k", "n", "probability"]);
    for k in 0..=s {
        for (n, p) in photon_distribution(s, k)?.into_iter().enumerate() {
            t.push(vec![k.into(), n.into(), p.into()]);
        }
    }
    Ok(t)
}

pub fn fluctuation_samples_table(spec: &FluctuationSpec, report: &FluctuationReport) -> Table {
    let mut t = Table::new(vec!["sample", "k", "db_a", "db_b", "e_n"]);
    for s in &report.samples {
        for (j, &k) in spec.k_set.iter().enumerate() {
            t.push(vec![s.index.into(), k.into(), s.db_a.into(), s.db_b.into(), s.e_n[j].into()]);
        }
    }
    t
}

pub fn fluctuation_summary_table(report: &FluctuationReport) -> Table {
    let mut t = Table::new(vec!["k", "baseline", "mean", "min", "max", "gap"]);
    for s in &report.summaries {
        t.push(vec![
            s.k.into(),
            s.baseline.into(),
            s.mean.into(),
            s.min.into(),
            s.max.into(),
            s.gap().into(),
        ]);
    }
    t
}
