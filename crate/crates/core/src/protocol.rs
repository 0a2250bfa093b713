//! Entanglement swapping between two squeezed-vacuum sources, simulated and
//! in closed form.
//!
//! Alice's source emits signal `a1` and idler `a2`, Bob's emits `b1` and
//! `b2`. The idlers travel through lossy channels to a balanced beam
//! splitter whose outputs hit photon-number-resolving detectors `d1` and
//! `d2`. A readout `(k, σ − k)` means `k` photons at `d1` and `σ` photons
//! in total. The conditional state lives on the signal modes `(a1, b1)`.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::channels::{balanced_bs, loss_channel, loss_channel_ancilla, LossConfig};
use crate::error::{domain, FocklineError, Result};
use crate::fock::{
    self, schmidt_cutoff, schmidt_weights, sv_pure_state, FixedState, FockDensityOperator, FockProjector,
    Occupation, OperatorBuilder, MAX_CUTOFF,
};
use crate::kravchuk::{bs_amplitude, photon_distribution, BsAmplitudeTable};
use crate::measures::{log_negativity, BipartiteSplit};
use crate::special::{binomial, binomial_exact};
use crate::C64;

/// Default tolerance for deriving the Fock cutoff from the gain.
pub const DEFAULT_CUTOFF_TOL: f64 = 1e-15;

/// Fraction of the total χ weight a decomposition must capture.
pub const DECOMPOSITION_CAPTURE: f64 = 1.0 - 1e-10;

/// Largest total photon number the closed-form sums will visit.
const MAX_SECTOR: u32 = 2 * MAX_CUTOFF;

/// How the Fock cutoff of each source is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff {
    Explicit(u32),
    /// Smallest `n_max` with `tanh^{2 n_max} g` below the tolerance.
    Tolerance(f64),
    /// [`Cutoff::Tolerance`] raised by the requested `σ`, so the truncated
    /// weight stays below the tolerance relative to the `O(tanh^{2σ} g)`
    /// readout probability. For [`Readout::UpTo`] this equals `Tolerance`.
    Conditional(f64),
}

/// Which detector readouts to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    Single { k: u32, sigma: u32 },
    /// Every `k` for one total `σ`.
    Total(u32),
    /// Every readout with `σ ≤ sigma_max` (capped at `2·n_max`).
    UpTo(u32),
}

/// Implementation of the photon-loss channel used for the sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossModel {
    #[default]
    Kernel,
    Ancilla,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Route {
    /// Pulls the detector measurement back through the beam splitter and
    /// contracts it against the two source states without building the
    /// four-mode operator.
    #[default]
    Fused,
    /// Materializes the four-mode state and applies every step literally.
    Stepwise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub g: f64,
    pub cutoff: Cutoff,
    pub losses: LossConfig,
    pub readout: Readout,
    pub loss_model: LossModel,
    pub route: Route,
}

impl PipelineConfig {
    /// Lossless pipeline with a [`Cutoff::Conditional`] cutoff at the
    /// default tolerance.
    pub fn new(g: f64, readout: Readout) -> Self {
        Self {
            g,
            cutoff: Cutoff::Conditional(DEFAULT_CUTOFF_TOL),
            losses: LossConfig::lossless(),
            readout,
            loss_model: LossModel::Kernel,
            route: Route::Fused,
        }
    }

    pub fn with_losses(mut self, losses: LossConfig) -> Self {
        self.losses = losses;
        self
    }

    pub fn with_cutoff(mut self, cutoff: Cutoff) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_loss_model(mut self, model: LossModel) -> Self {
        self.loss_model = model;
        self
    }

    pub fn with_route(mut self, route: Route) -> Self {
        self.route = route;
        self
    }

    pub fn n_max(&self) -> Result<u32> {
        match self.cutoff {
            Cutoff::Explicit(n) => {
                if n > MAX_CUTOFF {
                    return domain(format!("n_max = {n} exceeds the supported {MAX_CUTOFF}"));
                }
                Ok(n)
            }
            Cutoff::Tolerance(tol) => schmidt_cutoff(self.g, tol),
            Cutoff::Conditional(tol) => {
                let sigma = match self.readout {
                    Readout::Single { sigma, .. } | Readout::Total(sigma) => sigma,
                    Readout::UpTo(_) => 0,
                };
                let n = schmidt_cutoff(self.g, tol)?.saturating_add(sigma);
                if n > MAX_CUTOFF {
                    return domain(format!("n_max = {n} exceeds the supported {MAX_CUTOFF}"));
                }
                Ok(n)
            }
        }
    }

    /// The `(k, σ)` pairs this configuration asks for, in output order.
    pub fn readouts(&self) -> Result<Vec<(u32, u32)>> {
        let n_max = self.n_max()?;
        let cap = 2 * n_max;
        let check = |sigma: u32| {
            if sigma > cap {
                domain(format!("σ = {sigma} exceeds 2·n_max = {cap}"))
            } else {
                Ok(())
            }
        };
        Ok(match self.readout {
            Readout::Single { k, sigma } => {
                check(sigma)?;
                if k > sigma {
                    return domain(format!("readout k = {k} exceeds σ = {sigma}"));
                }
                vec![(k, sigma)]
            }
            Readout::Total(sigma) => {
                check(sigma)?;
                (0..=sigma).map(|k| (k, sigma)).collect()
            }
            Readout::UpTo(sigma_max) => (0..=sigma_max.min(cap))
                .flat_map(|sigma| (0..=sigma).map(move |k| (k, sigma)))
                .collect(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0 && self.g.is_finite()) {
            return domain(format!("gain must be positive and finite, got {}", self.g));
        }
        self.losses.validate()?;
        self.readouts().map(|_| ())
    }
}

/// Provenance of a [`ConditionalResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Simulated,
    ClosedFormLossless,
    ClosedFormSymmetric,
    ClosedFormEpsilon,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Simulated => "simulated",
            Source::ClosedFormLossless => "closed_form_lossless",
            Source::ClosedFormSymmetric => "closed_form_symmetric",
            Source::ClosedFormEpsilon => "closed_form_epsilon",
        }
    }
}

/// Outcome of one detector readout.
#[derive(Debug, Clone)]
pub struct ConditionalResult {
    pub k: u32,
    pub sigma: u32,
    /// Per-pulse probability of the readout.
    pub probability: f64,
    /// Unit-trace state of `(a1, b1)`; `None` when the readout cannot occur.
    pub state: Option<FockDensityOperator>,
    /// Logarithmic negativity of `state`.
    pub e_n: Option<f64>,
    pub source: Source,
}

impl ConditionalResult {
    /// Wraps an unnormalized branch. Traces at or below `floor` count as an
    /// impossible readout.
    fn from_branch(k: u32, sigma: u32, branch: FockDensityOperator, floor: f64, source: Source) -> Result<Self> {
        let probability = branch.trace();
        if !(probability > floor) {
            return Ok(Self {
                k,
                sigma,
                probability: 0.0,
                state: None,
                e_n: None,
                source,
            });
        }
        let state = branch.normalized()?;
        let e_n = log_negativity(&state, &BipartiteSplit::two_mode())?;
        Ok(Self {
            k,
            sigma,
            probability: probability.min(1.0),
            state: Some(state),
            e_n: Some(e_n),
            source,
        })
    }
}

fn lossy(op: &FockDensityOperator, mode: usize, r: f64, model: LossModel) -> Result<FockDensityOperator> {
    match model {
        LossModel::Kernel => loss_channel(op, mode, r),
        LossModel::Ancilla => loss_channel_ancilla(op, mode, r),
    }
}

/// One source after its signal and idler losses, modes `[signal, idler]`.
fn lossy_source(
    pure: &FockDensityOperator,
    r_signal: f64,
    r_idler: f64,
    model: LossModel,
) -> Result<FockDensityOperator> {
    let rho = lossy(pure, 0, r_signal, model)?;
    lossy(&rho, 1, r_idler, model)
}

/// Runs the full pipeline and returns one result per requested readout,
/// ordered by `(σ, k)`.
pub fn simulate_pipeline(config: &PipelineConfig) -> Result<Vec<ConditionalResult>> {
    config.validate()?;
    let n_max = config.n_max()?;
    let readouts = config.readouts()?;
    let spectrum = schmidt_weights(config.g, n_max)?;
    let pure = sv_pure_state(&spectrum)?;
    let l = &config.losses;
    let alice = lossy_source(&pure, l.r_a1, l.r_a2, config.loss_model)?;
    let bob = lossy_source(&pure, l.r_b1, l.r_b2, config.loss_model)?;
    let floors = CancellationFloor::new(&alice, &bob, l.r_d1, l.r_d2);
    match config.route {
        Route::Fused => {
            let bob = IdlerIndex::new(&bob);
            readouts
                .par_iter()
                .map(|&(k, sigma)| {
                    let branch = fused_branch(&alice, &bob, l.r_d1, l.r_d2, k, sigma, n_max)?;
                    ConditionalResult::from_branch(k, sigma, branch, floors.floor(k, sigma), Source::Simulated)
                })
                .collect()
        }
        Route::Stepwise => {
            // Mode order [a1, a2, b1, b2].
            let joint = fock::tensor(&alice, &bob)?;
            let mixed = balanced_bs(&joint, 1, 3)?;
            let detected = lossy(&mixed, 1, l.r_d1, config.loss_model)?;
            let detected = lossy(&detected, 3, l.r_d2, config.loss_model)?;
            readouts
                .par_iter()
                .map(|&(k, sigma)| {
                    let projector = FockProjector::new(vec![1, 3], vec![k, sigma - k])?;
                    let branch = fock::project(&detected, &projector)?;
                    ConditionalResult::from_branch(k, sigma, branch, floors.floor(k, sigma), Source::Simulated)
                })
                .collect()
        }
    }
}

/// Relative size below which a readout probability is treated as an exact
/// interference zero.
const CANCELLATION_TOL: f64 = 1e-12;

/// Rounding floor for each readout: `CANCELLATION_TOL` times the upper
/// bound `Σ_T P(T) max_a w_a(T)`, with `P(T)` the distribution of the total
/// idler photon number reaching the beam splitter.
struct CancellationFloor {
    idler_total: Vec<f64>,
    r_d1: f64,
    r_d2: f64,
}

impl CancellationFloor {
    fn new(alice: &FockDensityOperator, bob: &FockDensityOperator, r_d1: f64, r_d2: f64) -> Self {
        let marginal = |op: &FockDensityOperator| {
            let mut p = Vec::new();
            for (r, c, v) in op.entries() {
                if r == c {
                    let i = r.get(1) as usize;
                    if p.len() <= i {
                        p.resize(i + 1, 0.0);
                    }
                    p[i] += v.re;
                }
            }
            p
        };
        let (pa, pb) = (marginal(alice), marginal(bob));
        let mut idler_total = vec![0.0; (pa.len() + pb.len()).saturating_sub(1)];
        for (i, x) in pa.iter().enumerate() {
            for (j, y) in pb.iter().enumerate() {
                idler_total[i + j] += x * y;
            }
        }
        Self { idler_total, r_d1, r_d2 }
    }

    fn floor(&self, k: u32, sigma: u32) -> f64 {
        let bound: f64 = self
            .idler_total
            .iter()
            .enumerate()
            .skip(sigma as usize)
            .map(|(t, p)| {
                let t = t as u32;
                let best = (k..=t)
                    .map(|a| detection_weight(a, t, k, sigma, self.r_d1, self.r_d2))
                    .fold(0.0, f64::max);
                p.abs() * best
            })
            .sum();
        CANCELLATION_TOL * bound
    }
}

/// Probability that `(a, T − a)` photons at the detector ports register as
/// `(k, σ − k)`.
fn detection_weight(a: u32, t: u32, k: u32, sigma: u32, r_d1: f64, r_d2: f64) -> f64 {
    let b = t - a;
    if a < k || b + k < sigma {
        return 0.0;
    }
    binomial(a as i64, k as i64)
        * (1.0 - r_d1).powi(k as i32)
        * r_d1.powi((a - k) as i32)
        * binomial(b as i64, (sigma - k) as i64)
        * (1.0 - r_d2).powi((sigma - k) as i32)
        * r_d2.powi((b + k - sigma) as i32)
}

/// Source entries grouped by the idler occupations of row and column.
struct IdlerIndex {
    buckets: HashMap<(u32, u32), Vec<(u32, u32, C64)>, FixedState>,
}

impl IdlerIndex {
    fn new(op: &FockDensityOperator) -> Self {
        let mut buckets: HashMap<_, Vec<_>, FixedState> = HashMap::default();
        for (r, c, v) in op.entries() {
            buckets
                .entry((r.get(1), c.get(1)))
                .or_default()
                .push((r.get(0), c.get(0), v));
        }
        Self { buckets }
    }
}

/// `M_T[i][i'] = Σ_a w_a A_T(a, i) A_T(a, i')*`: the readout effect pulled
/// back to the idler sector with `T` photons, `i` counting photons in `a2`
/// and `w_a` the [`detection_weight`].
fn effect_block(t: u32, k: u32, sigma: u32, r_d1: f64, r_d2: f64) -> Vec<C64> {
    let dim = t as usize + 1;
    let table = BsAmplitudeTable::new(t);
    let mut block = vec![C64::new(0.0, 0.0); dim * dim];
    for a in k..=t {
        let w = detection_weight(a, t, k, sigma, r_d1, r_d2);
        if w == 0.0 {
            continue;
        }
        for i in 0..=t {
            let ai = table.get(a, i) * w;
            for j in 0..=t {
                block[i as usize * dim + j as usize] += ai * table.get(a, j).conj();
            }
        }
    }
    block
}

/// Unnormalized conditional signal state, `Tr_idlers[(ρ_A ⊗ ρ_B)(1 ⊗ E)]`.
fn fused_branch(
    alice: &FockDensityOperator,
    bob: &IdlerIndex,
    r_d1: f64,
    r_d2: f64,
    k: u32,
    sigma: u32,
    n_max: u32,
) -> Result<FockDensityOperator> {
    let blocks: Vec<Vec<C64>> = (0..=2 * n_max)
        .map(|t| {
            if t < sigma {
                Vec::new()
            } else {
                effect_block(t, k, sigma, r_d1, r_d2)
            }
        })
        .collect();
    let mut out = OperatorBuilder::new(2, n_max);
    for (row, col, va) in alice.entries() {
        let (sa, ia, sa2, ia2) = (row.get(0), row.get(1), col.get(0), col.get(1));
        let t_min = sigma.max(ia).max(ia2);
        let t_max = (ia + n_max).min(ia2 + n_max);
        for t in t_min..=t_max {
            let Some(entries) = bob.buckets.get(&(t - ia, t - ia2)) else {
                continue;
            };
            let m = blocks[t as usize][ia as usize * (t as usize + 1) + ia2 as usize];
            if m == C64::new(0.0, 0.0) {
                continue;
            }
            let vm = va * m;
            for &(sb, sb2, vb) in entries {
                out.add(Occupation::new(&[sa, sb])?, Occupation::new(&[sa2, sb2])?, vm * vb);
            }
        }
    }
    Ok(out.build())
}

/// `|Ψ_out⟩ = Σ_n A_S(k, n) |n, S − n⟩` on `(a1, b1)`: the signal state
/// heralded by readout `(k, S − k)` without loss.
pub fn lossless_output_state(s: u32, k: u32) -> Result<FockDensityOperator> {
    if k > s {
        return domain(format!("readout k = {k} exceeds S = {s}"));
    }
    if s > MAX_SECTOR {
        return domain(format!("S = {s} exceeds the supported {MAX_SECTOR}"));
    }
    let amps: Vec<(Vec<u32>, C64)> = (0..=s)
        .map(|n| bs_amplitude(s, k, n).map(|a| (vec![n, s - n], a)))
        .collect::<Result<_>>()?;
    FockDensityOperator::from_pure(2, s.div_ceil(2), &amps)
}

fn check_gain(g: f64) -> Result<f64> {
    if !(g > 0.0 && g.is_finite()) {
        return domain(format!("gain must be positive and finite, got {g}"));
    }
    Ok(g.tanh().powi(2))
}

fn check_reflectivity(r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return domain(format!("reflectivity must lie in [0, 1], got {r}"));
    }
    Ok(())
}

/// `p_S = λ_S / cosh² g`: per-pulse probability of any one readout
/// `(k, S − k)` in the lossless setup. Independent of `k`.
pub fn efficiency(g: f64, s: u32) -> Result<f64> {
    let tau = check_gain(g)?;
    Ok(tau.powi(s as i32) * (1.0 - tau).powi(2))
}

/// `χ_{σ,S} = r^{S−σ} λ_S C(S+1, σ+1)`.
pub fn chi_weight(g: f64, r: f64, sigma: u32, s: u32) -> Result<f64> {
    let tau = check_gain(g)?;
    check_reflectivity(r)?;
    if sigma > s {
        return domain(format!("σ = {sigma} exceeds S = {s}"));
    }
    let lambda = tau.powi(s as i32) * (1.0 - tau);
    Ok(r.powi((s - sigma) as i32) * lambda * binomial(s as i64 + 1, sigma as i64 + 1))
}

/// `Σ_{S ≥ σ} χ_{σ,S} = (1 − τ) τ^σ / (1 − r τ)^{σ+2}` with `τ = tanh² g`.
pub fn chi_total(g: f64, r: f64, sigma: u32) -> Result<f64> {
    let tau = check_gain(g)?;
    check_reflectivity(r)?;
    Ok((1.0 - tau) * tau.powi(sigma as i32) / (1.0 - r * tau).powi(sigma as i32 + 2))
}

/// `Σ_n Σ_p C(n,p) C(S−n, S−σ−p) |A_σ(k, n−p)|²`, the trace of the
/// unnormalized `ρ_int^{(σ,k,S)}`.
pub fn normalization_sum(s: u32, sigma: u32, k: u32) -> Result<f64> {
    if sigma > s || k > sigma {
        return domain(format!("need k ≤ σ ≤ S, got k = {k}, σ = {sigma}, S = {s}"));
    }
    let p_sigma = photon_distribution(sigma, k)?;
    let lost = s - sigma;
    let mut sum = 0.0;
    for n in 0..=s {
        for p in n.saturating_sub(sigma)..=n.min(lost) {
            let c = binomial(n as i64, p as i64) * binomial((s - n) as i64, (lost - p) as i64);
            sum += c * p_sigma[(n - p) as usize];
        }
    }
    Ok(sum)
}

/// Evaluates [`normalization_sum`] and checks it against `C(S+1, σ+1)`.
///
/// Returns the binomial. A relative mismatch above `1e-9` is an invariant
/// violation; binomials beyond 128 bits are a domain error.
pub fn normalization_identity(s: u32, sigma: u32, k: u32) -> Result<u128> {
    let sum = normalization_sum(s, sigma, k)?;
    let Some(expect) = binomial_exact(s as u64 + 1, sigma as u64 + 1) else {
        return domain(format!("C({}, {}) does not fit in 128 bits", s + 1, sigma + 1));
    };
    let rel = (sum - expect as f64).abs() / expect as f64;
    if !(rel <= 1e-9) {
        return Err(FocklineError::InvariantViolation(format!(
            "normalization sum {sum} differs from C({}, {}) = {expect} (relative {rel:e})",
            s + 1,
            sigma + 1
        )));
    }
    Ok(expect)
}

/// One block of the symmetric-loss decomposition.
#[derive(Debug, Clone)]
pub struct DecompositionTerm {
    /// Photon pairs emitted in total by both sources.
    pub s: u32,
    pub chi: f64,
    /// Unit-trace conditional state given `S` emitted pairs.
    pub rho_int: FockDensityOperator,
}

#[derive(Debug, Clone)]
pub struct SymmetricDecomposition {
    pub sigma: u32,
    pub k: u32,
    pub terms: Vec<DecompositionTerm>,
    /// `Σ_{S ≥ σ} χ_{σ,S}` over all `S`, not only the kept terms.
    pub total_weight: f64,
    /// The kept terms hold less than [`DECOMPOSITION_CAPTURE`] of the weight.
    pub truncated: bool,
}

impl SymmetricDecomposition {
    pub fn captured_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.chi).sum()
    }

    pub fn s_max(&self) -> u32 {
        self.terms.last().map_or(self.sigma, |t| t.s)
    }

    /// `Ñ² Σ χ_{σ,S} ρ_int^{(σ,k,S)}` with `Ñ²` fixed by unit trace.
    pub fn reconstruct(&self) -> Result<FockDensityOperator> {
        let captured = self.captured_weight();
        if !(captured > 0.0) {
            return Err(FocklineError::Degenerate(format!(
                "decomposition for σ = {} carries no weight",
                self.sigma
            )));
        }
        let terms: Vec<(f64, &FockDensityOperator)> =
            self.terms.iter().map(|t| (t.chi / captured, &t.rho_int)).collect();
        FockDensityOperator::mixture(&terms)
    }
}

/// `ρ_int^{(σ,k,S)}`: a mixture over how the `S − σ` lost photons split
/// between the two idlers.
pub fn interaction_state(s: u32, sigma: u32, k: u32) -> Result<FockDensityOperator> {
    if sigma > s || k > sigma {
        return domain(format!("need k ≤ σ ≤ S, got k = {k}, σ = {sigma}, S = {s}"));
    }
    if s > MAX_SECTOR {
        return domain(format!("S = {s} exceeds the supported {MAX_SECTOR}"));
    }
    let table = BsAmplitudeTable::new(sigma);
    let lost = s - sigma;
    let mut b = OperatorBuilder::new(2, s.div_ceil(2));
    for p in 0..=lost {
        let v: Vec<(Occupation, C64)> = (p..=p + sigma)
            .filter(|&n| n <= s)
            .map(|n| {
                let c = (binomial(n as i64, p as i64) * binomial((s - n) as i64, (lost - p) as i64)).sqrt();
                Occupation::new(&[n, s - n]).map(|o| (o, table.get(k, n - p) * c))
            })
            .collect::<Result<_>>()?;
        for (r, x) in &v {
            for (c, y) in &v {
                b.add(*r, *c, x * y.conj());
            }
        }
    }
    let norm = binomial(s as i64 + 1, sigma as i64 + 1);
    let rho = b.build().scaled(1.0 / norm);
    if (rho.trace() - 1.0).abs() > 1e-9 {
        return Err(FocklineError::InvariantViolation(format!(
            "ρ_int for S = {s}, σ = {sigma}, k = {k} has trace {} instead of 1",
            rho.trace()
        )));
    }
    Ok(rho)
}

/// Conditional state under equal idler loss `r` as a χ-weighted mixture of
/// [`interaction_state`] blocks.
///
/// With `s_max = None` the sum runs until [`DECOMPOSITION_CAPTURE`] of the
/// total weight is reached.
pub fn symmetric_decomposition(
    g: f64,
    r: f64,
    sigma: u32,
    k: u32,
    s_max: Option<u32>,
) -> Result<SymmetricDecomposition> {
    check_reflectivity(r)?;
    if k > sigma {
        return domain(format!("readout k = {k} exceeds σ = {sigma}"));
    }
    if let Some(s_max) = s_max {
        if s_max < sigma || s_max > MAX_SECTOR {
            return domain(format!("S_max = {s_max} must lie in [σ, {MAX_SECTOR}]"));
        }
    }
    let total_weight = chi_total(g, r, sigma)?;
    let target = DECOMPOSITION_CAPTURE * total_weight;
    let last = s_max.unwrap_or(MAX_SECTOR);
    let mut terms = Vec::new();
    let mut captured = 0.0;
    for s in sigma..=last {
        let chi = chi_weight(g, r, sigma, s)?;
        terms.push(DecompositionTerm {
            s,
            chi,
            rho_int: interaction_state(s, sigma, k)?,
        });
        captured += chi;
        if s_max.is_none() && captured >= target {
            break;
        }
    }
    Ok(SymmetricDecomposition {
        sigma,
        k,
        terms,
        total_weight,
        truncated: captured < target,
    })
}

/// Click probability of `(k, σ − k)` under equal idler loss `r` and no
/// other loss: `(1−r)^σ τ^σ / (cosh⁴ g (1 − r τ)^{σ+2})`. Independent of `k`.
pub fn symmetric_click_probability(g: f64, r: f64, sigma: u32) -> Result<f64> {
    check_reflectivity(r)?;
    click_probability_from_transmittance(g, 1.0 - r, r, sigma)
}

/// As [`symmetric_click_probability`], taking the transmittance `t` and
/// its complement `r` separately so that `t ≪ 1` keeps full precision.
fn click_probability_from_transmittance(g: f64, t: f64, r: f64, sigma: u32) -> Result<f64> {
    let tau = check_gain(g)?;
    Ok(t.powi(sigma as i32) * (1.0 - tau) * chi_total(g, r, sigma)?)
}

/// Lossless readout through its closed form.
pub fn closed_form_lossless(g: f64, sigma: u32, k: u32) -> Result<ConditionalResult> {
    let probability = efficiency(g, sigma)?;
    let state = lossless_output_state(sigma, k)?;
    let e_n = log_negativity(&state, &BipartiteSplit::two_mode())?;
    Ok(ConditionalResult {
        k,
        sigma,
        probability,
        state: Some(state),
        e_n: Some(e_n),
        source: Source::ClosedFormLossless,
    })
}

/// Readout under equal idler loss `r_idler` and equal detector loss `r_det`
/// through the χ decomposition.
///
/// Equal losses on both detector ports commute with the beam splitter, so
/// they fold into the idler reflectivity.
pub fn closed_form_symmetric(g: f64, r_idler: f64, r_det: f64, sigma: u32, k: u32) -> Result<ConditionalResult> {
    check_reflectivity(r_idler)?;
    check_reflectivity(r_det)?;
    let t = (1.0 - r_idler) * (1.0 - r_det);
    let r = 1.0 - t;
    let probability = click_probability_from_transmittance(g, t, r, sigma)?;
    if !(probability > 0.0) {
        return Ok(ConditionalResult {
            k,
            sigma,
            probability: 0.0,
            state: None,
            e_n: None,
            source: Source::ClosedFormSymmetric,
        });
    }
    let state = symmetric_decomposition(g, r, sigma, k, None)?.reconstruct()?;
    let e_n = log_negativity(&state, &BipartiteSplit::two_mode())?;
    Ok(ConditionalResult {
        k,
        sigma,
        probability,
        state: Some(state),
        e_n: Some(e_n),
        source: Source::ClosedFormSymmetric,
    })
}

/// Unnormalized state with Alice's idler at transmittance `eps` and Bob's
/// lossless. Every `S`-pair block loses exactly `S − σ` photons on Alice's
/// side.
fn epsilon_branch(g: f64, eps: f64, sigma: u32, k: u32, s_max: Option<u32>) -> Result<FockDensityOperator> {
    let tau = check_gain(g)?;
    if !(eps > 0.0) {
        return Err(FocklineError::Degenerate(format!(
            "ε = {eps}: no photon from Alice's idler reaches the detectors"
        )));
    }
    if !(eps <= 1.0) {
        return domain(format!("ε must lie in (0, 1], got {eps}"));
    }
    if k > sigma {
        return domain(format!("readout k = {k} exceeds σ = {sigma}"));
    }
    let last = s_max.unwrap_or(MAX_SECTOR).min(MAX_SECTOR);
    if last < sigma {
        return domain(format!("S_max = {last} is below σ = {sigma}"));
    }
    let table = BsAmplitudeTable::new(sigma);
    let mut b = OperatorBuilder::new(2, last.div_ceil(2));
    let mut cumulative = 0.0;
    for s in sigma..=last {
        let p = s - sigma;
        let scale = (tau.powi(s as i32) * (1.0 - eps).powi(p as i32)).sqrt() * (1.0 - tau);
        let v: Vec<(Occupation, C64)> = (p..=s)
            .map(|n| {
                let c = scale * (binomial(n as i64, p as i64) * eps.powi((n - p) as i32)).sqrt();
                Occupation::new(&[n, s - n]).map(|o| (o, table.get(k, n - p) * c))
            })
            .collect::<Result<_>>()?;
        let weight: f64 = v.iter().map(|(_, x)| x.norm_sqr()).sum();
        for (r, x) in &v {
            for (c, y) in &v {
                b.add(*r, *c, x * y.conj());
            }
        }
        cumulative += weight;
        if s_max.is_none() && weight <= 1e-17 * cumulative {
            break;
        }
    }
    Ok(b.build())
}

/// Normalized conditional state with Alice's idler transmittance a factor
/// `eps` below Bob's lossless idler. `eps = 1` is the lossless state.
///
/// With `s_max = None` the pair sum stops once further blocks fall below
/// `1e-17` of the accumulated weight.
pub fn epsilon_state(g: f64, eps: f64, sigma: u32, k: u32, s_max: Option<u32>) -> Result<FockDensityOperator> {
    epsilon_branch(g, eps, sigma, k, s_max)?.normalized()
}

/// [`epsilon_state`] as a readout record.
///
/// `probability` is the click probability of the reduced model in which
/// Bob's idler is lossless.
pub fn closed_form_epsilon(g: f64, eps: f64, sigma: u32, k: u32) -> Result<ConditionalResult> {
    let branch = epsilon_branch(g, eps, sigma, k, None)?;
    ConditionalResult::from_branch(k, sigma, branch, 0.0, Source::ClosedFormEpsilon)
}

/// Readout for idler transmittances `t_a` and `t_b` in the ε picture,
/// `ε = min(t_a, t_b)/max(t_a, t_b)`.
///
/// When Bob's channel is the weaker one the parties are exchanged: the
/// beam splitter commutes with the swap, so the state for readout `k` is
/// the swapped state for `σ − k` with the roles reversed.
pub fn closed_form_epsilon_pair(g: f64, t_a: f64, t_b: f64, sigma: u32, k: u32) -> Result<ConditionalResult> {
    if !(t_a > 0.0 && t_b > 0.0) {
        return Err(FocklineError::Degenerate(format!(
            "idler transmittances must be positive, got {t_a} and {t_b}"
        )));
    }
    if t_a <= t_b {
        return closed_form_epsilon(g, t_a / t_b, sigma, k);
    }
    if k > sigma {
        return domain(format!("readout k = {k} exceeds σ = {sigma}"));
    }
    let mut swapped = closed_form_epsilon(g, t_b / t_a, sigma, sigma - k)?;
    swapped.k = k;
    swapped.state = swapped.state.map(|s| s.permute_modes(&[1, 0])).transpose()?;
    Ok(swapped)
}

fn check_transmittance(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return domain(format!("transmittance must lie in [0, 1], got {t}"));
    }
    Ok(())
}

/// `(1 − a)` and `a` for `a = (1−τ)/(1 − r τ)` with `r = 1 − t`.
fn vacuum_factor(tau: f64, t: f64) -> (f64, f64) {
    let den = 1.0 - tau + t * tau;
    (t * tau / den, (1.0 - tau) / den)
}

/// Probability that neither detector clicks,
/// `p_0 = cosh^{-4} g / ((1 − r_a τ)(1 − r_b τ))`, for idler reflectivities
/// `r_a`, `r_b` and otherwise ideal components.
pub fn vacuum_probability(g: f64, r_a: f64, r_b: f64) -> Result<f64> {
    let tau = check_gain(g)?;
    check_reflectivity(r_a)?;
    check_reflectivity(r_b)?;
    Ok((1.0 - tau).powi(2) / ((1.0 - r_a * tau) * (1.0 - r_b * tau)))
}

/// `1 − p_0` from idler transmittances, without cancellation when both
/// channels are nearly opaque.
pub fn success_probability_from_transmittance(g: f64, t_a: f64, t_b: f64) -> Result<f64> {
    let tau = check_gain(g)?;
    check_transmittance(t_a)?;
    check_transmittance(t_b)?;
    let (one_minus_a, a) = vacuum_factor(tau, t_a);
    let (one_minus_b, _) = vacuum_factor(tau, t_b);
    Ok(one_minus_a + a * one_minus_b)
}

/// `1 − p_0` for idler reflectivities `r_a`, `r_b`.
pub fn success_probability(g: f64, r_a: f64, r_b: f64) -> Result<f64> {
    check_reflectivity(r_a)?;
    check_reflectivity(r_b)?;
    success_probability_from_transmittance(g, 1.0 - r_a, 1.0 - r_b)
}

/// `f_rep (1 − p_0)` in Hz.
pub fn success_rate(g: f64, r_a: f64, r_b: f64, f_rep: f64) -> Result<f64> {
    if !(f_rep >= 0.0 && f_rep.is_finite()) {
        return domain(format!("repetition rate must be nonnegative, got {f_rep}"));
    }
    Ok(f_rep * success_probability(g, r_a, r_b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_state_examples() {
        let hom = lossless_output_state(2, 1).unwrap();
        assert!((hom.get(&[0, 2], &[0, 2]).re - 0.5).abs() < 1e-15);
        assert!((hom.get(&[2, 0], &[2, 0]).re - 0.5).abs() < 1e-15);
        assert_eq!(hom.get(&[1, 1], &[1, 1]).norm(), 0.0);
        let vac = lossless_output_state(0, 0).unwrap();
        assert_eq!(vac.nnz(), 1);
        assert!((vac.get(&[0, 0], &[0, 0]).re - 1.0).abs() < 1e-15);
        assert!(lossless_output_state(2, 3).is_err());
    }

    #[test]
    fn efficiency_values() {
        let f = 80e6;
        assert!((efficiency(0.1, 4).unwrap() * f - 0.7636).abs() < 1e-3);
        assert!((efficiency(0.1, 2).unwrap() * f - 7739.0).abs() < 1.0);
        assert!(efficiency(0.0, 2).is_err());
    }

    #[test]
    fn chi_examples() {
        let lambda4 = 0.1f64.tanh().powi(8) / 0.1f64.cosh().powi(2);
        assert!((chi_weight(0.1, 0.5, 4, 4).unwrap() - lambda4).abs() < 1e-22);
        assert!((lambda4 - 9.6407e-9).abs() < 1e-13);
        assert_eq!(chi_weight(0.1, 0.0, 4, 6).unwrap(), 0.0);
        assert!(chi_weight(0.1, 0.5, 5, 4).is_err());
        for s in 4..30 {
            assert!(chi_weight(0.1, 0.9, 4, s + 1).unwrap() < chi_weight(0.1, 0.9, 4, s).unwrap());
        }
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalization_identity(6, 3, 1).unwrap(), 35);
        assert_eq!(normalization_identity(5, 5, 2).unwrap(), 1);
        assert_eq!(normalization_identity(7, 0, 0).unwrap(), 8);
        assert!(normalization_identity(3, 4, 0).is_err());
    }

    #[test]
    fn vacuum_and_rates() {
        let g = 0.1f64;
        let cosh4 = g.cosh().powi(4);
        assert!((vacuum_probability(g, 0.0, 0.0).unwrap() - 1.0 / cosh4).abs() < 1e-15);
        assert!((vacuum_probability(g, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let t = crate::channels::db_to_transmittance(80.0).unwrap();
        let p = success_probability_from_transmittance(g, t, t).unwrap();
        assert!((p - 2.0e-10).abs() < 0.05 * 2.0e-10);
        assert!((success_rate(g, 0.0, 0.0, 80e6).unwrap() - 1.58e6).abs() < 0.01e6);
        assert_eq!(success_rate(g, 0.5, 0.5, 0.0).unwrap(), 0.0);
        assert!(success_rate(g, 0.5, 0.5, -1.0).is_err());
    }

    #[test]
    fn epsilon_limits() {
        let one = epsilon_state(0.1, 1.0, 4, 1, None).unwrap();
        let ideal = lossless_output_state(4, 1).unwrap();
        assert!(one.max_abs_diff(&ideal) < 1e-14);
        assert!(matches!(
            epsilon_state(0.1, 0.0, 4, 1, None),
            Err(FocklineError::Degenerate(_))
        ));
        assert!(epsilon_state(0.1, 1.5, 4, 1, None).is_err());
    }

    #[test]
    fn readout_enumeration() {
        let cfg = PipelineConfig::new(0.1, Readout::UpTo(100)).with_cutoff(Cutoff::Explicit(2));
        let r = cfg.readouts().unwrap();
        assert_eq!(r.len(), 15);
        assert_eq!(r[0], (0, 0));
        assert_eq!(*r.last().unwrap(), (4, 4));
        let bad = PipelineConfig::new(0.1, Readout::Total(5)).with_cutoff(Cutoff::Explicit(2));
        assert!(bad.validate().is_err());
        let bad = PipelineConfig::new(0.1, Readout::Single { k: 3, sigma: 2 });
        assert!(bad.validate().is_err());
        assert!(PipelineConfig::new(-1.0, Readout::Total(2)).validate().is_err());
    }
}
