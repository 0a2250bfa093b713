//! Fock-basis states and density operators.
//!
//! Operators are stored sector-sparse: only nonzero matrix elements are kept,
//! keyed by the per-mode photon occupations of the row and column basis
//! states. Dense matrices are only materialized per connected block when an
//! eigen-decomposition is needed.
//!
//! Every operation is a pure function returning a new operator. Traces below
//! one are meaningful: a conditional branch carries its probability in its
//! trace.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::BuildHasherDefault;

use nalgebra::DMatrix;

use crate::error::{domain, FocklineError, Result};
use crate::C64;

/// Largest number of modes a single operator may carry.
pub const MAX_MODES: usize = 6;

/// Largest supported Schmidt cutoff: occupations are stored as bytes and a
/// balanced beam splitter can pile `2 · n_max` photons into one mode.
pub const MAX_CUTOFF: u32 = 127;

/// Hermiticity tolerance (absolute, on the largest entry mismatch).
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Positivity tolerance, relative to the trace, on the smallest eigenvalue.
pub const PSD_TOL: f64 = 1e-10;

pub(crate) type FixedState = BuildHasherDefault<DefaultHasher>;
pub(crate) type EntryMap = HashMap<(Occupation, Occupation), C64, FixedState>;

/// Photon counts of every mode of a multimode Fock basis state.
///
/// Unused trailing slots are zero. The owning operator knows how many modes
/// are meaningful.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Occupation([u8; MAX_MODES]);

impl Occupation {
    /// Builds an occupation from per-mode photon counts.
    pub fn new(counts: &[u32]) -> Result<Self> {
        if counts.len() > MAX_MODES {
            return domain(format!("at most {MAX_MODES} modes are supported"));
        }
        let mut occ = [0u8; MAX_MODES];
        for (slot, &c) in occ.iter_mut().zip(counts) {
            *slot = u8::try_from(c)
                .map_err(|_| FocklineError::Domain(format!("occupation {c} exceeds 255")))?;
        }
        Ok(Self(occ))
    }

    #[inline]
    pub fn get(&self, mode: usize) -> u32 {
        self.0[mode] as u32
    }

    #[inline]
    pub(crate) fn set(&mut self, mode: usize, count: u32) {
        debug_assert!(count <= u8::MAX as u32);
        self.0[mode] = count as u8;
    }

    /// Total photon number over the first `mode_count` modes.
    pub fn total(&self, mode_count: usize) -> u32 {
        self.0[..mode_count].iter().map(|&c| c as u32).sum()
    }

    pub fn counts(&self, mode_count: usize) -> Vec<u32> {
        self.0[..mode_count].iter().map(|&c| c as u32).collect()
    }

    /// Keeps the listed modes, in the listed order.
    pub(crate) fn select(&self, modes: &[usize]) -> Self {
        let mut out = [0u8; MAX_MODES];
        for (slot, &m) in out.iter_mut().zip(modes) {
            *slot = self.0[m];
        }
        Self(out)
    }

    /// Places `self` (with `own` modes) before `other`.
    pub(crate) fn concat(&self, own: usize, other: &Occupation, other_modes: usize) -> Self {
        let mut out = self.0;
        out[own..own + other_modes].copy_from_slice(&other.0[..other_modes]);
        Self(out)
    }
}

impl fmt::Debug for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Trailing zeros are not distinguishable from unused slots here.
        let last = self.0.iter().rposition(|&c| c != 0).map_or(0, |i| i + 1);
        f.debug_list().entries(self.0[..last.max(1)].iter()).finish()
    }
}

/// Schmidt weights of a two-mode squeezed vacuum truncated at `n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    g: f64,
    n_max: u32,
    weights: Vec<f64>,
    tail_deficit: f64,
}

impl SchmidtSpectrum {
    pub fn gain(&self) -> f64 {
        self.g
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    /// `λ_n` for `n = 0..=n_max`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Probability mass beyond the cutoff, `1 − Σ_{n ≤ n_max} λ_n = tanh^{2(n_max+1)} g`.
    pub fn tail_deficit(&self) -> f64 {
        self.tail_deficit
    }

    /// Geometric ratio `λ_{n+1}/λ_n = tanh² g`.
    pub fn ratio(&self) -> f64 {
        self.g.tanh().powi(2)
    }

    /// Mean total photon number of the untruncated state, `2 sinh² g`.
    pub fn mean_photon_number(&self) -> f64 {
        2.0 * self.g.sinh().powi(2)
    }
}

/// Smallest `n_max ≥ 1` with `λ_{n_max}/λ_0 = tanh^{2 n_max} g < tol`.
///
/// For `tol ≥ 1` the answer is 1: the ratio at `n = 0` is exactly one and is
/// never strictly below the tolerance, so the search starts at `n = 1`.
pub fn schmidt_cutoff(g: f64, tol: f64) -> Result<u32> {
    if !(g > 0.0) || !g.is_finite() {
        return domain(format!("gain must be positive, got {g}"));
    }
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let ratio = g.tanh().powi(2);
    if ratio >= 1.0 {
        return domain(format!("gain {g} is too large: tanh² g rounds to one"));
    }
    if tol >= 1.0 {
        return Ok(1);
    }
    let estimate = (tol.ln() / ratio.ln()).ceil().max(1.0);
    if estimate > u32::MAX as f64 / 2.0 {
        return domain(format!("cutoff for g = {g}, tol = {tol} is unbounded"));
    }
    let mut n = estimate as u32;
    // Repair rounding of the logarithms against direct powers.
    while ratio.powi(n as i32) >= tol {
        n += 1;
    }
    while n > 1 && ratio.powi(n as i32 - 1) < tol {
        n -= 1;
    }
    Ok(n)
}

/// Schmidt weights `λ_n = tanh^{2n} g / cosh² g` for `n ≤ n_max`.
pub fn schmidt_weights(g: f64, n_max: u32) -> Result<SchmidtSpectrum> {
    if !(g > 0.0) || !g.is_finite() {
        return domain(format!("gain must be positive, got {g}"));
    }
    let ratio = g.tanh().powi(2);
    let lambda0 = 1.0 / g.cosh().powi(2);
    let weights = (0..=n_max).map(|n| lambda0 * ratio.powi(n as i32)).collect();
    Ok(SchmidtSpectrum {
        g,
        n_max,
        weights,
        tail_deficit: ratio.powi(n_max as i32 + 1),
    })
}

/// A projector onto fixed photon numbers in a subset of modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockProjector {
    mode_indices: Vec<usize>,
    occupations: Vec<u32>,
}

impl FockProjector {
    pub fn new(mode_indices: Vec<usize>, occupations: Vec<u32>) -> Result<Self> {
        if mode_indices.len() != occupations.len() {
            return domain("projector needs one occupation per mode");
        }
        for (i, m) in mode_indices.iter().enumerate() {
            if mode_indices[..i].contains(m) {
                return domain(format!("projector lists mode {m} twice"));
            }
        }
        Ok(Self {
            mode_indices,
            occupations,
        })
    }

    pub fn mode_indices(&self) -> &[usize] {
        &self.mode_indices
    }

    pub fn occupations(&self) -> &[u32] {
        &self.occupations
    }
}

/// Sector-sparse multimode density operator in the Fock basis.
///
/// Entries are `ρ[row, col] = ⟨row|ρ|col⟩`, kept sorted by `(row, col)` so
/// iteration order, and therefore floating-point summation order, is
/// deterministic.
#[derive(Clone, PartialEq)]
pub struct FockDensityOperator {
    mode_count: usize,
    n_max: u32,
    entries: Vec<(Occupation, Occupation, C64)>,
    trace: f64,
}

impl fmt::Debug for FockDensityOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FockDensityOperator")
            .field("mode_count", &self.mode_count)
            .field("n_max", &self.n_max)
            .field("nnz", &self.entries.len())
            .field("trace", &self.trace)
            .finish()
    }
}

/// Accumulates matrix elements before freezing them into an operator.
pub(crate) struct OperatorBuilder {
    mode_count: usize,
    n_max: u32,
    map: EntryMap,
}

impl OperatorBuilder {
    pub(crate) fn new(mode_count: usize, n_max: u32) -> Self {
        Self {
            mode_count,
            n_max,
            map: EntryMap::default(),
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, row: Occupation, col: Occupation, value: C64) {
        *self.map.entry((row, col)).or_default() += value;
    }

    pub(crate) fn build(self) -> FockDensityOperator {
        let op = self.build_unchecked();
        op.debug_validate();
        op
    }

    fn build_unchecked(self) -> FockDensityOperator {
        let cap = 2 * self.n_max;
        let total_cap = 4 * self.n_max;
        let m = self.mode_count;
        let in_sector = |o: &Occupation| {
            o.0[..m].iter().all(|&c| c as u32 <= cap) && o.total(m) <= total_cap
        };
        let mut entries: Vec<_> = self
            .map
            .into_iter()
            .filter(|((r, c), v)| *v != C64::new(0.0, 0.0) && in_sector(r) && in_sector(c))
            .map(|((r, c), v)| (r, c, v))
            .collect();
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let trace = entries
            .iter()
            .filter(|(r, c, _)| r == c)
            .map(|(_, _, v)| v.re)
            .sum();
        FockDensityOperator {
            mode_count: m,
            n_max: self.n_max,
            entries,
            trace,
        }
    }
}

impl FockDensityOperator {
    /// Builds an operator from explicit matrix elements.
    ///
    /// Duplicate keys are summed. Fails if an occupation lies outside the
    /// sector bounds (`2·n_max` per mode, `4·n_max` in total) or the result
    /// is not Hermitian.
    pub fn from_entries<I>(mode_count: usize, n_max: u32, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Vec<u32>, C64)>,
    {
        check_shape(mode_count, n_max)?;
        let mut b = OperatorBuilder::new(mode_count, n_max);
        for (row, col, v) in entries {
            if row.len() != mode_count || col.len() != mode_count {
                return domain(format!("entry occupations must have {mode_count} modes"));
            }
            for o in [&row, &col] {
                if o.iter().any(|&c| c > 2 * n_max) || o.iter().sum::<u32>() > 4 * n_max {
                    return domain(format!("occupation {o:?} is outside the n_max = {n_max} sector"));
                }
            }
            b.add(Occupation::new(&row)?, Occupation::new(&col)?, v);
        }
        let op = b.build_unchecked();
        if !op.is_hermitian(HERMITICITY_TOL) {
            return domain("entries do not form a Hermitian operator");
        }
        Ok(op)
    }

    /// The projector `|occ⟩⟨occ|`.
    pub fn basis_state(occupation: &[u32], n_max: u32) -> Result<Self> {
        Self::from_entries(
            occupation.len(),
            n_max,
            [(occupation.to_vec(), occupation.to_vec(), C64::new(1.0, 0.0))],
        )
    }

    /// `|ψ⟩⟨ψ|` for a pure state given as (occupation, amplitude) pairs.
    pub fn from_pure(mode_count: usize, n_max: u32, amplitudes: &[(Vec<u32>, C64)]) -> Result<Self> {
        let mut entries = Vec::with_capacity(amplitudes.len() * amplitudes.len());
        for (r, a) in amplitudes {
            for (c, b) in amplitudes {
                entries.push((r.clone(), c.clone(), a * b.conj()));
            }
        }
        Self::from_entries(mode_count, n_max, entries)
    }

    /// The zero-mode operator holding a bare number.
    pub(crate) fn scalar(value: f64, n_max: u32) -> Self {
        let mut b = OperatorBuilder::new(0, n_max);
        b.add(Occupation::default(), Occupation::default(), C64::new(value, 0.0));
        b.build()
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// Number of stored (nonzero) matrix elements.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Occupation, &Occupation, C64)> + '_ {
        self.entries.iter().map(|(r, c, v)| (r, c, *v))
    }

    /// `⟨row|ρ|col⟩`; zero when the element is not stored.
    pub fn get(&self, row: &[u32], col: &[u32]) -> C64 {
        match (Occupation::new(row), Occupation::new(col)) {
            (Ok(r), Ok(c)) => self.get_occ(&r, &c),
            _ => C64::new(0.0, 0.0),
        }
    }

    pub(crate) fn get_occ(&self, row: &Occupation, col: &Occupation) -> C64 {
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(*row, *col)))
            .map(|i| self.entries[i].2)
            .unwrap_or_default()
    }

    /// Largest `|ρ[r,c] − conj(ρ[c,r])|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.entries
            .iter()
            .map(|(r, c, v)| (v - self.get_occ(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Smallest eigenvalue over all connected blocks (0 for an empty operator).
    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_block_eigenvalues(self.entries.iter().map(|(r, c, v)| (*r, *c, *v)))
            .into_iter()
            .fold(0.0, f64::min)
    }

    /// Positive semidefinite up to `PSD_TOL · trace`.
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOL * self.trace.abs().max(f64::MIN_POSITIVE)
    }

    /// Largest entrywise difference between two operators on the same modes.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut diff = 0.0f64;
        for (r, c, v) in &self.entries {
            diff = diff.max((v - other.get_occ(r, c)).norm());
        }
        for (r, c, v) in &other.entries {
            diff = diff.max((v - self.get_occ(r, c)).norm());
        }
        diff
    }

    /// Mean photon number of one mode, `Tr(n̂ ρ)/Tr ρ`.
    pub fn mean_photon_number(&self, mode: usize) -> f64 {
        let weighted: f64 = self
            .entries
            .iter()
            .filter(|(r, c, _)| r == c)
            .map(|(r, _, v)| r.get(mode) as f64 * v.re)
            .sum();
        weighted / self.trace
    }

    /// Diagonal of the operator as (occupation, probability weight) pairs.
    pub fn diagonal(&self) -> BTreeMap<Vec<u32>, f64> {
        self.entries
            .iter()
            .filter(|(r, c, _)| r == c)
            .map(|(r, _, v)| (r.counts(self.mode_count), v.re))
            .collect()
    }

    /// Operator multiplied by a real factor.
    pub fn scaled(&self, factor: f64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(r, c, v)| (*r, *c, v * factor))
            .collect();
        Self {
            entries,
            trace: self.trace * factor,
            ..*self
        }
    }

    /// Unit-trace copy; errors on a vanishing trace.
    pub fn normalized(&self) -> Result<Self> {
        if !(self.trace > 0.0) {
            return Err(FocklineError::Degenerate(format!(
                "cannot normalize an operator with trace {}",
                self.trace
            )));
        }
        Ok(self.scaled(1.0 / self.trace))
    }

    /// Weighted sum `Σ w_i ρ_i` of operators on the same modes.
    pub fn mixture(terms: &[(f64, &FockDensityOperator)]) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return domain("mixture of zero operators");
        };
        let modes = first.mode_count;
        let n_max = terms.iter().map(|(_, op)| op.n_max).max().unwrap_or(0);
        let mut b = OperatorBuilder::new(modes, n_max);
        for (w, op) in terms {
            if op.mode_count != modes {
                return domain("mixture terms act on different numbers of modes");
            }
            for (r, c, v) in &op.entries {
                b.add(*r, *c, v * *w);
            }
        }
        Ok(b.build())
    }

    /// Reorders modes: mode `i` of the result is mode `order[i]` of `self`.
    pub fn permute_modes(&self, order: &[usize]) -> Result<Self> {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..self.mode_count).collect::<Vec<_>>() {
            return domain(format!("{order:?} is not a permutation of the modes"));
        }
        let mut b = OperatorBuilder::new(self.mode_count, self.n_max);
        for (r, c, v) in &self.entries {
            b.add(r.select(order), c.select(order), *v);
        }
        Ok(b.build())
    }

    #[cfg(debug_assertions)]
    fn debug_validate(&self) {
        let scale = self.entries.iter().map(|e| e.2.norm()).fold(1.0, f64::max);
        debug_assert!(
            self.hermiticity_defect() <= HERMITICITY_TOL * scale,
            "operator lost Hermiticity: defect {}",
            self.hermiticity_defect()
        );
        // Positivity is only checked where the dense blocks stay small.
        if self.entries.len() <= 4096 {
            let min = self.min_eigenvalue();
            debug_assert!(
                min >= -PSD_TOL * self.trace.abs().max(1.0),
                "operator lost positivity: min eigenvalue {min}"
            );
        }
    }

    #[cfg(not(debug_assertions))]
    #[inline]
    fn debug_validate(&self) {}
}

pub(crate) fn check_shape(mode_count: usize, n_max: u32) -> Result<()> {
    if mode_count > MAX_MODES {
        return domain(format!("at most {MAX_MODES} modes are supported, got {mode_count}"));
    }
    if n_max > MAX_CUTOFF {
        return domain(format!("n_max = {n_max} exceeds the supported {MAX_CUTOFF}"));
    }
    Ok(())
}

/// `|Ψ⟩⟨Ψ|` for the two-mode squeezed vacuum `Σ √λ_n |n, n⟩`.
pub fn sv_pure_state(spectrum: &SchmidtSpectrum) -> Result<FockDensityOperator> {
    check_shape(2, spectrum.n_max)?;
    let amps: Vec<f64> = spectrum.weights.iter().map(|l| l.sqrt()).collect();
    let mut b = OperatorBuilder::new(2, spectrum.n_max);
    for (n, an) in amps.iter().enumerate() {
        for (m, am) in amps.iter().enumerate() {
            let row = Occupation::new(&[n as u32, n as u32])?;
            let col = Occupation::new(&[m as u32, m as u32])?;
            b.add(row, col, C64::new(an * am, 0.0));
        }
    }
    Ok(b.build())
}

/// `ρ_A ⊗ ρ_B`, with the modes of `ρ_A` first.
pub fn tensor(a: &FockDensityOperator, b: &FockDensityOperator) -> Result<FockDensityOperator> {
    if a.n_max != b.n_max {
        return domain(format!(
            "tensor factors have different cutoffs ({} vs {})",
            a.n_max, b.n_max
        ));
    }
    let modes = a.mode_count + b.mode_count;
    check_shape(modes, a.n_max)?;
    let mut out = OperatorBuilder::new(modes, a.n_max);
    out.map.reserve(a.entries.len() * b.entries.len());
    for (ra, ca, va) in &a.entries {
        for (rb, cb, vb) in &b.entries {
            out.add(
                ra.concat(a.mode_count, rb, b.mode_count),
                ca.concat(a.mode_count, cb, b.mode_count),
                va * vb,
            );
        }
    }
    Ok(out.build())
}

fn check_modes(op: &FockDensityOperator, modes: &[usize]) -> Result<()> {
    for (i, &m) in modes.iter().enumerate() {
        if m >= op.mode_count {
            return domain(format!("mode {m} out of range for a {}-mode operator", op.mode_count));
        }
        if modes[..i].contains(&m) {
            return domain(format!("mode {m} listed twice"));
        }
    }
    Ok(())
}

/// Traces out `modes_to_drop`; the kept modes retain their relative order.
///
/// Dropping every mode yields a zero-mode operator whose single entry is the
/// trace.
pub fn partial_trace(op: &FockDensityOperator, modes_to_drop: &[usize]) -> Result<FockDensityOperator> {
    check_modes(op, modes_to_drop)?;
    let keep: Vec<usize> = (0..op.mode_count)
        .filter(|m| !modes_to_drop.contains(m))
        .collect();
    if keep.is_empty() {
        return Ok(FockDensityOperator::scalar(op.trace, op.n_max));
    }
    let mut b = OperatorBuilder::new(keep.len(), op.n_max);
    for (r, c, v) in &op.entries {
        if modes_to_drop.iter().all(|&m| r.get(m) == c.get(m)) {
            b.add(r.select(&keep), c.select(&keep), *v);
        }
    }
    Ok(b.build())
}

/// `⟨occ|ρ|occ⟩` on the projected modes, left unnormalized.
///
/// The trace of the result is the (unconditional) probability of the
/// projected outcome times `Tr ρ`. Projected modes are removed.
pub fn project(op: &FockDensityOperator, projector: &FockProjector) -> Result<FockDensityOperator> {
    check_modes(op, &projector.mode_indices)?;
    let keep: Vec<usize> = (0..op.mode_count)
        .filter(|m| !projector.mode_indices.contains(m))
        .collect();
    let mut b = OperatorBuilder::new(keep.len(), op.n_max);
    let hits = |o: &Occupation| {
        projector
            .mode_indices
            .iter()
            .zip(&projector.occupations)
            .all(|(&m, &n)| o.get(m) == n)
    };
    for (r, c, v) in &op.entries {
        if hits(r) && hits(c) {
            b.add(r.select(&keep), c.select(&keep), *v);
        }
    }
    Ok(b.build())
}

/// Outcome of a projective measurement followed by renormalization.
#[derive(Debug, Clone)]
pub struct Projection {
    /// `Tr(PρP)/Tr ρ`.
    pub probability: f64,
    /// Unit-trace post-measurement state; `None` for a zero-probability outcome.
    pub state: Option<FockDensityOperator>,
}

impl Projection {
    pub fn is_empty(&self) -> bool {
        self.state.is_none()
    }
}

/// Projects, drops the measured modes and renormalizes the remainder.
pub fn project_and_renormalize(op: &FockDensityOperator, projector: &FockProjector) -> Result<Projection> {
    let branch = project(op, projector)?;
    if !(op.trace > 0.0) {
        return domain("cannot measure an operator with nonpositive trace");
    }
    let probability = branch.trace / op.trace;
    if probability <= 0.0 {
        return Ok(Projection {
            probability: 0.0,
            state: None,
        });
    }
    let state = branch.scaled(1.0 / branch.trace);
    Ok(Projection {
        probability,
        state: Some(state),
    })
}

/// Eigenvalues of a Hermitian sparse matrix, block by block.
///
/// Basis states linked by a nonzero element end up in one block (union-find
/// over the sparsity graph); each block is symmetrized and diagonalized
/// densely. Basis states absent from the entries contribute no eigenvalues.
pub(crate) fn hermitian_block_eigenvalues<I>(entries: I) -> Vec<f64>
where
    I: IntoIterator<Item = (Occupation, Occupation, C64)>,
{
    let entries: Vec<_> = entries.into_iter().collect();
    let mut index: HashMap<Occupation, usize, FixedState> = HashMap::default();
    let mut states: Vec<Occupation> = Vec::new();
    let mut id = |o: Occupation, states: &mut Vec<Occupation>| {
        *index.entry(o).or_insert_with(|| {
            states.push(o);
            states.len() - 1
        })
    };
    let pairs: Vec<(usize, usize, C64)> = entries
        .iter()
        .map(|(r, c, v)| (id(*r, &mut states), id(*c, &mut states), *v))
        .collect();

    let mut parent: Vec<usize> = (0..states.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(r, c, _) in &pairs {
        let (a, b) = (find(&mut parent, r), find(&mut parent, c));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }

    // Local index of each state within its block.
    let mut block_of = vec![0usize; states.len()];
    let mut local = vec![0usize; states.len()];
    let mut block_ids: HashMap<usize, usize, FixedState> = HashMap::default();
    let mut sizes: Vec<usize> = Vec::new();
    for s in 0..states.len() {
        let root = find(&mut parent, s);
        let b = *block_ids.entry(root).or_insert_with(|| {
            sizes.push(0);
            sizes.len() - 1
        });
        block_of[s] = b;
        local[s] = sizes[b];
        sizes[b] += 1;
    }

    let mut blocks: Vec<DMatrix<C64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    for &(r, c, v) in &pairs {
        let b = block_of[r];
        blocks[b][(local[r], local[c])] += v;
    }

    let mut eigenvalues = Vec::with_capacity(states.len());
    for m in blocks {
        if m.nrows() == 1 {
            eigenvalues.push(m[(0, 0)].re);
            continue;
        }
        let sym = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        eigenvalues.extend(sym.symmetric_eigenvalues().iter().copied());
    }
    eigenvalues
}
