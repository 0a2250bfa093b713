//! Photon loss and beam-splitter channels on sparse Fock operators.
//!
//! Loss of reflectivity `r` is a beam splitter that routes each photon into
//! an unobserved mode with probability `r`. The default implementation is
//! the equivalent Kraus kernel acting directly on occupation pairs,
//!
//! ```text
//! |n⟩⟨n'| ↦ Σ_p √(C(n,p) C(n',p)) (1−r)^{(n+n')/2 − p} r^p |n−p⟩⟨n'−p|,
//! ```
//!
//! [`loss_channel_ancilla`] keeps the literal construction (append a vacuum
//! mode, rotate, trace it out) as an independent check.

use std::f64::consts::LN_10;

use crate::error::{domain, Result};
use crate::fock::{self, FockDensityOperator, OperatorBuilder};
use crate::kravchuk::BsAmplitudeTable;
use crate::special::{binomial, ln_factorial};
use crate::C64;

/// Reflectivities (loss probabilities) of every lossy element in the setup.
///
/// `a`/`b` label Alice's and Bob's sources, `1` the signal and `2` the
/// idler modes, and `d1`/`d2` the two detector ports behind the Bell-station
/// beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossConfig {
    pub r_a1: f64,
    pub r_b1: f64,
    pub r_a2: f64,
    pub r_b2: f64,
    pub r_d1: f64,
    pub r_d2: f64,
}

impl LossConfig {
    pub fn lossless() -> Self {
        Self::default()
    }

    /// Equal loss `r` on both idlers, everything else ideal.
    pub fn symmetric_idlers(r: f64) -> Self {
        Self {
            r_a2: r,
            r_b2: r,
            ..Self::default()
        }
    }

    pub fn with_idlers(mut self, r_a2: f64, r_b2: f64) -> Self {
        self.r_a2 = r_a2;
        self.r_b2 = r_b2;
        self
    }

    pub fn with_signals(mut self, r_a1: f64, r_b1: f64) -> Self {
        self.r_a1 = r_a1;
        self.r_b1 = r_b1;
        self
    }

    pub fn with_detectors(mut self, r_d1: f64, r_d2: f64) -> Self {
        self.r_d1 = r_d1;
        self.r_d2 = r_d2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("r_a1", self.r_a1),
            ("r_b1", self.r_b1),
            ("r_a2", self.r_a2),
            ("r_b2", self.r_b2),
            ("r_d1", self.r_d1),
            ("r_d2", self.r_d2),
        ];
        for (name, r) in named {
            check_reflectivity(r).map_err(|_| {
                crate::FocklineError::Domain(format!("{name} = {r} is not a reflectivity in [0, 1]"))
            })?;
        }
        Ok(())
    }
}

fn check_reflectivity(r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return domain(format!("reflectivity {r} outside [0, 1]"));
    }
    Ok(())
}

/// Power attenuation in dB to reflectivity: `r = 1 − 10^{−dB/10}`.
pub fn db_to_reflectivity(attenuation_db: f64) -> Result<f64> {
    if !(attenuation_db >= 0.0) {
        return domain(format!("attenuation must be nonnegative, got {attenuation_db} dB"));
    }
    Ok(-(-attenuation_db * LN_10 / 10.0).exp_m1())
}

/// Power attenuation in dB to transmittance `10^{−dB/10}`.
///
/// Prefer this over `1 − db_to_reflectivity(..)` at high attenuation, where
/// the subtraction loses most significant digits.
pub fn db_to_transmittance(attenuation_db: f64) -> Result<f64> {
    if !(attenuation_db >= 0.0) {
        return domain(format!("attenuation must be nonnegative, got {attenuation_db} dB"));
    }
    Ok((-attenuation_db * LN_10 / 10.0).exp())
}

/// Photon loss of reflectivity `r` on one mode (Kraus kernel).
pub fn loss_channel(op: &FockDensityOperator, mode: usize, r: f64) -> Result<FockDensityOperator> {
    check_reflectivity(r)?;
    if mode >= op.mode_count() {
        return domain(format!("mode {mode} out of range"));
    }
    if r == 0.0 {
        return Ok(op.clone());
    }
    let root_t = (1.0 - r).sqrt();
    let mut b = OperatorBuilder::new(op.mode_count(), op.n_max());
    for (row, col, v) in op.entries() {
        let (n, n2) = (row.get(mode), col.get(mode));
        for p in 0..=n.min(n2) {
            let weight = (binomial(n as i64, p as i64) * binomial(n2 as i64, p as i64)).sqrt()
                * root_t.powi((n + n2 - 2 * p) as i32)
                * r.powi(p as i32);
            if weight == 0.0 {
                continue;
            }
            let (mut r2, mut c2) = (*row, *col);
            r2.set(mode, n - p);
            c2.set(mode, n2 - p);
            b.add(r2, c2, v * weight);
        }
    }
    Ok(b.build())
}

/// Photon loss built literally: append a vacuum ancilla, mix it with `mode`
/// on a beam splitter of reflectivity `r`, and trace the ancilla out.
pub fn loss_channel_ancilla(op: &FockDensityOperator, mode: usize, r: f64) -> Result<FockDensityOperator> {
    check_reflectivity(r)?;
    if mode >= op.mode_count() {
        return domain(format!("mode {mode} out of range"));
    }
    let vacuum = FockDensityOperator::basis_state(&[0], op.n_max())?;
    let extended = fock::tensor(op, &vacuum)?;
    let ancilla = op.mode_count();
    let bs = RealBeamSplitter::new(r);
    let mixed = apply_sector_unitary(&extended, mode, ancilla, |t, out, inp| bs.amplitude(t, out, inp))?;
    fock::partial_trace(&mixed, &[ancilla])
}

/// Beam splitter `a† → √t a† + √r c†`, `c† → −√r a† + √t c†` with real
/// amplitudes.
struct RealBeamSplitter {
    root_t: f64,
    root_r: f64,
}

impl RealBeamSplitter {
    fn new(r: f64) -> Self {
        Self {
            root_t: (1.0 - r).sqrt(),
            root_r: r.sqrt(),
        }
    }

    /// `⟨out, T−out| U |inp, T−inp⟩`.
    fn amplitude(&self, total: u32, out: u32, inp: u32) -> C64 {
        let (t, o, x) = (total as i64, out as i64, inp as i64);
        let mut sum = 0.0;
        for l in 0.max(o - (t - x))..=x.min(o) {
            // l photons of the first input stay, o − l come from the second.
            let term = binomial(x, l)
                * binomial(t - x, o - l)
                * self.root_t.powi(l as i32)
                * self.root_r.powi((x - l) as i32)
                * (-self.root_r).powi((o - l) as i32)
                * self.root_t.powi((t - x - o + l) as i32);
            sum += term;
        }
        let norm = (0.5
            * (ln_factorial(out as u64) + ln_factorial((total - out) as u64)
                - ln_factorial(inp as u64)
                - ln_factorial((total - inp) as u64)))
        .exp();
        C64::new(sum * norm, 0.0)
    }
}

/// Conjugates `op` by a photon-number-conserving two-mode unitary acting on
/// modes `(i, j)`, given by its amplitudes `⟨out, T−out| U |in, T−in⟩` in
/// each total-photon sector `T`.
pub(crate) fn apply_sector_unitary<F>(
    op: &FockDensityOperator,
    i: usize,
    j: usize,
    amplitude: F,
) -> Result<FockDensityOperator>
where
    F: Fn(u32, u32, u32) -> C64,
{
    if i == j || i >= op.mode_count() || j >= op.mode_count() {
        return domain(format!("beam splitter needs two distinct in-range modes, got ({i}, {j})"));
    }
    let cap = 2 * op.n_max();
    let max_total = op
        .entries()
        .map(|(r, c, _)| (r.get(i) + r.get(j)).max(c.get(i) + c.get(j)))
        .max()
        .unwrap_or(0);
    if max_total > cap {
        return domain(format!(
            "a sector with {max_total} photons in modes ({i}, {j}) cannot stay within 2·n_max = {cap}"
        ));
    }
    // tables[T][out][in]
    let tables: Vec<Vec<Vec<C64>>> = (0..=max_total)
        .map(|t| {
            (0..=t)
                .map(|out| (0..=t).map(|inp| amplitude(t, out, inp)).collect())
                .collect()
        })
        .collect();

    let mut b = OperatorBuilder::new(op.mode_count(), op.n_max());
    for (row, col, v) in op.entries() {
        let (x, tr) = (row.get(i), row.get(i) + row.get(j));
        let (y, tc) = (col.get(i), col.get(i) + col.get(j));
        for a in 0..=tr {
            let ua = tables[tr as usize][a as usize][x as usize];
            if ua == C64::new(0.0, 0.0) {
                continue;
            }
            let mut r2 = *row;
            r2.set(i, a);
            r2.set(j, tr - a);
            let left = ua * v;
            for a2 in 0..=tc {
                let ub = tables[tc as usize][a2 as usize][y as usize];
                if ub == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut c2 = *col;
                c2.set(i, a2);
                c2.set(j, tc - a2);
                b.add(r2, c2, left * ub.conj());
            }
        }
    }
    Ok(b.build())
}

/// Balanced (50:50) beam splitter on modes `(i, j)`; mode `i` plays the
/// role of `a` in `a† → (a† − i b†)/√2`.
pub fn balanced_bs(op: &FockDensityOperator, mode_i: usize, mode_j: usize) -> Result<FockDensityOperator> {
    let max_total = op
        .entries()
        .map(|(r, c, _)| (r.get(mode_i) + r.get(mode_j)).max(c.get(mode_i) + c.get(mode_j)))
        .max()
        .unwrap_or(0);
    let tables: Vec<BsAmplitudeTable> = (0..=max_total.min(2 * op.n_max()))
        .map(BsAmplitudeTable::new)
        .collect();
    apply_sector_unitary(op, mode_i, mode_j, |t, out, inp| tables[t as usize].get(out, inp))
}
