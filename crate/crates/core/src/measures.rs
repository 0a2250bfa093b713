//! Entanglement and metrology figures of merit.

use crate::error::{domain, FocklineError, Result};
use crate::fock::{hermitian_block_eigenvalues, FockDensityOperator, Occupation};
use crate::kravchuk::{kravchuk_column, photon_distribution};
use crate::C64;

/// Partition of an operator's modes into two parties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteSplit {
    modes_a: Vec<usize>,
    modes_b: Vec<usize>,
}

impl BipartiteSplit {
    pub fn new(modes_a: Vec<usize>, modes_b: Vec<usize>, mode_count: usize) -> Result<Self> {
        let mut all: Vec<usize> = modes_a.iter().chain(&modes_b).copied().collect();
        all.sort_unstable();
        if all != (0..mode_count).collect::<Vec<_>>() {
            return domain(format!(
                "split {modes_a:?} | {modes_b:?} is not a partition of {mode_count} modes"
            ));
        }
        Ok(Self { modes_a, modes_b })
    }

    /// Mode 0 against mode 1.
    pub fn two_mode() -> Self {
        Self {
            modes_a: vec![0],
            modes_b: vec![1],
        }
    }

    pub fn modes_a(&self) -> &[usize] {
        &self.modes_a
    }

    pub fn modes_b(&self) -> &[usize] {
        &self.modes_b
    }

    /// The same split with the parties exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            modes_a: self.modes_b.clone(),
            modes_b: self.modes_a.clone(),
        }
    }
}

/// Matrix elements of `ρ^Γ`, transposing the occupations of party B.
fn partial_transpose(
    op: &FockDensityOperator,
    split: &BipartiteSplit,
) -> Vec<(Occupation, Occupation, C64)> {
    op.entries()
        .map(|(r, c, v)| {
            let (mut r2, mut c2) = (*r, *c);
            for &m in &split.modes_b {
                r2.set(m, c.get(m));
                c2.set(m, r.get(m));
            }
            (r2, c2, v)
        })
        .collect()
}

fn check_split(op: &FockDensityOperator, split: &BipartiteSplit) -> Result<()> {
    BipartiteSplit::new(split.modes_a.clone(), split.modes_b.clone(), op.mode_count()).map(|_| ())
}

/// Eigenvalues of the partial transpose, block by block.
pub fn partial_transpose_spectrum(op: &FockDensityOperator, split: &BipartiteSplit) -> Result<Vec<f64>> {
    check_split(op, split)?;
    Ok(hermitian_block_eigenvalues(partial_transpose(op, split)))
}

/// Trace norm `‖ρ^Γ‖₁ = Σ |α|`.
pub fn partial_transpose_trace_norm(op: &FockDensityOperator, split: &BipartiteSplit) -> Result<f64> {
    Ok(partial_transpose_spectrum(op, split)?.iter().map(|a| a.abs()).sum())
}

/// Logarithmic negativity `log₂(1 + 2 Σ_α (|α| − α)/2)` from the spectrum of
/// `ρ^Γ`.
///
/// For unit trace this equals `log₂ ‖ρ^Γ‖₁`; the operator must be
/// normalized to within `1e-10`.
pub fn log_negativity(op: &FockDensityOperator, split: &BipartiteSplit) -> Result<f64> {
    if (op.trace() - 1.0).abs() > 1e-10 {
        return Err(FocklineError::NotNormalized { trace: op.trace() });
    }
    let spectrum = partial_transpose_spectrum(op, split)?;
    let negativity: f64 = spectrum.iter().map(|a| (a.abs() - a) / 2.0).sum();
    Ok((1.0 + 2.0 * negativity).log2())
}

/// `2 log₂ Σ_n |φ_k(n − S/2, S)|`: logarithmic negativity of the lossless
/// conditional state heralded by `(k, S − k)`. Independent of the gain.
pub fn log_negativity_pure_closed(s: u32, k: u32) -> Result<f64> {
    if k > s {
        return domain(format!("readout k = {k} exceeds S = {s}"));
    }
    let sum: f64 = (0..=s)
        .map(|n| kravchuk_column(n, s).map(|col| col[k as usize].abs()))
        .sum::<Result<f64>>()?;
    Ok(2.0 * sum.log2())
}

/// Quantum Fisher information of the lossless conditional state for a phase
/// imprinted on one signal mode: four times the photon-number variance.
pub fn qfi_pure(s: u32, k: u32) -> Result<f64> {
    let p = photon_distribution(s, k)?;
    let mean: f64 = p.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
    let var: f64 = p
        .iter()
        .enumerate()
        .map(|(n, w)| w * (n as f64 - mean).powi(2))
        .sum();
    Ok(4.0 * var.max(0.0))
}

/// Reference levels `(log₂(S+1), 1)`: a maximally entangled state of local
/// dimension `S+1`, and a two-photon Bell pair.
pub fn en_reference(s: u32) -> (f64, f64) {
    ((s as f64 + 1.0).log2(), 1.0)
}

/// `log₂(2√(S+1) + 1)`, an alternative maximal-entanglement level that is
/// sometimes quoted for these states. Exposed for labelling only; it is not
/// the maximum of `E_N` over `(S+1)`-dimensional states.
pub fn en_max_alternative(s: u32) -> f64 {
    (2.0 * (s as f64 + 1.0).sqrt() + 1.0).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn product_state_has_none() {
        let vac = FockDensityOperator::basis_state(&[0, 0], 1).unwrap();
        assert!(log_negativity(&vac, &BipartiteSplit::two_mode()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn bell_like_pair() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rho = FockDensityOperator::from_pure(2, 2, &[(vec![0, 2], c(h)), (vec![2, 0], c(h))]).unwrap();
        let en = log_negativity(&rho, &BipartiteSplit::two_mode()).unwrap();
        assert!((en - 1.0).abs() < 1e-14);
    }

    #[test]
    fn maximally_entangled_d5() {
        let a = c(1.0 / 5f64.sqrt());
        let amps: Vec<_> = (0..5u32).map(|n| (vec![n, 4 - n], a)).collect();
        let rho = FockDensityOperator::from_pure(2, 4, &amps).unwrap();
        let en = log_negativity(&rho, &BipartiteSplit::two_mode()).unwrap();
        assert!((en - 5f64.log2()).abs() < 1e-13);
        assert!((en - 2.3219).abs() < 1e-4);
    }

    #[test]
    fn trace_norm_form_agrees() {
        let amps = vec![(vec![0, 2], c(0.6)), (vec![1, 1], C64::new(0.0, 0.64)), (vec![2, 0], c(0.48))];
        let rho = FockDensityOperator::from_pure(2, 2, &amps).unwrap();
        let split = BipartiteSplit::two_mode();
        let en = log_negativity(&rho, &split).unwrap();
        let norm = partial_transpose_trace_norm(&rho, &split).unwrap();
        assert!((en - norm.log2()).abs() < 1e-13);
        let swapped = log_negativity(&rho, &split.swapped()).unwrap();
        assert!((en - swapped).abs() < 1e-13);
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let rho = FockDensityOperator::basis_state(&[0, 0], 1).unwrap().scaled(0.5);
        assert!(matches!(
            log_negativity(&rho, &BipartiteSplit::two_mode()),
            Err(FocklineError::NotNormalized { .. })
        ));
    }

    #[test]
    fn split_must_partition() {
        assert!(BipartiteSplit::new(vec![0], vec![0], 2).is_err());
        assert!(BipartiteSplit::new(vec![0], vec![2], 2).is_err());
        assert!(BipartiteSplit::new(vec![0, 2], vec![1], 3).is_ok());
    }

    #[test]
    fn closed_form_values() {
        assert!((log_negativity_pure_closed(2, 1).unwrap() - 1.0).abs() < 1e-14);
        // |φ_0(n)| = √(C(4,n)/16) = [1, 2, √6, 2, 1]/4
        let expect = 2.0 * ((6.0 + 6f64.sqrt()) / 4.0).log2();
        assert!((log_negativity_pure_closed(4, 0).unwrap() - expect).abs() < 1e-14);
        assert!((expect - 2.15773).abs() < 1e-5);
        assert_eq!(log_negativity_pure_closed(0, 0).unwrap(), 0.0);
        assert!(log_negativity_pure_closed(2, 3).is_err());
    }

    #[test]
    fn qfi_values() {
        assert!((qfi_pure(4, 2).unwrap() - 12.0).abs() < 1e-12);
        assert!((qfi_pure(4, 0).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(qfi_pure(0, 0).unwrap(), 0.0);
        for s in 0..=12 {
            for k in 0..=s {
                let a = qfi_pure(s, k).unwrap();
                let b = qfi_pure(s, s - k).unwrap();
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn references() {
        let (max4, bell) = en_reference(4);
        assert!((max4 - 2.3219).abs() < 1e-4);
        assert_eq!(bell, 1.0);
        assert_eq!(en_reference(1), (1.0, 1.0));
        assert!((en_reference(10).0 - 3.4594).abs() < 1e-4);
        assert!((en_max_alternative(4) - 2.45).abs() < 0.01);
    }
}
