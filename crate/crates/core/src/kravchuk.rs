//! Kravchuk polynomials and functions, and the balanced beam splitter built
//! from them.
//!
//! Conventions. The polynomial is the integer-coefficient form
//!
//! ```text
//! K_k(n; S) = Σ_l (−1)^l C(n, l) C(S − n, k − l)
//! ```
//!
//! so that `K_0 = 1` and `K_1(n) = S − 2n`. The symmetric Kravchuk function
//! is
//!
//! ```text
//! φ_k(n − S/2, S) = (−1)^k 2^{−S/2} √(k!(S−k)! / (n!(S−n)!)) K_k(n; S)
//! ```
//!
//! which makes `A_S(k, n) = e^{iπ(n−k)/2} (−1)^{k+n} φ_k(n − S/2, S)` equal
//! to `⟨k, S−k| U |n, S−n⟩` for the beam splitter
//! `a† → (a† − i b†)/√2`, `b† → (−i a† + b†)/√2`.
//!
//! Values are never formed from raw factorials: each column `φ_·(n)` comes
//! from the orthonormal three-term recurrence in `k` started at
//! `√(C(S,n)/2^S)`, run only up to `k = S/2` (the growing direction) and
//! completed with the reflection `K_{S−k}(n) = (−1)^n K_k(n)`. This stays
//! finite and accurate for `S` in the thousands.

use std::f64::consts::{LN_2, PI};

use crate::error::{domain, Result};
use crate::special::ln_factorial;
use crate::C64;

fn check_indices(k: u32, n: u32, s: u32) -> Result<()> {
    if k > s || n > s {
        return domain(format!("Kravchuk indices need 0 ≤ k, n ≤ S (k = {k}, n = {n}, S = {s})"));
    }
    Ok(())
}

/// `ln √(C(S, n) / 2^S)`.
fn ln_binomial_root(n: u32, s: u32) -> f64 {
    let ln_c = ln_factorial(s as u64) - ln_factorial(n as u64) - ln_factorial((s - n) as u64);
    0.5 * (ln_c - s as f64 * LN_2)
}

/// `φ_k(n − S/2, S)` for every `k = 0..=S` at a fixed point `n`.
pub fn kravchuk_column(n: u32, s: u32) -> Result<Vec<f64>> {
    check_indices(0, n, s)?;
    let su = s as usize;
    // g_k = (−1)^k φ_k, i.e. K_k / √C(S,k) times the binomial root.
    let mut g = vec![0.0f64; su + 1];
    g[0] = ln_binomial_root(n, s).exp();
    let half = su / 2;
    let drive = s as f64 - 2.0 * n as f64;
    for j in 0..half {
        let jf = j as f64;
        let back = if j == 0 {
            0.0
        } else {
            (jf * (s as f64 - jf + 1.0)).sqrt() * g[j - 1]
        };
        g[j + 1] = (drive * g[j] - back) / ((jf + 1.0) * (s as f64 - jf)).sqrt();
    }
    let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
    for k in half + 1..=su {
        g[k] = parity * g[su - k];
    }
    for (k, v) in g.iter_mut().enumerate() {
        if k % 2 == 1 {
            *v = -*v;
        }
    }
    Ok(g)
}

/// Symmetric Kravchuk function `φ_k(n − S/2, S)`.
pub fn kravchuk_fn(k: u32, n: u32, s: u32) -> Result<f64> {
    check_indices(k, n, s)?;
    Ok(kravchuk_column(n, s)?[k as usize])
}

/// Integer-coefficient Kravchuk polynomial `K_k(n; S)`.
///
/// Recovered from the stable function values; exact integers are reproduced
/// to floating precision.
pub fn kravchuk_poly(k: u32, n: u32, s: u32) -> Result<f64> {
    let phi = kravchuk_fn(k, n, s)?;
    // K_k = (−1)^k φ_k 2^{S/2} √(n!(S−n)! / (k!(S−k)!))
    let ln_scale = 0.5 * s as f64 * LN_2
        + 0.5
            * (ln_factorial(n as u64) + ln_factorial((s - n) as u64)
                - ln_factorial(k as u64)
                - ln_factorial((s - k) as u64));
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * phi * ln_scale.exp())
}

/// `e^{iπ(n−k)/2} (−1)^{k+n}` as an exact unit complex number.
fn printed_phase(k: u32, n: u32) -> C64 {
    let quarter_turns = (n as i64 - k as i64).rem_euclid(4);
    let phase = match quarter_turns {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    };
    if (k + n) % 2 == 0 {
        phase
    } else {
        -phase
    }
}

/// Beam-splitter amplitude `A_S(k, n) = ⟨k, S−k| U_BS |n, S−n⟩`.
pub fn bs_amplitude(s: u32, k: u32, n: u32) -> Result<C64> {
    Ok(printed_phase(k, n) * kravchuk_fn(k, n, s)?)
}

/// `|A_S(k, n)|²` for `n = 0..=S`: photon statistics of the conditional
/// state heralded by readout `(k, S − k)`.
pub fn photon_distribution(s: u32, k: u32) -> Result<Vec<f64>> {
    check_indices(k, 0, s)?;
    (0..=s)
        .map(|n| kravchuk_fn(k, n, s).map(|phi| phi * phi))
        .collect()
}

/// Arcsine envelope `4 / (π S √(1 − (2n/S − 1)²))` of `p^{(S/2, S)}(n)`.
///
/// Returns `+∞` at and beyond the endpoints `n ∈ {0, S}`, where the
/// envelope diverges. The envelope is asymptotic in `S`.
pub fn arcsine_envelope(s: u32, n: f64) -> f64 {
    let sf = s as f64;
    if s == 0 || !(n > 0.0 && n < sf) {
        return f64::INFINITY;
    }
    let x = 2.0 * n / sf - 1.0;
    4.0 / (PI * sf * (1.0 - x * x).sqrt())
}

/// The full `(S+1) × (S+1)` balanced-beam-splitter block of the
/// total-photon-number-`S` sector. Rows are readouts `k`, columns input
/// splits `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BsAmplitudeTable {
    s: u32,
    amplitudes: Vec<C64>,
}

impl BsAmplitudeTable {
    pub fn new(s: u32) -> Self {
        let dim = s as usize + 1;
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim * dim];
        for n in 0..=s {
            // Column n of φ, indices are in range by construction.
            let column = kravchuk_column(n, s).expect("n ≤ S");
            for (k, phi) in column.into_iter().enumerate() {
                amplitudes[k * dim + n as usize] = printed_phase(k as u32, n) * phi;
            }
        }
        Self { s, amplitudes }
    }

    pub fn total_photons(&self) -> u32 {
        self.s
    }

    #[inline]
    pub fn get(&self, k: u32, n: u32) -> C64 {
        let dim = self.s as usize + 1;
        self.amplitudes[k as usize * dim + n as usize]
    }

    /// Largest deviation of `A A†` and `A† A` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let s = self.s;
        let mut worst = 0.0f64;
        for a in 0..=s {
            for b in 0..=s {
                let delta = if a == b { 1.0 } else { 0.0 };
                let rows: C64 = (0..=s).map(|n| self.get(a, n) * self.get(b, n).conj()).sum();
                let cols: C64 = (0..=s).map(|k| self.get(k, a) * self.get(k, b).conj()).sum();
                worst = worst
                    .max((rows - delta).norm())
                    .max((cols - delta).norm());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::binomial;

    /// Direct bosonic expansion of `⟨k, S−k| U |n, S−n⟩`: expand
    /// `(a† − i b†)^n (−i a† + b†)^{S−n}` and read off the `a†^k b†^{S−k}`
    /// coefficient.
    fn direct_amplitude(s: u32, k: u32, n: u32) -> C64 {
        let (s, k, n) = (s as i64, k as i64, n as i64);
        let mut sum = C64::new(0.0, 0.0);
        let minus_i = C64::new(0.0, -1.0);
        for l in 0..=n.min(k) {
            // l creations of a† from the first factor, k − l from the second.
            let coeff = binomial(n, l) * binomial(s - n, k - l);
            if coeff == 0.0 {
                continue;
            }
            sum += minus_i.powi((n - l + k - l) as i32) * coeff;
        }
        let norm = ((ln_factorial(k as u64) + ln_factorial((s - k) as u64)
            - ln_factorial(n as u64)
            - ln_factorial((s - n) as u64))
            * 0.5
            - 0.5 * s as f64 * LN_2)
            .exp();
        sum * norm
    }

    #[test]
    fn matches_direct_expansion() {
        for s in 0..=16 {
            for k in 0..=s {
                for n in 0..=s {
                    let a = bs_amplitude(s, k, n).unwrap();
                    let d = direct_amplitude(s, k, n);
                    assert!((a - d).norm() < 1e-12, "S={s} k={k} n={n}: {a} vs {d}");
                }
            }
        }
    }

    #[test]
    fn degree_zero_and_one() {
        for s in 0..12 {
            for n in 0..=s {
                assert!((kravchuk_poly(0, n, s).unwrap() - 1.0).abs() < 1e-9);
                if s > 0 {
                    let k1 = kravchuk_poly(1, n, s).unwrap();
                    assert!((k1 - (s as f64 - 2.0 * n as f64)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn binomial_ground_state() {
        let p = photon_distribution(4, 0).unwrap();
        let expect = [1.0, 4.0, 6.0, 4.0, 1.0].map(|x| x / 16.0);
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn hong_ou_mandel() {
        assert!(kravchuk_fn(1, 1, 2).unwrap().abs() < 1e-15);
        assert!(bs_amplitude(2, 1, 1).unwrap().norm() < 1e-15);
        assert!((bs_amplitude(2, 1, 0).unwrap().norm_sqr() - 0.5).abs() < 1e-15);
        assert!((bs_amplitude(2, 1, 2).unwrap().norm_sqr() - 0.5).abs() < 1e-15);
        let p = photon_distribution(2, 1).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && p[1].abs() < 1e-15 && (p[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sign_changes_follow_degree() {
        for k in 0..=4u32 {
            let vals: Vec<f64> = (0..=4).map(|n| kravchuk_fn(k, n, 4).unwrap()).collect();
            let nonzero: Vec<f64> = vals.into_iter().filter(|v| v.abs() > 1e-12).collect();
            let changes = nonzero.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
            assert_eq!(changes, k as usize, "k = {k}");
        }
        assert!((0..=4).all(|n| kravchuk_fn(0, n, 4).unwrap() > 0.0));
    }

    #[test]
    fn orthonormal_s10() {
        for k in 0..=10 {
            for j in 0..=10 {
                let dot: f64 = (0..=10)
                    .map(|n| kravchuk_fn(k, n, 10).unwrap() * kravchuk_fn(j, n, 10).unwrap())
                    .sum();
                let delta = if k == j { 1.0 } else { 0.0 };
                assert!((dot - delta).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn large_orders_stay_finite() {
        let col = kravchuk_column(0, 1000).unwrap();
        assert!(col.iter().all(|v| v.is_finite()));
        let norm: f64 = col.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-9);
        let mid = kravchuk_column(500, 1000).unwrap();
        let norm: f64 = mid.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn domain_errors() {
        assert!(kravchuk_fn(3, 0, 2).is_err());
        assert!(kravchuk_poly(0, 5, 4).is_err());
        assert!(bs_amplitude(1, 2, 0).is_err());
        assert!(photon_distribution(2, 3).is_err());
    }

    #[test]
    fn envelope_values() {
        assert!((arcsine_envelope(4, 2.0) - 1.0 / PI).abs() < 1e-15);
        assert!(arcsine_envelope(10, 0.0).is_infinite());
        assert!(arcsine_envelope(10, 10.0).is_infinite());
        assert!(arcsine_envelope(10, -1.0).is_infinite());
        assert!((arcsine_envelope(10, 3.0) - arcsine_envelope(10, 7.0)).abs() < 1e-15);
    }

    #[test]
    fn table_is_unitary() {
        for s in 0..=30 {
            assert!(BsAmplitudeTable::new(s).unitarity_defect() < 1e-12, "S = {s}");
        }
    }
}
