use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use proptest::prelude::*;

use fockline::channels::{balanced_bs, loss_channel, loss_channel_ancilla, LossConfig};
use fockline::fock::{schmidt_weights, FockDensityOperator};
use fockline::kravchuk::{arcsine_envelope, kravchuk_column, kravchuk_fn, kravchuk_poly, photon_distribution, BsAmplitudeTable};
use fockline::measures::{log_negativity, log_negativity_pure_closed, BipartiteSplit};
use fockline::protocol::{
    chi_total, chi_weight, normalization_identity, simulate_pipeline, vacuum_probability, Cutoff, PipelineConfig,
    Readout,
};
use fockline::C64;

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

fn binom(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `|φ_k(n)|²` as an exact rational from the integer polynomial.
fn exact_phi_squared(k: u32, n: u32, s: u32) -> BigRational {
    let mut poly = BigInt::zero();
    for l in 0..=k {
        let term = binom(n, l) * binom(s - n, k - l);
        if l % 2 == 0 {
            poly += term;
        } else {
            poly -= term;
        }
    }
    let num = factorial(k) * factorial(s - k) * &poly * &poly;
    let den = factorial(n) * factorial(s - n) * (BigInt::one() << s);
    BigRational::new(num, den)
}

/// Two modes, up to two photons each.
fn pure_two_mode() -> impl Strategy<Value = FockDensityOperator> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9).prop_filter_map("zero vector", |amps| {
        let norm: f64 = amps.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
        if norm < 1e-3 {
            return None;
        }
        let list: Vec<(Vec<u32>, C64)> = amps
            .iter()
            .enumerate()
            .map(|(i, &(re, im))| (vec![i as u32 / 3, i as u32 % 3], C64::new(re, im) / norm))
            .collect();
        FockDensityOperator::from_pure(2, 2, &list).ok()
    })
}

fn mixed_two_mode() -> impl Strategy<Value = FockDensityOperator> {
    (pure_two_mode(), pure_two_mode(), 0.0f64..1.0)
        .prop_map(|(a, b, w)| FockDensityOperator::mixture(&[(w, &a), (1.0 - w, &b)]).unwrap())
}

#[test]
fn exact_rational_amplitudes() {
    for s in 0..=30 {
        for n in 0..=s {
            let column = kravchuk_column(n, s).unwrap();
            for k in 0..=s {
                let exact = exact_phi_squared(k, n, s).to_f64().unwrap();
                let got = column[k as usize].powi(2);
                if exact == 0.0 {
                    assert!(got < 1e-28, "S={s} k={k} n={n}: {got:e}");
                } else {
                    assert!((got - exact).abs() <= 1e-12 * exact, "S={s} k={k} n={n}");
                }
            }
        }
    }
}

#[test]
fn three_term_recurrence_in_n() {
    for s in 1..=50u32 {
        for k in 0..=s {
            // |K_k(n)| ≤ 2^{S/2} √(C(S,k)/C(S,n)) since |φ| ≤ 1.
            let bound = |n: u32| {
                (2f64.powi(s as i32) * binom(s, k).to_f64().unwrap() / binom(s, n).to_f64().unwrap()).sqrt()
            };
            for n in 1..s {
                let coeffs = [(s - n) as f64, -(s as f64 - 2.0 * k as f64), n as f64];
                let points = [n + 1, n, n - 1];
                let mut residual = 0.0;
                let mut scale = 0.0f64;
                for (c, m) in coeffs.iter().zip(points) {
                    residual += c * kravchuk_poly(k, m, s).unwrap();
                    scale = scale.max(c.abs() * bound(m));
                }
                assert!(residual.abs() < 1e-10 * scale, "S={s} k={k} n={n}");
            }
        }
    }
}

#[test]
fn balanced_readout_follows_arcsine_envelope() {
    let p = photon_distribution(100, 50).unwrap();
    let mut peaks = 0;
    for n in 5..=95usize {
        if p[n] >= p[n - 1] && p[n] >= p[n + 1] && p[n] > 0.0 {
            peaks += 1;
            assert!(p[n] <= 1.05 * arcsine_envelope(100, n as f64), "n={n}");
        }
    }
    assert!(peaks > 20);
}

#[test]
fn vacuum_probability_matches_series() {
    for &(g, ra, rb) in &[(0.1, 0.3, 0.9), (0.5, 0.0, 1.0), (0.8, 0.99, 0.5)] {
        let spectrum = schmidt_weights(g, 400).unwrap();
        let series = |r: f64| -> f64 {
            spectrum
                .weights()
                .iter()
                .enumerate()
                .map(|(n, w)| w * r.powi(n as i32))
                .sum()
        };
        let closed = vacuum_probability(g, ra, rb).unwrap();
        assert!((closed - series(ra) * series(rb)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn table_is_unitary(s in 0u32..=100) {
        prop_assert!(BsAmplitudeTable::new(s).unitarity_defect() < 1e-12);
    }

    #[test]
    fn columns_are_orthonormal(s in 0u32..=200, n1 in 0u32..=200, n2 in 0u32..=200) {
        let (n1, n2) = (n1 % (s + 1), n2 % (s + 1));
        let a = kravchuk_column(n1, s).unwrap();
        let b = kravchuk_column(n2, s).unwrap();
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let target = if n1 == n2 { 1.0 } else { 0.0 };
        prop_assert!((dot - target).abs() < 1e-10);
    }

    #[test]
    fn readout_mirror_symmetry(s in 0u32..=60, k in 0u32..=60, n in 0u32..=60) {
        let (k, n) = (k % (s + 1), n % (s + 1));
        let phi = kravchuk_fn(k, n, s).unwrap();
        prop_assert!((phi.abs() - kravchuk_fn(s - k, n, s).unwrap().abs()).abs() < 1e-13);
        prop_assert!((phi.abs() - kravchuk_fn(k, s - n, s).unwrap().abs()).abs() < 1e-13);
    }

    #[test]
    fn normalization_identity_holds(s in 0u32..=30, sigma in 0u32..=30, k in 0u32..=30) {
        let sigma = sigma % (s + 1);
        let k = k % (sigma + 1);
        let expected = binom(s + 1, sigma + 1).to_u128().unwrap();
        prop_assert_eq!(normalization_identity(s, sigma, k).unwrap(), expected);
    }

    #[test]
    fn chi_weights_step_and_sum(g in 0.05f64..1.0, r in 0.0f64..0.95, sigma in 0u32..6) {
        let tau = g.tanh().powi(2);
        let mut sum = 0.0;
        for s in sigma..sigma + 2000 {
            let here = chi_weight(g, r, sigma, s).unwrap();
            let next = chi_weight(g, r, sigma, s + 1).unwrap();
            if here > 1e-280 {
                let ratio = r * tau * (s + 2) as f64 / (s + 1 - sigma) as f64;
                prop_assert!((next / here - ratio).abs() <= 1e-12 * ratio, "S={}", s);
            }
            sum += here;
        }
        let total = chi_total(g, r, sigma).unwrap();
        prop_assert!((sum - total).abs() <= 1e-10 * total);
    }

    #[test]
    fn loss_composes(rho in mixed_two_mode(), r1 in 0.0f64..=1.0, r2 in 0.0f64..=1.0) {
        let twice = loss_channel(&loss_channel(&rho, 0, r1).unwrap(), 0, r2).unwrap();
        let once = loss_channel(&rho, 0, 1.0 - (1.0 - r1) * (1.0 - r2)).unwrap();
        prop_assert!(twice.max_abs_diff(&once) < 1e-10);
    }

    #[test]
    fn loss_backends_agree(rho in mixed_two_mode(), r in 0.0f64..=1.0) {
        let kernel = loss_channel(&rho, 1, r).unwrap();
        let ancilla = loss_channel_ancilla(&rho, 1, r).unwrap();
        prop_assert!(kernel.max_abs_diff(&ancilla) < 1e-12);
    }

    #[test]
    fn loss_keeps_trace_and_scales_mean(rho in mixed_two_mode(), r in 0.0f64..=1.0) {
        let out = loss_channel(&rho, 1, r).unwrap();
        prop_assert!((out.trace() - rho.trace()).abs() < 1e-12 * rho.trace());
        let expected = (1.0 - r) * rho.mean_photon_number(1);
        prop_assert!((out.mean_photon_number(1) - expected).abs() < 1e-12);
        prop_assert!((out.mean_photon_number(0) - rho.mean_photon_number(0)).abs() < 1e-12);
    }

    #[test]
    fn beam_splitter_preserves_state(rho in mixed_two_mode()) {
        let out = balanced_bs(&rho, 0, 1).unwrap();
        prop_assert!((out.trace() - rho.trace()).abs() < 1e-12);
        prop_assert!(out.is_hermitian(1e-12));
        prop_assert!(out.min_eigenvalue() > -1e-12);
        let total = |op: &FockDensityOperator| op.mean_photon_number(0) + op.mean_photon_number(1);
        prop_assert!((total(&out) - total(&rho)).abs() < 1e-12);
    }

    #[test]
    fn negativity_ignores_split_order(rho in mixed_two_mode()) {
        let forward = log_negativity(&rho, &BipartiteSplit::two_mode()).unwrap();
        let backward = log_negativity(&rho, &BipartiteSplit::new(vec![1], vec![0], 2).unwrap()).unwrap();
        prop_assert!((forward - backward).abs() < 1e-10);
        prop_assert!(forward <= 3f64.log2() + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn conditional_entanglement_is_bounded(
        g in 0.05f64..0.5,
        sigma in 1u32..=4,
        idlers in (0.0f64..0.99, 0.0f64..0.99),
        signals in (0.0f64..0.5, 0.0f64..0.5),
        det in 0.0f64..0.5,
    ) {
        let losses = LossConfig::lossless()
            .with_idlers(idlers.0, idlers.1)
            .with_signals(signals.0, signals.1)
            .with_detectors(det, det);
        let cfg = PipelineConfig::new(g, Readout::Total(sigma))
            .with_cutoff(Cutoff::Explicit(sigma + 3))
            .with_losses(losses);
        let bound = (sigma as f64 + 1.0).log2() + 1e-9;
        for res in simulate_pipeline(&cfg).unwrap() {
            if let Some(e_n) = res.e_n {
                prop_assert!(e_n <= bound, "σ={} k={} E_N={}", sigma, res.k, e_n);
                prop_assert!(e_n >= -1e-9);
            }
        }
        prop_assert!(log_negativity_pure_closed(sigma, 0).unwrap() <= bound);
    }
}
