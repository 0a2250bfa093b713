//! Small combinatorial helpers shared by the closed forms.

use statrs::function::factorial;

/// Binomial coefficient as a float; zero outside `0 ≤ k ≤ n`.
pub(crate) fn binomial(n: i64, k: i64) -> f64 {
    if n < 0 || k < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    // Running product stays within a few ulps, unlike the log-gamma route.
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

/// Exact binomial coefficient, `None` on overflow.
pub(crate) fn binomial_exact(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

pub(crate) fn ln_factorial(n: u64) -> f64 {
    factorial::ln_factorial(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials_agree() {
        for n in 0..60u64 {
            for k in 0..=n {
                let exact = binomial_exact(n, k).unwrap() as f64;
                let float = binomial(n as i64, k as i64);
                assert!((exact - float).abs() <= 1e-12 * exact, "C({n},{k})");
            }
        }
        for (n, k) in [(117u64, 3u64), (200, 100), (1000, 17)] {
            if let Some(exact) = binomial_exact(n, k) {
                assert!((binomial(n as i64, k as i64) - exact as f64).abs() <= 1e-14 * exact as f64);
            }
        }
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(3, -1), 0.0);
        assert_eq!(binomial_exact(7, 4), Some(35));
    }
}
