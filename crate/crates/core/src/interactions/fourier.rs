//! Direct Fourier analysis on the cyclic group ℤ_q.

use num_complex::Complex64;
use std::f64::consts::PI;

pub const PSD_TOL: f64 = 1e-9;

fn character(k: usize, n: usize, q: usize) -> Complex64 {
    // reduce the phase exactly before evaluating the trigonometric functions
    let r = (k * n) % q;
    if r == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let theta = 2.0 * PI * r as f64 / q as f64;
    Complex64::new(theta.cos(), theta.sin())
}

/// f̂(k) = Σ_n f(n) · conj(χ_k(n)), χ_k(n) = exp(2πikn/q).
pub fn dft_zq(f: &[f64]) -> Vec<Complex64> {
    let q = f.len();
    (0..q)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, &v) in f.iter().enumerate() {
                if v != 0.0 {
                    acc += v * character(k, n, q).conj();
                }
            }
            acc
        })
        .collect()
}

/// f(n) = (1/q) Σ_k f̂(k) χ_k(n).
pub fn inverse_dft_zq(fhat: &[Complex64]) -> Vec<Complex64> {
    let q = fhat.len();
    (0..q)
        .map(|n| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &v) in fhat.iter().enumerate() {
                acc += v * character(k, n, q);
            }
            acc / q as f64
        })
        .collect()
}

/// Positive semi-definite iff the transform is real and non-negative.
pub fn is_positive_semidefinite(f: &[f64]) -> bool {
    is_positive_semidefinite_tol(f, PSD_TOL)
}

pub fn is_positive_semidefinite_tol(f: &[f64], tol: f64) -> bool {
    dft_zq(f).iter().all(|c| c.re >= -tol && c.im.abs() <= tol)
}

/// A real function Σ_k w_k cos(2πkn/q); positive semi-definite when w ≥ 0.
pub fn cosine_series(weights: &[f64], q: usize) -> Vec<f64> {
    (0..q)
        .map(|n| {
            weights
                .iter()
                .enumerate()
                .map(|(k, &w)| w * character(k, n, q).re)
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn potts(q: usize) -> Vec<f64> {
        (0..q).map(|n| if n == 0 { 1.0 } else { 0.0 }).collect()
    }

    fn clock(q: usize) -> Vec<f64> {
        (0..q).map(|n| (2.0 * PI * n as f64 / q as f64).cos()).collect()
    }

    #[test]
    fn potts_transform_is_exactly_one() {
        for q in 2..=12 {
            for c in dft_zq(&potts(q)) {
                assert_eq!(c, Complex64::new(1.0, 0.0));
            }
        }
    }

    #[test]
    fn clock_transform_concentrates_on_plus_minus_one() {
        for q in 3..=12 {
            let fh = dft_zq(&clock(q));
            for (k, c) in fh.iter().enumerate() {
                let expected = if k == 1 || k == q - 1 { q as f64 / 2.0 } else { 0.0 };
                assert!((c.re - expected).abs() < 1e-12, "q={q} k={k} {c}");
                assert!(c.im.abs() < 1e-12);
            }
            assert!(is_positive_semidefinite(&clock(q)));
        }
    }

    #[test]
    fn constant_function() {
        let fh = dft_zq(&[1.0; 5]);
        assert!((fh[0].re - 5.0).abs() < 1e-15);
        for c in &fh[1..] {
            assert!(c.norm() < 1e-12);
        }
    }

    #[test]
    fn shifted_delta_is_not_psd() {
        for q in 3..=8 {
            let mut f = vec![0.0; q];
            f[1] = 1.0;
            assert!(!is_positive_semidefinite(&f));
        }
        assert!(is_positive_semidefinite(&potts(4)));
    }

    proptest! {
        #[test]
        fn inversion_recovers(f in prop::collection::vec(-5.0f64..5.0, 2..16)) {
            let back = inverse_dft_zq(&dft_zq(&f));
            for (a, b) in f.iter().zip(&back) {
                prop_assert!((a - b.re).abs() < 1e-12 && b.im.abs() < 1e-12);
            }
        }

        #[test]
        fn even_functions_have_real_transform(half in prop::collection::vec(-5.0f64..5.0, 1..8), odd in any::<bool>()) {
            let q = 2 * half.len() + usize::from(odd);
            let f: Vec<f64> = (0..q).map(|n| half[n.min(q - n) % half.len()]).collect();
            for c in dft_zq(&f) {
                prop_assert!(c.im.abs() < 1e-12);
            }
        }

        #[test]
        fn nonnegative_cosine_series_is_psd(w in prop::collection::vec(0.0f64..3.0, 1..6), q in 2usize..10) {
            let w: Vec<f64> = w.into_iter().take(q / 2 + 1).collect();
            prop_assert!(is_positive_semidefinite(&cosine_series(&w, q)));
        }
    }
}
