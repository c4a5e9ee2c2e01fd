//! Interaction functions on ℤ_q, the coupling kernel and external fields.

pub mod field;
pub mod fourier;
pub mod kernel;
pub mod lattice_sum;

pub use field::{truncated_value, FieldAssignment, FieldKind};
pub use fourier::{dft_zq, inverse_dft_zq, is_positive_semidefinite};
pub use kernel::{CouplingKernel, KernelTable, Range};
pub use lattice_sum::{c_alpha, zeta, LatticeSum};

use serde::{Deserialize, Serialize};

use crate::error::InteractionError;

/// φ : ℤ_q → ℝ with its normalization ψ = (φ(0) − φ)/(φ(0) − min_{n≠0} φ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    q: usize,
    phi: Vec<f64>,
    psi: Vec<f64>,
    m: f64,
    scale: f64,
}

impl InteractionSpec {
    pub fn from_phi(phi: Vec<f64>) -> Result<Self, InteractionError> {
        let q = phi.len();
        let (psi, m) = normalize(&phi)?;
        let scale = phi[0] - phi[1..].iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Self { q, phi, psi, m, scale })
    }

    /// φ(n) = 1{n = 0}.
    pub fn potts(q: usize) -> Result<Self, InteractionError> {
        if q < 2 {
            return Err(InteractionError::TooFewColors(q));
        }
        Self::from_phi((0..q).map(|n| if n == 0 { 1.0 } else { 0.0 }).collect())
    }

    /// φ(n) = cos(2πn/q).
    pub fn clock(q: usize) -> Result<Self, InteractionError> {
        if q < 2 {
            return Err(InteractionError::TooFewColors(q));
        }
        Self::from_phi(
            (0..q)
                .map(|n| {
                    // exact values at quarter turns keep ψ exact for q = 4
                    if (4 * n) % q == 0 {
                        [1.0, 0.0, -1.0, 0.0][4 * n / q]
                    } else {
                        (2.0 * std::f64::consts::PI * n as f64 / q as f64).cos()
                    }
                })
                .collect(),
        )
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// Minimal excitation min_{n≠0} ψ(n).
    pub fn m(&self) -> f64 {
        self.m
    }

    /// φ(0) − min_{n≠0} φ(n), so that φ(0) − φ = scale · ψ.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn phi_at(&self, n: i64) -> f64 {
        self.phi[n.rem_euclid(self.q as i64) as usize]
    }

    pub fn psi_at(&self, n: i64) -> f64 {
        self.psi[n.rem_euclid(self.q as i64) as usize]
    }

    pub fn fourier(&self) -> Vec<num_complex::Complex64> {
        dft_zq(&self.phi)
    }

    pub fn is_positive_semidefinite(&self) -> bool {
        is_positive_semidefinite(&self.phi)
    }
}

/// Returns (ψ, m). Rejects φ that is not uniquely maximal at 0.
pub fn normalize(phi: &[f64]) -> Result<(Vec<f64>, f64), InteractionError> {
    let q = phi.len();
    if q < 2 {
        return Err(InteractionError::TooFewColors(q));
    }
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(InteractionError::InvalidParameter("phi must be finite".into()));
    }
    for (n, &v) in phi.iter().enumerate().skip(1) {
        if v >= phi[0] {
            return Err(InteractionError::NotFerromagnetic { phi0: phi[0], n, value: v });
        }
    }
    let min = phi[1..].iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = phi[0] - min;
    let psi: Vec<f64> = phi
        .iter()
        .enumerate()
        .map(|(n, &v)| if n == 0 { 0.0 } else { ((phi[0] - v) / scale).clamp(0.0, 1.0) })
        .collect();
    let m = psi[1..].iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((psi, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn potts_normalization() {
        let s = InteractionSpec::potts(4).unwrap();
        assert_eq!(s.psi(), &[0.0, 1.0, 1.0, 1.0]);
        assert_eq!(s.m(), 1.0);
        assert_eq!(s.scale(), 1.0);
    }

    #[test]
    fn clock_normalization() {
        let s = InteractionSpec::clock(4).unwrap();
        assert_eq!(s.phi(), &[1.0, 0.0, -1.0, 0.0]);
        assert_eq!(s.psi(), &[0.0, 0.5, 1.0, 0.5]);
        assert_eq!(s.m(), 0.5);
        let s3 = InteractionSpec::clock(3).unwrap();
        assert!((s3.psi()[1] - 1.0).abs() < 1e-15 && (s3.psi()[2] - 1.0).abs() < 1e-15);
        assert!((s3.m() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_ferromagnetic() {
        assert!(matches!(
            InteractionSpec::from_phi(vec![0.0, 1.0, 0.0]),
            Err(InteractionError::NotFerromagnetic { n: 1, .. })
        ));
        assert!(matches!(
            InteractionSpec::from_phi(vec![1.0, 1.0]),
            Err(InteractionError::NotFerromagnetic { .. })
        ));
        assert!(matches!(InteractionSpec::potts(1), Err(InteractionError::TooFewColors(1))));
    }

    proptest! {
        #[test]
        fn normalization_is_affine_invariant(
            tail in prop::collection::vec(-3.0f64..0.99, 1..8),
            a in 0.1f64..10.0,
            b in -10.0f64..10.0,
        ) {
            let mut phi = vec![1.0];
            phi.extend(tail);
            let (psi, m) = normalize(&phi).unwrap();
            let shifted: Vec<f64> = phi.iter().map(|v| a * v + b).collect();
            let (psi2, m2) = normalize(&shifted).unwrap();
            for (x, y) in psi.iter().zip(&psi2) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            prop_assert!((m - m2).abs() < 1e-12);
            prop_assert_eq!(psi[0], 0.0);
            prop_assert!(psi.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!(m > 0.0);
            prop_assert!((psi.iter().cloned().fold(0.0, f64::max) - 1.0).abs() < 1e-12);
        }
    }
}
