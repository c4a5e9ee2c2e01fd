//! Per-site, per-color external fields h_{x,n}.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::InteractionError;
use crate::lattice::{BoxWindow, Norm, Site};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldKind {
    #[default]
    Zero,
    /// h_{x,n} = h*/|x|^δ; the origin gets h*.
    Decaying { h_star: f64, delta: f64 },
    /// Decaying field set to 0 on |x| < R.
    Truncated { h_star: f64, delta: f64, radius: f64 },
    /// h_{x,n} = ε · i.i.d. standard normal.
    Gaussian { epsilon: f64, seed: u64 },
    /// Explicit values.
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldAssignment {
    window: BoxWindow,
    q: usize,
    kind: FieldKind,
    /// Site-major: `values[i * q + n]`.
    values: Vec<f64>,
}

impl FieldAssignment {
    pub fn zero(window: &BoxWindow, q: usize) -> Self {
        Self {
            window: window.clone(),
            q,
            kind: FieldKind::Zero,
            values: vec![0.0; window.len() * q],
        }
    }

    pub fn make(kind: FieldKind, window: &BoxWindow, q: usize, norm: Norm) -> Result<Self, InteractionError> {
        match kind {
            FieldKind::Zero => Ok(Self::zero(window, q)),
            FieldKind::Decaying { h_star, delta } => Self::decaying(window, q, h_star, delta, norm),
            FieldKind::Truncated { h_star, delta, radius } => Self::truncated(window, q, h_star, delta, radius, norm),
            FieldKind::Gaussian { epsilon, seed } => Self::gaussian(window, q, epsilon, seed),
            FieldKind::Custom => Err(InteractionError::InvalidParameter(
                "custom fields are built from explicit values".into(),
            )),
        }
    }

    pub fn decaying(window: &BoxWindow, q: usize, h_star: f64, delta: f64, norm: Norm) -> Result<Self, InteractionError> {
        check_decay(h_star, delta)?;
        Ok(Self::per_site(window, q, FieldKind::Decaying { h_star, delta }, |x| {
            decay_value(x, h_star, delta, norm)
        }))
    }

    pub fn truncated(
        window: &BoxWindow,
        q: usize,
        h_star: f64,
        delta: f64,
        radius: f64,
        norm: Norm,
    ) -> Result<Self, InteractionError> {
        check_decay(h_star, delta)?;
        if !(radius >= 1.0) || !radius.is_finite() {
            return Err(InteractionError::InvalidParameter(format!("radius must be >= 1, got {radius}")));
        }
        Ok(Self::per_site(window, q, FieldKind::Truncated { h_star, delta, radius }, |x| {
            if x.norm(norm) < radius {
                0.0
            } else {
                decay_value(x, h_star, delta, norm)
            }
        }))
    }

    /// Draws in row-major site order, colors innermost, from ChaCha8 seeded
    /// with `seed`.
    pub fn gaussian(window: &BoxWindow, q: usize, epsilon: f64, seed: u64) -> Result<Self, InteractionError> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(InteractionError::InvalidParameter(format!("epsilon must be >= 0, got {epsilon}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..window.len() * q)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                if epsilon == 0.0 {
                    0.0
                } else {
                    epsilon * z
                }
            })
            .collect();
        Ok(Self {
            window: window.clone(),
            q,
            kind: FieldKind::Gaussian { epsilon, seed },
            values,
        })
    }

    pub fn from_values(window: &BoxWindow, q: usize, values: Vec<f64>) -> Result<Self, InteractionError> {
        if values.len() != window.len() * q {
            return Err(InteractionError::InvalidParameter(format!(
                "expected {} field values, got {}",
                window.len() * q,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(InteractionError::InvalidParameter("field values must be finite".into()));
        }
        Ok(Self {
            window: window.clone(),
            q,
            kind: FieldKind::Custom,
            values,
        })
    }

    /// Scalar field h_x entering as h_x φ(n).
    pub fn from_scalar(window: &BoxWindow, h: &[f64], phi: &[f64]) -> Result<Self, InteractionError> {
        let q = phi.len();
        if h.len() != window.len() {
            return Err(InteractionError::InvalidParameter(format!(
                "expected {} scalar field values, got {}",
                window.len(),
                h.len()
            )));
        }
        let values = h.iter().flat_map(|&hx| phi.iter().map(move |&p| hx * p)).collect();
        Self::from_values(window, q, values)
    }

    fn per_site(window: &BoxWindow, q: usize, kind: FieldKind, f: impl Fn(&Site) -> f64) -> Self {
        let values = window
            .sites()
            .flat_map(|x| {
                let v = f(&x);
                std::iter::repeat_n(v, q)
            })
            .collect();
        Self {
            window: window.clone(),
            q,
            kind,
            values,
        }
    }

    pub fn window(&self) -> &BoxWindow {
        &self.window
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// h at window index `i`, color `n`.
    #[inline]
    pub fn get(&self, i: usize, n: usize) -> f64 {
        self.values[i * self.q + n]
    }

    #[inline]
    pub fn site_values(&self, i: usize) -> &[f64] {
        &self.values[i * self.q..(i + 1) * self.q]
    }

    pub fn set(&mut self, i: usize, n: usize, v: f64) {
        self.values[i * self.q + n] = v;
        self.kind = FieldKind::Custom;
    }

    /// h at an arbitrary site; 0 outside the window.
    pub fn at(&self, x: &Site, n: usize) -> f64 {
        self.window.index_of(x).map_or(0.0, |i| self.get(i, n))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            window: self.window.clone(),
            q: self.q,
            kind: FieldKind::Custom,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

fn check_decay(h_star: f64, delta: f64) -> Result<(), InteractionError> {
    if !(h_star >= 0.0) || !h_star.is_finite() {
        return Err(InteractionError::InvalidParameter(format!("h* must be >= 0, got {h_star}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(InteractionError::InvalidParameter(format!("delta must be > 0, got {delta}")));
    }
    Ok(())
}

/// ĥ_x: h*/|x|^δ for |x| ≥ R, 0 inside the ball.
pub fn truncated_value(x: &Site, h_star: f64, delta: f64, radius: f64, norm: Norm) -> f64 {
    if x.norm(norm) < radius {
        0.0
    } else {
        decay_value(x, h_star, delta, norm)
    }
}

fn decay_value(x: &Site, h_star: f64, delta: f64, norm: Norm) -> f64 {
    let r = x.norm(norm);
    if r == 0.0 {
        h_star
    } else {
        h_star * r.powf(-delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decaying_example() {
        let w = BoxWindow::centered(2, 5);
        let f = FieldAssignment::decaying(&w, 3, 1.0, 2.0, Norm::L2).unwrap();
        for n in 0..3 {
            assert_eq!(f.at(&Site::new(&[2, 0]), n), 0.25);
            assert_eq!(f.at(&Site::origin(2), n), 1.0);
            assert_eq!(f.at(&Site::new(&[9, 9]), n), 0.0);
        }
    }

    #[test]
    fn truncated_example() {
        let w = BoxWindow::centered(2, 9);
        let f = FieldAssignment::truncated(&w, 2, 1.0, 2.0, 3.0, Norm::L2).unwrap();
        assert_eq!(f.at(&Site::new(&[1, 1]), 0), 0.0);
        assert_eq!(f.at(&Site::new(&[3, 0]), 1), 1.0 / 9.0);
        for (i, x) in w.sites().enumerate() {
            let r = x.norm(Norm::L2);
            for n in 0..2 {
                if r < 3.0 {
                    assert_eq!(f.get(i, n), 0.0);
                } else {
                    assert!(f.get(i, n) <= r.powf(-2.0) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn gaussian_reproducible_and_zero_at_zero_epsilon() {
        let w = BoxWindow::centered(2, 4);
        let a = FieldAssignment::gaussian(&w, 3, 0.5, 11).unwrap();
        let b = FieldAssignment::gaussian(&w, 3, 0.5, 11).unwrap();
        let c = FieldAssignment::gaussian(&w, 3, 0.5, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(FieldAssignment::gaussian(&w, 3, 0.0, 11).unwrap().is_zero());
        let big = FieldAssignment::gaussian(&BoxWindow::centered(2, 40), 5, 1.0, 3).unwrap();
        let n = big.values().len() as f64;
        let mean = big.values().iter().sum::<f64>() / n;
        let var = big.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 4.0 / n.sqrt());
        assert!((var - 1.0).abs() < 0.1);
    }

    #[test]
    fn rejects_invalid() {
        let w = BoxWindow::centered(2, 3);
        assert!(FieldAssignment::decaying(&w, 2, 1.0, 0.0, Norm::L2).is_err());
        assert!(FieldAssignment::truncated(&w, 2, 1.0, 1.0, 0.5, Norm::L2).is_err());
        assert!(FieldAssignment::gaussian(&w, 2, -1.0, 0).is_err());
        assert!(FieldAssignment::from_values(&w, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn scalar_reduction() {
        let w = BoxWindow::centered(1, 2);
        let f = FieldAssignment::from_scalar(&w, &[2.0, 3.0], &[1.0, 0.0, -0.5]).unwrap();
        assert_eq!(f.site_values(0), &[2.0, 0.0, -1.0]);
        assert_eq!(f.site_values(1), &[3.0, 0.0, -1.5]);
    }
}
