//! Explicit constants of the energy estimate, the two geometric lemmas, the
//! contour energy bound and the Peierls tail.

pub mod exhaustive;
pub mod field;

pub use exhaustive::{exhaustive_verify, ExhaustiveOptions, VerifyRecord, VerifySetup, VerifySummary};
pub use field::{decaying_field_check, FieldCheckReport, FieldCheckSetup};

use serde::{Deserialize, Serialize};

use crate::contour::{Contour, ContourFamily, MaParams};
use crate::error::{BoundsError, ContourError};
use crate::interactions::{c_alpha, zeta, CouplingKernel};
use crate::lattice::{l1_ball, Norm, Region, Site};
use crate::numeric::NeumaierSum;
use crate::spin_model::{ModelInstance, SpinConfig};

/// Slack allowed when comparing the two sides of the energy bound.
pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub d: usize,
    pub alpha: f64,
    pub j: f64,
    pub q: usize,
    pub m: f64,
    pub norm: Norm,
    /// (α − d) ∧ 1.
    pub gap: f64,
    pub a: f64,
    pub c_alpha: f64,
    pub c_alpha_error: f64,
    pub kappa2: f64,
    pub m_min: f64,
    pub c2: f64,
    pub c1: f64,
    pub beta0: f64,
}

impl BoundConstants {
    /// (M, a) parameters with M = max(M_min, `m`).
    pub fn ma_params(&self, m: Option<f64>) -> Result<MaParams, ContourError> {
        MaParams::with_norm(m.unwrap_or(self.m_min), self.a, self.d, self.norm)
    }

    /// β c₂ − c₁ − ln q, written as (β − β₀)c₂ + ln 5 so that it is exact at β₀.
    pub fn peierls_exponent(&self, beta: f64) -> f64 {
        (beta - self.beta0) * self.c2 + 5f64.ln()
    }
}

pub fn compute_constants(d: usize, alpha: f64, j: f64, q: usize, m: f64, c1: f64) -> Result<BoundConstants, BoundsError> {
    compute_constants_with_norm(d, alpha, j, q, m, c1, Norm::default())
}

pub fn compute_constants_with_norm(
    d: usize,
    alpha: f64,
    j: f64,
    q: usize,
    m: f64,
    c1: f64,
    norm: Norm,
) -> Result<BoundConstants, BoundsError> {
    if d == 0 {
        return Err(BoundsError::InvalidParameter("d must be positive".into()));
    }
    if !(alpha > d as f64) || !alpha.is_finite() {
        return Err(BoundsError::Interaction(crate::error::InteractionError::Divergent { alpha, dim: d }));
    }
    if !(j > 0.0) || !j.is_finite() {
        return Err(BoundsError::InvalidParameter(format!("J must be positive, got {j}")));
    }
    if q < 2 {
        return Err(BoundsError::InvalidParameter(format!("q must be at least 2, got {q}")));
    }
    if !(m > 0.0 && m <= 1.0) {
        return Err(BoundsError::InvalidParameter(format!("m must lie in (0, 1], got {m}")));
    }
    if !(c1 > 0.0) || !c1.is_finite() {
        return Err(BoundsError::InvalidParameter(format!("c1 must be positive, got {c1}")));
    }
    let df = d as f64;
    let gap = (alpha - df).min(1.0);
    let a = 3.0 * (df + 1.0) / gap;
    let c = c_alpha(d, alpha, norm, 1e-11)?;
    let z = zeta(a / (df + 1.0) - 1.0);
    let kappa2 = (1.0 + 1.0 / j)
        * (j * 2f64.powf(df - 1.0 + alpha) * (df - 1.0).exp() / (alpha - df) + 3.0 * z.value);
    let m_min = (2f64.powf(alpha + 5.0) * (2.0 * df + 1.0) * kappa2 / m).powf(1.0 / gap);
    let c2 = m / ((2.0 * df + 1.0) * 2f64.powf(alpha + 1.0)) * (j * c.value).min(0.125);
    let beta0 = (c1 + 5f64.ln() + (q as f64).ln()) / c2;
    Ok(BoundConstants {
        d,
        alpha,
        j,
        q,
        m,
        norm,
        gap,
        a,
        c_alpha: c.value,
        c_alpha_error: c.error_bound,
        kappa2,
        m_min,
        c2,
        c1,
        beta0,
    })
}

/// Σ_{n≥1} e^{−n x} = e^{−x}/(1 − e^{−x}) with x = β c₂ − c₁ − ln q.
pub fn peierls_tail(beta: f64, constants: &BoundConstants) -> Result<f64, BoundsError> {
    let x = constants.peierls_exponent(beta);
    if !(x > 0.0) {
        return Err(BoundsError::Divergent(x));
    }
    Ok((-x).exp() / -(-x).exp_m1())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// J_xy ≥ (1/((2d+1)2^α)) Σ_{x′∈B₁(x)} J_{x′y}.
pub fn check_lemma_geometric(x: &Site, y: &Site, kernel: &CouplingKernel) -> Result<LemmaReport, BoundsError> {
    if x == y {
        return Err(BoundsError::SameSite);
    }
    let alpha = kernel.alpha().ok_or(BoundsError::NeedsLongRange)?;
    let d = kernel.dim() as f64;
    let lhs = kernel.coupling(x, y);
    let sum: f64 = l1_ball(*x, 1).iter().map(|xp| kernel.coupling(xp, y)).sum();
    let rhs = sum / ((2.0 * d + 1.0) * 2f64.powf(alpha));
    Ok(LemmaReport {
        lhs,
        rhs,
        holds: lhs >= rhs * (1.0 - 1e-14),
    })
}

/// Σ_{x∈sp, x≠y} Σ_{x′∈B₁(x)} J_{x′y} ψ(σ_x − σ_y) ≥ m Σ_{z∈sp} J_{zy}.
pub fn check_lemma_incorrect_support(
    sigma: &SpinConfig,
    support: &Region,
    y: &Site,
    model: &ModelInstance,
) -> LemmaReport {
    let k = model.kernel();
    let inter = model.interaction();
    let sy = sigma.at(y) as i64;
    let mut lhs = NeumaierSum::new();
    let mut rhs = NeumaierSum::new();
    for x in support {
        rhs.add(k.coupling(x, y));
        if x == y {
            continue;
        }
        let w = inter.psi_at(sigma.at(x) as i64 - sy);
        if w == 0.0 {
            continue;
        }
        for xp in &l1_ball(*x, 1) {
            lhs.add(k.coupling(xp, y) * w);
        }
    }
    let (lhs, rhs) = (lhs.value(), inter.m() * rhs.value());
    LemmaReport {
        lhs,
        rhs,
        holds: lhs >= rhs * (1.0 - 1e-12),
    }
}

/// Lemma check for a contour extracted from `sigma`.
pub fn check_lemma_incorrect(
    sigma: &SpinConfig,
    gamma: &Contour,
    y: &Site,
    model: &ModelInstance,
) -> Result<LemmaReport, BoundsError> {
    if gamma.support().iter().zip(gamma.spins()).any(|(x, &s)| sigma.at(x) != s) {
        return Err(BoundsError::Contour(ContourError::StaleFamily));
    }
    Ok(check_lemma_incorrect_support(sigma, gamma.support(), y, model))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    /// M ≥ M_min: the hypothesis of the estimate holds.
    Theorem,
    /// M < M_min: evaluated for information only.
    Diagnostic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBoundReport {
    pub size: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
    pub mode: BoundMode,
}

/// c₂(|γ| + F_sp + Σ_{n=1}^{q−1} F_{I_n} + F_{I′}).
pub fn energy_bound_rhs(gamma: &Contour, kernel: &CouplingKernel, c2: f64) -> f64 {
    let mut s = NeumaierSum::new();
    s.add(gamma.size() as f64);
    s.add(kernel.surface_coupling(gamma.support()).value);
    for n in 1..gamma.q() {
        s.add(kernel.surface_coupling(gamma.interior(n as u8)).value);
    }
    s.add(kernel.surface_coupling(gamma.i_prime()).value);
    c2 * s.value()
}

/// H_ψ(σ) − H_ψ(τ_γ σ) against the bound, for the external contour
/// `index` of `family` (zero field, exterior color 0).
pub fn verify_energy_bound(
    sigma: &SpinConfig,
    family: &ContourFamily,
    index: usize,
    model: &ModelInstance,
    constants: &BoundConstants,
) -> Result<EnergyBoundReport, BoundsError> {
    if !model.field().is_zero() {
        return Err(BoundsError::InvalidParameter("the energy bound is stated for h = 0".into()));
    }
    let gamma = family.contours().get(index).ok_or(BoundsError::EmptyContour)?;
    if gamma.size() == 0 {
        return Err(BoundsError::EmptyContour);
    }
    let tau = family.erase(sigma, index)?;
    let lhs = model.hamiltonian_psi(sigma)? - model.hamiltonian_psi(&tau)?;
    let rhs = energy_bound_rhs(gamma, model.kernel(), constants.c2);
    let mode = if family.params().m >= constants.m_min {
        BoundMode::Theorem
    } else {
        BoundMode::Diagnostic
    };
    Ok(EnergyBoundReport {
        size: gamma.size(),
        lhs,
        rhs,
        margin: lhs - rhs,
        holds: lhs >= rhs - ENERGY_TOL,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::extract_contours;
    use crate::interactions::InteractionSpec;
    use crate::lattice::BoxWindow;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reference_constants() {
        let c = compute_constants(2, 3.0, 1.0, 3, 1.0, 1.0).unwrap();
        assert_eq!(c.a, 9.0);
        assert!(c.c_alpha > 0.125);
        assert_eq!(c.c2, 1.0 / 640.0);
        assert_relative_eq!(c.beta0, (1.0 + 5f64.ln() + 3f64.ln()) * 640.0, max_relative = 1e-15);
        assert!((c.beta0 - 2373.152).abs() < 1e-3);
        // κ: ζ(9/3 − 1) = ζ(2)
        let kappa = 2.0 * (16.0 * 1f64.exp() + 3.0 * std::f64::consts::PI.powi(2) / 6.0);
        assert_relative_eq!(c.kappa2, kappa, max_relative = 1e-14);
        assert_relative_eq!(c.m_min, 256.0 * 5.0 * kappa, max_relative = 1e-14);
    }

    #[test]
    fn homogeneity_in_m() {
        let a = compute_constants(2, 2.5, 1.0, 3, 0.5, 1.0).unwrap();
        let b = compute_constants(2, 2.5, 1.0, 3, 1.0, 1.0).unwrap();
        assert_relative_eq!(b.c2, 2.0 * a.c2, max_relative = 1e-15);
        assert_relative_eq!(b.m_min.powf(b.gap), a.m_min.powf(a.gap) / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn round_trip_and_tail() {
        for (d, alpha, q) in [(1, 1.5, 2), (2, 3.0, 3), (2, 2.5, 4), (3, 4.5, 5)] {
            let c = compute_constants(d, alpha, 1.0, q, 1.0, 1.0).unwrap();
            assert!((c.peierls_exponent(c.beta0) - 5f64.ln()).abs() < 1e-12);
            assert_eq!(peierls_tail(c.beta0, &c).unwrap(), 0.25);
        }
        let c = compute_constants(2, 3.0, 1.0, 2, 1.0, 1.0).unwrap();
        let beta_ln2 = (c.c1 + 2f64.ln() + 2f64.ln()) / c.c2;
        assert!((peierls_tail(beta_ln2, &c).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(peierls_tail(10.0, &c), Err(BoundsError::Divergent(_))));
        assert!(peierls_tail(1e9, &c).unwrap() < 1e-300);
        let mut prev = f64::INFINITY;
        for k in 0..50 {
            let t = peierls_tail(c.beta0 * (1.0 + 0.1 * k as f64), &c).unwrap();
            assert!(t < prev);
            prev = t;
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(compute_constants(2, 2.0, 1.0, 3, 1.0, 1.0).is_err());
        assert!(compute_constants(2, 3.0, 1.0, 3, 0.0, 1.0).is_err());
        assert!(compute_constants(2, 3.0, 1.0, 3, 1.0, 0.0).is_err());
    }

    #[test]
    fn geometric_lemma_example() {
        let k = CouplingKernel::long_range(2, 1.0, 3.0, Norm::L2).unwrap();
        let r = check_lemma_geometric(&Site::origin(2), &Site::new(&[3, 0]), &k).unwrap();
        assert_relative_eq!(r.lhs, 1.0 / 27.0, max_relative = 1e-15);
        let expected = (1.0 / 27.0 + 1.0 / 8.0 + 1.0 / 64.0 + 2.0 * 10f64.powf(-1.5)) / 40.0;
        assert_relative_eq!(r.rhs, expected, max_relative = 1e-14);
        assert!(r.holds);
        for y in [[1, 0], [0, 1], [-1, 0], [0, -1]] {
            assert!(check_lemma_geometric(&Site::origin(2), &Site::new(&y), &k).unwrap().holds);
        }
        assert!(matches!(check_lemma_geometric(&Site::origin(2), &Site::origin(2), &k), Err(BoundsError::SameSite)));
        let nn = CouplingKernel::nearest_neighbor(2, 1.0).unwrap();
        assert!(matches!(
            check_lemma_geometric(&Site::origin(2), &Site::new(&[1, 0]), &nn),
            Err(BoundsError::NeedsLongRange)
        ));
    }

    #[test]
    fn geometric_lemma_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in 2..=3usize {
            for alpha in [d as f64 + 0.5, d as f64 + 1.0, d as f64 + 2.0] {
                let k = CouplingKernel::long_range(d, 1.0, alpha, Norm::L2).unwrap();
                for _ in 0..2000 {
                    let x: Vec<i32> = (0..d).map(|_| rng.random_range(-25..=25)).collect();
                    let y: Vec<i32> = (0..d).map(|_| rng.random_range(-25..=25)).collect();
                    if x != y {
                        assert!(check_lemma_geometric(&Site::new(&x), &Site::new(&y), &k).unwrap().holds);
                    }
                }
            }
        }
    }

    fn potts_model(side: usize, alpha: f64) -> ModelInstance {
        let k = CouplingKernel::long_range(2, 1.0, alpha, Norm::L2).unwrap();
        ModelInstance::zero_field(InteractionSpec::potts(3).unwrap(), &k, &BoxWindow::centered(2, side), 1.0).unwrap()
    }

    #[test]
    fn incorrect_points_lemma() {
        let m = potts_model(5, 3.0);
        let mut s = SpinConfig::ground(m.window(), 3, 0).unwrap();
        s.set_site(&Site::origin(2), 1).unwrap();
        let fam = extract_contours(&s, &MaParams::new(1.0, 9.0, 2).unwrap()).unwrap();
        let g = &fam.contours()[0];
        let far = check_lemma_incorrect(&s, g, &Site::new(&[9, 4]), &m).unwrap();
        // only the flipped site contributes and B₁(0) is the whole support
        assert!(far.holds);
        assert_relative_eq!(far.lhs, far.rhs, max_relative = 1e-13);
        let inside = check_lemma_incorrect(&s, g, &Site::new(&[1, 0]), &m).unwrap();
        assert!(inside.holds);
        let empty = check_lemma_incorrect_support(&s, &Region::new(2), &Site::origin(2), &m);
        assert_eq!((empty.lhs, empty.rhs, empty.holds), (0.0, 0.0, true));
        let other = SpinConfig::ground(m.window(), 3, 0).unwrap();
        assert!(check_lemma_incorrect(&other, g, &Site::origin(2), &m).is_err());
    }

    #[test]
    fn single_flip_energy_bound() {
        let m = potts_model(5, 3.0);
        let consts = compute_constants(2, 3.0, 1.0, 3, 1.0, 1.0).unwrap();
        let mut s = SpinConfig::ground(m.window(), 3, 0).unwrap();
        s.set_site(&Site::origin(2), 2).unwrap();
        let fam = extract_contours(&s, &consts.ma_params(None).unwrap()).unwrap();
        let r = verify_energy_bound(&s, &fam, 0, &m, &consts).unwrap();
        let c = m.kernel().total_coupling().value;
        assert_relative_eq!(r.lhs, c, max_relative = 1e-13);
        let f = m.kernel().surface_coupling(&l1_ball(Site::origin(2), 1)).value;
        assert_relative_eq!(r.rhs, (5.0 + f) / 640.0, max_relative = 1e-13);
        assert!(r.holds && r.margin > 0.0);
        assert_eq!(r.mode, BoundMode::Theorem);
        let diag = extract_contours(&s, &MaParams::new(1.0, 9.0, 2).unwrap()).unwrap();
        assert_eq!(verify_energy_bound(&s, &diag, 0, &m, &consts).unwrap().mode, BoundMode::Diagnostic);
    }
}
