//! Exact checks of the correlation inequalities for positive semi-definite
//! interactions: ⟨f⟩ ≥ 0, ⟨fg⟩ ≥ ⟨f⟩⟨g⟩, monotonicity in a field bump and
//! monotonicity in the volume, all under the reference boundary.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cos_turn, exact_with, EnumOptions, LocalFunction};
use crate::error::EnumerationError;
use crate::interactions::{CouplingKernel, FieldAssignment, InteractionSpec};
use crate::lattice::{BoxWindow, Site};
use crate::spin_model::ModelInstance;

pub const GRIFFITHS_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct GriffithsSetup {
    pub interaction: InteractionSpec,
    pub kernel: CouplingKernel,
    /// Λ, where the test functions live.
    pub inner: BoxWindow,
    /// Δ ⊇ Λ.
    pub outer: BoxWindow,
    pub beta_range: (f64, f64),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GriffithsReport {
    pub cases: usize,
    /// Set when the hypothesis fails and nothing was checked.
    pub skipped: Option<String>,
    /// Smallest slack of each inequality (negative means violated).
    pub min_first: f64,
    pub min_second: f64,
    pub min_field: f64,
    pub min_volume: f64,
    pub violations: [usize; 4],
}

impl GriffithsReport {
    pub fn passed(&self) -> bool {
        self.skipped.is_none() && self.violations.iter().all(|&v| v == 0)
    }
}

fn random_psd(rng: &mut ChaCha8Rng, sites: &[Site], q: usize) -> Result<LocalFunction, EnumerationError> {
    let k = rng.random_range(1..=2.min(sites.len()));
    let support: Vec<Site> = sites.choose_multiple(rng, k).cloned().collect();
    let mut terms = vec![(rng.random_range(0.0..0.5), vec![0u32; k])];
    for _ in 0..rng.random_range(1..=3) {
        let freq = (0..k).map(|_| rng.random_range(0..q as u32)).collect();
        terms.push((rng.random_range(0.0..1.0), freq));
    }
    LocalFunction::cosine_characters(support, q, &terms)
}

/// h_{x,n} = a_x 1{n=0} + b_x cos(2πn/q) with a_x, b_x ≥ 0.
fn random_field(rng: &mut ChaCha8Rng, window: &BoxWindow, q: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(window.len() * q);
    for _ in 0..window.len() {
        let a: f64 = rng.random_range(0.0..0.5);
        let b: f64 = rng.random_range(0.0..0.5);
        v.extend((0..q).map(|n| if n == 0 { a } else { 0.0 } + b * cos_turn(n, q)));
    }
    v
}

fn restrict(values: &[f64], outer: &BoxWindow, inner: &BoxWindow, q: usize) -> Vec<f64> {
    inner
        .sites()
        .flat_map(|x| {
            let i = outer.index_of(&x).expect("inner window lies in the outer window");
            values[i * q..(i + 1) * q].to_vec()
        })
        .collect()
}

/// Run `trials` random cases (functions, field, bump, β) and record the four
/// inequalities' slacks.
pub fn griffiths_checks(
    setup: &GriffithsSetup,
    trials: usize,
    seed: u64,
    opts: &EnumOptions,
) -> Result<GriffithsReport, EnumerationError> {
    let mut report = GriffithsReport {
        min_first: f64::INFINITY,
        min_second: f64::INFINITY,
        min_field: f64::INFINITY,
        min_volume: f64::INFINITY,
        ..Default::default()
    };
    let inter = &setup.interaction;
    if !inter.is_positive_semidefinite() {
        report.skipped = Some("phi is not positive semi-definite; the inequalities need a psd interaction".into());
        return Ok(report);
    }
    if opts.exterior != 0 {
        return Err(EnumerationError::InvalidParameter("the checks use the reference boundary color".into()));
    }
    if !setup.inner.sites().all(|x| setup.outer.contains(&x)) {
        return Err(EnumerationError::InvalidParameter("inner window must lie inside the outer window".into()));
    }
    let q = inter.q();
    let (lo, hi) = setup.beta_range;
    if !(0.0 <= lo && lo < hi) {
        return Err(EnumerationError::InvalidParameter("beta range must satisfy 0 <= lo < hi".into()));
    }
    let inner_sites: Vec<Site> = setup.inner.sites().collect();
    let base_outer = ModelInstance::zero_field(inter.clone(), &setup.kernel, &setup.outer, 1.0)?;
    let base_inner = ModelInstance::zero_field(inter.clone(), &setup.kernel, &setup.inner, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let beta = rng.random_range(lo..hi);
        let f = random_psd(&mut rng, &inner_sites, q)?;
        let g = random_psd(&mut rng, &inner_sites, q)?;
        let fg = f.product(&g);
        let h_outer = random_field(&mut rng, &setup.outer, q);
        let h_inner = restrict(&h_outer, &setup.outer, &setup.inner, q);
        let z = rng.random_range(0..setup.inner.len());
        let bump = rng.random_range(0.05..1.0);
        let mut bumped = h_inner.clone();
        bumped[z * q] += bump;

        let field = |w: &BoxWindow, v: Vec<f64>| FieldAssignment::from_values(w, q, v).map_err(|e| EnumerationError::InvalidParameter(e.to_string()));
        let mi = base_inner.with_field(field(&setup.inner, h_inner)?)?.with_beta(beta)?;
        let mb = base_inner.with_field(field(&setup.inner, bumped)?)?.with_beta(beta)?;
        let mo = base_outer.with_field(field(&setup.outer, h_outer)?)?.with_beta(beta)?;

        let inner = exact_with(&mi, &[f.clone(), g.clone(), fg], opts)?.expectations;
        let ef = inner[0];
        let first = ef.min(inner[1]);
        let second = inner[2] - inner[0] * inner[1];
        let field_slack = exact_with(&mb, std::slice::from_ref(&f), opts)?.expectations[0] - ef;
        let volume = ef - exact_with(&mo, &[f], opts)?.expectations[0];

        for (k, (slack, min)) in [
            (first, &mut report.min_first),
            (second, &mut report.min_second),
            (field_slack, &mut report.min_field),
            (volume, &mut report.min_volume),
        ]
        .into_iter()
        .enumerate()
        {
            *min = min.min(slack);
            if slack < -GRIFFITHS_TOL {
                report.violations[k] += 1;
            }
        }
        report.cases += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::expectation;
    use crate::lattice::Norm;

    fn setup(inter: InteractionSpec) -> GriffithsSetup {
        GriffithsSetup {
            interaction: inter,
            kernel: CouplingKernel::long_range(2, 1.0, 3.0, Norm::L2).unwrap(),
            inner: BoxWindow::new(vec![0, 0], vec![2, 2]).unwrap(),
            outer: BoxWindow::new(vec![0, 0], vec![3, 2]).unwrap(),
            beta_range: (0.1, 1.5),
        }
    }

    #[test]
    fn potts_and_clock_hold() {
        for inter in [InteractionSpec::potts(3).unwrap(), InteractionSpec::clock(4).unwrap()] {
            let r = griffiths_checks(&setup(inter), 20, 3, &EnumOptions::default()).unwrap();
            assert!(r.passed(), "{r:?}");
            assert_eq!(r.cases, 20);
        }
    }

    #[test]
    fn non_psd_is_skipped() {
        let inter = InteractionSpec::from_phi(vec![1.0, 0.9, 0.0]).unwrap();
        let r = griffiths_checks(&setup(inter), 5, 0, &EnumOptions::default()).unwrap();
        assert!(r.skipped.is_some() && r.cases == 0 && !r.passed());
    }

    #[test]
    fn independence_at_beta_zero() {
        let w = BoxWindow::new(vec![0, 0], vec![2, 2]).unwrap();
        let k = CouplingKernel::long_range(2, 1.0, 3.0, Norm::L2).unwrap();
        let m = ModelInstance::zero_field(InteractionSpec::potts(3).unwrap(), &k, &w, 0.0).unwrap();
        let f = LocalFunction::cosine_characters(vec![Site::new(&[0, 0])], 3, &[(1.0, vec![1]), (0.5, vec![0])]).unwrap();
        let g = LocalFunction::indicator(Site::new(&[1, 1]), 3, 0);
        let o = EnumOptions::default();
        let ef = expectation(&f, &m, &o).unwrap();
        let eg = expectation(&g, &m, &o).unwrap();
        let efg = expectation(&f.product(&g), &m, &o).unwrap();
        assert!((efg - ef * eg).abs() < 1e-15);
    }
}
