//! The surface-versus-field inequality c₂F_Λ − Σ_{x∈Λ} ĥ_x ≥ 0 for a
//! decaying field truncated inside a ball of radius R.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BoundConstants;
use crate::error::BoundsError;
use crate::exec::Exec;
use crate::interactions::{truncated_value, CouplingKernel};
use crate::lattice::{Region, Site};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldCheckSetup {
    pub h_star: f64,
    pub delta: f64,
    /// Truncation radius; `None` picks the smallest integer R + 1 with R^δ > 2h*/c₂.
    pub radius: Option<f64>,
    pub max_size: usize,
    /// Λ grows from a start site drawn uniformly with |x_i| ≤ R + spread.
    pub spread: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldCheckReport {
    pub trials: usize,
    pub radius: f64,
    pub c2: f64,
    pub violations: usize,
    /// Smallest c₂F_Λ − Σĥ (F taken at its certified lower bound).
    pub min_slack: f64,
    /// Largest Σĥ / (c₂F_Λ).
    pub max_ratio: f64,
}

impl FieldCheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Smallest admissible radius: ⌊(2h*/c₂)^{1/δ}⌋ + 1.
pub fn min_radius(h_star: f64, delta: f64, c2: f64) -> f64 {
    (2.0 * h_star / c2).powf(1.0 / delta).floor() + 1.0
}

/// Random lattice animal with `size` sites grown from `start`.
pub fn random_connected(start: Site, size: usize, rng: &mut impl Rng) -> Region {
    let dim = start.dim();
    let mut sites = vec![start];
    let mut region = Region::singleton(start);
    while region.len() < size {
        let x = *sites.choose(rng).expect("nonempty");
        let axis = rng.random_range(0..dim);
        let step = if rng.random_bool(0.5) { 1 } else { -1 };
        let y = x.step(axis, step);
        if region.insert(y) {
            sites.push(y);
        }
    }
    region
}

/// c₂F_Λ − Σ_{x∈Λ} ĥ_x on `trials` random connected Λ with |Λ| ≤ max_size.
pub fn decaying_field_check(
    kernel: &CouplingKernel,
    consts: &BoundConstants,
    setup: &FieldCheckSetup,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<FieldCheckReport, BoundsError> {
    if !(setup.h_star > 0.0) || !(setup.delta > 0.0) || setup.max_size == 0 {
        return Err(BoundsError::InvalidParameter("need h* > 0, delta > 0 and max_size >= 1".into()));
    }
    if setup.delta <= consts.gap {
        return Err(BoundsError::InvalidParameter(format!(
            "delta = {} must exceed (alpha - d) ^ 1 = {}",
            setup.delta, consts.gap
        )));
    }
    let c2 = consts.c2;
    let radius = setup.radius.unwrap_or_else(|| min_radius(setup.h_star, setup.delta, c2));
    if radius.powf(setup.delta) <= 2.0 * setup.h_star / c2 {
        return Err(BoundsError::InvalidParameter(format!("R = {radius} violates R^delta > 2h*/c2")));
    }
    let d = kernel.dim();
    let reach = radius.ceil() as i32 + setup.spread;
    let rows = exec.map_indexed(trials, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let start: Vec<i32> = (0..d).map(|_| rng.random_range(-reach..=reach)).collect();
        let size = rng.random_range(1..=setup.max_size);
        let region = random_connected(Site::new(&start), size, &mut rng);
        let f = kernel.surface_coupling(&region);
        let surface = c2 * (f.value - f.error_bound);
        let field: f64 = region
            .iter()
            .map(|x| truncated_value(x, setup.h_star, setup.delta, radius, kernel.norm()))
            .sum();
        (surface - field, field / surface)
    });
    Ok(FieldCheckReport {
        trials,
        radius,
        c2,
        violations: rows.iter().filter(|r| r.0 < 0.0).count(),
        min_slack: rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min),
        max_ratio: rows.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::compute_constants;

    #[test]
    fn animals_are_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for size in [1, 5, 20] {
            let r = random_connected(Site::new(&[3, -2]), size, &mut rng);
            assert_eq!(r.len(), size);
            let sites: Vec<Site> = r.iter().cloned().collect();
            let mut seen = vec![sites[0]];
            let mut k = 0;
            while k < seen.len() {
                let x = seen[k];
                for y in x.neighbors() {
                    if r.contains(&y) && !seen.contains(&y) {
                        seen.push(y);
                    }
                }
                k += 1;
            }
            assert_eq!(seen.len(), size);
        }
    }

    #[test]
    fn inequality_holds_with_admissible_radius() {
        let c = compute_constants(2, 3.0, 1.0, 3, 1.0, 1.0).unwrap();
        let k = CouplingKernel::long_range(2, 1.0, 3.0, crate::lattice::Norm::L2).unwrap();
        let setup = FieldCheckSetup {
            h_star: 1.0,
            delta: 1.5,
            radius: None,
            max_size: 20,
            spread: 3,
        };
        let r = decaying_field_check(&k, &c, &setup, 200, 4, Exec::default()).unwrap();
        assert!(r.radius.powf(1.5) > 2.0 / c.c2);
        assert!(r.passed() && r.max_ratio < 1.0, "{r:?}");
        let bad = FieldCheckSetup { delta: 0.5, ..setup.clone() };
        assert!(decaying_field_check(&k, &c, &bad, 1, 0, Exec::default()).is_err());
        let small = FieldCheckSetup { radius: Some(2.0), ..setup };
        assert!(decaying_field_check(&k, &c, &small, 1, 0, Exec::default()).is_err());
    }
}
