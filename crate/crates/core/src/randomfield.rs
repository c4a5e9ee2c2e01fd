//! Ordered partitions, their convolution, the field action θ and the
//! free-energy difference Δ_A(h) under random fields.
//!
//! Partitions are stored as one label per window site: label n means the
//! site is in class A_n, and label 0 is the reference class, which also
//! holds every site outside the window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::enumeration::{check_budget, exact_partition, DenseModel, EnumOptions};
use crate::error::{EnumerationError, InteractionError};
use crate::exec::Exec;
use crate::interactions::FieldAssignment;
use crate::lattice::{BoxWindow, Region};
use crate::spin_model::{ModelInstance, SpinConfig};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrderedPartition {
    window: BoxWindow,
    q: usize,
    labels: Vec<u8>,
}

impl OrderedPartition {
    pub fn new(window: BoxWindow, q: usize, labels: Vec<u8>) -> Result<Self, InteractionError> {
        if labels.len() != window.len() {
            return Err(InteractionError::InvalidParameter(format!(
                "expected {} labels, got {}",
                window.len(),
                labels.len()
            )));
        }
        if q < 2 || labels.iter().any(|&l| l as usize >= q) {
            return Err(InteractionError::InvalidParameter("labels must lie in 0..q".into()));
        }
        Ok(Self { window, q, labels })
    }

    /// E: every site in the reference class.
    pub fn identity(window: &BoxWindow, q: usize) -> Self {
        Self {
            window: window.clone(),
            q,
            labels: vec![0; window.len()],
        }
    }

    pub fn random(window: &BoxWindow, q: usize, rng: &mut impl Rng) -> Self {
        let labels = (0..window.len()).map(|_| rng.random_range(0..q) as u8).collect();
        Self {
            window: window.clone(),
            q,
            labels,
        }
    }

    pub fn window(&self) -> &BoxWindow {
        &self.window
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Class A_n restricted to the window.
    pub fn class(&self, n: usize) -> Region {
        let sites = self.window.sites().zip(&self.labels).filter(|(_, &l)| l as usize == n).map(|(x, _)| x);
        Region::from_sites(self.window.dim(), sites).expect("window sites share a dimension")
    }

    pub fn classes(&self) -> Vec<Region> {
        (0..self.q).map(|n| self.class(n)).collect()
    }

    /// Sites outside the reference class.
    pub fn non_reference(&self) -> Region {
        let sites = self.window.sites().zip(&self.labels).filter(|(_, &l)| l != 0).map(|(x, _)| x);
        Region::from_sites(self.window.dim(), sites).expect("window sites share a dimension")
    }

    pub fn non_reference_len(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }

    /// The configuration with σ⁻¹({n}) = A_n (exterior in the reference color).
    pub fn to_config(&self) -> SpinConfig {
        SpinConfig::new(self.window.clone(), self.q, self.labels.clone(), 0).expect("labels are valid colors")
    }

    pub fn inverse(&self) -> Self {
        let q = self.q;
        Self {
            window: self.window.clone(),
            q,
            labels: self.labels.iter().map(|&l| ((q - l as usize) % q) as u8).collect(),
        }
    }

    pub fn power(&self, k: usize) -> Self {
        let q = self.q;
        Self {
            window: self.window.clone(),
            q,
            labels: self.labels.iter().map(|&l| ((l as usize * k) % q) as u8).collect(),
        }
    }

    fn compatible(&self, other: &Self) -> Result<(), InteractionError> {
        if self.window != other.window || self.q != other.q {
            return Err(InteractionError::InvalidParameter("partitions live on different windows".into()));
        }
        Ok(())
    }
}

/// σ ↦ (σ⁻¹({n}))_n. The configuration's exterior must be the reference color.
pub fn partition_from_config(sigma: &SpinConfig) -> Result<OrderedPartition, InteractionError> {
    if sigma.exterior() != 0 {
        return Err(InteractionError::InvalidParameter("partitions use the reference exterior color".into()));
    }
    OrderedPartition::new(sigma.window().clone(), sigma.q(), sigma.spins().to_vec())
}

/// (A ∗ B)_n = ∪_t A_t ∩ B_{n−t}.
pub fn convolve(a: &OrderedPartition, b: &OrderedPartition) -> Result<OrderedPartition, InteractionError> {
    a.compatible(b)?;
    let q = a.q;
    Ok(OrderedPartition {
        window: a.window.clone(),
        q,
        labels: a.labels.iter().zip(&b.labels).map(|(&x, &y)| ((x as usize + y as usize) % q) as u8).collect(),
    })
}

/// (θ_A h)_{x,r} = h_{x, r + A(x)}.
pub fn theta(a: &OrderedPartition, h: &FieldAssignment) -> Result<FieldAssignment, InteractionError> {
    if h.window() != &a.window || h.q() != a.q {
        return Err(InteractionError::InvalidParameter("field and partition live on different windows".into()));
    }
    let q = a.q;
    let mut values = Vec::with_capacity(h.values().len());
    for (i, &l) in a.labels.iter().enumerate() {
        let row = h.site_values(i);
        values.extend((0..q).map(|r| row[(r + l as usize) % q]));
    }
    FieldAssignment::from_values(&a.window, q, values)
}

/// Δ_A(h) = −(1/β) log[Z(h)/Z(θ_A h)] from two exact partition functions
/// under the reference boundary.
pub fn delta(a: &OrderedPartition, h: &FieldAssignment, model: &ModelInstance, opts: &EnumOptions) -> Result<f64, EnumerationError> {
    let invalid = |e: InteractionError| EnumerationError::InvalidParameter(e.to_string());
    let beta = positive_beta(model)?;
    let th = theta(a, h).map_err(invalid)?;
    let opts = EnumOptions { exterior: 0, ..opts.clone() };
    let z1 = exact_partition(&model.with_field(h.clone())?, &opts)?.log_z;
    let z2 = exact_partition(&model.with_field(th)?, &opts)?.log_z;
    Ok(-(z1 - z2) / beta)
}

fn positive_beta(model: &ModelInstance) -> Result<f64, EnumerationError> {
    let beta = model.beta();
    if beta > 0.0 {
        Ok(beta)
    } else {
        Err(EnumerationError::InvalidParameter("delta needs beta > 0".into()))
    }
}

/// Precomputed interaction energies of every state of a small window, so
/// that log Z under many fields costs one pass over the states each.
pub struct DeltaEngine {
    q: usize,
    n: usize,
    beta: f64,
    /// −β u_int(σ) for every state, in index order Σ σ_k q^k.
    base: Vec<f64>,
}

impl DeltaEngine {
    pub fn new(model: &ModelInstance, opts: &EnumOptions) -> Result<Self, EnumerationError> {
        let beta = positive_beta(model)?;
        let q = model.q();
        let n = model.len();
        check_budget(q, n, opts.budget)?;
        let zero = model.with_field(FieldAssignment::zero(model.window(), q))?;
        let dense = DenseModel::new(&zero, 0)?;
        let top = dense.block_digits();
        let blocks = (q as u64).pow(top as u32);
        let parts = opts.exec.map_indexed(blocks as usize, |b| {
            let mut v = Vec::new();
            dense.visit_block(top, b as u64, |_, u| v.push(-beta * u));
            v
        });
        Ok(Self {
            q,
            n,
            beta,
            base: parts.concat(),
        })
    }

    /// log Z(h) up to a constant independent of h.
    pub fn log_z(&self, h: &FieldAssignment) -> f64 {
        let q = self.q;
        let vals = h.values();
        let mut spins = vec![0usize; self.n];
        let mut field: f64 = (0..self.n).map(|i| vals[i * q]).sum();
        let mut terms = Vec::with_capacity(self.base.len());
        for (s, &b) in self.base.iter().enumerate() {
            if s > 0 {
                let mut k = 0;
                loop {
                    let old = spins[k];
                    let new = (old + 1) % q;
                    spins[k] = new;
                    field += vals[k * q + new] - vals[k * q + old];
                    if new != 0 {
                        break;
                    }
                    k += 1;
                }
                if k >= 3 {
                    field = spins.iter().enumerate().map(|(i, &c)| vals[i * q + c]).sum();
                }
            }
            terms.push(b + self.beta * field);
        }
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
    }

    pub fn delta(&self, a: &OrderedPartition, h: &FieldAssignment) -> Result<f64, InteractionError> {
        let th = theta(a, h)?;
        Ok(-(self.log_z(h) - self.log_z(&th)) / self.beta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub lambda: f64,
    /// Fraction of draws with |Δ_A(h)| ≥ λ.
    pub empirical: f64,
    /// 2 exp(−λ² / (2 q ε² |A_qᶜ|)).
    pub bound: f64,
    /// Binomial standard error of `empirical`.
    pub stderr: f64,
    /// Fraction of draws with |ε Σ_{x∈Λ} (h_{x,σ_x} − h_{x,q})| ≥ λ, σ_x ≠ q on Λ.
    pub sum_empirical: f64,
    /// 2 exp(−λ² / (2 ε² |Λ|)) as quoted for the sum.
    pub sum_bound_quoted: f64,
    /// 2 exp(−λ² / (4 ε² |Λ|)), the bound matching the variance 2ε²|Λ|.
    pub sum_bound_corrected: f64,
    /// Exact normal tail erfc(λ / (2 ε √|Λ|)).
    pub sum_exact: f64,
    pub sum_stderr: f64,
}

impl TailRow {
    /// empirical ≤ bound + 3 SE.
    pub fn delta_holds(&self) -> bool {
        self.empirical <= self.bound + 3.0 * self.stderr
    }

    pub fn sum_within_exact(&self) -> bool {
        (self.sum_empirical - self.sum_exact).abs() <= 3.0 * self.sum_stderr.max(1.0 / 1e4)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub q: usize,
    pub epsilon: f64,
    pub beta: f64,
    pub draws: usize,
    pub seed: u64,
    pub non_reference: usize,
    pub window_len: usize,
    pub mean: f64,
    pub mean_stderr: f64,
    pub rows: Vec<TailRow>,
}

impl TailReport {
    pub fn delta_holds(&self) -> bool {
        self.rows.iter().all(TailRow::delta_holds)
    }
}

/// Draw `draws` Gaussian fields h_{x,n} = ε·N(0,1) (draw k uses ChaCha8
/// stream k of `seed`), evaluate Δ_A(h) exactly and compare its empirical
/// tails with the concentration bound. The probabilities are unconditional.
pub fn tail_check(
    a: &OrderedPartition,
    model: &ModelInstance,
    epsilon: f64,
    draws: usize,
    lambdas: &[f64],
    seed: u64,
    opts: &EnumOptions,
) -> Result<TailReport, EnumerationError> {
    if !(epsilon > 0.0) || draws == 0 {
        return Err(EnumerationError::InvalidParameter("need epsilon > 0 and draws > 0".into()));
    }
    if a.window() != model.window() || a.q() != model.q() {
        return Err(EnumerationError::InvalidParameter("partition and model live on different windows".into()));
    }
    let q = model.q();
    let window = model.window().clone();
    let n = window.len();
    let engine = DeltaEngine::new(model, opts)?;
    let invalid = |e: InteractionError| EnumerationError::InvalidParameter(e.to_string());
    let samples = opts.exec.map_indexed(draws, |k| -> Result<(f64, f64), EnumerationError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let values: Vec<f64> = (0..n * q).map(|_| epsilon * rng.sample::<f64, _>(StandardNormal)).collect();
        let h = FieldAssignment::from_values(&window, q, values).map_err(invalid)?;
        let d = engine.delta(a, &h).map_err(invalid)?;
        // σ_x = 1 on all of Λ; the field already carries the factor ε
        let s: f64 = (0..n).map(|i| h.get(i, 1) - h.get(i, 0)).sum();
        Ok((d, s))
    });
    let samples: Vec<(f64, f64)> = samples.into_iter().collect::<Result<_, _>>()?;
    let m = draws as f64;
    let mean = samples.iter().map(|s| s.0).sum::<f64>() / m;
    let var = samples.iter().map(|s| (s.0 - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let nr = a.non_reference_len();
    let e2 = epsilon * epsilon;
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let p = samples.iter().filter(|s| s.0.abs() >= lambda).count() as f64 / m;
            let ps = samples.iter().filter(|s| s.1.abs() >= lambda).count() as f64 / m;
            let l2 = lambda * lambda;
            let bound = if nr == 0 {
                if lambda > 0.0 { 0.0 } else { 2.0 }
            } else {
                2.0 * (-l2 / (2.0 * q as f64 * e2 * nr as f64)).exp()
            };
            TailRow {
                lambda,
                empirical: p,
                bound,
                stderr: (p * (1.0 - p) / m).sqrt(),
                sum_empirical: ps,
                sum_bound_quoted: 2.0 * (-l2 / (2.0 * e2 * n as f64)).exp(),
                sum_bound_corrected: 2.0 * (-l2 / (4.0 * e2 * n as f64)).exp(),
                sum_exact: erfc(lambda / (2.0 * epsilon * (n as f64).sqrt())),
                sum_stderr: (ps * (1.0 - ps) / m).sqrt(),
            }
        })
        .collect();
    Ok(TailReport {
        q,
        epsilon,
        beta: model.beta(),
        draws,
        seed,
        non_reference: nr,
        window_len: n,
        mean,
        mean_stderr: (var / m).sqrt(),
        rows,
    })
}

/// Group-law residuals on one random instance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupLawReport {
    pub instances: usize,
    pub identity: usize,
    pub torsion: usize,
    pub composition: usize,
    pub associativity: usize,
    pub isomorphism: usize,
    pub difference_cover: usize,
}

impl GroupLawReport {
    pub fn failures(&self) -> usize {
        self.identity + self.torsion + self.composition + self.associativity + self.isomorphism + self.difference_cover
    }
}

/// Check θ_E = id, θ_A^q = id, θ_A∘θ_B = θ_{A∗B}, associativity of ∗,
/// partition(σ)∗partition(ω) = partition(σ+ω) and
/// (A∗(A′)^{q−1})_qᶜ ⊆ ∪_n A_n Δ A′_n on random instances. All comparisons
/// are exact.
pub fn group_law_checks(window: &BoxWindow, q: usize, instances: usize, seed: u64, exec: Exec) -> GroupLawReport {
    let per = exec.map_indexed(instances, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let a = OrderedPartition::random(window, q, &mut rng);
        let b = OrderedPartition::random(window, q, &mut rng);
        let c = OrderedPartition::random(window, q, &mut rng);
        let values: Vec<f64> = (0..window.len() * q).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let h = FieldAssignment::from_values(window, q, values).expect("finite values");
        let e = OrderedPartition::identity(window, q);
        let mut r = GroupLawReport {
            instances: 1,
            ..Default::default()
        };
        let th = |p: &OrderedPartition, f: &FieldAssignment| theta(p, f).expect("compatible");
        let conv = |x: &OrderedPartition, y: &OrderedPartition| convolve(x, y).expect("compatible");
        r.identity += (th(&e, &h).values() != h.values() || conv(&a, &e) != a) as usize;
        let mut t = h.clone();
        for _ in 0..q {
            t = th(&a, &t);
        }
        r.torsion += (t.values() != h.values() || a.power(q) != e) as usize;
        r.composition += (th(&a, &th(&b, &h)).values() != th(&conv(&a, &b), &h).values()) as usize;
        r.associativity += (conv(&conv(&a, &b), &c) != conv(&a, &conv(&b, &c))) as usize;
        let sum: Vec<u8> = a.labels.iter().zip(&b.labels).map(|(&x, &y)| ((x as usize + y as usize) % q) as u8).collect();
        let direct = partition_from_config(&SpinConfig::new(window.clone(), q, sum, 0).expect("valid")).expect("reference exterior");
        let via = conv(
            &partition_from_config(&a.to_config()).expect("reference exterior"),
            &partition_from_config(&b.to_config()).expect("reference exterior"),
        );
        r.isomorphism += (via != direct) as usize;
        let bb = conv(&a, &b.power(q - 1));
        let mut cover = Region::new(window.dim());
        for n in 0..q {
            cover = cover.union(&a.class(n).symmetric_difference(&b.class(n)));
        }
        r.difference_cover += (!bb.non_reference().is_subset(&cover)) as usize;
        r
    });
    per.into_iter().fold(GroupLawReport::default(), |mut acc, r| {
        acc.instances += r.instances;
        acc.identity += r.identity;
        acc.torsion += r.torsion;
        acc.composition += r.composition;
        acc.associativity += r.associativity;
        acc.isomorphism += r.isomorphism;
        acc.difference_cover += r.difference_cover;
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interactions::{CouplingKernel, InteractionSpec};
    use crate::lattice::{Norm, Site};

    fn model(side: usize, q: usize, beta: f64) -> ModelInstance {
        let k = CouplingKernel::long_range(2, 1.0, 3.0, Norm::L2).unwrap();
        ModelInstance::zero_field(InteractionSpec::potts(q).unwrap(), &k, &BoxWindow::centered(2, side), beta).unwrap()
    }

    #[test]
    fn partitions_from_configs() {
        let w = BoxWindow::centered(2, 3);
        let ground = SpinConfig::ground(&w, 3, 0).unwrap();
        assert_eq!(partition_from_config(&ground).unwrap(), OrderedPartition::identity(&w, 3));
        let mut one = ground.clone();
        one.set(4, 1);
        let p = partition_from_config(&one).unwrap();
        assert_eq!(p.class(1).iter().cloned().collect::<Vec<_>>(), vec![Site::new(&[0, 0])]);
        assert_eq!(p.class(0).len(), 8);
        assert_eq!(p.to_config(), one);
        assert!(partition_from_config(&SpinConfig::ground(&w, 3, 1).unwrap()).is_err());
    }

    #[test]
    fn group_laws() {
        for q in [2, 3, 5] {
            let r = group_law_checks(&BoxWindow::centered(2, 4), q, 50, q as u64, Exec::default());
            assert_eq!(r.instances, 50);
            assert_eq!(r.failures(), 0, "{r:?}");
        }
    }

    #[test]
    fn theta_example() {
        let w = BoxWindow::centered(2, 1);
        let h = FieldAssignment::from_values(&w, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let a = OrderedPartition::new(w.clone(), 3, vec![1]).unwrap();
        assert_eq!(theta(&a, &h).unwrap().values(), &[2.0, 3.0, 1.0]);
    }

    #[test]
    fn delta_identities() {
        let m = model(2, 3, 0.9);
        let w = m.window().clone();
        let o = EnumOptions::default();
        let h = FieldAssignment::gaussian(&w, 3, 0.3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = OrderedPartition::random(&w, 3, &mut rng);
        assert_eq!(delta(&OrderedPartition::identity(&w, 3), &h, &m, &o).unwrap(), 0.0);
        assert_eq!(delta(&a, &FieldAssignment::zero(&w, 3), &m, &o).unwrap(), 0.0);
        let d = delta(&a, &h, &m, &o).unwrap();
        let back = delta(&a.inverse(), &theta(&a, &h).unwrap(), &m, &o).unwrap();
        assert!((d + back).abs() < 1e-12);
        let mut shifted = h.clone();
        for c in 0..3 {
            shifted.set(2, c, h.get(2, c) + 0.7);
        }
        assert!((delta(&a, &shifted, &m, &o).unwrap() - d).abs() < 1e-10);
        let engine = DeltaEngine::new(&m, &o).unwrap();
        assert!((engine.delta(&a, &h).unwrap() - d).abs() < 1e-12);
    }

    #[test]
    fn engine_matches_exact_on_three_by_three() {
        let m = model(3, 3, 0.6);
        let w = m.window().clone();
        let o = EnumOptions::default();
        let engine = DeltaEngine::new(&m, &o).unwrap();
        let h = FieldAssignment::gaussian(&w, 3, 0.5, 9).unwrap();
        let a = OrderedPartition::random(&w, 3, &mut ChaCha8Rng::seed_from_u64(2));
        assert!((engine.delta(&a, &h).unwrap() - delta(&a, &h, &m, &o).unwrap()).abs() < 1e-11);
    }

    #[test]
    fn tails_and_mean() {
        let m = model(2, 3, 1.0);
        let w = m.window().clone();
        let a = OrderedPartition::new(w.clone(), 3, vec![1, 2, 0, 1]).unwrap();
        let r = tail_check(&a, &m, 0.2, 2000, &[0.0, 0.1, 0.3, 0.6], 5, &EnumOptions::default()).unwrap();
        assert_eq!(r.rows[0].empirical, 1.0);
        assert_eq!(r.rows[0].bound, 2.0);
        assert!(r.delta_holds(), "{r:?}");
        assert!(r.mean.abs() < 3.0 * r.mean_stderr + 1e-12);
        for row in &r.rows {
            assert!(row.sum_within_exact(), "{row:?}");
            assert!(row.sum_bound_corrected >= row.sum_exact);
        }
    }
}
