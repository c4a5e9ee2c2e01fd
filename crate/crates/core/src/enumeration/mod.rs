//! Exact finite-volume statistical mechanics by enumerating every state.
//!
//! States are visited with a mixed-radix counter (site 0 fastest). Blocks of
//! the leading digits run independently and their weighted sums are merged
//! in block order, so results do not depend on the thread count.

mod census;
mod griffiths;

pub use census::{contour_census, CensusReport};
pub use griffiths::{griffiths_checks, GriffithsReport, GriffithsSetup};

use serde::{Deserialize, Serialize};

use crate::bounds::{peierls_tail, BoundConstants};
use crate::error::EnumerationError;
use crate::exec::Exec;
use crate::lattice::{BoxWindow, Site};
use crate::spin_model::ModelInstance;

pub const DEFAULT_BUDGET: u64 = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumOptions {
    /// Boundary color outside the window.
    pub exterior: u8,
    pub budget: u64,
    pub exec: Exec,
}

impl Default for EnumOptions {
    fn default() -> Self {
        Self {
            exterior: 0,
            budget: DEFAULT_BUDGET,
            exec: Exec::default(),
        }
    }
}

/// q^n as a float (exact below 2^53).
pub fn state_count(q: usize, n: usize) -> f64 {
    (q as f64).powi(n as i32)
}

pub(crate) fn check_budget(q: usize, n: usize, budget: u64) -> Result<u64, EnumerationError> {
    let states = state_count(q, n);
    if states > budget as f64 {
        return Err(EnumerationError::BudgetExceeded { states, budget });
    }
    Ok(states as u64)
}

/// A real function of the spins on finitely many sites, stored as a table
/// indexed by Σ_k σ_{support[k]} q^k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalFunction {
    pub support: Vec<Site>,
    pub q: usize,
    pub table: Vec<f64>,
}

impl LocalFunction {
    pub fn new(support: Vec<Site>, q: usize, table: Vec<f64>) -> Result<Self, EnumerationError> {
        let expected = q.pow(support.len() as u32);
        if table.len() != expected {
            return Err(EnumerationError::BadTable {
                expected,
                found: table.len(),
            });
        }
        Ok(Self { support, q, table })
    }

    pub fn constant(q: usize, c: f64) -> Self {
        Self {
            support: Vec::new(),
            q,
            table: vec![c],
        }
    }

    pub fn indicator(site: Site, q: usize, color: u8) -> Self {
        let table = (0..q).map(|c| if c == color as usize { 1.0 } else { 0.0 }).collect();
        Self {
            support: vec![site],
            q,
            table,
        }
    }

    /// Σ_j w_j cos(2π/q · k_j·σ_S): nonnegative Fourier weights.
    pub fn cosine_characters(support: Vec<Site>, q: usize, terms: &[(f64, Vec<u32>)]) -> Result<Self, EnumerationError> {
        let s = support.len();
        for (w, k) in terms {
            if *w < 0.0 || k.len() != s {
                return Err(EnumerationError::InvalidParameter(
                    "character terms need nonnegative weights and one frequency per site".into(),
                ));
            }
        }
        let size = q.pow(s as u32);
        let table = (0..size)
            .map(|idx| {
                let digits = digits_of(idx, q, s);
                terms
                    .iter()
                    .map(|(w, k)| {
                        let phase: u64 = k.iter().zip(&digits).map(|(&a, &b)| a as u64 * b as u64).sum();
                        w * cos_turn((phase % q as u64) as usize, q)
                    })
                    .sum()
            })
            .collect();
        Self::new(support, q, table)
    }

    /// Pointwise product on the union of supports.
    pub fn product(&self, other: &Self) -> Self {
        let mut support = self.support.clone();
        for s in &other.support {
            if !support.contains(s) {
                support.push(s.clone());
            }
        }
        let pos_b: Vec<usize> = other.support.iter().map(|s| support.iter().position(|t| t == s).unwrap()).collect();
        let q = self.q;
        let size = q.pow(support.len() as u32);
        let table = (0..size)
            .map(|idx| {
                let d = digits_of(idx, q, support.len());
                let ia = index_of(&d[..self.support.len()], q);
                let db: Vec<usize> = pos_b.iter().map(|&p| d[p]).collect();
                self.table[ia] * other.table[index_of(&db, q)]
            })
            .collect();
        Self { support, q, table }
    }

    /// Window indices of the support.
    fn bind(&self, window: &BoxWindow) -> Result<Vec<usize>, EnumerationError> {
        self.support
            .iter()
            .map(|s| window.index_of(s).ok_or(EnumerationError::SupportOutsideWindow))
            .collect()
    }
}

/// cos(2π n/q) with exact values at quarter turns.
pub(crate) fn cos_turn(n: usize, q: usize) -> f64 {
    if (4 * n) % q == 0 {
        [1.0, 0.0, -1.0, 0.0][4 * n / q]
    } else {
        (2.0 * std::f64::consts::PI * n as f64 / q as f64).cos()
    }
}

fn digits_of(mut idx: usize, q: usize, len: usize) -> Vec<usize> {
    (0..len)
        .map(|_| {
            let d = idx % q;
            idx /= q;
            d
        })
        .collect()
}

fn index_of(digits: &[usize], q: usize) -> usize {
    digits.iter().rev().fold(0, |acc, &d| acc * q + d)
}

/// Dense copy of a model used by the enumeration loops:
/// `u(σ) = H_φ(σ) − C = s·Σ J ψ + s·Σ E ψ(σ−r) − Σ h`.
#[derive(Clone, Debug)]
pub(crate) struct DenseModel {
    pub q: usize,
    pub n: usize,
    pub beta: f64,
    pub exterior: usize,
    psi: Vec<f64>,
    pair: Vec<f64>,
    ext: Vec<f64>,
    field: Vec<f64>,
    /// −βC.
    pub log_offset: f64,
}

impl DenseModel {
    pub fn new(model: &ModelInstance, exterior: u8) -> Result<Self, EnumerationError> {
        let q = model.q();
        if exterior as usize >= q {
            return Err(EnumerationError::InvalidParameter(format!("exterior color {exterior} out of range")));
        }
        let n = model.len();
        let t = model.table();
        let s = model.interaction().scale();
        let mut pair = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    pair[i * n + j] = s * t.get(i, j);
                }
            }
        }
        let ext = t.exterior_all().iter().map(|e| s * e).collect();
        Ok(Self {
            q,
            n,
            beta: model.beta(),
            exterior: exterior as usize,
            psi: model.interaction().psi().to_vec(),
            pair,
            ext,
            field: model.field().values().to_vec(),
            log_offset: -model.beta() * model.ground_energy_phi(),
        })
    }

    #[inline]
    fn psi(&self, a: usize, b: usize) -> f64 {
        self.psi[(a + self.q - b) % self.q]
    }

    pub fn energy(&self, spins: &[u8]) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for i in 0..n {
            let si = spins[i] as usize;
            let row = &self.pair[i * n..(i + 1) * n];
            let mut acc = self.ext[i] * self.psi(si, self.exterior) - self.field[i * self.q + si];
            for j in i + 1..n {
                acc += row[j] * self.psi(si, spins[j] as usize);
            }
            total += acc;
        }
        total
    }

    #[inline]
    pub fn delta(&self, spins: &[u8], k: usize, old: usize, new: usize) -> f64 {
        let n = self.n;
        let row = &self.pair[k * n..(k + 1) * n];
        let mut acc = self.ext[k] * (self.psi(new, self.exterior) - self.psi(old, self.exterior))
            - (self.field[k * self.q + new] - self.field[k * self.q + old]);
        for (j, &sj) in spins.iter().enumerate() {
            if j != k {
                acc += row[j] * (self.psi(new, sj as usize) - self.psi(old, sj as usize));
            }
        }
        acc
    }

    /// Visit every state of block `block` (leading `top` digits fixed) with
    /// its energy u(σ).
    pub fn visit_block(&self, top: usize, block: u64, mut f: impl FnMut(&[u8], f64)) {
        let q = self.q;
        let low = self.n - top;
        let mut spins = vec![0u8; self.n];
        let mut rest = block;
        for d in spins[low..].iter_mut() {
            *d = (rest % q as u64) as u8;
            rest /= q as u64;
        }
        let count = (q as u64).pow(low as u32);
        let mut u = self.energy(&spins);
        for step in 0..count {
            f(&spins, u);
            if step + 1 == count {
                break;
            }
            let mut k = 0;
            loop {
                let old = spins[k] as usize;
                let new = (old + 1) % q;
                if k >= 3 {
                    spins[k] = new as u8;
                    u = self.energy(&spins);
                } else {
                    u += self.delta(&spins, k, old, new);
                    spins[k] = new as u8;
                }
                if new != 0 {
                    break;
                }
                k += 1;
            }
        }
    }

    /// Number of leading digits used to form parallel blocks.
    pub fn block_digits(&self) -> usize {
        let mut top = 0;
        while top < self.n && self.q.pow(top as u32) < 64 {
            top += 1;
        }
        top
    }
}

/// Σ w·(1, obs) with w = exp(lw − max) and a running max.
#[derive(Clone, Debug)]
pub(crate) struct WeightedSums {
    pub max: f64,
    pub z: f64,
    pub obs: Vec<f64>,
}

impl WeightedSums {
    pub fn new(len: usize) -> Self {
        Self {
            max: f64::NEG_INFINITY,
            z: 0.0,
            obs: vec![0.0; len],
        }
    }

    /// Add a state of log weight `lw`; returns the weight relative to the
    /// current max for the caller to accumulate observables with.
    #[inline]
    pub fn weight(&mut self, lw: f64) -> f64 {
        if lw > self.max {
            let scale = (self.max - lw).exp();
            self.z *= scale;
            self.obs.iter_mut().for_each(|o| *o *= scale);
            self.max = lw;
        }
        let w = (lw - self.max).exp();
        self.z += w;
        w
    }

    pub fn merge(&mut self, other: &Self) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        let max = self.max.max(other.max);
        let (a, b) = ((self.max - max).exp(), (other.max - max).exp());
        self.z = self.z * a + other.z * b;
        for (x, y) in self.obs.iter_mut().zip(&other.obs) {
            *x = *x * a + y * b;
        }
        self.max = max;
    }

    pub fn log_z(&self) -> f64 {
        self.max + self.z.ln()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub window: BoxWindow,
    pub q: usize,
    pub beta: f64,
    pub exterior: u8,
    /// log Z with H = H_φ (including the ground-state constant).
    pub log_z: f64,
    /// `marginals[i * q + c]` = μ(σ_i = c).
    pub marginals: Vec<f64>,
    /// ⟨f⟩ for each requested function, in order.
    pub expectations: Vec<f64>,
}

impl ExactResult {
    pub fn marginal(&self, i: usize, c: usize) -> f64 {
        self.marginals[i * self.q + c]
    }

    pub fn marginal_at(&self, x: &Site, c: usize) -> Option<f64> {
        self.window.index_of(x).map(|i| self.marginal(i, c))
    }
}

/// log Z and all single-site marginals.
pub fn exact_partition(model: &ModelInstance, opts: &EnumOptions) -> Result<ExactResult, EnumerationError> {
    exact_with(model, &[], opts)
}

/// ⟨f⟩ under the finite-volume Gibbs measure.
pub fn expectation(f: &LocalFunction, model: &ModelInstance, opts: &EnumOptions) -> Result<f64, EnumerationError> {
    Ok(exact_with(model, std::slice::from_ref(f), opts)?.expectations[0])
}

/// One pass computing log Z, the marginals and every ⟨f⟩.
pub fn exact_with(model: &ModelInstance, funcs: &[LocalFunction], opts: &EnumOptions) -> Result<ExactResult, EnumerationError> {
    let q = model.q();
    let n = model.len();
    check_budget(q, n, opts.budget)?;
    let window = model.window();
    let bound: Vec<Vec<usize>> = funcs
        .iter()
        .map(|f| {
            if f.q != q {
                return Err(EnumerationError::InvalidParameter("function q differs from model q".into()));
            }
            f.bind(window)
        })
        .collect::<Result<_, _>>()?;
    let dense = DenseModel::new(model, opts.exterior)?;
    let top = dense.block_digits();
    let blocks = q.pow(top as u32);
    let nm = n * q;
    let len = nm + funcs.len();
    let beta = dense.beta;
    let partials = opts.exec.map_indexed(blocks, |b| {
        let mut acc = WeightedSums::new(len);
        dense.visit_block(top, b as u64, |spins, u| {
            let w = acc.weight(-beta * u);
            for (i, &s) in spins.iter().enumerate() {
                acc.obs[i * q + s as usize] += w;
            }
            for (k, (f, idx)) in funcs.iter().zip(&bound).enumerate() {
                let t = idx.iter().rev().fold(0usize, |a, &i| a * q + spins[i] as usize);
                acc.obs[nm + k] += w * f.table[t];
            }
        });
        acc
    });
    let mut total = WeightedSums::new(len);
    for p in &partials {
        total.merge(p);
    }
    let z = total.z;
    Ok(ExactResult {
        window: window.clone(),
        q,
        beta,
        exterior: opts.exterior,
        log_z: total.log_z() + dense.log_offset,
        marginals: total.obs[..nm].iter().map(|o| o / z).collect(),
        expectations: total.obs[nm..].iter().map(|o| o / z).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeierlsRow {
    pub beta: f64,
    /// μ^q(σ₀ ≠ q).
    pub exact: f64,
    /// None where the series diverges.
    pub bound: Option<f64>,
}

impl PeierlsRow {
    pub fn holds(&self) -> Option<bool> {
        self.bound.map(|b| self.exact <= b)
    }
}

/// Exact μ(σ₀ ≠ reference) under the reference boundary next to the Peierls
/// tail, for each β.
pub fn peierls_comparison(
    model: &ModelInstance,
    betas: &[f64],
    constants: &BoundConstants,
    opts: &EnumOptions,
) -> Result<Vec<PeierlsRow>, EnumerationError> {
    let origin = model
        .window()
        .index_of(&Site::origin(model.window().dim()))
        .ok_or_else(|| EnumerationError::InvalidParameter("window must contain the origin".into()))?;
    let opts = EnumOptions { exterior: 0, ..*opts };
    betas
        .iter()
        .map(|&beta| {
            let m = model.with_beta(beta)?;
            let r = exact_partition(&m, &opts)?;
            Ok(PeierlsRow {
                beta,
                exact: (1.0 - r.marginal(origin, 0)).max(0.0),
                bound: peierls_tail(beta, constants).ok(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interactions::{CouplingKernel, FieldAssignment, InteractionSpec};
    use crate::lattice::Norm;
    use crate::numeric::log_sum_exp;
    use crate::spin_model::SpinConfig;
    use approx::assert_relative_eq;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lr(alpha: f64) -> CouplingKernel {
        CouplingKernel::long_range(2, 1.0, alpha, Norm::L2).unwrap()
    }

    fn all_states(q: usize, n: usize) -> Vec<Vec<u8>> {
        (0..q.pow(n as u32)).map(|i| digits_of(i, q, n).into_iter().map(|d| d as u8).collect()).collect()
    }

    /// log Z by direct evaluation of H_φ over a list of states.
    fn oracle_log_z(model: &ModelInstance, exterior: u8) -> f64 {
        let n = model.len();
        let xs: Vec<f64> = all_states(model.q(), n)
            .into_iter()
            .map(|s| {
                let c = SpinConfig::new(model.window().clone(), model.q(), s, exterior).unwrap();
                -model.beta() * model.hamiltonian_phi(&c).unwrap()
            })
            .collect();
        log_sum_exp(&xs)
    }

    #[test]
    fn single_site_closed_form() {
        let w = BoxWindow::centered(2, 1);
        let k = lr(3.0);
        for beta in [0.1, 0.7, 2.0] {
            for r in 0..3u8 {
                let m = ModelInstance::zero_field(InteractionSpec::potts(3).unwrap(), &k, &w, beta).unwrap();
                let res = exact_partition(&m, &EnumOptions { exterior: r, ..Default::default() }).unwrap();
                let s = k.total_coupling().value;
                let expect = (beta * s).exp() / ((beta * s).exp() + 2.0);
                assert_relative_eq!(res.marginal(0, r as usize), expect, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn beta_zero_uniform() {
        let w = BoxWindow::centered(2, 3);
        let m = ModelInstance::zero_field(InteractionSpec::clock(4).unwrap(), &lr(2.5), &w, 0.0).unwrap();
        let r = exact_partition(&m, &EnumOptions::default()).unwrap();
        for p in &r.marginals {
            assert_relative_eq!(*p, 0.25, max_relative = 1e-13);
        }
        assert_relative_eq!(r.log_z, 9.0 * 4f64.ln(), max_relative = 1e-13);
    }

    #[test]
    fn log_z_matches_direct_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (q, side, inter) in [
            (2, 2, InteractionSpec::potts(2).unwrap()),
            (3, 2, InteractionSpec::clock(3).unwrap()),
            (3, 3, InteractionSpec::potts(3).unwrap()),
        ] {
            let w = BoxWindow::centered(2, side);
            let vals: Vec<f64> = (0..w.len() * q).map(|_| rng.random_range(-0.5..0.5)).collect();
            let field = FieldAssignment::from_values(&w, q, vals).unwrap();
            let m = ModelInstance::new(inter, &lr(3.0), field, 0.8).unwrap();
            for ext in 0..q as u8 {
                let opts = EnumOptions { exterior: ext, ..Default::default() };
                let r = exact_partition(&m, &opts).unwrap();
                assert!((r.log_z - oracle_log_z(&m, ext)).abs() < 1e-10);
                for i in 0..w.len() {
                    let s: f64 = (0..q).map(|c| r.marginal(i, c)).sum();
                    assert!((s - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn shuffled_order_log_z() {
        let w = BoxWindow::centered(2, 3);
        let m = ModelInstance::zero_field(InteractionSpec::potts(2).unwrap(), &lr(3.0), &w, 1.3).unwrap();
        let mut xs: Vec<f64> = all_states(2, 9)
            .into_iter()
            .map(|s| m.gibbs_weight_log(&SpinConfig::new(w.clone(), 2, s, 0).unwrap()).unwrap())
            .collect();
        let base = log_sum_exp(&xs) - m.beta() * m.ground_energy_phi();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            xs.shuffle(&mut rng);
            let v = log_sum_exp(&xs) - m.beta() * m.ground_energy_phi();
            assert!((v - base).abs() < 1e-12);
        }
        let r = exact_partition(&m, &EnumOptions::default()).unwrap();
        assert!((r.log_z - base).abs() < 1e-12);
    }

    #[test]
    fn sequential_equals_parallel() {
        let w = BoxWindow::centered(2, 3);
        let m = ModelInstance::zero_field(InteractionSpec::potts(3).unwrap(), &lr(2.5), &w, 0.9).unwrap();
        let f = LocalFunction::indicator(Site::origin(2), 3, 0);
        let a = exact_with(&m, std::slice::from_ref(&f), &EnumOptions { exec: Exec::Sequential, ..Default::default() }).unwrap();
        let b = exact_with(&m, &[f], &EnumOptions { exec: Exec::Parallel, ..Default::default() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn expectation_examples() {
        let w = BoxWindow::centered(2, 2);
        let m = ModelInstance::zero_field(InteractionSpec::potts(3).unwrap(), &lr(3.0), &w, 0.6).unwrap();
        let opts = EnumOptions::default();
        assert_relative_eq!(expectation(&LocalFunction::constant(3, 1.0), &m, &opts).unwrap(), 1.0, max_relative = 1e-14);
        let r = exact_partition(&m, &opts).unwrap();
        for (i, x) in w.sites().enumerate() {
            for c in 0..3u8 {
                let e = expectation(&LocalFunction::indicator(x.clone(), 3, c), &m, &opts).unwrap();
                assert!((e - r.marginal(i, c as usize)).abs() < 1e-12);
            }
        }
        // an odd function vanishes under the uniform mixture of boundary colors
        let x = Site::origin(2);
        let odd = LocalFunction::new(vec![x], 3, vec![0.0, 1.0, -1.0]).unwrap();
        let m1 = ModelInstance::zero_field(InteractionSpec::potts(3).unwrap(), &lr(3.0), &w, 0.0).unwrap();
        assert!(expectation(&odd, &m1, &opts).unwrap().abs() < 1e-14);
        let outside = LocalFunction::indicator(Site::new(&[5, 5]), 3, 0);
        assert_eq!(expectation(&outside, &m, &opts), Err(EnumerationError::SupportOutsideWindow));
    }

    #[test]
    fn budget_guard() {
        let w = BoxWindow::centered(2, 5);
        let m = ModelInstance::zero_field(InteractionSpec::potts(3).unwrap(), &lr(3.0), &w, 0.6).unwrap();
        assert!(matches!(exact_partition(&m, &EnumOptions::default()), Err(EnumerationError::BudgetExceeded { .. })));
    }

    #[test]
    fn product_and_characters() {
        let a = Site::new(&[0, 0]);
        let b = Site::new(&[1, 0]);
        let f = LocalFunction::cosine_characters(vec![a.clone()], 4, &[(1.0, vec![1])]).unwrap();
        assert_eq!(f.table, vec![1.0, 0.0, -1.0, 0.0]);
        let g = LocalFunction::indicator(b, 4, 2);
        let p = f.product(&g);
        assert_eq!(p.support.len(), 2);
        assert_eq!(p.table[2 * 4], 1.0);
        assert_eq!(p.table[2 + 2 * 4], -1.0);
        assert_eq!(p.table[2 + 4], 0.0);
        let ff = f.product(&f);
        assert_eq!(ff.table, vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn peierls_rows() {
        let w = BoxWindow::centered(2, 3);
        let m = ModelInstance::zero_field(InteractionSpec::potts(3).unwrap(), &lr(3.0), &w, 1.0).unwrap();
        let c = crate::bounds::compute_constants(2, 3.0, 1.0, 3, 1.0, 1.0).unwrap();
        let rows = peierls_comparison(&m, &[1.0, c.beta0, 2.0 * c.beta0], &c, &EnumOptions::default()).unwrap();
        assert!(rows[0].bound.is_none());
        assert_eq!(rows[1].bound, Some(0.25));
        assert!(rows[1].holds().unwrap() && rows[2].holds().unwrap());
        assert!(rows[0].exact > rows[1].exact);
    }
}
