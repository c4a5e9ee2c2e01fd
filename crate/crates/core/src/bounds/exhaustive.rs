//! Exhaustive check of the contour energy bound on small 2-d windows.
//!
//! Configurations are visited in odometer order (site 0 is the fastest
//! digit). H_ψ is updated incrementally per digit change and recomputed from
//! scratch whenever a digit above the third changes. Contours come from the
//! bitboard path and surface couplings are cached per support mask.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{BoundConstants, BoundMode, ENERGY_TOL};
use crate::contour::grid::{bits, external_indices, Grid, GridContour, MAX_Q};
use crate::contour::MaParams;
use crate::error::BoundsError;
use crate::exec::Exec;
use crate::lattice::BoxWindow;
use crate::numeric::NeumaierSum;
use crate::spin_model::ModelInstance;

/// One model to check: zero field, the constants for its (d, α, J, q, m)
/// and the partition parameters used for extraction.
#[derive(Clone, Debug)]
pub struct VerifySetup {
    pub model: ModelInstance,
    pub constants: BoundConstants,
    pub params: MaParams,
}

impl VerifySetup {
    /// `m = None` uses M = M_min.
    pub fn new(model: ModelInstance, constants: BoundConstants, m: Option<f64>) -> Result<Self, BoundsError> {
        if !model.field().is_zero() {
            return Err(BoundsError::InvalidParameter("the energy bound is stated for h = 0".into()));
        }
        if model.q() != constants.q {
            return Err(BoundsError::InvalidParameter("model and constants disagree on q".into()));
        }
        let params = constants.ma_params(m)?;
        Ok(Self { model, constants, params })
    }

    pub fn mode(&self) -> BoundMode {
        if self.params.m >= self.constants.m_min {
            BoundMode::Theorem
        } else {
            BoundMode::Diagnostic
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ExhaustiveOptions {
    pub exec: Exec,
    /// Per-configuration records kept per setup (first in index order).
    pub max_records: usize,
    /// Failing records kept per setup.
    pub max_failures: usize,
}

impl Default for ExhaustiveOptions {
    fn default() -> Self {
        Self {
            exec: Exec::default(),
            max_records: 0,
            max_failures: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyRecord {
    pub setup: usize,
    /// Σ_i σ_i q^i.
    pub config: u64,
    pub size: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub alpha: f64,
    pub q: usize,
    pub m_used: f64,
    pub m_min: f64,
    pub c2: f64,
    pub mode: BoundMode,
    pub configs: u64,
    /// Configurations with exactly one external contour (all of them checked).
    pub checked: u64,
    pub multi_external: u64,
    /// Single-contour configurations whose erasure is not the ground state.
    pub erase_not_ground: u64,
    pub label_errors: u64,
    pub violations: u64,
    pub min_margin: f64,
    /// min lhs/rhs over checked contours.
    pub min_ratio: f64,
    pub failures: Vec<VerifyRecord>,
    #[serde(skip)]
    pub records: Vec<VerifyRecord>,
}

impl VerifySummary {
    fn empty(setup: &VerifySetup) -> Self {
        Self {
            alpha: setup.constants.alpha,
            q: setup.constants.q,
            m_used: setup.params.m,
            m_min: setup.constants.m_min,
            c2: setup.constants.c2,
            mode: setup.mode(),
            configs: 0,
            checked: 0,
            multi_external: 0,
            erase_not_ground: 0,
            label_errors: 0,
            violations: 0,
            min_margin: f64::INFINITY,
            min_ratio: f64::INFINITY,
            failures: Vec::new(),
            records: Vec::new(),
        }
    }

    fn merge(&mut self, other: Self, opts: &ExhaustiveOptions) {
        self.configs += other.configs;
        self.checked += other.checked;
        self.multi_external += other.multi_external;
        self.erase_not_ground += other.erase_not_ground;
        self.label_errors += other.label_errors;
        self.violations += other.violations;
        self.min_margin = self.min_margin.min(other.min_margin);
        self.min_ratio = self.min_ratio.min(other.min_ratio);
        let room = opts.max_failures.saturating_sub(self.failures.len());
        self.failures.extend(other.failures.into_iter().take(room));
        let room = opts.max_records.saturating_sub(self.records.len());
        self.records.extend(other.records.into_iter().take(room));
    }

    /// All checked contours satisfied the bound with nonnegative margin.
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.label_errors == 0 && self.erase_not_ground == 0 && (self.checked == 0 || self.min_margin >= 0.0)
    }
}

/// Per-setup data shared by every block.
struct Prepared {
    q: usize,
    n: usize,
    psi: Vec<f64>,
    /// Dense window couplings, row-major n×n.
    pair: Vec<f64>,
    exterior: Vec<f64>,
    /// Couplings between grid cells, row-major cells×cells.
    cell_pair: Vec<f64>,
    total: f64,
    c2: f64,
    params: MaParams,
}

impl Prepared {
    fn new(setup: &VerifySetup, grid: &Grid) -> Self {
        let m = &setup.model;
        let t = m.table();
        let n = m.len();
        let mut pair = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    pair[i * n + j] = t.get(i, j);
                }
            }
        }
        let cells = grid.cells();
        let k = m.kernel();
        let mut cell_pair = vec![0.0; cells * cells];
        for a in 0..cells {
            let x = grid.coords(a);
            for b in 0..cells {
                let y = grid.coords(b);
                cell_pair[a * cells + b] = k.coupling_offset(&[y[0] - x[0], y[1] - x[1]]);
            }
        }
        Self {
            q: m.q(),
            n,
            psi: m.interaction().psi().to_vec(),
            pair,
            exterior: t.exterior_all().to_vec(),
            cell_pair,
            total: k.total_coupling().value,
            c2: setup.constants.c2,
            params: setup.params,
        }
    }

    #[inline]
    fn psi(&self, a: usize, b: usize) -> f64 {
        self.psi[(a + self.q - b) % self.q]
    }

    /// H_ψ at zero field with exterior color 0.
    fn energy(&self, spins: &[u8]) -> f64 {
        let mut s = NeumaierSum::new();
        for i in 0..self.n {
            let si = spins[i] as usize;
            let row = &self.pair[i * self.n..(i + 1) * self.n];
            let mut acc = 0.0;
            for j in i + 1..self.n {
                acc += row[j] * self.psi(si, spins[j] as usize);
            }
            s.add(acc);
            s.add(self.exterior[i] * self.psi[si]);
        }
        s.value()
    }

    /// Change of H_ψ when site k goes from `old` to `new`, other spins fixed.
    #[inline]
    fn delta(&self, spins: &[u8], k: usize, old: usize, new: usize) -> f64 {
        let row = &self.pair[k * self.n..(k + 1) * self.n];
        let mut acc = self.exterior[k] * (self.psi[new] - self.psi[old]);
        for (j, &sj) in spins.iter().enumerate() {
            if j != k {
                let sj = sj as usize;
                acc += row[j] * (self.psi(new, sj) - self.psi(old, sj));
            }
        }
        acc
    }

    /// F_Λ for a mask of grid cells.
    fn surface(&self, mask: u128, cells: usize) -> f64 {
        let members: Vec<usize> = bits(mask).collect();
        let mut pairs = NeumaierSum::new();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                pairs.add(self.cell_pair[a * cells + b]);
            }
        }
        (members.len() as f64 * self.total - 2.0 * pairs.value()).max(0.0)
    }
}

struct Worker<'a> {
    grid: &'a Grid,
    prep: &'a [Prepared],
    cache: Vec<HashMap<u128, f64>>,
}

impl Worker<'_> {
    fn surface(&mut self, s: usize, mask: u128) -> f64 {
        if mask == 0 {
            return 0.0;
        }
        if let Some(&v) = self.cache[s].get(&mask) {
            return v;
        }
        let v = self.prep[s].surface(mask, self.grid.cells());
        self.cache[s].insert(mask, v);
        v
    }

    fn rhs(&mut self, s: usize, g: &GridContour) -> f64 {
        let q = self.prep[s].q;
        let mut acc = NeumaierSum::new();
        acc.add(g.size() as f64);
        acc.add(self.surface(s, g.support));
        for n in 1..q {
            acc.add(self.surface(s, g.interiors[n]));
        }
        acc.add(self.surface(s, g.i_prime(q)));
        self.prep[s].c2 * acc.value()
    }
}

/// Enumerate every configuration of `window` (2-d, at most 7×7 after
/// padding) and check the energy bound for each configuration with exactly
/// one external contour, for every setup.
pub fn exhaustive_verify(
    window: &BoxWindow,
    setups: &[VerifySetup],
    opts: &ExhaustiveOptions,
) -> Result<Vec<VerifySummary>, BoundsError> {
    let first = setups
        .first()
        .ok_or_else(|| BoundsError::InvalidParameter("no setups given".into()))?;
    let q = first.model.q();
    if q > MAX_Q {
        return Err(BoundsError::InvalidParameter(format!("q = {q} exceeds {MAX_Q}")));
    }
    for s in setups {
        if s.model.window() != window || s.model.q() != q {
            return Err(BoundsError::InvalidParameter("all setups must share the window and q".into()));
        }
    }
    let grid = Grid::new(window)?;
    let n = window.len();
    let states = (q as f64).powi(n as i32);
    if states > 1e12 {
        return Err(BoundsError::InvalidParameter(format!("q^N = {states:e} is too many states")));
    }
    let prep: Vec<Prepared> = setups.iter().map(|s| Prepared::new(s, &grid)).collect();
    // top digits index the blocks
    let mut top = 0usize;
    while top < n && q.pow(top as u32) < 256 {
        top += 1;
    }
    let blocks = q.pow(top as u32);
    let low = n - top;
    let run = |b: usize| run_block(&grid, &prep, setups, q, n, low, b as u64, opts);
    let partials = opts.exec.map_indexed(blocks, run);
    let mut out: Vec<VerifySummary> = setups.iter().map(VerifySummary::empty).collect();
    for part in partials {
        for (o, p) in out.iter_mut().zip(part) {
            o.merge(p, opts);
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn run_block(
    grid: &Grid,
    prep: &[Prepared],
    setups: &[VerifySetup],
    q: usize,
    n: usize,
    low: usize,
    block: u64,
    opts: &ExhaustiveOptions,
) -> Vec<VerifySummary> {
    let mut spins = vec![0u8; n];
    let mut rest = block;
    for d in spins[low..].iter_mut() {
        *d = (rest % q as u64) as u8;
        rest /= q as u64;
    }
    let base = block * (q as u64).pow(low as u32);
    let count = (q as u64).pow(low as u32);
    let mut sums: Vec<VerifySummary> = setups.iter().map(VerifySummary::empty).collect();
    let mut energy: Vec<f64> = prep.iter().map(|p| p.energy(&spins)).collect();
    let mut worker = Worker {
        grid,
        prep,
        cache: vec![HashMap::default(); prep.len()],
    };
    // families already built for this configuration, keyed by partition
    let mut built: Vec<(Vec<u128>, Result<Vec<GridContour>, ()>)> = Vec::new();
    let mut which = vec![0usize; prep.len()];
    let mut tau = vec![0u8; n];
    let mut planes = [0u128; MAX_Q];
    for step in 0..count {
        let index = base + step;
        grid.planes(&spins, q, 0, &mut planes);
        let incorrect = grid.incorrect(&planes, q);
        built.clear();
        if incorrect != 0 {
            for (s, p) in prep.iter().enumerate() {
                let part = grid.partition(incorrect, &p.params);
                which[s] = match built.iter().position(|(k, _)| *k == part) {
                    Some(i) => i,
                    None => {
                        let fam = part
                            .iter()
                            .map(|&sup| grid.contour(&planes, q, 0, sup).map_err(|_| ()))
                            .collect();
                        built.push((part, fam));
                        built.len() - 1
                    }
                };
            }
        }
        for s in 0..prep.len() {
            let sum = &mut sums[s];
            sum.configs += 1;
            if incorrect == 0 {
                continue;
            }
            let fam = match &built[which[s]].1 {
                Ok(f) => f,
                Err(()) => {
                    sum.label_errors += 1;
                    continue;
                }
            };
            let ext = external_indices(fam);
            if ext.len() != 1 {
                sum.multi_external += 1;
                continue;
            }
            let gamma = &fam[ext[0]];
            if grid.erase(&spins, q, gamma, &mut tau).is_err() {
                sum.label_errors += 1;
                continue;
            }
            let tau_ground = tau.iter().all(|&t| t == 0);
            if fam.len() == 1 && !tau_ground {
                sum.erase_not_ground += 1;
            }
            let h_tau = if tau_ground { 0.0 } else { prep[s].energy(&tau) };
            let lhs = energy[s] - h_tau;
            let rhs = worker.rhs(s, gamma);
            let margin = lhs - rhs;
            let holds = lhs >= rhs - ENERGY_TOL;
            let sum = &mut sums[s];
            sum.checked += 1;
            sum.min_margin = sum.min_margin.min(margin);
            sum.min_ratio = sum.min_ratio.min(lhs / rhs);
            let rec = VerifyRecord {
                setup: s,
                config: index,
                size: gamma.size(),
                lhs,
                rhs,
                margin,
                holds,
            };
            if !holds {
                sum.violations += 1;
                if sum.failures.len() < opts.max_failures {
                    sum.failures.push(rec);
                }
            }
            if sum.records.len() < opts.max_records {
                sum.records.push(rec);
            }
        }
        if step + 1 == count {
            break;
        }
        // odometer increment over the low digits
        let mut k = 0;
        loop {
            let old = spins[k] as usize;
            let new = (old + 1) % q;
            if k >= 3 {
                spins[k] = new as u8;
                for (e, p) in energy.iter_mut().zip(prep) {
                    *e = p.energy(&spins);
                }
            } else {
                for (e, p) in energy.iter_mut().zip(prep) {
                    *e += p.delta(&spins, k, old, new);
                }
                spins[k] = new as u8;
            }
            if new != 0 {
                break;
            }
            k += 1;
        }
    }
    sums
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{compute_constants, verify_energy_bound};
    use crate::contour::extract_contours;
    use crate::interactions::{CouplingKernel, InteractionSpec};
    use crate::lattice::Norm;
    use crate::spin_model::SpinConfig;

    fn setup(side: usize, q: usize, alpha: f64, m: Option<f64>) -> VerifySetup {
        let k = CouplingKernel::long_range(2, 1.0, alpha, Norm::L2).unwrap();
        let model =
            ModelInstance::zero_field(InteractionSpec::potts(q).unwrap(), &k, &BoxWindow::centered(2, side), 0.0).unwrap();
        let c = compute_constants(2, alpha, 1.0, q, 1.0, 1.0).unwrap();
        VerifySetup::new(model, c, m).unwrap()
    }

    #[test]
    fn agrees_with_region_path() {
        let s = setup(3, 2, 3.0, None);
        let opts = ExhaustiveOptions {
            exec: Exec::Sequential,
            max_records: 1 << 10,
            max_failures: 4,
        };
        let out = exhaustive_verify(&BoxWindow::centered(2, 3), std::slice::from_ref(&s), &opts).unwrap();
        let sum = &out[0];
        assert_eq!(sum.configs, 512);
        assert_eq!(sum.checked, 511);
        assert!(sum.passed());
        assert_eq!(sum.records.len(), 511);
        for rec in &sum.records {
            let spins: Vec<u8> = (0..9).map(|i| ((rec.config >> i) & 1) as u8).collect();
            let sigma = SpinConfig::new(BoxWindow::centered(2, 3), 2, spins, 0).unwrap();
            let fam = extract_contours(&sigma, &s.params).unwrap();
            let r = verify_energy_bound(&sigma, &fam, fam.external_indices()[0], &s.model, &s.constants).unwrap();
            assert!((r.lhs - rec.lhs).abs() < 1e-9 * r.lhs.abs().max(1.0));
            assert!((r.rhs - rec.rhs).abs() < 1e-9 * r.rhs.abs().max(1.0));
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let w = BoxWindow::centered(2, 3);
        let setups = [setup(3, 3, 2.5, None), setup(3, 3, 4.0, Some(1.0))];
        let seq = ExhaustiveOptions {
            exec: Exec::Sequential,
            ..Default::default()
        };
        let par = ExhaustiveOptions {
            exec: Exec::Parallel,
            ..Default::default()
        };
        let a = exhaustive_verify(&w, &setups, &seq).unwrap();
        let b = exhaustive_verify(&w, &setups, &par).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].configs, 19683);
        assert_eq!(a[1].mode, BoundMode::Diagnostic);
    }
}
