//! Spin configurations under monochromatic boundary conditions and the
//! Hamiltonians of the long-range q-state model.
//!
//! With s = φ(0) − min_{n≠0} φ(n) and ψ the normalized interaction,
//!
//! ```text
//! H_φ(σ) = −Σ_{i<j} J_ij φ(σ_i − σ_j) − Σ_i E_i φ(σ_i − r) − Σ_i h_{i,σ_i}
//! H_ψ(σ) =  Σ_{i<j} J_ij ψ(σ_i − σ_j) + Σ_i E_i ψ(σ_i − r) − (1/s) Σ_i h_{i,σ_i}
//! ```
//!
//! where E_i is the exact coupling of site i to the exterior. Then
//! H_φ = C + s·H_ψ with C = −φ(0)·(Σ_{i<j} J_ij + Σ_i E_i).

use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::interactions::{CouplingKernel, FieldAssignment, InteractionSpec, KernelTable};
use crate::lattice::{BoxWindow, Site};
use crate::numeric::NeumaierSum;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SpinConfigRepr", into = "SpinConfigRepr")]
pub struct SpinConfig {
    window: BoxWindow,
    q: usize,
    spins: Vec<u8>,
    exterior: u8,
}

#[derive(Serialize, Deserialize)]
struct SpinConfigRepr {
    d: usize,
    q: usize,
    window: BoxWindow,
    spins: Vec<u8>,
    exterior_color: u8,
}

impl TryFrom<SpinConfigRepr> for SpinConfig {
    type Error = ModelError;
    fn try_from(r: SpinConfigRepr) -> Result<Self, ModelError> {
        if r.d != r.window.dim() {
            return Err(ModelError::DimensionMismatch {
                window: r.window.dim(),
                model: r.d,
            });
        }
        let window = BoxWindow::new(r.window.lo, r.window.shape)?;
        SpinConfig::new(window, r.q, r.spins, r.exterior_color)
    }
}

impl From<SpinConfig> for SpinConfigRepr {
    fn from(c: SpinConfig) -> Self {
        SpinConfigRepr {
            d: c.window.dim(),
            q: c.q,
            window: c.window,
            spins: c.spins,
            exterior_color: c.exterior,
        }
    }
}

impl SpinConfig {
    pub fn new(window: BoxWindow, q: usize, spins: Vec<u8>, exterior: u8) -> Result<Self, ModelError> {
        if !(2..=255).contains(&q) {
            return Err(ModelError::InconsistentQ(format!("q = {q} must be in 2..=255")));
        }
        if spins.len() != window.len() {
            return Err(ModelError::InconsistentQ(format!(
                "{} spins for a window of {} sites",
                spins.len(),
                window.len()
            )));
        }
        if let Some(&bad) = spins.iter().chain(std::iter::once(&exterior)).find(|&&s| s as usize >= q) {
            return Err(ModelError::SpinOutOfRange { value: bad, q });
        }
        Ok(Self {
            window,
            q,
            spins,
            exterior,
        })
    }

    /// Every window site set to `color`.
    pub fn uniform(window: &BoxWindow, q: usize, color: u8, exterior: u8) -> Result<Self, ModelError> {
        Self::new(window.clone(), q, vec![color; window.len()], exterior)
    }

    /// The ground state σ ≡ r under exterior r.
    pub fn ground(window: &BoxWindow, q: usize, exterior: u8) -> Result<Self, ModelError> {
        Self::uniform(window, q, exterior, exterior)
    }

    pub fn window(&self) -> &BoxWindow {
        &self.window
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[u8] {
        &self.spins
    }

    pub fn exterior(&self) -> u8 {
        self.exterior
    }

    #[inline]
    pub fn get(&self, i: usize) -> u8 {
        self.spins[i]
    }

    /// Spin of the extended configuration: exterior color outside the window.
    pub fn at(&self, x: &Site) -> u8 {
        self.window.index_of(x).map_or(self.exterior, |i| self.spins[i])
    }

    pub fn set(&mut self, i: usize, color: u8) {
        assert!((color as usize) < self.q, "color out of range");
        self.spins[i] = color;
    }

    pub fn set_site(&mut self, x: &Site, color: u8) -> Result<(), ModelError> {
        let i = self
            .window
            .index_of(x)
            .ok_or_else(|| ModelError::OutsideWindow(format!("{x:?}")))?;
        if color as usize >= self.q {
            return Err(ModelError::SpinOutOfRange { value: color, q: self.q });
        }
        self.spins[i] = color;
        Ok(())
    }

    /// Relabel every spin and the exterior by +shift (mod q).
    pub fn shifted(&self, shift: usize) -> Self {
        let q = self.q;
        let f = |c: u8| ((c as usize + shift) % q) as u8;
        Self {
            window: self.window.clone(),
            q,
            spins: self.spins.iter().map(|&c| f(c)).collect(),
            exterior: f(self.exterior),
        }
    }

    pub fn is_ground(&self) -> bool {
        self.spins.iter().all(|&c| c == self.exterior)
    }

    /// Stable 64-bit fingerprint of (window, q, spins, exterior).
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }
}

/// Kernel, interaction, field and inverse temperature on a fixed window.
#[derive(Clone, Debug)]
pub struct ModelInstance {
    interaction: InteractionSpec,
    table: Arc<KernelTable>,
    field: FieldAssignment,
    beta: f64,
}

impl ModelInstance {
    pub fn new(
        interaction: InteractionSpec,
        kernel: &CouplingKernel,
        field: FieldAssignment,
        beta: f64,
    ) -> Result<Self, ModelError> {
        let table = Arc::new(KernelTable::new(kernel, field.window()));
        Self::with_table(interaction, table, field, beta)
    }

    /// Reuse a precomputed table (must be built on the field's window).
    pub fn with_table(
        interaction: InteractionSpec,
        table: Arc<KernelTable>,
        field: FieldAssignment,
        beta: f64,
    ) -> Result<Self, ModelError> {
        if interaction.q() != field.q() {
            return Err(ModelError::InconsistentQ(format!(
                "interaction has q = {}, field has q = {}",
                interaction.q(),
                field.q()
            )));
        }
        if table.kernel().dim() != field.window().dim() {
            return Err(ModelError::DimensionMismatch {
                window: field.window().dim(),
                model: table.kernel().dim(),
            });
        }
        if table.window() != field.window() {
            return Err(ModelError::InconsistentQ("kernel table and field live on different windows".into()));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(ModelError::InvalidBeta(beta));
        }
        Ok(Self {
            interaction,
            table,
            field,
            beta,
        })
    }

    /// Zero field on `window`.
    pub fn zero_field(
        interaction: InteractionSpec,
        kernel: &CouplingKernel,
        window: &BoxWindow,
        beta: f64,
    ) -> Result<Self, ModelError> {
        let field = FieldAssignment::zero(window, interaction.q());
        Self::new(interaction, kernel, field, beta)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self, ModelError> {
        Self::with_table(self.interaction.clone(), self.table.clone(), self.field.clone(), beta)
    }

    pub fn with_field(&self, field: FieldAssignment) -> Result<Self, ModelError> {
        Self::with_table(self.interaction.clone(), self.table.clone(), field, self.beta)
    }

    pub fn interaction(&self) -> &InteractionSpec {
        &self.interaction
    }

    pub fn kernel(&self) -> &CouplingKernel {
        self.table.kernel()
    }

    pub fn table(&self) -> &KernelTable {
        &self.table
    }

    pub fn shared_table(&self) -> Arc<KernelTable> {
        self.table.clone()
    }

    pub fn field(&self) -> &FieldAssignment {
        &self.field
    }

    pub fn window(&self) -> &BoxWindow {
        self.table.window()
    }

    pub fn q(&self) -> usize {
        self.interaction.q()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    fn check(&self, sigma: &SpinConfig) -> Result<(), ModelError> {
        if sigma.q() != self.q() {
            return Err(ModelError::InconsistentQ(format!(
                "configuration has q = {}, model has q = {}",
                sigma.q(),
                self.q()
            )));
        }
        if sigma.window() != self.window() {
            return Err(ModelError::InconsistentQ("configuration window differs from model window".into()));
        }
        Ok(())
    }

    /// C = −φ(0)·(Σ_{i<j} J_ij + Σ_i E_i): H_φ of any ground state at h = 0.
    pub fn ground_energy_phi(&self) -> f64 {
        let t = &self.table;
        let n = t.len();
        let mut s = NeumaierSum::new();
        for i in 0..n {
            for j in i + 1..n {
                s.add(t.get(i, j));
            }
            s.add(t.exterior(i));
        }
        -self.interaction.phi()[0] * s.value()
    }

    pub fn hamiltonian_phi(&self, sigma: &SpinConfig) -> Result<f64, ModelError> {
        self.check(sigma)?;
        let phi = self.interaction.phi();
        Ok(-self.form_sum(sigma, phi, 1.0))
    }

    pub fn hamiltonian_psi(&self, sigma: &SpinConfig) -> Result<f64, ModelError> {
        self.check(sigma)?;
        let psi = self.interaction.psi();
        Ok(self.form_sum(sigma, psi, -1.0 / self.interaction.scale()))
    }

    /// Σ_{i<j} J f(σ_i−σ_j) + Σ E_i f(σ_i−r) + field_sign·Σ h_{i,σ_i}
    fn form_sum(&self, sigma: &SpinConfig, f: &[f64], field_sign: f64) -> f64 {
        let t = &self.table;
        let q = self.q();
        let r = sigma.exterior() as usize;
        let spins = sigma.spins();
        let mut s = NeumaierSum::new();
        for (i, &si) in spins.iter().enumerate() {
            let si = si as usize;
            for (j, &sj) in spins.iter().enumerate().skip(i + 1) {
                let v = f[(si + q - sj as usize) % q];
                if v != 0.0 {
                    s.add(t.get(i, j) * v);
                }
            }
            let v = f[(si + q - r) % q];
            if v != 0.0 {
                s.add(t.exterior(i) * v);
            }
            let h = self.field.get(i, si);
            if h != 0.0 {
                s.add(field_sign * h);
            }
        }
        s.value()
    }

    /// Change of H_φ when site `i` is set to `new`, in O(N).
    pub fn energy_delta(&self, sigma: &SpinConfig, i: usize, new: u8) -> Result<f64, ModelError> {
        self.check(sigma)?;
        if i >= sigma.len() {
            return Err(ModelError::OutsideWindow(format!("index {i}")));
        }
        if new as usize >= self.q() {
            return Err(ModelError::SpinOutOfRange { value: new, q: self.q() });
        }
        let old = sigma.get(i);
        if old == new {
            return Ok(0.0);
        }
        let mut e = vec![0.0; self.q()];
        let mut w = vec![0.0; self.q()];
        self.local_energies(sigma, i, &mut w, &mut e);
        Ok(e[new as usize] - e[old as usize])
    }

    /// Change of H_ψ for the same move.
    pub fn energy_delta_psi(&self, sigma: &SpinConfig, i: usize, new: u8) -> Result<f64, ModelError> {
        Ok(self.energy_delta(sigma, i, new)? / self.interaction.scale())
    }

    /// Local φ-form energy of site `i` for each candidate color, up to a
    /// color-independent constant: `energies[c] = s·(Σ_c' W[c']ψ(c−c') + E_i ψ(c−r)) − h_{i,c}`
    /// where `weights[c']` is the total coupling of `i` to window sites of color c'.
    /// Sums run over colors in the order r, r+1, … so that a global color
    /// shift permutes the result bit for bit.
    pub fn local_energies(&self, sigma: &SpinConfig, i: usize, weights: &mut [f64], energies: &mut [f64]) {
        let q = self.q();
        let t = &self.table;
        weights.iter_mut().for_each(|w| *w = 0.0);
        for (j, &sj) in sigma.spins().iter().enumerate() {
            if j != i {
                weights[sj as usize] += t.get(i, j);
            }
        }
        let psi = self.interaction.psi();
        let scale = self.interaction.scale();
        let r = sigma.exterior() as usize;
        let ext = t.exterior(i);
        for k in 0..q {
            let c = (r + k) % q;
            let mut acc = 0.0;
            for l in 0..q {
                let cp = (r + l) % q;
                acc += weights[cp] * psi[(c + q - cp) % q];
            }
            acc += ext * psi[k];
            energies[c] = scale * acc - self.field.get(i, c);
        }
    }

    /// log of the unnormalized Gibbs weight, −β(H_φ − C) = −β s H_ψ.
    pub fn gibbs_weight_log(&self, sigma: &SpinConfig) -> Result<f64, ModelError> {
        if self.beta == 0.0 {
            self.check(sigma)?;
            return Ok(0.0);
        }
        Ok(-self.beta * self.interaction.scale() * self.hamiltonian_psi(sigma)?)
    }
}

/// Free-function forms of the model methods.
pub fn hamiltonian_phi(sigma: &SpinConfig, model: &ModelInstance) -> Result<f64, ModelError> {
    model.hamiltonian_phi(sigma)
}

pub fn hamiltonian_psi(sigma: &SpinConfig, model: &ModelInstance) -> Result<f64, ModelError> {
    model.hamiltonian_psi(sigma)
}

pub fn energy_delta(sigma: &SpinConfig, site: &Site, new: u8, model: &ModelInstance) -> Result<f64, ModelError> {
    let i = sigma
        .window()
        .index_of(site)
        .ok_or_else(|| ModelError::OutsideWindow(format!("{site:?}")))?;
    model.energy_delta(sigma, i, new)
}

pub fn gibbs_weight_log(sigma: &SpinConfig, model: &ModelInstance) -> Result<f64, ModelError> {
    model.gibbs_weight_log(sigma)
}
