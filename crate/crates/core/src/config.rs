//! Run configuration: `[model]`, `[field]` and `[run]` sections in TOML, or
//! the same structure as JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::interactions::{CouplingKernel, FieldAssignment, FieldKind, InteractionSpec};
use crate::lattice::{BoxWindow, Norm};
use crate::sampler::{Algorithm, InitialState};
use crate::spin_model::ModelInstance;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub field: FieldSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub d: usize,
    pub q: usize,
    /// "potts", "clock" or "custom" (with `phi`).
    pub interaction: String,
    pub phi: Option<Vec<f64>>,
    /// "long_range" (J/|x−y|^α) or "nearest_neighbor".
    pub kernel: String,
    pub alpha: f64,
    pub j: f64,
    pub norm: Norm,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            d: 2,
            q: 3,
            interaction: "potts".into(),
            phi: None,
            kernel: "long_range".into(),
            alpha: 3.0,
            j: 1.0,
            norm: Norm::L2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    /// "zero", "decaying", "truncated" or "gaussian".
    pub kind: String,
    pub h_star: Option<f64>,
    pub delta: Option<f64>,
    pub radius: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
}

impl Default for FieldSection {
    fn default() -> Self {
        Self {
            kind: "zero".into(),
            h_star: None,
            delta: None,
            radius: None,
            epsilon: None,
            seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub beta: f64,
    /// Window shape; a single entry means a cube of that side.
    pub window: Vec<usize>,
    pub exterior: u8,
    pub seed: u64,
    pub sweeps: usize,
    pub burn_in: usize,
    pub replicas: usize,
    pub algorithm: Algorithm,
    pub initial: InitialState,
    /// Additive constant of the contour count.
    pub c1: f64,
    /// (M, a) override; absent means the theorem threshold.
    pub m: Option<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            beta: 1.0,
            window: vec![4],
            exterior: 0,
            seed: 0,
            sweeps: 2000,
            burn_in: 200,
            replicas: 1,
            algorithm: Algorithm::Metropolis,
            initial: InitialState::Ground,
            c1: 1.0,
            m: None,
        }
    }
}

impl RunConfig {
    /// Parse TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)?
        } else {
            toml::from_str(text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.model;
        if m.d == 0 || m.d > crate::lattice::MAX_DIM {
            return Err(ConfigError::Invalid(format!("d = {} out of range", m.d)));
        }
        if self.run.window.is_empty() || self.run.window.iter().any(|&s| s == 0) {
            return Err(ConfigError::Invalid("window sides must be positive".into()));
        }
        if self.run.window.len() != 1 && self.run.window.len() != m.d {
            return Err(ConfigError::Invalid(format!("window has {} sides for d = {}", self.run.window.len(), m.d)));
        }
        if self.run.exterior as usize >= m.q {
            return Err(ConfigError::Invalid(format!("exterior color {} out of range", self.run.exterior)));
        }
        Ok(())
    }

    pub fn interaction(&self) -> Result<InteractionSpec, ConfigError> {
        let m = &self.model;
        let spec = match m.interaction.as_str() {
            "potts" => InteractionSpec::potts(m.q)?,
            "clock" => InteractionSpec::clock(m.q)?,
            "custom" => {
                let phi = m.phi.clone().ok_or_else(|| ConfigError::Invalid("custom interaction needs phi".into()))?;
                InteractionSpec::from_phi(phi)?
            }
            other => return Err(ConfigError::Invalid(format!("unknown interaction '{other}'"))),
        };
        if spec.q() != m.q {
            return Err(ConfigError::Invalid(format!("phi has {} entries, q = {}", spec.q(), m.q)));
        }
        Ok(spec)
    }

    pub fn kernel(&self) -> Result<CouplingKernel, ConfigError> {
        let m = &self.model;
        Ok(match m.kernel.as_str() {
            "long_range" => CouplingKernel::long_range(m.d, m.j, m.alpha, m.norm)?,
            "nearest_neighbor" => CouplingKernel::nearest_neighbor(m.d, m.j)?,
            other => return Err(ConfigError::Invalid(format!("unknown kernel '{other}'"))),
        })
    }

    pub fn window(&self) -> BoxWindow {
        let w = &self.run.window;
        if w.len() == 1 {
            BoxWindow::centered(self.model.d, w[0])
        } else {
            BoxWindow::centered_shape(w)
        }
    }

    pub fn field_kind(&self) -> Result<FieldKind, ConfigError> {
        let f = &self.field;
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| ConfigError::Invalid(format!("{} field needs {name}", f.kind)));
        Ok(match f.kind.as_str() {
            "zero" => FieldKind::Zero,
            "decaying" => FieldKind::Decaying {
                h_star: need(f.h_star, "h_star")?,
                delta: need(f.delta, "delta")?,
            },
            "truncated" => FieldKind::Truncated {
                h_star: need(f.h_star, "h_star")?,
                delta: need(f.delta, "delta")?,
                radius: need(f.radius, "radius")?,
            },
            "gaussian" => FieldKind::Gaussian {
                epsilon: need(f.epsilon, "epsilon")?,
                seed: f.seed.unwrap_or(0),
            },
            other => return Err(ConfigError::Invalid(format!("unknown field kind '{other}'"))),
        })
    }

    pub fn field(&self, window: &BoxWindow) -> Result<FieldAssignment, ConfigError> {
        Ok(FieldAssignment::make(self.field_kind()?, window, self.model.q, self.model.norm)?)
    }

    pub fn model(&self) -> Result<ModelInstance, ConfigError> {
        let window = self.window();
        let field = self.field(&window)?;
        Ok(ModelInstance::new(self.interaction()?, &self.kernel()?, field, self.run.beta)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let t = r#"
[model]
d = 2
q = 4
interaction = "clock"
alpha = 2.5
j = 1.0
norm = "l2"

[field]
kind = "decaying"
h_star = 0.5
delta = 2.0

[run]
beta = 0.7
window = [3, 2]
exterior = 1
seed = 0
sweeps = 100
burn_in = 10
replicas = 2
algorithm = "heat_bath"
initial = "random"
c1 = 1.0
"#;
        let a = RunConfig::parse(t).unwrap();
        let b = RunConfig::parse(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(RunConfig::parse(&a.to_toml()).unwrap(), a);
        let m = a.model().unwrap();
        assert_eq!(m.len(), 6);
        assert_eq!(m.q(), 4);
        assert_eq!(a.run.algorithm, Algorithm::HeatBath);
    }

    #[test]
    fn defaults_and_errors() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.model().unwrap().len(), 16);
        assert!(RunConfig::parse("[model]\nbogus = 1\n").is_err());
        assert!(RunConfig::parse("[field]\nkind = \"decaying\"\n").unwrap().model().is_err());
        assert!(RunConfig::parse("[run]\nexterior = 7\n").is_err());
        assert!(RunConfig::parse("[run]\nbeta = 2.0\n").unwrap().model().unwrap().beta() == 2.0);
        let nn = RunConfig::parse(r#"{"model": {"q": 2, "kernel": "nearest_neighbor"}}"#).unwrap();
        assert!(!nn.kernel().unwrap().is_long_range());
    }
}
