//! Single-flip Markov chains for the finite-volume Gibbs measure.
//!
//! Each step picks a site uniformly at random and applies a Metropolis or a
//! heat-bath update. Per-site color weights W[i][c] = Σ_j J_ij 1{σ_j = c}
//! are cached and updated on accepted flips, so a proposal costs O(q²) and a
//! flip O(N). The cache is rebuilt from scratch every `REFRESH` sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::enumeration::check_budget;
use crate::error::SamplerError;
use crate::exec::Exec;
use crate::interactions::{CouplingKernel, FieldAssignment, FieldKind, InteractionSpec};
use crate::lattice::{BoxWindow, Site};
use crate::spin_model::{ModelInstance, SpinConfig};

const REFRESH: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Metropolis,
    HeatBath,
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "metropolis" => Ok(Self::Metropolis),
            "heat_bath" | "heat-bath" | "heatbath" => Ok(Self::HeatBath),
            _ => Err(format!("unknown algorithm '{s}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Every site has the exterior color.
    #[default]
    Ground,
    /// Independent uniform colors.
    Random,
    /// Exterior color on even sites, the next color on odd sites.
    Checker,
}

impl std::str::FromStr for InitialState {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ground" => Ok(Self::Ground),
            "random" => Ok(Self::Random),
            "checker" => Ok(Self::Checker),
            _ => Err(format!("unknown initial state '{s}'")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ChainSpec {
    pub model: ModelInstance,
    pub exterior: u8,
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// RNG stream; independent replicas use distinct streams.
    pub replica: u64,
    pub algorithm: Algorithm,
    pub initial: InitialState,
    /// Keep the per-sweep traces in the output.
    pub keep_trace: bool,
}

impl ChainSpec {
    pub fn new(model: ModelInstance, sweeps: usize, burn_in: usize, seed: u64) -> Self {
        Self {
            model,
            exterior: 0,
            sweeps,
            burn_in,
            seed,
            replica: 0,
            algorithm: Algorithm::default(),
            initial: InitialState::default(),
            keep_trace: false,
        }
    }

    fn validate(&self) -> Result<usize, SamplerError> {
        if self.sweeps <= self.burn_in {
            return Err(SamplerError::InvalidSpec(format!(
                "sweeps ({}) must exceed burn_in ({})",
                self.sweeps, self.burn_in
            )));
        }
        if self.exterior as usize >= self.model.q() {
            return Err(SamplerError::InvalidSpec(format!("exterior color {} out of range", self.exterior)));
        }
        let w = self.model.window();
        w.index_of(&Site::origin(w.dim()))
            .ok_or_else(|| SamplerError::InvalidSpec("window must contain the origin".into()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub samples: usize,
    /// Fraction of recorded sweeps with σ₀ = c.
    pub occupancy: Vec<f64>,
    /// Standard error of each occupancy (from its integrated autocorrelation time).
    pub stderr: Vec<f64>,
    /// Effective sample size of the indicator σ₀ = exterior.
    pub ess: f64,
    pub acceptance: f64,
    /// Mean fraction of window sites with the exterior color.
    pub magnetization: f64,
    /// Per-sweep σ₀ after burn-in (empty unless traces were requested).
    pub origin_trace: Vec<u8>,
    /// Per-sweep fraction of sites with the exterior color.
    pub magnetization_trace: Vec<f64>,
    pub final_state: Vec<u8>,
}

impl ChainStats {
    pub fn mu_hat(&self, color: u8) -> f64 {
        self.occupancy[color as usize]
    }
}

/// Metropolis acceptance probability for a move with energy change
/// `e_new − e_old` (φ-form).
#[inline]
pub fn metropolis_accept(beta: f64, e_old: f64, e_new: f64) -> f64 {
    let d = beta * (e_new - e_old);
    if d <= 0.0 {
        1.0
    } else {
        (-d).exp()
    }
}

/// Gibbs conditional over colors, written into `probs`. Sums run in the
/// color order r, r+1, … so that a color shift permutes the result exactly.
pub fn heat_bath_probs(beta: f64, energies: &[f64], r: usize, probs: &mut [f64]) {
    let q = energies.len();
    let mut emin = f64::INFINITY;
    for k in 0..q {
        emin = emin.min(energies[(r + k) % q]);
    }
    let mut total = 0.0;
    for k in 0..q {
        let c = (r + k) % q;
        let w = (-beta * (energies[c] - emin)).exp();
        probs[c] = w;
        total += w;
    }
    for p in probs.iter_mut() {
        *p /= total;
    }
}

/// Dense couplings and the per-site color-weight cache of one chain.
struct Local {
    q: usize,
    n: usize,
    r: usize,
    scale: f64,
    psi: Vec<f64>,
    pair: Vec<f64>,
    ext: Vec<f64>,
    field: Vec<f64>,
    weights: Vec<f64>,
}

impl Local {
    fn new(model: &ModelInstance, r: u8) -> Self {
        let n = model.len();
        let q = model.q();
        let t = model.table();
        let mut pair = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    pair[i * n + j] = t.get(i, j);
                }
            }
        }
        Self {
            q,
            n,
            r: r as usize,
            scale: model.interaction().scale(),
            psi: model.interaction().psi().to_vec(),
            pair,
            ext: t.exterior_all().to_vec(),
            field: model.field().values().to_vec(),
            weights: vec![0.0; n * q],
        }
    }

    fn rebuild(&mut self, spins: &[u8]) {
        let (n, q) = (self.n, self.q);
        self.weights.iter_mut().for_each(|w| *w = 0.0);
        for i in 0..n {
            let row = &self.pair[i * n..(i + 1) * n];
            let w = &mut self.weights[i * q..(i + 1) * q];
            for (j, &s) in spins.iter().enumerate() {
                w[s as usize] += row[j];
            }
        }
    }

    fn flip(&mut self, i: usize, old: usize, new: usize) {
        let (n, q) = (self.n, self.q);
        let row = &self.pair[i * n..(i + 1) * n];
        for (j, &jij) in row.iter().enumerate() {
            let w = &mut self.weights[j * q..(j + 1) * q];
            w[old] -= jij;
            w[new] += jij;
        }
    }

    /// φ-form local energies of site i for every color, up to a constant.
    fn energies(&self, i: usize, out: &mut [f64]) {
        let q = self.q;
        let r = self.r;
        let w = &self.weights[i * q..(i + 1) * q];
        for k in 0..q {
            let c = (r + k) % q;
            let mut acc = 0.0;
            for l in 0..q {
                let cp = (r + l) % q;
                acc += w[cp] * self.psi[(c + q - cp) % q];
            }
            acc += self.ext[i] * self.psi[k];
            out[c] = self.scale * acc - self.field[i * q + c];
        }
    }
}

fn initial_spins(kind: InitialState, window: &BoxWindow, q: usize, r: u8, rng: &mut ChaCha8Rng) -> Vec<u8> {
    match kind {
        InitialState::Ground => vec![r; window.len()],
        InitialState::Random => (0..window.len()).map(|_| ((r as usize + rng.random_range(0..q)) % q) as u8).collect(),
        InitialState::Checker => window
            .sites()
            .map(|x| {
                let parity = x.coords().iter().map(|&c| c as i64).sum::<i64>().rem_euclid(2) as usize;
                ((r as usize + parity) % q) as u8
            })
            .collect(),
    }
}

/// One update of site `i`. Returns whether the spin changed.
#[inline]
fn update(
    alg: Algorithm,
    beta: f64,
    local: &mut Local,
    spins: &mut [u8],
    i: usize,
    e: &mut [f64],
    probs: &mut [f64],
    rng: &mut ChaCha8Rng,
) -> bool {
    let q = local.q;
    let old = spins[i] as usize;
    local.energies(i, e);
    let new = match alg {
        Algorithm::Metropolis => {
            let cand = (old + 1 + rng.random_range(0..q - 1)) % q;
            let u: f64 = rng.random();
            if u < metropolis_accept(beta, e[old], e[cand]) {
                cand
            } else {
                old
            }
        }
        Algorithm::HeatBath => {
            heat_bath_probs(beta, e, local.r, probs);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = (local.r + q - 1) % q;
            for k in 0..q {
                let c = (local.r + k) % q;
                acc += probs[c];
                if u < acc {
                    pick = c;
                    break;
                }
            }
            pick
        }
    };
    if new != old {
        local.flip(i, old, new);
        spins[i] = new as u8;
        true
    } else {
        false
    }
}

/// Run one chain. Results are a pure function of the spec.
pub fn run_chain(spec: &ChainSpec) -> Result<ChainStats, SamplerError> {
    let origin = spec.validate()?;
    let model = &spec.model;
    let q = model.q();
    let n = model.len();
    let r = spec.exterior;
    let beta = model.beta();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(spec.replica);
    let mut spins = initial_spins(spec.initial, model.window(), q, r, &mut rng);
    let mut local = Local::new(model, r);
    let mut e = vec![0.0; q];
    let mut probs = vec![0.0; q];
    let samples = spec.sweeps - spec.burn_in;
    let mut origin_trace = Vec::with_capacity(samples);
    let mut mag_trace = Vec::with_capacity(samples);
    let mut accepted = 0u64;
    let mut proposals = 0u64;
    for sweep in 0..spec.sweeps {
        if sweep % REFRESH == 0 {
            local.rebuild(&spins);
        }
        for _ in 0..n {
            let i = rng.random_range(0..n);
            let changed = update(spec.algorithm, beta, &mut local, &mut spins, i, &mut e, &mut probs, &mut rng);
            if sweep >= spec.burn_in {
                proposals += 1;
                accepted += changed as u64;
            }
        }
        if sweep >= spec.burn_in {
            origin_trace.push(spins[origin]);
            mag_trace.push(spins.iter().filter(|&&s| s == r).count() as f64 / n as f64);
        }
    }
    let mut occupancy = vec![0.0; q];
    for &s in &origin_trace {
        occupancy[s as usize] += 1.0;
    }
    occupancy.iter_mut().for_each(|o| *o /= samples as f64);
    let stderr = (0..q)
        .map(|c| {
            let series: Vec<f64> = origin_trace.iter().map(|&s| (s as usize == c) as u8 as f64).collect();
            let p = occupancy[c];
            let ess = effective_sample_size(&series);
            (p * (1.0 - p) / ess).sqrt()
        })
        .collect();
    let ind: Vec<f64> = origin_trace.iter().map(|&s| (s == r) as u8 as f64).collect();
    let ess = effective_sample_size(&ind);
    let magnetization = mag_trace.iter().sum::<f64>() / samples as f64;
    Ok(ChainStats {
        samples,
        occupancy,
        stderr,
        ess,
        acceptance: if proposals == 0 { 0.0 } else { accepted as f64 / proposals as f64 },
        magnetization,
        origin_trace: if spec.keep_trace { origin_trace } else { Vec::new() },
        magnetization_trace: if spec.keep_trace { mag_trace } else { Vec::new() },
        final_state: spins,
    })
}

/// n/τ with τ the integrated autocorrelation time from Sokal's automatic
/// window (c = 6). A constant series returns n.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return n as f64;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0 = dev.iter().map(|d| d * d).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return n as f64;
    }
    let mut tau = 1.0;
    for t in 1..n / 2 {
        let ct = dev[..n - t].iter().zip(&dev[t..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        tau += 2.0 * ct / c0;
        if t as f64 >= 6.0 * tau {
            break;
        }
    }
    (n as f64 / tau.max(1.0)).min(n as f64)
}

/// Independent replicas (streams 0..replicas) run under `exec`.
pub fn run_replicas(spec: &ChainSpec, replicas: usize, exec: Exec) -> Result<Vec<ChainStats>, SamplerError> {
    exec.map_indexed(replicas, |k| {
        let mut s = spec.clone();
        s.replica = k as u64;
        run_chain(&s)
    })
    .into_iter()
    .collect()
}

/// Replica mean of μ̂(σ₀ = color) and its standard error (from per-replica
/// errors), total ESS and mean acceptance.
pub fn combine(stats: &[ChainStats], color: u8) -> (f64, f64, f64, f64) {
    let k = stats.len() as f64;
    let mu = stats.iter().map(|s| s.mu_hat(color)).sum::<f64>() / k;
    let se = stats.iter().map(|s| s.stderr[color as usize].powi(2)).sum::<f64>().sqrt() / k;
    let ess = stats.iter().map(|s| s.ess).sum();
    let acc = stats.iter().map(|s| s.acceptance).sum::<f64>() / k;
    (mu, se, ess, acc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub states: usize,
    /// max |π(σ)P(σ,σ′) − π(σ′)P(σ′,σ)|.
    pub detailed_balance: f64,
    /// max_σ |Σ_σ′ P(σ,σ′) − 1|.
    pub row_sum: f64,
    /// max |πP − π|.
    pub stationarity: f64,
    pub irreducible: bool,
    /// Largest deviation of a heat-bath single-site row from the Gibbs conditional.
    pub conditional_error: f64,
    pub matrix: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
}

impl TransitionReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.irreducible && self.detailed_balance <= tol && self.row_sum <= tol && self.stationarity <= tol
    }
}

/// Build the random-scan transition matrix from the sampler's own update
/// rule and check it against exact Gibbs weights.
pub fn transition_matrix_check(model: &ModelInstance, exterior: u8, alg: Algorithm) -> Result<TransitionReport, SamplerError> {
    let q = model.q();
    let n = model.len();
    let states = q.pow(n as u32);
    if check_budget(q, n, 64).is_err() {
        return Err(SamplerError::TooLarge(states));
    }
    if exterior as usize >= q {
        return Err(SamplerError::InvalidSpec(format!("exterior color {exterior} out of range")));
    }
    let beta = model.beta();
    let decode = |mut idx: usize| -> Vec<u8> {
        (0..n)
            .map(|_| {
                let d = (idx % q) as u8;
                idx /= q;
                d
            })
            .collect()
    };
    let logw: Vec<f64> = (0..states)
        .map(|k| {
            let c = SpinConfig::new(model.window().clone(), q, decode(k), exterior)?;
            model.gibbs_weight_log(&c)
        })
        .collect::<Result<_, _>>()?;
    let lmax = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logw.iter().map(|l| (l - lmax).exp()).sum();
    let pi: Vec<f64> = logw.iter().map(|l| (l - lmax).exp() / z).collect();

    let mut local = Local::new(model, exterior);
    let mut e = vec![0.0; q];
    let mut probs = vec![0.0; q];
    let mut p = vec![vec![0.0; states]; states];
    let mut cond_err: f64 = 0.0;
    let mut pow = vec![1usize; n];
    for i in 1..n {
        pow[i] = pow[i - 1] * q;
    }
    for (k, row) in p.iter_mut().enumerate() {
        let spins = decode(k);
        local.rebuild(&spins);
        for i in 0..n {
            local.energies(i, &mut e);
            let old = spins[i] as usize;
            let mut kernel = vec![0.0; q];
            match alg {
                Algorithm::Metropolis => {
                    for c in (0..q).filter(|&c| c != old) {
                        let a = metropolis_accept(beta, e[old], e[c]) / (q - 1) as f64;
                        kernel[c] += a;
                        kernel[old] += 1.0 / (q - 1) as f64 - a;
                    }
                }
                Algorithm::HeatBath => {
                    heat_bath_probs(beta, &e, exterior as usize, &mut probs);
                    kernel.copy_from_slice(&probs);
                    // compare with the conditional from full Gibbs weights
                    let target: Vec<f64> = (0..q).map(|c| pi[k - old * pow[i] + c * pow[i]]).collect();
                    let tz: f64 = target.iter().sum();
                    for c in 0..q {
                        cond_err = cond_err.max((kernel[c] - target[c] / tz).abs());
                    }
                }
            }
            for c in 0..q {
                row[k - old * pow[i] + c * pow[i]] += kernel[c] / n as f64;
            }
        }
    }
    let mut db: f64 = 0.0;
    let mut rs: f64 = 0.0;
    for a in 0..states {
        rs = rs.max((p[a].iter().sum::<f64>() - 1.0).abs());
        for b in 0..states {
            db = db.max((pi[a] * p[a][b] - pi[b] * p[b][a]).abs());
        }
    }
    let mut st: f64 = 0.0;
    for b in 0..states {
        let v: f64 = (0..states).map(|a| pi[a] * p[a][b]).sum();
        st = st.max((v - pi[b]).abs());
    }
    // reachability from state 0 over positive entries, both directions
    let reach = |forward: bool| {
        let mut seen = vec![false; states];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for b in 0..states {
                let w = if forward { p[a][b] } else { p[b][a] };
                if w > 0.0 && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    Ok(TransitionReport {
        states,
        detailed_balance: db,
        row_sum: rs,
        stationarity: st,
        irreducible: reach(true) && reach(false),
        conditional_error: cond_err,
        matrix: p,
        stationary: pi,
    })
}

/// Settings of a β sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSpec {
    pub d: usize,
    pub side: usize,
    pub alpha: Option<f64>,
    pub exterior: u8,
    pub field: FieldKind,
    /// Disorder seeds for Gaussian fields (ignored otherwise).
    pub disorder_seeds: Vec<u64>,
    pub betas: Vec<f64>,
    pub replicas: usize,
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub initial: InitialState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub alpha: String,
    pub q: usize,
    pub field: String,
    pub disorder_seed: String,
    pub mu_hat: f64,
    pub stderr: f64,
    pub ess: f64,
    pub acceptance: f64,
}

pub fn field_descriptor(kind: &FieldKind) -> String {
    match kind {
        FieldKind::Zero => "zero".into(),
        FieldKind::Decaying { h_star, delta } => format!("decaying(h*={h_star};delta={delta})"),
        FieldKind::Truncated { h_star, delta, radius } => format!("truncated(h*={h_star};delta={delta};R={radius})"),
        FieldKind::Gaussian { epsilon, .. } => format!("gaussian(eps={epsilon})"),
        FieldKind::Custom => "custom".into(),
    }
}

/// μ̂(σ₀ = exterior) for each β (and disorder seed), replicas pooled.
pub fn phase_sweep(
    interaction: &InteractionSpec,
    kernel: &CouplingKernel,
    spec: &SweepSpec,
    exec: Exec,
) -> Result<Vec<SweepRow>, SamplerError> {
    if spec.replicas == 0 || spec.betas.is_empty() {
        return Err(SamplerError::InvalidSpec("need at least one replica and one beta".into()));
    }
    let q = interaction.q();
    let window = BoxWindow::centered(spec.d, spec.side);
    let invalid = |e: crate::error::InteractionError| SamplerError::InvalidSpec(e.to_string());
    let fields: Vec<(String, FieldAssignment)> = match spec.field {
        FieldKind::Gaussian { epsilon, .. } => {
            if spec.disorder_seeds.is_empty() {
                return Err(SamplerError::InvalidSpec("gaussian fields need disorder seeds".into()));
            }
            spec.disorder_seeds
                .iter()
                .map(|&s| Ok((s.to_string(), FieldAssignment::gaussian(&window, q, epsilon, s).map_err(invalid)?)))
                .collect::<Result<_, SamplerError>>()?
        }
        kind => vec![("-".into(), FieldAssignment::make(kind, &window, q, kernel.norm()).map_err(invalid)?)],
    };
    let base = ModelInstance::zero_field(interaction.clone(), kernel, &window, 0.0)?;
    let mut jobs = Vec::new();
    for &beta in &spec.betas {
        for (fi, _) in fields.iter().enumerate() {
            for rep in 0..spec.replicas {
                jobs.push((beta, fi, rep));
            }
        }
    }
    let results = exec.map_slice(&jobs, |&(beta, fi, rep)| -> Result<ChainStats, SamplerError> {
        let model = base.with_field(fields[fi].1.clone())?.with_beta(beta)?;
        let chain = ChainSpec {
            model,
            exterior: spec.exterior,
            sweeps: spec.sweeps,
            burn_in: spec.burn_in,
            seed: spec.seed,
            replica: rep as u64,
            algorithm: spec.algorithm,
            initial: spec.initial,
            keep_trace: false,
        };
        run_chain(&chain)
    });
    let results: Vec<ChainStats> = results.into_iter().collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (k, chunk) in results.chunks(spec.replicas).enumerate() {
        let (beta, fi, _) = jobs[k * spec.replicas];
        let (mu, se, ess, acc) = combine(chunk, spec.exterior);
        rows.push(SweepRow {
            beta,
            l: spec.side,
            alpha: spec.alpha.map_or("nn".into(), |a| a.to_string()),
            q,
            field: field_descriptor(&spec.field),
            disorder_seed: fields[fi].0.clone(),
            mu_hat: mu,
            stderr: se,
            ess,
            acceptance: acc,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::{exact_partition, EnumOptions};
    use crate::lattice::Norm;

    fn model(side: usize, q: usize, beta: f64) -> ModelInstance {
        let k = CouplingKernel::long_range(2, 1.0, 3.0, Norm::L2).unwrap();
        ModelInstance::zero_field(InteractionSpec::potts(q).unwrap(), &k, &BoxWindow::centered(2, side), beta).unwrap()
    }

    #[test]
    fn local_energies_match_model() {
        let m = model(3, 3, 1.0);
        let sigma = SpinConfig::new(m.window().clone(), 3, vec![0, 1, 2, 2, 1, 0, 0, 1, 1], 2).unwrap();
        let mut local = Local::new(&m, 2);
        local.rebuild(sigma.spins());
        let mut e = vec![0.0; 3];
        for i in 0..9 {
            local.energies(i, &mut e);
            for c in 0..3u8 {
                let d = m.energy_delta(&sigma, i, c).unwrap();
                assert!((e[c as usize] - e[sigma.get(i) as usize] - d).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn detailed_balance_and_conditionals() {
        for alg in [Algorithm::Metropolis, Algorithm::HeatBath] {
            for (side, q, beta) in [(1, 3, 0.8), (1, 4, 2.0)] {
                let r = transition_matrix_check(&model(side, q, beta), 1, alg).unwrap();
                assert!(r.passed(1e-12), "{r:?}");
                assert!(r.conditional_error < 1e-12);
            }
            let w = BoxWindow::new(vec![0, 0], vec![2, 1]).unwrap();
            let k = CouplingKernel::long_range(2, 1.0, 2.5, Norm::L2).unwrap();
            let m = ModelInstance::zero_field(InteractionSpec::clock(4).unwrap(), &k, &w, 1.3).unwrap();
            assert!(transition_matrix_check(&m, 0, alg).unwrap().passed(1e-12));
        }
        let r = transition_matrix_check(&model(1, 3, 0.0), 0, Algorithm::Metropolis).unwrap();
        for j in 0..3 {
            let col: f64 = r.matrix.iter().map(|row| row[j]).sum();
            assert!((col - 1.0).abs() < 1e-15);
        }
        assert!(matches!(transition_matrix_check(&model(3, 3, 1.0), 0, Algorithm::Metropolis), Err(SamplerError::TooLarge(_))));
    }

    #[test]
    fn stationary_matches_single_site_marginal() {
        let m = model(1, 3, 0.7);
        let r = transition_matrix_check(&m, 0, Algorithm::HeatBath).unwrap();
        let exact = exact_partition(&m, &EnumOptions::default()).unwrap();
        for c in 0..3 {
            assert!((r.stationary[c] - exact.marginal(0, c)).abs() < 1e-14);
        }
    }

    #[test]
    fn reproducible_and_shift_equivariant() {
        for alg in [Algorithm::Metropolis, Algorithm::HeatBath] {
            let mut spec = ChainSpec::new(model(4, 3, 0.6), 200, 20, 99);
            spec.algorithm = alg;
            spec.initial = InitialState::Random;
            spec.keep_trace = true;
            let a = run_chain(&spec).unwrap();
            let b = run_chain(&spec).unwrap();
            assert_eq!(a, b);
            spec.exterior = 2;
            let c = run_chain(&spec).unwrap();
            let shifted: Vec<u8> = a.origin_trace.iter().map(|&s| (s + 2) % 3).collect();
            assert_eq!(c.origin_trace, shifted);
            assert_eq!(c.magnetization_trace, a.magnetization_trace);
        }
    }

    #[test]
    fn beta_zero_uniform() {
        let spec = ChainSpec::new(model(3, 3, 0.0), 4000, 100, 5);
        let s = run_chain(&spec).unwrap();
        for c in 0..3 {
            assert!((s.occupancy[c] - 1.0 / 3.0).abs() < 3.0 * s.stderr[c] + 1e-3);
        }
        assert!((s.occupancy.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.ess <= s.samples as f64);
    }

    #[test]
    fn matches_enumeration() {
        let m = model(3, 2, 0.4);
        let exact = exact_partition(&m, &EnumOptions::default()).unwrap();
        let spec = ChainSpec {
            algorithm: Algorithm::HeatBath,
            ..ChainSpec::new(m, 20000, 500, 11)
        };
        let s = run_chain(&spec).unwrap();
        let origin = 4;
        for c in 0..2 {
            assert!((s.occupancy[c] - exact.marginal(origin, c)).abs() < 3.0 * s.stderr[c]);
        }
    }

    #[test]
    fn ess_behaviour() {
        let x: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 13) as f64).collect();
        assert!(effective_sample_size(&x) > 300.0);
        let y: Vec<f64> = (0..1000).map(|i| (i / 100) as f64).collect();
        assert!(effective_sample_size(&y) < 100.0);
        assert_eq!(effective_sample_size(&[1.0; 50]), 50.0);
    }

    #[test]
    fn rejects_bad_spec() {
        let spec = ChainSpec::new(model(3, 3, 0.5), 10, 10, 1);
        assert!(run_chain(&spec).is_err());
    }
}
