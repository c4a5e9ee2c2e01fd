use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use serde_json::json;

use lrspin_core::bounds::{
    compute_constants_with_norm, exhaustive_verify, peierls_tail, verify_energy_bound, BoundConstants, BoundMode,
    ExhaustiveOptions, VerifySetup,
};
use lrspin_core::config::RunConfig;
use lrspin_core::contour::{extract_contours, incorrect_points, MaParams};
use lrspin_core::enumeration::{
    contour_census, exact_partition, griffiths_checks, peierls_comparison, EnumOptions, GriffithsSetup,
};
use lrspin_core::interactions::{CouplingKernel, FieldKind};
use lrspin_core::lattice::BoxWindow;
use lrspin_core::randomfield::{tail_check, OrderedPartition};
use lrspin_core::sampler::{phase_sweep, SweepSpec};
use lrspin_core::spin_model::{ModelInstance, SpinConfig};

use rand::SeedableRng;

use crate::manifest::{Cell, Csv};
use crate::{parse_window, Command, Ctx, ModelArgs, Outcome};

#[derive(Args, Debug, Clone, Serialize)]
pub struct ContoursArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Configuration JSON: {"d", "q", "window": {"lo", "shape"}, "spins", "exterior_color"}.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Check every configuration of the window with one external contour.
    #[arg(long)]
    pub exhaustive: bool,
    /// Check the external contours of one configuration instead.
    #[arg(long, conflicts_with = "exhaustive")]
    pub input: Option<PathBuf>,
    /// Extra decay exponents checked in the same pass.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<f64>,
    /// Per-configuration records to include for each setup.
    #[arg(long, default_value_t = 0)]
    pub records: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ConstantsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Betas at which to evaluate the Peierls tail (a:step:b or a,b,c).
    #[arg(long)]
    pub betas: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Largest number of states to visit.
    #[arg(long, default_value_t = lrspin_core::enumeration::DEFAULT_BUDGET)]
    pub budget: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CensusArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 12)]
    pub n_max: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// a:step:b (inclusive) or a comma list.
    #[arg(long)]
    pub beta_grid: String,
    /// Disorder seeds for Gaussian fields.
    #[arg(long, value_delimiter = ',')]
    pub disorder_seeds: Vec<u64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RandomfieldArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    /// Comma list of thresholds.
    #[arg(long, default_value = "0,0.05,0.1,0.2,0.3,0.5")]
    pub lambdas: String,
    /// single (origin in class 1), all (every site in class 1), random, or a comma list of labels.
    #[arg(long, default_value = "single")]
    pub partition: String,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GriffithsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Larger window for the volume comparison (default: one more column).
    #[arg(long)]
    pub outer: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PeierlsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// a:step:b or a comma list; default: a grid above the convergence threshold.
    #[arg(long)]
    pub betas: Option<String>,
}

pub fn model_args(c: &Command) -> Option<&ModelArgs> {
    Some(match c {
        Command::Contours(a) => &a.model,
        Command::Verify(a) => &a.model,
        Command::Constants(a) => &a.model,
        Command::Enumerate(a) => &a.model,
        Command::Census(a) => &a.model,
        Command::Simulate(a) => &a.model,
        Command::Randomfield(a) => &a.model,
        Command::Griffiths(a) => &a.model,
        Command::Peierls(a) => &a.model,
        Command::Replay(_) => return None,
    })
}

pub fn seeds(c: &Command) -> Result<Vec<u64>> {
    let Some(m) = model_args(c) else { return Ok(vec![]) };
    let cfg = m.resolve()?;
    let mut s = vec![cfg.run.seed];
    if let Some(f) = cfg.field.seed {
        s.push(f);
    }
    if let Command::Simulate(a) = c {
        s.extend(&a.disorder_seeds);
    }
    Ok(s)
}

/// `a:step:b` (inclusive, up to rounding) or `a,b,c`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let p: Vec<f64> = parts
            .iter()
            .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad grid '{s}'")))
            .collect::<Result<_>>()?;
        let (a, step, b) = (p[0], p[1], p[2]);
        if !(step > 0.0) || b < a {
            bail!("grid '{s}' needs step > 0 and end >= start");
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| a + k as f64 * step).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad list '{s}'")))
        .collect()
}

fn json_out(ctx: &Ctx, body: serde_json::Value) -> Result<String> {
    let mut v = json!({ "manifest_hash": ctx.hash });
    if let (Some(o), serde_json::Value::Object(b)) = (v.as_object_mut(), body) {
        o.extend(b);
    }
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn constants(cfg: &RunConfig) -> Result<BoundConstants> {
    if cfg.model.kernel != "long_range" {
        bail!("the energy-bound constants need a long-range kernel");
    }
    let m = cfg.interaction()?.m();
    Ok(compute_constants_with_norm(cfg.model.d, cfg.model.alpha, cfg.model.j, cfg.model.q, m, cfg.run.c1, cfg.model.norm)?)
}

/// (M, a) from the run settings: the theorem threshold unless M is given.
fn ma_params(cfg: &RunConfig) -> Result<MaParams> {
    if cfg.model.kernel == "long_range" {
        return Ok(constants(cfg)?.ma_params(cfg.run.m)?);
    }
    let a = MaParams::default_a(cfg.model.d, None);
    Ok(MaParams::with_norm(cfg.run.m.unwrap_or(1.0), a, cfg.model.d, cfg.model.norm)?)
}

fn enum_opts(cfg: &RunConfig, ctx: &Ctx) -> EnumOptions {
    EnumOptions {
        exterior: cfg.run.exterior,
        exec: ctx.exec,
        ..Default::default()
    }
}

fn read_config(path: &PathBuf) -> Result<SpinConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn run(command: &Command, ctx: &Ctx) -> Result<Outcome> {
    match command {
        Command::Contours(a) => contours(a, ctx),
        Command::Verify(a) => verify(a, ctx),
        Command::Constants(a) => constants_cmd(a, ctx),
        Command::Enumerate(a) => enumerate(a, ctx),
        Command::Census(a) => census(a, ctx),
        Command::Simulate(a) => simulate(a, ctx),
        Command::Randomfield(a) => randomfield(a, ctx),
        Command::Griffiths(a) => griffiths(a, ctx),
        Command::Peierls(a) => peierls(a, ctx),
        Command::Replay(_) => unreachable!("replay is handled by the caller"),
    }
}

fn ok(text: String) -> Result<Outcome> {
    Ok(Outcome { text, passed: true })
}

fn contours(a: &ContoursArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = a.model.resolve()?;
    let sigma = read_config(&a.input)?;
    let p = ma_params(&cfg)?;
    let fam = extract_contours(&sigma, &p)?;
    let dumps: Vec<_> = fam.contours().iter().map(|c| c.dump()).collect();
    ok(json_out(
        ctx,
        json!({
            "params": p,
            "incorrect_points": incorrect_points(&sigma).len(),
            "contours": dumps,
            "external": fam.external_indices(),
        }),
    )?)
}

fn verify(a: &VerifyArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = a.model.resolve()?;
    let inter = cfg.interaction()?;
    if a.exhaustive {
        let window = cfg.window();
        let mut alphas = vec![cfg.model.alpha];
        alphas.extend(&a.alphas);
        let setups = alphas
            .iter()
            .map(|&alpha| -> Result<VerifySetup> {
                let mut c = cfg.clone();
                c.model.alpha = alpha;
                let model = ModelInstance::zero_field(inter.clone(), &c.kernel()?, &window, 0.0)?;
                Ok(VerifySetup::new(model, constants(&c)?, cfg.run.m)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let opts = ExhaustiveOptions {
            exec: ctx.exec,
            max_records: a.records,
            ..Default::default()
        };
        let summaries = exhaustive_verify(&window, &setups, &opts)?;
        let passed = summaries.iter().all(|s| s.mode != BoundMode::Theorem || s.passed());
        let records: Vec<_> = summaries.iter().map(|s| &s.records).collect();
        return Ok(Outcome {
            text: json_out(ctx, json!({ "summaries": summaries, "records": records }))?,
            passed,
        });
    }
    let Some(input) = &a.input else {
        bail!("verify needs --exhaustive or --input");
    };
    let sigma = read_config(input)?;
    let consts = constants(&cfg)?;
    let model = ModelInstance::zero_field(inter, &cfg.kernel()?, sigma.window(), 0.0)?;
    let fam = extract_contours(&sigma, &consts.ma_params(cfg.run.m)?)?;
    let reports = fam
        .external_indices()
        .into_iter()
        .map(|k| verify_energy_bound(&sigma, &fam, k, &model, &consts))
        .collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().all(|r| r.mode != BoundMode::Theorem || r.holds);
    Ok(Outcome {
        text: json_out(ctx, json!({ "constants": consts, "records": reports }))?,
        passed,
    })
}

fn constants_cmd(a: &ConstantsArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = a.model.resolve()?;
    let c = constants(&cfg)?;
    let tails: Vec<_> = match &a.betas {
        Some(b) => parse_grid(b)?
            .into_iter()
            .map(|beta| json!({ "beta": beta, "exponent": c.peierls_exponent(beta), "tail": peierls_tail(beta, &c).ok() }))
            .collect(),
        None => vec![],
    };
    ok(json_out(
        ctx,
        json!({ "constants": c, "tail_at_beta0": peierls_tail(c.beta0, &c).ok(), "tails": tails }),
    )?)
}

fn enumerate(a: &EnumerateArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = a.model.resolve()?;
    let model = cfg.model()?;
    let opts = EnumOptions {
        budget: a.budget,
        ..enum_opts(&cfg, ctx)
    };
    let r = exact_partition(&model, &opts)?;
    ok(json_out(ctx, json!({ "result": r }))?)
}

fn census(a: &CensusArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = a.model.resolve()?;
    let w = &cfg.run.window;
    if w.iter().any(|&s| s != w[0]) {
        bail!("census uses a cubic window");
    }
    let p = ma_params(&cfg)?;
    let r = contour_census(cfg.model.d, cfg.model.q, a.n_max, w[0], &p, cfg.run.c1, &enum_opts(&cfg, ctx))?;
    ok(json_out(ctx, json!({ "census": r, "c1_adequate": r.c1_adequate() }))?)
}

fn simulate(a: &SimulateArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = a.model.resolve()?;
    let w = &cfg.run.window;
    if w.iter().any(|&s| s != w[0]) {
        bail!("simulate uses a cubic window");
    }
    let kind = cfg.field_kind()?;
    let disorder = match kind {
        FieldKind::Gaussian { seed, .. } if a.disorder_seeds.is_empty() => vec![seed],
        _ => a.disorder_seeds.clone(),
    };
    let spec = SweepSpec {
        d: cfg.model.d,
        side: w[0],
        alpha: (cfg.model.kernel == "long_range").then_some(cfg.model.alpha),
        exterior: cfg.run.exterior,
        field: kind,
        disorder_seeds: disorder,
        betas: parse_grid(&a.beta_grid)?,
        replicas: cfg.run.replicas,
        sweeps: cfg.run.sweeps,
        burn_in: cfg.run.burn_in,
        seed: cfg.run.seed,
        algorithm: cfg.run.algorithm,
        initial: cfg.run.initial,
    };
    let rows = phase_sweep(&cfg.interaction()?, &cfg.kernel()?, &spec, ctx.exec)?;
    let mut csv = Csv::new(
        &ctx.hash,
        &["beta", "L", "alpha", "q", "field", "disorder_seed", "mu_hat", "stderr", "ess", "acceptance"],
    );
    for r in rows {
        csv.row(&[
            Cell::F(r.beta),
            Cell::I(r.l as u64),
            Cell::S(r.alpha),
            Cell::I(r.q as u64),
            Cell::S(r.field),
            Cell::S(r.disorder_seed),
            Cell::F(r.mu_hat),
            Cell::F(r.stderr),
            Cell::F(r.ess),
            Cell::F(r.acceptance),
        ]);
    }
    ok(csv.finish())
}

fn partition(spec: &str, window: &BoxWindow, q: usize, seed: u64) -> Result<OrderedPartition> {
    let n = window.len();
    Ok(match spec {
        "single" => {
            let origin = window
                .index_of(&lrspin_core::lattice::Site::origin(window.dim()))
                .context("window must contain the origin")?;
            let mut l = vec![0u8; n];
            l[origin] = 1;
            OrderedPartition::new(window.clone(), q, l)?
        }
        "all" => OrderedPartition::new(window.clone(), q, vec![1; n])?,
        "random" => OrderedPartition::random(window, q, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed)),
        list => {
            let l = list
                .split(',')
                .map(|x| x.trim().parse::<u8>().with_context(|| format!("bad label list '{list}'")))
                .collect::<Result<Vec<_>>>()?;
            OrderedPartition::new(window.clone(), q, l)?
        }
    })
}

fn randomfield(a: &RandomfieldArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = a.model.resolve()?;
    let eps = cfg.field.epsilon.context("randomfield needs --epsilon")?;
    let window = cfg.window();
    let mut zero = cfg.clone();
    zero.field.kind = "zero".into();
    let model = zero.model()?;
    let part = partition(&a.partition, &window, cfg.model.q, cfg.run.seed)?;
    let lambdas = parse_grid(&a.lambdas)?;
    let r = tail_check(&part, &model, eps, a.draws, &lambdas, cfg.run.seed, &enum_opts(&zero, ctx))?;
    let mut csv = Csv::new(
        &ctx.hash,
        &[
            "lambda",
            "empirical",
            "bound",
            "stderr",
            "holds",
            "sum_empirical",
            "sum_bound_quoted",
            "sum_bound_corrected",
            "sum_exact",
        ],
    );
    for row in &r.rows {
        csv.row(&[
            Cell::F(row.lambda),
            Cell::F(row.empirical),
            Cell::F(row.bound),
            Cell::F(row.stderr),
            Cell::B(row.delta_holds()),
            Cell::F(row.sum_empirical),
            Cell::F(row.sum_bound_quoted),
            Cell::F(row.sum_bound_corrected),
            Cell::F(row.sum_exact),
        ]);
    }
    Ok(Outcome {
        text: csv.finish(),
        passed: r.delta_holds(),
    })
}

fn griffiths(a: &GriffithsArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = a.model.resolve()?;
    let inner = cfg.window();
    let outer = match &a.outer {
        Some(s) => BoxWindow::new(inner.lo.clone(), parse_window(s)?)?,
        None => {
            let mut shape = inner.shape.clone();
            shape[0] += 1;
            BoxWindow::new(inner.lo.clone(), shape)?
        }
    };
    let setup = GriffithsSetup {
        interaction: cfg.interaction()?,
        kernel: cfg.kernel()?,
        inner,
        outer,
        beta_range: (0.0, cfg.run.beta),
    };
    let r = griffiths_checks(&setup, a.trials, cfg.run.seed, &enum_opts(&cfg, ctx))?;
    Ok(Outcome {
        text: json_out(ctx, json!({ "report": r, "passed": r.passed() }))?,
        passed: r.passed(),
    })
}

fn peierls(a: &PeierlsArgs, ctx: &Ctx) -> Result<Outcome> {
    let cfg = a.model.resolve()?;
    let c = constants(&cfg)?;
    let betas = match &a.betas {
        Some(b) => parse_grid(b)?,
        None => {
            let conv = (c.c1 + (c.q as f64).ln()) / c.c2;
            [1.001, 1.01, 1.1, 1.5, 2.0].iter().map(|f| f * conv).chain([c.beta0]).collect()
        }
    };
    let kernel: CouplingKernel = cfg.kernel()?;
    let model = ModelInstance::zero_field(cfg.interaction()?, &kernel, &cfg.window(), 0.0)?;
    let rows = peierls_comparison(&model, &betas, &c, &enum_opts(&cfg, ctx))?;
    let mut csv = Csv::new(&ctx.hash, &["beta", "exact", "bound", "holds"]);
    let mut passed = true;
    for r in &rows {
        let holds = r.holds();
        passed &= holds != Some(false);
        csv.row(&[
            Cell::F(r.beta),
            Cell::F(r.exact),
            r.bound.map_or(Cell::S("divergent".into()), Cell::F),
            holds.map_or(Cell::S("n/a".into()), Cell::B),
        ]);
    }
    Ok(Outcome {
        text: csv.finish(),
        passed,
    })
}
