mod commands;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lrspin_core::config::RunConfig;
use lrspin_core::lattice::Norm;
use lrspin_core::sampler::{Algorithm, InitialState};
use lrspin_core::Exec;

use manifest::{input_hash, sha256_hex, OutputDigest, RunManifest};

/// Contours, energy bounds, exact enumeration and Monte Carlo for long-range
/// q-state spin models.
#[derive(Parser, Debug)]
#[command(name = "lrspin", version)]
struct Cli {
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Manifest file (defaults to <out>.manifest.json when --out is given).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run every kernel on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Extract the contours of a configuration given as JSON.
    Contours(commands::ContoursArgs),
    /// Check the contour energy bound, exhaustively on a window or on one configuration.
    Verify(commands::VerifyArgs),
    /// Print the constants of the energy bound and the Peierls tail.
    Constants(commands::ConstantsArgs),
    /// Exact partition function and single-site marginals.
    Enumerate(commands::EnumerateArgs),
    /// Count contours around the origin by size.
    Census(commands::CensusArgs),
    /// Monte Carlo sweep over beta; writes CSV.
    Simulate(commands::SimulateArgs),
    /// Tail statistics of the free-energy difference under Gaussian fields; writes CSV.
    Randomfield(commands::RandomfieldArgs),
    /// Exact checks of the correlation inequalities.
    Griffiths(commands::GriffithsArgs),
    /// Exact occupancy next to the Peierls tail; writes CSV.
    Peierls(commands::PeierlsArgs),
    /// Re-run a manifest and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct ReplayArgs {
    #[arg(long = "from")]
    from: PathBuf,
}

/// Model, field and run settings shared by the subcommands. Flags override
/// the values of `--config`.
#[derive(Args, Debug, Clone, Default, Serialize)]
pub struct ModelArgs {
    /// TOML or JSON file with [model], [field] and [run] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    /// potts, clock or custom (with --phi).
    #[arg(long)]
    pub interaction: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub phi: Option<Vec<f64>>,
    /// long_range or nearest_neighbor.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub j: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub norm: Option<Norm>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Window shape such as 4x4, or a single side.
    #[arg(long)]
    pub window: Option<String>,
    /// Cube side (same as --window L).
    #[arg(long = "L")]
    pub side: Option<usize>,
    #[arg(long)]
    pub exterior: Option<u8>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// zero, decaying, truncated or gaussian.
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long)]
    pub h_star: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub field_seed: Option<u64>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub algorithm: Option<Algorithm>,
    #[arg(long)]
    #[serde(skip)]
    pub initial: Option<InitialState>,
    #[arg(long)]
    pub c1: Option<f64>,
    /// M of the (M, a)-partition (default: the theorem threshold).
    #[arg(long)]
    pub m: Option<f64>,
}

pub fn parse_window(s: &str) -> Result<Vec<usize>> {
    s.split(['x', 'X'])
        .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad window '{s}'")))
        .collect()
}

impl ModelArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($src:expr, $dst:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        set!(self.d, c.model.d);
        set!(self.q, c.model.q);
        set!(self.interaction, c.model.interaction);
        if self.phi.is_some() {
            c.model.phi = self.phi.clone();
        }
        set!(self.kernel, c.model.kernel);
        set!(self.alpha, c.model.alpha);
        set!(self.j, c.model.j);
        set!(self.norm, c.model.norm);
        set!(self.beta, c.run.beta);
        if let Some(w) = &self.window {
            c.run.window = parse_window(w)?;
        }
        if let Some(l) = self.side {
            c.run.window = vec![l];
        }
        set!(self.exterior, c.run.exterior);
        set!(self.seed, c.run.seed);
        set!(self.field, c.field.kind);
        for (src, dst) in [
            (self.h_star, &mut c.field.h_star),
            (self.delta, &mut c.field.delta),
            (self.radius, &mut c.field.radius),
            (self.epsilon, &mut c.field.epsilon),
        ] {
            if src.is_some() {
                *dst = src;
            }
        }
        if self.field_seed.is_some() {
            c.field.seed = self.field_seed;
        }
        set!(self.sweeps, c.run.sweeps);
        set!(self.burn_in, c.run.burn_in);
        set!(self.replicas, c.run.replicas);
        set!(self.algorithm, c.run.algorithm);
        set!(self.initial, c.run.initial);
        set!(self.c1, c.run.c1);
        if self.m.is_some() {
            c.run.m = self.m;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Result of a subcommand before it is written out.
pub struct Outcome {
    pub text: String,
    /// False when a checked property failed (exit code 1).
    pub passed: bool,
}

pub struct Ctx {
    pub hash: String,
    pub exec: Exec,
}

/// Everything that determines a subcommand's output, with the configuration resolved.
fn inputs(command: &Command) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(command)?;
    if let Some(model) = commands::model_args(command) {
        let cfg = model.resolve()?;
        v["resolved_config"] = serde_json::to_value(cfg)?;
    }
    Ok(v)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Contours(_) => "contours",
        Command::Verify(_) => "verify",
        Command::Constants(_) => "constants",
        Command::Enumerate(_) => "enumerate",
        Command::Census(_) => "census",
        Command::Simulate(_) => "simulate",
        Command::Randomfield(_) => "randomfield",
        Command::Griffiths(_) => "griffiths",
        Command::Peierls(_) => "peierls",
        Command::Replay(_) => "replay",
    }
}

fn threads(cli: &Cli) -> usize {
    if cli.sequential {
        return 1;
    }
    cli.threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn setup_threads(cli: &Cli) -> Result<()> {
    if cli.threads == Some(0) {
        bail!("--threads must be positive");
    }
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    Ok(())
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Run one parsed command line; returns whether all checks passed.
fn execute(cli: &Cli, argv: &[String]) -> Result<bool> {
    if let Command::Replay(r) = &cli.command {
        return replay(&r.from, cli);
    }
    let start = Instant::now();
    let name = command_name(&cli.command);
    let inputs = inputs(&cli.command)?;
    let hash = input_hash(name, &inputs);
    let ctx = Ctx {
        hash: hash.clone(),
        exec: if cli.sequential { Exec::Sequential } else { Exec::Parallel },
    };
    let outcome = commands::run(&cli.command, &ctx)?;
    write_output(cli.out.as_deref(), &outcome.text)?;
    let manifest_path = cli
        .manifest
        .clone()
        .or_else(|| cli.out.as_ref().map(|o| PathBuf::from(format!("{}.manifest.json", o.display()))));
    if let Some(mp) = manifest_path {
        let seeds = commands::seeds(&cli.command)?;
        let manifest = RunManifest {
            tool: "lrspin".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: name.into(),
            argv: argv.to_vec(),
            inputs,
            seeds,
            threads: threads(cli),
            hash,
            wall_clock_secs: start.elapsed().as_secs_f64(),
            outputs: vec![OutputDigest {
                path: cli.out.as_ref().map_or("-".into(), |p| p.display().to_string()),
                sha256: sha256_hex(outcome.text.as_bytes()),
            }],
        };
        manifest.write(&mp)?;
    }
    Ok(outcome.passed)
}

/// Re-parse the stored arguments, run them again in memory and compare the
/// output digest with the stored one.
fn replay(path: &Path, outer: &Cli) -> Result<bool> {
    let m = RunManifest::load(path)?;
    let mut argv = vec!["lrspin".to_string()];
    argv.extend(m.argv.iter().cloned());
    let cli = Cli::try_parse_from(&argv).context("stored arguments no longer parse")?;
    if matches!(cli.command, Command::Replay(_)) {
        bail!("a replay manifest cannot replay itself");
    }
    let name = command_name(&cli.command);
    let inputs = inputs(&cli.command)?;
    let hash = input_hash(name, &inputs);
    let ctx = Ctx {
        hash: hash.clone(),
        exec: if outer.sequential { Exec::Sequential } else { Exec::Parallel },
    };
    let outcome = commands::run(&cli.command, &ctx)?;
    let digest = sha256_hex(outcome.text.as_bytes());
    let expected = m.outputs.first().map(|o| o.sha256.clone()).unwrap_or_default();
    let same = hash == m.hash && digest == expected;
    let report = serde_json::json!({
        "manifest": path.display().to_string(),
        "command": name,
        "hash_matches": hash == m.hash,
        "output_matches": digest == expected,
        "sha256": digest,
    });
    write_output(outer.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(same)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = setup_threads(&cli) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match execute(&cli, &argv[1..]) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
