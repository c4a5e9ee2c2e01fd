use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use lrspin_core::bounds::{compute_constants, exhaustive_verify, ExhaustiveOptions, VerifySetup};
use lrspin_core::enumeration::{exact_partition, EnumOptions};
use lrspin_core::interactions::{CouplingKernel, FieldKind, InteractionSpec};
use lrspin_core::lattice::{BoxWindow, Norm};
use lrspin_core::randomfield::{tail_check, OrderedPartition};
use lrspin_core::sampler::{phase_sweep, run_replicas, Algorithm, ChainSpec, InitialState, SweepSpec};
use lrspin_core::spin_model::ModelInstance;
use lrspin_core::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn kernel(alpha: f64) -> CouplingKernel {
    CouplingKernel::long_range(2, 1.0, alpha, Norm::L2).unwrap()
}

fn model(shape: &[usize], q: usize, beta: f64) -> ModelInstance {
    ModelInstance::zero_field(InteractionSpec::potts(q).unwrap(), &kernel(3.0), &BoxWindow::centered_shape(shape), beta)
        .unwrap()
}

fn partition_function(c: &mut Criterion) {
    let m = model(&[3, 4], 3, 0.5);
    let mut g = c.benchmark_group("exact_partition_3x4_q3");
    for (name, exec) in MODES {
        let opts = EnumOptions { exec, ..Default::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(exact_partition(&m, &opts).unwrap().log_z))
        });
    }
    g.finish();
}

fn energy_bound(c: &mut Criterion) {
    let w = BoxWindow::centered(2, 3);
    let setups = vec![VerifySetup::new(
        model(&[3, 3], 3, 0.0),
        compute_constants(2, 3.0, 1.0, 3, 1.0, 1.0).unwrap(),
        None,
    )
    .unwrap()];
    let mut g = c.benchmark_group("exhaustive_verify_3x3_q3");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = ExhaustiveOptions { exec, ..Default::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(exhaustive_verify(&w, &setups, &opts).unwrap()))
        });
    }
    g.finish();
}

fn sampler(c: &mut Criterion) {
    let mut spec = ChainSpec::new(model(&[8, 8], 3, 0.3), 400, 40, 1);
    spec.algorithm = Algorithm::HeatBath;
    let mut g = c.benchmark_group("sampler");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("replicas_8x8x4", name), |b| {
            b.iter(|| black_box(run_replicas(&spec, 4, exec).unwrap()))
        });
    }
    let sweep = SweepSpec {
        d: 2,
        side: 6,
        alpha: Some(3.0),
        exterior: 0,
        field: FieldKind::Zero,
        disorder_seeds: vec![],
        betas: vec![0.1, 0.3, 0.5, 1.0],
        replicas: 2,
        sweeps: 300,
        burn_in: 30,
        seed: 2,
        algorithm: Algorithm::Metropolis,
        initial: InitialState::Ground,
    };
    let inter = InteractionSpec::potts(3).unwrap();
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("phase_sweep_6x6", name), |b| {
            b.iter(|| black_box(phase_sweep(&inter, &kernel(3.0), &sweep, exec).unwrap()))
        });
    }
    g.finish();
}

fn random_field(c: &mut Criterion) {
    let m = model(&[2, 3], 3, 1.0);
    let a = OrderedPartition::random(m.window(), 3, &mut ChaCha8Rng::seed_from_u64(5));
    let lambdas = [0.0, 0.05, 0.1, 0.2];
    let mut g = c.benchmark_group("tail_check_2x3_q3");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = EnumOptions { exec, ..Default::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(tail_check(&a, &m, 0.1, 500, &lambdas, 3, &opts).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, partition_function, energy_bound, sampler, random_field);
criterion_main!(benches);
