use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lrspin_core::enumeration::{exact_partition, EnumOptions};
use lrspin_core::interactions::{CouplingKernel, FieldAssignment, InteractionSpec};
use lrspin_core::lattice::{BoxWindow, Norm};
use lrspin_core::randomfield::{convolve, delta, theta, DeltaEngine, OrderedPartition};
use lrspin_core::sampler::{run_chain, Algorithm, ChainSpec, InitialState};
use lrspin_core::spin_model::ModelInstance;
use lrspin_core::Exec;

fn model(shape: &[usize], q: usize, alpha: f64, beta: f64) -> ModelInstance {
    let k = CouplingKernel::long_range(2, 1.0, alpha, Norm::L2).unwrap();
    ModelInstance::zero_field(InteractionSpec::potts(q).unwrap(), &k, &BoxWindow::centered_shape(shape), beta).unwrap()
}

fn partition(w: &BoxWindow, q: usize, seed: u64) -> OrderedPartition {
    OrderedPartition::random(w, q, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chain_shift_equivariance(seed in any::<u64>(), shift in 1u8..3, beta in 0.0f64..1.5, heat in any::<bool>()) {
        let mut spec = ChainSpec::new(model(&[3, 3], 3, 3.0, beta), 40, 5, seed);
        spec.keep_trace = true;
        spec.initial = InitialState::Random;
        spec.algorithm = if heat { Algorithm::HeatBath } else { Algorithm::Metropolis };
        let a = run_chain(&spec).unwrap();
        spec.exterior = shift;
        let b = run_chain(&spec).unwrap();
        let shifted: Vec<u8> = a.origin_trace.iter().map(|&s| (s + shift) % 3).collect();
        prop_assert_eq!(b.origin_trace, shifted);
        prop_assert_eq!(a.acceptance.to_bits(), b.acceptance.to_bits());
    }

    #[test]
    fn chain_statistics_are_consistent(seed in any::<u64>(), beta in 0.0f64..1.0) {
        let spec = ChainSpec::new(model(&[2, 3], 2, 2.5, beta), 60, 10, seed);
        let s = run_chain(&spec).unwrap();
        prop_assert!((s.occupancy.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(s.ess <= s.samples as f64 && s.ess > 0.0);
        prop_assert!((0.0..=1.0).contains(&s.acceptance));
    }

    #[test]
    fn theta_composition_and_torsion(seed in any::<u64>(), q in 2usize..6) {
        let w = BoxWindow::centered(2, 3);
        let a = partition(&w, q, seed);
        let b = partition(&w, q, seed ^ 0x5555);
        let h = FieldAssignment::gaussian(&w, q, 1.0, seed).unwrap();
        let ab = theta(&a, &theta(&b, &h).unwrap()).unwrap();
        let direct = theta(&convolve(&a, &b).unwrap(), &h).unwrap();
        prop_assert_eq!(ab.values(), direct.values());
        let mut t = h.clone();
        for _ in 0..q {
            t = theta(&a, &t).unwrap();
        }
        prop_assert_eq!(t.values(), h.values());
        prop_assert_eq!(convolve(&a, &a.inverse()).unwrap(), OrderedPartition::identity(&w, q));
    }

    #[test]
    fn delta_antisymmetry_and_site_shift(seed in any::<u64>(), beta in 0.1f64..2.0, c in -1.0f64..1.0) {
        let m = model(&[2, 2], 3, 3.0, beta);
        let w = m.window().clone();
        let a = partition(&w, 3, seed);
        let h = FieldAssignment::gaussian(&w, 3, 0.4, seed).unwrap();
        let o = EnumOptions::default();
        let d = delta(&a, &h, &m, &o).unwrap();
        let back = delta(&a.inverse(), &theta(&a, &h).unwrap(), &m, &o).unwrap();
        prop_assert!((d + back).abs() < 1e-12);
        let site = (seed % 4) as usize;
        let mut shifted = h.clone();
        for n in 0..3 {
            shifted.set(site, n, h.get(site, n) + c);
        }
        prop_assert!((delta(&a, &shifted, &m, &o).unwrap() - d).abs() < 1e-10);
        let engine = DeltaEngine::new(&m, &o).unwrap();
        prop_assert!((engine.delta(&a, &h).unwrap() - d).abs() < 1e-12);
    }

    #[test]
    fn log_z_thread_independent(beta in 0.0f64..2.0, alpha in 2.1f64..5.0) {
        let m = model(&[3, 3], 2, alpha, beta);
        let seq = exact_partition(&m, &EnumOptions { exec: Exec::Sequential, ..Default::default() }).unwrap();
        let par = exact_partition(&m, &EnumOptions { exec: Exec::Parallel, ..Default::default() }).unwrap();
        prop_assert_eq!(seq.log_z.to_bits(), par.log_z.to_bits());
        prop_assert_eq!(seq.marginals, par.marginals);
    }
}
