//! Replay, exploration and evaluation invariants.

use proptest::prelude::*;
use qcloud_core::agents::{episode_seeds, evaluate, Agent, EpsilonSchedule, Mlp, ReplayBuffer, DEFAULT_MLP_SHAPE};
use qcloud_core::env::{CloudEnv, EnvConfig, NodeTable, Transition};
use qcloud_core::model::{Approximator, PqcModel};
use qcloud_core::pqc::{Backend, InputMode, ParameterSet, PqcArchitecture};
use qcloud_core::workload::{generate_workload, GeneratorConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tagged(i: usize) -> Transition {
    Transition {
        s: vec![i as f64],
        a: 0,
        r: i as f64,
        s_next: vec![],
        terminal: false,
    }
}

fn default_env() -> CloudEnv {
    let pool = generate_workload(200, 3, &GeneratorConfig::default()).unwrap();
    CloudEnv::new(NodeTable::default(), pool, EnvConfig::default()).unwrap()
}

proptest! {
    #[test]
    fn replay_keeps_the_newest(cap in 1usize..50, pushes in 0usize..200) {
        let mut buf = ReplayBuffer::new(cap).unwrap();
        for i in 0..pushes {
            buf.push(tagged(i));
        }
        let kept: Vec<f64> = buf.iter().map(|t| t.r).collect();
        let want: Vec<f64> = (pushes.saturating_sub(cap)..pushes).map(|i| i as f64).collect();
        prop_assert_eq!(kept, want);
    }

    #[test]
    fn replay_samples_are_distinct_members(cap in 1usize..50, pushes in 1usize..120, seed in any::<u64>()) {
        let mut buf = ReplayBuffer::new(cap).unwrap();
        for i in 0..pushes {
            buf.push(tagged(i));
        }
        let batch = (buf.len() + 1) / 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut got: Vec<u64> = buf.sample(batch, &mut rng).unwrap().iter().map(|t| t.r as u64).collect();
        got.sort_unstable();
        got.dedup();
        prop_assert_eq!(got.len(), batch);
        prop_assert!(got.iter().all(|&r| (r as usize) < pushes && r as usize >= pushes.saturating_sub(cap)));
        prop_assert!(buf.sample(buf.len() + 1, &mut rng).is_err());
    }

    #[test]
    fn epsilon_decays_to_its_floor(start in 0.5f64..=1.0, min in 0.0f64..0.5, decay in 0.5f64..1.0, k in 0usize..2000) {
        let e = EpsilonSchedule { start, min, decay };
        prop_assert!(e.value(k + 1) <= e.value(k));
        prop_assert!(e.value(k) >= min && e.value(k) <= start);
    }
}

#[test]
fn default_mlp_outweighs_default_pqc_thirtyfold() {
    let mlp = Mlp::zeros(&DEFAULT_MLP_SHAPE).unwrap();
    let arch = PqcArchitecture::default();
    assert_eq!(mlp.n_params(), 9221);
    assert_eq!(arch.n_params(), 189);
    assert!(mlp.n_params() as f64 / arch.n_params() as f64 > 30.0);
}

#[test]
fn agents_see_identical_task_streams() {
    let mut env = default_env();
    let arch = PqcArchitecture::default();
    let params = ParameterSet::init(&arch, &mut ChaCha8Rng::seed_from_u64(1));
    let pqc = Agent::Pqc(PqcModel::new(arch, params, InputMode::Raw, Backend::Statevector).unwrap());
    let greedy = evaluate(&Agent::Greedy, &mut env, 5, 77).unwrap();
    let other = evaluate(&pqc, &mut env, 5, 77).unwrap();
    for (a, b) in greedy.traces.iter().zip(&other.traces) {
        assert_eq!(a.task_ids(), b.task_ids());
    }
    assert_ne!(episode_seeds(77, 5), episode_seeds(78, 5));
}

#[test]
fn evaluation_is_repeatable() {
    let mut env = default_env();
    let a = evaluate(&Agent::Greedy, &mut env, 4, 5).unwrap();
    let b = evaluate(&Agent::Greedy, &mut env, 4, 5).unwrap();
    assert_eq!(a.episodes, b.episodes);
}
