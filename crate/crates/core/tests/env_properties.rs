use famsec_core::env::{self, Action, JointState, PursuerPolicy, RoadNet, Status, TaskParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn policy() -> impl Strategy<Value = PursuerPolicy> {
    prop_oneof![
        Just(PursuerPolicy::RandomWalk),
        Just(PursuerPolicy::LazyRandomWalk),
        Just(PursuerPolicy::Stationary),
    ]
}

fn network() -> impl Strategy<Value = RoadNet> {
    prop_oneof![Just(RoadNet::small()), Just(RoadNet::medium())]
}

proptest! {
    #[test]
    fn outcome_probabilities_normalize(
        net in network(),
        ugv_seed in 0usize..1000,
        pursuer_seed in 0usize..1000,
        action_seed in 0usize..8,
        p_trans in 0.0f64..=1.0,
        pursuer in policy(),
    ) {
        let n = net.node_count();
        let state = JointState::new(ugv_seed % n, pursuer_seed % n, &net);
        prop_assume!(state.status == Status::Running);
        let params = TaskParams { p_trans, pursuer, ..Default::default() };
        let legal = env::actions(&state, &net);
        let action = legal[action_seed % legal.len()];
        let dist = env::transition_dist(&state, action, &net, &params).unwrap();
        prop_assert!(dist.iter().all(|&(_, p)| p >= 0.0));
        let total: f64 = dist.iter().map(|&(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12, "sum {}", total);
        for (s, _) in &dist {
            prop_assert_eq!(*s, JointState::new(s.ugv, s.pursuer, &net));
            if s.status == Status::Caught {
                prop_assert_eq!(s.ugv, s.pursuer);
            }
            if s.status == Status::Exited {
                prop_assert_eq!(s.ugv, net.exit_node());
            }
        }
    }

    #[test]
    fn terminal_states_absorb(net in network(), node in 0usize..1000, seed in any::<u64>()) {
        let n = net.node_count();
        let exited = JointState::new(net.exit_node(), (net.exit_node() + 1 + node % (n - 1)) % n, &net);
        let caught = JointState::new(node % n, node % n, &net);
        let truncated = JointState::new(net.ugv_start(), net.pursuer_start(), &net).truncated();
        let params = TaskParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in [exited, caught, truncated] {
            prop_assert!(s.is_terminal());
            prop_assert!(env::actions(&s, &net).is_empty());
            prop_assert!(env::transition_dist(&s, Action::Stay, &net, &params).is_err());
            prop_assert!(env::sample_transition(&s, Action::Stay, &net, &params, &mut rng).is_err());
        }
    }

    #[test]
    fn samples_land_in_support(seed in any::<u64>(), p_trans in 0.0f64..=1.0) {
        let net = RoadNet::small();
        let params = TaskParams { p_trans, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = net.initial_state();
        for action in env::actions(&s, &net) {
            let next = env::sample_transition(&s, action, &net, &params, &mut rng).unwrap();
            let dist = env::transition_dist(&s, action, &net, &params).unwrap();
            prop_assert!(dist.iter().any(|(t, p)| *t == next && *p > 0.0));
        }
    }
}

#[test]
fn deterministic_move_sample_is_the_support_point() {
    let net = RoadNet::from_edges("line", 3, &[[0, 1], [1, 2]], 1, 0, 2).unwrap();
    let params = TaskParams { p_trans: 1.0, ..Default::default() };
    let s = net.initial_state();
    let dist = env::transition_dist(&s, Action::MoveTo(1), &net, &params).unwrap();
    assert_eq!(dist.len(), 1);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let sampled = env::sample_transition(&s, Action::MoveTo(1), &net, &params, &mut rng).unwrap();
    assert_eq!(sampled, dist[0].0);
}

#[test]
fn joint_sampling_matches_joint_distribution() {
    let net = RoadNet::small();
    let params = TaskParams { p_trans: 0.7, ..Default::default() };
    let s = JointState::new(5, 8, &net);
    let action = Action::MoveTo(1);
    let dist = env::transition_dist(&s, action, &net, &params).unwrap();
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut counts = std::collections::HashMap::new();
    for _ in 0..n {
        let next = env::sample_transition(&s, action, &net, &params, &mut rng).unwrap();
        *counts.entry(next).or_insert(0usize) += 1;
    }
    for (state, p) in dist {
        let observed = *counts.get(&state).unwrap_or(&0) as f64;
        let expected = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((observed - expected).abs() <= 3.0 * sigma, "{state:?}: {observed} vs {expected}");
    }
}

#[test]
fn network_file_roundtrip_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.json");
    std::fs::write(&path, RoadNet::small().to_json()).unwrap();
    assert_eq!(RoadNet::load(&path).unwrap(), RoadNet::small());

    let disconnected = r#"{"name":"d","node_count":4,"edges":[[0,1],[2,3]],"ugv_start":0,"pursuer_start":1,"exit_node":3}"#;
    assert!(RoadNet::from_json(disconnected).is_err());
    let unknown = r#"{"name":"d","node_count":2,"edges":[[0,1]],"ugv_start":0,"pursuer_start":1,"exit_node":1,"extra":1}"#;
    assert!(RoadNet::from_json(unknown).is_err());
}
