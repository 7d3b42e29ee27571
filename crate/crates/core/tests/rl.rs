mod common;

use proptest::prelude::*;
use ndarray::Array2;
use qweight::rl::{compute_rewards, Agent, AgentConfig, QTable, DEFAULT_ACTIONS};
use rand::Rng;

fn greedy() -> AgentConfig {
    AgentConfig { epsilon: 0.0, ..AgentConfig::default() }
}

#[test]
fn fresh_agent_is_zero() {
    let agent = Agent::new(3, AgentConfig::default()).unwrap();
    assert_eq!(agent.table().q.dim(), (3, 5));
    assert!(agent.table().q.iter().all(|&v| v == 0.0));
    assert_eq!(agent.table().last_action, vec![0, 0, 0]);
    assert_eq!(agent.epsilon(), 1.0);
    assert_eq!(agent, Agent::new(3, AgentConfig::default()).unwrap());
}

#[test]
fn greedy_fresh_agent_gives_default_weight() {
    let mut agent = Agent::new(10, greedy()).unwrap();
    let w = agent.assign_weights(&(0..10).collect::<Vec<_>>(), &mut common::rng(1)).unwrap();
    assert!(w.iter().all(|&x| x == 0.25));
}

fn agent_with_row(row: [f64; 5], last: usize, config: AgentConfig) -> Agent {
    let table = QTable { q: Array2::from_shape_vec((1, 5), row.to_vec()).unwrap(), last_action: vec![last], epsilon: config.epsilon };
    Agent::from_table(config, table).unwrap()
}

#[test]
fn greedy_follows_argmax() {
    let mut agent = agent_with_row([0.0, 0.0, 0.0, 0.7, 0.0], 0, greedy());
    assert_eq!(agent.assign_weights(&[0], &mut common::rng(1)).unwrap(), vec![1.25]);
    assert_eq!(agent.table().last_action, vec![3]);
}

#[test]
fn same_state_bootstrap_example() {
    let mut agent = agent_with_row([0.0, 0.0, 0.5, 0.0, 0.0], 2, greedy());
    agent.update_q(&[0], &[1]).unwrap();
    assert!((agent.table().q[[0, 2]] - 0.595).abs() < 1e-15);
    let mut zero = agent_with_row([0.0; 5], 2, greedy());
    zero.update_q(&[0], &[1]).unwrap();
    assert_eq!(zero.table().q[[0, 2]], 0.1);
}

#[test]
fn update_examples() {
    let mut agent = Agent::new(2, greedy()).unwrap();
    agent.update_q(&[0], &[0]).unwrap();
    assert!(agent.table().q.iter().all(|&v| v == 0.0));
    agent.update_q(&[0], &[1]).unwrap();
    assert_eq!(agent.table().q[[0, 0]], 0.1);
    assert!(agent.update_q(&[0], &[2]).is_err());
    assert!(agent.update_q(&[5], &[1]).is_err());
}

#[test]
fn rewards_are_elementwise_equality() {
    assert_eq!(compute_rewards(&[1, 0, 1], &[1, 0, 1]).unwrap(), vec![1, 1, 1]);
    assert_eq!(compute_rewards(&[0, 1], &[1, 0]).unwrap(), vec![0, 0]);
    let mut r = common::rng(2);
    let p: Vec<usize> = (0..500).map(|_| r.random_range(0..2)).collect();
    let y: Vec<usize> = (0..500).map(|_| r.random_range(0..2)).collect();
    let rewards = compute_rewards(&p, &y).unwrap();
    for i in 0..500 {
        assert_eq!(rewards[i] == 1, p[i] == y[i]);
    }
    assert!(compute_rewards(&[0], &[0, 1]).is_err());
}

#[test]
fn repeated_success_converges_toward_bound() {
    let mut agent = Agent::new(1, greedy()).unwrap();
    let mut r = common::rng(0);
    let mut last = 0.0;
    // Q follows q <- q + α(1 + γq − q), contracting toward 1/(1−γ) = 10.
    for _ in 0..2000 {
        let w = agent.assign_weights(&[0], &mut r).unwrap();
        assert_eq!(w, vec![0.25]);
        agent.update_q(&[0], &[1]).unwrap();
        let q = agent.table().q[[0, 0]];
        assert!(q > last);
        last = q;
    }
    assert!(last <= 10.0 && last > 9.99, "{last}");
}

#[test]
fn seeded_exploration_is_reproducible() {
    let idx: Vec<usize> = (0..1000).collect();
    let run = || Agent::new(1000, AgentConfig::default()).unwrap().assign_weights(&idx, &mut common::rng(77)).unwrap();
    assert_eq!(run(), run());
}

proptest! {
    #[test]
    fn q_values_stay_bounded(seed in 0u64..10_000, gamma in 0.0f64..0.99, alpha in 0.01f64..1.0) {
        let config = AgentConfig { gamma, alpha, ..AgentConfig::default() };
        let mut agent = Agent::new(4, config).unwrap();
        let mut r = common::rng(seed);
        for _ in 0..200 {
            let idx: Vec<usize> = (0..4).filter(|_| r.random_bool(0.7)).collect();
            agent.assign_weights(&idx, &mut r).unwrap();
            let rewards: Vec<u8> = idx.iter().map(|_| r.random_range(0..2)).collect();
            agent.update_q(&idx, &rewards).unwrap();
        }
        let bound = 1.0 / (1.0 - gamma);
        prop_assert!(agent.table().q.iter().all(|&v| (0.0..=bound + 1e-12).contains(&v)));
        prop_assert!(agent.table().last_action.iter().all(|&a| a < 5));
    }

    #[test]
    fn epsilon_follows_geometric_schedule(eps0 in 0.0f64..=1.0, decay in 0.5f64..=1.0, passes in 0usize..50) {
        let mut agent = Agent::new(2, AgentConfig { epsilon: eps0, epsilon_decay: decay, ..AgentConfig::default() }).unwrap();
        let mut prev = agent.epsilon();
        let mut r = common::rng(1);
        for _ in 0..passes {
            agent.assign_weights(&[0, 1], &mut r).unwrap();
            prop_assert!(agent.epsilon() <= prev);
            prev = agent.epsilon();
        }
        prop_assert!((agent.epsilon() - eps0 * decay.powi(passes as i32)).abs() < 1e-12);
    }

    #[test]
    fn weights_come_from_the_action_set(seed in 0u64..1000, eps in 0.0f64..=1.0) {
        let mut agent = Agent::new(50, AgentConfig { epsilon: eps, ..AgentConfig::default() }).unwrap();
        let w = agent.assign_weights(&(0..50).collect::<Vec<_>>(), &mut common::rng(seed)).unwrap();
        prop_assert!(w.iter().all(|x| DEFAULT_ACTIONS.contains(x)));
    }

    #[test]
    fn update_touches_only_listed_rows(seed in 0u64..1000) {
        let mut agent = Agent::new(20, AgentConfig::default()).unwrap();
        let mut r = common::rng(seed);
        let all: Vec<usize> = (0..20).collect();
        agent.assign_weights(&all, &mut r).unwrap();
        agent.update_q(&all, &vec![1; 20]).unwrap();
        let before = agent.table().q.clone();
        let subset: Vec<usize> = (0..20).filter(|_| r.random_bool(0.3)).collect();
        let rewards: Vec<u8> = subset.iter().map(|_| r.random_range(0..2)).collect();
        agent.update_q(&subset, &rewards).unwrap();
        for i in (0..20).filter(|i| !subset.contains(i)) {
            for a in 0..5 {
                prop_assert_eq!(agent.table().q[[i, a]].to_bits(), before[[i, a]].to_bits());
            }
        }
    }
}
