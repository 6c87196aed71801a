use std::sync::Arc;

use awesome::games::{self, DEFECT, HEADS, TAILS};
use awesome::{
    compute_equilibrium, Agent, Agent32, AgentEpoch, EpochSchedule, Game, JointProfile, Opponent,
    Policy, Strategy,
};

fn agents_for(game: &Game, seats: &[usize], actions_total: usize, seed: u64) -> Vec<Agent> {
    let game = Arc::new(game.clone());
    let schedule = Arc::new(EpochSchedule::harmonic(0.5, actions_total).unwrap());
    let eq = Arc::new(compute_equilibrium(&game, None).unwrap());
    seats
        .iter()
        .map(|&me| {
            Agent::new(
                game.clone(),
                me,
                schedule.clone(),
                eq.clone(),
                seed + me as u64,
            )
            .unwrap()
        })
        .collect()
}

/// Plays AWESOME seat 0 against an opponent in seat 1 until `epochs`
/// epochs close, returning the per-epoch reports.
fn against(game: &Game, policy: Policy, epochs: usize, seed: u64) -> Vec<AgentEpoch<f64>> {
    let mut agent = agents_for(game, &[0], 4, seed).remove(0);
    let mut opponent = Opponent::new(game, 1, policy, seed ^ 0xabcd).unwrap();
    let mut reports = Vec::new();
    let mut round = 0;
    while reports.len() < epochs {
        let joint = JointProfile(vec![agent.act(), opponent.act(game, round)]);
        opponent.observe(&joint);
        if let Some(close) = agent.observe(&joint).unwrap() {
            reports.push(close.report);
        }
        round += 1;
    }
    reports
}

#[test]
fn self_play_agents_close_epochs_together_with_equal_flags() {
    let game = games::matching_pennies();
    for seed in 0..4 {
        let mut agents = agents_for(&game, &[0, 1], 4, seed * 10);
        let mut closed = 0;
        while closed < 5 {
            let joint = JointProfile(agents.iter_mut().map(Agent::act).collect());
            let closes: Vec<_> = agents
                .iter_mut()
                .map(|a| a.observe(&joint).unwrap())
                .collect();
            assert_eq!(closes[0].is_some(), closes[1].is_some());
            if closes[0].is_some() {
                closed += 1;
                assert_eq!(agents[0].flags(), agents[1].flags());
                assert_eq!(agents[0].h_prev(), agents[1].h_prev());
            }
        }
    }
}

#[test]
fn equilibrium_playing_opponent_rarely_triggers_rejection() {
    // Epochs 0..=4: no rejection at t = 0 is certain for two actions, the
    // rest is bounded by the product of equilibrium factors.
    let game = games::matching_pennies();
    let (_, bound) = EpochSchedule::harmonic(0.5, 4)
        .unwrap()
        .never_restart_lower_bound(4)
        .unwrap();
    let trials = 60;
    let kept = (0..trials)
        .filter(|&seed| {
            let policy = Policy::Stationary {
                strategy: Strategy::uniform(2),
            };
            against(&game, policy, 5, seed)
                .iter()
                .all(|r| r.exit.appe && !r.restarted)
        })
        .count();
    let p = bound;
    let slack = 3.0 * (p * (1.0 - p) / trials as f64).sqrt();
    assert!(
        kept as f64 / trials as f64 >= p - slack,
        "{kept}/{trials} vs {p}"
    );
}

#[test]
fn pure_opponent_forces_rejection_then_a_switch_or_a_hold() {
    // Against pure Heads the first rejection comes at t = 1. A Tails pick
    // switches to Heads at t = 2 (gap 2 against margin 4/3), which the own
    // histogram then reports as nonstationary at t = 3.
    let game = games::matching_pennies();
    let mut picks = [0; 2];
    for seed in 0..24 {
        let reports = against(
            &game,
            Policy::Scripted {
                actions: vec![HEADS],
            },
            4,
            seed,
        );
        assert!(reports[0].exit.appe);
        let reject = &reports[1];
        assert!(!reject.exit.appe && reject.exit.delta);
        assert_eq!(reject.random_actions.len(), 1);
        let pick = reject.exit.phi.pure_action().unwrap();
        picks[pick] += 1;
        let grace = &reports[2];
        assert!(grace.stationarity.is_none());
        let br = grace.best_response.as_ref().unwrap();
        assert_eq!(br.switched, pick == TAILS);
        if pick == TAILS {
            assert!(reports[3].restarted);
            assert_eq!(reports[3].restarts, 1);
        } else {
            assert!(!reports[3].restarted);
            assert_eq!(reports[3].exit.phi.pure_action(), Some(HEADS));
        }
    }
    assert!(picks[HEADS] > 0 && picks[TAILS] > 0, "{picks:?}");
}

#[test]
fn restart_returns_to_the_initial_state_but_keeps_counting() {
    let game = games::matching_pennies();
    let restarted = (0..50).find_map(|seed| {
        let mut agent = agents_for(&game, &[0], 4, seed).remove(0);
        let mut opponent = Opponent::new(
            &game,
            1,
            Policy::Scripted {
                actions: vec![HEADS],
            },
            0,
        )
        .unwrap();
        for round in 0..20_000 {
            let joint = JointProfile(vec![agent.act(), opponent.act(&game, round)]);
            agent.observe(&joint).unwrap();
            if agent.restarts() > 0 {
                return Some(agent);
            }
        }
        None
    });
    let agent = restarted.expect("a Tails pick restarts within four epochs");
    assert_eq!(agent.restarts(), 1);
    assert_eq!(agent.t(), 0);
    assert!(agent.appe() && agent.aps() && !agent.delta());
    assert_eq!(agent.phi(), &Strategy::uniform(2));
    assert!(agent
        .h_prev()
        .iter()
        .chain(agent.h_curr())
        .all(|h| h.total() == 0));
    assert_eq!(agent.round_in_epoch(), 0);
    assert_eq!(agent.epoch_rounds(), 32);
}

#[test]
fn single_precision_agent_plays_dominant_strategy() {
    let game = Arc::new(games::prisoners_dilemma::<f32>());
    let schedule = Arc::new(awesome::Schedule::<f32>::harmonic(0.5, 4).unwrap());
    let eq = Arc::new(compute_equilibrium(&game, None).unwrap());
    let mut agent = Agent32::new(game, 0, schedule, eq, 3).unwrap();
    let mut closes = 0;
    while closes < 3 {
        assert_eq!(agent.act(), DEFECT);
        if agent
            .observe(&JointProfile(vec![DEFECT, DEFECT]))
            .unwrap()
            .is_some()
        {
            closes += 1;
            assert!(agent.appe());
        }
    }
    assert_eq!(agent.t(), 3);
}
