//! Classic stage games used throughout the tests and examples.

use crate::game::StageGame;
use crate::scalar::Scalar;

pub const HEADS: usize = 0;
pub const TAILS: usize = 1;
pub const COOPERATE: usize = 0;
pub const DEFECT: usize = 1;
pub const OPERA: usize = 0;
pub const FOOTBALL: usize = 1;
pub const ROCK: usize = 0;
pub const PAPER: usize = 1;
pub const SCISSORS: usize = 2;

fn names(lists: &[&[&str]]) -> Vec<Vec<String>> {
    lists
        .iter()
        .map(|l| l.iter().map(|s| s.to_string()).collect())
        .collect()
}

fn grid<S: Scalar>(m: &[&[f64]]) -> Vec<Vec<S>> {
    m.iter()
        .map(|r| r.iter().map(|&x| S::of(x)).collect())
        .collect()
}

/// Player 0 wins +1 on a match, player 1 wins +1 on a mismatch.
pub fn matching_pennies<S: Scalar>() -> StageGame<S> {
    let row = grid(&[&[1.0, -1.0], &[-1.0, 1.0]]);
    let col = grid(&[&[-1.0, 1.0], &[1.0, -1.0]]);
    StageGame::bimatrix(&row, &col)
        .and_then(|g| g.with_action_names(names(&[&["Heads", "Tails"], &["Heads", "Tails"]])))
        .expect("static game")
}

/// Temptation 5, reward 3, punishment 1, sucker 0.
pub fn prisoners_dilemma<S: Scalar>() -> StageGame<S> {
    let row = grid(&[&[3.0, 0.0], &[5.0, 1.0]]);
    let col = grid(&[&[3.0, 5.0], &[0.0, 1.0]]);
    StageGame::bimatrix(&row, &col)
        .and_then(|g| {
            g.with_action_names(names(&[&["Cooperate", "Defect"], &["Cooperate", "Defect"]]))
        })
        .expect("static game")
}

/// (Opera, Opera) pays (2, 1), (Football, Football) pays (1, 2), mismatches pay 0.
pub fn battle_of_the_sexes<S: Scalar>() -> StageGame<S> {
    let row = grid(&[&[2.0, 0.0], &[0.0, 1.0]]);
    let col = grid(&[&[1.0, 0.0], &[0.0, 2.0]]);
    StageGame::bimatrix(&row, &col)
        .and_then(|g| g.with_action_names(names(&[&["Opera", "Football"], &["Opera", "Football"]])))
        .expect("static game")
}

/// Win +1, lose -1, tie 0.
pub fn rock_paper_scissors<S: Scalar>() -> StageGame<S> {
    let row = grid(&[&[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0], &[-1.0, 1.0, 0.0]]);
    let col: Vec<Vec<S>> = row
        .iter()
        .map(|r: &Vec<S>| r.iter().map(|&x| -x).collect())
        .collect();
    let rps: &[&str] = &["Rock", "Paper", "Scissors"];
    StageGame::bimatrix(&row, &col)
        .and_then(|g| g.with_action_names(names(&[rps, rps])))
        .expect("static game")
}

/// Three players with binary actions; everyone gets 1 iff all actions agree.
pub fn coordination3<S: Scalar>() -> StageGame<S> {
    StageGame::from_fn(vec![2, 2, 2], |p| {
        let u = if p[0] == p[1] && p[1] == p[2] {
            S::one()
        } else {
            S::zero()
        };
        vec![u; 3]
    })
    .expect("static game")
}

/// Three-player game without any pure equilibrium: players 0 and 1 play
/// matching pennies, player 2 is paid for matching player 0.
pub fn three_player_cycle<S: Scalar>() -> StageGame<S> {
    StageGame::from_fn(vec![2, 2, 2], |p| {
        let u0 = if p[0] == p[1] { 1.0 } else { -1.0 };
        let u1 = -u0;
        let u2 = if p[2] == p[0] { 1.0 } else { -1.0 };
        vec![S::of(u0), S::of(u1), S::of(u2)]
    })
    .expect("static game")
}
