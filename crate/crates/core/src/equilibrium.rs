//! Deterministic Nash equilibrium precomputation.
//!
//! Every agent that calls [`compute_equilibrium`] on the same game gets the
//! bit-identical profile: the first pure equilibrium in lexicographic
//! profile order for three or more players, and the first support pair
//! (ordered by total support size, then by the supports themselves) that
//! yields an equilibrium for two players.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{regret, GameError, JointProfile, MixedStrategy, StageGame};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("support enumeration needs exactly 2 players, game has {0}")]
    NotTwoPlayer(usize),
    #[error(
        "equilibrium unavailable: the {players}-player game has no pure equilibrium; \
         supply an equilibrium override (one probability vector per player)"
    )]
    Unavailable { players: usize },
    #[error("override is not an equilibrium: player {player} has regret {regret}")]
    NotEquilibrium { player: usize, regret: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Pure,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    PureEnumeration,
    #[serde(rename = "support-enumeration-2p")]
    SupportEnumeration2p,
    UserSupplied,
}

/// A verified equilibrium: one strategy per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct EquilibriumProfile<S> {
    pub strategies: Vec<MixedStrategy<S>>,
    pub kind: EquilibriumKind,
    pub provenance: Provenance,
}

impl<S: Scalar> EquilibriumProfile<S> {
    /// Wraps `strategies` after checking every player's regret.
    pub fn verified(
        game: &StageGame<S>,
        strategies: Vec<MixedStrategy<S>>,
        provenance: Provenance,
    ) -> Result<Self, EquilibriumError> {
        let regrets = regrets(game, &strategies)?;
        if let Some((player, &r)) = regrets
            .iter()
            .enumerate()
            .find(|(_, &r)| r > S::regret_tol())
        {
            return Err(EquilibriumError::NotEquilibrium {
                player,
                regret: r.as_f64(),
            });
        }
        let kind = if strategies.iter().all(|s| s.pure_action().is_some()) {
            EquilibriumKind::Pure
        } else {
            EquilibriumKind::Mixed
        };
        Ok(Self {
            strategies,
            kind,
            provenance,
        })
    }

    pub fn from_pure(game: &StageGame<S>, profile: &JointProfile, provenance: Provenance) -> Self {
        let strategies = profile
            .actions()
            .iter()
            .enumerate()
            .map(|(p, &a)| MixedStrategy::pure(game.action_count(p), a))
            .collect();
        Self {
            strategies,
            kind: EquilibriumKind::Pure,
            provenance,
        }
    }

    pub fn strategy(&self, player: usize) -> &MixedStrategy<S> {
        &self.strategies[player]
    }
}

/// Regret of every player under `profile`.
pub fn regrets<S: Scalar>(
    game: &StageGame<S>,
    profile: &[MixedStrategy<S>],
) -> Result<Vec<S>, GameError> {
    (0..game.num_players())
        .map(|p| regret(game, profile, p))
        .collect()
}

/// All pure profiles where no unilateral deviation strictly gains, in
/// lexicographic profile order.
pub fn enumerate_pure_nash<S: Scalar>(game: &StageGame<S>) -> Vec<JointProfile> {
    let n = game.num_players();
    let mut found = Vec::new();
    let mut deviation = vec![0; n];
    'profiles: for profile in game.profiles() {
        for player in 0..n {
            let current = game.payoff(profile.actions(), player);
            deviation.copy_from_slice(profile.actions());
            for alt in 0..game.action_count(player) {
                deviation[player] = alt;
                if game.payoff(&deviation, player) > current {
                    continue 'profiles;
                }
            }
        }
        found.push(profile);
    }
    found
}

/// Nonempty subsets of `0..m` as sorted index lists, in lexicographic order.
fn subsets(m: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u64..(1 << m))
        .map(|mask| (0..m).filter(|&i| mask & (1 << i) != 0).collect())
        .collect();
    out.sort();
    out
}

/// Solves `a x = b` for a unique `x`; `None` when the system is rank
/// deficient or inconsistent.
fn solve_unique<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>, unknowns: usize) -> Option<Vec<S>> {
    let rows = a.len();
    let scale = a
        .iter()
        .flatten()
        .chain(&b)
        .fold(S::one(), |m, &x| m.max(x.abs()));
    let pivot_tol = S::pivot_tol() * scale;
    let mut pivot_row = 0;
    for col in 0..unknowns {
        let (best, mag) = (pivot_row..rows).map(|r| (r, a[r][col].abs())).fold(
            (pivot_row, S::zero()),
            |acc, x| if x.1 > acc.1 { x } else { acc },
        );
        if pivot_row >= rows || mag <= pivot_tol {
            return None;
        }
        a.swap(pivot_row, best);
        b.swap(pivot_row, best);
        for r in 0..rows {
            if r == pivot_row {
                continue;
            }
            let f = a[r][col] / a[pivot_row][col];
            if f == S::zero() {
                continue;
            }
            for c in col..unknowns {
                let v = a[pivot_row][c];
                a[r][c] = a[r][c] - f * v;
            }
            let v = b[pivot_row];
            b[r] = b[r] - f * v;
        }
        pivot_row += 1;
    }
    // Leftover rows must be satisfied.
    let residual_tol = S::regret_tol() * scale;
    if (unknowns..rows).any(|r| b[r].abs() > residual_tol) {
        return None;
    }
    Some((0..unknowns).map(|c| b[c] / a[c][c]).collect())
}

/// Mixed strategy over `support` (embedded in `len` actions) that makes the
/// opponent indifferent across `opp_support`. `payoff(own, opp)` is the
/// opponent's payoff.
fn indifference_strategy<S: Scalar>(
    len: usize,
    support: &[usize],
    opp_support: &[usize],
    payoff: impl Fn(usize, usize) -> S,
) -> Option<MixedStrategy<S>> {
    let k = support.len();
    // Unknowns: probabilities on `support`, then the opponent's value.
    let mut a = Vec::with_capacity(opp_support.len() + 1);
    let mut b = Vec::with_capacity(opp_support.len() + 1);
    for &j in opp_support {
        let mut row: Vec<S> = support.iter().map(|&i| payoff(i, j)).collect();
        row.push(-S::one());
        a.push(row);
        b.push(S::zero());
    }
    let mut norm = vec![S::one(); k];
    norm.push(S::zero());
    a.push(norm);
    b.push(S::one());
    let sol = solve_unique(a, b, k + 1)?;
    if sol[..k].iter().any(|&p| p < -S::clip_tol()) {
        return None;
    }
    let clipped: Vec<S> = sol[..k].iter().map(|&p| p.max(S::zero())).collect();
    let total: S = clipped.iter().copied().sum();
    if total <= S::zero() {
        return None;
    }
    let mut probs = vec![S::zero(); len];
    for (&i, &p) in support.iter().zip(&clipped) {
        probs[i] = p / total;
    }
    MixedStrategy::new(probs).ok()
}

fn same_profile<S: Scalar>(a: &[MixedStrategy<S>], b: &[MixedStrategy<S>]) -> bool {
    a.iter().zip(b).all(|(x, y)| {
        x.probs()
            .iter()
            .zip(y.probs())
            .all(|(&p, &q)| (p - q).abs() <= S::regret_tol())
    })
}

/// Support enumeration for two-player games. Singular or inconsistent
/// indifference systems are skipped.
pub fn support_enumeration_2p<S: Scalar>(
    game: &StageGame<S>,
) -> Result<Vec<EquilibriumProfile<S>>, EquilibriumError> {
    if game.num_players() != 2 {
        return Err(EquilibriumError::NotTwoPlayer(game.num_players()));
    }
    let (m, k) = (game.action_count(0), game.action_count(1));
    let rows = subsets(m);
    let cols = subsets(k);
    let mut pairs: Vec<(&Vec<usize>, &Vec<usize>)> = rows
        .iter()
        .flat_map(|i| cols.iter().map(move |j| (i, j)))
        .collect();
    // Stable sort keeps the lexicographic (I, J) order within each size.
    pairs.sort_by_key(|(i, j)| i.len() + j.len());

    let mut found: Vec<EquilibriumProfile<S>> = Vec::new();
    for (row_support, col_support) in pairs {
        // Row mixes to make the column player indifferent, and vice versa.
        let Some(x) =
            indifference_strategy(m, row_support, col_support, |i, j| game.payoff(&[i, j], 1))
        else {
            continue;
        };
        let Some(y) =
            indifference_strategy(k, col_support, row_support, |j, i| game.payoff(&[i, j], 0))
        else {
            continue;
        };
        let strategies = vec![x, y];
        let Ok(eq) =
            EquilibriumProfile::verified(game, strategies, Provenance::SupportEnumeration2p)
        else {
            continue;
        };
        if !found
            .iter()
            .any(|f| same_profile(&f.strategies, &eq.strategies))
        {
            found.push(eq);
        }
    }
    Ok(found)
}

/// The equilibrium every agent precomputes: the override if given (after
/// verification), else the first canonical equilibrium.
pub fn compute_equilibrium<S: Scalar>(
    game: &StageGame<S>,
    override_profile: Option<EquilibriumProfile<S>>,
) -> Result<EquilibriumProfile<S>, EquilibriumError> {
    if let Some(eq) = override_profile {
        EquilibriumProfile::verified(game, eq.strategies.clone(), eq.provenance)?;
        return Ok(eq);
    }
    if game.num_players() == 2 {
        return support_enumeration_2p(game)?
            .into_iter()
            .next()
            .ok_or(EquilibriumError::Unavailable { players: 2 });
    }
    enumerate_pure_nash(game)
        .first()
        .map(|p| EquilibriumProfile::from_pure(game, p, Provenance::PureEnumeration))
        .ok_or(EquilibriumError::Unavailable {
            players: game.num_players(),
        })
}

/// Verifies user-supplied probability vectors and marks them as an override.
pub fn user_override<S: Scalar>(
    game: &StageGame<S>,
    strategies: Vec<Vec<S>>,
) -> Result<EquilibriumProfile<S>, EquilibriumError> {
    let strategies = strategies
        .into_iter()
        .map(MixedStrategy::new)
        .collect::<Result<Vec<_>, _>>()?;
    EquilibriumProfile::verified(game, strategies, Provenance::UserSupplied)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{self, DEFECT, FOOTBALL, OPERA};

    #[test]
    fn pure_nash_examples() {
        assert_eq!(
            enumerate_pure_nash(&games::prisoners_dilemma::<f64>()),
            vec![JointProfile(vec![DEFECT, DEFECT])]
        );
        assert!(enumerate_pure_nash(&games::matching_pennies::<f64>()).is_empty());
        assert_eq!(
            enumerate_pure_nash(&games::battle_of_the_sexes::<f64>()),
            vec![
                JointProfile(vec![OPERA, OPERA]),
                JointProfile(vec![FOOTBALL, FOOTBALL])
            ]
        );
    }

    #[test]
    fn matching_pennies_mixed() {
        let eqs = support_enumeration_2p(&games::matching_pennies::<f64>()).unwrap();
        assert_eq!(eqs.len(), 1);
        assert_eq!(eqs[0].strategies[0].probs(), &[0.5, 0.5]);
        assert_eq!(eqs[0].strategies[1].probs(), &[0.5, 0.5]);
        assert_eq!(eqs[0].kind, EquilibriumKind::Mixed);
    }

    #[test]
    fn battle_of_the_sexes_order() {
        let eqs = support_enumeration_2p(&games::battle_of_the_sexes::<f64>()).unwrap();
        assert_eq!(eqs.len(), 3);
        assert_eq!(eqs[0].strategies[0].pure_action(), Some(OPERA));
        assert_eq!(eqs[0].strategies[1].pure_action(), Some(OPERA));
        assert_eq!(eqs[1].strategies[0].pure_action(), Some(FOOTBALL));
        let mixed = &eqs[2];
        assert!((mixed.strategies[0].prob(OPERA) - 2.0 / 3.0).abs() < 1e-12);
        assert!((mixed.strategies[1].prob(OPERA) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rps_uniform() {
        let eqs = support_enumeration_2p(&games::rock_paper_scissors::<f64>()).unwrap();
        let third = 1.0 / 3.0;
        assert!(eqs.iter().any(|e| e
            .strategies
            .iter()
            .all(|s| s.probs().iter().all(|&p| (p - third).abs() < 1e-12))));
    }

    #[test]
    fn compute_examples() {
        let mp = compute_equilibrium(&games::matching_pennies::<f64>(), None).unwrap();
        assert_eq!(mp.strategies[0].probs(), &[0.5, 0.5]);

        let c3 = compute_equilibrium(&games::coordination3::<f64>(), None).unwrap();
        assert_eq!(c3.provenance, Provenance::PureEnumeration);
        assert!(c3.strategies.iter().all(|s| s.pure_action() == Some(0)));

        let err = compute_equilibrium(&games::three_player_cycle::<f64>(), None).unwrap_err();
        assert_eq!(err, EquilibriumError::Unavailable { players: 3 });
    }

    #[test]
    fn override_passes_through() {
        let g = games::battle_of_the_sexes::<f64>();
        let ov = user_override(
            &g,
            vec![vec![2.0 / 3.0, 1.0 / 3.0], vec![1.0 / 3.0, 2.0 / 3.0]],
        )
        .unwrap();
        let got = compute_equilibrium(&g, Some(ov.clone())).unwrap();
        assert_eq!(got, ov);
        assert_eq!(got.provenance, Provenance::UserSupplied);
    }

    #[test]
    fn bad_override_rejected() {
        let g = games::prisoners_dilemma::<f64>();
        let err = user_override(&g, vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap_err();
        assert!(matches!(err, EquilibriumError::NotEquilibrium { .. }));
        assert!(user_override(&g, vec![vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn three_player_mixed_override() {
        let g = games::three_player_cycle::<f64>();
        let half = vec![0.5, 0.5];
        let ov = user_override(&g, vec![half.clone(), half.clone(), half]).unwrap();
        assert_eq!(compute_equilibrium(&g, Some(ov.clone())).unwrap(), ov);
    }

    #[test]
    fn single_precision_support_enumeration() {
        let eqs = support_enumeration_2p(&games::matching_pennies::<f32>()).unwrap();
        assert_eq!(eqs[0].strategies[0].probs(), &[0.5f32, 0.5]);
    }

    #[test]
    fn subsets_are_lexicographic() {
        assert_eq!(subsets(2), vec![vec![0], vec![0, 1], vec![1]]);
    }
}
