//! Game instances, the state space, legal actions, payoffs and the one-step
//! law of motion.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::WinProbModel;

/// Slack allowed when checking that win probabilities sum to at most one.
pub const PROB_TOL: f64 = 1e-12;

/// Amount of money, in whole units.
pub type Money = u32;

/// A validated game: `n` players, their starting fortunes, and the common goal.
///
/// The total money `M` always satisfies `goal <= M < 2 * goal`, so at most one
/// player can ever hold the goal and reaching it is possible from the start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct GameConfig {
    n_players: usize,
    initial_fortunes: Vec<Money>,
    goal: Money,
    total: Money,
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    n: usize,
    fortunes: Vec<Money>,
    goal: Money,
}

impl TryFrom<RawConfig> for GameConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        validate_config(raw.n, &raw.fortunes, raw.goal)
    }
}

impl From<GameConfig> for RawConfig {
    fn from(cfg: GameConfig) -> Self {
        RawConfig { n: cfg.n_players, fortunes: cfg.initial_fortunes, goal: cfg.goal }
    }
}

/// Checks the raw parameters of a game and computes the total money.
pub fn validate_config(n: usize, fortunes: &[Money], goal: Money) -> Result<GameConfig> {
    if n < 2 {
        return Err(Error::TooFewPlayers(n));
    }
    if fortunes.len() != n {
        return Err(Error::FortuneCount { expected: n, got: fortunes.len() });
    }
    if let Some((player, &value)) = fortunes.iter().enumerate().find(|(_, &x)| x < 1) {
        return Err(Error::NonPositiveFortune { player, value });
    }
    if goal == 0 {
        return Err(Error::ZeroGoal);
    }
    let total: u64 = fortunes.iter().map(|&x| u64::from(x)).sum();
    let total = Money::try_from(total)
        .map_err(|_| Error::InvalidParameter(format!("total money {total} overflows")))?;
    if total < goal {
        return Err(Error::TotalBelowGoal { total, goal });
    }
    if u64::from(total) >= 2 * u64::from(goal) {
        return Err(Error::TotalAtLeastTwiceGoal { total, goal });
    }
    Ok(GameConfig { n_players: n, initial_fortunes: fortunes.to_vec(), goal, total })
}

impl GameConfig {
    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn initial_fortunes(&self) -> &[Money] {
        &self.initial_fortunes
    }

    pub fn goal(&self) -> Money {
        self.goal
    }

    /// Total money `M` at the start of the game.
    pub fn total(&self) -> Money {
        self.total
    }

    pub fn initial_state(&self) -> State {
        State(self.initial_fortunes.clone())
    }

    /// Returns an error unless `s` has one entry per player and total at most `M`.
    pub fn check_state(&self, s: &State) -> Result<()> {
        let sum: u64 = s.0.iter().map(|&x| u64::from(x)).sum();
        if s.0.len() != self.n_players || sum > u64::from(self.total) {
            return Err(Error::StateOutOfSpace { state: s.0.clone() });
        }
        Ok(())
    }

    pub fn check_player(&self, j: usize) -> Result<()> {
        if j >= self.n_players {
            return Err(Error::PlayerOutOfRange { player: j, n: self.n_players });
        }
        Ok(())
    }
}

/// Fortune vector of all players. Ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(pub Vec<Money>);

impl State {
    pub fn fortunes(&self) -> &[Money] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&x| u64::from(x)).sum()
    }
}

impl From<Vec<Money>> for State {
    fn from(v: Vec<Money>) -> Self {
        State(v)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", content = "player", rename_all = "lowercase")]
pub enum StateClass {
    Winner(usize),
    Dead,
    Active,
}

impl StateClass {
    pub fn is_absorbing(self) -> bool {
        !matches!(self, StateClass::Active)
    }
}

/// All fortune vectors with entries in `0..=M` and total at most `M`, in
/// lexicographic order. There are `C(M + N, N)` of them.
pub fn enumerate_states(cfg: &GameConfig) -> Vec<State> {
    fn fill(prefix: &mut Vec<Money>, left: Money, n: usize, out: &mut Vec<State>) {
        if prefix.len() == n {
            out.push(State(prefix.clone()));
            return;
        }
        for x in 0..=left {
            prefix.push(x);
            fill(prefix, left - x, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    fill(&mut Vec::with_capacity(cfg.n_players), cfg.total, cfg.n_players, &mut out);
    out
}

pub fn classify_state(cfg: &GameConfig, s: &State) -> StateClass {
    if let Some(j) = s.0.iter().position(|&x| x >= cfg.goal) {
        return StateClass::Winner(j);
    }
    if s.total() < u64::from(cfg.goal) {
        StateClass::Dead
    } else {
        StateClass::Active
    }
}

/// Legal bets of player `j`: `1..=x_j` while the player is still short of the
/// goal, `{0}` when broke or at/above the goal.
pub fn action_set(cfg: &GameConfig, s: &State, j: usize) -> std::ops::RangeInclusive<Money> {
    let x = s.0[j];
    if x == 0 || x >= cfg.goal {
        0..=0
    } else {
        1..=x
    }
}

pub fn is_legal_bet(cfg: &GameConfig, s: &State, j: usize, bet: Money) -> bool {
    action_set(cfg, s, j).contains(&bet)
}

pub fn payoff(cfg: &GameConfig, s: &State, j: usize) -> u8 {
    u8::from(s.0[j] >= cfg.goal)
}

/// Bet vector played in one round.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BetProfile(pub Vec<Money>);

impl BetProfile {
    pub fn bets(&self) -> &[Money] {
        &self.0
    }
}

/// Successor distribution of one round from an active state.
///
/// Player `j` wins with probability `F_j(bets)` and collects every other bet;
/// with the remaining probability the house collects all bets. Zero-probability
/// outcomes are dropped and coinciding successors merged. The result is sorted
/// by state.
pub fn transitions(
    cfg: &GameConfig,
    s: &State,
    bets: &BetProfile,
    model: &WinProbModel,
) -> Result<Vec<(State, f64)>> {
    cfg.check_state(s)?;
    if classify_state(cfg, s) != StateClass::Active {
        return Err(Error::NotActive { state: s.0.clone() });
    }
    if bets.0.len() != cfg.n_players {
        return Err(Error::FortuneCount { expected: cfg.n_players, got: bets.0.len() });
    }
    for (j, &a) in bets.0.iter().enumerate() {
        if !is_legal_bet(cfg, s, j, a) {
            return Err(Error::IllegalBet { state: s.0.clone(), player: j, bet: a });
        }
    }
    let probs = model.probabilities(&bets.0, &s.0)?;
    let sum: f64 = probs.iter().sum();
    if sum > 1.0 + PROB_TOL {
        return Err(Error::ProbabilitySum { bets: bets.0.clone(), sum });
    }
    Ok(successors(s, &bets.0, &probs))
}

/// The law of motion without validation. `probs` must have one entry per player.
pub(crate) fn successors(s: &State, bets: &[Money], probs: &[f64]) -> Vec<(State, f64)> {
    let pot: Money = bets.iter().sum();
    let losing: Vec<Money> = s.0.iter().zip(bets).map(|(&x, &a)| x - a).collect();
    let mut merged: BTreeMap<State, f64> = BTreeMap::new();
    for (j, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            let mut next = losing.clone();
            next[j] = s.0[j] + (pot - bets[j]);
            *merged.entry(State(next)).or_insert(0.0) += p;
        }
    }
    let house = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    if house > 0.0 {
        *merged.entry(State(losing)).or_insert(0.0) += house;
    }
    merged.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_constant, make_proportional, PhiFunction};

    fn cfg(fortunes: &[Money], goal: Money) -> GameConfig {
        validate_config(fortunes.len(), fortunes, goal).unwrap()
    }

    fn binomial(n: u64, k: u64) -> u64 {
        (1..=k).fold(1, |acc, i| acc * (n - k + i) / i)
    }

    #[test]
    fn config_examples() {
        let c = validate_config(2, &[3, 4], 5).unwrap();
        assert_eq!(c.total(), 7);
        assert_eq!(validate_config(2, &[3, 4], 8), Err(Error::TotalBelowGoal { total: 7, goal: 8 }));
        assert_eq!(
            validate_config(3, &[5, 5, 5], 7),
            Err(Error::TotalAtLeastTwiceGoal { total: 15, goal: 7 })
        );
        assert_eq!(validate_config(1, &[5], 5), Err(Error::TooFewPlayers(1)));
        assert!(matches!(
            validate_config(2, &[0, 7], 5),
            Err(Error::NonPositiveFortune { player: 0, value: 0 })
        ));
        let msg = validate_config(2, &[3, 4], 8).unwrap_err().to_string();
        assert!(msg.contains("M < G"), "{msg}");
        let msg = validate_config(3, &[5, 5, 5], 7).unwrap_err().to_string();
        assert!(msg.contains("M >= 2G"), "{msg}");
    }

    #[test]
    fn config_json_roundtrip_and_validation() {
        let c: GameConfig = serde_json::from_str(r#"{"n":2,"fortunes":[3,4],"goal":5}"#).unwrap();
        assert_eq!(c.total(), 7);
        assert_eq!(serde_json::to_string(&c).unwrap(), r#"{"n":2,"fortunes":[3,4],"goal":5}"#);
        assert!(serde_json::from_str::<GameConfig>(r#"{"n":2,"fortunes":[3,4],"goal":8}"#).is_err());
    }

    #[test]
    fn enumeration_small() {
        let states = enumerate_states(&cfg(&[1, 1], 2));
        let expect: Vec<State> =
            [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [2, 0]].iter().map(|v| State(v.to_vec())).collect();
        assert_eq!(states, expect);
        assert_eq!(enumerate_states(&cfg(&[3, 4], 5)).len(), 36);
        assert_eq!(enumerate_states(&cfg(&[1, 1, 2], 3)).len(), 35);
    }

    #[test]
    fn enumeration_matches_nested_loops() {
        for m in 2..=10u32 {
            for n in 2..=3usize {
                if m < n as u32 {
                    continue;
                }
                let mut fortunes = vec![1; n];
                fortunes[0] = m - (n as u32 - 1);
                let goal = m / 2 + 1;
                let c = cfg(&fortunes, goal);
                let states = enumerate_states(&c);
                let mut brute = 0u64;
                if n == 2 {
                    for a in 0..=m {
                        for b in 0..=m {
                            brute += u64::from(a + b <= m);
                        }
                    }
                } else {
                    for a in 0..=m {
                        for b in 0..=m {
                            for d in 0..=m {
                                brute += u64::from(a + b + d <= m);
                            }
                        }
                    }
                }
                assert_eq!(states.len() as u64, brute);
                assert_eq!(brute, binomial(u64::from(m) + n as u64, n as u64));
                assert!(states.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn classification_and_payoff() {
        let c = cfg(&[3, 4], 5);
        assert_eq!(classify_state(&c, &State(vec![7, 0])), StateClass::Winner(0));
        assert_eq!(classify_state(&c, &State(vec![2, 1])), StateClass::Dead);
        assert_eq!(classify_state(&c, &State(vec![3, 4])), StateClass::Active);
        assert_eq!(payoff(&c, &State(vec![7, 0]), 0), 1);
        assert_eq!(payoff(&c, &State(vec![3, 4]), 0), 0);
        assert_eq!(payoff(&c, &State(vec![2, 1]), 1), 0);
        for s in enumerate_states(&c) {
            let winners = s.0.iter().filter(|&&x| x >= c.goal()).count();
            assert!(winners <= 1);
        }
    }

    #[test]
    fn action_sets() {
        let c = cfg(&[3, 4], 5);
        assert_eq!(action_set(&c, &State(vec![3, 4]), 0), 1..=3);
        assert_eq!(action_set(&c, &State(vec![0, 4]), 0), 0..=0);
        assert_eq!(action_set(&c, &State(vec![5, 2]), 0), 0..=0);
        assert_eq!(action_set(&c, &State(vec![7, 0]), 0), 0..=0);
    }

    #[test]
    fn bold_transition_constant_sum() {
        let c = cfg(&[3, 4], 5);
        let s = State(vec![3, 4]);
        let m = make_proportional(PhiFunction::Linear { param: 1.0 });
        let t = transitions(&c, &s, &BetProfile(vec![3, 4]), &m).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].0, State(vec![0, 7]));
        assert!((t[0].1 - 4.0 / 7.0).abs() < 1e-15);
        assert_eq!(t[1].0, State(vec![7, 0]));
        assert!((t[1].1 - 3.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn transition_with_house() {
        let c = cfg(&[4, 3], 5);
        let s = State(vec![4, 3]);
        let m = make_constant(0.25, 2).unwrap();
        let t = transitions(&c, &s, &BetProfile(vec![1, 3]), &m).unwrap();
        let expect = [(vec![3, 0], 0.5), (vec![3, 4], 0.25), (vec![7, 0], 0.25)];
        assert_eq!(t.len(), 3);
        for ((st, p), (es, ep)) in t.iter().zip(expect.iter()) {
            assert_eq!(st.0, *es);
            assert!((p - ep).abs() < 1e-15);
        }
    }

    #[test]
    fn transition_errors() {
        let c = cfg(&[3, 4], 5);
        let m = make_constant(0.5, 2).unwrap();
        assert!(matches!(
            transitions(&c, &State(vec![3, 4]), &BetProfile(vec![4, 4]), &m),
            Err(Error::IllegalBet { player: 0, bet: 4, .. })
        ));
        assert!(matches!(
            transitions(&c, &State(vec![7, 0]), &BetProfile(vec![0, 0]), &m),
            Err(Error::NotActive { .. })
        ));
        let bad = WinProbModel::Constant { c: 0.6, n: 2 };
        assert!(matches!(
            transitions(&c, &State(vec![3, 4]), &BetProfile(vec![1, 1]), &bad),
            Err(Error::ProbabilitySum { .. })
        ));
    }

    #[test]
    fn coinciding_outcomes_merge() {
        // With an empty pot every outcome is the same state. Built-in models
        // never let a zero bet win, so feed raw numbers.
        let s = State(vec![0, 3, 2]);
        let out = successors(&s, &[0, 0, 0], &[0.25, 0.0, 0.25]);
        assert_eq!(out, vec![(State(vec![0, 3, 2]), 1.0)]);
        let out = successors(&s, &[0, 1, 0], &[0.25, 0.0, 0.25]);
        assert_eq!(
            out,
            vec![(State(vec![0, 2, 2]), 0.5), (State(vec![0, 2, 3]), 0.25), (State(vec![1, 2, 2]), 0.25)]
        );
    }

    #[test]
    fn three_player_transition_sums_to_one() {
        let c3 = cfg(&[2, 2, 2], 4);
        let m = make_constant(1.0 / 3.0, 3).unwrap();
        let t = transitions(&c3, &State(vec![3, 2, 0]), &BetProfile(vec![1, 1, 0]), &m).unwrap();
        let total: f64 = t.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(t.len(), 3);
        assert!(t.iter().all(|(n, _)| n.total() <= 5));
    }
}
