//! Strategy profiles, their exact values, single-player best responses, and
//! certification of the all-bold profile as a Nash equilibrium.
//!
//! Total money never increases from one round to the next, and it only stays
//! put when somebody wins the round. Every solve therefore walks the active
//! states level by level in increasing total money: all successors outside the
//! current level are already known, and only the within-level coupling needs a
//! linear solve (evaluation) or value iteration (best response).

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    action_set, classify_state, enumerate_states, is_legal_bet, successors, GameConfig, Money, State,
    StateClass, PROB_TOL,
};
use crate::inequality::hypothesis_check;
use crate::models::WinProbModel;

/// Stopping threshold (sup-norm change) for iterative solves.
pub const ITER_TOL: f64 = 1e-12;
/// Sweep cap for iterative solves.
pub const ITER_CAP: usize = 1_000_000;
/// Default slack for the Nash comparison.
pub const NASH_TOL: f64 = 1e-9;
/// Two action values closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-10;
/// Largest money level solved by dense elimination; bigger ones iterate.
const DENSE_LIMIT: usize = 2_000;

/// A stationary deterministic strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    /// Stake the whole fortune.
    Bold,
    /// Stake one unit.
    Timid,
    /// Explicit bets at listed states, `fallback` everywhere else.
    Table { entries: Vec<(State, Money)>, fallback: Box<Strategy> },
}

pub fn bold_strategy() -> Strategy {
    Strategy::Bold
}

pub fn timid_strategy() -> Strategy {
    Strategy::Timid
}

impl Strategy {
    /// Builds a table strategy; entries are sorted and later duplicates win.
    pub fn table(entries: impl IntoIterator<Item = (State, Money)>, fallback: Strategy) -> Strategy {
        let mut map: HashMap<State, Money> = HashMap::new();
        for (s, a) in entries {
            map.insert(s, a);
        }
        let mut entries: Vec<(State, Money)> = map.into_iter().collect();
        entries.sort();
        Strategy::Table { entries, fallback: Box::new(fallback) }
    }

    /// Bet of player `j` at `s`. Returns 0 wherever the action set is `{0}`.
    pub fn bet(&self, cfg: &GameConfig, s: &State, j: usize) -> Money {
        let actions = action_set(cfg, s, j);
        if *actions.end() == 0 {
            return 0;
        }
        match self {
            Strategy::Bold => *actions.end(),
            Strategy::Timid => *actions.start(),
            Strategy::Table { entries, fallback } => match entries.binary_search_by(|(st, _)| st.cmp(s)) {
                Ok(i) => entries[i].1,
                Err(_) => fallback.bet(cfg, s, j),
            },
        }
    }

    /// Every table entry is a legal bet for player `j` at an active state.
    pub fn check_legal(&self, cfg: &GameConfig, j: usize) -> Result<()> {
        if let Strategy::Table { entries, fallback } = self {
            for (s, a) in entries {
                cfg.check_state(s)?;
                if classify_state(cfg, s) == StateClass::Active && !is_legal_bet(cfg, s, j, *a) {
                    return Err(Error::IllegalBet { state: s.0.clone(), player: j, bet: *a });
                }
            }
            fallback.check_legal(cfg, j)?;
        }
        Ok(())
    }
}

/// Bets of every player at `s` under `profile`.
pub fn profile_bets(cfg: &GameConfig, profile: &[Strategy], s: &State) -> Vec<Money> {
    profile.iter().enumerate().map(|(j, st)| st.bet(cfg, s, j)).collect()
}

/// Win probability of each player and the house from one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateValue {
    pub state: State,
    pub class: StateClass,
    pub q: Vec<f64>,
    pub house: f64,
}

/// Values of a profile at every state, in lexicographic state order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileValue {
    pub rows: Vec<StateValue>,
    #[serde(skip)]
    index: HashMap<State, usize>,
}

impl ProfileValue {
    pub fn at(&self, s: &State) -> Option<&StateValue> {
        self.index.get(s).map(|&i| &self.rows[i])
    }

    /// Win probability of player `j` from `s`.
    pub fn q(&self, s: &State, j: usize) -> Option<f64> {
        self.at(s).map(|r| r.q[j])
    }
}

/// Indexed state space with active states grouped by total money.
struct Space {
    states: Vec<State>,
    index: HashMap<State, usize>,
    class: Vec<StateClass>,
    levels: Vec<Vec<usize>>,
}

impl Space {
    fn new(cfg: &GameConfig) -> Space {
        let states = enumerate_states(cfg);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let class: Vec<StateClass> = states.iter().map(|s| classify_state(cfg, s)).collect();
        let mut levels = vec![Vec::new(); cfg.total() as usize + 1];
        for (i, s) in states.iter().enumerate() {
            if class[i] == StateClass::Active {
                levels[s.total() as usize].push(i);
            }
        }
        levels.retain(|l| !l.is_empty());
        Space { states, index, class, levels }
    }
}

/// One round from `s` with validated probabilities.
fn step(model: &WinProbModel, s: &State, bets: &[Money]) -> Result<Vec<(State, f64)>> {
    let probs = model.probabilities(bets, &s.0)?;
    let sum: f64 = probs.iter().sum();
    if sum > 1.0 + PROB_TOL {
        return Err(Error::ProbabilitySum { bets: bets.to_vec(), sum });
    }
    Ok(successors(s, bets, &probs))
}

fn check_profile(cfg: &GameConfig, model: &WinProbModel, profile: &[Strategy]) -> Result<()> {
    model.check_shape(cfg)?;
    if profile.len() != cfg.n_players() {
        return Err(Error::FortuneCount { expected: cfg.n_players(), got: profile.len() });
    }
    for (j, st) in profile.iter().enumerate() {
        st.check_legal(cfg, j)?;
    }
    Ok(())
}

/// Within-level successor: another unknown of the same level, or an already
/// solved state.
#[derive(Clone, Copy)]
enum Target {
    Local(usize),
    Known(usize),
}

/// Ensures every state in a level can leave it; otherwise the chain has a
/// closed class of active states and never absorbs.
fn check_leaves_level(space: &Space, level: &[usize], edges: &[Vec<(Target, f64)>]) -> Result<()> {
    let k = level.len();
    let mut escapes: Vec<bool> =
        edges.iter().map(|e| e.iter().any(|(t, p)| *p > 0.0 && matches!(t, Target::Known(_)))).collect();
    loop {
        let mut changed = false;
        for u in 0..k {
            if !escapes[u]
                && edges[u].iter().any(|(t, p)| *p > 0.0 && matches!(t, Target::Local(v) if escapes[*v]))
            {
                escapes[u] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let stuck: Vec<Vec<Money>> =
        (0..k).filter(|&u| !escapes[u]).map(|u| space.states[level[u]].0.clone()).collect();
    if stuck.is_empty() {
        Ok(())
    } else {
        Err(Error::NonAbsorbing { states: stuck })
    }
}

/// Solves the absorbing-chain equations `q(s) = sum p(s -> s') q(s')` for
/// every player and the house mass, with payoffs as boundary values.
pub fn evaluate_profile(
    cfg: &GameConfig,
    model: &WinProbModel,
    profile: &[Strategy],
) -> Result<ProfileValue> {
    check_profile(cfg, model, profile)?;
    let n = cfg.n_players();
    let space = Space::new(cfg);
    // columns 0..n are players, column n is the house
    let mut values: Vec<Vec<f64>> = space
        .class
        .iter()
        .map(|c| {
            let mut v = vec![0.0; n + 1];
            match c {
                StateClass::Winner(j) => v[*j] = 1.0,
                StateClass::Dead => v[n] = 1.0,
                StateClass::Active => {}
            }
            v
        })
        .collect();

    for level in &space.levels {
        let local: HashMap<usize, usize> = level.iter().enumerate().map(|(u, &i)| (i, u)).collect();
        let edges: Vec<Vec<(Target, f64)>> = level
            .par_iter()
            .map(|&i| {
                let s = &space.states[i];
                let bets = profile_bets(cfg, profile, s);
                Ok(step(model, s, &bets)?
                    .into_iter()
                    .map(|(t, p)| {
                        let ti = space.index[&t];
                        let target = match local.get(&ti) {
                            Some(&u) => Target::Local(u),
                            None => Target::Known(ti),
                        };
                        (target, p)
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        check_leaves_level(&space, level, &edges)?;

        let solved = if level.len() <= DENSE_LIMIT {
            solve_level_dense(&edges, &values, n + 1)?
        } else {
            solve_level_iterative(&edges, &values, n + 1)?
        };
        for (u, &i) in level.iter().enumerate() {
            values[i] = solved[u].clone();
        }
    }

    let rows = space
        .states
        .iter()
        .zip(&space.class)
        .zip(values)
        .map(|((s, &class), mut v)| {
            let house = v.pop().unwrap_or(0.0);
            StateValue { state: s.clone(), class, q: v, house }
        })
        .collect();
    Ok(ProfileValue { rows, index: space.index })
}

fn solve_level_dense(edges: &[Vec<(Target, f64)>], known: &[Vec<f64>], cols: usize) -> Result<Vec<Vec<f64>>> {
    let k = edges.len();
    let mut a = DMatrix::<f64>::identity(k, k);
    let mut b = DMatrix::<f64>::zeros(k, cols);
    for (u, e) in edges.iter().enumerate() {
        for &(t, p) in e {
            match t {
                Target::Local(v) => a[(u, v)] -= p,
                Target::Known(i) => {
                    for c in 0..cols {
                        b[(u, c)] += p * known[i][c];
                    }
                }
            }
        }
    }
    let x = a.lu().solve(&b).ok_or(Error::NonAbsorbing { states: Vec::new() })?;
    Ok((0..k).map(|u| (0..cols).map(|c| x[(u, c)]).collect()).collect())
}

fn solve_level_iterative(
    edges: &[Vec<(Target, f64)>],
    known: &[Vec<f64>],
    cols: usize,
) -> Result<Vec<Vec<f64>>> {
    let k = edges.len();
    let base: Vec<Vec<f64>> = edges
        .iter()
        .map(|e| {
            let mut v = vec![0.0; cols];
            for &(t, p) in e {
                if let Target::Known(i) = t {
                    for c in 0..cols {
                        v[c] += p * known[i][c];
                    }
                }
            }
            v
        })
        .collect();
    let mut x = vec![vec![0.0; cols]; k];
    let mut delta = f64::INFINITY;
    for _ in 0..ITER_CAP {
        delta = 0.0;
        for u in 0..k {
            for c in 0..cols {
                let mut v = base[u][c];
                for &(t, p) in &edges[u] {
                    if let Target::Local(w) = t {
                        v += p * x[w][c];
                    }
                }
                delta = delta.max((v - x[u][c]).abs());
                x[u][c] = v;
            }
        }
        if delta < ITER_TOL {
            return Ok(x);
        }
    }
    Err(Error::NotConverged { cap: ITER_CAP, delta })
}

/// Optimal values and policy of one player against fixed opponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub player: usize,
    pub rows: Vec<BestResponseRow>,
    pub sweeps: usize,
    #[serde(skip)]
    index: HashMap<State, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseRow {
    pub state: State,
    pub value: f64,
    /// Smallest optimal bet; `None` at absorbing states.
    pub bet: Option<Money>,
    /// Value of every legal bet at active states.
    pub action_values: Vec<(Money, f64)>,
}

impl BestResponse {
    pub fn row(&self, s: &State) -> Option<&BestResponseRow> {
        self.index.get(s).map(|&i| &self.rows[i])
    }

    pub fn value(&self, s: &State) -> Option<f64> {
        self.row(s).map(|r| r.value)
    }

    /// All bets within `TIE_TOL` of the optimum at `s`.
    pub fn optimal_bets(&self, s: &State) -> Vec<Money> {
        match self.row(s) {
            Some(r) => {
                r.action_values.iter().filter(|(_, v)| *v >= r.value - TIE_TOL).map(|(a, _)| *a).collect()
            }
            None => Vec::new(),
        }
    }

    /// The policy as a strategy table (bold outside active states).
    pub fn policy(&self) -> Strategy {
        Strategy::table(self.rows.iter().filter_map(|r| r.bet.map(|a| (r.state.clone(), a))), Strategy::Bold)
    }
}

/// Value iteration for player `j` with every other player following
/// `profile` (entry `j` of `profile` is ignored).
///
/// Levels are iterated Gauss-Seidel style from zero until the sup-norm change
/// drops below `ITER_TOL`. Ties go to the smallest bet.
pub fn best_response(
    cfg: &GameConfig,
    model: &WinProbModel,
    j: usize,
    profile: &[Strategy],
) -> Result<BestResponse> {
    cfg.check_player(j)?;
    check_profile(cfg, model, profile)?;
    let space = Space::new(cfg);
    let mut value: Vec<f64> =
        space.class.iter().map(|c| if *c == StateClass::Winner(j) { 1.0 } else { 0.0 }).collect();
    let mut best_bet: Vec<Option<Money>> = vec![None; space.states.len()];
    let mut action_values: Vec<Vec<(Money, f64)>> = vec![Vec::new(); space.states.len()];
    let mut sweeps = 0;

    for level in &space.levels {
        let local: HashMap<usize, usize> = level.iter().enumerate().map(|(u, &i)| (i, u)).collect();
        // per state, per bet: (bet, constant part, local edges)
        type Choice = (Money, f64, Vec<(usize, f64)>);
        let choices: Vec<Vec<Choice>> = level
            .par_iter()
            .map(|&i| {
                let s = &space.states[i];
                let mut bets = profile_bets(cfg, profile, s);
                action_set(cfg, s, j)
                    .map(|a| {
                        bets[j] = a;
                        let mut constant = 0.0;
                        let mut local_edges = Vec::new();
                        for (t, p) in step(model, s, &bets)? {
                            let ti = space.index[&t];
                            match local.get(&ti) {
                                Some(&u) => local_edges.push((u, p)),
                                None => constant += p * value[ti],
                            }
                        }
                        Ok((a, constant, local_edges))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;

        let eval = |x: &[f64], c: &Choice| c.1 + c.2.iter().map(|&(u, p)| p * x[u]).sum::<f64>();
        let mut x = vec![0.0; level.len()];
        let mut converged = false;
        let mut delta = f64::INFINITY;
        for _ in 0..ITER_CAP {
            sweeps += 1;
            delta = 0.0;
            for u in 0..level.len() {
                let v = choices[u].iter().map(|c| eval(&x, c)).fold(f64::NEG_INFINITY, f64::max);
                delta = delta.max((v - x[u]).abs());
                x[u] = v;
            }
            if delta < ITER_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NotConverged { cap: ITER_CAP, delta });
        }
        for (u, &i) in level.iter().enumerate() {
            let avs: Vec<(Money, f64)> = choices[u].iter().map(|c| (c.0, eval(&x, c))).collect();
            let top = avs.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
            best_bet[i] = avs.iter().find(|&&(_, v)| v >= top - TIE_TOL).map(|&(a, _)| a);
            value[i] = x[u];
            action_values[i] = avs;
        }
    }

    let rows = space
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| BestResponseRow {
            state: s.clone(),
            value: value[i],
            bet: best_bet[i],
            action_values: std::mem::take(&mut action_values[i]),
        })
        .collect();
    Ok(BestResponse { player: j, rows, sweeps, index: space.index })
}

/// Expected return of player `j` who bets `a` at `s` while everyone else is
/// bold, using the one-round continuation formula literally: after an
/// opponent's win the continuation is `F_j` at the bets of `s` with player
/// `j`'s coordinate replaced by `x_j - a`, and the house outcome is worth 0.
pub fn one_shot_deviation_value(
    cfg: &GameConfig,
    model: &WinProbModel,
    s: &State,
    j: usize,
    a: Money,
) -> Result<f64> {
    cfg.check_state(s)?;
    cfg.check_player(j)?;
    if classify_state(cfg, s) != StateClass::Active {
        return Err(Error::NotActive { state: s.0.clone() });
    }
    if !is_legal_bet(cfg, s, j, a) {
        return Err(Error::IllegalBet { state: s.0.clone(), player: j, bet: a });
    }
    let bold = profile_bets(cfg, &vec![Strategy::Bold; cfg.n_players()], s);
    let mut deviation = bold.clone();
    deviation[j] = a;
    let now = model.probabilities(&deviation, &s.0)?;
    let mut continuation = s.0.clone();
    continuation[j] = s.0[j] - a;
    let later = model.probabilities(&continuation, &s.0)?[j];
    let opponents: f64 = now.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, p)| p).sum();
    Ok(now[j] + opponents * later)
}

/// Exact value of "bet `a` at `s`, then bold" for player `j`, everyone else
/// bold throughout.
pub fn deviation_then_bold_value(
    cfg: &GameConfig,
    model: &WinProbModel,
    s: &State,
    j: usize,
    a: Money,
) -> Result<f64> {
    let mut profile = vec![Strategy::Bold; cfg.n_players()];
    profile[j] = Strategy::table([(s.clone(), a)], Strategy::Bold);
    let v = evaluate_profile(cfg, model, &profile)?;
    v.q(s, j).ok_or_else(|| Error::StateOutOfSpace { state: s.0.clone() })
}

/// Literal one-round formula next to the exact value of the same deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaReport {
    pub state: State,
    pub player: usize,
    pub bet: Money,
    pub sigma: f64,
    pub exact: f64,
    pub gap: f64,
    /// After every possible opponent win the game is still active, so the
    /// formula's continuation round really happens.
    pub opponent_wins_continue: bool,
}

pub fn sigma_consistency(
    cfg: &GameConfig,
    model: &WinProbModel,
    s: &State,
    j: usize,
    a: Money,
) -> Result<SigmaReport> {
    let sigma = one_shot_deviation_value(cfg, model, s, j, a)?;
    let exact = deviation_then_bold_value(cfg, model, s, j, a)?;
    let mut bets = profile_bets(cfg, &vec![Strategy::Bold; cfg.n_players()], s);
    bets[j] = a;
    let probs = model.probabilities(&bets, &s.0)?;
    let pot: Money = bets.iter().sum();
    let opponent_wins_continue = (0..cfg.n_players()).filter(|&i| i != j && probs[i] > 0.0).all(|i| {
        let mut next: Vec<Money> = s.0.iter().zip(&bets).map(|(&x, &b)| x - b).collect();
        next[i] = s.0[i] + pot - bets[i];
        classify_state(cfg, &State(next)) == StateClass::Active
    });
    Ok(SigmaReport {
        state: s.clone(),
        player: j,
        bet: a,
        sigma,
        exact,
        gap: sigma - exact,
        opponent_wins_continue,
    })
}

/// A profitable unilateral deviation from all-bold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub state: State,
    pub bet: Money,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerCertificate {
    pub player: usize,
    pub bold_value: f64,
    pub best_response_value: f64,
    /// Optimal bets at the initial state.
    pub optimal_bets: Vec<Money>,
    pub witness: Option<Deviation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub is_nash: bool,
    pub tolerance: f64,
    pub initial_state: State,
    /// Whether every active state was checked, not just the initial one.
    pub all_states: bool,
    pub players: Vec<PlayerCertificate>,
    /// Outcome of the per-state inequality check on the same instance.
    pub hypothesis_holds: bool,
    pub hypothesis_violating_contexts: usize,
}

/// Compares each player's bold value with their best response against
/// all-bold opponents, from the initial state or (with `all_states`) from
/// every active state.
pub fn certify_bold_nash(
    cfg: &GameConfig,
    model: &WinProbModel,
    tol: f64,
    all_states: bool,
) -> Result<Certificate> {
    let n = cfg.n_players();
    let bold = vec![Strategy::Bold; n];
    let values = evaluate_profile(cfg, model, &bold)?;
    let hypothesis = hypothesis_check(model, cfg)?;
    let init = cfg.initial_state();

    let players = (0..n)
        .into_par_iter()
        .map(|j| {
            let br = best_response(cfg, model, j, &bold)?;
            let bold_value = values.q(&init, j).unwrap_or(0.0);
            let best_response_value = br.value(&init).unwrap_or(0.0);
            let candidates: Vec<&State> = if all_states {
                values
                    .rows
                    .iter()
                    .filter(|r| r.class == StateClass::Active && *action_set(cfg, &r.state, j).end() > 0)
                    .map(|r| &r.state)
                    .collect()
            } else {
                vec![&init]
            };
            let mut witness: Option<Deviation> = None;
            for s in candidates {
                let row = match br.row(s) {
                    Some(r) => r,
                    None => continue,
                };
                let gain = row.value - values.q(s, j).unwrap_or(0.0);
                if gain > tol && witness.as_ref().is_none_or(|w| gain > w.gain) {
                    witness = Some(Deviation { state: s.clone(), bet: row.bet.unwrap_or(0), gain });
                }
            }
            Ok(PlayerCertificate {
                player: j,
                bold_value,
                best_response_value,
                optimal_bets: br.optimal_bets(&init),
                witness,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Certificate {
        is_nash: players.iter().all(|p| p.witness.is_none()),
        tolerance: tol,
        initial_state: init,
        all_states,
        players,
        hypothesis_holds: hypothesis.holds,
        hypothesis_violating_contexts: hypothesis.violating_contexts,
    })
}
