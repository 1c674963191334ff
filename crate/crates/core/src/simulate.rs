//! Seeded Monte Carlo play of whole games and comparison against exact values.
//!
//! Run `i` draws from ChaCha8 seeded with the report seed on stream `i`, so a
//! report depends only on `(seed, runs)` and the inputs, never on how runs are
//! split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{profile_bets, ProfileValue, Strategy};
use crate::error::{Error, Result};
use crate::game::{classify_state, transitions, BetProfile, GameConfig, State, StateClass};
use crate::models::WinProbModel;

/// Longest a single game may run.
pub const ROUND_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub initial_state: State,
    pub runs: u64,
    pub wins: Vec<u64>,
    pub house_wins: u64,
    pub empirical_probs: Vec<f64>,
    pub mean_rounds: f64,
    pub seed: u64,
}

struct Tally {
    wins: Vec<u64>,
    house: u64,
    rounds: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.wins.iter_mut().zip(other.wins) {
            *a += b;
        }
        self.house += other.house;
        self.rounds += other.rounds;
        self
    }
}

/// Plays one game to absorption; returns the final state and rounds played.
fn play(
    cfg: &GameConfig,
    model: &WinProbModel,
    profile: &[Strategy],
    rng: &mut ChaCha8Rng,
) -> Result<(State, u64)> {
    let mut state = cfg.initial_state();
    let mut rounds = 0;
    while classify_state(cfg, &state) == StateClass::Active {
        if rounds >= ROUND_CAP {
            return Err(Error::RoundCap { cap: ROUND_CAP });
        }
        let bets = BetProfile(profile_bets(cfg, profile, &state));
        let outcomes = transitions(cfg, &state, &bets, model)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut next = &outcomes[outcomes.len() - 1].0;
        for (s, p) in &outcomes {
            acc += p;
            if u < acc {
                next = s;
                break;
            }
        }
        debug_assert!(next.total() <= state.total(), "money grew from {state} to {next}");
        state = next.clone();
        rounds += 1;
    }
    Ok((state, rounds))
}

/// Simulates `runs` independent games from the initial fortunes.
pub fn run_games(
    cfg: &GameConfig,
    model: &WinProbModel,
    profile: &[Strategy],
    runs: u64,
    seed: u64,
) -> Result<SimReport> {
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    model.check_shape(cfg)?;
    if profile.len() != cfg.n_players() {
        return Err(Error::FortuneCount { expected: cfg.n_players(), got: profile.len() });
    }
    for (j, st) in profile.iter().enumerate() {
        st.check_legal(cfg, j)?;
    }
    let n = cfg.n_players();
    let empty = || Tally { wins: vec![0; n], house: 0, rounds: 0 };
    let tally = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let (end, rounds) = play(cfg, model, profile, &mut rng)?;
            let mut t = empty();
            t.rounds = rounds;
            match classify_state(cfg, &end) {
                StateClass::Winner(j) => t.wins[j] = 1,
                _ => t.house = 1,
            }
            Ok(t)
        })
        .try_reduce(empty, |a, b| Ok(a.merge(b)))?;
    Ok(SimReport {
        initial_state: cfg.initial_state(),
        runs,
        empirical_probs: tally.wins.iter().map(|&w| w as f64 / runs as f64).collect(),
        wins: tally.wins,
        house_wins: tally.house,
        mean_rounds: tally.rounds as f64 / runs as f64,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerComparison {
    pub player: usize,
    pub empirical: f64,
    pub analytic: f64,
    /// Allowed deviation; 0 when the analytic value is 0 or 1.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub pass: bool,
    pub z: f64,
    pub players: Vec<PlayerComparison>,
}

/// Per-player test `|empirical - analytic| <= z * sqrt(p (1 - p) / runs)`.
/// Degenerate analytic values (0 or 1) demand an exact match.
pub fn compare_frequencies(empirical: &[f64], analytic: &[f64], runs: u64, z: f64) -> Comparison {
    let players: Vec<PlayerComparison> = empirical
        .iter()
        .zip(analytic)
        .enumerate()
        .map(|(player, (&e, &p))| {
            let degenerate = p <= 1e-12 || p >= 1.0 - 1e-12;
            let (bound, pass) = if degenerate {
                (0.0, e == p.round())
            } else {
                let b = z * (p * (1.0 - p) / runs as f64).sqrt();
                (b, (e - p).abs() <= b)
            };
            PlayerComparison { player, empirical: e, analytic: p, bound, pass }
        })
        .collect();
    Comparison { pass: players.iter().all(|p| p.pass), z, players }
}

/// Compares a simulation with the exact profile values at its start state.
pub fn compare_empirical(sim: &SimReport, analytic: &ProfileValue, z: f64) -> Result<Comparison> {
    let row = analytic
        .at(&sim.initial_state)
        .ok_or_else(|| Error::StateOutOfSpace { state: sim.initial_state.0.clone() })?;
    Ok(compare_frequencies(&sim.empirical_probs, &row.q, sim.runs, z))
}
