//! Win-probability families `F_j`, their validation, and the single-variable
//! slices `f` and `g` seen by one player at one state.
//!
//! Every model is evaluated on a bet vector together with a fortune context
//! (the fortunes of the state the bets are placed in). Built-ins document
//! which of the two they read.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{classify_state, enumerate_states, GameConfig, Money, State, StateClass, PROB_TOL};

/// Shape function applied to a player's share in the proportional family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum PhiFunction {
    /// `phi(s) = w * s` with `0 <= w <= 1`.
    Linear { param: f64 },
    /// `phi(s) = s^p` with `p >= 1`.
    Power { param: f64 },
    /// Values on the uniform grid `k / (len - 1)`, linearly interpolated.
    Table { values: Vec<f64> },
}

impl PhiFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            PhiFunction::Linear { param } if !(0.0..=1.0).contains(param) => {
                Err(Error::InvalidParameter(format!("linear phi weight must lie in [0, 1], got {param}")))
            }
            PhiFunction::Power { param } if !(*param >= 1.0 && param.is_finite()) => {
                Err(Error::InvalidParameter(format!("power phi exponent must be >= 1, got {param}")))
            }
            PhiFunction::Table { values } => {
                if values.len() < 2 {
                    return Err(Error::InvalidParameter("phi table needs at least two grid values".into()));
                }
                if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::InvalidParameter(format!(
                        "phi table values must lie in [0, 1], got {v}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Evaluates `phi` at `s`, clamping `s` to `[0, 1]`.
    pub fn eval(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match self {
            PhiFunction::Linear { param } => param * s,
            PhiFunction::Power { param } => s.powf(*param),
            PhiFunction::Table { values } => {
                let steps = (values.len() - 1) as f64;
                let pos = s * steps;
                let k = (pos.floor() as usize).min(values.len() - 2);
                let frac = pos - k as f64;
                values[k] + frac * (values[k + 1] - values[k])
            }
        }
    }
}

/// Which money the proportional family divides by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Denominator {
    /// `a_i / (a_i + sum of the other players' fortunes)`.
    #[default]
    Fortunes,
    /// `a_i / (sum of all bets)`.
    Bets,
}

/// A family of win-probability functions over bet vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum WinProbModel {
    /// `F_i(a) = phi(a_i / (a_i + sum_{k != i} x_k))`. The fortunes `x` are the
    /// evaluation context unless `context` pins them.
    Proportional {
        phi: PhiFunction,
        #[serde(default)]
        denominator: Denominator,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        context: Option<Vec<Money>>,
    },
    /// `F_j(a) = c` for every positive bet.
    Constant { c: f64, n: usize },
    /// Player `player` wins surely once their bet reaches `threshold`; nobody
    /// else ever wins.
    Threshold { player: usize, threshold: Money },
    /// `F_j(a) = (1 - exp(-epsilon * a_j)) / n`.
    Exponential { epsilon: f64, n: usize },
}

/// Proportional family with fortunes read from the state being played.
pub fn make_proportional(phi: PhiFunction) -> WinProbModel {
    WinProbModel::Proportional { phi, denominator: Denominator::Fortunes, context: None }
}

/// Proportional family with the opposing fortunes pinned to `context_fortunes`.
pub fn make_proportional_fixed_opp(phi: PhiFunction, context_fortunes: &[Money]) -> Result<WinProbModel> {
    phi.validate()?;
    Ok(WinProbModel::Proportional {
        phi,
        denominator: Denominator::Fortunes,
        context: Some(context_fortunes.to_vec()),
    })
}

pub fn make_constant(c: f64, n: usize) -> Result<WinProbModel> {
    if n < 2 {
        return Err(Error::TooFewPlayers(n));
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!("constant probability must lie in [0, 1], got {c}")));
    }
    if c * n as f64 > 1.0 + PROB_TOL {
        return Err(Error::InvalidParameter(format!(
            "constant probability {c} for {n} players sums to {} > 1",
            c * n as f64
        )));
    }
    Ok(WinProbModel::Constant { c, n })
}

pub fn make_threshold_surewin(player: usize, threshold: Money) -> Result<WinProbModel> {
    if threshold < 1 {
        return Err(Error::InvalidParameter("sure-win threshold must be at least 1".into()));
    }
    Ok(WinProbModel::Threshold { player, threshold })
}

pub fn make_scaled_exponential(epsilon: f64, n: usize) -> Result<WinProbModel> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if n < 2 {
        return Err(Error::TooFewPlayers(n));
    }
    Ok(WinProbModel::Exponential { epsilon, n })
}

impl WinProbModel {
    /// Player count the model is tied to, if any.
    pub fn player_count(&self) -> Option<usize> {
        match self {
            WinProbModel::Proportional { context, .. } => context.as_ref().map(Vec::len),
            WinProbModel::Constant { n, .. } | WinProbModel::Exponential { n, .. } => Some(*n),
            WinProbModel::Threshold { .. } => None,
        }
    }

    /// Whether evaluation reads the fortune context.
    pub fn uses_context(&self) -> bool {
        matches!(self, WinProbModel::Proportional { denominator: Denominator::Fortunes, context: None, .. })
    }

    /// Player count and player indices agree with the game.
    pub fn check_shape(&self, cfg: &GameConfig) -> Result<()> {
        let n = cfg.n_players();
        if let Some(m) = self.player_count() {
            if m != n {
                return Err(Error::PlayerCountMismatch { model: m, game: n });
            }
        }
        if let WinProbModel::Threshold { player, .. } = self {
            cfg.check_player(*player)?;
        }
        Ok(())
    }

    /// Parameter checks plus compatibility with the game's player count.
    pub fn check_compatible(&self, cfg: &GameConfig) -> Result<()> {
        self.check_shape(cfg)?;
        match self {
            WinProbModel::Proportional { phi, .. } => phi.validate(),
            WinProbModel::Constant { c, n } => make_constant(*c, *n).map(drop),
            WinProbModel::Threshold { player, threshold } => {
                make_threshold_surewin(*player, *threshold).map(drop)
            }
            WinProbModel::Exponential { epsilon, n } => make_scaled_exponential(*epsilon, *n).map(drop),
        }
    }

    /// Win probability of every player for `bets` placed from fortunes `context`.
    pub fn probabilities(&self, bets: &[Money], context: &[Money]) -> Result<Vec<f64>> {
        let n = bets.len();
        if context.len() != n {
            return Err(Error::FortuneCount { expected: n, got: context.len() });
        }
        if let Some(m) = self.player_count() {
            if m != n {
                return Err(Error::PlayerCountMismatch { model: m, game: n });
            }
        }
        let out = match self {
            WinProbModel::Proportional { phi, denominator, context: fixed } => {
                let x = fixed.as_deref().unwrap_or(context);
                let total_bets: u64 = bets.iter().map(|&a| u64::from(a)).sum();
                let total_x: u64 = x.iter().map(|&v| u64::from(v)).sum();
                bets.iter()
                    .enumerate()
                    .map(|(i, &a)| {
                        if a == 0 {
                            return 0.0;
                        }
                        let denom = match denominator {
                            Denominator::Fortunes => u64::from(a) + total_x - u64::from(x[i]),
                            Denominator::Bets => total_bets,
                        };
                        phi.eval(f64::from(a) / denom as f64)
                    })
                    .collect()
            }
            WinProbModel::Constant { c, .. } => bets.iter().map(|&a| if a == 0 { 0.0 } else { *c }).collect(),
            WinProbModel::Threshold { player, threshold } => {
                if *player >= n {
                    return Err(Error::PlayerOutOfRange { player: *player, n });
                }
                let mut v = vec![0.0; n];
                if bets[*player] >= *threshold {
                    v[*player] = 1.0;
                }
                v
            }
            WinProbModel::Exponential { epsilon, n } => {
                bets.iter().map(|&a| -(-epsilon * f64::from(a)).exp_m1() / *n as f64).collect()
            }
        };
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelViolation {
    /// Total win probability above one.
    SumExceedsOne { bets: Vec<Money>, context: Vec<Money>, sum: f64 },
    /// A player wins with positive probability despite betting nothing.
    ZeroBetWins { bets: Vec<Money>, context: Vec<Money>, player: usize, value: f64 },
    /// A probability outside `[0, 1]`.
    OutOfRange { bets: Vec<Money>, context: Vec<Money>, player: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub checked: usize,
    pub violations: Vec<ModelViolation>,
}

/// Exhaustively checks the probability constraints on every bet vector in the
/// state space. Context-dependent models are checked for every state `s` and
/// every bet vector bounded componentwise by `s`.
pub fn validate_model(model: &WinProbModel, cfg: &GameConfig) -> Result<ValidationReport> {
    model.check_shape(cfg)?;
    let states = enumerate_states(cfg);
    let mut violations = Vec::new();
    let mut checked = 0;
    let mut check = |bets: &[Money], context: &[Money]| -> Result<()> {
        checked += 1;
        let probs = model.probabilities(bets, context)?;
        for (j, &p) in probs.iter().enumerate() {
            if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p) {
                violations.push(ModelViolation::OutOfRange {
                    bets: bets.to_vec(),
                    context: context.to_vec(),
                    player: j,
                    value: p,
                });
            }
            if bets[j] == 0 && p != 0.0 {
                violations.push(ModelViolation::ZeroBetWins {
                    bets: bets.to_vec(),
                    context: context.to_vec(),
                    player: j,
                    value: p,
                });
            }
        }
        let sum: f64 = probs.iter().sum();
        if sum > 1.0 + PROB_TOL {
            violations.push(ModelViolation::SumExceedsOne {
                bets: bets.to_vec(),
                context: context.to_vec(),
                sum,
            });
        }
        Ok(())
    };
    if model.uses_context() {
        for s in &states {
            for bets in bounded_vectors(s.fortunes()) {
                check(&bets, s.fortunes())?;
            }
        }
    } else {
        for s in &states {
            check(s.fortunes(), s.fortunes())?;
        }
    }
    Ok(ValidationReport { valid: violations.is_empty(), checked, violations })
}

/// All vectors `v` with `0 <= v[i] <= bound[i]`, lexicographic.
fn bounded_vectors(bound: &[Money]) -> Vec<Vec<Money>> {
    let mut out = vec![Vec::with_capacity(bound.len())];
    for &b in bound {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=b).map(move |x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out
}

/// The single-variable functions one player faces at one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FGSlice {
    pub state: State,
    pub player: usize,
    /// `f[t] = F_j` with player `j` betting `t` and everyone else bold.
    pub f: Vec<f64>,
    /// `g[t] = sum_{i != j} F_i` under the same bets.
    pub g: Vec<f64>,
}

/// Tabulates `f` and `g` for player `j` at active state `s` over `t in 0..=M`.
pub fn slice_fg(model: &WinProbModel, cfg: &GameConfig, s: &State, j: usize) -> Result<FGSlice> {
    cfg.check_state(s)?;
    cfg.check_player(j)?;
    if classify_state(cfg, s) != StateClass::Active {
        return Err(Error::NotActive { state: s.0.clone() });
    }
    let m = cfg.total() as usize;
    let mut bets = s.0.clone();
    let mut f = Vec::with_capacity(m + 1);
    let mut g = Vec::with_capacity(m + 1);
    for t in 0..=cfg.total() {
        bets[j] = t;
        let p = model.probabilities(&bets, &s.0)?;
        f.push(p[j]);
        g.push(p.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, v)| v).sum());
    }
    Ok(FGSlice { state: s.clone(), player: j, f, g })
}
