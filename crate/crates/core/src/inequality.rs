//! The functional inequality `f(x) - f(a) >= g(a) f(x - a)`: exhaustive
//! checking on tables, the pointwise-largest admissible `g`, classification of
//! exact solutions of the matching equation, and the per-state hypothesis
//! check over a whole game.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{classify_state, enumerate_states, GameConfig, State, StateClass};
use crate::models::{slice_fg, WinProbModel};

/// A pair counts as a violation only when `lhs < rhs - VIOLATION_TOL`.
pub const VIOLATION_TOL: f64 = 1e-12;

/// Default tolerance for classifying solutions of the functional equation.
pub const EQUATION_TOL: f64 = 1e-9;

/// Which `(a, x)` pairs a check covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairRange {
    /// `0 <= a <= x <= M`.
    Ordered,
    /// Every `(a, d)` in `S x S` with `x = a + d`, so `x` runs up to `2M` and
    /// `f` has to be tabulated on `0..=2M`.
    Shifted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub a: usize,
    pub x: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub holds: bool,
    /// `M`, the largest bet or fortune.
    pub domain: usize,
    pub range: PairRange,
    pub pairs_checked: u64,
    pub violations: Vec<Violation>,
}

/// Scans every pair for `f(x) - f(a) >= g(a) f(x - a)`.
///
/// With `restrict_a_le_x` the tables must both have length `M + 1` and the
/// pairs are `a <= x <= M`. Without it the pairs are `a, x - a` in `0..=M`,
/// which needs `f` on `0..=2M` (length `2M + 1`) and `g` on `0..=M`.
pub fn check_inequality(f: &[f64], g: &[f64], restrict_a_le_x: bool) -> Result<InequalityReport> {
    if g.is_empty() {
        return Err(Error::LengthMismatch { f: f.len(), g: 0 });
    }
    let m = g.len() - 1;
    let (range, want_f) =
        if restrict_a_le_x { (PairRange::Ordered, m + 1) } else { (PairRange::Shifted, 2 * m + 1) };
    if f.len() != want_f {
        return Err(Error::LengthMismatch { f: f.len(), g: g.len() });
    }

    let per_a: Vec<Vec<Violation>> = (0..=m)
        .into_par_iter()
        .map(|a| {
            let top = if restrict_a_le_x { m } else { a + m };
            (a..=top)
                .filter_map(|x| {
                    let lhs = f[x] - f[a];
                    let rhs = g[a] * f[x - a];
                    (lhs < rhs - VIOLATION_TOL).then_some(Violation { a, x, lhs, rhs })
                })
                .collect()
        })
        .collect();
    let pairs_checked =
        if restrict_a_le_x { (m as u64 + 1) * (m as u64 + 2) / 2 } else { (m as u64 + 1) * (m as u64 + 1) };
    let violations: Vec<Violation> = per_a.into_iter().flatten().collect();
    Ok(InequalityReport { holds: violations.is_empty(), domain: m, range, pairs_checked, violations })
}

/// The largest `g` compatible with `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GminTable {
    /// `values[y]` for `y in 0..M`; `y = M` has an empty minimum and is omitted.
    pub values: Vec<f64>,
    /// Smallest `x` attaining each minimum.
    pub argmin: Vec<usize>,
    pub f: Vec<f64>,
}

/// `values[y] = min over x in y+1..=M of (f[x] - f[y]) / f[x - y]`.
///
/// Only `f[1..]` appears in a denominator, so `f[0]` may be zero.
pub fn gmin(f: &[f64]) -> Result<GminTable> {
    if f.is_empty() {
        return Err(Error::InvalidParameter("f table is empty".into()));
    }
    let m = f.len() - 1;
    if let Some((at, &value)) = f.iter().enumerate().skip(1).find(|&(_, &v)| v.is_nan() || v <= 0.0) {
        return Err(Error::NonPositiveF { at, value });
    }
    let (values, argmin) = (0..m)
        .into_par_iter()
        .map(|y| {
            let mut best = f64::INFINITY;
            let mut at = y + 1;
            for x in y + 1..=m {
                let r = (f[x] - f[y]) / f[x - y];
                if r < best {
                    best = r;
                    at = x;
                }
            }
            (best, at)
        })
        .unzip();
    Ok(GminTable { values, argmin, f: f.to_vec() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationFamily {
    /// `g = 0` and `f` constant.
    GZeroFConstant,
    /// `f = 0`, any `g`.
    FZero,
    /// `f(x) = f(1) x` and `g = 1`.
    LinearFGOne,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationClassification {
    pub max_residual: f64,
    pub family: EquationFamily,
    pub tolerance: f64,
}

/// Measures how far `(f, g)` is from solving `f(x) - f(a) = g(a) f(x - a)` on
/// `a <= x` and names the solution family it belongs to, if any.
pub fn check_equation(f: &[f64], g: &[f64], tol: f64) -> Result<EquationClassification> {
    if f.len() != g.len() || f.is_empty() {
        return Err(Error::LengthMismatch { f: f.len(), g: g.len() });
    }
    let m = f.len() - 1;
    let max_residual = (0..=m)
        .into_par_iter()
        .map(|a| (a..=m).map(|x| (f[x] - f[a] - g[a] * f[x - a]).abs()).fold(0.0f64, f64::max))
        .reduce(|| 0.0, f64::max);

    let all = |t: &[f64], p: &dyn Fn(usize, f64) -> bool| t.iter().enumerate().all(|(i, &v)| p(i, v));
    let family = if max_residual > tol {
        EquationFamily::None
    } else if all(f, &|_, v| v.abs() <= tol) {
        EquationFamily::FZero
    } else if all(g, &|_, v| v.abs() <= tol) && all(f, &|_, v| (v - f[0]).abs() <= tol) {
        EquationFamily::GZeroFConstant
    } else if m >= 1
        && all(g, &|_, v| (v - 1.0).abs() <= tol)
        && all(f, &|i, v| (v - f[1] * i as f64).abs() <= tol)
    {
        EquationFamily::LinearFGOne
    } else {
        EquationFamily::None
    };
    Ok(EquationClassification { max_residual, family, tolerance: tol })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextReport {
    pub state: State,
    pub player: usize,
    pub report: InequalityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// The inequality holds for every player at every active state.
    pub holds: bool,
    pub contexts_checked: usize,
    pub violating_contexts: usize,
    pub contexts: Vec<ContextReport>,
}

impl HypothesisReport {
    pub fn context(&self, state: &State, player: usize) -> Option<&ContextReport> {
        self.contexts.iter().find(|c| &c.state == state && c.player == player)
    }
}

/// Runs the inequality on the `(f, g)` slice of every player at every active
/// state, over all `a <= x <= M`.
pub fn hypothesis_check(model: &WinProbModel, cfg: &GameConfig) -> Result<HypothesisReport> {
    model.check_shape(cfg)?;
    let active: Vec<State> =
        enumerate_states(cfg).into_iter().filter(|s| classify_state(cfg, s) == StateClass::Active).collect();
    let contexts: Vec<ContextReport> = active
        .par_iter()
        .map(|s| {
            (0..cfg.n_players())
                .map(|j| {
                    let slice = slice_fg(model, cfg, s, j)?;
                    let report = check_inequality(&slice.f, &slice.g, true)?;
                    Ok(ContextReport { state: s.clone(), player: j, report })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let violating_contexts = contexts.iter().filter(|c| !c.report.holds).count();
    Ok(HypothesisReport {
        holds: violating_contexts == 0,
        contexts_checked: contexts.len(),
        violating_contexts,
        contexts,
    })
}
