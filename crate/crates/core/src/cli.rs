//! Command-line front end.
//!
//! Every command prints a report. JSON output wraps it as
//! `{"run_spec": ..., "report": ...}` where `run_spec` is the fully resolved
//! input. Exit codes: 0 on success, 1 when `--expect` is given and the report
//! refutes its claim, 2 on bad input.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::equilibrium::{best_response, certify_bold_nash, evaluate_profile, Strategy, NASH_TOL};
use crate::error::{Error, Result};
use crate::game::{GameConfig, Money, State, StateClass};
use crate::inequality::{check_equation, check_inequality, gmin, hypothesis_check, PairRange, EQUATION_TOL};
use crate::models::{validate_model, Denominator, ModelViolation, PhiFunction, WinProbModel};
use crate::simulate::{compare_empirical, run_games};
use crate::tables::TableSource;

const FORMS_HELP: &str = "\
Table specifiers (--f, --g):
  exp:EPS                   1 - exp(-EPS t)
  truncated-linear:EPS:CUT  1 - EPS t for t < CUT, 0 after
  linear:SLOPE              SLOPE t
  const:VALUE               VALUE
  zero                      0
  [v0, v1, ...]             explicit JSON table
  {\"form\": \"exp\", ...}     JSON closed form
  @PATH                     read any of the above from a file

Shape functions (--phi): linear:W, power:P, table:v0,v1,...

Exit codes: 0 ok, 1 refuted under --expect, 2 input error.";

#[derive(Debug, Parser)]
#[command(name = "boldplay", version, about = "Bold-play equilibria in N-person red-and-black games", after_help = FORMS_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Exit with 1 when the report refutes its claim.
    #[arg(long, global = true)]
    expect: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a game config and the model's probability constraints.
    Validate(Instance),
    /// Check f(x) - f(a) >= g(a) f(x - a) over all pairs.
    CheckInequality {
        #[command(flatten)]
        tables: FgArgs,
        /// `ordered`: a <= x <= M. `shifted`: a, x - a in 0..=M (f tabulated to 2M).
        #[arg(long, value_enum, default_value_t = Pairs::Ordered)]
        pairs: Pairs,
    },
    /// Tabulate the largest g compatible with f.
    Gmin {
        #[arg(long)]
        f: String,
        #[arg(long = "M")]
        m: Option<usize>,
    },
    /// Residual of the equality version and its solution family.
    CheckEquation {
        #[command(flatten)]
        tables: FgArgs,
        #[arg(long, default_value_t = EQUATION_TOL)]
        tol: f64,
    },
    /// Run the inequality for every player at every active state.
    Hypothesis(Instance),
    /// Win probabilities of a strategy profile at every state.
    Evaluate {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        profile: ProfileArgs,
    },
    /// Optimal play of one player against fixed opponents.
    BestResponse {
        #[command(flatten)]
        instance: Instance,
        #[arg(long)]
        player: usize,
        #[command(flatten)]
        profile: ProfileArgs,
    },
    /// Certify or refute all-bold as a Nash equilibrium.
    Certify {
        #[command(flatten)]
        instance: Instance,
        #[arg(long, default_value_t = NASH_TOL)]
        tol: f64,
        /// Check every active state, not just the initial one.
        #[arg(long)]
        all_states: bool,
    },
    /// Monte Carlo play compared with exact values.
    Simulate {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = 100_000)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Standard errors allowed per player.
        #[arg(long, default_value_t = 3.0)]
        z: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Pairs {
    Ordered,
    Shifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DenominatorArg {
    Fortunes,
    Bets,
}

#[derive(Debug, Args)]
struct FgArgs {
    #[arg(long)]
    f: String,
    #[arg(long)]
    g: String,
    /// Largest fortune; inferred from explicit tables when omitted.
    #[arg(long = "M")]
    m: Option<usize>,
}

#[derive(Debug, Args)]
struct Instance {
    /// Game config as inline JSON `{"n":..,"fortunes":[..],"goal":..}` or a file path.
    #[arg(long)]
    game: String,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// proportional, constant, threshold, exponential, inline JSON, or @PATH.
    #[arg(long)]
    model: String,
    #[arg(long, default_value = "linear:1")]
    phi: String,
    #[arg(long, value_enum, default_value_t = DenominatorArg::Fortunes)]
    denominator: DenominatorArg,
    /// Fixed opposing fortunes for the proportional family.
    #[arg(long, value_delimiter = ',')]
    context: Option<Vec<Money>>,
    #[arg(long)]
    c: Option<f64>,
    /// Player who wins surely in the threshold family.
    #[arg(long)]
    winner: Option<usize>,
    /// Defaults to the winner's initial fortune.
    #[arg(long)]
    threshold: Option<Money>,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    /// Strategy per player (bold, timid); a single name applies to everyone.
    #[arg(long, value_delimiter = ',', default_value = "bold")]
    strategies: Vec<String>,
}

/// Fully resolved inputs, embedded in every JSON report.
#[derive(Debug, Default, Serialize)]
pub struct RunSpec {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game: Option<GameConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<WinProbModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategies: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub player: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<TableSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<TableSource>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<PairRange>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub all_states: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

/// A finished command: the report plus its tabular rendering.
struct Output {
    spec: RunSpec,
    report: Value,
    verdict: bool,
    summary: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return e.exit_code();
        }
    };
    let out = match execute(cli.command) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    let text = match render(&out, cli.format) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    let written = match &cli.out {
        Some(path) => fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return 2;
    }
    if cli.expect && !out.verdict {
        1
    } else {
        0
    }
}

fn render(out: &Output, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let doc = serde_json::json!({ "run_spec": &out.spec, "report": &out.report });
            let mut s =
                serde_json::to_string_pretty(&doc).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut s = out.header.join(",");
            s.push('\n');
            for r in &out.rows {
                s.push_str(&r.join(","));
                s.push('\n');
            }
            Ok(s)
        }
        Format::Table => {
            let mut s = String::new();
            for line in &out.summary {
                s.push_str(line);
                s.push('\n');
            }
            let mut widths: Vec<usize> = out.header.iter().map(|h| h.len()).collect();
            for r in &out.rows {
                for (w, cell) in widths.iter_mut().zip(r) {
                    *w = (*w).max(cell.len());
                }
            }
            let line = |cells: &[String]| {
                let padded: Vec<String> =
                    cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                padded.join("  ") + "\n"
            };
            s.push_str(&line(&out.header));
            for r in &out.rows {
                s.push_str(&line(r));
            }
            Ok(s)
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::InvalidParameter(e.to_string()))
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Inline text, or the contents of `@PATH`.
fn read_arg(text: &str) -> Result<String> {
    match text.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {path}: {e}"))),
        None => Ok(text.to_string()),
    }
}

fn parse_game(text: &str) -> Result<GameConfig> {
    let t = text.trim();
    let json = if t.starts_with('{') {
        t.to_string()
    } else {
        let path = t.strip_prefix('@').unwrap_or(t);
        fs::read_to_string(path).map_err(|e| invalid(format!("cannot read game config {path}: {e}")))?
    };
    serde_json::from_str(&json).map_err(|e| {
        // Config validation errors surface as serde custom errors; keep their text.
        invalid(format!("game config: {e}"))
    })
}

fn parse_phi(text: &str) -> Result<PhiFunction> {
    let t = read_arg(text)?;
    let t = t.trim();
    if t.starts_with('{') {
        return serde_json::from_str(t).map_err(|e| invalid(format!("phi: {e}")));
    }
    let (name, rest) = t.split_once(':').ok_or_else(|| invalid(format!("phi `{t}` needs a parameter")))?;
    let num =
        |s: &str| s.trim().parse::<f64>().map_err(|_| invalid(format!("phi `{t}`: `{s}` is not a number")));
    let phi = match name {
        "linear" => PhiFunction::Linear { param: num(rest)? },
        "power" => PhiFunction::Power { param: num(rest)? },
        "table" => PhiFunction::Table { values: rest.split(',').map(num).collect::<Result<_>>()? },
        _ => return Err(invalid(format!("unknown phi shape `{name}`"))),
    };
    Ok(phi)
}

fn parse_model(args: &ModelArgs, cfg: &GameConfig) -> Result<WinProbModel> {
    let text = read_arg(&args.model)?;
    let t = text.trim();
    if t.starts_with('{') {
        return serde_json::from_str(t).map_err(|e| invalid(format!("model: {e}")));
    }
    let n = cfg.n_players();
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| invalid(format!("model `{t}` needs --{flag}")));
    let model = match t {
        "proportional" => WinProbModel::Proportional {
            phi: parse_phi(&args.phi)?,
            denominator: match args.denominator {
                DenominatorArg::Fortunes => Denominator::Fortunes,
                DenominatorArg::Bets => Denominator::Bets,
            },
            context: args.context.clone(),
        },
        "constant" => WinProbModel::Constant { c: need(args.c, "c")?, n },
        "threshold" => {
            let player = args.winner.ok_or_else(|| invalid("model `threshold` needs --winner"))?;
            cfg.check_player(player)?;
            let threshold = args.threshold.unwrap_or(cfg.initial_fortunes()[player]);
            WinProbModel::Threshold { player, threshold }
        }
        "exponential" => WinProbModel::Exponential { epsilon: need(args.epsilon, "epsilon")?, n },
        _ => return Err(invalid(format!("unknown model family `{t}`"))),
    };
    Ok(model)
}

fn parse_profile(args: &ProfileArgs, cfg: &GameConfig) -> Result<(Vec<String>, Vec<Strategy>)> {
    let n = cfg.n_players();
    let names: Vec<String> = match args.strategies.as_slice() {
        [one] => vec![one.clone(); n],
        many if many.len() == n => many.to_vec(),
        many => return Err(Error::FortuneCount { expected: n, got: many.len() }),
    };
    let strategies = names
        .iter()
        .map(|s| match s.trim() {
            "bold" => Ok(Strategy::Bold),
            "timid" => Ok(Strategy::Timid),
            other => Err(invalid(format!("unknown strategy `{other}` (expected bold or timid)"))),
        })
        .collect::<Result<_>>()?;
    Ok((names, strategies))
}

fn parse_table(text: &str) -> Result<TableSource> {
    TableSource::parse(&read_arg(text)?)
}

fn resolve_m(m: Option<usize>, explicit: Option<usize>) -> Result<usize> {
    match (m, explicit) {
        (Some(m), _) => Ok(m),
        (None, Some(len)) if len > 0 => Ok(len - 1),
        _ => Err(invalid("--M is required when no explicit table fixes the domain")),
    }
}

fn instance(inst: &Instance, command: &str, strict: bool) -> Result<(RunSpec, GameConfig, WinProbModel)> {
    let cfg = parse_game(&inst.game)?;
    let model = parse_model(&inst.model, &cfg)?;
    if strict {
        model.check_compatible(&cfg)?;
    } else {
        model.check_shape(&cfg)?;
    }
    let spec = RunSpec {
        command: command.into(),
        game: Some(cfg.clone()),
        model: Some(model.clone()),
        ..RunSpec::default()
    };
    Ok((spec, cfg, model))
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn state_header(n: usize, prefix: &str) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn state_cells(s: &State) -> Vec<String> {
    s.0.iter().map(|x| x.to_string()).collect()
}

fn class_name(c: StateClass) -> String {
    match c {
        StateClass::Winner(j) => format!("winner:{j}"),
        StateClass::Dead => "dead".into(),
        StateClass::Active => "active".into(),
    }
}

fn execute(command: Command) -> Result<Output> {
    match command {
        Command::Validate(inst) => {
            let (spec, cfg, model) = instance(&inst, "validate", false)?;
            let report = validate_model(&model, &cfg)?;
            let rows = report
                .violations
                .iter()
                .map(|v| match v {
                    ModelViolation::SumExceedsOne { bets, context, sum } => {
                        vec!["sum-exceeds-one".into(), join(bets), join(context), String::new(), num(*sum)]
                    }
                    ModelViolation::ZeroBetWins { bets, context, player, value } => {
                        vec![
                            "zero-bet-wins".into(),
                            join(bets),
                            join(context),
                            player.to_string(),
                            num(*value),
                        ]
                    }
                    ModelViolation::OutOfRange { bets, context, player, value } => {
                        vec![
                            "out-of-range".into(),
                            join(bets),
                            join(context),
                            player.to_string(),
                            num(*value),
                        ]
                    }
                })
                .collect();
            Ok(Output {
                spec,
                verdict: report.valid,
                summary: vec![format!(
                    "valid: {}  bet vectors checked: {}  violations: {}",
                    report.valid,
                    report.checked,
                    report.violations.len()
                )],
                header: ["kind", "bets", "context", "player", "value"].map(String::from).to_vec(),
                rows,
                report: to_value(&report)?,
            })
        }
        Command::CheckInequality { tables, pairs } => {
            let f_src = parse_table(&tables.f)?;
            let g_src = parse_table(&tables.g)?;
            let m = match (tables.m, g_src.explicit_len(), f_src.explicit_len()) {
                (None, None, Some(len)) if pairs == Pairs::Shifted => resolve_m(None, Some(len / 2 + 1))?,
                (m, g_len, f_len) => resolve_m(m, g_len.or(f_len))?,
            };
            let f_len = match pairs {
                Pairs::Ordered => m + 1,
                Pairs::Shifted => 2 * m + 1,
            };
            let f = f_src.materialize(f_len)?;
            let g = g_src.materialize(m + 1)?;
            let report = check_inequality(&f, &g, pairs == Pairs::Ordered)?;
            let rows = report
                .violations
                .iter()
                .map(|v| vec![v.a.to_string(), v.x.to_string(), num(v.lhs), num(v.rhs)])
                .collect();
            Ok(Output {
                spec: RunSpec {
                    command: "check-inequality".into(),
                    f: Some(f_src),
                    g: Some(g_src),
                    m: Some(m),
                    pairs: Some(report.range),
                    ..RunSpec::default()
                },
                verdict: report.holds,
                summary: vec![format!(
                    "holds: {}  pairs checked: {}  violations: {}",
                    report.holds,
                    report.pairs_checked,
                    report.violations.len()
                )],
                header: ["a", "x", "lhs", "rhs"].map(String::from).to_vec(),
                rows,
                report: to_value(&report)?,
            })
        }
        Command::Gmin { f, m } => {
            let f_src = parse_table(&f)?;
            let m = resolve_m(m, f_src.explicit_len())?;
            let table = gmin(&f_src.materialize(m + 1)?)?;
            let rows = table.values.iter().enumerate().map(|(y, v)| vec![y.to_string(), num(*v)]).collect();
            Ok(Output {
                spec: RunSpec { command: "gmin".into(), f: Some(f_src), m: Some(m), ..RunSpec::default() },
                verdict: true,
                summary: vec![format!("M: {m}")],
                header: ["y", "g"].map(String::from).to_vec(),
                rows,
                report: to_value(&table)?,
            })
        }
        Command::CheckEquation { tables, tol } => {
            let f_src = parse_table(&tables.f)?;
            let g_src = parse_table(&tables.g)?;
            let m = resolve_m(tables.m, g_src.explicit_len().or(f_src.explicit_len()))?;
            let cls = check_equation(&f_src.materialize(m + 1)?, &g_src.materialize(m + 1)?, tol)?;
            let family = to_value(&cls.family)?.as_str().unwrap_or_default().to_string();
            Ok(Output {
                spec: RunSpec {
                    command: "check-equation".into(),
                    f: Some(f_src),
                    g: Some(g_src),
                    m: Some(m),
                    tol: Some(tol),
                    ..RunSpec::default()
                },
                verdict: cls.family != crate::inequality::EquationFamily::None,
                summary: Vec::new(),
                header: ["max_residual", "family", "tolerance"].map(String::from).to_vec(),
                rows: vec![vec![num(cls.max_residual), family, num(cls.tolerance)]],
                report: to_value(&cls)?,
            })
        }
        Command::Hypothesis(inst) => {
            let (spec, cfg, model) = instance(&inst, "hypothesis", true)?;
            let report = hypothesis_check(&model, &cfg)?;
            let mut header = state_header(cfg.n_players(), "x");
            header.extend(["player", "a", "x", "lhs", "rhs"].map(String::from));
            let mut rows = Vec::new();
            for c in &report.contexts {
                for v in &c.report.violations {
                    let mut r = state_cells(&c.state);
                    r.extend([
                        c.player.to_string(),
                        v.a.to_string(),
                        v.x.to_string(),
                        num(v.lhs),
                        num(v.rhs),
                    ]);
                    rows.push(r);
                }
            }
            Ok(Output {
                spec,
                verdict: report.holds,
                summary: vec![format!(
                    "holds: {}  contexts checked: {}  violating contexts: {}",
                    report.holds, report.contexts_checked, report.violating_contexts
                )],
                header,
                rows,
                report: to_value(&report)?,
            })
        }
        Command::Evaluate { instance: inst, profile } => {
            let (mut spec, cfg, model) = instance(&inst, "evaluate", true)?;
            let (names, strategies) = parse_profile(&profile, &cfg)?;
            let values = evaluate_profile(&cfg, &model, &strategies)?;
            let n = cfg.n_players();
            let mut header = state_header(n, "x");
            header.push("class".into());
            header.extend(state_header(n, "q"));
            header.push("house".into());
            let rows = values
                .rows
                .iter()
                .map(|r| {
                    let mut row = state_cells(&r.state);
                    row.push(class_name(r.class));
                    row.extend(r.q.iter().map(|&q| num(q)));
                    row.push(num(r.house));
                    row
                })
                .collect();
            let init = values
                .at(&cfg.initial_state())
                .map(|r| format!("q at {}: {:?}  house: {}", r.state, r.q, r.house));
            spec.strategies = Some(names);
            Ok(Output {
                spec,
                verdict: true,
                summary: init.into_iter().collect(),
                header,
                rows,
                report: to_value(&values)?,
            })
        }
        Command::BestResponse { instance: inst, player, profile } => {
            let (mut spec, cfg, model) = instance(&inst, "best-response", true)?;
            cfg.check_player(player)?;
            let (names, strategies) = parse_profile(&profile, &cfg)?;
            let br = best_response(&cfg, &model, player, &strategies)?;
            let mut header = state_header(cfg.n_players(), "x");
            header.extend(["value", "bet", "optimal_bets"].map(String::from));
            let rows = br
                .rows
                .iter()
                .map(|r| {
                    let mut row = state_cells(&r.state);
                    row.push(num(r.value));
                    row.push(r.bet.map(|b| b.to_string()).unwrap_or_default());
                    row.push(join(&br.optimal_bets(&r.state)));
                    row
                })
                .collect();
            let init = cfg.initial_state();
            let summary = vec![format!(
                "player {player} at {init}: value {}  optimal bets: {}",
                br.value(&init).unwrap_or(0.0),
                join(&br.optimal_bets(&init))
            )];
            spec.player = Some(player);
            spec.strategies = Some(names);
            Ok(Output { spec, verdict: true, summary, header, rows, report: to_value(&br)? })
        }
        Command::Certify { instance: inst, tol, all_states } => {
            let (mut spec, cfg, model) = instance(&inst, "certify", true)?;
            let cert = certify_bold_nash(&cfg, &model, tol, all_states)?;
            let header = [
                "player",
                "bold_value",
                "best_response_value",
                "optimal_bets",
                "witness_state",
                "witness_bet",
                "gain",
            ]
            .map(String::from)
            .to_vec();
            let rows = cert
                .players
                .iter()
                .map(|p| {
                    let (ws, wb, gain) = match &p.witness {
                        Some(w) => (join(&w.state.0), w.bet.to_string(), num(w.gain)),
                        None => Default::default(),
                    };
                    vec![
                        p.player.to_string(),
                        num(p.bold_value),
                        num(p.best_response_value),
                        join(&p.optimal_bets),
                        ws,
                        wb,
                        gain,
                    ]
                })
                .collect();
            spec.tol = Some(tol);
            spec.all_states = Some(all_states);
            Ok(Output {
                spec,
                verdict: cert.is_nash,
                summary: vec![format!(
                    "is_nash: {}  hypothesis holds: {} ({} violating contexts)",
                    cert.is_nash, cert.hypothesis_holds, cert.hypothesis_violating_contexts
                )],
                header,
                rows,
                report: to_value(&cert)?,
            })
        }
        Command::Simulate { instance: inst, profile, runs, seed, z } => {
            let (mut spec, cfg, model) = instance(&inst, "simulate", true)?;
            let (names, strategies) = parse_profile(&profile, &cfg)?;
            let sim = run_games(&cfg, &model, &strategies, runs, seed)?;
            let exact = evaluate_profile(&cfg, &model, &strategies)?;
            let cmp = compare_empirical(&sim, &exact, z)?;
            let rows = cmp
                .players
                .iter()
                .map(|p| {
                    vec![
                        p.player.to_string(),
                        sim.wins[p.player].to_string(),
                        num(p.empirical),
                        num(p.analytic),
                        num(p.bound),
                        p.pass.to_string(),
                    ]
                })
                .collect();
            spec.strategies = Some(names);
            spec.runs = Some(runs);
            spec.seed = Some(seed);
            spec.z = Some(z);
            Ok(Output {
                spec,
                verdict: cmp.pass,
                summary: vec![format!(
                    "runs: {}  house wins: {}  mean rounds: {}  pass: {}",
                    sim.runs, sim.house_wins, sim.mean_rounds, cmp.pass
                )],
                header: ["player", "wins", "empirical", "analytic", "bound", "pass"]
                    .map(String::from)
                    .to_vec(),
                rows,
                report: serde_json::json!({ "simulation": to_value(&sim)?, "comparison": to_value(&cmp)? }),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("boldplay").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    const GAME: &str = r#"{"n":2,"fortunes":[3,4],"goal":5}"#;

    #[test]
    fn certify_json_embeds_run_spec() {
        let (code, out, _) =
            call(&["certify", "--game", GAME, "--model", "proportional", "--phi", "linear:1"]);
        assert_eq!(code, 0);
        let doc: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(doc["report"]["is_nash"], Value::Bool(true));
        assert_eq!(doc["run_spec"]["command"], "certify");
        assert_eq!(doc["run_spec"]["game"]["fortunes"], serde_json::json!([3, 4]));
        assert_eq!(doc["run_spec"]["model"]["family"], "proportional");
    }

    #[test]
    fn expect_turns_refutation_into_exit_one() {
        let game = r#"{"n":2,"fortunes":[4,3],"goal":5}"#;
        let args = ["certify", "--game", game, "--model", "constant", "--c", "0.5"];
        assert_eq!(call(&args).0, 0);
        let mut with = args.to_vec();
        with.push("--expect");
        assert_eq!(call(&with).0, 1);
    }

    #[test]
    fn input_errors_exit_two() {
        assert_eq!(call(&["frobnicate"]).0, 2);
        let (code, _, err) = call(&["certify", "--game", "{\"n\":2", "--model", "proportional"]);
        assert_eq!(code, 2);
        assert!(err.contains("game config"));
        let bad = r#"{"n":2,"fortunes":[3,3],"goal":7}"#;
        let (code, _, err) = call(&["certify", "--game", bad, "--model", "proportional"]);
        assert_eq!(code, 2);
        assert!(err.contains("G <= M < 2G"), "{err}");
        assert_eq!(call(&["certify", "--game", GAME, "--model", "constant"]).0, 2);
        assert_eq!(call(&["certify", "--game", GAME, "--model", "constant", "--c", "0.6"]).0, 2);
        assert_eq!(
            call(&["evaluate", "--game", GAME, "--model", "proportional", "--strategies", "bold,meek"]).0,
            2
        );
        assert_eq!(call(&["best-response", "--game", GAME, "--model", "proportional", "--player", "2"]).0, 2);
        assert_eq!(call(&["gmin", "--f", "exp:0.01"]).0, 2);
    }

    #[test]
    fn validate_reports_bad_constant_as_violation() {
        let game = r#"{"n":2,"fortunes":[1,1],"goal":2}"#;
        let (code, out, _) = call(&[
            "validate", "--game", game, "--model", "constant", "--c", "0.6", "--format", "csv", "--expect",
        ]);
        assert_eq!(code, 1);
        assert!(out.starts_with("kind,bets,context,player,value\n"));
        assert!(out.contains("sum-exceeds-one,1 1,"));
    }

    #[test]
    fn gmin_csv_shape() {
        let (code, out, _) = call(&["gmin", "--f", "exp:0.01", "--M", "1000", "--format", "csv"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "y,g");
        assert_eq!(lines.len(), 1001);
        assert!(!out.contains('\r'));
    }

    #[test]
    fn explicit_tables_fix_the_domain() {
        let (code, out, _) =
            call(&["check-equation", "--f", "[0, 0.3, 0.6, 0.9]", "--g", "const:1", "--format", "csv"]);
        assert_eq!(code, 0);
        assert!(out.contains(",linear-f-g-one,"), "{out}");
        let (code, _, _) = call(&[
            "check-inequality",
            "--f",
            "[0, 1, 2, 3, 4]",
            "--g",
            "[1, 1, 1]",
            "--pairs",
            "shifted",
            "--expect",
        ]);
        assert_eq!(code, 0);
    }

    #[test]
    fn evaluate_table_and_csv() {
        let (code, out, _) =
            call(&["evaluate", "--game", GAME, "--model", "proportional", "--format", "csv"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("x0,x1,class,q0,q1,house\n"));
        assert!(out.contains("\n3,4,active,"));
        let (code, out, _) =
            call(&["evaluate", "--game", GAME, "--model", "proportional", "--format", "table"]);
        assert_eq!(code, 0);
        assert!(out.lines().next().unwrap().starts_with("q at (3,4)"));
    }

    #[test]
    fn identical_inputs_identical_bytes() {
        let args = [
            "simulate", "--game", GAME, "--model", "constant", "--c", "0.25", "--runs", "2000", "--seed", "9",
        ];
        let a = call(&args);
        let b = call(&args);
        assert_eq!(a, b);
        assert_eq!(a.0, 0);
    }

    #[test]
    fn out_flag_writes_file() {
        let dir = std::env::temp_dir().join(format!("boldplay-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("report.json");
        let p = path.to_str().unwrap();
        let (code, out, _) = call(&["hypothesis", "--game", GAME, "--model", "proportional", "--out", p]);
        assert_eq!(code, 0);
        assert!(out.is_empty());
        let doc: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(doc["report"]["holds"], Value::Bool(false));
        fs::remove_dir_all(&dir).unwrap();
    }
}
