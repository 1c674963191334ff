use thiserror::Error;

/// Everything that can go wrong while building or analysing a game.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("a game needs at least two players, got {0}")]
    TooFewPlayers(usize),

    #[error("fortune vector has {got} entries but the game has {expected} players")]
    FortuneCount { expected: usize, got: usize },

    #[error("initial fortune of player {player} must be at least 1, got {value}")]
    NonPositiveFortune { player: usize, value: u32 },

    #[error("goal must be positive")]
    ZeroGoal,

    #[error("goal condition G <= M < 2G violated: M < G ({total} < {goal})")]
    TotalBelowGoal { total: u32, goal: u32 },

    #[error("goal condition G <= M < 2G violated: M >= 2G ({total} >= {})", 2 * u64::from(*goal))]
    TotalAtLeastTwiceGoal { total: u32, goal: u32 },

    #[error("state {state:?} is not in the state space (length or total money exceeds the game)")]
    StateOutOfSpace { state: Vec<u32> },

    #[error("player index {player} out of range for {n} players")]
    PlayerOutOfRange { player: usize, n: usize },

    #[error("bet {bet} of player {player} is not a legal action at state {state:?}")]
    IllegalBet { state: Vec<u32>, player: usize, bet: u32 },

    #[error("transition requested from non-active state {state:?}")]
    NotActive { state: Vec<u32> },

    #[error(
        "win probabilities sum to {sum} > 1 at bets {bets:?} (total win probability must not exceed one)"
    )]
    ProbabilitySum { bets: Vec<u32>, sum: f64 },

    #[error("model is defined for {model} players but the game has {game}")]
    PlayerCountMismatch { model: usize, game: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("table lengths differ: f has {f} entries, g has {g}")]
    LengthMismatch { f: usize, g: usize },

    #[error("f must be positive on 1..=M for the min construction; f[{at}] = {value}")]
    NonPositiveF { at: usize, value: f64 },

    #[error("profile does not absorb: states {states:?} can never leave their money level")]
    NonAbsorbing { states: Vec<Vec<u32>> },

    #[error("iteration did not converge within {cap} sweeps (last change {delta:e})")]
    NotConverged { cap: usize, delta: f64 },

    #[error("game exceeded {cap} rounds without reaching an absorbing state")]
    RoundCap { cap: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
