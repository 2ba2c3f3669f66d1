use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("no path from node {from} to node {to}")]
    NoPath { from: usize, to: usize },

    #[error("terminals {0:?} cannot be connected")]
    NoTree(Vec<usize>),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("not a tree: {0}")]
    NotATree(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("outside the closed-form regime: {0}")]
    OutOfClosedForm(String),
}

pub type Result<T> = std::result::Result<T, Error>;
