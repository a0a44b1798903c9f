//! Expression and problem-file parsing.

mod parser;
mod problem;
mod runner;

use std::fmt;

use serde::Serialize;

pub use parser::{line_col, parse_expression};
pub use problem::{parse_problem, parse_task, ChainDecl, GaugeDecl, ProblemFile, Task, VERBS};
pub use runner::{error_code, prolong_family, run_problem, run_tasks, Report, Status, TaskResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseDiagnostic {
    pub offset: usize,
    pub line: usize,
    pub col: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}
