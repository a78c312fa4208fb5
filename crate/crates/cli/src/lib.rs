//! Command-line frontend: problem registry, run configuration, experiment
//! orchestration, and VTK export.

pub mod config;
pub mod problems;
pub mod run;
pub mod vtk;

use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    UnknownProblem { name: String, registered: Vec<String> },
    Io { path: PathBuf, source: std::io::Error },
    Field { path: PathBuf, message: String },
    Mesh(morley_oc::mesh::MeshError),
    Assembly(morley_oc::assembly::AssemblyError),
    Solver(morley_oc::solver::SolverError),
    Analysis(morley_oc::analysis::AnalysisError),
}

impl CliError {
    /// Usage errors exit with code 1, runtime failures with code 2.
    pub fn is_usage(&self) -> bool {
        matches!(self, CliError::Usage(_) | CliError::UnknownProblem { .. })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::UnknownProblem { name, registered } => {
                write!(f, "unknown problem {name:?}; registered problems: {}", registered.join(", "))
            }
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Field { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Mesh(e) => write!(f, "mesh: {e}"),
            CliError::Assembly(e) => write!(f, "assembly: {e}"),
            CliError::Solver(e) => write!(f, "solver: {e}"),
            CliError::Analysis(e) => write!(f, "analysis: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<morley_oc::mesh::MeshError> for CliError {
    fn from(e: morley_oc::mesh::MeshError) -> Self {
        CliError::Mesh(e)
    }
}

impl From<morley_oc::assembly::AssemblyError> for CliError {
    fn from(e: morley_oc::assembly::AssemblyError) -> Self {
        CliError::Assembly(e)
    }
}

impl From<morley_oc::solver::SolverError> for CliError {
    fn from(e: morley_oc::solver::SolverError) -> Self {
        CliError::Solver(e)
    }
}

impl From<morley_oc::analysis::AnalysisError> for CliError {
    fn from(e: morley_oc::analysis::AnalysisError) -> Self {
        CliError::Analysis(e)
    }
}
