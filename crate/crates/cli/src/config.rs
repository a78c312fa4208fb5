//! Run configuration: a flat `key = value` text file with command-line
//! overrides applied on top.

use crate::CliError;
use morley_oc::assembly::BoundaryCondition;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: String,
    /// Mesh file instead of the built-in disk hierarchy.
    pub mesh_path: Option<PathBuf>,
    pub disk_radius: f64,
    /// Inclusive refinement-level range for convergence studies; a single
    /// solve uses the first entry.
    pub levels: (usize, usize),
    pub beta: f64,
    pub g_max: f64,
    pub bc: BoundaryCondition,
    /// Dual step sizes; `None` defaults to beta.
    pub rho_ctrl: Option<f64>,
    pub rho_grad: Option<f64>,
    pub tol: f64,
    pub max_outer: usize,
    pub inner_tol: f64,
    pub out_dir: PathBuf,
    pub vtk: bool,
    pub log: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: "schiela-disk".into(),
            mesh_path: None,
            disk_radius: 2.0,
            levels: (2, 5),
            beta: 1.0,
            g_max: 1.0,
            bc: BoundaryCondition::Clamped,
            rho_ctrl: None,
            rho_grad: None,
            tol: 1e-8,
            max_outer: 5000,
            inner_tol: 1e-10,
            out_dir: PathBuf::from("out"),
            vtk: false,
            log: false,
        }
    }
}

pub fn parse_levels(s: &str) -> Result<(usize, usize), CliError> {
    let parse = |t: &str| {
        t.parse::<usize>().map_err(|_| CliError::Usage(format!("invalid level {t:?} in {s:?}")))
    };
    let (a, b) = match s.split_once(':') {
        Some((a, b)) => (parse(a)?, parse(b)?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if b < a {
        return Err(CliError::Usage(format!("levels {s:?} must be increasing")));
    }
    Ok((a, b))
}

pub fn parse_bc(s: &str) -> Result<BoundaryCondition, CliError> {
    match s {
        "clamped" => Ok(BoundaryCondition::Clamped),
        "simply-supported" => Ok(BoundaryCondition::SimplySupported),
        other => Err(CliError::Usage(format!(
            "unknown boundary condition {other:?} (use clamped or simply-supported)"
        ))),
    }
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = |what: &str| CliError::Usage(format!("invalid {what} value {value:?}"));
        match key {
            "problem" => self.problem = value.to_string(),
            "mesh" => self.mesh_path = Some(PathBuf::from(value)),
            "radius" => self.disk_radius = value.parse().map_err(|_| bad("radius"))?,
            "levels" => self.levels = parse_levels(value)?,
            "beta" => self.beta = value.parse().map_err(|_| bad("beta"))?,
            "gmax" => self.g_max = value.parse().map_err(|_| bad("gmax"))?,
            "bc" => self.bc = parse_bc(value)?,
            "rho" => {
                let rho: f64 = value.parse().map_err(|_| bad("rho"))?;
                self.rho_ctrl = Some(rho);
                self.rho_grad = Some(rho);
            }
            "rho_ctrl" => self.rho_ctrl = Some(value.parse().map_err(|_| bad("rho_ctrl"))?),
            "rho_grad" => self.rho_grad = Some(value.parse().map_err(|_| bad("rho_grad"))?),
            "tol" => self.tol = value.parse().map_err(|_| bad("tol"))?,
            "max_outer" => self.max_outer = value.parse().map_err(|_| bad("max_outer"))?,
            "inner_tol" => self.inner_tol = value.parse().map_err(|_| bad("inner_tol"))?,
            "out" => self.out_dir = PathBuf::from(value),
            "vtk" => self.vtk = parse_bool(value).ok_or_else(|| bad("vtk"))?,
            "log" => self.log = parse_bool(value).ok_or_else(|| bad("log"))?,
            other => return Err(CliError::Usage(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Loads assignments from a config file on top of the current values.
    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        for (lineno, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "{}:{}: expected key = value",
                    path.display(),
                    lineno + 1
                )));
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}
