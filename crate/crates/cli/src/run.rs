//! Experiment orchestration: single solves and convergence studies, with CSV
//! and VTK artifacts.

use crate::config::RunConfig;
use crate::problems::builtin_problem;
use crate::vtk::export_vtk;
use crate::CliError;
use morley_oc::analysis::{error_norms, estimate_orders, ErrorReport};
use morley_oc::assembly::{
    assemble_load, assemble_system, build_constraints, build_dof_map_with, DofMap,
};
use morley_oc::mesh::{build_disk_mesh, load_mesh, refine_uniform, Mesh};
use morley_oc::problem::ProblemSpec;
use morley_oc::solver::{uzawa_solve_warm, KktReport, SolverConfig, UzawaSolution, WarmStart};
use std::io::Write;
use std::path::Path;

pub struct LevelResult {
    pub level: usize,
    pub h: f64,
    pub n_dofs: usize,
    pub errors: Option<ErrorReport>,
    pub kkt: KktReport,
    pub converged: bool,
    pub iterations: usize,
    pub solution: UzawaSolution,
    pub mesh: Mesh,
    pub dofmap: DofMap,
}

fn mesh_for_level(config: &RunConfig, level: usize) -> Result<Mesh, CliError> {
    match &config.mesh_path {
        Some(path) => {
            let mut mesh = load_mesh(path)?;
            for _ in 0..level {
                mesh = refine_uniform(&mesh);
            }
            Ok(mesh)
        }
        None => Ok(build_disk_mesh(config.disk_radius, level)),
    }
}

fn solver_config(config: &RunConfig, out_prefix: Option<&Path>, level: usize) -> SolverConfig {
    let mut sc = SolverConfig::for_beta(config.beta);
    if let Some(rho) = config.rho_ctrl {
        sc.rho_ctrl = rho;
    }
    if let Some(rho) = config.rho_grad {
        sc.rho_grad = rho;
    }
    sc.tol_feas = config.tol;
    sc.tol_comp = config.tol;
    sc.max_outer = config.max_outer;
    sc.inner_tol = config.inner_tol;
    if config.log {
        if let Some(dir) = out_prefix {
            sc.log_path = Some(dir.join(format!("iterations_level{level}.csv")));
        }
    }
    sc
}

/// Assembles and solves one level. No files are written.
pub fn solve_level(
    config: &RunConfig,
    spec: &ProblemSpec,
    level: usize,
    out_dir: Option<&Path>,
) -> Result<LevelResult, CliError> {
    solve_level_warm(config, spec, level, out_dir, None)
}

/// As [`solve_level`], with optional initial multipliers (used by the
/// convergence study to carry the dual state across refinement levels).
pub fn solve_level_warm(
    config: &RunConfig,
    spec: &ProblemSpec,
    level: usize,
    out_dir: Option<&Path>,
    warm: Option<WarmStart>,
) -> Result<LevelResult, CliError> {
    let mesh = mesh_for_level(config, level)?;
    let dofmap = build_dof_map_with(&mesh, config.bc);
    let a = assemble_system(&mesh, &dofmap, spec)?;
    let b = assemble_load(&mesh, &dofmap, spec)?;
    let constraints = build_constraints(&mesh, &dofmap, spec)?;
    let sc = solver_config(config, out_dir, level);
    let solution = uzawa_solve_warm(&a, &b, &constraints, &sc, warm)?;
    let errors = if spec.exact_state.is_some() {
        Some(error_norms(&mesh, &dofmap, &solution.y, spec)?)
    } else {
        None
    };
    Ok(LevelResult {
        level,
        h: mesh.h,
        n_dofs: dofmap.n_dofs,
        errors,
        kkt: solution.report,
        converged: solution.state.converged,
        iterations: solution.state.iterations,
        solution,
        mesh,
        dofmap,
    })
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })
}

pub fn save_field(path: &Path, coeffs: &[f64]) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    let mut out = std::io::BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(out, "# state coefficient vector")?;
        writeln!(out, "n {}", coeffs.len())?;
        for c in coeffs {
            writeln!(out, "{c}")?;
        }
        out.flush()
    })()
    .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

pub fn load_field(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    let mut expected: Option<usize> = None;
    let mut coeffs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix("n ") {
            expected = Some(rest.trim().parse().map_err(|_| CliError::Field {
                path: path.to_path_buf(),
                message: format!("line {}: invalid length", lineno + 1),
            })?);
        } else {
            coeffs.push(content.parse().map_err(|_| CliError::Field {
                path: path.to_path_buf(),
                message: format!("line {}: invalid coefficient {content:?}", lineno + 1),
            })?);
        }
    }
    if let Some(n) = expected {
        if n != coeffs.len() {
            return Err(CliError::Field {
                path: path.to_path_buf(),
                message: format!("expected {n} coefficients, found {}", coeffs.len()),
            });
        }
    }
    Ok(coeffs)
}

/// State values at mesh vertices (boundary vertices are pinned to zero).
pub fn vertex_values(dofmap: &DofMap, coeffs: &[f64]) -> Vec<f64> {
    dofmap
        .vertex_dof
        .iter()
        .map(|dof| dof.map(|g| coeffs[g]).unwrap_or(0.0))
        .collect()
}

fn write_kkt_report(path: &Path, result: &LevelResult) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    let mut out = std::io::BufWriter::new(file);
    let k = &result.kkt;
    (|| -> std::io::Result<()> {
        writeln!(out, "level {}", result.level)?;
        writeln!(out, "h {:.16e}", result.h)?;
        writeln!(out, "n_dofs {}", result.n_dofs)?;
        writeln!(out, "converged {}", result.converged)?;
        writeln!(out, "iterations {}", result.iterations)?;
        writeln!(out, "stationarity {:.16e}", k.stationarity)?;
        writeln!(out, "feas_ctrl {:.16e}", k.feas_ctrl)?;
        writeln!(out, "feas_grad {:.16e}", k.feas_grad)?;
        writeln!(out, "comp_ctrl_upper {:.16e}", k.comp_ctrl_upper)?;
        writeln!(out, "comp_ctrl_lower {:.16e}", k.comp_ctrl_lower)?;
        writeln!(out, "comp_grad {:.16e}", k.comp_grad)?;
        writeln!(out, "max_mu {:.16e}", k.max_mu)?;
        writeln!(out, "max_lambda {:.16e}", k.max_lambda)?;
        out.flush()
    })()
    .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn write_vtk_artifacts(
    result: &LevelResult,
    spec: &ProblemSpec,
    path: &Path,
) -> Result<(), CliError> {
    let mesh = &result.mesh;
    let points = vertex_values(&result.dofmap, &result.solution.y.coeffs);
    let constraints = build_constraints(mesh, &result.dofmap, spec)?;
    let mut control = Vec::with_capacity(mesh.triangles.len());
    for (t, elem) in constraints.elements.iter().enumerate() {
        let centroid_source = {
            let tri = mesh.triangle_vertices(t);
            let c = [
                (tri[0][0] + tri[1][0] + tri[2][0]) / 3.0,
                (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0,
            ];
            (spec.source)(c)
        };
        control.push(elem.control_value(&result.solution.y.coeffs) - centroid_source);
    }
    let cells = vec![
        ("control", control),
        ("mu", result.solution.state.mu.clone()),
        ("lambda_plus", result.solution.state.lambda_plus.clone()),
        ("lambda_minus", result.solution.state.lambda_minus.clone()),
    ];
    export_vtk(mesh, ("state", &points), &cells, path)?;
    Ok(())
}

/// Single solve with artifacts: state field, KKT report, error report row,
/// optional VTK.
pub fn run_solve(config: &RunConfig) -> Result<LevelResult, CliError> {
    let spec = builtin_problem(&config.problem, Some(config.beta), Some(config.g_max))?;
    ensure_out_dir(&config.out_dir)?;
    let level = config.levels.0;
    let result = solve_level(config, &spec, level, Some(&config.out_dir))?;
    save_field(
        &config.out_dir.join(format!("state_level{level}.field")),
        &result.solution.y.coeffs,
    )?;
    write_kkt_report(&config.out_dir.join(format!("kkt_level{level}.txt")), &result)?;
    if let Some(errors) = &result.errors {
        let path = config.out_dir.join(format!("errors_level{level}.csv"));
        let mut table = ConvergenceTable { rows: vec![Row::from_result(&result, errors)] };
        table.finish();
        table.write_csv(&path)?;
    }
    if config.vtk {
        write_vtk_artifacts(
            &result,
            &spec,
            &config.out_dir.join(format!("solution_level{level}.vtk")),
        )?;
    }
    Ok(result)
}

#[derive(Debug, Clone)]
pub struct Row {
    pub level: usize,
    pub h: f64,
    pub n_dofs: usize,
    pub energy_err: f64,
    pub h1_err: f64,
    pub l2_err: f64,
    pub control_l2_err: f64,
    pub converged: bool,
    pub energy_eoc: Option<f64>,
    pub h1_eoc: Option<f64>,
    pub l2_eoc: Option<f64>,
    pub control_eoc: Option<f64>,
}

impl Row {
    fn from_result(result: &LevelResult, errors: &ErrorReport) -> Row {
        Row {
            level: result.level,
            h: errors.h,
            n_dofs: errors.n_dofs,
            energy_err: errors.energy_err,
            h1_err: errors.h1_err,
            l2_err: errors.l2_err,
            control_l2_err: errors.control_l2_err,
            converged: result.converged,
            energy_eoc: None,
            h1_eoc: None,
            l2_eoc: None,
            control_eoc: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<Row>,
}

impl ConvergenceTable {
    /// Fills the EOC columns from consecutive rows.
    fn finish(&mut self) {
        if self.rows.len() < 2 {
            return;
        }
        let hs: Vec<f64> = self.rows.iter().map(|r| r.h).collect();
        let pick = |f: &dyn Fn(&Row) -> f64| -> Vec<f64> { self.rows.iter().map(f).collect() };
        let energy = estimate_orders(&pick(&|r| r.energy_err), &hs);
        let h1 = estimate_orders(&pick(&|r| r.h1_err), &hs);
        let l2 = estimate_orders(&pick(&|r| r.l2_err), &hs);
        let control = estimate_orders(&pick(&|r| r.control_l2_err), &hs);
        for (k, row) in self.rows.iter_mut().enumerate() {
            row.energy_eoc = energy[k];
            row.h1_eoc = h1[k];
            row.l2_eoc = l2[k];
            row.control_eoc = control[k];
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        let mut out = std::io::BufWriter::new(file);
        let eoc = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_else(|| "-".into());
        (|| -> std::io::Result<()> {
            writeln!(
                out,
                "level,h,N,energy_err,energy_eoc,h1_err,h1_eoc,l2_err,l2_eoc,control_l2_err,control_eoc,converged"
            )?;
            for r in &self.rows {
                writeln!(
                    out,
                    "{},{:.16e},{},{:.16e},{},{:.16e},{},{:.16e},{},{:.16e},{},{}",
                    r.level,
                    r.h,
                    r.n_dofs,
                    r.energy_err,
                    eoc(r.energy_eoc),
                    r.h1_err,
                    eoc(r.h1_eoc),
                    r.l2_err,
                    eoc(r.l2_eoc),
                    r.control_l2_err,
                    eoc(r.control_eoc),
                    if r.converged { 1 } else { 0 },
                )?;
            }
            out.flush()
        })()
        .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        if let Some(last) = self.rows.last() {
            let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
            s.push_str(&format!(
                "finest pair EOC: energy {}, H1 {}, L2 {}, control {}\n",
                fmt(last.energy_eoc),
                fmt(last.h1_eoc),
                fmt(last.l2_eoc),
                fmt(last.control_eoc)
            ));
        }
        s.push_str(
            "expected energy-norm order for a state in H^{2+gamma}: \
             tau = min(gamma - delta, 1 - gamma - delta, gamma), about 0.5 for gamma = 1/2\n",
        );
        s
    }
}

fn prolong_cellwise(values: &[f64]) -> Vec<f64> {
    let mut fine = Vec::with_capacity(4 * values.len());
    for &v in values {
        fine.extend_from_slice(&[v, v, v, v]);
    }
    fine
}

/// Convergence study over the configured level range. A level whose solver
/// did not converge is flagged in its row and the study continues.
pub fn run_convergence(config: &RunConfig) -> Result<ConvergenceTable, CliError> {
    let (first, last) = config.levels;
    if last == first {
        return Err(CliError::Usage(
            "convergence study needs at least two levels (use --levels a:b)".into(),
        ));
    }
    let spec = builtin_problem(&config.problem, Some(config.beta), Some(config.g_max))?;
    ensure_out_dir(&config.out_dir)?;
    let mut table = ConvergenceTable { rows: Vec::new() };
    let mut warm: Option<WarmStart> = None;
    for level in first..=last {
        let result = solve_level_warm(config, &spec, level, Some(&config.out_dir), warm.take())?;
        // uniform quadrisection maps element t to children 4t..4t+3: carry
        // the converged multipliers down as the next level's initial guess
        warm = Some(WarmStart {
            lambda_plus: prolong_cellwise(&result.solution.state.lambda_plus),
            lambda_minus: prolong_cellwise(&result.solution.state.lambda_minus),
            mu: prolong_cellwise(&result.solution.state.mu),
        });
        let errors = result.errors.as_ref().ok_or(CliError::Usage(
            "convergence study requires a problem with exact solution fields".into(),
        ))?;
        if config.vtk {
            write_vtk_artifacts(
                &result,
                &spec,
                &config.out_dir.join(format!("solution_level{level}.vtk")),
            )?;
        }
        write_kkt_report(&config.out_dir.join(format!("kkt_level{level}.txt")), &result)?;
        table.rows.push(Row::from_result(&result, errors));
    }
    table.finish();
    table.write_csv(&config.out_dir.join("convergence.csv"))?;
    let summary = table.summary();
    std::fs::write(config.out_dir.join("summary.txt"), &summary)
        .map_err(|e| CliError::Io { path: config.out_dir.join("summary.txt"), source: e })?;
    Ok(table)
}
