use clap::{Args, Parser, Subcommand};
use morley_oc::mesh::{build_disk_mesh, load_mesh, save_mesh};
use morley_oc_cli::config::{parse_bc, parse_levels, RunConfig};
use morley_oc_cli::problems::builtin_problem;
use morley_oc_cli::run::{load_field, run_convergence, run_solve, vertex_values};
use morley_oc_cli::vtk::export_vtk;
use morley_oc_cli::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Finite element solver for elliptic optimal control with control bounds
/// and a pointwise bound on the state gradient.
#[derive(Parser)]
#[command(name = "morley-oc", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one level and write state, KKT report, errors, optional VTK.
    Solve(CommonArgs),
    /// Run a convergence study over a level range; writes convergence.csv.
    Convergence(CommonArgs),
    /// Convert a saved mesh and state field to legacy VTK.
    Export(ExportArgs),
    /// Build, refine, validate, and save meshes.
    Mesh(MeshArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// key = value configuration file applied before flag overrides
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// mesh file (.tmesh) used instead of the built-in disk hierarchy
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// refinement levels a:b (a single level for solve)
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    /// Euclidean bound on the elementwise mean state gradient
    #[arg(long)]
    gmax: Option<f64>,
    /// boundary condition: clamped | simply-supported
    #[arg(long)]
    bc: Option<String>,
    /// dual step size for both multiplier families
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    rho_grad: Option<f64>,
    /// feasibility and complementarity tolerance of the outer iteration
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// write legacy VTK output per level
    #[arg(long)]
    vtk: bool,
    /// write the Uzawa iteration log per level
    #[arg(long)]
    log: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// problem supplying the source term for control recovery
    #[arg(long)]
    problem: Option<String>,
    /// boundary condition the field was computed with
    #[arg(long)]
    bc: Option<String>,
}

#[derive(Args)]
struct MeshArgs {
    /// validate and print statistics of an existing mesh file
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// disk levels a:b to build and save
    #[arg(long, default_value = "0:3")]
    levels: String,
    #[arg(long, default_value_t = 2.0)]
    radius: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn build_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::default();
    if let Some(path) = &args.config {
        config.load_file(path)?;
    }
    if let Some(problem) = &args.problem {
        config.problem = problem.clone();
    }
    if let Some(mesh) = &args.mesh {
        config.mesh_path = Some(mesh.clone());
    }
    if let Some(levels) = &args.levels {
        config.levels = parse_levels(levels)?;
    }
    if let Some(beta) = args.beta {
        config.beta = beta;
    }
    if let Some(gmax) = args.gmax {
        config.g_max = gmax;
    }
    if let Some(bc) = &args.bc {
        config.bc = parse_bc(bc)?;
    }
    if let Some(rho) = args.rho {
        config.rho_ctrl = Some(rho);
        config.rho_grad = Some(rho);
    }
    if let Some(rho) = args.rho_grad {
        config.rho_grad = Some(rho);
    }
    if let Some(tol) = args.tol {
        config.tol = tol;
    }
    if let Some(max_outer) = args.max_outer {
        config.max_outer = max_outer;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    config.vtk |= args.vtk;
    config.log |= args.log;
    Ok(config)
}

fn cmd_solve(args: &CommonArgs) -> Result<(), CliError> {
    let config = build_config(args)?;
    let result = run_solve(&config)?;
    println!(
        "level {}: N = {}, h = {:.4e}, converged = {} ({} outer iterations)",
        result.level, result.n_dofs, result.h, result.converged, result.iterations
    );
    if let Some(errors) = &result.errors {
        println!(
            "errors: energy {:.6e}, H1 {:.6e}, L2 {:.6e}, control {:.6e}",
            errors.energy_err, errors.h1_err, errors.l2_err, errors.control_l2_err
        );
    }
    println!(
        "multipliers: max mu {:.3e}, max lambda {:.3e}",
        result.kkt.max_mu, result.kkt.max_lambda
    );
    println!("artifacts in {}", config.out_dir.display());
    Ok(())
}

fn cmd_convergence(args: &CommonArgs) -> Result<(), CliError> {
    let config = build_config(args)?;
    let table = run_convergence(&config)?;
    println!("level          h      N    energy     EOC        H1     EOC        L2     EOC");
    for r in &table.rows {
        let eoc = |v: Option<f64>| v.map(|x| format!("{x:6.3}")).unwrap_or_else(|| "     -".into());
        println!(
            "{:>5} {:>10.4e} {:>6} {:>9.3e} {} {:>9.3e} {} {:>9.3e} {}",
            r.level,
            r.h,
            r.n_dofs,
            r.energy_err,
            eoc(r.energy_eoc),
            r.h1_err,
            eoc(r.h1_eoc),
            r.l2_err,
            eoc(r.l2_eoc),
        );
    }
    print!("{}", table.summary());
    println!("table written to {}", config.out_dir.join("convergence.csv").display());
    Ok(())
}

fn cmd_export(args: &ExportArgs) -> Result<(), CliError> {
    let mesh = load_mesh(&args.mesh)?;
    let bc = match &args.bc {
        Some(s) => parse_bc(s)?,
        None => Default::default(),
    };
    let dofmap = morley_oc::assembly::build_dof_map_with(&mesh, bc);
    let coeffs = load_field(&args.field)?;
    if coeffs.len() != dofmap.n_dofs {
        return Err(CliError::Field {
            path: args.field.clone(),
            message: format!(
                "field has {} coefficients but the mesh carries {} DOFs",
                coeffs.len(),
                dofmap.n_dofs
            ),
        });
    }
    let spec = match &args.problem {
        Some(name) => Some(builtin_problem(name, None, None)?),
        None => None,
    };
    let points = vertex_values(&dofmap, &coeffs);
    let field = morley_oc::assembly::DiscreteField { coeffs };
    let control_field = morley_oc::analysis::recover_control(&mesh, &dofmap, &field)?;
    let rule = morley_oc::quadrature::triangle_rule(2).expect("degree 2 supported");
    let control: Vec<f64> = (0..mesh.triangles.len())
        .map(|t| {
            let verts = mesh.triangle_vertices(t);
            let area = mesh.signed_area(t);
            rule.integrate(&verts, |p| {
                let source = spec.as_ref().map(|s| (s.source)(p)).unwrap_or(0.0);
                control_field.elements[t].eval_neg_laplacian(p) - source
            }) / area
        })
        .collect();
    let path = export_vtk(&mesh, ("state", &points), &[("control", control)], &args.out)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_mesh(args: &MeshArgs) -> Result<(), CliError> {
    if let Some(path) = &args.mesh {
        let mesh = load_mesh(path)?;
        mesh.validate()?;
        println!(
            "{}: {} vertices, {} edges ({} boundary), {} triangles, h = {:.6e}, Euler = {}",
            path.display(),
            mesh.vertices.len(),
            mesh.edges.len(),
            mesh.edges.len() - mesh.n_interior_edges(),
            mesh.triangles.len(),
            mesh.h,
            mesh.euler_characteristic()
        );
        return Ok(());
    }
    let (first, last) = parse_levels(&args.levels)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Io { path: args.out.clone(), source: e })?;
    for level in first..=last {
        let mesh = build_disk_mesh(args.radius, level);
        let path = args.out.join(format!("disk_level{level}.tmesh"));
        save_mesh(&mesh, &path)?;
        println!(
            "level {level}: {} vertices, {} edges, {} triangles, h = {:.6e} -> {}",
            mesh.vertices.len(),
            mesh.edges.len(),
            mesh.triangles.len(),
            mesh.h,
            path.display()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successful exits
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Convergence(args) => cmd_convergence(args),
        Command::Export(args) => cmd_export(args),
        Command::Mesh(args) => cmd_mesh(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}
