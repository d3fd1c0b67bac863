//! The `solve` command: run one configured minimization and write its
//! artifacts (run report, convergence trace, final fields).

use std::fs;
use std::path::PathBuf;

use ma_core::fem::{FemContext, NodalField, Support};
use ma_core::generate_disk_mesh;
use ma_core::mesh::Mesh;
use ma_core::objective::ObjectiveError;
use ma_core::optimizer::{minimize, OptimizerError, RunReport, TerminationReason};
use ma_core::problems::{builtin_problem, l2_error, ProblemSpec};

use crate::config::{InitialShift, RunConfig};
use crate::export::{export_field, import_field, ExportFormat};
use crate::CliError;

pub struct SolveOutcome {
    pub termination: TerminationReason,
    pub iterations: usize,
    pub final_j: f64,
    pub l2_error: Option<f64>,
    pub out_dir: PathBuf,
}

/// Writes `trace.csv`: one row per recorded iterate. The final record has
/// no step, so its alpha/beta columns stay empty.
fn trace_csv(report: &RunReport) -> String {
    let mut out = String::from("k,J,grad_norm,alpha,beta\n");
    for r in &report.records {
        let alpha = r.alpha.map(|a| a.to_string()).unwrap_or_default();
        let beta = r.beta.map(|b| b.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.k, r.j, r.grad_norm, alpha, beta
        ));
    }
    out
}

fn report_text(config: &RunConfig, mesh: &Mesh, report: &RunReport, error: Option<f64>) -> String {
    let mut out = String::new();
    out.push_str(&format!("problem: {}\n", config.problem));
    out.push_str(&format!("h: {}\n", config.h));
    let quality = mesh.quality();
    out.push_str(&format!(
        "mesh: {} vertices, {} interior, {} triangles\n",
        mesh.n_vertices(),
        mesh.n_interior(),
        mesh.triangles().len()
    ));
    out.push_str(&format!(
        "mesh_quality: min_angle_deg={:.2} max_edge={:.6}\n",
        quality.min_angle_rad.to_degrees(),
        quality.max_edge
    ));
    out.push_str(&format!("beta_rule: {:?}\n", config.beta_rule));
    out.push_str(&format!(
        "armijo: s={} rho={} mu={} max_backtracks={}\n",
        config.armijo.s, config.armijo.rho, config.armijo.mu, config.armijo.max_backtracks
    ));
    out.push_str(&format!("termination: {:?}\n", report.termination));
    out.push_str(&format!("iterations: {}\n", report.iterations()));
    out.push_str(&format!("final_J: {:e}\n", report.final_j));
    out.push_str(&format!(
        "final_grad_norm: {:e}\n",
        report
            .records
            .last()
            .map(|r| r.grad_norm)
            .unwrap_or(f64::NAN)
    ));
    if let Some(e) = error {
        out.push_str(&format!("l2_error_vs_exact: {e:e}\n"));
    }
    out.push_str(&format!(
        "wall_time_s: {:.3}\n",
        report.wall_time.as_secs_f64()
    ));
    out
}

fn initial_shift(mesh: &Mesh, config: &RunConfig) -> Result<NodalField, CliError> {
    match &config.g0 {
        InitialShift::Constant(c) => Ok(NodalField::constant(mesh, Support::InteriorOnly, *c)),
        InitialShift::FieldFile(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read g0 field file {}: {e}", path.display()))
            })?;
            let full = import_field(mesh, &text)?;
            if config.project_nonnegative && full.values().iter().any(|v| *v < 0.0) {
                return Err(CliError::Config(
                    "key `g0`: field file has negative values but project_nonnegative is on".into(),
                ));
            }
            Ok(full.restrict_to_interior(mesh))
        }
    }
}

/// Runs the configured solve and writes all artifacts into `out_dir`.
pub fn cmd_solve(config: &RunConfig) -> Result<SolveOutcome, CliError> {
    let problem: ProblemSpec = builtin_problem(config.problem);
    let mesh = generate_disk_mesh(config.h).map_err(|e| CliError::Config(e.to_string()))?;
    let ctx = FemContext::build(&mesh).map_err(|e| CliError::Solver(e.to_string()))?;
    let f = problem.f_nodal(&mesh);
    let g0 = initial_shift(&mesh, config)?;

    let report = minimize(&ctx, &f, &g0, &config.optimizer_config()).map_err(|e| match e {
        // problem-definition violations are configuration mistakes
        OptimizerError::InvalidConfig(_)
        | OptimizerError::Objective(ObjectiveError::NegativeDensity { .. }) => {
            CliError::Config(e.to_string())
        }
        other => CliError::Solver(other.to_string()),
    })?;

    let error = if problem.has_exact() {
        Some(
            l2_error(&mesh, &report.final_u, &problem)
                .map_err(|e| CliError::Solver(e.to_string()))?,
        )
    } else {
        None
    };

    fs::create_dir_all(&config.out_dir).map_err(|e| {
        CliError::Config(format!(
            "cannot create out_dir {}: {e}",
            config.out_dir.display()
        ))
    })?;
    let write = |name: &str, contents: String| -> Result<(), CliError> {
        fs::write(config.out_dir.join(name), contents)
            .map_err(|e| CliError::Solver(format!("writing {name}: {e}")))
    };
    write("report.txt", report_text(config, &mesh, &report, error))?;
    write("trace.csv", trace_csv(&report))?;
    write(
        "u.csv",
        export_field(&mesh, &report.final_u, ExportFormat::CsvPoints),
    )?;
    write(
        "g.csv",
        export_field(&mesh, &report.final_g, ExportFormat::CsvPoints),
    )?;
    write(
        "u.vtk.txt",
        export_field(&mesh, &report.final_u, ExportFormat::VtkLikeText),
    )?;
    write(
        "g.vtk.txt",
        export_field(&mesh, &report.final_g, ExportFormat::VtkLikeText),
    )?;

    Ok(SolveOutcome {
        termination: report.termination,
        iterations: report.iterations(),
        final_j: report.final_j,
        l2_error: error,
        out_dir: config.out_dir.clone(),
    })
}
