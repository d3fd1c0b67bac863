//! The `bench` command: reproduce one benchmark table as CSV, running the
//! grid h in {1/32, 1/64, 1/128} by g0 in {0.1, 0.2, 0.3}.

use ma_core::fem::{FemContext, NodalField, Support};
use ma_core::generate_disk_mesh;
use ma_core::optimizer::{minimize, ArmijoParams, BetaRule, OptimizerConfig, TerminationReason};
use ma_core::problems::{builtin_problem, l2_error, BuiltinProblem};

use crate::CliError;

pub const BENCH_H: [f64; 3] = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
pub const BENCH_G0: [f64; 3] = [0.1, 0.2, 0.3];

/// The configuration the tables are produced with: the discrete
/// algorithm's Fletcher-Reeves coefficient, initial Armijo step 4, and
/// enough iteration headroom for the finest mesh.
pub fn bench_optimizer_config() -> OptimizerConfig {
    OptimizerConfig {
        beta_rule: BetaRule::FletcherReeves,
        armijo: ArmijoParams {
            s: 4.0,
            ..ArmijoParams::default()
        },
        max_iters: 2000,
        ..OptimizerConfig::default()
    }
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub h: f64,
    pub g0: f64,
    pub l2_error: Option<f64>,
    pub iterations: usize,
    pub termination: String,
}

fn termination_label(t: TerminationReason) -> &'static str {
    match t {
        TerminationReason::JBelowTol => "j-below-tol",
        TerminationReason::GradBelowTol => "grad-below-tol",
        TerminationReason::MaxIters => "max-iters",
        TerminationReason::LineSearchFailed => "line-search-failed",
    }
}

/// Runs one table cell; failures land in the termination column instead
/// of aborting the table.
pub fn bench_cell(problem: BuiltinProblem, ctx: &FemContext, h: f64, g0: f64) -> BenchRow {
    let spec = builtin_problem(problem);
    let mesh = ctx.mesh();
    let f = spec.f_nodal(mesh);
    let g0_field = NodalField::constant(mesh, Support::InteriorOnly, g0);
    match minimize(ctx, &f, &g0_field, &bench_optimizer_config()) {
        Ok(report) => {
            let err = l2_error(mesh, &report.final_u, &spec).ok();
            BenchRow {
                h,
                g0,
                l2_error: err,
                iterations: report.iterations(),
                termination: termination_label(report.termination).to_string(),
            }
        }
        Err(e) => BenchRow {
            h,
            g0,
            l2_error: None,
            iterations: 0,
            termination: format!("error: {e}"),
        },
    }
}

/// Produces the full 3x3 CSV for one benchmark problem. The three `g0`
/// cells of each mesh share the factorization and run concurrently; each
/// cell's result is a pure function of (problem, h, g0).
pub fn cmd_bench(problem: BuiltinProblem) -> Result<String, CliError> {
    let mut rows = Vec::new();
    for h in BENCH_H {
        let mesh = generate_disk_mesh(h).map_err(|e| CliError::Solver(e.to_string()))?;
        let ctx = FemContext::build(&mesh).map_err(|e| CliError::Solver(e.to_string()))?;
        let cells: Vec<BenchRow> = std::thread::scope(|scope| {
            let handles: Vec<_> = BENCH_G0
                .iter()
                .map(|&g0| {
                    let ctx = &ctx;
                    scope.spawn(move || bench_cell(problem, ctx, h, g0))
                })
                .collect();
            handles
                .into_iter()
                .map(|j| j.join().expect("bench cell panicked"))
                .collect()
        });
        rows.extend(cells);
    }

    let mut out = String::from("h,g0,l2_error,iterations,termination\n");
    for row in &rows {
        let err = row.l2_error.map(|e| format!("{e:e}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.h, row.g0, err, row.iterations, row.termination
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bench_cell_reports_converged_row() {
        let mesh = generate_disk_mesh(0.3).unwrap();
        let ctx = FemContext::build(&mesh).unwrap();
        let row = bench_cell(BuiltinProblem::Test3, &ctx, 0.3, 0.2);
        assert_eq!(row.termination, "j-below-tol");
        assert!(row.l2_error.unwrap() > 0.0);
        assert!(row.iterations > 0);
    }

    #[test]
    fn bench_cells_are_deterministic() {
        let mesh = generate_disk_mesh(0.35).unwrap();
        let ctx = FemContext::build(&mesh).unwrap();
        let a = bench_cell(BuiltinProblem::Test1, &ctx, 0.35, 0.1);
        let b = bench_cell(BuiltinProblem::Test1, &ctx, 0.35, 0.1);
        assert_eq!(a.l2_error, b.l2_error);
        assert_eq!(a.iterations, b.iterations);
    }
}
