//! Conjugate-gradient minimization of the discrete functional: direction
//! updates (Polak-Ribiere or Fletcher-Reeves beta), Armijo backtracking,
//! stopping rules, and the iteration report.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::fem::{FemContext, NodalField};
use crate::objective::{self, ObjectiveError, ObjectiveState};

/// Which conjugate-direction coefficient to use.
///
/// `PolakRibiere` is `grad_k . (grad_k - grad_prev) / |grad_prev|^2`;
/// `FletcherReeves` is `|grad_k|^2 / |grad_prev|^2`. Both are offered
/// because the continuous and discrete statements of the algorithm name
/// different rules; Polak-Ribiere is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BetaRule {
    #[default]
    PolakRibiere,
    FletcherReeves,
}

/// Backtracking parameters: trial steps `s, s*rho, s*rho^2, ...` accepted
/// on sufficient decrease with margin `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoParams {
    pub s: f64,
    pub rho: f64,
    pub mu: f64,
    pub max_backtracks: u32,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        ArmijoParams {
            s: 1.0,
            rho: 0.5,
            mu: 1e-4,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub beta_rule: BetaRule,
    pub armijo: ArmijoParams,
    /// Stop as soon as `|J| <= stop_j`.
    pub stop_j: f64,
    /// Safety stop on the gradient norm; on coarse meshes the attainable
    /// minimum of the discrete functional can sit above `stop_j`.
    pub stop_grad: f64,
    pub max_iters: usize,
    /// Replace a non-descent conjugate direction by steepest descent.
    pub restart_on_nondescent: bool,
    /// Clamp negative components of the iterate to zero after each update.
    pub project_nonnegative: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            beta_rule: BetaRule::default(),
            armijo: ArmijoParams::default(),
            stop_j: 1e-6,
            stop_grad: 1e-10,
            max_iters: 500,
            restart_on_nondescent: true,
            project_nonnegative: false,
        }
    }
}

impl OptimizerConfig {
    /// Negated comparisons double as NaN guards here.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |msg: &str| Err(OptimizerError::InvalidConfig(msg.to_string()));
        if !(self.armijo.s > 0.0) {
            return bad("armijo.s must be > 0");
        }
        if !(self.armijo.rho > 0.0 && self.armijo.rho < 1.0) {
            return bad("armijo.rho must lie in (0, 1)");
        }
        if !(self.armijo.mu > 0.0 && self.armijo.mu < 1.0) {
            return bad("armijo.mu must lie in (0, 1)");
        }
        if self.max_iters < 1 {
            return bad("max_iters must be >= 1");
        }
        if !(self.stop_j >= 0.0) || !(self.stop_grad >= 0.0) {
            return bad("stopping tolerances must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    /// `|J| <= stop_j` (the solve succeeded).
    JBelowTol,
    /// Gradient norm fell below `stop_grad`; the discrete minimum was
    /// reached without `J` itself crossing `stop_j`.
    GradBelowTol,
    MaxIters,
    /// Backtracking exhausted without sufficient decrease; `J` is
    /// presumed at its numerical floor.
    LineSearchFailed,
}

impl TerminationReason {
    /// Both tolerance-based stops count as successful minimization.
    pub fn is_converged(self) -> bool {
        matches!(
            self,
            TerminationReason::JBelowTol | TerminationReason::GradBelowTol
        )
    }
}

/// One row of the iteration trace. `alpha`, `beta`, and `backtracks`
/// describe the step taken *from* this iterate; the final record of a run
/// has no step.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub j: f64,
    pub grad_norm: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub backtracks: u32,
}

/// Full outcome of a minimization run.
#[derive(Debug)]
pub struct RunReport {
    pub records: Vec<IterationRecord>,
    pub termination: TerminationReason,
    pub final_g: NodalField,
    pub final_u: NodalField,
    pub final_j: f64,
    pub wall_time: Duration,
}

impl RunReport {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}

/// Polak-Ribiere coefficient. `None` signals a vanished previous
/// gradient, i.e. convergence, instead of dividing by zero.
pub fn prp_beta(grad_k: &[f64], grad_prev: &[f64]) -> Option<f64> {
    let denom = dot(grad_prev, grad_prev);
    if denom == 0.0 {
        return None;
    }
    let num: f64 = grad_k
        .iter()
        .zip(grad_prev)
        .map(|(gk, gp)| gk * (gk - gp))
        .sum();
    Some(num / denom)
}

/// Fletcher-Reeves coefficient from the squared gradient norms.
pub fn fr_beta(gamma_k: f64, gamma_prev: f64) -> Option<f64> {
    if gamma_prev == 0.0 {
        None
    } else {
        Some(gamma_k / gamma_prev)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Successful line search: the accepted step, the direction actually
/// stepped along (steepest descent when a restart kicked in), and the
/// already-evaluated trial point.
#[derive(Debug)]
pub struct ArmijoSuccess<S> {
    pub alpha: f64,
    pub direction: Vec<f64>,
    pub trial: Vec<f64>,
    pub j_new: f64,
    pub state: S,
    pub backtracks: u32,
    pub restarted: bool,
}

#[derive(Debug)]
pub enum ArmijoOutcome<S> {
    Accepted(ArmijoSuccess<S>),
    /// All trial steps failed the sufficient-decrease test.
    Exhausted {
        backtracks: u32,
    },
}

/// Scans `s, s*rho, s*rho^2, ...` and accepts the first (largest) step
/// with `J(g) - J(g + alpha d) >= -alpha mu grad.d`.
///
/// When `direction` is not a descent direction (`grad.d >= 0`) and
/// `restart_on_nondescent` is set, the search falls back to `-grad`
/// first. The objective callback returns the value together with whatever
/// state it computed, so the accepted evaluation is reused by the caller.
pub fn armijo_search<S, E>(
    j_current: f64,
    g: &[f64],
    grad: &[f64],
    direction: &[f64],
    params: &ArmijoParams,
    restart_on_nondescent: bool,
    mut eval: impl FnMut(&[f64]) -> Result<(f64, S), E>,
) -> Result<ArmijoOutcome<S>, E> {
    let mut slope = dot(grad, direction);
    let mut direction = direction.to_vec();
    let mut restarted = false;
    if slope >= 0.0 && restart_on_nondescent {
        direction = grad.iter().map(|v| -v).collect();
        slope = -dot(grad, grad);
        restarted = true;
    }
    let mut alpha = params.s;
    for backtracks in 0..=params.max_backtracks {
        let trial: Vec<f64> = g
            .iter()
            .zip(&direction)
            .map(|(gv, dv)| gv + alpha * dv)
            .collect();
        let (j_new, state) = eval(&trial)?;
        if j_current - j_new >= -alpha * params.mu * slope {
            return Ok(ArmijoOutcome::Accepted(ArmijoSuccess {
                alpha,
                direction,
                trial,
                j_new,
                state,
                backtracks,
                restarted,
            }));
        }
        alpha *= params.rho;
    }
    Ok(ArmijoOutcome::Exhausted {
        backtracks: params.max_backtracks + 1,
    })
}

/// Outcome of the generic descent loop.
struct DriveOutcome<S> {
    records: Vec<IterationRecord>,
    termination: TerminationReason,
    final_g: Vec<f64>,
    final_j: f64,
    final_state: S,
}

/// The conjugate-gradient loop over plain coefficient vectors; the
/// objective and its gradient are closures so the loop logic is testable
/// on model problems.
fn drive<S, E>(
    g0: Vec<f64>,
    config: &OptimizerConfig,
    mut eval: impl FnMut(&[f64]) -> Result<(f64, S), E>,
    mut grad_of: impl FnMut(&S) -> Vec<f64>,
) -> Result<DriveOutcome<S>, E> {
    let mut g = g0;
    let (mut j, mut state) = eval(&g)?;
    let mut grad = grad_of(&state);
    let mut d_prev: Vec<f64> = Vec::new();
    let mut grad_prev: Vec<f64> = Vec::new();
    let mut records = Vec::new();

    let mut k = 0usize;
    let termination = loop {
        let grad_norm = norm(&grad);
        let mut record = IterationRecord {
            k,
            j,
            grad_norm,
            alpha: None,
            beta: None,
            backtracks: 0,
        };

        if j.abs() <= config.stop_j {
            records.push(record);
            break TerminationReason::JBelowTol;
        }
        if grad_norm <= config.stop_grad {
            records.push(record);
            break TerminationReason::GradBelowTol;
        }
        if k == config.max_iters {
            records.push(record);
            break TerminationReason::MaxIters;
        }

        let beta = if k == 0 {
            None
        } else {
            match config.beta_rule {
                BetaRule::PolakRibiere => prp_beta(&grad, &grad_prev),
                BetaRule::FletcherReeves => fr_beta(dot(&grad, &grad), dot(&grad_prev, &grad_prev)),
            }
        };
        if k > 0 && beta.is_none() {
            // vanished previous gradient: converged
            records.push(record);
            break TerminationReason::GradBelowTol;
        }
        record.beta = beta;
        let direction: Vec<f64> = match beta {
            None => grad.iter().map(|v| -v).collect(),
            Some(b) => grad
                .iter()
                .zip(&d_prev)
                .map(|(gv, dv)| -gv + b * dv)
                .collect(),
        };

        match armijo_search(
            j,
            &g,
            &grad,
            &direction,
            &config.armijo,
            config.restart_on_nondescent,
            &mut eval,
        )? {
            ArmijoOutcome::Accepted(mut acc) => {
                if config.project_nonnegative {
                    let mut clamped = false;
                    for v in acc.trial.iter_mut() {
                        if *v < 0.0 {
                            *v = 0.0;
                            clamped = true;
                        }
                    }
                    if clamped {
                        let (j_proj, state_proj) = eval(&acc.trial)?;
                        acc.j_new = j_proj;
                        acc.state = state_proj;
                    }
                }
                record.alpha = Some(acc.alpha);
                record.backtracks = acc.backtracks;
                records.push(record);

                grad_prev = std::mem::take(&mut grad);
                d_prev = std::mem::take(&mut acc.direction);
                g = acc.trial;
                j = acc.j_new;
                state = acc.state;
                grad = grad_of(&state);
                k += 1;
            }
            ArmijoOutcome::Exhausted { backtracks } => {
                record.backtracks = backtracks;
                records.push(record);
                break TerminationReason::LineSearchFailed;
            }
        }
    };

    Ok(DriveOutcome {
        records,
        termination,
        final_g: g,
        final_j: j,
        final_state: state,
    })
}

/// Minimizes `J_h` starting from `g0`: solve the Poisson subproblem,
/// evaluate `J` and its gradient, update along the conjugate direction
/// with an Armijo step, and stop on `|J| <= stop_j`, a vanished gradient,
/// or the iteration cap.
pub fn minimize(
    ctx: &FemContext,
    f: &NodalField,
    g0: &NodalField,
    config: &OptimizerConfig,
) -> Result<RunReport, OptimizerError> {
    config.validate()?;
    if g0.values().iter().any(|v| !v.is_finite()) {
        return Err(OptimizerError::InvalidConfig(
            "initial iterate has non-finite components".into(),
        ));
    }
    let mesh = ctx.mesh();
    let start = Instant::now();
    let outcome = drive(
        g0.values().to_vec(),
        config,
        |g_raw| {
            let g = NodalField::interior(mesh, g_raw.to_vec());
            objective::evaluate(ctx, f, &g).map(|st| (st.j, st))
        },
        |state: &ObjectiveState| objective::gradient_from_state(ctx, state).values().to_vec(),
    )?;
    Ok(RunReport {
        records: outcome.records,
        termination: outcome.termination,
        final_g: NodalField::interior(mesh, outcome.final_g),
        final_u: outcome.final_state.u.clone(),
        final_j: outcome.final_j,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn prp_beta_cases() {
        // identical gradients: the difference vanishes
        assert_eq!(prp_beta(&[1.0, 2.0], &[1.0, 2.0]), Some(0.0));
        // orthogonal gradients: cross term drops
        let b = prp_beta(&[3.0, 0.0], &[0.0, 2.0]).unwrap();
        assert!((b - 9.0 / 4.0).abs() < 1e-15);
        // two-component arithmetic from first principles
        assert_eq!(prp_beta(&[1.0, 0.0], &[0.0, 1.0]), Some(1.0));
        // vanished previous gradient signals convergence
        assert_eq!(prp_beta(&[1.0, 0.0], &[0.0, 0.0]), None);
    }

    #[test]
    fn fr_beta_cases() {
        assert_eq!(fr_beta(2.0, 2.0), Some(1.0));
        assert_eq!(fr_beta(0.0, 3.0), Some(0.0));
        assert_eq!(fr_beta(4.0, 2.0), Some(2.0));
        assert_eq!(fr_beta(1.0, 0.0), None);
    }

    #[test]
    fn beta_rules_are_distinguishable_on_identical_gradients() {
        let grad = [0.4, -0.3, 1.1];
        let gamma = dot(&grad, &grad);
        assert_eq!(prp_beta(&grad, &grad), Some(0.0));
        assert_eq!(fr_beta(gamma, gamma), Some(1.0));
    }

    fn half_norm_squared(x: &[f64]) -> Result<(f64, Vec<f64>), Infallible> {
        Ok((0.5 * dot(x, x), x.to_vec()))
    }

    #[test]
    fn armijo_accepts_unit_step_on_mild_quadratic() {
        // J(g) = |g|^2/2 at g = (1, 0), d = -g: alpha = 1 lands at the minimum
        let g = [1.0, 0.0];
        let grad = [1.0, 0.0];
        let d = [-1.0, 0.0];
        let params = ArmijoParams::default();
        match armijo_search(0.5, &g, &grad, &d, &params, false, half_norm_squared).unwrap() {
            ArmijoOutcome::Accepted(acc) => {
                assert_eq!(acc.alpha, 1.0);
                assert_eq!(acc.backtracks, 0);
                assert!(!acc.restarted);
                assert!(acc.j_new < 0.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn armijo_backtracks_on_overshoot() {
        // same quadratic, d = -4g: alpha=1 overshoots to J=4.5, alpha=1/2
        // returns to J=1/2 (no decrease), alpha=1/4 reaches the minimum
        let g = [1.0, 0.0];
        let grad = [1.0, 0.0];
        let d = [-4.0, 0.0];
        let params = ArmijoParams::default();
        match armijo_search(0.5, &g, &grad, &d, &params, false, half_norm_squared).unwrap() {
            ArmijoOutcome::Accepted(acc) => {
                assert_eq!(acc.alpha, 0.25);
                assert_eq!(acc.backtracks, 2);
                assert_eq!(acc.j_new, 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn armijo_restarts_on_zero_slope_direction() {
        // d orthogonal to the gradient has zero slope; with the restart
        // enabled the search proceeds along -grad and accepts alpha = 1
        let g = [1.0, 0.0];
        let grad = [1.0, 0.0];
        let d = [0.0, 1.0];
        let params = ArmijoParams::default();
        match armijo_search(0.5, &g, &grad, &d, &params, true, half_norm_squared).unwrap() {
            ArmijoOutcome::Accepted(acc) => {
                assert!(acc.restarted);
                assert_eq!(acc.direction, vec![-1.0, 0.0]);
                assert_eq!(acc.alpha, 1.0);
                assert_eq!(acc.j_new, 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn armijo_exhausts_on_ascent_direction_without_restart() {
        let g = [1.0, 0.0];
        let grad = [1.0, 0.0];
        let d = [1.0, 0.0]; // uphill
        let params = ArmijoParams {
            max_backtracks: 5,
            ..ArmijoParams::default()
        };
        match armijo_search(0.5, &g, &grad, &d, &params, false, half_norm_squared).unwrap() {
            ArmijoOutcome::Exhausted { backtracks } => assert_eq!(backtracks, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn quadratic_driver(g0: Vec<f64>, config: &OptimizerConfig) -> DriveOutcome<Vec<f64>> {
        drive(
            g0,
            config,
            half_norm_squared,
            |state: &Vec<f64>| state.clone(), // grad of |g|^2/2 is g
        )
        .unwrap()
    }

    #[test]
    fn drive_minimizes_quadratic_with_both_rules() {
        for rule in [BetaRule::PolakRibiere, BetaRule::FletcherReeves] {
            let config = OptimizerConfig {
                beta_rule: rule,
                stop_j: 1e-12,
                ..OptimizerConfig::default()
            };
            let out = quadratic_driver(vec![3.0, -4.0, 0.5], &config);
            assert_eq!(out.termination, TerminationReason::JBelowTol, "{rule:?}");
            assert!(out.final_j <= 1e-12);
            // strict descent across recorded iterates
            for w in out.records.windows(2) {
                assert!(w[1].j < w[0].j, "{rule:?}: {:?}", out.records);
            }
        }
    }

    #[test]
    fn drive_first_direction_is_steepest_descent() {
        // anisotropic quadratic J = (x^2 + 10 y^2) / 2, grad = (x, 10y):
        // from (2, 1) the step along -grad backtracks to alpha = 1/8 and
        // lands at (2, 1) - (1/8)(2, 10) = (1.75, -0.25)
        let eval = |x: &[f64]| -> Result<(f64, Vec<f64>), Infallible> {
            Ok((0.5 * (x[0] * x[0] + 10.0 * x[1] * x[1]), x.to_vec()))
        };
        let grad_of = |s: &Vec<f64>| vec![s[0], 10.0 * s[1]];
        let config = OptimizerConfig {
            max_iters: 1,
            stop_j: 0.0,
            stop_grad: 0.0,
            ..OptimizerConfig::default()
        };
        let out = drive(vec![2.0, 1.0], &config, eval, grad_of).unwrap();
        // exactly one update -> two records
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.termination, TerminationReason::MaxIters);
        assert_eq!(out.records[0].alpha, Some(0.125));
        assert_eq!(out.records[0].beta, None);
        assert_eq!(out.records[0].backtracks, 3);
        assert_eq!(out.final_g, vec![1.75, -0.25]);
    }

    #[test]
    fn drive_records_strict_descent_until_convergence() {
        let config = OptimizerConfig {
            stop_j: 1e-10,
            ..OptimizerConfig::default()
        };
        let out = quadratic_driver(vec![1.0, 1.0], &config);
        assert!(out.termination.is_converged());
        for w in out.records.windows(2) {
            assert!(w[1].j < w[0].j);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let config = OptimizerConfig {
            max_iters: 0,
            ..OptimizerConfig::default()
        };
        assert!(config.validate().is_err());
        let config = OptimizerConfig {
            armijo: ArmijoParams {
                rho: 1.0,
                ..ArmijoParams::default()
            },
            ..OptimizerConfig::default()
        };
        assert!(config.validate().is_err());
        let config = OptimizerConfig {
            armijo: ArmijoParams {
                s: 0.0,
                ..ArmijoParams::default()
            },
            ..OptimizerConfig::default()
        };
        assert!(config.validate().is_err());
        assert!(OptimizerConfig::default().validate().is_ok());
    }

    #[test]
    fn minimizes_unit_density_problem_on_coarse_mesh() {
        use crate::fem::{FemContext, NodalField, Support};
        use crate::mesh::generate_disk_mesh;

        let mesh = generate_disk_mesh(0.3).unwrap();
        let ctx = FemContext::build(&mesh).unwrap();
        let f = NodalField::constant(&mesh, Support::AllVertices, 1.0);
        let g0 = NodalField::constant(&mesh, Support::InteriorOnly, 0.2);
        for rule in [BetaRule::FletcherReeves, BetaRule::PolakRibiere] {
            let config = OptimizerConfig {
                beta_rule: rule,
                armijo: ArmijoParams {
                    s: 4.0,
                    ..Default::default()
                },
                ..Default::default()
            };
            let report = minimize(&ctx, &f, &g0, &config).unwrap();
            assert_eq!(report.termination, TerminationReason::JBelowTol, "{rule:?}");
            assert!(report.final_j <= 1e-6);
            for w in report.records.windows(2) {
                assert!(w[1].j < w[0].j, "{rule:?}: J not strictly decreasing");
            }
            // boundary of the returned solution is exactly zero
            for v in 0..mesh.n_vertices() {
                if mesh.is_boundary(v) {
                    assert_eq!(report.final_u.values()[v], 0.0);
                }
            }
        }
    }

    #[test]
    fn identical_runs_produce_identical_reports() {
        use crate::fem::{FemContext, NodalField, Support};
        use crate::mesh::generate_disk_mesh;

        let mesh = generate_disk_mesh(0.35).unwrap();
        let ctx = FemContext::build(&mesh).unwrap();
        let f = NodalField::constant(&mesh, Support::AllVertices, 1.0);
        let g0 = NodalField::constant(&mesh, Support::InteriorOnly, 0.1);
        let config = OptimizerConfig {
            beta_rule: BetaRule::FletcherReeves,
            ..Default::default()
        };
        let a = minimize(&ctx, &f, &g0, &config).unwrap();
        let b = minimize(&ctx, &f, &g0, &config).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.final_g.values(), b.final_g.values());
        assert_eq!(a.final_u.values(), b.final_u.values());
        assert_eq!(a.termination, b.termination);
    }

    #[test]
    fn projection_clamps_negative_components() {
        // minimize |g - (-1, 2)|^2/2 with projection: the unconstrained
        // minimum has a negative first component, the projected iterates
        // must stay nonnegative
        let target = [-1.0, 2.0];
        let eval = |x: &[f64]| -> Result<(f64, Vec<f64>), Infallible> {
            let diff: Vec<f64> = x.iter().zip(&target).map(|(a, b)| a - b).collect();
            Ok((0.5 * dot(&diff, &diff), diff))
        };
        let config = OptimizerConfig {
            project_nonnegative: true,
            stop_j: 1e-12,
            stop_grad: 1e-9,
            max_iters: 200,
            ..OptimizerConfig::default()
        };
        let out = drive(vec![1.0, 0.0], &config, eval, |d: &Vec<f64>| d.clone()).unwrap();
        for v in &out.final_g {
            assert!(*v >= 0.0, "{:?}", out.final_g);
        }
        // best nonnegative point is (0, 2)
        assert!((out.final_g[0] - 0.0).abs() < 1e-6 && (out.final_g[1] - 2.0).abs() < 1e-4);
    }
}
