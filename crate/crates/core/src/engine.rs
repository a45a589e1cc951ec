//! The iteration cycle: sample data, solve the replicates, select principal
//! components, redefine features, extend with products, and repeat on the
//! new feature space.

use log::{debug, info};

use crate::algebra::fit_structure_constants;
use crate::data::Dataset;
use crate::ensemble::{
    collect_solutions, fit_distribution, mean_log_likelihood_on, out_of_bag, sample_plans,
    solve_each, BootstrapPlan,
};
use crate::error::{Error, Result};
use crate::featuremap::{Layer, RecursiveFeatureMap};
use crate::linalg::{dot, Matrix};
use crate::model::{log_likelihood, sigmoid, Design, Prior};
use crate::par::Execution;
use crate::solver::{maximize, Solution, SolverConfig};
use crate::spectral::select_components;

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    /// Number of redefine-and-extend cycles.
    pub iterations: usize,
    pub bootstrap: BootstrapPlan,
    /// Components are kept while `λ >= rel_threshold · λ_max`.
    pub rel_threshold: f64,
    pub k_max: usize,
    /// Candidate prior precisions, searched by out-of-bag likelihood.
    pub prior_grid: Vec<f64>,
    pub solver: SolverConfig,
    /// Fit structure constants on each new set of super-features.
    pub algebra_check: bool,
    /// Stop once the closure residual drops below this (0 disables).
    pub closure_tol: f64,
    pub execution: Execution,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            iterations: 1,
            bootstrap: BootstrapPlan::default(),
            rel_threshold: 0.05,
            k_max: 8,
            prior_grid: vec![0.01, 0.1, 1.0, 10.0],
            solver: SolverConfig::default(),
            algebra_check: false,
            closure_tol: 0.0,
            execution: Execution::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        self.bootstrap.validate()?;
        self.solver.validate()?;
        if !(self.rel_threshold > 0.0 && self.rel_threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "rel_threshold must lie in (0, 1], got {}",
                self.rel_threshold
            )));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidConfig("k_max must be at least 1".into()));
        }
        if self.prior_grid.is_empty() {
            return Err(Error::InvalidConfig("prior grid is empty".into()));
        }
        for &r in &self.prior_grid {
            Prior::new(r).map_err(|_| {
                Error::InvalidConfig(format!("prior grid values must be positive, got {r}"))
            })?;
        }
        if !(self.closure_tol >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "closure_tol must be non-negative, got {}",
                self.closure_tol
            )));
        }
        Ok(())
    }

    /// Largest parameter dimension any layer can produce.
    pub fn dimension_cap(&self) -> usize {
        let m = self.k_max + 1;
        m + m * (m + 1) / 2
    }
}

/// Metrics of one pass over a feature space. Pass `i` works in the space
/// produced by `i` layers.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationReport {
    pub iteration: usize,
    /// Parameter dimension of the space solved in.
    pub dim: usize,
    /// Components selected from this pass's solution distribution; `None`
    /// on the final pass.
    pub selected_k: Option<usize>,
    /// Dimension of the next space; `None` when no layer was added.
    pub expanded_dim: Option<usize>,
    pub precision: f64,
    pub oob_score: f64,
    /// Full-data maximum of `L`, warm-started at the embedded solution.
    pub best_log_likelihood: f64,
    /// `L` of the embedded previous mean solution in this space.
    pub embedded_log_likelihood: f64,
    pub accuracy: f64,
    pub closure_residual: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// The solution covariance vanished and no component could be selected.
    Degenerate,
    /// Super-features closed under multiplication within `closure_tol`.
    ClosureConverged,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Degenerate => "converged-degenerate",
            RunStatus::ClosureConverged => "converged-closure",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EngineOutput {
    pub map: RecursiveFeatureMap,
    /// Full-data solution on the final space.
    pub parameters: Vec<f64>,
    pub reports: Vec<IterationReport>,
    pub status: RunStatus,
}

impl EngineOutput {
    pub fn final_report(&self) -> &IterationReport {
        self.reports.last().expect("at least one pass")
    }
}

/// Per-pass seed, so each pass draws fresh multisets.
pub fn pass_seed(seed: u64, pass: usize) -> u64 {
    seed.wrapping_add((pass as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn oob_from_outcomes(
    design: &Design,
    plans: &[Vec<usize>],
    outcomes: &[Result<Solution>],
) -> Result<f64> {
    let mut total = 0.0;
    let mut counted = 0usize;
    for (plan, outcome) in plans.iter().zip(outcomes) {
        let held_out = out_of_bag(plan, design.len());
        let Ok(sol) = outcome else { continue };
        if held_out.is_empty() {
            continue;
        }
        total += mean_log_likelihood_on(design, &held_out, &sol.w)?;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::numerical(
            "engine",
            "every bootstrap replicate has an empty out-of-bag set",
        ));
    }
    Ok(total / counted as f64)
}

/// Mean out-of-bag per-sample log-likelihood of the replicate solutions
/// fitted with precision `r`.
pub fn oob_score(
    design: &Design,
    plans: &[Vec<usize>],
    r: f64,
    config: &SolverConfig,
) -> Result<f64> {
    let prior = Prior::new(r)?;
    let outcomes = solve_each(
        Execution::default(),
        design,
        plans,
        prior,
        config,
        &vec![0.0; design.dim()],
    );
    oob_from_outcomes(design, plans, &outcomes)
}

struct PrecisionChoice {
    precision: f64,
    score: f64,
    outcomes: Vec<Result<Solution>>,
}

fn choose_precision(
    design: &Design,
    plans: &[Vec<usize>],
    config: &EngineConfig,
    warm: &[f64],
) -> Result<PrecisionChoice> {
    let mut best: Option<PrecisionChoice> = None;
    for &r in &config.prior_grid {
        let prior = Prior::new(r)?;
        let outcomes = solve_each(config.execution, design, plans, prior, &config.solver, warm);
        let score = oob_from_outcomes(design, plans, &outcomes)?;
        debug!("precision {r}: out-of-bag score {score}");
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(PrecisionChoice {
                precision: r,
                score,
                outcomes,
            });
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("prior grid is empty".into()))
}

/// Fraction of samples whose thresholded probability matches the label.
pub fn training_accuracy(design: &Design, w: &[f64]) -> f64 {
    if design.is_empty() {
        return 0.0;
    }
    let correct = design
        .features()
        .row_iter()
        .zip(design.labels())
        .filter(|(f, &y)| (sigmoid(dot(w, f)) > 0.5) == (y == 1.0))
        .count();
    correct as f64 / design.len() as f64
}

/// Runs the full iteration cycle on `data`.
pub fn run(data: &Dataset, config: &EngineConfig) -> Result<EngineOutput> {
    config.validate()?;
    data.check_trainable()?;

    let mut map = RecursiveFeatureMap::new(data.standardization().clone());
    let mut design = Design::basic(data);
    let mut warm = vec![0.0; design.dim()];
    let mut reports = Vec::new();
    let mut status = RunStatus::Completed;
    let mut pass = 0;

    loop {
        let final_pass = pass == config.iterations || status != RunStatus::Completed;
        let plan = BootstrapPlan {
            seed: pass_seed(config.bootstrap.seed, pass),
            ..config.bootstrap
        };
        let plans = sample_plans(&plan, design.len())?;
        let choice = choose_precision(&design, &plans, config, &warm)?;
        let prior = Prior::new(choice.precision)?;

        let embedded_log_likelihood = log_likelihood(&warm, &design, prior)?;
        let full = maximize(&design, prior, &config.solver, &warm)?;
        if !full.converged {
            log::warn!(
                "pass {pass}: full-data solve stopped at gradient norm {:e}",
                full.grad_norm
            );
        }
        let mut report = IterationReport {
            iteration: pass,
            dim: design.dim(),
            selected_k: None,
            expanded_dim: None,
            precision: choice.precision,
            oob_score: choice.score,
            best_log_likelihood: full.log_likelihood,
            embedded_log_likelihood,
            accuracy: training_accuracy(&design, &full.w),
            closure_residual: None,
        };
        info!(
            "pass {pass}: dim {} r {} L {:.6} accuracy {:.4}",
            report.dim, report.precision, report.best_log_likelihood, report.accuracy
        );

        if final_pass {
            reports.push(report);
            return Ok(EngineOutput {
                map,
                parameters: full.w,
                reports,
                status,
            });
        }

        let solutions = collect_solutions(&design, prior, choice.outcomes)?;
        let dist = fit_distribution(&solutions)?;
        let pc = select_components(&dist, config.rel_threshold, config.k_max)?;
        report.selected_k = Some(pc.k());
        if pc.k() == 0 {
            info!("pass {pass}: solution covariance vanished; stopping");
            reports.push(report);
            return Ok(EngineOutput {
                map,
                parameters: full.w,
                reports,
                status: RunStatus::Degenerate,
            });
        }

        let layer = Layer::calibrate(&pc, design.features())?;
        if config.algebra_check {
            let supers = design
                .features()
                .row_iter()
                .map(|f| layer.redefine(f))
                .collect::<Result<Vec<_>>>()?;
            let samples = Matrix::from_rows(&supers, layer.super_dim())?;
            if samples.rows() >= samples.cols() {
                let fit = fit_structure_constants(&samples)?;
                report.closure_residual = Some(fit.closure_residual);
                if fit.closure_residual < config.closure_tol {
                    status = RunStatus::ClosureConverged;
                }
            }
        }

        let rows = design
            .features()
            .row_iter()
            .map(|f| layer.apply(f))
            .collect::<Result<Vec<_>>>()?;
        let next = Matrix::from_rows(&rows, layer.output_dim())?;
        design = Design::new(design.labels().to_vec(), next)?;
        warm = layer.embed_mean_solution();
        report.expanded_dim = Some(layer.output_dim());
        map.push(layer)?;
        reports.push(report);
        pass += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_data() -> Dataset {
        let rows = (0..30)
            .map(|i| {
                let x = i as f64 / 10.0 - 1.5;
                (u8::from(x * x + 0.1 * (i as f64).sin() < 0.6), vec![x])
            })
            .collect();
        Dataset::from_raw(rows).unwrap()
    }

    fn quick_config(iterations: usize) -> EngineConfig {
        EngineConfig {
            iterations,
            bootstrap: BootstrapPlan {
                replicates: 8,
                seed: 3,
            },
            ..EngineConfig::default()
        }
    }

    #[test]
    fn zero_iterations_is_plain_logistic_regression() {
        let data = small_data();
        let out = run(&data, &quick_config(0)).unwrap();
        assert!(out.map.layers().is_empty());
        assert_eq!(out.reports.len(), 1);
        assert_eq!(out.parameters.len(), 2);
        let prior = Prior::new(out.reports[0].precision).unwrap();
        let direct = maximize(
            &Design::basic(&data),
            prior,
            &SolverConfig::default(),
            &[0.0, 0.0],
        )
        .unwrap();
        for (a, b) in direct.w.iter().zip(&out.parameters) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn containment_and_determinism() {
        let data = small_data();
        let cfg = EngineConfig {
            algebra_check: true,
            ..quick_config(2)
        };
        let a = run(&data, &cfg).unwrap();
        let b = run(
            &data,
            &EngineConfig {
                execution: Execution::Sequential,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_eq!(a.reports, b.reports);
        assert_eq!(a.parameters, b.parameters);
        for r in &a.reports {
            assert!(r.best_log_likelihood >= r.embedded_log_likelihood - 1e-9);
            assert!(r.dim <= cfg.dimension_cap().max(data.dim() + 1));
        }
        assert!(a.reports[0].closure_residual.is_some());
        assert_eq!(a.parameters.len(), a.map.output_dim());
    }

    #[test]
    fn singleton_grid_picks_that_precision() {
        let data = small_data();
        let cfg = EngineConfig {
            prior_grid: vec![0.37],
            ..quick_config(0)
        };
        assert_eq!(run(&data, &cfg).unwrap().reports[0].precision, 0.37);
    }

    #[test]
    fn huge_precision_scores_like_the_null_model() {
        let rows = (0..20)
            .map(|i| ((i % 2) as u8, vec![(i / 2) as f64]))
            .collect();
        let data = Dataset::from_raw(rows).unwrap();
        let design = Design::basic(&data);
        let plans = sample_plans(
            &BootstrapPlan {
                replicates: 6,
                seed: 1,
            },
            design.len(),
        )
        .unwrap();
        let score = oob_score(&design, &plans, 1e12, &SolverConfig::default()).unwrap();
        assert!((score - 0.5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let data = small_data();
        for cfg in [
            EngineConfig {
                prior_grid: vec![],
                ..quick_config(1)
            },
            EngineConfig {
                prior_grid: vec![1.0, -1.0],
                ..quick_config(1)
            },
            EngineConfig {
                k_max: 0,
                ..quick_config(1)
            },
            EngineConfig {
                rel_threshold: 1.5,
                ..quick_config(1)
            },
        ] {
            assert!(matches!(run(&data, &cfg), Err(Error::InvalidConfig(_))));
        }
    }
}
