//! Bootstrap family of training sets, the per-replicate maximum-likelihood
//! solutions, their likelihood weights and the weighted Gaussian summary
//! (mean and covariance) of the solution cloud.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{data_log_likelihood, log_likelihood, Design, Prior};
use crate::par::{map_indexed, Execution};
use crate::solver::{maximize, Solution, SolverConfig};

/// Resampling with replacement: `replicates` multisets of size `t_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BootstrapPlan {
    pub replicates: usize,
    pub seed: u64,
}

impl Default for BootstrapPlan {
    fn default() -> Self {
        BootstrapPlan {
            replicates: 64,
            seed: 0,
        }
    }
}

impl BootstrapPlan {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidConfig(format!(
                "at least 2 bootstrap replicates are required, got {}",
                self.replicates
            )));
        }
        Ok(())
    }
}

/// Draws the index multisets. Replicate `s` uses its own ChaCha stream seeded
/// with `seed ^ s`, so each list is fixed regardless of execution order.
pub fn sample_plans(plan: &BootstrapPlan, t_max: usize) -> Result<Vec<Vec<usize>>> {
    plan.validate()?;
    if t_max < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            found: t_max,
        });
    }
    Ok((0..plan.replicates)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ s as u64);
            (0..t_max).map(|_| rng.random_range(0..t_max)).collect()
        })
        .collect())
}

/// Indices of `0..t_max` absent from `plan`, ascending.
pub fn out_of_bag(plan: &[usize], t_max: usize) -> Vec<usize> {
    let mut seen = vec![false; t_max];
    for &i in plan {
        seen[i] = true;
    }
    (0..t_max).filter(|&i| !seen[i]).collect()
}

/// `ln Σ e^{x_i}` with the maximum factored out.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Normalized weights `e^{L_s} / Σ e^{L_s'}` computed in the log domain.
pub fn likelihood_weights(log_likelihoods: &[f64]) -> Result<Vec<f64>> {
    if log_likelihoods.iter().any(|l| !l.is_finite()) {
        return Err(Error::numerical(
            "ensemble",
            "non-finite log-likelihood among replicate solutions",
        ));
    }
    // exp(L_s - logsumexp(L)) with the maximum factored out once
    let max = log_likelihoods
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = log_likelihoods.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = shifted.iter().sum();
    Ok(shifted.into_iter().map(|e| e / total).collect())
}

/// One bootstrap replicate's solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Replicate {
    /// Position of the replicate in the bootstrap plan.
    pub index: usize,
    pub w: Vec<f64>,
    /// `L(w_s)` on the full training set; drives the weights.
    pub full_log_likelihood: f64,
    /// The objective the replicate actually maximized.
    pub subset_log_likelihood: f64,
    pub converged: bool,
}

/// Surviving replicate solutions and their probabilities.
#[derive(Clone, Debug)]
pub struct SolutionSet {
    replicates: Vec<Replicate>,
    weights: Vec<f64>,
    excluded: Vec<usize>,
}

impl SolutionSet {
    pub fn new(replicates: Vec<Replicate>, excluded: Vec<usize>) -> Result<Self> {
        let lls: Vec<f64> = replicates.iter().map(|r| r.full_log_likelihood).collect();
        let weights = likelihood_weights(&lls)?;
        Ok(SolutionSet {
            replicates,
            weights,
            excluded,
        })
    }

    /// Solution set from raw vectors and full-data log-likelihoods.
    pub fn from_solutions(solutions: Vec<Vec<f64>>, log_likelihoods: &[f64]) -> Result<Self> {
        if solutions.len() != log_likelihoods.len() {
            return Err(Error::DimensionMismatch {
                expected: solutions.len(),
                found: log_likelihoods.len(),
            });
        }
        let replicates = solutions
            .into_iter()
            .zip(log_likelihoods)
            .enumerate()
            .map(|(index, (w, &l))| Replicate {
                index,
                w,
                full_log_likelihood: l,
                subset_log_likelihood: l,
                converged: true,
            })
            .collect();
        SolutionSet::new(replicates, Vec::new())
    }

    pub fn replicates(&self) -> &[Replicate] {
        &self.replicates
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Plan indices whose solver failed.
    pub fn excluded(&self) -> &[usize] {
        &self.excluded
    }

    pub fn len(&self) -> usize {
        self.replicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicates.is_empty()
    }

    /// Largest full-data log-likelihood among the replicates.
    pub fn best_log_likelihood(&self) -> f64 {
        self.replicates
            .iter()
            .map(|r| r.full_log_likelihood)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Solves every replicate's subset objective, warm-started at `w_init`.
/// Output order follows `plans`.
pub fn solve_each(
    exec: Execution,
    design: &Design,
    plans: &[Vec<usize>],
    prior: Prior,
    config: &SolverConfig,
    w_init: &[f64],
) -> Vec<Result<Solution>> {
    map_indexed(exec, plans.len(), |s| {
        let subset = design.subset(&plans[s]);
        maximize(&subset, prior, config, w_init)
    })
}

/// Builds a [`SolutionSet`] from per-replicate solver outcomes. Failed
/// replicates are dropped; fewer than two survivors is an error.
pub fn collect_solutions(
    design: &Design,
    prior: Prior,
    outcomes: Vec<Result<Solution>>,
) -> Result<SolutionSet> {
    let mut replicates = Vec::with_capacity(outcomes.len());
    let mut excluded = Vec::new();
    for (index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(sol) => {
                let full = log_likelihood(&sol.w, design, prior)?;
                replicates.push(Replicate {
                    index,
                    full_log_likelihood: full,
                    subset_log_likelihood: sol.log_likelihood,
                    converged: sol.converged,
                    w: sol.w,
                });
            }
            Err(e) => {
                warn!("bootstrap replicate {index} excluded: {e}");
                excluded.push(index);
            }
        }
    }
    if replicates.len() < 2 {
        return Err(Error::numerical(
            "ensemble",
            format!(
                "only {} of {} replicates solved successfully",
                replicates.len(),
                replicates.len() + excluded.len()
            ),
        ));
    }
    SolutionSet::new(replicates, excluded)
}

pub fn solve_replicates_with(
    exec: Execution,
    design: &Design,
    plans: &[Vec<usize>],
    prior: Prior,
    config: &SolverConfig,
    w_init: &[f64],
) -> Result<SolutionSet> {
    if plans.is_empty() {
        return Err(Error::InvalidConfig("no bootstrap plans".into()));
    }
    let outcomes = solve_each(exec, design, plans, prior, config, w_init);
    collect_solutions(design, prior, outcomes)
}

/// Solves all replicates with the default execution mode.
pub fn solve_replicates(
    design: &Design,
    plans: &[Vec<usize>],
    prior: Prior,
    config: &SolverConfig,
    w_init: &[f64],
) -> Result<SolutionSet> {
    solve_replicates_with(Execution::default(), design, plans, prior, config, w_init)
}

/// Mean per-sample data log-likelihood of `w` on the rows `indices`.
pub(crate) fn mean_log_likelihood_on(design: &Design, indices: &[usize], w: &[f64]) -> Result<f64> {
    let held_out = design.subset(indices);
    Ok(data_log_likelihood(w, &held_out)? / indices.len() as f64)
}

/// Likelihood-weighted Gaussian summary of a solution set.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionDistribution {
    pub mean: Vec<f64>,
    pub cov: Matrix,
}

pub fn fit_distribution(set: &SolutionSet) -> Result<SolutionDistribution> {
    let total: f64 = set.weights.iter().sum();
    if set.is_empty() || !(total > 0.0) {
        return Err(Error::numerical(
            "ensemble",
            "solution weights are all zero",
        ));
    }
    let m = set.replicates[0].w.len();
    let mut mean = vec![0.0; m];
    for (rep, &wt) in set.replicates.iter().zip(&set.weights) {
        if rep.w.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: rep.w.len(),
            });
        }
        for (acc, x) in mean.iter_mut().zip(&rep.w) {
            *acc += wt * x;
        }
    }
    let mut cov = Matrix::zeros(m, m);
    let mut centered = vec![0.0; m];
    for (rep, &wt) in set.replicates.iter().zip(&set.weights) {
        if wt == 0.0 {
            continue;
        }
        for ((c, x), mu) in centered.iter_mut().zip(&rep.w).zip(&mean) {
            *c = x - mu;
        }
        for i in 0..m {
            let a = wt * centered[i];
            for j in 0..m {
                cov[(i, j)] += a * centered[j];
            }
        }
    }
    cov.symmetrize();
    Ok(SolutionDistribution { mean, cov })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plans_are_deterministic_and_well_formed() {
        let plan = BootstrapPlan {
            replicates: 5,
            seed: 42,
        };
        let a = sample_plans(&plan, 30).unwrap();
        let b = sample_plans(&plan, 30).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(a.iter().all(|p| p.len() == 30 && p.iter().all(|&i| i < 30)));

        let c = sample_plans(&BootstrapPlan { seed: 43, ..plan }, 30).unwrap();
        assert_ne!(a.concat(), c.concat());
        assert!(sample_plans(
            &BootstrapPlan {
                replicates: 1,
                seed: 0
            },
            30
        )
        .is_err());
        assert!(sample_plans(&plan, 1).is_err());
    }

    #[test]
    fn weight_examples() {
        assert_eq!(likelihood_weights(&[-3.0, -3.0]).unwrap(), vec![0.5, 0.5]);
        let w = likelihood_weights(&[0.0, 3f64.ln()]).unwrap();
        assert!((w[0] - 0.25).abs() < 1e-15 && (w[1] - 0.75).abs() < 1e-15);
        let w = likelihood_weights(&[0.0, 1000.0]).unwrap();
        assert_eq!(w, vec![0.0, 1.0]);
        assert!(likelihood_weights(&[0.0, f64::NAN]).is_err());
    }

    #[test]
    fn degenerate_and_two_point_distributions() {
        let set = SolutionSet::from_solutions(vec![vec![1.0, -2.0], vec![5.0, 5.0]], &[0.0, -1e4])
            .unwrap();
        let dist = fit_distribution(&set).unwrap();
        assert_eq!(dist.mean, vec![1.0, -2.0]);
        assert!(dist.cov.max_abs() == 0.0);

        let set = SolutionSet::from_solutions(vec![vec![0.0, 0.0], vec![2.0, 2.0]], &[-7.0, -7.0])
            .unwrap();
        let dist = fit_distribution(&set).unwrap();
        assert_eq!(dist.mean, vec![1.0, 1.0]);
        assert_eq!(dist.cov.as_slice(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn out_of_bag_complements_plan() {
        assert_eq!(out_of_bag(&[0, 0, 3, 3, 1], 5), vec![2, 4]);
    }

    fn design() -> Design {
        let rows: Vec<Vec<f64>> = (0..24)
            .map(|i| vec![1.0, (i as f64 * 0.37).sin() * 2.0, (i as f64 * 0.11).cos()])
            .collect();
        let labels = (0..24)
            .map(|i| f64::from(((i * 7) % 5 < 2) as u8))
            .collect();
        Design::new(labels, Matrix::from_rows(&rows, 3).unwrap()).unwrap()
    }

    #[test]
    fn replicate_solutions_are_independent_of_scheduling() {
        let d = design();
        let plans = sample_plans(
            &BootstrapPlan {
                replicates: 8,
                seed: 9,
            },
            d.len(),
        )
        .unwrap();
        let prior = Prior::new(0.5).unwrap();
        let cfg = SolverConfig::default();
        let seq = solve_replicates_with(Execution::Sequential, &d, &plans, prior, &cfg, &[0.0; 3])
            .unwrap();
        let dflt = solve_replicates(&d, &plans, prior, &cfg, &[0.0; 3]).unwrap();
        assert_eq!(seq.replicates(), dflt.replicates());
        assert_eq!(seq.weights(), dflt.weights());
        let sum: f64 = seq.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for r in seq.replicates() {
            let full = log_likelihood(&r.w, &d, prior).unwrap();
            assert_eq!(full, r.full_log_likelihood);
            assert!(r.converged);
        }
    }

    proptest! {
        #[test]
        fn weights_are_shift_invariant(ls in prop::collection::vec(-50.0..50.0f64, 2..10), shift in -1e3..1e3f64) {
            let a = likelihood_weights(&ls).unwrap();
            let shifted: Vec<f64> = ls.iter().map(|l| l + shift).collect();
            let b = likelihood_weights(&shifted).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn mean_in_hull_and_cov_psd(
            ws in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 3), 2..8),
            ls in prop::collection::vec(-5.0..5.0f64, 8),
        ) {
            let ls = &ls[..ws.len()];
            let set = SolutionSet::from_solutions(ws.clone(), ls).unwrap();
            let dist = fit_distribution(&set).unwrap();
            for i in 0..3 {
                let lo = ws.iter().map(|w| w[i]).fold(f64::INFINITY, f64::min);
                let hi = ws.iter().map(|w| w[i]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(dist.mean[i] >= lo - 1e-12 && dist.mean[i] <= hi + 1e-12);
            }
            prop_assert!(dist.cov.asymmetry() <= 1e-12);
            let (vals, _) = crate::spectral::eig_sym(&dist.cov).unwrap();
            let top = vals[0].max(1.0);
            prop_assert!(vals.iter().all(|&v| v >= -1e-10 * top));

            // reordering the replicates leaves the summary unchanged up to rounding
            let mut order: Vec<usize> = (0..ws.len()).collect();
            order.reverse();
            let rev = SolutionSet::from_solutions(
                order.iter().map(|&i| ws[i].clone()).collect(),
                &order.iter().map(|&i| ls[i]).collect::<Vec<_>>(),
            ).unwrap();
            let rdist = fit_distribution(&rev).unwrap();
            for (a, b) in dist.mean.iter().zip(&rdist.mean) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
