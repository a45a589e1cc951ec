//! Logistic model class over an arbitrary feature map, with an isotropic
//! Gaussian prior on the parameters.
//!
//! The log-likelihood of a parameter vector `w` on a design is
//!
//! ```text
//! L(w) = (m/2) ln(r / 2π) - (r/2) |w|² + Σ_t [ y_t z_t - softplus(z_t) ],   z_t = w · F_t
//! ```
//!
//! which is strictly concave for `r > 0`.

use std::f64::consts::PI;

use crate::data::{basic_features, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// Precision `r` of the isotropic Gaussian prior `N(0, I / r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prior {
    precision: f64,
}

impl Prior {
    pub fn new(precision: f64) -> Result<Self> {
        if precision > 0.0 && precision.is_finite() {
            Ok(Prior { precision })
        } else {
            Err(Error::InvalidPrecision(precision))
        }
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }
}

/// Labels and feature rows of a training set expressed in some feature space.
#[derive(Clone, Debug)]
pub struct Design {
    labels: Vec<f64>,
    features: Matrix,
}

impl Design {
    pub fn new(labels: Vec<f64>, features: Matrix) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::DimensionMismatch {
                expected: features.rows(),
                found: labels.len(),
            });
        }
        Ok(Design { labels, features })
    }

    /// Basic features `(1, x)` of every sample.
    pub fn basic(data: &Dataset) -> Self {
        let rows: Vec<Vec<f64>> = data
            .samples()
            .iter()
            .map(|s| basic_features(&s.input))
            .collect();
        let features = Matrix::from_rows(&rows, data.dim() + 1).expect("uniform rows");
        Design {
            labels: data.labels(),
            features,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature-space dimension `m`.
    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn row(&self, t: usize) -> &[f64] {
        self.features.row(t)
    }

    /// Materializes the multiset of rows named by `indices`, repeats included.
    pub fn subset(&self, indices: &[usize]) -> Design {
        let m = self.dim();
        let mut data = Vec::with_capacity(indices.len() * m);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Design {
            labels,
            features: Matrix::from_vec(indices.len(), m, data).expect("consistent sizes"),
        }
    }

    fn check(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: w.len(),
            });
        }
        Ok(())
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Logistic function `e^z / (1 + e^z)`, evaluated on the branch that keeps
/// the exponent non-positive.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln P(y | z)` for a binary label; finite for every finite `z`.
pub fn log_prob(label: f64, z: f64) -> f64 {
    label * z - softplus(z)
}

/// `P(y = 1 | x, w)` for the feature vector `f = F(x)`.
pub fn predict_prob(w: &[f64], f: &[f64]) -> Result<f64> {
    if w.len() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: f.len(),
        });
    }
    Ok(sigmoid(dot(w, f)))
}

/// Normalized Gaussian log-density `(m/2) ln(r/2π) - (r/2)|w|²`.
pub fn log_prior(w: &[f64], prior: Prior) -> f64 {
    let r = prior.precision;
    0.5 * w.len() as f64 * (r / (2.0 * PI)).ln() - 0.5 * r * dot(w, w)
}

/// Data term `Σ_t ln P(y_t | x_t, w)` without the prior.
pub fn data_log_likelihood(w: &[f64], design: &Design) -> Result<f64> {
    design.check(w)?;
    Ok(design
        .features
        .row_iter()
        .zip(&design.labels)
        .map(|(f, &y)| log_prob(y, dot(w, f)))
        .sum())
}

/// Full objective `L(w)`: normalized log-prior plus the data term.
pub fn log_likelihood(w: &[f64], design: &Design, prior: Prior) -> Result<f64> {
    Ok(log_prior(w, prior) + data_log_likelihood(w, design)?)
}

/// `∇L = -r w + Σ_t (y_t - p_t) F_t`.
pub fn gradient(w: &[f64], design: &Design, prior: Prior) -> Result<Vec<f64>> {
    design.check(w)?;
    let r = prior.precision;
    let mut g: Vec<f64> = w.iter().map(|wi| -r * wi).collect();
    for (f, &y) in design.features.row_iter().zip(&design.labels) {
        let resid = y - sigmoid(dot(w, f));
        for (gi, fi) in g.iter_mut().zip(f) {
            *gi += resid * fi;
        }
    }
    Ok(g)
}

/// `∇²L = -r I - Σ_t p_t (1 - p_t) F_t ⊗ F_t`.
pub fn hessian(w: &[f64], design: &Design, prior: Prior) -> Result<Matrix> {
    design.check(w)?;
    let m = w.len();
    let mut h = Matrix::identity(m);
    for i in 0..m {
        h[(i, i)] = -prior.precision;
    }
    for f in design.features.row_iter() {
        let p = sigmoid(dot(w, f));
        let s = p * (1.0 - p);
        if s == 0.0 {
            continue;
        }
        for i in 0..m {
            let a = s * f[i];
            for j in 0..=i {
                h[(i, j)] -= a * f[j];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            h[(j, i)] = h[(i, j)];
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn design(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> Design {
        let m = rows[0].len();
        Design::new(labels, Matrix::from_rows(&rows, m).unwrap()).unwrap()
    }

    #[test]
    fn logistic_values() {
        assert_eq!(predict_prob(&[0.0], &[1.0]).unwrap(), 0.5);
        assert!((predict_prob(&[2.0], &[1.0]).unwrap() - 0.8807970779778823).abs() < 1e-16);
        assert!(predict_prob(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn saturated_logit_stays_finite() {
        let p = sigmoid(-1000.0);
        assert!((0.0..1e-300).contains(&p));
        let lp = log_prob(1.0, -1000.0);
        assert!(lp.is_finite());
        assert!((lp + 1000.0).abs() < 1e-9);
        assert_eq!(log_prob(0.0, 1000.0), -1000.0);
        assert_eq!(sigmoid(1000.0), 1.0);
    }

    #[test]
    fn prior_values() {
        let r = Prior::new(2.0 * PI).unwrap();
        assert_eq!(log_prior(&[0.0, 0.0], r), 0.0);
        let expect = -(2.0 * PI).ln() - 0.5;
        assert!((log_prior(&[1.0, 0.0], Prior::new(1.0).unwrap()) - expect).abs() < 1e-15);
        assert!(Prior::new(0.0).is_err());
        assert!(Prior::new(-1.0).is_err());
        assert!(Prior::new(f64::NAN).is_err());
    }

    #[test]
    fn data_term_values() {
        let d = design(vec![vec![1.0]], vec![1.0]);
        let ll = data_log_likelihood(&[0.0], &d).unwrap();
        assert!((ll + std::f64::consts::LN_2).abs() < 1e-16);

        let empty = Design::new(vec![], Matrix::zeros(0, 2)).unwrap();
        let prior = Prior::new(0.7).unwrap();
        let w = [0.3, -1.2];
        assert_eq!(
            log_likelihood(&w, &empty, prior).unwrap(),
            log_prior(&w, prior)
        );

        let d = design(
            vec![vec![1.0, 0.5], vec![1.0, -2.0], vec![1.0, 3.0]],
            vec![1.0, 0.0, 1.0],
        );
        let doubled = d.subset(&[0, 1, 2, 0, 1, 2]);
        let single = data_log_likelihood(&w, &d).unwrap();
        assert_eq!(data_log_likelihood(&w, &doubled).unwrap(), 2.0 * single);
    }

    #[test]
    fn gradient_vanishes_on_balanced_symmetric_data() {
        let d = design(
            vec![
                vec![1.0, 1.0],
                vec![1.0, -1.0],
                vec![-1.0, 1.0],
                vec![-1.0, -1.0],
            ],
            vec![1.0, 0.0, 0.0, 1.0],
        );
        let g = gradient(&[0.0, 0.0], &d, Prior::new(1.0).unwrap()).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn hessian_is_bounded_by_prior() {
        let d = design(
            vec![
                vec![1.0, 0.2, -0.4],
                vec![1.0, 1.5, 0.3],
                vec![1.0, -0.7, 2.0],
            ],
            vec![0.0, 1.0, 1.0],
        );
        let r = 0.5;
        let h = hessian(&[0.1, -0.3, 0.2], &d, Prior::new(r).unwrap()).unwrap();
        let (vals, _) = crate::spectral::eig_sym(&h).unwrap();
        assert!(vals.iter().all(|&v| v <= -r + 1e-12));
    }

    fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>, f64)> {
        (1usize..5, 2usize..12).prop_flat_map(|(m, t)| {
            (
                prop::collection::vec(prop::collection::vec(-2.0..2.0f64, m), t),
                prop::collection::vec(prop::bool::ANY.prop_map(f64::from), t),
                prop::collection::vec(-1.5..1.5f64, m),
                0.05..3.0f64,
            )
        })
    }

    proptest! {
        #[test]
        fn complementary_probabilities(z in -40.0..40.0f64) {
            prop_assert!((sigmoid(z) + sigmoid(-z) - 1.0).abs() <= 1e-15);
        }

        #[test]
        fn gradient_matches_central_differences((rows, labels, w, r) in instance()) {
            let d = design(rows, labels);
            let prior = Prior::new(r).unwrap();
            let g = gradient(&w, &d, prior).unwrap();
            let h = hessian(&w, &d, prior).unwrap();
            let step = 1e-5;
            for i in 0..w.len() {
                let mut up = w.clone();
                let mut dn = w.clone();
                up[i] += step;
                dn[i] -= step;
                let fd = (log_likelihood(&up, &d, prior).unwrap()
                    - log_likelihood(&dn, &d, prior).unwrap()) / (2.0 * step);
                prop_assert!((g[i] - fd).abs() <= 1e-6 * (1.0 + g[i].abs()));
                let gu = gradient(&up, &d, prior).unwrap();
                let gd = gradient(&dn, &d, prior).unwrap();
                for j in 0..w.len() {
                    let fd = (gu[j] - gd[j]) / (2.0 * step);
                    prop_assert!((h[(j, i)] - fd).abs() <= 1e-5 * (1.0 + h[(j, i)].abs()));
                }
            }
        }

        #[test]
        fn objective_is_concave((rows, labels, w1, r) in instance(), shift in prop::collection::vec(-2.0..2.0f64, 5), lambda in 0.01..0.99f64) {
            let d = design(rows, labels);
            let prior = Prior::new(r).unwrap();
            let w2: Vec<f64> = w1.iter().zip(&shift).map(|(a, b)| a + b).collect();
            let mix: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
            let lhs = log_likelihood(&mix, &d, prior).unwrap();
            let rhs = lambda * log_likelihood(&w1, &d, prior).unwrap()
                + (1.0 - lambda) * log_likelihood(&w2, &d, prior).unwrap();
            prop_assert!(lhs >= rhs - 1e-12);
        }
    }
}
