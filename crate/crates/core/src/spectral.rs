//! Symmetric eigendecomposition and principal-component selection over the
//! solution covariance.

use crate::ensemble::SolutionDistribution;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (descending) and matching orthonormal eigenvectors of a
/// symmetric matrix, by cyclic Jacobi rotations.
///
/// Each eigenvector's sign is fixed so its largest-magnitude entry is
/// positive.
pub fn eig_sym(a: &Matrix) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let asym = a.asymmetry();
    if asym > 1e-10 * a.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let n = a.rows();
    let mut a = a.clone();
    a.symmetrize();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off == 0.0 || off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                a[(p, p)] -= t * apq;
                a[(q, q)] += t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    a[(r, p)] = new_rp;
                    a[(p, r)] = new_rp;
                    a[(r, q)] = new_rq;
                    a[(q, r)] = new_rq;
                }
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut col = v.column(i);
            let lead = col
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |best, (k, x)| {
                    if x.abs() > best.1 {
                        (k, x.abs())
                    } else {
                        best
                    }
                })
                .0;
            if col.get(lead).is_some_and(|x| *x < 0.0) {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            col
        })
        .collect();
    Ok((values, vectors))
}

/// Selected high-variance directions of the solution distribution, anchored
/// at its mean.
#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalComponents {
    /// Weighted mean solution `V0`.
    pub mean: Vec<f64>,
    /// Orthonormal eigenvectors, one per selected component.
    pub components: Vec<Vec<f64>>,
    /// Eigenvalues of the selected components, descending.
    pub eigenvalues: Vec<f64>,
    /// Full covariance spectrum, descending.
    pub spectrum: Vec<f64>,
}

impl PrincipalComponents {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

// Spread of identical solutions after averaging, in ulps of the mean.
const MEAN_ROUNDING_ULPS: f64 = 64.0;

/// Largest variance that rounding alone can produce when identical vectors
/// are averaged.
fn rounding_floor(mean: &[f64]) -> f64 {
    let scale = mean.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    (MEAN_ROUNDING_ULPS * f64::EPSILON * scale).powi(2)
}

/// Keeps eigenvectors with `λ >= rel_threshold · λ_max`, at most `k_max` of
/// them. A covariance that is zero up to rounding yields no components.
pub fn select_components(
    dist: &SolutionDistribution,
    rel_threshold: f64,
    k_max: usize,
) -> Result<PrincipalComponents> {
    if !(rel_threshold > 0.0 && rel_threshold <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "relative threshold must lie in (0, 1], got {rel_threshold}"
        )));
    }
    if k_max == 0 {
        return Err(Error::InvalidConfig("k_max must be at least 1".into()));
    }
    let (values, vectors) = eig_sym(&dist.cov)?;
    let top = values.first().copied().unwrap_or(0.0);
    let mut components = Vec::new();
    let mut eigenvalues = Vec::new();
    if top > rounding_floor(&dist.mean) {
        let cut = rel_threshold * top;
        for (val, vec) in values.iter().zip(&vectors) {
            if components.len() == k_max || *val < cut {
                break;
            }
            components.push(vec.clone());
            eigenvalues.push(*val);
        }
    }
    Ok(PrincipalComponents {
        mean: dist.mean.clone(),
        components,
        eigenvalues,
        spectrum: values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(vals: &[f64]) -> Matrix {
        let mut m = Matrix::zeros(vals.len(), vals.len());
        for (i, v) in vals.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    #[test]
    fn diagonal_matrix() {
        let (vals, vecs) = eig_sym(&diag(&[1.0, 4.0, 0.01])).unwrap();
        assert_eq!(vals, vec![4.0, 1.0, 0.01]);
        assert_eq!(vecs[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(vecs[1], vec![1.0, 0.0, 0.0]);
        assert_eq!(vecs[2], vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn zero_matrix() {
        let (vals, _) = eig_sym(&Matrix::zeros(3, 3)).unwrap();
        assert_eq!(vals, vec![0.0; 3]);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = Matrix::from_vec(2, 2, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(eig_sym(&m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn sign_convention_makes_largest_entry_positive() {
        let m = Matrix::from_vec(2, 2, vec![2.0, -1.0, -1.0, 2.0]).unwrap();
        let (vals, vecs) = eig_sym(&m).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        for v in vecs {
            let lead = v
                .iter()
                .cloned()
                .fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(lead > 0.0);
        }
    }

    fn dist(vals: &[f64]) -> SolutionDistribution {
        SolutionDistribution {
            mean: vec![0.5; vals.len()],
            cov: diag(vals),
        }
    }

    #[test]
    fn selection_examples() {
        let d = dist(&[4.0, 1.0, 0.01]);
        assert_eq!(select_components(&d, 0.2, 8).unwrap().k(), 2);
        assert_eq!(select_components(&d, 1.0, 8).unwrap().k(), 1);
        assert_eq!(select_components(&d, 0.001, 1).unwrap().k(), 1);
        let pc = select_components(&d, 0.001, 8).unwrap();
        assert_eq!(pc.k(), 3);
        assert_eq!(pc.mean, vec![0.5; 3]);
        assert_eq!(
            select_components(&dist(&[0.0, 0.0]), 0.05, 8).unwrap().k(),
            0
        );
        assert!(select_components(&d, 0.0, 8).is_err());
        assert!(select_components(&d, 0.5, 0).is_err());
    }
}
