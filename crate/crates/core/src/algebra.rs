//! Feature-algebra diagnostics.
//!
//! A family of features closes under multiplication when every product is a
//! linear combination of the family,
//! `F_a(x) F_b(x) = Σ_g C[a][b][g] F_g(x)`. The structure constants `C` of an
//! associative algebra satisfy
//! `Σ_μ C[a][b][μ] C[μ][c][ν] = Σ_μ C[a][μ][ν] C[b][c][μ]`.

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};

/// Rank-3 array `C[a][b][g]`, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    n: usize,
    data: Vec<f64>,
}

impl StructureConstants {
    pub fn zeros(n: usize) -> Self {
        StructureConstants {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n * n,
                found: data.len(),
            });
        }
        Ok(StructureConstants { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize, g: usize) -> f64 {
        self.data[(a * self.n + b) * self.n + g]
    }

    pub fn set(&mut self, a: usize, b: usize, g: usize, value: f64) {
        let n = self.n;
        self.data[(a * n + b) * n + g] = value;
    }

    /// Coordinates of the product of basis elements `a` and `b`.
    pub fn product(&self, a: usize, b: usize) -> &[f64] {
        let start = (a * self.n + b) * self.n;
        &self.data[start..start + self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Finite-dimensional algebra with an optional identity basis element.
#[derive(Clone, Debug, PartialEq)]
pub struct Algebra {
    pub name: String,
    pub constants: StructureConstants,
    pub identity: Option<usize>,
}

/// Complex numbers on the basis `(1, i)`.
pub fn complex() -> Algebra {
    let mut c = StructureConstants::zeros(2);
    c.set(0, 0, 0, 1.0);
    c.set(0, 1, 1, 1.0);
    c.set(1, 0, 1, 1.0);
    c.set(1, 1, 0, -1.0);
    Algebra {
        name: "complex".into(),
        constants: c,
        identity: Some(0),
    }
}

/// Quaternions on the basis `(1, i, j, k)` with `ij = k, jk = i, ki = j`.
pub fn quaternion() -> Algebra {
    let mut c = StructureConstants::zeros(4);
    for a in 0..4 {
        c.set(0, a, a, 1.0);
        c.set(a, 0, a, 1.0);
    }
    for a in 1..4 {
        c.set(a, a, 0, -1.0);
    }
    // cyclic (i, j, k)
    for (a, b, g) in [(1, 2, 3), (2, 3, 1), (3, 1, 2)] {
        c.set(a, b, g, 1.0);
        c.set(b, a, g, -1.0);
    }
    Algebra {
        name: "quaternion".into(),
        constants: c,
        identity: Some(0),
    }
}

/// Looks up a reference algebra by name.
pub fn reference(name: &str) -> Option<Algebra> {
    match name {
        "complex" => Some(complex()),
        "quaternion" => Some(quaternion()),
        _ => None,
    }
}

pub const REFERENCE_NAMES: [&str; 2] = ["complex", "quaternion"];

/// Largest violation of the associativity identity over all index tuples.
pub fn associativity_residual(c: &StructureConstants) -> f64 {
    let n = c.dim();
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for g in 0..n {
                for nu in 0..n {
                    let mut lhs = 0.0;
                    let mut rhs = 0.0;
                    for mu in 0..n {
                        lhs += c.get(a, b, mu) * c.get(mu, g, nu);
                        rhs += c.get(a, mu, nu) * c.get(b, g, mu);
                    }
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
    }
    worst
}

/// `(a ∘ b)_g = Σ a_α b_β C[α][β][g]`.
pub fn multiply(a: &[f64], b: &[f64], c: &StructureConstants) -> Result<Vec<f64>> {
    let n = c.dim();
    for v in [a, b] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    let mut out = vec![0.0; n];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            let s = ai * bj;
            if s == 0.0 {
                continue;
            }
            for (o, cg) in out.iter_mut().zip(c.product(i, j)) {
                *o += s * cg;
            }
        }
    }
    Ok(out)
}

/// Evaluates `Σ_p g_p a^p` inside the algebra by Horner's rule. The constant
/// term needs the identity element.
pub fn power_series(
    coeffs: &[f64],
    a: &[f64],
    c: &StructureConstants,
    identity: Option<usize>,
) -> Result<Vec<f64>> {
    let n = c.dim();
    if a.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.len(),
        });
    }
    let mut out = vec![0.0; n];
    if coeffs.len() > 1 {
        // h_p = g_p a,  h_j = g_j a + h_{j+1} ∘ a,  result h_1 = Σ_{p>=1} g_p a^p
        let top = coeffs.len() - 1;
        let mut h: Vec<f64> = a.iter().map(|x| coeffs[top] * x).collect();
        for &g in coeffs[1..top].iter().rev() {
            let prod = multiply(&h, a, c)?;
            h = prod.iter().zip(a).map(|(p, x)| p + g * x).collect();
        }
        out = h;
    }
    if let Some(&g0) = coeffs.first() {
        if g0 != 0.0 {
            let e = identity.ok_or(Error::MissingIdentity)?;
            if e >= n {
                return Err(Error::MissingIdentity);
            }
            out[e] += g0;
        }
    }
    Ok(out)
}

/// Least-squares structure constants for a sampled feature family.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraFitReport {
    pub constants: StructureConstants,
    /// RMS of the closure defect divided by the RMS of the products, over
    /// pairs `a <= b` and all samples. Zero means exact closure on the data.
    pub closure_residual: f64,
    /// Unnormalized RMS of the closure defect over the same entries.
    pub defect_rms: f64,
    pub associativity_residual: f64,
    /// Set when the sample Gram matrix is numerically rank deficient.
    pub ill_conditioned: bool,
}

const RIDGE: f64 = 1e-10;
const CONDITION_LIMIT: f64 = 1e-12;

/// Fits `C` from super-feature samples (one row per input point).
///
/// For each pair `(a, b)` the product column is projected on the span of the
/// feature columns through the ridge-damped normal equations. `C[a][b]` and
/// `C[b][a]` share one fit since pointwise products commute.
pub fn fit_structure_constants(samples: &Matrix) -> Result<AlgebraFitReport> {
    let n = samples.cols();
    if n == 0 {
        return Err(Error::InvalidConfig("no features to fit".into()));
    }
    if samples.rows() < n {
        return Err(Error::TooFewSamples {
            required: n,
            found: samples.rows(),
        });
    }
    let mut gram = samples.transpose().matmul(samples)?;
    let diag_max = (0..n).map(|i| gram[(i, i)]).fold(0.0f64, f64::max);
    let (eigs, _) = crate::spectral::eig_sym(&gram)?;
    let ill_conditioned = eigs.last().copied().unwrap_or(0.0) <= CONDITION_LIMIT * diag_max;
    for i in 0..n {
        gram[(i, i)] += RIDGE;
    }
    let chol = Cholesky::factor(&gram)
        .map_err(|e| Error::numerical("algebra", format!("normal equations: {e}")))?;

    let mut constants = StructureConstants::zeros(n);
    let mut defect_sq = 0.0;
    let mut product_sq = 0.0;
    let mut entries = 0usize;
    let mut rhs = vec![0.0; n];
    for a in 0..n {
        for b in a..n {
            rhs.iter_mut().for_each(|r| *r = 0.0);
            for row in samples.row_iter() {
                let p = row[a] * row[b];
                for (r, f) in rhs.iter_mut().zip(row) {
                    *r += p * f;
                }
            }
            let coef = chol.solve(&rhs)?;
            for row in samples.row_iter() {
                let p = row[a] * row[b];
                let fit: f64 = coef.iter().zip(row).map(|(c, f)| c * f).sum();
                defect_sq += (p - fit) * (p - fit);
                product_sq += p * p;
                entries += 1;
            }
            for (g, &v) in coef.iter().enumerate() {
                constants.set(a, b, g, v);
                constants.set(b, a, g, v);
            }
        }
    }
    let defect_rms = (defect_sq / entries as f64).sqrt();
    let closure_residual = if product_sq > 0.0 {
        (defect_sq / product_sq).sqrt()
    } else {
        0.0
    };
    Ok(AlgebraFitReport {
        associativity_residual: associativity_residual(&constants),
        constants,
        closure_residual,
        defect_rms,
        ill_conditioned,
    })
}
