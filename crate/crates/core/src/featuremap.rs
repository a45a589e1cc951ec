//! Recursive super-features.
//!
//! A layer projects the incoming feature vector `f` onto the weighted mean
//! solution and the selected principal directions,
//!
//! ```text
//! F_0 = V0 · f / |V0|,    F_α = U_α · f,
//! ```
//!
//! and then extends `(F_0, ..., F_k)` with all pairwise products
//! `F_α F_β, α <= β`. Every extended feature is divided by a positive scale
//! calibrated on the training set so that its root-mean-square is one.
//! Stacking `N` layers yields polynomials of degree at most `2^N` in the raw
//! inputs.

use log::warn;

use crate::data::{basic_features, Standardization};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};
use crate::spectral::PrincipalComponents;

/// One entry of the extended feature vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Term {
    Linear(usize),
    /// Product `F_a F_b` with `a <= b`.
    Pair(usize, usize),
}

/// Fixed ordering of the extended features for `m` super-features: the
/// linear terms in index order, then pairs `(a, b), a <= b`, lexicographic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExpandedIndex {
    m: usize,
}

impl ExpandedIndex {
    pub fn new(m: usize) -> Self {
        ExpandedIndex { m }
    }

    pub fn super_dim(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m + self.m * (self.m + 1) / 2
    }

    pub fn term(&self, pos: usize) -> Option<Term> {
        if pos < self.m {
            return Some(Term::Linear(pos));
        }
        let mut rest = pos - self.m;
        for a in 0..self.m {
            let row = self.m - a;
            if rest < row {
                return Some(Term::Pair(a, a + rest));
            }
            rest -= row;
        }
        None
    }

    pub fn position(&self, term: Term) -> Option<usize> {
        match term {
            Term::Linear(a) if a < self.m => Some(a),
            Term::Pair(a, b) if a <= b && b < self.m => {
                // pairs starting before `a` occupy m + (m-1) + ... + (m-a+1) slots
                let before = a * self.m - a * (a.saturating_sub(1)) / 2;
                Some(self.m + before + (b - a))
            }
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        (0..self.dim()).map(move |p| self.term(p).expect("position in range"))
    }
}

/// `(F_0, F_1, ..., F_k)` for a set of principal components; fails when the
/// mean solution is the zero vector.
pub fn redefine(pc: &PrincipalComponents, f: &[f64]) -> Result<Vec<f64>> {
    check_dim(pc.dim(), f.len())?;
    let v0_norm = norm(&pc.mean);
    if !(v0_norm > 0.0) {
        return Err(Error::numerical(
            "featuremap",
            "mean solution has zero norm; F_0 is undefined",
        ));
    }
    let mut out = Vec::with_capacity(pc.k() + 1);
    out.push(dot(&pc.mean, f) / v0_norm);
    for u in &pc.components {
        check_dim(u.len(), f.len())?;
        out.push(dot(u, f));
    }
    Ok(out)
}

/// Linear terms followed by symmetric products, each divided by its scale.
pub fn expand(super_features: &[f64], scales: &[f64]) -> Result<Vec<f64>> {
    let idx = ExpandedIndex::new(super_features.len());
    check_dim(idx.dim(), scales.len())?;
    let mut out = expand_unscaled(super_features);
    for (v, s) in out.iter_mut().zip(scales) {
        *v /= s;
    }
    Ok(out)
}

fn expand_unscaled(f: &[f64]) -> Vec<f64> {
    let m = f.len();
    let mut out = Vec::with_capacity(m + m * (m + 1) / 2);
    out.extend_from_slice(f);
    for a in 0..m {
        for b in a..m {
            out.push(f[a] * f[b]);
        }
    }
    out
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// One redefine-and-extend step.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    v0: Vec<f64>,
    v0_norm: f64,
    components: Vec<Vec<f64>>,
    scales: Vec<f64>,
}

impl Layer {
    /// Assembles a layer from stored parts, checking every invariant.
    pub fn new(v0: Vec<f64>, components: Vec<Vec<f64>>, scales: Vec<f64>) -> Result<Self> {
        let m_in = v0.len();
        for u in &components {
            check_dim(m_in, u.len())?;
        }
        for (i, u) in components.iter().enumerate() {
            for (j, w) in components.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot(u, w) - target).abs() > 1e-10 {
                    return Err(Error::numerical(
                        "featuremap",
                        format!("principal directions {i} and {j} are not orthonormal"),
                    ));
                }
            }
        }
        check_dim(ExpandedIndex::new(components.len() + 1).dim(), scales.len())?;
        if scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::numerical(
                "featuremap",
                "feature scales must be positive",
            ));
        }
        let v0_norm = norm(&v0);
        if !v0_norm.is_finite() {
            return Err(Error::numerical(
                "featuremap",
                "mean solution is not finite",
            ));
        }
        Ok(Layer {
            v0,
            v0_norm,
            components,
            scales,
        })
    }

    /// Builds a layer from principal components and calibrates the scales on
    /// the rows of `features` (the training set in the incoming space).
    pub fn calibrate(pc: &PrincipalComponents, features: &Matrix) -> Result<Self> {
        let k = pc.k();
        let unit = vec![1.0; ExpandedIndex::new(k + 1).dim()];
        let mut layer = Layer::new(pc.mean.clone(), pc.components.clone(), unit)?;
        if layer.uses_bias_fallback() {
            warn!("mean solution is zero; using the constant feature in place of F_0");
        }
        check_dim(layer.input_dim(), features.cols())?;

        let mut sum_sq = vec![0.0; layer.output_dim()];
        for row in features.row_iter() {
            let ext = expand_unscaled(&layer.redefine(row)?);
            for (acc, v) in sum_sq.iter_mut().zip(&ext) {
                *acc += v * v;
            }
        }
        let n = features.rows().max(1) as f64;
        layer.scales = sum_sq
            .iter()
            .map(|s| {
                let rms = (s / n).sqrt();
                if rms > 0.0 && rms.is_finite() {
                    rms
                } else {
                    1.0
                }
            })
            .collect();
        Ok(layer)
    }

    pub fn mean_solution(&self) -> &[f64] {
        &self.v0
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Number of selected principal directions.
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn input_dim(&self) -> usize {
        self.v0.len()
    }

    /// `k + 1` super-features.
    pub fn super_dim(&self) -> usize {
        self.k() + 1
    }

    pub fn output_dim(&self) -> usize {
        ExpandedIndex::new(self.super_dim()).dim()
    }

    /// True when `V0 = 0` and `F_0` is replaced by the constant 1.
    pub fn uses_bias_fallback(&self) -> bool {
        self.v0_norm == 0.0
    }

    /// Super-features `(F_0, F_1, ..., F_k)` of an incoming feature vector.
    pub fn redefine(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), f.len())?;
        let mut out = Vec::with_capacity(self.super_dim());
        out.push(if self.uses_bias_fallback() {
            1.0
        } else {
            dot(&self.v0, f) / self.v0_norm
        });
        out.extend(self.components.iter().map(|u| dot(u, f)));
        Ok(out)
    }

    /// Scaled extended features of an incoming feature vector.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        expand(&self.redefine(f)?, &self.scales)
    }

    /// Parameters in this layer's output space whose score equals
    /// `V0 · f` for every input: only the `F_0` slot is non-zero.
    pub fn embed_mean_solution(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.output_dim()];
        w[0] = self.v0_norm * self.scales[0];
        w
    }
}

/// Standardization plus an ordered stack of layers on top of the basic
/// features.
#[derive(Clone, Debug, PartialEq)]
pub struct RecursiveFeatureMap {
    standardization: Standardization,
    layers: Vec<Layer>,
}

impl RecursiveFeatureMap {
    pub fn new(standardization: Standardization) -> Self {
        RecursiveFeatureMap {
            standardization,
            layers: Vec::new(),
        }
    }

    /// Rebuilds a map from stored layers, validating the dimension chain.
    pub fn from_layers(standardization: Standardization, layers: Vec<Layer>) -> Result<Self> {
        let mut map = RecursiveFeatureMap::new(standardization);
        for layer in layers {
            map.push(layer)?;
        }
        Ok(map)
    }

    pub fn push(&mut self, layer: Layer) -> Result<()> {
        check_dim(self.output_dim(), layer.input_dim())?;
        self.layers.push(layer);
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.standardization.dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers
            .last()
            .map(Layer::output_dim)
            .unwrap_or(self.input_dim() + 1)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn standardization(&self) -> &Standardization {
        &self.standardization
    }

    /// Final features of an already standardized input.
    pub fn evaluate_standardized(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x.len())?;
        let mut f = basic_features(x);
        for layer in &self.layers {
            f = layer.apply(&f)?;
        }
        Ok(f)
    }

    /// Final features of a raw input.
    pub fn evaluate(&self, raw: &[f64]) -> Result<Vec<f64>> {
        self.evaluate_standardized(&self.standardization.apply(raw)?)
    }

    /// Super-features of the last layer (the basic features when there are
    /// no layers) for a raw input.
    pub fn super_features(&self, raw: &[f64]) -> Result<Vec<f64>> {
        let x = self.standardization.apply(raw)?;
        let mut f = basic_features(&x);
        let Some((last, rest)) = self.layers.split_last() else {
            return Ok(f);
        };
        for layer in rest {
            f = layer.apply(&f)?;
        }
        last.redefine(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pc(mean: Vec<f64>, components: Vec<Vec<f64>>) -> PrincipalComponents {
        PrincipalComponents {
            mean,
            eigenvalues: vec![1.0; components.len()],
            spectrum: Vec::new(),
            components,
        }
    }

    #[test]
    fn redefine_examples() {
        let p = pc(vec![2.0, 0.0], vec![vec![0.0, 1.0]]);
        assert_eq!(redefine(&p, &[3.0, 5.0]).unwrap(), vec![3.0, 5.0]);

        let p = pc(vec![1.0, 0.0, 0.0], vec![vec![0.0, 1.0, 0.0]]);
        assert_eq!(redefine(&p, &[0.0, 0.0, 4.0]).unwrap(), vec![0.0, 0.0]);

        let p = pc(vec![0.0, 3.0], vec![]);
        assert_eq!(redefine(&p, &[7.0, 2.0]).unwrap(), vec![2.0]);

        assert!(redefine(&pc(vec![0.0, 0.0], vec![]), &[1.0, 1.0]).is_err());
        assert!(redefine(&pc(vec![1.0, 0.0], vec![]), &[1.0]).is_err());
    }

    #[test]
    fn expand_examples() {
        let out = expand(&[2.0, 3.0], &[1.0; 5]).unwrap();
        assert_eq!(out, vec![2.0, 3.0, 4.0, 6.0, 9.0]);

        let out = expand(&[1.0, 0.0, 0.0], &[1.0; 9]).unwrap();
        assert_eq!(out, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(ExpandedIndex::new(3).dim(), 9);

        let scaled = expand(&[2.0, 3.0], &[2.0, 1.0, 4.0, 1.0, 3.0]).unwrap();
        assert_eq!(scaled, vec![1.0, 3.0, 1.0, 6.0, 3.0]);
        assert!(expand(&[1.0, 2.0], &[1.0; 4]).is_err());
    }

    #[test]
    fn expanded_index_is_bijective() {
        for m in 0..7 {
            let idx = ExpandedIndex::new(m);
            let terms: Vec<Term> = idx.terms().collect();
            assert_eq!(terms.len(), idx.dim());
            for (pos, t) in terms.iter().enumerate() {
                assert_eq!(idx.position(*t), Some(pos));
            }
            assert_eq!(idx.term(idx.dim()), None);
            if m > 1 {
                assert_eq!(terms[m], Term::Pair(0, 0));
                assert_eq!(terms[m + 1], Term::Pair(0, 1));
                assert_eq!(*terms.last().unwrap(), Term::Pair(m - 1, m - 1));
            }
        }
        assert_eq!(ExpandedIndex::new(3).position(Term::Pair(2, 1)), None);
    }

    #[test]
    fn embedded_mean_reproduces_mean_score() {
        let v0 = vec![0.4, -1.3, 0.8];
        let u = vec![0.0, 0.6, 0.8];
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![1.0, (i as f64).sin(), (i as f64 * 0.3).cos()])
            .collect();
        let feats = Matrix::from_rows(&rows, 3).unwrap();
        let layer = Layer::calibrate(&pc(v0.clone(), vec![u]), &feats).unwrap();
        let w = layer.embed_mean_solution();
        for i in 0..50 {
            let f = vec![1.0, (i as f64 * 0.7).sin() * 3.0, i as f64 * 0.1 - 2.0];
            let direct = dot(&v0, &f);
            let via = dot(&w, &layer.apply(&f).unwrap());
            assert!((direct - via).abs() <= 1e-10 * (1.0 + direct.abs()));
        }
        // doubling every scale halves the stored coefficient
        let doubled: Vec<f64> = layer.scales().iter().map(|s| 2.0 * s).collect();
        let layer2 = Layer::new(v0.clone(), layer.components().to_vec(), doubled).unwrap();
        assert_eq!(layer2.embed_mean_solution()[0], 2.0 * w[0]);
    }

    #[test]
    fn zero_mean_falls_back_to_constant_feature() {
        let feats = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, -1.0]], 2).unwrap();
        let layer = Layer::calibrate(&pc(vec![0.0, 0.0], vec![vec![0.0, 1.0]]), &feats).unwrap();
        assert!(layer.uses_bias_fallback());
        assert_eq!(layer.redefine(&[1.0, 5.0]).unwrap()[0], 1.0);
        assert!(layer.embed_mean_solution().iter().all(|w| *w == 0.0));
    }

    #[test]
    fn calibrated_scales_give_unit_rms() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![1.0, (i as f64 * 0.9).sin() * 5.0, (i as f64).cos() * 0.01])
            .collect();
        let feats = Matrix::from_rows(&rows, 3).unwrap();
        let s = 0.5f64.sqrt();
        // the third direction is zero on every row
        let layer = Layer::calibrate(
            &pc(vec![0.0, 2.0, 0.0], vec![vec![0.0, s, s], vec![0.0, s, -s]]),
            &feats,
        )
        .unwrap();
        for j in 0..layer.output_dim() {
            let ms: f64 = rows
                .iter()
                .map(|r| layer.apply(r).unwrap()[j].powi(2))
                .sum::<f64>()
                / rows.len() as f64;
            assert!((ms.sqrt() - 1.0).abs() < 1e-9, "feature {j}");
        }
    }

    #[test]
    fn layer_rejects_bad_parts() {
        assert!(Layer::new(vec![1.0, 0.0], vec![vec![1.0, 1.0]], vec![1.0; 5]).is_err());
        assert!(Layer::new(vec![1.0, 0.0], vec![vec![0.0, 1.0]], vec![1.0; 4]).is_err());
        assert!(Layer::new(
            vec![1.0, 0.0],
            vec![vec![0.0, 1.0]],
            vec![1.0, 1.0, 0.0, 1.0, 1.0]
        )
        .is_err());
    }

    #[test]
    fn zero_layer_map_is_basic_features() {
        let st = Standardization {
            mean: vec![1.0, 2.0],
            scale: vec![2.0, 1.0],
        };
        let map = RecursiveFeatureMap::new(st);
        assert_eq!(map.evaluate(&[3.0, 2.0]).unwrap(), vec![1.0, 1.0, 0.0]);
        assert!(map.evaluate(&[3.0]).is_err());
        let bad = Layer::new(vec![1.0], vec![], vec![1.0; 2]).unwrap();
        let mut map = map;
        assert!(map.push(bad).is_err());
    }
}
