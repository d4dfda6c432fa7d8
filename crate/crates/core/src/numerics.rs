//! Dense linear algebra and scalar-function kernel.
//!
//! Everything above this module (embeddings, attention, the MLP head, the
//! optimizer) is built from these primitives: row-major [`Matrix`],
//! [`Vector`], elementwise activations, a numerically safe [`softmax`], a
//! central-difference gradient oracle and a seedable [`RandomSource`].
//! All arithmetic is `f64`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    #[error("shape mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("{0} requires a non-empty input")]
    EmptyInput(&'static str),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("invalid range [{lo}, {hi})")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("invalid standard deviation {0}")]
    InvalidStddev(f64),
    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),
}

// ---------------------------------------------------------------------------
// Vector
// ---------------------------------------------------------------------------

/// Dense 64-bit vector. Entries are finite after any public operation on
/// finite inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    pub fn zeros(len: usize) -> Self {
        Vector { data: vec![0.0; len] }
    }

    pub fn from_vec(data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite("Vector::from_vec"));
        }
        Ok(Vector { data })
    }

    /// Construction without the finiteness scan, for values produced by
    /// operations that cannot introduce NaN/Inf.
    pub(crate) fn from_vec_unchecked(data: Vec<f64>) -> Self {
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Vector { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn dot(&self, other: &Vector) -> Result<f64, NumericsError> {
        if self.len() != other.len() {
            return Err(NumericsError::ShapeMismatch {
                op: "dot",
                left_rows: 1,
                left_cols: self.len(),
                right_rows: 1,
                right_cols: other.len(),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// `self += scale * other`.
    pub fn axpy(&mut self, scale: f64, other: &Vector) -> Result<(), NumericsError> {
        if self.len() != other.len() {
            return Err(NumericsError::ShapeMismatch {
                op: "axpy",
                left_rows: 1,
                left_cols: self.len(),
                right_rows: 1,
                right_cols: other.len(),
            });
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector {
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

/// Dense row-major 64-bit matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::ShapeMismatch {
                op: "Matrix::from_vec",
                left_rows: rows,
                left_cols: cols,
                right_rows: 1,
                right_cols: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite("Matrix::from_vec"));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Convenience constructor from row slices; rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(NumericsError::ShapeMismatch {
                op: "Matrix::from_rows",
                left_rows: r,
                left_cols: c,
                right_rows: r,
                right_cols: 0,
            });
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Self::from_vec(r, c, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Standard matrix product with a fixed row-by-row accumulation order.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, NumericsError> {
        if self.cols != other.rows {
            return Err(NumericsError::ShapeMismatch {
                op: "matmul",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in dst.iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * v` for a column vector `v`.
    pub fn matvec(&self, v: &Vector) -> Result<Vector, NumericsError> {
        if self.cols != v.len() {
            return Err(NumericsError::ShapeMismatch {
                op: "matvec",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: v.len(),
                right_cols: 1,
            });
        }
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            out.push(
                self.row(r)
                    .iter()
                    .zip(v.as_slice())
                    .map(|(a, b)| a * b)
                    .sum(),
            );
        }
        Ok(Vector { data: out })
    }

    /// `self^T * v`.
    pub fn transpose_matvec(&self, v: &Vector) -> Result<Vector, NumericsError> {
        if self.rows != v.len() {
            return Err(NumericsError::ShapeMismatch {
                op: "transpose_matvec",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: v.len(),
                right_cols: 1,
            });
        }
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let s = v[r];
            if s == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += s * a;
            }
        }
        Ok(Vector { data: out })
    }

    /// Rank-1 accumulate: `self += scale * u * v^T`.
    pub fn add_outer(&mut self, scale: f64, u: &Vector, v: &Vector) -> Result<(), NumericsError> {
        if self.rows != u.len() || self.cols != v.len() {
            return Err(NumericsError::ShapeMismatch {
                op: "add_outer",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: u.len(),
                right_cols: v.len(),
            });
        }
        for r in 0..self.rows {
            let s = scale * u[r];
            if s == 0.0 {
                continue;
            }
            for (o, b) in self.row_mut(r).iter_mut().zip(v.as_slice()) {
                *o += s * b;
            }
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

// ---------------------------------------------------------------------------
// Scalar activations
// ---------------------------------------------------------------------------

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Logistic sigmoid, computed without overflowing for large |x| and clamped
/// to the open interval (0, 1) at f64 resolution.
pub fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Hyperbolic tangent clamped to the open interval (-1, 1) at f64
/// resolution; the bare builtin saturates to exactly +-1 beyond |x| ~ 19.
pub fn tanh(x: f64) -> f64 {
    let bound = 1.0 - f64::EPSILON / 2.0;
    x.tanh().clamp(-bound, bound)
}

/// Softmax with max-subtraction; naive exponentiation overflows for score
/// magnitudes beyond ~709, which plausible alignment scores can reach.
pub fn softmax(v: &Vector) -> Result<Vector, NumericsError> {
    if v.is_empty() {
        return Err(NumericsError::EmptyInput("softmax"));
    }
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(Vector::from_vec_unchecked(
        exps.into_iter().map(|e| e / total).collect(),
    ))
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Central-difference gradient of a scalar function: per coordinate
/// `(f(x + eps*e_i) - f(x - eps*e_i)) / (2*eps)`.
pub fn finite_diff_grad(
    mut f: impl FnMut(&Vector) -> f64,
    x: &Vector,
    eps: f64,
) -> Result<Vector, NumericsError> {
    if !(eps > 0.0) {
        return Err(NumericsError::InvalidStep(eps));
    }
    let mut probe = x.clone();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + eps;
        let plus = f(&probe);
        probe[i] = orig - eps;
        let minus = f(&probe);
        probe[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(NumericsError::NonFinite("finite_diff_grad evaluation"));
        }
        grad.push((plus - minus) / (2.0 * eps));
    }
    Ok(Vector::from_vec_unchecked(grad))
}

// ---------------------------------------------------------------------------
// Random source
// ---------------------------------------------------------------------------

/// Seedable generator with a splitmix64 state update. Identical seeds yield
/// identical draw sequences; cross-platform bit identity of downstream models
/// is not promised, per-build determinism is.
#[derive(Debug, Clone)]
pub struct RandomSource {
    state: u64,
}

impl RandomSource {
    pub const ALGORITHM: &'static str = "splitmix64";

    pub fn new(seed: u64) -> Self {
        RandomSource { state: seed }
    }

    /// Derive an independent child stream from this one.
    pub fn fork(&mut self) -> RandomSource {
        RandomSource::new(self.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in [lo, hi). `lo == hi` returns `lo`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64, NumericsError> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(NumericsError::InvalidRange { lo, hi });
        }
        if lo == hi {
            return Ok(lo);
        }
        // Rounding in lo + (hi-lo)*u can land exactly on hi; redraw.
        loop {
            let r = lo + (hi - lo) * self.next_f64();
            if r < hi {
                return Ok(r);
            }
        }
    }

    /// Gaussian draw via Box-Muller. `stddev == 0` returns the mean exactly
    /// while still consuming two uniforms, keeping draw sequences aligned.
    pub fn gaussian(&mut self, mean: f64, stddev: f64) -> Result<f64, NumericsError> {
        if !(stddev >= 0.0) || !stddev.is_finite() {
            return Err(NumericsError::InvalidStddev(stddev));
        }
        Ok(mean + stddev * self.standard_normal())
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Uniform index in [0, n). Modulo bias is negligible for n « 2^64.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matmul_identity() {
        let a = Matrix::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap();
        let id = Matrix::identity(2);
        assert_eq!(id.matmul(&a).unwrap(), a);
    }

    #[test]
    fn matmul_hand_product() {
        // Hand multiplication oracle: [[1,2],[3,4]] * [[5,6],[7,8]].
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        let expected = Matrix::from_rows(&[vec![19.0, 22.0], vec![43.0, 50.0]]).unwrap();
        assert_eq!(c, expected);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(4, 2);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("4x2"), "{msg}");
    }

    #[test]
    fn softmax_symmetry_and_known_values() {
        for c in [-5.0, 0.0, 3.25] {
            let v = Vector::from_vec(vec![c, c, c]).unwrap();
            let s = softmax(&v).unwrap();
            for i in 0..3 {
                assert!((s[i] - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        let v = Vector::from_vec(vec![0.0, 2.0_f64.ln()]).unwrap();
        let s = softmax(&v).unwrap();
        assert!((s[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((s[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_empty_is_domain_error() {
        assert_eq!(
            softmax(&Vector::zeros(0)).unwrap_err(),
            NumericsError::EmptyInput("softmax")
        );
    }

    proptest! {
        #[test]
        fn softmax_simplex_and_shift_invariance(
            vals in proptest::collection::vec(-700.0..700.0f64, 1..24),
            shift in -50.0..50.0f64,
        ) {
            let v = Vector::from_vec(vals.clone()).unwrap();
            let s = softmax(&v).unwrap();
            prop_assert!(s.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!((s.sum() - 1.0).abs() < 1e-12);

            let shifted = Vector::from_vec(vals.iter().map(|x| x + shift).collect()).unwrap();
            let s2 = softmax(&shifted).unwrap();
            for i in 0..s.len() {
                prop_assert!((s[i] - s2[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn matmul_associativity(seed in 0u64..1000) {
            let mut rng = RandomSource::new(seed);
            let mut rand_mat = |r: usize, c: usize| {
                let data: Vec<f64> = (0..r * c).map(|_| rng.uniform(-2.0, 2.0).unwrap()).collect();
                Matrix::from_vec(r, c, data).unwrap()
            };
            let a = rand_mat(3, 4);
            let b = rand_mat(4, 2);
            let c = rand_mat(2, 5);
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            for (l, r) in left.as_slice().iter().zip(right.as_slice()) {
                let scale = l.abs().max(r.abs()).max(1.0);
                prop_assert!((l - r).abs() / scale < 1e-9);
            }
        }
    }

    #[test]
    fn activations_known_points() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(relu(-3.2), 0.0);
        assert_eq!(relu(3.2), 3.2);
        // Scalar formula evaluation oracle for tanh.
        let x = 10.0_f64;
        let oracle = (x.exp() - (-x).exp()) / (x.exp() + (-x).exp());
        assert!((tanh(10.0) - oracle).abs() < 1e-15);
        assert!((tanh(10.0) - 0.9999999958776927).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_stays_in_open_interval() {
        for x in [-1e4, -40.0, 0.0, 40.0, 1e4] {
            let p = sigmoid(x);
            assert!(p > 0.0 && p < 1.0, "sigmoid({x}) = {p}");
        }
        assert!(tanh(1e3) < 1.0 && tanh(-1e3) > -1.0);
    }

    #[test]
    fn finite_diff_matches_analytic_derivatives() {
        let x = Vector::from_vec(vec![3.0]).unwrap();
        let g = finite_diff_grad(|v| v[0] * v[0], &x, 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);

        let x = Vector::from_vec(vec![0.3, -1.2, 2.0]).unwrap();
        let g = finite_diff_grad(|_| 42.0, &x, 1e-5).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));

        // Sum of tanh: d/dx_i = 1 - tanh(x_i)^2.
        let g = finite_diff_grad(|v| v.iter().map(|&t| t.tanh()).sum(), &x, 1e-5).unwrap();
        for i in 0..3 {
            let analytic = 1.0 - x[i].tanh().powi(2);
            assert!((g[i] - analytic).abs() / analytic.abs().max(1.0) < 1e-6);
        }
    }

    #[test]
    fn finite_diff_rejects_bad_step_and_nonfinite() {
        let x = Vector::zeros(2);
        assert!(finite_diff_grad(|v| v[0], &x, 0.0).is_err());
        assert!(matches!(
            finite_diff_grad(|_| f64::NAN, &x, 1e-5).unwrap_err(),
            NumericsError::NonFinite(_)
        ));
    }

    #[test]
    fn rng_same_seed_same_sequence() {
        let mut a = RandomSource::new(7);
        let mut b = RandomSource::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = RandomSource::new(8);
        assert_ne!(RandomSource::new(7).next_u64(), c.next_u64());
    }

    #[test]
    fn uniform_law_of_large_numbers() {
        let mut rng = RandomSource::new(42);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| rng.uniform(0.0, 1.0).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "sample mean {mean}");
    }

    #[test]
    fn uniform_bounds_and_errors() {
        let mut rng = RandomSource::new(1);
        for _ in 0..10_000 {
            let r = rng.uniform(-2.0, 3.0).unwrap();
            assert!((-2.0..3.0).contains(&r));
        }
        assert_eq!(rng.uniform(1.0, 1.0).unwrap(), 1.0);
        assert!(matches!(
            rng.uniform(2.0, 1.0).unwrap_err(),
            NumericsError::InvalidRange { .. }
        ));
    }

    #[test]
    fn gaussian_zero_stddev_is_exact_mean() {
        let mut rng = RandomSource::new(3);
        assert_eq!(rng.gaussian(2.75, 0.0).unwrap(), 2.75);
        assert!(rng.gaussian(0.0, -1.0).is_err());
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = RandomSource::new(11);
        let n = 50_000;
        let draws: Vec<f64> = (0..n).map(|_| rng.gaussian(1.0, 2.0).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
        assert!((var - 4.0).abs() < 0.15, "var {var}");
    }

    #[test]
    fn shuffle_is_seeded_permutation() {
        let mut a: Vec<u32> = (0..50).collect();
        let mut b = a.clone();
        RandomSource::new(5).shuffle(&mut a);
        RandomSource::new(5).shuffle(&mut b);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn matvec_and_outer_consistency() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let v = Vector::from_vec(vec![1.0, 0.0, -1.0]).unwrap();
        let mv = m.matvec(&v).unwrap();
        assert_eq!(mv.as_slice(), &[-2.0, -2.0]);
        let u = Vector::from_vec(vec![1.0, 10.0]).unwrap();
        let tv = m.transpose_matvec(&u).unwrap();
        assert_eq!(tv.as_slice(), &[41.0, 52.0, 63.0]);

        let mut acc = Matrix::zeros(2, 3);
        acc.add_outer(2.0, &u, &v).unwrap();
        assert_eq!(acc.row(0), &[2.0, 0.0, -2.0]);
        assert_eq!(acc.row(1), &[20.0, 0.0, -20.0]);
    }

    #[test]
    fn constructors_reject_nonfinite() {
        assert!(Vector::from_vec(vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::from_vec(1, 2, vec![f64::INFINITY, 0.0]).is_err());
        assert!(Matrix::from_vec(2, 2, vec![0.0; 3]).is_err());
    }
}
