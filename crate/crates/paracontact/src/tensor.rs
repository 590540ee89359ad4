//! Dense multi-index tensors at a point, index raising/lowering, contraction,
//! and pseudo-orthonormal frame construction for indefinite metrics.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variance {
    Upper,
    Lower,
}

#[derive(Debug, Error, PartialEq)]
pub enum TensorError {
    #[error("metric is singular (|det g| = {det:e} below 1e-12)")]
    SingularMetric { det: f64 },
    #[error("contraction needs one upper and one lower slot, got {0:?} and {1:?}")]
    VarianceMismatch(Variance, Variance),
    #[error("frame construction degenerated: remaining vectors have |g(v,v)| <= {0:e}")]
    FrameDegenerate(f64),
}

/// Dense tensor of numbers at a single point. All indices range over the
/// chart dimension; data is row-major with the last index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorValue {
    dims: usize,
    variance: Vec<Variance>,
    data: Vec<f64>,
}

impl TensorValue {
    pub fn zeros(dims: usize, variance: &[Variance]) -> TensorValue {
        let len = dims.pow(variance.len() as u32);
        TensorValue {
            dims,
            variance: variance.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn from_fn(
        dims: usize,
        variance: &[Variance],
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> TensorValue {
        let mut t = TensorValue::zeros(dims, variance);
        let rank = variance.len();
        let mut idx = vec![0usize; rank];
        for flat in 0..t.data.len() {
            decode(flat, dims, &mut idx);
            t.data[flat] = f(&idx);
        }
        t
    }

    pub fn scalar(value: f64) -> TensorValue {
        TensorValue {
            dims: 1,
            variance: vec![],
            data: vec![value],
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.variance.len());
        let mut o = 0;
        for &i in idx {
            debug_assert!(i < self.dims);
            o = o * self.dims + i;
        }
        o
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    pub fn add(&self, o: &TensorValue) -> TensorValue {
        assert_eq!(self.variance, o.variance);
        assert_eq!(self.dims, o.dims);
        TensorValue {
            dims: self.dims,
            variance: self.variance.clone(),
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, o: &TensorValue) -> TensorValue {
        assert_eq!(self.variance, o.variance);
        assert_eq!(self.dims, o.dims);
        TensorValue {
            dims: self.dims,
            variance: self.variance.clone(),
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> TensorValue {
        TensorValue {
            dims: self.dims,
            variance: self.variance.clone(),
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Flip the variance of one slot by contracting with the metric (to
    /// lower) or its inverse (to raise).
    pub fn raise_lower(&self, slot: usize, g: &TensorValue, g_inv: &TensorValue) -> TensorValue {
        assert!(slot < self.rank());
        let m = match self.variance[slot] {
            Variance::Upper => g,     // lower the index
            Variance::Lower => g_inv, // raise the index
        };
        let mut variance = self.variance.clone();
        variance[slot] = match variance[slot] {
            Variance::Upper => Variance::Lower,
            Variance::Lower => Variance::Upper,
        };
        let dims = self.dims;
        let mut out = TensorValue::zeros(dims, &variance);
        let rank = self.rank();
        let mut idx = vec![0usize; rank];
        let mut src = vec![0usize; rank];
        for flat in 0..out.data.len() {
            decode(flat, dims, &mut idx);
            src.copy_from_slice(&idx);
            let mut acc = 0.0;
            for b in 0..dims {
                src[slot] = b;
                acc += m.get(&[idx[slot], b]) * self.get(&src);
            }
            out.data[flat] = acc;
        }
        out
    }

    /// Contract one upper and one lower slot; rank drops by two.
    pub fn contract(&self, slot_a: usize, slot_b: usize) -> Result<TensorValue, TensorError> {
        assert!(slot_a != slot_b && slot_a < self.rank() && slot_b < self.rank());
        let (va, vb) = (self.variance[slot_a], self.variance[slot_b]);
        if va == vb {
            return Err(TensorError::VarianceMismatch(va, vb));
        }
        let (lo, hi) = if slot_a < slot_b {
            (slot_a, slot_b)
        } else {
            (slot_b, slot_a)
        };
        let mut variance = self.variance.clone();
        variance.remove(hi);
        variance.remove(lo);
        let dims = self.dims;
        let mut out = TensorValue::zeros(dims, &variance);
        let out_rank = variance.len();
        let mut oidx = vec![0usize; out_rank];
        let mut sidx = vec![0usize; self.rank()];
        for flat in 0..out.data.len() {
            decode(flat, dims, &mut oidx);
            // scatter the output index back into the source index pattern
            let mut oi = 0;
            for s in 0..self.rank() {
                if s != lo && s != hi {
                    sidx[s] = oidx[oi];
                    oi += 1;
                }
            }
            let mut acc = 0.0;
            for m in 0..dims {
                sidx[lo] = m;
                sidx[hi] = m;
                acc += self.get(&sidx);
            }
            out.data[flat] = acc;
        }
        Ok(out)
    }

    /// Max-norm of `T[..a..b..] - T[..b..a..]` over the two given slots.
    pub fn antisymmetry_residual(&self, slot_a: usize, slot_b: usize) -> f64 {
        self.pair_residual(slot_a, slot_b, 1.0)
    }

    /// Max-norm of `T[..a..b..] + T[..b..a..]` scaled by `sign = -1`, i.e.
    /// `sign = -1` checks symmetry and `sign = 1` checks antisymmetry.
    fn pair_residual(&self, slot_a: usize, slot_b: usize, sign: f64) -> f64 {
        let dims = self.dims;
        let rank = self.rank();
        let mut idx = vec![0usize; rank];
        let mut swapped = vec![0usize; rank];
        let mut worst: f64 = 0.0;
        for flat in 0..self.data.len() {
            decode(flat, dims, &mut idx);
            swapped.copy_from_slice(&idx);
            swapped.swap(slot_a, slot_b);
            worst = worst.max((self.get(&idx) + sign * self.get(&swapped)).abs());
        }
        worst
    }

    pub fn symmetry_residual(&self, slot_a: usize, slot_b: usize) -> f64 {
        self.pair_residual(slot_a, slot_b, -1.0)
    }
}

fn decode(mut flat: usize, dims: usize, idx: &mut [usize]) {
    for s in (0..idx.len()).rev() {
        idx[s] = flat % dims;
        flat /= dims;
    }
}

/// Iterate all multi-indices of the given rank.
pub fn multi_indices(dims: usize, rank: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = dims.pow(rank as u32);
    (0..total).map(move |flat| {
        let mut idx = vec![0usize; rank];
        decode(flat, dims, &mut idx);
        idx
    })
}

fn to_dmatrix(g: &TensorValue) -> DMatrix<f64> {
    let n = g.dims();
    DMatrix::from_fn(n, n, |i, j| g.get(&[i, j]))
}

pub fn determinant(g: &TensorValue) -> f64 {
    to_dmatrix(g).determinant()
}

/// Inverse of a symmetric (0,2) metric as a (2,0) tensor.
pub fn invert_metric(g: &TensorValue) -> Result<TensorValue, TensorError> {
    let m = to_dmatrix(g);
    let det = m.determinant();
    if det.abs() < 1e-12 {
        return Err(TensorError::SingularMetric { det });
    }
    let inv = m.try_inverse().ok_or(TensorError::SingularMetric { det })?;
    Ok(TensorValue::from_fn(
        g.dims(),
        &[Variance::Upper, Variance::Upper],
        |idx| inv[(idx[0], idx[1])],
    ))
}

/// Number of negative eigenvalues of a symmetric (0,2) tensor.
pub fn negative_eigenvalue_count(g: &TensorValue) -> usize {
    let eig = to_dmatrix(g).symmetric_eigen();
    eig.eigenvalues.iter().filter(|&&v| v < 0.0).count()
}

/// A pseudo-orthonormal frame: g(E_i, E_j) = sign_i * delta_ij with
/// sign_i in {+1, -1}.
#[derive(Clone, Debug)]
pub struct Frame {
    pub vectors: Vec<Vec<f64>>,
    pub signs: Vec<f64>,
}

pub fn inner(g: &TensorValue, u: &[f64], v: &[f64]) -> f64 {
    let n = g.dims();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += g.get(&[i, j]) * u[i] * v[j];
        }
    }
    acc
}

/// Modified Gram-Schmidt with an indefinite inner product. At each step the
/// remaining seed vector with the largest |g(v,v)| after projection is taken,
/// normalized by sqrt(|g(v,v)|), and its sign recorded. Points where every
/// remaining candidate is near-null are rejected so callers can resample.
pub fn build_frame(g: &TensorValue, seeds: &[Vec<f64>]) -> Result<Frame, TensorError> {
    const NULL_TOL: f64 = 1e-10;
    let n = g.dims();
    assert_eq!(seeds.len(), n, "need dim seed vectors");
    let mut remaining: Vec<Vec<f64>> = seeds.to_vec();
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut signs: Vec<f64> = Vec::with_capacity(n);
    while vectors.len() < n {
        // project out the accepted frame vectors from every candidate
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for (ci, cand) in remaining.iter().enumerate() {
            let mut v = cand.clone();
            for (e, &s) in vectors.iter().zip(&signs) {
                let c = s * inner(g, &v, e);
                for k in 0..n {
                    v[k] -= c * e[k];
                }
            }
            let norm2 = inner(g, &v, &v);
            if best.as_ref().map_or(true, |(_, _, b)| norm2.abs() > b.abs()) {
                best = Some((ci, v, norm2));
            }
        }
        let (ci, v, norm2) = best.expect("candidates remain");
        if norm2.abs() < NULL_TOL {
            return Err(TensorError::FrameDegenerate(NULL_TOL));
        }
        let scale = norm2.abs().sqrt();
        vectors.push(v.iter().map(|x| x / scale).collect());
        signs.push(norm2.signum());
        remaining.remove(ci);
    }
    Ok(Frame { vectors, signs })
}

/// Default seeds: the coordinate basis.
pub fn coordinate_seeds(dims: usize) -> Vec<Vec<f64>> {
    (0..dims)
        .map(|k| (0..dims).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Max deviation of g(E_i, E_j) from sign_i * delta_ij.
pub fn frame_residual(g: &TensorValue, frame: &Frame) -> f64 {
    let n = g.dims();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { frame.signs[i] } else { 0.0 };
            worst = worst.max((inner(g, &frame.vectors[i], &frame.vectors[j]) - expect).abs());
        }
    }
    worst
}
