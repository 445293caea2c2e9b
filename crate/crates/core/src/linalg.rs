//! Dense and tridiagonal symmetric eigensolvers plus small numerical helpers.

use std::sync::Once;

use faer::{Mat, Side};

use crate::error::{Error, Result};

static SEQUENTIAL: Once = Once::new();

// Results must not depend on the worker count, so faer kernels run sequentially.
fn sequential_kernels() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: Mat<f64>,
}

pub fn max_asymmetry(m: &Mat<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..m.ncols() {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn max_abs(m: &Mat<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max(m[(i, j)].abs());
        }
    }
    worst
}

pub fn symmetric_eigen(m: &Mat<f64>) -> Result<SymmetricEigen> {
    sequential_kernels();
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::consistency(format!("eigensolver failed: {e:?}")))?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let values = order.iter().map(|&i| s[i]).collect();
    let vectors = Mat::from_fn(m.nrows(), m.ncols(), |i, j| u[(i, order[j])]);
    Ok(SymmetricEigen { values, vectors })
}

pub fn symmetric_eigenvalues(m: &Mat<f64>) -> Result<Vec<f64>> {
    sequential_kernels();
    let mut values = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::consistency(format!("eigensolver failed: {e:?}")))?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x` (Sturm count).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let prev = if q.abs() < tiny { tiny.copysign(q) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solves `(T - shift) x = rhs` by LU with partial pivoting on the band.
fn tridiagonal_solve(diag: &[f64], off: &[f64], shift: f64, rhs: &mut [f64]) {
    let n = diag.len();
    // Row i of U holds u0[i] on the diagonal, u1[i], u2[i] on the next two columns.
    let mut u0: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let mut u1: Vec<f64> = off.to_vec();
    u1.push(0.0);
    let mut u2 = vec![0.0; n];
    let mut sub: Vec<f64> = off.to_vec();
    let mut swapped = vec![false; n];
    let mut mult = vec![0.0; n];
    let eps = f64::EPSILON * diag.iter().chain(off).fold(1.0_f64, |a, &b| a.max(b.abs()));

    for i in 0..n.saturating_sub(1) {
        if sub[i].abs() > u0[i].abs() {
            swapped[i] = true;
            // Swap rows i and i+1.
            let (a0, a1, a2) = (u0[i], u1[i], u2[i]);
            u0[i] = sub[i];
            u1[i] = u0[i + 1];
            u2[i] = if i + 1 < n - 1 { u1[i + 1] } else { 0.0 };
            let m = a0 / u0[i];
            mult[i] = m;
            u0[i + 1] = a1 - m * u1[i];
            if i + 1 < n - 1 {
                u1[i + 1] = a2 - m * u2[i];
            }
            sub[i] = 0.0;
        } else {
            if u0[i].abs() < eps {
                u0[i] = eps;
            }
            let m = sub[i] / u0[i];
            mult[i] = m;
            u0[i + 1] -= m * u1[i];
            if i + 1 < n - 1 {
                u1[i + 1] -= m * u2[i];
            }
        }
    }
    if u0[n - 1].abs() < eps {
        u0[n - 1] = eps;
    }
    for i in 0..n.saturating_sub(1) {
        if swapped[i] {
            rhs.swap(i, i + 1);
        }
        rhs[i + 1] -= mult[i] * rhs[i];
    }
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        if i + 1 < n {
            acc -= u1[i] * rhs[i + 1];
        }
        if i + 2 < n {
            acc -= u2[i] * rhs[i + 2];
        }
        rhs[i] = acc / u0[i];
    }
}

/// Lowest `count` eigenpairs of a symmetric tridiagonal matrix.
///
/// Eigenvalues by bisection on the Sturm sequence, eigenvectors by inverse
/// iteration. Vectors have unit Euclidean norm. Intended for non-degenerate
/// spectra such as 1D Schrödinger operators.
pub fn tridiagonal_lowest(
    diag: &[f64],
    off: &[f64],
    count: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = diag.len();
    if off.len() + 1 != n || count > n || n == 0 {
        return Err(Error::domain("inconsistent tridiagonal dimensions"));
    }
    let radius = |i: usize| {
        let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let r = if i + 1 < n { off[i].abs() } else { 0.0 };
        l + r
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, d) in diag.iter().enumerate() {
        lo = lo.min(d - radius(i));
        hi = hi.max(d + radius(i));
    }
    let scale = lo.abs().max(hi.abs()).max(1.0);

    let mut values = Vec::with_capacity(count);
    for k in 0..count {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if sturm_count(diag, off, mid) > k {
                b = mid;
            } else {
                a = mid;
            }
            if b - a <= 4.0 * f64::EPSILON * scale {
                break;
            }
        }
        values.push(0.5 * (a + b));
    }

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    for (k, &lambda) in values.iter().enumerate() {
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.01 * ((i * 7 + k * 13) % 17) as f64)
            .collect();
        for _ in 0..4 {
            tridiagonal_solve(diag, off, lambda, &mut v);
            // Deflate previously found vectors; cheap since count is small.
            for prev in &vectors {
                let d = dot(prev, &v);
                for (x, p) in v.iter_mut().zip(prev.iter()) {
                    *x -= d * p;
                }
            }
            let norm = dot(&v, &v).sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return Err(Error::consistency("inverse iteration broke down"));
            }
            v.iter_mut().for_each(|x| *x /= norm);
        }
        vectors.push(v);
    }
    Ok((values, vectors))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Determinant of a row-major `n × n` matrix, overwritten in the process.
pub fn determinant_in_place(a: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[pivot * n + col].abs() {
                pivot = row;
            }
        }
        let p = a[pivot * n + col];
        if p == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            det = -det;
        }
        det *= p;
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            if f != 0.0 {
                for j in col + 1..n {
                    a[row * n + j] -= f * a[col * n + j];
                }
            }
        }
    }
    det
}

/// Neumaier-compensated running sum, order-deterministic.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_dense() {
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + (i as f64 * 0.37).sin()).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| -1.0 + 0.1 * (i as f64).cos()).collect();
        let dense = Mat::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        });
        let full = symmetric_eigen(&dense).unwrap();
        let (vals, vecs) = tridiagonal_lowest(&diag, &off, 6).unwrap();
        for k in 0..6 {
            assert!((vals[k] - full.values[k]).abs() < 1e-12, "k={k}");
            let overlap: f64 = (0..n).map(|i| vecs[k][i] * full.vectors[(i, k)]).sum();
            assert!(
                (overlap.abs() - 1.0).abs() < 1e-10,
                "k={k} overlap {overlap}"
            );
        }
    }

    #[test]
    fn determinant_small() {
        let mut a = [2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0];
        assert!((determinant_in_place(&mut a, 3) - 18.0).abs() < 1e-12);
        let mut swap = [0.0, 1.0, 1.0, 0.0];
        assert_eq!(determinant_in_place(&mut swap, 2), -1.0);
        let mut singular = [1.0, 2.0, 2.0, 4.0];
        assert_eq!(determinant_in_place(&mut singular, 2), 0.0);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: CompensatedSum = [1e16, 1.0, -1e16, 1.0].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }
}
