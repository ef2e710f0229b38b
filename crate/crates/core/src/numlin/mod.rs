//! Self-contained dense numerical kernel: symmetric eigendecomposition by
//! cyclic Jacobi rotations, Haar-random unitaries in their real form, and
//! complex determinants by partial-pivot elimination.
//!
//! Everything here is sized for desk-scale matrices (a few hundred rows at
//! most); no attempt is made at blocking or sparsity.

pub mod rng;

pub use rng::SplitMix64;

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0);
        RealMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c);
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &RealMatrix) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut s = 0.0;
            for j in 0..self.cols {
                s += self[(i, j)] * v[j];
            }
            out[i] = s;
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &RealMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v += w;
        }
        out
    }

    pub fn sub(&self, other: &RealMatrix) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius inner product tr(A^t B).
    pub fn dot(&self, other: &RealMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn symmetry_residual(&self) -> f64 {
        let mut r = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                r = r.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        r
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

impl std::ops::Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &ComplexMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v += w;
        }
        out
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v -= w;
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    /// Kronecker product self (x) other.
    pub fn kron(&self, other: &ComplexMatrix) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Sweep cap for the cyclic Jacobi iteration; exceeded only on pathological
/// (non-finite) input.
const JACOBI_MAX_SWEEPS: usize = 100;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted descending and the matching orthonormal
/// eigenvector columns.
pub fn sym_eigen(s: &RealMatrix, tol: f64) -> Result<(Vec<f64>, RealMatrix)> {
    assert_eq!(s.rows, s.cols, "sym_eigen needs a square matrix");
    let n = s.rows;
    let residual = s.symmetry_residual();
    if residual > tol {
        return Err(Error::NonSymmetric { residual, tol });
    }

    let mut a = s.clone();
    // enforce exact symmetry so rotations stay consistent
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut v = RealMatrix::identity(n);
    let scale = a.max_abs().max(1.0);
    let stop = 1e-15 * scale;

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].abs());
            }
        }
        if off <= stop {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= stop * 1e-2 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = RealMatrix::zeros(n, n);
    for (newj, &oldj) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, newj)] = v[(i, oldj)];
        }
    }
    Ok((values, vectors))
}

/// Real 2n x 2n form of a Haar-distributed element of U(n) in the interleaved
/// basis (x1, y1, ..., xn, yn); satisfies g^t g = I and gJ = Jg.
///
/// Built by QR (modified Gram-Schmidt) of a complex Gaussian matrix, with the
/// R diagonal phases divided out so the distribution is exactly Haar.
pub fn haar_symplectic_orthogonal(n: usize, seed: u64) -> RealMatrix {
    assert!(n >= 1);
    let mut rng = SplitMix64::new(seed);
    loop {
        if let Some(u) = try_haar_unitary(n, &mut rng) {
            return complex_to_real_form(&u);
        }
        // degenerate Gaussian draw (probability ~0): resample
    }
}

fn try_haar_unitary(n: usize, rng: &mut SplitMix64) -> Option<ComplexMatrix> {
    let mut g = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = Complex64::new(rng.normal(), rng.normal());
        }
    }
    // modified Gram-Schmidt on columns, with phase correction: after
    // normalizing column j, divide by the phase of its pivot so the map
    // matches QR with positive-real R diagonal (Mezzadri's recipe).
    let mut q = g.clone();
    for j in 0..n {
        for k in 0..j {
            let mut proj = Complex64::new(0.0, 0.0);
            for i in 0..n {
                proj += q[(i, k)].conj() * q[(i, j)];
            }
            for i in 0..n {
                let qk = q[(i, k)];
                q[(i, j)] -= proj * qk;
            }
        }
        let norm: f64 = (0..n).map(|i| q[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-150 {
            return None;
        }
        // pivot phase = phase of <g_j, q_j before normalization>; using the
        // diagonal of R, i.e. the component of the original column along q_j
        for i in 0..n {
            q[(i, j)] /= norm;
        }
        let mut r_jj = Complex64::new(0.0, 0.0);
        for i in 0..n {
            r_jj += q[(i, j)].conj() * g[(i, j)];
        }
        let phase = r_jj / r_jj.norm();
        for i in 0..n {
            q[(i, j)] /= phase;
        }
    }
    Some(q)
}

/// Interleaved real form: the complex entry u = a + bi becomes the 2x2 block
/// [[a, -b], [b, a]] acting on the (x_k, y_k) pair.
fn complex_to_real_form(u: &ComplexMatrix) -> RealMatrix {
    let n = u.rows;
    let mut g = RealMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        for l in 0..n {
            let z = u[(k, l)];
            g[(2 * k, 2 * l)] = z.re;
            g[(2 * k, 2 * l + 1)] = -z.im;
            g[(2 * k + 1, 2 * l)] = z.im;
            g[(2 * k + 1, 2 * l + 1)] = z.re;
        }
    }
    g
}

/// Determinant by partial-pivot Gaussian elimination. Returns 0 for
/// (numerically) singular inputs.
pub fn complex_det(m: &ComplexMatrix) -> Complex64 {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut a = m.clone();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[(col, col)].norm();
        for r in (col + 1)..n {
            let v = a[(r, col)].norm();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot, j)];
                a[(pivot, j)] = tmp;
            }
            det = -det;
        }
        let p = a[(col, col)];
        det *= p;
        for r in (col + 1)..n {
            let f = a[(r, col)] / p;
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for j in col..n {
                let acj = a[(col, j)];
                a[(r, j)] -= f * acj;
            }
        }
    }
    det
}

/// The complex structure J in the interleaved basis: J e_{x_k} = e_{y_k},
/// J e_{y_k} = -e_{x_k}.
pub fn j_matrix(n: usize) -> RealMatrix {
    let mut j = RealMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

/// Apply J to a vector without materializing the matrix.
pub fn j_apply(v: &[f64]) -> Vec<f64> {
    assert!(v.len() % 2 == 0);
    let mut out = vec![0.0; v.len()];
    for k in 0..v.len() / 2 {
        out[2 * k] = -v[2 * k + 1];
        out[2 * k + 1] = v[2 * k];
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_eigen_diagonal_is_trivial() {
        let s = RealMatrix::diag(&[3.0, 1.0]);
        let (vals, vecs) = sym_eigen(&s, 1e-12).unwrap();
        assert_eq!(vals, vec![3.0, 1.0]);
        assert!((vecs[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!((vecs[(1, 1)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sym_eigen_offdiagonal_2x2() {
        // closed-form oracle: [[0,1],[1,0]] has eigenpairs (1, (1,1)/sqrt2)
        // and (-1, (1,-1)/sqrt2)
        let s = RealMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let (vals, vecs) = sym_eigen(&s, 1e-12).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] + 1.0).abs() < 1e-12);
        let c = 1.0 / 2.0f64.sqrt();
        let v0 = vecs.column(0);
        assert!((v0[0].abs() - c).abs() < 1e-12 && (v0[1].abs() - c).abs() < 1e-12);
        assert!((v0[0] - v0[1]).abs() < 1e-12); // same sign for eigenvalue +1
    }

    #[test]
    fn sym_eigen_sorts_descending() {
        let s = RealMatrix::diag(&[1.0, 2.0, 3.0, 4.0]);
        let (vals, _) = sym_eigen(&s, 1e-12).unwrap();
        assert_eq!(vals, vec![4.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn sym_eigen_rejects_nonsymmetric() {
        let s = RealMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!(matches!(
            sym_eigen(&s, 1e-12),
            Err(Error::NonSymmetric { .. })
        ));
    }

    #[test]
    fn sym_eigen_reconstruction_random() {
        let mut rng = SplitMix64::new(11);
        for trial in 0..1000 {
            let n = 2 + (trial % 11);
            let mut s = RealMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = rng.normal();
                    s[(i, j)] = v;
                    s[(j, i)] = v;
                }
            }
            let (vals, vecs) = sym_eigen(&s, 1e-10).unwrap();
            let recon = vecs
                .matmul(&RealMatrix::diag(&vals))
                .matmul(&vecs.transpose());
            let err = recon.sub(&s).max_abs();
            let norm = s.max_abs();
            assert!(err <= 1e-9 * (1.0 + norm), "trial {trial}: err {err:e}");
            // orthonormal columns
            let vtv = vecs.transpose().matmul(&vecs);
            assert!(vtv.sub(&RealMatrix::identity(n)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn haar_n1_is_rotation() {
        let g = haar_symplectic_orthogonal(1, 3);
        // [[c,-s],[s,c]]
        assert!((g[(0, 0)] - g[(1, 1)]).abs() < 1e-12);
        assert!((g[(0, 1)] + g[(1, 0)]).abs() < 1e-12);
        assert!((g[(0, 0)].powi(2) + g[(1, 0)].powi(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_orthogonal_and_j_commuting() {
        for n in 1..=4usize {
            for seed in 0..250u64 {
                let g = haar_symplectic_orthogonal(n, seed * 7 + n as u64);
                let gtg = g.transpose().matmul(&g);
                assert!(gtg.sub(&RealMatrix::identity(2 * n)).max_abs() < 1e-12);
                let j = j_matrix(n);
                let comm = g.matmul(&j).sub(&j.matmul(&g));
                assert!(comm.max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn haar_seed_determinism_and_distinctness() {
        let a = haar_symplectic_orthogonal(3, 1);
        let a2 = haar_symplectic_orthogonal(3, 1);
        let b = haar_symplectic_orthogonal(3, 2);
        assert_eq!(a, a2);
        assert!(a.sub(&b).max_abs() > 1e-3);
    }

    #[test]
    fn complex_det_identity_and_diag() {
        assert_eq!(
            complex_det(&ComplexMatrix::identity(4)),
            Complex64::new(1.0, 0.0)
        );
        let mut d = ComplexMatrix::zeros(2, 2);
        d[(0, 0)] = Complex64::new(0.0, 1.0);
        d[(1, 1)] = Complex64::new(0.0, 1.0);
        let det = complex_det(&d);
        assert!((det - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    /// cofactor-expansion oracle, exponential but fine for 4x4
    fn det_cofactor(m: &ComplexMatrix) -> Complex64 {
        let n = m.rows;
        if n == 1 {
            return m[(0, 0)];
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let mut minor = ComplexMatrix::zeros(n - 1, n - 1);
            for i in 1..n {
                let mut cj = 0;
                for k in 0..n {
                    if k == j {
                        continue;
                    }
                    minor[(i - 1, cj)] = m[(i, k)];
                    cj += 1;
                }
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * m[(0, j)] * det_cofactor(&minor);
        }
        acc
    }

    #[test]
    fn complex_det_matches_cofactor_oracle() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..50 {
            let mut m = ComplexMatrix::zeros(4, 4);
            for i in 0..4 {
                for j in 0..4 {
                    m[(i, j)] = Complex64::new(rng.normal(), rng.normal());
                }
            }
            let a = complex_det(&m);
            let b = det_cofactor(&m);
            assert!((a - b).norm() <= 1e-9 * b.norm().max(1.0));
        }
    }

    #[test]
    fn complex_det_multiplicative() {
        let mut rng = SplitMix64::new(17);
        for _ in 0..100 {
            let mut a = ComplexMatrix::zeros(8, 8);
            let mut b = ComplexMatrix::zeros(8, 8);
            for i in 0..8 {
                for j in 0..8 {
                    a[(i, j)] = Complex64::new(rng.normal(), rng.normal());
                    b[(i, j)] = Complex64::new(rng.normal(), rng.normal());
                }
            }
            let lhs = complex_det(&a.matmul(&b));
            let rhs = complex_det(&a) * complex_det(&b);
            assert!((lhs - rhs).norm() <= 1e-8 * rhs.norm());
        }
    }

    #[test]
    fn complex_det_singular_is_zero() {
        let mut m = ComplexMatrix::zeros(3, 3);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m[(0, 1)] = Complex64::new(2.0, 0.0);
        m[(1, 0)] = Complex64::new(2.0, 0.0);
        m[(1, 1)] = Complex64::new(4.0, 0.0);
        assert_eq!(complex_det(&m), Complex64::new(0.0, 0.0));
    }
}
