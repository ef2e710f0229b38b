//! Pluriharmonic quadratics (traceless hermitian forms), comparison-function
//! certificates against the dual cone, sound quadratic hull rejections, and
//! exact freeness of linear subspaces.

use crate::error::{Error, Result};
use crate::lagalg::SymForm;
use crate::numlin::{self, RealMatrix, SplitMix64};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// h(z) = c + sum_k (b_k z_k + conj(b_k z_k)) + (1/2) sum_{ij} a_ij z_i conj(z_j)
/// with a hermitian and traceless; exactly the quadratics whose real Hessians
/// fill the edge of the cone. The constant c is kept real: h is real-valued,
/// so an imaginary part of c could never contribute.
#[derive(Debug, Clone)]
pub struct HermQuadratic {
    pub n: usize,
    pub c: f64,
    pub b: Vec<Complex64>,
    /// hermitian n x n coefficient matrix, row-major.
    pub a: Vec<Vec<Complex64>>,
}

#[derive(Serialize, Deserialize)]
struct HermQuadraticJson {
    c: f64,
    b_re: Vec<f64>,
    b_im: Vec<f64>,
    #[serde(rename = "A_re")]
    a_re: Vec<Vec<f64>>,
    #[serde(rename = "A_im")]
    a_im: Vec<Vec<f64>>,
}

impl HermQuadratic {
    pub fn new(n: usize, c: f64, b: Vec<Complex64>, a: Vec<Vec<Complex64>>) -> Result<Self> {
        assert_eq!(b.len(), n);
        assert_eq!(a.len(), n);
        let mut herm_res: f64 = 0.0;
        let mut tr = Complex64::new(0.0, 0.0);
        for i in 0..n {
            assert_eq!(a[i].len(), n);
            tr += a[i][i];
            for j in 0..n {
                herm_res = herm_res.max((a[i][j] - a[j][i].conj()).norm());
            }
        }
        if herm_res > 1e-12 {
            return Err(Error::NonSymmetric {
                residual: herm_res,
                tol: 1e-12,
            });
        }
        if tr.norm() > 1e-12 {
            return Err(Error::NonSymmetric {
                residual: tr.norm(),
                tol: 1e-12,
            });
        }
        Ok(HermQuadratic { n, c, b, a })
    }

    pub fn quadratic_only(n: usize, a: Vec<Vec<Complex64>>) -> Result<Self> {
        Self::new(n, 0.0, vec![Complex64::new(0.0, 0.0); n], a)
    }

    pub fn to_json(&self) -> String {
        let j = HermQuadraticJson {
            c: self.c,
            b_re: self.b.iter().map(|v| v.re).collect(),
            b_im: self.b.iter().map(|v| v.im).collect(),
            a_re: self.a.iter().map(|r| r.iter().map(|v| v.re).collect()).collect(),
            a_im: self.a.iter().map(|r| r.iter().map(|v| v.im).collect()).collect(),
        };
        serde_json::to_string_pretty(&j).expect("plain data")
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let j: HermQuadraticJson = serde_json::from_str(src).map_err(|e| Error::SyntaxError {
            offset: 0,
            msg: e.to_string(),
        })?;
        let n = j.b_re.len();
        let b = (0..n).map(|k| Complex64::new(j.b_re[k], j.b_im[k])).collect();
        let a = (0..n)
            .map(|i| (0..n).map(|jj| Complex64::new(j.a_re[i][jj], j.a_im[i][jj])).collect())
            .collect();
        Self::new(n, j.c, b, a)
    }
}

/// Complex coordinates z_k = x_k + i y_k from an interleaved real point.
pub fn complex_point(z: &[f64]) -> Vec<Complex64> {
    z.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

pub fn eval_quadratic(h: &HermQuadratic, z: &[f64]) -> f64 {
    assert_eq!(z.len(), 2 * h.n);
    let zc = complex_point(z);
    let mut acc = Complex64::new(h.c, 0.0);
    for k in 0..h.n {
        let t = h.b[k] * zc[k];
        acc += t + t.conj();
    }
    for i in 0..h.n {
        for j in 0..h.n {
            acc += 0.5 * h.a[i][j] * zc[i] * zc[j].conj();
        }
    }
    acc.re
}

/// Real 2n x 2n Hessian of the quadratic part: with a_ij = p_ij + i q_ij,
/// the (x_i, x_j) and (y_i, y_j) entries are p_ij and the (x_i, y_j) entry
/// is q_ij. Always lands in the edge.
pub fn real_hessian(h: &HermQuadratic) -> SymForm {
    let n = h.n;
    let mut rows = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let p = h.a[i][j].re;
            let q = h.a[i][j].im;
            rows[2 * i][2 * j] = p;
            rows[2 * i + 1][2 * j + 1] = p;
            rows[2 * i][2 * j + 1] = q;
            rows[2 * i + 1][2 * j] = -q;
        }
    }
    SymForm::from_rows(n, &rows).expect("hermitian coefficients give a symmetric form")
}

/// Inverse of `real_hessian` on quadratic parts: extract the hermitian
/// coefficient matrix from an edge form. The reconstruction residual is the
/// distance of `s` from the edge (zero iff s is exactly an edge form).
pub fn edge_to_hermitian(s: &SymForm) -> (HermQuadratic, f64) {
    let n = s.n();
    let m = s.matrix();
    let mut a = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            // average the redundant entries so the map is a projection
            let p = 0.5 * (m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)]);
            let q = 0.5 * (m[(2 * i, 2 * j + 1)] - m[(2 * i + 1, 2 * j)]);
            a[i][j] = Complex64::new(p, q);
        }
    }
    // force exact tracelessness and hermitian symmetry before validating
    let tr: f64 = (0..n).map(|i| a[i][i].re).sum();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = Complex64::new(row[i].re - tr / n as f64, 0.0);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a[i][j] + a[j][i].conj());
            a[i][j] = avg;
            a[j][i] = avg.conj();
        }
    }
    let h = HermQuadratic::quadratic_only(n, a).expect("symmetrized above");
    let residual = real_hessian(&h).sub(s).norm();
    (h, residual)
}

/// Whether a symmetric form is the Hessian of a pluriharmonic quadratic.
pub fn is_pluriharmonic_hessian(s: &SymForm, tol: f64) -> bool {
    let (_, residual) = edge_to_hermitian(s);
    residual <= tol
}

/// Comparison function built from an interior dual-cone violation: if
/// -phi_hessian lies in the open cone, phi sits strictly below a
/// pluriharmonic quadratic touching its 1-jet at z0.
#[derive(Debug, Clone)]
pub struct ViolationCertificate {
    pub z0: Vec<f64>,
    /// Hessian of the comparison quadratic h (an edge form, = -B).
    pub h_hessian: SymForm,
    /// positive-definite gap form with h - phi = (1/2)<P (z-z0), z-z0>.
    pub p: SymForm,
    /// smallest eigenvalue of P.
    pub margin: f64,
}

impl ViolationCertificate {
    /// h(z) - phi(z), taking both with vanishing 1-jet at z0.
    pub fn gap(&self, phi_hessian: &SymForm, z: &[f64]) -> f64 {
        let d: Vec<f64> = z.iter().zip(&self.z0).map(|(a, b)| a - b).collect();
        let qh = 0.5 * numlin::dot(&self.h_hessian.matrix().matvec(&d), &d);
        let qp = 0.5 * numlin::dot(&phi_hessian.matrix().matvec(&d), &d);
        qh - qp
    }
}

pub fn dual_violation_certificate(
    phi_hessian: &SymForm,
    z0: &[f64],
) -> Result<ViolationCertificate> {
    assert_eq!(z0.len(), phi_hessian.dim());
    let neg = phi_hessian.scale(-1.0);
    let lambda1 = neg.garding_eigenvalues()?.eigenvalues[0];
    if lambda1 <= 0.0 {
        return Err(Error::NotAViolation { lambda1 });
    }
    let (b, p) = neg.int_decompose()?;
    let (pvals, _) = numlin::sym_eigen(&p.matrix(), 1e-10 * (1.0 + p.norm()))?;
    let margin = *pvals.last().expect("nonempty");
    Ok(ViolationCertificate {
        z0: z0.to_vec(),
        h_hessian: b.scale(-1.0),
        p,
        margin,
    })
}

/// A Lag-psh quadratic q(z) = <b, z-c> + (1/2)<Q(z-c), z-c> with Q in
/// edge + PSD, used as a hull-rejection witness.
#[derive(Debug, Clone)]
pub struct LagPshQuadratic {
    pub center: Vec<f64>,
    pub linear: Vec<f64>,
    pub quad: SymForm,
}

impl LagPshQuadratic {
    pub fn eval(&self, z: &[f64]) -> f64 {
        let d: Vec<f64> = z.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        numlin::dot(&self.linear, &d) + 0.5 * numlin::dot(&self.quad.matrix().matvec(&d), &d)
    }
}

#[derive(Debug, Clone)]
pub enum HullVerdict {
    /// a Lag-psh quadratic strictly separates x from K: x is not in the hull.
    RejectedWithWitness(Box<LagPshQuadratic>),
    /// no witness found among the sampled quadratics; membership is never
    /// certified by sampling.
    Undecided,
}

fn random_edge(n: usize, rng: &mut SplitMix64) -> SymForm {
    let mut a = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        a[i][i] = Complex64::new(rng.normal(), 0.0);
        for j in (i + 1)..n {
            let v = Complex64::new(rng.normal(), rng.normal());
            a[i][j] = v;
            a[j][i] = v.conj();
        }
    }
    let tr: f64 = (0..n).map(|i| a[i][i].re).sum();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] -= Complex64::new(tr / n as f64, 0.0);
    }
    real_hessian(&HermQuadratic::quadratic_only(n, a).expect("traceless hermitian"))
}

fn random_psd(n: usize, rng: &mut SplitMix64) -> SymForm {
    let d = 2 * n;
    let g = RealMatrix::from_rows(
        &(0..d)
            .map(|_| (0..d).map(|_| rng.normal()).collect::<Vec<f64>>())
            .collect::<Vec<_>>(),
    );
    let gtg = g.transpose().matmul(&g).scale(1.0 / d as f64);
    let rows: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| gtg[(i, j)]).collect()).collect();
    SymForm::from_rows(n, &rows).expect("G^t G is symmetric")
}

/// Sound quadratic hull rejection test: draws Lag-psh quadratics and looks
/// for one with q(x) > max_K q. A rejection is final (the witness is itself a
/// smooth Lag-psh function); Undecided says nothing.
pub fn sampled_hull_test(
    k_points: &[Vec<f64>],
    x: &[f64],
    samples: usize,
    seed: u64,
) -> HullVerdict {
    assert!(!k_points.is_empty());
    let dim = x.len();
    let n = dim / 2;
    let mut rng = SplitMix64::new(seed);
    for trial in 0..samples {
        let q = if trial % 2 == 0 {
            // pure linear draws handle everything outside the convex hull
            let mut b: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
            let nb = numlin::norm(&b);
            if nb < 1e-12 {
                continue;
            }
            b.iter_mut().for_each(|v| *v /= nb);
            LagPshQuadratic {
                center: vec![0.0; dim],
                linear: b,
                quad: SymForm::zero(n),
            }
        } else {
            let quad = random_edge(n, &mut rng)
                .add(&random_psd(n, &mut rng).scale(rng.uniform(0.0, 2.0)));
            let center: Vec<f64> = x.iter().map(|v| v + 0.5 * rng.normal()).collect();
            let linear: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
            let scale = 1.0 + quad.norm() + numlin::norm(&linear);
            LagPshQuadratic {
                center,
                linear: linear.iter().map(|v| v / scale).collect(),
                quad: quad.scale(1.0 / scale),
            }
        };
        let max_k = k_points
            .iter()
            .map(|p| q.eval(p))
            .fold(f64::NEG_INFINITY, f64::max);
        if q.eval(x) > max_k + 1e-9 {
            return HullVerdict::RejectedWithWitness(Box::new(q));
        }
    }
    HullVerdict::Undecided
}

/// Freeness of the span of `t_columns` in R^{2n}: lambda1 = Lambda_1 of the
/// projection onto the orthogonal complement. Zero exactly when the span
/// contains a Lagrangian n-plane.
pub fn freeness(t_columns: &[Vec<f64>], n: usize) -> Result<(f64, bool)> {
    let dim = 2 * n;
    // orthonormalize the spanning set
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for col in t_columns {
        assert_eq!(col.len(), dim);
        let mut v = col.clone();
        for b in &basis {
            let c = numlin::dot(&v, b);
            for i in 0..dim {
                v[i] -= c * b[i];
            }
        }
        let nv = numlin::norm(&v);
        if nv < 1e-10 * (1.0 + numlin::norm(col)) {
            return Err(Error::DegenerateBasis { pivot: nv });
        }
        v.iter_mut().for_each(|w| *w /= nv);
        basis.push(v);
    }
    let mut p_perp = RealMatrix::identity(dim);
    for b in &basis {
        for i in 0..dim {
            for j in 0..dim {
                p_perp[(i, j)] -= b[i] * b[j];
            }
        }
    }
    let rows: Vec<Vec<f64>> = (0..dim).map(|i| (0..dim).map(|j| p_perp[(i, j)]).collect()).collect();
    let s = SymForm::from_rows(n, &rows)?;
    let lambda1 = s.garding_eigenvalues()?.eigenvalues[0];
    Ok((lambda1, lambda1 > 1e-10))
}
