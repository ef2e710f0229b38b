//! Two intrinsic constructions of the product operator, used as independent
//! cross-checks: the determinant of the induced derivation on Lambda^n R^{2n}
//! restricted to the eigen-wedge subspace, and the determinant of the
//! quantized skew part acting on the 2^n-dimensional spinor space.
//!
//! Sign conventions (fixed once):
//!   - exterior basis: lexicographic n-subsets of {0..2n-1}, shuffle signs;
//!   - Clifford relation e.e = -|e|^2, so gamma_a^2 = -Id and
//!     (i gamma_{2k} gamma_{2k+1})^2 = +Id.

use crate::error::{Error, Result};
use crate::lagalg::SymForm;
use crate::numlin::{complex_det, ComplexMatrix, RealMatrix};
use num_complex::Complex64;

/// Cap on n for anything building the C(2n, n)-dimensional exterior space.
pub const EXTERIOR_DIM_CAP: usize = 4;
/// Cap on n for the 2^n-dimensional spinor space.
pub const SPINOR_DIM_CAP: usize = 7;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Lexicographic basis of Lambda^k R^d: all sorted k-subsets of {0..d-1}.
#[derive(Debug, Clone)]
pub struct ExteriorBasis {
    pub n: usize,
    pub k: usize,
    pub index_sets: Vec<Vec<usize>>,
}

impl ExteriorBasis {
    /// Basis of Lambda^k of R^{2n}.
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n > EXTERIOR_DIM_CAP {
            return Err(Error::DimensionTooLarge {
                what: "exterior basis",
                needed: n,
                cap: EXTERIOR_DIM_CAP,
            });
        }
        let d = 2 * n;
        let mut index_sets = Vec::with_capacity(binomial(d, k));
        let mut cur: Vec<usize> = (0..k).collect();
        loop {
            index_sets.push(cur.clone());
            // next lexicographic k-subset
            let mut i = k;
            loop {
                if i == 0 {
                    return Ok(ExteriorBasis { n, k, index_sets });
                }
                i -= 1;
                if cur[i] < d - (k - i) {
                    cur[i] += 1;
                    for j in (i + 1)..k {
                        cur[j] = cur[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Basis of Lambda^n of R^{2n} (the middle degree used everywhere).
    pub fn middle(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn len(&self) -> usize {
        self.index_sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_sets.is_empty()
    }

    pub fn position(&self, set: &[usize]) -> Option<usize> {
        self.index_sets.binary_search_by(|s| s.as_slice().cmp(set)).ok()
    }
}

/// Matrix of the derivation extension D_H on Lambda^n R^{2n}:
/// D_H(e_S) = sum_{j in S} e_{s_1} ^ ... ^ (H e_j) ^ ... ^ e_{s_n}.
pub fn derivation_matrix(h: &SymForm, basis: &ExteriorBasis) -> RealMatrix {
    assert_eq!(h.n(), basis.n);
    let d = 2 * h.n();
    let m = basis.len();
    let hm = h.matrix();
    let mut out = RealMatrix::zeros(m, m);
    for (col, set) in basis.index_sets.iter().enumerate() {
        for (p, &j) in set.iter().enumerate() {
            for i in 0..d {
                let coeff = hm[(i, j)];
                if coeff == 0.0 {
                    continue;
                }
                if i == j {
                    out[(col, col)] += coeff;
                    continue;
                }
                if set.binary_search(&i).is_ok() {
                    continue; // repeated factor kills the wedge
                }
                let mut target: Vec<usize> = set.iter().copied().filter(|&s| s != j).collect();
                let q = target.partition_point(|&s| s < i);
                target.insert(q, i);
                // moving the replaced factor from slot p to slot q costs
                // |p - q| transpositions
                let sign = if (p as isize - q as isize).rem_euclid(2) == 0 {
                    1.0
                } else {
                    -1.0
                };
                let row = basis.position(&target).expect("closed under substitution");
                out[(row, col)] += sign * coeff;
            }
        }
    }
    out
}

/// Coordinates of v_1 ^ ... ^ v_n in the lexicographic basis: the n x n
/// minors of the 2n x n column matrix.
pub fn wedge_coordinates(cols: &[Vec<f64>], basis: &ExteriorBasis) -> Vec<f64> {
    let n = cols.len();
    assert_eq!(basis.k, n);
    basis
        .index_sets
        .iter()
        .map(|set| {
            let mut minor = RealMatrix::zeros(n, n);
            for (r, &i) in set.iter().enumerate() {
                for c in 0..n {
                    minor[(r, c)] = cols[c][i];
                }
            }
            real_det(&minor)
        })
        .collect()
}

fn real_det(m: &RealMatrix) -> f64 {
    let n = m.rows;
    let mut a = m.clone();
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[(col, col)].abs();
        for r in (col + 1)..n {
            if a[(r, col)].abs() > best {
                best = a[(r, col)].abs();
                pivot = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..n {
                let t = a[(col, j)];
                a[(col, j)] = a[(pivot, j)];
                a[(pivot, j)] = t;
            }
            det = -det;
        }
        let p = a[(col, col)];
        det *= p;
        for r in (col + 1)..n {
            let f = a[(r, col)] / p;
            for j in col..n {
                let acj = a[(col, j)];
                a[(r, j)] -= f * acj;
            }
        }
    }
    det
}

/// Product of the derivation eigenvalues over the 2^n eigen-wedges
/// (e_1 or Je_1) ^ ... ^ (e_n or Je_n) built from the paired eigenframe of
/// A's Lagrangian part; equals M_Lag(A).
pub fn axis_restricted_det(a: &SymForm) -> Result<f64> {
    let n = a.n();
    let basis = ExteriorBasis::middle(n)?;
    let h = a.lag_part();
    let dmat = derivation_matrix(&h, &basis);
    let spec = a.lag_spectrum()?;
    let scale = 1.0 + a.norm();

    let mut product = 1.0;
    for mask in 0..(1usize << n) {
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                if mask & (1 << j) == 0 {
                    spec.frame.column(2 * j)
                } else {
                    spec.frame.column(2 * j + 1)
                }
            })
            .collect();
        let xi = wedge_coordinates(&cols, &basis);
        let dxi = dmat.matvec(&xi);
        let norm_sq: f64 = xi.iter().map(|v| v * v).sum();
        let nu = xi.iter().zip(&dxi).map(|(x, y)| x * y).sum::<f64>() / norm_sq;
        let residual: f64 = dxi
            .iter()
            .zip(&xi)
            .map(|(d, x)| (d - nu * x).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual > 1e-6 * scale {
            return Err(Error::FramePairingFailed { residual });
        }
        product *= nu;
    }
    Ok(product)
}

/// Report of the primitive-subspace structure of the derivation.
#[derive(Debug, Clone)]
pub struct PrimitiveReport {
    /// dim ker(omega ^ .) on Lambda^n.
    pub primitive_dim: usize,
    /// ||(I - Pi) D Pi||: invariance of the primitive subspace.
    pub invariance_residual: f64,
    /// every Garding eigenvalue appears in the primitive spectrum.
    pub spectrum_contains_garding: bool,
    /// det(D|_prim) / M_Lag(A); the cofactor is reported, not characterized.
    pub primitive_det_ratio: f64,
}

/// Matrix of omega ^ . : Lambda^n -> Lambda^{n+2}, with
/// omega = sum_k e_{x_k} ^ e_{y_k}.
fn omega_wedge_matrix(n: usize, from: &ExteriorBasis, to: &ExteriorBasis) -> RealMatrix {
    let mut m = RealMatrix::zeros(to.len(), from.len());
    for (col, set) in from.index_sets.iter().enumerate() {
        for k in 0..n {
            let (a, b) = (2 * k, 2 * k + 1);
            if set.binary_search(&a).is_ok() || set.binary_search(&b).is_ok() {
                continue;
            }
            let mut target = set.clone();
            let qa = target.partition_point(|&s| s < a);
            target.insert(qa, a);
            let qb = target.partition_point(|&s| s < b);
            target.insert(qb, b);
            // e_a ^ e_b ^ e_S: both insertions cross the same count of
            // smaller S-elements, so the total sign is +1
            let row = to.position(&target).expect("valid superset");
            m[(row, col)] += 1.0;
        }
    }
    m
}

pub fn primitive_check(a: &SymForm) -> Result<PrimitiveReport> {
    let n = a.n();
    let basis_n = ExteriorBasis::middle(n)?;
    let basis_n2 = ExteriorBasis::new(n, n + 2)?;
    let l = omega_wedge_matrix(n, &basis_n, &basis_n2);
    let dim = basis_n.len();
    let expected_kernel = dim - binomial(2 * n, n.saturating_sub(2));

    // kernel of L via the spectrum of L^t L
    let ltl = l.transpose().matmul(&l);
    let (vals, vecs) = crate::numlin::sym_eigen(&ltl, 1e-9 * (1.0 + ltl.max_abs()))?;
    // eigenvalues descend; the kernel occupies the tail
    let kernel_cols: Vec<usize> = (dim - expected_kernel..dim).collect();
    for &c in &kernel_cols {
        assert!(vals[c].abs() < 1e-8, "kernel eigenvalue {:e}", vals[c]);
    }
    let mut q = RealMatrix::zeros(dim, expected_kernel);
    for (jq, &c) in kernel_cols.iter().enumerate() {
        for i in 0..dim {
            q[(i, jq)] = vecs[(i, c)];
        }
    }

    let dmat = derivation_matrix(&a.lag_part(), &basis_n);
    let dq = dmat.matmul(&q);
    // invariance: component of D q outside the kernel
    let qtdq = q.transpose().matmul(&dq);
    let inside = q.matmul(&qtdq);
    let invariance_residual = dq.sub(&inside).frobenius_norm();

    // restricted operator is symmetric since D and the projection are
    let restricted = qtdq;
    let (rvals, _) = crate::numlin::sym_eigen(&restricted, 1e-7 * (1.0 + restricted.max_abs()))?;
    let garding = a.garding_eigenvalues()?;
    let tol = 1e-7 * (1.0 + a.norm());
    let mut remaining = rvals.clone();
    let mut contains = true;
    for g in &garding.eigenvalues {
        match remaining
            .iter()
            .enumerate()
            .min_by(|(_, x), (_, y)| (*x - g).abs().partial_cmp(&(*y - g).abs()).unwrap())
        {
            Some((idx, v)) if (v - g).abs() <= tol => {
                remaining.remove(idx);
            }
            _ => {
                contains = false;
                break;
            }
        }
    }
    let det_prim: f64 = rvals.iter().product();
    let m_lag = garding.product();
    Ok(PrimitiveReport {
        primitive_dim: expected_kernel,
        invariance_residual,
        spectrum_contains_garding: contains,
        primitive_det_ratio: det_prim / m_lag,
    })
}

/// 2n anticommuting complex generators of size 2^n with gamma^2 = -Id,
/// by the standard recursive tensor doubling. Fixed construction, so the
/// output is bit-reproducible.
#[derive(Debug, Clone)]
pub struct CliffordRep {
    pub n: usize,
    pub gammas: Vec<ComplexMatrix>,
}

pub fn clifford_generators(n: usize) -> Result<CliffordRep> {
    if n > SPINOR_DIM_CAP {
        return Err(Error::DimensionTooLarge {
            what: "spinor representation",
            needed: n,
            cap: SPINOR_DIM_CAP,
        });
    }
    // 2x2 seeds: s1 = [[0,1],[-1,0]], s2 = [[0,i],[i,0]] and the grading
    // element sz = diag(1,-1); s1^2 = s2^2 = -Id, s1 s2 = -s2 s1, and both
    // anticommute with sz.
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut s1 = ComplexMatrix::zeros(2, 2);
    s1[(0, 1)] = one;
    s1[(1, 0)] = -one;
    let mut s2 = ComplexMatrix::zeros(2, 2);
    s2[(0, 1)] = i;
    s2[(1, 0)] = i;
    let mut sz = ComplexMatrix::zeros(2, 2);
    sz[(0, 0)] = one;
    sz[(1, 1)] = -one;

    let mut gammas = vec![s1.clone(), s2.clone()];
    for _ in 1..n {
        // doubling: old generators tensor sz, then Id tensor the seeds
        let dim = gammas[0].rows;
        let id = ComplexMatrix::identity(dim);
        let mut next: Vec<ComplexMatrix> = gammas.iter().map(|g| g.kron(&sz)).collect();
        next.push(id.kron(&s1));
        next.push(id.kron(&s2));
        gammas = next;
    }
    Ok(CliffordRep { n, gammas })
}

/// Quantize a real antisymmetric matrix (a 2-vector) into the Clifford
/// representation: sum_{a<b} <Phi e_a, e_b> gamma_a gamma_b.
fn quantize(phi: &RealMatrix, rep: &CliffordRep) -> ComplexMatrix {
    let d = phi.rows;
    let dim = rep.gammas[0].rows;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for a in 0..d {
        for b in (a + 1)..d {
            let coeff = phi[(b, a)];
            if coeff == 0.0 {
                continue;
            }
            let gab = rep.gammas[a].matmul(&rep.gammas[b]);
            out = out.add(&gab.scale(Complex64::new(coeff, 0.0)));
        }
    }
    out
}

/// Phi(A) = sqrt(B^2) J with B = A^skew, computed spectrally from the
/// paired eigenframe (|lambda| on each paired eigenvector).
pub fn phi_map(a: &SymForm) -> Result<RealMatrix> {
    let spec = a.lag_spectrum()?;
    let d = 2 * a.n();
    let mut e_mat = RealMatrix::zeros(d, d);
    for j in 0..a.n() {
        let l = spec.lambdas[j].abs();
        let e = spec.frame.column(2 * j);
        let je = spec.frame.column(2 * j + 1);
        for p in 0..d {
            for q in 0..d {
                e_mat[(p, q)] += l * (e[p] * e[q] + je[p] * je[q]);
            }
        }
    }
    Ok(e_mat.matmul(&crate::numlin::j_matrix(a.n())))
}

/// det(mu Id + i Phi(A)~) over the spinor space; the real part is M_Lag(A)
/// and the imaginary part vanishes.
pub fn spinor_det(a: &SymForm) -> Result<Complex64> {
    let n = a.n();
    let rep = clifford_generators(n)?;
    let phi = phi_map(a)?;
    let quantized = quantize(&phi, &rep);
    let mu = a.trace() / 2.0;
    let dim = quantized.rows;
    let mut m = quantized.scale(Complex64::new(0.0, 1.0));
    for i in 0..dim {
        m[(i, i)] += Complex64::new(mu, 0.0);
    }
    Ok(complex_det(&m))
}
