//! The operator algebra on Sym^2(R^{2n}): the trace/hermitian/skew
//! decomposition, the Lagrangian part, the paired spectrum (mu, lambda,
//! unitary frame), Garding eigenvalues and branches, the product operator
//! M_Lag, cone membership and the edge, the linearization, and the
//! interior decomposition edge + positive.
//!
//! Coordinates are always interleaved (x1, y1, ..., xn, yn) with J acting
//! blockwise as [[0, -1], [1, 0]] per pair, so J e_{x_k} = e_{y_k} and
//! z_k = x_k + i y_k.

use crate::error::{Error, Result};
use crate::numlin::{self, j_apply, j_matrix, sym_eigen, RealMatrix, SplitMix64};
use serde::{Deserialize, Serialize};

/// Hard cap on the complex dimension for anything enumerating 2^n signed
/// sums or branches.
pub const GARDING_DIM_CAP: usize = 14;

/// Relative clamp for near-zero skew eigenvalues: the sign of a +/- pair is
/// meaningless below this scale.
const LAMBDA_CLAMP_REL: f64 = 1e-12;

/// Real symmetric bilinear form on R^{2n} = C^n (the second derivative
/// A = D^2 u), stored dense in the interleaved basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymFormJson", into = "SymFormJson")]
pub struct SymForm {
    n: usize,
    entries: RealMatrix,
}

#[derive(Serialize, Deserialize)]
struct SymFormJson {
    n: usize,
    entries: Vec<Vec<f64>>,
}

impl From<SymForm> for SymFormJson {
    fn from(a: SymForm) -> Self {
        let d = 2 * a.n;
        SymFormJson {
            n: a.n,
            entries: (0..d)
                .map(|i| (0..d).map(|j| a.entries[(i, j)]).collect())
                .collect(),
        }
    }
}

impl TryFrom<SymFormJson> for SymForm {
    type Error = String;
    fn try_from(j: SymFormJson) -> std::result::Result<Self, String> {
        if j.n == 0 {
            return Err("n must be positive".into());
        }
        let d = 2 * j.n;
        if j.entries.len() != d || j.entries.iter().any(|r| r.len() != d) {
            return Err(format!("entries must be a {d}x{d} matrix"));
        }
        if j.entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err("entries must be finite".into());
        }
        let m = RealMatrix::from_rows(&j.entries);
        SymForm::new(j.n, m).map_err(|e| e.to_string())
    }
}

impl SymForm {
    /// Validates (and exactly symmetrizes) the matrix. The tolerance for the
    /// raw input is 1e-10 * (1 + max|A|).
    pub fn new(n: usize, m: RealMatrix) -> Result<Self> {
        assert!(n >= 1);
        assert_eq!(m.rows, 2 * n);
        assert_eq!(m.cols, 2 * n);
        let tol = 1e-10 * (1.0 + m.max_abs());
        let residual = m.symmetry_residual();
        if residual > tol {
            return Err(Error::NonSymmetric { residual, tol });
        }
        let mut sym = m.clone();
        for i in 0..2 * n {
            for j in (i + 1)..2 * n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                sym[(i, j)] = v;
                sym[(j, i)] = v;
            }
        }
        Ok(SymForm { n, entries: sym })
    }

    pub fn from_rows(n: usize, rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(n, RealMatrix::from_rows(rows))
    }

    pub fn diag(n: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), 2 * n);
        SymForm {
            n,
            entries: RealMatrix::diag(values),
        }
    }

    pub fn identity(n: usize) -> Self {
        SymForm {
            n,
            entries: RealMatrix::identity(2 * n),
        }
    }

    pub fn zero(n: usize) -> Self {
        SymForm {
            n,
            entries: RealMatrix::zeros(2 * n, 2 * n),
        }
    }

    /// Gaussian random symmetric form, entries ~ N(0,1).
    pub fn random(n: usize, rng: &mut SplitMix64) -> Self {
        let d = 2 * n;
        let mut m = RealMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = rng.normal();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymForm { n, entries: m }
    }

    /// Random form with lambda_1 >= margin > 0 (interior of the cone).
    pub fn random_interior(n: usize, margin: f64, rng: &mut SplitMix64) -> Self {
        let a = Self::random(n, rng);
        let l1 = a.lag_spectrum().unwrap().lambda1();
        let shift = margin - l1;
        a.add_scaled_identity(shift)
    }

    /// A + (t/n) I, which shifts every Garding eigenvalue by t.
    pub fn add_scaled_identity(&self, t: f64) -> Self {
        let d = 2 * self.n;
        let mut m = self.entries.clone();
        for i in 0..d {
            m[(i, i)] += t / self.n as f64;
        }
        SymForm {
            n: self.n,
            entries: m,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn norm(&self) -> f64 {
        self.entries.frobenius_norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        SymForm {
            n: self.n,
            entries: self.entries.scale(s),
        }
    }

    pub fn add(&self, other: &SymForm) -> Self {
        assert_eq!(self.n, other.n);
        SymForm {
            n: self.n,
            entries: self.entries.add(&other.entries),
        }
    }

    pub fn sub(&self, other: &SymForm) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Frobenius pairing <A, B> = tr(AB).
    pub fn pair(&self, other: &SymForm) -> f64 {
        self.entries.dot(&other.entries)
    }

    /// Conjugation J A J (not J^t A J).
    fn jaj(&self) -> RealMatrix {
        let j = j_matrix(self.n);
        j.matmul(&self.entries).matmul(&j)
    }

    /// Skew-hermitian part A^skew = (A + JAJ)/2; anticommutes with J.
    pub fn skew_part(&self) -> SymForm {
        SymForm {
            n: self.n,
            entries: self.entries.add(&self.jaj()).scale(0.5),
        }
    }

    /// Hermitian-symmetric part A^sym = (A - JAJ)/2; commutes with J.
    pub fn herm_part(&self) -> SymForm {
        SymForm {
            n: self.n,
            entries: self.entries.sub(&self.jaj()).scale(0.5),
        }
    }

    pub fn decompose(&self) -> Decomposition {
        let trace_part = self.trace() / (2.0 * self.n as f64);
        let herm = self.herm_part();
        let herm0 = herm.sub(&SymForm::identity(self.n).scale(trace_part));
        Decomposition {
            trace_part,
            herm0,
            skew: self.skew_part(),
        }
    }

    /// Lagrangian part (tr A / 2n) I + A^skew: the only part M_Lag sees.
    pub fn lag_part(&self) -> SymForm {
        let t = self.trace() / (2.0 * self.n as f64);
        self.skew_part()
            .add(&SymForm::identity(self.n).scale(t))
    }

    /// Paired spectrum of the Lagrangian Hessian data: mu = tr A / 2, the
    /// nonnegative skew eigenvalues lambda_1 >= ... >= lambda_n, and a
    /// unitary eigenframe whose columns come in (e_j, J e_j) pairs.
    pub fn lag_spectrum(&self) -> Result<LagSpectrum> {
        let n = self.n;
        let d = 2 * n;
        if n == 1 {
            // closed form: the skew part of [[a,b],[b,c]] is
            // ((a-c)/2) diag(1,-1) + b offdiag, eigenvalue sqrt(((a-c)/2)^2 + b^2)
            let (a, b, c) = (self.entries[(0, 0)], self.entries[(0, 1)], self.entries[(1, 1)]);
            let p = 0.5 * (a - c);
            let lambda = p.hypot(b);
            let mut frame = RealMatrix::identity(2);
            if lambda > LAMBDA_CLAMP_REL * self.norm().max(1.0) {
                // unit eigenvector (cos t, sin t) of [[p, b], [b, -p]] for +lambda
                let (e0, e1) = if p >= 0.0 {
                    (lambda + p, b)
                } else {
                    (b, lambda - p)
                };
                let nv = e0.hypot(e1);
                frame[(0, 0)] = e0 / nv;
                frame[(1, 0)] = e1 / nv;
                frame[(0, 1)] = -e1 / nv;
                frame[(1, 1)] = e0 / nv;
            }
            return Ok(LagSpectrum {
                n,
                mu: 0.5 * (a + c),
                lambdas: vec![lambda],
                frame,
            });
        }
        let skew = self.skew_part();
        let (vals, vecs) = sym_eigen(&skew.entries, 1e-9 * (1.0 + skew.entries.max_abs()))?;
        let clamp = LAMBDA_CLAMP_REL * self.norm().max(1.0);

        // columns with clamped-positive eigenvalues give the e_j of their
        // pairs directly; the (even-dimensional) near-zero eigenspace is
        // re-paired by Gram-Schmidt against its own J-images.
        let mut lambdas = Vec::with_capacity(n);
        let mut e_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        for j in 0..d {
            if vals[j] > clamp {
                if e_cols.len() == n {
                    // more positive than negative eigenvalues: numerically
                    // broken symmetry; treat the excess as zero-cluster
                    break;
                }
                lambdas.push(vals[j]);
                e_cols.push(vecs.column(j));
            }
        }
        let zero_basis: Vec<Vec<f64>> = (0..d)
            .filter(|&j| vals[j].abs() <= clamp)
            .map(|j| vecs.column(j))
            .collect();
        while e_cols.len() < n {
            // pick a unit vector from the residual zero space, orthogonal to
            // everything already chosen and to its J-image
            let chosen: Vec<&[f64]> = e_cols.iter().map(|c| c.as_slice()).collect();
            let mut picked: Option<Vec<f64>> = None;
            for cand in &zero_basis {
                let mut v = cand.clone();
                for c in &chosen {
                    let p = numlin::dot(&v, c);
                    for (vi, ci) in v.iter_mut().zip(c.iter()) {
                        *vi -= p * ci;
                    }
                    let jc = j_apply(c);
                    let p = numlin::dot(&v, &jc);
                    for (vi, ci) in v.iter_mut().zip(jc.iter()) {
                        *vi -= p * ci;
                    }
                }
                let nv = numlin::norm(&v);
                if nv > 1e-6 {
                    for vi in &mut v {
                        *vi /= nv;
                    }
                    picked = Some(v);
                    break;
                }
            }
            let v = picked.ok_or(Error::FramePairingFailed { residual: 1.0 })?;
            lambdas.push(0.0);
            e_cols.push(v);
        }

        let mut frame = RealMatrix::zeros(d, d);
        for (j, e) in e_cols.iter().enumerate() {
            let je = j_apply(e);
            for i in 0..d {
                frame[(i, 2 * j)] = e[i];
                frame[(i, 2 * j + 1)] = je[i];
            }
        }
        Ok(LagSpectrum {
            n,
            mu: self.trace() / 2.0,
            lambdas,
            frame,
        })
    }

    /// All 2^n Garding eigenvalues mu +/- lambda_1 +/- ... +/- lambda_n,
    /// ascending, with their sign vectors.
    pub fn garding_eigenvalues(&self) -> Result<GardingData> {
        self.garding_from_spectrum(&self.lag_spectrum()?)
    }

    fn garding_from_spectrum(&self, spec: &LagSpectrum) -> Result<GardingData> {
        let n = self.n;
        if n > GARDING_DIM_CAP {
            return Err(Error::DimensionTooLarge {
                what: "Garding eigenvalue enumeration",
                needed: n,
                cap: GARDING_DIM_CAP,
            });
        }
        Ok(GardingData::from_mu_lambda(spec.mu, &spec.lambdas))
    }

    /// The Lagrangian Monge-Ampere operator: the product of all 2^n Garding
    /// eigenvalues. For n = 1 this is det A.
    pub fn m_lag(&self) -> Result<f64> {
        Ok(self.garding_eigenvalues()?.product())
    }

    /// 2^n-th root of M_Lag; only defined on the cone (all branches >= 0).
    pub fn m_lag_root(&self) -> Result<Option<f64>> {
        let g = self.garding_eigenvalues()?;
        if g.eigenvalues[0] < 0.0 {
            return Ok(None);
        }
        let count = g.eigenvalues.len() as f64;
        Ok(Some(g.product().max(0.0).powf(1.0 / count)))
    }

    /// The k-th ascending Garding eigenvalue, k in 1..=2^n.
    pub fn branch_value(&self, k: usize) -> Result<f64> {
        let g = self.garding_eigenvalues()?;
        let max = g.eigenvalues.len();
        if k == 0 || k > max {
            return Err(Error::IndexOutOfRange { k, max });
        }
        Ok(g.eigenvalues[k - 1])
    }

    /// Tail product Lambda_k Lambda_{k+1} ... Lambda_{2^n} (the operator
    /// whose zero set is the k-th branch equation); exposed for pointwise
    /// evaluation only.
    pub fn branch_tail_product(&self, k: usize) -> Result<f64> {
        let g = self.garding_eigenvalues()?;
        let max = g.eigenvalues.len();
        if k == 0 || k > max {
            return Err(Error::IndexOutOfRange { k, max });
        }
        Ok(g.eigenvalues[k - 1..].iter().product())
    }

    /// The canonical operator Lambda_1 / n = (tr A / 2 - sum lambda_j) / n;
    /// satisfies g(A + tI) = g(A) + t.
    pub fn canonical_op(&self) -> Result<f64> {
        let spec = self.lag_spectrum()?;
        Ok(spec.lambda1() / self.n as f64)
    }

    /// Default membership tolerance 1e-9 * (1 + ||A||).
    pub fn default_tol(&self) -> f64 {
        1e-9 * (1.0 + self.norm())
    }

    pub fn cone_membership(&self, tol: f64) -> Result<ConeFlags> {
        let spec = self.lag_spectrum()?;
        let g = self.garding_from_spectrum(&spec)?;
        let l1 = g.eigenvalues[0];
        let ltop = *g.eigenvalues.last().unwrap();
        let dec = self.decompose();
        let skew_norm = dec.skew.norm();
        let herm0_norm = dec.herm0.norm();
        let (eigs, _) = sym_eigen(&self.entries, self.default_tol())?;
        let min_eig = *eigs.last().unwrap();
        Ok(ConeFlags {
            in_p_lag: l1 >= -tol,
            in_interior_p_lag: l1 > tol,
            in_dual: ltop >= -tol,
            in_edge: skew_norm <= tol && self.trace().abs() <= tol,
            in_p_plus: min_eig >= -tol && herm0_norm <= tol,
        })
    }

    /// Power traces tau_l = (1/2) tr((A^skew)^{2l}) = sum_j lambda_j^{2l},
    /// computed by matrix powers (independent of the eigenvalue route).
    pub fn power_traces(&self, l_max: usize) -> Vec<f64> {
        assert!(l_max >= 1);
        let skew = self.skew_part().entries;
        let sq = skew.matmul(&skew);
        let mut power = sq.clone();
        let mut out = Vec::with_capacity(l_max);
        for l in 1..=l_max {
            if l > 1 {
                power = power.matmul(&sq);
            }
            out.push(0.5 * power.trace());
        }
        out
    }

    /// Entrywise gradient of M_Lag by central finite differences, step
    /// 1e-5 * (1 + ||A||). The output pairs against symmetric P via
    /// <grad, P> = d/dt M_Lag(A + tP).
    pub fn m_lag_gradient(&self) -> Result<SymForm> {
        let d = 2 * self.n;
        let h = 1e-5 * (1.0 + self.norm());
        let mut grad = RealMatrix::zeros(d, d);
        for p in 0..d {
            for q in p..d {
                let mut plus = self.entries.clone();
                let mut minus = self.entries.clone();
                plus[(p, q)] += h;
                minus[(p, q)] -= h;
                if p != q {
                    plus[(q, p)] += h;
                    minus[(q, p)] -= h;
                }
                let mp = SymForm {
                    n: self.n,
                    entries: plus,
                }
                .m_lag()?;
                let mm = SymForm {
                    n: self.n,
                    entries: minus,
                }
                .m_lag()?;
                let slope = (mp - mm) / (2.0 * h);
                // symmetric perturbation hits both (p,q) and (q,p)
                let g = if p == q { slope } else { 0.5 * slope };
                grad[(p, q)] = g;
                grad[(q, p)] = g;
            }
        }
        Ok(SymForm {
            n: self.n,
            entries: grad,
        })
    }

    /// Constructive Int P+ = E + Int P decomposition: A = B + P with B in
    /// the edge and P positive definite, min eigenvalue delta = Lambda_1/n.
    pub fn int_decompose(&self) -> Result<(SymForm, SymForm)> {
        let spec = self.lag_spectrum()?;
        let lambda1 = spec.lambda1();
        if lambda1 <= 0.0 {
            return Err(Error::NotInterior { lambda1 });
        }
        let delta = lambda1 / self.n as f64;
        let d = 2 * self.n;
        let mut p = RealMatrix::zeros(d, d);
        for j in 0..self.n {
            let e = spec.frame.column(2 * j);
            let je = spec.frame.column(2 * j + 1);
            let ce = delta + 2.0 * spec.lambdas[j];
            for a in 0..d {
                for b in 0..d {
                    p[(a, b)] += ce * e[a] * e[b] + delta * je[a] * je[b];
                }
            }
        }
        let p = SymForm {
            n: self.n,
            entries: p,
        };
        let b = self.sub(&p);
        Ok((b, p))
    }
}

/// Orthogonal decomposition A = (trace_part) I + herm0 + skew.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub trace_part: f64,
    pub herm0: SymForm,
    pub skew: SymForm,
}

impl Decomposition {
    pub fn reconstruct(&self) -> SymForm {
        SymForm::identity(self.herm0.n)
            .scale(self.trace_part)
            .add(&self.herm0)
            .add(&self.skew)
    }
}

/// (mu, lambda_1 >= ... >= lambda_n >= 0, unitary eigenframe): the data
/// driving every formula. Frame columns are paired (e_j, J e_j); e_j has
/// skew eigenvalue +lambda_j and J e_j has -lambda_j.
#[derive(Debug, Clone)]
pub struct LagSpectrum {
    pub n: usize,
    pub mu: f64,
    pub lambdas: Vec<f64>,
    pub frame: RealMatrix,
}

impl LagSpectrum {
    /// Lambda_1 = mu - sum lambda_j, the smallest Garding eigenvalue.
    pub fn lambda1(&self) -> f64 {
        self.mu - self.lambdas.iter().sum::<f64>()
    }

    pub fn lambda_sum(&self) -> f64 {
        self.lambdas.iter().sum()
    }
}

/// The 2^n Garding eigenvalues with sign labels, ascending.
#[derive(Debug, Clone)]
pub struct GardingData {
    pub eigenvalues: Vec<f64>,
    pub sign_labels: Vec<Vec<i8>>,
}

impl GardingData {
    pub fn from_mu_lambda(mu: f64, lambdas: &[f64]) -> Self {
        let n = lambdas.len();
        let count = 1usize << n;
        let mut items: Vec<(f64, Vec<i8>)> = Vec::with_capacity(count);
        for mask in 0..count {
            let mut v = mu;
            let mut signs = Vec::with_capacity(n);
            for (j, &l) in lambdas.iter().enumerate() {
                let s: i8 = if mask & (1 << j) != 0 { -1 } else { 1 };
                signs.push(s);
                v += s as f64 * l;
            }
            items.push((v, signs));
        }
        items.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        GardingData {
            eigenvalues: items.iter().map(|x| x.0).collect(),
            sign_labels: items.into_iter().map(|x| x.1).collect(),
        }
    }

    pub fn product(&self) -> f64 {
        self.eigenvalues.iter().product()
    }
}

/// Cone membership flags at a given tolerance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConeFlags {
    /// Lambda_1 >= -tol: the Garding cone (Lag-psh constraint set).
    pub in_p_lag: bool,
    /// Lambda_1 > tol.
    pub in_interior_p_lag: bool,
    /// Lambda_{2^n} >= -tol: the dual subequation (top branch).
    pub in_dual: bool,
    /// traceless and J-commuting: Hessians of Lag-pluriharmonics.
    pub in_edge: bool,
    /// PSD with vanishing traceless-hermitian part: P cap ([I] + Herm^skew).
    pub in_p_plus: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(n: usize, v: &[f64]) -> SymForm {
        SymForm::diag(n, v)
    }

    const D1234: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

    #[test]
    fn decompose_diag_1234() {
        // hand computation with block J: trace part 2.5,
        // skew diag(-0.5, 0.5, -0.5, 0.5), herm0 diag(-1,-1,1,1)
        let a = diag(2, &D1234);
        let d = a.decompose();
        assert!((d.trace_part - 2.5).abs() < 1e-14);
        let skew_expect = diag(2, &[-0.5, 0.5, -0.5, 0.5]);
        let herm0_expect = diag(2, &[-1.0, -1.0, 1.0, 1.0]);
        assert!(d.skew.sub(&skew_expect).norm() < 1e-12);
        assert!(d.herm0.sub(&herm0_expect).norm() < 1e-12);
        assert!(d.reconstruct().sub(&a).norm() < 1e-12);
    }

    #[test]
    fn decompose_identity() {
        let a = SymForm::identity(2);
        let d = a.decompose();
        assert!((d.trace_part - 1.0).abs() < 1e-14);
        assert!(d.herm0.norm() < 1e-14);
        assert!(d.skew.norm() < 1e-14);
    }

    #[test]
    fn decompose_pure_skew() {
        // JAJ = A for diag(2,-2,0,0)
        let a = diag(2, &[2.0, -2.0, 0.0, 0.0]);
        let d = a.decompose();
        assert!(d.trace_part.abs() < 1e-14);
        assert!(d.herm0.norm() < 1e-13);
        assert!(d.skew.sub(&a).norm() < 1e-13);
    }

    #[test]
    fn decompose_parts_orthogonal_and_idempotent() {
        let mut rng = SplitMix64::new(21);
        for _ in 0..50 {
            let a = SymForm::random(3, &mut rng);
            let d = a.decompose();
            let tp = SymForm::identity(3).scale(d.trace_part);
            assert!(tp.pair(&d.herm0).abs() < 1e-9);
            assert!(tp.pair(&d.skew).abs() < 1e-9);
            assert!(d.herm0.pair(&d.skew).abs() < 1e-9);
            assert!((d.herm0.trace()).abs() < 1e-10);
            // herm0 commutes with J, skew anticommutes
            let j = j_matrix(3);
            let h = d.herm0.matrix();
            assert!(h.matmul(&j).sub(&j.matmul(h)).max_abs() < 1e-10);
            let s = d.skew.matrix();
            assert!(s.matmul(&j).add(&j.matmul(s)).max_abs() < 1e-10);
            // idempotence
            let d2 = d.reconstruct().decompose();
            assert!((d2.trace_part - d.trace_part).abs() < 1e-10);
            assert!(d2.herm0.sub(&d.herm0).norm() < 1e-9);
            assert!(d2.skew.sub(&d.skew).norm() < 1e-9);
        }
    }

    #[test]
    fn lag_part_examples() {
        let a = diag(2, &D1234);
        let expect = diag(2, &[2.0, 3.0, 2.0, 3.0]);
        assert!(a.lag_part().sub(&expect).norm() < 1e-12);
        // edge elements are killed
        let edge = diag(2, &[2.0, 2.0, -2.0, -2.0]);
        assert!(edge.lag_part().norm() < 1e-12);
        // equals A minus herm0
        let mut rng = SplitMix64::new(1);
        let b = SymForm::random(2, &mut rng);
        let d = b.decompose();
        assert!(b.lag_part().sub(&b.sub(&d.herm0)).norm() < 1e-10);
    }

    #[test]
    fn lag_part_of_rank_one_projection() {
        // P_e^Lag = (1/2n) I + (P_e - P_Je)/2  (extreme-ray formula)
        let mut rng = SplitMix64::new(33);
        for _ in 0..100 {
            let n = 3;
            let d = 2 * n;
            let mut e: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let nv = numlin::norm(&e);
            for v in &mut e {
                *v /= nv;
            }
            let je = j_apply(&e);
            let mut m = RealMatrix::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    m[(i, j)] = e[i] * e[j];
                }
            }
            let pe = SymForm::new(n, m).unwrap();
            let mut expect = RealMatrix::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    expect[(i, j)] = 0.5 * (e[i] * e[j] - je[i] * je[j]);
                }
                expect[(i, i)] += 1.0 / (2.0 * n as f64);
            }
            let expect = SymForm::new(n, expect).unwrap();
            assert!(pe.lag_part().sub(&expect).norm() < 1e-10);
        }
    }

    #[test]
    fn lag_spectrum_examples() {
        let s = SymForm::identity(2).lag_spectrum().unwrap();
        assert!((s.mu - 2.0).abs() < 1e-14);
        assert!(s.lambdas.iter().all(|&l| l.abs() < 1e-12));

        let s = diag(2, &[2.0, -2.0, 0.0, 0.0]).lag_spectrum().unwrap();
        assert!(s.mu.abs() < 1e-14);
        assert!((s.lambdas[0] - 2.0).abs() < 1e-12);
        assert!(s.lambdas[1].abs() < 1e-12);

        let s = diag(2, &D1234).lag_spectrum().unwrap();
        assert!((s.mu - 5.0).abs() < 1e-14);
        assert!((s.lambdas[0] - 0.5).abs() < 1e-12);
        assert!((s.lambdas[1] - 0.5).abs() < 1e-12);
    }

    fn check_spectrum_invariants(a: &SymForm) {
        let s = a.lag_spectrum().unwrap();
        let d = 2 * a.n();
        // descending nonnegative lambdas
        for w in s.lambdas.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
        assert!(s.lambdas.iter().all(|&l| l >= 0.0));
        // frame orthogonal
        let ftf = s.frame.transpose().matmul(&s.frame);
        assert!(ftf.sub(&RealMatrix::identity(d)).max_abs() < 1e-10);
        let skew = a.skew_part();
        let scale = 1.0 + a.norm();
        for j in 0..a.n() {
            let e = s.frame.column(2 * j);
            let je = s.frame.column(2 * j + 1);
            // column pairing
            let jd: Vec<f64> = j_apply(&e)
                .iter()
                .zip(&je)
                .map(|(x, y)| x - y)
                .collect();
            assert!(numlin::norm(&jd) < 1e-9);
            // eigenvector residuals
            let r1: Vec<f64> = skew
                .matrix()
                .matvec(&e)
                .iter()
                .zip(&e)
                .map(|(x, y)| x - s.lambdas[j] * y)
                .collect();
            let r2: Vec<f64> = skew
                .matrix()
                .matvec(&je)
                .iter()
                .zip(&je)
                .map(|(x, y)| x + s.lambdas[j] * y)
                .collect();
            assert!(numlin::norm(&r1) < 1e-8 * scale, "residual {:e}", numlin::norm(&r1));
            assert!(numlin::norm(&r2) < 1e-8 * scale);
        }
    }

    #[test]
    fn lag_spectrum_random_invariants() {
        let mut rng = SplitMix64::new(7);
        for n in 1..=4 {
            for _ in 0..50 {
                check_spectrum_invariants(&SymForm::random(n, &mut rng));
            }
        }
    }

    #[test]
    fn lag_spectrum_degenerate_pairing() {
        // identity: all lambdas 0, frame must still J-pair
        check_spectrum_invariants(&SymForm::identity(3));
        // repeated positive lambdas
        check_spectrum_invariants(&diag(2, &[2.0, -2.0, 2.0, -2.0]));
        // mixed zero and repeated
        check_spectrum_invariants(&diag(3, &[2.0, -2.0, 2.0, -2.0, 1.0, 1.0]));
        // edge element (pure herm0): skew = 0
        check_spectrum_invariants(&diag(2, &[2.0, 2.0, -2.0, -2.0]));
    }

    #[test]
    fn garding_examples() {
        let g = diag(2, &D1234).garding_eigenvalues().unwrap();
        let e: Vec<f64> = g.eigenvalues.clone();
        assert!((e[0] - 4.0).abs() < 1e-12);
        assert!((e[1] - 5.0).abs() < 1e-12);
        assert!((e[2] - 5.0).abs() < 1e-12);
        assert!((e[3] - 6.0).abs() < 1e-12);

        let g = diag(2, &[2.0, 0.0, 2.0, 0.0]).garding_eigenvalues().unwrap();
        let expect = [0.0, 2.0, 2.0, 4.0];
        for (a, b) in g.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }

        let g = SymForm::identity(3).garding_eigenvalues().unwrap();
        assert_eq!(g.eigenvalues.len(), 8);
        assert!(g.eigenvalues.iter().all(|&v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn m_lag_examples() {
        // n=1 collapse to det
        let a = SymForm::from_rows(1, &[vec![2.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((a.m_lag().unwrap() + 1.0).abs() < 1e-12);
        assert!((SymForm::identity(2).m_lag().unwrap() - 16.0).abs() < 1e-12);
        assert!((diag(2, &D1234).m_lag().unwrap() - 600.0).abs() < 1e-10);
    }

    #[test]
    fn branch_value_examples() {
        let a = diag(2, &[2.0, -2.0, 0.0, 0.0]);
        assert!((a.branch_value(1).unwrap() + 2.0).abs() < 1e-12);
        assert!((a.branch_value(4).unwrap() - 2.0).abs() < 1e-12);
        let i2 = SymForm::identity(2);
        for k in 1..=4 {
            assert!((i2.branch_value(k).unwrap() - 2.0).abs() < 1e-12);
        }
        assert!(matches!(
            a.branch_value(5),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            a.branch_value(0),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn canonical_op_examples() {
        assert!((SymForm::identity(2).canonical_op().unwrap() - 1.0).abs() < 1e-12);
        assert!(diag(2, &[2.0, 0.0, 2.0, 0.0]).canonical_op().unwrap().abs() < 1e-12);
        // translation identity g(A + tI) = g(A) + t (here tI means adding t
        // to every ordinary eigenvalue, i.e. add_scaled_identity(t) / ... )
        let mut rng = SplitMix64::new(99);
        for _ in 0..20 {
            let a = SymForm::random(2, &mut rng);
            let g0 = a.canonical_op().unwrap();
            // A + 3I in the ordinary matrix sense shifts Lambda_1 by 3n/n = 3
            let mut m = a.matrix().clone();
            for i in 0..4 {
                m[(i, i)] += 3.0;
            }
            let g1 = SymForm::new(2, m).unwrap().canonical_op().unwrap();
            assert!((g1 - g0 - 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn cone_membership_examples() {
        let edge = diag(2, &[2.0, 2.0, -2.0, -2.0]);
        let f = edge.cone_membership(edge.default_tol()).unwrap();
        assert!(f.in_edge && f.in_p_lag && f.in_dual);
        assert!(!f.in_p_plus);

        let a = diag(2, &[2.0, -2.0, 0.0, 0.0]);
        let f = a.cone_membership(a.default_tol()).unwrap();
        assert!(!f.in_p_lag && f.in_dual && !f.in_edge);

        // axis-plane projection P_W(+,+) = diag(1,0,1,0) is in P_plus
        let p = diag(2, &[1.0, 0.0, 1.0, 0.0]);
        let f = p.cone_membership(p.default_tol()).unwrap();
        assert!(f.in_p_plus && f.in_p_lag);
    }

    #[test]
    fn power_traces_examples() {
        let t = diag(2, &[2.0, -2.0, 0.0, 0.0]).power_traces(2);
        assert!((t[0] - 4.0).abs() < 1e-12);
        assert!((t[1] - 16.0).abs() < 1e-12);
        assert!(SymForm::identity(2).power_traces(3).iter().all(|v| v.abs() < 1e-13));
        let t = diag(2, &D1234).power_traces(1);
        assert!((t[0] - 0.5).abs() < 1e-12);
        // tau_l matches sum lambda^{2l}
        let mut rng = SplitMix64::new(4);
        for _ in 0..20 {
            let a = SymForm::random(3, &mut rng);
            let s = a.lag_spectrum().unwrap();
            let taus = a.power_traces(3);
            for (l, tau) in taus.iter().enumerate() {
                let expect: f64 = s.lambdas.iter().map(|v| v.powi(2 * (l as i32 + 1))).sum();
                assert!((tau - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn gradient_n1_is_adjugate() {
        let a = diag(1, &[2.0, 3.0]);
        let g = a.m_lag_gradient().unwrap();
        assert!((g.matrix()[(0, 0)] - 3.0).abs() < 1e-6);
        assert!((g.matrix()[(1, 1)] - 2.0).abs() < 1e-6);
        assert!(g.matrix()[(0, 1)].abs() < 1e-6);
    }

    #[test]
    fn gradient_at_identity_is_multiple_of_identity() {
        let g = SymForm::identity(2).m_lag_gradient().unwrap();
        let c = g.matrix()[(0, 0)];
        assert!(c > 0.0);
        for i in 0..4 {
            assert!((g.matrix()[(i, i)] - c).abs() < 1e-5 * c);
            for j in 0..4 {
                if i != j {
                    assert!(g.matrix()[(i, j)].abs() < 1e-5 * c);
                }
            }
        }
    }

    #[test]
    fn gradient_directional_check() {
        let mut rng = SplitMix64::new(13);
        for _ in 0..20 {
            let a = SymForm::random_interior(2, 0.5, &mut rng);
            let g = a.m_lag_gradient().unwrap();
            let p = SymForm::random(2, &mut rng);
            let h = 1e-5 * (1.0 + a.norm());
            let fd = (a.add(&p.scale(h)).m_lag().unwrap() - a.sub(&p.scale(h)).m_lag().unwrap())
                / (2.0 * h);
            let ip = g.pair(&p);
            assert!(
                (fd - ip).abs() <= 1e-5 * (1.0 + fd.abs().max(ip.abs())) * 10.0,
                "fd {fd} vs <grad,P> {ip}"
            );
        }
    }

    #[test]
    fn int_decompose_examples() {
        let a = diag(2, &D1234);
        let (b, p) = a.int_decompose().unwrap();
        assert!(p.sub(&diag(2, &[2.0, 3.0, 2.0, 3.0])).norm() < 1e-10);
        assert!(b.sub(&diag(2, &[-1.0, -1.0, 1.0, 1.0])).norm() < 1e-10);

        let (b, p) = SymForm::identity(2).int_decompose().unwrap();
        assert!(p.sub(&SymForm::identity(2)).norm() < 1e-10);
        assert!(b.norm() < 1e-10);

        assert!(matches!(
            diag(2, &[2.0, -2.0, 0.0, 0.0]).int_decompose(),
            Err(Error::NotInterior { .. })
        ));
    }

    #[test]
    fn int_decompose_random_properties() {
        let mut rng = SplitMix64::new(8);
        for _ in 0..50 {
            let a = SymForm::random_interior(3, 0.3, &mut rng);
            let (b, p) = a.int_decompose().unwrap();
            assert!(b.add(&p).sub(&a).norm() < 1e-10 * (1.0 + a.norm()));
            let fb = b.cone_membership(b.default_tol()).unwrap();
            assert!(fb.in_edge, "B not in edge");
            let (eigs, _) = sym_eigen(p.matrix(), 1e-9).unwrap();
            assert!(*eigs.last().unwrap() > 0.0, "P not positive definite");
            // smallest eigenvalue of P is delta = Lambda_1 / n
            let delta = a.lag_spectrum().unwrap().lambda1() / 3.0;
            assert!((eigs.last().unwrap() - delta).abs() < 1e-8 * (1.0 + delta));
        }
    }

    #[test]
    fn serialization_round_trip_and_validation() {
        let a = diag(2, &D1234);
        let s = serde_json::to_string(&a).unwrap();
        let b: SymForm = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        // symmetry validated on load
        let bad = r#"{"n":1,"entries":[[0.0,1.0],[0.0,0.0]]}"#;
        assert!(serde_json::from_str::<SymForm>(bad).is_err());
    }
}
