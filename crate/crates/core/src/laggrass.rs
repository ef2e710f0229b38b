//! The Lagrangian Grassmannian oracle: random Lagrangian frames by
//! push-forward of Haar measure on U(n), traces of forms on planes, the
//! brute-force minimum oracle (exact once the skew eigenbasis axis frames
//! are included), and the diagonal cross-section geometry of the cone.

use crate::error::{Error, Result};
use crate::lagalg::{SymForm, GARDING_DIM_CAP};
use crate::numlin::{self, haar_symplectic_orthogonal, j_apply, RealMatrix, SplitMix64};

/// Orthonormal basis of a Lagrangian n-plane W in R^{2n}.
#[derive(Debug, Clone)]
pub struct LagFrame {
    pub n: usize,
    /// 2n x n, orthonormal columns spanning W.
    pub columns: RealMatrix,
}

impl LagFrame {
    /// The standard x-axis plane span{e_{x_1}, ..., e_{x_n}}.
    pub fn x_axis(n: usize) -> Self {
        let mut c = RealMatrix::zeros(2 * n, n);
        for k in 0..n {
            c[(2 * k, k)] = 1.0;
        }
        LagFrame { n, columns: c }
    }

    pub fn from_columns(n: usize, cols: &[Vec<f64>]) -> Self {
        assert_eq!(cols.len(), n);
        let mut c = RealMatrix::zeros(2 * n, n);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), 2 * n);
            for i in 0..2 * n {
                c[(i, j)] = col[i];
            }
        }
        LagFrame { n, columns: c }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.columns.column(j)
    }

    /// max deviation from orthonormality.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.columns.transpose().matmul(&self.columns);
        g.sub(&RealMatrix::identity(self.n)).max_abs()
    }

    /// max |<J u_i, u_j>| over all pairs: omega-isotropy.
    pub fn isotropy_residual(&self) -> f64 {
        let mut r = 0.0f64;
        for i in 0..self.n {
            let jui = j_apply(&self.column(i));
            for j in 0..self.n {
                r = r.max(numlin::dot(&jui, &self.column(j)).abs());
            }
        }
        r
    }
}

/// Random Lagrangian frame: the image of the x-axis plane under a Haar
/// unitary; deterministic for fixed (n, seed).
pub fn random_lag_frame(n: usize, seed: u64) -> LagFrame {
    let g = haar_symplectic_orthogonal(n, seed);
    frame_from_unitary(n, &g)
}

fn frame_from_unitary(n: usize, g: &RealMatrix) -> LagFrame {
    // image of the x-axis basis = the x-columns of g
    let cols: Vec<Vec<f64>> = (0..n).map(|k| g.column(2 * k)).collect();
    LagFrame::from_columns(n, &cols)
}

/// tr(A|_W) = sum_j <A u_j, u_j>.
pub fn trace_on_plane(a: &SymForm, w: &LagFrame) -> f64 {
    assert_eq!(a.n(), w.n);
    (0..w.n)
        .map(|j| {
            let u = w.column(j);
            numlin::dot(&a.matrix().matvec(&u), &u)
        })
        .sum()
}

/// The 2^n axis frames of a skew eigenbasis: column j of frame eps is e_j
/// when eps_j = +1 and J e_j when eps_j = -1.
pub fn axis_frames_of(spec_frame: &RealMatrix, n: usize) -> Result<Vec<LagFrame>> {
    if n > GARDING_DIM_CAP {
        return Err(Error::DimensionTooLarge {
            what: "axis frame enumeration",
            needed: n,
            cap: GARDING_DIM_CAP,
        });
    }
    let mut frames = Vec::with_capacity(1 << n);
    for mask in 0..(1usize << n) {
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                if mask & (1 << j) == 0 {
                    spec_frame.column(2 * j)
                } else {
                    spec_frame.column(2 * j + 1)
                }
            })
            .collect();
        frames.push(LagFrame::from_columns(n, &cols));
    }
    Ok(frames)
}

/// Minimum of tr(A|_W) over `count` Haar-random frames plus the 2^n axis
/// frames of A's skew eigenbasis. The axis frames make this exact: the
/// minimizing plane is the J-image of the eigenbasis x-plane, so the
/// returned minimum equals Lambda_1(A) up to roundoff.
pub fn sampled_min_trace(a: &SymForm, count: usize, seed: u64) -> Result<(f64, LagFrame)> {
    assert!(count >= 1);
    let n = a.n();
    let spec = a.lag_spectrum()?;
    let mut best_val = f64::INFINITY;
    let mut best: Option<LagFrame> = None;
    for w in axis_frames_of(&spec.frame, n)? {
        let t = trace_on_plane(a, &w);
        if t < best_val {
            best_val = t;
            best = Some(w);
        }
    }
    for i in 0..count {
        // counter-based stream per sample: deterministic under any
        // parallel split of the index range
        let w = random_frame_stream(n, seed, i as u64);
        let t = trace_on_plane(a, &w);
        if t < best_val {
            best_val = t;
            best = Some(w);
        }
    }
    Ok((best_val, best.unwrap()))
}

/// Frame drawn from the counter-indexed stream (seed, index).
pub fn random_frame_stream(n: usize, seed: u64, index: u64) -> LagFrame {
    let mut rng = SplitMix64::stream(seed, index);
    loop {
        if let Some(f) = try_frame(n, &mut rng) {
            return f;
        }
    }
}

fn try_frame(n: usize, rng: &mut SplitMix64) -> Option<LagFrame> {
    // same construction as haar_symplectic_orthogonal but driven by the
    // provided stream
    let seed = rng.next_u64();
    let g = haar_symplectic_orthogonal(n, seed);
    Some(frame_from_unitary(n, &g))
}

/// Orthogonal projection onto the axis Lagrangian plane W(eps):
/// P = I/2 + (1/2) sum_j eps_j (P_{e_{x_j}} - P_{e_{y_j}}).
pub fn axis_plane_projection(n: usize, eps: &[i8]) -> SymForm {
    assert_eq!(eps.len(), n);
    assert!(eps.iter().all(|&e| e == 1 || e == -1));
    let mut d = vec![0.0; 2 * n];
    for j in 0..n {
        d[2 * j] = 0.5 * (1.0 + eps[j] as f64);
        d[2 * j + 1] = 0.5 * (1.0 - eps[j] as f64);
    }
    SymForm::diag(n, &d)
}

/// A point of the diagonal cross-section D: H(t, lambda) = (t/2n) I +
/// sum_j lambda_j (P_{e_j} - P_{Je_j}) in the standard basis.
#[derive(Debug, Clone)]
pub struct DiagPoint {
    pub t: f64,
    pub lambda: Vec<f64>,
}

impl DiagPoint {
    pub fn matrix(&self) -> SymForm {
        let n = self.lambda.len();
        let base = self.t / (2.0 * n as f64);
        let mut d = vec![0.0; 2 * n];
        for j in 0..n {
            d[2 * j] = base + self.lambda[j];
            d[2 * j + 1] = base - self.lambda[j];
        }
        SymForm::diag(n, &d)
    }
}

/// Cross-section membership flags and pairings against all axis projections.
#[derive(Debug, Clone)]
pub struct DiagMembership {
    /// sup_j |lambda_j| <= t/2n + tol: the cone P_+ cap D.
    pub in_p_plus_d: bool,
    /// sum_j |lambda_j| <= t/2 + tol: the subequation cap D (its polar).
    pub in_p_sup_d: bool,
    /// <H(t,lambda), P_W(eps)> = t/2 + sum_j eps_j lambda_j, one per eps
    /// (eps enumerated by bitmask, bit j set = eps_j = -1).
    pub pairings: Vec<f64>,
}

pub fn diag_membership(p: &DiagPoint, tol: f64) -> DiagMembership {
    let n = p.lambda.len();
    let max_abs = p.lambda.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sum_abs: f64 = p.lambda.iter().map(|v| v.abs()).sum();
    let h = p.matrix();
    let mut pairings = Vec::with_capacity(1 << n);
    for mask in 0..(1usize << n) {
        let eps: Vec<i8> = (0..n)
            .map(|j| if mask & (1 << j) == 0 { 1 } else { -1 })
            .collect();
        let proj = axis_plane_projection(n, &eps);
        pairings.push(h.pair(&proj));
    }
    DiagMembership {
        in_p_plus_d: max_abs <= p.t / (2.0 * n as f64) + tol,
        in_p_sup_d: sum_abs <= p.t / 2.0 + tol,
        pairings,
    }
}
