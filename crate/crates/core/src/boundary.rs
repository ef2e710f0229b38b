//! Boundary convexity diagnostics for domains {rho < 0}: exact minimum
//! traces over tangential Lagrangian planes, second-fundamental-form
//! normalization, interior log-barrier verification, and the
//! rho + A rho^2 defining-function upgrade.

use crate::error::{Error, Result};
use crate::exprparse::{self, Expr};
use crate::lagalg::SymForm;
use crate::laggrass::{self, LagFrame};
use crate::numlin::{self, SplitMix64};
use serde::Serialize;

/// A scalar function of the 2n real coordinates given by an expression,
/// differentiated by central finite differences.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub expr: Expr,
    pub n: usize,
    pub fd_step: f64,
}

impl ScalarField {
    pub fn parse(src: &str, n: usize) -> Result<Self> {
        Ok(ScalarField {
            expr: exprparse::parse(src, n)?,
            n,
            fd_step: 1e-3,
        })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        exprparse::eval(&self.expr, x)
    }

    pub fn grad_hess(&self, x: &[f64]) -> Result<(f64, Vec<f64>, SymForm)> {
        let step = self.fd_step * (1.0 + numlin::norm(x));
        fd_grad_hess(|p| self.eval(p), self.n, x, step)
    }
}

/// Central-difference value/gradient/Hessian of an arbitrary scalar
/// function; exact on quadratics, O(step^2) otherwise.
pub fn fd_grad_hess<F: Fn(&[f64]) -> Result<f64>>(
    f: F,
    n: usize,
    x: &[f64],
    step: f64,
) -> Result<(f64, Vec<f64>, SymForm)> {
    let dim = 2 * n;
    assert_eq!(x.len(), dim);
    let value = f(x)?;
    let at = |shifts: &[(usize, f64)]| -> Result<f64> {
        let mut p = x.to_vec();
        for &(i, s) in shifts {
            p[i] += s;
        }
        f(&p)
    };
    let mut grad = vec![0.0; dim];
    let mut rows = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        let fp = at(&[(i, step)])?;
        let fm = at(&[(i, -step)])?;
        grad[i] = (fp - fm) / (2.0 * step);
        rows[i][i] = (fp + fm - 2.0 * value) / (step * step);
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let pp = at(&[(i, step), (j, step)])?;
            let mm = at(&[(i, -step), (j, -step)])?;
            let pm = at(&[(i, step), (j, -step)])?;
            let mp = at(&[(i, -step), (j, step)])?;
            let v = (pp + mm - pm - mp) / (4.0 * step * step);
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    Ok((value, grad, SymForm::from_rows(n, &rows)?))
}

/// J-coherent orthonormal basis of the maximal complex subspace of the
/// tangent space: columns u_1, Ju_1, ..., u_{n-1}, Ju_{n-1}, all orthogonal
/// to nhat and J nhat.
fn complex_tangent_basis(nhat: &[f64], jn: &[f64]) -> Vec<Vec<f64>> {
    let dim = nhat.len();
    let mut basis: Vec<Vec<f64>> = vec![nhat.to_vec(), jn.to_vec()];
    let mut out: Vec<Vec<f64>> = Vec::new();
    for i in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        for b in &basis {
            let c = numlin::dot(&v, b);
            for (vk, bk) in v.iter_mut().zip(b) {
                *vk -= c * bk;
            }
        }
        let nv = numlin::norm(&v);
        if nv < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|w| *w /= nv);
        let mut jv = numlin::j_apply(&v);
        // re-orthogonalize J v for numerical safety; exactly orthogonal in
        // theory since the pair list is J-invariant
        for b in basis.iter().chain(std::iter::once(&v)) {
            let c = numlin::dot(&jv, b);
            for (vk, bk) in jv.iter_mut().zip(b) {
                *vk -= c * bk;
            }
        }
        let nj = numlin::norm(&jv);
        jv.iter_mut().for_each(|w| *w /= nj);
        basis.push(v.clone());
        basis.push(jv.clone());
        out.push(v);
        out.push(jv);
    }
    out
}

/// Exact minimum of tr(H|_W) over Lagrangian planes tangent to the level
/// set with gradient `grad`: every such plane is J nhat wedge W0 with W0
/// Lagrangian in the complex part of the tangent space, so the minimum is
/// <H J nhat, J nhat> plus the smallest Garding eigenvalue of the
/// compression of H to that complex part.
pub fn tangential_min_trace(h: &SymForm, grad: &[f64]) -> Result<f64> {
    let norm = numlin::norm(grad);
    if norm <= 1e-10 {
        return Err(Error::ZeroGradient { norm });
    }
    let nhat: Vec<f64> = grad.iter().map(|v| v / norm).collect();
    let jn = numlin::j_apply(&nhat);
    let hm = h.matrix();
    let base = numlin::dot(&hm.matvec(&jn), &jn);
    let n = h.n();
    if n == 1 {
        return Ok(base);
    }
    let cb = complex_tangent_basis(&nhat, &jn);
    let m = 2 * (n - 1);
    let mut rows = vec![vec![0.0; m]; m];
    for a in 0..m {
        let ha = hm.matvec(&cb[a]);
        for b in 0..m {
            rows[a][b] = numlin::dot(&ha, &cb[b]);
        }
    }
    for a in 0..m {
        for b in 0..a {
            let avg = 0.5 * (rows[a][b] + rows[b][a]);
            rows[a][b] = avg;
            rows[b][a] = avg;
        }
    }
    let compressed = SymForm::from_rows(n - 1, &rows)?;
    Ok(base + compressed.garding_eigenvalues()?.eigenvalues[0])
}

/// A tangential Lagrangian frame achieving the exact minimum, for callers
/// that need the minimizer and not just the value.
pub fn tangential_min_frame(h: &SymForm, grad: &[f64]) -> Result<LagFrame> {
    let norm = numlin::norm(grad);
    if norm <= 1e-10 {
        return Err(Error::ZeroGradient { norm });
    }
    let nhat: Vec<f64> = grad.iter().map(|v| v / norm).collect();
    let jn = numlin::j_apply(&nhat);
    let n = h.n();
    if n == 1 {
        return Ok(LagFrame::from_columns(1, &[jn]));
    }
    let cb = complex_tangent_basis(&nhat, &jn);
    let m = 2 * (n - 1);
    let mut rows = vec![vec![0.0; m]; m];
    let hm = h.matrix();
    for a in 0..m {
        let ha = hm.matvec(&cb[a]);
        for b in 0..m {
            rows[a][b] = 0.5 * (numlin::dot(&ha, &cb[b]) + numlin::dot(&hm.matvec(&cb[b]), &cb[a]));
        }
    }
    let compressed = SymForm::from_rows(n - 1, &rows)?;
    let (_, w0) = laggrass::sampled_min_trace(&compressed, 1, 0)?;
    let mut cols = vec![jn];
    for j in 0..(n - 1) {
        let small = w0.column(j);
        let mut big = vec![0.0; 2 * n];
        for (a, basis_vec) in cb.iter().enumerate() {
            for (i, b) in basis_vec.iter().enumerate() {
                big[i] += small[a] * b;
            }
        }
        cols.push(big);
    }
    Ok(LagFrame::from_columns(n, &cols))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConvexityVerdict {
    StrictlyConvex,
    WeaklyConvex,
    NotConvex,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryReport {
    pub points: Vec<Vec<f64>>,
    pub min_tangential_trace: Vec<f64>,
    pub grad_norm: Vec<f64>,
    /// tangential minimum divided by -|grad rho|: the trace of the second
    /// fundamental form on the worst plane (boundary convex iff <= 0).
    pub sff_trace_form: Vec<f64>,
    pub verdict: ConvexityVerdict,
    pub margin: f64,
}

pub fn boundary_convexity_report(
    rho: &ScalarField,
    probes: &[Vec<f64>],
    tol: f64,
) -> Result<BoundaryReport> {
    let mut mins = Vec::with_capacity(probes.len());
    let mut grads = Vec::with_capacity(probes.len());
    let mut sffs = Vec::with_capacity(probes.len());
    for p in probes {
        let (value, grad, hess) = rho.grad_hess(p)?;
        let scale = 1.0 + numlin::norm(&grad) * (1.0 + numlin::norm(p));
        if value.abs() > 1e-8 * scale {
            return Err(Error::ProbeOffBoundary {
                rho: value,
                tol: 1e-8 * scale,
            });
        }
        let gn = numlin::norm(&grad);
        let m = tangential_min_trace(&hess, &grad)?;
        mins.push(m);
        grads.push(gn);
        sffs.push(m / (-gn));
    }
    let margin = mins.iter().copied().fold(f64::INFINITY, f64::min);
    let verdict = if margin > tol {
        ConvexityVerdict::StrictlyConvex
    } else if margin >= -tol {
        ConvexityVerdict::WeaklyConvex
    } else {
        ConvexityVerdict::NotConvex
    };
    Ok(BoundaryReport {
        points: probes.to_vec(),
        min_tangential_trace: mins,
        grad_norm: grads,
        sff_trace_form: sffs,
        verdict,
        margin,
    })
}

/// Newton projection of an ambient point onto {rho = 0}.
pub fn newton_project(rho: &ScalarField, x0: &[f64]) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    for _ in 0..100 {
        let (value, grad, _) = {
            // gradient only; reuse the FD machinery at gradient cost
            let step = rho.fd_step * (1.0 + numlin::norm(&x));
            let v = rho.eval(&x)?;
            let mut g = vec![0.0; x.len()];
            for i in 0..x.len() {
                let mut p = x.clone();
                p[i] += step;
                let fp = rho.eval(&p)?;
                p[i] -= 2.0 * step;
                let fm = rho.eval(&p)?;
                g[i] = (fp - fm) / (2.0 * step);
            }
            (v, g, ())
        };
        let gn2 = numlin::dot(&grad, &grad);
        if gn2 < 1e-16 {
            return Err(Error::ZeroGradient { norm: gn2.sqrt() });
        }
        let scale = 1.0 + gn2.sqrt() * (1.0 + numlin::norm(&x));
        if value.abs() <= 1e-10 * scale {
            return Ok(x);
        }
        for i in 0..x.len() {
            x[i] -= value * grad[i] / gn2;
        }
    }
    let value = rho.eval(&x)?;
    Err(Error::ProbeOffBoundary {
        rho: value,
        tol: 1e-10,
    })
}

/// Boundary probes by projecting uniform box samples onto {rho = 0}.
pub fn sample_boundary_probes(
    rho: &ScalarField,
    bbox: &[(f64, f64)],
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count && attempts < 200 * count + 1000 {
        attempts += 1;
        let x: Vec<f64> = bbox.iter().map(|&(lo, hi)| rng.uniform(lo, hi)).collect();
        if let Ok(p) = newton_project(rho, &x) {
            if p.iter().zip(bbox).all(|(v, &(lo, hi))| *v >= lo - 0.5 && *v <= hi + 0.5) {
                out.push(p);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::ShellEmpty {
            delta_min: 0.0,
            delta_max: 0.0,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Shell {
    pub delta_min: f64,
    pub delta_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierReport {
    pub points_used: usize,
    /// minimum over probes of the smallest Garding eigenvalue of
    /// Hess(-log delta).
    pub min_lambda1: f64,
    /// worst relative gap between the direct minimum trace and the
    /// chain-rule assembly
    /// (1/delta) tr_W Hess rho + (1/delta^2) |grad rho proj W|^2.
    pub max_identity_residual: f64,
}

/// |P_W grad|^2: squared norm of the gradient projected onto the plane.
pub fn gradient_on_frame(grad: &[f64], w: &LagFrame) -> f64 {
    (0..w.n)
        .map(|j| numlin::dot(grad, &w.column(j)).powi(2))
        .sum()
}

fn shell_samples(
    rho: &ScalarField,
    shell: Shell,
    bbox: &[(f64, f64)],
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = SplitMix64::new(seed);
    let mut pts = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while pts.len() < count && attempts < 2000 * count + 4000 {
        attempts += 1;
        let x: Vec<f64> = bbox.iter().map(|&(lo, hi)| rng.uniform(lo, hi)).collect();
        let delta = -rho.eval(&x)?;
        if delta >= shell.delta_min && delta <= shell.delta_max {
            pts.push(x);
        }
    }
    if pts.is_empty() {
        return Err(Error::ShellEmpty {
            delta_min: shell.delta_min,
            delta_max: shell.delta_max,
        });
    }
    Ok(pts)
}

/// Verify the interior barrier -log(-rho): smallest Garding eigenvalue of
/// its Hessian over a shell of interior points, with the chain-rule identity
/// cross-checked at the minimizing frame of each probe.
pub fn barrier_check(
    rho: &ScalarField,
    shell: Shell,
    bbox: &[(f64, f64)],
    probes: usize,
    seed: u64,
) -> Result<BarrierReport> {
    let pts = shell_samples(rho, shell, bbox, probes, seed)?;
    let mut min_lambda1 = f64::INFINITY;
    let mut max_res: f64 = 0.0;
    for x in &pts {
        // the barrier's fourth derivatives grow like 1/delta^4, so the FD
        // step must shrink with the boundary distance to keep the O(step^2)
        // truncation error below the target
        let delta0 = -rho.eval(x)?;
        let step = 0.25 * rho.fd_step * delta0.min(1.0 + numlin::norm(x));
        let (_, _, barrier_hess) = fd_grad_hess(
            |p| {
                let v = rho.eval(p)?;
                if v >= 0.0 {
                    return Err(Error::EvaluationError {
                        node: "-log(-rho)".to_string(),
                        msg: format!("rho = {v} is not negative"),
                    });
                }
                Ok(-(-v).ln())
            },
            rho.n,
            x,
            step,
        )?;
        let lambda1 = barrier_hess.garding_eigenvalues()?.eigenvalues[0];
        min_lambda1 = min_lambda1.min(lambda1);

        // chain-rule assembly at the minimizing frame
        let (rv, rg, rh) = rho.grad_hess(x)?;
        let delta = -rv;
        let (direct_min, frame) = laggrass::sampled_min_trace(&barrier_hess, 32, seed ^ 0x9e37)?;
        let assembled = laggrass::trace_on_plane(&rh, &frame) / delta
            + gradient_on_frame(&rg, &frame) / (delta * delta);
        max_res = max_res.max((direct_min - assembled).abs() / (1.0 + direct_min.abs()));
    }
    Ok(BarrierReport {
        points_used: pts.len(),
        min_lambda1,
        max_identity_residual: max_res,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UpgradeReport {
    /// coefficient in rho + A rho^2 making the upgrade strictly Lag-psh on
    /// the shell.
    pub a: f64,
    pub min_lambda1: f64,
    pub max_identity_residual: f64,
    pub points_used: usize,
}

/// Find the least doubling coefficient A <= a_max such that
/// rho + A rho^2 has strictly positive smallest Garding eigenvalue on the
/// shell, and verify tr_W Hess(rho + A rho^2) =
/// (1 + 2 A rho) tr_W Hess rho + 2A |grad rho proj W|^2 at sample frames.
pub fn defining_function_upgrade(
    rho: &ScalarField,
    shell: Shell,
    bbox: &[(f64, f64)],
    probes: usize,
    seed: u64,
    a_max: f64,
) -> Result<UpgradeReport> {
    let pts = shell_samples(rho, shell, bbox, probes, seed)?;
    let mut a = 0.0f64;
    loop {
        let mut min_lambda1 = f64::INFINITY;
        let mut max_res: f64 = 0.0;
        for (idx, x) in pts.iter().enumerate() {
            let step = rho.fd_step * (1.0 + numlin::norm(x));
            let (_, _, up_hess) = fd_grad_hess(
                |p| {
                    let v = rho.eval(p)?;
                    Ok(v + a * v * v)
                },
                rho.n,
                x,
                step,
            )?;
            min_lambda1 = min_lambda1.min(up_hess.garding_eigenvalues()?.eigenvalues[0]);
            let (rv, rg, rh) = rho.grad_hess(x)?;
            let w = laggrass::random_frame_stream(rho.n, seed ^ 0x5bd1, idx as u64);
            let lhs = laggrass::trace_on_plane(&up_hess, &w);
            let rhs = (1.0 + 2.0 * a * rv) * laggrass::trace_on_plane(&rh, &w)
                + 2.0 * a * gradient_on_frame(&rg, &w);
            max_res = max_res.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
        }
        if min_lambda1 > 0.0 {
            return Ok(UpgradeReport {
                a,
                min_lambda1,
                max_identity_residual: max_res,
                points_used: pts.len(),
            });
        }
        a = if a == 0.0 { 0.125 } else { 2.0 * a };
        if a > a_max {
            return Err(Error::UpgradeFailed { a_max });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(n: usize) -> ScalarField {
        let terms: Vec<String> = (1..=n)
            .flat_map(|k| vec![format!("x{k}*x{k}"), format!("y{k}*y{k}")])
            .collect();
        ScalarField::parse(&format!("{} - 1", terms.join(" + ")), n).unwrap()
    }

    fn sphere_point(n: usize, rng: &mut SplitMix64) -> Vec<f64> {
        let mut p: Vec<f64> = (0..2 * n).map(|_| rng.normal()).collect();
        let nn = numlin::norm(&p);
        p.iter_mut().for_each(|v| *v /= nn);
        p
    }

    #[test]
    fn fd_examples() {
        let f = ScalarField::parse("x1^2 - y1^2", 2).unwrap();
        let (v, g, h) = f.grad_hess(&[0.0; 4]).unwrap();
        assert_eq!(v, 0.0);
        assert!(numlin::norm(&g) < 1e-10);
        assert!(h.sub(&SymForm::diag(2, &[2.0, -2.0, 0.0, 0.0])).norm() < 1e-9);

        let f = sphere(2);
        let x = [1.0, 0.0, 0.0, 0.0];
        let (v, g, h) = f.grad_hess(&x).unwrap();
        assert!(v.abs() < 1e-12);
        assert!((g[0] - 2.0).abs() < 1e-9 && numlin::norm(&g[1..]) < 1e-9);
        assert!(h.sub(&SymForm::identity(2).scale(2.0)).norm() < 1e-8);

        let f = ScalarField::parse("exp(x1)", 1).unwrap();
        let (v, g, h) = f.grad_hess(&[0.0, 0.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert!((g[0] - 1.0).abs() < 1e-6 && g[1].abs() < 1e-12);
        assert!((h.matrix()[(0, 0)] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn tangential_examples() {
        let h = SymForm::identity(2).scale(2.0);
        let v = tangential_min_trace(&h, &[2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((v - 4.0).abs() < 1e-12);

        let h = SymForm::diag(2, &[2.0, 0.0, 2.0, 0.0]);
        let v = tangential_min_trace(&h, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(v.abs() < 1e-12);

        assert!(matches!(
            tangential_min_trace(&h, &[0.0; 4]),
            Err(Error::ZeroGradient { .. })
        ));
    }

    #[test]
    fn tangential_reduction_matches_sampling() {
        let mut rng = SplitMix64::new(9);
        for n in 2..=3usize {
            for trial in 0..20u64 {
                let h = SymForm::random(n, &mut rng);
                let grad: Vec<f64> = (0..2 * n).map(|_| rng.normal()).collect();
                let exact = tangential_min_trace(&h, &grad).unwrap();
                // the minimizing frame achieves the value and is tangential
                let w = tangential_min_frame(&h, &grad).unwrap();
                assert!(w.orthonormality_residual() < 1e-9);
                assert!(w.isotropy_residual() < 1e-9);
                for j in 0..n {
                    assert!(numlin::dot(&w.column(j), &grad).abs() < 1e-9);
                }
                assert!((laggrass::trace_on_plane(&h, &w) - exact).abs() < 1e-8);
                // random tangential frames never undercut the exact minimum
                let nhat: Vec<f64> = {
                    let g = numlin::norm(&grad);
                    grad.iter().map(|v| v / g).collect()
                };
                let jn = numlin::j_apply(&nhat);
                let cb = complex_tangent_basis(&nhat, &jn);
                for k in 0..200u64 {
                    let w0 = laggrass::random_frame_stream(n - 1, 1000 + trial, k);
                    let mut cols = vec![jn.clone()];
                    for j in 0..(n - 1) {
                        let small = w0.column(j);
                        let mut big = vec![0.0; 2 * n];
                        for (a, bvec) in cb.iter().enumerate() {
                            for (i, b) in bvec.iter().enumerate() {
                                big[i] += small[a] * b;
                            }
                        }
                        cols.push(big);
                    }
                    let wt = LagFrame::from_columns(n, &cols);
                    assert!(laggrass::trace_on_plane(&h, &wt) >= exact - 1e-9);
                }
            }
        }
    }

    #[test]
    fn sphere_report() {
        let rho = sphere(2);
        let mut rng = SplitMix64::new(4);
        let probes: Vec<Vec<f64>> = (0..50).map(|_| sphere_point(2, &mut rng)).collect();
        let rep = boundary_convexity_report(&rho, &probes, 1e-7).unwrap();
        assert_eq!(rep.verdict, ConvexityVerdict::StrictlyConvex);
        for (m, s) in rep.min_tangential_trace.iter().zip(&rep.sff_trace_form) {
            assert!((m - 4.0).abs() < 1e-6);
            // II trace -n/r with n = 2, r = 1
            assert!((s + 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn half_space_is_weakly_convex() {
        let rho = ScalarField::parse("x1", 2).unwrap();
        let probes = vec![vec![0.0, 0.3, -0.2, 0.5], vec![0.0, 0.0, 0.0, 0.0]];
        let rep = boundary_convexity_report(&rho, &probes, 1e-7).unwrap();
        assert_eq!(rep.verdict, ConvexityVerdict::WeaklyConvex);
    }

    #[test]
    fn probe_off_boundary_rejected() {
        let rho = sphere(2);
        let res = boundary_convexity_report(&rho, &[vec![0.5, 0.0, 0.0, 0.0]], 1e-7);
        assert!(matches!(res, Err(Error::ProbeOffBoundary { .. })));
    }

    #[test]
    fn defining_function_invariance() {
        // rho and f * rho give per-point minima scaled by f on the boundary
        let rho = sphere(2);
        let scaled = ScalarField::parse(
            "(2 + 0.5*x1) * (x1*x1 + y1*y1 + x2*x2 + y2*y2 - 1)",
            2,
        )
        .unwrap();
        let mut rng = SplitMix64::new(12);
        for _ in 0..25 {
            let p = sphere_point(2, &mut rng);
            let f = 2.0 + 0.5 * p[0];
            let (_, g1, h1) = rho.grad_hess(&p).unwrap();
            let (_, g2, h2) = scaled.grad_hess(&p).unwrap();
            let m1 = tangential_min_trace(&h1, &g1).unwrap();
            let m2 = tangential_min_trace(&h2, &g2).unwrap();
            assert!((m2 - f * m1).abs() < 1e-5 * (1.0 + m1.abs()));
        }
    }

    #[test]
    fn chain_rule_identity() {
        // tr_W Hess psi(rho) = psi' tr_W Hess rho + psi'' |grad rho proj W|^2
        let rho = sphere(2);
        let composed = ScalarField::parse(
            "exp(x1*x1 + y1*y1 + x2*x2 + y2*y2 - 1)",
            2,
        )
        .unwrap();
        let mut rng = SplitMix64::new(21);
        for trial in 0..25u64 {
            let x: Vec<f64> = (0..4).map(|_| rng.uniform(-0.6, 0.6)).collect();
            let (rv, rg, rh) = rho.grad_hess(&x).unwrap();
            let (_, _, ch) = composed.grad_hess(&x).unwrap();
            let w = laggrass::random_frame_stream(2, 77, trial);
            let lhs = laggrass::trace_on_plane(&ch, &w);
            let e = rv.exp();
            let rhs = e * laggrass::trace_on_plane(&rh, &w) + e * gradient_on_frame(&rg, &w);
            assert!((lhs - rhs).abs() < 1e-5 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn newton_projection_lands_on_boundary() {
        let rho = sphere(2);
        let probes = sample_boundary_probes(&rho, &[(-1.2, 1.2); 4], 20, 3).unwrap();
        assert_eq!(probes.len(), 20);
        for p in &probes {
            assert!(rho.eval(p).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn sphere_barrier_is_strict() {
        let rho = sphere(2);
        let rep = barrier_check(
            &rho,
            Shell {
                delta_min: 0.05,
                delta_max: 0.2,
            },
            &[(-1.0, 1.0); 4],
            40,
            8,
        )
        .unwrap();
        assert!(rep.points_used > 0);
        assert!(rep.min_lambda1 > 0.0);
        assert!(rep.max_identity_residual <= 1e-5);
    }

    #[test]
    fn flat_boundary_barrier_not_strict() {
        let rho = ScalarField::parse("x1", 2).unwrap();
        // interior is x1 < 0; delta = -x1
        let rep = barrier_check(
            &rho,
            Shell {
                delta_min: 0.05,
                delta_max: 0.2,
            },
            &[(-0.3, 0.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
            30,
            5,
        )
        .unwrap();
        assert!(rep.min_lambda1.abs() < 1e-4);
    }

    #[test]
    fn shell_empty_detected() {
        let rho = sphere(2);
        let res = barrier_check(
            &rho,
            Shell {
                delta_min: 5.0,
                delta_max: 6.0,
            },
            &[(-1.0, 1.0); 4],
            10,
            2,
        );
        assert!(matches!(res, Err(Error::ShellEmpty { .. })));
    }

    #[test]
    fn upgrade_examples() {
        let shell = Shell {
            delta_min: 0.01,
            delta_max: 0.2,
        };
        // sphere: already strictly Lag-psh, so A = 0
        let rho = sphere(2);
        let rep = defining_function_upgrade(&rho, shell, &[(-1.0, 1.0); 4], 30, 6, 64.0).unwrap();
        assert_eq!(rep.a, 0.0);
        assert!(rep.min_lambda1 > 0.0);
        assert!(rep.max_identity_residual <= 1e-5);

        // flattened ball: still works with a finite A and the expansion
        // identity holds
        let rho = ScalarField::parse(
            "x1*x1 + y1*y1 + x2*x2 + y2*y2 - 1 - 0.4*x1*x1",
            2,
        )
        .unwrap();
        let rep = defining_function_upgrade(&rho, shell, &[(-1.0, 1.0); 4], 30, 7, 64.0).unwrap();
        assert!(rep.min_lambda1 > 0.0);
        assert!(rep.max_identity_residual <= 1e-5);

        // flat boundary: Hess(x1 + A x1^2) has smallest Garding eigenvalue 0
        // for every A, so the search must fail
        let rho = ScalarField::parse("x1", 2).unwrap();
        let res = defining_function_upgrade(
            &rho,
            shell,
            &[(-0.3, 0.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
            10,
            9,
            8.0,
        );
        assert!(matches!(res, Err(Error::UpgradeFailed { .. })));
    }
}
