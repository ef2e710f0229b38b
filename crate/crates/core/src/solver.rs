//! Wide-stencil Dirichlet solver on uniform grids over boxes or sublevel
//! domains: a monotone frame scheme for the homogeneous principal branch,
//! a shift-residual sweep for the inhomogeneous equation, and a
//! centered-Hessian sweep for general branches.
//!
//! Two discrete Hessians coexist on purpose: the frame scheme is monotone
//! (discrete comparison principle) but only sees traces; shift and branch
//! residuals need eigen-data, so they use centered full Hessians, which are
//! not monotone and are validated against manufactured solutions only.

use crate::error::{Error, Result};
use crate::boundary::ScalarField;
use crate::lagalg::{GardingData, LagSpectrum, SymForm};
use crate::laggrass::{self, LagFrame};
use crate::numlin::RealMatrix;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub n: usize,
    pub bbox: Vec<(f64, f64)>,
    pub m: usize,
    pub h: f64,
    pub mask: Vec<NodeKind>,
}

impl Grid {
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn node_count(&self) -> usize {
        self.m.pow(self.dim() as u32)
    }

    pub fn multi(&self, flat: usize) -> Vec<usize> {
        let mut rest = flat;
        (0..self.dim())
            .map(|_| {
                let i = rest % self.m;
                rest /= self.m;
                i
            })
            .collect()
    }

    pub fn flat(&self, multi: &[usize]) -> usize {
        multi.iter().rev().fold(0, |acc, &i| acc * self.m + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi(flat)
            .iter()
            .zip(&self.bbox)
            .map(|(&i, &(lo, _))| lo + i as f64 * self.h)
            .collect()
    }

    fn neighbor(&self, flat: usize, axis: usize, delta: isize) -> Option<usize> {
        let stride = self.m.pow(axis as u32);
        let i = (flat / stride) % self.m;
        let next = i as isize + delta;
        if next < 0 || next >= self.m as isize {
            return None;
        }
        Some((flat as isize + delta * stride as isize) as usize)
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| self.mask[i] == NodeKind::Interior)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

/// Shared stencil: the 2^n axis frames plus Haar-random extras. Random
/// frames sample off-node points, so they carry a wider arm than the
/// node-exact axis frames.
#[derive(Debug, Clone)]
pub struct FrameSet {
    pub frames: Vec<LagFrame>,
    /// arm length of each frame in units of h.
    pub h_frac: Vec<f64>,
    pub seed: u64,
}

impl FrameSet {
    pub fn new(n: usize, extra: usize, seed: u64) -> Result<FrameSet> {
        let axis = laggrass::axis_frames_of(&RealMatrix::identity(2 * n), n)?;
        let mut frames = axis;
        let mut h_frac = vec![1.0; frames.len()];
        for i in 0..extra {
            frames.push(laggrass::random_frame_stream(n, seed, i as u64));
            h_frac.push(2.0);
        }
        Ok(FrameSet {
            frames,
            h_frac,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Homogeneous,
    Inhomogeneous,
    /// 1-based branch index into the ascending Garding eigenvalues.
    Branch(usize),
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub n: usize,
    pub m: usize,
    pub bbox: Vec<(f64, f64)>,
    /// None: the box itself; Some(rho): the sublevel set {rho < 0}.
    pub rho: Option<ScalarField>,
    pub phi: ScalarField,
    pub mode: SolveMode,
    /// inhomogeneity, required in Inhomogeneous mode.
    pub psi: Option<ScalarField>,
    pub extra_frames: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iters: usize,
}

impl SolveConfig {
    pub fn boxed(n: usize, m: usize, lo: f64, hi: f64, phi: ScalarField) -> SolveConfig {
        SolveConfig {
            n,
            m,
            bbox: vec![(lo, hi); 2 * n],
            rho: None,
            phi,
            mode: SolveMode::Homogeneous,
            psi: None,
            extra_frames: 0,
            seed: 1,
            tol: 1e-8,
            max_iters: if n == 1 { 1_000_000 } else { 100_000 },
        }
    }
}

pub fn build_domain(cfg: &SolveConfig) -> Result<(Grid, GridField)> {
    assert!(cfg.m >= 5, "need at least 5 points per axis");
    assert_eq!(cfg.bbox.len(), 2 * cfg.n);
    let width = cfg.bbox[0].1 - cfg.bbox[0].0;
    for &(lo, hi) in &cfg.bbox {
        assert!(
            ((hi - lo) - width).abs() < 1e-12 * (1.0 + width.abs()),
            "uniform spacing requires equal axis widths"
        );
    }
    let h = width / (cfg.m - 1) as f64;
    let mut grid = Grid {
        n: cfg.n,
        bbox: cfg.bbox.clone(),
        m: cfg.m,
        h,
        mask: Vec::new(),
    };
    let count = grid.node_count();
    let mut mask = vec![NodeKind::Exterior; count];
    match &cfg.rho {
        None => {
            for flat in 0..count {
                let mi = grid.multi(flat);
                let inside = mi.iter().all(|&i| i > 0 && i + 1 < cfg.m);
                mask[flat] = if inside {
                    NodeKind::Interior
                } else {
                    NodeKind::Boundary
                };
            }
        }
        Some(rho) => {
            for flat in 0..count {
                let mi = grid.multi(flat);
                let on_hull = mi.iter().any(|&i| i == 0 || i + 1 == cfg.m);
                grid.mask = mask.clone(); // not yet used; point() needs no mask
                let x = grid.point(flat);
                if rho.eval(&x)? < 0.0 && !on_hull {
                    mask[flat] = NodeKind::Interior;
                }
            }
            // boundary layer: non-interior face neighbors of interior nodes
            grid.mask = mask.clone();
            let mut boundary = Vec::new();
            for flat in 0..count {
                if mask[flat] != NodeKind::Interior {
                    continue;
                }
                for axis in 0..grid.dim() {
                    for delta in [-1isize, 1] {
                        if let Some(nb) = grid.neighbor(flat, axis, delta) {
                            if mask[nb] == NodeKind::Exterior {
                                boundary.push(nb);
                            }
                        }
                    }
                }
            }
            for b in boundary {
                mask[b] = NodeKind::Boundary;
            }
        }
    }
    grid.mask = mask;
    if grid.interior_nodes().is_empty() {
        return Err(Error::EmptyInterior);
    }

    // boundary data, then the boundary minimum as the interior start value
    // (an underestimate, so the monotone scheme sweeps upward)
    let mut values = vec![0.0; count];
    let mut bmin = f64::INFINITY;
    for flat in 0..count {
        if grid.mask[flat] == NodeKind::Boundary {
            let v = cfg.phi.eval(&grid.point(flat))?;
            values[flat] = v;
            bmin = bmin.min(v);
        }
    }
    for flat in 0..count {
        if grid.mask[flat] == NodeKind::Interior {
            values[flat] = bmin;
        }
    }
    Ok((grid.clone(), GridField { grid, values }))
}

/// Multilinear interpolation; None if the enclosing cell touches an
/// Exterior node.
fn interpolate(u: &GridField, p: &[f64]) -> Option<f64> {
    let g = &u.grid;
    let dim = g.dim();
    let mut cell = vec![0usize; dim];
    let mut theta = vec![0.0; dim];
    for i in 0..dim {
        let t = (p[i] - g.bbox[i].0) / g.h;
        let c = (t.floor() as isize).clamp(0, g.m as isize - 2) as usize;
        cell[i] = c;
        theta[i] = (t - c as f64).clamp(0.0, 1.0);
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut w = 1.0;
        let mut mi = cell.clone();
        for i in 0..dim {
            if corner & (1 << i) != 0 {
                w *= theta[i];
                mi[i] += 1;
            } else {
                w *= 1.0 - theta[i];
            }
        }
        if w == 0.0 {
            continue;
        }
        let flat = g.flat(&mi);
        if g.mask[flat] == NodeKind::Exterior {
            return None;
        }
        acc += w * u.values[flat];
    }
    Some(acc)
}

/// One arm of a directional second difference: step out distance `s` along
/// `dir`, clamping to the box hull along the ray and shrinking past
/// Exterior cells; returns (arm length used, interpolated value).
fn arm(u: &GridField, x: &[f64], dir: &[f64], s: f64) -> (f64, f64) {
    let g = &u.grid;
    // longest step keeping the probe inside the box
    let mut t_max = f64::INFINITY;
    for i in 0..g.dim() {
        if dir[i] > 1e-14 {
            t_max = t_max.min((g.bbox[i].1 - x[i]) / dir[i]);
        } else if dir[i] < -1e-14 {
            t_max = t_max.min((g.bbox[i].0 - x[i]) / dir[i]);
        }
    }
    let mut sigma = s.min(t_max).max(g.h * 1e-6);
    for _ in 0..8 {
        let p: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + sigma * d).collect();
        if let Some(v) = interpolate(u, &p) {
            return (sigma, v);
        }
        sigma *= 0.5;
    }
    // fully surrounded by Exterior cells; fall back to the center value
    let mi: Vec<usize> = x
        .iter()
        .zip(&g.bbox)
        .map(|(v, &(lo, _))| ((v - lo) / g.h).round() as usize)
        .collect();
    (sigma, u.values[g.flat(&mi)])
}

/// Second difference of u along the unit direction `e` at an interior node,
/// with possibly unequal arms near the boundary:
/// 2 (s_m v_p + s_p v_m - (s_p + s_m) u0) / (s_p s_m (s_p + s_m)).
pub fn directional_second_difference(u: &GridField, flat: usize, e: &[f64], h_frac: f64) -> f64 {
    let g = &u.grid;
    // node-exact fast path for grid-axis directions with unit arms
    if h_frac == 1.0 {
        if let Some(axis) = single_axis(e) {
            if let (Some(ip), Some(im)) = (g.neighbor(flat, axis, 1), g.neighbor(flat, axis, -1))
            {
                if g.mask[ip] != NodeKind::Exterior && g.mask[im] != NodeKind::Exterior {
                    return (u.values[ip] + u.values[im] - 2.0 * u.values[flat])
                        / (g.h * g.h);
                }
            }
        }
    }
    let x = g.point(flat);
    let s = h_frac * g.h;
    let u0 = u.values[flat];
    let (sp, vp) = arm(u, &x, e, s);
    let neg: Vec<f64> = e.iter().map(|v| -v).collect();
    let (sm, vm) = arm(u, &x, &neg, s);
    2.0 * (sm * vp + sp * vm - (sp + sm) * u0) / (sp * sm * (sp + sm))
}

/// The axis index when `e` is a signed coordinate direction, else None.
fn single_axis(e: &[f64]) -> Option<usize> {
    let mut found = None;
    for (i, &v) in e.iter().enumerate() {
        if v.abs() > 1e-14 {
            if found.is_some() || (v.abs() - 1.0).abs() > 1e-12 {
                return None;
            }
            found = Some(i);
        }
    }
    found
}

/// Minimum over the frame set of the summed second differences along each
/// frame column: the scheme's approximation of the smallest Garding
/// eigenvalue of the discrete Hessian.
pub fn frame_min_trace(u: &GridField, flat: usize, f: &FrameSet) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut arg = 0;
    for (k, frame) in f.frames.iter().enumerate() {
        let mut tr = 0.0;
        for j in 0..frame.n {
            tr += directional_second_difference(u, flat, &frame.column(j), f.h_frac[k]);
        }
        if tr < best {
            best = tr;
            arg = k;
        }
    }
    (best, arg)
}

/// Centered-difference full Hessian at an interior node. Stencil nodes that
/// fall outside the domain reuse the center value (only possible on
/// sublevel masks; box domains always have valid stencils).
pub fn centered_hessian(u: &GridField, flat: usize) -> Result<SymForm> {
    let g = &u.grid;
    let dim = g.dim();
    let h2 = g.h * g.h;
    let u0 = u.values[flat];
    let val = |f: Option<usize>| -> f64 {
        match f {
            Some(i) if g.mask[i] != NodeKind::Exterior => u.values[i],
            _ => u0,
        }
    };
    let mut rows = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        let p = val(g.neighbor(flat, i, 1));
        let m = val(g.neighbor(flat, i, -1));
        rows[i][i] = (p + m - 2.0 * u0) / h2;
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let pp = val(g.neighbor(flat, i, 1).and_then(|f| g.neighbor(f, j, 1)));
            let mm = val(g.neighbor(flat, i, -1).and_then(|f| g.neighbor(f, j, -1)));
            let pm = val(g.neighbor(flat, i, 1).and_then(|f| g.neighbor(f, j, -1)));
            let mp = val(g.neighbor(flat, i, -1).and_then(|f| g.neighbor(f, j, 1)));
            let v = (pp + mm - pm - mp) / (4.0 * h2);
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    SymForm::from_rows(g.n, &rows)
}

/// The unique t >= -Lambda_1 with prod_i (Lambda_i + t) = psi; equals
/// -Lambda_1 when psi = 0. Solved by Newton with a bisection safeguard.
pub fn shift_residual(spec: &LagSpectrum, psi: f64) -> Result<f64> {
    if psi < 0.0 {
        return Err(Error::NegativePsi { psi });
    }
    if spec.n == 1 {
        // (mu - lambda + t)(mu + lambda + t) = psi has the closed-form
        // admissible root t = -mu + sqrt(lambda^2 + psi)
        let lambda = spec.lambdas[0];
        return Ok(-spec.mu + (lambda * lambda + psi).sqrt());
    }
    let garding = GardingData::from_mu_lambda(spec.mu, &spec.lambdas);
    let lams = &garding.eigenvalues;
    let lambda1 = lams[0];
    if psi == 0.0 {
        return Ok(-lambda1);
    }
    let count = lams.len() as f64;
    // product >= (lambda1 + t)^{2^n} on t >= -lambda1, so this upper
    // bracket already exceeds psi
    let mut lo = -lambda1;
    let mut hi = -lambda1 + psi.powf(1.0 / count) + 1e-30;
    let f = |t: f64| -> f64 { lams.iter().map(|l| l + t).product::<f64>() - psi };
    while f(hi) < 0.0 {
        hi = -lambda1 + 2.0 * (hi + lambda1);
    }
    let scale = 1.0 + lams.iter().fold(0.0f64, |a, l| a.max(l.abs())) + psi.abs();
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let ft = f(t);
        if ft > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        // Newton step from the bracketing state
        let df: f64 = lams
            .iter()
            .enumerate()
            .map(|(i, _)| {
                lams.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, l)| l + t)
                    .product::<f64>()
            })
            .sum();
        let newton = if df > 0.0 { t - ft / df } else { f64::NAN };
        t = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo).abs() <= 1e-12 * scale {
            break;
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub final_residual: f64,
    /// minimum over interior nodes of the smallest Garding eigenvalue of
    /// the centered Hessian at convergence (branch membership check).
    pub min_lambda1: f64,
    pub frame_count: usize,
}

fn node_residual(
    u: &GridField,
    flat: usize,
    mode: SolveMode,
    frames: &FrameSet,
    psi_values: &[f64],
) -> Result<f64> {
    match mode {
        SolveMode::Homogeneous => Ok(frame_min_trace(u, flat, frames).0),
        SolveMode::Inhomogeneous => {
            let spec = centered_hessian(u, flat)?.lag_spectrum()?;
            shift_residual(&spec, psi_values[flat])
        }
        SolveMode::Branch(k) => centered_hessian(u, flat)?.branch_value(k),
    }
}

pub fn solve_dirichlet(cfg: &SolveConfig) -> Result<(GridField, Diagnostics)> {
    let (grid, mut field) = build_domain(cfg)?;
    let frames = FrameSet::new(cfg.n, cfg.extra_frames, cfg.seed)?;
    let interior = grid.interior_nodes();
    let h2 = grid.h * grid.h;

    let mut psi_values = vec![0.0; grid.node_count()];
    if let SolveMode::Inhomogeneous = cfg.mode {
        let psi = cfg.psi.as_ref().expect("Inhomogeneous mode requires psi");
        for &flat in &interior {
            let v = psi.eval(&grid.point(flat))?;
            if v < 0.0 {
                return Err(Error::NegativePsi { psi: v });
            }
            psi_values[flat] = v;
        }
    }

    // sub-CFL explicit steps for the monotone scheme; smaller for the
    // non-monotone eigen-based sweeps
    let dt = match cfg.mode {
        SolveMode::Homogeneous => h2 / (2 * cfg.n + 1) as f64,
        _ => h2 / (4 * cfg.n + 2) as f64,
    };

    let mut iterations = 0;
    let mut final_residual = f64::INFINITY;
    let mut updates = vec![0.0; interior.len()];
    while iterations < cfg.max_iters {
        iterations += 1;
        let mut max_resid: f64 = 0.0;
        for (slot, &flat) in interior.iter().enumerate() {
            let r = node_residual(&field, flat, cfg.mode, &frames, &psi_values)?;
            max_resid = max_resid.max(r.abs());
            updates[slot] = match cfg.mode {
                SolveMode::Homogeneous => dt * r,
                SolveMode::Inhomogeneous => -dt * r,
                SolveMode::Branch(_) => dt * r,
            };
        }
        for (slot, &flat) in interior.iter().enumerate() {
            field.values[flat] += updates[slot];
        }
        final_residual = max_resid;
        let converged = match cfg.mode {
            SolveMode::Homogeneous => {
                updates.iter().fold(0.0f64, |a, u| a.max(u.abs())) < cfg.tol * h2
            }
            _ => max_resid < cfg.tol,
        };
        if converged {
            let mut min_lambda1 = f64::INFINITY;
            for &flat in &interior {
                let l1 = centered_hessian(&field, flat)?.garding_eigenvalues()?.eigenvalues[0];
                min_lambda1 = min_lambda1.min(l1);
            }
            return Ok((
                field,
                Diagnostics {
                    iterations,
                    final_residual,
                    min_lambda1,
                    frame_count: frames.len(),
                },
            ));
        }
    }
    Err(Error::NotConverged {
        iters: iterations,
        residual: final_residual,
    })
}

/// Per-interior-node residual of a (solved) field under the given mode:
/// frame minimum trace, shift residual, or branch eigenvalue.
pub fn residual_report(u: &GridField, cfg: &SolveConfig) -> Result<Vec<(usize, f64)>> {
    let frames = FrameSet::new(cfg.n, cfg.extra_frames, cfg.seed)?;
    let mut psi_values = vec![0.0; u.grid.node_count()];
    if let (SolveMode::Inhomogeneous, Some(psi)) = (cfg.mode, cfg.psi.as_ref()) {
        for flat in u.grid.interior_nodes() {
            psi_values[flat] = psi.eval(&u.grid.point(flat))?;
        }
    }
    u.grid
        .interior_nodes()
        .into_iter()
        .map(|flat| Ok((flat, node_residual(u, flat, cfg.mode, &frames, &psi_values)?)))
        .collect()
}

/// Max-norm error of the field against an exact expression, over interior
/// nodes.
pub fn max_error_vs(u: &GridField, exact: &ScalarField) -> Result<f64> {
    let mut err: f64 = 0.0;
    for flat in u.grid.interior_nodes() {
        let e = exact.eval(&u.grid.point(flat))?;
        err = err.max((u.values[flat] - e).abs());
    }
    Ok(err)
}

/// Sample a quadratic (or any expression) onto a fresh grid, keeping the
/// mask from cfg; used by consistency tests.
pub fn inject_field(cfg: &SolveConfig, expr: &ScalarField) -> Result<GridField> {
    let (grid, mut field) = build_domain(cfg)?;
    for flat in 0..grid.node_count() {
        if grid.mask[flat] != NodeKind::Exterior {
            field.values[flat] = expr.eval(&grid.point(flat))?;
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(src: &str, n: usize) -> ScalarField {
        ScalarField::parse(src, n).unwrap()
    }

    #[test]
    fn box_domain_counts() {
        let cfg = SolveConfig::boxed(1, 5, 0.0, 1.0, field("x1", 1));
        let (grid, _) = build_domain(&cfg).unwrap();
        let interior = grid.interior_nodes().len();
        let boundary = grid.mask.iter().filter(|&&m| m == NodeKind::Boundary).count();
        assert_eq!(interior, 9);
        assert_eq!(boundary, 16);
    }

    #[test]
    fn sublevel_mask_is_symmetric() {
        let mut cfg = SolveConfig::boxed(2, 11, -1.1, 1.1, field("0", 2));
        cfg.rho = Some(field("x1*x1 + y1*y1 + x2*x2 + y2*y2 - 1", 2));
        let (grid, _) = build_domain(&cfg).unwrap();
        assert!(!grid.interior_nodes().is_empty());
        // swapping the two complex coordinates permutes the mask onto itself
        for flat in 0..grid.node_count() {
            let mi = grid.multi(flat);
            let swapped = [mi[2], mi[3], mi[0], mi[1]];
            assert_eq!(grid.mask[flat], grid.mask[grid.flat(&swapped)]);
        }
    }

    #[test]
    fn boundary_values_exact() {
        let cfg = SolveConfig::boxed(1, 7, 0.0, 1.0, field("x1", 1));
        let (grid, f) = build_domain(&cfg).unwrap();
        for flat in 0..grid.node_count() {
            if grid.mask[flat] == NodeKind::Boundary {
                assert_eq!(f.values[flat], grid.point(flat)[0]);
            }
        }
    }

    #[test]
    fn second_difference_exact_on_quadratics() {
        let cfg = SolveConfig::boxed(1, 9, -1.0, 1.0, field("0", 1));
        let q = field("x1*x1 + 0.5*x1*y1 - y1*y1", 1);
        let u = inject_field(&cfg, &q).unwrap();
        let center = u.grid.flat(&[4, 4]);
        // axis directions hit nodes exactly
        let dxx = directional_second_difference(&u, center, &[1.0, 0.0], 1.0);
        let dyy = directional_second_difference(&u, center, &[0.0, 1.0], 1.0);
        assert!((dxx - 2.0).abs() < 1e-10);
        assert!((dyy + 2.0).abs() < 1e-10);
        // |x|^2 along any direction gives 2 up to interpolation error
        let r2 = field("x1*x1 + y1*y1", 1);
        let u = inject_field(&cfg, &r2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let dd = directional_second_difference(&u, center, &[s, s], 1.0);
        // bilinear interpolation reproduces x*y, so the diagonal second
        // difference of x^2+y^2 only sees the square terms' cell error
        assert!((dd - 2.0).abs() < 1.0);
        let dd = directional_second_difference(&u, center, &[1.0, 0.0], 1.0);
        assert!((dd - 2.0).abs() < 1e-10);
    }

    #[test]
    fn frame_min_trace_examples() {
        let mut cfg = SolveConfig::boxed(2, 7, -1.0, 1.0, field("0", 2));
        cfg.extra_frames = 3;
        let q = field("x1*x1 + x2*x2", 2);
        let (grid, _) = build_domain(&cfg).unwrap();
        let u = inject_field(&cfg, &q).unwrap();
        let frames = FrameSet::new(2, 3, 1).unwrap();
        let center = grid.flat(&[3, 3, 3, 3]);
        let (v, arg) = frame_min_trace(&u, center, &frames);
        // Hessian diag(2,0,2,0): the y-axes frame gives 0 exactly
        assert!(v.abs() < 1e-10, "got {v}");
        assert!(frames.h_frac[arg] == 1.0);

        let r2 = field("x1*x1 + y1*y1 + x2*x2 + y2*y2", 2);
        let u = inject_field(&cfg, &r2).unwrap();
        let axis_only = FrameSet::new(2, 0, 1).unwrap();
        let (v, _) = frame_min_trace(&u, center, &axis_only);
        assert!((v - 4.0).abs() < 1e-10);
    }

    #[test]
    fn shift_residual_examples() {
        let spec = SymForm::diag(2, &[1.0, 2.0, 3.0, 4.0]).lag_spectrum().unwrap();
        assert!(shift_residual(&spec, 600.0).unwrap().abs() < 1e-9);
        // psi = 0 returns -Lambda_1 exactly
        let t = shift_residual(&spec, 0.0).unwrap();
        assert!((t + 4.0).abs() < 1e-12);
        // n=1, Lambda = (1,1): (1+t)^2 = 4 at t = 1
        let spec = SymForm::identity(1).lag_spectrum().unwrap();
        assert!((shift_residual(&spec, 4.0).unwrap() - 1.0).abs() < 1e-10);
        assert!(matches!(
            shift_residual(&spec, -1.0),
            Err(Error::NegativePsi { .. })
        ));
    }

    #[test]
    fn injected_exact_solution_has_tiny_residual() {
        let mut cfg = SolveConfig::boxed(1, 17, -1.0, 1.0, field("x1*x1", 1));
        cfg.mode = SolveMode::Homogeneous;
        let u = inject_field(&cfg, &field("x1*x1", 1)).unwrap();
        for (_, r) in residual_report(&u, &cfg).unwrap() {
            assert!(r.abs() < 1e-9, "residual {r}");
        }
    }

    #[test]
    fn homogeneous_update_is_monotone() {
        // raising any neighbor never lowers the updated value
        let cfg = SolveConfig::boxed(1, 9, -1.0, 1.0, field("x1*x1 - y1*y1", 1));
        let mut u = inject_field(&cfg, &field("x1*x1 - y1*y1 + 0.3*x1*y1", 1)).unwrap();
        let frames = FrameSet::new(1, 2, 3).unwrap();
        let center = u.grid.flat(&[4, 4]);
        let h2 = u.grid.h * u.grid.h;
        let dt = h2 / 3.0;
        let base = u.values[center] + dt * frame_min_trace(&u, center, &frames).0;
        for other in 0..u.grid.node_count() {
            if other == center {
                continue;
            }
            let old = u.values[other];
            u.values[other] += 0.05;
            let bumped = u.values[center] + dt * frame_min_trace(&u, center, &frames).0;
            assert!(bumped >= base - 1e-12);
            u.values[other] = old;
        }
    }

    #[test]
    fn homogeneous_n1_reproduces_harmonic_quadratic() {
        let mut cfg = SolveConfig::boxed(1, 17, -1.0, 1.0, field("x1*x1", 1));
        cfg.tol = 1e-6;
        let (u, diag) = solve_dirichlet(&cfg).unwrap();
        // Lambda_1(diag(2,0)) = 0: x1^2 solves the homogeneous equation
        let err = max_error_vs(&u, &field("x1*x1", 1)).unwrap();
        assert!(err < 5e-3, "error {err} after {} iters", diag.iterations);
        assert!(diag.min_lambda1 > -1e-3);
        // maximum principle: interior values below the boundary maximum
        let bmax = u
            .grid
            .mask
            .iter()
            .enumerate()
            .filter(|(_, m)| **m == NodeKind::Boundary)
            .map(|(i, _)| u.values[i])
            .fold(f64::NEG_INFINITY, f64::max);
        for flat in u.grid.interior_nodes() {
            assert!(u.values[flat] <= bmax + 1e-9);
        }
    }

    #[test]
    fn inhomogeneous_n1_manufactured() {
        let mut cfg = SolveConfig::boxed(
            1,
            17,
            -1.0,
            1.0,
            field("0.5 * (x1*x1 + y1*y1)", 1),
        );
        cfg.mode = SolveMode::Inhomogeneous;
        cfg.psi = Some(field("1", 1));
        cfg.tol = 1e-9;
        let (u, _) = solve_dirichlet(&cfg).unwrap();
        let err = max_error_vs(&u, &field("0.5 * (x1*x1 + y1*y1)", 1)).unwrap();
        assert!(err < 1e-6, "error {err}");
    }

    #[test]
    fn branch_duality() {
        // Branch(2^n) on phi is the negative of Branch(1) on -phi
        let mut a = SolveConfig::boxed(1, 9, -1.0, 1.0, field("x1*x1 - 0.5*y1*y1", 1));
        a.mode = SolveMode::Branch(2);
        a.tol = 1e-8;
        let (ua, _) = solve_dirichlet(&a).unwrap();
        let mut b = SolveConfig::boxed(1, 9, -1.0, 1.0, field("-(x1*x1 - 0.5*y1*y1)", 1));
        b.mode = SolveMode::Branch(1);
        b.tol = 1e-8;
        let (ub, _) = solve_dirichlet(&b).unwrap();
        for flat in ua.grid.interior_nodes() {
            assert!((ua.values[flat] + ub.values[flat]).abs() < 1e-5);
        }
    }

    #[test]
    fn inhomogeneous_comparison() {
        // psi >= psi' pointwise => u <= u'
        let base = SolveConfig::boxed(1, 9, -1.0, 1.0, field("0.5*(x1*x1 + y1*y1)", 1));
        let mut big = base.clone();
        big.mode = SolveMode::Inhomogeneous;
        big.psi = Some(field("1.5", 1));
        big.tol = 1e-9;
        let mut small = base;
        small.mode = SolveMode::Inhomogeneous;
        small.psi = Some(field("0.5", 1));
        small.tol = 1e-9;
        let (ub, _) = solve_dirichlet(&big).unwrap();
        let (us, _) = solve_dirichlet(&small).unwrap();
        for flat in ub.grid.interior_nodes() {
            assert!(ub.values[flat] <= us.values[flat] + 1e-6);
        }
    }

    #[test]
    fn negative_psi_rejected() {
        let mut cfg = SolveConfig::boxed(1, 9, -1.0, 1.0, field("0", 1));
        cfg.mode = SolveMode::Inhomogeneous;
        cfg.psi = Some(field("-1", 1));
        assert!(matches!(
            solve_dirichlet(&cfg),
            Err(Error::NegativePsi { .. })
        ));
    }

    #[test]
    fn not_converged_reported() {
        let mut cfg = SolveConfig::boxed(1, 17, -1.0, 1.0, field("x1*x1", 1));
        cfg.max_iters = 3;
        cfg.tol = 1e-12;
        assert!(matches!(
            solve_dirichlet(&cfg),
            Err(Error::NotConverged { iters: 3, .. })
        ));
    }
}
