//! Batch driver: every library capability behind a subcommand, JSON in,
//! JSON/CSV/PGM out, with a manifest hashing every artifact.
//!
//! Exit codes: 0 success, 1 computational failure on valid input (written
//! as machine-readable error JSON), 2 config or parse errors.

use clap::Parser;
use lagma_core::boundary::{self, ScalarField, Shell};
use lagma_core::constructions;
use lagma_core::laggrass;
use lagma_core::pluriharm::{self, HermQuadratic, HullVerdict};
use lagma_core::solver::{self, NodeKind, SolveConfig, SolveMode};
use lagma_core::SymForm;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "lagma", version, about = "Lagrangian Monge-Ampere toolkit")]
struct Cli {
    /// eval | crosscheck | oracle | pluriharmonic | boundary | solve |
    /// freeness | hull
    subcommand: String,
    /// path to the JSON configuration
    #[arg(long)]
    config: PathBuf,
    /// output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
    /// overrides the seed in the config
    #[arg(long)]
    seed: Option<u64>,
    /// accepted for compatibility; execution is single-threaded so results
    /// never depend on it
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = false)]
    quiet: bool,
}

enum Failure {
    /// exit 2: bad config, schema violation, expression parse error
    Config(String),
    /// exit 1: valid input, failed computation
    Compute(String),
}

impl From<lagma_core::Error> for Failure {
    fn from(e: lagma_core::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>, // (name, sha256)
}

impl Outputs {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| Failure::Compute(format!("writing {}: {e}", path.display())))?;
        let mut h = Sha256::new();
        h.update(bytes);
        self.files.push((name.to_string(), format!("{:x}", h.finalize())));
        Ok(())
    }

    fn write_json(&mut self, name: &str, v: &Value) -> Result<(), Failure> {
        let mut s = serde_json::to_string_pretty(v).expect("plain data");
        s.push('\n');
        self.write(name, s.as_bytes())
    }
}

fn matrix_from_config(n: usize, rows: &[Vec<f64>]) -> Result<SymForm, Failure> {
    SymForm::from_rows(n, rows).map_err(config_err)
}

fn sym_report(a: &SymForm) -> Result<Value, Failure> {
    let spec = a.lag_spectrum()?;
    let garding = a.garding_eigenvalues()?;
    let flags = a.cone_membership(a.default_tol())?;
    Ok(json!({
        "n": a.n(),
        "mu": spec.mu,
        "lambdas": spec.lambdas,
        "garding": garding.eigenvalues,
        "m_lag": a.m_lag()?,
        "canonical_op": a.canonical_op()?,
        "membership": {
            "in_p_lag": flags.in_p_lag,
            "in_interior_p_lag": flags.in_interior_p_lag,
            "in_dual": flags.in_dual,
            "in_edge": flags.in_edge,
            "in_p_plus": flags.in_p_plus,
        },
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalConfig {
    n: usize,
    matrix: Vec<Vec<f64>>,
}

fn cmd_eval(cfg: Value, out: &mut Outputs) -> Result<Value, Failure> {
    let cfg: EvalConfig = serde_json::from_value(cfg).map_err(config_err)?;
    let a = matrix_from_config(cfg.n, &cfg.matrix)?;
    let report = sym_report(&a)?;
    out.write_json("eval.json", &report)?;
    Ok(report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CrosscheckConfig {
    n: usize,
    matrix: Option<Vec<Vec<f64>>>,
    /// random instances when no matrix is given
    samples: Option<usize>,
    seed: Option<u64>,
}

fn crosscheck_one(a: &SymForm) -> Result<Value, Failure> {
    let product = a.m_lag()?;
    let derivation = constructions::axis_restricted_det(a)?;
    let spinor = constructions::spinor_det(a)?;
    let scale = product.abs().max(1.0);
    let max_rel_gap = ((product - derivation).abs().max((product - spinor.re).abs())) / scale;
    Ok(json!({
        "product": product,
        "derivation_det": derivation,
        "spinor_det_re": spinor.re,
        "spinor_det_im": spinor.im,
        "max_rel_gap": max_rel_gap,
    }))
}

fn cmd_crosscheck(cfg: Value, out: &mut Outputs, seed: u64) -> Result<Value, Failure> {
    let cfg: CrosscheckConfig = serde_json::from_value(cfg).map_err(config_err)?;
    let report = match (&cfg.matrix, cfg.samples) {
        (Some(rows), _) => {
            let a = matrix_from_config(cfg.n, rows)?;
            crosscheck_one(&a)?
        }
        (None, Some(k)) => {
            let mut rng =
                lagma_core::numlin::SplitMix64::new(cfg.seed.unwrap_or(seed));
            let mut worst = 0.0f64;
            let mut results = Vec::with_capacity(k);
            for _ in 0..k {
                let a = SymForm::random(cfg.n, &mut rng);
                let r = crosscheck_one(&a)?;
                worst = worst.max(r["max_rel_gap"].as_f64().unwrap());
                results.push(r);
            }
            json!({"samples": k, "worst_rel_gap": worst, "results": results})
        }
        (None, None) => {
            return Err(Failure::Config(
                "crosscheck needs either \"matrix\" or \"samples\"".to_string(),
            ))
        }
    };
    out.write_json("crosscheck.json", &report)?;
    Ok(report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleConfig {
    n: usize,
    matrix: Vec<Vec<f64>>,
    frames: usize,
    seed: Option<u64>,
}

fn cmd_oracle(cfg: Value, out: &mut Outputs, seed: u64) -> Result<Value, Failure> {
    let cfg: OracleConfig = serde_json::from_value(cfg).map_err(config_err)?;
    let a = matrix_from_config(cfg.n, &cfg.matrix)?;
    let lambda1 = a.garding_eigenvalues()?.eigenvalues[0];
    let (sampled, frame) = laggrass::sampled_min_trace(&a, cfg.frames, cfg.seed.unwrap_or(seed))?;
    let cols: Vec<Vec<f64>> = (0..cfg.n).map(|j| frame.column(j)).collect();
    let report = json!({
        "lambda1": lambda1,
        "sampled_min": sampled,
        "gap": sampled - lambda1,
        "frames": cfg.frames,
        "argmin_frame_columns": cols,
    });
    out.write_json("oracle.json", &report)?;
    Ok(report)
}

fn cmd_pluriharmonic(cfg: Value, out: &mut Outputs) -> Result<Value, Failure> {
    let src = serde_json::to_string(&cfg).expect("plain data");
    let h: HermQuadratic = HermQuadratic::from_json(&src).map_err(config_err)?;
    let hess = pluriharm::real_hessian(&h);
    let flags = hess.cone_membership(hess.default_tol())?;
    let (_, round_trip_residual) = pluriharm::edge_to_hermitian(&hess);
    let rows: Vec<Vec<f64>> = (0..hess.dim())
        .map(|i| (0..hess.dim()).map(|j| hess.matrix()[(i, j)]).collect())
        .collect();
    let report = json!({
        "real_hessian": rows,
        "in_edge": flags.in_edge,
        "edge_round_trip_residual": round_trip_residual,
        "skew_norm": hess.decompose().skew.norm(),
        "trace": hess.trace(),
    });
    out.write_json("pluriharmonic.json", &report)?;
    Ok(report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryConfig {
    n: usize,
    rho: String,
    /// explicit boundary probes, or a count to generate by projection
    probes: Option<Vec<Vec<f64>>>,
    probe_count: Option<usize>,
    bbox: Option<Vec<(f64, f64)>>,
    tol: Option<f64>,
    seed: Option<u64>,
    shell: Option<ShellConfig>,
    csv: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ShellConfig {
    delta_min: f64,
    delta_max: f64,
    probes: usize,
}

fn cmd_boundary(cfg: Value, out: &mut Outputs, seed: u64) -> Result<Value, Failure> {
    let cfg: BoundaryConfig = serde_json::from_value(cfg).map_err(config_err)?;
    let rho = ScalarField::parse(&cfg.rho, cfg.n).map_err(config_err)?;
    let bbox = cfg.bbox.unwrap_or(vec![(-2.0, 2.0); 2 * cfg.n]);
    if bbox.len() != 2 * cfg.n {
        return Err(Failure::Config(format!(
            "bbox needs {} axis ranges, got {}",
            2 * cfg.n,
            bbox.len()
        )));
    }
    let seed = cfg.seed.unwrap_or(seed);
    let probes = match (cfg.probes, cfg.probe_count) {
        (Some(p), _) => p,
        (None, Some(k)) => boundary::sample_boundary_probes(&rho, &bbox, k, seed)?,
        (None, None) => boundary::sample_boundary_probes(&rho, &bbox, 50, seed)?,
    };
    let tol = cfg.tol.unwrap_or(1e-7);
    let report = boundary::boundary_convexity_report(&rho, &probes, tol)?;
    let mut doc = serde_json::to_value(&report).expect("plain data");
    if let Some(shell) = cfg.shell {
        let sh = Shell {
            delta_min: shell.delta_min,
            delta_max: shell.delta_max,
        };
        let barrier = boundary::barrier_check(&rho, sh, &bbox, shell.probes, seed)?;
        doc["barrier"] = serde_json::to_value(&barrier).expect("plain data");
    }
    if cfg.csv.unwrap_or(false) {
        let mut csv = String::from("min_tangential_trace,grad_norm,sff_trace_form,point\n");
        for i in 0..report.points.len() {
            csv.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},\"{}\"\n",
                report.min_tangential_trace[i],
                report.grad_norm[i],
                report.sff_trace_form[i],
                report.points[i]
                    .iter()
                    .map(|v| format!("{v:.17e}"))
                    .collect::<Vec<_>>()
                    .join(";")
            ));
        }
        out.write("boundary.csv", csv.as_bytes())?;
    }
    out.write_json("boundary.json", &doc)?;
    Ok(doc)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveFileConfig {
    n: usize,
    m: usize,
    domain: DomainConfig,
    mode: String,
    k: Option<usize>,
    psi: Option<String>,
    phi: String,
    frames: Option<FramesConfig>,
    tol: Option<f64>,
    max_iters: Option<usize>,
    outputs: Option<Vec<String>>,
    /// optional exact solution for an error summary
    exact: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainConfig {
    #[serde(rename = "box")]
    bbox: Vec<(f64, f64)>,
    rho: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FramesConfig {
    extra: usize,
    seed: u64,
}

fn cmd_solve(cfg: Value, out: &mut Outputs, seed: u64, quiet: bool) -> Result<Value, Failure> {
    let cfg: SolveFileConfig = serde_json::from_value(cfg).map_err(config_err)?;
    let n = cfg.n;
    let mode = match cfg.mode.as_str() {
        "homogeneous" => SolveMode::Homogeneous,
        "inhomogeneous" => SolveMode::Inhomogeneous,
        "branch" => SolveMode::Branch(cfg.k.ok_or_else(|| {
            Failure::Config("branch mode requires \"k\"".to_string())
        })?),
        other => {
            return Err(Failure::Config(format!(
                "unknown mode \"{other}\" (homogeneous | inhomogeneous | branch)"
            )))
        }
    };
    if cfg.domain.bbox.len() != 2 * n {
        return Err(Failure::Config(format!(
            "domain box needs {} axis ranges",
            2 * n
        )));
    }
    let frames = cfg.frames.unwrap_or(FramesConfig {
        extra: 0,
        seed,
    });
    let solve_cfg = SolveConfig {
        n,
        m: cfg.m,
        bbox: cfg.domain.bbox.clone(),
        rho: match &cfg.domain.rho {
            Some(src) => Some(ScalarField::parse(src, n).map_err(config_err)?),
            None => None,
        },
        phi: ScalarField::parse(&cfg.phi, n).map_err(config_err)?,
        mode,
        psi: match &cfg.psi {
            Some(src) => Some(ScalarField::parse(src, n).map_err(config_err)?),
            None => None,
        },
        extra_frames: frames.extra,
        seed: frames.seed,
        tol: cfg.tol.unwrap_or(1e-8),
        max_iters: cfg.max_iters.unwrap_or(if n == 1 { 1_000_000 } else { 100_000 }),
    };
    if mode == SolveMode::Inhomogeneous && solve_cfg.psi.is_none() {
        return Err(Failure::Config(
            "inhomogeneous mode requires \"psi\"".to_string(),
        ));
    }
    let (field, diag) = solver::solve_dirichlet(&solve_cfg)?;
    let residuals = solver::residual_report(&field, &solve_cfg)?;
    let mut resid_by_node = vec![f64::NAN; field.grid.node_count()];
    for &(flat, r) in &residuals {
        resid_by_node[flat] = r;
    }
    let max_residual = residuals
        .iter()
        .fold(0.0f64, |a, &(_, r)| a.max(r.abs()));

    let mut doc = json!({
        "diagnostics": {
            "iterations": diag.iterations,
            "final_residual": diag.final_residual,
            "min_lambda1": diag.min_lambda1,
            "frame_count": diag.frame_count,
            "max_residual": max_residual,
            "grid": {"m": cfg.m, "h": field.grid.h,
                     "interior": field.grid.interior_nodes().len()},
        },
    });
    if let Some(exact_src) = &cfg.exact {
        let exact = ScalarField::parse(exact_src, n).map_err(config_err)?;
        doc["error_vs_exact"] = json!(solver::max_error_vs(&field, &exact)?);
    }

    let wanted = cfg.outputs.unwrap_or_else(|| vec!["json".to_string(), "csv".to_string()]);
    for kind in &wanted {
        match kind.as_str() {
            "json" => {}
            "csv" => {
                let mut csv = String::new();
                let dim = field.grid.dim();
                for i in 0..dim {
                    csv.push_str(&format!("c{i},"));
                }
                csv.push_str("value,residual,kind\n");
                for flat in 0..field.grid.node_count() {
                    let kind = field.grid.mask[flat];
                    if kind == NodeKind::Exterior {
                        continue;
                    }
                    for c in field.grid.point(flat) {
                        csv.push_str(&format!("{c:.17e},"));
                    }
                    let r = resid_by_node[flat];
                    csv.push_str(&format!(
                        "{:.17e},{},{:?}\n",
                        field.values[flat],
                        if r.is_nan() { "".to_string() } else { format!("{r:.17e}") },
                        kind
                    ));
                }
                out.write("solution.csv", csv.as_bytes())?;
            }
            "pgm-slices" => {
                write_pgm_slices(&field, out)?;
            }
            other => {
                return Err(Failure::Config(format!(
                    "unknown output kind \"{other}\" (json | csv | pgm-slices)"
                )))
            }
        }
    }
    out.write_json("solve.json", &doc)?;
    if !quiet {
        println!(
            "solved in {} iterations, residual {:.3e}",
            diag.iterations, diag.final_residual
        );
    }
    Ok(doc)
}

/// 2-D slice images through the solution: axes (0, 1) varying, every other
/// coordinate pinned to the middle index. 8-bit min-max normalized P5, with
/// the normalization recorded in a sidecar.
fn write_pgm_slices(field: &solver::GridField, out: &mut Outputs) -> Result<(), Failure> {
    let g = &field.grid;
    let m = g.m;
    let mid = m / 2;
    let mut mi = vec![mid; g.dim()];
    let mut values = Vec::with_capacity(m * m);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in 0..m {
        for col in 0..m {
            mi[0] = col;
            mi[1] = row;
            let flat = g.flat(&mi);
            let v = if g.mask[flat] == NodeKind::Exterior {
                f64::NAN
            } else {
                field.values[flat]
            };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            values.push(v);
        }
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut pgm = format!("P5\n{m} {m}\n255\n").into_bytes();
    for v in &values {
        let byte = if v.is_finite() {
            (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8
        } else {
            0
        };
        pgm.push(byte);
    }
    out.write("slice_01.pgm", &pgm)?;
    out.write_json(
        "slice_01.json",
        &json!({
            "axes": [0, 1],
            "fixed_index": mid,
            "min": lo,
            "max": hi,
            "exterior_byte": 0,
        }),
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FreenessConfig {
    n: usize,
    columns: Vec<Vec<f64>>,
}

fn cmd_freeness(cfg: Value, out: &mut Outputs) -> Result<Value, Failure> {
    let cfg: FreenessConfig = serde_json::from_value(cfg).map_err(config_err)?;
    let (lambda1, free) = pluriharm::freeness(&cfg.columns, cfg.n)?;
    let report = json!({"lambda1": lambda1, "free": free});
    out.write_json("freeness.json", &report)?;
    Ok(report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HullConfig {
    n: usize,
    k_points: Vec<Vec<f64>>,
    x: Vec<f64>,
    samples: usize,
    seed: Option<u64>,
}

fn cmd_hull(cfg: Value, out: &mut Outputs, seed: u64) -> Result<Value, Failure> {
    let cfg: HullConfig = serde_json::from_value(cfg).map_err(config_err)?;
    if cfg.x.len() != 2 * cfg.n || cfg.k_points.iter().any(|p| p.len() != 2 * cfg.n) {
        return Err(Failure::Config("points must have 2n coordinates".to_string()));
    }
    let verdict = pluriharm::sampled_hull_test(
        &cfg.k_points,
        &cfg.x,
        cfg.samples,
        cfg.seed.unwrap_or(seed),
    );
    let report = match verdict {
        HullVerdict::Undecided => json!({"verdict": "Undecided"}),
        HullVerdict::RejectedWithWitness(q) => {
            // re-verify before reporting: the witness must separate strictly
            let qx = q.eval(&cfg.x);
            let maxk = cfg
                .k_points
                .iter()
                .map(|p| q.eval(p))
                .fold(f64::NEG_INFINITY, f64::max);
            json!({
                "verdict": "RejectedWithWitness",
                "witness": {
                    "center": q.center,
                    "linear": q.linear,
                    "quad": (0..q.quad.dim()).map(|i| {
                        (0..q.quad.dim()).map(|j| q.quad.matrix()[(i, j)]).collect::<Vec<f64>>()
                    }).collect::<Vec<_>>(),
                    "value_at_x": qx,
                    "max_on_k": maxk,
                },
            })
        }
    };
    out.write_json("hull.json", &report)?;
    Ok(report)
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    version: &'a str,
    seed: u64,
    threads: usize,
    wall_time_ms: u64,
    config: Value,
    outputs: Vec<ManifestEntry>,
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let started = Instant::now();
    let raw = std::fs::read_to_string(&cli.config)
        .map_err(|e| Failure::Config(format!("reading {}: {e}", cli.config.display())))?;
    let cfg: Value = serde_json::from_str(&raw).map_err(config_err)?;
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Failure::Config(format!("creating {}: {e}", cli.out.display())))?;
    let seed = cli.seed.unwrap_or(0);
    let mut out = Outputs {
        dir: cli.out.clone(),
        files: Vec::new(),
    };
    let summary = match cli.subcommand.as_str() {
        "eval" => cmd_eval(cfg.clone(), &mut out)?,
        "crosscheck" => cmd_crosscheck(cfg.clone(), &mut out, seed)?,
        "oracle" => cmd_oracle(cfg.clone(), &mut out, seed)?,
        "pluriharmonic" => cmd_pluriharmonic(cfg.clone(), &mut out)?,
        "boundary" => cmd_boundary(cfg.clone(), &mut out, seed)?,
        "solve" => cmd_solve(cfg.clone(), &mut out, seed, cli.quiet)?,
        "freeness" => cmd_freeness(cfg.clone(), &mut out)?,
        "hull" => cmd_hull(cfg.clone(), &mut out, seed)?,
        other => {
            return Err(Failure::Config(format!(
                "unknown subcommand \"{other}\" (eval | crosscheck | oracle | \
                 pluriharmonic | boundary | solve | freeness | hull)"
            )))
        }
    };
    if !cli.quiet && cli.subcommand != "solve" {
        println!("{}", serde_json::to_string_pretty(&summary).expect("plain data"));
    }
    let manifest = Manifest {
        subcommand: &cli.subcommand,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        threads: cli.threads,
        wall_time_ms: started.elapsed().as_millis() as u64,
        config: cfg,
        outputs: out
            .files
            .iter()
            .map(|(p, h)| ManifestEntry {
                path: p.clone(),
                sha256: h.clone(),
            })
            .collect(),
    };
    let path = cli.out.join("manifest.json");
    let mut body = serde_json::to_string_pretty(&manifest).expect("plain data");
    body.push('\n');
    std::fs::write(&path, body)
        .map_err(|e| Failure::Compute(format!("writing {}: {e}", path.display())))?;
    Ok(())
}

fn write_error_json(dir: &Path, kind: &str, msg: &str) {
    let doc = json!({"error": {"kind": kind, "message": msg}});
    let _ = std::fs::create_dir_all(dir);
    let _ = std::fs::write(
        dir.join("error.json"),
        serde_json::to_string_pretty(&doc).expect("plain data"),
    );
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => {}
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            write_error_json(&cli.out, "compute", &msg);
            std::process::exit(1);
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            write_error_json(&cli.out, "config", &msg);
            std::process::exit(2);
        }
    }
}
