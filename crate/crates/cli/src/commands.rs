//! The three subcommands. Each returns an exit status and a JSON report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use slag_core::catalog::blocks::{decoy_surface, default_block, holomorphic_to_slag};
use slag_core::catalog::{build_immersion, verify_case, CaseName};
use slag_core::frame::io::write_immersion_csv;
use slag_core::frame::{
    alignment_map, certify_reconstruction, compatibility_check, integrate_frame, integrate_path, DiscreteImmersion,
    FrameSource, FrameState, GenericSource, ImmersionSource, IntegrateOptions, ReconstructionGrid,
};
use slag_core::geometry::{HolomorphicFn, ParamBox};
use slag_core::kfield::io::{read_csv, read_meta, write_csv, write_meta, KFieldsMeta};
use slag_core::kfield::newton::newton_run;
use slag_core::kfield::scan::StBox;
use slag_core::kfield::{
    constant_solution, constraint_residual, degeneracy_scan, Bc, Grid, KFields, NewtonOptions, SystemId,
};
use slag_core::Error;

use crate::config::{BlockChoice, ConfigError, Init, ReconstructConfig, ReconstructSource, SolveConfig, VerifyConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

// per-node errors kept in a report
const MAX_LISTED: usize = 20;

/// What a command produced: exit status, the report, and the path the
/// report belongs at (None prints it to stdout).
pub struct Outcome {
    pub code: u8,
    pub report: Value,
    pub report_path: Option<PathBuf>,
    pub summary: String,
}

/// A residual that failed, with where it happened.
#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub name: String,
    pub value: f64,
    pub location: Vec<f64>,
}

/// Errors that abort a command before it produces a report.
pub enum CmdError {
    Config(ConfigError),
    Io(String),
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        CmdError::Config(e)
    }
}

fn config(msg: impl Into<String>) -> CmdError {
    CmdError::Config(ConfigError(msg.into()))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CmdError {
    CmdError::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CmdError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

pub fn cmd_verify(cfg: &VerifyConfig, out: Option<PathBuf>) -> Result<Outcome, CmdError> {
    let block = match &cfg.block {
        BlockChoice::Default => default_block(cfg.case.block_kind()),
        BlockChoice::Decoy => decoy_surface(),
        BlockChoice::Holomorphic(src) => HolomorphicFn::parse(src)
            .and_then(|f| holomorphic_to_slag(&f, ParamBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]))),
    }
    .map_err(|e| config(format!("block: {e}")))?;
    let mut rep = match verify_case(cfg.case, &block, cfg.grid, &cfg.tol) {
        Ok(r) => r,
        Err(e @ Error::BlockMismatch { .. }) => return Err(config(e.to_string())),
        Err(e) => {
            return Ok(Outcome {
                code: EXIT_FAILED,
                report: json!({ "case": cfg.case, "passed": false, "error": e.to_string() }),
                report_path: out,
                summary: format!("verify {}: {e}", cfg.case),
            })
        }
    };
    let summary = if rep.passed {
        format!("verify {}: passed", cfg.case)
    } else {
        let names: Vec<&str> = rep.failures.iter().map(|f| f.name.as_str()).collect();
        format!("verify {}: FAILED ({})", cfg.case, names.join(", "))
    };
    let n_err = rep.errors.len();
    rep.errors.truncate(MAX_LISTED);
    let mut report = serde_json::to_value(&rep).expect("report serializes");
    report["error_count"] = json!(n_err);
    Ok(Outcome {
        code: if rep.passed { EXIT_OK } else { EXIT_FAILED },
        report,
        report_path: out,
        summary,
    })
}

/// Smooth seeded perturbation: a few low Fourier modes with random
/// coefficients, scaled to max amplitude `amp` over the unit square.
fn perturbation(seed: u64, field: usize, amp: f64) -> impl Fn(f64, f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(4).wrapping_add(field as u64));
    let coef: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let norm: f64 = coef.iter().map(|c| c.0.abs() + c.1.abs()).sum::<f64>().max(1e-12);
    move |u, v| {
        let mut s = 0.0;
        for (q, c) in coef.iter().enumerate() {
            let (m, n) = ((q / 2 + 1) as f64, (q % 2 + 1) as f64);
            s += c.0 * (2.0 * PI * m * u + c.2).sin() * (2.0 * PI * n * v + c.3).sin();
            s += c.1 * (2.0 * PI * (m * u + n * v) + c.2).cos();
        }
        amp * s / norm
    }
}

fn solve_paths(out: Option<PathBuf>) -> (PathBuf, PathBuf, PathBuf) {
    let csv = out.unwrap_or_else(|| PathBuf::from("kfields.csv"));
    (
        csv.clone(),
        csv.with_extension("json"),
        csv.with_extension("report.json"),
    )
}

fn write_fields(k: &KFields, meta: &KFieldsMeta, csv: &Path, side: &Path) -> Result<(), CmdError> {
    write_csv(k, create(csv)?).map_err(|e| io_err(csv, e))?;
    write_meta(meta, create(side)?).map_err(|e| io_err(side, e))
}

fn no_constant(sys: SystemId, e: &Error, report_path: PathBuf) -> Outcome {
    let msg = match e {
        Error::NonConvergence {
            diagnostic: Some(d), ..
        } => d.clone(),
        _ => e.to_string(),
    };
    let failure = Failure {
        name: "constant_solution".into(),
        value: f64::NAN,
        location: Vec::new(),
    };
    Outcome {
        code: EXIT_FAILED,
        report: json!({ "system": sys, "converged": false, "error": msg, "failure": failure }),
        report_path: Some(report_path),
        summary: format!("solve {sys}: {msg}"),
    }
}

pub fn cmd_solve(cfg: &SolveConfig, out: Option<PathBuf>) -> Result<Outcome, CmdError> {
    let sys = cfg.system;
    let grid = match cfg.bc {
        Bc::Periodic => Grid::unit_periodic(cfg.grid),
        Bc::Dirichlet => Grid::unit_closed(cfg.grid),
    };
    let (csv, side, report_path) = solve_paths(out);
    let files = json!({ "fields": csv, "meta": side });
    let constant = constant_solution(sys);
    let start = match (cfg.init, &constant) {
        (Init::Zero, _) => [0.0; 4],
        (Init::Constant, Ok(c)) => *c,
        (Init::Constant, Err(e)) => return Ok(no_constant(sys, e, report_path)),
    };

    if cfg.constant_only {
        let c = match constant {
            Ok(c) => c,
            Err(e) => return Ok(no_constant(sys, &e, report_path)),
        };
        let k = KFields::constant(grid, cfg.bc, c);
        let (res, worst) = constraint_residual(sys, &k).max_abs();
        let deg = degeneracy_scan(sys, &k, cfg.sign, &StBox::default());
        let meta = KFieldsMeta {
            system: sys,
            bc: cfg.bc,
            grid,
            residual_history: vec![res],
        };
        write_fields(&k, &meta, &csv, &side)?;
        let ok = res < cfg.tol;
        return Ok(Outcome {
            code: if ok { EXIT_OK } else { EXIT_FAILED },
            report: json!({
                "system": sys,
                "constant": &c[..sys.n_fields()],
                "converged": ok,
                "residual": res,
                "worst_node": worst.map(|n| [n % grid.nu, n / grid.nu]),
                "degeneracy": deg,
                "files": files,
            }),
            report_path: Some(report_path),
            summary: format!("solve {sys}: constant solution, residual {res:e}"),
        });
    }

    let pert: Vec<_> = (0..4).map(|m| perturbation(cfg.seed, m, cfg.perturb)).collect();
    let nf = sys.n_fields();
    let k0 = KFields::from_fn(grid, cfg.bc, |u, v| {
        std::array::from_fn(|m| if m < nf { start[m] + pert[m](u, v) } else { 0.0 })
    });
    let opts = NewtonOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        ..Default::default()
    };
    let rep = newton_run(sys, &k0, &opts);
    let deg = degeneracy_scan(sys, &rep.fields, cfg.sign, &StBox::default());
    let meta = KFieldsMeta {
        system: sys,
        bc: cfg.bc,
        grid,
        residual_history: rep.history.clone(),
    };
    // fields and history are written whether or not Newton converged
    write_fields(&rep.fields, &meta, &csv, &side)?;
    let last = rep.history.last().copied().unwrap_or(f64::NAN);
    let failure = (!rep.converged).then(|| Failure {
        name: "constraint_residual".into(),
        value: last,
        location: rep
            .worst_node
            .map(|(i, j)| {
                let (u, v) = grid.coords(j * grid.nu + i);
                vec![u, v]
            })
            .unwrap_or_default(),
    });
    for m in &deg.messages {
        eprintln!("{m}");
    }
    let summary = match &rep.error {
        None => format!(
            "solve {sys}: converged in {} iterations, residual {last:e}",
            rep.iterations
        ),
        Some(e) => format!("solve {sys}: {e}"),
    };
    Ok(Outcome {
        code: if rep.converged { EXIT_OK } else { EXIT_FAILED },
        report: json!({
            "system": sys,
            "grid": grid,
            "bc": cfg.bc,
            "sign": cfg.sign,
            "init": cfg.init,
            "perturb": cfg.perturb,
            "seed": cfg.seed,
            "converged": rep.converged,
            "iterations": rep.iterations,
            "history": rep.history,
            "steps": rep.steps,
            "gmres_iterations": rep.gmres_iterations,
            "worst_node": rep.worst_node,
            "error": rep.error.as_ref().map(|e| e.to_string()),
            "failure": failure,
            "degeneracy": deg,
            "files": files,
        }),
        report_path: Some(report_path),
        summary,
    })
}

fn orders(vals: &[f64]) -> Vec<f64> {
    vals.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// The same box at steps 4h, 2h, h.
fn refinements(grid: &ReconstructionGrid) -> Vec<ReconstructionGrid> {
    [4usize, 2, 1]
        .iter()
        .map(|&j| {
            let mut g = grid.clone();
            g.step = grid.step.map(|h| h * j as f64);
            g.count = grid.count.map(|c| (c - 1) / j + 1);
            g
        })
        .collect()
}

struct Recon {
    rec: Option<DiscreteImmersion>,
    report: serde_json::Map<String, Value>,
    failures: Vec<Failure>,
}

/// Integration, drift, compatibility study and certification shared by
/// both reconstruction sources.
fn reconstruct_common<S: FrameSource>(
    src: &S,
    grid: &ReconstructionGrid,
    cfg: &ReconstructConfig,
) -> Result<Recon, CmdError> {
    let init = FrameState::standard(&src.ambient()).map_err(|e| config(e.to_string()))?;
    let opts = IntegrateOptions {
        drift_limit: cfg.tol_drift,
        reproject: cfg.reproject,
    };
    let mut report = serde_json::Map::new();
    let mut failures = Vec::new();
    report.insert("grid".into(), json!(grid));
    report.insert("reprojected".into(), json!(cfg.reproject));

    let mut compat = Vec::new();
    for g in refinements(grid) {
        match compatibility_check(src, &g, &init) {
            Ok(m) => compat.push(json!({ "step": g.step[2], "mismatch": m })),
            Err(e) => {
                failures.push(Failure {
                    name: "compatibility".into(),
                    value: f64::INFINITY,
                    location: g.origin.to_vec(),
                });
                report.insert("error".into(), json!(e.to_string()));
                report.insert("compatibility".into(), json!(compat));
                return Ok(Recon {
                    rec: None,
                    report,
                    failures,
                });
            }
        }
    }
    let mism: Vec<f64> = compat
        .iter()
        .map(|c| c["mismatch"].as_f64().unwrap_or(f64::NAN))
        .collect();
    let last = *mism.last().expect("three refinements");
    if !(last <= cfg.tol_compat) {
        failures.push(Failure {
            name: "compatibility".into(),
            value: last,
            location: grid.point(grid.count.map(|c| c - 1)).to_vec(),
        });
    }
    report.insert("compatibility".into(), json!(compat));
    report.insert("compatibility_orders".into(), json!(orders(&mism)));

    let rec = match integrate_frame(src, grid, &init, &opts) {
        Ok(r) => r,
        Err(Error::InvariantDrift { drift, node, .. }) => {
            let m = [node[0], node[1], node[2], node[3]];
            failures.push(Failure {
                name: "invariant_drift".into(),
                value: drift,
                location: grid.point(m).to_vec(),
            });
            return Ok(Recon {
                rec: None,
                report,
                failures,
            });
        }
        Err(e) => {
            report.insert("error".into(), json!(e.to_string()));
            failures.push(Failure {
                name: "integration".into(),
                value: f64::INFINITY,
                location: grid.origin.to_vec(),
            });
            return Ok(Recon {
                rec: None,
                report,
                failures,
            });
        }
    };
    report.insert(
        "drift".into(),
        json!({ "max": rec.max_drift, "location": grid.point(rec.drift_node) }),
    );
    let mut cert = certify_reconstruction(&rec.sampled(), &Default::default());
    let n_err = cert.errors.len();
    cert.errors.truncate(MAX_LISTED);
    report.insert("certification_error_count".into(), json!(n_err));
    report.insert("certification".into(), json!(cert));
    Ok(Recon {
        rec: Some(rec),
        report,
        failures,
    })
}

fn write_immersion(rec: &DiscreteImmersion, path: &Path) -> Result<(), CmdError> {
    write_immersion_csv(&rec.sampled(), create(path)?).map_err(|e| io_err(path, e))
}

pub fn cmd_reconstruct(cfg: &ReconstructConfig, out: Option<PathBuf>) -> Result<Outcome, CmdError> {
    let csv = out.unwrap_or_else(|| PathBuf::from("immersion.csv"));
    let report_path = csv.with_extension("json");
    match &cfg.source {
        ReconstructSource::Oracle { case } => reconstruct_oracle(*case, cfg, &csv, report_path),
        ReconstructSource::Fields {
            system,
            kfields,
            bc,
            sign,
        } => {
            let f = File::open(kfields).map_err(|e| config(format!("{}: {e}", kfields.display())))?;
            let side = kfields.with_extension("json");
            let meta = match File::open(&side) {
                Ok(m) => Some(read_meta(BufReader::new(m)).map_err(|e| config(format!("{}: {e}", side.display())))?),
                Err(_) => None,
            };
            if let Some(m) = &meta {
                if m.system != *system {
                    return Err(config(format!(
                        "{} holds {} fields, not {system}",
                        kfields.display(),
                        m.system
                    )));
                }
            }
            let bc = bc.or(meta.as_ref().map(|m| m.bc)).unwrap_or(Bc::Periodic);
            let k = read_csv(BufReader::new(f), bc).map_err(|e| config(format!("{}: {e}", kfields.display())))?;
            reconstruct_fields(*system, *sign, k, cfg, &csv, report_path)
        }
    }
}

fn finish(
    name: String,
    mut r: Recon,
    extra: Vec<(&str, Value)>,
    csv: &Path,
    report_path: PathBuf,
) -> Result<Outcome, CmdError> {
    for (k, v) in extra {
        r.report.insert(k.into(), v);
    }
    if let Some(rec) = &r.rec {
        write_immersion(rec, csv)?;
        r.report.insert("immersion".into(), json!(csv));
    }
    let passed = r.failures.is_empty();
    let summary = if passed {
        format!("reconstruct {name}: passed")
    } else {
        let names: Vec<&str> = r.failures.iter().map(|f| f.name.as_str()).collect();
        format!("reconstruct {name}: FAILED ({})", names.join(", "))
    };
    r.report.insert("source".into(), json!(name));
    r.report.insert("passed".into(), json!(passed));
    r.report.insert("failures".into(), json!(r.failures));
    Ok(Outcome {
        code: if passed { EXIT_OK } else { EXIT_FAILED },
        report: Value::Object(r.report),
        report_path: Some(report_path),
        summary,
    })
}

fn reconstruct_oracle(
    case: CaseName,
    cfg: &ReconstructConfig,
    csv: &Path,
    report_path: PathBuf,
) -> Result<Outcome, CmdError> {
    let block = default_block(case.block_kind()).map_err(|e| config(e.to_string()))?;
    let imm = build_immersion(case, &block).map_err(|e| config(e.to_string()))?;
    let src = ImmersionSource::new(imm).map_err(|e| config(e.to_string()))?;
    let c = src.imm.domain.center();
    let half = 0.5 * (cfg.count - 1) as f64 * cfg.step;
    let origin: [f64; 4] = std::array::from_fn(|a| c[a] - half);
    let far: Vec<f64> = origin.iter().map(|x| x + 2.0 * half).collect();
    if !src.imm.domain.contains(&origin) || !src.imm.domain.contains(&far) {
        return Err(config(format!(
            "box of {} nodes at step {} exceeds the domain of {case}",
            cfg.count, cfg.step
        )));
    }
    let grid = ReconstructionGrid::new(origin, [cfg.step; 4], [cfg.count; 4]);
    let mut r = reconstruct_common(&src, &grid, cfg)?;
    let init = FrameState::standard(&src.ambient()).map_err(|e| config(e.to_string()))?;
    let exact0 = src.state(&origin).map_err(|e| config(e.to_string()))?;
    let map = alignment_map(&init, &exact0).map_err(|e| config(e.to_string()))?;
    let mut extra = Vec::new();

    if let Some(rec) = &r.rec {
        let (mut worst, mut at) = (0.0f64, origin);
        for (i, s) in rec.states.iter().enumerate() {
            let p = grid.point(grid.multi(i));
            let exact = src.imm.value_unchecked(&p).map_err(|e| config(e.to_string()))?;
            let d = map.apply_point(&s.f).axpy((-1.0).into(), &exact).coord_norm();
            if !(d <= worst) {
                worst = d;
                at = p;
            }
        }
        if !(worst < cfg.tol_align) {
            r.failures.push(Failure {
                name: "alignment".into(),
                value: worst,
                location: at.to_vec(),
            });
        }
        extra.push(("alignment_error", json!(worst)));
    }

    // endpoint error under step halving on the same box
    let mut endpoint = Vec::new();
    for g in refinements(&grid) {
        let opts = IntegrateOptions {
            drift_limit: f64::INFINITY,
            reproject: false,
        };
        if let Ok(end) = integrate_path(&src, &g, g.schedule, &init, &opts) {
            let exact = src
                .imm
                .value_unchecked(&g.point(g.count.map(|c| c - 1)))
                .map_err(|e| config(e.to_string()))?;
            endpoint.push((
                g.step[0],
                map.apply_point(&end.f).axpy((-1.0).into(), &exact).coord_norm(),
            ));
        }
    }
    let errs: Vec<f64> = endpoint.iter().map(|e| e.1).collect();
    extra.push((
        "endpoint_error",
        json!(endpoint
            .iter()
            .map(|(h, e)| json!({ "step": h, "error": e }))
            .collect::<Vec<_>>()),
    ));
    extra.push(("endpoint_orders", json!(orders(&errs))));
    extra.push(("epsilon", json!(src.ambient().epsilon)));
    finish(case.to_string(), r, extra, csv, report_path)
}

fn reconstruct_fields(
    system: SystemId,
    sign: slag_core::catalog::Sign,
    k: KFields,
    cfg: &ReconstructConfig,
    csv: &Path,
    report_path: PathBuf,
) -> Result<Outcome, CmdError> {
    let g = k.grid;
    // RK4 midpoints must land on field nodes: the step is twice the spacing
    let (first, avail) = match k.bc {
        Bc::Dirichlet => (1usize, g.nu.min(g.nv).saturating_sub(2)),
        Bc::Periodic => (0usize, g.nu.min(g.nv)),
    };
    let fit = if avail == 0 { 0 } else { (avail - 1) / 2 + 1 };
    let mut count = cfg.count.min(fit);
    count -= (count.max(1) - 1) % 4;
    if count < 5 {
        return Err(config(format!(
            "field grid {}x{} is too small for a reconstruction",
            g.nu, g.nv
        )));
    }
    let hu = 2.0 * g.hu;
    let hv = 2.0 * g.hv;
    let origin = [cfg.t0, cfg.s0, g.u0 + first as f64 * g.hu, g.v0 + first as f64 * g.hv];
    let grid = ReconstructionGrid::new(origin, [hu, hu, hu, hv], [count; 4]);
    let src = GenericSource::new(system, sign, k);
    let r = reconstruct_common(&src, &grid, cfg)?;
    let res = constraint_residual(system, &src.k).max_abs().0;
    let extra = vec![
        ("system", json!(system)),
        ("epsilon", json!(system.epsilon())),
        ("constraint_residual", json!(res)),
    ];
    finish(system.to_string(), r, extra, csv, report_path)
}
