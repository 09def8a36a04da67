//! Batch front end: problem-file parsing, subcommand dispatch, JSON
//! reports on stdout, and a built-in worked-example demo.
//!
//! Exit codes: 0 success, 2 validation or computation error, 3 "not
//! stationary" (stationarity subcommand only). Every report embeds the
//! effective tolerance table and a SHA-256 hash of the problem file so
//! identical inputs produce byte-identical, attributable reports.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use setopt::normals::{assemble_lower, assemble_upper};
use setopt::oracle::{
    invariance_check, local_weak_minimality_grid, sample_convexity, sample_lipschitz_bound,
    scalarization_consistency, MinimalityKind,
};
use setopt::problem::{demo_problem_file, Problem, ProblemFile, ToleranceOverride};
use setopt::scalarize::psi_subdifferential;
use setopt::scalfun::{f_lower, f_upper};
use setopt::setrel::{
    lower_less, minimal_indices, scalar_gap, set_equivalent, upper_less, ExtremalKind, Relation,
};
use setopt::solver::{descend, DescentParams};
use setopt::stationarity::{
    lower_stationarity, upper_stationarity, vector_stationarity, StationarityCertificate,
};
use setopt::{Error, SetMap, Tolerances};

#[derive(Parser)]
#[command(
    name = "setopt",
    version,
    about = "Set optimization toolkit: set relations, scalarization, stationarity certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ProblemArgs {
    /// Path to the JSON problem file.
    #[arg(long)]
    problem: PathBuf,
    /// JSON file overriding the tolerance table.
    #[arg(long)]
    tolerances: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RelArg {
    #[value(alias = "l")]
    Lower,
    #[value(alias = "u")]
    Upper,
}

impl From<RelArg> for Relation {
    fn from(r: RelArg) -> Relation {
        match r {
            RelArg::Lower => Relation::Lower,
            RelArg::Upper => Relation::Upper,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StatRelArg {
    #[value(alias = "l")]
    Lower,
    #[value(alias = "u")]
    Upper,
    Vector,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Min,
    Wmin,
    Max,
    Wmax,
    Smin,
}

impl From<KindArg> for ExtremalKind {
    fn from(k: KindArg) -> ExtremalKind {
        match k {
            KindArg::Min => ExtremalKind::Min,
            KindArg::Wmin => ExtremalKind::WMin,
            KindArg::Max => ExtremalKind::Max,
            KindArg::Wmax => ExtremalKind::WMax,
            KindArg::Smin => ExtremalKind::SMin,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Minimality,
    Consistency,
    Convexity,
    Lipschitz,
    Invariance,
}

#[derive(Clone, Copy, ValueEnum)]
enum MinimalityArg {
    #[value(alias = "l")]
    Lower,
    #[value(alias = "u")]
    Upper,
    VectorWeak,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a problem file.
    Validate(ProblemArgs),
    /// Evaluate the image F(x) with provenance.
    Eval {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Evaluation point (defaults to xbar).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Option<Vec<f64>>,
    },
    /// Compare F(x) against F(xbar): both relations, both gaps.
    Relate {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
    },
    /// Extract an extremal subset of F(x).
    Minimals {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "wmin")]
        kind: KindArg,
    },
    /// Anchored scalarization values with witnesses.
    Scalarize {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
        /// Anchor point (defaults to xbar).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        anchor: Option<Vec<f64>>,
    },
    /// Certify stationarity at xbar; exit 3 when not stationary.
    Stationarity {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value = "lower")]
        relation: StatRelArg,
        /// Override the stationarity tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Include the full graph/direction polytopes in the report.
        #[arg(long)]
        dump_polytopes: bool,
        /// Augment the family with dominated components f_i + k before
        /// testing (sharper-estimate probe).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        augment: Option<Vec<f64>>,
    },
    /// Brute-force verification checks.
    Oracle {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum)]
        check: CheckArg,
        #[arg(long, value_enum, default_value = "lower")]
        relation: MinimalityArg,
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 100)]
        probes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cone direction for the invariance check.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        k: Option<Vec<f64>>,
        /// Lift the grid dimension cap.
        #[arg(long)]
        allow_large: bool,
    },
    /// Sampling descent toward a stationary point.
    Descend {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Start point (defaults to xbar).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "lower")]
        relation: RelArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
        #[arg(long)]
        step0: Option<f64>,
        /// Also write the trace as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the built-in worked example and assert every golden value.
    Demo,
}

struct Loaded {
    problem: Problem,
    hash: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn load(args: &ProblemArgs) -> Result<Loaded, Error> {
    let text = fs::read_to_string(&args.problem)
        .map_err(|e| Error::Problem(format!("cannot read {}: {e}", args.problem.display())))?;
    let mut pf = ProblemFile::from_json(&text)?;
    if let Some(path) = &args.tolerances {
        let ttext = fs::read_to_string(path)
            .map_err(|e| Error::Problem(format!("cannot read {}: {e}", path.display())))?;
        let ov: ToleranceOverride = serde_json::from_str(&ttext)
            .map_err(|e| Error::Problem(format!("invalid tolerance file: {e}")))?;
        pf.tolerances = Some(ov);
    }
    let problem = pf.build()?;
    Ok(Loaded {
        problem,
        hash: sha256_hex(text.as_bytes()),
    })
}

fn envelope<T: Serialize>(tol: &Tolerances, hash: &str, report: T) -> Value {
    json!({
        "tolerances": tol,
        "problem_hash": hash,
        "report": report,
    })
}

fn emit(value: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("reports serialize")
    );
}

fn run() -> Result<u8, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate(args) => {
            let loaded = load(&args)?;
            let p = &loaded.problem;
            let report = json!({
                "valid": true,
                "n": p.map.n(),
                "m": p.map.m(),
                "components": p.map.p(),
                "cone_generators": p.ctx.dual_generators().len(),
            });
            emit(&envelope(&p.tol, &loaded.hash, report));
            Ok(0)
        }
        Command::Eval { problem, at } => {
            let loaded = load(&problem)?;
            let p = &loaded.problem;
            let x = at.unwrap_or_else(|| p.xbar.clone());
            let image = p.map.evaluate(&x, p.tol.eq)?;
            let report = json!({
                "x": x,
                "points": image.points.points(),
                "provenance": image.provenance,
            });
            emit(&envelope(&p.tol, &loaded.hash, report));
            Ok(0)
        }
        Command::Relate { problem, at } => {
            let loaded = load(&problem)?;
            let p = &loaded.problem;
            let moving = p.map.evaluate(&at, p.tol.eq)?.points;
            let anchor = p.map.evaluate(&p.xbar, p.tol.eq)?.points;
            let report = json!({
                "x": at,
                "xbar": p.xbar,
                "lower": {
                    "holds": lower_less(&moving, &anchor, &p.ctx, false, p.tol.mem)?,
                    "strict": lower_less(&moving, &anchor, &p.ctx, true, p.tol.mem)?,
                    "gap": scalar_gap(&moving, &anchor, &p.ctx, Relation::Lower)?,
                    "equivalent": set_equivalent(&moving, &anchor, &p.ctx, Relation::Lower, p.tol.mem)?,
                },
                "upper": {
                    "holds": upper_less(&moving, &anchor, &p.ctx, false, p.tol.mem)?,
                    "strict": upper_less(&moving, &anchor, &p.ctx, true, p.tol.mem)?,
                    "gap": scalar_gap(&moving, &anchor, &p.ctx, Relation::Upper)?,
                    "equivalent": set_equivalent(&moving, &anchor, &p.ctx, Relation::Upper, p.tol.mem)?,
                },
            });
            emit(&envelope(&p.tol, &loaded.hash, report));
            Ok(0)
        }
        Command::Minimals { problem, at, kind } => {
            let loaded = load(&problem)?;
            let p = &loaded.problem;
            let x = at.unwrap_or_else(|| p.xbar.clone());
            let image = p.map.evaluate(&x, p.tol.eq)?;
            let indices = minimal_indices(&image.points, &p.ctx, kind.into(), p.tol.mem)?;
            let points: Vec<&Vec<f64>> =
                indices.iter().map(|&i| &image.points.points()[i]).collect();
            let report = json!({
                "x": x,
                "kind": format!("{:?}", ExtremalKind::from(kind)),
                "indices": indices,
                "points": points,
            });
            emit(&envelope(&p.tol, &loaded.hash, report));
            Ok(0)
        }
        Command::Scalarize {
            problem,
            at,
            anchor,
        } => {
            let loaded = load(&problem)?;
            let p = &loaded.problem;
            let anchor = anchor.unwrap_or_else(|| p.xbar.clone());
            let lower = f_lower(&p.map, &p.ctx, &anchor, &at, &p.tol)?;
            let upper = f_upper(&p.map, &p.ctx, &anchor, &at, &p.tol)?;
            let report = json!({
                "x": at,
                "anchor": anchor,
                "f_lower": lower,
                "f_upper": upper,
            });
            emit(&envelope(&p.tol, &loaded.hash, report));
            Ok(0)
        }
        Command::Stationarity {
            problem,
            relation,
            tol,
            dump_polytopes,
            augment,
        } => {
            let loaded = load(&problem)?;
            let p = &loaded.problem;
            let mut tols = p.tol;
            if let Some(t) = tol {
                tols.stat = t;
            }
            let map: SetMap = match &augment {
                Some(k) => {
                    if p.ctx.classify(k, tols.mem)? == setopt::Region::Outside {
                        return Err(Error::Domain(
                            "--augment direction must belong to the ordering cone".into(),
                        ));
                    }
                    p.map.augmented(k)?
                }
                None => p.map.clone(),
            };
            let (certificate, stationary): (Value, bool) = match relation {
                StatRelArg::Lower => {
                    let c = lower_stationarity(&map, &p.ctx, &p.xbar, &p.omega, &tols)?;
                    let s = c.stationary;
                    (stat_report(&map, p, &c, dump_polytopes, &tols)?, s)
                }
                StatRelArg::Upper => {
                    let c = upper_stationarity(&map, &p.ctx, &p.xbar, &p.omega, &tols)?;
                    let s = c.stationary;
                    (stat_report(&map, p, &c, dump_polytopes, &tols)?, s)
                }
                StatRelArg::Vector => {
                    let v = vector_stationarity(&map, &p.ctx, &p.xbar, &tols)?;
                    let s = v.stationary;
                    (serde_json::to_value(&v).expect("serializable"), s)
                }
            };
            emit(&envelope(&tols, &loaded.hash, certificate));
            Ok(if stationary { 0 } else { 3 })
        }
        Command::Oracle {
            problem,
            check,
            relation,
            radius,
            step,
            trials,
            probes,
            seed,
            k,
            allow_large,
        } => {
            let loaded = load(&problem)?;
            let p = &loaded.problem;
            let report: Value = match check {
                CheckArg::Minimality => {
                    let kind = match relation {
                        MinimalityArg::Lower => MinimalityKind::Lower,
                        MinimalityArg::Upper => MinimalityKind::Upper,
                        MinimalityArg::VectorWeak => MinimalityKind::VectorWeak,
                    };
                    let v = local_weak_minimality_grid(
                        &p.map,
                        &p.ctx,
                        &p.xbar,
                        &p.omega,
                        kind,
                        radius,
                        step,
                        &p.tol,
                        allow_large,
                    )?;
                    serde_json::to_value(&v).expect("serializable")
                }
                CheckArg::Consistency => {
                    let rel = match relation {
                        MinimalityArg::Upper => Relation::Upper,
                        _ => Relation::Lower,
                    };
                    let v = scalarization_consistency(
                        &p.map,
                        &p.ctx,
                        &p.xbar,
                        &p.omega,
                        rel,
                        radius,
                        step,
                        &p.tol,
                        allow_large,
                    )?;
                    serde_json::to_value(&v).expect("serializable")
                }
                CheckArg::Convexity => {
                    let v =
                        sample_convexity(&p.map, &p.ctx, &p.xbar, radius, trials, seed, &p.tol)?;
                    serde_json::to_value(&v).expect("serializable")
                }
                CheckArg::Lipschitz => {
                    let v = sample_lipschitz_bound(
                        &p.map, &p.ctx, &p.xbar, radius, trials, seed, &p.tol,
                    )?;
                    serde_json::to_value(&v).expect("serializable")
                }
                CheckArg::Invariance => {
                    let k = k.ok_or_else(|| {
                        Error::Problem("--k is required for the invariance check".into())
                    })?;
                    let holds =
                        invariance_check(&p.map, &p.ctx, &p.xbar, &k, probes, seed, &p.tol)?;
                    json!({"property": "augmentation-invariance", "holds": holds, "k": k, "probes": probes})
                }
            };
            emit(&envelope(&p.tol, &loaded.hash, report));
            Ok(0)
        }
        Command::Descend {
            problem,
            x0,
            relation,
            seed,
            max_iters,
            step0,
            csv,
        } => {
            let loaded = load(&problem)?;
            let p = &loaded.problem;
            let x0 = x0.unwrap_or_else(|| p.xbar.clone());
            let params = DescentParams {
                step0,
                seed,
                max_iters,
                tol_res: p.tol.stat,
                ..DescentParams::default()
            };
            let trace = descend(
                &p.map,
                &p.ctx,
                &x0,
                &p.omega,
                relation.into(),
                &params,
                &p.tol,
            )?;
            if let Some(path) = csv {
                let mut out = String::from("iter,x,step,merit,residual,accepted\n");
                for (i, r) in trace.iterates.iter().enumerate() {
                    let xs =
                        r.x.iter()
                            .map(|v| v.to_string())
                            .collect::<Vec<_>>()
                            .join(";");
                    out.push_str(&format!(
                        "{i},{xs},{},{},{},{}\n",
                        r.step, r.merit, r.residual, r.accepted
                    ));
                }
                fs::write(&path, out)
                    .map_err(|e| Error::Problem(format!("cannot write {}: {e}", path.display())))?;
            }
            emit(&envelope(&p.tol, &loaded.hash, &trace));
            Ok(0)
        }
        Command::Demo => demo(),
    }
}

fn stat_report(
    map: &SetMap,
    p: &Problem,
    cert: &StationarityCertificate,
    dump: bool,
    tols: &Tolerances,
) -> Result<Value, Error> {
    let mut v = serde_json::to_value(cert).expect("serializable");
    if dump {
        let image = map.evaluate(&p.xbar, tols.eq)?;
        let mut polytopes = Vec::new();
        for anchor in &cert.per_anchor {
            let entry = match cert.relation {
                setopt::stationarity::StationarityRelation::Lower => {
                    let asm =
                        assemble_lower(map, &p.ctx, &p.xbar, &image, anchor.anchor_index, tols)?;
                    json!({
                        "anchor_index": anchor.anchor_index,
                        "graph": asm.graph,
                        "estimate": asm.estimate,
                    })
                }
                _ => {
                    let asm =
                        assemble_upper(map, &p.ctx, &p.xbar, &image, anchor.anchor_index, tols)?;
                    json!({
                        "anchor_index": anchor.anchor_index,
                        "directions": asm.directions,
                        "estimate": asm.estimate,
                    })
                }
            };
            polytopes.push(entry);
        }
        v.as_object_mut()
            .expect("certificate serializes to an object")
            .insert("polytopes".into(), Value::Array(polytopes));
    }
    Ok(v)
}

/// Runs the full pipeline on the built-in worked example and asserts
/// every golden value; any mismatch makes the process exit nonzero.
fn demo() -> Result<u8, Error> {
    let pf = demo_problem_file();
    let text = pf.to_json();
    let hash = sha256_hex(text.as_bytes());
    let p = pf.build()?;
    let tol = &p.tol;
    let mut failures: Vec<String> = Vec::new();
    let check = |name: &str, ok: bool, failures: &mut Vec<String>| {
        if !ok {
            failures.push(name.to_string());
        }
        ok
    };

    let face = psi_subdifferential(&p.ctx, &[0.0, 0.0], tol.act)?;
    check(
        "subdifferential at zero is the unit simplex",
        face.vertices == vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        &mut failures,
    );

    let image = p.map.evaluate(&p.xbar, tol.eq)?;
    check(
        "image at xbar",
        image.points.points() == [vec![1.0, -1.0], vec![-1.0, 1.0]],
        &mut failures,
    );

    let wmin = minimal_indices(&image.points, &p.ctx, ExtremalKind::WMin, tol.mem)?;
    let wmax = minimal_indices(&image.points, &p.ctx, ExtremalKind::WMax, tol.mem)?;
    check("WMin = F(xbar)", wmin == vec![0, 1], &mut failures);
    check("WMax = F(xbar)", wmax == vec![0, 1], &mut failures);

    let a1 = assemble_lower(&p.map, &p.ctx, &p.xbar, &image, 0, tol)?;
    let a2 = assemble_lower(&p.map, &p.ctx, &p.xbar, &image, 1, tol)?;
    check(
        "lower estimates {1} and {-1}",
        a1.estimate.deduped_vertices(1e-12) == vec![vec![1.0]]
            && a2.estimate.deduped_vertices(1e-12) == vec![vec![-1.0]],
        &mut failures,
    );
    let b1 = assemble_upper(&p.map, &p.ctx, &p.xbar, &image, 0, tol)?;
    let b2 = assemble_upper(&p.map, &p.ctx, &p.xbar, &image, 1, tol)?;
    check(
        "upper estimates {1} and {-1}",
        b1.estimate.deduped_vertices(1e-12) == vec![vec![1.0]]
            && b2.estimate.deduped_vertices(1e-12) == vec![vec![-1.0]],
        &mut failures,
    );

    let lower = lower_stationarity(&p.map, &p.ctx, &p.xbar, &p.omega, tol)?;
    let upper = upper_stationarity(&p.map, &p.ctx, &p.xbar, &p.omega, tol)?;
    let vector = vector_stationarity(&p.map, &p.ctx, &p.xbar, tol)?;
    check(
        "lower stationary with zero residual",
        lower.stationary && lower.residual <= 1e-12,
        &mut failures,
    );
    check(
        "upper stationary with zero residual",
        upper.stationary && upper.residual <= 1e-12,
        &mut failures,
    );
    check("not vector stationary", !vector.stationary, &mut failures);

    let grid_l = local_weak_minimality_grid(
        &p.map,
        &p.ctx,
        &p.xbar,
        &p.omega,
        MinimalityKind::Lower,
        0.5,
        1e-3,
        tol,
        false,
    )?;
    let grid_u = local_weak_minimality_grid(
        &p.map,
        &p.ctx,
        &p.xbar,
        &p.omega,
        MinimalityKind::Upper,
        0.5,
        1e-3,
        tol,
        false,
    )?;
    let grid_v = local_weak_minimality_grid(
        &p.map,
        &p.ctx,
        &p.xbar,
        &p.omega,
        MinimalityKind::VectorWeak,
        0.5,
        1e-3,
        tol,
        false,
    )?;
    check("grid lower minimality holds", grid_l.holds, &mut failures);
    check("grid upper minimality holds", grid_u.holds, &mut failures);
    check(
        "vector-weak minimality fails with a counterexample",
        !grid_v.holds && grid_v.counterexample.is_some(),
        &mut failures,
    );

    let report = json!({
        "problem": serde_json::from_str::<Value>(&text).expect("demo problem serializes"),
        "subdifferential_at_zero": face.vertices,
        "image_at_xbar": image.points.points(),
        "wmin_indices": wmin,
        "wmax_indices": wmax,
        "lower_estimates": [a1.estimate.deduped_vertices(1e-12), a2.estimate.deduped_vertices(1e-12)],
        "upper_estimates": [b1.estimate.deduped_vertices(1e-12), b2.estimate.deduped_vertices(1e-12)],
        "lower_stationary": lower.stationary,
        "lower_residual": lower.residual,
        "upper_stationary": upper.stationary,
        "upper_residual": upper.residual,
        "vector_stationary": vector.stationary,
        "vector_residual": vector.residual,
        "grid_lower_minimal": grid_l.holds,
        "grid_upper_minimal": grid_u.holds,
        "grid_vector_weak_minimal": grid_v.holds,
        "vector_weak_counterexample": grid_v.counterexample,
        "all_passed": failures.is_empty(),
        "failures": failures,
    });
    emit(&envelope(tol, &hash, &report));
    Ok(if report["all_passed"] == Value::Bool(true) {
        0
    } else {
        2
    })
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let diag = json!({"error": e.to_string()});
            println!(
                "{}",
                serde_json::to_string_pretty(&diag).expect("diagnostics serialize")
            );
            ExitCode::from(2)
        }
    }
}
