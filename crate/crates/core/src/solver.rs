//! A sampling descent loop toward set-relation stationary points.
//!
//! The merit at iterate `x_k` is the scalarization anchored at `x_k`
//! itself: a candidate with negative merit strictly set-dominates the
//! current image, so every accepted step is a genuine set descent. The
//! loop is a heuristic — no convergence theorem is claimed; the trace
//! invariants (strict domination per accepted step, residual match at the
//! end, bit-identical reruns per seed) are what the tests pin down.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::ConeContext;
use crate::error::Error;
use crate::linalg;
use crate::problem::Omega;
use crate::scalfun::{f_lower, f_upper};
use crate::setmap::SetMap;
use crate::setrel::Relation;
use crate::stationarity::{lower_stationarity, upper_stationarity, StationarityCertificate};
use crate::tol::Tolerances;
use crate::Result;

/// Tuning knobs of the descent loop.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescentParams {
    /// Initial step; default `0.1 * (1 + ||x0||)`.
    pub step0: Option<f64>,
    /// Sufficient-decrease coefficient.
    pub sigma: f64,
    /// Step shrink factor on rejection.
    pub shrink: f64,
    /// Stop when the step falls below this.
    pub tol_step: f64,
    /// Stop when the stationarity residual falls below this.
    pub tol_res: f64,
    pub max_iters: usize,
    /// Random unit directions tried per iteration on top of the
    /// coordinate directions.
    pub directions_per_iter: usize,
    pub seed: u64,
}

impl Default for DescentParams {
    fn default() -> Self {
        DescentParams {
            step0: None,
            sigma: 0.1,
            shrink: 0.5,
            tol_step: 1e-9,
            tol_res: 1e-7,
            max_iters: 200,
            directions_per_iter: 4,
            seed: 0,
        }
    }
}

/// Why the loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ResidualBelowTol,
    StepBelowTol,
    MaxIters,
}

/// One outer iteration of the loop.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterateRecord {
    pub x: Vec<f64>,
    pub step: f64,
    /// Merit of the accepted candidate (anchored at `x`); zero when no
    /// candidate was accepted this iteration.
    pub merit: f64,
    /// Stationarity residual at `x`.
    pub residual: f64,
    pub accepted: bool,
}

/// Full record of a descent run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescentTrace {
    pub relation: Relation,
    pub iterates: Vec<IterateRecord>,
    pub termination: Termination,
    pub final_x: Vec<f64>,
    pub final_certificate: StationarityCertificate,
}

fn random_unit_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let len = linalg::norm(&d);
        if len > 1e-3 {
            return d.iter().map(|v| v / len).collect();
        }
    }
}

/// Runs the moving-anchor descent from `x0`.
pub fn descend(
    map: &SetMap,
    ctx: &ConeContext,
    x0: &[f64],
    omega: &Omega,
    relation: Relation,
    params: &DescentParams,
    tol: &Tolerances,
) -> Result<DescentTrace> {
    linalg::check_dim(map.n(), x0)?;
    if !omega.contains(x0, tol.mem) {
        return Err(Error::NotInOmega);
    }
    if !(params.sigma > 0.0 && params.shrink > 0.0 && params.shrink < 1.0) {
        return Err(Error::Domain(
            "descent needs sigma > 0 and 0 < shrink < 1".into(),
        ));
    }
    let n = map.n();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut x = omega.project(x0);
    let mut step = params
        .step0
        .unwrap_or_else(|| 0.1 * (1.0 + linalg::norm(x0)));
    let stationarity = |x: &[f64]| -> Result<StationarityCertificate> {
        match relation {
            Relation::Lower => lower_stationarity(map, ctx, x, omega, tol),
            Relation::Upper => upper_stationarity(map, ctx, x, omega, tol),
        }
    };
    let merit_at = |anchor: &[f64], cand: &[f64]| -> Result<f64> {
        Ok(match relation {
            Relation::Lower => f_lower(map, ctx, anchor, cand, tol)?.value,
            Relation::Upper => f_upper(map, ctx, anchor, cand, tol)?.value,
        })
    };

    let mut iterates = Vec::new();
    let mut termination = Termination::MaxIters;
    for _ in 0..params.max_iters {
        let cert = stationarity(&x)?;
        if cert.residual <= params.tol_res {
            iterates.push(IterateRecord {
                x: x.clone(),
                step,
                merit: 0.0,
                residual: cert.residual,
                accepted: false,
            });
            termination = Termination::ResidualBelowTol;
            break;
        }
        // Candidate fan: coordinate moves plus random unit directions.
        let mut directions: Vec<Vec<f64>> = Vec::with_capacity(2 * n + params.directions_per_iter);
        for i in 0..n {
            let mut d = vec![0.0; n];
            d[i] = 1.0;
            directions.push(d.clone());
            d[i] = -1.0;
            directions.push(d);
        }
        for _ in 0..params.directions_per_iter {
            directions.push(random_unit_direction(&mut rng, n));
        }
        let mut best: Option<(Vec<f64>, f64)> = None;
        for d in &directions {
            let mut cand = x.clone();
            linalg::axpy(&mut cand, step, d);
            let cand = omega.project(&cand);
            if linalg::dist(&cand, &x) <= tol.eq {
                continue;
            }
            let merit = merit_at(&x, &cand)?;
            if merit < -params.sigma * step && best.as_ref().is_none_or(|(_, m)| merit < *m) {
                best = Some((cand, merit));
            }
        }
        match best {
            Some((next, merit)) => {
                iterates.push(IterateRecord {
                    x: x.clone(),
                    step,
                    merit,
                    residual: cert.residual,
                    accepted: true,
                });
                x = next;
            }
            None => {
                iterates.push(IterateRecord {
                    x: x.clone(),
                    step,
                    merit: 0.0,
                    residual: cert.residual,
                    accepted: false,
                });
                step *= params.shrink;
                if step < params.tol_step {
                    termination = Termination::StepBelowTol;
                    break;
                }
            }
        }
    }
    let final_certificate = stationarity(&x)?;
    Ok(DescentTrace {
        relation,
        iterates,
        termination,
        final_x: x,
        final_certificate,
    })
}
