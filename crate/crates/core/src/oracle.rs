//! Definition-level brute-force verification: grid searches for local
//! weak minimality, scalarization consistency, and sampled convexity,
//! Lipschitz and augmentation-invariance checks.
//!
//! Grid verdicts certify "no violation on this grid" only; they
//! approximate open neighborhoods and are never a proof of minimality.
//! Every reported counterexample carries enough data to replay the
//! violation from scratch.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{ConeContext, Region};
use crate::error::Error;
use crate::linalg::{self, sub};
use crate::problem::Omega;
use crate::scalfun::{f_lower, f_upper, g_lower, g_upper};
use crate::setmap::SetMap;
use crate::setrel::{lower_less, minimal_indices, upper_less, ExtremalKind, PointSet, Relation};
use crate::tol::Tolerances;
use crate::Result;

/// Hard cap on the grid dimension; beyond it the caller must opt in.
pub const GRID_DIM_CAP: usize = 3;

/// Caveat attached to every grid verdict.
pub const GRID_CAVEAT: &str =
    "grid verdicts certify the absence of violations on this grid only, not minimality";

/// Which local-minimality notion a grid search tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinimalityKind {
    Lower,
    Upper,
    VectorWeak,
}

/// The grid a verdict was computed on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub step: f64,
}

/// Replayable evidence attached to a failed verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// `F(x)` strictly relates to `F(xbar)`.
    StrictRelation { relation: Relation, merit: f64 },
    /// Some image point of `x` strictly dominates an anchor point.
    VectorDomination { ybar: Vec<f64>, y: Vec<f64> },
    /// The anchored scalarization dips below zero although grid
    /// minimality holds (an implementation-bug detector).
    NegativeMerit { relation: Relation, merit: f64 },
    /// Midpoint convexity fails between two sample points.
    ConvexityViolation { a: Vec<f64>, b: Vec<f64>, gap: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Counterexample {
    pub x: Vec<f64>,
    pub evidence: Evidence,
}

/// Outcome of a brute-force property check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridVerdict {
    pub property: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    pub grid: GridSpec,
    pub samples_checked: usize,
    /// Set on convexity checks: whether the convexity hypothesis
    /// (single affine component) was itself verified.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypothesis_verified: Option<bool>,
    pub caveat: String,
}

fn grid_points(center: &[f64], radius: f64, step: f64) -> Vec<Vec<f64>> {
    // Lexicographic enumeration so "first counterexample" is well defined.
    let per_axis: Vec<Vec<f64>> = center
        .iter()
        .map(|&c| {
            let k = (radius / step).round() as i64;
            (-k..=k).map(|i| c + i as f64 * step).collect()
        })
        .collect();
    let mut out = vec![Vec::new()];
    for axis in &per_axis {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &v in axis {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

fn check_grid_pre(n: usize, radius: f64, step: f64, allow_large: bool) -> Result<()> {
    if step <= 0.0 || radius < step {
        return Err(Error::Domain(format!(
            "grid needs 0 < step <= radius, got step {step}, radius {radius}"
        )));
    }
    if n > GRID_DIM_CAP && !allow_large {
        return Err(Error::DimensionTooLarge {
            n,
            cap: GRID_DIM_CAP,
        });
    }
    Ok(())
}

/// Exhaustive grid test of local weak minimality at `xbar` in the sense
/// of the requested relation; `allow_large` lifts the dimension cap.
#[allow(clippy::too_many_arguments)]
pub fn local_weak_minimality_grid(
    map: &SetMap,
    ctx: &ConeContext,
    xbar: &[f64],
    omega: &Omega,
    kind: MinimalityKind,
    radius: f64,
    step: f64,
    tol: &Tolerances,
    allow_large: bool,
) -> Result<GridVerdict> {
    check_grid_pre(map.n(), radius, step, allow_large)?;
    linalg::check_dim(map.n(), xbar)?;
    let anchor_image = map.evaluate(xbar, tol.eq)?;
    let anchor_wmin = minimal_indices(&anchor_image.points, ctx, ExtremalKind::WMin, tol.mem)?;
    let grid = GridSpec {
        center: xbar.to_vec(),
        radius,
        step,
    };
    let mut samples = 0;
    let mut counterexample = None;
    'outer: for x in grid_points(xbar, radius, step) {
        if linalg::dist(&x, xbar) <= tol.eq || !omega.contains(&x, tol.mem) {
            continue;
        }
        samples += 1;
        let image = map.evaluate(&x, tol.eq)?;
        match kind {
            MinimalityKind::Lower => {
                if lower_less(&image.points, &anchor_image.points, ctx, true, tol.mem)? {
                    let merit = f_lower(map, ctx, xbar, &x, tol)?.value;
                    counterexample = Some(Counterexample {
                        x,
                        evidence: Evidence::StrictRelation {
                            relation: Relation::Lower,
                            merit,
                        },
                    });
                    break 'outer;
                }
            }
            MinimalityKind::Upper => {
                if upper_less(&image.points, &anchor_image.points, ctx, true, tol.mem)? {
                    let merit = f_upper(map, ctx, xbar, &x, tol)?.value;
                    counterexample = Some(Counterexample {
                        x,
                        evidence: Evidence::StrictRelation {
                            relation: Relation::Upper,
                            merit,
                        },
                    });
                    break 'outer;
                }
            }
            MinimalityKind::VectorWeak => {
                for &bi in &anchor_wmin {
                    let ybar = &anchor_image.points.points()[bi];
                    for y in image.points.points() {
                        if ctx.classify(&sub(ybar, y), tol.mem)? == Region::Interior {
                            counterexample = Some(Counterexample {
                                x: x.clone(),
                                evidence: Evidence::VectorDomination {
                                    ybar: ybar.clone(),
                                    y: y.clone(),
                                },
                            });
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    Ok(GridVerdict {
        property: format!("local-weak-minimality-{}", kind_name(kind)),
        holds: counterexample.is_none(),
        counterexample,
        grid,
        samples_checked: samples,
        hypothesis_verified: None,
        caveat: GRID_CAVEAT.into(),
    })
}

fn kind_name(kind: MinimalityKind) -> &'static str {
    match kind {
        MinimalityKind::Lower => "lower",
        MinimalityKind::Upper => "upper",
        MinimalityKind::VectorWeak => "vector-weak",
    }
}

/// Independent re-derivation of the weakly minimal subset through the
/// scalarization zero-level, compared against the definition-level filter.
pub fn wmin_cross_check(a: &PointSet, ctx: &ConeContext, tol: &Tolerances) -> Result<bool> {
    let by_definition = minimal_indices(a, ctx, ExtremalKind::WMin, tol.mem)?;
    let mut by_scalarization = Vec::new();
    for (i, ybar) in a.points().iter().enumerate() {
        let inf = a
            .points()
            .iter()
            .map(|y| crate::scalarize::psi(ctx, &sub(y, ybar)))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if inf >= -tol.mem {
            by_scalarization.push(i);
        }
    }
    Ok(by_definition == by_scalarization)
}

/// Checks that grid minimality and the anchored scalarization agree: when
/// no grid point strictly dominates, the merit must stay above `-tau` on
/// the whole grid.
#[allow(clippy::too_many_arguments)]
pub fn scalarization_consistency(
    map: &SetMap,
    ctx: &ConeContext,
    xbar: &[f64],
    omega: &Omega,
    relation: Relation,
    radius: f64,
    step: f64,
    tol: &Tolerances,
    allow_large: bool,
) -> Result<GridVerdict> {
    let kind = match relation {
        Relation::Lower => MinimalityKind::Lower,
        Relation::Upper => MinimalityKind::Upper,
    };
    let minimality =
        local_weak_minimality_grid(map, ctx, xbar, omega, kind, radius, step, tol, allow_large)?;
    let grid = GridSpec {
        center: xbar.to_vec(),
        radius,
        step,
    };
    let mut counterexample = None;
    let mut samples = 0;
    if minimality.holds {
        for x in grid_points(xbar, radius, step) {
            if linalg::dist(&x, xbar) <= tol.eq || !omega.contains(&x, tol.mem) {
                continue;
            }
            samples += 1;
            let merit = match relation {
                Relation::Lower => f_lower(map, ctx, xbar, &x, tol)?.value,
                Relation::Upper => f_upper(map, ctx, xbar, &x, tol)?.value,
            };
            if merit < -tol.mem {
                counterexample = Some(Counterexample {
                    x,
                    evidence: Evidence::NegativeMerit { relation, merit },
                });
                break;
            }
        }
    }
    Ok(GridVerdict {
        property: "scalarization-consistency".into(),
        holds: counterexample.is_none(),
        counterexample,
        grid,
        samples_checked: samples.max(minimality.samples_checked),
        hypothesis_verified: None,
        caveat: GRID_CAVEAT.into(),
    })
}

fn map_is_affine_singleton(map: &SetMap) -> bool {
    map.p() == 1 && map.components()[0].iter().all(|e| e.affine().is_some())
}

/// Sampled midpoint-convexity check of the anchored lower scalarization.
/// Violations are certain bugs only when the hypothesis (single affine
/// component) holds; otherwise the verdict is informational.
pub fn sample_convexity(
    map: &SetMap,
    ctx: &ConeContext,
    xbar: &[f64],
    radius: f64,
    trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<GridVerdict> {
    assert!(trials >= 1 && radius > 0.0);
    linalg::check_dim(map.n(), xbar)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counterexample = None;
    for _ in 0..trials {
        let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            xbar.iter()
                .map(|c| c + rng.random_range(-radius..radius))
                .collect()
        };
        let a = sample(&mut rng);
        let b = sample(&mut rng);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let fa = f_lower(map, ctx, xbar, &a, tol)?.value;
        let fb = f_lower(map, ctx, xbar, &b, tol)?.value;
        let fm = f_lower(map, ctx, xbar, &mid, tol)?.value;
        let gap = fm - 0.5 * (fa + fb);
        if gap > 1e-10 {
            counterexample = Some(Counterexample {
                x: mid,
                evidence: Evidence::ConvexityViolation { a, b, gap },
            });
            break;
        }
    }
    Ok(GridVerdict {
        property: "midpoint-convexity".into(),
        holds: counterexample.is_none(),
        counterexample,
        grid: GridSpec {
            center: xbar.to_vec(),
            radius,
            step: 0.0,
        },
        samples_checked: trials,
        hypothesis_verified: Some(map_is_affine_singleton(map)),
        caveat: GRID_CAVEAT.into(),
    })
}

/// Sampled Lipschitz-transfer check of the anchored lower scalarization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub quotient_max: f64,
    pub bound: f64,
    pub holds: bool,
    /// Lipschitz modulus of the scalarizing functional.
    pub rho: f64,
    /// Sampled modulus of the map itself.
    pub lhat: f64,
}

pub fn sample_lipschitz_bound(
    map: &SetMap,
    ctx: &ConeContext,
    xbar: &[f64],
    radius: f64,
    trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<LipschitzReport> {
    assert!(trials >= 2 && radius > 0.0);
    linalg::check_dim(map.n(), xbar)?;
    let rho = ctx.psi_lipschitz();
    let lhat = map.estimate_lipschitz(xbar, radius, trials.max(8), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let points: Vec<Vec<f64>> = (0..trials)
        .map(|_| {
            xbar.iter()
                .map(|c| c + rng.random_range(-radius..radius))
                .collect()
        })
        .collect();
    let values = points
        .iter()
        .map(|x| f_lower(map, ctx, xbar, x, tol).map(|r| r.value))
        .collect::<Result<Vec<f64>>>()?;
    let mut quotient_max: f64 = 0.0;
    for i in 0..trials {
        for j in (i + 1)..trials {
            let dx = linalg::dist(&points[i], &points[j]);
            if dx < 1e-10 {
                continue;
            }
            quotient_max = quotient_max.max((values[i] - values[j]).abs() / dx);
        }
    }
    let bound = rho * (1.0 + lhat);
    Ok(LipschitzReport {
        quotient_max,
        bound,
        holds: quotient_max <= bound * 1.05,
        rho,
        lhat,
    })
}

/// Checks augmentation invariance: adding dominated components `f_i + k`
/// must not move the lower functionals, and adding `f_i - k` must not
/// move the upper ones, at every probe point.
pub fn invariance_check(
    map: &SetMap,
    ctx: &ConeContext,
    xbar: &[f64],
    k: &[f64],
    probes: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<bool> {
    linalg::check_dim(map.n(), xbar)?;
    linalg::check_dim(map.m(), k)?;
    if ctx.classify(k, tol.mem)? == Region::Outside {
        return Err(Error::Domain(
            "augmentation direction must belong to the ordering cone".into(),
        ));
    }
    let minus_k: Vec<f64> = k.iter().map(|v| -v).collect();
    let plus = map.augmented(k)?;
    let minus = map.augmented(&minus_k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..probes.max(1) {
        let x: Vec<f64> = xbar
            .iter()
            .map(|c| c + rng.random_range(-1.0..1.0))
            .collect();
        let z: Vec<f64> = (0..map.m()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let fl = f_lower(map, ctx, xbar, &x, tol)?.value;
        let fl_aug = f_lower(&plus, ctx, xbar, &x, tol)?.value;
        let gl = g_lower(map, ctx, &x, &z, tol)?.value;
        let gl_aug = g_lower(&plus, ctx, &x, &z, tol)?.value;
        let fu = f_upper(map, ctx, xbar, &x, tol)?.value;
        let fu_aug = f_upper(&minus, ctx, xbar, &x, tol)?.value;
        let gu = g_upper(map, ctx, &x, &z, tol)?.value;
        let gu_aug = g_upper(&minus, ctx, &x, &z, tol)?.value;
        if (fl - fl_aug).abs() > 1e-12
            || (gl - gl_aug).abs() > 1e-12
            || (fu - fu_aug).abs() > 1e-12
            || (gu - gu_aug).abs() > 1e-12
        {
            return Ok(false);
        }
    }
    Ok(true)
}
