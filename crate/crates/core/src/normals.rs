//! Structured variational objects: coderivatives of the smooth branches
//! of a finite-family map, normal cones to finite sets and boxes, and the
//! assembly of the estimate polytopes feeding the stationarity tests.
//!
//! For a finite image every point is isolated, so its normal cone is the
//! full space; this erases the dual-variable constraint in the graph
//! polytope and the intersection clause in the direction polytope. The
//! descriptors stay in the data path so a structured image model could be
//! slotted in later without an API change.

use serde::{Deserialize, Serialize};

use crate::cone::{ConeContext, Region};
use crate::error::Error;
use crate::linalg::{self, sub, transpose_apply};
use crate::problem::Omega;
use crate::scalarize::psi_subdifferential;
use crate::setmap::{ImageSet, SetMap};
use crate::setrel::{minimal_indices, ExtremalKind, PointSet};
use crate::tol::Tolerances;
use crate::Result;

/// Per-coordinate shape of a box normal cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisFlag {
    /// Coordinate pinned to zero (interior coordinate).
    Zero,
    /// Nonnegative half-line (active upper bound).
    NonNeg,
    /// Nonpositive half-line (active lower bound).
    NonPos,
    /// Whole line (degenerate bound, lower = upper).
    All,
}

/// A normal cone in one of the two structured forms that arise here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormalConeDescriptor {
    /// Normal cone at an isolated point of a finite set: all of `R^dim`.
    FullSpace { dim: usize },
    /// Normal cone to a box, one sign flag per coordinate.
    BoxPattern { flags: Vec<AxisFlag> },
}

impl NormalConeDescriptor {
    pub fn zero(dim: usize) -> Self {
        NormalConeDescriptor::BoxPattern {
            flags: vec![AxisFlag::Zero; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            NormalConeDescriptor::FullSpace { dim } => *dim,
            NormalConeDescriptor::BoxPattern { flags } => flags.len(),
        }
    }

    /// True when the cone is exactly `{0}`.
    pub fn is_zero(&self) -> bool {
        matches!(self, NormalConeDescriptor::BoxPattern { flags }
            if flags.iter().all(|f| *f == AxisFlag::Zero))
    }

    /// `argmin_{u in N} ||r + u||`, coordinatewise exact.
    pub fn clamp(&self, r: &[f64]) -> Vec<f64> {
        match self {
            NormalConeDescriptor::FullSpace { .. } => r.iter().map(|v| -v).collect(),
            NormalConeDescriptor::BoxPattern { flags } => r
                .iter()
                .zip(flags)
                .map(|(v, f)| match f {
                    AxisFlag::Zero => 0.0,
                    AxisFlag::NonNeg => (-v).max(0.0),
                    AxisFlag::NonPos => (-v).min(0.0),
                    AxisFlag::All => -v,
                })
                .collect(),
        }
    }

    /// True when `<s, u> >= -tau` for every `u` in the cone, i.e. `s`
    /// belongs to the (negative) polar and can separate against `N`.
    pub fn polar_feasible(&self, s: &[f64], tau: f64) -> bool {
        match self {
            NormalConeDescriptor::FullSpace { .. } => s.iter().all(|v| v.abs() <= tau),
            NormalConeDescriptor::BoxPattern { flags } => {
                s.iter().zip(flags).all(|(v, f)| match f {
                    AxisFlag::Zero => true,
                    AxisFlag::NonNeg => *v >= -tau,
                    AxisFlag::NonPos => *v <= tau,
                    AxisFlag::All => v.abs() <= tau,
                })
            }
        }
    }
}

/// Normal cone to a deduplicated finite set at one of its points.
pub fn normal_cone_finite(
    set: &PointSet,
    ybar: &[f64],
    tau_eq: f64,
) -> Result<NormalConeDescriptor> {
    if set.position(ybar, tau_eq).is_none() {
        return Err(Error::PointNotInSet);
    }
    Ok(NormalConeDescriptor::FullSpace { dim: set.dim() })
}

/// Normal cone to the box `[lower, upper]` at `xbar`.
pub fn normal_cone_box(
    lower: &[f64],
    upper: &[f64],
    xbar: &[f64],
    tau_mem: f64,
) -> Result<NormalConeDescriptor> {
    linalg::check_dim(lower.len(), upper)?;
    linalg::check_dim(lower.len(), xbar)?;
    let mut flags = Vec::with_capacity(xbar.len());
    for ((&l, &u), &x) in lower.iter().zip(upper).zip(xbar) {
        if x < l - tau_mem || x > u + tau_mem {
            return Err(Error::PointNotInSet);
        }
        let at_lower = (x - l).abs() <= tau_mem;
        let at_upper = (x - u).abs() <= tau_mem;
        flags.push(match (at_lower, at_upper) {
            (true, true) => AxisFlag::All,
            (true, false) => AxisFlag::NonPos,
            (false, true) => AxisFlag::NonNeg,
            (false, false) => AxisFlag::Zero,
        });
    }
    Ok(NormalConeDescriptor::BoxPattern { flags })
}

/// Normal cone to the feasible set at `xbar`.
pub fn omega_normal_cone(
    omega: &Omega,
    xbar: &[f64],
    tau_mem: f64,
) -> Result<NormalConeDescriptor> {
    match omega {
        Omega::Free => Ok(NormalConeDescriptor::zero(xbar.len())),
        Omega::Box { lower, upper } => normal_cone_box(lower, upper, xbar, tau_mem),
    }
}

/// Coderivative of the unique smooth branch through image point `idx`:
/// the adjoint Jacobian applied to `ystar`. Refuses when two components
/// collide at the point (the local single-graph identification fails).
pub fn coderivative(
    map: &SetMap,
    xbar: &[f64],
    image: &ImageSet,
    idx: usize,
    ystar: &[f64],
) -> Result<Vec<f64>> {
    let i = image.unique_component(idx, 0.0)?;
    let jac = map.jacobian(i, xbar)?;
    linalg::check_dim(jac.len(), ystar)?;
    Ok(transpose_apply(&jac, ystar))
}

/// Record of which boundary-matched image point and which active
/// generator produced a polytope vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexProvenance {
    /// Index of the matched image point in the evaluated anchor image.
    pub z_index: usize,
    /// Index of the active cone generator.
    pub generator: usize,
}

/// A V-polytope with one provenance record per (possibly repeated) vertex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatePolytope {
    pub vertices: Vec<Vec<f64>>,
    pub provenance: Vec<VertexProvenance>,
}

impl EstimatePolytope {
    /// Vertices with duplicates within `tau` removed (for display).
    pub fn deduped_vertices(&self, tau: f64) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for v in &self.vertices {
            if !out.iter().any(|q| linalg::dist(q, v) <= tau) {
                out.push(v.clone());
            }
        }
        out
    }
}

/// The graph polytope in `R^{n+m}` and its first-block projection for a
/// weakly minimal anchor image point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerAssembly {
    /// Vertices `(J_i^T w, -w)` over boundary-matched points and active
    /// generators.
    pub graph: EstimatePolytope,
    /// First-`n` projection: the lower estimate set for this anchor.
    pub estimate: EstimatePolytope,
}

/// The direction polytope in `R^m` and its adjoint image for a weakly
/// maximal anchor image point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpperAssembly {
    /// Vertices `-w` over boundary-matched points and active generators.
    pub directions: EstimatePolytope,
    /// `-J_{i(ybar)}^T h` over direction vertices `h`: the upper estimate.
    pub estimate: EstimatePolytope,
}

fn boundary_matched(ctx: &ConeContext, diff: &[f64], is_self: bool, tau_mem: f64) -> Result<bool> {
    // The self term (diff = 0) sits on the cone boundary exactly; it is
    // admitted unconditionally so a tight band cannot drop it.
    if is_self {
        return Ok(true);
    }
    Ok(ctx.classify(diff, tau_mem)? == Region::Boundary)
}

/// Assembles the graph polytope and its projection at anchor point
/// `ybar_index` of the evaluated image; the anchor must be weakly minimal.
pub fn assemble_lower(
    map: &SetMap,
    ctx: &ConeContext,
    xbar: &[f64],
    image: &ImageSet,
    ybar_index: usize,
    tol: &Tolerances,
) -> Result<LowerAssembly> {
    let points = image.points.points();
    if ybar_index >= points.len() {
        return Err(Error::IndexOutOfRange {
            index: ybar_index,
            dim: points.len(),
        });
    }
    let wmin = minimal_indices(&image.points, ctx, ExtremalKind::WMin, tol.mem)?;
    if !wmin.contains(&ybar_index) {
        return Err(Error::NotWeaklyMinimal);
    }
    let ybar = &points[ybar_index];
    let mut graph = EstimatePolytope {
        vertices: Vec::new(),
        provenance: Vec::new(),
    };
    let mut estimate = EstimatePolytope {
        vertices: Vec::new(),
        provenance: Vec::new(),
    };
    for (k, z) in points.iter().enumerate() {
        let diff = sub(ybar, z);
        if !boundary_matched(ctx, &diff, k == ybar_index, tol.mem)? {
            continue;
        }
        let i = image.unique_component(k, tol.eq)?;
        let jac = map.jacobian(i, xbar)?;
        let face = psi_subdifferential(ctx, &sub(z, ybar), tol.act)?;
        for (w, &j) in face.vertices.iter().zip(&face.active) {
            let xstar = transpose_apply(&jac, w);
            let mut pair = xstar.clone();
            pair.extend(w.iter().map(|v| -v));
            graph.vertices.push(pair);
            graph.provenance.push(VertexProvenance {
                z_index: k,
                generator: j,
            });
            estimate.vertices.push(xstar);
            estimate.provenance.push(VertexProvenance {
                z_index: k,
                generator: j,
            });
        }
    }
    Ok(LowerAssembly { graph, estimate })
}

/// Assembles the direction polytope and its adjoint image at anchor point
/// `ybar_index`; the anchor must be weakly maximal and collision-free.
pub fn assemble_upper(
    map: &SetMap,
    ctx: &ConeContext,
    xbar: &[f64],
    image: &ImageSet,
    ybar_index: usize,
    tol: &Tolerances,
) -> Result<UpperAssembly> {
    let points = image.points.points();
    if ybar_index >= points.len() {
        return Err(Error::IndexOutOfRange {
            index: ybar_index,
            dim: points.len(),
        });
    }
    let wmax = minimal_indices(&image.points, ctx, ExtremalKind::WMax, tol.mem)?;
    if !wmax.contains(&ybar_index) {
        return Err(Error::NotWeaklyMaximal);
    }
    let ybar = &points[ybar_index];
    let i = image.unique_component(ybar_index, tol.eq)?;
    let jac = map.jacobian(i, xbar)?;
    let mut directions = EstimatePolytope {
        vertices: Vec::new(),
        provenance: Vec::new(),
    };
    let mut estimate = EstimatePolytope {
        vertices: Vec::new(),
        provenance: Vec::new(),
    };
    for (k, z) in points.iter().enumerate() {
        let diff = sub(z, ybar);
        if !boundary_matched(ctx, &diff, k == ybar_index, tol.mem)? {
            continue;
        }
        let face = psi_subdifferential(ctx, &sub(ybar, z), tol.act)?;
        for (w, &j) in face.vertices.iter().zip(&face.active) {
            let h: Vec<f64> = w.iter().map(|v| -v).collect();
            directions.vertices.push(h.clone());
            directions.provenance.push(VertexProvenance {
                z_index: k,
                generator: j,
            });
            // -J^T h = J^T w
            let b = transpose_apply(&jac, w);
            estimate.vertices.push(b);
            estimate.provenance.push(VertexProvenance {
                z_index: k,
                generator: j,
            });
        }
    }
    Ok(UpperAssembly {
        directions,
        estimate,
    })
}
