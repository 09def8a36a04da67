//! Fermat-rule stationarity tests: lower and upper set-relation
//! stationarity (zero-membership of the anchored estimate polytopes plus
//! the feasible-set normal cone) and the vector-approach contrast test.

use serde::{Deserialize, Serialize};

use crate::cone::ConeContext;
use crate::error::Error;
use crate::hull::{contains_zero, MembershipCertificate};
use crate::linalg::{self, transpose_apply};
use crate::normals::{
    assemble_lower, assemble_upper, omega_normal_cone, NormalConeDescriptor, VertexProvenance,
};
use crate::problem::Omega;
use crate::setmap::SetMap;
use crate::setrel::{minimal_indices, ExtremalKind};
use crate::tol::Tolerances;
use crate::Result;

/// Which stationarity notion a certificate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StationarityRelation {
    Lower,
    Upper,
    Vector,
}

/// One anchor's contribution to the union polytope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnchorAssembly {
    /// The anchor image point (weakly minimal/maximal element, or the
    /// branch value for the vector test).
    pub anchor: Vec<f64>,
    /// Its index in the evaluated image.
    pub anchor_index: usize,
    /// Estimate vertices contributed by this anchor.
    pub vertices: Vec<Vec<f64>>,
    pub provenance: Vec<VertexProvenance>,
}

/// Full certificate of a stationarity decision.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationarityCertificate {
    pub relation: StationarityRelation,
    pub stationary: bool,
    pub residual: f64,
    pub per_anchor: Vec<AnchorAssembly>,
    pub membership: MembershipCertificate,
    pub omega_normal: NormalConeDescriptor,
}

impl StationarityCertificate {
    /// Re-evaluates the convex combination recorded in the membership
    /// certificate from the per-anchor vertices; the distance between the
    /// replayed point (plus normal part) and zero is the residual.
    pub fn replay_residual(&self) -> f64 {
        let all: Vec<&Vec<f64>> = self
            .per_anchor
            .iter()
            .flat_map(|a| a.vertices.iter())
            .collect();
        let dim = all.first().map_or(0, |v| v.len());
        let mut point = vec![0.0; dim];
        for (v, &l) in all.iter().zip(&self.membership.coefficients) {
            linalg::axpy(&mut point, l, v);
        }
        for (p, u) in point.iter_mut().zip(&self.membership.normal_part) {
            *p += u;
        }
        linalg::norm(&point)
    }
}

fn union_membership(
    relation: StationarityRelation,
    per_anchor: Vec<AnchorAssembly>,
    omega_normal: NormalConeDescriptor,
    tau_stat: f64,
) -> Result<StationarityCertificate> {
    let union: Vec<Vec<f64>> = per_anchor
        .iter()
        .flat_map(|a| a.vertices.iter().cloned())
        .collect();
    let membership = contains_zero(&union, &omega_normal, tau_stat)?;
    Ok(StationarityCertificate {
        relation,
        stationary: membership.decision,
        residual: membership.residual,
        per_anchor,
        membership,
        omega_normal,
    })
}

/// Lower-relation Fermat rule: zero-membership of the convex hull of all
/// weakly minimal anchors' estimate sets plus the feasible normal cone.
pub fn lower_stationarity(
    map: &SetMap,
    ctx: &ConeContext,
    xbar: &[f64],
    omega: &Omega,
    tol: &Tolerances,
) -> Result<StationarityCertificate> {
    if !omega.contains(xbar, tol.mem) {
        return Err(Error::NotInOmega);
    }
    let image = map.evaluate(xbar, tol.eq)?;
    let anchors = minimal_indices(&image.points, ctx, ExtremalKind::WMin, tol.mem)?;
    let mut per_anchor = Vec::with_capacity(anchors.len());
    for &idx in &anchors {
        let asm = assemble_lower(map, ctx, xbar, &image, idx, tol)?;
        per_anchor.push(AnchorAssembly {
            anchor: image.points.points()[idx].clone(),
            anchor_index: idx,
            vertices: asm.estimate.vertices,
            provenance: asm.estimate.provenance,
        });
    }
    let normal = omega_normal_cone(omega, xbar, tol.mem)?;
    union_membership(StationarityRelation::Lower, per_anchor, normal, tol.stat)
}

/// Upper-relation Fermat rule over the weakly maximal anchors.
pub fn upper_stationarity(
    map: &SetMap,
    ctx: &ConeContext,
    xbar: &[f64],
    omega: &Omega,
    tol: &Tolerances,
) -> Result<StationarityCertificate> {
    if !omega.contains(xbar, tol.mem) {
        return Err(Error::NotInOmega);
    }
    let image = map.evaluate(xbar, tol.eq)?;
    let anchors = minimal_indices(&image.points, ctx, ExtremalKind::WMax, tol.mem)?;
    let mut per_anchor = Vec::with_capacity(anchors.len());
    for &idx in &anchors {
        let asm = assemble_upper(map, ctx, xbar, &image, idx, tol)?;
        per_anchor.push(AnchorAssembly {
            anchor: image.points.points()[idx].clone(),
            anchor_index: idx,
            vertices: asm.estimate.vertices,
            provenance: asm.estimate.provenance,
        });
    }
    let normal = omega_normal_cone(omega, xbar, tol.mem)?;
    union_membership(StationarityRelation::Upper, per_anchor, normal, tol.stat)
}

/// Vector-approach stationarity: some branch admits a nonzero dual
/// direction in the dual cone that the adjoint Jacobian annihilates.
/// Decided per component via zero-membership of `{J_i^T w_j}`: a convex
/// zero combination yields the witness `y* = sum lambda_j w_j`, which is
/// nonzero because `<w_j, e> = 1` for every generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorStationarity {
    pub stationary: bool,
    /// Component index realizing the condition, when stationary.
    pub component: Option<usize>,
    /// The dual witness `y*`, when stationary.
    pub witness: Option<Vec<f64>>,
    /// Smallest per-component membership residual.
    pub residual: f64,
    pub certificate: StationarityCertificate,
}

pub fn vector_stationarity(
    map: &SetMap,
    ctx: &ConeContext,
    xbar: &[f64],
    tol: &Tolerances,
) -> Result<VectorStationarity> {
    let image = map.evaluate(xbar, tol.eq)?;
    let zero = NormalConeDescriptor::zero(map.n());
    let mut best: Option<(usize, usize, MembershipCertificate)> = None;
    let mut per_anchor = Vec::new();
    for (k, point) in image.points.points().iter().enumerate() {
        let i = image.unique_component(k, tol.eq)?;
        let jac = map.jacobian(i, xbar)?;
        let vertices: Vec<Vec<f64>> = ctx
            .normalized_generators()
            .iter()
            .map(|w| transpose_apply(&jac, w))
            .collect();
        let cert = contains_zero(&vertices, &zero, tol.stat)?;
        per_anchor.push(AnchorAssembly {
            anchor: point.clone(),
            anchor_index: k,
            vertices,
            provenance: (0..ctx.normalized_generators().len())
                .map(|j| VertexProvenance {
                    z_index: k,
                    generator: j,
                })
                .collect(),
        });
        let better = best
            .as_ref()
            .is_none_or(|(_, _, b)| cert.residual < b.residual);
        if better {
            best = Some((i, k, cert));
        }
    }
    let (component, _k, membership) = best.expect("nonempty image");
    let stationary = membership.decision;
    let witness = if stationary {
        let mut y = vec![0.0; ctx.dim()];
        for (w, &l) in ctx
            .normalized_generators()
            .iter()
            .zip(&membership.coefficients)
        {
            linalg::axpy(&mut y, l, w);
        }
        Some(y)
    } else {
        None
    };
    let residual = membership.residual;
    Ok(VectorStationarity {
        stationary,
        component: if stationary { Some(component) } else { None },
        witness,
        residual,
        certificate: StationarityCertificate {
            relation: StationarityRelation::Vector,
            stationary,
            residual,
            per_anchor,
            membership,
            omega_normal: NormalConeDescriptor::zero(map.n()),
        },
    })
}
