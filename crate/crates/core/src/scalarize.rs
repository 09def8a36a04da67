//! The Gerstewitz functional `psi(y) = inf{t : y in t*e - K}` and its
//! convex subdifferential.
//!
//! For a polyhedral cone in dual representation the infimum collapses to
//! `max_j <w_j, y>` with `w_j = d_j / <d_j, e>`, and the subdifferential at
//! `y` is the convex hull of the active `w_j`. The infimum definition is
//! kept alive in the test suite as an independent bisection oracle.

use serde::{Deserialize, Serialize};

use crate::cone::ConeContext;
use crate::linalg::{self, dot};
use crate::Result;

/// A face of the subdifferential, represented by the (possibly redundant)
/// generating vertices that are active at the evaluation point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubdifferentialFace {
    /// Active normalized generators `w_j`; the face is their convex hull.
    pub vertices: Vec<Vec<f64>>,
    /// Indices of the active generators in the cone context.
    pub active: Vec<usize>,
    /// `psi(y)` at the evaluation point.
    pub value: f64,
}

/// `psi(y) = max_j <w_j, y>`.
pub fn psi(ctx: &ConeContext, y: &[f64]) -> Result<f64> {
    linalg::check_dim(ctx.dim(), y)?;
    Ok(ctx
        .normalized_generators()
        .iter()
        .map(|w| dot(w, y))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// The subdifferential face at `ybar`: all `w_j` whose value comes within
/// `tau_act * (1 + |psi(ybar)|)` of the maximum.
pub fn psi_subdifferential(
    ctx: &ConeContext,
    ybar: &[f64],
    tau_act: f64,
) -> Result<SubdifferentialFace> {
    linalg::check_dim(ctx.dim(), ybar)?;
    let values: Vec<f64> = ctx
        .normalized_generators()
        .iter()
        .map(|w| dot(w, ybar))
        .collect();
    let value = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let band = tau_act * (1.0 + value.abs());
    let active: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= value - band)
        .map(|(j, _)| j)
        .collect();
    let vertices = active
        .iter()
        .map(|&j| ctx.normalized_generators()[j].clone())
        .collect();
    Ok(SubdifferentialFace {
        vertices,
        active,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::ConeContext;

    /// Bisection on `t` over the membership test `y in t*e - K`, i.e.
    /// `<d_j, t*e - y> >= 0` for all `j`. Independent of the closed form.
    pub(crate) fn psi_bisect(ctx: &ConeContext, y: &[f64], tol: f64) -> f64 {
        let member = |t: f64| {
            ctx.dual_generators().iter().all(|d| {
                let te: Vec<f64> = ctx.e().iter().zip(y).map(|(e, yi)| t * e - yi).collect();
                dot(d, &te) >= 0.0
            })
        };
        let mut hi = 1.0;
        while !member(hi) {
            hi *= 2.0;
            assert!(hi < 1e12, "bisection bracket blew up");
        }
        let mut lo = -1.0;
        while member(lo) {
            lo *= 2.0;
            assert!(lo > -1e12, "bisection bracket blew up");
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if member(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn example_ctx() -> ConeContext {
        ConeContext::orthant(2)
    }

    #[test]
    fn psi_at_zero_is_zero() {
        assert_eq!(psi(&example_ctx(), &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn psi_matches_bisection_oracle() {
        let ctx = example_ctx();
        let oracle = psi_bisect(&ctx, &[-2.0, 2.0], 1e-12);
        assert!((oracle - 2.0).abs() < 1e-9);
        assert!((psi(&ctx, &[-2.0, 2.0]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn psi_along_e_is_translative() {
        let ctx = example_ctx();
        let t = 3.5;
        let y: Vec<f64> = ctx.e().iter().map(|e| t * e).collect();
        assert!((psi(&ctx, &y).unwrap() - t).abs() < 1e-12);
    }

    #[test]
    fn subdifferential_at_zero_is_full_simplex() {
        let face = psi_subdifferential(&example_ctx(), &[0.0, 0.0], 1e-8).unwrap();
        assert_eq!(face.vertices, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(face.value, 0.0);
    }

    #[test]
    fn subdifferential_single_active_generator() {
        let face = psi_subdifferential(&example_ctx(), &[-2.0, 2.0], 1e-8).unwrap();
        assert_eq!(face.vertices, vec![vec![0.0, 1.0]]);
        assert_eq!(face.value, 2.0);
    }

    #[test]
    fn subdifferential_ties_on_the_diagonal() {
        let face = psi_subdifferential(&example_ctx(), &[5.0, 5.0], 1e-8).unwrap();
        assert_eq!(face.vertices.len(), 2);
        assert_eq!(face.value, 5.0);
    }

    #[test]
    fn face_vertices_reproduce_the_value() {
        let ctx =
            ConeContext::build(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![1.0, 1.0], 1e-9).unwrap();
        let y = [0.3, -1.7];
        let face = psi_subdifferential(&ctx, &y, 1e-8).unwrap();
        assert!(!face.vertices.is_empty());
        for w in &face.vertices {
            assert!((dot(w, ctx.e()) - 1.0).abs() < 1e-12);
            assert!((dot(w, &y) - face.value).abs() < 1e-8 * (1.0 + face.value.abs()));
        }
    }
}
