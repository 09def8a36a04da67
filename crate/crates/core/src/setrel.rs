//! Set-order relations between finite sets and extraction of their
//! minimal/maximal subsets.
//!
//! All decisions go through [`ConeContext::classify`] so boundary semantics
//! are banded consistently: the non-strict relations accept boundary
//! membership, the strict ones require interior.

use serde::{Deserialize, Serialize};

use crate::cone::{ConeContext, Region};
use crate::error::Error;
use crate::linalg::{self, sub};
use crate::scalarize::psi;
use crate::Result;

/// Which set relation a query refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Lower,
    Upper,
}

/// Which extremal subset to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtremalKind {
    Min,
    WMin,
    Max,
    WMax,
    SMin,
}

/// A finite deduplicated set of points in `R^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl PointSet {
    /// Deduplicates within `tau_eq` (Euclidean) and validates dimensions.
    pub fn new(points: Vec<Vec<f64>>, tau_eq: f64) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::EmptyPointSet);
        };
        let dim = first.len();
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(points.len());
        for p in points {
            linalg::check_dim(dim, &p)?;
            if !kept.iter().any(|q| linalg::dist(q, &p) <= tau_eq) {
                kept.push(p);
            }
        }
        Ok(PointSet { points: kept, dim })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of `p` within the dedup band, if present.
    pub fn position(&self, p: &[f64], tau_eq: f64) -> Option<usize> {
        self.points
            .iter()
            .position(|q| linalg::dist(q, p) <= tau_eq)
    }
}

fn check_ctx(ctx: &ConeContext, a: &PointSet, b: &PointSet) -> Result<()> {
    if a.dim() != ctx.dim() {
        return Err(Error::DimensionMismatch {
            expected: ctx.dim(),
            found: a.dim(),
        });
    }
    if b.dim() != ctx.dim() {
        return Err(Error::DimensionMismatch {
            expected: ctx.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// `A <=_l B` iff `B ⊆ A + K`: every `b` is dominated by some `a`.
/// Strict version uses `int K`.
pub fn lower_less(
    a: &PointSet,
    b: &PointSet,
    ctx: &ConeContext,
    strict: bool,
    tau_mem: f64,
) -> Result<bool> {
    check_ctx(ctx, a, b)?;
    for bp in b.points() {
        let mut dominated = false;
        for ap in a.points() {
            let region = ctx.classify(&sub(bp, ap), tau_mem)?;
            if region == Region::Interior || (!strict && region == Region::Boundary) {
                dominated = true;
                break;
            }
        }
        if !dominated {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `A <=_u B` iff `A ⊆ B - K`: every `a` lies below some `b`.
pub fn upper_less(
    a: &PointSet,
    b: &PointSet,
    ctx: &ConeContext,
    strict: bool,
    tau_mem: f64,
) -> Result<bool> {
    check_ctx(ctx, a, b)?;
    for ap in a.points() {
        let mut below = false;
        for bp in b.points() {
            let region = ctx.classify(&sub(bp, ap), tau_mem)?;
            if region == Region::Interior || (!strict && region == Region::Boundary) {
                below = true;
                break;
            }
        }
        if !below {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Mutual relation: `A ~ B` in the equivalence induced by `<=_r`.
pub fn set_equivalent(
    a: &PointSet,
    b: &PointSet,
    ctx: &ConeContext,
    relation: Relation,
    tau_mem: f64,
) -> Result<bool> {
    Ok(match relation {
        Relation::Lower => {
            lower_less(a, b, ctx, false, tau_mem)? && lower_less(b, a, ctx, false, tau_mem)?
        }
        Relation::Upper => {
            upper_less(a, b, ctx, false, tau_mem)? && upper_less(b, a, ctx, false, tau_mem)?
        }
    })
}

/// Pairwise-comparison extraction of the requested extremal subset.
///
/// `SMin` (strongly minimal: `A ⊆ y + K`) may be empty; the other kinds are
/// nonempty for finite inputs.
pub fn minimal_elements(
    a: &PointSet,
    ctx: &ConeContext,
    kind: ExtremalKind,
    tau_mem: f64,
) -> Result<PointSet> {
    if a.dim() != ctx.dim() {
        return Err(Error::DimensionMismatch {
            expected: ctx.dim(),
            found: a.dim(),
        });
    }
    let pts = a.points();
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for (i, y) in pts.iter().enumerate() {
        let keep = match kind {
            // WMin: no point strictly below y.
            ExtremalKind::WMin => pts.iter().try_fold(true, |acc, p| -> Result<bool> {
                Ok(acc && ctx.classify(&sub(y, p), tau_mem)? != Region::Interior)
            })?,
            // Min: (y - K) ∩ A = {y}.
            ExtremalKind::Min => pts.iter().enumerate().try_fold(true, |acc, (j, p)| {
                Ok(acc && (j == i || ctx.classify(&sub(y, p), tau_mem)? == Region::Outside))
            })?,
            ExtremalKind::WMax => pts.iter().try_fold(true, |acc, p| -> Result<bool> {
                Ok(acc && ctx.classify(&sub(p, y), tau_mem)? != Region::Interior)
            })?,
            ExtremalKind::Max => pts.iter().enumerate().try_fold(true, |acc, (j, p)| {
                Ok(acc && (j == i || ctx.classify(&sub(p, y), tau_mem)? == Region::Outside))
            })?,
            // SMin: A ⊆ y + K.
            ExtremalKind::SMin => pts.iter().try_fold(true, |acc, p| -> Result<bool> {
                Ok(acc && ctx.classify(&sub(p, y), tau_mem)? != Region::Outside)
            })?,
        };
        if keep {
            kept.push(y.clone());
        }
    }
    Ok(PointSet {
        points: kept,
        dim: a.dim(),
    })
}

/// Indices into `a.points()` of the requested extremal subset.
pub fn minimal_indices(
    a: &PointSet,
    ctx: &ConeContext,
    kind: ExtremalKind,
    tau_mem: f64,
) -> Result<Vec<usize>> {
    let minimal = minimal_elements(a, ctx, kind, tau_mem)?;
    Ok(a.points()
        .iter()
        .enumerate()
        .filter(|(_, p)| minimal.points().iter().any(|q| q == *p))
        .map(|(i, _)| i)
        .collect())
}

/// `sup_{b in B} inf_{a in A} psi(a - b)` for the lower relation,
/// `sup_{a in A} inf_{b in B} psi(a - b)` for the upper relation.
/// Exact max-min over the finite pair grid.
pub fn scalar_gap(
    a: &PointSet,
    b: &PointSet,
    ctx: &ConeContext,
    relation: Relation,
) -> Result<f64> {
    check_ctx(ctx, a, b)?;
    let max_min = |outer: &PointSet, inner: &PointSet, flip: bool| -> Result<f64> {
        let mut sup = f64::NEG_INFINITY;
        for o in outer.points() {
            let mut inf = f64::INFINITY;
            for i in inner.points() {
                let diff = if flip { sub(i, o) } else { sub(o, i) };
                inf = inf.min(psi(ctx, &diff)?);
            }
            sup = sup.max(inf);
        }
        Ok(sup)
    };
    match relation {
        // sup over b of inf over a of psi(a - b)
        Relation::Lower => max_min(b, a, true),
        // sup over a of inf over b of psi(a - b)
        Relation::Upper => max_min(a, b, false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> ConeContext {
        ConeContext::orthant(2)
    }

    fn ps(points: &[[f64; 2]]) -> PointSet {
        PointSet::new(points.iter().map(|p| p.to_vec()).collect(), 1e-9).unwrap()
    }

    #[test]
    fn dedup_and_empty() {
        let s = PointSet::new(vec![vec![1.0, 1.0], vec![1.0, 1.0 + 1e-12]], 1e-9).unwrap();
        assert_eq!(s.len(), 1);
        assert!(matches!(
            PointSet::new(vec![], 1e-9),
            Err(Error::EmptyPointSet)
        ));
    }

    #[test]
    fn lower_less_basic() {
        let ctx = ctx();
        let a = ps(&[[0.0, 0.0]]);
        let b = ps(&[[1.0, 1.0]]);
        assert!(lower_less(&a, &b, &ctx, false, 1e-9).unwrap());
        assert!(lower_less(&a, &b, &ctx, true, 1e-9).unwrap());
    }

    #[test]
    fn lower_less_is_reflexive_but_not_strictly() {
        let ctx = ctx();
        let a = ps(&[[0.3, -0.2], [1.0, 4.0]]);
        assert!(lower_less(&a, &a, &ctx, false, 1e-9).unwrap());
        assert!(!lower_less(&a, &a, &ctx, true, 1e-9).unwrap());
    }

    #[test]
    fn example_f0_self_relation() {
        // F(0) = {(1,-1), (-1,1)} from the golden example.
        let ctx = ctx();
        let a = ps(&[[1.0, -1.0], [-1.0, 1.0]]);
        assert!(lower_less(&a, &a, &ctx, false, 1e-9).unwrap());
        assert!(!lower_less(&a, &a, &ctx, true, 1e-9).unwrap());
    }

    #[test]
    fn upper_less_basic() {
        let ctx = ctx();
        assert!(upper_less(&ps(&[[0.0, 0.0]]), &ps(&[[1.0, 1.0]]), &ctx, false, 1e-9).unwrap());
        assert!(!upper_less(&ps(&[[2.0, 0.0]]), &ps(&[[1.0, 1.0]]), &ctx, false, 1e-9).unwrap());
    }

    #[test]
    fn dominated_point_is_absorbed_in_equivalence() {
        let ctx = ctx();
        let a = ps(&[[0.0, 0.0]]);
        let b = ps(&[[0.0, 0.0], [1.0, 1.0]]);
        assert!(set_equivalent(&a, &b, &ctx, Relation::Lower, 1e-9).unwrap());
        assert!(!set_equivalent(&a, &ps(&[[1.0, 1.0]]), &ctx, Relation::Lower, 1e-9).unwrap());
        assert!(set_equivalent(&a, &a, &ctx, Relation::Lower, 1e-9).unwrap());
    }

    #[test]
    fn minimal_elements_brute_example() {
        let ctx = ctx();
        let a = ps(&[[0.0, 0.0], [1.0, -1.0], [2.0, 2.0]]);
        let wmin = minimal_elements(&a, &ctx, ExtremalKind::WMin, 1e-9).unwrap();
        assert_eq!(wmin.points(), &[vec![0.0, 0.0], vec![1.0, -1.0]]);
        let min = minimal_elements(&a, &ctx, ExtremalKind::Min, 1e-9).unwrap();
        assert_eq!(min.points(), wmin.points());
        // (2,2) - (1,-1) = (1,3) lies in int K, so (1,-1) is strictly
        // dominated from above and only (2,2) is weakly maximal.
        let wmax = minimal_elements(&a, &ctx, ExtremalKind::WMax, 1e-9).unwrap();
        assert_eq!(wmax.points(), &[vec![2.0, 2.0]]);
        let max = minimal_elements(&a, &ctx, ExtremalKind::Max, 1e-9).unwrap();
        assert_eq!(max.points(), wmax.points());
        let smin = minimal_elements(&a, &ctx, ExtremalKind::SMin, 1e-9).unwrap();
        assert!(smin.is_empty());
    }

    #[test]
    fn example_image_is_its_own_wmin_and_wmax() {
        let ctx = ctx();
        let a = ps(&[[1.0, -1.0], [-1.0, 1.0]]);
        for kind in [ExtremalKind::WMin, ExtremalKind::WMax] {
            let m = minimal_elements(&a, &ctx, kind, 1e-9).unwrap();
            assert_eq!(m.points(), a.points());
        }
    }

    #[test]
    fn singleton_is_extremal_in_every_sense() {
        let ctx = ctx();
        let a = ps(&[[0.4, -3.0]]);
        for kind in [
            ExtremalKind::Min,
            ExtremalKind::WMin,
            ExtremalKind::Max,
            ExtremalKind::WMax,
            ExtremalKind::SMin,
        ] {
            assert_eq!(
                minimal_elements(&a, &ctx, kind, 1e-9).unwrap().points(),
                a.points()
            );
        }
    }

    #[test]
    fn scalar_gap_examples() {
        let ctx = ctx();
        let gap = scalar_gap(
            &ps(&[[0.0, 0.0]]),
            &ps(&[[1.0, 1.0]]),
            &ctx,
            Relation::Lower,
        )
        .unwrap();
        assert!((gap - (-1.0)).abs() < 1e-12);
        let a = ps(&[[0.7, -0.3], [2.0, 1.0]]);
        assert!(scalar_gap(&a, &a, &ctx, Relation::Lower).unwrap() <= 0.0);
        let gap = scalar_gap(
            &ps(&[[2.0, 0.0]]),
            &ps(&[[0.0, 0.0]]),
            &ctx,
            Relation::Lower,
        )
        .unwrap();
        assert!((gap - 2.0).abs() < 1e-12);
        let a = ps(&[[2.0, 0.0]]);
        let b = ps(&[[0.0, 0.0]]);
        assert!(!lower_less(&a, &b, &ctx, false, 1e-9).unwrap());
    }

    #[test]
    fn domination_property_on_random_sets() {
        use rand::prelude::*;
        let ctx = ctx();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let pts: Vec<Vec<f64>> = (0..rng.random_range(1..8))
                .map(|_| (0..2).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let a = PointSet::new(pts, 1e-9).unwrap();
            let min = minimal_elements(&a, &ctx, ExtremalKind::Min, 1e-9).unwrap();
            for p in a.points() {
                let dominated = min
                    .points()
                    .iter()
                    .any(|m| ctx.classify(&sub(p, m), 1e-9).unwrap() != Region::Outside);
                assert!(dominated, "domination property violated");
            }
            // WMin ⊇ Min, WMax ⊇ Max
            let wmin = minimal_elements(&a, &ctx, ExtremalKind::WMin, 1e-9).unwrap();
            for m in min.points() {
                assert!(wmin.points().contains(m));
            }
        }
    }

    #[test]
    fn minimal_elements_invariant_under_permutation() {
        let ctx = ctx();
        let a = ps(&[[0.0, 0.0], [1.0, -1.0], [2.0, 2.0], [-0.5, 3.0]]);
        let b = ps(&[[-0.5, 3.0], [2.0, 2.0], [0.0, 0.0], [1.0, -1.0]]);
        let ma = minimal_elements(&a, &ctx, ExtremalKind::WMin, 1e-9).unwrap();
        let mb = minimal_elements(&b, &ctx, ExtremalKind::WMin, 1e-9).unwrap();
        let mut sa: Vec<_> = ma.points().to_vec();
        let mut sb: Vec<_> = mb.points().to_vec();
        sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
        sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(sa, sb);
    }

    #[test]
    fn gap_sign_matches_relation_on_constructed_pairs() {
        use rand::prelude::*;
        let ctx = ctx();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let pts: Vec<Vec<f64>> = (0..rng.random_range(1..5))
                .map(|_| (0..2).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let a = PointSet::new(pts, 1e-9).unwrap();
            // B = A + k for k in K makes A <=_l B and A <=_u B.
            let k = [rng.random_range(0.01..1.0), rng.random_range(0.01..1.0)];
            let b = PointSet::new(
                a.points()
                    .iter()
                    .map(|p| vec![p[0] + k[0], p[1] + k[1]])
                    .collect(),
                1e-9,
            )
            .unwrap();
            assert!(lower_less(&a, &b, &ctx, false, 1e-9).unwrap());
            assert!(upper_less(&a, &b, &ctx, false, 1e-9).unwrap());
            assert!(scalar_gap(&a, &b, &ctx, Relation::Lower).unwrap() <= 1e-9);
            assert!(scalar_gap(&a, &b, &ctx, Relation::Upper).unwrap() <= 1e-9);
        }
    }
}
