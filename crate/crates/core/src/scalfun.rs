//! The scalarization functionals built from the Gerstewitz functional:
//! the inner functions `g_l`, `g_u` and the sup-inf functionals `f_l`,
//! `f_u`, together with their argmin/argmax witness sets (the solution
//! maps S^{l,1}, S^{l,2}, S^{u,1}, S^{u,2}).
//!
//! All optimizations are exhaustive over the finite images; ties within
//! the active band are all kept because the downstream polytope unions
//! range over whole solution sets.

use serde::{Deserialize, Serialize};

use crate::cone::ConeContext;
use crate::linalg::sub;
use crate::scalarize::psi;
use crate::setmap::{ImageSet, SetMap};
use crate::tol::Tolerances;
use crate::Result;

/// Value of an inner optimization together with its witness indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InnerResult {
    pub value: f64,
    /// Indices into the moving image attaining the inner infimum.
    pub argmin: Vec<usize>,
}

/// Value of a sup-inf scalarization with full witness structure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarizationResult {
    pub value: f64,
    /// Indices into the anchor image `F(xbar)` (lower relation) or the
    /// moving image `F(x)` (upper relation) attaining the outer supremum.
    pub outer_witnesses: Vec<usize>,
    /// For each outer witness, the indices attaining the inner infimum.
    pub inner_witnesses: Vec<Vec<usize>>,
    pub tau_act: f64,
}

/// `g_l(x, z) = min_{y in F(x)} psi(y - z)` over an evaluated image.
pub fn g_lower_image(
    image: &ImageSet,
    ctx: &ConeContext,
    z: &[f64],
    tol: &Tolerances,
) -> Result<InnerResult> {
    inner_min(image, ctx, z, tol, false)
}

/// `g_u(y) = min_{ybar in F(xbar)} psi(y - ybar)` over the anchor image.
pub fn g_upper_image(
    anchor: &ImageSet,
    ctx: &ConeContext,
    y: &[f64],
    tol: &Tolerances,
) -> Result<InnerResult> {
    inner_min(anchor, ctx, y, tol, true)
}

fn inner_min(
    image: &ImageSet,
    ctx: &ConeContext,
    fixed: &[f64],
    tol: &Tolerances,
    fixed_is_moving: bool,
) -> Result<InnerResult> {
    let mut values = Vec::with_capacity(image.points.len());
    for p in image.points.points() {
        let diff = if fixed_is_moving {
            sub(fixed, p)
        } else {
            sub(p, fixed)
        };
        values.push(psi(ctx, &diff)?);
    }
    let value = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let band = tol.act_at(value);
    let argmin = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= value + band)
        .map(|(i, _)| i)
        .collect();
    Ok(InnerResult { value, argmin })
}

/// `g_l(x, z)` evaluated from the map.
pub fn g_lower(
    map: &SetMap,
    ctx: &ConeContext,
    x: &[f64],
    z: &[f64],
    tol: &Tolerances,
) -> Result<InnerResult> {
    let image = map.evaluate(x, tol.eq)?;
    g_lower_image(&image, ctx, z, tol)
}

/// `g_u(xbar; y)` evaluated from the map.
pub fn g_upper(
    map: &SetMap,
    ctx: &ConeContext,
    xbar: &[f64],
    y: &[f64],
    tol: &Tolerances,
) -> Result<InnerResult> {
    let anchor = map.evaluate(xbar, tol.eq)?;
    g_upper_image(&anchor, ctx, y, tol)
}

/// `f_l(xbar; x) = max_{ybar in F(xbar)} min_{y in F(x)} psi(y - ybar)`.
pub fn f_lower(
    map: &SetMap,
    ctx: &ConeContext,
    xbar: &[f64],
    x: &[f64],
    tol: &Tolerances,
) -> Result<ScalarizationResult> {
    let anchor = map.evaluate(xbar, tol.eq)?;
    let moving = map.evaluate(x, tol.eq)?;
    f_lower_images(&anchor, &moving, ctx, tol)
}

pub fn f_lower_images(
    anchor: &ImageSet,
    moving: &ImageSet,
    ctx: &ConeContext,
    tol: &Tolerances,
) -> Result<ScalarizationResult> {
    let inner: Vec<InnerResult> = anchor
        .points
        .points()
        .iter()
        .map(|ybar| inner_min(moving, ctx, ybar, tol, false))
        .collect::<Result<_>>()?;
    Ok(outer_max(inner, tol))
}

/// `f_u(xbar; x) = max_{y in F(x)} min_{ybar in F(xbar)} psi(y - ybar)`.
pub fn f_upper(
    map: &SetMap,
    ctx: &ConeContext,
    xbar: &[f64],
    x: &[f64],
    tol: &Tolerances,
) -> Result<ScalarizationResult> {
    let anchor = map.evaluate(xbar, tol.eq)?;
    let moving = map.evaluate(x, tol.eq)?;
    f_upper_images(&anchor, &moving, ctx, tol)
}

pub fn f_upper_images(
    anchor: &ImageSet,
    moving: &ImageSet,
    ctx: &ConeContext,
    tol: &Tolerances,
) -> Result<ScalarizationResult> {
    let inner: Vec<InnerResult> = moving
        .points
        .points()
        .iter()
        .map(|y| inner_min(anchor, ctx, y, tol, true))
        .collect::<Result<_>>()?;
    Ok(outer_max(inner, tol))
}

fn outer_max(inner: Vec<InnerResult>, tol: &Tolerances) -> ScalarizationResult {
    let value = inner
        .iter()
        .map(|r| r.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let band = tol.act_at(value);
    let mut outer_witnesses = Vec::new();
    let mut inner_witnesses = Vec::new();
    for (i, r) in inner.iter().enumerate() {
        if r.value >= value - band {
            outer_witnesses.push(i);
            inner_witnesses.push(r.argmin.clone());
        }
    }
    ScalarizationResult {
        value,
        outer_witnesses,
        inner_witnesses,
        tau_act: tol.act,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setmap::SetMap;

    fn ctx() -> ConeContext {
        ConeContext::orthant(2)
    }

    fn example_map() -> SetMap {
        SetMap::parse(
            1,
            2,
            &[
                vec!["x1 + 1".into(), "x1 - 1".into()],
                vec!["-(x1 + 1)".into(), "-(x1 - 1)".into()],
            ],
        )
        .unwrap()
    }

    fn singleton_diag() -> SetMap {
        SetMap::parse(1, 2, &[vec!["x1".into(), "x1".into()]]).unwrap()
    }

    #[test]
    fn g_lower_example_values() {
        let tol = Tolerances::default();
        let r = g_lower(&example_map(), &ctx(), &[0.0], &[1.0, -1.0], &tol).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.argmin, vec![0]); // attained by (1,-1) itself
    }

    #[test]
    fn g_lower_negative_when_strictly_dominated_anchor() {
        // z = image point + k, k in int K  =>  value < 0.
        let tol = Tolerances::default();
        let r = g_lower(&example_map(), &ctx(), &[0.0], &[1.5, -0.5], &tol).unwrap();
        assert!(r.value < 0.0);
    }

    #[test]
    fn g_upper_example_values() {
        let tol = Tolerances::default();
        let r = g_upper(&example_map(), &ctx(), &[0.0], &[1.0, -1.0], &tol).unwrap();
        assert_eq!(r.value, 0.0);
        // y = ybar - k with k in int K gives a negative value.
        let r = g_upper(&example_map(), &ctx(), &[0.0], &[0.5, -1.5], &tol).unwrap();
        assert!(r.value < 0.0);
    }

    #[test]
    fn f_lower_at_anchor_is_zero_with_all_witnesses() {
        let tol = Tolerances::default();
        let r = f_lower(&example_map(), &ctx(), &[0.0], &[0.0], &tol).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.outer_witnesses, vec![0, 1]); // WMin = F(xbar)
    }

    #[test]
    fn f_upper_at_anchor_is_zero_with_all_witnesses() {
        let tol = Tolerances::default();
        let r = f_upper(&example_map(), &ctx(), &[0.0], &[0.0], &tol).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.outer_witnesses, vec![0, 1]); // WMax = F(xbar)
    }

    #[test]
    fn singleton_map_f_lower_is_the_coordinate() {
        let tol = Tolerances::default();
        for x in [-1.0, -0.2, 0.3, 2.0] {
            let r = f_lower(&singleton_diag(), &ctx(), &[0.0], &[x], &tol).unwrap();
            assert!((r.value - x).abs() < 1e-12);
            let r = f_upper(&singleton_diag(), &ctx(), &[0.0], &[x], &tol).unwrap();
            assert!((r.value - x).abs() < 1e-12);
        }
    }

    #[test]
    fn g_zero_characterizes_wmin_wmax() {
        use crate::setrel::{minimal_indices, ExtremalKind, PointSet};
        use rand::prelude::*;
        let ctx = ctx();
        let tol = Tolerances::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let pts: Vec<Vec<f64>> = (0..rng.random_range(1..6))
                .map(|_| (0..2).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let set = PointSet::new(pts, tol.eq).unwrap();
            let image = ImageSet {
                points: set.clone(),
                provenance: (0..set.len()).map(|i| vec![i]).collect(),
            };
            let wmin = minimal_indices(&set, &ctx, ExtremalKind::WMin, tol.mem).unwrap();
            let wmax = minimal_indices(&set, &ctx, ExtremalKind::WMax, tol.mem).unwrap();
            for (i, p) in set.points().iter().enumerate() {
                let gl = g_lower_image(&image, &ctx, p, &tol).unwrap().value;
                assert_eq!(
                    gl.abs() <= 1e-9,
                    wmin.contains(&i),
                    "g_l zero-level mismatch"
                );
                let gu = g_upper_image(&image, &ctx, p, &tol).unwrap().value;
                assert_eq!(
                    gu.abs() <= 1e-9,
                    wmax.contains(&i),
                    "g_u zero-level mismatch"
                );
            }
        }
    }

    #[test]
    fn witness_pairs_reproduce_the_value() {
        let tol = Tolerances::default();
        let map = example_map();
        let c = ctx();
        let anchor = map.evaluate(&[0.0], tol.eq).unwrap();
        let moving = map.evaluate(&[0.3], tol.eq).unwrap();
        let r = f_lower_images(&anchor, &moving, &c, &tol).unwrap();
        for (o, inner) in r.outer_witnesses.iter().zip(&r.inner_witnesses) {
            for i in inner {
                let diff = sub(&moving.points.points()[*i], &anchor.points.points()[*o]);
                let v = psi(&c, &diff).unwrap();
                assert!((v - r.value).abs() <= tol.act_at(r.value));
            }
        }
    }

    #[test]
    fn augmentation_leaves_lower_functionals_unchanged() {
        let tol = Tolerances::default();
        let map = example_map();
        let aug = map.augmented(&[1.0, 1.0]).unwrap();
        let c = ctx();
        for x in [-0.7, 0.0, 0.4, 1.3] {
            let base = f_lower(&map, &c, &[0.0], &[x], &tol).unwrap().value;
            let shifted = f_lower(&aug, &c, &[0.0], &[x], &tol).unwrap().value;
            assert!((base - shifted).abs() <= 1e-12);
        }
    }
}
