//! Convex-geometry kernel: min-norm point in a V-polytope (Wolfe's
//! method), zero-membership in `conv(V) + N` for a structured normal cone
//! `N`, coordinate projections and linear images.
//!
//! Membership is always certified: a convex-combination/normal-part pair
//! when inside, a separating direction when outside.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{self, dot, norm};
use crate::normals::NormalConeDescriptor;
use crate::Result;

const WEIGHT_FLOOR: f64 = 1e-12;
const MAJOR_CAP: usize = 1000;
const MINOR_CAP: usize = 200;
const ALTERNATE_CAP: usize = 500;

/// Output of the min-norm-point computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinNormPoint {
    pub point: Vec<f64>,
    pub distance: f64,
    /// Convex coefficients over the input vertex list (full length).
    pub lambda: Vec<f64>,
}

/// Certified answer to `0 in conv(V) + N`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MembershipCertificate {
    pub decision: bool,
    /// Convex coefficients over the vertices.
    pub coefficients: Vec<f64>,
    /// The normal-cone summand at the optimum.
    pub normal_part: Vec<f64>,
    /// Distance from 0 to `conv(V) + N`.
    pub residual: f64,
    /// Separating direction when the decision is negative:
    /// `<witness, v> >= residual` for every `v` in `conv(V) + N`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    /// True when the residual falls near the decision band.
    pub marginal: bool,
}

fn check_vertices(vertices: &[Vec<f64>]) -> Result<usize> {
    let Some(first) = vertices.first() else {
        return Err(Error::EmptyPointSet);
    };
    let dim = first.len();
    for v in vertices {
        linalg::check_dim(dim, v)?;
    }
    Ok(dim)
}

/// Minimizer of `||sum mu_a p_a||` over the affine hull of the active
/// points (`sum mu = 1`), via the bordered Gram system. `None` when the
/// system is numerically singular.
fn affine_minimizer(points: &[Vec<f64>], active: &[usize]) -> Option<Vec<f64>> {
    let k = active.len();
    let mut system = vec![vec![0.0; k + 1]; k + 1];
    let mut rhs = vec![0.0; k + 1];
    rhs[0] = 1.0;
    for a in 0..k {
        system[0][a + 1] = 1.0;
        system[a + 1][0] = 1.0;
        for b in 0..k {
            system[a + 1][b + 1] = dot(&points[active[a]], &points[active[b]]);
        }
    }
    let sol = linalg::solve(system, rhs)?;
    Some(sol[1..].to_vec())
}

/// The norm-minimal point of the convex hull, with certifying convex
/// coefficients. Wolfe's major/minor cycle method.
pub fn min_norm_point(vertices: &[Vec<f64>], tau: f64) -> Result<MinNormPoint> {
    let dim = check_vertices(vertices)?;
    // Start from the shortest vertex.
    let mut start = 0;
    for (i, v) in vertices.iter().enumerate() {
        if norm(v) < norm(&vertices[start]) {
            start = i;
        }
    }
    let mut active: Vec<usize> = vec![start];
    let mut weights: Vec<f64> = vec![1.0];
    let mut x = vertices[start].clone();

    for _ in 0..MAJOR_CAP {
        let xx = dot(&x, &x);
        // Most-improving vertex under the current point.
        let mut j = 0;
        let mut best = f64::INFINITY;
        for (i, v) in vertices.iter().enumerate() {
            let c = dot(&x, v);
            if c < best {
                best = c;
                j = i;
            }
        }
        if best >= xx - tau.max(1e-14) * (1.0 + xx) || active.contains(&j) {
            return Ok(finish(vertices, &active, &weights, x));
        }
        active.push(j);
        weights.push(0.0);

        let mut minor_ok = false;
        for _ in 0..MINOR_CAP {
            let Some(v) = affine_minimizer(vertices, &active) else {
                // Singular Gram system: discard the weakest active point
                // (never the one just added) and retry.
                let drop = weights[..weights.len() - 1]
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                active.remove(drop);
                weights.remove(drop);
                if active.len() == 1 {
                    weights[0] = 1.0;
                    minor_ok = true;
                    break;
                }
                continue;
            };
            if v.iter().all(|&vi| vi > WEIGHT_FLOOR) {
                weights = v;
                minor_ok = true;
                break;
            }
            // Step toward the affine minimizer until a weight vanishes.
            let mut theta: f64 = 1.0;
            for (wi, vi) in weights.iter().zip(&v) {
                if *vi <= WEIGHT_FLOOR && wi - vi > 0.0 {
                    theta = theta.min(wi / (wi - vi));
                }
            }
            for (wi, vi) in weights.iter_mut().zip(&v) {
                *wi += theta * (vi - *wi);
            }
            let mut keep_active = Vec::new();
            let mut keep_weights = Vec::new();
            for (&a, &w) in active.iter().zip(&weights) {
                if w > WEIGHT_FLOOR {
                    keep_active.push(a);
                    keep_weights.push(w);
                }
            }
            let total: f64 = keep_weights.iter().sum();
            for w in &mut keep_weights {
                *w /= total;
            }
            active = keep_active;
            weights = keep_weights;
            if active.len() == 1 {
                minor_ok = true;
                break;
            }
        }
        if !minor_ok {
            return Err(Error::ToleranceNotReached {
                cap: MINOR_CAP,
                tol: tau,
            });
        }
        x = vec![0.0; dim];
        for (&a, &w) in active.iter().zip(&weights) {
            linalg::axpy(&mut x, w, &vertices[a]);
        }
    }
    Err(Error::ToleranceNotReached {
        cap: MAJOR_CAP,
        tol: tau,
    })
}

fn finish(vertices: &[Vec<f64>], active: &[usize], weights: &[f64], x: Vec<f64>) -> MinNormPoint {
    let mut lambda = vec![0.0; vertices.len()];
    for (&a, &w) in active.iter().zip(weights) {
        lambda[a] += w;
    }
    MinNormPoint {
        distance: norm(&x),
        point: x,
        lambda,
    }
}

/// Decides `0 in conv(V) + N` and certifies the decision.
///
/// `N` must be a box-pattern cone (the full-space descriptor belongs to
/// image space and never reaches this test). Alternating exact
/// minimization over the convex coefficients and the normal part; both
/// subproblems are solved exactly, and the objective is jointly convex,
/// so the alternation reaches the global distance.
pub fn contains_zero(
    vertices: &[Vec<f64>],
    normal: &NormalConeDescriptor,
    tau_stat: f64,
) -> Result<MembershipCertificate> {
    let dim = check_vertices(vertices)?;
    if matches!(normal, NormalConeDescriptor::FullSpace { .. }) {
        return Err(Error::Domain(
            "full-space normal cones arise in image space and are not valid here".into(),
        ));
    }
    if normal.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: normal.dim(),
        });
    }
    let inner_tau = (tau_stat * 1e-3).min(1e-10);
    let mut u = vec![0.0; dim];
    let mut lambda;
    let mut residual;
    let mut point;
    if normal.is_zero() {
        let mnp = min_norm_point(vertices, inner_tau)?;
        lambda = mnp.lambda;
        residual = mnp.distance;
        point = mnp.point;
    } else {
        let mut prev = f64::INFINITY;
        let mut iters = 0;
        loop {
            let shifted: Vec<Vec<f64>> = vertices
                .iter()
                .map(|v| v.iter().zip(&u).map(|(a, b)| a + b).collect())
                .collect();
            let mnp = min_norm_point(&shifted, inner_tau)?;
            lambda = mnp.lambda;
            // Recover V*lambda and re-optimize the normal part.
            let mut r = vec![0.0; dim];
            for (v, &l) in vertices.iter().zip(&lambda) {
                linalg::axpy(&mut r, l, v);
            }
            u = normal.clamp(&r);
            point = r.iter().zip(&u).map(|(a, b)| a + b).collect::<Vec<f64>>();
            residual = norm(&point);
            if prev - residual <= 1e-14 * (1.0 + residual) || residual <= 0.1 * tau_stat {
                break;
            }
            prev = residual;
            iters += 1;
            if iters >= ALTERNATE_CAP {
                return Err(Error::ToleranceNotReached {
                    cap: ALTERNATE_CAP,
                    tol: tau_stat,
                });
            }
        }
    }
    let decision = residual <= tau_stat;
    let witness = if decision || residual == 0.0 {
        None
    } else {
        Some(point.iter().map(|v| v / residual).collect())
    };
    Ok(MembershipCertificate {
        decision,
        coefficients: lambda,
        normal_part: u,
        residual,
        witness,
        marginal: residual > 0.1 * tau_stat && residual < 10.0 * tau_stat,
    })
}

/// Coordinate projection of every vertex.
pub fn project(vertices: &[Vec<f64>], coordinates: &[usize]) -> Result<Vec<Vec<f64>>> {
    let dim = check_vertices(vertices)?;
    for &c in coordinates {
        if c >= dim {
            return Err(Error::IndexOutOfRange { index: c, dim });
        }
    }
    Ok(vertices
        .iter()
        .map(|v| coordinates.iter().map(|&c| v[c]).collect())
        .collect())
}

/// Image of every vertex under the matrix (rows of length `dim`).
pub fn linear_image(vertices: &[Vec<f64>], matrix: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let dim = check_vertices(vertices)?;
    for row in matrix {
        linalg::check_dim(dim, row)?;
    }
    Ok(vertices
        .iter()
        .map(|v| matrix.iter().map(|row| dot(row, v)).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normals::AxisFlag;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn v1(points: &[f64]) -> Vec<Vec<f64>> {
        points.iter().map(|&p| vec![p]).collect()
    }

    #[test]
    fn symmetric_pair_contains_zero() {
        let mnp = min_norm_point(&v1(&[1.0, -1.0]), 1e-10).unwrap();
        assert!(mnp.distance <= 1e-10);
        assert!((mnp.lambda.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn segment_between_axis_points() {
        let mnp = min_norm_point(&[vec![2.0, 0.0], vec![0.0, 2.0]], 1e-10).unwrap();
        assert!(linalg::dist(&mnp.point, &[1.0, 1.0]) <= 1e-8);
        assert!((mnp.distance - 2f64.sqrt()).abs() <= 1e-8);
    }

    #[test]
    fn singleton_returns_the_vertex() {
        let mnp = min_norm_point(&[vec![3.0, -4.0]], 1e-10).unwrap();
        assert_eq!(mnp.point, vec![3.0, -4.0]);
        assert_eq!(mnp.distance, 5.0);
        assert_eq!(mnp.lambda, vec![1.0]);
    }

    #[test]
    fn distance_invariant_under_permutation_and_duplication() {
        let base = vec![vec![1.0, 2.0], vec![-1.0, 1.0], vec![0.5, -0.5]];
        let d0 = min_norm_point(&base, 1e-10).unwrap().distance;
        let mut shuffled = base.clone();
        shuffled.reverse();
        shuffled.push(base[0].clone());
        shuffled.push(base[1].clone());
        let d1 = min_norm_point(&shuffled, 1e-10).unwrap().distance;
        assert!((d0 - d1).abs() <= 1e-9);
    }

    #[test]
    fn lambda_reconstructs_the_point() {
        let verts = vec![
            vec![1.0, 2.0, 0.0],
            vec![-1.0, 1.0, 3.0],
            vec![0.5, -0.5, -2.0],
        ];
        let mnp = min_norm_point(&verts, 1e-10).unwrap();
        let mut recon = vec![0.0; 3];
        for (v, &l) in verts.iter().zip(&mnp.lambda) {
            assert!(l >= -1e-12);
            linalg::axpy(&mut recon, l, v);
        }
        assert!((mnp.lambda.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(linalg::dist(&recon, &mnp.point) <= 1e-10);
    }

    /// Projected-gradient oracle over the simplex, independent of the
    /// active-set method.
    fn mnp_oracle(vertices: &[Vec<f64>], iters: usize) -> f64 {
        let k = vertices.len();
        let mut lambda = vec![1.0 / k as f64; k];
        let lip: f64 = vertices.iter().map(|v| dot(v, v)).sum::<f64>().max(1e-12);
        let step = 1.0 / lip;
        for _ in 0..iters {
            let mut x = vec![0.0; vertices[0].len()];
            for (v, &l) in vertices.iter().zip(&lambda) {
                linalg::axpy(&mut x, l, v);
            }
            let grad: Vec<f64> = vertices.iter().map(|v| dot(v, &x)).collect();
            for (l, g) in lambda.iter_mut().zip(&grad) {
                *l -= step * g;
            }
            lambda = project_simplex(&lambda);
        }
        let mut x = vec![0.0; vertices[0].len()];
        for (v, &l) in vertices.iter().zip(&lambda) {
            linalg::axpy(&mut x, l, v);
        }
        norm(&x)
    }

    fn project_simplex(y: &[f64]) -> Vec<f64> {
        let mut sorted = y.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut acc = 0.0;
        let mut theta = 0.0;
        for (i, &s) in sorted.iter().enumerate() {
            acc += s;
            let t = (acc - 1.0) / (i as f64 + 1.0);
            if s - t > 0.0 {
                theta = t;
            }
        }
        y.iter().map(|&v| (v - theta).max(0.0)).collect()
    }

    #[test]
    fn agrees_with_projected_gradient_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let dim = rng.random_range(1..5);
            let count = rng.random_range(1..7);
            let verts: Vec<Vec<f64>> = (0..count)
                .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let d = min_norm_point(&verts, 1e-12).unwrap().distance;
            let o = mnp_oracle(&verts, 20000);
            assert!((d - o).abs() <= 1e-5, "mnp {d} vs oracle {o}");
        }
    }

    #[test]
    fn membership_with_zero_cone() {
        let n = NormalConeDescriptor::zero(1);
        let cert = contains_zero(&v1(&[1.0, -1.0]), &n, 1e-7).unwrap();
        assert!(cert.decision);
        assert!(cert.residual <= 1e-10);
        assert!((cert.coefficients.iter().sum::<f64>() - 1.0).abs() <= 1e-12);

        let cert = contains_zero(&v1(&[1.0]), &n, 1e-7).unwrap();
        assert!(!cert.decision);
        assert!((cert.residual - 1.0).abs() <= 1e-12);
        let s = cert.witness.unwrap();
        assert!(dot(&s, &[1.0]) >= cert.residual - 1e-7);
    }

    #[test]
    fn membership_with_half_line_cone() {
        // V = {1}, N = nonpositive half-line: 1 + (-1) = 0.
        let n = NormalConeDescriptor::BoxPattern {
            flags: vec![AxisFlag::NonPos],
        };
        let cert = contains_zero(&v1(&[1.0]), &n, 1e-7).unwrap();
        assert!(cert.decision);
        assert!(cert.residual <= 1e-10);
        assert!((cert.normal_part[0] + 1.0).abs() <= 1e-10);

        // Flipped sign cannot be absorbed.
        let cert = contains_zero(&v1(&[-1.0]), &n, 1e-7).unwrap();
        assert!(!cert.decision);
        assert!((cert.residual - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn separating_witness_is_polar_feasible() {
        let n = NormalConeDescriptor::BoxPattern {
            flags: vec![AxisFlag::NonNeg, AxisFlag::Zero],
        };
        let verts = vec![vec![1.0, 1.0], vec![2.0, 0.5]];
        let cert = contains_zero(&verts, &n, 1e-7).unwrap();
        assert!(!cert.decision);
        let s = cert.witness.unwrap();
        assert!(n.polar_feasible(&s, 1e-9));
        for v in &verts {
            assert!(dot(&s, v) >= cert.residual - 1e-7);
        }
    }

    #[test]
    fn membership_matches_distance_zero_cross_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let dim = rng.random_range(1..5);
            let count = rng.random_range(1..6);
            let verts: Vec<Vec<f64>> = (0..count)
                .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let d = min_norm_point(&verts, 1e-12).unwrap().distance;
            let cert = contains_zero(&verts, &NormalConeDescriptor::zero(dim), 1e-7).unwrap();
            assert_eq!(cert.decision, d <= 1e-7);
        }
    }

    #[test]
    fn projection_and_linear_image() {
        let verts = vec![vec![1.0, -1.0, 0.0], vec![1.0, 0.0, -1.0]];
        assert_eq!(project(&verts, &[0]).unwrap(), vec![vec![1.0], vec![1.0]]);
        assert_eq!(project(&verts, &[2, 1]).unwrap()[0], vec![0.0, -1.0]);
        assert!(project(&verts, &[3]).is_err());

        let image = linear_image(&[vec![-1.0, 0.0], vec![0.0, -1.0]], &[vec![1.0, 1.0]]).unwrap();
        assert_eq!(image, vec![vec![-1.0], vec![-1.0]]);
    }

    #[test]
    fn full_space_cone_rejected() {
        let cert = contains_zero(
            &v1(&[1.0]),
            &NormalConeDescriptor::FullSpace { dim: 1 },
            1e-7,
        );
        assert!(cert.is_err());
    }
}
