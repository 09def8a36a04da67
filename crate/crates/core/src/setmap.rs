//! The set-valued objective `F(x) = {f_1(x), ..., f_p(x)}` as a finite
//! family of smooth vector components.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::expr::Expression;
use crate::linalg;
use crate::setrel::PointSet;
use crate::Result;

/// An evaluated image `F(x)` with, for every surviving (deduplicated)
/// point, the set of component indices that mapped onto it.
#[derive(Debug, Clone)]
pub struct ImageSet {
    pub points: PointSet,
    pub provenance: Vec<Vec<usize>>,
}

impl ImageSet {
    /// Component index of point `idx`, or `CollidingComponents` when two
    /// distinct components share the value.
    pub fn unique_component(&self, idx: usize, tau_sep: f64) -> Result<usize> {
        let prov = &self.provenance[idx];
        if prov.len() > 1 {
            return Err(Error::CollidingComponents {
                i: prov[0],
                j: prov[1],
                tol: tau_sep,
            });
        }
        Ok(prov[0])
    }

    /// True when every image point came from exactly one component.
    pub fn collision_free(&self) -> bool {
        self.provenance.iter().all(|p| p.len() == 1)
    }
}

/// A set-valued map given by `p` components of `m` coordinate expressions
/// over `n` variables.
#[derive(Debug, Clone)]
pub struct SetMap {
    n: usize,
    m: usize,
    components: Vec<Vec<Expression>>,
    labels: Option<Vec<String>>,
}

impl SetMap {
    pub fn new(n: usize, m: usize, components: Vec<Vec<Expression>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Problem(
                "a set map needs at least one component".into(),
            ));
        }
        for comp in &components {
            if comp.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: comp.len(),
                });
            }
            for e in comp {
                if e.n_vars() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: e.n_vars(),
                    });
                }
            }
        }
        Ok(SetMap {
            n,
            m,
            components,
            labels: None,
        })
    }

    /// Parses a component table of expression strings.
    pub fn parse(n: usize, m: usize, components: &[Vec<String>]) -> Result<Self> {
        let parsed = components
            .iter()
            .map(|comp| comp.iter().map(|s| Expression::parse(s, n)).collect())
            .collect::<Result<Vec<Vec<Expression>>>>()?;
        SetMap::new(n, m, parsed)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.components.len()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn components(&self) -> &[Vec<Expression>] {
        &self.components
    }

    /// The image `F(x)`, deduplicated within `tau_eq`, with provenance.
    pub fn evaluate(&self, x: &[f64], tau_eq: f64) -> Result<ImageSet> {
        linalg::check_dim(self.n, x)?;
        let mut points: Vec<Vec<f64>> = Vec::with_capacity(self.p());
        let mut provenance: Vec<Vec<usize>> = Vec::new();
        for (i, comp) in self.components.iter().enumerate() {
            let value = comp
                .iter()
                .map(|e| e.eval(x))
                .collect::<Result<Vec<f64>>>()?;
            if let Some(k) = points
                .iter()
                .position(|q| linalg::dist(q, &value) <= tau_eq)
            {
                provenance[k].push(i);
            } else {
                points.push(value);
                provenance.push(vec![i]);
            }
        }
        Ok(ImageSet {
            points: PointSet::new(points, tau_eq)?,
            provenance,
        })
    }

    /// Jacobian of component `i` at `x`: `m x n`, row `r` is the gradient
    /// of coordinate `r`.
    pub fn jacobian(&self, i: usize, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        linalg::check_dim(self.n, x)?;
        self.components[i]
            .iter()
            .map(|e| e.eval_with_gradient(x).map(|(_, g)| g))
            .collect()
    }

    /// Jacobians of all components at `x`.
    pub fn jacobians(&self, x: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
        (0..self.p()).map(|i| self.jacobian(i, x)).collect()
    }

    /// Sampled lower bound on the local Lipschitz modulus: max over
    /// consecutive sampled pairs in the ball of the symmetric Hausdorff
    /// distance of the images divided by the input distance. The sample
    /// sequence is a fixed function of the seed, so the estimate is
    /// monotone in `samples`.
    pub fn estimate_lipschitz(
        &self,
        center: &[f64],
        radius: f64,
        samples: usize,
        seed: u64,
    ) -> Result<f64> {
        linalg::check_dim(self.n, center)?;
        assert!(radius > 0.0 && samples >= 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Vec<f64>> = (0..samples)
            .map(|_| {
                center
                    .iter()
                    .map(|c| c + rng.random_range(-radius..radius))
                    .collect()
            })
            .collect();
        let images = points
            .iter()
            .map(|x| self.evaluate(x, 1e-12))
            .collect::<Result<Vec<ImageSet>>>()?;
        let mut best: f64 = 0.0;
        for i in 0..samples {
            for j in (i + 1)..samples {
                let dx = linalg::dist(&points[i], &points[j]);
                if dx < 1e-10 {
                    continue;
                }
                let dh = hausdorff(&images[i].points, &images[j].points);
                best = best.max(dh / dx);
            }
        }
        Ok(best)
    }

    /// The same family augmented with the shifted components `f_i + k`
    /// (for Minkowski-dominated augmentation probes).
    pub fn augmented(&self, k: &[f64]) -> Result<SetMap> {
        linalg::check_dim(self.m, k)?;
        let mut components = self.components.clone();
        for comp in self.components.iter() {
            let shifted = comp.iter().zip(k).map(|(e, &off)| e.shifted(off)).collect();
            components.push(shifted);
        }
        SetMap::new(self.n, self.m, components)
    }
}

/// Exact symmetric Hausdorff distance between finite sets.
pub fn hausdorff(a: &PointSet, b: &PointSet) -> f64 {
    let excess = |from: &PointSet, to: &PointSet| {
        from.points()
            .iter()
            .map(|p| {
                to.points()
                    .iter()
                    .map(|q| linalg::dist(p, q))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    excess(a, b).max(excess(b, a))
}
