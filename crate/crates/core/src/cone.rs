//! The ordering cone `K` in dual (H-) representation.
//!
//! `K = {y : <d_j, y> >= 0 for all j}` with `e` a fixed interior direction.
//! The normalized generators `w_j = d_j / <d_j, e>` make the Gerstewitz
//! functional and its subdifferential closed-form (see [`crate::scalarize`]).

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{self, dot};
use crate::Result;

/// Position of a point relative to `K`, `int K` and `bd K`, banded by the
/// membership tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Interior,
    Boundary,
    Outside,
}

/// A validated solid pointed polyhedral ordering cone.
///
/// Immutable after construction; all queries are re-entrant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeContext {
    dim: usize,
    dual_generators: Vec<Vec<f64>>,
    e: Vec<f64>,
    /// `w_j = d_j / <d_j, e>`, so `<w_j, e> = 1`.
    normalized_generators: Vec<Vec<f64>>,
}

impl ConeContext {
    /// Validates the dual generators and interior direction and caches the
    /// normalized generators. Generators equal in direction (within
    /// `tau_eq` after normalization) are deduplicated.
    pub fn build(dual_generators: Vec<Vec<f64>>, e: Vec<f64>, tau_eq: f64) -> Result<Self> {
        if dual_generators.is_empty() {
            return Err(Error::EmptyGenerators);
        }
        let dim = e.len();
        for d in &dual_generators {
            linalg::check_dim(dim, d)?;
        }
        for (j, d) in dual_generators.iter().enumerate() {
            if linalg::norm(d) <= tau_eq {
                return Err(Error::ZeroGenerator { index: j });
            }
        }
        let mut gens: Vec<Vec<f64>> = Vec::new();
        let mut normalized: Vec<Vec<f64>> = Vec::new();
        for (j, d) in dual_generators.iter().enumerate() {
            let de = dot(d, &e);
            if de <= 0.0 {
                return Err(Error::EnotInterior {
                    index: j,
                    value: de,
                });
            }
            let w = linalg::scale(d, 1.0 / de);
            if normalized.iter().any(|u| linalg::dist(u, &w) <= tau_eq) {
                continue; // positive multiple of a kept generator
            }
            gens.push(d.clone());
            normalized.push(w);
        }
        if linalg::rank(&gens, 1e-12) < dim {
            return Err(Error::NotPointed);
        }
        Ok(ConeContext {
            dim,
            dual_generators: gens,
            e,
            normalized_generators: normalized,
        })
    }

    /// Unit-basis generators and `e = (1,...,1)`: the nonnegative orthant.
    pub fn orthant(dim: usize) -> Self {
        let gens = (0..dim)
            .map(|i| {
                let mut v = vec![0.0; dim];
                v[i] = 1.0;
                v
            })
            .collect();
        ConeContext::build(gens, vec![1.0; dim], 1e-9).expect("orthant cone is always valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn dual_generators(&self) -> &[Vec<f64>] {
        &self.dual_generators
    }

    pub fn normalized_generators(&self) -> &[Vec<f64>] {
        &self.normalized_generators
    }

    /// Lipschitz modulus of the Gerstewitz functional: `max_j ||w_j||`.
    pub fn psi_lipschitz(&self) -> f64 {
        self.normalized_generators
            .iter()
            .map(|w| linalg::norm(w))
            .fold(0.0, f64::max)
    }

    /// Classifies `y` against `K`: interior iff the tightest dual
    /// constraint clears `tau_mem`, outside iff it violates it, boundary in
    /// the band between.
    pub fn classify(&self, y: &[f64], tau_mem: f64) -> Result<Region> {
        linalg::check_dim(self.dim, y)?;
        let min = self
            .dual_generators
            .iter()
            .map(|d| dot(d, y))
            .fold(f64::INFINITY, f64::min);
        Ok(if min > tau_mem {
            Region::Interior
        } else if min < -tau_mem {
            Region::Outside
        } else {
            Region::Boundary
        })
    }

    /// `y in K` within the band (interior or boundary).
    pub fn contains(&self, y: &[f64], tau_mem: f64) -> Result<bool> {
        Ok(self.classify(y, tau_mem)? != Region::Outside)
    }
}
