//! JSON problem files: schema, validation, and construction of the
//! runtime objects (cone context, set map, feasible set).
//!
//! Unknown keys are rejected so that typos fail loudly instead of being
//! silently ignored.

use serde::{Deserialize, Serialize};

use crate::cone::ConeContext;
use crate::error::Error;
use crate::linalg;
use crate::setmap::SetMap;
use crate::tol::Tolerances;
use crate::Result;

/// The ordering cone, either the nonnegative-orthant shorthand (string
/// `"orthant"`, dimension from the sibling `dim` field or `m`) or an
/// explicit dual-generator list with an optional embedded direction `e`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConeSpec {
    Shorthand(String),
    Explicit {
        dual_generators: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        e: Option<Vec<f64>>,
    },
}

/// The feasible set: all of `R^n` or an axis-aligned box.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Omega {
    Free,
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl Omega {
    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self {
            Omega::Free => Ok(()),
            Omega::Box { lower, upper } => {
                linalg::check_dim(n, lower)?;
                linalg::check_dim(n, upper)?;
                for (l, u) in lower.iter().zip(upper) {
                    if l > u {
                        return Err(Error::Problem(format!(
                            "box bound reversed: lower {l} > upper {u}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Membership within `tau` per coordinate.
    pub fn contains(&self, x: &[f64], tau: f64) -> bool {
        match self {
            Omega::Free => true,
            Omega::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(xi, (l, u))| *xi >= l - tau && *xi <= u + tau),
        }
    }

    /// Exact Euclidean projection (coordinate clamp for boxes).
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Omega::Free => x.to_vec(),
            Omega::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(xi, (l, u))| xi.max(*l).min(*u))
                .collect(),
        }
    }
}

/// Partial override of the default tolerance table.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mem: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub act: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stat: Option<f64>,
}

impl ToleranceOverride {
    pub fn resolve(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            eq: self.eq.unwrap_or(d.eq),
            mem: self.mem.unwrap_or(d.mem),
            act: self.act.unwrap_or(d.act),
            stat: self.stat.unwrap_or(d.stat),
        }
    }
}

/// The on-disk problem description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub m: usize,
    pub cone: ConeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<f64>>,
    pub components: Vec<Vec<String>>,
    pub omega: Omega,
    pub xbar: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverride>,
}

/// A validated problem with all runtime objects constructed.
#[derive(Debug, Clone)]
pub struct Problem {
    pub ctx: ConeContext,
    pub map: SetMap,
    pub omega: Omega,
    pub xbar: Vec<f64>,
    pub tol: Tolerances,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<ProblemFile> {
        serde_json::from_str(text).map_err(|e| Error::Problem(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }

    /// Validates every field and builds the runtime objects.
    pub fn build(&self) -> Result<Problem> {
        let tol = self.tolerances.clone().unwrap_or_default().resolve();
        let ctx = self.build_cone(tol.eq)?;
        if ctx.dim() != self.m {
            return Err(Error::Problem(format!(
                "cone dimension {} does not match m = {}",
                ctx.dim(),
                self.m
            )));
        }
        let map = SetMap::parse(self.n, self.m, &self.components)?;
        self.omega.check_dim(self.n)?;
        linalg::check_dim(self.n, &self.xbar)?;
        if !self.omega.contains(&self.xbar, tol.mem) {
            return Err(Error::NotInOmega);
        }
        Ok(Problem {
            ctx,
            map,
            omega: self.omega.clone(),
            xbar: self.xbar.clone(),
            tol,
        })
    }

    fn build_cone(&self, tau_eq: f64) -> Result<ConeContext> {
        match &self.cone {
            ConeSpec::Shorthand(name) => {
                if name != "orthant" {
                    return Err(Error::Problem(format!(
                        "unknown cone shorthand `{name}`; expected \"orthant\""
                    )));
                }
                let dim = self.dim.unwrap_or(self.m);
                if dim != self.m {
                    return Err(Error::Problem(format!(
                        "orthant dim {dim} does not match m = {}",
                        self.m
                    )));
                }
                match &self.e {
                    None => Ok(ConeContext::orthant(dim)),
                    Some(e) => {
                        let gens = (0..dim)
                            .map(|i| {
                                let mut v = vec![0.0; dim];
                                v[i] = 1.0;
                                v
                            })
                            .collect();
                        ConeContext::build(gens, e.clone(), tau_eq)
                    }
                }
            }
            ConeSpec::Explicit { dual_generators, e } => {
                let e = match (e, &self.e) {
                    (Some(inner), _) => inner.clone(),
                    (None, Some(top)) => top.clone(),
                    (None, None) => {
                        return Err(Error::Problem(
                            "explicit cone needs the direction `e`".into(),
                        ))
                    }
                };
                ConeContext::build(dual_generators.clone(), e, tau_eq)
            }
        }
    }
}

/// The worked one-variable example shipped with the tool: the orthant
/// order on the plane with F(x) = {(x+1, x-1), (-x-1, -x+1)} at xbar = 0.
pub fn demo_problem_file() -> ProblemFile {
    ProblemFile {
        n: 1,
        m: 2,
        cone: ConeSpec::Shorthand("orthant".into()),
        dim: Some(2),
        e: Some(vec![1.0, 1.0]),
        components: vec![
            vec!["x1+1".into(), "x1-1".into()],
            vec!["-(x1+1)".into(), "-(x1-1)".into()],
        ],
        omega: Omega::Free,
        xbar: vec![0.0],
        tolerances: None,
    }
}
