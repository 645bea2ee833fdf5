use std::path::Path;

use mixvol::estimator::Instance;
use mixvol::geometry::{convex_hull, Polytope, RationalPoint};
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Largest supported `L`; coordinates are read as `i64`.
pub const MAX_L: u32 = 62;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeEntry {
    pub name: String,
    pub vertices: Vec<Vec<i64>>,
}

/// On-disk instance: lattice polytopes in `Zⁿ` with coordinates bounded by `2^L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: u32,
    pub polytopes: Vec<PolytopeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<u32>>,
}

impl InstanceFile {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Usage(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.l > MAX_L {
            return bad(format!("L = {} exceeds {MAX_L}", self.l));
        }
        if self.polytopes.is_empty() {
            return bad("no polytopes".into());
        }
        let bound = 1i64 << self.l;
        for p in &self.polytopes {
            if p.vertices.is_empty() {
                return bad(format!("{} has no vertices", p.name));
            }
            for v in &p.vertices {
                if v.len() != self.n {
                    return bad(format!("{}: vertex {v:?} is not in dimension {}", p.name, self.n));
                }
                if v.iter().any(|c| c.unsigned_abs() > bound as u64) {
                    return bad(format!("{}: vertex {v:?} exceeds 2^{}", p.name, self.l));
                }
            }
        }
        if let Some(a) = &self.alpha {
            self.check_alpha(a)?;
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.polytopes.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.polytopes.iter().map(|p| p.name.clone()).collect()
    }

    pub fn check_alpha(&self, alpha: &[u32]) -> CliResult<()> {
        if alpha.len() != self.k() {
            return Err(CliError::Usage(format!(
                "alpha has {} entries for {} polytopes",
                alpha.len(),
                self.k()
            )));
        }
        let s: u32 = alpha.iter().sum();
        if s as usize != self.n {
            return Err(CliError::Usage(format!("alpha sums to {s}, expected n = {}", self.n)));
        }
        Ok(())
    }

    /// The override if given, else the file's own `alpha`.
    pub fn resolve_alpha(&self, alpha: Option<&[u32]>) -> CliResult<Vec<u32>> {
        let a = match (alpha, &self.alpha) {
            (Some(a), _) => a.to_vec(),
            (None, Some(a)) => a.clone(),
            (None, None) => return Err(CliError::Usage("no alpha given".into())),
        };
        self.check_alpha(&a)?;
        Ok(a)
    }

    pub fn polytopes(&self) -> CliResult<Vec<Polytope>> {
        self.polytopes
            .iter()
            .map(|p| {
                let pts: Vec<RationalPoint> =
                    p.vertices.iter().map(|v| RationalPoint::from_ints(v)).collect();
                Ok(convex_hull(&pts)?.with_name(p.name.clone()))
            })
            .collect()
    }

    pub fn instance(&self, alpha: Vec<u32>) -> CliResult<Instance> {
        Ok(Instance::new(self.polytopes()?, alpha, self.l)?)
    }

    /// Serialize lattice polytopes back into an instance file.
    pub fn from_polytopes(n: usize, l: u32, polys: &[Polytope]) -> CliResult<Self> {
        let polytopes = polys
            .iter()
            .map(|p| {
                let vertices = p
                    .vertices()
                    .iter()
                    .map(|v| {
                        v.coords()
                            .iter()
                            .map(|c| {
                                c.is_integer()
                                    .then(|| c.to_integer().to_i64())
                                    .flatten()
                                    .ok_or_else(|| CliError::Usage(format!("{c} is not an i64")))
                            })
                            .collect::<CliResult<Vec<i64>>>()
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(PolytopeEntry { name: p.name().to_string(), vertices })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let file = InstanceFile { n, l, polytopes, alpha: None };
        file.validate()?;
        Ok(file)
    }
}
