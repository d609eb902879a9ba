//! JSON checkpoints of the run state between accepted steps.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::adapt::RunState;
use crate::dgcore::{DgSpace, SlabSolution, SpatialField};
use crate::error::{Error, Result};
use crate::mesh::TriMesh;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SlabData {
    t0: f64,
    tau: f64,
    coeffs: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    /// Resolved configuration in the input format.
    pub config: String,
    pub m: usize,
    pub t: f64,
    pub tau: f64,
    pub gmres_total: usize,
    pub level: usize,
    pub mass0: f64,
    pub energy0: f64,
    mesh: TriMesh,
    trace: Vec<f64>,
    slab: Option<SlabData>,
}

impl Checkpoint {
    pub fn capture(cfg: &RunConfig, state: &RunState) -> Self {
        Checkpoint {
            schema_version: SCHEMA_VERSION,
            config: cfg.echo(),
            m: state.m,
            t: state.t,
            tau: state.tau,
            gmres_total: state.gmres_total,
            level: state.level,
            mass0: state.mass0,
            energy0: state.energy0,
            mesh: state.trace.space.mesh.clone(),
            trace: state.trace.coeffs.clone(),
            // the slab always lives on the trace mesh
            slab: state.slab.as_ref().map(|s| SlabData { t0: s.t0, tau: s.tau, coeffs: s.coeffs.clone() }),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let found = v.get("schema_version").and_then(|x| x.as_u64()).unwrap_or(0) as u32;
        if found != SCHEMA_VERSION {
            return Err(Error::VersionMismatch { found, expected: SCHEMA_VERSION });
        }
        Ok(serde_json::from_value(v)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Rebuild the configuration and run state.
    pub fn restore(&self) -> Result<(RunConfig, RunState)> {
        let cfg = RunConfig::parse(&self.config, &[])?;
        let m = &self.mesh;
        let mesh = TriMesh::new(m.vertices.clone(), m.cells.clone(), m.degrees.clone(), m.boundary.clone(), m.curve.clone())?;
        let space = Arc::new(DgSpace::new(mesh, cfg.case.q)?);
        if self.trace.len() != space.n_spatial_dofs() {
            return Err(Error::Format(format!("trace has {} coefficients, mesh needs {}", self.trace.len(), space.n_spatial_dofs())));
        }
        let slab = match &self.slab {
            Some(s) if s.coeffs.len() != space.n_dofs() => {
                return Err(Error::Format(format!("slab has {} coefficients, mesh needs {}", s.coeffs.len(), space.n_dofs())));
            }
            Some(s) => Some(SlabSolution { space: space.clone(), t0: s.t0, tau: s.tau, coeffs: s.coeffs.clone() }),
            None => None,
        };
        let state = RunState {
            m: self.m,
            t: self.t,
            tau: self.tau,
            trace: SpatialField { space, coeffs: self.trace.clone() },
            slab,
            gmres_total: self.gmres_total,
            level: self.level,
            mass0: self.mass0,
            energy0: self.energy0,
        };
        Ok((cfg, state))
    }
}
