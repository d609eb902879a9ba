//! `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment. `case` selects a preset;
//! every other key overrides a field of the preset or of the solver options.
//! Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::adapt::RunOptions;
use crate::bench::{make_case, CaseSpec, Quantity};
use crate::dgcore::FluxKind;
use crate::error::{Error, Result};
use crate::solver::SolveMode;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub case: CaseSpec,
    pub run: RunOptions,
    pub threads: usize,
    /// Write fields every this many accepted steps (0: final only).
    pub output_every: usize,
    pub checkpoint_every: usize,
    pub output_dir: PathBuf,
}

/// Keys in echo order.
pub const KEYS: &[&str] = &[
    "case",
    "T",
    "p",
    "q",
    "cells",
    "mu",
    "TOL",
    "c_A",
    "c_T",
    "tau0",
    "tau_min",
    "tau_max",
    "flux",
    "mode",
    "quantity",
    "c_sigma",
    "semi_lambda",
    "newton_max_iter",
    "reuse_matrix",
    "gmres_restart",
    "gmres_max_iter",
    "gmres_tol",
    "max_remesh",
    "p_min",
    "p_max",
    "max_anisotropy",
    "threads",
    "output_every",
    "checkpoint_every",
    "output_dir",
];

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    match v {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => v.parse().map_err(|_| Error::Parse { line, key: key.into(), msg: format!("`{v}` is not a number") }),
    }
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize> {
    v.parse().map_err(|_| Error::Parse { line, key: key.into(), msg: format!("`{v}` is not a non-negative integer") })
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse { line, key: key.into(), msg: format!("`{v}` is not a boolean") }),
    }
}

fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x:?}")
    }
}

fn split(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse { line: i + 1, key: line.into(), msg: "expected `key = value`".into() });
        };
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    pub fn for_case(case: CaseSpec) -> Self {
        let mut run = RunOptions::default();
        run.newton.c_a = case.c_a;
        RunConfig { case, run, threads: 0, output_every: 0, checkpoint_every: 0, output_dir: PathBuf::from("out") }
    }

    /// Parse a configuration text; `overrides` are applied after the file.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut entries = split(text)?;
        for (i, o) in overrides.iter().enumerate() {
            let Some((k, v)) = o.split_once('=') else {
                return Err(Error::Parse { line: 0, key: o.clone(), msg: format!("override {} is not `key=value`", i + 1) });
            };
            entries.push((0, k.trim().to_string(), v.trim().to_string()));
        }
        let case_name = entries
            .iter()
            .rev()
            .find(|(_, k, _)| k == "case")
            .map(|(_, _, v)| v.clone())
            .ok_or_else(|| Error::Parse { line: 0, key: "case".into(), msg: "missing".into() })?;
        let mut cfg = RunConfig::for_case(make_case(&case_name)?);
        for (line, k, v) in &entries {
            cfg.set(*line, k, v)?;
        }
        cfg.run.newton.c_a = cfg.case.c_a;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, overrides)
    }

    fn set(&mut self, line: usize, key: &str, v: &str) -> Result<()> {
        let c = &mut self.case;
        let f = || parse_f64(line, key, v);
        let u = || parse_usize(line, key, v);
        match key {
            "case" => {}
            "T" => c.t_end = f()?,
            "p" => c.p = u()?,
            "q" => c.q = u()?,
            "cells" => c.n_cells = u()?,
            "mu" => c.mu = f()?,
            "TOL" => c.tol = f()?,
            "c_A" => c.c_a = f()?,
            "c_T" => c.c_t = f()?,
            "tau0" => c.tau0 = f()?,
            "tau_min" => self.run.tau_min = f()?,
            "tau_max" => c.tau_max = f()?,
            "flux" => {
                c.flux = match v {
                    "vijayasundaram" => FluxKind::Vijayasundaram,
                    "lax_friedrichs" => FluxKind::LaxFriedrichs,
                    _ => return Err(Error::Parse { line, key: key.into(), msg: format!("unknown flux `{v}`") }),
                }
            }
            "mode" => {
                c.mode = match v {
                    "implicit" => SolveMode::Implicit,
                    "semi_implicit" => SolveMode::SemiImplicit,
                    _ => return Err(Error::Parse { line, key: key.into(), msg: format!("unknown mode `{v}`") }),
                }
            }
            "quantity" => {
                c.quantity = match v {
                    "density" => Quantity::Density,
                    "theta_perturbation" => Quantity::ThetaPerturbation,
                    _ => return Err(Error::Parse { line, key: key.into(), msg: format!("unknown quantity `{v}`") }),
                }
            }
            "c_sigma" => self.run.c_sigma = f()?,
            "semi_lambda" => self.run.semi_lambda = f()?,
            "newton_max_iter" => self.run.newton.max_iter = u()?,
            "reuse_matrix" => self.run.newton.reuse_matrix = parse_bool(line, key, v)?,
            "gmres_restart" => self.run.newton.gmres_restart = u()?,
            "gmres_max_iter" => self.run.newton.gmres_max_iter = u()?,
            "gmres_tol" => self.run.newton.gmres_tol = f()?,
            "max_remesh" => self.run.max_remesh = u()?,
            "p_min" => self.run.metric.degree_range.0 = u()?,
            "p_max" => self.run.metric.degree_range.1 = u()?,
            "max_anisotropy" => self.run.metric.max_anisotropy = f()?,
            "threads" => self.threads = u()?,
            "output_every" => self.output_every = u()?,
            "checkpoint_every" => self.checkpoint_every = u()?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            _ => return Err(Error::Parse { line, key: key.into(), msg: "unknown key".into() }),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.case.validate()?;
        let range = |key: &str, msg: String| Err(Error::Range { key: key.into(), msg });
        let (lo, hi) = self.run.metric.degree_range;
        if !(1 <= lo && lo <= hi && hi <= crate::mesh::MAX_DEGREE) {
            return range("p_max", format!("degree range {lo}..={hi} outside 1..={}", crate::mesh::MAX_DEGREE));
        }
        if !(self.run.c_sigma > 0.0) {
            return range("c_sigma", format!("{} must be positive", self.run.c_sigma));
        }
        if !(self.run.semi_lambda > 0.0 && self.run.semi_lambda <= 1.0) {
            return range("semi_lambda", format!("{} outside (0, 1]", self.run.semi_lambda));
        }
        if !(self.run.newton.gmres_tol > 0.0 && self.run.newton.gmres_tol < 1.0) {
            return range("gmres_tol", format!("{} outside (0, 1)", self.run.newton.gmres_tol));
        }
        if self.run.newton.gmres_restart == 0 || self.run.newton.max_iter == 0 {
            return range("gmres_restart", "iteration limits must be positive".into());
        }
        if !(self.run.metric.max_anisotropy >= 1.0) {
            return range("max_anisotropy", format!("{} below 1", self.run.metric.max_anisotropy));
        }
        if !(self.run.tau_min > 0.0 && self.run.tau_min <= self.case.tau0) {
            return range("tau_min", format!("{} must lie in (0, tau0]", self.run.tau_min));
        }
        Ok(())
    }

    /// Fully resolved configuration in the input format.
    pub fn echo(&self) -> String {
        let c = &self.case;
        let mut s = String::new();
        let base = c.name.as_str();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("case", base.to_string());
        put("T", fmt_f64(c.t_end));
        put("p", c.p.to_string());
        put("q", c.q.to_string());
        put("cells", c.n_cells.to_string());
        put("mu", fmt_f64(c.mu));
        put("TOL", fmt_f64(c.tol));
        put("c_A", fmt_f64(c.c_a));
        put("c_T", fmt_f64(c.c_t));
        put("tau0", fmt_f64(c.tau0));
        put("tau_min", fmt_f64(self.run.tau_min));
        put("tau_max", fmt_f64(c.tau_max));
        put(
            "flux",
            match c.flux {
                FluxKind::Vijayasundaram => "vijayasundaram",
                FluxKind::LaxFriedrichs => "lax_friedrichs",
            }
            .into(),
        );
        put(
            "mode",
            match c.mode {
                SolveMode::Implicit => "implicit",
                SolveMode::SemiImplicit => "semi_implicit",
            }
            .into(),
        );
        put(
            "quantity",
            match c.quantity {
                Quantity::Density => "density",
                Quantity::ThetaPerturbation => "theta_perturbation",
            }
            .into(),
        );
        put("c_sigma", fmt_f64(self.run.c_sigma));
        put("semi_lambda", fmt_f64(self.run.semi_lambda));
        put("newton_max_iter", self.run.newton.max_iter.to_string());
        put("reuse_matrix", self.run.newton.reuse_matrix.to_string());
        put("gmres_restart", self.run.newton.gmres_restart.to_string());
        put("gmres_max_iter", self.run.newton.gmres_max_iter.to_string());
        put("gmres_tol", fmt_f64(self.run.newton.gmres_tol));
        put("max_remesh", self.run.max_remesh.to_string());
        put("p_min", self.run.metric.degree_range.0.to_string());
        put("p_max", self.run.metric.degree_range.1.to_string());
        put("max_anisotropy", fmt_f64(self.run.metric.max_anisotropy));
        put("threads", self.threads.to_string());
        put("output_every", self.output_every.to_string());
        put("checkpoint_every", self.checkpoint_every.to_string());
        put("output_dir", self.output_dir.display().to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_for_bubble() {
        let cfg = RunConfig::parse("case = bubble_smooth\n", &[]).unwrap();
        assert_eq!(cfg.case.c_a, 0.01);
        assert_eq!(cfg.case.c_t, 0.2);
        assert_eq!(cfg.run.newton.c_a, 0.01);
    }

    #[test]
    fn typo_names_the_key() {
        match RunConfig::parse("case = bubble_smooth\ncT = 0.3\n", &[]) {
            Err(Error::Parse { key, line, .. }) => {
                assert_eq!(key, "cT");
                assert_eq!(line, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn override_is_echoed() {
        let cfg = RunConfig::parse("case = bubble_smooth # preset\n", &["TOL=0.01".into()]).unwrap();
        assert_eq!(cfg.case.tol, 0.01);
        assert!(cfg.echo().contains("TOL = 0.01\n"));
    }

    #[test]
    fn echo_round_trips() {
        let cfg = RunConfig::parse("case = hydrostatic_rest\np = 3\nmode = semi_implicit\n", &[]).unwrap();
        let again = RunConfig::parse(&cfg.echo(), &[]).unwrap();
        assert_eq!(cfg.echo(), again.echo());
        assert_eq!(again.case, cfg.case);
    }

    #[test]
    fn range_errors() {
        assert!(matches!(RunConfig::parse("case = igw\np = 9\n", &[]), Err(Error::Range { .. })));
        assert!(matches!(RunConfig::parse("case = igw\nTOL = -1\n", &[]), Err(Error::Range { .. })));
        assert!(matches!(RunConfig::parse("case = igw\nq = x\n", &[]), Err(Error::Parse { .. })));
        assert!(matches!(RunConfig::parse("case = nope\n", &[]), Err(Error::UnknownCase(_))));
    }
}
