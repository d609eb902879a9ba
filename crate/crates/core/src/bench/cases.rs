//! Benchmark definitions: geometry, boundary tags, background atmosphere,
//! initial perturbation and run constants.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dgcore::FluxKind;
use crate::error::{Error, Result};
use crate::mesh::{rectangle, Axis, BoundaryCurve, BoundaryTag, RectangleSpec, TriMesh};
use crate::physics::{hydrostatic_background, BackgroundKind, BackgroundState, ConservedState, PhysicalConstants};
use crate::solver::SolveMode;

pub const CASE_NAMES: [&str; 6] = ["igw", "bubble_smooth", "bubble_sharp", "density_current", "schar", "hydrostatic_rest"];

/// Potential-temperature perturbation added to the background at fixed Exner pressure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Perturbation {
    None,
    /// `theta_c sin(pi x2 / h_c) / (1 + ((x1 - x_bar) / a_c)^2)`.
    GravityWave { theta_c: f64, h_c: f64, a_c: f64, x_bar: f64 },
    /// Cosine bubble `theta_c (1 + cos(pi r / r_c)) / 2` inside `r <= r_c`.
    CosineBubble { theta_c: f64, center: [f64; 2], radius: f64 },
    /// Plateau `theta_c` inside `r_c`, Gaussian decay of width `s` outside.
    SharpBubble { theta_c: f64, center: [f64; 2], radius: f64, s: f64 },
    /// Cosine bubble over the ellipse with semi-axes `radii`.
    Ellipse { theta_c: f64, center: [f64; 2], radii: [f64; 2] },
}

impl Perturbation {
    pub fn theta_prime(&self, x: [f64; 2]) -> f64 {
        match *self {
            Perturbation::None => 0.0,
            Perturbation::GravityWave { theta_c, h_c, a_c, x_bar } => {
                theta_c * (PI * x[1] / h_c).sin() / (1.0 + ((x[0] - x_bar) / a_c).powi(2))
            }
            Perturbation::CosineBubble { theta_c, center, radius } => {
                let r = (x[0] - center[0]).hypot(x[1] - center[1]);
                if r <= radius {
                    0.5 * theta_c * (1.0 + (PI * r / radius).cos())
                } else {
                    0.0
                }
            }
            Perturbation::SharpBubble { theta_c, center, radius, s } => {
                let r = (x[0] - center[0]).hypot(x[1] - center[1]);
                if r < radius {
                    theta_c
                } else {
                    theta_c * (-((r - radius) / s).powi(2)).exp()
                }
            }
            Perturbation::Ellipse { theta_c, center, radii } => {
                let r = ((x[0] - center[0]) / radii[0]).hypot((x[1] - center[1]) / radii[1]);
                if r <= 1.0 {
                    0.5 * theta_c * (1.0 + (PI * r).cos())
                } else {
                    0.0
                }
            }
        }
    }
}

/// Scalar driving the mesh adaptation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    Density,
    ThetaPerturbation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub name: String,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub bottom: Option<BoundaryCurve>,
    /// Bottom, right, top, left.
    pub tags: [BoundaryTag; 4],
    pub background: BackgroundKind,
    pub velocity: [f64; 2],
    pub perturbation: Perturbation,
    pub t_end: f64,
    pub mu: f64,
    pub p: usize,
    pub q: usize,
    pub n_cells: usize,
    /// Interpolation-error tolerance; infinite disables adaptation.
    pub tol: f64,
    pub c_a: f64,
    pub c_t: f64,
    pub tau0: f64,
    pub tau_max: f64,
    pub steady: bool,
    pub quantity: Quantity,
    pub flux: FluxKind,
    pub mode: SolveMode,
}

impl CaseSpec {
    fn base(name: &str) -> Self {
        CaseSpec {
            name: name.to_string(),
            x: [0.0, 1000.0],
            y: [0.0, 1000.0],
            bottom: None,
            tags: [BoundaryTag::NoFlux; 4],
            background: BackgroundKind::ConstantTheta { theta0: 300.0 },
            velocity: [0.0, 0.0],
            perturbation: Perturbation::None,
            t_end: 1.0,
            mu: 0.0,
            p: 2,
            q: 1,
            n_cells: 556,
            tol: f64::INFINITY,
            c_a: 0.01,
            c_t: 0.2,
            tau0: 1.0,
            tau_max: f64::INFINITY,
            steady: false,
            quantity: Quantity::Density,
            flux: FluxKind::Vijayasundaram,
            mode: SolveMode::Implicit,
        }
    }

    pub fn constants(&self) -> PhysicalConstants {
        PhysicalConstants::default().with_mu(self.mu)
    }

    pub fn background_state(&self) -> Result<BackgroundState> {
        hydrostatic_background(self.background, self.velocity, &self.constants())
    }

    pub fn initial_state(&self) -> Result<impl Fn([f64; 2]) -> ConservedState + Send + Sync + 'static> {
        let bg = self.background_state()?;
        let pert = self.perturbation;
        Ok(move |x: [f64; 2]| bg.perturbed_state(x, pert.theta_prime(x)))
    }

    pub fn mesh_spec(&self) -> RectangleSpec {
        let mut spec = RectangleSpec::with_cell_count(self.x, self.y, self.n_cells).with_tags(self.tags).with_degree(self.p);
        spec.bottom_curve = self.bottom;
        spec
    }

    pub fn mesh(&self) -> Result<TriMesh> {
        rectangle(&self.mesh_spec())
    }

    pub fn validate(&self) -> Result<()> {
        let range = |key: &str, msg: String| Err(Error::Range { key: key.into(), msg });
        if !(self.t_end > 0.0) {
            return range("T", format!("{} must be positive", self.t_end));
        }
        if !(self.x[1] > self.x[0] && self.y[1] > self.y[0]) {
            return range("domain", "empty domain".into());
        }
        if !(1..=crate::mesh::MAX_DEGREE).contains(&self.p) {
            return range("p", format!("{} outside 1..={}", self.p, crate::mesh::MAX_DEGREE));
        }
        if self.q > 4 {
            return range("q", format!("{} outside 0..=4", self.q));
        }
        if !(self.tol > 0.0) {
            return range("TOL", format!("{} must be positive", self.tol));
        }
        if !(self.c_a > 0.0 && self.c_t > 0.0) {
            return range("c_A", "controller constants must be positive".into());
        }
        if !(self.tau0 > 0.0 && self.tau_max >= self.tau0) {
            return range("tau0", format!("{} with tau_max {}", self.tau0, self.tau_max));
        }
        if self.n_cells < 2 {
            return range("cells", format!("{}", self.n_cells));
        }
        self.constants().validate()
    }

    /// Shorter, coarser variant of the same setup for quick runs.
    pub fn desk(mut self) -> Self {
        match self.name.as_str() {
            "igw" => {
                self.t_end = 600.0;
                self.p = 3;
                self.n_cells = 400;
                self.tau0 = 10.0;
            }
            "bubble_smooth" => {
                self.t_end = 100.0;
                self.p = 2;
                self.q = 1;
                self.n_cells = 556;
                self.tol = 0.02;
                self.tau0 = 0.5;
            }
            "bubble_sharp" => {
                self.t_end = 100.0;
                self.p = 2;
                self.n_cells = 556;
                self.tau0 = 0.5;
            }
            "density_current" => {
                self.t_end = 120.0;
                self.p = 2;
                self.n_cells = 600;
                self.tau0 = 1.0;
            }
            "schar" => {
                self.n_cells = 300;
                self.p = 2;
            }
            _ => {}
        }
        self.name.push_str("-desk");
        self
    }
}

/// Preset by name; a `-desk` suffix selects the reduced variant.
pub fn make_case(name: &str) -> Result<CaseSpec> {
    if let Some(base) = name.strip_suffix("-desk") {
        return Ok(make_case(base)?.desk());
    }
    let mut c = CaseSpec::base(name);
    match name {
        "igw" => {
            c.x = [0.0, 300_000.0];
            c.y = [0.0, 10_000.0];
            c.tags = [BoundaryTag::NoFlux, BoundaryTag::Periodic(0), BoundaryTag::NoFlux, BoundaryTag::Periodic(0)];
            c.background = BackgroundKind::Stratified { theta0: 300.0, n_freq: 0.01 };
            c.velocity = [20.0, 0.0];
            c.perturbation = Perturbation::GravityWave { theta_c: 0.01, h_c: 10_000.0, a_c: 5000.0, x_bar: 100_000.0 };
            c.t_end = 3000.0;
            c.p = 4;
            c.n_cells = 1200;
            c.tol = 1e-4;
            c.tau0 = 10.0;
            c.quantity = Quantity::ThetaPerturbation;
        }
        "bubble_smooth" => {
            c.perturbation = Perturbation::CosineBubble { theta_c: 0.5, center: [500.0, 300.0], radius: 250.0 };
            c.t_end = 700.0;
            c.p = 3;
            c.n_cells = 2248;
            c.tol = 0.02;
            c.tau0 = 0.5;
        }
        "bubble_sharp" => {
            c.perturbation = Perturbation::SharpBubble { theta_c: 0.5, center: [500.0, 260.0], radius: 150.0, s: 10.0 };
            c.t_end = 850.0;
            c.mu = 3.44e-3;
            c.p = 3;
            c.n_cells = 2248;
            c.tol = 0.02;
            c.tau0 = 0.5;
        }
        "density_current" => {
            c.x = [0.0, 25_600.0];
            c.y = [0.0, 6400.0];
            c.tags = [BoundaryTag::NoFlux, BoundaryTag::NoFlux, BoundaryTag::NoFlux, BoundaryTag::Symmetric(Axis::X1)];
            c.perturbation = Perturbation::Ellipse { theta_c: -15.0, center: [0.0, 3000.0], radii: [4000.0, 2000.0] };
            c.mu = 0.1;
            c.t_end = 900.0;
            c.p = 3;
            c.n_cells = 2000;
            c.tol = 1.0;
            c.tau0 = 1.0;
            c.quantity = Quantity::ThetaPerturbation;
        }
        "schar" => {
            c.x = [-25_000.0, 25_000.0];
            c.y = [0.0, 21_000.0];
            c.bottom = Some(BoundaryCurve::Schaer { h_c: 250.0, a_c: 5000.0, lambda_c: 4000.0 });
            c.tags = [BoundaryTag::NoFlux, BoundaryTag::NonReflecting, BoundaryTag::NonReflecting, BoundaryTag::NonReflecting];
            c.background = BackgroundKind::Stratified { theta0: 280.0, n_freq: 0.01 };
            c.velocity = [10.0, 0.0];
            c.t_end = 1e5;
            c.p = 3;
            c.q = 0;
            c.n_cells = 1000;
            c.tol = 1e-5;
            c.c_t = 1e3;
            c.tau0 = 10.0;
            c.steady = true;
        }
        "hydrostatic_rest" => {
            c.x = [-25_600.0, 25_600.0];
            c.y = [0.0, 6400.0];
            c.tags = [BoundaryTag::NoFlux, BoundaryTag::NonReflecting, BoundaryTag::NoFlux, BoundaryTag::NonReflecting];
            c.t_end = 10.0;
            c.p = 5;
            c.n_cells = 117;
            c.tau0 = 1.0;
        }
        _ => return Err(Error::UnknownCase(name.to_string())),
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn igw_peak() {
        let c = make_case("igw").unwrap();
        let v = c.perturbation.theta_prime([100_000.0, 5000.0]);
        assert!((v - 0.01).abs() < 1e-15);
    }

    #[test]
    fn bubble_edge_vanishes() {
        let c = make_case("bubble_smooth").unwrap();
        assert!(c.perturbation.theta_prime([750.0, 300.0]).abs() < 1e-15);
        assert!((c.perturbation.theta_prime([500.0, 300.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn schar_far_ends_flat() {
        let c = make_case("schar").unwrap();
        let g = c.bottom.unwrap().height(25_000.0);
        let c2 = (std::f64::consts::PI * 25_000.0 / 4000.0).cos().powi(2);
        assert!((g - 250.0 * (-25f64).exp() * c2).abs() < 1e-20);
        assert!(g < 3.5e-9);
    }

    #[test]
    fn every_preset_builds() {
        for name in CASE_NAMES {
            for n in [name.to_string(), format!("{name}-desk")] {
                let c = make_case(&n).unwrap();
                c.validate().unwrap();
                assert!(c.initial_state().is_ok());
            }
        }
        assert!(matches!(make_case("bubble"), Err(Error::UnknownCase(_))));
    }

    #[test]
    fn hydrostatic_mesh_has_117_cells() {
        let m = make_case("hydrostatic_rest").unwrap().mesh().unwrap();
        assert_eq!(m.n_cells(), 117);
    }
}
