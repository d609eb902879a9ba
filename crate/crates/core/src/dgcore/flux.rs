//! Flux-vector splitting and boundary states.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mesh::{Axis, BoundaryTag};
use crate::physics::{
    eigensystem, flux_jacobian, mirror, mirror_matrix, primitive_from_conserved, riemann_star, sample_riemann,
    sound_speed, ConservedState, Mat4, PhysicalConstants, RiemannState1d, Vec4,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FluxKind {
    /// `P^± = R diag(lambda^±) L` at the linearization state.
    Vijayasundaram,
    /// `P^± = (A ± alpha I) / 2` with `alpha = |v.n| + a`.
    LaxFriedrichs,
}

/// Positive and negative parts of the normal flux Jacobian at `w`.
pub fn split_jacobian(w: &Vec4, n: [f64; 2], kind: FluxKind, c: &PhysicalConstants) -> Result<(Mat4, Mat4)> {
    match kind {
        FluxKind::Vijayasundaram => {
            let e = eigensystem(w, n, c)?;
            let lp = Vec4::from_fn(|i, _| e.lambda[i].max(0.0));
            let lm = Vec4::from_fn(|i, _| e.lambda[i].min(0.0));
            let pp = e.right * Mat4::from_diagonal(&lp) * e.left;
            let pm = e.right * Mat4::from_diagonal(&lm) * e.left;
            Ok((pp, pm))
        }
        FluxKind::LaxFriedrichs => {
            let a = flux_jacobian(w, n, c)?;
            let alpha = ((w[1] * n[0] + w[2] * n[1]) / w[0]).abs() + sound_speed(w, c)?;
            let half = Mat4::identity() * (0.5 * alpha);
            Ok((a * 0.5 + half, a * 0.5 - half))
        }
    }
}

/// Normal used by the mirror condition of a boundary tag.
pub fn mirror_normal(tag: BoundaryTag, n: [f64; 2]) -> [f64; 2] {
    match tag {
        BoundaryTag::Symmetric(Axis::X1) => [n[0].signum(), 0.0],
        BoundaryTag::Symmetric(Axis::X2) => [0.0, n[1].signum()],
        _ => n,
    }
}

/// Exterior state `w_D` and its derivative with respect to the interior trace
/// (`None` when the state is treated explicitly).
pub fn boundary_state(
    tag: BoundaryTag,
    w_in: &Vec4,
    n: [f64; 2],
    far: Option<&Vec4>,
    c: &PhysicalConstants,
) -> Result<(Vec4, Option<Mat4>)> {
    match tag {
        BoundaryTag::NoFlux | BoundaryTag::Symmetric(_) | BoundaryTag::Periodic(_) => {
            let m = mirror_normal(tag, n);
            Ok((mirror(w_in, m), Some(mirror_matrix(m))))
        }
        BoundaryTag::NonReflecting => match far {
            Some(f) => Ok((nonreflecting_state(w_in, f, n, c)?, None)),
            None => Ok((*w_in, None)),
        },
    }
}

/// Boundary state from the exact Riemann problem between the interior trace
/// and the far-field state, sampled on the boundary itself.
pub fn nonreflecting_state(w_in: &Vec4, far: &Vec4, n: [f64; 2], c: &PhysicalConstants) -> Result<Vec4> {
    let pi = primitive_from_conserved(&ConservedState(*w_in), c)?;
    let po = primitive_from_conserved(&ConservedState(*far), c)?;
    let t = [-n[1], n[0]];
    let left = RiemannState1d { rho: pi.rho, u: pi.v1 * n[0] + pi.v2 * n[1], p: pi.p };
    let right = RiemannState1d { rho: po.rho, u: po.v1 * n[0] + po.v2 * n[1], p: po.p };
    let star = riemann_star(&left, &right, c.kappa)?;
    let (s, from_left) = sample_riemann(&left, &right, &star, c.kappa, 0.0);
    let ut = if from_left { pi.v1 * t[0] + pi.v2 * t[1] } else { po.v1 * t[0] + po.v2 * t[1] };
    let v = [s.u * n[0] + ut * t[0], s.u * n[1] + ut * t[1]];
    let e = s.p / (c.kappa - 1.0) + 0.5 * s.rho * (v[0] * v[0] + v[1] * v[1]);
    Ok(Vec4::new(s.rho, s.rho * v[0], s.rho * v[1], e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{conserved_from_primitive, convective_flux};

    fn state(rho: f64, v1: f64, v2: f64, p: f64) -> Vec4 {
        conserved_from_primitive(rho, v1, v2, p, &PhysicalConstants::default()).0
    }

    #[test]
    fn splitting_sums_to_jacobian() {
        let c = PhysicalConstants::default();
        let w = state(1.1, 30.0, -12.0, 9.0e4);
        let n = [0.6, 0.8];
        for kind in [FluxKind::Vijayasundaram, FluxKind::LaxFriedrichs] {
            let (pp, pm) = split_jacobian(&w, n, kind, &c).unwrap();
            let a = flux_jacobian(&w, n, &c).unwrap();
            assert!((pp + pm - a).norm() < 1e-8 * a.norm());
        }
    }

    #[test]
    fn supersonic_outflow_has_no_negative_part() {
        let c = PhysicalConstants::default();
        let w = state(1.0, 500.0, 0.0, 1.0e5);
        let (pp, pm) = split_jacobian(&w, [1.0, 0.0], FluxKind::Vijayasundaram, &c).unwrap();
        assert!(pm.norm() < 1e-10 * pp.norm());
    }

    #[test]
    fn consistent_flux_for_equal_states() {
        // P+ w + P- w = A w = F(w).n (homogeneity of the Euler flux)
        let c = PhysicalConstants::default();
        let w = state(0.9, -40.0, 15.0, 8.0e4);
        let n = [0.0, -1.0];
        let (pp, pm) = split_jacobian(&w, n, FluxKind::Vijayasundaram, &c).unwrap();
        let f = convective_flux(&w, &c).unwrap();
        let fn_ = f[0] * n[0] + f[1] * n[1];
        assert!(((pp * w + pm * w) - fn_).norm() < 1e-8 * fn_.norm());
    }

    #[test]
    fn wall_state_has_zero_mass_flux() {
        let c = PhysicalConstants::default();
        let w = state(1.2, 20.0, -35.0, 1.0e5);
        let n = [0.28, -0.96];
        let (wd, _) = boundary_state(BoundaryTag::NoFlux, &w, n, None, &c).unwrap();
        let wbar = 0.5 * (w + wd);
        let (pp, pm) = split_jacobian(&wbar, n, FluxKind::Vijayasundaram, &c).unwrap();
        let h = pp * w + pm * wd;
        assert!(h[0].abs() < 1e-9, "{}", h[0]);
    }

    #[test]
    fn nonreflecting_returns_far_field_when_matched() {
        let c = PhysicalConstants::default();
        let w = state(1.0, 10.0, 2.0, 1.0e5);
        let wd = nonreflecting_state(&w, &w, [0.0, 1.0], &c).unwrap();
        assert!((wd - w).norm() < 1e-8 * w.norm());
    }
}
