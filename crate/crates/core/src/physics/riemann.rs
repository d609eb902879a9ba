//! Exact solution of the one-dimensional Riemann problem for a perfect gas.
//!
//! Pressure in the star region is found by Newton iteration on the pressure
//! function; the self-similar solution is then sampled on `x/t`.

use crate::error::{Error, Result};

/// A one-dimensional primitive state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiemannState1d {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

/// Pressure and velocity between the two nonlinear waves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiemannStar {
    pub p: f64,
    pub u: f64,
}

const MAX_ITER: usize = 100;
const TOL: f64 = 1e-12;

fn pressure_function(p: f64, s: &RiemannState1d, gamma: f64) -> (f64, f64) {
    let a = (gamma * s.p / s.rho).sqrt();
    if p > s.p {
        let big_a = 2.0 / ((gamma + 1.0) * s.rho);
        let big_b = (gamma - 1.0) / (gamma + 1.0) * s.p;
        let q = (big_a / (p + big_b)).sqrt();
        let f = (p - s.p) * q;
        let df = q * (1.0 - 0.5 * (p - s.p) / (big_b + p));
        (f, df)
    } else {
        let ex = (gamma - 1.0) / (2.0 * gamma);
        let ratio = p / s.p;
        let f = 2.0 * a / (gamma - 1.0) * (ratio.powf(ex) - 1.0);
        let df = ratio.powf(-(gamma + 1.0) / (2.0 * gamma)) / (s.rho * a);
        (f, df)
    }
}

/// Star-region pressure and velocity.
pub fn riemann_star(left: &RiemannState1d, right: &RiemannState1d, gamma: f64) -> Result<RiemannStar> {
    let al = (gamma * left.p / left.rho).sqrt();
    let ar = (gamma * right.p / right.rho).sqrt();
    let du = right.u - left.u;
    if 2.0 * (al + ar) / (gamma - 1.0) <= du {
        return Err(Error::NonPhysicalState("Riemann data generates vacuum".into()));
    }
    // two-rarefaction initial guess
    let ex = (gamma - 1.0) / (2.0 * gamma);
    let guess = ((al + ar - 0.5 * (gamma - 1.0) * du) / (al / left.p.powf(ex) + ar / right.p.powf(ex))).powf(1.0 / ex);
    let mut p = guess.max(1e-8 * (left.p + right.p));
    for _ in 0..MAX_ITER {
        let (fl, dfl) = pressure_function(p, left, gamma);
        let (fr, dfr) = pressure_function(p, right, gamma);
        let next = (p - (fl + fr + du) / (dfl + dfr)).max(1e-14 * (left.p + right.p));
        let change = 2.0 * (next - p).abs() / (next + p);
        p = next;
        if change < TOL {
            let (fl, _) = pressure_function(p, left, gamma);
            let (fr, _) = pressure_function(p, right, gamma);
            return Ok(RiemannStar { p, u: 0.5 * (left.u + right.u) + 0.5 * (fr - fl) });
        }
    }
    Err(Error::RiemannNoConvergence(MAX_ITER))
}

/// Sample the self-similar solution at `xi = x / t`.
///
/// Returns the state and whether it belongs to the left side of the contact
/// (which decides the transported tangential velocity).
pub fn sample_riemann(
    left: &RiemannState1d,
    right: &RiemannState1d,
    star: &RiemannStar,
    gamma: f64,
    xi: f64,
) -> (RiemannState1d, bool) {
    let gp = (gamma + 1.0) / (2.0 * gamma);
    let gm = (gamma - 1.0) / (2.0 * gamma);
    let g6 = (gamma - 1.0) / (gamma + 1.0);
    if xi <= star.u {
        let s = left;
        let a = (gamma * s.p / s.rho).sqrt();
        if star.p > s.p {
            let speed = s.u - a * (gp * star.p / s.p + gm).sqrt();
            if xi <= speed {
                (*s, true)
            } else {
                let ratio = star.p / s.p;
                let rho = s.rho * (ratio + g6) / (ratio * g6 + 1.0);
                (RiemannState1d { rho, u: star.u, p: star.p }, true)
            }
        } else {
            let head = s.u - a;
            let a_star = a * (star.p / s.p).powf(gm);
            let tail = star.u - a_star;
            if xi <= head {
                (*s, true)
            } else if xi >= tail {
                (RiemannState1d { rho: s.rho * (star.p / s.p).powf(1.0 / gamma), u: star.u, p: star.p }, true)
            } else {
                let c = 2.0 / (gamma + 1.0) + g6 / a * (s.u - xi);
                let rho = s.rho * c.powf(2.0 / (gamma - 1.0));
                let u = 2.0 / (gamma + 1.0) * (a + 0.5 * (gamma - 1.0) * s.u + xi);
                let p = s.p * c.powf(2.0 * gamma / (gamma - 1.0));
                (RiemannState1d { rho, u, p }, true)
            }
        }
    } else {
        let s = right;
        let a = (gamma * s.p / s.rho).sqrt();
        if star.p > s.p {
            let speed = s.u + a * (gp * star.p / s.p + gm).sqrt();
            if xi >= speed {
                (*s, false)
            } else {
                let ratio = star.p / s.p;
                let rho = s.rho * (ratio + g6) / (ratio * g6 + 1.0);
                (RiemannState1d { rho, u: star.u, p: star.p }, false)
            }
        } else {
            let head = s.u + a;
            let a_star = a * (star.p / s.p).powf(gm);
            let tail = star.u + a_star;
            if xi >= head {
                (*s, false)
            } else if xi <= tail {
                (RiemannState1d { rho: s.rho * (star.p / s.p).powf(1.0 / gamma), u: star.u, p: star.p }, false)
            } else {
                let c = 2.0 / (gamma + 1.0) - g6 / a * (s.u - xi);
                let rho = s.rho * c.powf(2.0 / (gamma - 1.0));
                let u = 2.0 / (gamma + 1.0) * (-a + 0.5 * (gamma - 1.0) * s.u + xi);
                let p = s.p * c.powf(2.0 * gamma / (gamma - 1.0));
                (RiemannState1d { rho, u, p }, false)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sod_star_pressure() {
        let l = RiemannState1d { rho: 1.0, u: 0.0, p: 1.0 };
        let r = RiemannState1d { rho: 0.125, u: 0.0, p: 0.1 };
        let s = riemann_star(&l, &r, 1.4).unwrap();
        assert!((s.p - 0.30313).abs() < 1e-4);
        assert!((s.u - 0.92745).abs() < 1e-4);
    }

    #[test]
    fn identical_states_are_steady() {
        let l = RiemannState1d { rho: 1.2, u: 3.0, p: 1e5 };
        let s = riemann_star(&l, &l, 1.4).unwrap();
        assert!((s.p - 1e5).abs() < 1e-6);
        assert!((s.u - 3.0).abs() < 1e-9);
        let (w, _) = sample_riemann(&l, &l, &s, 1.4, 0.0);
        assert!((w.rho - 1.2).abs() < 1e-10);
    }

    #[test]
    fn vacuum_rejected() {
        let l = RiemannState1d { rho: 1.0, u: -20.0, p: 0.4 };
        let r = RiemannState1d { rho: 1.0, u: 20.0, p: 0.4 };
        assert!(riemann_star(&l, &r, 1.4).is_err());
    }
}
