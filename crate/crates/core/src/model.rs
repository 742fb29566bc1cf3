//! Densities, radial helpers and annulus geometry for the two particle models.
//!
//! The square model places `n` particles in the unit square with unnormalized
//! density `exp(-[c1 Σ‖xᵢ‖ + c2 Σ_{i<j} ‖xᵢ − xⱼ‖⁻¹])`. The planar model is a
//! single particle in R² with density `exp(-H(x))`, `H(x) = r + 1/r`, which is
//! the two-particle case with `c1 = c2 = 1` and the second particle pinned at
//! the origin.
//!
//! Everything here is pure; all densities are handled in log space.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attraction/repulsion strengths and particle count of the square model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub c1: f64,
    pub c2: f64,
    pub n_particles: usize,
}

impl ModelParams {
    pub fn new(c1: f64, c2: f64, n_particles: usize) -> Result<Self> {
        if !(c1 >= 0.0 && c1.is_finite()) {
            return Err(Error::Domain { what: "c1 must be a finite nonnegative real", value: c1 });
        }
        if !(c2 >= 0.0 && c2.is_finite()) {
            return Err(Error::Domain { what: "c2 must be a finite nonnegative real", value: c2 });
        }
        if n_particles == 0 {
            return Err(Error::InvalidInput("n_particles must be at least 1".into()));
        }
        Ok(Self { c1, c2, n_particles })
    }
}

/// Positions of the square-model particles, each inside `[0, 1]²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareConfig {
    points: Vec<[f64; 2]>,
}

impl SquareConfig {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidState("configuration has no particles".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|c| (0.0..=1.0).contains(c)) {
                return Err(Error::InvalidState(format!(
                    "particle {} at ({}, {}) lies outside the unit square",
                    i + 1,
                    p[0],
                    p[1]
                )));
            }
        }
        Ok(Self { points })
    }

    /// Builds a configuration from a flat coordinate list `x11, x12, x21, ...`.
    pub fn from_flat(coords: &[f64]) -> Result<Self> {
        if !coords.len().is_multiple_of(2) {
            return Err(Error::InvalidState(format!(
                "odd number of coordinates ({})",
                coords.len()
            )));
        }
        Self::new(coords.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
    }

    /// Every particle at the same point.
    pub fn filled(n_particles: usize, point: [f64; 2]) -> Result<Self> {
        Self::new(vec![point; n_particles])
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().flat_map(|p| p.iter().copied())
    }

    pub fn validate_for(&self, params: &ModelParams) -> Result<()> {
        if self.points.len() != params.n_particles {
            return Err(Error::InvalidState(format!(
                "configuration has {} particles, model expects {}",
                self.points.len(),
                params.n_particles
            )));
        }
        Ok(())
    }

    pub(crate) fn set(&mut self, i: usize, p: [f64; 2]) {
        self.points[i] = p;
    }
}

/// A point of the planar one-particle model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x1: f64,
    pub x2: f64,
}

impl PlanarPoint {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x1: radius * c, x2: radius * s }
    }

    pub fn radius(&self) -> f64 {
        self.x1.hypot(self.x2)
    }
}

/// The open annulus `{z : inner < ‖z‖ < outer}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub inner: f64,
    pub outer: f64,
}

impl Annulus {
    pub fn area(&self) -> f64 {
        PI * (self.outer * self.outer - self.inner * self.inner)
    }

    pub fn contains(&self, y: &PlanarPoint) -> bool {
        let r = y.radius();
        self.inner < r && r < self.outer
    }
}

/// Unnormalized log-density; `-∞` encodes density zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogDensity(pub f64);

impl LogDensity {
    pub const ZERO_DENSITY: LogDensity = LogDensity(f64::NEG_INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

/// Log of the square-model density. Coincident particles give `-∞` when `c2 > 0`.
pub fn log_density_square(cfg: &SquareConfig, params: &ModelParams) -> LogDensity {
    let pts = cfg.points();
    let attraction: f64 = pts.iter().map(|&p| norm(p)).sum();
    let mut energy = params.c1 * attraction;
    if params.c2 > 0.0 {
        let mut repulsion = 0.0;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let d = dist(pts[i], pts[j]);
                if d == 0.0 {
                    return LogDensity::ZERO_DENSITY;
                }
                repulsion += 1.0 / d;
            }
        }
        energy += params.c2 * repulsion;
    }
    LogDensity(-energy)
}

/// Energy terms of the square model that involve particle `i` placed at `at`,
/// holding the other particles fixed. Differences of this quantity give the
/// log acceptance ratio of a single-particle move. Infinite on coincidence.
pub(crate) fn local_energy(
    cfg: &SquareConfig,
    params: &ModelParams,
    i: usize,
    at: [f64; 2],
) -> f64 {
    let mut e = params.c1 * norm(at);
    if params.c2 > 0.0 {
        for (j, &p) in cfg.points().iter().enumerate() {
            if j == i {
                continue;
            }
            let d = dist(at, p);
            if d == 0.0 {
                return f64::INFINITY;
            }
            e += params.c2 / d;
        }
    }
    e
}

fn require_positive(r: f64, what: &'static str) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, value: r })
    }
}

/// `H(r) = r + 1/r`.
pub fn h_radial(r: f64) -> Result<f64> {
    require_positive(r, "radius must be positive")?;
    Ok(r + 1.0 / r)
}

/// Lyapunov function `V(r) = exp(H(r)/2)`.
pub fn v_lyapunov(r: f64) -> Result<f64> {
    Ok((0.5 * h_radial(r)?).exp())
}

/// `f(r) = r·exp(r + 1/r)`. Planar acceptance ratios are `f(r_x)/f(r_y)`.
pub fn f_radial(r: f64) -> Result<f64> {
    Ok(ln_f_radial(r)?.exp())
}

/// `ln f(r) = ln r + r + 1/r`, finite for every positive radius.
pub fn ln_f_radial(r: f64) -> Result<f64> {
    require_positive(r, "radius must be positive")?;
    Ok(r.ln() + r + 1.0 / r)
}

/// Minimizer of `f_radial`, the positive root of `r² + r − 1`.
pub fn f_radial_minimizer() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// Proposal support `B_x` of the planar sampler.
pub fn annulus_of(x: &PlanarPoint) -> Result<Annulus> {
    annulus_of_radius(x.radius())
}

pub fn annulus_of_radius(r: f64) -> Result<Annulus> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::DegenerateAnnulus { radius: r });
    }
    Ok(Annulus { inner: (r - 1.0).abs(), outer: r + 1.0 })
}

/// Whether `y` lies strictly inside `a`.
pub fn annulus_contains(a: &Annulus, y: &PlanarPoint) -> bool {
    a.contains(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(points: &[[f64; 2]]) -> SquareConfig {
        SquareConfig::new(points.to_vec()).unwrap()
    }

    #[test]
    fn flat_target_has_zero_log_density() {
        let p = ModelParams::new(0.0, 0.0, 3).unwrap();
        let c = cfg(&[[0.3, 0.3], [0.3, 0.3], [0.9, 0.1]]);
        assert_eq!(log_density_square(&c, &p).value(), 0.0);
    }

    #[test]
    fn coincident_particles_have_zero_density() {
        let p = ModelParams::new(1.0, 1.0, 2).unwrap();
        let c = cfg(&[[0.4, 0.4], [0.4, 0.4]]);
        assert_eq!(log_density_square(&c, &p), LogDensity::ZERO_DENSITY);
    }

    #[test]
    fn corner_configuration_matches_hand_evaluation() {
        let p = ModelParams::new(1.0, 1.0, 3).unwrap();
        let c = cfg(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let expected = -(2.0 + (1.0 + 1.0 + 1.0 / 2f64.sqrt()));
        assert!((log_density_square(&c, &p).value() - expected).abs() < 1e-14);
        assert!((expected + 4.70711).abs() < 1e-5);
    }

    #[test]
    fn invalid_params_and_configs_are_rejected() {
        assert!(ModelParams::new(-0.1, 0.0, 3).is_err());
        assert!(ModelParams::new(0.0, f64::NAN, 3).is_err());
        assert!(ModelParams::new(0.1, 0.1, 0).is_err());
        assert!(SquareConfig::new(vec![[1.2, 0.0]]).is_err());
        assert!(SquareConfig::from_flat(&[0.1, 0.2, 0.3]).is_err());
        let p = ModelParams::new(0.1, 0.1, 3).unwrap();
        assert!(cfg(&[[0.1, 0.1]]).validate_for(&p).is_err());
    }

    #[test]
    fn radial_helpers_at_reference_radii() {
        assert_eq!(h_radial(1.0).unwrap(), 2.0);
        assert!((h_radial(0.25).unwrap() - 17.0 / 4.0).abs() < 1e-15);
        assert!((h_radial(1.25).unwrap() - 41.0 / 20.0).abs() < 1e-15);
        assert!((v_lyapunov(1.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
        assert!((v_lyapunov(4.0).unwrap() - (17.0f64 / 8.0).exp()).abs() < 1e-12);
        assert!((v_lyapunov(5.0).unwrap() - 2.6f64.exp()).abs() < 1e-12);
        assert!((f_radial(0.25).unwrap() - 0.25 * 4.25f64.exp()).abs() < 1e-12);
        let f54 = f_radial(1.25).unwrap();
        assert!((f54 - 1.25 * 2.05f64.exp()).abs() < 1e-12);
        assert!((f54 - 9.710).abs() < 1e-3);
        let e2_over_5 = std::f64::consts::E.powi(2) / 5.0;
        assert!(f_radial(0.25).unwrap() / f54 > e2_over_5);
    }

    #[test]
    fn radial_helpers_reject_nonpositive_radius() {
        for r in [0.0, -1.0, f64::NAN] {
            assert!(h_radial(r).is_err());
            assert!(v_lyapunov(r).is_err());
            assert!(f_radial(r).is_err());
        }
    }

    #[test]
    fn f_radial_derivative_changes_sign_at_minimizer() {
        let r0 = f_radial_minimizer();
        let h = 1e-6;
        let d = |r: f64| (f_radial(r + h).unwrap() - f_radial(r - h).unwrap()) / (2.0 * h);
        assert!(d(r0 - 1e-3) < 0.0);
        assert!(d(r0 + 1e-3) > 0.0);
    }

    #[test]
    fn f_radial_is_unimodal_on_a_fine_grid() {
        let n = 100_000;
        let step = (10.0 - 0.01) / n as f64;
        let values: Vec<f64> =
            (0..=n).map(|k| ln_f_radial(0.01 + k as f64 * step).unwrap()).collect();
        let signs: Vec<bool> = values.windows(2).map(|w| w[1] > w[0]).collect();
        let changes: Vec<usize> =
            signs.windows(2).enumerate().filter(|(_, s)| s[0] != s[1]).map(|(k, _)| k).collect();
        assert_eq!(changes.len(), 1);
        let r_change = 0.01 + (changes[0] + 1) as f64 * step;
        assert!((r_change - f_radial_minimizer()).abs() <= 2.0 * step);
    }

    #[test]
    fn annulus_reference_cases() {
        let a = annulus_of(&PlanarPoint::new(2.0, 0.0)).unwrap();
        assert_eq!((a.inner, a.outer), (1.0, 3.0));
        let a = annulus_of(&PlanarPoint::new(0.0, 0.3)).unwrap();
        assert!((a.inner - 0.7).abs() < 1e-15 && (a.outer - 1.3).abs() < 1e-15);
        assert!(!a.contains(&PlanarPoint::new(0.0, 0.3)));
        let a = annulus_of(&PlanarPoint::new(1.0, 0.0)).unwrap();
        assert_eq!((a.inner, a.outer), (0.0, 2.0));
        assert!(matches!(
            annulus_of(&PlanarPoint::new(0.0, 0.0)),
            Err(Error::DegenerateAnnulus { .. })
        ));
    }

    #[test]
    fn annulus_membership_is_strict() {
        let a = annulus_of_radius(2.0).unwrap();
        assert!(annulus_contains(&a, &PlanarPoint::new(2.5, 0.0)));
        assert!(!annulus_contains(&a, &PlanarPoint::new(1.0, 0.0)));
        assert!(!annulus_contains(&a, &PlanarPoint::new(0.0, 3.0)));
    }

    proptest! {
        #[test]
        fn annulus_area_is_four_pi_r(r in 1e-6f64..1e3) {
            let a = annulus_of_radius(r).unwrap();
            prop_assert!((a.area() - 4.0 * PI * r).abs() <= 1e-12 * (4.0 * PI * r).max(1.0));
        }

        #[test]
        fn lyapunov_is_bounded_below_by_e(r in 1e-3f64..1e2) {
            let v = v_lyapunov(r).unwrap();
            prop_assert!(v >= std::f64::consts::E);
            if (r - 1.0).abs() > 1e-3 {
                prop_assert!(v > std::f64::consts::E);
            }
        }

        #[test]
        fn square_density_is_permutation_invariant(
            coords in proptest::collection::vec(0.0f64..=1.0, 8),
            c1 in 0.0f64..2.0,
            c2 in 0.0f64..2.0,
        ) {
            let p = ModelParams::new(c1, c2, 4).unwrap();
            let c = SquareConfig::from_flat(&coords).unwrap();
            let mut rev = c.points().to_vec();
            rev.reverse();
            let r = SquareConfig::new(rev).unwrap();
            let (a, b) = (log_density_square(&c, &p).value(), log_density_square(&r, &p).value());
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}
