//! Scalar functionals of chain states, shared by the diagnostics and the
//! total-variation estimator.

use std::fmt;

/// Radial reduction of a planar functional: `average(r)` is the mean of the
/// functional over the circle of radius `r`, so stationary expectations reduce
/// to one-dimensional integrals.
#[derive(Clone, Copy)]
pub struct RadialForm {
    pub average: fn(f64) -> f64,
    /// Radii where `average` has a kink or jump.
    pub breakpoints: &'static [f64],
    /// `sup |average|`, used for the truncation audit.
    pub sup_abs: f64,
}

/// A named map from states to reals, optionally with a declared range.
pub struct Functional<S> {
    pub name: &'static str,
    pub eval: fn(&S) -> f64,
    pub range: Option<(f64, f64)>,
    pub radial: Option<RadialForm>,
}

impl<S> Functional<S> {
    pub const fn new(name: &'static str, eval: fn(&S) -> f64) -> Self {
        Self { name, eval, range: None, radial: None }
    }

    pub const fn with_range(mut self, lo: f64, hi: f64) -> Self {
        self.range = Some((lo, hi));
        self
    }

    pub const fn with_radial(mut self, radial: RadialForm) -> Self {
        self.radial = Some(radial);
        self
    }

    pub fn evaluate(&self, s: &S) -> f64 {
        (self.eval)(s)
    }

    pub fn width(&self) -> Option<f64> {
        self.range.map(|(a, b)| b - a)
    }
}

// Manual impls: a derive would require `S: Clone`.
impl<S> Clone for Functional<S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S> Copy for Functional<S> {}

impl<S> fmt::Debug for Functional<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Functional")
            .field("name", &self.name)
            .field("range", &self.range)
            .field("radial", &self.radial.is_some())
            .finish()
    }
}

/// Looks a functional up by name.
pub fn find<'a, S>(list: &'a [Functional<S>], name: &str) -> Option<&'a Functional<S>> {
    list.iter().find(|f| f.name == name)
}
