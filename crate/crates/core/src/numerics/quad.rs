//! Adaptive Gauss–Kronrod (7/15-point) quadrature with local bisection.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Maximum bisection depth before giving up on an interval.
pub const MAX_DEPTH: u32 = 60;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod evaluation with its embedded 7-point Gauss estimate.
fn kronrod<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = h * XGK[k];
        let pair = g(c - dx) + g(c + dx);
        kron += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integrates `g` over `[a, b]`, bisecting each interval until its error
/// estimate falls below `tol` times its share of the total length.
pub fn quad_1d<F: Fn(f64) -> f64>(g: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!("quadrature needs finite a < b, got [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("quadrature tolerance must be positive, got {tol}")));
    }
    let width = b - a;
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0;
    let mut failed = false;
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = kronrod(&g, lo, hi);
        evaluations += 15;
        let budget = tol * (hi - lo) / width;
        let mid = 0.5 * (lo + hi);
        // an interval that can no longer be split in f64 is accepted as is
        let unsplittable = mid <= lo || mid >= hi;
        if e <= budget || unsplittable || !v.is_finite() {
            value += v;
            error += e;
            failed |= e > budget || !v.is_finite();
        } else if depth >= MAX_DEPTH {
            value += v;
            error += e;
            failed = true;
        } else {
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    if failed {
        return Err(Error::Quadrature { a, b, best: value, error });
    }
    Ok(QuadratureResult { value, error_estimate: error, evaluations })
}

/// Integrates over `[a, b]` split at the given interior breakpoints; the
/// tolerance is shared between pieces in proportion to their length.
pub fn quad_1d_points<F: Fn(f64) -> f64>(
    g: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<QuadratureResult> {
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&p| a < p && p < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);
    let mut total = QuadratureResult { value: 0.0, error_estimate: 0.0, evaluations: 0 };
    for w in edges.windows(2) {
        let piece = quad_1d(&g, w[0], w[1], tol * (w[1] - w[0]) / (b - a))?;
        total.value += piece.value;
        total.error_estimate += piece.error_estimate;
        total.evaluations += piece.evaluations;
    }
    Ok(total)
}
