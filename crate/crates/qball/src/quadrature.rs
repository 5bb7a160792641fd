//! Adaptive Simpson quadrature used for the profile integrals.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 60;

/// Initial uniform panels; adaptivity starts below this scale. Integrands
/// whose support is narrower than one panel AND vanishes at all its probe
/// points would otherwise be accepted as zero.
const PANELS: usize = 32;

/// Integrate `f` over [a, b] to absolute tolerance `tol`.
///
/// The interval is pre-split into uniform panels, each refined by classic
/// adaptive Simpson with the 1/15 Richardson correction. Returns an error
/// carrying the achieved tolerance when some subinterval bottoms out before
/// meeting its share of the budget.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    let mut value = 0.0;
    let w = (b - a) / PANELS as f64;
    let panel_tol = tol / PANELS as f64;
    for k in 0..PANELS {
        let pa = a + k as f64 * w;
        let pb = if k + 1 == PANELS { b } else { pa + w };
        let fa = f(pa);
        let fb = f(pb);
        let m = 0.5 * (pa + pb);
        let fm = f(m);
        let whole = simpson(pa, pb, fa, fm, fb);
        value += adapt(&f, pa, pb, fa, fm, fb, whole, panel_tol, MAX_DEPTH, &mut worst);
    }
    if worst > tol {
        return Err(Error::QuadratureNoConvergence {
            achieved: worst,
            requested: tol,
        });
    }
    Ok(value)
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    worst: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || depth == 0 {
        if depth == 0 {
            *worst = worst.max(delta.abs() / 15.0);
        }
        return left + right + delta / 15.0;
    }
    let half = 0.5 * tol;
    adapt(f, a, m, fa, flm, fm, left, half, depth - 1, worst)
        + adapt(f, m, b, fm, frm, fb, right, half, depth - 1, worst)
}
