//! 2d radial q-ball profiles by shooting, and sampling them onto grids as
//! boosted initial data.
//!
//! The radial boundary-value problem is
//!
//!   f″ + (1/r) f′ + ω² f − 2λ̃ f (2 − 4f² + 3f⁴) = 0,
//!   f′(0) = 0,  f(r) → 0 as r → ∞,
//!
//! treated as the mechanical analogue of a particle rolling in
//! U_eff = ½ω²f² − U with friction 1/r: a single decaying solution sits
//! between overshoot (f crosses zero) and undershoot (f turns back up).

use crate::error::{Error, Result};
use crate::grid::{FieldState, Grid};
use crate::model::{check_omega, potential_deriv};
use crate::profile1d::QBallSpec;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Shooting controls. Defaults follow the crate-wide conventions: RK4 with
/// dr = 1e-3 and bisection to 1e-12 bracket width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootParams {
    pub r_max: f64,
    pub dr: f64,
    /// Decay tolerance: the returned profile satisfies f(r_max) < tol.
    pub tol: f64,
    pub bisect_tol: f64,
    pub max_iter: usize,
}

impl Default for ShootParams {
    fn default() -> Self {
        Self {
            r_max: 20.0,
            dr: 1e-3,
            tol: 1e-6,
            bisect_tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Numerically determined radial profile, sampled on r = i·dr, with an
/// exponential K-decay tail matched where the solution first drops below the
/// decay tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub omega: f64,
    pub lambda: f64,
    pub r_max: f64,
    pub dr: f64,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    /// Linearized decay rate κ = √(4λ̃ − ω²).
    pub kappa: f64,
    /// Sample index where the analytic tail takes over.
    pub tail_start: usize,
}

impl RadialProfile {
    pub fn f0(&self) -> f64 {
        self.f[0]
    }

    /// Profile value at any radius: linear interpolation on the samples,
    /// K₀-asymptotic tail √(r₀/r)·e^{−κ(r−r₀)} beyond the matching point.
    pub fn value(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        let r_tail = self.tail_start as f64 * self.dr;
        if r >= r_tail {
            let f0 = self.f[self.tail_start];
            if f0 == 0.0 {
                return 0.0;
            }
            return f0 * (r_tail / r.max(r_tail)).sqrt() * (-self.kappa * (r - r_tail)).exp();
        }
        let s = r / self.dr;
        let i = s.floor() as usize;
        let w = s - i as f64;
        if i + 1 < self.f.len() {
            self.f[i] * (1.0 - w) + self.f[i + 1] * w
        } else {
            *self.f.last().unwrap()
        }
    }

    /// Radial derivative, same interpolation scheme.
    pub fn deriv(&self, r: f64) -> f64 {
        let r_tail = self.tail_start as f64 * self.dr;
        if r >= r_tail {
            let rr = r.max(r_tail.max(self.dr));
            return self.value(r) * (-self.kappa - 0.5 / rr);
        }
        let s = r / self.dr;
        let i = s.floor() as usize;
        let w = s - i as f64;
        if i + 1 < self.df.len() {
            self.df[i] * (1.0 - w) + self.df[i + 1] * w
        } else {
            *self.df.last().unwrap()
        }
    }

    /// Two-column text (r f), one sample per line.
    pub fn write_two_column<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, &fv) in self.f.iter().enumerate() {
            writeln!(w, "{:.6} {:.12e}", i as f64 * self.dr, fv)?;
        }
        Ok(())
    }
}

/// Radial RHS; at r = 0 the friction term's limit turns f″ into
/// (U′_eff-terms)/2.
#[inline]
fn radial_rhs(r: f64, f: f64, g: f64, omega2: f64, lambda: f64) -> (f64, f64) {
    let force = potential_deriv(f, lambda) - omega2 * f;
    if r < 1e-12 {
        (g, 0.5 * force)
    } else {
        (g, force - g / r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shot {
    Overshoot,
    Undershoot,
    Decayed,
}

/// Integrate from f(0) = a, f′(0) = 0 and classify the trajectory.
fn integrate(
    a: f64,
    omega2: f64,
    lambda: f64,
    p: &ShootParams,
    mut record: Option<&mut (Vec<f64>, Vec<f64>)>,
) -> Shot {
    let mut f = a;
    let mut g = 0.0;
    let n = (p.r_max / p.dr).round() as usize;
    if let Some(buf) = record.as_deref_mut() {
        buf.0.push(f);
        buf.1.push(g);
    }
    for i in 0..n {
        let r = i as f64 * p.dr;
        let h = p.dr;
        let (k1f, k1g) = radial_rhs(r, f, g, omega2, lambda);
        let (k2f, k2g) = radial_rhs(r + 0.5 * h, f + 0.5 * h * k1f, g + 0.5 * h * k1g, omega2, lambda);
        let (k3f, k3g) = radial_rhs(r + 0.5 * h, f + 0.5 * h * k2f, g + 0.5 * h * k2g, omega2, lambda);
        let (k4f, k4g) = radial_rhs(r + h, f + h * k3f, g + h * k3g, omega2, lambda);
        f += h / 6.0 * (k1f + 2.0 * (k2f + k3f) + k4f);
        g += h / 6.0 * (k1g + 2.0 * (k2g + k3g) + k4g);
        if let Some(buf) = record.as_deref_mut() {
            buf.0.push(f);
            buf.1.push(g);
        }
        if f <= 0.0 {
            return Shot::Overshoot;
        }
        if g > 0.0 && f > p.tol {
            return Shot::Undershoot;
        }
    }
    if f < p.tol {
        Shot::Decayed
    } else {
        Shot::Undershoot
    }
}

/// Solve the radial BVP by bisection on f(0).
///
/// The bracket comes from the effective-potential structure: the turning
/// point U_eff(f) = 0 always undershoots (zero surplus against friction),
/// while f(0) just below the U_eff hilltop overshoots (the particle lingers
/// near the top until r is large and friction negligible). A blind upward
/// scan misses the overshoot window at low ω, where it is narrower than any
/// reasonable step. Deterministic: identical inputs give bit-identical
/// profiles.
pub fn shoot_profile(omega: f64, lambda: f64, p: &ShootParams) -> Result<RadialProfile> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            reason: "must be positive and finite",
        });
    }
    check_omega(omega, lambda)?;
    let omega2 = omega * omega;

    // Largest-amplitude zero of U_eff below the hilltop: f² = 1 − √(ω²/2λ̃ − 1).
    let turning = (1.0 - (omega2 / (2.0 * lambda) - 1.0).sqrt()).sqrt();
    // U_eff hilltop: the larger root of ω²f = U′(f).
    let disc = (24.0 * lambda * omega2 - 32.0 * lambda * lambda).sqrt();
    let hilltop = ((8.0 * lambda + disc) / (12.0 * lambda)).sqrt();

    let mut lo = turning;
    if integrate(lo, omega2, lambda, p, None) == Shot::Overshoot {
        lo *= 0.9;
        if integrate(lo, omega2, lambda, p, None) == Shot::Overshoot {
            return Err(Error::BracketNotFound { lo: 0.0, hi: lo });
        }
    }
    let mut hi = None;
    let mut delta = 1e-3 * hilltop;
    for _ in 0..40 {
        let a = hilltop - delta;
        if a <= lo {
            break;
        }
        if integrate(a, omega2, lambda, p, None) == Shot::Overshoot {
            hi = Some(a);
            break;
        }
        delta *= 0.25;
    }
    let Some(mut hi) = hi else {
        return Err(Error::BracketNotFound { lo, hi: hilltop });
    };

    // Bisection on the shooting parameter.
    let mut iters = 0usize;
    while hi - lo > p.bisect_tol {
        iters += 1;
        if iters > p.max_iter {
            return Err(Error::ShootingNoConvergence { iterations: iters });
        }
        let mid = 0.5 * (lo + hi);
        match integrate(mid, omega2, lambda, p, None) {
            Shot::Overshoot => hi = mid,
            Shot::Undershoot | Shot::Decayed => lo = mid,
        }
    }

    // Final pass at the midpoint, recording the trajectory.
    let a_star = 0.5 * (lo + hi);
    let mut rec = (Vec::new(), Vec::new());
    integrate(a_star, omega2, lambda, p, Some(&mut rec));
    let (mut f, mut df) = rec;
    let n = (p.r_max / p.dr).round() as usize + 1;
    f.resize(n, 0.0);
    df.resize(n, 0.0);

    let kappa = (4.0 * lambda - omega2).sqrt();
    // Replace everything past the first decayed sample with the analytic
    // tail; the shot trajectory is contaminated by the growing mode there.
    let mut tail_start = n - 1;
    for i in 0..n {
        if f[i] < p.tol && df[i] < 0.0 {
            tail_start = i;
            break;
        }
    }
    let r0 = tail_start as f64 * p.dr;
    let f0 = f[tail_start];
    for i in tail_start..n {
        let r = i as f64 * p.dr;
        let val = if i == tail_start {
            f0
        } else {
            f0 * (r0 / r).sqrt() * (-kappa * (r - r0)).exp()
        };
        f[i] = val;
        df[i] = val * (-kappa - 0.5 / r.max(p.dr));
    }

    let profile = RadialProfile {
        omega,
        lambda,
        r_max: p.r_max,
        dr: p.dr,
        f,
        df,
        kappa,
        tail_start,
    };
    if !(profile.f[n - 1] < p.tol) {
        return Err(Error::ShootingNoConvergence { iterations: iters });
    }
    Ok(profile)
}

/// A field sampled from a radial profile, plus the largest profile value on
/// the grid boundary: callers should treat `edge_max > 1e-4` as a clipped
/// support warning.
#[derive(Debug, Clone)]
pub struct SampledField {
    pub state: FieldState,
    pub edge_max: f64,
}

impl SampledField {
    pub fn clipped(&self) -> bool {
        self.edge_max > 1e-4
    }
}

/// Sample Φ, Φ̇ on a 2d grid with an x-directed boost:
/// x′ = γ(x − x₀ − ut), y′ = y, phase ωγ(t − u(x − x₀)), at t = 0.
/// Radial lookup by linear interpolation in r.
pub fn field_from_radial(profile: &RadialProfile, spec: &QBallSpec, grid: &Grid) -> SampledField {
    assert_eq!(grid.dim, 2, "field_from_radial needs a 2d grid");
    let gamma = spec.gamma();
    let mut state = FieldState::zeros(grid.clone());
    let mut edge_max = 0.0_f64;
    for iy in 0..grid.ny {
        let y = grid.y(iy) - spec.y0;
        for ix in 0..grid.nx {
            let i = grid.idx(ix, iy);
            let xp = gamma * (grid.x(ix) - spec.x0);
            let r = (xp * xp + y * y).sqrt();
            let f = profile.value(r);
            let theta = -spec.omega * gamma * spec.u * (grid.x(ix) - spec.x0);
            let (sin, cos) = theta.sin_cos();
            state.re[i] = f * cos;
            state.im[i] = f * sin;
            // d/dt of f(r'(t)) e^{iθ(t)}: radial transport plus phase rotation.
            let fr = if r > 1e-12 {
                profile.deriv(r) * (-gamma * spec.u * xp / r)
            } else {
                0.0
            };
            let w = spec.omega * gamma;
            state.vre[i] = fr * cos - f * w * sin;
            state.vim[i] = fr * sin + f * w * cos;
            if ix == 0 || ix + 1 == grid.nx || iy == 0 || iy + 1 == grid.ny {
                edge_max = edge_max.max(f.abs());
            }
        }
    }
    SampledField { state, edge_max }
}
