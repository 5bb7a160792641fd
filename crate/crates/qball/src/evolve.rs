//! Real-time evolution of the complex field: Φ̈ = ∇²Φ − 2λ̃Φ(2 − 4|Φ|² + 3|Φ|⁴),
//! stepped with classical RK4 on the first-order system (Φ, Φ̇), with a
//! sponge-layer absorber emulating open boundaries.

use crate::error::{Error, Result};
use crate::grid::{FieldState, Grid};
use crate::model::{lambda_at, ObstructionSpec};
use serde::{Deserialize, Serialize};

/// λ̃ precomputed onto the grid. Static in time, shared by every stage of
/// every step of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaField {
    pub values: Vec<f64>,
}

impl LambdaField {
    pub fn sample(grid: &Grid, obs: &ObstructionSpec) -> Self {
        let values = (0..grid.n_total())
            .map(|i| lambda_at(grid.point(i), obs))
            .collect();
        Self { values }
    }

    pub fn uniform(grid: &Grid) -> Self {
        Self {
            values: vec![1.0; grid.n_total()],
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }
}

/// Sponge-layer absorber parameters: layer width in length units and peak
/// damping rate at the outermost cell. σ ramps quadratically from 0 at the
/// layer start to σ_max at the edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorberSpec {
    pub width: f64,
    pub sigma_max: f64,
}

impl AbsorberSpec {
    /// 1d default: 5 length units, σ_max = 5.
    pub fn default_1d() -> Self {
        Self {
            width: 5.0,
            sigma_max: 5.0,
        }
    }

    /// 2d default: a thinner layer, the default 2d domain is only 30 units
    /// across and the obstruction plus q-ball already fill most of it.
    pub fn default_2d() -> Self {
        Self {
            width: 2.5,
            sigma_max: 5.0,
        }
    }

    pub fn default_for(dim: usize) -> Self {
        if dim == 1 {
            Self::default_1d()
        } else {
            Self::default_2d()
        }
    }
}

/// Precompupted per-cell damping factors for one (grid, absorber) pair.
/// Only cells inside the layer are listed.
#[derive(Debug, Clone)]
pub struct Sponge {
    /// (flat index, multiplicative factor 1 − σ·dt per step)
    cells: Vec<(u32, f64)>,
}

impl Sponge {
    pub fn build(grid: &Grid, spec: &AbsorberSpec) -> Self {
        let mut cells = Vec::new();
        if spec.width <= 0.0 || spec.sigma_max <= 0.0 {
            return Self { cells };
        }
        let x_lo = grid.x(0);
        let x_hi = grid.x(grid.nx - 1);
        let (y_lo, y_hi) = if grid.dim == 2 {
            (grid.y(0), grid.y(grid.ny - 1))
        } else {
            (0.0, 0.0)
        };
        for i in 0..grid.n_total() {
            let p = grid.point(i);
            let mut b = (p[0] - x_lo).min(x_hi - p[0]);
            if grid.dim == 2 {
                b = b.min(p[1] - y_lo).min(y_hi - p[1]);
            }
            if b < spec.width {
                let xi = (spec.width - b) / spec.width;
                let sigma = spec.sigma_max * xi * xi;
                let factor = (1.0 - sigma * grid.dt).max(0.0);
                cells.push((i as u32, factor));
            }
        }
        Self { cells }
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Damp Φ and Φ̇ toward vacuum inside the sponge layer. Interior cells are
/// untouched.
pub fn apply_absorber(state: &mut FieldState, sponge: &Sponge) {
    for &(i, factor) in &sponge.cells {
        let i = i as usize;
        state.re[i] *= factor;
        state.im[i] *= factor;
        state.vre[i] *= factor;
        state.vim[i] *= factor;
    }
}

/// Φ̈ into (out_vre, out_vim): central-difference Laplacian with zero ghost
/// cells plus the cubic-quintic force.
fn accel(
    grid: &Grid,
    re: &[f64],
    im: &[f64],
    lam: &[f64],
    out_vre: &mut [f64],
    out_vim: &mut [f64],
) {
    let nx = grid.nx;
    let ny = grid.ny;
    let n = nx * ny;
    assert!(re.len() == n && im.len() == n && lam.len() == n);
    assert!(out_vre.len() == n && out_vim.len() == n);
    let ix2 = 1.0 / (grid.dx * grid.dx);
    if grid.dim == 1 {
        for i in 0..n {
            let c_re = re[i];
            let c_im = im[i];
            let l_re = if i > 0 { re[i - 1] } else { 0.0 };
            let r_re = if i + 1 < n { re[i + 1] } else { 0.0 };
            let l_im = if i > 0 { im[i - 1] } else { 0.0 };
            let r_im = if i + 1 < n { im[i + 1] } else { 0.0 };
            let m = c_re * c_re + c_im * c_im;
            let force = 2.0 * lam[i] * (2.0 + m * (3.0 * m - 4.0));
            out_vre[i] = (l_re - 2.0 * c_re + r_re) * ix2 - force * c_re;
            out_vim[i] = (l_im - 2.0 * c_im + r_im) * ix2 - force * c_im;
        }
    } else {
        let iy2 = 1.0 / (grid.dy * grid.dy);
        for iy in 0..ny {
            let base = iy * nx;
            for ix in 0..nx {
                let i = base + ix;
                let c_re = re[i];
                let c_im = im[i];
                let l_re = if ix > 0 { re[i - 1] } else { 0.0 };
                let r_re = if ix + 1 < nx { re[i + 1] } else { 0.0 };
                let d_re = if iy > 0 { re[i - nx] } else { 0.0 };
                let u_re = if iy + 1 < ny { re[i + nx] } else { 0.0 };
                let l_im = if ix > 0 { im[i - 1] } else { 0.0 };
                let r_im = if ix + 1 < nx { im[i + 1] } else { 0.0 };
                let d_im = if iy > 0 { im[i - nx] } else { 0.0 };
                let u_im = if iy + 1 < ny { im[i + nx] } else { 0.0 };
                let m = c_re * c_re + c_im * c_im;
                let force = 2.0 * lam[i] * (2.0 + m * (3.0 * m - 4.0));
                out_vre[i] =
                    (l_re - 2.0 * c_re + r_re) * ix2 + (d_re - 2.0 * c_re + u_re) * iy2
                        - force * c_re;
                out_vim[i] =
                    (l_im - 2.0 * c_im + r_im) * ix2 + (d_im - 2.0 * c_im + u_im) * iy2
                        - force * c_im;
            }
        }
    }
}

/// Time derivative of the state: (Φ̇, Φ̈). The returned state carries Φ̇ in
/// its field slots and Φ̈ in its derivative slots. Debug/test surface; the
/// stepper uses the buffer-reusing internals.
pub fn rhs(state: &FieldState, lam: &LambdaField) -> FieldState {
    let mut out = FieldState::zeros(state.grid.clone());
    out.t = state.t;
    out.re.copy_from_slice(&state.vre);
    out.im.copy_from_slice(&state.vim);
    accel(
        &state.grid,
        &state.re,
        &state.im,
        &lam.values,
        &mut out.vre,
        &mut out.vim,
    );
    out
}

struct StageBuf {
    re: Vec<f64>,
    im: Vec<f64>,
    vre: Vec<f64>,
    vim: Vec<f64>,
}

impl StageBuf {
    fn new(n: usize) -> Self {
        Self {
            re: vec![0.0; n],
            im: vec![0.0; n],
            vre: vec![0.0; n],
            vim: vec![0.0; n],
        }
    }
}

/// Default blow-up threshold: values beyond this abort the run.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// Classical RK4 stepper with preallocated stage buffers.
pub struct Stepper {
    k1: StageBuf,
    k2: StageBuf,
    k3: StageBuf,
    k4: StageBuf,
    scr: StageBuf,
    pub blowup_threshold: f64,
}

// scr = state + h * k  (Φ slots from Φ̇ slots of k, Φ̇ slots from accel of k)
fn stage_combine(state: &FieldState, k: &StageBuf, h: f64, scr: &mut StageBuf) {
    let n = state.re.len();
    for i in 0..n {
        scr.re[i] = state.re[i] + h * k.re[i];
    }
    for i in 0..n {
        scr.im[i] = state.im[i] + h * k.im[i];
    }
    for i in 0..n {
        scr.vre[i] = state.vre[i] + h * k.vre[i];
    }
    for i in 0..n {
        scr.vim[i] = state.vim[i] + h * k.vim[i];
    }
}

fn eval_rhs(grid: &Grid, input_re: &[f64], input_im: &[f64], input_vre: &[f64], input_vim: &[f64], lam: &[f64], out: &mut StageBuf) {
    out.re.copy_from_slice(input_vre);
    out.im.copy_from_slice(input_vim);
    accel(grid, input_re, input_im, lam, &mut out.vre, &mut out.vim);
}

impl Stepper {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n_total();
        Self {
            k1: StageBuf::new(n),
            k2: StageBuf::new(n),
            k3: StageBuf::new(n),
            k4: StageBuf::new(n),
            scr: StageBuf::new(n),
            blowup_threshold: BLOWUP_THRESHOLD,
        }
    }

    /// One classical RK4 step of size grid.dt. Deterministic: fixed
    /// evaluation and summation order. Errors out when any value exceeds the
    /// blow-up threshold or turns non-finite.
    pub fn step_rk4(&mut self, state: &mut FieldState, lam: &LambdaField) -> Result<()> {
        let grid = state.grid.clone();
        let h = grid.dt;
        let lamv = &lam.values;

        eval_rhs(&grid, &state.re, &state.im, &state.vre, &state.vim, lamv, &mut self.k1);
        stage_combine(state, &self.k1, 0.5 * h, &mut self.scr);
        eval_rhs(&grid, &self.scr.re, &self.scr.im, &self.scr.vre, &self.scr.vim, lamv, &mut self.k2);
        stage_combine(state, &self.k2, 0.5 * h, &mut self.scr);
        eval_rhs(&grid, &self.scr.re, &self.scr.im, &self.scr.vre, &self.scr.vim, lamv, &mut self.k3);
        stage_combine(state, &self.k3, h, &mut self.scr);
        eval_rhs(&grid, &self.scr.re, &self.scr.im, &self.scr.vre, &self.scr.vim, lamv, &mut self.k4);

        let w = h / 6.0;
        let mut max_abs = 0.0_f64;
        let mut sumsq = 0.0_f64;
        {
            let n = state.re.len();
            let combine = |y: &mut [f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64], max_abs: &mut f64, sumsq: &mut f64| {
                for i in 0..n {
                    let v = y[i] + w * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
                    y[i] = v;
                    *max_abs = max_abs.max(v.abs());
                    *sumsq += v * v;
                }
            };
            combine(&mut state.re, &self.k1.re, &self.k2.re, &self.k3.re, &self.k4.re, &mut max_abs, &mut sumsq);
            combine(&mut state.im, &self.k1.im, &self.k2.im, &self.k3.im, &self.k4.im, &mut max_abs, &mut sumsq);
            combine(&mut state.vre, &self.k1.vre, &self.k2.vre, &self.k3.vre, &self.k4.vre, &mut max_abs, &mut sumsq);
            combine(&mut state.vim, &self.k1.vim, &self.k2.vim, &self.k3.vim, &self.k4.vim, &mut max_abs, &mut sumsq);
        }
        state.t += h;
        // A NaN anywhere poisons sumsq even though f64::max ignores it.
        if !sumsq.is_finite() || max_abs > self.blowup_threshold {
            return Err(Error::Blowup {
                t: state.t,
                max_abs,
            });
        }
        Ok(())
    }
}

/// Run control: end time, diagnostics cadence, absorber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub t_end: f64,
    /// Observers fire every `sample_interval` time units (and at start/end).
    pub sample_interval: f64,
    /// None disables the boundary damping entirely.
    pub absorber: Option<AbsorberSpec>,
}

impl RunOptions {
    pub fn to_t(t_end: f64) -> Self {
        Self {
            t_end,
            sample_interval: 0.5,
            absorber: None,
        }
    }

    pub fn with_absorber(t_end: f64, dim: usize) -> Self {
        Self {
            t_end,
            sample_interval: 0.5,
            absorber: Some(AbsorberSpec::default_for(dim)),
        }
    }
}

/// Observers receive immutable snapshots at the sampling cadence. Returning
/// true from `should_stop` ends the run after the current sample.
pub trait Observer {
    fn observe(&mut self, state: &FieldState, lam: &LambdaField);
    fn should_stop(&mut self) -> bool {
        false
    }
}

impl<F: FnMut(&FieldState, &LambdaField)> Observer for F {
    fn observe(&mut self, state: &FieldState, lam: &LambdaField) {
        self(state, lam)
    }
}

/// Step the state to `opts.t_end`, applying the absorber after every step
/// and invoking observers at the sampling cadence.
///
/// Continuation-safe: the state's current `t` is the starting point, so a
/// caller may extend a run by calling `run` again with a larger `t_end`.
/// Propagates blow-up errors with the time of failure.
pub fn run(
    state: &mut FieldState,
    lam: &LambdaField,
    opts: &RunOptions,
    observers: &mut [&mut dyn Observer],
) -> Result<()> {
    if !(opts.t_end >= state.t) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            value: opts.t_end,
            reason: "must lie at or beyond the state's current time",
        });
    }
    let grid = state.grid.clone();
    grid.validate()?;
    let dt = grid.dt;
    let t0 = state.t;
    let n_steps = ((opts.t_end - t0) / dt - 1e-9).ceil().max(0.0) as u64;
    let sample_every = (opts.sample_interval / dt).round().max(1.0) as u64;
    let sponge = opts
        .absorber
        .as_ref()
        .map(|spec| Sponge::build(&grid, spec));
    let mut stepper = Stepper::new(&grid);

    for obs in observers.iter_mut() {
        obs.observe(state, lam);
    }
    if observers.iter_mut().any(|o| o.should_stop()) {
        return Ok(());
    }

    for step in 1..=n_steps {
        stepper.step_rk4(state, lam)?;
        if let Some(sponge) = &sponge {
            apply_absorber(state, sponge);
        }
        // Track time exactly; += drift would desynchronize the observers.
        state.t = t0 + step as f64 * dt;
        if step % sample_every == 0 || step == n_steps {
            for obs in observers.iter_mut() {
                obs.observe(state, lam);
            }
            if observers.iter_mut().any(|o| o.should_stop()) {
                break;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_is_static() {
        let grid = Grid::custom_1d(5.0, 0.05, 0.01);
        let state = FieldState::zeros(grid.clone());
        let lam = LambdaField::uniform(&grid);
        let d = rhs(&state, &lam);
        assert!(d.re.iter().all(|&v| v == 0.0));
        assert!(d.vre.iter().all(|&v| v == 0.0));
        assert!(d.vim.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn blowup_is_detected() {
        let grid = Grid::custom_1d(1.0, 0.1, 0.05);
        let mut state = FieldState::zeros(grid.clone());
        state.re[10] = f64::NAN;
        let lam = LambdaField::uniform(&grid);
        let mut stepper = Stepper::new(&grid);
        match stepper.step_rk4(&mut state, &lam) {
            Err(Error::Blowup { .. }) => {}
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn absorber_leaves_interior_untouched() {
        let grid = Grid::default_1d();
        let mut state = FieldState::zeros(grid.clone());
        for i in 0..grid.nx {
            state.re[i] = (0.1 * grid.x(i)).sin();
            state.vim[i] = (0.05 * grid.x(i)).cos();
        }
        let reference = state.clone();
        let sponge = Sponge::build(&grid, &AbsorberSpec::default_1d());
        apply_absorber(&mut state, &sponge);
        for i in 0..grid.nx {
            let x = grid.x(i);
            if x > -55.0 && x < 55.0 {
                assert_eq!(state.re[i], reference.re[i], "interior touched at x={x}");
                assert_eq!(state.vim[i], reference.vim[i]);
            }
        }
        // The outermost cells are damped.
        assert!(state.re[0].abs() < reference.re[0].abs() || reference.re[0] == 0.0);
    }

    #[test]
    fn lambda_field_none_is_uniform() {
        let grid = Grid::default_2d();
        let lam = LambdaField::sample(&grid, &ObstructionSpec::none());
        assert!(lam.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn run_rejects_backward_time() {
        let grid = Grid::custom_1d(1.0, 0.1, 0.05);
        let mut state = FieldState::zeros(grid.clone());
        state.t = 5.0;
        let lam = LambdaField::uniform(&grid);
        assert!(run(&mut state, &lam, &RunOptions::to_t(1.0), &mut []).is_err());
    }
}
