//! Densities and integral observables of field states, trajectory recording,
//! and reduction of runs to scattering outcomes.

use crate::error::{Error, Result};
use crate::evolve::{LambdaField, Observer};
use crate::grid::{FieldState, Grid};
use crate::model::{potential_value, ObstructionSpec, Region};
use crate::profile1d::QBallSpec;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Charge density j⁰ = Im(Φ*Φ̇) = (1/2i)(Φ*Φ̇ − ΦΦ̇*), pointwise.
pub fn charge_density(state: &FieldState) -> Vec<f64> {
    let mut out = vec![0.0; state.re.len()];
    charge_density_into(state, &mut out);
    out
}

pub fn charge_density_into(state: &FieldState, out: &mut [f64]) {
    for i in 0..state.re.len() {
        out[i] = state.re[i] * state.vim[i] - state.im[i] * state.vre[i];
    }
}

/// Energy density T₀₀ = ½|Φ̇|² + ½|∇Φ|² + λ̃U(|Φ|), gradients by central
/// differences with zero ghost cells (the evolution's convention).
pub fn energy_density(state: &FieldState, lam: &LambdaField) -> Vec<f64> {
    let n = state.grid.n_total();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let (gx, gy) = gradient_at(state, i);
        let kin = 0.5 * (state.vre[i] * state.vre[i] + state.vim[i] * state.vim[i]);
        let grad = 0.5 * (gx.0 * gx.0 + gx.1 * gx.1 + gy.0 * gy.0 + gy.1 * gy.1);
        let f = (state.re[i] * state.re[i] + state.im[i] * state.im[i]).sqrt();
        out[i] = kin + grad + potential_value(f, lam.values[i]);
    }
    out
}

/// ((∂ₓre, ∂ₓim), (∂ᵧre, ∂ᵧim)) at flat index i.
#[inline]
fn gradient_at(state: &FieldState, i: usize) -> ((f64, f64), (f64, f64)) {
    let grid = &state.grid;
    let nx = grid.nx;
    let ix = i % nx;
    let iy = i / nx;
    let xp = if ix + 1 < nx { state.re[i + 1] } else { 0.0 };
    let xm = if ix > 0 { state.re[i - 1] } else { 0.0 };
    let xp_i = if ix + 1 < nx { state.im[i + 1] } else { 0.0 };
    let xm_i = if ix > 0 { state.im[i - 1] } else { 0.0 };
    let gx_re = (xp - xm) / (2.0 * grid.dx);
    let gx_im = (xp_i - xm_i) / (2.0 * grid.dx);
    if grid.dim == 1 {
        return ((gx_re, gx_im), (0.0, 0.0));
    }
    let ny = grid.ny;
    let yp = if iy + 1 < ny { state.re[i + nx] } else { 0.0 };
    let ym = if iy > 0 { state.re[i - nx] } else { 0.0 };
    let yp_i = if iy + 1 < ny { state.im[i + nx] } else { 0.0 };
    let ym_i = if iy > 0 { state.im[i - nx] } else { 0.0 };
    let gy_re = (yp - ym) / (2.0 * grid.dy);
    let gy_im = (yp_i - ym_i) / (2.0 * grid.dy);
    ((gx_re, gx_im), (gy_re, gy_im))
}

/// Integral observables of a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Totals {
    pub q: f64,
    pub e: f64,
    pub px: f64,
    pub py: f64,
}

/// Grid totals: Q = ∫j⁰, E = ∫T₀₀, P_i = −∫Re(Φ̇ ∂ᵢΦ*). Fixed summation
/// order, independent of threading.
pub fn totals(state: &FieldState, lam: &LambdaField) -> Totals {
    let vol = state.grid.cell_volume();
    let n = state.grid.n_total();
    let (mut q, mut e, mut px, mut py) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        q += state.re[i] * state.vim[i] - state.im[i] * state.vre[i];
        let (gx, gy) = gradient_at(state, i);
        let kin = 0.5 * (state.vre[i] * state.vre[i] + state.vim[i] * state.vim[i]);
        let grad = 0.5 * (gx.0 * gx.0 + gx.1 * gx.1 + gy.0 * gy.0 + gy.1 * gy.1);
        let f = (state.re[i] * state.re[i] + state.im[i] * state.im[i]).sqrt();
        e += kin + grad + potential_value(f, lam.values[i]);
        px -= state.vre[i] * gx.0 + state.vim[i] * gx.1;
        py -= state.vre[i] * gy.0 + state.vim[i] * gy.1;
    }
    Totals {
        q: q * vol,
        e: e * vol,
        px: px * vol,
        py: py * vol,
    }
}

pub fn total_charge(state: &FieldState) -> f64 {
    let mut q = 0.0;
    for i in 0..state.re.len() {
        q += state.re[i] * state.vim[i] - state.im[i] * state.vre[i];
    }
    q * state.grid.cell_volume()
}

/// Charge inside a region.
pub fn charge_in_region(state: &FieldState, region: &Region) -> f64 {
    let grid = &state.grid;
    let mut q = 0.0;
    for i in 0..grid.n_total() {
        if region.contains(grid.point(i)) {
            q += state.re[i] * state.vim[i] - state.im[i] * state.vre[i];
        }
    }
    q * grid.cell_volume()
}

/// Spatial restriction for reductions.
#[derive(Clone, Copy)]
pub enum Domain<'a> {
    All,
    Within(&'a Region),
    Exclude(&'a Region),
}

impl Domain<'_> {
    #[inline]
    fn includes(&self, p: [f64; 2]) -> bool {
        match self {
            Domain::All => true,
            Domain::Within(r) => r.contains(p),
            Domain::Exclude(r) => !r.contains(p),
        }
    }
}

/// Minimum total |j⁰| for a q-ball to count as present.
pub const CENTROID_FLOOR: f64 = 1e-6;

/// Cells below this fraction of the in-domain peak |j⁰| are excluded from
/// the centroid average.
pub const CENTROID_MASK_FRAC: f64 = 0.01;

/// Charge-weighted mean position over the cells where |j⁰| exceeds 1% of its
/// in-domain maximum. Errors out when the total |j⁰| in the domain is below
/// the floor (no q-ball present).
pub fn centroid(j0: &[f64], grid: &Grid, domain: Domain) -> Result<[f64; 2]> {
    let mut total = 0.0;
    let mut peak = 0.0_f64;
    for i in 0..j0.len() {
        if domain.includes(grid.point(i)) {
            total += j0[i].abs();
            peak = peak.max(j0[i].abs());
        }
    }
    total *= grid.cell_volume();
    if total < CENTROID_FLOOR {
        return Err(Error::NoQballPresent {
            total,
            floor: CENTROID_FLOOR,
        });
    }
    let cut = CENTROID_MASK_FRAC * peak;
    let (mut wx, mut wy, mut w) = (0.0, 0.0, 0.0);
    for i in 0..j0.len() {
        let p = grid.point(i);
        let a = j0[i].abs();
        if a > cut && domain.includes(p) {
            w += a;
            wx += a * p[0];
            wy += a * p[1];
        }
    }
    Ok([wx / w, wy / w])
}

/// Default blob threshold as a fraction of the in-domain peak |j⁰|.
pub const BLOB_THRESHOLD_FRAC: f64 = 0.05;

/// Connected components smaller than this are discarded as noise.
pub const BLOB_MIN_CELLS: usize = 3;

/// Count connected components of {|j⁰| > threshold_frac · max |j⁰|} within
/// the domain (1d cell runs, 2d 4-neighbor connectivity). Components with
/// fewer than `min_cells` cells are discarded as noise.
pub fn count_blobs(
    j0: &[f64],
    grid: &Grid,
    domain: Domain,
    threshold_frac: f64,
    min_cells: usize,
) -> usize {
    assert!(threshold_frac > 0.0 && threshold_frac < 1.0);
    let mut peak = 0.0_f64;
    for i in 0..j0.len() {
        if domain.includes(grid.point(i)) {
            peak = peak.max(j0[i].abs());
        }
    }
    if peak == 0.0 {
        return 0;
    }
    let cut = threshold_frac * peak;
    let mut mask = vec![false; j0.len()];
    for i in 0..j0.len() {
        mask[i] = j0[i].abs() > cut && domain.includes(grid.point(i));
    }
    if grid.dim == 1 {
        let mut n = 0;
        let mut run = 0usize;
        for &m in &mask {
            if m {
                run += 1;
            } else {
                if run >= min_cells {
                    n += 1;
                }
                run = 0;
            }
        }
        if run >= min_cells {
            n += 1;
        }
        return n;
    }
    // 2d: flood fill over the 4-neighborhood.
    let (nx, ny) = (grid.nx, grid.ny);
    let mut seen = vec![false; mask.len()];
    let mut stack = Vec::new();
    let mut n = 0;
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        let mut cells = 0usize;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            cells += 1;
            let (ix, iy) = (i % nx, i / nx);
            let mut visit = |j: usize| {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if ix > 0 {
                visit(i - 1);
            }
            if ix + 1 < nx {
                visit(i + 1);
            }
            if iy > 0 {
                visit(i - nx);
            }
            if iy + 1 < ny {
                visit(i + nx);
            }
        }
        if cells >= min_cells {
            n += 1;
        }
    }
    n
}

/// One diagnostics sample along a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    /// Parent centroid; NaN components when no q-ball is present.
    pub pos: [f64; 2],
    /// Least-squares velocity over the trailing samples (lagged: uses only
    /// past data). NaN until enough samples exist.
    pub vel: [f64; 2],
    pub q: f64,
    pub e: f64,
    pub px: f64,
    pub py: f64,
    /// Blob count inside the obstruction region (whole domain when there is
    /// no obstruction).
    pub blobs: usize,
}

/// Time series of reduced observables plus the run metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    /// Charge inside the obstruction region, parallel to `samples`.
    pub q_in_obstruction: Vec<f64>,
    pub qball: QBallSpec,
    pub obstruction: ObstructionSpec,
    pub grid: Grid,
    /// Absorbing-layer width, so post-processing can avoid fitting inside it.
    pub sponge_width: f64,
}

/// Number of trailing samples entering the velocity fit.
pub const VELOCITY_FIT_SAMPLES: usize = 10;

/// Least-squares slope of positions against time over the trailing
/// `VELOCITY_FIT_SAMPLES` valid samples ending at index `upto`.
fn fit_velocity(samples: &[TrajectorySample], upto: usize) -> [f64; 2] {
    let lo = (upto + 1).saturating_sub(VELOCITY_FIT_SAMPLES);
    let pts: Vec<&TrajectorySample> = samples[lo..=upto]
        .iter()
        .filter(|s| s.pos[0].is_finite() && s.pos[1].is_finite())
        .collect();
    slope_of(&pts)
}

fn slope_of(pts: &[&TrajectorySample]) -> [f64; 2] {
    if pts.len() < 2 {
        return [f64::NAN, f64::NAN];
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|s| s.t).sum::<f64>() / n;
    let xm = pts.iter().map(|s| s.pos[0]).sum::<f64>() / n;
    let ym = pts.iter().map(|s| s.pos[1]).sum::<f64>() / n;
    let mut stt = 0.0;
    let mut stx = 0.0;
    let mut sty = 0.0;
    for s in pts {
        let dt = s.t - tm;
        stt += dt * dt;
        stx += dt * (s.pos[0] - xm);
        sty += dt * (s.pos[1] - ym);
    }
    if stt == 0.0 {
        return [f64::NAN, f64::NAN];
    }
    [stx / stt, sty / stt]
}

impl Trajectory {
    pub fn new(qball: QBallSpec, obstruction: ObstructionSpec, grid: Grid) -> Self {
        Self {
            samples: Vec::new(),
            q_in_obstruction: Vec::new(),
            qball,
            obstruction,
            grid,
            sponge_width: 0.0,
        }
    }

    pub fn last(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }

    /// CSV: header then one line per sample, 12 significant digits.
    /// Columns: t,x[,y],ux[,uy],Q,E,Px[,Py],blobs.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let two_d = self.grid.dim == 2;
        if two_d {
            writeln!(w, "t,x,y,ux,uy,Q,E,Px,Py,blobs")?;
        } else {
            writeln!(w, "t,x,ux,Q,E,Px,blobs")?;
        }
        for s in &self.samples {
            if two_d {
                writeln!(
                    w,
                    "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{}",
                    s.t, s.pos[0], s.pos[1], s.vel[0], s.vel[1], s.q, s.e, s.px, s.py, s.blobs
                )?;
            } else {
                writeln!(
                    w,
                    "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{}",
                    s.t, s.pos[0], s.vel[0], s.q, s.e, s.px, s.blobs
                )?;
            }
        }
        Ok(())
    }
}

/// Recorder knobs; the defaults are the documented estimator constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecorderConfig {
    pub floor: f64,
    pub blob_threshold: f64,
    pub blob_min_cells: usize,
    pub sponge_width: f64,
}

impl Default for RecorderConfig {
    fn default() -> Self {
        Self {
            floor: CENTROID_FLOOR,
            blob_threshold: BLOB_THRESHOLD_FRAC,
            blob_min_cells: BLOB_MIN_CELLS,
            sponge_width: 0.0,
        }
    }
}

/// Observer that reduces snapshots to a [`Trajectory`].
///
/// Parent tracking: once fission is detected (blob count inside the
/// obstruction ≥ 2 on two consecutive samples) the parent centroid excludes
/// the obstruction interior; the latch is sticky. If the excluded domain
/// holds no charge (the parent itself sits inside), the full domain is used
/// for that sample.
pub struct TrajectoryRecorder {
    pub traj: Trajectory,
    pub config: RecorderConfig,
    j0: Vec<f64>,
    fission_latched: bool,
    prev_multi: bool,
}

impl TrajectoryRecorder {
    pub fn new(qball: QBallSpec, obstruction: ObstructionSpec, grid: Grid) -> Self {
        Self {
            j0: vec![0.0; grid.n_total()],
            traj: Trajectory::new(qball, obstruction, grid),
            config: RecorderConfig::default(),
            fission_latched: false,
            prev_multi: false,
        }
    }

    pub fn with_config(mut self, config: RecorderConfig) -> Self {
        self.config = config;
        self.traj.sponge_width = config.sponge_width;
        self
    }

    pub fn fission_detected(&self) -> bool {
        self.fission_latched
    }
}

impl Observer for TrajectoryRecorder {
    fn observe(&mut self, state: &FieldState, lam: &LambdaField) {
        // Continuation runs re-observe their starting state; drop duplicates.
        if let Some(last) = self.traj.samples.last() {
            if state.t <= last.t {
                return;
            }
        }
        charge_density_into(state, &mut self.j0);
        let grid = &state.grid;
        let region = self.traj.obstruction.region.clone();
        let has_region = !matches!(region, Region::None);

        let blob_domain = if has_region {
            Domain::Within(&region)
        } else {
            Domain::All
        };
        let blobs = count_blobs(
            &self.j0,
            grid,
            blob_domain,
            self.config.blob_threshold,
            self.config.blob_min_cells,
        );
        let multi = blobs >= 2;
        if multi && self.prev_multi {
            self.fission_latched = true;
        }
        self.prev_multi = multi;

        let parent_domain = if self.fission_latched && has_region {
            Domain::Exclude(&region)
        } else {
            Domain::All
        };
        let pos = centroid(&self.j0, grid, parent_domain)
            .or_else(|_| centroid(&self.j0, grid, Domain::All))
            .unwrap_or([f64::NAN, f64::NAN]);

        let tt = totals(state, lam);
        let q_obs = if has_region {
            charge_in_region(state, &region)
        } else {
            0.0
        };

        self.traj.samples.push(TrajectorySample {
            t: state.t,
            pos,
            vel: [f64::NAN, f64::NAN],
            q: tt.q,
            e: tt.e,
            px: tt.px,
            py: tt.py,
            blobs,
        });
        self.traj.q_in_obstruction.push(q_obs);
        let k = self.traj.samples.len() - 1;
        let vel = fit_velocity(&self.traj.samples, k);
        self.traj.samples[k].vel = vel;
    }
}

/// Scattering outcome classes. `Fissioned` stands alone only when the parent
/// never cleanly transmitted, reflected, or trapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeClass {
    Transmitted,
    Reflected,
    Trapped,
    Fissioned(usize),
}

impl std::fmt::Display for OutcomeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutcomeClass::Transmitted => write!(f, "transmitted"),
            OutcomeClass::Reflected => write!(f, "reflected"),
            OutcomeClass::Trapped => write!(f, "trapped"),
            OutcomeClass::Fissioned(n) => write!(f, "fissioned({n})"),
        }
    }
}

/// Final classification of a scattering run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterOutcome {
    pub class: OutcomeClass,
    /// Persistent blob count when fission accompanied a clean outcome.
    pub fission: Option<usize>,
    pub final_pos: [f64; 2],
    pub final_speed: f64,
    /// Charge outside the obstruction at the end over the initial total.
    pub parent_charge_fraction: f64,
    /// Charge deposited inside the obstruction region at the end.
    pub charge_in_obstruction: f64,
}

/// Distance beyond the obstruction edge that counts as through/back.
pub const CLASSIFY_MARGIN: f64 = 5.0;

/// Consecutive multi-blob samples required to call fission persistent.
pub const FISSION_PERSIST_SAMPLES: usize = 10;

fn persistent_fission(samples: &[TrajectorySample]) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None; // (start, len)
    let mut start = 0usize;
    let mut len = 0usize;
    for (i, s) in samples.iter().enumerate() {
        if s.blobs >= 2 {
            if len == 0 {
                start = i;
            }
            len += 1;
            if len >= FISSION_PERSIST_SAMPLES {
                best = Some((start, len));
            }
        } else {
            len = 0;
        }
    }
    best.map(|(start, len)| {
        // Representative count: median over the last up-to-10 samples of the run.
        let end = start + len;
        let lo = end.saturating_sub(10);
        let mut counts: Vec<usize> = samples[lo..end].iter().map(|s| s.blobs).collect();
        counts.sort_unstable();
        counts[counts.len() / 2]
    })
}

/// Classify a finished run against its obstruction.
///
/// Transmitted: parent centroid beyond the far edge by more than 5 units
/// with positive outgoing velocity. Reflected: back beyond the near edge by
/// more than 5 with negative velocity. Trapped: centroid inside the
/// obstruction at the end with bounded oscillation over the trailing quarter
/// of the run. Fission is recorded alongside whichever applies when the blob
/// count stayed ≥ 2 for at least [`FISSION_PERSIST_SAMPLES`] consecutive
/// samples; it stands alone when no kinematic class fits. Otherwise the run
/// is undecided and the caller should extend it.
pub fn classify(traj: &Trajectory) -> Result<ScatterOutcome> {
    let (lo, hi) = traj
        .obstruction
        .region
        .x_extent()
        .ok_or_else(|| Error::Config("classify needs an obstruction with spatial extent".into()))?;
    let samples = &traj.samples;
    let last = samples
        .iter()
        .rev()
        .find(|s| s.pos[0].is_finite())
        .ok_or(Error::NoQballPresent {
            total: 0.0,
            floor: CENTROID_FLOOR,
        })?;
    let t_end = samples.last().map(|s| s.t).unwrap_or(0.0);
    let fission = persistent_fission(samples);
    let x = last.pos[0];
    let vx = last.vel[0];

    // Only holes bind: a ball lingering on a flat-topped barrier is still
    // in transit, not trapped.
    let can_trap = traj.obstruction.lambda0 < 0.0;
    let kinematic = if x > hi + CLASSIFY_MARGIN && vx > 0.0 {
        Some(OutcomeClass::Transmitted)
    } else if x < lo - CLASSIFY_MARGIN && vx < 0.0 {
        Some(OutcomeClass::Reflected)
    } else if can_trap && x >= lo && x <= hi && bounded_tail(samples, lo, hi) {
        Some(OutcomeClass::Trapped)
    } else {
        None
    };

    let class = match (kinematic, fission) {
        (Some(c), _) => c,
        (None, Some(n)) => OutcomeClass::Fissioned(n),
        (None, None) => return Err(Error::Undecided { t_end }),
    };

    let q0 = samples.first().map(|s| s.q).unwrap_or(0.0);
    let q_obs = traj.q_in_obstruction.last().copied().unwrap_or(0.0);
    let q_end = samples.last().map(|s| s.q).unwrap_or(0.0);
    Ok(ScatterOutcome {
        class,
        fission: if matches!(class, OutcomeClass::Fissioned(_)) {
            None
        } else {
            fission
        },
        final_pos: last.pos,
        final_speed: (last.vel[0].powi(2) + last.vel[1].powi(2)).sqrt(),
        parent_charge_fraction: if q0.abs() > 0.0 {
            (q_end - q_obs) / q0
        } else {
            0.0
        },
        charge_in_obstruction: q_obs,
    })
}

/// Trailing quarter of the samples stays within the slightly padded
/// obstruction: the oscillation is bounded.
fn bounded_tail(samples: &[TrajectorySample], lo: f64, hi: f64) -> bool {
    let n = samples.len();
    if n < 8 {
        return false;
    }
    samples[n - n / 4..]
        .iter()
        .filter(|s| s.pos[0].is_finite())
        .all(|s| s.pos[0] >= lo - 2.0 && s.pos[0] <= hi + 2.0)
}

/// Distance beyond the obstruction boundary where the trajectory counts as
/// free flight.
pub const INFLUENCE_MARGIN: f64 = 5.0;

fn obstruction_clearance(region: &Region, p: [f64; 2]) -> f64 {
    match region {
        Region::None => f64::INFINITY,
        Region::Interval { lo, hi } => {
            if p[0] < *lo {
                lo - p[0]
            } else if p[0] > *hi {
                p[0] - hi
            } else {
                0.0
            }
        }
        Region::Disk { center, radius } => {
            let d = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
            (d - radius).max(0.0)
        }
        Region::Disks { disks } => disks
            .iter()
            .map(|d| {
                let r = ((p[0] - d.center[0]).powi(2) + (p[1] - d.center[1]).powi(2)).sqrt();
                (r - d.radius).max(0.0)
            })
            .fold(f64::INFINITY, f64::min),
    }
}

/// Deflection angle θ = atan2(u_y, u_x) in degrees from the final
/// free-flight segment: the last contiguous block of samples whose centroid
/// clears the obstruction by [`INFLUENCE_MARGIN`] and stays out of the
/// sponge layer. Signed, so the y-mirrored run reports −θ; a full-turn
/// reflection reports 180.
pub fn deflection_angle(traj: &Trajectory) -> Result<f64> {
    let grid = &traj.grid;
    let sw = traj.sponge_width + 0.5;
    let x_lo = grid.x(0) + sw;
    let x_hi = grid.x(grid.nx - 1) - sw;
    let (y_lo, y_hi) = if grid.dim == 2 {
        (grid.y(0) + sw, grid.y(grid.ny - 1) - sw)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    };
    let free = |s: &TrajectorySample| {
        s.pos[0].is_finite()
            && s.pos[1].is_finite()
            && obstruction_clearance(&traj.obstruction.region, s.pos) > INFLUENCE_MARGIN
            && s.pos[0] > x_lo
            && s.pos[0] < x_hi
            && s.pos[1] > y_lo
            && s.pos[1] < y_hi
    };
    // Last contiguous free-flight window.
    let mut end = None;
    let mut start = None;
    let mut i = traj.samples.len();
    while i > 0 {
        i -= 1;
        if free(&traj.samples[i]) {
            if end.is_none() {
                end = Some(i);
            }
            start = Some(i);
        } else if end.is_some() {
            break;
        }
    }
    let t_last = traj.samples.last().map(|s| s.t).unwrap_or(0.0);
    let (Some(s0), Some(s1)) = (start, end) else {
        return Err(Error::Undecided { t_end: t_last });
    };
    if s1 - s0 + 1 < 5 {
        return Err(Error::Undecided { t_end: t_last });
    }
    let lo = s1.saturating_sub(VELOCITY_FIT_SAMPLES - 1).max(s0);
    let pts: Vec<&TrajectorySample> = traj.samples[lo..=s1].iter().collect();
    let v = slope_of(&pts);
    if !v[0].is_finite() || !v[1].is_finite() {
        return Err(Error::Undecided { t_end: t_last });
    }
    let theta = v[1].atan2(v[0]).to_degrees();
    Ok(if theta.abs() > 179.5 { 180.0 } else { theta })
}

/// Compact float formatting for file names: shortest round-trip repr.
pub fn fmt_param(v: f64) -> String {
    format!("{v}")
}

/// File-name pattern `<scenario>_<omega>_<u>_<lambda0>[_y<y0>].csv`; the y
/// suffix appears only in impact-parameter sweeps.
pub fn csv_filename(scenario: &str, omega: f64, u: f64, lambda0: f64, y0: Option<f64>) -> String {
    match y0 {
        Some(y) => format!(
            "{scenario}_{}_{}_{}_y{}.csv",
            fmt_param(omega),
            fmt_param(u),
            fmt_param(lambda0),
            fmt_param(y)
        ),
        None => format!(
            "{scenario}_{}_{}_{}.csv",
            fmt_param(omega),
            fmt_param(u),
            fmt_param(lambda0)
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::profile1d::{charge_rest, exact_profile, sample_boosted_1d};

    fn stationary_state(omega: f64, x0: f64) -> FieldState {
        sample_boosted_1d(&QBallSpec::at_rest(omega, x0), &Grid::default_1d()).unwrap()
    }

    #[test]
    fn charge_density_of_stationary_ball_is_omega_f_squared() {
        let state = stationary_state(1.9, 0.0);
        let j0 = charge_density(&state);
        let grid = &state.grid;
        for &x in &[0.0, 0.5, -1.7, 3.0] {
            let i = ((x - grid.x_min) / grid.dx).round() as usize;
            let f = exact_profile(grid.x(i), 1.9, 1.0).unwrap();
            assert!(
                (j0[i] - 1.9 * f * f).abs() < 1e-12,
                "x={x}: j0={} expected={}",
                j0[i],
                1.9 * f * f
            );
        }
    }

    #[test]
    fn real_field_has_zero_charge_density() {
        let grid = Grid::custom_1d(5.0, 0.1, 0.01);
        let mut state = FieldState::zeros(grid.clone());
        for i in 0..grid.nx {
            state.re[i] = (grid.x(i)).cos();
            state.vre[i] = 0.3 * (grid.x(i)).sin();
        }
        assert!(charge_density(&state).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grid_charge_matches_closed_form() {
        let state = stationary_state(1.9, 0.0);
        let q = total_charge(&state);
        let q_cf = charge_rest(1.9).unwrap();
        assert!(((q - q_cf) / q_cf).abs() < 1e-3, "q={q} closed form={q_cf}");
    }

    #[test]
    fn vacuum_energy_is_zero() {
        let grid = Grid::custom_1d(5.0, 0.1, 0.01);
        let state = FieldState::zeros(grid.clone());
        let lam = LambdaField::uniform(&grid);
        assert!(energy_density(&state, &lam).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn energy_density_nonnegative_for_positive_lambda() {
        let state = stationary_state(1.7, 2.0);
        let lam = LambdaField::sample(&state.grid, &ObstructionSpec::interval_1d(0.5));
        assert!(energy_density(&state, &lam).iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn centroid_of_stationary_ball() {
        let state = stationary_state(1.9, -15.0);
        let j0 = charge_density(&state);
        let c = centroid(&j0, &state.grid, Domain::All).unwrap();
        assert!((c[0] + 15.0).abs() < state.grid.dx, "c={c:?}");
    }

    #[test]
    fn centroid_of_mirror_pair_is_origin() {
        let mut state = stationary_state(1.9, -12.0);
        let other = stationary_state(1.9, 12.0);
        state.superpose(&other);
        let j0 = charge_density(&state);
        let c = centroid(&j0, &state.grid, Domain::All).unwrap();
        assert!(c[0].abs() < 1e-9, "c={c:?}");
    }

    #[test]
    fn centroid_below_floor_signals_absence() {
        let grid = Grid::custom_1d(5.0, 0.1, 0.01);
        let state = FieldState::zeros(grid.clone());
        let j0 = charge_density(&state);
        assert!(matches!(
            centroid(&j0, &grid, Domain::All),
            Err(Error::NoQballPresent { .. })
        ));
    }

    #[test]
    fn blob_count_single_and_vacuum() {
        let state = stationary_state(1.9, 0.0);
        let j0 = charge_density(&state);
        assert_eq!(count_blobs(&j0, &state.grid, Domain::All, 0.05, 3), 1);
        let vac = FieldState::zeros(state.grid.clone());
        let j0v = charge_density(&vac);
        assert_eq!(count_blobs(&j0v, &vac.grid, Domain::All, 0.05, 3), 0);
    }

    #[test]
    fn blob_count_two_separated_balls() {
        let mut state = stationary_state(1.9, -20.0);
        let other = stationary_state(1.9, 20.0);
        state.superpose(&other);
        let j0 = charge_density(&state);
        assert_eq!(count_blobs(&j0, &state.grid, Domain::All, 0.05, 3), 2);
    }

    #[test]
    fn blob_count_2d_two_patches() {
        let grid = Grid::default_2d();
        let mut state = FieldState::zeros(grid.clone());
        for i in 0..grid.n_total() {
            let p = grid.point(i);
            for c in [[-5.0, 0.0], [5.0, 3.0]] {
                let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
                if d2 < 4.0 {
                    state.re[i] = 1.0;
                    state.vim[i] = 1.0;
                }
            }
        }
        let j0 = charge_density(&state);
        assert_eq!(count_blobs(&j0, &grid, Domain::All, 0.05, 3), 2);
    }

    #[test]
    fn csv_naming() {
        assert_eq!(
            csv_filename("barrier_scatter", 1.9, 0.12, 0.01, None),
            "barrier_scatter_1.9_0.12_0.01.csv"
        );
        assert_eq!(
            csv_filename("deflection", 1.75, 0.1, 0.9, Some(7.0)),
            "deflection_1.75_0.1_0.9_y7.csv"
        );
    }
}
