//! Scenario drivers: rest releases, barrier/hole scattering, critical
//! velocity searches, impact-parameter sweeps, and stability tables.

use crate::diagnostics::{
    classify, csv_filename, deflection_angle, RecorderConfig, ScatterOutcome, Trajectory,
    TrajectoryRecorder, TrajectorySample,
};
use crate::error::{Error, Result};
use crate::evolve::{run, AbsorberSpec, LambdaField, Observer, RunOptions};
use crate::grid::Grid;
use crate::model::{stability_mass, ObstructionSpec, Region, DEFAULT_INTERVAL, DEFAULT_RADIUS};
use crate::profile1d::{
    charge_rest, critical_velocity_barrier, energy_closed_form_printed, mass_closed_form,
    sample_boosted_1d, QBallSpec,
};
use crate::profile2d::{field_from_radial, shoot_profile, RadialProfile, ShootParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    RestRelease,
    BarrierScatter,
    HoleScatter,
    CriticalVelocitySearch,
    ImpactParameterSweep,
    TwoHoleSymmetric,
    StabilityCurves,
}

impl ScenarioKind {
    pub fn dimension(&self) -> usize {
        match self {
            ScenarioKind::ImpactParameterSweep | ScenarioKind::TwoHoleSymmetric => 2,
            _ => 1,
        }
    }

    pub fn default_t_end(&self) -> f64 {
        match self {
            ScenarioKind::RestRelease => 200.0,
            ScenarioKind::ImpactParameterSweep | ScenarioKind::TwoHoleSymmetric => 250.0,
            _ => 400.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::RestRelease => "rest_release",
            ScenarioKind::BarrierScatter => "barrier_scatter",
            ScenarioKind::HoleScatter => "hole_scatter",
            ScenarioKind::CriticalVelocitySearch => "critical_velocity",
            ScenarioKind::ImpactParameterSweep => "deflection",
            ScenarioKind::TwoHoleSymmetric => "two_hole",
            ScenarioKind::StabilityCurves => "stability",
        }
    }
}

/// Grid overrides for a scenario; anything absent takes the per-dimension
/// reference default.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dimension: Option<usize>,
    pub half_extent: Option<f64>,
    pub dx: Option<f64>,
    pub dt: Option<f64>,
}

impl GridConfig {
    pub fn build(&self, default_dim: usize) -> Result<Grid> {
        let dim = self.dimension.unwrap_or(default_dim);
        let mut grid = match dim {
            1 => Grid::default_1d(),
            2 => Grid::default_2d(),
            d => return Err(Error::Config(format!("unsupported dimension {d}"))),
        };
        if self.half_extent.is_some() || self.dx.is_some() {
            let half = self.half_extent.unwrap_or(if dim == 1 { 60.0 } else { 15.0 });
            let dx = self.dx.unwrap_or(grid.dx);
            let dt = self.dt.unwrap_or(if dim == 1 { dx / 4.0 } else { dx / 5.0 });
            grid = if dim == 1 {
                Grid::custom_1d(half, dx, dt)
            } else {
                Grid::custom_2d(half, dx, dt)
            };
        } else if let Some(dt) = self.dt {
            grid.dt = dt;
        }
        grid.validate()?;
        Ok(grid)
    }
}

/// A scenario: the JSON schema of config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub qball: Option<QBallSpec>,
    /// Sweep lists; empty means "use the single value from qball/obstruction".
    #[serde(default)]
    pub omega_list: Vec<f64>,
    #[serde(default)]
    pub u_list: Vec<f64>,
    /// Obstruction center ordinates for impact-parameter sweeps.
    #[serde(default)]
    pub y0_list: Vec<f64>,
    #[serde(default)]
    pub lambda0_list: Vec<f64>,
    #[serde(default)]
    pub obstruction: Option<ObstructionSpec>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub sample_interval: Option<f64>,
    #[serde(default)]
    pub absorber: Option<AbsorberSpec>,
    /// Critical-velocity search bracket [u_lo, u_hi].
    #[serde(default)]
    pub bracket: Option<[f64; 2]>,
    #[serde(default)]
    pub bisection_tol: Option<f64>,
    #[serde(default)]
    pub blob_threshold: Option<f64>,
    #[serde(default)]
    pub blob_min_cells: Option<usize>,
}

impl ScenarioConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.t_end {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::Config(format!("t_end must be positive, got {t}")));
            }
        }
        if let Some(s) = self.sample_interval {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Config(format!(
                    "sample_interval must be positive, got {s}"
                )));
            }
        }
        if let Some(q) = &self.qball {
            q.validate()?;
        }
        if let Some(o) = &self.obstruction {
            o.validate()?;
        }
        for (name, list) in [("omega_list", &self.omega_list), ("u_list", &self.u_list)] {
            if list.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("{name} contains non-finite values")));
            }
        }
        if self
            .lambda0_list
            .iter()
            .any(|v| !v.is_finite() || *v <= -1.0)
        {
            return Err(Error::Config(
                "lambda0_list values must be finite and > -1".into(),
            ));
        }
        if self.y0_list.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("y0_list contains non-finite values".into()));
        }
        if let Some([lo, hi]) = self.bracket {
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi && hi < 1.0) {
                return Err(Error::Config(format!(
                    "bracket [{lo}, {hi}] must satisfy 0 <= lo < hi < 1"
                )));
            }
        }
        if let Some(t) = self.blob_threshold {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!(
                    "blob_threshold must lie in (0, 1), got {t}"
                )));
            }
        }
        match self.scenario {
            ScenarioKind::StabilityCurves => {
                if self.omega_list.is_empty() {
                    return Err(Error::Config(
                        "stability_curves needs a non-empty omega_list".into(),
                    ));
                }
            }
            ScenarioKind::CriticalVelocitySearch => {
                if self.bracket.is_none() {
                    return Err(Error::Config(
                        "critical_velocity_search needs a bracket".into(),
                    ));
                }
                self.require_qball()?;
                self.require_obstruction()?;
            }
            ScenarioKind::ImpactParameterSweep => {
                if self.y0_list.is_empty() {
                    return Err(Error::Config(
                        "impact_parameter_sweep needs a non-empty y0_list".into(),
                    ));
                }
                self.require_qball()?;
            }
            ScenarioKind::TwoHoleSymmetric => {
                self.require_qball()?;
                self.require_obstruction()?;
            }
            _ => {
                self.require_qball()?;
                if self.obstruction.is_none() && self.lambda0_list.is_empty() {
                    return Err(Error::Config(
                        "scenario needs an obstruction or a lambda0_list".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn require_qball(&self) -> Result<&QBallSpec> {
        self.qball
            .as_ref()
            .ok_or_else(|| Error::Config("scenario needs a qball spec".into()))
    }

    fn require_obstruction(&self) -> Result<&ObstructionSpec> {
        self.obstruction
            .as_ref()
            .ok_or_else(|| Error::Config("scenario needs an obstruction".into()))
    }

    fn grid(&self) -> Result<Grid> {
        self.grid
            .unwrap_or_default()
            .build(self.scenario.dimension())
    }

    fn t_end(&self) -> f64 {
        self.t_end.unwrap_or_else(|| self.scenario.default_t_end())
    }

    fn sample_interval(&self) -> f64 {
        self.sample_interval.unwrap_or(0.5)
    }

    fn absorber(&self, dim: usize) -> AbsorberSpec {
        self.absorber.unwrap_or_else(|| AbsorberSpec::default_for(dim))
    }

    fn recorder_config(&self, absorber: &AbsorberSpec) -> RecorderConfig {
        let mut rc = RecorderConfig {
            sponge_width: absorber.width,
            ..RecorderConfig::default()
        };
        if let Some(t) = self.blob_threshold {
            rc.blob_threshold = t;
        }
        if let Some(m) = self.blob_min_cells {
            rc.blob_min_cells = m;
        }
        rc
    }

    /// Obstruction variants: lambda0_list applied to the base region.
    fn obstructions(&self) -> Vec<ObstructionSpec> {
        let base = self.obstruction.clone().unwrap_or_else(|| {
            ObstructionSpec {
                lambda0: 0.0,
                region: if self.scenario.dimension() == 1 {
                    Region::Interval {
                        lo: DEFAULT_INTERVAL.0,
                        hi: DEFAULT_INTERVAL.1,
                    }
                } else {
                    Region::Disk {
                        center: [0.0, 0.0],
                        radius: DEFAULT_RADIUS,
                    }
                },
            }
        });
        if self.lambda0_list.is_empty() {
            vec![base]
        } else {
            self.lambda0_list
                .iter()
                .map(|&l| ObstructionSpec {
                    lambda0: l,
                    region: base.region.clone(),
                })
                .collect()
        }
    }

    fn omegas(&self) -> Vec<f64> {
        if self.omega_list.is_empty() {
            self.qball.iter().map(|q| q.omega).collect()
        } else {
            self.omega_list.clone()
        }
    }

    fn speeds(&self) -> Vec<f64> {
        if self.u_list.is_empty() {
            self.qball.iter().map(|q| q.u).collect()
        } else {
            self.u_list.clone()
        }
    }
}

/// One cell of a scenario: everything the summary reports about a run.
#[derive(Debug, Clone, Serialize, Default)]
pub struct RunRecord {
    pub name: String,
    pub omega: f64,
    pub u: f64,
    pub lambda0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y0: Option<f64>,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fission: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_pos: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub displacement: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force_sign: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blobs_late: Option<usize>,
    pub wall_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Scenario summary written as JSON next to the per-run CSVs.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSummary {
    pub scenario: ScenarioKind,
    pub config: ScenarioConfig,
    pub runs: Vec<RunRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub searches: Vec<SearchResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityReport>,
    /// |θ| strictly decreasing over ascending y₀ (impact-parameter sweeps).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_monotonic: Option<bool>,
    /// Largest |u_y| seen (two-hole symmetric runs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_uy: Option<f64>,
}

// ---------------------------------------------------------------------------
// Single-run drivers
// ---------------------------------------------------------------------------

/// Shared run controls resolved from a config.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub grid: Grid,
    pub absorber: AbsorberSpec,
    pub t_end: f64,
    /// Ceiling for undecided-run extension.
    pub t_cap: f64,
    pub sample_interval: f64,
    pub recorder: RecorderConfig,
}

impl RunSetup {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let grid = cfg.grid()?;
        let absorber = cfg.absorber(grid.dim);
        Ok(Self {
            t_end: cfg.t_end(),
            t_cap: 6.0 * cfg.t_end(),
            sample_interval: cfg.sample_interval(),
            recorder: cfg.recorder_config(&absorber),
            absorber,
            grid,
        })
    }

    fn options(&self, t_end: f64) -> RunOptions {
        RunOptions {
            t_end,
            sample_interval: self.sample_interval,
            absorber: Some(self.absorber),
        }
    }
}

/// Run a 1d configuration to t_end without classification (rest releases).
pub fn run_free_1d(
    qspec: &QBallSpec,
    obstruction: &ObstructionSpec,
    setup: &RunSetup,
    lam: &LambdaField,
) -> Result<Trajectory> {
    let mut state = sample_boosted_1d(qspec, &setup.grid)?;
    let mut rec = TrajectoryRecorder::new(*qspec, obstruction.clone(), setup.grid.clone())
        .with_config(setup.recorder);
    run(&mut state, lam, &setup.options(setup.t_end), &mut [&mut rec])?;
    Ok(rec.traj)
}

/// Run a 1d scattering configuration, extending past t_end (up to the cap)
/// while the outcome stays undecided.
pub fn run_scatter_1d(
    qspec: &QBallSpec,
    obstruction: &ObstructionSpec,
    setup: &RunSetup,
    lam: &LambdaField,
) -> Result<(Trajectory, Result<ScatterOutcome>)> {
    let mut state = sample_boosted_1d(qspec, &setup.grid)?;
    let mut rec = TrajectoryRecorder::new(*qspec, obstruction.clone(), setup.grid.clone())
        .with_config(setup.recorder);
    let mut t_target = setup.t_end;
    loop {
        run(&mut state, lam, &setup.options(t_target), &mut [&mut rec])?;
        match classify(&rec.traj) {
            Err(Error::Undecided { .. }) if t_target < setup.t_cap => {
                t_target = (t_target * 1.5).min(setup.t_cap);
            }
            verdict => return Ok((rec.traj, verdict)),
        }
    }
}

/// Run a 2d configuration from a shot radial profile.
pub fn run_2d(
    profile: &RadialProfile,
    qspec: &QBallSpec,
    obstruction: &ObstructionSpec,
    setup: &RunSetup,
    lam: &LambdaField,
) -> Result<Trajectory> {
    let sampled = field_from_radial(profile, qspec, &setup.grid);
    let mut state = sampled.state;
    let mut rec = TrajectoryRecorder::new(*qspec, obstruction.clone(), setup.grid.clone())
        .with_config(setup.recorder);
    run(&mut state, lam, &setup.options(setup.t_end), &mut [&mut rec])?;
    Ok(rec.traj)
}

// ---------------------------------------------------------------------------
// Critical-velocity search
// ---------------------------------------------------------------------------

/// Which side of the critical velocity a probe landed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Below,
    Above,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeLog {
    pub u: f64,
    pub side: Side,
    pub outcome: String,
    pub t_final: f64,
    pub wall_secs: f64,
}

/// Result of one critical-velocity search.
#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub omega: f64,
    pub lambda0: f64,
    /// Midpoint of the final bracket; None when the search was refused.
    pub u_cr: Option<f64>,
    pub bracket: (f64, f64),
    /// Point-particle prediction (barriers only).
    pub prediction: Option<f64>,
    /// Populated when the q-ball would be unstable at the probe speeds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refused: Option<String>,
    pub probes: Vec<ProbeLog>,
}

/// Search controls.
#[derive(Debug, Clone)]
pub struct SearchSpec {
    pub omega: f64,
    pub obstruction: ObstructionSpec,
    pub x0: f64,
    pub bracket: (f64, f64),
    /// Bisection terminates when the bracket is narrower than this.
    pub tol: f64,
    pub grid: Grid,
    pub absorber: AbsorberSpec,
    pub sample_interval: f64,
    pub t_end: f64,
    pub t_cap: f64,
    pub out_dir: Option<PathBuf>,
}

/// Default bisection tolerance on the launch speed.
pub const BISECTION_TOL: f64 = 0.002;

/// Default launch positions: barriers approach from −15, holes from −13.
pub fn default_launch_x0(obstruction: &ObstructionSpec) -> f64 {
    if obstruction.is_hole() {
        -13.0
    } else {
        -15.0
    }
}

impl SearchSpec {
    pub fn new(omega: f64, obstruction: ObstructionSpec, bracket: (f64, f64)) -> Self {
        let grid = Grid::default_1d();
        Self {
            omega,
            x0: default_launch_x0(&obstruction),
            obstruction,
            bracket,
            tol: BISECTION_TOL,
            absorber: AbsorberSpec::default_for(grid.dim),
            grid,
            sample_interval: 0.5,
            t_end: 400.0,
            t_cap: 3000.0,
            out_dir: None,
        }
    }
}

/// Early side-decision for bisection probes.
///
/// Above: past the far line (barrier crest + 2, where the flat interior
/// guarantees transmission, or hole far edge + 5) with forward fit velocity.
/// Below: the centroid has retreated at least half a unit from its running
/// maximum with backward fit velocity, before ever crossing the far line —
/// with no binding force ahead, a retreating ball cannot recross. These only
/// accelerate bisection; reported classifications always come from
/// `diagnostics::classify`.
struct EarlyRules {
    far_line: f64,
    min_speed: f64,
    x_max_seen: f64,
    decided: Option<Side>,
}

impl EarlyRules {
    fn new(obstruction: &ObstructionSpec) -> Self {
        let (lo, hi) = obstruction.region.x_extent().unwrap_or((0.0, 0.0));
        let far_line = if obstruction.lambda0 > 0.0 {
            0.5 * (lo + hi) + 2.0
        } else {
            hi + 5.0
        };
        Self {
            far_line,
            min_speed: 5e-4,
            x_max_seen: f64::NEG_INFINITY,
            decided: None,
        }
    }

    fn update(&mut self, samples: &[TrajectorySample]) {
        if self.decided.is_some() {
            return;
        }
        let Some(last) = samples.last() else { return };
        if !last.pos[0].is_finite() {
            return;
        }
        let x = last.pos[0];
        self.x_max_seen = self.x_max_seen.max(x);
        let v = velocity_fit_window(samples, 20)[0];
        if !v.is_finite() {
            return;
        }
        if x > self.far_line && v > self.min_speed {
            self.decided = Some(Side::Above);
        } else if self.x_max_seen < self.far_line
            && self.x_max_seen - x > 0.5
            && v < -self.min_speed
        {
            self.decided = Some(Side::Below);
        }
    }
}

/// Least-squares velocity over the trailing `window` valid samples.
pub fn velocity_fit_window(samples: &[TrajectorySample], window: usize) -> [f64; 2] {
    let lo = samples.len().saturating_sub(window);
    let pts: Vec<&TrajectorySample> = samples[lo..]
        .iter()
        .filter(|s| s.pos[0].is_finite() && s.pos[1].is_finite())
        .collect();
    if pts.len() < 2 {
        return [f64::NAN, f64::NAN];
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|s| s.t).sum::<f64>() / n;
    let xm = pts.iter().map(|s| s.pos[0]).sum::<f64>() / n;
    let ym = pts.iter().map(|s| s.pos[1]).sum::<f64>() / n;
    let (mut stt, mut stx, mut sty) = (0.0, 0.0, 0.0);
    for s in &pts {
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

struct ProbeObserver {
    recorder: TrajectoryRecorder,
    rules: EarlyRules,
}

impl Observer for ProbeObserver {
    fn observe(&mut self, state: &crate::grid::FieldState, lam: &LambdaField) {
        self.recorder.observe(state, lam);
        self.rules.update(&self.recorder.traj.samples);
    }

    fn should_stop(&mut self) -> bool {
        self.rules.decided.is_some()
    }
}

fn side_of_outcome(outcome: &ScatterOutcome) -> Side {
    match outcome.class {
        crate::diagnostics::OutcomeClass::Transmitted => Side::Above,
        _ => Side::Below,
    }
}

fn probe(spec: &SearchSpec, lam: &LambdaField, u: f64) -> Result<ProbeLog> {
    let started = Instant::now();
    let qspec = QBallSpec {
        omega: spec.omega,
        u,
        x0: spec.x0,
        y0: 0.0,
    };
    let mut state = sample_boosted_1d(&qspec, &spec.grid)?;
    let recorder = TrajectoryRecorder::new(qspec, spec.obstruction.clone(), spec.grid.clone())
        .with_config(RecorderConfig {
            sponge_width: spec.absorber.width,
            ..RecorderConfig::default()
        });
    let mut obs = ProbeObserver {
        recorder,
        rules: EarlyRules::new(&spec.obstruction),
    };
    let mut t_target = spec.t_end;
    let verdict = loop {
        let opts = RunOptions {
            t_end: t_target,
            sample_interval: spec.sample_interval,
            absorber: Some(spec.absorber),
        };
        run(&mut state, lam, &opts, &mut [&mut obs])?;
        if let Some(side) = obs.rules.decided {
            break (side, format!("early:{side:?}").to_lowercase());
        }
        match classify(&obs.recorder.traj) {
            Ok(outcome) => break (side_of_outcome(&outcome), outcome.class.to_string()),
            Err(Error::Undecided { .. }) if t_target < spec.t_cap => {
                t_target = (t_target * 1.5).min(spec.t_cap);
            }
            Err(e) => return Err(e),
        }
    };
    if let Some(dir) = &spec.out_dir {
        let name = csv_filename("ucr_probe", spec.omega, u, spec.obstruction.lambda0, None);
        let file = std::fs::File::create(dir.join(name))?;
        obs.recorder.traj.write_csv(std::io::BufWriter::new(file))?;
    }
    Ok(ProbeLog {
        u,
        side: verdict.0,
        outcome: verdict.1,
        t_final: state.t,
        wall_secs: started.elapsed().as_secs_f64(),
    })
}

/// ω where γ(u)·M/Q crosses the λ̃-shifted stability line 2√λ̃; None when
/// the curve stays below the line over the whole existence window.
pub fn stability_intersection(lambda: f64, u: f64) -> Result<Option<f64>> {
    let gamma = 1.0 / (1.0 - u * u).sqrt();
    let line = stability_mass(lambda);
    let ratio = |w: f64| -> Result<f64> {
        Ok(gamma * mass_closed_form(w)? / charge_rest(w)?)
    };
    let mut lo = std::f64::consts::SQRT_2 + 1e-6;
    let mut hi = 2.0 - 1e-9;
    if ratio(hi)? < line {
        return Ok(None);
    }
    if ratio(lo)? >= line {
        return Ok(Some(lo));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid)? < line {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Bisection on launch speed between a reflected/trapped-side bracket end
/// and a transmitted-side end.
///
/// Both bracket ends are probed first; a bracket whose ends classify alike
/// is an error carrying both outcomes. Searches where the q-ball would be
/// unstable inside the obstruction at the top probe speed (E/Q above the
/// shifted stability line) are refused and report no critical velocity.
pub fn find_critical_velocity(spec: &SearchSpec) -> Result<SearchResult> {
    spec.obstruction.validate()?;
    let prediction = if spec.obstruction.lambda0 > 0.0 {
        Some(critical_velocity_barrier(spec.obstruction.lambda0)?)
    } else {
        None
    };

    // Stability refusal at the fastest probe speed.
    let lam_in = spec.obstruction.lambda_inside();
    let (u_lo, u_hi) = spec.bracket;
    let gamma_hi = 1.0 / (1.0 - u_hi * u_hi).sqrt();
    let e_over_q = gamma_hi * mass_closed_form(spec.omega)? / charge_rest(spec.omega)?;
    let line = stability_mass(lam_in);
    if e_over_q >= line {
        let omega_star = stability_intersection(lam_in, u_hi)?;
        return Ok(SearchResult {
            omega: spec.omega,
            lambda0: spec.obstruction.lambda0,
            u_cr: None,
            bracket: spec.bracket,
            prediction,
            refused: Some(format!(
                "unstable at probe speeds: E/Q = {e_over_q:.4} above the stability line {line:.4} \
                 (intersection at omega = {})",
                omega_star.map_or("none".to_string(), |w| format!("{w:.4}"))
            )),
            probes: Vec::new(),
        });
    }

    let lam = LambdaField::sample(&spec.grid, &spec.obstruction);
    let mut probes = Vec::new();

    let lo_log = probe(spec, &lam, u_lo)?;
    let hi_log = probe(spec, &lam, u_hi)?;
    if lo_log.side != Side::Below || hi_log.side != Side::Above {
        let err = Error::InconsistentBracket {
            u_lo,
            lo_outcome: lo_log.outcome.clone(),
            u_hi,
            hi_outcome: hi_log.outcome.clone(),
        };
        return Err(err);
    }
    probes.push(lo_log);
    probes.push(hi_log);

    let (mut lo, mut hi) = (u_lo, u_hi);
    while hi - lo > spec.tol {
        let mid = 0.5 * (lo + hi);
        let log = probe(spec, &lam, mid)?;
        match log.side {
            Side::Below => lo = mid,
            Side::Above => hi = mid,
        }
        probes.push(log);
    }

    Ok(SearchResult {
        omega: spec.omega,
        lambda0: spec.obstruction.lambda0,
        u_cr: Some(0.5 * (lo + hi)),
        bracket: (lo, hi),
        prediction,
        refused: None,
        probes,
    })
}

// ---------------------------------------------------------------------------
// Stability report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct StabilityRow {
    pub omega: f64,
    pub u: f64,
    /// γM/Q: rises with u, reproducing the velocity dependence.
    pub e_over_q: f64,
    pub q_rest: f64,
    pub m: f64,
    pub e: f64,
    /// The printed closed form (works out to γ²M), comparison only.
    pub e_printed: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityIntersection {
    pub lambda: f64,
    pub u: f64,
    pub mass_line: f64,
    pub omega_star: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    pub intersections: Vec<StabilityIntersection>,
}

/// E/Q curves against the λ̃-shifted stability lines 2√λ̃, with the crossing
/// frequency per (λ̃, u).
pub fn stability_report(omegas: &[f64], speeds: &[f64], lambdas: &[f64]) -> Result<StabilityReport> {
    let mut rows = Vec::new();
    for &omega in omegas {
        let q = charge_rest(omega)?;
        let m = mass_closed_form(omega)?;
        for &u in speeds {
            let gamma = 1.0 / (1.0 - u * u).sqrt();
            rows.push(StabilityRow {
                omega,
                u,
                e_over_q: gamma * m / q,
                q_rest: q,
                m,
                e: gamma * m,
                e_printed: energy_closed_form_printed(omega, u)?,
            });
        }
    }
    let mut intersections = Vec::new();
    for &lambda in lambdas {
        for &u in speeds {
            intersections.push(StabilityIntersection {
                lambda,
                u,
                mass_line: stability_mass(lambda),
                omega_star: stability_intersection(lambda, u)?,
            });
        }
    }
    Ok(StabilityReport {
        rows,
        intersections,
    })
}

// ---------------------------------------------------------------------------
// 2d deflection sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct DeflectionRow {
    pub omega: f64,
    pub u: f64,
    pub lambda0: f64,
    pub y0: f64,
    /// Signed deflection angle; None when the run ended trapped/undecided.
    pub theta_deg: Option<f64>,
    pub outcome: String,
    pub wall_secs: f64,
}

/// Default launch abscissa for 2d runs on the reference grid.
pub const LAUNCH_X0_2D: f64 = -8.5;

// ---------------------------------------------------------------------------
// run_scenario
// ---------------------------------------------------------------------------

fn write_traj_csv(dir: &Path, name: &str, traj: &Trajectory) -> Result<String> {
    let path = dir.join(name);
    let file = std::fs::File::create(&path)?;
    traj.write_csv(std::io::BufWriter::new(file))?;
    Ok(name.to_string())
}

fn force_sign(displacement: f64, toward_obstruction: f64) -> &'static str {
    if displacement.abs() < 0.05 {
        "none"
    } else if displacement * toward_obstruction > 0.0 {
        "attractive"
    } else {
        "repulsive"
    }
}

/// Median blob count over the trailing 10 samples: the settled late-time
/// count.
pub fn late_blob_count(traj: &Trajectory) -> usize {
    let n = traj.samples.len();
    let lo = n.saturating_sub(10);
    let mut counts: Vec<usize> = traj.samples[lo..].iter().map(|s| s.blobs).collect();
    if counts.is_empty() {
        return 0;
    }
    counts.sort_unstable();
    counts[counts.len() / 2]
}

/// Execute a scenario, writing per-run trajectory CSVs plus `summary.json`
/// into `out_dir`. Deterministic given the config. Per-run evolution
/// failures are recorded in the summary and do not abort the sweep.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<ScenarioSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut summary = ScenarioSummary {
        scenario: cfg.scenario,
        config: cfg.clone(),
        runs: Vec::new(),
        searches: Vec::new(),
        stability: None,
        theta_monotonic: None,
        max_abs_uy: None,
    };

    match cfg.scenario {
        ScenarioKind::StabilityCurves => {
            let lambdas: Vec<f64> = if cfg.lambda0_list.is_empty() {
                vec![1.0]
            } else {
                cfg.lambda0_list.iter().map(|l| 1.0 + l).collect()
            };
            let speeds = if cfg.u_list.is_empty() {
                vec![0.0]
            } else {
                cfg.u_list.clone()
            };
            let report = stability_report(&cfg.omega_list, &speeds, &lambdas)?;
            let mut w = String::from("omega,u,e_over_q,q_rest,m,e,e_printed\n");
            for r in &report.rows {
                w.push_str(&format!(
                    "{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9}\n",
                    r.omega, r.u, r.e_over_q, r.q_rest, r.m, r.e, r.e_printed
                ));
            }
            std::fs::write(out_dir.join("stability_curves.csv"), w)?;
            summary.stability = Some(report);
        }

        ScenarioKind::RestRelease => {
            let setup = RunSetup::from_config(cfg)?;
            let q = cfg.require_qball()?;
            let mut cells = Vec::new();
            for obs in cfg.obstructions() {
                for &omega in &cfg.omegas() {
                    cells.push((obs.clone(), omega));
                }
            }
            let records: Vec<RunRecord> = cells
                .par_iter()
                .map(|(obs, omega)| {
                    let started = Instant::now();
                    let qspec = QBallSpec::at_rest(*omega, q.x0);
                    let lam = LambdaField::sample(&setup.grid, obs);
                    let name = csv_filename("rest_release", *omega, 0.0, obs.lambda0, None);
                    let mut rec = RunRecord {
                        name: name.clone(),
                        omega: *omega,
                        u: 0.0,
                        lambda0: obs.lambda0,
                        ..RunRecord::default()
                    };
                    match run_free_1d(&qspec, obs, &setup, &lam) {
                        Ok(traj) => {
                            let last = traj
                                .samples
                                .iter()
                                .rev()
                                .find(|s| s.pos[0].is_finite());
                            let center = obs
                                .region
                                .x_extent()
                                .map(|(lo, hi)| 0.5 * (lo + hi))
                                .unwrap_or(0.0);
                            if let Some(last) = last {
                                let disp = last.pos[0] - q.x0;
                                rec.displacement = Some(disp);
                                rec.final_pos = Some(last.pos);
                                rec.force_sign =
                                    Some(force_sign(disp, center - q.x0).to_string());
                            }
                            rec.blobs_late = Some(late_blob_count(&traj));
                            rec.outcome = "completed".into();
                            rec.csv = write_traj_csv(out_dir, &name, &traj)
                                .ok();
                        }
                        Err(e) => {
                            rec.outcome = "failed".into();
                            rec.error = Some(e.to_string());
                        }
                    }
                    rec.wall_secs = started.elapsed().as_secs_f64();
                    rec
                })
                .collect();
            summary.runs = records;
        }

        ScenarioKind::BarrierScatter | ScenarioKind::HoleScatter => {
            let setup = RunSetup::from_config(cfg)?;
            let q = cfg.require_qball()?;
            let mut cells = Vec::new();
            for obs in cfg.obstructions() {
                for &omega in &cfg.omegas() {
                    for &u in &cfg.speeds() {
                        cells.push((obs.clone(), omega, u));
                    }
                }
            }
            let scen = cfg.scenario.name();
            let records: Vec<RunRecord> = cells
                .par_iter()
                .map(|(obs, omega, u)| {
                    let started = Instant::now();
                    let qspec = QBallSpec::moving(*omega, *u, q.x0);
                    let lam = LambdaField::sample(&setup.grid, obs);
                    let name = csv_filename(scen, *omega, *u, obs.lambda0, None);
                    let mut rec = RunRecord {
                        name: name.clone(),
                        omega: *omega,
                        u: *u,
                        lambda0: obs.lambda0,
                        ..RunRecord::default()
                    };
                    match run_scatter_1d(&qspec, obs, &setup, &lam) {
                        Ok((traj, verdict)) => {
                            match verdict {
                                Ok(out) => {
                                    rec.outcome = out.class.to_string();
                                    rec.fission = out.fission;
                                    rec.final_pos = Some(out.final_pos);
                                }
                                Err(e) => {
                                    rec.outcome = "undecided".into();
                                    rec.error = Some(e.to_string());
                                }
                            }
                            rec.blobs_late = Some(late_blob_count(&traj));
                            rec.csv = write_traj_csv(out_dir, &name, &traj).ok();
                        }
                        Err(e) => {
                            rec.outcome = "failed".into();
                            rec.error = Some(e.to_string());
                        }
                    }
                    rec.wall_secs = started.elapsed().as_secs_f64();
                    rec
                })
                .collect();
            summary.runs = records;
        }

        ScenarioKind::CriticalVelocitySearch => {
            let setup = RunSetup::from_config(cfg)?;
            let q = cfg.require_qball()?;
            let obs = cfg.require_obstruction()?.clone();
            let bracket = cfg.bracket.expect("validated");
            let tol = cfg.bisection_tol.unwrap_or(BISECTION_TOL);
            let omegas = cfg.omegas();
            let results: Vec<Result<SearchResult>> = omegas
                .par_iter()
                .map(|&omega| {
                    let spec = SearchSpec {
                        omega,
                        obstruction: obs.clone(),
                        x0: q.x0,
                        bracket: (bracket[0], bracket[1]),
                        tol,
                        grid: setup.grid.clone(),
                        absorber: setup.absorber,
                        sample_interval: setup.sample_interval,
                        t_end: setup.t_end,
                        t_cap: setup.t_cap,
                        out_dir: Some(out_dir.to_path_buf()),
                    };
                    find_critical_velocity(&spec)
                })
                .collect();
            for r in results {
                summary.searches.push(r?);
            }
        }

        ScenarioKind::ImpactParameterSweep => {
            let setup = RunSetup::from_config(cfg)?;
            let q = cfg.require_qball()?;
            let radius = match cfg.obstruction.as_ref().map(|o| &o.region) {
                Some(Region::Disk { radius, .. }) => *radius,
                _ => DEFAULT_RADIUS,
            };
            let lambdas = if cfg.lambda0_list.is_empty() {
                vec![cfg.obstruction.as_ref().map(|o| o.lambda0).unwrap_or(0.9)]
            } else {
                cfg.lambda0_list.clone()
            };
            let mut cells = Vec::new();
            for &l in &lambdas {
                for &omega in &cfg.omegas() {
                    for &u in &cfg.speeds() {
                        for &y0 in &cfg.y0_list {
                            cells.push((l, omega, u, y0));
                        }
                    }
                }
            }
            // One shot profile per omega, shared across the sweep.
            let mut profiles: Vec<(f64, RadialProfile)> = Vec::new();
            for &omega in &cfg.omegas() {
                profiles.push((omega, shoot_profile(omega, 1.0, &ShootParams::default())?));
            }
            let records: Vec<RunRecord> = cells
                .par_iter()
                .map(|&(lambda0, omega, u, y0)| {
                    let started = Instant::now();
                    let profile = &profiles
                        .iter()
                        .find(|(w, _)| *w == omega)
                        .expect("profile prepared")
                        .1;
                    let obs = ObstructionSpec {
                        lambda0,
                        region: Region::Disk {
                            center: [0.0, y0],
                            radius,
                        },
                    };
                    let qspec = QBallSpec {
                        omega,
                        u,
                        x0: q.x0,
                        y0: 0.0,
                    };
                    let lam = LambdaField::sample(&setup.grid, &obs);
                    let name = csv_filename("deflection", omega, u, lambda0, Some(y0));
                    let mut rec = RunRecord {
                        name: name.clone(),
                        omega,
                        u,
                        lambda0,
                        y0: Some(y0),
                        ..RunRecord::default()
                    };
                    match run_2d(profile, &qspec, &obs, &setup, &lam) {
                        Ok(traj) => {
                            match deflection_angle(&traj) {
                                Ok(theta) => {
                                    rec.theta_deg = Some(theta);
                                    rec.outcome = "deflected".into();
                                }
                                Err(e) => {
                                    rec.outcome = "trapped_or_undecided".into();
                                    rec.error = Some(e.to_string());
                                }
                            }
                            rec.csv = write_traj_csv(out_dir, &name, &traj).ok();
                        }
                        Err(e) => {
                            rec.outcome = "failed".into();
                            rec.error = Some(e.to_string());
                        }
                    }
                    rec.wall_secs = started.elapsed().as_secs_f64();
                    rec
                })
                .collect();
            // Monotonicity of |θ| against ascending y₀ (single-family sweeps).
            let mut by_y: Vec<(f64, f64)> = records
                .iter()
                .filter_map(|r| r.theta_deg.map(|t| (r.y0.unwrap_or(0.0), t.abs())))
                .collect();
            by_y.sort_by(|a, b| a.0.total_cmp(&b.0));
            summary.theta_monotonic =
                Some(by_y.windows(2).all(|w| w[1].1 < w[0].1) && by_y.len() >= 2);
            summary.runs = records;
        }

        ScenarioKind::TwoHoleSymmetric => {
            let setup = RunSetup::from_config(cfg)?;
            let q = cfg.require_qball()?;
            let obs = cfg.require_obstruction()?.clone();
            let started = Instant::now();
            let profile = shoot_profile(q.omega, 1.0, &ShootParams::default())?;
            let lam = LambdaField::sample(&setup.grid, &obs);
            let name = csv_filename("two_hole", q.omega, q.u, obs.lambda0, None);
            let traj = run_2d(&profile, q, &obs, &setup, &lam)?;
            let max_uy = traj
                .samples
                .iter()
                .filter(|s| s.vel[1].is_finite())
                .fold(0.0_f64, |m, s| m.max(s.vel[1].abs()));
            summary.max_abs_uy = Some(max_uy);
            let mut rec = RunRecord {
                name: name.clone(),
                omega: q.omega,
                u: q.u,
                lambda0: obs.lambda0,
                outcome: "completed".into(),
                wall_secs: started.elapsed().as_secs_f64(),
                ..RunRecord::default()
            };
            rec.csv = write_traj_csv(out_dir, &name, &traj).ok();
            summary.runs.push(rec);
        }
    }

    let json = serde_json::to_string_pretty(&summary)?;
    std::fs::write(out_dir.join("summary.json"), json)?;
    Ok(summary)
}
