//! Command-line front end: profiles, observable tables, scenario runs,
//! sweeps, and canned reproductions of the reference experiments.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use qball::error::Error;
use qball::experiments::{run_scenario, ScenarioConfig, ScenarioKind};
use qball::manifest::RunManifest;
use qball::model::stability_mass;
use qball::profile1d::{
    charge_closed_form, charge_rest, critical_velocity_barrier, critical_velocity_energy,
    energy_closed_form_printed, energy_of_moving, exact_profile, mass_closed_form,
};
use qball::profile2d::{shoot_profile, ShootParams};
use std::path::{Path, PathBuf};

/// Environment variable naming the default output root.
const OUT_ROOT_ENV: &str = "QBALL_OUT_ROOT";

#[derive(Parser)]
#[command(
    name = "qball",
    version,
    about = "Q-ball scattering on potential barriers and holes in 1 and 2 spatial dimensions"
)]
struct Cli {
    /// Output directory (default: $QBALL_OUT_ROOT/<name> or runs/<name>)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit a 1d exact or 2d numerically-shot profile
    Profile(ProfileArgs),
    /// Print closed-form observables (Q, M, E, critical velocities)
    Observables(ObservablesArgs),
    /// Run a single scenario from a JSON config (or a manifest)
    Run(RunArgs),
    /// Run a sweep scenario from a JSON config
    Sweep(RunArgs),
    /// Re-run a canned reference experiment
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct ProfileArgs {
    /// Spatial dimension: 1 (exact) or 2 (shooting)
    #[arg(long, short = 'd', default_value_t = 1)]
    dim: usize,
    #[arg(long)]
    omega: f64,
    /// Potential rescale inside the sampled region
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Print f at this coordinate instead of a whole table
    #[arg(long)]
    at: Option<f64>,
    /// Write the profile as two-column text to this file
    #[arg(long)]
    file: Option<PathBuf>,
    /// Half-extent of the 1d table / outer radius of the 2d shoot
    #[arg(long, default_value_t = 20.0)]
    r_max: f64,
    /// Sample spacing for the emitted table
    #[arg(long, default_value_t = 0.01)]
    dr: f64,
}

#[derive(Args)]
struct ObservablesArgs {
    #[arg(long)]
    omega: f64,
    #[arg(long, default_value_t = 0.0)]
    u: f64,
    /// Also print barrier-top quantities for this barrier height
    #[arg(long)]
    lambda0: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config (JSON); a manifest.json is accepted too
    #[arg(long)]
    config: PathBuf,
    /// Override the grid spacing
    #[arg(long)]
    dx: Option<f64>,
    /// Override the time step
    #[arg(long)]
    dt: Option<f64>,
    /// Override the end time
    #[arg(long)]
    t_end: Option<f64>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// One of: table1, table2, table3, table4, stability, fig3, fig5, fig6,
    /// fig8, fig10, fig11, fig14, fig16, fig17, fig18, fig19, fig20, fig22,
    /// twohole, barrier_ucr, barrier01_ucr
    target: String,
}

/// Canned configs compiled in from configs/; the same files seed the fuzz
/// corpus.
const CANNED: &[(&str, &str)] = &[
    ("stability", include_str!("../../../configs/stability.json")),
    ("fig3", include_str!("../../../configs/fig3.json")),
    ("fig5", include_str!("../../../configs/fig5.json")),
    ("fig6", include_str!("../../../configs/fig6.json")),
    ("table2", include_str!("../../../configs/table2.json")),
    ("fig8", include_str!("../../../configs/fig8.json")),
    ("fig10", include_str!("../../../configs/fig10.json")),
    ("fig11", include_str!("../../../configs/fig11_fig12.json")),
    ("table3", include_str!("../../../configs/table3.json")),
    (
        "barrier_ucr",
        include_str!("../../../configs/barrier_ucr.json"),
    ),
    (
        "barrier01_ucr",
        include_str!("../../../configs/barrier01_ucr.json"),
    ),
    ("table4", include_str!("../../../configs/table4.json")),
    ("fig16", include_str!("../../../configs/fig16.json")),
    ("fig17", include_str!("../../../configs/fig17.json")),
    ("fig18", include_str!("../../../configs/fig18.json")),
    ("fig19", include_str!("../../../configs/fig19.json")),
    ("fig20", include_str!("../../../configs/fig20_fig21.json")),
    ("fig22", include_str!("../../../configs/fig22.json")),
    ("twohole", include_str!("../../../configs/twohole.json")),
];

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems exit 1; --help/--version exit 0.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let code = match dispatch(&cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            err.downcast_ref::<Error>().map_or(2, Error::exit_code)
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    match &cli.cmd {
        Cmd::Profile(args) => profile_cmd(args),
        Cmd::Observables(args) => observables_cmd(args),
        Cmd::Run(args) => run_cmd(cli, args, false),
        Cmd::Sweep(args) => run_cmd(cli, args, true),
        Cmd::Reproduce(args) => reproduce_cmd(cli, args),
    }
}

fn out_dir(cli: &Cli, name: &str) -> PathBuf {
    if let Some(out) = &cli.out {
        return out.clone();
    }
    let root = std::env::var_os(OUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"));
    root.join(name)
}

fn profile_cmd(args: &ProfileArgs) -> anyhow::Result<()> {
    match args.dim {
        1 => {
            if let Some(x) = args.at {
                println!("{:.6}", exact_profile(x, args.omega, args.lambda)?);
                return Ok(());
            }
            let mut out = String::new();
            let n = (2.0 * args.r_max / args.dr).round() as usize;
            for i in 0..=n {
                let x = -args.r_max + i as f64 * args.dr;
                out.push_str(&format!(
                    "{x:.6} {:.12e}\n",
                    exact_profile(x, args.omega, args.lambda)?
                ));
            }
            emit(args.file.as_deref(), &out)?;
        }
        2 => {
            let params = ShootParams {
                r_max: args.r_max,
                ..ShootParams::default()
            };
            let prof = shoot_profile(args.omega, args.lambda, &params)?;
            if let Some(r) = args.at {
                println!("{:.6}", prof.value(r));
                return Ok(());
            }
            let mut buf = Vec::new();
            prof.write_two_column(&mut buf)?;
            emit(args.file.as_deref(), std::str::from_utf8(&buf)?)?;
        }
        d => anyhow::bail!(Error::Config(format!("unsupported dimension {d}"))),
    }
    Ok(())
}

fn emit(file: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match file {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{content}"),
    }
    Ok(())
}

fn observables_cmd(args: &ObservablesArgs) -> anyhow::Result<()> {
    let omega = args.omega;
    let u = args.u;
    let m = mass_closed_form(omega)?;
    println!("omega     = {omega}");
    println!("u         = {u}");
    println!("Q_rest    = {:.4}", charge_rest(omega)?);
    println!("M         = {m:.4}");
    println!("E         = {:.4}  (gamma M)", energy_of_moving(omega, u)?);
    if u != 0.0 {
        println!(
            "E_printed = {:.4}  (printed closed form, = gamma^2 M; comparison only)",
            energy_closed_form_printed(omega, u)?
        );
        println!(
            "Q_printed = {:.4}  (printed closed form with gamma; the conserved grid charge is Q_rest)",
            charge_closed_form(omega, u)?
        );
    }
    println!(
        "E/Q       = {:.4}",
        energy_of_moving(omega, u)? / charge_rest(omega)?
    );
    println!("stability line at lambda=1: m = {:.4}", stability_mass(1.0));
    if let Some(lambda0) = args.lambda0 {
        let e_top = (1.0 + lambda0).sqrt() * m;
        println!("barrier lambda0 = {lambda0}");
        println!("E_top     = {e_top:.4}  (sqrt(1+lambda0) M)");
        println!(
            "u_cr      = {:.4}  (energy argument)",
            critical_velocity_energy(m, e_top)?
        );
        println!(
            "u_cr      = {:.4}  (barrier-height formula)",
            critical_velocity_barrier(lambda0)?
        );
    }
    Ok(())
}

/// Accept either a scenario config or a manifest embedding one.
fn load_config(path: &Path) -> anyhow::Result<(ScenarioConfig, String)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(Error::Json)?;
    let cfg = if value.get("scenario").is_some() {
        ScenarioConfig::from_json_str(&text)?
    } else if let Some(inner) = value.get("config") {
        serde_json::from_value(inner.clone()).map_err(Error::Json)?
    } else {
        anyhow::bail!(Error::Config(format!(
            "{} is neither a scenario config nor a manifest",
            path.display()
        )));
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    Ok((cfg, name))
}

fn apply_overrides(cfg: &mut ScenarioConfig, args: &RunArgs) {
    if args.dx.is_some() || args.dt.is_some() {
        let grid = cfg.grid.get_or_insert_with(Default::default);
        if args.dx.is_some() {
            grid.dx = args.dx;
        }
        if args.dt.is_some() {
            grid.dt = args.dt;
        }
    }
    if args.t_end.is_some() {
        cfg.t_end = args.t_end;
    }
}

fn run_cmd(cli: &Cli, args: &RunArgs, sweep_only: bool) -> anyhow::Result<()> {
    let (mut cfg, name) = load_config(&args.config)?;
    apply_overrides(&mut cfg, args);
    if sweep_only {
        let is_sweep = matches!(
            cfg.scenario,
            ScenarioKind::ImpactParameterSweep | ScenarioKind::CriticalVelocitySearch
        ) || !cfg.omega_list.is_empty()
            || !cfg.u_list.is_empty()
            || !cfg.lambda0_list.is_empty();
        if !is_sweep {
            anyhow::bail!(Error::Config(
                "sweep expects a sweep scenario (lists or a search); use `run` instead".into()
            ));
        }
    }
    cfg.validate()?;
    execute(cli, cfg, Some(args.config.display().to_string()), &name)
}

fn execute(
    cli: &Cli,
    cfg: ScenarioConfig,
    config_path: Option<String>,
    name: &str,
) -> anyhow::Result<()> {
    let dir = out_dir(cli, name);
    let manifest = RunManifest::new(cfg.clone(), config_path, &dir);
    manifest.write(&dir)?;
    let summary = run_scenario(&cfg, &dir)?;
    println!("wrote {}", dir.join("summary.json").display());
    for r in &summary.runs {
        let theta = r
            .theta_deg
            .map(|t| format!(" theta={t:.3}"))
            .unwrap_or_default();
        let blobs = r
            .blobs_late
            .map(|b| format!(" blobs={b}"))
            .unwrap_or_default();
        println!(
            "  {}: {}{theta}{blobs} ({:.1}s)",
            r.name, r.outcome, r.wall_secs
        );
    }
    for s in &summary.searches {
        match (s.u_cr, &s.refused) {
            (Some(u), _) => println!(
                "  omega={}: u_cr = {u:.4} (bracket [{:.4}, {:.4}], prediction {})",
                s.omega,
                s.bracket.0,
                s.bracket.1,
                s.prediction
                    .map(|p| format!("{p:.4}"))
                    .unwrap_or_else(|| "none".into())
            ),
            (None, Some(reason)) => {
                println!("  omega={}: no critical velocity: {reason}", s.omega)
            }
            (None, None) => {}
        }
    }
    Ok(())
}

fn reproduce_cmd(cli: &Cli, args: &ReproduceArgs) -> anyhow::Result<()> {
    let target = args.target.as_str();
    match target {
        "table1" => return reproduce_table1(cli),
        "fig14" => return reproduce_fig14(cli),
        _ => {}
    }
    let Some((_, json)) = CANNED.iter().find(|(name, _)| *name == target) else {
        let names: Vec<&str> = ["table1", "fig14"]
            .into_iter()
            .chain(CANNED.iter().map(|(n, _)| *n))
            .collect();
        anyhow::bail!(Error::Config(format!(
            "unknown reproduce target '{target}'; known: {}",
            names.join(", ")
        )));
    };
    let cfg = ScenarioConfig::from_json_str(json)?;
    execute(cli, cfg, None, target)
}

fn reproduce_table1(cli: &Cli) -> anyhow::Result<()> {
    let dir = out_dir(cli, "table1");
    std::fs::create_dir_all(&dir)?;
    let mut csv = String::from("omega,m_rest,e_cr,u_cr_energy,u_cr_barrier\n");
    println!("omega   M_rest   E_cr     u_cr");
    for omega in [1.5, 1.6, 1.7, 1.8, 1.9] {
        let m = mass_closed_form(omega)?;
        let e_cr = (1.01_f64).sqrt() * m;
        let u_cr = critical_velocity_energy(m, e_cr)?;
        let u_barrier = critical_velocity_barrier(0.01)?;
        println!("{omega:<7} {m:<8.4} {e_cr:<8.4} {u_cr:.4}");
        csv.push_str(&format!(
            "{omega},{m:.6},{e_cr:.6},{u_cr:.6},{u_barrier:.6}\n"
        ));
    }
    std::fs::write(dir.join("table1.csv"), csv)?;
    println!("wrote {}", dir.join("table1.csv").display());
    Ok(())
}

fn reproduce_fig14(cli: &Cli) -> anyhow::Result<()> {
    let dir = out_dir(cli, "fig14");
    std::fs::create_dir_all(&dir)?;
    for omega in [1.5, 1.6, 1.7, 1.8, 1.9] {
        let prof = shoot_profile(omega, 1.0, &ShootParams::default())?;
        let path = dir.join(format!("fig14_profile_{omega}.dat"));
        let file = std::fs::File::create(&path)?;
        prof.write_two_column(std::io::BufWriter::new(file))?;
        println!(
            "omega={omega}: f(0) = {:.6} -> {}",
            prof.f0(),
            path.display()
        );
    }
    Ok(())
}
