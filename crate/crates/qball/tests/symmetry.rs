//! Symmetry properties of the evolution: global U(1) covariance, parity,
//! anti-q-ball conjugation, and the 2d y-mirror.

use qball::diagnostics::{total_charge, TrajectoryRecorder};
use qball::evolve::{run, AbsorberSpec, LambdaField, RunOptions, Stepper};
use qball::grid::{FieldState, Grid};
use qball::model::{ObstructionSpec, Region};
use qball::profile1d::{sample_boosted_1d, QBallSpec};
use qball::profile2d::{field_from_radial, shoot_profile, ShootParams};

fn evolve_plain(state: &mut FieldState, lam: &LambdaField, t_end: f64) {
    let grid = state.grid.clone();
    let mut stepper = Stepper::new(&grid);
    let n = ((t_end - state.t) / grid.dt).round() as usize;
    for _ in 0..n {
        stepper.step_rk4(state, lam).unwrap();
    }
}

#[test]
fn u1_phase_covariance() {
    let grid = Grid::default_1d();
    let obs = ObstructionSpec::interval_1d(0.01);
    let lam = LambdaField::sample(&grid, &obs);
    let spec = QBallSpec::at_rest(1.9, -15.0);

    let mut base = sample_boosted_1d(&spec, &grid).unwrap();
    let mut rotated = base.clone();
    let alpha = 0.7313;
    rotated.rotate_phase(alpha);

    evolve_plain(&mut base, &lam, 2.5);
    evolve_plain(&mut rotated, &lam, 2.5);
    base.rotate_phase(alpha);

    let mut worst = 0.0_f64;
    for i in 0..grid.nx {
        worst = worst
            .max((base.re[i] - rotated.re[i]).abs())
            .max((base.im[i] - rotated.im[i]).abs())
            .max((base.vre[i] - rotated.vre[i]).abs())
            .max((base.vim[i] - rotated.vim[i]).abs());
    }
    assert!(worst < 1e-12, "U(1) covariance violated by {worst:.3e}");
}

#[test]
fn parity_preservation() {
    // Symmetric initial data, centered obstruction: the evolution must stay
    // even in x.
    let grid = Grid::default_1d();
    let obs = ObstructionSpec::interval_1d(-0.2);
    let lam = LambdaField::sample(&grid, &obs);
    let mut state = sample_boosted_1d(&QBallSpec::at_rest(1.8, 0.0), &grid).unwrap();
    evolve_plain(&mut state, &lam, 5.0);
    let n = grid.nx;
    let mut worst = 0.0_f64;
    for i in 0..n / 2 {
        let j = n - 1 - i;
        worst = worst
            .max((state.re[i] - state.re[j]).abs())
            .max((state.im[i] - state.im[j]).abs());
    }
    assert!(worst < 1e-10, "parity violated by {worst:.3e}");
}

#[test]
fn anti_qball_conjugation_1d() {
    // omega -> -omega conjugates the field: |Phi| histories identical, Q
    // flips sign exactly.
    let grid = Grid::default_1d();
    let obs = ObstructionSpec::interval_1d(-0.2);
    let lam = LambdaField::sample(&grid, &obs);
    let mut ball = sample_boosted_1d(&QBallSpec::moving(1.9, 0.1, -13.0), &grid).unwrap();
    let mut anti = sample_boosted_1d(&QBallSpec::moving(-1.9, 0.1, -13.0), &grid).unwrap();
    assert!((total_charge(&ball) + total_charge(&anti)).abs() < 1e-12);
    evolve_plain(&mut ball, &lam, 10.0);
    evolve_plain(&mut anti, &lam, 10.0);
    let mut worst = 0.0_f64;
    for i in 0..grid.nx {
        let m_ball = ball.re[i] * ball.re[i] + ball.im[i] * ball.im[i];
        let m_anti = anti.re[i] * anti.re[i] + anti.im[i] * anti.im[i];
        worst = worst.max((m_ball - m_anti).abs());
    }
    assert!(worst < 1e-12, "|Phi| differs by {worst:.3e}");
    let (qb, qa) = (total_charge(&ball), total_charge(&anti));
    assert!((qb + qa).abs() < 1e-10, "Q mirror broken: {qb} vs {qa}");
}

fn mirrored_2d_trajectories(y0: f64) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let grid = Grid::default_2d();
    let profile = shoot_profile(1.6, 1.0, &ShootParams::default()).unwrap();
    let spec = QBallSpec::moving(1.6, 0.1, -8.5);
    let mut out = Vec::new();
    for sign in [1.0, -1.0] {
        let obs = ObstructionSpec {
            lambda0: -0.9,
            region: Region::Disk {
                center: [0.0, sign * y0],
                radius: 5.0,
            },
        };
        let lam = LambdaField::sample(&grid, &obs);
        let mut state = field_from_radial(&profile, &spec, &grid).state;
        let mut rec = TrajectoryRecorder::new(spec, obs, grid.clone());
        let opts = RunOptions {
            t_end: 40.0,
            sample_interval: 0.5,
            absorber: Some(AbsorberSpec::default_2d()),
        };
        run(&mut state, &lam, &opts, &mut [&mut rec]).unwrap();
        out.push(
            rec.traj
                .samples
                .iter()
                .map(|s| s.pos)
                .collect::<Vec<[f64; 2]>>(),
        );
    }
    let b = out.pop().unwrap();
    let a = out.pop().unwrap();
    (a, b)
}

#[test]
fn y_mirror_2d() {
    // Reflecting the obstruction center y0 -> -y0 reflects the trajectory.
    let (up, down) = mirrored_2d_trajectories(5.0);
    assert_eq!(up.len(), down.len());
    let mut worst = 0.0_f64;
    for (a, b) in up.iter().zip(&down) {
        if a[0].is_finite() && b[0].is_finite() {
            worst = worst.max((a[0] - b[0]).abs()).max((a[1] + b[1]).abs());
        }
    }
    assert!(worst < 1e-6, "mirror trajectories differ by {worst:.3e}");
}

#[test]
fn anti_qball_conjugation_2d() {
    let grid = Grid::default_2d();
    let obs = ObstructionSpec::disk_2d(-0.9, 0.0, 5.0);
    let lam = LambdaField::sample(&grid, &obs);
    let profile = shoot_profile(1.6, 1.0, &ShootParams::default()).unwrap();
    let mut ball =
        field_from_radial(&profile, &QBallSpec::moving(1.6, 0.1, -8.5), &grid).state;
    let mut anti =
        field_from_radial(&profile, &QBallSpec::moving(-1.6, 0.1, -8.5), &grid).state;
    evolve_plain(&mut ball, &lam, 10.0);
    evolve_plain(&mut anti, &lam, 10.0);
    let mut worst = 0.0_f64;
    for i in 0..grid.n_total() {
        let m_ball = ball.re[i] * ball.re[i] + ball.im[i] * ball.im[i];
        let m_anti = anti.re[i] * anti.re[i] + anti.im[i] * anti.im[i];
        worst = worst.max((m_ball - m_anti).abs());
    }
    assert!(worst < 1e-12, "|Phi| differs by {worst:.3e}");
    assert!((total_charge(&ball) + total_charge(&anti)).abs() < 1e-10);
}
