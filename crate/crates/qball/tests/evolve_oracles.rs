//! Evolution checked against analytic references: exact rotation of the
//! stationary solution, the vacuum dispersion relation, integrator order,
//! and the absorbing layer's reflection budget.

use qball::diagnostics::{total_charge, totals};
use qball::evolve::*;
use qball::grid::{FieldState, Grid};
use qball::profile1d::{exact_profile, sample_boosted_1d, QBallSpec};

fn evolve_plain(state: &mut FieldState, lam: &LambdaField, t_end: f64) {
    let grid = state.grid.clone();
    let mut stepper = Stepper::new(&grid);
    let n = ((t_end - state.t) / grid.dt).round() as usize;
    let t0 = state.t;
    for k in 1..=n {
        stepper.step_rk4(state, lam).unwrap();
        state.t = t0 + k as f64 * grid.dt;
    }
}

#[test]
fn stationary_ball_rotates_in_place() {
    let grid = Grid::default_1d();
    let lam = LambdaField::uniform(&grid);
    let mut state = sample_boosted_1d(&QBallSpec::at_rest(1.9, 0.0), &grid).unwrap();
    evolve_plain(&mut state, &lam, 5.0);
    let (sin, cos) = (1.9 * 5.0_f64).sin_cos();
    let mut worst = 0.0_f64;
    for i in 0..grid.nx {
        let f = exact_profile(grid.x(i), 1.9, 1.0).unwrap();
        worst = worst
            .max((state.re[i] - f * cos).abs())
            .max((state.im[i] - f * sin).abs());
    }
    assert!(worst < 1e-4, "max pointwise error {worst:.3e} at t=5");
}

#[test]
fn uniform_orbit_keeps_constant_modulus() {
    // Spatially constant solution f0 e^{i omega t} with omega^2 = U'(f0)/f0:
    // 6 f0^4 - 8 f0^2 + (4 - omega^2) = 0, smaller root.
    let omega: f64 = 1.9;
    let f0 = ((8.0 - (24.0 * omega * omega - 32.0_f64).sqrt()) / 12.0).sqrt();
    let grid = Grid::default_1d();
    let lam = LambdaField::uniform(&grid);
    let mut state = FieldState::zeros(grid.clone());
    for i in 0..grid.nx {
        state.re[i] = f0;
        state.vim[i] = omega * f0;
    }
    evolve_plain(&mut state, &lam, 1.0);
    // Boundary (zero-ghost) effects travel inward at speed <= 1.
    let mut worst = 0.0_f64;
    for i in 0..grid.nx {
        if grid.x(i).abs() < 50.0 {
            let m = (state.re[i] * state.re[i] + state.im[i] * state.im[i]).sqrt();
            worst = worst.max((m - f0).abs());
        }
    }
    assert!(worst < 1e-6, "|Phi| drifted by {worst:.3e}");
}

#[test]
fn small_amplitude_dispersion() {
    // Right-moving k-mode on the vacuum: Omega^2 = k^2 + 4 (mass^2 = 4).
    let k = 2.0;
    let omega_exact = (k * k + 4.0_f64).sqrt();
    let eps = 1e-4;
    let grid = Grid::default_1d();
    let lam = LambdaField::uniform(&grid);
    let mut state = FieldState::zeros(grid.clone());
    for i in 0..grid.nx {
        let (s, c) = (k * grid.x(i)).sin_cos();
        state.re[i] = eps * c;
        state.im[i] = eps * s;
        state.vre[i] = eps * omega_exact * s;
        state.vim[i] = -eps * omega_exact * c;
    }
    // Track the phase at x = 0 (center index) and fit its slope.
    let center = grid.nx / 2;
    let mut stepper = Stepper::new(&grid);
    let mut t = 0.0;
    let mut prev = 0.0_f64;
    let mut unwrapped = 0.0;
    let mut pts: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let steps_per_sample = 40; // every 0.1 time units
    for k_step in 1..=4000 {
        stepper.step_rk4(&mut state, &lam).unwrap();
        t = k_step as f64 * grid.dt;
        if k_step % steps_per_sample == 0 {
            let phase = state.im[center].atan2(state.re[center]);
            let mut d = phase - prev;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            unwrapped += d;
            prev = phase;
            pts.push((t, unwrapped));
        }
    }
    assert!(t >= 10.0 - 1e-9);
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let pm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut stp) = (0.0, 0.0);
    for (tt, pp) in &pts {
        stt += (tt - tm) * (tt - tm);
        stp += (tt - tm) * (pp - pm);
    }
    let omega_measured = -(stp / stt);
    assert!(
        ((omega_measured - omega_exact) / omega_exact).abs() < 1e-3,
        "measured {omega_measured} vs {omega_exact}"
    );
}

#[test]
fn stationary_energy_drift_is_tiny() {
    let grid = Grid::default_1d();
    let lam = LambdaField::uniform(&grid);
    let mut state = sample_boosted_1d(&QBallSpec::at_rest(1.9, 0.0), &grid).unwrap();
    let e0 = totals(&state, &lam).e;
    evolve_plain(&mut state, &lam, 10.0);
    let e1 = totals(&state, &lam).e;
    assert!(
        ((e1 - e0) / e0).abs() < 1e-6,
        "energy drift {:.3e} over t=10",
        ((e1 - e0) / e0).abs()
    );
}

#[test]
fn rk4_richardson_factor() {
    // Halving dt scales the error by ~16 (4th order). Richardson triple on
    // a small grid: spatial error cancels in the differences.
    let dts = [0.002, 0.001, 0.0005];
    let mut finals = Vec::new();
    for &dt in &dts {
        let grid = Grid::custom_1d(10.0, 0.01, dt);
        let lam = LambdaField::uniform(&grid);
        let mut state = sample_boosted_1d(&QBallSpec::at_rest(1.9, 0.0), &grid).unwrap();
        evolve_plain(&mut state, &lam, 2.0);
        finals.push(state);
    }
    let diff = |a: &FieldState, b: &FieldState| -> f64 {
        let mut m = 0.0_f64;
        for i in 0..a.re.len() {
            m = m.max((a.re[i] - b.re[i]).abs()).max((a.im[i] - b.im[i]).abs());
        }
        m
    };
    let e1 = diff(&finals[0], &finals[1]);
    let e2 = diff(&finals[1], &finals[2]);
    let factor = e1 / e2;
    assert!(
        (14.0..=18.0).contains(&factor),
        "convergence factor {factor} (e1={e1:.3e}, e2={e2:.3e})"
    );
}

#[test]
fn sponge_reflection_budget() {
    // A rightward packet must come back with less than 2% of its amplitude.
    let grid = Grid::default_1d();
    let lam = LambdaField::uniform(&grid);
    let sponge = Sponge::build(&grid, &AbsorberSpec::default_1d());
    let k = 3.0;
    let omega = (k * k + 4.0_f64).sqrt();
    let eps = 1e-3;
    let mut state = FieldState::zeros(grid.clone());
    for i in 0..grid.nx {
        let x = grid.x(i);
        let env = eps * (-(x - 30.0) * (x - 30.0) / 50.0).exp();
        let (s, c) = (k * x).sin_cos();
        state.re[i] = env * c;
        state.im[i] = env * s;
        state.vre[i] = env * omega * s;
        state.vim[i] = -env * omega * c;
    }
    let mut stepper = Stepper::new(&grid);
    for _ in 0..32000 {
        stepper.step_rk4(&mut state, &lam).unwrap();
        apply_absorber(&mut state, &sponge);
    }
    // t = 80: the packet (group velocity ~0.83) has been absorbed; whatever
    // is left in the interior is reflection.
    let mut residual = 0.0_f64;
    for i in 0..grid.nx {
        if grid.x(i) > -54.0 && grid.x(i) < 50.0 {
            residual = residual.max(state.phi(i).norm());
        }
    }
    assert!(
        residual < 0.02 * eps,
        "reflected amplitude ratio {:.3}%",
        100.0 * residual / eps
    );
}

#[test]
fn sponge_does_not_touch_a_centered_ball() {
    let grid = Grid::default_1d();
    let lam = LambdaField::uniform(&grid);
    let sponge = Sponge::build(&grid, &AbsorberSpec::default_1d());
    let mut state = sample_boosted_1d(&QBallSpec::at_rest(1.9, 0.0), &grid).unwrap();
    let q0 = total_charge(&state);
    let mut stepper = Stepper::new(&grid);
    for _ in 0..10 {
        stepper.step_rk4(&mut state, &lam).unwrap();
        apply_absorber(&mut state, &sponge);
    }
    let q1 = total_charge(&state);
    // Charge change per step from the absorber is exponentially small.
    assert!(
        ((q1 - q0) / q0).abs() < 1e-9,
        "charge changed by {:.3e} over 10 steps",
        ((q1 - q0) / q0).abs()
    );
}

#[test]
fn free_run_conserves_charge_short() {
    let grid = Grid::default_1d();
    let lam = LambdaField::uniform(&grid);
    let mut state = sample_boosted_1d(&QBallSpec::moving(1.9, 0.1, 0.0), &grid).unwrap();
    let q0 = total_charge(&state);
    let opts = RunOptions::with_absorber(20.0, 1);
    run(&mut state, &lam, &opts, &mut []).unwrap();
    let q1 = total_charge(&state);
    assert!(((q1 - q0) / q0).abs() < 1e-3, "dQ/Q = {:.3e}", (q1 - q0) / q0);
}
