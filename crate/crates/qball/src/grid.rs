//! Simulation grids and the discretized field state.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Uniform grid in 1 or 2 spatial dimensions.
///
/// Coordinates are x(i) = x_min + (i + offset)·dx. The 1d default is
/// node-centered on [−60, 60] with 12001 points (dx = 0.01, dt = 0.0025);
/// the 2d default is cell-centered with 300 points per axis spanning
/// [−15, 15) (dx = dy = 0.1, dt = 0.02).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub y_min: f64,
    pub dx: f64,
    pub dy: f64,
    pub dt: f64,
    /// 0.0 for node-centered axes, 0.5 for cell-centered.
    pub offset: f64,
}

impl Grid {
    pub fn default_1d() -> Self {
        Self {
            dim: 1,
            nx: 12001,
            ny: 1,
            x_min: -60.0,
            y_min: 0.0,
            dx: 0.01,
            dy: 1.0,
            dt: 0.0025,
            offset: 0.0,
        }
    }

    pub fn default_2d() -> Self {
        Self {
            dim: 2,
            nx: 300,
            ny: 300,
            x_min: -15.0,
            y_min: -15.0,
            dx: 0.1,
            dy: 0.1,
            dt: 0.02,
            offset: 0.5,
        }
    }

    /// Node-centered 1d grid on [-half, half] with spacing dx.
    pub fn custom_1d(half: f64, dx: f64, dt: f64) -> Self {
        let nx = (2.0 * half / dx).round() as usize + 1;
        Self {
            dim: 1,
            nx,
            ny: 1,
            x_min: -half,
            y_min: 0.0,
            dx,
            dy: 1.0,
            dt,
            offset: 0.0,
        }
    }

    /// Cell-centered square 2d grid on [-half, half) with spacing dx.
    pub fn custom_2d(half: f64, dx: f64, dt: f64) -> Self {
        let n = (2.0 * half / dx).round() as usize;
        Self {
            dim: 2,
            nx: n,
            ny: n,
            x_min: -half,
            y_min: -half,
            dx,
            dy: dx,
            dt,
            offset: 0.5,
        }
    }

    #[inline]
    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + (ix as f64 + self.offset) * self.dx
    }

    #[inline]
    pub fn y(&self, iy: usize) -> f64 {
        if self.dim == 1 {
            0.0
        } else {
            self.y_min + (iy as f64 + self.offset) * self.dy
        }
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    #[inline]
    pub fn point(&self, i: usize) -> [f64; 2] {
        [self.x(i % self.nx), self.y(i / self.nx)]
    }

    #[inline]
    pub fn n_total(&self) -> usize {
        self.nx * self.ny
    }

    /// Volume element: dx in 1d, dx·dy in 2d.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        if self.dim == 1 {
            self.dx
        } else {
            self.dx * self.dy
        }
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.nx as f64 * self.dx
    }

    pub fn y_max(&self) -> f64 {
        self.y_min + self.ny as f64 * self.dy
    }

    pub fn validate(&self) -> Result<()> {
        match self.dim {
            1 => {
                if self.ny != 1 {
                    return Err(Error::Config("1d grid must have ny = 1".into()));
                }
            }
            2 => {
                if self.ny < 3 {
                    return Err(Error::Config("2d grid too small along y".into()));
                }
            }
            d => return Err(Error::Config(format!("unsupported dimension {d}"))),
        }
        if self.nx < 3 {
            return Err(Error::Config("grid too small along x".into()));
        }
        for (name, v) in [("dx", self.dx), ("dy", self.dy), ("dt", self.dt)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        // CFL-like safety margin for the explicit stepping.
        if self.dt >= self.dx || (self.dim == 2 && self.dt >= self.dy) {
            return Err(Error::Config(format!(
                "dt = {} must stay below the grid spacing ({}, {})",
                self.dt, self.dx, self.dy
            )));
        }
        Ok(())
    }
}

/// Discretized complex field Φ and its time derivative on a grid.
///
/// Stored as separate real arrays (structure of arrays) indexed by
/// iy·nx + ix. All values must stay finite; a NaN anywhere is treated as an
/// evolution blow-up.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub vre: Vec<f64>,
    pub vim: Vec<f64>,
    pub t: f64,
}

impl FieldState {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.n_total();
        Self {
            grid,
            re: vec![0.0; n],
            im: vec![0.0; n],
            vre: vec![0.0; n],
            vim: vec![0.0; n],
            t: 0.0,
        }
    }

    #[inline]
    pub fn phi(&self, i: usize) -> Complex64 {
        Complex64::new(self.re[i], self.im[i])
    }

    #[inline]
    pub fn phi_dot(&self, i: usize) -> Complex64 {
        Complex64::new(self.vre[i], self.vim[i])
    }

    /// Pointwise sum of two configurations on the same grid.
    pub fn superpose(&mut self, other: &FieldState) {
        assert_eq!(self.grid, other.grid, "superpose needs matching grids");
        for (a, b) in self.re.iter_mut().zip(&other.re) {
            *a += b;
        }
        for (a, b) in self.im.iter_mut().zip(&other.im) {
            *a += b;
        }
        for (a, b) in self.vre.iter_mut().zip(&other.vre) {
            *a += b;
        }
        for (a, b) in self.vim.iter_mut().zip(&other.vim) {
            *a += b;
        }
    }

    /// Rotate the field by a constant U(1) phase.
    pub fn rotate_phase(&mut self, alpha: f64) {
        let (s, c) = alpha.sin_cos();
        for i in 0..self.re.len() {
            let (re, im) = (self.re[i], self.im[i]);
            self.re[i] = c * re - s * im;
            self.im[i] = s * re + c * im;
            let (vre, vim) = (self.vre[i], self.vim[i]);
            self.vre[i] = c * vre - s * vim;
            self.vim[i] = s * vre + c * vim;
        }
    }

    pub fn max_abs(&self) -> f64 {
        let m = |v: &[f64]| v.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
        m(&self.re).max(m(&self.im)).max(m(&self.vre)).max(m(&self.vim))
    }

    pub fn all_finite(&self) -> bool {
        let ok = |v: &[f64]| v.iter().all(|x| x.is_finite());
        ok(&self.re) && ok(&self.im) && ok(&self.vre) && ok(&self.vim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids_match_reference_resolution() {
        let g1 = Grid::default_1d();
        assert_eq!(g1.nx, 12001);
        assert_eq!(g1.x(0), -60.0);
        assert!((g1.x(12000) - 60.0).abs() < 1e-12);
        assert!((g1.x(6000)).abs() < 1e-12);
        g1.validate().unwrap();

        let g2 = Grid::default_2d();
        assert_eq!(g2.nx * g2.ny, 90000);
        assert!((g2.x(0) + 14.95).abs() < 1e-12);
        assert!((g2.x(299) - 14.95).abs() < 1e-12);
        g2.validate().unwrap();
    }

    #[test]
    fn validate_rejects_bad_grids() {
        let mut g = Grid::default_1d();
        g.dt = 0.02; // >= dx
        assert!(g.validate().is_err());
        let mut g = Grid::default_2d();
        g.dx = -0.1;
        assert!(g.validate().is_err());
    }

    #[test]
    fn phase_rotation_preserves_modulus() {
        let mut s = FieldState::zeros(Grid::custom_1d(1.0, 0.1, 0.01));
        s.re[3] = 0.6;
        s.im[3] = -0.8;
        s.vre[3] = 0.1;
        s.rotate_phase(1.234);
        assert!((s.phi(3).norm() - 1.0).abs() < 1e-14);
    }
}
