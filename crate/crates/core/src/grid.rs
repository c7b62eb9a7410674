//! Uniform periodic grid on `[-L, L)` and real fields sampled on it.
//!
//! The discrete Fourier pair used throughout mimics the transform on the
//! line: for samples `u_j` at `x_j = -L + j*dx`,
//!
//! ```text
//!   u_hat(xi_k) = dx * sum_j u_j exp(-i xi_k x_j),      xi_k = pi k / L,
//!   u_j         = (1/2L) * sum_k u_hat(xi_k) exp(i xi_k x_j),
//! ```
//!
//! with `k in {-n/2, ..., n/2 - 1}` stored in FFT index order (the single
//! Nyquist mode is treated as the negative frequency `-n/2`). With this
//! scaling, multiplier applications and convolutions match their continuum
//! counterparts directly and the discrete mass is `u_hat(0)`.

use num_complex::Complex64;
use once_cell::sync::{Lazy, OnceCell};
use rustfft::FftPlanner;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};

static PLANNER: Lazy<Mutex<FftPlanner<f64>>> = Lazy::new(|| Mutex::new(FftPlanner::new()));

fn plan_forward(n: usize) -> Arc<dyn rustfft::Fft<f64>> {
    PLANNER.lock().unwrap().plan_fft_forward(n)
}

fn plan_inverse(n: usize) -> Arc<dyn rustfft::Fft<f64>> {
    PLANNER.lock().unwrap().plan_fft_inverse(n)
}

/// Uniform periodic grid: `n` points (a power of two) covering `[-L, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "grid size must be a power of two >= 4, got {n}"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid half-width must be positive and finite, got {half_width}"
            )));
        }
        Ok(Self { n, half_width })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Physical coordinate of sample `j`.
    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    /// Signed mode number of FFT slot `i` (Nyquist counted as `-n/2`).
    pub fn mode(&self, i: usize) -> i64 {
        debug_assert!(i < self.n);
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Wavenumber `xi_k = pi k / L` of FFT slot `i`.
    pub fn freq(&self, i: usize) -> f64 {
        std::f64::consts::PI * self.mode(i) as f64 / self.half_width
    }

    /// Largest resolved wavenumber magnitude, `pi (n/2) / L`.
    pub fn freq_max(&self) -> f64 {
        std::f64::consts::PI * (self.n as f64 / 2.0) / self.half_width
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.x(j))
    }

    pub fn freqs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.freq(i))
    }

    /// Forward transform of real samples into the continuum-scaled spectrum.
    pub fn dft(&self, values: &[f64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.n);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        plan_forward(self.n).process(&mut buf);
        let dx = self.dx();
        for (i, c) in buf.iter_mut().enumerate() {
            // (-1)^k phase from the grid origin at -L.
            let sign = if i % 2 == 0 { dx } else { -dx };
            *c *= sign;
        }
        buf
    }

    /// Inverse transform; returns real samples and the relative size of the
    /// discarded imaginary residue.
    pub fn idft(&self, spectrum: &[Complex64]) -> (Vec<f64>, f64) {
        assert_eq!(spectrum.len(), self.n);
        let scale = 1.0 / (2.0 * self.half_width);
        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(i, &c)| if i % 2 == 0 { c * scale } else { -c * scale })
            .collect();
        plan_inverse(self.n).process(&mut buf);
        let mut max_re: f64 = 0.0;
        let mut max_im: f64 = 0.0;
        for c in &buf {
            max_re = max_re.max(c.re.abs());
            max_im = max_im.max(c.im.abs());
        }
        let residue = if max_re > 0.0 { max_im / max_re } else { max_im };
        (buf.iter().map(|c| c.re).collect(), residue)
    }
}

/// Real samples on a [`Grid`] with a lazily computed spectral cache.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    spectrum: OnceCell<Vec<Complex64>>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples on a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "field samples must be finite".into(),
            ));
        }
        Ok(Self {
            grid,
            values,
            spectrum: OnceCell::new(),
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::new(grid, vec![0.0; grid.len()]).unwrap()
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = grid.xs().map(f).collect();
        Self::new(grid, values).expect("sampled function must be finite on the grid")
    }

    /// Build a field directly from its continuum-scaled spectrum.
    pub fn from_spectrum(grid: Grid, spectrum: &[Complex64]) -> Result<Self> {
        let (values, _residue) = grid.idft(spectrum);
        Self::new(grid, values)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Continuum-scaled spectrum in FFT order (cached after first use).
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| self.grid.dft(&self.values))
    }

    /// Discrete mass `sum u dx` (equals the zero mode of the spectrum).
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    /// Discrete `L^p` norm; `p = f64::INFINITY` gives the max norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let dx = self.grid.dx();
        if p.is_infinite() {
            self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
        } else if (p - 1.0).abs() < 1e-14 {
            self.values.iter().map(|v| v.abs()).sum::<f64>() * dx
        } else if (p - 2.0).abs() < 1e-14 {
            (self.values.iter().map(|v| v * v).sum::<f64>() * dx).sqrt()
        } else {
            (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * dx).powf(1.0 / p)
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Discrete inner product `sum f g dx`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.dx())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_fn_values(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    fn from_fn_values(grid: Grid, values: Vec<f64>) -> Field {
        Field {
            grid,
            values,
            spectrum: OnceCell::new(),
        }
    }

    /// Pointwise linear combination `a*self + b*other`.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Field::from_fn_values(self.grid, values))
    }

    /// Cyclic shift by whole cells (positive shifts move samples to larger x).
    pub fn shifted(&self, cells: i64) -> Field {
        let n = self.grid.len() as i64;
        let values = (0..n)
            .map(|j| self.values[(j - cells).rem_euclid(n) as usize])
            .collect();
        Field::from_fn_values(self.grid, values)
    }

    /// Value at an arbitrary point by linear interpolation of the periodic
    /// extension.
    pub fn interp(&self, x: f64) -> f64 {
        let l = self.grid.half_width();
        let dx = self.grid.dx();
        let n = self.grid.len();
        let s = (x + l).rem_euclid(2.0 * l) / dx;
        let j0 = s.floor() as usize % n;
        let j1 = (j0 + 1) % n;
        let w = s - s.floor();
        self.values[j0] * (1.0 - w) + self.values[j1] * w
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "fields on {:?} and {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::new(1000, 10.0).is_err());
        assert!(Grid::new(2, 10.0).is_err());
        assert!(Grid::new(64, 0.0).is_err());
        assert!(Grid::new(64, -1.0).is_err());
    }

    #[test]
    fn frequencies_are_symmetric_except_nyquist() {
        let g = Grid::new(16, 5.0).unwrap();
        assert_eq!(g.mode(0), 0);
        assert_eq!(g.mode(1), 1);
        assert_eq!(g.mode(8), -8); // Nyquist counted negative
        assert_eq!(g.mode(15), -1);
        for k in 1..8 {
            assert_eq!(g.freq(k), -g.freq(16 - k));
        }
        assert!((g.dx() * 16.0 - 10.0).abs() < 1e-15);
    }

    #[test]
    fn dft_round_trip_is_exact() {
        let g = Grid::new(256, 20.0).unwrap();
        let f = Field::from_fn(g, |x| (-x * x).exp() + 0.3 * (0.7 * x).sin());
        let spec = f.spectrum().to_vec();
        let (back, residue) = g.idft(&spec);
        let scale = f.lp_norm(f64::INFINITY);
        for (a, b) in f.values().iter().zip(&back) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
        assert!(residue < 1e-12);
    }

    #[test]
    fn zero_mode_is_discrete_mass() {
        let g = Grid::new(128, 10.0).unwrap();
        let f = Field::from_fn(g, |x| (-x * x).exp());
        assert!((f.spectrum()[0].re - f.mass()).abs() < 1e-12);
        assert!(f.spectrum()[0].im.abs() < 1e-14);
    }

    #[test]
    fn single_mode_lands_in_one_slot() {
        let g = Grid::new(64, 8.0).unwrap();
        // sin(pi x / L) is mode |k| = 1.
        let f = Field::from_fn(g, |x| (std::f64::consts::PI * x / 8.0).sin());
        let spec = f.spectrum();
        for i in 0..64 {
            let mag = spec[i].norm();
            if g.mode(i).abs() == 1 {
                assert!(mag > 1.0);
            } else {
                assert!(mag < 1e-12, "leak at slot {i}: {mag}");
            }
        }
    }

    #[test]
    fn interp_wraps_periodically() {
        let g = Grid::new(32, 4.0).unwrap();
        let f = Field::from_fn(g, |x| x);
        // halfway between last point and the wrap back to -L
        let last = g.x(31);
        let expect = 0.5 * (last + -4.0);
        assert!((f.interp(last + 0.5 * g.dx()) - expect).abs() < 1e-12);
    }
}
