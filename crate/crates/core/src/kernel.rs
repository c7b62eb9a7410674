//! The linear semigroup kernel `K(t, .) = F^{-1}(exp(t psi))` and its laws.
//!
//! `K` is a skewed stable-like probability density: unit mass, positivity,
//! the semigroup property, the self-similar form
//! `K(t, x) = t^{-1/beta} K(1, x t^{-1/beta})`, `L^p` norms decaying like
//! `t^{-(1/beta)(1 - 1/p) - (j + theta)/beta}` under `|D|^theta dx^j`, and
//! algebraic spatial tails `| |D|^theta K(1, .)(X) | ~ |X|^{-1-theta}`.
//!
//! The discrete kernel is the inverse DFT of `exp(t psi(xi_k))` rescaled so
//! its discrete mass is exactly one; with the transform conventions of
//! [`crate::grid`] this is the periodisation of the continuum kernel, and
//! convolution against it is plain spectrum multiplication.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::grid::{Field, Grid};
use crate::ops::{OperatorSpec, SpectralMultiplier};

/// Samples of the semigroup kernel at a fixed time.
#[derive(Debug, Clone)]
pub struct KernelField {
    t: f64,
    spec: OperatorSpec,
    field: Field,
}

impl KernelField {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Most negative sample relative to the peak (positivity defect).
    pub fn positivity_defect(&self) -> f64 {
        let min = self.field.min();
        if min >= 0.0 {
            0.0
        } else {
            -min / self.field.max()
        }
    }

    /// Convolve against a field on the same grid.
    pub fn convolve(&self, f: &Field) -> Result<Field> {
        self.field.check_same_grid(f)?;
        let grid = f.grid();
        let spec: Vec<Complex64> = self
            .field
            .spectrum()
            .iter()
            .zip(f.spectrum())
            .map(|(a, b)| a * b)
            .collect();
        Field::from_spectrum(grid, &spec)
    }
}

fn require_generator(spec: &OperatorSpec) -> Result<()> {
    if spec.is_dissipative_generator() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!(
            "no decaying semigroup kernel for {spec:?}"
        )))
    }
}

/// Kernel samples at time `t > 0`, normalised to exact unit discrete mass.
pub fn kernel_field(t: f64, spec: &OperatorSpec, grid: Grid) -> Result<KernelField> {
    require_generator(spec)?;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kernel time must be positive, got {t}"
        )));
    }
    let spectrum: Vec<Complex64> = grid.freqs().map(|xi| (spec.symbol(xi) * t).exp()).collect();
    let field = Field::from_spectrum(grid, &spectrum)?;
    let mass = field.mass();
    let field = field.map(|v| v / mass);
    Ok(KernelField {
        t,
        spec: *spec,
        field,
    })
}

/// `L^1` distance between `K(t+s)` and the discrete self-convolution
/// `K(t) * K(s)`.
pub fn semigroup_l1_residual(t: f64, s: f64, spec: &OperatorSpec, grid: Grid) -> Result<f64> {
    let kt = kernel_field(t, spec, grid)?;
    let ks = kernel_field(s, spec, grid)?;
    let kts = kernel_field(t + s, spec, grid)?;
    let conv = kt.convolve(ks.field())?;
    Ok(kts.field().lin_comb(1.0, &conv, -1.0)?.lp_norm(1.0))
}

/// Max-norm mismatch between `K(t, .)` and the rescaled `K(1, .)`,
/// normalised by `max K(t, .)`.
///
/// `K(1, .)` is sampled on the same grid and linearly interpolated at the
/// rescaled points. Points whose rescaled argument leaves the box are
/// excluded; if the excluded region carries a non-negligible share of
/// `K(t, .)` the comparison is refused.
pub fn self_similarity_residual(t: f64, spec: &OperatorSpec, grid: Grid) -> Result<f64> {
    let beta = spec.order();
    let scale = t.powf(1.0 / beta);
    let nyquist_weight = (t.min(1.0) * spec.symbol(-grid.freq_max()).re).exp();
    if nyquist_weight > 1e-3 {
        return Err(Error::Unresolved(format!(
            "kernel at t = {t} is not resolved on this grid (Nyquist weight {nyquist_weight:.2e})"
        )));
    }
    let kt = kernel_field(t, spec, grid)?;
    let k1 = kernel_field(1.0, spec, grid)?;
    let l = grid.half_width();
    let max_kt = kt.field().max();

    let mut worst = 0.0f64;
    let mut covered_peak = 0.0f64;
    for (j, x) in grid.xs().enumerate() {
        let y = x / scale;
        if y.abs() > 0.995 * l {
            continue;
        }
        let sample = kt.field().values()[j];
        covered_peak = covered_peak.max(sample);
        let rescaled = k1.field().interp(y) / scale;
        worst = worst.max((sample - rescaled).abs());
    }
    if covered_peak < 0.999 * max_kt {
        return Err(Error::InvalidArgument(format!(
            "rescaling by t^(1/beta) = {scale:.3} pushes the kernel bulk outside the box"
        )));
    }
    Ok(worst / max_kt)
}

/// A fitted decay law: measured log-log slope, its reference exponent, and
/// the raw `(abscissa, norm)` samples behind the fit.
#[derive(Debug, Clone)]
pub struct DecayFit {
    pub slope: f64,
    pub reference: f64,
    pub samples: Vec<(f64, f64)>,
}

impl DecayFit {
    pub fn deviation(&self) -> f64 {
        (self.slope - self.reference).abs()
    }
}

/// Times used for the kernel time-decay fits.
pub const DECAY_TIMES: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

/// Fit `log || |D|^theta dx^j K(t, .) ||_{L^p}` against `log t` over
/// `t in {1, 2, 4, 8}`; the reference slope is
/// `-(1/beta)(1 - 1/p) - (j + theta)/beta`.
pub fn time_decay_exponent(
    spec: &OperatorSpec,
    grid: Grid,
    p: f64,
    theta: f64,
    with_dx: bool,
) -> Result<DecayFit> {
    require_generator(spec)?;
    if !(1.0..=f64::INFINITY).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "L^p exponent must satisfy 1 <= p <= inf, got {p}"
        )));
    }
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "fractional order must satisfy 0 <= theta < 1, got {theta}"
        )));
    }
    let j = if with_dx { 1.0 } else { 0.0 };
    let weight = SpectralMultiplier::from_fn(grid, |xi| {
        let mut w = Complex64::new(xi.abs().powf(theta), 0.0);
        if with_dx {
            w *= Complex64::new(0.0, xi);
        }
        w
    });

    let mut samples = Vec::with_capacity(DECAY_TIMES.len());
    for &t in &DECAY_TIMES {
        // resolvedness: the weighted spectrum must have decayed at Nyquist
        let xm = grid.freq_max();
        let tail = xm.powf(theta + j) * (t * spec.symbol(-xm).re).exp();
        if tail > 1e-10 {
            return Err(Error::Unresolved(format!(
                "kernel at t = {t} is not resolved on this grid (Nyquist weight {tail:.2e})"
            )));
        }
        let k = kernel_field(t, spec, grid)?;
        samples.push((t, weight.apply(k.field())?.lp_norm(p)));
    }
    let slope = log_log_slope(&samples);
    let reference = -(1.0 / spec.order()) * (1.0 - 1.0 / p) - (j + theta) / spec.order();
    Ok(DecayFit {
        slope,
        reference,
        samples,
    })
}

/// Fit the spatial tail `log | |D|^theta K(1, .)(X) |` against `log |X|`
/// over a window `[x_min, x_max]` (use a negative window for the left tail);
/// the reference slope is `-(1 + theta)`.
///
/// The algebraic `|X|^{-1-theta}` tail aliases noticeably under
/// periodisation, so the symbol is sampled internally on a box four times
/// wider (same spacing) before the weighted kernel is evaluated.
pub fn tail_decay_exponent(
    spec: &OperatorSpec,
    grid: Grid,
    theta: f64,
    window: (f64, f64),
) -> Result<DecayFit> {
    require_generator(spec)?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tail law requires 0 < theta < 1, got {theta}"
        )));
    }
    let (a, b) = window;
    if !(a < b) || a.signum() != b.signum() {
        return Err(Error::InvalidArgument(format!(
            "window must be one-sided and increasing, got ({a}, {b})"
        )));
    }
    if a.abs().max(b.abs()) > 0.9 * grid.half_width() {
        return Err(Error::InvalidArgument(
            "window touches the box edge; tail would be wrap-contaminated".into(),
        ));
    }
    let wide = Grid::new(grid.len() * 4, grid.half_width() * 4.0)?;
    let k = kernel_field(1.0, spec, wide)?;
    let weighted = SpectralMultiplier::from_fn(wide, |xi| Complex64::new(xi.abs().powf(theta), 0.0))
        .apply(k.field())?;
    let samples: Vec<(f64, f64)> = wide
        .xs()
        .enumerate()
        .filter(|(_, x)| (a..=b).contains(x))
        .map(|(j, x)| (x.abs(), weighted.values()[j].abs()))
        .collect();
    if samples.len() < 8 {
        return Err(Error::InvalidArgument(
            "window contains too few grid points for a fit".into(),
        ));
    }
    Ok(DecayFit {
        slope: log_log_slope(&samples),
        reference: -(1.0 + theta),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flagship() -> OperatorSpec {
        OperatorSpec::dx_weyl_marchaud(0.5).unwrap()
    }

    #[test]
    fn rejects_nonpositive_time_and_nongenerators() {
        let grid = Grid::new(256, 50.0).unwrap();
        assert!(kernel_field(0.0, &flagship(), grid).is_err());
        assert!(kernel_field(-1.0, &flagship(), grid).is_err());
        let bad = OperatorSpec::weyl_marchaud(0.5).unwrap();
        assert!(kernel_field(1.0, &bad, grid).is_err());
    }

    #[test]
    fn unit_mass_and_positivity() {
        let grid = Grid::new(1 << 12, 100.0).unwrap();
        for &t in &[0.1, 1.0, 4.0] {
            let k = kernel_field(t, &flagship(), grid).unwrap();
            assert!((k.field().mass() - 1.0).abs() < 1e-14);
            assert!(k.positivity_defect() <= 1e-6, "t = {t}");
        }
    }

    #[test]
    fn flagship_and_riesz_feller_kernels_coincide() {
        let grid = Grid::new(1 << 10, 60.0).unwrap();
        let a = kernel_field(1.0, &flagship(), grid).unwrap();
        let rf = OperatorSpec::riesz_feller(1.5, 0.5).unwrap();
        let b = kernel_field(1.0, &rf, grid).unwrap();
        let scale = a.field().max();
        for (x, y) in a.field().values().iter().zip(b.field().values()) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn semigroup_property() {
        let grid = Grid::new(1 << 12, 100.0).unwrap();
        for &(t, s) in &[(0.5, 0.5), (0.5, 1.0), (1.0, 1.0)] {
            let r = semigroup_l1_residual(t, s, &flagship(), grid).unwrap();
            assert!(r <= 1e-6, "({t},{s}): {r}");
        }
        // spec example: K(2) against K(1)*K(1)
        let r = semigroup_l1_residual(1.0, 1.0, &flagship(), grid).unwrap();
        assert!(r <= 1e-6);
    }

    #[test]
    fn short_time_convolution_approaches_identity() {
        let grid = Grid::new(1 << 12, 50.0).unwrap();
        let u0 = Field::from_fn(grid, |x| (-x * x).exp());
        let mut prev = f64::INFINITY;
        for &t in &[1e-1, 1e-2, 1e-3] {
            let k = kernel_field(t, &flagship(), grid).unwrap();
            let err = k
                .convolve(&u0)
                .unwrap()
                .lin_comb(1.0, &u0, -1.0)
                .unwrap()
                .lp_norm(2.0);
            assert!(err < prev, "t = {t}: {err} !< {prev}");
            prev = err;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn self_similarity_identity_and_residuals() {
        let grid = Grid::new(1 << 13, 100.0).unwrap();
        assert!(self_similarity_residual(1.0, &flagship(), grid).unwrap() < 1e-14);
        let r2 = self_similarity_residual(2.0, &flagship(), grid).unwrap();
        assert!(r2 <= 1e-4, "t=2: {r2}");
        let rf = OperatorSpec::riesz_feller(1.6, 0.2).unwrap();
        let rh = self_similarity_residual(0.5, &rf, grid).unwrap();
        assert!(rh <= 1e-4, "t=0.5: {rh}");
    }

    #[test]
    fn self_similarity_refuses_extreme_zoom() {
        let grid = Grid::new(1 << 10, 20.0).unwrap();
        // t so small that the valid window misses the kernel bulk
        assert!(self_similarity_residual(1e-6, &flagship(), grid).is_err());
    }

    #[test]
    fn time_decay_slopes() {
        let grid = Grid::new(1 << 13, 100.0).unwrap();
        // mass conservation: p = 1, theta = 0, j = 0 has slope 0
        let fit = time_decay_exponent(&flagship(), grid, 1.0, 0.0, false).unwrap();
        assert!(fit.slope.abs() < 1e-6, "{}", fit.slope);

        // sup norm decays like t^{-1/(1+alpha)}
        let fit = time_decay_exponent(&flagship(), grid, f64::INFINITY, 0.0, false).unwrap();
        assert!((fit.reference + 1.0 / 1.5).abs() < 1e-12);
        assert!(fit.deviation() <= 0.01, "slope {} vs {}", fit.slope, fit.reference);

        // |D|^{1/2} dx K in L^2: slope -(1/1.5)(1/2) - 1.5/1.5
        let fit = time_decay_exponent(&flagship(), grid, 2.0, 0.5, true).unwrap();
        assert!((fit.reference + 4.0 / 3.0).abs() < 1e-12);
        assert!(fit.deviation() <= 0.02, "slope {} vs {}", fit.slope, fit.reference);
    }

    #[test]
    fn time_decay_reports_unresolved_grids() {
        let grid = Grid::new(64, 100.0).unwrap();
        assert!(matches!(
            time_decay_exponent(&flagship(), grid, 2.0, 0.5, false),
            Err(Error::Unresolved(_))
        ));
    }

    #[test]
    fn tail_decay_slope() {
        let grid = Grid::new(1 << 15, 200.0).unwrap();
        let fit = tail_decay_exponent(&flagship(), grid, 0.5, (10.0, 50.0)).unwrap();
        assert!(
            (fit.slope + 1.5).abs() <= 0.15,
            "slope {} (reference -1.5)",
            fit.slope
        );
    }

    #[test]
    fn tail_decay_symmetric_case_matches_on_both_sides() {
        let grid = Grid::new(1 << 15, 200.0).unwrap();
        let rf = OperatorSpec::riesz_feller(1.5, 0.0).unwrap();
        let right = tail_decay_exponent(&rf, grid, 0.5, (10.0, 50.0)).unwrap();
        let left = tail_decay_exponent(&rf, grid, 0.5, (-50.0, -10.0)).unwrap();
        assert!((right.slope + 1.5).abs() <= 0.15, "right {}", right.slope);
        assert!((left.slope - right.slope).abs() <= 1e-8);
    }

    #[test]
    fn tail_decay_rejects_bad_windows() {
        let grid = Grid::new(1 << 12, 100.0).unwrap();
        assert!(tail_decay_exponent(&flagship(), grid, 0.0, (10.0, 50.0)).is_err());
        assert!(tail_decay_exponent(&flagship(), grid, 0.5, (10.0, 95.0)).is_err());
        assert!(tail_decay_exponent(&flagship(), grid, 0.5, (-10.0, 50.0)).is_err());
    }
}
