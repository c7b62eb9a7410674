//! Exact N-wave entropy solution of the inviscid conservation law and
//! evaluators for the Kruzhkov entropy inequality.
//!
//! For nonnegative mass `M` released at the origin under the flux
//! `f(u) = |u|^{q-1} u / q`, the unique entropy solution is the rarefaction
//! fan terminated by a shock:
//!
//! ```text
//!   U_M(t, x) = (x/t)^{1/(q-1)}   for 0 < x < r(t),   0 otherwise,
//!   r(t)      = (q M / (q-1))^{(q-1)/q} t^{1/q}.
//! ```
//!
//! The profile carries mass `M` at every `t > 0`, peaks at
//! `(q M/(q-1))^{1/q} t^{-1/q}`, satisfies `d/dx (U^{q-1}) = 1/t` inside
//! the fan, and the shock obeys the Rankine-Hugoniot speed
//! `r'(t) = U(t, r-)^{q-1}/q`; the tests gate the formula on those facts
//! plus the weak-form residual before anything else relies on it.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::ops::{OperatorSpec, SpectralMultiplier};

/// Mass and flux exponent of the reference N-wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NWaveParams {
    mass: f64,
    q: f64,
}

impl NWaveParams {
    pub fn new(mass: f64, q: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "N-wave mass must be positive, got {mass}"
            )));
        }
        if !(q > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "flux exponent must satisfy q > 1, got {q}"
            )));
        }
        Ok(Self { mass, q })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Shock position `r(t)`.
    pub fn front(&self, t: f64) -> f64 {
        assert!(t > 0.0, "N-wave is defined for t > 0");
        let q = self.q;
        (q * self.mass / (q - 1.0)).powf((q - 1.0) / q) * t.powf(1.0 / q)
    }

    /// Peak value `U_M(t, r(t)-)`.
    pub fn peak(&self, t: f64) -> f64 {
        let q = self.q;
        (q * self.mass / (q - 1.0)).powf(1.0 / q) * t.powf(-1.0 / q)
    }

    /// Profile value at `(t, x)`.
    pub fn value(&self, t: f64, x: f64) -> f64 {
        assert!(t > 0.0, "N-wave is defined for t > 0");
        if x <= 0.0 || x >= self.front(t) {
            0.0
        } else {
            (x / t).powf(1.0 / (self.q - 1.0))
        }
    }

    /// Closed-form `L^p` norm, `1 <= p <= inf`.
    pub fn lp_norm(&self, t: f64, p: f64) -> f64 {
        assert!(t > 0.0, "N-wave is defined for t > 0");
        assert!(p >= 1.0, "L^p norms need p >= 1");
        if p.is_infinite() {
            return self.peak(t);
        }
        let q = self.q;
        ((q - 1.0) / (p + q - 1.0)).powf(1.0 / p) * self.front(t).powf(1.0 / p) * self.peak(t)
    }

    /// Samples of the profile on a grid.
    pub fn sample(&self, t: f64, grid: Grid) -> Field {
        Field::from_fn(grid, |x| self.value(t, x))
    }

    /// Mass carried left of `x`: the exact primitive `int_0^x U_M(t, s) ds`.
    pub fn primitive(&self, t: f64, x: f64) -> f64 {
        assert!(t > 0.0, "N-wave is defined for t > 0");
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.front(t) {
            return self.mass;
        }
        let q = self.q;
        t * (q - 1.0) / q * (x / t).powf(q / (q - 1.0))
    }

    /// Cell-averaged samples: the average of the profile over each grid
    /// cell, computed from the closed-form primitive. The discrete mass is
    /// exact regardless of how thin the profile is, which makes these
    /// samples the right representation for `L^1` comparisons and traces.
    pub fn sample_cell_averaged(&self, t: f64, grid: Grid) -> Field {
        let dx = grid.dx();
        Field::from_fn(grid, |x| {
            (self.primitive(t, x + 0.5 * dx) - self.primitive(t, x - 0.5 * dx)) / dx
        })
    }
}

/// `f(v) = |v|^{q-1} v / q`, the model flux.
pub fn inviscid_flux(v: f64, q: f64) -> f64 {
    v.abs().powf(q - 1.0) * v / q
}

/// Compactly supported smooth space-time bump
/// `phi(t, x) = b((t-t0)/wt) b((x-x0)/wx)` with `b(s) = exp(1 - 1/(1-s^2))`.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub t_center: f64,
    pub t_width: f64,
    pub x_center: f64,
    pub x_width: f64,
}

fn bump_profile(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

fn bump_profile_deriv(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let d = 1.0 - s * s;
        bump_profile(s) * (-2.0 * s / (d * d))
    }
}

impl Bump {
    pub fn value(&self, t: f64, x: f64) -> f64 {
        bump_profile((t - self.t_center) / self.t_width)
            * bump_profile((x - self.x_center) / self.x_width)
    }

    pub fn dt(&self, t: f64, x: f64) -> f64 {
        bump_profile_deriv((t - self.t_center) / self.t_width) / self.t_width
            * bump_profile((x - self.x_center) / self.x_width)
    }

    pub fn dx(&self, t: f64, x: f64) -> f64 {
        bump_profile((t - self.t_center) / self.t_width)
            * bump_profile_deriv((x - self.x_center) / self.x_width)
            / self.x_width
    }

    pub fn t_support(&self) -> (f64, f64) {
        (self.t_center - self.t_width, self.t_center + self.t_width)
    }

    pub fn x_support(&self) -> (f64, f64) {
        (self.x_center - self.x_width, self.x_center + self.x_width)
    }

    /// Draw a bump with centre and widths uniform in the given ranges.
    pub fn random<R: Rng>(
        rng: &mut R,
        t_range: (f64, f64),
        x_range: (f64, f64),
        max_half_width: (f64, f64),
    ) -> Bump {
        let t_width = rng.random_range(0.3 * max_half_width.0..max_half_width.0);
        let x_width = rng.random_range(0.3 * max_half_width.1..max_half_width.1);
        Bump {
            t_center: rng.random_range(t_range.0 + t_width..t_range.1 - t_width),
            t_width,
            x_center: rng.random_range(x_range.0 + x_width..x_range.1 - x_width),
            x_width,
        }
    }
}

/// Which entropy inequality to evaluate.
#[derive(Debug, Clone, Copy)]
pub enum EntropyForm {
    /// `|u-k| phi_t + sgn(u-k)(f(u)-f(k)) phi_x`.
    Inviscid,
    /// Adds the nonlocal term `scale * |u-k| D_bar[phi]` of the viscous
    /// inequality, with `D_bar` the dual operator (conjugate symbol).
    Viscous { spec: OperatorSpec, scale: f64 },
}

/// Space-time quadrature of the entropy production against one `(k, phi)`.
#[derive(Debug, Clone, Copy)]
pub struct EntropyResidual {
    /// Signed quadrature value; the inequality demands `>= -tol`.
    pub value: f64,
    /// Quadrature of the absolute integrand (sets the tolerance scale).
    pub scale: f64,
    /// Contribution of the nonlocal term alone (zero for the inviscid form).
    pub nonlocal_term: f64,
}

impl EntropyResidual {
    pub fn normalized(&self) -> f64 {
        self.value / self.scale.max(f64::MIN_POSITIVE)
    }
}

/// Evaluate the Kruzhkov residual for level `k` against the bump `phi`.
///
/// `u_at` supplies `u(t, .)` on `grid`; it is called at every quadrature
/// time in `times` that meets the bump's time support (trapezoid weights).
pub fn entropy_residual(
    grid: Grid,
    times: &[f64],
    mut u_at: impl FnMut(f64) -> Result<Field>,
    q: f64,
    k: f64,
    bump: &Bump,
    form: EntropyForm,
) -> Result<EntropyResidual> {
    let (t_lo, t_hi) = bump.t_support();
    let (x_lo, x_hi) = bump.x_support();
    if t_lo <= 0.0 {
        return Err(Error::InvalidArgument(
            "bump time support must stay inside (0, inf)".into(),
        ));
    }
    if x_lo < -grid.half_width() || x_hi > grid.half_width() {
        return Err(Error::InvalidArgument(
            "bump spatial support escapes the computational box".into(),
        ));
    }
    let sub: Vec<f64> = times.iter().copied().filter(|t| *t > 0.0).collect();
    if sub.first().map_or(true, |&t| t > t_lo) || sub.last().map_or(true, |&t| t < t_hi) {
        return Err(Error::InvalidArgument(
            "quadrature times do not cover the bump time support".into(),
        ));
    }
    if sub.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "quadrature times must be strictly increasing".into(),
        ));
    }

    let dual = match form {
        EntropyForm::Viscous { spec, .. } => Some(SpectralMultiplier::from_fn(grid, |xi| {
            spec.symbol(xi).conj()
        })),
        EntropyForm::Inviscid => None,
    };
    let fk = inviscid_flux(k, q);
    let dx = grid.dx();

    let mut value = 0.0;
    let mut scale = 0.0;
    let mut nonlocal = 0.0;
    for (i, &t) in sub.iter().enumerate() {
        if t < t_lo || t > t_hi {
            continue;
        }
        // trapezoid weight in time over the sub-grid of times
        let left = if i > 0 { sub[i - 1].max(t_lo) } else { t };
        let right = if i + 1 < sub.len() {
            sub[i + 1].min(t_hi)
        } else {
            t
        };
        let wt = 0.5 * (right - left);
        if wt <= 0.0 {
            continue;
        }
        let u = u_at(t)?;
        let dual_phi = match (&dual, form) {
            (Some(mult), EntropyForm::Viscous { scale, .. }) => {
                let phi = Field::from_fn(grid, |x| bump.value(t, x));
                Some((mult.apply(&phi)?, scale))
            }
            _ => None,
        };
        let mut slice = 0.0;
        let mut slice_abs = 0.0;
        let mut slice_nonlocal = 0.0;
        for (j, x) in grid.xs().enumerate() {
            let uv = u.values()[j];
            let local = (uv - k).abs() * bump.dt(t, x)
                + (uv - k).signum() * (inviscid_flux(uv, q) - fk) * bump.dx(t, x);
            slice += local;
            slice_abs += local.abs();
            if let Some((ref dphi, vs)) = dual_phi {
                let term = vs * (uv - k).abs() * dphi.values()[j];
                slice += term;
                slice_nonlocal += term;
                slice_abs += term.abs();
            }
        }
        value += slice * dx * wt;
        scale += slice_abs * dx * wt;
        nonlocal += slice_nonlocal * dx * wt;
    }
    Ok(EntropyResidual {
        value,
        scale,
        nonlocal_term: nonlocal,
    })
}

/// Kruzhkov residual of the exact N-wave (analytic profile, fine grid).
pub fn nwave_entropy_residual(
    params: &NWaveParams,
    k: f64,
    bump: &Bump,
    grid: Grid,
    time_slices: usize,
) -> Result<EntropyResidual> {
    let (t_lo, t_hi) = bump.t_support();
    let times: Vec<f64> = (0..=time_slices)
        .map(|i| t_lo + (t_hi - t_lo) * i as f64 / time_slices as f64)
        .filter(|&t| t > 0.0)
        .collect();
    entropy_residual(
        grid,
        &times,
        |t| Ok(params.sample(t, grid)),
        params.q(),
        k,
        bump,
        EntropyForm::Inviscid,
    )
}

/// A non-entropic weak solution: the expansion shock joining `left < right`
/// along the Rankine-Hugoniot line `x = s t`. Kruzhkov rejects it for any
/// `k` strictly between the states.
pub fn expansion_shock_value(left: f64, right: f64, q: f64, t: f64, x: f64) -> f64 {
    debug_assert!(left < right);
    let speed = (inviscid_flux(right, q) - inviscid_flux(left, q)) / (right - left);
    if x < speed * t {
        left
    } else {
        right
    }
}

/// Weak-form residual of the inviscid equation itself (no entropy weight):
/// `int int (U phi_t + f(U) phi_x) dx dt`, which vanishes for weak solutions.
pub fn nwave_weak_form_residual(
    params: &NWaveParams,
    bump: &Bump,
    grid: Grid,
    time_slices: usize,
) -> f64 {
    let (t_lo, t_hi) = bump.t_support();
    let dx = grid.dx();
    let mut value = 0.0;
    for i in 0..=time_slices {
        let t = t_lo + (t_hi - t_lo) * i as f64 / time_slices as f64;
        if t <= 0.0 {
            continue;
        }
        let wt = if i == 0 || i == time_slices { 0.5 } else { 1.0 }
            * (t_hi - t_lo)
            / time_slices as f64;
        let mut slice = 0.0;
        for x in grid.xs() {
            let u = params.value(t, x);
            slice += u * bump.dt(t, x) + inviscid_flux(u, params.q()) * bump.dx(t, x);
        }
        value += slice * dx * wt;
    }
    value
}

/// Trace of `int u(t) psi dx` along decreasing times with an extrapolation
/// to `t = 0`.
#[derive(Debug, Clone)]
pub struct InitialTraceReport {
    /// `(t, int u(t) psi dx)` sorted by decreasing time.
    pub samples: Vec<(f64, f64)>,
    /// Extrapolated `t -> 0` limit (Aitken on three samples, Richardson in
    /// `t^{1/q}` on two).
    pub extrapolated: f64,
    pub target: f64,
}

impl InitialTraceReport {
    pub fn distance(&self) -> f64 {
        (self.extrapolated - self.target).abs()
    }
}

/// Evaluate `int u(t) psi dx` over the supplied fields and extrapolate the
/// `t -> 0` limit; `target` is the expected trace (`M psi(0)`).
pub fn initial_trace(
    pairs: &[(f64, Field)],
    psi: &Field,
    q: f64,
    target: f64,
) -> Result<InitialTraceReport> {
    if pairs.len() < 2 {
        return Err(Error::InvalidArgument(
            "initial trace needs at least two evaluation times".into(),
        ));
    }
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    for (t, field) in pairs {
        samples.push((*t, field.inner(psi)?));
    }
    samples.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let m = samples.len();
    let extrapolated = if m >= 3 {
        // Aitken delta-squared: exact when the gap decays geometrically
        // along geometric times, whatever the power of t in the gap
        let (v_a, v_b, v_c) = (samples[m - 3].1, samples[m - 2].1, samples[m - 1].1);
        let (d1, d2) = (v_b - v_a, v_c - v_b);
        let denom = d2 - d1;
        let vscale = v_a.abs().max(v_b.abs()).max(v_c.abs()).max(1e-300);
        if denom.abs() <= 1e-12 * vscale {
            v_c
        } else {
            v_c - d2 * d2 / denom
        }
    } else {
        // gap is O(t^{1/q}) generically
        let (t1, v1) = samples[m - 2];
        let (t0, v0) = samples[m - 1];
        let (h0, h1) = (t0.powf(1.0 / q), t1.powf(1.0 / q));
        (v0 * h1 - v1 * h0) / (h1 - h0)
    };
    Ok(InitialTraceReport {
        samples,
        extrapolated,
        target,
    })
}

/// Finite-difference slope of `U^{q-1}` inside the rarefaction fan; the fan
/// saturates the Oleinik bound exactly: the slope equals `1/t`.
pub fn fan_oleinik_slope(params: &NWaveParams, t: f64, grid: Grid) -> f64 {
    let u_pow = params.sample(t, grid).map(|v| v.powf(params.q() - 1.0));
    let dx = grid.dx();
    let r = params.front(t);
    let mut worst: f64 = f64::NEG_INFINITY;
    for j in 1..grid.len() - 1 {
        let x = grid.x(j);
        if x > 2.0 * dx && x < r - 2.0 * dx {
            worst = worst.max((u_pow.values()[j + 1] - u_pow.values()[j - 1]) / (2.0 * dx));
        }
    }
    worst
}

/// The dual multiplier `conj(psi)` of a generator (appears in the viscous
/// entropy inequality applied to the test function).
pub fn dual_multiplier(spec: &OperatorSpec, grid: Grid) -> SpectralMultiplier {
    SpectralMultiplier::from_fn(grid, |xi| spec.symbol(xi).conj())
}
