//! Pseudo-spectral exponential time-differencing solver for
//! `du/dt + |u|^{q-1} u_x = c D[u]`.
//!
//! The linear multiplier is integrated exactly through `exp(t psi)` while
//! the flux divergence is treated explicitly through the phi functions:
//! with `z = dt c psi(xi)` and `N(u) = -i xi F(flux(u))`,
//!
//! ```text
//!   etd1:  u+ = e^z u_hat + dt phi1(z) N(u)
//!   etd2:  a  = e^z u_hat + dt phi1(z) N(u),
//!          u+ = a + dt phi2(z) (N(a) - N(u))        (Cox-Matthews corrector)
//! ```
//!
//! The zero mode is pinned by `e^0 = 1` and the `i xi` factor in `N`, so
//! discrete mass is conserved bitwise. The nonlinear product is formed
//! pointwise and optionally de-aliased by the 2/3 rule; non-integer flux
//! powers generate broadband spectra, so the rule is on by default.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::ops::OperatorSpec;

/// `f(v) = |v|^{q-1} v / q`, or its regularisation
/// `f_delta(v) = (delta^2 + v^2)^{(q-1)/2} (v + delta) / q` for `delta > 0`.
pub fn flux(v: f64, q: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        v.abs().powf(q - 1.0) * v / q
    } else {
        (delta * delta + v * v).powf(0.5 * (q - 1.0)) * (v + delta) / q
    }
}

/// `phi1(z) = (e^z - 1)/z`, stable near zero via its Taylor series.
pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-2 {
        // sum_{k>=0} z^k / (k+1)!
        let mut term = Complex64::new(1.0, 0.0);
        let mut acc = term;
        for k in 1..=8 {
            term = term * z / (k as f64 + 1.0);
            acc += term;
        }
        acc
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `phi2(z) = (e^z - 1 - z)/z^2`, stable near zero via its Taylor series.
pub fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < 1e-2 {
        // sum_{k>=0} z^k / (k+2)!
        let mut term = Complex64::new(0.5, 0.0);
        let mut acc = term;
        for k in 1..=8 {
            term = term * z / (k as f64 + 2.0);
            acc += term;
        }
        acc
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Etd1,
    Etd2,
}

/// Nonnegative initial-data presets with exactly prescribed discrete mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    Gaussian { mass: f64, width: f64, center: f64 },
    BoxProfile { mass: f64, width: f64, center: f64 },
}

impl InitialData {
    pub fn mass(&self) -> f64 {
        match *self {
            InitialData::Gaussian { mass, .. } | InitialData::BoxProfile { mass, .. } => mass,
        }
    }

    /// The member of the family representing `lambda u0(lambda y)`.
    pub fn rescaled(&self, lambda: f64) -> InitialData {
        match *self {
            InitialData::Gaussian { mass, width, center } => InitialData::Gaussian {
                mass,
                width: width / lambda,
                center: center / lambda,
            },
            InitialData::BoxProfile { mass, width, center } => InitialData::BoxProfile {
                mass,
                width: width / lambda,
                center: center / lambda,
            },
        }
    }

    pub fn sample(&self, grid: Grid) -> Result<Field> {
        let raw = match *self {
            InitialData::Gaussian { mass, width, center } => {
                if !(mass > 0.0 && width > 0.0) {
                    return Err(Error::InvalidArgument(
                        "gaussian preset needs positive mass and width".into(),
                    ));
                }
                let amp = mass / (width * std::f64::consts::PI.sqrt());
                Field::from_fn(grid, |x| {
                    let s = (x - center) / width;
                    amp * (-s * s).exp()
                })
            }
            InitialData::BoxProfile { mass, width, center } => {
                if !(mass > 0.0 && width > 0.0) {
                    return Err(Error::InvalidArgument(
                        "box preset needs positive mass and width".into(),
                    ));
                }
                let height = mass / width;
                Field::from_fn(grid, |x| {
                    if (x - center).abs() <= 0.5 * width {
                        height
                    } else {
                        0.0
                    }
                })
            }
        };
        let m = raw.mass();
        if !(m > 0.0) {
            return Err(Error::InvalidArgument(
                "initial data has no mass on this grid".into(),
            ));
        }
        Ok(raw.map(|v| v * self.mass() / m))
    }
}

/// Full run specification.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub q: f64,
    pub spec: OperatorSpec,
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    /// Flux regularisation parameter (0 disables).
    pub delta: f64,
    /// Initial-data shift (0 disables).
    pub epsilon: f64,
    /// Multiplier on the nonlocal term (`lambda^{q-beta}` for rescaled runs).
    pub diffusion_scale: f64,
    /// Force the flux to zero (the linear semigroup problem).
    pub linear: bool,
}

impl SolverConfig {
    pub fn new(q: f64, spec: OperatorSpec, grid: Grid, dt: f64, t_end: f64) -> Result<Self> {
        let config = Self {
            q,
            spec,
            grid,
            dt,
            t_end,
            scheme: Scheme::Etd2,
            dealias: true,
            delta: 0.0,
            epsilon: 0.0,
            diffusion_scale: 1.0,
            linear: false,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "flux exponent must satisfy q > 1, got {}",
                self.q
            )));
        }
        if !self.spec.is_dissipative_generator() {
            return Err(Error::InvalidSpec(format!(
                "evolution needs a dissipative generator, got {:?}",
                self.spec
            )));
        }
        if !(self.dt > 0.0 && self.t_end > 0.0 && self.dt <= self.t_end) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < dt <= t_end, got dt = {}, t_end = {}",
                self.dt, self.t_end
            )));
        }
        if self.delta < 0.0 || self.epsilon < 0.0 || !(self.diffusion_scale > 0.0) {
            return Err(Error::InvalidArgument(
                "delta, epsilon must be >= 0 and diffusion_scale > 0".into(),
            ));
        }
        Ok(())
    }

    /// Subcritical regime `1 < q < beta`: transport dominates after rescaling.
    pub fn is_subcritical(&self) -> bool {
        self.q < self.spec.order()
    }

    /// Advective CFL bound `0.5 dx / max|u|^{q-1}` for the explicit flux.
    pub fn cfl_dt(&self, u0: &Field) -> f64 {
        let umax = u0.lp_norm(f64::INFINITY);
        if umax == 0.0 {
            f64::INFINITY
        } else {
            0.5 * self.grid.dx() / umax.powf(self.q - 1.0)
        }
    }
}

/// One stored time slice of a run.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub field: Field,
}

/// The time-indexed output of a run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub initial: Field,
    pub initial_mass: f64,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Largest relative mass drift over the stored snapshots.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.initial_mass;
        self.snapshots
            .iter()
            .map(|s| (s.field.mass() - m0).abs())
            .fold(0.0, f64::max)
            / m0.abs().max(f64::MIN_POSITIVE)
    }
}

struct Stepper {
    config: SolverConfig,
    exp_z: Vec<Complex64>,
    dt_phi1: Vec<Complex64>,
    dt_phi2: Vec<Complex64>,
    neg_i_xi: Vec<Complex64>,
    keep: Vec<bool>,
}

impl Stepper {
    fn new(config: &SolverConfig) -> Self {
        let grid = config.grid;
        let n = grid.len();
        let mut exp_z = Vec::with_capacity(n);
        let mut dt_phi1 = Vec::with_capacity(n);
        let mut dt_phi2 = Vec::with_capacity(n);
        let mut neg_i_xi = Vec::with_capacity(n);
        let mut keep = Vec::with_capacity(n);
        let cutoff = (n / 3) as i64;
        for i in 0..n {
            let xi = grid.freq(i);
            let z = config.spec.symbol(xi) * config.diffusion_scale * config.dt;
            exp_z.push(z.exp());
            dt_phi1.push(phi1(z) * config.dt);
            dt_phi2.push(phi2(z) * config.dt);
            neg_i_xi.push(Complex64::new(0.0, -xi));
            keep.push(!config.dealias || grid.mode(i).abs() <= cutoff);
        }
        Self {
            config: *config,
            exp_z,
            dt_phi1,
            dt_phi2,
            neg_i_xi,
            keep,
        }
    }

    /// `N(u) = -i xi F(flux(u))` from the spectral state; also reports
    /// `max |u|` for blow-up detection.
    fn nonlinear(&self, state: &[Complex64]) -> Result<(Vec<Complex64>, f64)> {
        let grid = self.config.grid;
        let (values, _) = grid.idft(state);
        let mut umax: f64 = 0.0;
        let fluxed: Vec<f64> = values
            .iter()
            .map(|&v| {
                umax = umax.max(v.abs());
                flux(v, self.config.q, self.config.delta)
            })
            .collect();
        if !umax.is_finite() {
            return Err(Error::InvalidArgument("non-finite state".into()));
        }
        let mut what = grid.dft(&fluxed);
        for (i, w) in what.iter_mut().enumerate() {
            *w = if self.keep[i] {
                *w * self.neg_i_xi[i]
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        Ok((what, umax))
    }

    fn advance(&self, state: &mut Vec<Complex64>) -> Result<()> {
        if self.config.linear {
            for i in 0..state.len() {
                state[i] *= self.exp_z[i];
            }
            return Ok(());
        }
        let (n_u, _) = self.nonlinear(state)?;
        match self.config.scheme {
            Scheme::Etd1 => {
                for i in 0..state.len() {
                    state[i] = self.exp_z[i] * state[i] + self.dt_phi1[i] * n_u[i];
                }
            }
            Scheme::Etd2 => {
                let mut predictor = vec![Complex64::new(0.0, 0.0); state.len()];
                for i in 0..state.len() {
                    predictor[i] = self.exp_z[i] * state[i] + self.dt_phi1[i] * n_u[i];
                }
                let (n_a, _) = self.nonlinear(&predictor)?;
                for i in 0..state.len() {
                    state[i] = predictor[i] + self.dt_phi2[i] * (n_a[i] - n_u[i]);
                }
            }
        }
        Ok(())
    }
}

/// Advance a field by one time step of the configured scheme.
pub fn step(state: &Field, config: &SolverConfig) -> Result<Field> {
    config.validate()?;
    if state.grid() != config.grid {
        return Err(Error::GridMismatch("state grid differs from config".into()));
    }
    let stepper = Stepper::new(config);
    let mut spectral = state.spectrum().to_vec();
    stepper.advance(&mut spectral)?;
    Field::from_spectrum(config.grid, &spectral)
}

fn check_snapshot_times(times: &[f64], config: &SolverConfig) -> Result<Vec<usize>> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("no snapshot times requested".into()));
    }
    let mut steps = Vec::with_capacity(times.len());
    let mut prev = 0usize;
    for &t in times {
        if !(t > 0.0 && t <= config.t_end * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!(
                "snapshot time {t} outside (0, t_end]"
            )));
        }
        let k = (t / config.dt).round() as usize;
        if k == 0 || ((k as f64) * config.dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "snapshot time {t} is not a multiple of dt = {}",
                config.dt
            )));
        }
        if k <= prev && steps.len() > 0 {
            return Err(Error::InvalidArgument(
                "snapshot times must be strictly increasing".into(),
            ));
        }
        steps.push(k);
        prev = k;
    }
    Ok(steps)
}

/// Evolve `u0` (plus the configured epsilon shift), capturing the requested
/// snapshot times. Each snapshot time must be a whole number of steps.
pub fn solve(u0: &Field, config: &SolverConfig, snapshot_times: &[f64]) -> Result<Trajectory> {
    config.validate()?;
    if u0.grid() != config.grid {
        return Err(Error::GridMismatch("u0 grid differs from config".into()));
    }
    let initial = if config.epsilon > 0.0 {
        u0.map(|v| v + config.epsilon)
    } else {
        u0.clone()
    };
    let cfl = config.cfl_dt(&initial);
    if config.dt > cfl {
        return Err(Error::InvalidArgument(format!(
            "dt = {} exceeds the advective stability bound {:.3e}",
            config.dt, cfl
        )));
    }
    let step_targets = check_snapshot_times(snapshot_times, config)?;
    let stepper = Stepper::new(config);
    let initial_mass = initial.mass();

    let mut state = initial.spectrum().to_vec();
    let mut snapshots = Vec::with_capacity(step_targets.len());
    let mut done = 0usize;
    for (&target, &t_req) in step_targets.iter().zip(snapshot_times) {
        while done < target {
            stepper.advance(&mut state).map_err(|e| match e {
                Error::InvalidArgument(_) => Error::Blowup {
                    step: done + 1,
                    t: (done + 1) as f64 * config.dt,
                    what: "non-finite state".into(),
                },
                other => other,
            })?;
            done += 1;
        }
        let field = Field::from_spectrum(config.grid, &state)?;
        if field.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Blowup {
                step: done,
                t: t_req,
                what: "non-finite snapshot".into(),
            });
        }
        snapshots.push(Snapshot { t: t_req, field });
    }
    Ok(Trajectory {
        config: *config,
        initial,
        initial_mass,
        snapshots,
    })
}

/// Solve the rescaled problem for zoom factor `lambda >= 1`: initial data
/// `lambda u0(lambda y)` and nonlocal term scaled by `lambda^{q - beta}`.
pub fn solve_rescaled(
    data: &InitialData,
    config: &SolverConfig,
    lambda: f64,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    if !(lambda >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "zoom factor must satisfy lambda >= 1, got {lambda}"
        )));
    }
    let mut scaled_config = *config;
    scaled_config.diffusion_scale =
        config.diffusion_scale * lambda.powf(config.q - config.spec.order());
    let u0 = data.rescaled(lambda).sample(config.grid)?;
    // resolvedness: the zoomed data must not push energy past the dealias cut
    let spec = u0.spectrum();
    let peak = spec.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let cutoff = (config.grid.len() / 3) as i64;
    let tail = spec
        .iter()
        .enumerate()
        .filter(|(i, _)| config.grid.mode(*i).abs() > cutoff)
        .map(|(_, c)| c.norm())
        .fold(0.0f64, f64::max);
    if tail > 1e-8 * peak {
        return Err(Error::Unresolved(format!(
            "rescaled data (lambda = {lambda}) is not resolved on this grid"
        )));
    }
    solve(&u0, &scaled_config, snapshot_times)
}

/// Sup-norm residual of the mild (Duhamel) formulation at snapshot time `t`:
///
/// ```text
///   u(t) - K(t) * u0 + int_0^t dx K(t-s) * f(u(s)) ds
/// ```
///
/// with the time integral by trapezoid over the stored snapshots up to `t`
/// (the initial field counts as the `s = 0` node).
pub fn mild_residual(traj: &Trajectory, t: f64) -> Result<f64> {
    let config = &traj.config;
    let grid = config.grid;
    let target = traj
        .snapshot_at(t)
        .ok_or_else(|| Error::InvalidArgument(format!("{t} is not a snapshot time")))?;
    let mut nodes: Vec<(f64, &Field)> = vec![(0.0, &traj.initial)];
    for s in &traj.snapshots {
        if s.t < t - 1e-12 {
            nodes.push((s.t, &s.field));
        }
    }
    nodes.push((target.t, &target.field));
    if nodes.len() < 9 {
        return Err(Error::InvalidArgument(format!(
            "mild residual needs at least 8 snapshots before t, got {}",
            nodes.len() - 1
        )));
    }

    let n = grid.len();
    let cutoff = (n / 3) as i64;
    let mut duhamel = vec![Complex64::new(0.0, 0.0); n];
    if !config.linear {
        for (i, &(s, field)) in nodes.iter().enumerate() {
            let left = if i > 0 { nodes[i - 1].0 } else { s };
            let right = if i + 1 < nodes.len() { nodes[i + 1].0 } else { s };
            let w = 0.5 * (right - left);
            let fluxed = field.map(|v| flux(v, config.q, config.delta));
            let what = fluxed.spectrum();
            for k in 0..n {
                if config.dealias && grid.mode(k).abs() > cutoff {
                    continue;
                }
                let xi = grid.freq(k);
                let propagator =
                    (config.spec.symbol(xi) * config.diffusion_scale * (t - s)).exp();
                duhamel[k] += what[k] * Complex64::new(0.0, xi) * propagator * w;
            }
        }
    }

    let mut residual = vec![Complex64::new(0.0, 0.0); n];
    let u0_hat = traj.initial.spectrum();
    let ut_hat = target.field.spectrum();
    for k in 0..n {
        let xi = grid.freq(k);
        let propagator = (config.spec.symbol(xi) * config.diffusion_scale * t).exp();
        residual[k] = ut_hat[k] - propagator * u0_hat[k] + duhamel[k];
    }
    Ok(Field::from_spectrum(grid, &residual)?.lp_norm(f64::INFINITY))
}
