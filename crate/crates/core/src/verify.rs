//! Quantitative checks of the a-priori estimates on solver trajectories:
//! mass conservation, the Oleinik inequality `t sup dx(u^{q-1}) <= 1`,
//! `L^p` decay with its printed constants, the energy budget, tail control
//! of rescaled solutions, and the scaled distance to the N-wave.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::grid::{Field, Grid};
use crate::nwave::{entropy_residual, Bump, EntropyForm, EntropyResidual, NWaveParams};
use crate::solver::Trajectory;

/// Per-snapshot measurements.
#[derive(Debug, Clone)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    /// `sup_x dx(u^{q-1})`, the Oleinik functional.
    pub oleinik_sup: f64,
    pub max_value: f64,
    /// `int_{|x|<R} |dx u| dx`.
    pub dx_l1_local: f64,
    /// `int |D^{beta/2} u|^2 dx` (spectral Plancherel sum).
    pub energy_density: f64,
    /// `int_{|y|>2R} u dy`.
    pub tail_mass: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str =
        "t,mass,l1,l2,linf,oleinik_sup,max_value,dx_l1_local,energy_density,tail_mass";

    pub fn csv_row(&self) -> String {
        [
            self.t,
            self.mass,
            self.l1,
            self.l2,
            self.linf,
            self.oleinik_sup,
            self.max_value,
            self.dx_l1_local,
            self.energy_density,
            self.tail_mass,
        ]
        .map(|v| format!("{v:.16e}"))
        .join(",")
    }
}

/// Spectral derivative with the 2/3 de-aliasing mask.
fn spectral_derivative_dealiased(f: &Field) -> Result<Field> {
    let grid = f.grid();
    let cutoff = (grid.len() / 3) as i64;
    let spec: Vec<Complex64> = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if grid.mode(i).abs() > cutoff {
                Complex64::new(0.0, 0.0)
            } else {
                c * Complex64::new(0.0, grid.freq(i))
            }
        })
        .collect();
    Field::from_spectrum(grid, &spec)
}

/// `sup_x dx(u^{q-1})` by spectral differentiation of the power.
pub fn oleinik_sup(u: &Field, q: f64) -> Result<f64> {
    let powed = u.map(|v| v.max(0.0).powf(q - 1.0));
    Ok(spectral_derivative_dealiased(&powed)?.max())
}

/// `int |D^{beta/2} u|^2 dx` through the frequency-space sum.
pub fn energy_density(u: &Field, beta: f64) -> f64 {
    let grid = u.grid();
    let dxi = std::f64::consts::PI / grid.half_width();
    u.spectrum()
        .iter()
        .enumerate()
        .map(|(i, c)| grid.freq(i).abs().powf(beta) * c.norm_sqr())
        .sum::<f64>()
        * dxi
        / (2.0 * std::f64::consts::PI)
}

/// True energy dissipation rate `-c int u D[u] dx` of the run's generator
/// (the Plancherel form, `cos(gamma pi/2)` included).
pub fn dissipation_rate(u: &Field, traj: &Trajectory) -> f64 {
    let spec = traj.config.spec;
    let gamma = spec.skewness().expect("generator has a skewness");
    traj.config.diffusion_scale
        * (gamma * std::f64::consts::FRAC_PI_2).cos()
        * energy_density(u, spec.order())
}

/// Measure every estimate at the requested snapshot times.
pub fn diagnose(traj: &Trajectory, times: &[f64], r: f64) -> Result<Vec<DiagnosticsRecord>> {
    let grid = traj.config.grid;
    if !(r > 0.0) || 2.0 * r >= grid.half_width() {
        return Err(Error::InvalidArgument(format!(
            "tail radius must satisfy 0 < 2R < L, got R = {r}"
        )));
    }
    let beta = traj.config.spec.order();
    let dx = grid.dx();
    let mut records = Vec::with_capacity(times.len());
    for &t in times {
        let snap = traj
            .snapshot_at(t)
            .ok_or_else(|| Error::InvalidArgument(format!("{t} is not a snapshot time")))?;
        let u = &snap.field;
        let du = spectral_derivative_dealiased(u)?;
        let mut dx_l1_local = 0.0;
        let mut tail_mass = 0.0;
        for (j, x) in grid.xs().enumerate() {
            if x.abs() < r {
                dx_l1_local += du.values()[j].abs();
            }
            if x.abs() > 2.0 * r {
                tail_mass += u.values()[j];
            }
        }
        records.push(DiagnosticsRecord {
            t,
            mass: u.mass(),
            l1: u.lp_norm(1.0),
            l2: u.lp_norm(2.0),
            linf: u.lp_norm(f64::INFINITY),
            oleinik_sup: oleinik_sup(u, traj.config.q)?,
            max_value: u.max(),
            dx_l1_local: dx_l1_local * dx,
            energy_density: energy_density(u, beta),
            tail_mass: tail_mass * dx,
        });
    }
    Ok(records)
}

/// Worst `t * sup_x dx(u^{q-1})` over snapshots with `t >= t_min`;
/// the Oleinik inequality asks for `<= 1`.
pub fn oleinik_check(traj: &Trajectory, t_min: f64) -> Result<f64> {
    if !(traj.config.epsilon > 0.0) {
        return Err(Error::InvalidArgument(
            "the Oleinik functional needs an epsilon-shifted (strictly positive) run".into(),
        ));
    }
    let mut worst: f64 = f64::NEG_INFINITY;
    for s in &traj.snapshots {
        if s.t >= t_min {
            worst = worst.max(s.t * oleinik_sup(&s.field, traj.config.q)?);
        }
    }
    if worst.is_infinite() {
        return Err(Error::InvalidArgument(format!(
            "no snapshots at t >= {t_min}"
        )));
    }
    Ok(worst)
}

/// The decay-law constant of the `L^p` bound:
/// `(q/(q-1))^{(p-1)/(pq)} M^{(p-1)/(pq) + 1/p}`.
pub fn lp_bound_constant(q: f64, mass: f64, p: f64) -> f64 {
    let a = if p.is_infinite() {
        1.0 / q
    } else {
        (p - 1.0) / (p * q)
    };
    let b = if p.is_infinite() { 0.0 } else { 1.0 / p };
    (q / (q - 1.0)).powf(a) * mass.powf(a + b)
}

/// Decay-law exponent `-(1/q)(1 - 1/p)`.
pub fn lp_bound_slope(q: f64, p: f64) -> f64 {
    -(1.0 - if p.is_infinite() { 0.0 } else { 1.0 / p }) / q
}

#[derive(Debug, Clone)]
pub struct DecayCheck {
    pub p: f64,
    /// Worst `||u(t)||_p / bound(t)` over all snapshots (must stay <= 1).
    pub worst_bound_ratio: f64,
    /// Fitted slope of `log ||u||_p` over the last decade of snapshots.
    pub fitted_slope: f64,
    pub bound_slope: f64,
}

/// Check the hard `L^p` bounds and fit the late-time decay rate per `p`.
pub fn decay_exponents(traj: &Trajectory, p_list: &[f64]) -> Result<Vec<DecayCheck>> {
    let times = traj.times();
    let (t_min, t_max) = match (times.first(), times.last()) {
        (Some(&a), Some(&b)) if b / a >= 10.0 - 1e-9 => (a, b),
        _ => {
            return Err(Error::InvalidArgument(
                "decay fit needs snapshots spanning at least a decade".into(),
            ))
        }
    };
    let _ = t_min;
    let q = traj.config.q;
    let mass = traj.initial_mass;
    let mut out = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let constant = lp_bound_constant(q, mass, p);
        let slope = lp_bound_slope(q, p);
        let mut worst: f64 = 0.0;
        let mut late: Vec<(f64, f64)> = Vec::new();
        for s in &traj.snapshots {
            let norm = s.field.lp_norm(p);
            worst = worst.max(norm / (constant * s.t.powf(slope)));
            if s.t >= t_max / 10.0 * (1.0 - 1e-9) {
                late.push((s.t, norm));
            }
        }
        out.push(DecayCheck {
            p,
            worst_bound_ratio: worst,
            fitted_slope: log_log_slope(&late),
            bound_slope: slope,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct EnergyBudget {
    /// Time-quadrature of `int |D^{beta/2} u|^2 dx` over `[tau, T]`.
    pub lhs: f64,
    /// `(1/2) (q/(q-1))^{1/q} tau^{-1/q} M^{(q+1)/q}`.
    pub rhs: f64,
}

/// Integrate the energy density over `[tau, T]` (trapezoid on the snapshots
/// inside) and compare with the printed budget.
pub fn energy_budget(traj: &Trajectory, tau: f64, t_end: f64) -> Result<EnergyBudget> {
    if !(tau > 0.0 && tau < t_end) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < tau < T, got tau = {tau}, T = {t_end}"
        )));
    }
    let beta = traj.config.spec.order();
    let nodes: Vec<(f64, f64)> = traj
        .snapshots
        .iter()
        .filter(|s| s.t >= tau - 1e-12 && s.t <= t_end + 1e-12)
        .map(|s| (s.t, energy_density(&s.field, beta)))
        .collect();
    if nodes.len() < 2 {
        return Err(Error::InvalidArgument(
            "energy budget needs at least two snapshots in [tau, T]".into(),
        ));
    }
    let mut lhs = 0.0;
    for w in nodes.windows(2) {
        lhs += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
    }
    let q = traj.config.q;
    let rhs = 0.5
        * (q / (q - 1.0)).powf(1.0 / q)
        * tau.powf(-1.0 / q)
        * traj.initial_mass.powf((q + 1.0) / q);
    Ok(EnergyBudget { lhs, rhs })
}

/// Relative residual of the instantaneous energy identity
/// `d/dt (1/2 ||u||^2) + dissipation = 0` at the interior snapshot index
/// `i`, by centred differences over the neighbouring snapshots.
pub fn energy_identity_residual(traj: &Trajectory, i: usize) -> Result<f64> {
    if i == 0 || i + 1 >= traj.snapshots.len() {
        return Err(Error::InvalidArgument(
            "energy identity needs an interior snapshot index".into(),
        ));
    }
    let half_l2_sq = |f: &Field| 0.5 * f.lp_norm(2.0).powi(2);
    let (prev, here, next) = (
        &traj.snapshots[i - 1],
        &traj.snapshots[i],
        &traj.snapshots[i + 1],
    );
    let de = (half_l2_sq(&next.field) - half_l2_sq(&prev.field)) / (next.t - prev.t);
    let dissipation = dissipation_rate(&here.field, traj);
    Ok((de + dissipation).abs() / dissipation.abs().max(f64::MIN_POSITIVE))
}

/// Frozen structural constant of the tail-control bound, calibrated once on
/// the reference rescaled run (q = 1.3, alpha = 0.5, Gaussian mass 1,
/// lambda = 2, R = 10) and kept fixed since.
pub const TAIL_CONTROL_CONSTANT: f64 = 1.1;

#[derive(Debug, Clone)]
pub struct TailControl {
    /// `(s, measured tail, structural bound)` per snapshot.
    pub samples: Vec<(f64, f64, f64)>,
    /// `int_{|y|>R} u_lambda(0, y) dy`, the initial-tail offset of the bound.
    pub initial_tail: f64,
}

impl TailControl {
    pub fn pass(&self) -> bool {
        self.samples.iter().all(|(_, m, b)| m <= b)
    }
}

/// Measured tail mass `int_{|y|>2R} u_lambda(s) dy` against
/// `initial_tail + C (s lambda^{q-1-alpha} / R^{1+alpha} + s^{1/q} / R)`.
pub fn tail_control(traj: &Trajectory, r: f64, lambda: f64) -> Result<TailControl> {
    let grid = traj.config.grid;
    if !(r > 0.0) || 2.0 * r >= grid.half_width() {
        return Err(Error::InvalidArgument(format!(
            "tail radius must satisfy 0 < 2R < L, got R = {r}"
        )));
    }
    let dx = grid.dx();
    let tail_beyond = |f: &Field, radius: f64| -> f64 {
        grid.xs()
            .enumerate()
            .filter(|(_, x)| x.abs() > radius)
            .map(|(j, _)| f.values()[j])
            .sum::<f64>()
            * dx
    };
    let initial_tail = tail_beyond(&traj.initial, r);
    let q = traj.config.q;
    let beta = traj.config.spec.order();
    let zoom = lambda.powf(q - beta);
    let samples = traj
        .snapshots
        .iter()
        .map(|s| {
            let measured = tail_beyond(&s.field, 2.0 * r);
            let bound = initial_tail
                + TAIL_CONTROL_CONSTANT
                    * (s.t * zoom / r.powf(beta) + s.t.powf(1.0 / q) / r);
            (s.t, measured, bound)
        })
        .collect();
    Ok(TailControl {
        samples,
        initial_tail,
    })
}

/// Scaled `L^p` distance to the N-wave:
/// `d_p(t) = t^{(1/q)(1-1/p)} ||u(t) - U_M(t)||_p`, with the profile
/// sampled by exact cell averages.
pub fn asymptotic_distance(u: &Field, t: f64, p: f64, params: &NWaveParams) -> Result<f64> {
    if (u.mass() - params.mass()).abs() > 1e-6 * params.mass() {
        return Err(Error::InvalidArgument(format!(
            "field mass {} does not match the reference mass {}",
            u.mass(),
            params.mass()
        )));
    }
    let reference = params.sample_cell_averaged(t, u.grid());
    let dist = u.lin_comb(1.0, &reference, -1.0)?.lp_norm(p);
    Ok(t.powf((1.0 / params.q()) * (1.0 - 1.0 / p)) * dist)
}

/// Kruzhkov residual machinery applied to a trajectory: the quadrature times
/// are the stored snapshot times.
pub fn trajectory_entropy_residual(
    traj: &Trajectory,
    k: f64,
    bump: &Bump,
    form: EntropyForm,
) -> Result<EntropyResidual> {
    let times = traj.times();
    entropy_residual(
        traj.config.grid,
        &times,
        |t| {
            traj.snapshot_at(t)
                .map(|s| s.field.clone())
                .ok_or_else(|| Error::InvalidArgument(format!("missing snapshot at {t}")))
        },
        traj.config.q,
        k,
        bump,
        form,
    )
}

/// `L^1` distance between a rescaled-run snapshot `u_lambda(s, .)` and the
/// zoomed fine-run field `lambda u(lambda^q s, lambda y)`, over the window
/// `|y| <= 0.98 L / lambda` (the zoom must stay inside the box).
pub fn rescale_consistency_l1(
    scaled_field: &Field,
    fine_field: &Field,
    lambda: f64,
) -> Result<f64> {
    scaled_field.check_same_grid(fine_field)?;
    let grid = scaled_field.grid();
    let window = 0.98 * grid.half_width() / lambda;
    let dx = grid.dx();
    let mut acc = 0.0;
    for (j, y) in grid.xs().enumerate() {
        if y.abs() <= window {
            let zoomed = lambda * fine_field.interp(lambda * y);
            acc += (scaled_field.values()[j] - zoomed).abs();
        }
    }
    Ok(acc * dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::OperatorSpec;
    use crate::solver::{solve, InitialData, SolverConfig};

    fn small_traj(epsilon: f64) -> Trajectory {
        let grid = Grid::new(1 << 11, 50.0).unwrap();
        let mut config =
            SolverConfig::new(1.3, OperatorSpec::dx_weyl_marchaud(0.5).unwrap(), grid, 5e-3, 4.0)
                .unwrap();
        config.epsilon = epsilon;
        let u0 = InitialData::Gaussian { mass: 1.0, width: 1.0, center: 0.0 }
            .sample(grid)
            .unwrap();
        solve(&u0, &config, &[0.25, 0.5, 1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn diagnostics_on_a_constant_field() {
        let grid = Grid::new(512, 10.0).unwrap();
        let c = 0.8;
        let f = Field::from_fn(grid, |_| c);
        assert!(oleinik_sup(&f, 1.5).unwrap().abs() < 1e-12);
        assert!((f.lp_norm(1.0) - c * 20.0).abs() < 1e-10);
        assert!((f.lp_norm(2.0) - c * 20f64.sqrt()).abs() < 1e-10);
        assert!((f.lp_norm(f64::INFINITY) - c).abs() < 1e-15);
    }

    #[test]
    fn diagnostics_records_mass_and_upper_bound() {
        let traj = small_traj(0.0);
        let recs = diagnose(&traj, &[0.5, 1.0, 2.0, 4.0], 10.0).unwrap();
        for r in &recs {
            assert!((r.mass - 1.0).abs() < 1e-8, "t = {}: mass {}", r.t, r.mass);
            // Lemma-style upper bound with the printed constant
            let bound = lp_bound_constant(1.3, 1.0, f64::INFINITY) * r.t.powf(-1.0 / 1.3);
            assert!(r.max_value <= bound, "t = {}: {} > {}", r.t, r.max_value, bound);
            assert!(r.energy_density > 0.0);
            assert!(r.tail_mass >= -1e-12);
        }
    }

    #[test]
    fn diagnostics_are_translation_invariant() {
        let grid = Grid::new(1 << 10, 40.0).unwrap();
        let f = Field::from_fn(grid, |x| (-(x * x) / 2.0).exp() + 0.01);
        let g = f.shifted(77);
        assert!((oleinik_sup(&f, 1.3).unwrap() - oleinik_sup(&g, 1.3).unwrap()).abs() < 1e-10);
        assert!((energy_density(&f, 1.5) - energy_density(&g, 1.5)).abs() < 1e-10);
        for p in [1.0, 2.0, f64::INFINITY] {
            assert!((f.lp_norm(p) - g.lp_norm(p)).abs() < 1e-10);
        }
    }

    #[test]
    fn oleinik_check_requires_shift_and_stays_below_one() {
        let traj = small_traj(0.0);
        assert!(oleinik_check(&traj, 1.0).is_err());
        let traj = small_traj(1e-2);
        let ratio = oleinik_check(&traj, 1.0).unwrap();
        assert!(ratio <= 1.01, "worst t * sup = {ratio}");
        assert!(ratio > 0.0);
    }

    #[test]
    fn decay_checks_hold_on_short_run() {
        let traj = small_traj(0.0);
        let checks = decay_exponents(&traj, &[1.0, 2.0, f64::INFINITY]).unwrap();
        for c in &checks {
            assert!(c.worst_bound_ratio <= 1.0, "p = {}: ratio {}", c.p, c.worst_bound_ratio);
        }
        // p = 1 is flat: mass conservation
        assert!(checks[0].fitted_slope.abs() < 1e-6);
        assert!((checks[0].bound_slope).abs() < 1e-15);
    }

    #[test]
    fn decay_needs_a_decade() {
        let grid = Grid::new(1 << 10, 50.0).unwrap();
        let config =
            SolverConfig::new(1.3, OperatorSpec::dx_weyl_marchaud(0.5).unwrap(), grid, 1e-2, 2.0)
                .unwrap();
        let u0 = InitialData::Gaussian { mass: 1.0, width: 1.0, center: 0.0 }
            .sample(grid)
            .unwrap();
        let traj = solve(&u0, &config, &[1.0, 2.0]).unwrap();
        assert!(decay_exponents(&traj, &[1.0]).is_err());
    }

    #[test]
    fn energy_identity_on_linear_run() {
        let grid = Grid::new(1 << 11, 50.0).unwrap();
        let mut config =
            SolverConfig::new(1.3, OperatorSpec::dx_weyl_marchaud(0.5).unwrap(), grid, 1e-3, 1.2)
                .unwrap();
        config.linear = true;
        let u0 = InitialData::Gaussian { mass: 1.0, width: 1.0, center: 0.0 }
            .sample(grid)
            .unwrap();
        let times: Vec<f64> = (1..=24).map(|i| 0.05 * i as f64).collect();
        let traj = solve(&u0, &config, &times).unwrap();
        let r = energy_identity_residual(&traj, 12).unwrap();
        assert!(r <= 1e-4, "identity residual {r}");
    }

    #[test]
    fn energy_budget_respects_printed_bound() {
        let traj = small_traj(0.0);
        let budget = energy_budget(&traj, 0.5, 4.0).unwrap();
        assert!(budget.lhs > 0.0);
        assert!(budget.lhs <= budget.rhs * 1.01, "{budget:?}");
        assert!(energy_budget(&traj, 4.0, 0.5).is_err());
    }

    #[test]
    fn tail_control_bound_holds() {
        let traj = small_traj(0.0);
        let tc = tail_control(&traj, 10.0, 1.0).unwrap();
        assert!(tc.pass(), "{:?}", tc.samples);
        assert!(tail_control(&traj, 30.0, 1.0).is_err());
    }

    #[test]
    fn asymptotic_distance_vanishes_on_the_profile_itself() {
        let params = NWaveParams::new(1.0, 1.3).unwrap();
        let grid = Grid::new(1 << 12, 50.0).unwrap();
        let u = params.sample_cell_averaged(2.0, grid);
        let d = asymptotic_distance(&u, 2.0, 1.0, &params).unwrap();
        assert!(d < 1e-12, "distance {d}");
        // mass mismatch is refused
        let half = u.map(|v| 0.5 * v);
        assert!(asymptotic_distance(&half, 2.0, 1.0, &params).is_err());
    }

    #[test]
    fn rescale_consistency_at_lambda_one_is_zero() {
        let grid = Grid::new(1 << 10, 30.0).unwrap();
        let f = Field::from_fn(grid, |x| (-x * x).exp());
        let d = rescale_consistency_l1(&f, &f, 1.0).unwrap();
        assert!(d < 1e-12);
    }
}
