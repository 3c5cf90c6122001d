//! Arrival-time statistics assembled from a recorded run.
//!
//! The operative density comes from the unitary reference trajectory: the
//! outward current through the detector boundary, read per snapshot. The
//! same number is recovered a second way as the negative slope of the
//! complement probability, and the two series agreeing at second order is
//! the main self-test of a run. The restricted evolution enters as a
//! diagnostic: its survival must shed norm at the same initial rate as the
//! projected unitary run, and the later-time discrepancy between the two
//! is reported, not asserted.
//!
//! The hazard form rewrites the density as w(t) exp(-int_0^t w), with
//! w = density / survival. The reconstruction only makes sense while the
//! survival is appreciable, so the record carries an explicit validity
//! window cut at a survival floor.

use std::io::{self, Write};

use crate::dynamics::{evolve, PropagatorConfig, Trajectory};
use crate::error::{Error, Result};
use crate::grid::Region;
use crate::observables::{boundary_flux, interface_flux, region_probability};
use crate::operators::OperatorMatrix;
use crate::sig17;
use crate::states::WaveFunction;

/// Survival below this fraction leaves too little mass for the hazard
/// quotient to be well conditioned.
pub const DEFAULT_HAZARD_FLOOR: f64 = 0.05;

/// Time series of arrival statistics on the recording mesh.
#[derive(Debug, Clone)]
pub struct ArrivalRecord {
    pub times: Vec<f64>,
    /// Outward boundary current per snapshot.
    pub density_flux: Vec<f64>,
    /// Negative slope of the survival series, central differences.
    pub density_norm: Vec<f64>,
    /// Trapezoid integral of the flux density up to each time.
    pub cumulative: Vec<f64>,
    /// Complement probability per snapshot.
    pub survival: Vec<f64>,
    /// density_flux / survival inside the validity window, 0 outside.
    pub hazard: Vec<f64>,
    pub pos_part: Vec<f64>,
    pub neg_part: Vec<f64>,
    /// Entries are usable while the survival stays at or above the floor.
    pub valid_window: Vec<bool>,
    pub p_floor: f64,
}

impl ArrivalRecord {
    pub fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(
            w,
            "t,density_flux,density_norm,cumulative,hazard,pos_part,neg_part,valid_window"
        )?;
        for k in 0..self.times.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                sig17(self.times[k]),
                sig17(self.density_flux[k]),
                sig17(self.density_norm[k]),
                sig17(self.cumulative[k]),
                sig17(self.hazard[k]),
                sig17(self.pos_part[k]),
                sig17(self.neg_part[k]),
                u8::from(self.valid_window[k])
            )?;
        }
        Ok(())
    }

    /// Total arrival probability over the recorded span.
    pub fn total_arrival(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Time and value of the largest flux density.
    pub fn peak(&self) -> (f64, f64) {
        let mut best = (self.times[0], self.density_flux[0]);
        for k in 1..self.times.len() {
            if self.density_flux[k] > best.1 {
                best = (self.times[k], self.density_flux[k]);
            }
        }
        best
    }

    /// Largest disagreement between the flux and norm-slope readings,
    /// interior points only (the end stencils are one-sided).
    pub fn route_disagreement(&self) -> f64 {
        let n = self.times.len();
        self.density_flux
            .iter()
            .zip(&self.density_norm)
            .skip(1)
            .take(n - 2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_mesh(times: &[f64]) -> Result<()> {
    if times.len() < 3 {
        return Err(Error::InvalidParameter(
            "arrival statistics need at least three records".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("record times must be increasing".into()));
    }
    Ok(())
}

fn check_initial_support(psi0: &WaveFunction, region: &Region) -> Result<()> {
    let defect = psi0.diff_norm(&psi0.restrict(region));
    if defect > 1e-10 {
        return Err(Error::InvalidState(format!(
            "initial state reaches into the detector: restriction defect {defect:.3e}"
        )));
    }
    Ok(())
}

/// Flux reading of the arrival density for each recorded state. The first
/// state must live in the complement up to rounding: arrivals are only
/// countable when nothing started inside the detector.
pub fn arrival_density_flux(
    states: &[WaveFunction],
    region: &Region,
    mass: f64,
) -> Result<Vec<f64>> {
    let first = states
        .first()
        .ok_or_else(|| Error::InvalidParameter("no recorded states".into()))?;
    if first.grid() != region.grid() {
        return Err(Error::GridMismatch(region.grid().n(), first.grid().n()));
    }
    check_initial_support(first, region)?;
    Ok(crate::par::map_slice(states, |s| {
        interface_flux(s, region, mass)
    }))
}

/// Density from the survival series alone: central differences inside,
/// one-sided three-point stencils at the ends. Requires a uniform mesh so
/// the stencil weights stay exact.
pub fn arrival_density_norm(times: &[f64], survival: &[f64]) -> Result<Vec<f64>> {
    check_mesh(times)?;
    if times.len() != survival.len() {
        return Err(Error::InvalidParameter(format!(
            "{} times against {} survival records",
            times.len(),
            survival.len()
        )));
    }
    let n = times.len();
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-12 * dt.max(1.0) {
            return Err(Error::InvalidParameter(
                "survival differentiation needs a uniform record mesh".into(),
            ));
        }
    }
    let mut out = vec![0.0; n];
    out[0] = -(-3.0 * survival[0] + 4.0 * survival[1] - survival[2]) / (2.0 * dt);
    for k in 1..n - 1 {
        out[k] = -(survival[k + 1] - survival[k - 1]) / (2.0 * dt);
    }
    out[n - 1] = -(3.0 * survival[n - 1] - 4.0 * survival[n - 2] + survival[n - 3]) / (2.0 * dt);
    Ok(out)
}

/// Assembles the full record from the recorded snapshots of a run.
pub fn arrival_record(
    times: &[f64],
    states: &[WaveFunction],
    region: &Region,
    mass: f64,
    p_floor: f64,
) -> Result<ArrivalRecord> {
    check_mesh(times)?;
    if times.len() != states.len() {
        return Err(Error::InvalidParameter(format!(
            "{} times against {} states",
            times.len(),
            states.len()
        )));
    }
    if !(0.0..1.0).contains(&p_floor) {
        return Err(Error::InvalidParameter(format!(
            "survival floor must lie in [0, 1), got {p_floor}"
        )));
    }
    let density_flux = arrival_density_flux(states, region, mass)?;
    let survival = crate::par::map_slice(states, |s| region_probability(s, region));
    let density_norm = arrival_density_norm(times, &survival)?;

    let n = times.len();
    let mut cumulative = vec![0.0; n];
    for k in 1..n {
        cumulative[k] = cumulative[k - 1]
            + 0.5 * (times[k] - times[k - 1]) * (density_flux[k] + density_flux[k - 1]);
    }
    let (pos_part, neg_part) = split_arrival_departure(&density_flux);

    let mut valid_window = vec![false; n];
    let mut hazard = vec![0.0; n];
    for k in 0..n {
        if survival[k] >= p_floor {
            valid_window[k] = true;
            hazard[k] = density_flux[k] / survival[k];
        } else {
            break;
        }
    }
    Ok(ArrivalRecord {
        times: times.to_vec(),
        density_flux,
        density_norm,
        cumulative,
        survival,
        hazard,
        pos_part,
        neg_part,
        valid_window,
        p_floor,
    })
}

/// Record straight from a trajectory's recorded snapshots.
pub fn arrival_record_from(
    traj: &Trajectory,
    region: &Region,
    mass: f64,
    p_floor: f64,
) -> Result<ArrivalRecord> {
    arrival_record(&traj.times, &traj.states, region, mass, p_floor)
}

/// Splits a signed density into arrivals (positive part) and departures
/// (negative part, stored as a magnitude). density = pos - neg pointwise.
pub fn split_arrival_departure(density: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let pos: Vec<f64> = density.iter().map(|d| d.max(0.0)).collect();
    let neg: Vec<f64> = density.iter().map(|d| (-d).max(0.0)).collect();
    (pos, neg)
}

/// Largest deviation between the recorded density and its hazard-form
/// reconstruction w(t) exp(-int_0^t w) over the validity window, relative
/// to the peak density. The identity is exact in the continuum, so the
/// deviation measures only quadrature and stencil error.
pub fn hazard_reconstruction(record: &ArrivalRecord) -> Result<f64> {
    let m = record.valid_window.iter().take_while(|v| **v).count();
    if m < 3 {
        return Err(Error::InvalidParameter(
            "validity window too short for reconstruction".into(),
        ));
    }
    let scale = record
        .density_flux
        .iter()
        .fold(0.0_f64, |a, d| a.max(d.abs()))
        .max(f64::MIN_POSITIVE);
    let mut integral = 0.0;
    let mut worst = 0.0_f64;
    for k in 0..m {
        if k > 0 {
            integral += 0.5
                * (record.times[k] - record.times[k - 1])
                * (record.hazard[k] + record.hazard[k - 1]);
        }
        let reconstructed = record.hazard[k] * (-integral).exp();
        worst = worst.max((reconstructed - record.density_flux[k]).abs() / scale);
    }
    Ok(worst)
}

/// Side-by-side run of the restricted evolution against the projected
/// unitary evolution from the same initial state.
///
/// Both survival curves must shed probability at the boundary-flux rate at
/// t = 0; `slope_tol` bounds what the one-sided stencil, the step error
/// and the reading offset can contribute, so `consistent()` failing means
/// a genuine defect rather than noise. Later times genuinely diverge (the
/// restricted generator is an approximation to projecting), so the state
/// gap and survival curves are reported without a threshold.
#[derive(Debug, Clone)]
pub struct ProjectionReport {
    pub times: Vec<f64>,
    pub survival_restricted: Vec<f64>,
    pub survival_projected: Vec<f64>,
    /// || restrict(full state) - restricted state || per record.
    pub state_gap: Vec<f64>,
    pub restricted_slope: f64,
    pub projected_slope: f64,
    /// Link reading of the initial boundary current.
    pub flux_link: f64,
    /// Point reading of the initial boundary current.
    pub flux_point: f64,
    pub slope_tol: f64,
}

impl ProjectionReport {
    /// Worst initial-slope defect against the matching flux reading.
    pub fn slope_gap(&self) -> f64 {
        (self.restricted_slope + self.flux_point)
            .abs()
            .max((self.projected_slope + self.flux_link).abs())
    }

    pub fn consistent(&self) -> bool {
        self.slope_gap() <= self.slope_tol
    }

    pub fn max_state_gap(&self) -> f64 {
        self.state_gap.iter().cloned().fold(0.0, f64::max)
    }
}

fn initial_slope(times: &[f64], series: &[f64]) -> f64 {
    let dt = times[1] - times[0];
    (-3.0 * series[0] + 4.0 * series[1] - series[2]) / (2.0 * dt)
}

/// Mass within two cells of the boundary bounds the flux a masked stencil
/// row can generate; dividing by m dx^2 turns it into a slope scale. The
/// dt^2 term covers the one-sided stencil bias of the slope readings.
fn slope_tolerance(psi0: &WaveFunction, region: &Region, mass: f64, dt: f64) -> f64 {
    let dx = psi0.grid().dx();
    let n = psi0.grid().n();
    let amp = psi0.amplitudes();
    let mut boundary_mass = 0.0;
    for bp in region.boundary() {
        let lo = bp.index.saturating_sub(2);
        let hi = (bp.index + 2).min(n - 1);
        for i in lo..=hi {
            boundary_mass += amp[i].norm_sqr() * dx;
        }
    }
    let mass_total = psi0.norm2().max(f64::MIN_POSITIVE);
    (boundary_mass / (mass_total * mass * dx * dx) + dt * dt).max(1e-10)
}

/// Builds the report from two already-recorded runs of the same problem:
/// `full` under the unitary generator, `restricted` under the masked one,
/// on identical record meshes from the same initial state.
pub fn projection_report(
    full: &Trajectory,
    restricted: &Trajectory,
    region: &Region,
    mass: f64,
) -> Result<ProjectionReport> {
    if full.times.len() < 3 {
        return Err(Error::InvalidParameter(
            "slope diagnostic needs at least three records".into(),
        ));
    }
    if full.times != restricted.times {
        return Err(Error::InvalidParameter(
            "the two runs must share their record mesh".into(),
        ));
    }
    let psi0 = &full.states[0];
    check_initial_support(psi0, region)?;
    let start_gap = psi0.restrict(region).diff_norm(&restricted.states[0]);
    if start_gap > 1e-10 {
        return Err(Error::InvalidState(format!(
            "the two runs started from different states: gap {start_gap:.3e}"
        )));
    }

    let survival_projected: Vec<f64> = full.survival.clone();
    let survival_restricted: Vec<f64> = restricted.norm2.clone();
    let state_gap: Vec<f64> = full
        .states
        .iter()
        .zip(&restricted.states)
        .map(|(f, r)| f.restrict(region).diff_norm(r))
        .collect();
    let dt_record = full.times[1] - full.times[0];

    Ok(ProjectionReport {
        restricted_slope: initial_slope(&restricted.times, &survival_restricted),
        projected_slope: initial_slope(&full.times, &survival_projected),
        flux_link: interface_flux(psi0, region, mass),
        flux_point: boundary_flux(psi0, region, mass),
        slope_tol: slope_tolerance(psi0, region, mass, dt_record),
        times: full.times.clone(),
        survival_restricted,
        survival_projected,
        state_gap,
    })
}

pub fn restricted_vs_projected_diagnostic(
    h: &OperatorMatrix,
    hbar: &OperatorMatrix,
    psi0: &WaveFunction,
    cfg: &PropagatorConfig,
    region: &Region,
    mass: f64,
) -> Result<ProjectionReport> {
    check_initial_support(psi0, region)?;
    let full = evolve(h, psi0, cfg, region, mass)?;
    let restricted = evolve(hbar, psi0, cfg, region, mass)?;
    projection_report(&full, &restricted, region, mass)
}
