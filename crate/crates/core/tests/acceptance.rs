//! End-to-end acceptance battery. Every test prints one verdict line
//!
//!   acceptance cNN <name>: PASS|FAIL (measured=..., bound=...) <note>
//!
//! so `cargo test --test acceptance -- --nocapture` reads as a checklist.
//! c10's peak clause is a genuine red: the measured peak agrees with the
//! exact free-packet current to half a percent, and it is the ballistic
//! estimate that sits 10% off. The verdict line reports that honestly
//! instead of widening the window until it passes.

use std::sync::OnceLock;

use num_complex::Complex64;

use qarrive::arrival::{arrival_record_from, hazard_reconstruction, ArrivalRecord};
use qarrive::dynamics::{evolve, evolve_exact_small, PropagatorConfig, Scheme, Trajectory};
use qarrive::linalg::BandMatrix;
use qarrive::observables::continuity_residual;
use qarrive::operators::{
    adjoint_identity_residual, assemble_boundary_correction, assemble_boundary_current,
    assemble_full, assemble_momentum, assemble_projector, assemble_restricted_decomposed,
    assemble_restricted_direct, flux_operator,
};
use qarrive::states::gaussian_packet;
use qarrive::{DetectorSpec, FreeGaussian, Grid1D, Hermiticity, OperatorMatrix, Potential, Region, WaveFunction};

const MASS: f64 = 1.0;

fn verdict(code: &str, name: &str, pass: bool, measured: f64, bound: f64, note: &str) {
    let sep = if note.is_empty() { "" } else { " " };
    println!(
        "acceptance {code} {name}: {} (measured={measured:.6e}, bound={bound:.6e}){sep}{note}",
        if pass { "PASS" } else { "FAIL" },
    );
}

fn default_grid() -> Grid1D {
    Grid1D::new(-40.0, 40.0, 1601).unwrap()
}

fn half_region() -> Region {
    Region::new(default_grid(), DetectorSpec::HalfLine { x_d: 5.0 }).unwrap()
}

fn cn(dt: f64, n_steps: usize, record_every: usize) -> PropagatorConfig {
    PropagatorConfig {
        dt,
        n_steps,
        record_every,
        scheme: Scheme::CrankNicolson,
    }
}

fn plane_wave(grid: Grid1D, k: f64) -> WaveFunction {
    let amp = grid
        .positions()
        .map(|x| Complex64::from_polar(1.0, k * x))
        .collect();
    WaveFunction::new(grid, amp).unwrap()
}

fn max_pointwise(a: &WaveFunction, b: &WaveFunction) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Reference transit run shared by the trajectory-level criteria, plus the
/// same run at halved step and record interval for convergence ratios.
struct TransitFixture {
    region: Region,
    traj: Trajectory,
    traj_half: Trajectory,
    record: ArrivalRecord,
    record_tight: ArrivalRecord,
    record_half: ArrivalRecord,
}

fn transit() -> &'static TransitFixture {
    static FIX: OnceLock<TransitFixture> = OnceLock::new();
    FIX.get_or_init(|| {
        let region = half_region();
        let g = region.grid();
        let h = assemble_full(g, &Potential::zero(g), MASS).unwrap();
        let psi0 = gaussian_packet(g, -10.0, 1.0, 2.0).unwrap();
        let traj = evolve(&h, &psi0, &cn(0.005, 3000, 5), &region, MASS).unwrap();
        let traj_half = evolve(&h, &psi0, &cn(0.0025, 6000, 5), &region, MASS).unwrap();
        let record = arrival_record_from(&traj, &region, MASS, 0.05).unwrap();
        let record_tight = arrival_record_from(&traj, &region, MASS, 0.1).unwrap();
        let record_half = arrival_record_from(&traj_half, &region, MASS, 0.05).unwrap();
        TransitFixture {
            region,
            traj,
            traj_half,
            record,
            record_tight,
            record_half,
        }
    })
}

#[test]
fn c01_adjoint_flux_identity() {
    let region = half_region();
    let g = region.grid();
    let v = Potential::gaussian_barrier(g, 0.4, 0.0, 2.0).unwrap();
    let h = assemble_full(g, &v, MASS).unwrap();
    let dir = assemble_restricted_direct(&h, &region);
    let dec = assemble_restricted_decomposed(&region, &v, MASS).unwrap();
    let r_dir = adjoint_identity_residual(&dir, &flux_operator(&dir));
    let r_dec = adjoint_identity_residual(&dec, &flux_operator(&dec));
    let measured = r_dir.max(r_dec);
    let bound = 1e-14 * dir.max_abs().max(dec.max_abs());
    let pass = measured <= bound;
    verdict("c01", "adjoint_flux_identity", pass, measured, bound, "both assembly routes");
    assert!(pass);
}

#[test]
fn c02_decomposition_parts_match() {
    let region = half_region();
    let g = region.grid();
    let v = Potential::gaussian_barrier(g, 0.4, 0.0, 2.0).unwrap();
    let dec = assemble_restricted_decomposed(&region, &v, MASS).unwrap();

    let p = assemble_momentum(g);
    let pibar = assemble_projector(&region);
    let kinetic = p
        .compose(&pibar)
        .compose(&p)
        .scaled(Complex64::new(1.0 / (2.0 * MASS), 0.0));
    let mut vband = BandMatrix::zeros(g.n(), 0);
    for i in 0..g.n() {
        if region.in_complement(i) {
            vband.set(i, i, Complex64::new(v.values()[i], 0.0));
        }
    }
    let vproj = OperatorMatrix::from_band(g, vband, Hermiticity::Hermitian);
    let correction = assemble_boundary_correction(&region, MASS).unwrap();
    let current = assemble_boundary_current(&region, MASS).unwrap();
    let want_herm = kinetic
        .add(&vproj)
        .add(&correction.scaled(Complex64::new(0.5, 0.0)));
    let want_anti = current.scaled(Complex64::new(0.0, -0.5));

    let herm_gap = dec.hermitian_part().band().max_abs_diff(want_herm.band());
    let anti_gap = dec
        .antihermitian_part()
        .band()
        .max_abs_diff(want_anti.band());
    let measured = herm_gap.max(anti_gap);
    let bound = 1e-12 * dec.max_abs().max(1.0);

    // direct route: hermiticity loss confined to one index of the boundary
    let h = assemble_full(g, &v, MASS).unwrap();
    let anti_dir = assemble_restricted_direct(&h, &region).antihermitian_part();
    let k = anti_dir.bandwidth();
    let mut stray = 0.0f64;
    for i in 0..g.n() {
        for j in i.saturating_sub(k)..=(i + k).min(g.n() - 1) {
            let local = region.boundary().iter().any(|bp| {
                i.abs_diff(bp.index) <= 1 && j.abs_diff(bp.index) <= 1
            });
            if !local {
                stray = stray.max(anti_dir.entry(i, j).norm());
            }
        }
    }

    let pass = measured <= bound && stray == 0.0;
    verdict(
        "c02",
        "decomposition_consistency",
        pass,
        measured,
        bound,
        &format!("stray anti-hermitian weight off the boundary {stray:.1e}"),
    );
    assert!(pass);
}

#[test]
fn c03_plane_wave_flux_dispersion() {
    let region = half_region();
    let g = region.grid();
    let k = 0.4;
    let n_op = assemble_boundary_current(&region, MASS).unwrap();
    let reading = plane_wave(g, k).expectation(&n_op).re;
    let lattice = (k * g.dx()).sin() / (MASS * g.dx());
    let measured = (reading - lattice).abs();
    let bound = 1e-10;

    // fixed physical k, refined mesh: the lattice reading approaches k/m
    // at second order
    let g_fine = Grid1D::new(g.x_min(), g.x_max(), 2 * g.n() - 1).unwrap();
    let r_fine = Region::new(g_fine, region.spec()).unwrap();
    let n_fine = assemble_boundary_current(&r_fine, MASS).unwrap();
    let err_coarse = (reading - k / MASS).abs();
    let err_fine = (plane_wave(g_fine, k).expectation(&n_fine).re - k / MASS).abs();
    let ratio = err_coarse / err_fine;

    let pass = measured <= bound && (3.8..=4.2).contains(&ratio);
    verdict(
        "c03",
        "plane_wave_flux",
        pass,
        measured,
        bound,
        &format!("dispersion error ratio under dx/2 refinement {ratio:.3}"),
    );
    assert!(pass);
}

#[test]
fn c04_continuity_norm_flux() {
    let fix = transit();
    let rep = continuity_residual(&fix.traj.times, &fix.traj.states, &fix.region, MASS).unwrap();
    let rep_half =
        continuity_residual(&fix.traj_half.times, &fix.traj_half.states, &fix.region, MASS)
            .unwrap();
    let measured = rep.max_abs;
    let bound = 1e-4;
    let ratio = rep.max_abs / rep_half.max_abs;
    let pass = measured <= bound && (3.0..=5.5).contains(&ratio);
    verdict(
        "c04",
        "continuity_norm_flux",
        pass,
        measured,
        bound,
        &format!("residual shrink factor under dt/2 {ratio:.3}"),
    );
    assert!(pass);
}

#[test]
fn c05_per_step_norm_decay_identity() {
    let region = half_region();
    let g = region.grid();
    let hbar = assemble_restricted_decomposed(&region, &Potential::zero(g), MASS).unwrap();
    let psi0 = gaussian_packet(g, -10.0, 1.0, 2.0).unwrap().restrict(&region);
    // T = 10: the lossy run aborts near t = 11 when wall reflections outgrow
    // the absorbed norm, and the identity is already exercised over the peak
    let traj = evolve(&hbar, &psi0, &cn(0.005, 2000, 100), &region, MASS).unwrap();
    let measured = traj.step_identity_max;
    let bound = 1e-10;
    let pass = measured <= bound;
    verdict(
        "c05",
        "per_step_norm_decay",
        pass,
        measured,
        bound,
        "midpoint flux against the per-step norm drop",
    );
    assert!(pass);
}

#[test]
fn c06_arrival_route_equivalence() {
    let fix = transit();
    let measured = fix.record.route_disagreement();
    let bound = 1e-3;
    let ratio = measured / fix.record_half.route_disagreement();
    let pass = measured <= bound && (3.0..=5.5).contains(&ratio);
    verdict(
        "c06",
        "arrival_route_equivalence",
        pass,
        measured,
        bound,
        &format!("flux vs survival-slope densities, shrink factor {ratio:.3}"),
    );
    assert!(pass);
}

#[test]
fn c07_probability_closure() {
    let fix = transit();
    let total = fix.record.total_arrival();
    let survival_end = *fix.record.survival.last().unwrap();
    let measured = (total - (1.0 - survival_end)).abs();
    let bound = 1e-4;
    let pass = measured <= bound;
    verdict(
        "c07",
        "probability_closure",
        pass,
        measured,
        bound,
        &format!("total {total:.6}, survival {survival_end:.6}"),
    );
    assert!(pass);
}

#[test]
fn c08_hazard_reconstruction() {
    let fix = transit();
    let measured = hazard_reconstruction(&fix.record_tight).unwrap();
    let bound = 1e-3;
    let window = fix.record_tight.valid_window.iter().filter(|v| **v).count();
    let pass = measured <= bound;
    verdict(
        "c08",
        "hazard_reconstruction",
        pass,
        measured,
        bound,
        &format!("{window} records above the 0.1 survival floor"),
    );
    assert!(pass);
}

#[test]
fn c09_dense_oracle_agreement() {
    let g = Grid1D::new(-24.0, 24.0, 128).unwrap();
    let region = Region::new(g, DetectorSpec::HalfLine { x_d: 5.0 }).unwrap();
    let h = assemble_full(g, &Potential::zero(g), MASS).unwrap();
    let psi0 = gaussian_packet(g, -6.0, 2.0, 1.0).unwrap();

    let run = evolve(&h, &psi0, &cn(0.001, 5000, 5000), &region, MASS).unwrap();
    let oracle = evolve_exact_small(&h, &psi0, &[0.0, 5.0], &region, MASS).unwrap();
    let measured = max_pointwise(&run.states[1], &oracle.states[1]);
    let bound = 1e-6;

    let oracle1 = evolve_exact_small(&h, &psi0, &[0.0, 1.0], &region, MASS).unwrap();
    let errs: Vec<f64> = [0.004_f64, 0.002, 0.001]
        .iter()
        .map(|&dt| {
            let steps = (1.0 / dt).round() as usize;
            let t = evolve(&h, &psi0, &cn(dt, steps, steps), &region, MASS).unwrap();
            max_pointwise(&t.states[1], &oracle1.states[1])
        })
        .collect();
    let r1 = errs[0] / errs[1];
    let r2 = errs[1] / errs[2];

    let pass = measured <= bound && (3.6..=4.4).contains(&r1) && (3.6..=4.4).contains(&r2);
    verdict(
        "c09",
        "dense_oracle_agreement",
        pass,
        measured,
        bound,
        &format!("order-2 step ratios {r1:.3}, {r2:.3}"),
    );
    assert!(pass);
}

#[test]
fn c10_ballistic_sanity() {
    let fix = transit();
    let (t_peak, v_peak) = fix.record.peak();
    let ballistic = (5.0 - (-10.0)) * MASS / 2.0;
    let tol = 0.05 * ballistic;
    let total = fix.record.total_arrival();

    // exact reference: current of the analytic free packet at the boundary
    // link midpoint (where the discrete link reading is second-order
    // accurate), scanned to its maximum
    let grid = fix.region.grid();
    let x_link = grid.point(fix.region.boundary()[0].index) + 0.5 * grid.dx();
    let probe = FreeGaussian::new(-10.0, 1.0, 2.0, MASS).unwrap();
    let mut exact_t = 0.0;
    let mut exact_j = f64::MIN;
    let mut t = 5.0;
    while t <= 9.0 {
        let j = probe.current(x_link, t);
        if j > exact_j {
            exact_j = j;
            exact_t = t;
        }
        t += 1e-4;
    }

    let peak_ok = (t_peak - ballistic).abs() <= tol;
    let total_ok = total >= 0.95;
    verdict(
        "c10",
        "ballistic_sanity",
        peak_ok && total_ok,
        t_peak,
        tol,
        &format!(
            "peak at {t_peak:.4} vs ballistic {ballistic} +- {tol:.3}; exact free-packet peak \
             {exact_t:.4} (current {exact_j:.5} vs measured {v_peak:.5}); total arrival {total:.4}"
        ),
    );

    // The ballistic window is the red clause: dispersion pushes the current
    // peak ahead of the classical crossing, and the exact free packet puts
    // it near t = 6.74, itself outside the window. The solver is held to
    // the exact reference instead; the window verdict above stays honest.
    assert!((t_peak - exact_t).abs() <= 0.05, "solver peak {t_peak} vs exact {exact_t}");
    assert!((v_peak - exact_j).abs() <= 5e-4, "solver peak value {v_peak} vs exact {exact_j}");
    assert!(total_ok, "total arrival {total}");
}
