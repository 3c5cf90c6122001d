//! Discrete wave functions, Gaussian packet preparation, and the free
//! packet closed form used as an analytic reference.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, Region};
use crate::linalg::BandLu;
use crate::operators::OperatorMatrix;
use crate::sig17;

/// Complex amplitudes sampled on a grid. The inner product carries the
/// uniform weight dx, so `norm2` of a continuum-normalized profile is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid1D,
    amp: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: Grid1D, amp: Vec<Complex64>) -> Result<Self> {
        if amp.len() != grid.n() {
            return Err(Error::GridMismatch(grid.n(), amp.len()));
        }
        if amp.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        Ok(WaveFunction { grid, amp })
    }

    pub(crate) fn from_parts(grid: Grid1D, amp: Vec<Complex64>) -> Self {
        debug_assert_eq!(amp.len(), grid.n());
        WaveFunction { grid, amp }
    }

    pub fn zeros(grid: Grid1D) -> Self {
        WaveFunction {
            grid,
            amp: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amp
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amp
    }

    /// <psi|psi> = dx * sum |psi_i|^2.
    pub fn norm2(&self) -> f64 {
        self.grid.dx() * self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.grid, other.grid, "inner product across grids");
        let s: Complex64 = self
            .amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.grid.dx()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidState("cannot normalize the zero state".into()));
        }
        let inv = 1.0 / n;
        for a in &mut self.amp {
            *a *= inv;
        }
        Ok(())
    }

    pub fn scale(&mut self, c: Complex64) {
        for a in &mut self.amp {
            *a *= c;
        }
    }

    /// <psi|M|psi> with the quadrature weight.
    pub fn expectation(&self, op: &OperatorMatrix) -> Complex64 {
        assert_eq!(self.grid, op.grid(), "expectation across grids");
        op.band().quadratic_form(&self.amp) * self.grid.dx()
    }

    /// Zeroes the detector part. Idempotent; self-adjoint against `inner`.
    pub fn restrict(&self, region: &Region) -> Self {
        assert_eq!(self.grid, region.grid(), "restrict across grids");
        let amp = self
            .amp
            .iter()
            .zip(region.complement_mask())
            .map(|(a, m)| a * m)
            .collect();
        WaveFunction {
            grid: self.grid,
            amp,
        }
    }

    /// Largest amplitude on the two outermost grid points.
    pub fn edge_amplitude(&self) -> f64 {
        self.amp[0].norm().max(self.amp[self.amp.len() - 1].norm())
    }

    pub fn max_abs(&self) -> f64 {
        self.amp.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn diff_norm(&self, other: &Self) -> f64 {
        assert_eq!(self.grid, other.grid, "diff across grids");
        let s: f64 = self
            .amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (s * self.grid.dx()).sqrt()
    }

    pub fn write_snapshot(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "x,re_psi,im_psi")?;
        for (i, a) in self.amp.iter().enumerate() {
            writeln!(
                w,
                "{},{},{}",
                sig17(self.grid.point(i)),
                sig17(a.re),
                sig17(a.im)
            )?;
        }
        Ok(())
    }
}

/// Normalized Gaussian packet exp(-(x-x0)^2/(4 sigma^2)) exp(i k0 x) with a
/// real positive envelope. Rejects packets the lattice cannot carry:
/// sigma must cover at least 4 spacings and the tails must clear the walls.
pub fn gaussian_packet(grid: Grid1D, x0: f64, sigma: f64, k0: f64) -> Result<WaveFunction> {
    if !x0.is_finite() || x0 <= grid.x_min() || x0 >= grid.x_max() {
        return Err(Error::InvalidState(format!(
            "packet center {x0} must lie strictly inside ({}, {})",
            grid.x_min(),
            grid.x_max()
        )));
    }
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidState(format!("width must be positive, got {sigma}")));
    }
    if sigma < 4.0 * grid.dx() {
        return Err(Error::InvalidState(format!(
            "width {sigma} is below 4 dx = {}; the lattice cannot resolve the packet",
            4.0 * grid.dx()
        )));
    }
    if !k0.is_finite() {
        return Err(Error::InvalidState(format!("momentum must be finite, got {k0}")));
    }
    let amp: Vec<Complex64> = grid
        .positions()
        .map(|x| {
            let d = x - x0;
            let env = (-d * d / (4.0 * sigma * sigma)).exp();
            Complex64::from_polar(env, k0 * x)
        })
        .collect();
    let mut psi = WaveFunction::from_parts(grid, amp);
    let edge = psi.edge_amplitude();
    let peak = psi.max_abs();
    if edge > 1e-8 * peak {
        return Err(Error::InvalidState(format!(
            "packet tail at the grid edge is {:.3e} of the peak (limit 1e-8); \
             move the center or shrink the width",
            edge / peak
        )));
    }
    psi.normalize()?;
    Ok(psi)
}

/// Ground-state style eigenvector by shifted inverse iteration. The shift
/// must land nearer the wanted eigenvalue than any other. Returns the
/// Rayleigh quotient and the eigenvector with its largest entry rotated to
/// the positive real axis.
pub fn bound_state(
    h: &OperatorMatrix,
    shift: f64,
    iterations: usize,
) -> Result<(f64, WaveFunction)> {
    if iterations == 0 {
        return Err(Error::InvalidParameter("need at least one iteration".into()));
    }
    if !shift.is_finite() {
        return Err(Error::InvalidParameter(format!("shift must be finite, got {shift}")));
    }
    let grid = h.grid();
    let mut shifted = h.band().clone();
    for i in 0..grid.n() {
        shifted.add_at(i, i, Complex64::new(-shift, 0.0));
    }
    let lu = BandLu::factor(&shifted)?;
    let mut v = WaveFunction::from_parts(grid, vec![Complex64::new(1.0, 0.0); grid.n()]);
    v.normalize()?;
    for _ in 0..iterations {
        let next = lu.solve(v.amplitudes());
        v = WaveFunction::from_parts(grid, next);
        v.normalize()?;
    }
    let energy = v.expectation(h).re;
    let (imax, _) = v
        .amplitudes()
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.norm().total_cmp(&b.norm()))
        .expect("nonempty state");
    let lead = v.amplitudes()[imax];
    v.scale(lead.conj() / lead.norm());
    Ok((energy, v))
}

/// Free-particle Gaussian in closed form. With s2 = sigma^2 + i t/(2m):
///
///   psi(x, t) = (2 pi sigma^2)^{-1/4} (sigma / sqrt(s2))
///               exp(-(x - x0 - k0 t/m)^2 / (4 s2))
///               exp(i k0 (x - k0 t / (2m)))
///
/// which at t = 0 reduces to the prepared packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeGaussian {
    pub x0: f64,
    pub sigma: f64,
    pub k0: f64,
    pub mass: f64,
}

impl FreeGaussian {
    pub fn new(x0: f64, sigma: f64, k0: f64, mass: f64) -> Result<Self> {
        if !(x0.is_finite() && sigma.is_finite() && k0.is_finite() && mass.is_finite()) {
            return Err(Error::InvalidParameter("free packet parameters must be finite".into()));
        }
        if sigma <= 0.0 || mass <= 0.0 {
            return Err(Error::InvalidParameter(
                "free packet needs sigma > 0 and mass > 0".into(),
            ));
        }
        Ok(FreeGaussian { x0, sigma, k0, mass })
    }

    pub fn psi(&self, x: f64, t: f64) -> Complex64 {
        let s2 = Complex64::new(self.sigma * self.sigma, t / (2.0 * self.mass));
        let center = x - self.x0 - self.k0 * t / self.mass;
        let n0 = (2.0 * PI * self.sigma * self.sigma).powf(-0.25);
        let pref = Complex64::new(n0 * self.sigma, 0.0) / s2.sqrt();
        let arg = Complex64::new(-center * center, 0.0) / (4.0 * s2)
            + Complex64::new(0.0, self.k0 * (x - self.k0 * t / (2.0 * self.mass)));
        pref * arg.exp()
    }

    pub fn density(&self, x: f64, t: f64) -> f64 {
        let st2 = self.spread(t).powi(2);
        let center = x - self.x0 - self.k0 * t / self.mass;
        (2.0 * PI * st2).powf(-0.5) * (-center * center / (2.0 * st2)).exp()
    }

    /// Probability current of the exact solution.
    pub fn current(&self, x: f64, t: f64) -> f64 {
        let center = x - self.x0 - self.k0 * t / self.mass;
        let s4 = self.sigma.powi(4) + t * t / (4.0 * self.mass * self.mass);
        let u = self.k0 + center * t / (4.0 * self.mass * s4);
        self.density(x, t) * u / self.mass
    }

    /// Width sigma(t) = sigma sqrt(1 + (t / (2 m sigma^2))^2).
    pub fn spread(&self, t: f64) -> f64 {
        let r = t / (2.0 * self.mass * self.sigma * self.sigma);
        self.sigma * (1.0 + r * r).sqrt()
    }

    pub fn sample(&self, grid: Grid1D, t: f64) -> WaveFunction {
        let amp = grid.positions().map(|x| self.psi(x, t)).collect();
        WaveFunction::from_parts(grid, amp)
    }
}
