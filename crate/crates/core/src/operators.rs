//! Operator assembly: the full Hamiltonian, the complement projector, the
//! restricted Hamiltonian by two independent routes, boundary stencils, and
//! the flux operator with its adjoint identity.
//!
//! hbar = 1. The inner product carries the uniform weight dx, so adjoints
//! are conjugate transposes and the discrete |x_b><x_b| carries a factor
//! 1/dx to stay quadrature consistent.
//!
//! Route one masks the detector rows of H directly. Route two builds the
//! restricted generator from its algebraic pieces: projected kinetic term,
//! projected potential, a hermitian boundary correction, and an
//! anti-hermitian boundary current term. The two differ entry by entry but
//! agree weakly on resolved states, and both satisfy the adjoint identity
//! against their own flux operator by construction.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, Region};
use crate::linalg::{BandMatrix, DenseMatrix};
use crate::states::WaveFunction;

/// Structural tag carried by an operator. Tests assert it against the
/// entries; nothing trusts it blindly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hermiticity {
    Hermitian,
    AntiHermitian,
    General,
}

/// Complex banded operator tied to a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    grid: Grid1D,
    band: BandMatrix,
    hermiticity: Hermiticity,
}

impl OperatorMatrix {
    pub fn from_band(grid: Grid1D, band: BandMatrix, hermiticity: Hermiticity) -> Self {
        assert_eq!(band.n(), grid.n(), "operator size must match the grid");
        OperatorMatrix {
            grid,
            band,
            hermiticity,
        }
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn band(&self) -> &BandMatrix {
        &self.band
    }

    pub fn bandwidth(&self) -> usize {
        self.band.half_bandwidth()
    }

    pub fn hermiticity(&self) -> Hermiticity {
        self.hermiticity
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.band.get(i, j)
    }

    pub fn max_abs(&self) -> f64 {
        self.band.max_abs()
    }

    pub fn apply(&self, psi: &WaveFunction) -> WaveFunction {
        assert_eq!(psi.grid(), self.grid, "state grid must match the operator");
        WaveFunction::from_parts(self.grid, self.band.matvec(psi.amplitudes()))
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix {
            grid: self.grid,
            band: self.band.adjoint(),
            hermiticity: self.hermiticity,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "operator grids must match");
        let hermiticity = if self.hermiticity == other.hermiticity {
            self.hermiticity
        } else {
            Hermiticity::General
        };
        OperatorMatrix {
            grid: self.grid,
            band: self.band.add(&other.band),
            hermiticity,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "operator grids must match");
        let hermiticity = if self.hermiticity == other.hermiticity {
            self.hermiticity
        } else {
            Hermiticity::General
        };
        OperatorMatrix {
            grid: self.grid,
            band: self.band.sub(&other.band),
            hermiticity,
        }
    }

    /// Scaling by a real keeps the class, by a pure imaginary flips it,
    /// anything else drops to General.
    pub fn scaled(&self, c: Complex64) -> Self {
        let hermiticity = if c.im == 0.0 {
            self.hermiticity
        } else if c.re == 0.0 {
            match self.hermiticity {
                Hermiticity::Hermitian => Hermiticity::AntiHermitian,
                Hermiticity::AntiHermitian => Hermiticity::Hermitian,
                Hermiticity::General => Hermiticity::General,
            }
        } else {
            Hermiticity::General
        };
        OperatorMatrix {
            grid: self.grid,
            band: self.band.scaled(c),
            hermiticity,
        }
    }

    /// self applied after other.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "operator grids must match");
        OperatorMatrix {
            grid: self.grid,
            band: self.band.matmul(&other.band),
            hermiticity: Hermiticity::General,
        }
    }

    pub fn hermitian_part(&self) -> Self {
        let band = self
            .band
            .add(&self.band.adjoint())
            .scaled(Complex64::new(0.5, 0.0));
        OperatorMatrix {
            grid: self.grid,
            band,
            hermiticity: Hermiticity::Hermitian,
        }
    }

    pub fn antihermitian_part(&self) -> Self {
        let band = self
            .band
            .sub(&self.band.adjoint())
            .scaled(Complex64::new(0.5, 0.0));
        OperatorMatrix {
            grid: self.grid,
            band,
            hermiticity: Hermiticity::AntiHermitian,
        }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.band.hermiticity_defect()
    }

    pub fn gershgorin_bound(&self) -> f64 {
        self.band.gershgorin_bound()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_band(&self.band)
    }
}

/// Real potential sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Potential {
    pub fn zero(grid: Grid1D) -> Self {
        Potential {
            grid,
            values: vec![0.0; grid.n()],
        }
    }

    /// `height` for x >= x_edge, zero to the left.
    pub fn step(grid: Grid1D, height: f64, x_edge: f64) -> Result<Self> {
        if !height.is_finite() || !x_edge.is_finite() {
            return Err(Error::InvalidParameter(
                "step potential needs finite height and edge".into(),
            ));
        }
        let values = grid
            .positions()
            .map(|x| if x >= x_edge { height } else { 0.0 })
            .collect();
        Ok(Potential { grid, values })
    }

    /// height * exp(-(x-center)^2 / (2 width^2)); a negative height is a well.
    pub fn gaussian_barrier(grid: Grid1D, height: f64, center: f64, width: f64) -> Result<Self> {
        if !height.is_finite() || !center.is_finite() || !width.is_finite() || width <= 0.0 {
            return Err(Error::InvalidParameter(
                "gaussian barrier needs finite parameters and width > 0".into(),
            ));
        }
        let values = grid
            .positions()
            .map(|x| {
                let d = x - center;
                height * (-d * d / (2.0 * width * width)).exp()
            })
            .collect();
        Ok(Potential { grid, values })
    }

    pub fn from_samples(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(grid.n(), values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("potential samples must be finite".into()));
        }
        Ok(Potential { grid, values })
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Central-difference momentum -i d/dx with Dirichlet walls. Hermitian.
pub fn assemble_momentum(grid: Grid1D) -> OperatorMatrix {
    let n = grid.n();
    let c = 1.0 / (2.0 * grid.dx());
    let mut band = BandMatrix::zeros(n, 1);
    for i in 0..n {
        if i + 1 < n {
            band.set(i, i + 1, Complex64::new(0.0, -c));
        }
        if i >= 1 {
            band.set(i, i - 1, Complex64::new(0.0, c));
        }
    }
    OperatorMatrix::from_band(grid, band, Hermiticity::Hermitian)
}

/// H = -Laplacian/(2m) + V with the 3-point stencil and Dirichlet walls.
pub fn assemble_full(grid: Grid1D, v: &Potential, mass: f64) -> Result<OperatorMatrix> {
    assert_eq!(v.grid(), grid, "potential grid must match");
    if !mass.is_finite() || mass <= 0.0 {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
    }
    let n = grid.n();
    let c = 1.0 / (2.0 * mass * grid.dx() * grid.dx());
    let mut band = BandMatrix::zeros(n, 1);
    for i in 0..n {
        band.set(i, i, Complex64::new(2.0 * c + v.values()[i], 0.0));
        if i + 1 < n {
            band.set(i, i + 1, Complex64::new(-c, 0.0));
        }
        if i >= 1 {
            band.set(i, i - 1, Complex64::new(-c, 0.0));
        }
    }
    Ok(OperatorMatrix::from_band(grid, band, Hermiticity::Hermitian))
}

/// Diagonal 0/1 projector onto the complement of the detector.
pub fn assemble_projector(region: &Region) -> OperatorMatrix {
    let grid = region.grid();
    let mut band = BandMatrix::zeros(grid.n(), 0);
    for (i, m) in region.complement_mask().iter().enumerate() {
        band.set(i, i, Complex64::new(*m, 0.0));
    }
    OperatorMatrix::from_band(grid, band, Hermiticity::Hermitian)
}

/// Restricted Hamiltonian, direct route: zero the detector rows of H.
/// Keeps the bandwidth of H; the lost hermiticity is confined to entries
/// within one index of the boundary.
pub fn assemble_restricted_direct(h: &OperatorMatrix, region: &Region) -> OperatorMatrix {
    assert_eq!(h.grid(), region.grid(), "operator and region grids must match");
    let n = h.grid().n();
    let k = h.bandwidth();
    let mut band = h.band().clone();
    for i in 0..n {
        if !region.in_complement(i) {
            for j in i.saturating_sub(k)..=(i + k).min(n - 1) {
                band.set(i, j, Complex64::new(0.0, 0.0));
            }
        }
    }
    OperatorMatrix::from_band(h.grid(), band, Hermiticity::General)
}

/// Signed boundary current operator: sum over boundary points of
/// sign * (P E_b + E_b P) / (2m), with E_b the discrete |x_b><x_b| / dx.
/// Hermitian; its expectation is the signed central-difference current at
/// the boundary points.
pub fn assemble_boundary_current(region: &Region, mass: f64) -> Result<OperatorMatrix> {
    if !mass.is_finite() || mass <= 0.0 {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
    }
    let grid = region.grid();
    let c = 1.0 / (4.0 * mass * grid.dx() * grid.dx());
    let mut band = BandMatrix::zeros(grid.n(), 1);
    for bp in region.boundary() {
        let b = bp.index;
        let s = bp.sign;
        band.add_at(b - 1, b, Complex64::new(0.0, -s * c));
        band.add_at(b, b - 1, Complex64::new(0.0, s * c));
        band.add_at(b + 1, b, Complex64::new(0.0, s * c));
        band.add_at(b, b + 1, Complex64::new(0.0, -s * c));
    }
    Ok(OperatorMatrix::from_band(grid, band, Hermiticity::Hermitian))
}

/// Hermitian boundary correction: sum over boundary points of
/// sign * i (P E_b - E_b P) / (2m). Real symmetric.
pub fn assemble_boundary_correction(region: &Region, mass: f64) -> Result<OperatorMatrix> {
    if !mass.is_finite() || mass <= 0.0 {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
    }
    let grid = region.grid();
    let c = 1.0 / (4.0 * mass * grid.dx() * grid.dx());
    let mut band = BandMatrix::zeros(grid.n(), 1);
    for bp in region.boundary() {
        let b = bp.index;
        let s = bp.sign;
        band.add_at(b - 1, b, Complex64::new(s * c, 0.0));
        band.add_at(b, b - 1, Complex64::new(s * c, 0.0));
        band.add_at(b + 1, b, Complex64::new(-s * c, 0.0));
        band.add_at(b, b + 1, Complex64::new(-s * c, 0.0));
    }
    Ok(OperatorMatrix::from_band(grid, band, Hermiticity::Hermitian))
}

/// Restricted Hamiltonian, decomposed route:
///
///   P pibar P / (2m) + pibar V pibar + K/2 - (i/2) N
///
/// with K the hermitian boundary correction and N the boundary current.
/// Pentadiagonal because of the factored kinetic term.
pub fn assemble_restricted_decomposed(
    region: &Region,
    v: &Potential,
    mass: f64,
) -> Result<OperatorMatrix> {
    let grid = region.grid();
    assert_eq!(v.grid(), grid, "potential grid must match");
    if !mass.is_finite() || mass <= 0.0 {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
    }
    let p = assemble_momentum(grid);
    let pibar = assemble_projector(region);
    let kinetic = p
        .band()
        .matmul(pibar.band())
        .matmul(p.band())
        .scaled(Complex64::new(1.0 / (2.0 * mass), 0.0));
    let mut vproj = BandMatrix::zeros(grid.n(), 0);
    for i in 0..grid.n() {
        if region.in_complement(i) {
            vproj.set(i, i, Complex64::new(v.values()[i], 0.0));
        }
    }
    let correction = assemble_boundary_correction(region, mass)?;
    let current = assemble_boundary_current(region, mass)?;
    let band = kinetic
        .add(&vproj)
        .add(&correction.band().scaled(Complex64::new(0.5, 0.0)))
        .add(&current.band().scaled(Complex64::new(0.0, -0.5)));
    Ok(OperatorMatrix::from_band(grid, band, Hermiticity::General))
}

/// N = i (M - M^dagger): hermitian for any M, zero iff M is hermitian.
pub fn flux_operator(m: &OperatorMatrix) -> OperatorMatrix {
    let band = m
        .band()
        .sub(&m.band().adjoint())
        .scaled(Complex64::new(0.0, 1.0));
    OperatorMatrix::from_band(m.grid(), band, Hermiticity::Hermitian)
}

/// max |M^dagger - M - i N| over entries. Zero by construction when N is
/// the flux operator of M itself; order 1/dx^2 when routes are mixed.
pub fn adjoint_identity_residual(m: &OperatorMatrix, n_op: &OperatorMatrix) -> f64 {
    assert_eq!(m.grid(), n_op.grid(), "operator grids must match");
    let lhs = m.band().adjoint().sub(m.band());
    let rhs = n_op.band().scaled(Complex64::new(0.0, 1.0));
    lhs.max_abs_diff(&rhs)
}
