//! Restricted quantum dynamics on a 1D lattice.
//!
//! A wave packet evolves on a uniform grid that is split into a detector
//! region and its complement. Evolution under the full Hamiltonian is
//! unitary; evolution under the restricted Hamiltonian (the full operator
//! masked to the complement) is not, and the norm it loses is arrival
//! probability. The crate assembles both operators, propagates states with
//! a banded Crank-Nicolson scheme, and turns boundary flux into arrival-time
//! densities, hazard rates, and survival curves. Dense oracles cross-check
//! every operator identity at small sizes.
//!
//! Units: hbar = 1 throughout. The inner product carries the uniform
//! quadrature weight dx, so adjoints are plain conjugate transposes.

pub mod arrival;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod observables;
pub mod operators;
mod par;
pub mod states;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{BoundaryPoint, DetectorSpec, Grid1D, Region};
pub use operators::{Hermiticity, OperatorMatrix, Potential};
pub use states::{FreeGaussian, WaveFunction};

/// Formats with 17 significant digits; round-trips any finite f64 exactly.
pub fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::sig17;

    #[test]
    fn sig17_round_trips() {
        let probes = [
            0.0,
            -0.0,
            1.0,
            -1.5e-300,
            0.1 + 0.2,
            std::f64::consts::PI,
            6.02e23,
            f64::MIN_POSITIVE,
        ];
        for v in probes {
            let back: f64 = sig17(v).parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{v} failed to round-trip");
        }
    }
}
