//! Shared fixtures for the criterion benches.

use qdot_core::dipole::DipoleMatrix;
use qdot_core::model::{device_preset, Preset, RadialPotential};
use qdot_core::spectral::{Basis, BasisSpec, RadialProblem};
use qdot_core::units::UnitSystem;

pub fn device1_problem() -> RadialProblem {
    let device = device_preset(Preset::Device1).expect("preset");
    RadialProblem::new(RadialPotential::Layered(device), UnitSystem::Semiconductor)
}

pub fn device1_basis(intervals: usize) -> Basis {
    let mut spec = BasisSpec::layered_default();
    spec.intervals = intervals;
    Basis::for_potential(spec, &device1_problem().potential).expect("basis")
}

pub fn device1_dipole() -> DipoleMatrix {
    DipoleMatrix::from_problem(&device1_problem(), BasisSpec::layered_default()).expect("dipole")
}
