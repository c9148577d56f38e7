//! Unit systems.
//!
//! Layered semiconductor devices are described in eV, nm and fs with masses in
//! units of the bare electron mass. The continuous exponential-sine model uses
//! Hartree atomic units.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Reduced Planck constant in eV·fs.
pub const HBAR_EV_FS: f64 = 0.658_211_956_9;
/// ħ²/(2 mₑ) in eV·nm².
pub const HBAR2_OVER_2ME_EV_NM2: f64 = 0.038_099_821_2;
/// One hartree in eV.
pub const HARTREE_EV: f64 = 27.211_386_245_988;
/// One bohr in nm.
pub const BOHR_NM: f64 = 0.052_917_721_090_3;
/// Atomic unit of time in fs.
pub const AU_TIME_FS: f64 = 0.024_188_843_265_857;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitSystem {
    /// eV, nm, fs, mₑ.
    Semiconductor,
    /// hartree, bohr, ħ = mₑ = 1.
    Atomic,
}

impl UnitSystem {
    /// ħ in energy·time units of this system.
    pub fn hbar(self) -> f64 {
        match self {
            UnitSystem::Semiconductor => HBAR_EV_FS,
            UnitSystem::Atomic => 1.0,
        }
    }

    /// ħ²/(2 mₑ) in energy·length² units of this system.
    pub fn hbar2_over_2me(self) -> f64 {
        match self {
            UnitSystem::Semiconductor => HBAR2_OVER_2ME_EV_NM2,
            UnitSystem::Atomic => 0.5,
        }
    }

    /// Value of one energy unit of this system in eV.
    pub fn energy_in_ev(self) -> f64 {
        match self {
            UnitSystem::Semiconductor => 1.0,
            UnitSystem::Atomic => HARTREE_EV,
        }
    }

    /// Value of one length unit of this system in nm.
    pub fn length_in_nm(self) -> f64 {
        match self {
            UnitSystem::Semiconductor => 1.0,
            UnitSystem::Atomic => BOHR_NM,
        }
    }

    /// Converts an energy expressed in `self` into `target` units.
    pub fn convert_energy(self, value: f64, target: UnitSystem) -> f64 {
        value * self.energy_in_ev() / target.energy_in_ev()
    }

    /// Converts a length expressed in `self` into `target` units.
    pub fn convert_length(self, value: f64, target: UnitSystem) -> f64 {
        value * self.length_in_nm() / target.length_in_nm()
    }

    /// Suffix used by configuration keys holding lengths.
    pub fn length_suffix(self) -> &'static str {
        match self {
            UnitSystem::Semiconductor => "nm",
            UnitSystem::Atomic => "au",
        }
    }

    /// Suffix used by configuration keys holding energies.
    pub fn energy_suffix(self) -> &'static str {
        match self {
            UnitSystem::Semiconductor => "eV",
            UnitSystem::Atomic => "au",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UnitSystem::Semiconductor => "semiconductor",
            UnitSystem::Atomic => "atomic",
        }
    }
}

impl fmt::Display for UnitSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UnitSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semiconductor" => Ok(UnitSystem::Semiconductor),
            "atomic" => Ok(UnitSystem::Atomic),
            other => Err(Error::Config(format!(
                "units: unknown unit system `{other}` (expected `semiconductor` or `atomic`)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_round_trip() {
        for &e in &[0.9, -2.5e-3, 13.6, 1e-9] {
            let au = UnitSystem::Semiconductor.convert_energy(e, UnitSystem::Atomic);
            let back = UnitSystem::Atomic.convert_energy(au, UnitSystem::Semiconductor);
            assert!(((back - e) / e).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_are_mutually_consistent() {
        // ħ²/(2mₑ) = (1/2) hartree·bohr² expressed in eV·nm².
        let derived = 0.5 * HARTREE_EV * BOHR_NM * BOHR_NM;
        assert!((derived - HBAR2_OVER_2ME_EV_NM2).abs() / derived < 1e-8);
        // ħ = 1 hartree·(atomic time unit).
        assert!((HARTREE_EV * AU_TIME_FS - HBAR_EV_FS).abs() / HBAR_EV_FS < 1e-9);
        assert!((HBAR2_OVER_2ME_EV_NM2 - 0.0380998).abs() < 1e-7);
    }

    #[test]
    fn parses_names() {
        assert_eq!("atomic".parse::<UnitSystem>().unwrap(), UnitSystem::Atomic);
        assert!("si".parse::<UnitSystem>().is_err());
    }
}
