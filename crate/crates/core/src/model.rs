//! Radial confining potentials and effective-mass profiles.

use std::fmt;

use crate::error::{Error, Result};
use crate::units::UnitSystem;

/// Conduction-band offset between CdSe and ZnS, eV.
pub const CDSE_ZNS_OFFSET_EV: f64 = 0.9;
/// Electron effective mass in CdSe, units of mₑ.
pub const MASS_CDSE: f64 = 0.13;
/// Electron effective mass in ZnS, units of mₑ.
pub const MASS_ZNS: f64 = 0.28;

/// One spherical shell `[previous outer radius, outer_radius)` of constant
/// potential and effective mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shell {
    pub outer_radius: f64,
    pub potential: f64,
    pub mass: f64,
}

/// Piecewise-constant layered device. The last shell extends to infinity and
/// fixes the asymptotic barrier.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredDevice {
    shells: Vec<Shell>,
}

impl LayeredDevice {
    /// `finite` lists the shells with finite outer radii from the centre
    /// outwards; `outer` is the (potential, mass) of the unbounded last shell.
    pub fn new(finite: &[Shell], outer: (f64, f64)) -> Result<Self> {
        let mut prev = 0.0;
        for (i, s) in finite.iter().enumerate() {
            if !s.outer_radius.is_finite() || s.outer_radius <= prev {
                return Err(Error::Config(format!(
                    "shell radii not increasing (shell {i}: {} after {prev})",
                    s.outer_radius
                )));
            }
            if !(s.mass > 0.0) {
                return Err(Error::Config(format!(
                    "shell {i}: effective mass must be positive, got {}",
                    s.mass
                )));
            }
            if !s.potential.is_finite() {
                return Err(Error::Config(format!("shell {i}: potential is not finite")));
            }
            prev = s.outer_radius;
        }
        if !(outer.1 > 0.0) {
            return Err(Error::Config(format!(
                "outer barrier: effective mass must be positive, got {}",
                outer.1
            )));
        }
        let mut shells = finite.to_vec();
        shells.push(Shell {
            outer_radius: f64::INFINITY,
            potential: outer.0,
            mass: outer.1,
        });
        Ok(Self { shells })
    }

    /// CdSe/ZnS double-well dot with ZnS core `r < r_c`, CdSe well up to
    /// `r_1`, ZnS barrier up to `r_2`, CdSe well up to `r_3` and ZnS outside.
    pub fn cdse_zns(radii: [f64; 4]) -> Result<Self> {
        let v0 = CDSE_ZNS_OFFSET_EV;
        let finite = [
            Shell { outer_radius: radii[0], potential: v0, mass: MASS_ZNS },
            Shell { outer_radius: radii[1], potential: 0.0, mass: MASS_CDSE },
            Shell { outer_radius: radii[2], potential: v0, mass: MASS_ZNS },
            Shell { outer_radius: radii[3], potential: 0.0, mass: MASS_CDSE },
        ];
        Self::new(&finite, (v0, MASS_ZNS))
    }

    pub fn shells(&self) -> &[Shell] {
        &self.shells
    }

    /// Radii of the finite shell boundaries.
    pub fn interfaces(&self) -> Vec<f64> {
        self.shells[..self.shells.len() - 1]
            .iter()
            .map(|s| s.outer_radius)
            .collect()
    }

    pub fn asymptote(&self) -> f64 {
        self.shells.last().expect("at least one shell").potential
    }

    /// Index of the shell containing `r` (half-open intervals).
    pub fn shell_index(&self, r: f64) -> usize {
        self.shells
            .iter()
            .position(|s| r < s.outer_radius)
            .unwrap_or(self.shells.len() - 1)
    }

    /// Region attributed to the innermost well: from the centre to the middle
    /// of the barrier that follows the first shell lying below the asymptote.
    /// Evanescent tails in the core and in the inner half of the barrier
    /// belong to the inner well.
    pub fn inner_well(&self) -> (f64, f64) {
        let v_inf = self.asymptote();
        let Some(w) = self.shells.iter().position(|s| s.potential < v_inf) else {
            return (0.0, 0.0);
        };
        let well_end = self.shells[w].outer_radius;
        match self.shells.get(w + 1) {
            Some(next) if next.outer_radius.is_finite() => {
                (0.0, 0.5 * (well_end + next.outer_radius))
            }
            _ => (0.0, well_end),
        }
    }

    /// Radial extent `[inner, outer)` of the first shell below the asymptote.
    pub fn inner_well_shell(&self) -> Option<(f64, f64)> {
        let v_inf = self.asymptote();
        let w = self.shells.iter().position(|s| s.potential < v_inf)?;
        let inner = if w == 0 { 0.0 } else { self.shells[w - 1].outer_radius };
        Some((inner, self.shells[w].outer_radius))
    }

    pub fn min_potential(&self) -> f64 {
        self.shells
            .iter()
            .map(|s| s.potential)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `V(r) = -V₀ e^{-γ r} sin(ω r)` with unit mass, in atomic units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpSinePotential {
    pub depth: f64,
    pub decay: f64,
    pub wavenumber: f64,
}

impl ExpSinePotential {
    pub fn new(depth: f64, decay: f64, wavenumber: f64) -> Result<Self> {
        if !depth.is_finite() || !(decay >= 0.0) || !(wavenumber > 0.0) {
            return Err(Error::Config(format!(
                "exp-sine potential needs finite V0, gamma >= 0 and omega > 0 \
                 (got V0={depth}, gamma={decay}, omega={wavenumber})"
            )));
        }
        Ok(Self {
            depth,
            decay,
            wavenumber,
        })
    }

    pub fn value(&self, r: f64) -> f64 {
        -self.depth * (-self.decay * r).exp() * (self.wavenumber * r).sin()
    }

    /// Position of the first minimum, where `tan(ω r) = ω / γ`.
    pub fn first_minimum(&self) -> f64 {
        (self.wavenumber / self.decay).atan() / self.wavenumber
    }

    /// First local maximum beyond the first minimum.
    pub fn first_barrier(&self) -> f64 {
        self.first_minimum() + std::f64::consts::PI / self.wavenumber
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RadialPotential {
    Layered(LayeredDevice),
    ExpSine(ExpSinePotential),
}

impl RadialPotential {
    fn check_radius(r: f64) -> Result<()> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::Domain(format!("negative radius {r}")));
        }
        Ok(())
    }

    pub fn potential_at(&self, r: f64) -> Result<f64> {
        Self::check_radius(r)?;
        Ok(self.potential_unchecked(r))
    }

    pub fn mass_at(&self, r: f64) -> Result<f64> {
        Self::check_radius(r)?;
        Ok(self.mass_unchecked(r))
    }

    pub(crate) fn potential_unchecked(&self, r: f64) -> f64 {
        match self {
            RadialPotential::Layered(d) => d.shells[d.shell_index(r)].potential,
            RadialPotential::ExpSine(p) => p.value(r),
        }
    }

    pub(crate) fn mass_unchecked(&self, r: f64) -> f64 {
        match self {
            RadialPotential::Layered(d) => d.shells[d.shell_index(r)].mass,
            RadialPotential::ExpSine(_) => 1.0,
        }
    }

    /// Limit of `V(r)` for `r → ∞`; bound states lie below it.
    pub fn asymptote(&self) -> f64 {
        match self {
            RadialPotential::Layered(d) => d.asymptote(),
            RadialPotential::ExpSine(_) => 0.0,
        }
    }

    /// Radii where `V` or the mass jump.
    pub fn interfaces(&self) -> Vec<f64> {
        match self {
            RadialPotential::Layered(d) => d.interfaces(),
            RadialPotential::ExpSine(_) => Vec::new(),
        }
    }

    /// Mass jumps `(r_i, m_inside, m_outside)` at interfaces.
    pub fn mass_jumps(&self) -> Vec<(f64, f64, f64)> {
        match self {
            RadialPotential::Layered(d) => d
                .shells
                .windows(2)
                .filter(|w| w[0].mass != w[1].mass)
                .map(|w| (w[0].outer_radius, w[0].mass, w[1].mass))
                .collect(),
            RadialPotential::ExpSine(_) => Vec::new(),
        }
    }

    /// Radial interval of the innermost potential well.
    pub fn inner_well(&self) -> (f64, f64) {
        match self {
            RadialPotential::Layered(d) => d.inner_well(),
            RadialPotential::ExpSine(p) => (0.0, p.first_barrier()),
        }
    }

    pub fn as_layered(&self) -> Option<&LayeredDevice> {
        match self {
            RadialPotential::Layered(d) => Some(d),
            RadialPotential::ExpSine(_) => None,
        }
    }
}

impl fmt::Display for RadialPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialPotential::Layered(d) => {
                write!(f, "layered[")?;
                for (i, s) in d.shells.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "r<{} V={} m={}", s.outer_radius, s.potential, s.mass)?;
                }
                write!(f, "]")
            }
            RadialPotential::ExpSine(p) => write!(
                f,
                "expsine[V0={} gamma={} omega={}]",
                p.depth, p.decay, p.wavenumber
            ),
        }
    }
}

/// Named device presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Device1,
    Device2,
    /// Fixed-offset family `r_1 = r_c + 0.8`, `r_2 = r_1 + 3.5`, `r_3 = r_2 + 1`.
    Fig2 { core_radius: f64 },
}

impl Preset {
    pub fn parse(name: &str, core_radius: Option<f64>) -> Result<Self> {
        match name {
            "device1" => Ok(Preset::Device1),
            "device2" => Ok(Preset::Device2),
            "fig2" => Ok(Preset::Fig2 {
                core_radius: core_radius.unwrap_or(1.0),
            }),
            other => Err(Error::NotFound(format!("unknown device preset `{other}`"))),
        }
    }
}

/// Shell radii `(r_c, r_1, r_2, r_3)` of the fixed-offset family.
pub fn fig2_radii(core_radius: f64) -> [f64; 4] {
    // Rounded to the nearest 1e-9 nm so that sums such as 1.0 + 0.8 give the
    // same f64 as the literal 1.8.
    let r1 = round_nano(core_radius + 0.8);
    let r2 = round_nano(r1 + 3.5);
    let r3 = round_nano(r2 + 1.0);
    [core_radius, r1, r2, r3]
}

fn round_nano(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

pub fn device_preset(preset: Preset) -> Result<LayeredDevice> {
    match preset {
        Preset::Device1 => LayeredDevice::cdse_zns([1.0, 1.8, 5.3, 6.3]),
        Preset::Device2 => LayeredDevice::cdse_zns([2.0, 2.8, 6.3, 7.3]),
        Preset::Fig2 { core_radius } => {
            if !(core_radius > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "core radius must be positive, got {core_radius}"
                )));
            }
            LayeredDevice::cdse_zns(fig2_radii(core_radius))
        }
    }
}

/// Unit system a potential is naturally expressed in.
pub fn natural_units(p: &RadialPotential) -> UnitSystem {
    match p {
        RadialPotential::Layered(_) => UnitSystem::Semiconductor,
        RadialPotential::ExpSine(_) => UnitSystem::Atomic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device1() -> RadialPotential {
        RadialPotential::Layered(device_preset(Preset::Device1).unwrap())
    }

    #[test]
    fn device1_values() {
        let p = device1();
        assert_eq!(p.potential_at(0.5).unwrap(), 0.9);
        assert_eq!(p.potential_at(1.4).unwrap(), 0.0);
        assert_eq!(p.mass_at(1.4).unwrap(), 0.13);
        assert_eq!(p.mass_at(7.0).unwrap(), 0.28);
        assert_eq!(p.potential_at(7.0).unwrap(), 0.9);
        assert!(matches!(p.potential_at(-1.0), Err(Error::Domain(_))));
        assert!(matches!(p.mass_at(-1e-3), Err(Error::Domain(_))));
    }

    #[test]
    fn presets() {
        assert_eq!(device_preset(Preset::Device1).unwrap().interfaces(), vec![1.0, 1.8, 5.3, 6.3]);
        assert_eq!(device_preset(Preset::Device2).unwrap().interfaces(), vec![2.0, 2.8, 6.3, 7.3]);
        assert_eq!(
            device_preset(Preset::Fig2 { core_radius: 1.0 }).unwrap(),
            device_preset(Preset::Device1).unwrap()
        );
        assert_eq!(
            device_preset(Preset::Fig2 { core_radius: 2.0 }).unwrap(),
            device_preset(Preset::Device2).unwrap()
        );
        assert!(matches!(Preset::parse("device3", None), Err(Error::NotFound(_))));
        assert!(device_preset(Preset::Fig2 { core_radius: 0.0 }).is_err());
    }

    #[test]
    fn discontinuities_sit_exactly_at_shell_radii() {
        let p = device1();
        let eps = 1e-9;
        for (r, below, above) in [(1.0, 0.9, 0.0), (1.8, 0.0, 0.9), (5.3, 0.9, 0.0), (6.3, 0.0, 0.9)] {
            assert_eq!(p.potential_at(r - eps).unwrap(), below);
            assert_eq!(p.potential_at(r + eps).unwrap(), above);
            // half-open: the interface belongs to the outer shell
            assert_eq!(p.potential_at(r).unwrap(), above);
            assert_ne!(p.mass_at(r - eps).unwrap(), p.mass_at(r + eps).unwrap());
        }
        assert_eq!(p.inner_well(), (0.0, 3.55));
        assert_eq!(p.as_layered().unwrap().inner_well_shell(), Some((1.0, 1.8)));
        assert_eq!(p.mass_jumps().len(), 4);
    }

    #[test]
    fn rejects_decreasing_radii() {
        let s = |r| Shell { outer_radius: r, potential: 0.0, mass: 0.1 };
        let err = LayeredDevice::new(&[s(2.0), s(1.0)], (1.0, 0.1)).unwrap_err();
        assert!(err.to_string().contains("shell radii not increasing"));
    }

    #[test]
    fn expsine_shape() {
        let p = ExpSinePotential::new(2.0, 0.1, 1.0).unwrap();
        let rp = RadialPotential::ExpSine(p);
        assert_eq!(rp.potential_at(0.0).unwrap(), 0.0);
        assert_eq!(rp.mass_at(3.0).unwrap(), 1.0);
        assert!(p.value(200.0).abs() < 1e-8);

        // bracketed minimisation: bisect on the sign of dV/dr over (0, π)
        let dv = |r: f64| -2.0 * (-0.1 * r).exp() * (r.cos() - 0.1 * r.sin());
        let (mut a, mut b) = (1e-6_f64, std::f64::consts::PI - 1e-6);
        assert!(dv(a) < 0.0 && dv(b) > 0.0);
        while b - a > 1e-12 {
            let c = 0.5 * (a + b);
            if dv(c) < 0.0 {
                a = c;
            } else {
                b = c;
            }
        }
        let rmin = 0.5 * (a + b);
        assert!(rmin > 0.0 && rmin < std::f64::consts::PI);
        assert!((rmin - p.first_minimum()).abs() < 1e-10);
        assert!(p.value(rmin) < p.value(rmin - 1e-3) && p.value(rmin) < p.value(rmin + 1e-3));
        let (lo, hi) = rp.inner_well();
        assert_eq!(lo, 0.0);
        // a local maximum of V
        assert!(p.value(hi) > p.value(hi - 1e-3) && p.value(hi) > p.value(hi + 1e-3));
    }
}
