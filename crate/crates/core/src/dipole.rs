//! Dipole couplings `Z_kn = ⟨k| z |n⟩` between bound states of the `m = 0`
//! sector and the transition frequencies `ω_kn = (E_k - E_n)/ħ`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::{solve_spectrum, Basis, BasisSpec, BoundState, RadialProblem, SpectrumTable};
use crate::spectral::LOCALIZED_THRESHOLD;
use crate::units::UnitSystem;

/// `⟨ℓ+1, 0| cos θ |ℓ, 0⟩`.
pub fn angular_factor(l: usize) -> f64 {
    let l = l as f64;
    (l + 1.0) / ((2.0 * l + 1.0) * (2.0 * l + 3.0)).sqrt()
}

fn check_state(basis: &Basis, s: &BoundState) -> Result<()> {
    if s.coeffs.len() != basis.size() {
        return Err(Error::Config(format!(
            "state (n_r={}, l={}) has {} coefficients but the basis has {} functions",
            s.n_r,
            s.l,
            s.coeffs.len(),
            basis.size()
        )));
    }
    Ok(())
}

/// `∫ u_a r u_b dr`.
pub fn radial_moment(basis: &Basis, a: &BoundState, b: &BoundState) -> Result<f64> {
    check_state(basis, a)?;
    check_state(basis, b)?;
    Ok(basis.matrix_element(&a.coeffs, &b.coeffs, |r| r))
}

/// Compact description of a state in the coupled set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub l: usize,
    pub n_r: usize,
    pub energy: f64,
    pub p_inner: f64,
}

impl From<&BoundState> for Level {
    fn from(s: &BoundState) -> Self {
        Self {
            l: s.l,
            n_r: s.n_r,
            energy: s.energy,
            p_inner: s.p_inner,
        }
    }
}

/// Couplings over a set of levels sorted by `(ℓ, n_r)`, plus the qubit pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleMatrix {
    pub levels: Vec<Level>,
    /// Symmetric, length units.
    pub z: DMatrix<f64>,
    pub q1: usize,
    pub q2: usize,
    pub units: UnitSystem,
}

impl DipoleMatrix {
    /// Couplings between every bound state of `table`.
    pub fn build(table: &SpectrumTable, basis: &Basis) -> Result<Self> {
        Self::build_with_threshold(table, basis, LOCALIZED_THRESHOLD)
    }

    /// As [`DipoleMatrix::build`], choosing the qubit among states with
    /// `P_inner > threshold`.
    pub fn build_with_threshold(table: &SpectrumTable, basis: &Basis, threshold: f64) -> Result<Self> {
        if table.basis != *basis.spec() {
            return Err(Error::Config(
                "spectrum was computed on a different basis than the one supplied".into(),
            ));
        }
        let mut states: Vec<&BoundState> = table.states().collect();
        states.sort_by_key(|s| (s.l, s.n_r));
        let n = states.len();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| states[i].l.abs_diff(states[j].l) == 1)
            .collect();
        let values: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let (a, b) = (states[i], states[j]);
                Ok(angular_factor(a.l.min(b.l)) * radial_moment(basis, a, b)?)
            })
            .collect::<Result<_>>()?;
        let mut z = DMatrix::zeros(n, n);
        for (&(i, j), &v) in pairs.iter().zip(&values) {
            z[(i, j)] = v;
            z[(j, i)] = v;
        }
        let levels: Vec<Level> = states.iter().map(|&s| Level::from(s)).collect();
        let (q1, q2) = find_qubit(&levels, threshold)?;
        Ok(Self {
            levels,
            z,
            q1,
            q2,
            units: table.units,
        })
    }

    /// Solves the spectrum of `problem` on a basis fitted to its interfaces
    /// and builds the couplings.
    pub fn from_problem(problem: &RadialProblem, spec: BasisSpec) -> Result<Self> {
        let basis = Basis::for_potential(spec, &problem.potential)?;
        let table = solve_spectrum(&basis, problem, None)?;
        Self::build(&table, &basis)
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    /// `ω_kn = (E_k - E_n)/ħ`.
    pub fn omega(&self, k: usize, n: usize) -> f64 {
        (self.levels[k].energy - self.levels[n].energy) / self.units.hbar()
    }

    pub fn omega_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |k, m| self.omega(k, m))
    }

    /// `|Z_q1q2|`.
    pub fn qubit_coupling(&self) -> f64 {
        self.z[(self.q1, self.q2)].abs()
    }

    /// `(E_q2 - E_q1)/ħ`.
    pub fn resonance_frequency(&self) -> f64 {
        self.omega(self.q2, self.q1)
    }

    /// Copy with every coupling multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.z *= factor;
        out
    }

    /// Copy with every energy shifted by `shift`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for l in &mut out.levels {
            l.energy += shift;
        }
        out
    }

    /// Copy restricted to the `keep` lowest-energy levels. The qubit pair is
    /// always kept.
    pub fn truncated(&self, keep: usize) -> Self {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.levels[a].energy.total_cmp(&self.levels[b].energy));
        let mut kept: Vec<usize> = order.into_iter().take(keep).collect();
        for q in [self.q1, self.q2] {
            if !kept.contains(&q) {
                kept.push(q);
            }
        }
        kept.sort_unstable();
        let pos = |q: usize| kept.iter().position(|&k| k == q).expect("kept");
        Self {
            levels: kept.iter().map(|&k| self.levels[k]).collect(),
            z: DMatrix::from_fn(kept.len(), kept.len(), |a, b| self.z[(kept[a], kept[b])]),
            q1: pos(self.q1),
            q2: pos(self.q2),
            units: self.units,
        }
    }

    /// Non-zero couplings `(k, n, Z_kn)` with `k < n`.
    pub fn couplings(&self) -> Vec<(usize, usize, f64)> {
        let n = self.len();
        (0..n)
            .flat_map(|k| (k + 1..n).map(move |m| (k, m)))
            .filter_map(|(k, m)| {
                let v = self.z[(k, m)];
                (v != 0.0).then_some((k, m, v))
            })
            .collect()
    }
}

/// Lowest localized `ℓ = 0` level and lowest localized `ℓ = 1` level.
pub fn find_qubit(levels: &[Level], threshold: f64) -> Result<(usize, usize)> {
    let lowest = |l: usize| {
        levels
            .iter()
            .enumerate()
            .filter(|(_, s)| s.l == l && s.p_inner > threshold)
            .min_by(|a, b| a.1.energy.total_cmp(&b.1.energy))
            .map(|(i, _)| i)
    };
    let localized = levels.iter().filter(|s| s.p_inner > threshold).count();
    match (lowest(0), lowest(1)) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::NoQubit(format!(
            "{localized} state(s) localized in the inner well; need one with l=0 and one with l=1"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{device_preset, LayeredDevice, Preset, RadialPotential};

    #[test]
    fn angular_values() {
        assert!((angular_factor(0) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((angular_factor(1) - 2.0 / 15f64.sqrt()).abs() < 1e-15);
        assert!((angular_factor(100_000) - 0.5).abs() < 1e-5);
    }

    fn device1() -> DipoleMatrix {
        let problem = RadialProblem::new(
            RadialPotential::Layered(device_preset(Preset::Device1).unwrap()),
            UnitSystem::Semiconductor,
        );
        DipoleMatrix::from_problem(&problem, BasisSpec::layered_default()).unwrap()
    }

    #[test]
    fn selection_rule_and_symmetry() {
        let dm = device1();
        for k in 0..dm.len() {
            for n in 0..dm.len() {
                assert_eq!(dm.z[(k, n)], dm.z[(n, k)]);
                assert_eq!(dm.omega(k, n), -dm.omega(n, k));
                let dl = dm.levels[k].l.abs_diff(dm.levels[n].l);
                if dl != 1 {
                    assert_eq!(dm.z[(k, n)], 0.0);
                } else {
                    assert!(dm.z[(k, n)] != 0.0);
                }
            }
        }
        let (a, b) = (dm.levels[dm.q1], dm.levels[dm.q2]);
        assert_eq!((a.n_r, a.l, b.n_r, b.l), (1, 0, 1, 1));
        assert!(dm.qubit_coupling() > 0.0);
        assert!(dm.resonance_frequency() > 0.0);
        assert_eq!(dm.resonance_frequency(), dm.omega_matrix()[(dm.q2, dm.q1)]);
    }

    #[test]
    fn no_qubit_without_localized_pair() {
        let problem = RadialProblem::new(
            RadialPotential::Layered(
                LayeredDevice::new(
                    &[crate::model::Shell {
                        outer_radius: 1.0,
                        potential: 0.0,
                        mass: 0.13,
                    }],
                    (0.9, 0.28),
                )
                .unwrap(),
            ),
            UnitSystem::Semiconductor,
        );
        let err = DipoleMatrix::from_problem(&problem, BasisSpec::layered_default()).unwrap_err();
        assert!(matches!(err, Error::NoQubit(_)), "{err}");
    }

    #[test]
    fn truncation_keeps_qubit() {
        let dm = device1();
        let t = dm.truncated(2);
        assert!(t.len() >= 2);
        assert_eq!(t.levels[t.q1], dm.levels[dm.q1]);
        assert_eq!(t.qubit_coupling(), dm.qubit_coupling());
    }
}
