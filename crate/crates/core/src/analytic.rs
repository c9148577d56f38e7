//! Exact bound states of piecewise-constant layered devices.
//!
//! Inside each shell the radial function is a combination of spherical
//! Bessel functions (`j_ℓ`, `y_ℓ` where `E > V`, `i_ℓ`, `k_ℓ` where `E < V`).
//! The regular solution of the innermost shell is carried outward shell by
//! shell as the pair `(R, R')`, applying the interface conditions of the
//! chosen kinetic form, and compared with the decaying solution of the outer
//! barrier. The mismatch vanishes exactly at bound-state energies.

use log::warn;
use rayon::prelude::*;

use crate::bessel::{spherical_bessel_with_derivative, BesselKind};
use crate::error::{Error, Result};
use crate::model::LayeredDevice;
use crate::spectral::KineticForm;
use crate::units::UnitSystem;

/// Default energy-scan resolution, eV.
pub const DEFAULT_SCAN_STEP: f64 = 2e-5;
/// Bisection stops once the bracket is narrower than this, eV.
pub const ROOT_TOL: f64 = 1e-12;
/// Roots closer than this trigger a quasi-degeneracy warning.
pub const CLOSE_ROOT_WARNING: f64 = 1e-6;

/// Solution family inside one shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShellWave {
    /// `A j_ℓ(kr) + B y_ℓ(kr)`.
    Oscillatory { k: f64 },
    /// `A i_ℓ(κr) + B k_ℓ(κr)`.
    Evanescent { kappa: f64 },
}

impl ShellWave {
    fn new(energy: f64, potential: f64, mass: f64, c: f64) -> Self {
        let q2 = (energy - potential) * mass / c;
        if q2 >= 0.0 {
            // E = V exactly would need power-law solutions; nudge instead.
            ShellWave::Oscillatory {
                k: q2.sqrt().max(1e-12),
            }
        } else {
            ShellWave::Evanescent { kappa: (-q2).sqrt() }
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            ShellWave::Oscillatory { k } => k,
            ShellWave::Evanescent { kappa } => kappa,
        }
    }

    /// `(f, f')` and `(g, g')` at `r`, derivatives with respect to `r`.
    fn pair(&self, l: usize, r: f64) -> ((f64, f64), (f64, f64)) {
        let q = self.scale();
        let x = q * r;
        let (fk, gk) = match self {
            ShellWave::Oscillatory { .. } => (BesselKind::J, BesselKind::Y),
            ShellWave::Evanescent { .. } => (BesselKind::I, BesselKind::K),
        };
        let (f, df) = spherical_bessel_with_derivative(fk, l, x).expect("x > 0");
        let (g, dg) = spherical_bessel_with_derivative(gk, l, x).expect("x > 0");
        ((f, q * df), (g, q * dg))
    }
}

/// Coefficients `(A, B)` and wave type of one shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellSolution {
    pub inner: f64,
    pub outer: f64,
    pub mass: f64,
    pub wave: ShellWave,
    pub a: f64,
    pub b: f64,
}

/// Piecewise solution of one channel at a given energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSolution {
    pub l: usize,
    pub energy: f64,
    pub shells: Vec<ShellSolution>,
}

impl ChannelSolution {
    /// `(R(r), R'(r))` using the shell that contains `r` (half-open).
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let s = self
            .shells
            .iter()
            .find(|s| r < s.outer)
            .unwrap_or_else(|| self.shells.last().expect("shells"));
        self.eval_in(s, r)
    }

    fn eval_in(&self, s: &ShellSolution, r: f64) -> (f64, f64) {
        let ((f, df), (g, dg)) = s.wave.pair(self.l, r);
        (s.a * f + s.b * g, s.a * df + s.b * dg)
    }

    /// Relative jumps of the matched quantities at every interface, as
    /// `(value jump, flux jump)`: `(R, R'/m)` for the radial form, `(u, u'/m)`
    /// for the reduced form.
    pub fn continuity_residuals(&self, form: KineticForm) -> Vec<(f64, f64)> {
        self.shells
            .windows(2)
            .map(|w| {
                let r = w[0].outer;
                let (ri, di) = self.eval_in(&w[0], r);
                let (ro, d_o) = self.eval_in(&w[1], r);
                let (vi, fi, vo, fo) = match form {
                    KineticForm::Radial => (ri, di / w[0].mass, ro, d_o / w[1].mass),
                    KineticForm::Reduced => (
                        r * ri,
                        (ri + r * di) / w[0].mass,
                        r * ro,
                        (ro + r * d_o) / w[1].mass,
                    ),
                };
                let vs = vi.abs().max(vo.abs()).max(1e-300);
                let fs = fi.abs().max(fo.abs()).max(1e-300);
                ((vi - vo).abs() / vs, (fi - fo).abs() / fs)
            })
            .collect()
    }
}

/// `R'` on the outer side of an interface at `r` given `(R, R'_in)`.
fn cross_interface(form: KineticForm, r: f64, value: f64, slope: f64, m_in: f64, m_out: f64) -> f64 {
    match form {
        KineticForm::Radial => slope * m_out / m_in,
        KineticForm::Reduced => (m_out * (value + r * slope) / m_in - value) / r,
    }
}

fn check_energy(device: &LayeredDevice, energy: f64) -> Result<()> {
    let lo = device.min_potential();
    let hi = device.asymptote();
    if !(energy > lo && energy < hi) {
        return Err(Error::Domain(format!(
            "energy {energy} outside ({lo}, {hi}) where bound states can exist"
        )));
    }
    Ok(())
}

/// Propagates the regular solution outward. Returns the shell solutions
/// (the outer barrier matched in value only) and the normalized mismatch.
fn propagate(
    device: &LayeredDevice,
    l: usize,
    energy: f64,
    units: UnitSystem,
    form: KineticForm,
) -> (Vec<ShellSolution>, f64) {
    let c = units.hbar2_over_2me();
    let shells = device.shells();
    let mut out = Vec::with_capacity(shells.len());
    let first = shells[0];
    let wave = ShellWave::new(energy, first.potential, first.mass, c);
    // Carry a running positive scale so values stay O(1).
    let mut sol = ShellSolution {
        inner: 0.0,
        outer: first.outer_radius,
        mass: first.mass,
        wave,
        a: 1.0,
        b: 0.0,
    };
    if shells.len() == 1 {
        out.push(sol);
        return (out, f64::NAN);
    }
    let ((f, df), _) = wave.pair(l, first.outer_radius);
    let norm = f.hypot(df);
    sol.a = 1.0 / norm;
    let (mut value, mut slope) = (f / norm, df / norm);
    out.push(sol);

    let mut det = 0.0;
    for idx in 1..shells.len() {
        let r = shells[idx - 1].outer_radius;
        let m_in = shells[idx - 1].mass;
        let s = shells[idx];
        let slope_out = cross_interface(form, r, value, slope, m_in, s.mass);
        let wave = ShellWave::new(energy, s.potential, s.mass, c);
        let ((f, df), (g, dg)) = wave.pair(l, r);
        if idx == shells.len() - 1 {
            // outer barrier: only the decaying k_ℓ solution
            let det_raw = value * dg - slope_out * g;
            det = det_raw / (value.hypot(slope_out) * g.hypot(dg));
            out.push(ShellSolution {
                inner: r,
                outer: f64::INFINITY,
                mass: s.mass,
                wave,
                a: 0.0,
                b: value / g,
            });
            break;
        }
        let w = f * dg - df * g;
        let a = (value * dg - slope_out * g) / w;
        let b = (f * slope_out - df * value) / w;
        let ((fo, dfo), (go, dgo)) = wave.pair(l, s.outer_radius);
        let v_end = a * fo + b * go;
        let d_end = a * dfo + b * dgo;
        let scale = v_end.hypot(d_end);
        out.push(ShellSolution {
            inner: r,
            outer: s.outer_radius,
            mass: s.mass,
            wave,
            a,
            b,
        });
        value = v_end / scale;
        slope = d_end / scale;
        // rescale this and every earlier shell consistently
        for sh in out.iter_mut() {
            sh.a /= scale;
            sh.b /= scale;
        }
    }
    (out, det)
}

/// Normalized mismatch between the propagated regular solution and the
/// decaying outer solution; zero exactly at bound-state energies.
pub fn matching_determinant(
    device: &LayeredDevice,
    l: usize,
    energy: f64,
    units: UnitSystem,
    form: KineticForm,
) -> Result<f64> {
    check_energy(device, energy)?;
    if device.shells().len() < 2 {
        return Err(Error::InvalidParameter("device has no finite shells".into()));
    }
    Ok(propagate(device, l, energy, units, form).1)
}

/// Piecewise solution at `energy` (normally a refined root).
pub fn channel_solution(
    device: &LayeredDevice,
    l: usize,
    energy: f64,
    units: UnitSystem,
    form: KineticForm,
) -> Result<ChannelSolution> {
    check_energy(device, energy)?;
    let (shells, _) = propagate(device, l, energy, units, form);
    Ok(ChannelSolution { l, energy, shells })
}

/// Roots of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRoots {
    pub l: usize,
    pub energies: Vec<f64>,
    /// Index pairs of roots closer than [`CLOSE_ROOT_WARNING`].
    pub close_pairs: Vec<(usize, usize)>,
}

/// Bisection to at least [`ROOT_TOL`]; it keeps going to the last
/// representable bracket because the mismatch of inner-well states is
/// amplified exponentially through the barriers.
fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All bound energies of channel `l`: sign changes on a uniform scan of
/// spacing `step` over `(V_min, V_∞)`, refined by bisection. Cells where
/// `|D|` has a local minimum without a sign change are rescanned 64× finer
/// to catch nearly degenerate pairs.
pub fn find_bound_states(
    device: &LayeredDevice,
    l: usize,
    step: f64,
    units: UnitSystem,
    form: KineticForm,
) -> Result<ChannelRoots> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("scan step must be positive, got {step}")));
    }
    let lo = device.min_potential();
    let hi = device.asymptote();
    let f = |e: f64| propagate(device, l, e, units, form).1;
    let n = ((hi - lo) / step).ceil() as usize;
    let edge = 1e-9 * (hi - lo);
    let grid: Vec<f64> = (0..=n)
        .map(|i| (lo + i as f64 * step).clamp(lo + edge, hi - edge))
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&e| f(e)).collect();
    for (e, v) in [(grid[0], vals[0]), (grid[n], vals[n])] {
        if v.abs() < 1e-13 {
            return Err(Error::WidenRange(e));
        }
    }

    let mut brackets: Vec<(f64, f64, f64)> = Vec::new();
    for i in 0..n {
        if (vals[i] < 0.0) != (vals[i + 1] < 0.0) {
            brackets.push((grid[i], grid[i + 1], vals[i]));
        } else if i > 0 && i + 1 < n {
            // |D| dips without a sign change: look for a hidden pair
            let (a, b, c) = (vals[i - 1].abs(), vals[i].abs(), vals[i + 1].abs());
            if b < a && b < c && b < 1e-2 {
                let sub = 64;
                let (e0, e1) = (grid[i - 1], grid[i + 1]);
                let h = (e1 - e0) / sub as f64;
                let mut prev = (e0, vals[i - 1]);
                for j in 1..=sub {
                    let e = e0 + j as f64 * h;
                    let v = f(e);
                    if (prev.1 < 0.0) != (v < 0.0) {
                        brackets.push((prev.0, e, prev.1));
                    }
                    prev = (e, v);
                }
            }
        }
    }
    let mut energies: Vec<f64> = brackets
        .into_iter()
        .map(|(a, b, fa)| bisect(&f, a, b, fa))
        .collect();
    energies.sort_by(f64::total_cmp);
    energies.dedup_by(|a, b| (*a - *b).abs() < 10.0 * ROOT_TOL);

    let mut close_pairs = Vec::new();
    for i in 1..energies.len() {
        if energies[i] - energies[i - 1] < CLOSE_ROOT_WARNING {
            warn!(
                "l = {l}: roots {:.12} and {:.12} are closer than {CLOSE_ROOT_WARNING:e}; \
                 quasi-degenerate pair",
                energies[i - 1],
                energies[i]
            );
            close_pairs.push((i - 1, i));
        }
    }
    Ok(ChannelRoots {
        l,
        energies,
        close_pairs,
    })
}

/// Exact bound energies for `l = 0, 1, …` until a channel is empty (or
/// through `l_max`).
pub fn exact_spectrum(
    device: &LayeredDevice,
    l_max: Option<usize>,
    step: f64,
    units: UnitSystem,
    form: KineticForm,
) -> Result<Vec<ChannelRoots>> {
    let batch = rayon::current_num_threads().max(1);
    let cap = l_max.unwrap_or(200);
    let mut out = Vec::new();
    let mut l0 = 0;
    'outer: while l0 <= cap {
        let hi = (l0 + batch - 1).min(cap);
        let solved: Vec<Result<ChannelRoots>> = (l0..=hi)
            .into_par_iter()
            .map(|l| find_bound_states(device, l, step, units, form))
            .collect();
        for ch in solved {
            let ch = ch?;
            if ch.energies.is_empty() && l_max.is_none() {
                break 'outer;
            }
            out.push(ch);
        }
        l0 = hi + 1;
    }
    while out.last().is_some_and(|c| c.energies.is_empty()) {
        out.pop();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{device_preset, Preset, Shell};

    const SC: UnitSystem = UnitSystem::Semiconductor;

    #[test]
    fn deep_well_approaches_hard_wall() {
        // V = 0 for r < 2 nm, V = 2000 eV outside, m = 0.13 everywhere
        let m = 0.13;
        let rw = 2.0;
        let dev = LayeredDevice::new(
            &[Shell { outer_radius: rw, potential: 0.0, mass: m }],
            (2000.0, m),
        )
        .unwrap();
        let roots = find_bound_states(&dev, 0, 1e-2, SC, KineticForm::Radial).unwrap();
        let c = SC.hbar2_over_2me() / m;
        for (n, e) in roots.energies.iter().take(3).enumerate() {
            let hard = c * ((n + 1) as f64 * std::f64::consts::PI / rw).powi(2);
            // leaks by roughly 2/(κ R_w)
            let kappa = (2000.0 / c).sqrt();
            assert!(*e < hard && (hard - e) / hard < 3.0 / (kappa * rw), "n={n} {e} vs {hard}");
        }
    }

    #[test]
    fn determinant_is_finite_over_the_range() {
        let dev = device_preset(Preset::Device1).unwrap();
        for i in 1..10_000 {
            let e = 0.9 * i as f64 / 10_000.0;
            let d = matching_determinant(&dev, 0, e, SC, KineticForm::Radial).unwrap();
            assert!(d.is_finite() && d.abs() <= 1.0 + 1e-12);
        }
        assert!(matches!(
            matching_determinant(&dev, 0, 0.95, SC, KineticForm::Radial),
            Err(Error::Domain(_))
        ));
        assert!(matching_determinant(&dev, 0, 0.0, SC, KineticForm::Radial).is_err());
    }

    #[test]
    fn residuals_vanish_at_roots() {
        let dev = device_preset(Preset::Device1).unwrap();
        for form in [KineticForm::Radial, KineticForm::Reduced] {
            for l in [0, 1, 4] {
                let roots = find_bound_states(&dev, l, DEFAULT_SCAN_STEP, SC, form).unwrap();
                assert!(!roots.energies.is_empty());
                for &e in &roots.energies {
                    let sol = channel_solution(&dev, l, e, SC, form).unwrap();
                    for (dv, df) in sol.continuity_residuals(form) {
                        assert!(dv < 1e-10 && df < 1e-10, "l={l} E={e}: {dv:e} {df:e}");
                    }
                }
            }
        }
    }

    #[test]
    fn root_count_stable_under_halving() {
        let dev = device_preset(Preset::Device2).unwrap();
        for l in 0..3 {
            let a = find_bound_states(&dev, l, 2e-5, SC, KineticForm::Radial).unwrap();
            let b = find_bound_states(&dev, l, 1e-5, SC, KineticForm::Radial).unwrap();
            assert_eq!(a.energies.len(), b.energies.len());
            for (x, y) in a.energies.iter().zip(&b.energies) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn empty_channel_beyond_last_bound_l() {
        let dev = device_preset(Preset::Device1).unwrap();
        let spectrum = exact_spectrum(&dev, None, 1e-4, SC, KineticForm::Radial).unwrap();
        let last = spectrum.len();
        let beyond = find_bound_states(&dev, last, 1e-4, SC, KineticForm::Radial).unwrap();
        assert!(beyond.energies.is_empty());
    }
}
