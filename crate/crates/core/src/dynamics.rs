//! Driven evolution of the bound-state amplitudes under `A₀ cos(ωt) z`.
//!
//! In the interaction picture the amplitudes obey
//! `iħ ċ_k = A₀ cos(ωt) Σ_n Z_kn e^{iω_kn t} c_n`, integrated with fixed-step
//! classic Runge–Kutta.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::dipole::DipoleMatrix;
use crate::error::{Error, Result};
use crate::model::ExpSinePotential;
use crate::spectral::{BasisSpec, RadialProblem};
use crate::model::RadialPotential;
use crate::units::UnitSystem;

/// Steps per drive period.
pub const STEPS_PER_PERIOD: usize = 200;
/// Recorder samples per drive period.
pub const SAMPLES_PER_PERIOD: usize = 20;
/// Horizon in units of the two-level Rabi period.
pub const RABI_PERIODS: f64 = 4.0;
/// Abort once `|1 - Σ|c|²|` exceeds this.
pub const MAX_NORM_DEFICIT: f64 = 1e-6;
/// Horizon in drive periods when there is no coupling to set a Rabi period.
const UNCOUPLED_PERIODS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    /// `A₀`, energy per length.
    pub amplitude: f64,
    /// Angular frequency.
    pub omega: f64,
    /// Level index populated at `t = 0`; `None` means `q1`.
    pub initial: Option<usize>,
    pub t_max: f64,
    /// Recorder interval; rounded to a whole number of steps.
    pub stride: f64,
    pub steps_per_period: usize,
    /// Keep every recorded amplitude vector in the trajectory.
    pub keep_amplitudes: bool,
}

impl DriveSpec {
    pub fn new(amplitude: f64, omega: f64, t_max: f64) -> Result<Self> {
        let spec = Self {
            amplitude,
            omega,
            initial: None,
            t_max,
            stride: 2.0 * PI / omega / SAMPLES_PER_PERIOD as f64,
            steps_per_period: STEPS_PER_PERIOD,
            keep_amplitudes: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Drive at `omega_rel × ω_res` lasting `RABI_PERIODS` resonant Rabi periods.
    pub fn for_qubit(dm: &DipoleMatrix, amplitude: f64, omega_rel: f64) -> Result<Self> {
        Discretization::default().qubit_drive(dm, amplitude, omega_rel)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "drive amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "drive frequency must be positive, got {}",
                self.omega
            )));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if !(self.stride > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "recorder stride must be positive, got {}",
                self.stride
            )));
        }
        if self.steps_per_period == 0 {
            return Err(Error::InvalidParameter("steps per period must be positive".into()));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn dt(&self) -> f64 {
        self.period() / self.steps_per_period as f64
    }

    pub fn with_steps_per_period(mut self, steps: usize) -> Self {
        let stride_steps = self.stride / self.dt();
        self.steps_per_period = steps;
        self.stride = stride_steps * self.dt();
        self
    }
}

/// Time-step, recorder and horizon settings shared by every run of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    /// Horizon in two-level Rabi periods.
    pub rabi_periods: f64,
    pub steps_per_period: usize,
    pub samples_per_period: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            rabi_periods: RABI_PERIODS,
            steps_per_period: STEPS_PER_PERIOD,
            samples_per_period: SAMPLES_PER_PERIOD,
        }
    }
}

impl Discretization {
    /// `rabi_periods` Rabi periods, or `UNCOUPLED_PERIODS` drive periods when
    /// the Rabi period is infinite.
    pub fn horizon(&self, dm: &DipoleMatrix, amplitude: f64, omega: f64) -> f64 {
        let t = rabi_period(dm, amplitude);
        if t.is_finite() {
            self.rabi_periods * t
        } else {
            UNCOUPLED_PERIODS * 2.0 * PI / omega
        }
    }

    /// Drive at `omega` lasting `t_max` with these step and sample counts.
    pub fn drive(&self, amplitude: f64, omega: f64, t_max: f64) -> Result<DriveSpec> {
        if self.samples_per_period == 0 || !(self.rabi_periods > 0.0) {
            return Err(Error::InvalidParameter(
                "samples per period and Rabi periods must be positive".into(),
            ));
        }
        let mut spec = DriveSpec::new(amplitude, omega, t_max)?;
        spec.steps_per_period = self.steps_per_period;
        spec.stride = spec.period() / self.samples_per_period as f64;
        spec.validate()?;
        Ok(spec)
    }

    /// Drive at `omega_rel × ω_res` over the default horizon.
    pub fn qubit_drive(&self, dm: &DipoleMatrix, amplitude: f64, omega_rel: f64) -> Result<DriveSpec> {
        let omega = omega_rel * dm.resonance_frequency();
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "drive frequency must be positive, got {omega}"
            )));
        }
        self.drive(amplitude, omega, self.horizon(dm, amplitude, omega))
    }
}

/// `2πħ / (A₀ |Z_q1q2|)`.
pub fn rabi_period(dm: &DipoleMatrix, amplitude: f64) -> f64 {
    2.0 * PI * dm.units.hbar() / (amplitude * dm.qubit_coupling())
}

/// Default horizon: `RABI_PERIODS` Rabi periods, or `UNCOUPLED_PERIODS`
/// drive periods when the Rabi period is infinite.
pub fn horizon(dm: &DipoleMatrix, amplitude: f64, omega: f64) -> f64 {
    Discretization::default().horizon(dm, amplitude, omega)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub pop_q1: Vec<f64>,
    pub pop_q2: Vec<f64>,
    /// Population outside the qubit pair.
    pub leakage: Vec<f64>,
    /// `|1 - Σ|c|²|`.
    pub norm_deficit: Vec<f64>,
    /// Recorded amplitude vectors when requested.
    pub amplitudes: Vec<Vec<Complex64>>,
    /// Amplitudes at `t_max`.
    pub final_amplitudes: Vec<Complex64>,
    pub dt: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn max_norm_deficit(&self) -> f64 {
        self.norm_deficit.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_pop_q1(&self) -> f64 {
        self.pop_q1.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Trapezoid average of the leakage over the whole record.
    pub fn averaged_leakage(&self) -> Result<f64> {
        let t0 = *self.times.first().unwrap_or(&0.0);
        let t1 = *self.times.last().unwrap_or(&0.0);
        time_averaged_leakage(self, (t0, t1))
    }
}

/// Trapezoid average of the recorded leakage over `window`; samples outside
/// the window are ignored and the window is clipped to the recorded range.
pub fn time_averaged_leakage(traj: &Trajectory, window: (f64, f64)) -> Result<f64> {
    let (a, b) = window;
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.leakage)
        .filter(|(&t, _)| t >= a && t <= b)
        .map(|(&t, &l)| (t, l))
        .collect();
    if pts.len() < 2 || !(b > a) {
        return Err(Error::InvalidParameter(format!(
            "averaging window [{a}, {b}] holds fewer than two samples"
        )));
    }
    let area: f64 = pts
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum();
    Ok(area / (pts[pts.len() - 1].0 - pts[0].0))
}

/// Right-hand side evaluator with the couplings flattened row-major.
struct Rhs<'a> {
    n: usize,
    z: Vec<f64>,
    /// `E_k / ħ`.
    freq: Vec<f64>,
    /// `A₀ / ħ`.
    strength: f64,
    omega: f64,
    scratch: &'a mut Vec<Complex64>,
}

impl Rhs<'_> {
    fn phases(&self, t: f64) -> Vec<Complex64> {
        self.freq.iter().map(|&w| Complex64::cis(w * t)).collect()
    }

    /// `out = ċ` at time `t` given the phases `p_k = e^{iE_k t/ħ}`.
    fn eval(&mut self, t: f64, p: &[Complex64], c: &[Complex64], out: &mut [Complex64]) {
        let f = self.strength * (self.omega * t).cos();
        for ((d, &pk), &ck) in self.scratch.iter_mut().zip(p).zip(c) {
            *d = pk.conj() * ck;
        }
        for k in 0..self.n {
            let row = &self.z[k * self.n..(k + 1) * self.n];
            let mut acc = Complex64::new(0.0, 0.0);
            for (zkn, dn) in row.iter().zip(self.scratch.iter()) {
                if *zkn != 0.0 {
                    acc += dn * *zkn;
                }
            }
            // -i f p_k acc
            let v = p[k] * acc * f;
            out[k] = Complex64::new(v.im, -v.re);
        }
    }
}

fn norm_deficit(c: &[Complex64]) -> f64 {
    (1.0 - c.iter().map(|x| x.norm_sqr()).sum::<f64>()).abs()
}

/// Integrates from `t0` to `t1` (either direction) with steps no longer than
/// `dt`, calling `record(step, t, c)` after every step and once at the start.
fn integrate(
    dm: &DipoleMatrix,
    amplitude: f64,
    omega: f64,
    c0: &[Complex64],
    (t0, t1): (f64, f64),
    dt: f64,
    mut record: impl FnMut(usize, f64, &[Complex64]),
) -> Result<(Vec<Complex64>, usize)> {
    let n = dm.len();
    let hbar = dm.units.hbar();
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    let mut rhs = Rhs {
        n,
        z: (0..n * n).map(|i| dm.z[(i / n, i % n)]).collect(),
        freq: dm.levels.iter().map(|l| l.energy / hbar).collect(),
        strength: amplitude / hbar,
        omega,
        scratch: &mut scratch,
    };
    let steps = ((t1 - t0).abs() / dt - 1e-9).ceil().max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    let mut c = c0.to_vec();
    let mut k1 = vec![Complex64::new(0.0, 0.0); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let mut p0 = rhs.phases(t0);
    record(0, t0, &c);
    for step in 0..steps {
        let t = t0 + step as f64 * h;
        let tm = t + 0.5 * h;
        let te = t0 + (step + 1) as f64 * h;
        let pm = rhs.phases(tm);
        let pe = rhs.phases(te);
        rhs.eval(t, &p0, &c, &mut k1);
        for i in 0..n {
            tmp[i] = c[i] + k1[i] * (0.5 * h);
        }
        rhs.eval(tm, &pm, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = c[i] + k2[i] * (0.5 * h);
        }
        rhs.eval(tm, &pm, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = c[i] + k3[i] * h;
        }
        rhs.eval(te, &pe, &tmp, &mut k4);
        for i in 0..n {
            c[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        let deficit = norm_deficit(&c);
        if deficit > MAX_NORM_DEFICIT {
            return Err(Error::StepSize { deficit, time: te });
        }
        p0 = pe;
        record(step + 1, te, &c);
    }
    Ok((c, steps))
}

fn unit_vector(n: usize, k: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    c[k] = Complex64::new(1.0, 0.0);
    c
}

/// Propagates from the initial level over `[0, t_max]`.
pub fn evolve(dm: &DipoleMatrix, drive: &DriveSpec) -> Result<Trajectory> {
    drive.validate()?;
    let n = dm.len();
    let initial = drive.initial.unwrap_or(dm.q1);
    if initial >= n {
        return Err(Error::InvalidParameter(format!(
            "initial level {initial} out of range ({n} levels)"
        )));
    }
    let dt = drive.dt();
    let total = ((drive.t_max / dt) - 1e-9).ceil().max(1.0) as usize;
    let stride = ((drive.stride / dt).round() as usize).max(1);
    let (q1, q2) = (dm.q1, dm.q2);
    let mut traj = Trajectory {
        times: Vec::new(),
        pop_q1: Vec::new(),
        pop_q2: Vec::new(),
        leakage: Vec::new(),
        norm_deficit: Vec::new(),
        amplitudes: Vec::new(),
        final_amplitudes: Vec::new(),
        dt,
        steps: total,
    };
    let keep = drive.keep_amplitudes;
    let (c, _) = integrate(
        dm,
        drive.amplitude,
        drive.omega,
        &unit_vector(n, initial),
        (0.0, drive.t_max),
        dt,
        |step, t, c| {
            if step % stride != 0 && step != total {
                return;
            }
            let p1 = c[q1].norm_sqr();
            let p2 = c[q2].norm_sqr();
            let outside: f64 = c
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != q1 && k != q2)
                .map(|(_, x)| x.norm_sqr())
                .sum();
            traj.times.push(t);
            traj.pop_q1.push(p1);
            traj.pop_q2.push(p2);
            traj.leakage.push(outside);
            traj.norm_deficit.push(norm_deficit(c));
            if keep {
                traj.amplitudes.push(c.to_vec());
            }
        },
    )?;
    traj.final_amplitudes = c;
    Ok(traj)
}

/// `|⟨c(0)|c⟩|²` after evolving to `t_max` and integrating the same drive back
/// to `t = 0`.
pub fn time_reversal_fidelity(dm: &DipoleMatrix, drive: &DriveSpec) -> Result<f64> {
    let forward = evolve(dm, drive)?;
    let initial = drive.initial.unwrap_or(dm.q1);
    let (back, _) = integrate(
        dm,
        drive.amplitude,
        drive.omega,
        &forward.final_amplitudes,
        (drive.t_max, 0.0),
        drive.dt(),
        |_, _, _| {},
    )?;
    Ok(back[initial].norm_sqr())
}

/// Times at which `series` crosses `level`, linearly interpolated.
pub fn crossings(times: &[f64], series: &[f64], level: f64) -> Vec<f64> {
    times
        .windows(2)
        .zip(series.windows(2))
        .filter_map(|(t, s)| {
            let (a, b) = (s[0] - level, s[1] - level);
            if a == 0.0 {
                Some(t[0])
            } else if a * b < 0.0 {
                Some(t[0] + (t[1] - t[0]) * a / (a - b))
            } else {
                None
            }
        })
        .collect()
}

/// Period of the `q1` population oscillation estimated from its crossings of
/// one half (two crossings per period).
pub fn population_period(traj: &Trajectory) -> Option<f64> {
    let x = crossings(&traj.times, &traj.pop_q1, 0.5);
    // drop crossings closer than a few samples to each other (drive ripple)
    let min_gap = 10.0 * (traj.times.get(1)? - traj.times[0]);
    let mut kept: Vec<f64> = Vec::new();
    for t in x {
        if kept.last().is_none_or(|&l| t - l > min_gap) {
            kept.push(t);
        }
    }
    if kept.len() < 3 {
        return None;
    }
    Some(2.0 * (kept[kept.len() - 1] - kept[0]) / (kept.len() - 1) as f64)
}

/// `(E_q2 - E_q1)/ħ`.
pub fn resonance_frequency(dm: &DipoleMatrix) -> f64 {
    dm.resonance_frequency()
}

/// Averaged leakage and largest norm deficit of one run.
fn leakage_of(dm: &DipoleMatrix, drive: &DriveSpec) -> Result<(f64, f64)> {
    let traj = evolve(dm, drive)?;
    Ok((traj.averaged_leakage()?, traj.max_norm_deficit()))
}

/// Averaged leakage at resonance over the default horizon.
pub fn resonant_leakage(dm: &DipoleMatrix, amplitude: f64) -> Result<f64> {
    let drive = Discretization::default().qubit_drive(dm, amplitude, 1.0)?;
    Ok(leakage_of(dm, &drive)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrengthRow {
    pub amplitude: f64,
    pub leakage: f64,
    pub max_norm_deficit: f64,
}

/// `L_p` at resonance for every amplitude of `grid`, in grid order.
pub fn leakage_vs_strength(
    dm: &DipoleMatrix,
    grid: &[f64],
    disc: &Discretization,
) -> Result<Vec<StrengthRow>> {
    if grid.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::InvalidParameter("drive amplitudes must be positive".into()));
    }
    grid.par_iter()
        .map(|&a| {
            let (leakage, max_norm_deficit) = leakage_of(dm, &disc.qubit_drive(dm, a, 1.0)?)?;
            Ok(StrengthRow {
                amplitude: a,
                leakage,
                max_norm_deficit,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningRow {
    /// `ω / ω_res`.
    pub omega_rel: f64,
    pub leakage: f64,
    /// `L_p(ω) / L_p(ω_res)`.
    pub normalized: f64,
    pub max_norm_deficit: f64,
}

/// `L_p` at each `ω/ω_res` of `grid`, normalized to the resonant value. Every
/// run uses the resonant horizon.
pub fn detuning_sweep(
    dm: &DipoleMatrix,
    amplitude: f64,
    grid: &[f64],
    disc: &Discretization,
) -> Result<Vec<DetuningRow>> {
    if grid.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidParameter("relative frequencies must be positive".into()));
    }
    let w_res = dm.resonance_frequency();
    let t_max = disc.horizon(dm, amplitude, w_res);
    let run = |rel: f64| leakage_of(dm, &disc.drive(amplitude, rel * w_res, t_max)?);
    let (reference, _) = run(1.0)?;
    let values: Vec<(f64, f64)> = grid.par_iter().map(|&rel| run(rel)).collect::<Result<_>>()?;
    Ok(grid
        .iter()
        .zip(values)
        .map(|(&omega_rel, (leakage, max_norm_deficit))| DetuningRow {
            omega_rel,
            leakage,
            normalized: leakage / reference,
            max_norm_deficit,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthRow {
    pub depth: f64,
    pub leakage: f64,
    pub omega_res: f64,
    pub max_norm_deficit: f64,
}

/// Resonant `L_p` of the exp-sine family at each depth of `grid`.
pub fn v0_leakage_sweep(
    template: &ExpSinePotential,
    grid: &[f64],
    amplitude: f64,
    basis: BasisSpec,
    disc: &Discretization,
) -> Result<Vec<DepthRow>> {
    grid.par_iter()
        .map(|&depth| {
            let dm = expsine_dipole(template, depth, basis)?;
            let (leakage, max_norm_deficit) =
                leakage_of(&dm, &disc.qubit_drive(&dm, amplitude, 1.0)?)?;
            Ok(DepthRow {
                depth,
                leakage,
                omega_res: dm.resonance_frequency(),
                max_norm_deficit,
            })
        })
        .collect()
}

/// Couplings of the exp-sine potential of depth `depth`.
pub fn expsine_dipole(template: &ExpSinePotential, depth: f64, basis: BasisSpec) -> Result<DipoleMatrix> {
    let p = ExpSinePotential::new(depth, template.decay, template.wavenumber)?;
    let problem = RadialProblem::new(RadialPotential::ExpSine(p), UnitSystem::Atomic);
    DipoleMatrix::from_problem(&problem, basis)
}
