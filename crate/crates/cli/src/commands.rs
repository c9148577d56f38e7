use qdot_core::analytic::{exact_spectrum, DEFAULT_SCAN_STEP};
use qdot_core::config::{Config, DeviceChoice, SweepKind};
use qdot_core::dipole::DipoleMatrix;
use qdot_core::dynamics::{
    detuning_sweep, evolve, leakage_vs_strength, v0_leakage_sweep, StrengthRow,
};
use qdot_core::model::RadialPotential;
use qdot_core::report;
use qdot_core::spectral::{
    radial_profile, solve_spectrum, spectrum_rows, spectrum_sweep, Basis, SpectrumTable, SweepBasis,
};
use qdot_core::{Error, Result};
use serde_json::{json, Value};

/// Largest `|ΔE|` accepted by `oracle-check`, in the device's energy unit.
pub const ORACLE_TOL: f64 = 1e-6;

#[derive(Debug, Default)]
pub struct Outcome {
    /// `(file name, contents)`.
    pub files: Vec<(String, String)>,
    pub summary: Vec<String>,
    pub details: Vec<(String, Value)>,
    /// Set when the run completed but its check failed.
    pub failure: Option<String>,
}

impl Outcome {
    fn detail(&mut self, key: &str, value: Value) {
        self.details.push((key.to_string(), value));
    }

    pub fn check(&self) -> Result<()> {
        match &self.failure {
            Some(msg) => Err(Error::Domain(msg.clone())),
            None => Ok(()),
        }
    }
}

fn solve(config: &Config) -> Result<(Basis, SpectrumTable)> {
    let problem = config.problem()?;
    let basis = Basis::for_potential(config.basis, &problem.potential)?;
    let table = solve_spectrum(&basis, &problem, config.spectrum.l_max)?;
    Ok((basis, table))
}

fn dipole(config: &Config, out: &mut Outcome) -> Result<DipoleMatrix> {
    let (basis, table) = solve(config)?;
    out.detail("basis_size", json!(basis.size()));
    let dm = DipoleMatrix::build_with_threshold(&table, &basis, config.spectrum.threshold)?;
    let (a, b) = (dm.levels[dm.q1], dm.levels[dm.q2]);
    out.summary.push(format!(
        "qubit (l={}, n_r={}) -> (l={}, n_r={}): omega_res = {:.6e}, |Z| = {:.6e}, {} levels",
        a.l,
        a.n_r,
        b.l,
        b.n_r,
        dm.resonance_frequency(),
        dm.qubit_coupling(),
        dm.len()
    ));
    out.detail("omega_res", json!(dm.resonance_frequency()));
    out.detail("qubit_coupling", json!(dm.qubit_coupling()));
    out.detail("levels", json!(dm.len()));
    Ok(dm)
}

pub fn spectrum(config: &Config) -> Result<Outcome> {
    let mut out = Outcome::default();
    let threshold = config.spectrum.threshold;
    if let Some(grid) = config.spectrum.rc {
        let sweep = SweepBasis::default();
        let tables = spectrum_sweep(&grid.linear(), config.spectrum.l_max, sweep, config.kinetic)?;
        let rows: Vec<_> = tables.iter().flat_map(|(rc, t)| spectrum_rows(*rc, t)).collect();
        let localized: usize = tables.iter().map(|(_, t)| t.localized(threshold).len()).sum();
        out.summary.push(format!(
            "{} core radii, {} bound states, {} localized",
            tables.len(),
            rows.len(),
            localized
        ));
        out.detail("core_radii", json!(tables.len()));
        out.detail("knot_spacing_nm", json!(sweep.spacing));
        out.files.push(("spectrum.csv".into(), report::spectrum_csv(&rows)?));
        return Ok(out);
    }
    let (basis, table) = solve(config)?;
    out.detail("basis_size", json!(basis.size()));
    let rows = spectrum_rows(config.device.sweep_param()?, &table);
    let localized = table.localized(threshold);
    out.summary.push(format!(
        "{} bound states, {} localized (P_inner > {threshold})",
        rows.len(),
        localized.len()
    ));
    for s in &localized {
        out.summary.push(format!(
            "localized l={} n_r={} E={:.9e} P_inner={:.4}",
            s.l, s.n_r, s.energy, s.p_inner
        ));
    }
    out.files.push(("spectrum.csv".into(), report::spectrum_csv(&rows)?));
    if config.spectrum.densities {
        let states: Vec<_> = table
            .states()
            .map(|s| (s.l, s.n_r, radial_profile(&basis, &s.coeffs, config.spectrum.density_points)))
            .collect();
        out.files.push(("densities.csv".into(), report::density_csv(&states)?));
    }
    Ok(out)
}

pub fn drive(config: &Config) -> Result<Outcome> {
    let mut out = Outcome::default();
    let dm = dipole(config, &mut out)?;
    let drive = config
        .drive
        .discretization()
        .qubit_drive(&dm, config.drive.a0, config.drive.omega_rel)?;
    let traj = evolve(&dm, &drive)?;
    let leakage = traj.averaged_leakage()?;
    out.summary.push(format!(
        "min pop_q1 = {:.6e}, L_p = {:.6e}, max norm deficit = {:.3e}",
        traj.min_pop_q1(),
        leakage,
        traj.max_norm_deficit()
    ));
    out.detail("omega", json!(drive.omega));
    out.detail("dt", json!(traj.dt));
    out.detail("t_max", json!(drive.t_max));
    out.detail("steps", json!(traj.steps));
    out.detail("L_p", json!(leakage));
    out.detail("max_norm_deficit", json!(traj.max_norm_deficit()));
    out.files.push(("trajectory.csv".into(), report::trajectory_csv(&traj)?));
    out.files.push(("dipole.csv".into(), report::dipole_csv(&dm)?));
    Ok(out)
}

pub fn sweep(config: &Config) -> Result<Outcome> {
    let mut out = Outcome::default();
    let disc = config.drive.discretization();
    let scale = config.a0_display_scale();
    out.detail("steps_per_period", json!(disc.steps_per_period));
    let (name, csv, deficit) = match config.sweep.kind {
        SweepKind::Strength => {
            let dm = dipole(config, &mut out)?;
            let grid = config.sweep.a0.logarithmic();
            let rows = leakage_vs_strength(&dm, &grid, &disc)?;
            // amplitudes are reported in the units of the config keys
            let shown: Vec<StrengthRow> = rows
                .iter()
                .map(|r| StrengthRow {
                    amplitude: r.amplitude * scale,
                    ..*r
                })
                .collect();
            let deficit = rows.iter().map(|r| r.max_norm_deficit).fold(0.0, f64::max);
            out.summary.push(format!("{} drive strengths", rows.len()));
            ("strength.csv", report::strength_csv(&shown)?, deficit)
        }
        SweepKind::Detuning => {
            let dm = dipole(config, &mut out)?;
            let rows = detuning_sweep(&dm, config.drive.a0, &config.sweep.omega_rel.linear(), &disc)?;
            let deficit = rows.iter().map(|r| r.max_norm_deficit).fold(0.0, f64::max);
            let peak = rows.iter().map(|r| r.normalized).fold(0.0, f64::max);
            out.summary.push(format!(
                "{} frequencies, largest normalized L_p = {peak:.4e}",
                rows.len()
            ));
            ("detuning.csv", report::detuning_csv(&rows)?, deficit)
        }
        SweepKind::V0 => {
            let DeviceChoice::ExpSine(template) = config.device else {
                return Err(Error::Config("sweep.kind = \"v0\" needs device.preset = \"expsine\"".into()));
            };
            let grid = config.sweep.v0.linear();
            let blocks = config
                .sweep
                .v0_a0
                .iter()
                .map(|&a| Ok((a, v0_leakage_sweep(&template, &grid, a, config.basis, &disc)?)))
                .collect::<Result<Vec<_>>>()?;
            let deficit = blocks
                .iter()
                .flat_map(|(_, rows)| rows.iter().map(|r| r.max_norm_deficit))
                .fold(0.0, f64::max);
            out.summary.push(format!(
                "{} depths at {} amplitudes",
                grid.len(),
                blocks.len()
            ));
            ("v0.csv", report::depth_csv(&blocks)?, deficit)
        }
    };
    out.summary.push(format!("max norm deficit = {deficit:.3e}"));
    out.detail("max_norm_deficit", json!(deficit));
    out.files.push((name.into(), csv));
    Ok(out)
}

pub fn oracle_check(config: &Config) -> Result<Outcome> {
    let problem = config.problem()?;
    let RadialPotential::Layered(device) = &problem.potential else {
        return Err(Error::Config(
            "oracle-check needs a layered device (device1, device2, fig2 or custom)".into(),
        ));
    };
    let mut out = Outcome::default();
    let (basis, table) = solve(config)?;
    out.detail("basis_size", json!(basis.size()));
    let exact = exact_spectrum(
        device,
        config.spectrum.l_max,
        DEFAULT_SCAN_STEP,
        problem.units,
        config.kinetic,
    )?;
    let mut rows = Vec::new();
    let mut mismatched = Vec::new();
    let channels = exact.len().max(table.channels.len());
    for l in 0..channels {
        let ea = exact.get(l).map_or(&[][..], |c| &c.energies[..]);
        let es = table.channels.get(l).map_or(&[][..], |c| &c[..]);
        if ea.len() != es.len() {
            mismatched.push(format!("l={l}: {} exact, {} spectral", ea.len(), es.len()));
        }
        rows.extend(ea.iter().zip(es).map(|(&a, s)| (l, s.n_r, a, s.energy)));
    }
    let max = rows.iter().map(|r| (r.3 - r.2).abs()).fold(0.0, f64::max);
    let unit = problem.units.energy_suffix();
    out.summary.push(format!("max |dE| = {max:.3e} {unit} over {} states", rows.len()));
    out.detail("max_abs_dE", json!(max));
    out.files.push(("oracle.csv".into(), report::oracle_csv(&rows)?));
    if !mismatched.is_empty() {
        out.failure = Some(format!("bound-state counts differ: {}", mismatched.join("; ")));
    } else if max >= ORACLE_TOL {
        out.failure = Some(format!("max |dE| = {max:.3e} {unit} exceeds {ORACLE_TOL:.0e}"));
    }
    Ok(out)
}
