//! Run configuration read from TOML.
//!
//! Keys carry their unit in the name (`cutoff_nm`, `a0_meV_per_nm`, `v0_au`).
//! Every key is optional; [`Config::to_toml`] writes the fully resolved set so
//! a run can be repeated exactly.

use std::cell::RefCell;
use std::path::PathBuf;

use toml::{Table, Value};

use crate::dynamics::{Discretization, RABI_PERIODS, SAMPLES_PER_PERIOD, STEPS_PER_PERIOD};
use crate::error::{Error, Result};
use crate::model::{
    device_preset, ExpSinePotential, LayeredDevice, Preset, RadialPotential, Shell,
};
use crate::spectral::{BasisSpec, KineticForm, RadialProblem, LOCALIZED_THRESHOLD};
use crate::units::UnitSystem;

/// Device selected by `device.preset`.
#[derive(Debug, Clone, PartialEq)]
pub enum DeviceChoice {
    Preset(Preset),
    Custom(LayeredDevice),
    ExpSine(ExpSinePotential),
}

impl DeviceChoice {
    pub fn name(&self) -> &'static str {
        match self {
            DeviceChoice::Preset(Preset::Device1) => "device1",
            DeviceChoice::Preset(Preset::Device2) => "device2",
            DeviceChoice::Preset(Preset::Fig2 { .. }) => "fig2",
            DeviceChoice::Custom(_) => "custom",
            DeviceChoice::ExpSine(_) => "expsine",
        }
    }

    pub fn units(&self) -> UnitSystem {
        match self {
            DeviceChoice::ExpSine(_) => UnitSystem::Atomic,
            _ => UnitSystem::Semiconductor,
        }
    }

    pub fn potential(&self) -> Result<RadialPotential> {
        Ok(match self {
            DeviceChoice::Preset(p) => RadialPotential::Layered(device_preset(*p)?),
            DeviceChoice::Custom(d) => RadialPotential::Layered(d.clone()),
            DeviceChoice::ExpSine(p) => RadialPotential::ExpSine(*p),
        })
    }

    /// Value reported in the `sweep_param` column: the core radius of a
    /// layered device, `V₀` of the exp-sine potential.
    pub fn sweep_param(&self) -> Result<f64> {
        Ok(match self {
            DeviceChoice::ExpSine(p) => p.depth,
            other => match other.potential()? {
                RadialPotential::Layered(d) => d.interfaces().first().copied().unwrap_or(0.0),
                RadialPotential::ExpSine(p) => p.depth,
            },
        })
    }
}

/// Linear grid `min, …, max` with `steps` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn linear(&self) -> Vec<f64> {
        match self.steps {
            0 => vec![],
            1 => vec![self.min],
            n => (0..n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    /// Geometric spacing; needs `min > 0`.
    pub fn logarithmic(&self) -> Vec<f64> {
        match self.steps {
            0 => vec![],
            1 => vec![self.min],
            n => (0..n)
                .map(|i| self.min * (self.max / self.min).powf(i as f64 / (n - 1) as f64))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Strength,
    Detuning,
    V0,
}

impl SweepKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "strength" => Ok(SweepKind::Strength),
            "detuning" => Ok(SweepKind::Detuning),
            "v0" => Ok(SweepKind::V0),
            other => Err(Error::Config(format!(
                "sweep.kind: unknown value `{other}` (expected strength, detuning or v0)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Strength => "strength",
            SweepKind::Detuning => "detuning",
            SweepKind::V0 => "v0",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumConfig {
    pub l_max: Option<usize>,
    pub threshold: f64,
    pub densities: bool,
    pub density_points: usize,
    /// Core-radius sweep of the fixed-offset family, nm.
    pub rc: Option<Grid>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveConfig {
    /// Internal units (eV/nm or hartree/bohr).
    pub a0: f64,
    pub omega_rel: f64,
    pub rabi_periods: f64,
    pub steps_per_period: usize,
    pub samples_per_period: usize,
}

impl DriveConfig {
    pub fn discretization(&self) -> Discretization {
        Discretization {
            rabi_periods: self.rabi_periods,
            steps_per_period: self.steps_per_period,
            samples_per_period: self.samples_per_period,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub kind: SweepKind,
    /// Strength grid in internal units, geometric spacing.
    pub a0: Grid,
    pub omega_rel: Grid,
    pub v0: Grid,
    /// Amplitudes of the depth sweep, hartree/bohr.
    pub v0_a0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub device: DeviceChoice,
    pub basis: BasisSpec,
    pub kinetic: KineticForm,
    pub spectrum: SpectrumConfig,
    pub drive: DriveConfig,
    pub sweep: SweepConfig,
    pub output_dir: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

/// Scale from the `meV_per_nm` keys to eV/nm.
const MEV: f64 = 1e-3;

struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: RefCell<Vec<String>>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'static str) -> Result<Self> {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => return Err(Error::Config(format!("`{name}` must be a table"))),
        };
        Ok(Self {
            name,
            table,
            used: RefCell::new(Vec::new()),
        })
    }

    fn key(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.used.borrow_mut().push(key.to_string());
        self.table?.get(key)
    }

    fn has(&self, key: &str) -> bool {
        self.table.is_some_and(|t| t.contains_key(key))
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(Error::Config(format!("{}: expected a number", self.key(key)))),
        }
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.f64(key)?.unwrap_or(default);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Config(format!(
                "{}: must be positive, got {v}",
                self.key(key)
            )));
        }
        Ok(v)
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(_) => Err(Error::Config(format!(
                "{}: expected a non-negative integer",
                self.key(key)
            ))),
        }
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(Error::Config(format!("{}: expected true or false", self.key(key)))),
        }
    }

    fn str(&self, key: &str) -> Result<Option<&'a str>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(Error::Config(format!("{}: expected a string", self.key(key)))),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(i) => Ok(*i as f64),
                    _ => Err(Error::Config(format!(
                        "{}: expected a list of numbers",
                        self.key(key)
                    ))),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(Error::Config(format!(
                "{}: expected a list of numbers",
                self.key(key)
            ))),
        }
    }

    /// Rejects keys that belong to the other unit system.
    fn forbid(&self, key: &str, hint: &str) -> Result<()> {
        if self.has(key) {
            return Err(Error::Config(format!("{}: {hint}", self.key(key))));
        }
        self.used.borrow_mut().push(key.to_string());
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        let Some(t) = self.table else { return Ok(()) };
        let used = self.used.borrow();
        if let Some(k) = t.keys().find(|k| !used.iter().any(|u| u == *k)) {
            return Err(Error::Config(format!("unknown key `{}`", self.key(k))));
        }
        Ok(())
    }
}

const SECTIONS: [&str; 7] = ["device", "basis", "spectrum", "drive", "sweep", "output", "run"];

/// Parses TOML text, reporting syntax errors with line and column.
pub fn parse_table(text: &str) -> Result<Table> {
    text.parse::<Table>().map_err(|e| {
        let (line, column) = match e.span() {
            Some(span) => line_col(text, span.start),
            None => (0, 0),
        };
        Error::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Sets `section.key = value`, creating the section when needed.
pub fn set_key(root: &mut Table, dotted: &str, value: Value) -> Result<()> {
    let (section, key) = dotted
        .split_once('.')
        .ok_or_else(|| Error::Config(format!("override `{dotted}` needs a section")))?;
    let entry = root
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    match entry {
        Value::Table(t) => {
            t.insert(key.to_string(), value);
            Ok(())
        }
        _ => Err(Error::Config(format!("`{section}` must be a table"))),
    }
}

/// `device.preset` of a raw table, defaulting to `device1`.
pub fn preset_name(root: &Table) -> String {
    root.get("device")
        .and_then(|d| d.get("preset"))
        .and_then(Value::as_str)
        .unwrap_or("device1")
        .to_string()
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_table(&parse_table(text)?)
    }

    pub fn from_table(root: &Table) -> Result<Self> {
        if let Some(k) = root.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown section `{k}`")));
        }
        let dev = Section::new(root, "device")?;
        let device = parse_device(&dev)?;
        dev.finish()?;
        let atomic = matches!(device, DeviceChoice::ExpSine(_));

        let b = Section::new(root, "basis")?;
        let (default_basis, cutoff_key, other_cutoff) = if atomic {
            (BasisSpec::expsine_default(), "cutoff_au", "cutoff_nm")
        } else {
            (BasisSpec::layered_default(), "cutoff_nm", "cutoff_au")
        };
        b.forbid(other_cutoff, &format!("does not apply to this device; use basis.{cutoff_key}"))?;
        let order = b.usize("order")?.unwrap_or(default_basis.order);
        if order < 2 {
            return Err(Error::Config(format!("basis.order: must be at least 2, got {order}")));
        }
        let intervals = b.usize("intervals")?.unwrap_or(default_basis.intervals);
        if intervals < order {
            return Err(Error::Config(format!(
                "basis.intervals: must be at least the order ({order}), got {intervals}"
            )));
        }
        let cutoff = b.positive(cutoff_key, default_basis.cutoff)?;
        let mut basis = BasisSpec::new(cutoff, intervals, order);
        basis.quad_nodes = b.usize("quad_nodes")?.unwrap_or(order + 2);
        if basis.quad_nodes < order {
            return Err(Error::Config(format!(
                "basis.quad_nodes: must be at least the order ({order}), got {}",
                basis.quad_nodes
            )));
        }
        basis.interface_multiplicity = b.usize("interface_multiplicity")?.unwrap_or(order - 1);
        if !(1..order).contains(&basis.interface_multiplicity) {
            return Err(Error::Config(format!(
                "basis.interface_multiplicity: must lie in 1..={}, got {}",
                order - 1,
                basis.interface_multiplicity
            )));
        }
        let kinetic = match b.str("kinetic_form")? {
            Some(s) => KineticForm::parse(s)?,
            None => KineticForm::default(),
        };
        b.finish()?;

        let s = Section::new(root, "spectrum")?;
        let threshold = s.f64("threshold")?.unwrap_or(LOCALIZED_THRESHOLD);
        if !(0.0..1.0).contains(&threshold) {
            return Err(Error::Config(format!(
                "spectrum.threshold: must lie in [0, 1), got {threshold}"
            )));
        }
        let rc = match s.usize("rc_steps")? {
            None | Some(0) => {
                s.f64("rc_min_nm")?;
                s.f64("rc_max_nm")?;
                None
            }
            Some(steps) => {
                if !matches!(device, DeviceChoice::Preset(Preset::Fig2 { .. })) {
                    return Err(Error::Config(
                        "spectrum.rc_steps: a core-radius sweep needs device.preset = \"fig2\"".into(),
                    ));
                }
                let min = s.positive("rc_min_nm", 0.4)?;
                let max = s.positive("rc_max_nm", 8.0)?;
                if max < min {
                    return Err(Error::Config(format!(
                        "spectrum.rc_max_nm ({max}) is below spectrum.rc_min_nm ({min})"
                    )));
                }
                Some(Grid { min, max, steps })
            }
        };
        let densities = s.bool("densities")?.unwrap_or(false);
        if densities && rc.is_some() {
            return Err(Error::Config(
                "spectrum.densities: only available for a single device, not a core-radius sweep"
                    .into(),
            ));
        }
        let spectrum = SpectrumConfig {
            l_max: s.usize("l_max")?,
            threshold,
            densities,
            density_points: s.usize("density_points")?.unwrap_or(801).max(2),
            rc,
        };
        s.finish()?;

        let d = Section::new(root, "drive")?;
        let (a0_key, other_a0, a0_scale, a0_default) = if atomic {
            ("a0_au", "a0_meV_per_nm", 1.0, 0.001)
        } else {
            ("a0_meV_per_nm", "a0_au", MEV, 0.27)
        };
        d.forbid(other_a0, &format!("does not apply to this device; use drive.{a0_key}"))?;
        let a0 = d.f64(a0_key)?.unwrap_or(a0_default);
        if !(a0 >= 0.0) || !a0.is_finite() {
            return Err(Error::Config(format!("drive.{a0_key}: must be non-negative, got {a0}")));
        }
        let drive = DriveConfig {
            a0: a0 * a0_scale,
            omega_rel: d.positive("omega_rel", 1.0)?,
            rabi_periods: d.positive("rabi_periods", RABI_PERIODS)?,
            steps_per_period: positive_count(&d, "steps_per_period", STEPS_PER_PERIOD)?,
            samples_per_period: positive_count(&d, "samples_per_period", SAMPLES_PER_PERIOD)?,
        };
        if !drive.steps_per_period.is_multiple_of(drive.samples_per_period) {
            return Err(Error::Config(format!(
                "drive.samples_per_period ({}) must divide drive.steps_per_period ({})",
                drive.samples_per_period, drive.steps_per_period
            )));
        }
        d.finish()?;

        let w = Section::new(root, "sweep")?;
        let kind = match w.str("kind")? {
            Some(k) => SweepKind::parse(k)?,
            None if atomic => SweepKind::V0,
            None => SweepKind::Strength,
        };
        let (a0_min_key, a0_max_key) = if atomic {
            w.forbid("a0_min_meV_per_nm", "does not apply to this device; use sweep.a0_min_au")?;
            w.forbid("a0_max_meV_per_nm", "does not apply to this device; use sweep.a0_max_au")?;
            ("a0_min_au", "a0_max_au")
        } else {
            w.forbid("a0_min_au", "does not apply to this device; use sweep.a0_min_meV_per_nm")?;
            w.forbid("a0_max_au", "does not apply to this device; use sweep.a0_max_meV_per_nm")?;
            ("a0_min_meV_per_nm", "a0_max_meV_per_nm")
        };
        let (a0_lo, a0_hi) = if atomic { (1e-4, 1e-2) } else { (1.0, 50.0) };
        let a0_grid = Grid {
            min: w.positive(a0_min_key, a0_lo)? * a0_scale,
            max: w.positive(a0_max_key, a0_hi)? * a0_scale,
            steps: w.usize("a0_steps")?.unwrap_or(9),
        };
        let omega_grid = Grid {
            min: w.positive("omega_rel_min", 0.65)?,
            max: w.positive("omega_rel_max", 1.35)?,
            steps: w.usize("omega_rel_steps")?.unwrap_or(71),
        };
        let v0_grid = Grid {
            min: w.f64("v0_min_au")?.unwrap_or(1.5),
            max: w.f64("v0_max_au")?.unwrap_or(3.0),
            steps: w.usize("v0_steps")?.unwrap_or(31),
        };
        let v0_a0 = w.f64_list("v0_a0_au")?.unwrap_or_else(|| vec![0.001, 0.01]);
        if v0_a0.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::Config("sweep.v0_a0_au: amplitudes must be positive".into()));
        }
        for (name, g) in [("a0", a0_grid), ("omega_rel", omega_grid), ("v0", v0_grid)] {
            if g.max < g.min {
                return Err(Error::Config(format!("sweep: {name} maximum is below its minimum")));
            }
        }
        if kind == SweepKind::V0 && !atomic {
            return Err(Error::Config(
                "sweep.kind = \"v0\" needs device.preset = \"expsine\"".into(),
            ));
        }
        let sweep = SweepConfig {
            kind,
            a0: a0_grid,
            omega_rel: omega_grid,
            v0: v0_grid,
            v0_a0,
        };
        w.finish()?;

        let o = Section::new(root, "output")?;
        let output_dir = PathBuf::from(o.str("dir")?.unwrap_or("qdot-out"));
        o.finish()?;
        let r = Section::new(root, "run")?;
        let jobs = r.usize("jobs")?.unwrap_or(0);
        r.finish()?;

        Ok(Self {
            device,
            basis,
            kinetic,
            spectrum,
            drive,
            sweep,
            output_dir,
            jobs,
        })
    }

    pub fn units(&self) -> UnitSystem {
        self.device.units()
    }

    pub fn problem(&self) -> Result<RadialProblem> {
        Ok(RadialProblem::new(self.device.potential()?, self.units()).with_kinetic(self.kinetic))
    }

    /// Scale from internal amplitude units to the ones used in config keys.
    pub fn a0_display_scale(&self) -> f64 {
        match self.units() {
            UnitSystem::Atomic => 1.0,
            UnitSystem::Semiconductor => 1.0 / MEV,
        }
    }

    /// Every key with its resolved value.
    pub fn to_toml(&self) -> String {
        let atomic = self.units() == UnitSystem::Atomic;
        let mut dev = Table::new();
        dev.insert("preset".into(), self.device.name().into());
        match &self.device {
            DeviceChoice::Preset(Preset::Fig2 { core_radius }) => {
                dev.insert("core_radius_nm".into(), (*core_radius).into());
            }
            DeviceChoice::Preset(_) => {}
            DeviceChoice::Custom(d) => {
                let finite = &d.shells()[..d.shells().len() - 1];
                let list = |f: &dyn Fn(&Shell) -> f64| {
                    Value::Array(finite.iter().map(|s| Value::Float(f(s))).collect())
                };
                dev.insert("radii_nm".into(), list(&|s| s.outer_radius));
                dev.insert("potentials_eV".into(), list(&|s| s.potential));
                dev.insert("masses".into(), list(&|s| s.mass));
                let outer = d.shells().last().expect("outer shell");
                dev.insert("outside_potential_eV".into(), outer.potential.into());
                dev.insert("outside_mass".into(), outer.mass.into());
            }
            DeviceChoice::ExpSine(p) => {
                dev.insert("v0_au".into(), p.depth.into());
                dev.insert("gamma_au".into(), p.decay.into());
                dev.insert("omega_p_au".into(), p.wavenumber.into());
            }
        }

        let mut basis = Table::new();
        basis.insert("order".into(), (self.basis.order as i64).into());
        basis.insert("intervals".into(), (self.basis.intervals as i64).into());
        let cutoff_key = if atomic { "cutoff_au" } else { "cutoff_nm" };
        basis.insert(cutoff_key.into(), self.basis.cutoff.into());
        basis.insert("quad_nodes".into(), (self.basis.quad_nodes as i64).into());
        basis.insert(
            "interface_multiplicity".into(),
            (self.basis.interface_multiplicity as i64).into(),
        );
        basis.insert("kinetic_form".into(), self.kinetic.name().into());

        let mut spec = Table::new();
        if let Some(l) = self.spectrum.l_max {
            spec.insert("l_max".into(), (l as i64).into());
        }
        spec.insert("threshold".into(), self.spectrum.threshold.into());
        spec.insert("densities".into(), self.spectrum.densities.into());
        spec.insert("density_points".into(), (self.spectrum.density_points as i64).into());
        if let Some(g) = self.spectrum.rc {
            spec.insert("rc_min_nm".into(), g.min.into());
            spec.insert("rc_max_nm".into(), g.max.into());
            spec.insert("rc_steps".into(), (g.steps as i64).into());
        }

        let scale = self.a0_display_scale();
        let a0_suffix = if atomic { "au" } else { "meV_per_nm" };
        let mut drive = Table::new();
        drive.insert(format!("a0_{a0_suffix}"), (self.drive.a0 * scale).into());
        drive.insert("omega_rel".into(), self.drive.omega_rel.into());
        drive.insert("rabi_periods".into(), self.drive.rabi_periods.into());
        drive.insert("steps_per_period".into(), (self.drive.steps_per_period as i64).into());
        drive.insert(
            "samples_per_period".into(),
            (self.drive.samples_per_period as i64).into(),
        );

        let mut sweep = Table::new();
        sweep.insert("kind".into(), self.sweep.kind.name().into());
        sweep.insert(format!("a0_min_{a0_suffix}"), (self.sweep.a0.min * scale).into());
        sweep.insert(format!("a0_max_{a0_suffix}"), (self.sweep.a0.max * scale).into());
        sweep.insert("a0_steps".into(), (self.sweep.a0.steps as i64).into());
        sweep.insert("omega_rel_min".into(), self.sweep.omega_rel.min.into());
        sweep.insert("omega_rel_max".into(), self.sweep.omega_rel.max.into());
        sweep.insert("omega_rel_steps".into(), (self.sweep.omega_rel.steps as i64).into());
        sweep.insert("v0_min_au".into(), self.sweep.v0.min.into());
        sweep.insert("v0_max_au".into(), self.sweep.v0.max.into());
        sweep.insert("v0_steps".into(), (self.sweep.v0.steps as i64).into());
        sweep.insert(
            "v0_a0_au".into(),
            Value::Array(self.sweep.v0_a0.iter().map(|&a| Value::Float(a)).collect()),
        );

        let mut output = Table::new();
        output.insert("dir".into(), self.output_dir.display().to_string().into());
        let mut run = Table::new();
        run.insert("jobs".into(), (self.jobs as i64).into());

        let mut root = Table::new();
        root.insert("device".into(), Value::Table(dev));
        root.insert("basis".into(), Value::Table(basis));
        root.insert("spectrum".into(), Value::Table(spec));
        root.insert("drive".into(), Value::Table(drive));
        root.insert("sweep".into(), Value::Table(sweep));
        root.insert("output".into(), Value::Table(output));
        root.insert("run".into(), Value::Table(run));
        root.to_string()
    }
}

fn positive_count(s: &Section, key: &str, default: usize) -> Result<usize> {
    let v = s.usize(key)?.unwrap_or(default);
    if v == 0 {
        return Err(Error::Config(format!("{}: must be positive", s.key(key))));
    }
    Ok(v)
}

fn parse_device(dev: &Section) -> Result<DeviceChoice> {
    let name = dev.str("preset")?.unwrap_or("device1");
    let core = dev.f64("core_radius_nm")?;
    let expsine_keys = ["v0_au", "gamma_au", "omega_p_au"];
    let custom_keys = ["radii_nm", "potentials_eV", "masses", "outside_potential_eV", "outside_mass"];
    let reject = |keys: &[&str]| -> Result<()> {
        for k in keys {
            dev.forbid(k, &format!("does not apply to preset `{name}`"))?;
        }
        Ok(())
    };
    match name {
        "device1" | "device2" | "fig2" => {
            reject(&expsine_keys)?;
            reject(&custom_keys)?;
            if core.is_some() && name != "fig2" {
                return Err(Error::Config(format!(
                    "device.core_radius_nm: does not apply to preset `{name}`"
                )));
            }
            if let Some(r) = core {
                if !(r > 0.0) {
                    return Err(Error::Config(format!(
                        "device.core_radius_nm: must be positive, got {r}"
                    )));
                }
            }
            let preset = Preset::parse(name, core)?;
            Ok(DeviceChoice::Preset(preset))
        }
        "expsine" => {
            reject(&custom_keys)?;
            if core.is_some() {
                return Err(Error::Config(
                    "device.core_radius_nm: does not apply to preset `expsine`".into(),
                ));
            }
            let v0 = dev.f64("v0_au")?.unwrap_or(2.0);
            let gamma = dev.f64("gamma_au")?.unwrap_or(0.1);
            let omega = dev.f64("omega_p_au")?.unwrap_or(1.0);
            ExpSinePotential::new(v0, gamma, omega)
                .map(DeviceChoice::ExpSine)
                .map_err(|e| Error::Config(format!("device: {e}")))
        }
        "custom" => {
            reject(&expsine_keys)?;
            if core.is_some() {
                return Err(Error::Config(
                    "device.core_radius_nm: does not apply to preset `custom`".into(),
                ));
            }
            let need = |k: &str| -> Result<Vec<f64>> {
                dev.f64_list(k)?
                    .ok_or_else(|| Error::Config(format!("device.{k}: required for preset `custom`")))
            };
            let radii = need("radii_nm")?;
            let pots = need("potentials_eV")?;
            let masses = need("masses")?;
            if radii.len() != pots.len() || radii.len() != masses.len() {
                return Err(Error::Config(
                    "device.radii_nm, device.potentials_eV and device.masses must have equal length"
                        .into(),
                ));
            }
            let v_out = dev.f64("outside_potential_eV")?.ok_or_else(|| {
                Error::Config("device.outside_potential_eV: required for preset `custom`".into())
            })?;
            let m_out = dev.f64("outside_mass")?.ok_or_else(|| {
                Error::Config("device.outside_mass: required for preset `custom`".into())
            })?;
            let shells: Vec<Shell> = radii
                .iter()
                .zip(&pots)
                .zip(&masses)
                .map(|((&r, &v), &m)| Shell {
                    outer_radius: r,
                    potential: v,
                    mass: m,
                })
                .collect();
            LayeredDevice::new(&shells, (v_out, m_out))
                .map(DeviceChoice::Custom)
                .map_err(|e| Error::Config(format!("device: {e}")))
        }
        other => Err(Error::Config(format!(
            "device.preset: unknown preset `{other}` (expected device1, device2, fig2, expsine or custom)"
        ))),
    }
}
