//! Radial Hamiltonian in the B-spline basis and its bound spectrum.
//!
//! For each angular momentum `ℓ` the reduced radial function `u(r)` is
//! expanded in the retained splines and the symmetric-definite generalized
//! problem `H c = E S c` is solved through a Cholesky reduction.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{fig2_radii, LayeredDevice, RadialPotential};
use crate::splines::{gauss_legendre, KnotVector, QuadratureRule, SplineTable};
use crate::units::UnitSystem;

/// Bound states must lie this far below the asymptote.
pub const BOUND_MARGIN: f64 = 1e-9;
/// States of one channel closer than this are flagged quasi-degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Default localization threshold on `P_inner`.
pub const LOCALIZED_THRESHOLD: f64 = 0.5;

/// How the position-dependent mass enters the radial kinetic energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KineticForm {
    /// Radial reduction of `-ħ²/2 ∇·(1/m)∇`: `R` and `R'/m` continuous.
    /// Mass jumps contribute `ħ²/2 (1/m_out - 1/m_in) u(r_i)² / r_i`.
    #[default]
    Radial,
    /// One-dimensional form on `u`: `u` and `u'/m` continuous.
    Reduced,
}

impl KineticForm {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "radial" => Ok(KineticForm::Radial),
            "reduced" => Ok(KineticForm::Reduced),
            other => Err(Error::Config(format!(
                "basis.kinetic_form: unknown value `{other}` (expected `radial` or `reduced`)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KineticForm::Radial => "radial",
            KineticForm::Reduced => "reduced",
        }
    }
}

/// Basis parameters: spline order, interval count, cutoff and quadrature nodes
/// per interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub order: usize,
    pub intervals: usize,
    pub cutoff: f64,
    pub quad_nodes: usize,
    /// Multiplicity of the knot placed at each material interface by
    /// [`Basis::for_potential`]; `order - 1` leaves the basis only continuous
    /// there so the kink of `u` at a mass jump is represented exactly.
    pub interface_multiplicity: usize,
}

impl BasisSpec {
    pub fn new(cutoff: f64, intervals: usize, order: usize) -> Self {
        Self {
            order,
            intervals,
            cutoff,
            quad_nodes: order + 2,
            interface_multiplicity: order - 1,
        }
    }

    /// 16 nm cutoff with 0.05 nm knot spacing.
    pub fn layered_default() -> Self {
        Self::new(16.0, 320, 5)
    }

    /// 40 bohr cutoff with 0.1 bohr knot spacing.
    pub fn expsine_default() -> Self {
        Self::new(40.0, 400, 5)
    }

    pub fn spacing(&self) -> f64 {
        self.cutoff / self.intervals as f64
    }

    /// Basis of spacing `spacing` whose cutoff is at least `min_cutoff` and at
    /// least `margin` beyond the outermost interface of `device`.
    pub fn covering(device: &LayeredDevice, spacing: f64, min_cutoff: f64, margin: f64) -> Self {
        let outer = device.interfaces().last().copied().unwrap_or(0.0);
        let want = min_cutoff.max(outer + margin);
        let intervals = (want / spacing - 1e-9).ceil() as usize;
        Self::new(intervals as f64 * spacing, intervals, 5)
    }
}

/// Knots, quadrature and tabulated splines for one [`BasisSpec`].
#[derive(Debug, Clone)]
pub struct Basis {
    spec: BasisSpec,
    knots: KnotVector,
    quad: QuadratureRule,
    table: SplineTable,
}

impl Basis {
    /// Basis with simple interior knots.
    pub fn new(spec: BasisSpec) -> Result<Self> {
        let knots = KnotVector::new(spec.cutoff, spec.intervals, spec.order)?;
        Self::from_knots(spec, knots)
    }

    /// Basis whose knots at the interfaces of `potential` carry
    /// `spec.interface_multiplicity`. Interfaces that are not knots are left
    /// for [`assemble`] to reject.
    pub fn for_potential(spec: BasisSpec, potential: &RadialPotential) -> Result<Self> {
        let plain = KnotVector::new(spec.cutoff, spec.intervals, spec.order)?;
        let breaks: Vec<f64> = potential
            .interfaces()
            .into_iter()
            .filter(|&r| r > 0.0 && r < spec.cutoff && plain.is_knot(r, 1e-9))
            .collect();
        if breaks.is_empty() || spec.interface_multiplicity <= 1 {
            return Self::new(spec);
        }
        let knots = KnotVector::with_breaks(
            spec.cutoff,
            spec.intervals,
            spec.order,
            &breaks,
            spec.interface_multiplicity,
        )?;
        Self::from_knots(spec, knots)
    }

    fn from_knots(spec: BasisSpec, knots: KnotVector) -> Result<Self> {
        if spec.quad_nodes < spec.order {
            return Err(Error::InvalidParameter(format!(
                "quadrature nodes per interval ({}) must be at least the spline order ({})",
                spec.quad_nodes, spec.order
            )));
        }
        let quad = QuadratureRule::new(&knots, spec.quad_nodes)?;
        let table = SplineTable::new(&knots, &quad);
        Ok(Self {
            spec,
            knots,
            quad,
            table,
        })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    pub fn size(&self) -> usize {
        self.knots.basis_size()
    }

    /// `u` at every quadrature node.
    pub fn values_at_nodes(&self, coeffs: &[f64]) -> Vec<f64> {
        let g = self.quad.nodes_per_interval();
        let n = self.size();
        (0..self.quad.nodes().len())
            .map(|q| {
                let f0 = self.knots.first_spline(q / g);
                self.table
                    .values(q)
                    .iter()
                    .enumerate()
                    .filter_map(|(s, v)| {
                        let i = (f0 + s).checked_sub(1)?;
                        (i < n).then(|| coeffs[i] * v)
                    })
                    .sum()
            })
            .collect()
    }

    /// `∫₀^R u_a(r) w(r) u_b(r) dr`.
    pub fn matrix_element(&self, a: &[f64], b: &[f64], weight: impl Fn(f64) -> f64) -> f64 {
        let ua = self.values_at_nodes(a);
        let ub = if std::ptr::eq(a, b) {
            ua.clone()
        } else {
            self.values_at_nodes(b)
        };
        self.quad
            .nodes()
            .iter()
            .zip(self.quad.weights())
            .zip(ua.iter().zip(&ub))
            .map(|((&r, &w), (&x, &y))| w * x * y * weight(r))
            .sum()
    }

    /// `∫_lo^hi u(r)² dr`; partial knot intervals get their own Gauss rule.
    pub fn probability_in(&self, coeffs: &[f64], lo: f64, hi: f64) -> f64 {
        let lo = lo.max(0.0);
        let hi = hi.min(self.spec.cutoff);
        if hi <= lo {
            return 0.0;
        }
        let (gx, gw) = gauss_legendre(self.quad.nodes_per_interval());
        let first = self.knots.interval_of(lo);
        let last = self.knots.interval_of(hi);
        let mut acc = 0.0;
        for iv in first..=last {
            let (a, b) = self.knots.interval_bounds(iv);
            let (a2, b2) = (a.max(lo), b.min(hi));
            if b2 <= a2 {
                continue;
            }
            let half = 0.5 * (b2 - a2);
            let mid = 0.5 * (a2 + b2);
            for (x, w) in gx.iter().zip(&gw) {
                let r = mid + half * x;
                let (u, _) = self
                    .knots
                    .eval_combination(coeffs, r)
                    .expect("node inside the basis domain");
                acc += half * w * u * u;
            }
        }
        acc
    }
}

/// Potential, unit system and kinetic convention of a radial problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProblem {
    pub potential: RadialPotential,
    pub units: UnitSystem,
    pub kinetic: KineticForm,
}

impl RadialProblem {
    pub fn new(potential: RadialPotential, units: UnitSystem) -> Self {
        Self {
            potential,
            units,
            kinetic: KineticForm::default(),
        }
    }

    pub fn with_kinetic(mut self, kinetic: KineticForm) -> Self {
        self.kinetic = kinetic;
        self
    }

    /// Energy ceiling for bound states.
    pub fn bound_ceiling(&self) -> f64 {
        self.potential.asymptote() - BOUND_MARGIN
    }
}

/// One bound eigenpair of a radial channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    pub energy: f64,
    pub l: usize,
    pub n_r: usize,
    /// Coefficients of `u(r)` in the retained spline basis; `∫u² = 1`.
    pub coeffs: Vec<f64>,
    pub p_inner: f64,
    pub norm_residual: f64,
    pub quasi_degenerate: bool,
}

impl BoundState {
    pub fn is_localized(&self, threshold: f64) -> bool {
        self.p_inner > threshold
    }
}

fn check_alignment(basis: &Basis, potential: &RadialPotential) -> Result<()> {
    for r in potential.interfaces() {
        if r >= basis.spec.cutoff {
            return Err(Error::Config(format!(
                "interface at r = {r} lies at or beyond the cutoff {}; increase the cutoff",
                basis.spec.cutoff
            )));
        }
        if !basis.knots.is_knot(r, 1e-9) {
            return Err(Error::Config(format!(
                "interface at r = {r} is not a knot (spacing {}); choose cutoff and \
                 interval count so every shell radius is a knot",
                basis.knots.spacing()
            )));
        }
    }
    Ok(())
}

/// Hamiltonian and overlap matrices of channel `l`.
pub fn assemble(
    basis: &Basis,
    problem: &RadialProblem,
    l: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_alignment(basis, &problem.potential)?;
    let n = basis.size();
    let k = basis.spec.order;
    let g = basis.quad.nodes_per_interval();
    let c = problem.units.hbar2_over_2me();
    let centrifugal = (l * (l + 1)) as f64;
    let mut h = DMatrix::<f64>::zeros(n, n);
    let mut s = DMatrix::<f64>::zeros(n, n);

    for (q, (&r, &w)) in basis
        .quad
        .nodes()
        .iter()
        .zip(basis.quad.weights())
        .enumerate()
    {
        let f0 = basis.knots.first_spline(q / g);
        let m = problem.potential.mass_unchecked(r);
        let v = problem.potential.potential_unchecked(r);
        let kin = c / m;
        let pot = kin * centrifugal / (r * r) + v;
        let vals = basis.table.values(q);
        let ders = basis.table.derivs(q);
        for a in 0..k {
            let Some(i) = (f0 + a).checked_sub(1).filter(|&i| i < n) else {
                continue;
            };
            for b in a..k {
                let Some(j) = (f0 + b).checked_sub(1).filter(|&j| j < n) else {
                    continue;
                };
                h[(i, j)] += w * (kin * ders[a] * ders[b] + pot * vals[a] * vals[b]);
                s[(i, j)] += w * vals[a] * vals[b];
            }
        }
    }

    if problem.kinetic == KineticForm::Radial {
        for (r, m_in, m_out) in problem.potential.mass_jumps() {
            let strength = c * (1.0 / m_out - 1.0 / m_in) / r;
            let iv = basis.knots.interval_of(r);
            let (vals, _) = basis.knots.nonzero_splines(iv, r);
            let f0 = basis.knots.first_spline(iv);
            for a in 0..k {
                let Some(i) = (f0 + a).checked_sub(1).filter(|&i| i < n) else {
                    continue;
                };
                for b in a..k {
                    let Some(j) = (f0 + b).checked_sub(1).filter(|&j| j < n) else {
                        continue;
                    };
                    h[(i, j)] += strength * vals[a] * vals[b];
                }
            }
        }
    }

    for i in 0..n {
        for j in (i + 1)..n {
            h[(j, i)] = h[(i, j)];
            s[(j, i)] = s[(i, j)];
        }
    }
    Ok((h, s))
}

/// Symmetric-definite generalized eigenproblem `H c = E S c`. Returns
/// ascending eigenvalues and `S`-orthonormal eigenvectors as columns.
pub fn solve_generalized(h: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = h.nrows();
    let chol = s.clone().cholesky().ok_or_else(|| {
        Error::IllConditioned("overlap matrix is not positive definite".into())
    })?;
    let l = chol.l();
    // C = L⁻¹ H L⁻ᵀ
    let a = l
        .solve_lower_triangular(h)
        .ok_or_else(|| Error::IllConditioned("singular Cholesky factor".into()))?;
    let mut cmat = l
        .solve_lower_triangular(&a.transpose())
        .ok_or_else(|| Error::IllConditioned("singular Cholesky factor".into()))?;
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (cmat[(i, j)] + cmat[(j, i)]);
            cmat[(i, j)] = avg;
            cmat[(j, i)] = avg;
        }
    }
    let eig = SymmetricEigen::new(cmat);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut y = DMatrix::<f64>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        y.set_column(col, &eig.eigenvectors.column(i));
    }
    let lt = l.transpose();
    let vectors = lt
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::IllConditioned("singular Cholesky factor".into()))?;
    Ok((values, vectors))
}

/// Sign changes of `u` sampled at the quadrature nodes, ignoring samples
/// below `1e-9` of the maximum amplitude.
pub fn count_nodes(samples: &[f64]) -> usize {
    let max = samples.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let floor = 1e-9 * max;
    let mut last = 0.0_f64;
    let mut changes = 0;
    for &x in samples {
        if x.abs() <= floor {
            continue;
        }
        if last != 0.0 && x.signum() != last.signum() {
            changes += 1;
        }
        last = x;
    }
    changes
}

/// Probability of `state` inside the innermost well of `potential`.
pub fn classify_localization(basis: &Basis, coeffs: &[f64], potential: &RadialPotential) -> f64 {
    let (lo, hi) = potential.inner_well();
    basis.probability_in(coeffs, lo, hi)
}

/// Eigenpairs of channel `l` with energy below `e_max`, normalized, sign
/// fixed so the innermost lobe of `u` is positive, node-counted and scored
/// for localization.
pub fn solve_channel(
    basis: &Basis,
    problem: &RadialProblem,
    l: usize,
    e_max: f64,
) -> Result<Vec<BoundState>> {
    let (h, s) = assemble(basis, problem, l)?;
    let (values, vectors) = solve_generalized(&h, &s)?;
    let mut states = Vec::new();
    for (col, &energy) in values.iter().enumerate() {
        if energy >= e_max {
            break;
        }
        let mut coeffs: Vec<f64> = vectors.column(col).iter().copied().collect();
        let mut samples = basis.values_at_nodes(&coeffs);
        let max = samples.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if let Some(first) = samples.iter().find(|x| x.abs() > 1e-6 * max) {
            if *first < 0.0 {
                coeffs.iter_mut().for_each(|c| *c = -*c);
                samples.iter_mut().for_each(|x| *x = -*x);
            }
        }
        let norm: f64 = samples
            .iter()
            .zip(basis.quad.weights())
            .map(|(u, w)| w * u * u)
            .sum();
        let n_r = count_nodes(&samples);
        let p_inner = classify_localization(basis, &coeffs, &problem.potential);
        states.push(BoundState {
            energy,
            l,
            n_r,
            coeffs,
            p_inner,
            norm_residual: (norm - 1.0).abs(),
            quasi_degenerate: false,
        });
    }
    for i in 1..states.len() {
        if states[i].energy - states[i - 1].energy < DEGENERACY_TOL {
            states[i].quasi_degenerate = true;
            states[i - 1].quasi_degenerate = true;
        }
    }
    Ok(states)
}

/// Bound spectrum over all angular momenta.
#[derive(Debug, Clone)]
pub struct SpectrumTable {
    /// `channels[l]` holds the bound states of angular momentum `l`.
    pub channels: Vec<Vec<BoundState>>,
    pub description: String,
    pub basis: BasisSpec,
    pub units: UnitSystem,
}

impl SpectrumTable {
    pub fn states(&self) -> impl Iterator<Item = &BoundState> {
        self.channels.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.channels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn localized(&self, threshold: f64) -> Vec<&BoundState> {
        self.states().filter(|s| s.is_localized(threshold)).collect()
    }

    pub fn find(&self, n_r: usize, l: usize) -> Option<&BoundState> {
        self.channels.get(l)?.iter().find(|s| s.n_r == n_r)
    }

    pub fn max_l(&self) -> Option<usize> {
        self.channels.iter().rposition(|c| !c.is_empty())
    }
}

/// Solves channels `l = 0, 1, …` until a channel has no bound state (the
/// lowest level rises with `l`) or `l_max` is reached.
pub fn solve_spectrum(
    basis: &Basis,
    problem: &RadialProblem,
    l_max: Option<usize>,
) -> Result<SpectrumTable> {
    let e_max = problem.bound_ceiling();
    let batch = rayon::current_num_threads().max(1);
    let cap = l_max.unwrap_or(200);
    let mut channels: Vec<Vec<BoundState>> = Vec::new();
    let mut l0 = 0;
    'outer: while l0 <= cap {
        let hi = (l0 + batch - 1).min(cap);
        let solved: Vec<Result<Vec<BoundState>>> = (l0..=hi)
            .into_par_iter()
            .map(|l| solve_channel(basis, problem, l, e_max))
            .collect();
        for ch in solved {
            let ch = ch?;
            if ch.is_empty() && l_max.is_none() {
                break 'outer;
            }
            channels.push(ch);
        }
        l0 = hi + 1;
    }
    while channels.last().is_some_and(Vec::is_empty) {
        channels.pop();
    }
    Ok(SpectrumTable {
        channels,
        description: problem.potential.to_string(),
        basis: *basis.spec(),
        units: problem.units,
    })
}

/// One row of a spectrum sweep table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub sweep_param: f64,
    pub l: usize,
    pub n_r: usize,
    pub energy: f64,
    pub p_inner: f64,
}

pub fn spectrum_rows(param: f64, table: &SpectrumTable) -> Vec<SpectrumRow> {
    let mut rows: Vec<SpectrumRow> = table
        .states()
        .map(|s| SpectrumRow {
            sweep_param: param,
            l: s.l,
            n_r: s.n_r,
            energy: s.energy,
            p_inner: s.p_inner,
        })
        .collect();
    rows.sort_by_key(|r| (r.l, r.n_r));
    rows
}

/// Settings for the core-radius sweep of the fixed-offset device family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepBasis {
    /// Knot spacing; every core radius is snapped to a multiple of it.
    pub spacing: f64,
    pub min_cutoff: f64,
    /// Minimum distance between the outermost interface and the cutoff.
    pub margin: f64,
}

impl Default for SweepBasis {
    fn default() -> Self {
        Self {
            spacing: 0.05,
            min_cutoff: 16.0,
            margin: 8.0,
        }
    }
}

/// Snaps `r` to the nearest positive multiple of `spacing`.
pub fn snap_to_lattice(r: f64, spacing: f64) -> f64 {
    let n = (r / spacing).round().max(1.0);
    // divide by the reciprocal so e.g. 20 * 0.05 gives exactly 1.0
    (n / (1.0 / spacing) * 1e9).round() / 1e9
}

/// Spectrum of the fixed-offset family at each core radius. Core radii are
/// snapped onto the knot lattice (the snapped value is reported); duplicates
/// after snapping are dropped. Output is ordered by core radius.
pub fn spectrum_sweep(
    core_radii: &[f64],
    l_max: Option<usize>,
    sweep: SweepBasis,
    kinetic: KineticForm,
) -> Result<Vec<(f64, SpectrumTable)>> {
    if core_radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidParameter("core radii must be positive".into()));
    }
    let mut snapped: Vec<f64> = core_radii
        .iter()
        .map(|&r| snap_to_lattice(r, sweep.spacing))
        .collect();
    snapped.sort_by(f64::total_cmp);
    snapped.dedup();
    snapped
        .par_iter()
        .map(|&rc| {
            let device = LayeredDevice::cdse_zns(fig2_radii(rc))?;
            let spec = BasisSpec::covering(&device, sweep.spacing, sweep.min_cutoff, sweep.margin);
            let potential = RadialPotential::Layered(device);
            let basis = Basis::for_potential(spec, &potential)?;
            let problem =
                RadialProblem::new(potential, UnitSystem::Semiconductor).with_kinetic(kinetic);
            Ok((rc, solve_spectrum(&basis, &problem, l_max)?))
        })
        .collect()
}

/// Number of states with `P_inner` above `threshold` for the exp-sine
/// potential of depth `depth`.
pub fn localized_count(
    template: &crate::model::ExpSinePotential,
    depth: f64,
    basis: &Basis,
    threshold: f64,
) -> Result<usize> {
    let p = crate::model::ExpSinePotential::new(depth, template.decay, template.wavenumber)?;
    let problem = RadialProblem::new(RadialPotential::ExpSine(p), UnitSystem::Atomic);
    let table = solve_spectrum(basis, &problem, None)?;
    Ok(table.localized(threshold).len())
}

/// Bracket `(lo, hi)` of the critical depth at which the number of states
/// localized in the inner well first exceeds two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalDepth {
    pub lo: f64,
    pub hi: f64,
    pub count_lo: usize,
    pub count_hi: usize,
}

impl CriticalDepth {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Bisection on the localized-state count between `range.0` and `range.1`
/// until the bracket is narrower than `tol`.
pub fn find_critical_depth(
    template: &crate::model::ExpSinePotential,
    range: (f64, f64),
    basis: &Basis,
    tol: f64,
) -> Result<CriticalDepth> {
    let (mut lo, mut hi) = range;
    let mut count_lo = localized_count(template, lo, basis, LOCALIZED_THRESHOLD)?;
    let mut count_hi = localized_count(template, hi, basis, LOCALIZED_THRESHOLD)?;
    if count_lo > 2 || count_hi <= 2 {
        return Err(Error::NotFound(format!(
            "no transition from two to more localized states in V0 ∈ [{lo}, {hi}] \
             (counts {count_lo} and {count_hi})"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let c = localized_count(template, mid, basis, LOCALIZED_THRESHOLD)?;
        if c > 2 {
            hi = mid;
            count_hi = c;
        } else {
            lo = mid;
            count_lo = c;
        }
    }
    Ok(CriticalDepth {
        lo,
        hi,
        count_lo,
        count_hi,
    })
}

/// Dense `u(r)` samples for plotting radial densities.
pub fn radial_profile(basis: &Basis, coeffs: &[f64], points: usize) -> Vec<(f64, f64)> {
    let r_max = basis.spec.cutoff;
    (0..points)
        .map(|i| {
            let r = r_max * i as f64 / (points.max(2) - 1) as f64;
            let (u, _) = basis
                .knots
                .eval_combination(coeffs, r)
                .expect("sample inside the basis domain");
            (r, u)
        })
        .collect()
}

/// Overlap `∫ u_a u_b dr` of two states on the same basis.
pub fn overlap(basis: &Basis, a: &BoundState, b: &BoundState) -> f64 {
    basis.matrix_element(&a.coeffs, &b.coeffs, |_| 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{device_preset, ExpSinePotential, Preset};

    fn uniform(v: f64, mass: f64) -> RadialProblem {
        RadialProblem::new(
            RadialPotential::Layered(LayeredDevice::new(&[], (v, mass)).unwrap()),
            UnitSystem::Semiconductor,
        )
    }

    fn device(preset: Preset) -> RadialProblem {
        RadialProblem::new(
            RadialPotential::Layered(device_preset(preset).unwrap()),
            UnitSystem::Semiconductor,
        )
    }

    #[test]
    fn overlap_is_positive_definite_and_banded() {
        let basis = Basis::new(BasisSpec::new(16.0, 160, 5)).unwrap();
        let (h, s) = assemble(&basis, &device(Preset::Device1), 0).unwrap();
        assert!(s.clone().cholesky().is_some());
        for i in 0..s.nrows() {
            for j in 0..s.ncols() {
                if i.abs_diff(j) >= 5 {
                    assert_eq!(s[(i, j)], 0.0);
                    assert_eq!(h[(i, j)], 0.0);
                }
                let scale = h[(i, i)].abs().max(h[(j, j)].abs());
                assert!((h[(i, j)] - h[(j, i)]).abs() <= 1e-14 * scale);
            }
        }
    }

    #[test]
    fn free_hamiltonian_is_scaled_stiffness() {
        let basis = Basis::new(BasisSpec::new(5.0, 25, 5)).unwrap();
        let (h, _) = assemble(&basis, &uniform(0.0, 0.13), 0).unwrap();
        let c = UnitSystem::Semiconductor.hbar2_over_2me() / 0.13;
        let kv = basis.knots();
        let quad = basis.quadrature();
        for (i, j) in [(0, 0), (3, 5), (10, 11), (20, 20)] {
            let stiff = quad.integrate(|r| kv.eval(i, r, 1).unwrap() * kv.eval(j, r, 1).unwrap());
            assert!((h[(i, j)] - c * stiff).abs() < 1e-12 * c * stiff.abs().max(1.0));
        }
    }

    #[test]
    fn misaligned_interface_is_rejected() {
        let basis = Basis::new(BasisSpec::new(16.0, 300, 5)).unwrap();
        let err = assemble(&basis, &device(Preset::Device1), 0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let short = Basis::new(BasisSpec::new(6.0, 120, 5)).unwrap();
        assert!(matches!(
            assemble(&short, &device(Preset::Device1), 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn node_counting() {
        assert_eq!(count_nodes(&[0.0, 1.0, 2.0, 1.0, 0.0]), 0);
        assert_eq!(count_nodes(&[0.0, 1.0, -1.0, 0.5, 0.0]), 2);
        assert_eq!(count_nodes(&[1.0, 1e-12, -1e-12, 1.0]), 0);
    }

    #[test]
    fn states_are_orthonormal_and_node_ordered() {
        let problem = device(Preset::Device1);
        let basis = Basis::for_potential(BasisSpec::layered_default(), &problem.potential).unwrap();
        for l in [0, 1, 3] {
            let states = solve_channel(&basis, &problem, l, problem.bound_ceiling()).unwrap();
            assert!(!states.is_empty());
            for (idx, a) in states.iter().enumerate() {
                assert_eq!(a.n_r, idx, "l={l}");
                assert!(a.norm_residual < 1e-10);
                assert!(a.p_inner <= 1.0 + 1e-12 && a.p_inner >= 0.0);
                for b in &states[idx + 1..] {
                    assert!(overlap(&basis, a, b).abs() < 1e-10);
                    assert!(b.energy > a.energy);
                }
            }
        }
    }

    #[test]
    fn lattice_snapping() {
        assert_eq!(snap_to_lattice(1.0, 0.05), 1.0);
        assert_eq!(snap_to_lattice(1.02, 0.05), 1.0);
        assert_eq!(snap_to_lattice(1.03, 0.05), 1.05);
        assert_eq!(snap_to_lattice(0.001, 0.05), 0.05);
    }

    #[test]
    fn outer_state_is_not_localized_inside() {
        let problem = device(Preset::Device1);
        let basis = Basis::for_potential(BasisSpec::layered_default(), &problem.potential).unwrap();
        let states = solve_channel(&basis, &problem, 0, problem.bound_ceiling()).unwrap();
        // the ground state sits in the outer well
        assert!(states[0].p_inner < 0.05, "{}", states[0].p_inner);
    }

    #[test]
    fn expsine_channel_solves() {
        let basis = Basis::new(BasisSpec::expsine_default()).unwrap();
        let p = ExpSinePotential::new(2.0, 0.1, 1.0).unwrap();
        let problem = RadialProblem::new(RadialPotential::ExpSine(p), UnitSystem::Atomic);
        let states = solve_channel(&basis, &problem, 0, problem.bound_ceiling()).unwrap();
        assert!(!states.is_empty());
        assert!(states.iter().all(|s| s.energy < 0.0));
    }
}
