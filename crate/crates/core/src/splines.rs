//! Clamped uniform B-spline basis on `[0, R]` and Gauss–Legendre quadrature
//! over the knot intervals.
//!
//! The basis represents the reduced radial function `u(r) = r R(r)`. The first
//! and last splines of the full set are dropped so that every retained
//! function vanishes at `r = 0` and `r = R`.

use crate::error::{Error, Result};

/// Knot sequence `t_1 … t_{2k+I-1}` with `k`-fold knots at both ends and
/// equidistant interior knots.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    order: usize,
    cutoff: f64,
    intervals: usize,
    knots: Vec<f64>,
    // first full spline that is non-zero on each interval
    first: Vec<usize>,
}

impl KnotVector {
    pub fn new(cutoff: f64, intervals: usize, order: usize) -> Result<Self> {
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cutoff radius must be positive and finite, got {cutoff}"
            )));
        }
        if order < 2 {
            return Err(Error::InvalidParameter(format!(
                "spline order must be at least 2, got {order}"
            )));
        }
        if intervals < order {
            return Err(Error::InvalidParameter(format!(
                "interval count {intervals} is smaller than the spline order {order}"
            )));
        }
        let mut knots = Vec::with_capacity(2 * order + intervals - 1);
        knots.extend(std::iter::repeat_n(0.0, order));
        for j in 1..intervals {
            knots.push(j as f64 * cutoff / intervals as f64);
        }
        knots.extend(std::iter::repeat_n(cutoff, order));
        Ok(Self {
            order,
            cutoff,
            intervals,
            knots,
            first: (0..intervals).collect(),
        })
    }

    /// Uniform knots with the interior knot at each radius of `breaks` repeated
    /// `multiplicity` times in total. Repeating a knot `m` times leaves the
    /// basis `C^{k-1-m}` there, which lets it follow a kink in `u`.
    pub fn with_breaks(
        cutoff: f64,
        intervals: usize,
        order: usize,
        breaks: &[f64],
        multiplicity: usize,
    ) -> Result<Self> {
        let mut kv = Self::new(cutoff, intervals, order)?;
        if !(1..order).contains(&multiplicity) {
            return Err(Error::InvalidParameter(format!(
                "knot multiplicity must be in 1..={}, got {multiplicity}",
                order - 1
            )));
        }
        let h = kv.spacing();
        let mut idx = Vec::with_capacity(breaks.len());
        for &b in breaks {
            let x = b / h;
            let j = x.round();
            if (x - j).abs() > 1e-9 || j < 1.0 || j >= intervals as f64 {
                return Err(Error::InvalidParameter(format!(
                    "break radius {b} is not an interior knot of spacing {h}"
                )));
            }
            idx.push(j as usize);
        }
        idx.sort_unstable();
        idx.dedup();
        let mut knots = Vec::with_capacity(kv.knots.len() + idx.len() * (multiplicity - 1));
        let mut first = Vec::with_capacity(intervals);
        knots.extend(std::iter::repeat_n(0.0, order));
        for iv in 0..intervals {
            first.push(knots.len() - order);
            let j = iv + 1;
            if j == intervals {
                break;
            }
            let reps = if idx.binary_search(&j).is_ok() { multiplicity } else { 1 };
            let t = j as f64 * h;
            knots.extend(std::iter::repeat_n(t, reps));
        }
        knots.extend(std::iter::repeat_n(cutoff, order));
        kv.knots = knots;
        kv.first = first;
        Ok(kv)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn spacing(&self) -> f64 {
        self.cutoff / self.intervals as f64
    }

    /// Number of retained basis functions, `I + k - 3` for simple knots.
    pub fn basis_size(&self) -> usize {
        self.full_basis_size() - 2
    }

    /// Number of splines before the end ones are dropped, `I + k - 1` for
    /// simple knots.
    pub fn full_basis_size(&self) -> usize {
        self.knots.len() - self.order
    }

    /// Full index of the first of the `k` splines non-zero on interval `iv`.
    pub fn first_spline(&self, iv: usize) -> usize {
        self.first[iv]
    }

    /// Index of the knot interval containing `r`; `r = R` maps to the last one.
    pub fn interval_of(&self, r: f64) -> usize {
        let idx = (r / self.spacing()).floor();
        if idx < 0.0 {
            0
        } else {
            (idx as usize).min(self.intervals - 1)
        }
    }

    /// Endpoints of knot interval `iv`.
    pub fn interval_bounds(&self, iv: usize) -> (f64, f64) {
        let span = self.first[iv] + self.order - 1;
        (self.knots[span], self.knots[span + 1])
    }

    /// Whether `r` coincides with a knot to within `tol` (relative to the spacing).
    pub fn is_knot(&self, r: f64, tol: f64) -> bool {
        if r < 0.0 || r > self.cutoff {
            return false;
        }
        let x = r / self.spacing();
        (x - x.round()).abs() < tol
    }

    fn check_domain(&self, r: f64) -> Result<()> {
        if !(0.0..=self.cutoff).contains(&r) {
            return Err(Error::Domain(format!(
                "radius {r} outside the basis domain [0, {}]",
                self.cutoff
            )));
        }
        Ok(())
    }

    /// Values (and first derivatives) of the `k` full-set splines that are
    /// non-zero on interval `iv`, evaluated at `r`. Entry `s` belongs to full
    /// spline `first_spline(iv) + s`.
    pub fn nonzero_splines(&self, iv: usize, r: f64) -> (Vec<f64>, Vec<f64>) {
        let k = self.order;
        let f0 = self.first[iv];
        let span = k - 1 + f0;
        let lower = basis_funs(&self.knots, span, r, k - 2);
        let values = basis_funs(&self.knots, span, r, k - 1);
        let deg = (k - 1) as f64;
        let t = &self.knots;
        let mut derivs = vec![0.0; k];
        // Degree-(k-2) splines on this span are full indices f0+1 ..= f0+k-1.
        for s in 0..k {
            let j = f0 + s;
            let mut d = 0.0;
            if s >= 1 {
                let den = t[j + k - 1] - t[j];
                if den > 0.0 {
                    d += lower[s - 1] / den;
                }
            }
            if s + 1 < k {
                let den = t[j + k] - t[j + 1];
                if den > 0.0 {
                    d -= lower[s] / den;
                }
            }
            derivs[s] = deg * d;
        }
        (values, derivs)
    }

    /// Value (`deriv = 0`) or first derivative (`deriv = 1`) of retained basis
    /// function `i` (0-based; corresponds to full spline `i + 1`) at `r`.
    pub fn eval(&self, i: usize, r: f64, deriv: u8) -> Result<f64> {
        self.check_domain(r)?;
        if i >= self.basis_size() {
            return Err(Error::InvalidParameter(format!(
                "basis index {i} out of range (basis size {})",
                self.basis_size()
            )));
        }
        self.eval_full(i + 1, r, deriv)
    }

    /// Same as [`KnotVector::eval`] but indexing the full spline set, end
    /// splines included.
    pub fn eval_full(&self, j: usize, r: f64, deriv: u8) -> Result<f64> {
        self.check_domain(r)?;
        if deriv > 1 {
            return Err(Error::InvalidParameter(format!(
                "derivative order {deriv} not supported"
            )));
        }
        let iv = self.interval_of(r);
        let f0 = self.first[iv];
        if j < f0 || j >= f0 + self.order {
            return Ok(0.0);
        }
        let (v, d) = self.nonzero_splines(iv, r);
        Ok(if deriv == 0 { v[j - f0] } else { d[j - f0] })
    }

    /// Textbook Cox–de Boor recursion for full spline `j` (0-based) of order
    /// `order` with half-open support intervals. Slow; used for checks.
    pub fn cox_de_boor(&self, j: usize, order: usize, r: f64) -> f64 {
        let t = &self.knots;
        if order == 1 {
            return if t[j] <= r && r < t[j + 1] { 1.0 } else { 0.0 };
        }
        let mut acc = 0.0;
        let den_l = t[j + order - 1] - t[j];
        if den_l > 0.0 {
            acc += (r - t[j]) / den_l * self.cox_de_boor(j, order - 1, r);
        }
        let den_r = t[j + order] - t[j + 1];
        if den_r > 0.0 {
            acc += (t[j + order] - r) / den_r * self.cox_de_boor(j + 1, order - 1, r);
        }
        acc
    }

    /// Evaluates `u(r) = Σ c_i B_{i+1}(r)` and `u'(r)` for retained-basis
    /// coefficients `coeffs`.
    pub fn eval_combination(&self, coeffs: &[f64], r: f64) -> Result<(f64, f64)> {
        self.check_domain(r)?;
        let iv = self.interval_of(r);
        let (v, d) = self.nonzero_splines(iv, r);
        let f0 = self.first[iv];
        let mut u = 0.0;
        let mut du = 0.0;
        for s in 0..self.order {
            if let Some(i) = (f0 + s).checked_sub(1) {
                if let Some(&c) = coeffs.get(i) {
                    u += c * v[s];
                    du += c * d[s];
                }
            }
        }
        Ok((u, du))
    }
}

/// Non-zero B-spline values of the given degree at `r` on knot span `span`
/// (de Boor's triangular scheme). Entry `s` belongs to spline `span - degree + s`.
fn basis_funs(t: &[f64], span: usize, r: f64, degree: usize) -> Vec<f64> {
    let mut n = vec![0.0; degree + 1];
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    n[0] = 1.0;
    for j in 1..=degree {
        left[j] = r - t[span + 1 - j];
        right[j] = t[span + j] - r;
        let mut saved = 0.0;
        for s in 0..j {
            let temp = n[s] / (right[s + 1] + left[j - s]);
            n[s] = saved + right[s + 1] * temp;
            saved = left[j - s] * temp;
        }
        n[j] = saved;
    }
    n
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule with `G` nodes mapped onto every knot interval.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes_per_interval: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(kv: &KnotVector, nodes_per_interval: usize) -> Result<Self> {
        if nodes_per_interval < 1 {
            return Err(Error::InvalidParameter(
                "quadrature needs at least one node per interval".into(),
            ));
        }
        let (x, w) = gauss_legendre(nodes_per_interval);
        let mut nodes = Vec::with_capacity(kv.intervals() * nodes_per_interval);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for iv in 0..kv.intervals() {
            let (a, b) = kv.interval_bounds(iv);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        Ok(Self {
            nodes_per_interval,
            nodes,
            weights,
        })
    }

    pub fn nodes_per_interval(&self) -> usize {
        self.nodes_per_interval
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights belonging to knot interval `iv`.
    pub fn interval(&self, iv: usize) -> (&[f64], &[f64]) {
        let g = self.nodes_per_interval;
        (
            &self.nodes[iv * g..(iv + 1) * g],
            &self.weights[iv * g..(iv + 1) * g],
        )
    }

    /// `∫₀^R f(r) dr`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Spline values and derivatives tabulated at every quadrature node.
#[derive(Debug, Clone)]
pub struct SplineTable {
    order: usize,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl SplineTable {
    pub fn new(kv: &KnotVector, quad: &QuadratureRule) -> Self {
        let k = kv.order();
        let g = quad.nodes_per_interval();
        let mut values = Vec::with_capacity(quad.nodes().len() * k);
        let mut derivs = Vec::with_capacity(values.capacity());
        for (q, &r) in quad.nodes().iter().enumerate() {
            let (v, d) = kv.nonzero_splines(q / g, r);
            values.extend_from_slice(&v);
            derivs.extend_from_slice(&d);
        }
        Self {
            order: k,
            values,
            derivs,
        }
    }

    /// Values of the `k` non-zero full splines at quadrature node `q`.
    pub fn values(&self, q: usize) -> &[f64] {
        &self.values[q * self.order..(q + 1) * self.order]
    }

    pub fn derivs(&self, q: usize) -> &[f64] {
        &self.derivs[q * self.order..(q + 1) * self.order]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn knots_for_small_case() {
        let kv = KnotVector::new(10.0, 5, 5).unwrap();
        let expected = [
            0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 10.0, 10.0, 10.0, 10.0,
        ];
        assert_eq!(kv.knots().len(), expected.len());
        for (a, b) in kv.knots().iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(kv.basis_size(), 7);
        assert_eq!(KnotVector::new(16.0, 300, 5).unwrap().basis_size(), 302);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(KnotVector::new(10.0, 3, 5).is_err());
        assert!(KnotVector::new(0.0, 10, 5).is_err());
        assert!(KnotVector::new(-1.0, 10, 5).is_err());
        assert!(KnotVector::new(1.0, 10, 1).is_err());
    }

    #[test]
    fn order_one_is_an_indicator() {
        let kv = KnotVector::new(10.0, 5, 5).unwrap();
        // full spline 4 of order 1 lives on [t_4, t_5) = [0, 2)
        assert_eq!(kv.cox_de_boor(4, 1, 0.0), 1.0);
        assert_eq!(kv.cox_de_boor(4, 1, 1.999), 1.0);
        assert_eq!(kv.cox_de_boor(4, 1, 2.0), 0.0);
        assert_eq!(kv.cox_de_boor(5, 1, 2.0), 1.0);
    }

    #[test]
    fn partition_of_unity() {
        let kv = KnotVector::new(16.0, 37, 5).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let r: f64 = rng.gen_range(1e-9..16.0);
            let sum: f64 = (0..kv.full_basis_size())
                .map(|j| kv.eval_full(j, r, 0).unwrap())
                .sum();
            assert!((sum - 1.0).abs() < 1e-12, "sum {sum} at {r}");
        }
    }

    #[test]
    fn triangular_scheme_matches_recursion() {
        let kv = KnotVector::new(3.0, 9, 5).unwrap();
        for step in 0..300 {
            let r = step as f64 * 0.01 + 0.003;
            for j in 0..kv.full_basis_size() {
                let a = kv.eval_full(j, r, 0).unwrap();
                let b = kv.cox_de_boor(j, 5, r);
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn repeated_knots() {
        let kv = KnotVector::with_breaks(3.0, 12, 5, &[1.0, 2.25], 4).unwrap();
        assert_eq!(kv.full_basis_size(), 12 + 4 + 6);
        assert_eq!(kv.basis_size(), 12 + 4 + 6 - 2);
        assert_eq!(kv.interval_bounds(4), (1.0, 1.25));
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..400 {
            let r: f64 = rng.gen_range(1e-9..3.0);
            let mut sum = 0.0;
            for j in 0..kv.full_basis_size() {
                let a = kv.eval_full(j, r, 0).unwrap();
                assert!((a - kv.cox_de_boor(j, 5, r)).abs() < 1e-13);
                sum += a;
            }
            assert!((sum - 1.0).abs() < 1e-12);
        }
        // only one spline is non-zero at a knot of multiplicity k-1, and it
        // has a slope jump there
        let j = kv.first_spline(4);
        assert!((kv.eval_full(j, 1.0, 0).unwrap() - 1.0).abs() < 1e-14);
        let left = kv.eval_full(j, 1.0 - 1e-9, 1).unwrap();
        let right = kv.eval_full(j, 1.0 + 1e-9, 1).unwrap();
        assert!(left > 1.0 && right < -1.0);
        assert!(KnotVector::with_breaks(3.0, 12, 5, &[1.1], 4).is_err());
        assert!(KnotVector::with_breaks(3.0, 12, 5, &[1.0], 5).is_err());
    }

    #[test]
    fn retained_functions_vanish_at_ends() {
        let kv = KnotVector::new(16.0, 40, 5).unwrap();
        for i in 0..kv.basis_size() {
            assert_eq!(kv.eval(i, 0.0, 0).unwrap(), 0.0);
            assert!(kv.eval(i, 16.0, 0).unwrap().abs() < 1e-15);
        }
        // the dropped end splines do not
        assert_eq!(kv.eval_full(0, 0.0, 0).unwrap(), 1.0);
        assert!((kv.eval_full(kv.full_basis_size() - 1, 16.0, 0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hat_function_slopes() {
        let h = 0.5;
        let kv = KnotVector::new(5.0, 10, 2).unwrap();
        // retained hat i peaks at (i+1)h
        let i = 3;
        let peak = (i + 1) as f64 * h;
        assert!((kv.eval(i, peak - 0.25 * h, 1).unwrap() - 1.0 / h).abs() < 1e-12);
        assert!((kv.eval(i, peak + 0.25 * h, 1).unwrap() + 1.0 / h).abs() < 1e-12);
        assert_eq!(kv.eval(i, peak + 2.5 * h, 1).unwrap(), 0.0);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let kv = KnotVector::new(4.0, 8, 5).unwrap();
        let r = 1.23;
        let i = 3;
        let exact = kv.eval(i, r, 1).unwrap();
        let mut errs = Vec::new();
        for &h in &[1e-2, 1e-3, 1e-4] {
            let fd = (kv.eval(i, r + h, 0).unwrap() - kv.eval(i, r - h, 0).unwrap()) / (2.0 * h);
            errs.push((fd - exact).abs());
        }
        // O(h²): each decade reduces the error by ~100.
        assert!(errs[0] / errs[1] > 50.0, "{errs:?}");
        assert!(errs[1] / errs[2] > 50.0 || errs[2] < 1e-10, "{errs:?}");
    }

    #[test]
    fn domain_errors() {
        let kv = KnotVector::new(4.0, 8, 5).unwrap();
        assert!(matches!(kv.eval(0, -0.1, 0), Err(Error::Domain(_))));
        assert!(matches!(kv.eval(0, 4.1, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn quadrature_exactness() {
        let kv = KnotVector::new(10.0, 7, 5).unwrap();
        let q = QuadratureRule::new(&kv, 1).unwrap();
        assert!((q.integrate(|_| 1.0) - 10.0).abs() < 1e-13);
        let q3 = QuadratureRule::new(&kv, 3).unwrap();
        assert!((q3.integrate(|r| r * r) - 1000.0 / 3.0).abs() / (1000.0 / 3.0) < 1e-14);
        for g in 1..=10 {
            let q = QuadratureRule::new(&kv, g).unwrap();
            for iv in 0..kv.intervals() {
                let (a, b) = kv.interval_bounds(iv);
                let (xs, ws) = q.interval(iv);
                assert!(xs.iter().all(|&x| x > a && x < b));
                for deg in 0..(2 * g) {
                    let got: f64 = xs.iter().zip(ws).map(|(x, w)| w * x.powi(deg as i32)).sum();
                    let exact = (b.powi(deg as i32 + 1) - a.powi(deg as i32 + 1)) / (deg + 1) as f64;
                    assert!((got - exact).abs() <= 1e-13 * exact.abs().max(1e-300), "g={g} deg={deg}");
                }
            }
        }
        assert!(QuadratureRule::new(&kv, 0).is_err());
    }

    #[test]
    fn overlap_is_symmetric() {
        let kv = KnotVector::new(6.0, 12, 5).unwrap();
        let q = QuadratureRule::new(&kv, 7).unwrap();
        for (i, j) in [(2, 4), (0, 3), (7, 9)] {
            let a = q.integrate(|r| kv.eval(i, r, 0).unwrap() * kv.eval(j, r, 0).unwrap());
            let b = q.integrate(|r| kv.eval(j, r, 0).unwrap() * kv.eval(i, r, 0).unwrap());
            assert_eq!(a, b);
        }
    }
}
