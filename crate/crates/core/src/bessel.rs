//! Spherical Bessel functions `j_ℓ`, `y_ℓ` and modified spherical Bessel
//! functions `i_ℓ`, `k_ℓ` of real argument.
//!
//! `k_ℓ` uses the normalization `k_0(x) = e^{-x}/x`, which satisfies the same
//! recurrences as the `π/2`-scaled convention.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselKind {
    J,
    Y,
    I,
    K,
}

const RESCALE: f64 = 1e250;

/// Values `f_0(x) … f_lmax(x)`.
pub fn spherical_bessel_all(kind: BesselKind, l_max: usize, x: f64) -> Result<Vec<f64>> {
    match kind {
        BesselKind::Y | BesselKind::K if !(x > 0.0) => {
            return Err(Error::Domain(format!(
                "{kind:?}-type spherical Bessel function needs x > 0, got {x}"
            )))
        }
        _ if x.is_nan() || x < 0.0 => {
            return Err(Error::Domain(format!("spherical Bessel argument {x} < 0")))
        }
        _ => {}
    }
    Ok(match kind {
        BesselKind::J => sph_j(l_max, x),
        BesselKind::Y => sph_y(l_max, x),
        BesselKind::I => sph_i(l_max, x),
        BesselKind::K => sph_k(l_max, x),
    })
}

pub fn spherical_bessel(kind: BesselKind, l: usize, x: f64) -> Result<f64> {
    Ok(spherical_bessel_all(kind, l, x)?[l])
}

/// Value and first derivative with respect to `x`.
pub fn spherical_bessel_with_derivative(kind: BesselKind, l: usize, x: f64) -> Result<(f64, f64)> {
    let f = spherical_bessel_all(kind, l + 1, x)?;
    let d = if l == 0 {
        match kind {
            BesselKind::I => f[1],
            _ => -f[1],
        }
    } else {
        let lf = (l + 1) as f64;
        match kind {
            BesselKind::K => -f[l - 1] - lf / x * f[l],
            _ => f[l - 1] - lf / x * f[l],
        }
    };
    Ok((f[l], d))
}

fn sph_j(l_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; l_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    if x > l_max as f64 + 1.0 {
        out[0] = j0;
        if l_max >= 1 {
            out[1] = s / (x * x) - c / x;
        }
        for l in 1..l_max {
            out[l + 1] = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
        }
        return out;
    }
    // Miller's downward recurrence, normalized against j0 or j1.
    let start = l_max + 30 + x.ceil() as usize;
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut tail = vec![0.0; l_max + 2];
    for l in (0..=start).rev() {
        if l <= l_max + 1 {
            tail[l] = cur;
        }
        let prev = (2 * l + 1) as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            next /= RESCALE;
            for t in tail.iter_mut() {
                *t /= RESCALE;
            }
        }
    }
    let j1 = s / (x * x) - c / x;
    let scale = if j0.abs() >= j1.abs() || x < 0.5 {
        j0 / tail[0]
    } else {
        j1 / tail[1]
    };
    for l in 0..=l_max {
        out[l] = tail[l] * scale;
    }
    out
}

fn sph_y(l_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; l_max + 1];
    let (s, c) = x.sin_cos();
    out[0] = -c / x;
    if l_max >= 1 {
        out[1] = -c / (x * x) - s / x;
    }
    for l in 1..l_max {
        out[l + 1] = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
    }
    out
}

fn sph_i(l_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; l_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let i0 = if x < 1e-4 { 1.0 + x * x / 6.0 } else { x.sinh() / x };
    let start = l_max + 30 + x.ceil() as usize;
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut tail = vec![0.0; l_max + 1];
    for l in (0..=start).rev() {
        if l <= l_max {
            tail[l] = cur;
        }
        // i_{l-1} = i_{l+1} + (2l+1)/x i_l
        let prev = next + (2 * l + 1) as f64 / x * cur;
        next = cur;
        cur = prev;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            next /= RESCALE;
            for t in tail.iter_mut() {
                *t /= RESCALE;
            }
        }
    }
    let scale = i0 / tail[0];
    for l in 0..=l_max {
        out[l] = tail[l] * scale;
    }
    out
}

fn sph_k(l_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; l_max + 1];
    let e = (-x).exp();
    out[0] = e / x;
    if l_max >= 1 {
        out[1] = e * (1.0 + x) / (x * x);
    }
    for l in 1..l_max {
        out[l + 1] = out[l - 1] + (2 * l + 1) as f64 / x * out[l];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn closed_forms() {
        for &x in &[0.3, 1.0, 2.5, 7.0, 19.0] {
            let (s, c) = f64::sin_cos(x);
            assert!(rel(spherical_bessel(BesselKind::J, 0, x).unwrap(), s / x) < 1e-14);
            assert!(rel(spherical_bessel(BesselKind::Y, 0, x).unwrap(), -c / x) < 1e-14);
            let j2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
            assert!((spherical_bessel(BesselKind::J, 2, x).unwrap() - j2).abs() < 1e-13);
            let i1 = (x * x.cosh() - x.sinh()) / (x * x);
            assert!(rel(spherical_bessel(BesselKind::I, 1, x).unwrap(), i1) < 1e-12);
        }
        assert!(spherical_bessel(BesselKind::J, 0, std::f64::consts::PI).unwrap().abs() < 1e-15);
        assert!(spherical_bessel(BesselKind::J, 1, 4.493409457909064).unwrap().abs() < 1e-14);
    }

    #[test]
    fn small_argument_series() {
        // j_l(x) ≈ x^l / (2l+1)!!, i_l(x) likewise
        let x = 1e-3_f64;
        for l in 0..8 {
            let dfact: f64 = (1..=2 * l + 1).step_by(2).map(|v| v as f64).product();
            let lead = x.powi(l as i32) / dfact;
            assert!(rel(spherical_bessel(BesselKind::J, l, x).unwrap(), lead) < 1e-6);
            assert!(rel(spherical_bessel(BesselKind::I, l, x).unwrap(), lead) < 1e-6);
        }
    }

    #[test]
    fn wronskians() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..500 {
            let x: f64 = rng.gen_range(0.05..40.0);
            let l: usize = rng.gen_range(0..=10);
            let (j, dj) = spherical_bessel_with_derivative(BesselKind::J, l, x).unwrap();
            let (y, dy) = spherical_bessel_with_derivative(BesselKind::Y, l, x).unwrap();
            let w = j * dy - dj * y;
            assert!(rel(w, 1.0 / (x * x)) < 1e-12, "j/y l={l} x={x} w={w}");
            let (i, di) = spherical_bessel_with_derivative(BesselKind::I, l, x).unwrap();
            let (k, dk) = spherical_bessel_with_derivative(BesselKind::K, l, x).unwrap();
            let w = i * dk - di * k;
            assert!(rel(w, -1.0 / (x * x)) < 1e-12, "i/k l={l} x={x} w={w}");
        }
    }

    #[test]
    fn singular_kinds_need_positive_argument() {
        assert!(matches!(spherical_bessel(BesselKind::Y, 0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(spherical_bessel(BesselKind::K, 3, -1.0), Err(Error::Domain(_))));
        assert_eq!(spherical_bessel(BesselKind::J, 0, 0.0).unwrap(), 1.0);
        assert_eq!(spherical_bessel(BesselKind::J, 2, 0.0).unwrap(), 0.0);
    }
}
