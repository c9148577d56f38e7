//! CSV tables. Floats are written in scientific notation with 12 significant
//! digits and a signed two-digit exponent (`-1.23456789012e-03`).

use crate::dipole::DipoleMatrix;
use crate::dynamics::{DepthRow, DetuningRow, StrengthRow, Trajectory};
use crate::error::{Error, Result};
use crate::spectral::SpectrumRow;

pub const SPECTRUM_HEADER: [&str; 5] = ["sweep_param", "l", "n_r", "E", "P_inner"];
pub const TRAJECTORY_HEADER: [&str; 5] = ["t", "pop_q1", "pop_q2", "leakage", "norm_deficit"];

/// `x` with 12 significant digits.
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.11e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn write_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("ASCII table"))
}

/// Rows are sorted by `(sweep_param, l, n_r)` before writing.
pub fn spectrum_csv(rows: &[SpectrumRow]) -> Result<String> {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| {
        a.sweep_param
            .total_cmp(&b.sweep_param)
            .then((a.l, a.n_r).cmp(&(b.l, b.n_r)))
    });
    write_table(
        &SPECTRUM_HEADER,
        rows.iter().map(|r| {
            vec![
                sci(r.sweep_param),
                r.l.to_string(),
                r.n_r.to_string(),
                sci(r.energy),
                sci(r.p_inner),
            ]
        }),
    )
}

pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    write_table(
        &TRAJECTORY_HEADER,
        (0..traj.times.len()).map(|i| {
            vec![
                sci(traj.times[i]),
                sci(traj.pop_q1[i]),
                sci(traj.pop_q2[i]),
                sci(traj.leakage[i]),
                sci(traj.norm_deficit[i]),
            ]
        }),
    )
}

pub fn strength_csv(rows: &[StrengthRow]) -> Result<String> {
    write_table(
        &["A0", "L_p", "max_norm_deficit"],
        rows.iter()
            .map(|r| vec![sci(r.amplitude), sci(r.leakage), sci(r.max_norm_deficit)]),
    )
}

pub fn detuning_csv(rows: &[DetuningRow]) -> Result<String> {
    write_table(
        &["omega_rel", "L_p_rel", "L_p", "max_norm_deficit"],
        rows.iter().map(|r| {
            vec![
                sci(r.omega_rel),
                sci(r.normalized),
                sci(r.leakage),
                sci(r.max_norm_deficit),
            ]
        }),
    )
}

/// Depth sweeps at several amplitudes, one block per amplitude.
pub fn depth_csv(blocks: &[(f64, Vec<DepthRow>)]) -> Result<String> {
    write_table(
        &["A0", "V0", "L_p", "omega_res", "max_norm_deficit"],
        blocks.iter().flat_map(|(a, rows)| {
            rows.iter().map(move |r| {
                vec![
                    sci(*a),
                    sci(r.depth),
                    sci(r.leakage),
                    sci(r.omega_res),
                    sci(r.max_norm_deficit),
                ]
            })
        }),
    )
}

/// Every pair `(k, n)` with its coupling and transition frequency.
pub fn dipole_csv(dm: &DipoleMatrix) -> Result<String> {
    let n = dm.len();
    write_table(
        &["l_k", "n_r_k", "l_n", "n_r_n", "Z", "omega"],
        (0..n).flat_map(|k| {
            (0..n).map(move |m| {
                let (a, b) = (dm.levels[k], dm.levels[m]);
                vec![
                    a.l.to_string(),
                    a.n_r.to_string(),
                    b.l.to_string(),
                    b.n_r.to_string(),
                    sci(dm.z[(k, m)]),
                    sci(dm.omega(k, m)),
                ]
            })
        }),
    )
}

/// `(l, n_r, [(r, u(r))])` for one state.
pub type Density = (usize, usize, Vec<(f64, f64)>);

/// `u(r)²` samples per state.
pub fn density_csv(states: &[Density]) -> Result<String> {
    write_table(
        &["l", "n_r", "r", "u2"],
        states.iter().flat_map(|(l, n_r, samples)| {
            samples
                .iter()
                .map(move |&(r, u)| vec![l.to_string(), n_r.to_string(), sci(r), sci(u * u)])
        }),
    )
}

/// Analytic against spectral energies.
pub fn oracle_csv(rows: &[(usize, usize, f64, f64)]) -> Result<String> {
    write_table(
        &["l", "n_r", "E_analytic", "E_spectral", "dE"],
        rows.iter().map(|&(l, n_r, ea, es)| {
            vec![
                l.to_string(),
                n_r.to_string(),
                sci(ea),
                sci(es),
                sci(es - ea),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_format() {
        assert_eq!(sci(1.0), "1.00000000000e+00");
        assert_eq!(sci(-0.00123456789012345), "-1.23456789012e-03");
        assert_eq!(sci(6.02214076e23), "6.02214076000e+23");
        assert_eq!(sci(0.0), "0.00000000000e+00");
        assert_eq!(sci(1e-300), "1.00000000000e-300");
    }

    #[test]
    fn spectrum_rows_are_sorted() {
        let row = |p, l, n_r| SpectrumRow {
            sweep_param: p,
            l,
            n_r,
            energy: 0.5,
            p_inner: 0.0,
        };
        let csv = spectrum_csv(&[row(2.0, 0, 0), row(1.0, 1, 0), row(1.0, 0, 1)]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "sweep_param,l,n_r,E,P_inner");
        assert!(lines[1].starts_with("1.00000000000e+00,0,1,"));
        assert!(lines[2].starts_with("1.00000000000e+00,1,0,"));
        assert!(lines[3].starts_with("2.00000000000e+00,0,0,"));
    }
}
