//! Byte-stable text output.

use std::fmt::Write;

use cocontact::{PhasePoint, Trajectory};

/// Shortest round-trip decimal in scientific form with a signed exponent,
/// e.g. `1.5e+0`, `-2.5e-7`.
pub fn float(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:e}");
    match s.split_once('e') {
        Some((m, e)) if !e.starts_with('-') => format!("{m}e+{e}"),
        _ => s,
    }
}

pub fn header(n: usize, extra: &[&str]) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("q{i}")));
    cols.extend((1..=n).map(|i| format!("p{i}")));
    cols.push("z".into());
    cols.extend(extra.iter().map(|s| s.to_string()));
    cols.join(",")
}

fn row(out: &mut String, x: &PhasePoint, extra: &[f64]) {
    let cells: Vec<String> = x.to_vec().into_iter().chain(extra.iter().copied()).map(float).collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.first().dim();
    let mut out = header(n, &[]);
    out.push('\n');
    for x in &traj.samples {
        row(&mut out, x, &[]);
    }
    out
}

/// Points with one trailing value column each.
pub fn points_csv(n: usize, column: &str, rows: &[(PhasePoint, f64)]) -> String {
    let mut out = header(n, &[column]);
    out.push('\n');
    for (x, v) in rows {
        row(&mut out, x, &[*v]);
    }
    out
}

/// Grid dump: `t,q1..qn[,z],residual`.
pub fn grid_csv(n: usize, with_z: bool, rows: &[(f64, Vec<f64>, f64, f64)]) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("q{i}")));
    if with_z {
        cols.push("z".into());
    }
    cols.push("residual".into());
    let mut out = cols.join(",");
    out.push('\n');
    for (t, q, z, r) in rows {
        let mut cells = vec![float(*t)];
        cells.extend(q.iter().map(|v| float(*v)));
        if with_z {
            cells.push(float(*z));
        }
        cells.push(float(*r));
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_exponents() {
        assert_eq!(float(1.5), "1.5e+0");
        assert_eq!(float(0.0), "0e+0");
        assert_eq!(float(-2.5e-7), "-2.5e-7");
        assert_eq!(float(1e300), "1e+300");
        assert_eq!(float(f64::NAN), "nan");
    }

    #[test]
    fn round_trip() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::E.powi(4), -7.389056098930651, 5e-324, f64::MAX] {
            assert_eq!(float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn header_columns() {
        assert_eq!(header(2, &[]), "t,q1,q2,p1,p2,z");
        assert_eq!(header(1, &["bracket"]), "t,q1,p1,z,bracket");
    }
}
