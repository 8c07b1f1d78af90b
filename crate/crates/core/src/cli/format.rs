//! Deterministic text formats for reports.

use std::fmt::Write as _;

use serde::Serialize;

use crate::perfect_foresight::IrfReport;

/// Shortest round-trip decimal, switching to exponent form for very small or
/// very large magnitudes.
pub fn full(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if !v.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Twelve significant digits.
pub fn sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let e = v.abs().log10().floor() as i32;
    if (-5..12).contains(&e) {
        let decimals = (11 - e).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.11e}")
    }
}

pub fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn name_value_csv(rows: &[(&str, f64)]) -> String {
    let mut s = String::from("name,value\n");
    for (name, v) in rows {
        let _ = writeln!(s, "{name},{}", full(*v));
    }
    s
}

pub fn irf_csv(report: &IrfReport) -> String {
    let mut s = String::from("t");
    for series in &report.series {
        s.push(',');
        s.push_str(series.name);
    }
    s.push('\n');
    for t in 0..report.len() {
        let _ = write!(s, "{t}");
        for series in &report.series {
            s.push(',');
            s.push_str(&sig12(series.values[t]));
        }
        s.push('\n');
    }
    s
}
