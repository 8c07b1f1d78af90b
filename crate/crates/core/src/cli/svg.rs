//! Static line charts for impulse responses.

use std::fmt::Write as _;

use crate::perfect_foresight::{IrfSeries, Unit};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

pub fn line_chart(series: &IrfSeries) -> String {
    let n = series.values.len().max(2);
    let (mut lo, mut hi) = series
        .values
        .iter()
        .fold((0.0f64, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi - lo < 1e-300 {
        lo -= 1.0;
        hi += 1.0;
    }
    let x = |t: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * t as f64 / (n - 1) as f64;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);
    let unit = match series.unit {
        Unit::Percent => "% dev.",
        Unit::BasisPoints => "bp dev.",
        Unit::Level => "level",
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="24" font-family="sans-serif" font-size="14">{} ({unit})</text>"#,
        series.name
    );
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        y(0.0),
        WIDTH - MARGIN
    );
    for (label, v) in [(hi, hi), (lo, lo)] {
        let _ = writeln!(
            s,
            r#"<text x="4" y="{:.2}" font-family="sans-serif" font-size="10">{}</text>"#,
            y(v),
            super::format::sig12(label)
                .chars()
                .take(9)
                .collect::<String>()
        );
    }
    let _ = write!(
        s,
        r#"<polyline fill="none" stroke="navy" stroke-width="1.5" points=""#
    );
    for (t, &v) in series.values.iter().enumerate() {
        if t > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{:.2},{:.2}", x(t), y(v));
    }
    let _ = writeln!(s, r#""/>"#);
    s.push_str("</svg>\n");
    s
}
