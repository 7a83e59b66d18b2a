//! Eye diagrams as SVG polyline bundles.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 40.0;

/// Folds `samples` into two-UI traces, one starting at each symbol after
/// `skip`, and draws them over a phase axis of 0..2 UI.
pub fn eye_svg(title: &str, samples: &[f64], samples_per_symbol: usize, skip: usize) -> String {
    let ns = samples_per_symbol.max(1);
    let span = 2 * ns;
    let mut traces: Vec<&[f64]> = Vec::new();
    let mut k = skip;
    while (k + 2) * ns < samples.len() {
        traces.push(&samples[k * ns..k * ns + span + 1]);
        k += 1;
    }
    let (lo, hi) = traces
        .iter()
        .flat_map(|t| t.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let (lo, hi) = if lo < hi { (lo, hi) } else { (-1.0, 1.0) };
    let x = |i: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / span as f64;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4"/>"#,
        y(0.0).clamp(MARGIN, HEIGHT - MARGIN),
        WIDTH - MARGIN,
        y(0.0).clamp(MARGIN, HEIGHT - MARGIN)
    );
    let _ = writeln!(s, r#"<g fill="none" stroke="steelblue" stroke-opacity="0.3" stroke-width="1">"#);
    for t in &traces {
        s.push_str("<polyline points=\"");
        for (i, v) in t.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.2},{:.2}", x(i), y(*v));
        }
        s.push_str("\"/>\n");
    }
    s.push_str("</g>\n");
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="12">{} ({} traces, {:.4} V to {:.4} V)</text>"#,
        escape(title),
        traces.len(),
        lo,
        hi
    );
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
