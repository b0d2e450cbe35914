//! Minimal SVG plots: stability diagram, errorbar chart and MAC heat map.

use std::fmt::Write as _;

use crate::experiments::SparsityStudyResult;
use crate::frf::FrfSet;
use crate::modal::MacMatrix;
use crate::stabilization::StabilityDiagram;

const W: f64 = 900.0;
const H: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 70.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn map(&self, v: f64) -> f64 {
        let span = if self.hi > self.lo { self.hi - self.lo } else { 1.0 };
        self.px_lo + (v - self.lo) / span * (self.px_hi - self.px_lo)
    }
}

/// About `n` round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / n.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(t);
        t += step;
    }
    out
}

fn header(title: &str) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>", W / 2.0, escape(title));
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(s: &mut String) {
    let _ = writeln!(
        s,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
}

fn x_ticks(s: &mut String, axis: &Axis, label: &str) {
    for t in ticks(axis.lo, axis.hi, 8) {
        let x = axis.map(t);
        let _ = writeln!(s, "<line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"black\"/>", H - BOTTOM, H - BOTTOM + 5.0);
        let _ = writeln!(s, "<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{t}</text>", H - BOTTOM + 19.0);
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", (LEFT + W - RIGHT) / 2.0, H - 15.0, escape(label));
}

fn y_ticks(s: &mut String, axis: &Axis, label: &str, right: bool, fmt: impl Fn(f64) -> String) {
    let (x0, x1, anchor, tx) = if right {
        (W - RIGHT, W - RIGHT + 5.0, "start", W - RIGHT + 8.0)
    } else {
        (LEFT - 5.0, LEFT, "end", LEFT - 8.0)
    };
    for t in ticks(axis.lo, axis.hi, 6) {
        let y = axis.map(t);
        let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y:.1}\" x2=\"{x1}\" y2=\"{y:.1}\" stroke=\"black\"/>");
        let _ = writeln!(s, "<text x=\"{tx}\" y=\"{:.1}\" text-anchor=\"{anchor}\">{}</text>", y + 4.0, fmt(t));
    }
    let lx = if right { W - 18.0 } else { 18.0 };
    let cy = (TOP + H - BOTTOM) / 2.0;
    let _ = writeln!(
        s,
        "<text x=\"{lx}\" y=\"{cy}\" text-anchor=\"middle\" transform=\"rotate(-90 {lx} {cy})\">{}</text>",
        escape(label)
    );
}

/// Averaged `|FRF|` on a log scale with the diagram poles per order.
pub fn stability_diagram_svg(diagram: &StabilityDiagram, frf: &FrfSet) -> String {
    let mut s = header(&format!("Stability diagram ({})", diagram.method));
    let fx = Axis {
        lo: diagram.f_min,
        hi: diagram.f_max,
        px_lo: LEFT,
        px_hi: W - RIGHT,
    };
    let mag: Vec<f64> = frf.mean_magnitude().iter().map(|m| m.max(1e-300).log10()).collect();
    let lo = mag.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let hi = mag.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil();
    let my = Axis {
        lo,
        hi: if hi > lo { hi } else { lo + 1.0 },
        px_lo: H - BOTTOM,
        px_hi: TOP,
    };
    let oy = Axis {
        lo: 0.0,
        hi: diagram.max_order().max(1) as f64 + 1.0,
        px_lo: H - BOTTOM,
        px_hi: TOP,
    };
    frame(&mut s);
    x_ticks(&mut s, &fx, "Frequency [Hz]");
    y_ticks(&mut s, &my, "log10 mean |H|", false, |t| format!("{t}"));
    y_ticks(&mut s, &oy, "Model order", true, |t| format!("{t}"));

    let mut path = String::new();
    for (k, f) in frf.grid().freqs_hz().iter().enumerate() {
        let _ = write!(path, "{}{:.2},{:.2} ", if k == 0 { 'M' } else { 'L' }, fx.map(*f), my.map(mag[k]));
    }
    let _ = writeln!(s, "<path d=\"{path}\" fill=\"none\" stroke=\"#555\" stroke-width=\"1\"/>");

    for row in &diagram.rows {
        let y = oy.map(row.order as f64);
        for e in &row.entries {
            let x = fx.map(e.pole.f_hz);
            if e.consistent {
                let _ = writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"#1f5fbf\"/>");
            } else {
                let _ = writeln!(
                    s,
                    "<path d=\"M{:.2},{y:.2}h6M{x:.2},{:.2}v6\" stroke=\"#c0392b\" stroke-width=\"1.2\"/>",
                    x - 3.0,
                    y - 3.0
                );
            }
        }
    }
    let lx = LEFT + 10.0;
    let _ = writeln!(s, "<circle cx=\"{lx}\" cy=\"{}\" r=\"3\" fill=\"#1f5fbf\"/>", TOP + 14.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">consistent</text>", lx + 8.0, TOP + 18.0);
    let _ = writeln!(
        s,
        "<path d=\"M{},{}h6M{lx},{}v6\" stroke=\"#c0392b\" stroke-width=\"1.2\"/>",
        lx - 3.0,
        TOP + 30.0,
        TOP + 27.0
    );
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">spurious</text>", lx + 8.0, TOP + 34.0);
    s.push_str("</svg>\n");
    s
}

/// Mean inside percentage per nonzero count with one-sigma bars.
pub fn errorbar_svg(results: &[SparsityStudyResult]) -> String {
    let mut s = header("Roots inside the unit circle");
    let mut sorted = results.to_vec();
    sorted.sort_by_key(|r| r.nonzero_count);
    let max_count = sorted.last().map_or(1, |r| r.nonzero_count) as f64;
    let x = Axis {
        lo: 0.0,
        hi: max_count * 1.05,
        px_lo: LEFT,
        px_hi: W - RIGHT,
    };
    let y = Axis {
        lo: 0.0,
        hi: 100.0,
        px_lo: H - BOTTOM,
        px_hi: TOP,
    };
    frame(&mut s);
    x_ticks(&mut s, &x, "Number of nonzero coefficients");
    y_ticks(&mut s, &y, "Roots with |z| < 1 [%]", false, |t| format!("{t}"));
    for r in &sorted {
        let px = x.map(r.nonzero_count as f64);
        let lo = y.map((r.pct_inside_mean - r.pct_inside_std).max(0.0));
        let hi = y.map((r.pct_inside_mean + r.pct_inside_std).min(100.0));
        let _ = writeln!(s, "<line x1=\"{px:.2}\" y1=\"{lo:.2}\" x2=\"{px:.2}\" y2=\"{hi:.2}\" stroke=\"black\"/>");
        for yy in [lo, hi] {
            let _ = writeln!(s, "<line x1=\"{:.2}\" y1=\"{yy:.2}\" x2=\"{:.2}\" y2=\"{yy:.2}\" stroke=\"black\"/>", px - 5.0, px + 5.0);
        }
        let _ = writeln!(s, "<circle cx=\"{px:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#1f5fbf\"/>", y.map(r.pct_inside_mean));
    }
    s.push_str("</svg>\n");
    s
}

/// Gray-scale cells with the value printed in each.
pub fn mac_svg(mac: &MacMatrix) -> String {
    let mut s = header("MAC");
    let (rows, cols) = mac.values.shape();
    let size = ((W - LEFT - RIGHT) / cols.max(1) as f64).min((H - TOP - BOTTOM) / rows.max(1) as f64);
    for i in 0..rows {
        for j in 0..cols {
            let v = mac.values[(i, j)];
            let shade = (255.0 * (1.0 - v)).round() as u8;
            let (x, y) = (LEFT + j as f64 * size, TOP + i as f64 * size);
            let _ = writeln!(
                s,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{size:.1}\" height=\"{size:.1}\" fill=\"rgb({shade},{shade},{shade})\" stroke=\"#888\"/>"
            );
            let ink = if v > 0.5 { "white" } else { "black" };
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"{ink}\">{v:.2}</text>",
                x + size / 2.0,
                y + size / 2.0 + 4.0
            );
        }
    }
    for i in 0..rows {
        let _ = writeln!(s, "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">A{}</text>", LEFT - 6.0, TOP + (i as f64 + 0.5) * size + 4.0, i + 1);
    }
    for j in 0..cols {
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">B{}</text>", LEFT + (j as f64 + 0.5) * size, TOP + rows as f64 * size + 16.0, j + 1);
    }
    s.push_str("</svg>\n");
    s
}
