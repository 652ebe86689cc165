//! Minimal static SVG charts.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        w / 2.0,
        escape(title)
    );
}

fn nice_max(v: f64) -> f64 {
    if !(v > 0.0) || !v.is_finite() {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|&m| m >= v).unwrap_or(10.0 * mag)
}

fn y_axis(out: &mut String, lo: f64, hi: f64, label: &str) {
    let ph = H - TOP - BOTTOM;
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = TOP + ph - ph * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            W - RIGHT,
            LEFT - 6.0,
            y + 4.0,
            trim(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + ph / 2.0,
        escape(label)
    );
}

fn trim(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

pub struct Bar {
    pub label: String,
    pub value: f64,
    pub error: Option<f64>,
}

pub fn bar_chart(title: &str, y_label: &str, bars: &[Bar]) -> String {
    let mut out = String::new();
    header(&mut out, title, W, H);
    let top = nice_max(bars.iter().map(|b| b.value + b.error.unwrap_or(0.0)).fold(0.0, f64::max));
    y_axis(&mut out, 0.0, top, y_label);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let slot = pw / bars.len().max(1) as f64;
    for (i, b) in bars.iter().enumerate() {
        let x = LEFT + slot * i as f64;
        let h = ph * (b.value / top).clamp(0.0, 1.0);
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{h:.1}" fill="{}"/>"#,
            x + slot * 0.15,
            TOP + ph - h,
            slot * 0.7,
            PALETTE[0]
        );
        if let Some(e) = b.error {
            let cx = x + slot / 2.0;
            let y1 = TOP + ph - ph * ((b.value - e) / top).clamp(0.0, 1.0);
            let y2 = TOP + ph - ph * ((b.value + e) / top).clamp(0.0, 1.0);
            let _ = writeln!(out, r#"<line x1="{cx:.1}" y1="{y1:.1}" x2="{cx:.1}" y2="{y2:.1}" stroke="black"/>"#);
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x + slot / 2.0,
            H - BOTTOM + 18.0,
            escape(&b.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Draw unconnected markers instead of a line.
    pub dots: bool,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points, dots: false }
    }

    pub fn from_samples(name: impl Into<String>, samples: &[f64]) -> Self {
        Self::new(name, samples.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect())
    }

    pub fn dots(mut self) -> Self {
        self.dots = true;
        self
    }
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut out = String::new();
    header(&mut out, title, W, H);
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let pad = (y1 - y0) * 0.05;
    let (y0, y1) = (y0 - pad, y1 + pad);
    y_axis(&mut out, y0, y1, y_label);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    for k in 0..=4 {
        let v = x0 + (x1 - x0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw * k as f64 / 4.0,
            H - BOTTOM + 18.0,
            trim(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 12.0,
        escape(x_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (k, &(x, y)) in s.points.iter().enumerate() {
            let px = LEFT + pw * (x - x0) / (x1 - x0);
            let py = TOP + ph - ph * (y - y0) / (y1 - y0);
            if s.dots {
                let _ = writeln!(out, r#"<circle cx="{px:.1}" cy="{py:.1}" r="3" fill="{color}"/>"#);
            } else {
                let _ = write!(d, "{}{px:.1},{py:.1}", if k == 0 { "M" } else { " L" });
            }
        }
        if !s.dots {
            let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
        }
        let ly = TOP + 14.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            W - RIGHT - 120.0,
            ly,
            W - RIGHT - 105.0,
            ly + 9.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Diverging heatmap over `[-1, 1]`; missing cells are grey and marked NA.
pub fn heatmap(title: &str, labels: &[&str], values: &[Vec<Option<f64>>]) -> String {
    let n = labels.len();
    let cell = 36.0;
    let (left, top) = (50.0, 40.0);
    let w = left + cell * n as f64 + 20.0;
    let h = top + cell * n as f64 + 30.0;
    let mut out = String::new();
    header(&mut out, title, w, h);
    for (i, row) in values.iter().enumerate().take(n) {
        let y = top + cell * i as f64;
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, left - 4.0, y + cell / 2.0 + 4.0, escape(labels[i]));
        for (j, v) in row.iter().enumerate().take(n) {
            let x = left + cell * j as f64;
            let (fill, text) = match v {
                Some(r) => (diverging(*r), format!("{r:.2}")),
                None => ("#cccccc".to_string(), "NA".to_string()),
            };
            let _ = writeln!(
                out,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{cell}" height="{cell}" fill="{fill}"/><text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="9">{text}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 3.0
            );
        }
    }
    for (j, l) in labels.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            left + cell * j as f64 + cell / 2.0,
            top + cell * n as f64 + 16.0,
            escape(l)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn diverging(r: f64) -> String {
    let t = r.clamp(-1.0, 1.0);
    let (red, green, blue) = if t >= 0.0 {
        (255.0 - 200.0 * t, 255.0 - 150.0 * t, 255.0)
    } else {
        (255.0, 255.0 + 150.0 * t, 255.0 + 200.0 * t)
    };
    format!("#{:02x}{:02x}{:02x}", red as u8, green as u8, blue as u8)
}
