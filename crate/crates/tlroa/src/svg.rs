//! Minimal SVG phase-portrait writer: polylines, markers and axis ticks.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

#[derive(Debug, Clone)]
enum Item {
    Line {
        pts: Vec<[f64; 2]>,
        closed: bool,
        color: String,
        width: f64,
    },
    Marker {
        at: [f64; 2],
        color: String,
        label: Option<String>,
    },
}

/// Accumulates items in data coordinates and scales them on render.
#[derive(Debug, Clone)]
pub struct PhasePlot {
    title: String,
    x_label: String,
    y_label: String,
    items: Vec<Item>,
    view: Option<([f64; 2], [f64; 2])>,
}

impl PhasePlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            items: Vec::new(),
            view: None,
        }
    }

    /// Fixes the visible range instead of fitting all items.
    pub fn view(mut self, x: [f64; 2], y: [f64; 2]) -> Self {
        self.view = Some((x, y));
        self
    }

    pub fn polygon(&mut self, pts: &[[f64; 2]], color: &str) {
        self.items.push(Item::Line {
            pts: pts.to_vec(),
            closed: true,
            color: color.into(),
            width: 1.5,
        });
    }

    pub fn polyline(&mut self, pts: &[[f64; 2]], color: &str, width: f64) {
        self.items.push(Item::Line {
            pts: pts.to_vec(),
            closed: false,
            color: color.into(),
            width,
        });
    }

    pub fn marker(&mut self, at: [f64; 2], color: &str, label: Option<&str>) {
        self.items.push(Item::Marker {
            at,
            color: color.into(),
            label: label.map(Into::into),
        });
    }

    fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        if let Some(v) = self.view {
            return v;
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut eat = |p: &[f64; 2]| {
            if p[0].is_finite() && p[1].is_finite() {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
        };
        for it in &self.items {
            match it {
                Item::Line { pts, .. } => pts.iter().for_each(&mut eat),
                Item::Marker { at, .. } => eat(at),
            }
        }
        for k in 0..2 {
            if !lo[k].is_finite() {
                lo[k] = -1.0;
                hi[k] = 1.0;
            }
            let pad = 0.05 * (hi[k] - lo[k]).max(1e-9);
            lo[k] -= pad;
            hi[k] += pad;
        }
        ([lo[0], hi[0]], [lo[1], hi[1]])
    }

    pub fn render(&self) -> String {
        let (xr, yr) = self.bounds();
        let sx = |x: f64| MARGIN + (x - xr[0]) / (xr[1] - xr[0]) * (WIDTH - 2.0 * MARGIN);
        let sy = |y: f64| HEIGHT - MARGIN - (y - yr[0]) / (yr[1] - yr[0]) * (HEIGHT - 2.0 * MARGIN);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<defs><clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}"/></clipPath></defs>"#,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - 2.0 * MARGIN,
            HEIGHT - 2.0 * MARGIN
        );
        for (k, (lo, hi)) in [(xr[0], xr[1]), (yr[0], yr[1])].into_iter().enumerate() {
            for t in ticks(lo, hi) {
                if k == 0 {
                    let x = sx(t);
                    let _ = writeln!(
                        s,
                        r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
                        HEIGHT - MARGIN,
                        HEIGHT - MARGIN + 4.0
                    );
                    let _ = writeln!(
                        s,
                        r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                        HEIGHT - MARGIN + 16.0,
                        tick_label(t)
                    );
                } else {
                    let y = sy(t);
                    let _ = writeln!(
                        s,
                        r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN}" y2="{y:.2}" stroke="black"/>"#,
                        MARGIN - 4.0
                    );
                    let _ = writeln!(
                        s,
                        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                        MARGIN - 6.0,
                        y + 4.0,
                        tick_label(t)
                    );
                }
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"#,
            WIDTH / 2.0,
            MARGIN / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
        for it in &self.items {
            match it {
                Item::Line {
                    pts,
                    closed,
                    color,
                    width,
                } => {
                    let mut d = String::new();
                    for p in pts.iter().filter(|p| p[0].is_finite() && p[1].is_finite()) {
                        let _ = write!(d, "{:.2},{:.2} ", sx(p[0]), sy(p[1]));
                    }
                    let tag = if *closed { "polygon" } else { "polyline" };
                    let _ = writeln!(
                        s,
                        r#"<{tag} points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
                        d.trim_end()
                    );
                }
                Item::Marker { at, color, label } => {
                    let (x, y) = (sx(at[0]), sy(at[1]));
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#
                    );
                    if let Some(l) = label {
                        let _ = writeln!(
                            s,
                            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                            x + 6.0,
                            y - 6.0,
                            escape(l)
                        );
                    }
                }
            }
        }
        s.push_str("</g>\n</svg>\n");
        s
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut out = Vec::new();
    let mut t = (lo / step).ceil() * step;
    while t <= hi + 1e-9 * span {
        out.push(if t.abs() < 1e-12 * span { 0.0 } else { t });
        t += step;
    }
    out
}

fn tick_label(t: f64) -> String {
    let s = format!("{t:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_items() {
        let mut p = PhasePlot::new("t", "x", "y");
        p.polygon(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], "blue");
        p.polyline(&[[0.0, 0.0], [2.0, 2.0]], "red", 1.0);
        p.marker([0.5, 0.5], "black", Some("eq"));
        let s = p.render();
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<polygon").count(), 1);
        assert_eq!(s.matches("<polyline").count(), 1);
        assert!(s.contains(">eq</text>"));
    }

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(tick_label(-0.0), "0");
        assert_eq!(tick_label(2.5), "2.5");
    }
}
