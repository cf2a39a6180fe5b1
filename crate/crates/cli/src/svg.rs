//! Minimal static SVG emission.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const PAD: f64 = 48.0;

/// A plot with a fixed data window mapped onto the canvas.
pub struct Plot {
    x: (f64, f64),
    y: (f64, f64),
    body: String,
}

impl Plot {
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        Plot {
            x: widen(x),
            y: widen(y),
            body: String::new(),
        }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - PAD - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * PAD)
    }

    pub fn rect(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, fill: &str, opacity: f64) {
        let (a, b) = (self.px(x0), self.px(x1));
        let (c, d) = (self.py(y1), self.py(y0));
        let _ = writeln!(
            self.body,
            r#"<rect x="{a:.2}" y="{c:.2}" width="{:.2}" height="{:.2}" fill="{fill}" fill-opacity="{opacity}"/>"#,
            b - a,
            d - c
        );
    }

    pub fn outline(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, stroke: &str) {
        let (a, b) = (self.px(x0), self.px(x1));
        let (c, d) = (self.py(y1), self.py(y0));
        let _ = writeln!(
            self.body,
            r#"<rect x="{a:.2}" y="{c:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="{stroke}" stroke-width="0.5"/>"#,
            b - a,
            d - c
        );
    }

    pub fn dot(&mut self, x: f64, y: f64, radius: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{radius}" fill="{fill}"/>"#,
            self.px(x),
            self.py(y)
        );
    }

    pub fn cross(&mut self, x: f64, y: f64, size: f64, stroke: &str) {
        let (cx, cy) = (self.px(x), self.py(y));
        let _ = writeln!(
            self.body,
            r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{stroke}" stroke-width="2"/>"#,
            cx - size,
            cy - size,
            cx + size,
            cy + size,
            cx - size,
            cy + size,
            cx + size,
            cy - size
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64) {
        let mut d = String::new();
        for &(x, y) in points {
            let _ = write!(d, "{:.2},{:.2} ", self.px(x), self.py(y));
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#,
            d.trim_end()
        );
    }

    pub fn label(&mut self, x: f64, y: f64, text: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" font-family="sans-serif">{}</text>"#,
            self.px(x),
            self.py(y),
            escape(text)
        );
    }

    /// Closes the document with a frame, axis extents and a title.
    pub fn finish(self, title: &str, xlabel: &str, ylabel: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        out.push_str(&self.body);
        let _ = writeln!(
            out,
            r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            WIDTH - 2.0 * PAD,
            HEIGHT - 2.0 * PAD
        );
        let text = |out: &mut String, x: f64, y: f64, anchor: &str, s: &str| {
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="11" font-family="sans-serif">{}</text>"#,
                escape(s)
            );
        };
        text(&mut out, WIDTH / 2.0, PAD / 2.0, "middle", title);
        text(&mut out, WIDTH / 2.0, HEIGHT - 8.0, "middle", xlabel);
        text(&mut out, 8.0, HEIGHT / 2.0, "start", ylabel);
        text(&mut out, PAD, HEIGHT - PAD + 14.0, "start", &format!("{:.4}", self.x.0));
        text(&mut out, WIDTH - PAD, HEIGHT - PAD + 14.0, "end", &format!("{:.4}", self.x.1));
        text(&mut out, PAD - 4.0, HEIGHT - PAD, "end", &format!("{:.4}", self.y.0));
        text(&mut out, PAD - 4.0, PAD + 4.0, "end", &format!("{:.4}", self.y.1));
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
