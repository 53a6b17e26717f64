//! Minimal SVG plotting for documentation figures.

use std::fmt::Write;

/// Affine plot window mapping data coordinates onto a fixed pixel canvas.
#[derive(Debug, Clone)]
pub struct Plot {
    width: f64,
    height: f64,
    margin: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: String,
}

impl Plot {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        let pad = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        Self {
            width: 800.0,
            height: 600.0,
            margin: 50.0,
            x_range: pad(x_range),
            y_range: pad(y_range),
            body: String::new(),
        }
    }

    pub fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        let w = self.width - 2.0 * self.margin;
        let h = self.height - 2.0 * self.margin;
        (
            self.margin + (x - x0) / (x1 - x0) * w,
            self.height - self.margin - (y - y0) / (y1 - y0) * h,
        )
    }

    pub fn from_px(&self, px: f64, py: f64) -> (f64, f64) {
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        let w = self.width - 2.0 * self.margin;
        let h = self.height - 2.0 * self.margin;
        (
            x0 + (px - self.margin) / w * (x1 - x0),
            y0 + (self.height - self.margin - py) / h * (y1 - y0),
        )
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64) {
        if points.is_empty() {
            return;
        }
        let mut coords = String::new();
        for &(x, y) in points {
            let (px, py) = self.to_px(x, y);
            let _ = write!(coords, "{px:.6},{py:.6} ");
        }
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{stroke}" stroke-width="{width}" points="{}"/>"#,
            coords.trim_end()
        );
    }

    pub fn hline(&mut self, y: f64, stroke: &str) {
        let (x0, x1) = self.x_range;
        self.polyline(&[(x0, y), (x1, y)], stroke, 0.5);
    }

    pub fn label(&mut self, x: f64, y: f64, text: &str) {
        let (px, py) = self.to_px(x, y);
        let _ = writeln!(
            self.body,
            r#"<text x="{px:.2}" y="{py:.2}" font-size="12" font-family="sans-serif">{}</text>"#,
            escape(text)
        );
    }

    pub fn finish(&self, title: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
            w = self.width,
            h = self.height
        );
        let _ = writeln!(out, "<title>{}</title>", escape(title));
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let (a, b) = self.to_px(self.x_range.0, self.y_range.0);
        let (c, d) = self.to_px(self.x_range.1, self.y_range.1);
        let _ = writeln!(
            out,
            r#"<rect x="{a:.2}" y="{d:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            c - a,
            b - d
        );
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Extracts the `points` attribute of every polyline, mapped back to data
/// coordinates.
pub fn polyline_points(svg: &str, plot: &Plot) -> Vec<Vec<(f64, f64)>> {
    svg.lines()
        .filter_map(|line| {
            let start = line.find("points=\"")? + 8;
            let end = start + line[start..].find('"')?;
            Some(
                line[start..end]
                    .split_whitespace()
                    .filter_map(|pair| {
                        let (a, b) = pair.split_once(',')?;
                        Some(plot.from_px(a.parse().ok()?, b.parse().ok()?))
                    })
                    .collect(),
            )
        })
        .collect()
}
