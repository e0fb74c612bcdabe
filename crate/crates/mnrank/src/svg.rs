//! Dependency-free SVG scatter plots: one circle per curve, colored by
//! rank, with an optional background lattice colored by a region grid.

use std::fmt::Write as _;

/// Discrete palette indexed by rank (wraps above 5).
pub const RANK_COLORS: [&str; 6] = [
    "#4363d8", // 0 blue
    "#e6194b", // 1 red
    "#3cb44b", // 2 green
    "#f58231", // 3 orange
    "#911eb4", // 4 purple
    "#42d4f4", // 5 cyan
];

pub fn rank_color(rank: u8) -> &'static str {
    RANK_COLORS[rank as usize % RANK_COLORS.len()]
}

#[derive(Debug, Clone)]
pub struct ScatterPlot {
    pub width: u32,
    pub height: u32,
    pub x_label: String,
    pub y_label: String,
    /// (x, y, rank) scatter points.
    pub points: Vec<(f64, f64, u8)>,
    /// Optional (x, y, rank) lattice drawn as background cells.
    pub grid: Vec<(f64, f64, u8)>,
}

impl ScatterPlot {
    pub fn new(x_label: &str, y_label: &str) -> Self {
        Self {
            width: 720,
            height: 540,
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            points: Vec::new(),
            grid: Vec::new(),
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let all = self.points.iter().chain(&self.grid);
        let mut x_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for &(x, y, _) in all {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        if !x_min.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |lo: f64, hi: f64| {
            let span = (hi - lo).max(1e-9);
            (lo - 0.05 * span, hi + 0.05 * span)
        };
        let (x_min, x_max) = pad(x_min, x_max);
        let (y_min, y_max) = pad(y_min, y_max);
        (x_min, x_max, y_min, y_max)
    }

    /// Renders the SVG document. Output is deterministic for fixed
    /// input: no timestamps, no randomness.
    pub fn render(&self) -> String {
        const MARGIN: f64 = 48.0;
        let (w, h) = (self.width as f64, self.height as f64);
        let (x_min, x_max, y_min, y_max) = self.bounds();
        let sx = |x: f64| MARGIN + (x - x_min) / (x_max - x_min) * (w - 2.0 * MARGIN);
        let sy = |y: f64| h - MARGIN - (y - y_min) / (y_max - y_min) * (h - 2.0 * MARGIN);

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
            self.width, self.height, self.width, self.height
        );
        let _ = writeln!(
            out,
            r#"<rect width="{}" height="{}" fill="white"/>"#,
            self.width, self.height
        );

        if !self.grid.is_empty() {
            // Cell size from the two smallest positive coordinate gaps.
            let gap = |mut v: Vec<f64>| {
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v.dedup();
                v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
            };
            let dx = gap(self.grid.iter().map(|p| p.0).collect());
            let dy = gap(self.grid.iter().map(|p| p.1).collect());
            let (dx, dy) = (
                if dx.is_finite() { dx } else { x_max - x_min },
                if dy.is_finite() { dy } else { y_max - y_min },
            );
            for &(x, y, rank) in &self.grid {
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}" fill-opacity="0.18"/>"#,
                    sx(x - dx / 2.0),
                    sy(y + dy / 2.0),
                    sx(x + dx / 2.0) - sx(x - dx / 2.0),
                    sy(y - dy / 2.0) - sy(y + dy / 2.0),
                    rank_color(rank)
                );
            }
        }

        // Axes.
        let _ = writeln!(
            out,
            r#"<line x1="{m:.1}" y1="{y0:.1}" x2="{x1:.1}" y2="{y0:.1}" stroke="black"/><line x1="{m:.1}" y1="{m:.1}" x2="{m:.1}" y2="{y0:.1}" stroke="black"/>"#,
            m = MARGIN,
            y0 = h - MARGIN,
            x1 = w - MARGIN
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#,
            w / 2.0,
            h - 12.0,
            xml_escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
            h / 2.0,
            h / 2.0,
            xml_escape(&self.y_label)
        );

        for &(x, y, rank) in &self.points {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{}" fill-opacity="0.7"/>"#,
                sx(x),
                sy(y),
                rank_color(rank)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_deterministic_and_well_formed() {
        let mut plot = ScatterPlot::new("S0(10^3)", "S0(10^5)");
        plot.points = vec![(0.0, 0.0, 0), (1.0, 2.0, 1), (-1.0, 3.0, 2)];
        let a = plot.render();
        let b = plot.render();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("<circle").count(), 3);
        assert!(a.contains(rank_color(1)));
    }

    #[test]
    fn grid_background_cells_are_drawn() {
        let mut plot = ScatterPlot::new("x", "y");
        plot.grid = (0..4)
            .map(|i| ((i % 2) as f64, (i / 2) as f64, (i % 3) as u8))
            .collect();
        let svg = plot.render();
        // 1 white background + 4 cells.
        assert_eq!(svg.matches("<rect").count(), 5);
    }

    #[test]
    fn labels_are_escaped() {
        let plot = ScatterPlot::new("a<b", "c&d");
        let svg = plot.render();
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains("c&amp;d"));
    }
}
