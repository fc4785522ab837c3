//! Minimal deterministic SVG emitter for log-log scatter plots.

use std::fmt::Write;

use crate::scaling::{evaluate_fit, PowerLawFit, ScalePoint};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 78.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#17becf"];

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<ScalePoint>,
    /// Drawn thicker and in red, on top of the other series.
    pub highlight: bool,
    /// Join the points with a polyline.
    pub connect: bool,
}

#[derive(Debug, Clone, Default)]
pub struct LogLogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub fits: Vec<(String, PowerLawFit)>,
}

struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, px_lo: f64, px_hi: f64) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v.log10()), b.max(v.log10())));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        let pad = ((hi - lo) * 0.05).max(1e-3);
        Self { lo: lo - pad, hi: hi + pad, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v.log10() - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    /// Five ticks evenly spaced in log space.
    fn ticks(&self) -> Vec<f64> {
        (0..5).map(|i| 10f64.powf(self.lo + (self.hi - self.lo) * i as f64 / 4.0)).collect()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v >= 1000.0 || v < 0.01 {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}")
    }
}

impl LogLogPlot {
    /// Renders the plot. Equal inputs give byte-identical output.
    pub fn render(&self) -> String {
        let all = || self.series.iter().flat_map(|s| s.points.iter()).filter(|p| p.x > 0.0 && p.loss > 0.0);
        let xa = Axis::new(all().map(|p| p.x), MARGIN_L, WIDTH - MARGIN_R);
        let ya = Axis::new(all().map(|p| p.loss), HEIGHT - MARGIN_B, MARGIN_T);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&self.title));

        let (x0, x1, y0, y1) = (MARGIN_L, WIDTH - MARGIN_R, HEIGHT - MARGIN_B, MARGIN_T);
        let _ = writeln!(s, r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
        for t in xa.ticks() {
            let px = xa.map(t);
            let _ = writeln!(s, r##"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{y1:.2}" stroke="#ddd"/>"##);
            let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y0 + 16.0, tick_label(t));
        }
        for t in ya.ticks() {
            let py = ya.map(t);
            let _ = writeln!(s, r##"<line x1="{x0:.2}" y1="{py:.2}" x2="{x1:.2}" y2="{py:.2}" stroke="#ddd"/>"##);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 6.0, py + 4.0, tick_label(t));
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 16.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );

        let mut legend = Vec::new();
        let ordered = self.series.iter().filter(|s| !s.highlight).chain(self.series.iter().filter(|s| s.highlight));
        for (i, series) in ordered.enumerate() {
            let color = if series.highlight { "#d62728" } else { PALETTE[i % PALETTE.len()] };
            let r = if series.highlight { 4.0 } else { 2.5 };
            let pts: Vec<(f64, f64)> =
                series.points.iter().filter(|p| p.x > 0.0 && p.loss > 0.0).map(|p| (xa.map(p.x), ya.map(p.loss))).collect();
            if series.connect && pts.len() > 1 {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let w = if series.highlight { 2.0 } else { 1.0 };
                let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{w}"/>"#, path.join(" "));
            }
            for (x, y) in pts {
                let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{color}"/>"#);
            }
            legend.push((series.name.clone(), color.to_string(), false));
        }
        for (i, (name, fit)) in self.fits.iter().enumerate() {
            let color = ["#000000", "#7f7f7f"][i % 2];
            let n = 64;
            let path: Vec<String> = (0..=n)
                .filter_map(|k| {
                    let lx = xa.lo + (xa.hi - xa.lo) * k as f64 / n as f64;
                    let x = 10f64.powf(lx);
                    let y = evaluate_fit(fit, x).ok().filter(|y| *y > 0.0)?;
                    Some(format!("{:.2},{:.2}", xa.map(x), ya.map(y).clamp(y1, y0)))
                })
                .collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-dasharray="6 4"/>"#, path.join(" "));
            legend.push((name.clone(), color.to_string(), true));
        }
        for (i, (name, color, dashed)) in legend.iter().enumerate() {
            let y = y1 + 14.0 + 15.0 * i as f64;
            let x = x1 - 170.0;
            if *dashed {
                let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-dasharray="6 4"/>"#, y - 4.0, x + 18.0, y - 4.0);
            } else {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, x + 9.0, y - 4.0);
            }
            let _ = writeln!(s, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, x + 24.0, escape(name));
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plot() -> LogLogPlot {
        LogLogPlot {
            title: "loss vs <compute>".into(),
            x_label: "C (PFLOPs)".into(),
            y_label: "loss".into(),
            series: vec![
                Series {
                    name: "m1".into(),
                    points: vec![ScalePoint::new(1.0, 0.9), ScalePoint::new(2.0, 0.8)],
                    highlight: false,
                    connect: true,
                },
                Series { name: "frontier".into(), points: vec![ScalePoint::new(1.0, 0.9)], highlight: true, connect: true },
            ],
            fits: vec![("fit".into(), PowerLawFit::from_constants(0.9, 0.15))],
        }
    }

    #[test]
    fn deterministic_and_well_formed() {
        let a = plot().render();
        assert_eq!(a, plot().render());
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("&lt;compute&gt;"));
        assert_eq!(a.matches("<circle").count(), 3 + 2);
        assert!(a.contains("#d62728"));
    }

    #[test]
    fn empty_plot_renders() {
        let s = LogLogPlot::default().render();
        assert!(s.contains("</svg>"));
    }
}
