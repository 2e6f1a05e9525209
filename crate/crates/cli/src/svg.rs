//! Minimal SVG line plots. Output depends only on the data, so identical
//! inputs give identical files.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scale {
    Linear,
    Log10,
}

pub struct Plot {
    title: String,
    xlabel: String,
    ylabel: String,
    x: (f64, f64),
    y: (f64, f64),
    xscale: Scale,
    yscale: Scale,
    body: String,
    legend: Vec<(String, String, Option<String>)>,
}

/// Range padded by 5% and widened when degenerate.
pub fn padded_range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

impl Plot {
    pub fn new(title: &str, xlabel: &str, ylabel: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        Self {
            title: title.into(),
            xlabel: xlabel.into(),
            ylabel: ylabel.into(),
            x,
            y,
            xscale: Scale::Linear,
            yscale: Scale::Linear,
            body: String::new(),
            legend: Vec::new(),
        }
    }

    pub fn log_axes(mut self, x: Scale, y: Scale) -> Self {
        self.xscale = x;
        self.yscale = y;
        self
    }

    fn tr(v: f64, scale: Scale) -> f64 {
        match scale {
            Scale::Linear => v,
            Scale::Log10 => v.log10(),
        }
    }

    fn px(&self, x: f64) -> f64 {
        let (a, b) = (Self::tr(self.x.0, self.xscale), Self::tr(self.x.1, self.xscale));
        LEFT + (Self::tr(x, self.xscale) - a) / (b - a) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let (a, b) = (Self::tr(self.y.0, self.yscale), Self::tr(self.y.1, self.yscale));
        HEIGHT - BOTTOM - (Self::tr(y, self.yscale) - a) / (b - a) * (HEIGHT - TOP - BOTTOM)
    }

    pub fn line(&mut self, xs: &[f64], ys: &[f64], color: &str, dash: Option<&str>, label: &str) {
        let mut d = String::new();
        let mut pen = false;
        for (x, y) in xs.iter().zip(ys) {
            let (a, b) = (self.px(*x), self.py(*y));
            if !(a.is_finite() && b.is_finite()) {
                pen = false;
                continue;
            }
            let _ = write!(d, "{}{a:.2},{b:.2} ", if pen { "L" } else { "M" });
            pen = true;
        }
        let dash_attr = dash.map(|p| format!(" stroke-dasharray=\"{p}\"")).unwrap_or_default();
        let _ = writeln!(
            self.body,
            "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash_attr}/>",
            d.trim_end()
        );
        if !label.is_empty() {
            self.legend.push((label.into(), color.into(), dash.map(String::from)));
        }
    }

    pub fn markers(&mut self, xs: &[f64], ys: &[f64], color: &str) {
        for (x, y) in xs.iter().zip(ys) {
            let (a, b) = (self.px(*x), self.py(*y));
            if a.is_finite() && b.is_finite() {
                let _ = writeln!(self.body, "<circle cx=\"{a:.2}\" cy=\"{b:.2}\" r=\"3\" fill=\"{color}\"/>");
            }
        }
    }

    /// Filled rectangle in data coordinates.
    pub fn rect(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, fill: &str) {
        let (a, b) = (self.px(x0), self.px(x1));
        let (c, d) = (self.py(y1), self.py(y0));
        let _ = writeln!(
            self.body,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\" stroke=\"none\"/>",
            a.min(b),
            c.min(d),
            (b - a).abs(),
            (d - c).abs()
        );
    }

    pub fn vline(&mut self, x: f64, color: &str) {
        let a = self.px(x);
        let _ = writeln!(
            self.body,
            "<line x1=\"{a:.2}\" y1=\"{TOP:.2}\" x2=\"{a:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-width=\"1\" stroke-dasharray=\"2,3\"/>",
            HEIGHT - BOTTOM
        );
    }

    /// Text at data `x`, just below the top frame.
    pub fn top_label(&mut self, x: f64, text: &str) {
        let a = self.px(x);
        let _ = writeln!(
            self.body,
            "<text x=\"{a:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\">{}</text>",
            TOP + 12.0,
            escape(text)
        );
    }

    fn ticks(lo: f64, hi: f64, scale: Scale) -> Vec<f64> {
        match scale {
            Scale::Linear => (0..=5).map(|k| lo + (hi - lo) * k as f64 / 5.0).collect(),
            Scale::Log10 => {
                let (a, b) = (lo.log10().ceil() as i32, hi.log10().floor() as i32);
                (a..=b).map(|k| 10f64.powi(k)).collect()
            }
        }
    }

    fn fmt_tick(v: f64, scale: Scale) -> String {
        match scale {
            Scale::Log10 => format!("1e{}", v.log10().round() as i32),
            Scale::Linear => {
                let r = if v.abs() < 1e-12 { 0.0 } else { v };
                format!("{r:.2}")
            }
        }
    }

    pub fn finish(self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">"
        );
        let _ = writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"22\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
            0.5 * WIDTH,
            escape(&self.title)
        );
        s.push_str(&self.body);
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            s,
            "<rect x=\"{x0}\" y=\"{y0}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
            x1 - x0,
            y1 - y0
        );
        for v in Self::ticks(self.x.0, self.x.1, self.xscale) {
            let a = self.px(v);
            let _ = writeln!(
                s,
                "<line x1=\"{a:.2}\" y1=\"{y1}\" x2=\"{a:.2}\" y2=\"{:.2}\" stroke=\"black\"/><text x=\"{a:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\">{}</text>",
                y1 + 4.0,
                y1 + 16.0,
                Self::fmt_tick(v, self.xscale)
            );
        }
        for v in Self::ticks(self.y.0, self.y.1, self.yscale) {
            let b = self.py(v);
            let _ = writeln!(
                s,
                "<line x1=\"{:.2}\" y1=\"{b:.2}\" x2=\"{x0}\" y2=\"{b:.2}\" stroke=\"black\"/><text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">{}</text>",
                x0 - 4.0,
                x0 - 6.0,
                b + 3.0,
                Self::fmt_tick(v, self.yscale)
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
            0.5 * (x0 + x1),
            HEIGHT - 15.0,
            escape(&self.xlabel)
        );
        let _ = writeln!(
            s,
            "<text x=\"18\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>",
            0.5 * (y0 + y1),
            0.5 * (y0 + y1),
            escape(&self.ylabel)
        );
        for (k, (label, color, dash)) in self.legend.iter().enumerate() {
            let y = y0 + 10.0 + 18.0 * k as f64;
            let dash_attr = dash.as_ref().map(|p| format!(" stroke-dasharray=\"{p}\"")).unwrap_or_default();
            let _ = writeln!(
                s,
                "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"1.5\"{dash_attr}/><text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{}</text>",
                x1 + 10.0,
                x1 + 35.0,
                x1 + 40.0,
                y + 4.0,
                escape(label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_well_formed() {
        let render = || {
            let mut p = Plot::new("a < b", "x", "y", (0.0, 1.0), (0.0, 2.0));
            p.line(&[0.0, 0.5, 1.0], &[0.0, 1.0, 2.0], PALETTE[0], None, "u");
            p.rect(0.2, 0.4, 0.0, 1.0, "#eee");
            p.vline(0.5, "gray");
            p.finish()
        };
        let a = render();
        assert_eq!(a, render());
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("a &lt; b"));
        assert!(a.contains("M70.00,425.00 L320.00,232.50 L570.00,40.00"));
    }

    #[test]
    fn padded_range_handles_degenerate_input() {
        assert_eq!(padded_range([]), (0.0, 1.0));
        assert_eq!(padded_range([2.0, 2.0]), (1.0, 3.0));
        let (a, b) = padded_range([0.0, 10.0, f64::NAN]);
        assert_eq!((a, b), (-0.5, 10.5));
    }
}
