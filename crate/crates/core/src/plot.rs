//! Deterministic SVG line plots.
//!
//! Data coordinates map to pixels through [`PlotFrame`]:
//!
//! ```text
//! px = left + (x - x_min) / (x_max - x_min) * plot_width
//! py = top + plot_height - (y - y_min) / (y_max - y_min) * plot_height
//! ```
//!
//! Pixel coordinates are written with two decimals, so identical inputs give
//! byte-identical documents.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl PlotSeries {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotStyle {
    pub width: f64,
    pub height: f64,
    pub margin_left: f64,
    pub margin_right: f64,
    pub margin_top: f64,
    pub margin_bottom: f64,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub ticks: usize,
    pub palette: Vec<String>,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            width: 800.0,
            height: 480.0,
            margin_left: 80.0,
            margin_right: 30.0,
            margin_top: 50.0,
            margin_bottom: 60.0,
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            ticks: 5,
            palette: ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

/// Data range and plotting rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotFrame {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub left: f64,
    pub top: f64,
    pub plot_width: f64,
    pub plot_height: f64,
}

impl PlotFrame {
    pub fn fit(series: &[PlotSeries], style: &PlotStyle) -> Self {
        let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in series.iter().flat_map(|s| &s.points) {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        if x_max <= x_min {
            x_min -= 1.0;
            x_max += 1.0;
        }
        if y_max <= y_min {
            y_min -= 1.0;
            y_max += 1.0;
        }
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
            left: style.margin_left,
            top: style.margin_top,
            plot_width: style.width - style.margin_left - style.margin_right,
            plot_height: style.height - style.margin_top - style.margin_bottom,
        }
    }

    pub fn map_x(&self, x: f64) -> f64 {
        self.left + (x - self.x_min) / (self.x_max - self.x_min) * self.plot_width
    }

    pub fn map_y(&self, y: f64) -> f64 {
        self.top + self.plot_height - (y - self.y_min) / (self.y_max - self.y_min) * self.plot_height
    }

    pub fn invert_x(&self, px: f64) -> f64 {
        self.x_min + (px - self.left) / self.plot_width * (self.x_max - self.x_min)
    }

    pub fn invert_y(&self, py: f64) -> f64 {
        self.y_min + (self.top + self.plot_height - py) / self.plot_height * (self.y_max - self.y_min)
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// Renders one polyline per series with axes, ticks, labels and a legend.
pub fn emit_plot(series: &[PlotSeries], style: &PlotStyle) -> Result<String> {
    if series.is_empty() {
        return Err(Error::EmptyPlot("no series".into()));
    }
    for s in series {
        if s.points.len() < 2 {
            return Err(Error::EmptyPlot(format!(
                "series {:?} has {} point(s), need 2",
                s.label,
                s.points.len()
            )));
        }
        if s.points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Domain(format!("series {:?} has a non-finite point", s.label)));
        }
    }
    let frame = PlotFrame::fit(series, style);
    let bottom = frame.top + frame.plot_height;
    let right = frame.left + frame.plot_width;

    let mut svg = String::new();
    // Writing to a String cannot fail.
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = style.width,
        h = style.height
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
        style.width, style.height
    );
    if !style.title.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="16">{}</text>"#,
            style.width / 2.0,
            frame.top / 2.0 + 6.0,
            escape(&style.title)
        );
    }
    let _ = writeln!(svg, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{l:.2}" y1="{b:.2}" x2="{r:.2}" y2="{b:.2}"/>"#,
        l = frame.left,
        b = bottom,
        r = right
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{l:.2}" y1="{t:.2}" x2="{l:.2}" y2="{b:.2}"/>"#,
        l = frame.left,
        t = frame.top,
        b = bottom
    );
    let ticks = style.ticks.max(1);
    let mut labels = String::new();
    for i in 0..=ticks {
        let frac = i as f64 / ticks as f64;
        let xv = frame.x_min + frac * (frame.x_max - frame.x_min);
        let px = frame.map_x(xv);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{b:.2}" x2="{px:.2}" y2="{b2:.2}"/>"#,
            b = bottom,
            b2 = bottom + 5.0
        );
        let _ = writeln!(
            labels,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 18.0,
            sig6(xv)
        );
        let yv = frame.y_min + frac * (frame.y_max - frame.y_min);
        let py = frame.map_y(yv);
        let _ = writeln!(
            svg,
            r#"<line x1="{l2:.2}" y1="{py:.2}" x2="{l:.2}" y2="{py:.2}"/>"#,
            l2 = frame.left - 5.0,
            l = frame.left
        );
        let _ = writeln!(
            labels,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            frame.left - 8.0,
            py + 4.0,
            sig6(yv)
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str(&labels);
    if !style.x_label.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            frame.left + frame.plot_width / 2.0,
            style.height - 15.0,
            escape(&style.x_label)
        );
    }
    if !style.y_label.is_empty() {
        let (x, y) = (18.0, frame.top + frame.plot_height / 2.0);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="middle" transform="rotate(-90 {x:.2} {y:.2})">{}</text>"#,
            escape(&style.y_label)
        );
    }

    for (i, s) in series.iter().enumerate() {
        let color = style
            .palette
            .get(i % style.palette.len().max(1))
            .map(String::as_str)
            .unwrap_or("black");
        let coords: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.map_x(x), frame.map_y(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = frame.top + 10.0 + 18.0 * i as f64;
        let lx = frame.left + 12.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="4" fill="{color}"/>"#,
            ly - 2.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
