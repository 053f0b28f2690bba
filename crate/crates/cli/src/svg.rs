//! Minimal SVG line plots: enough for distribution-function overlays and
//! log-log rate plots, with no plotting dependency.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineStyle {
    /// dotted red — reserved for the data-generating curve
    Truth,
    /// solid blue
    Mle,
    /// dash-dot black
    Lse,
    /// solid grey — reference lines
    Reference,
}

impl LineStyle {
    fn stroke(self) -> &'static str {
        match self {
            LineStyle::Truth => "#cc0000",
            LineStyle::Mle => "#0044cc",
            LineStyle::Lse => "#000000",
            LineStyle::Reference => "#999999",
        }
    }
    fn dash(self) -> &'static str {
        match self {
            LineStyle::Truth => "2,4",
            LineStyle::Mle => "",
            LineStyle::Lse => "8,3,2,3",
            LineStyle::Reference => "4,4",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub style: LineStyle,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const PANEL_W: f64 = 460.0;
const PANEL_H: f64 = 360.0;
const MARGIN_L: f64 = 58.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 44.0;

/// Tick positions covering `[lo, hi]` at a round step (1, 2 or 5 times a
/// power of ten).
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / 4.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 5.5)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        // snap values like 0.30000000000000004 back to the round number
        out.push((t / step).round() * step);
        t += step;
    }
    out
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn render_panel(out: &mut String, panel: &Panel, x_off: f64) {
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &panel.series {
        for &(x, y) in &s.points {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
    }
    if !xmin.is_finite() {
        (xmin, xmax, ymin, ymax) = (0.0, 1.0, 0.0, 1.0);
    }
    if xmax - xmin < 1e-12 {
        xmax = xmin + 1.0;
    }
    if ymax - ymin < 1e-12 {
        ymax = ymin + 1.0;
    }
    let ypad = 0.04 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let sx = |x: f64| x_off + MARGIN_L + (x - xmin) / (xmax - xmin) * plot_w;
    let sy = |y: f64| MARGIN_T + (1.0 - (y - ymin) / (ymax - ymin)) * plot_h;

    writeln!(
        out,
        "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        x_off + MARGIN_L + plot_w / 2.0,
        panel.title
    )
    .unwrap();
    writeln!(
        out,
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" fill=\"none\" stroke=\"#444444\"/>",
        x_off + MARGIN_L,
        MARGIN_T
    )
    .unwrap();

    for t in ticks(xmin, xmax) {
        let x = sx(t);
        writeln!(
            out,
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#444444\"/>",
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 4.0
        )
        .unwrap();
        writeln!(
            out,
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\">{}</text>",
            MARGIN_T + plot_h + 16.0,
            tick_label(t)
        )
        .unwrap();
    }
    for t in ticks(ymin, ymax) {
        let y = sy(t);
        writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#444444\"/>",
            x_off + MARGIN_L - 4.0,
            x_off + MARGIN_L
        )
        .unwrap();
        writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"11\">{}</text>",
            x_off + MARGIN_L - 7.0,
            y + 3.5,
            tick_label(t)
        )
        .unwrap();
    }
    writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\">{}</text>",
        x_off + MARGIN_L + plot_w / 2.0,
        PANEL_H - 10.0,
        panel.x_label
    )
    .unwrap();
    writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 {:.1} {:.1})\">{}</text>",
        x_off + 14.0,
        MARGIN_T + plot_h / 2.0,
        x_off + 14.0,
        MARGIN_T + plot_h / 2.0,
        panel.y_label
    )
    .unwrap();

    for s in &panel.series {
        if s.points.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (i, &(x, y)) in s.points.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            write!(d, "{cmd}{:.2} {:.2} ", sx(x), sy(y)).unwrap();
        }
        let dash = s.style.dash();
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{dash}\"")
        };
        writeln!(
            out,
            "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{dash_attr}/>",
            d.trim_end(),
            s.style.stroke()
        )
        .unwrap();
    }

    // legend, top-left inside the frame
    for (i, s) in panel.series.iter().enumerate() {
        let y = MARGIN_T + 16.0 + 16.0 * i as f64;
        let x = x_off + MARGIN_L + 10.0;
        let dash = s.style.dash();
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{dash}\"")
        };
        writeln!(
            out,
            "<line x1=\"{x:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"{}\" stroke-width=\"1.5\"{dash_attr}/>",
            x + 26.0,
            s.style.stroke()
        )
        .unwrap();
        writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{}</text>",
            x + 32.0,
            y + 3.5,
            s.label
        )
        .unwrap();
    }
}

/// Renders panels side by side into one standalone SVG document.
pub fn render(panels: &[Panel]) -> String {
    let width = PANEL_W * panels.len() as f64;
    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{PANEL_H:.0}\" viewBox=\"0 0 {width:.0} {PANEL_H:.0}\">"
    )
    .unwrap();
    writeln!(out, "<rect width=\"{width:.0}\" height=\"{PANEL_H:.0}\" fill=\"#ffffff\"/>").unwrap();
    for (i, panel) in panels.iter().enumerate() {
        render_panel(&mut out, panel, PANEL_W * i as f64);
    }
    writeln!(out, "</svg>").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round_and_cover_the_range() {
        let t = ticks(0.0, 1.0);
        assert!(t.contains(&0.0) && t.contains(&1.0));
        assert!(t.len() >= 3 && t.len() <= 6);
        let t = ticks(0.13, 9.7);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!(*t.first().unwrap() >= 0.13 && *t.last().unwrap() <= 9.7);
    }

    #[test]
    fn render_emits_one_path_per_series() {
        let panel = Panel {
            title: "demo".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![
                Series {
                    label: "a".into(),
                    style: LineStyle::Mle,
                    points: vec![(0.0, 0.0), (1.0, 1.0)],
                },
                Series {
                    label: "b".into(),
                    style: LineStyle::Truth,
                    points: vec![(0.0, 1.0), (1.0, 0.0)],
                },
            ],
        };
        let doc = render(&[panel.clone(), panel]);
        assert_eq!(doc.matches("<path").count(), 4);
        assert!(doc.starts_with("<svg"));
        assert!(doc.trim_end().ends_with("</svg>"));
    }
}
