//! Deterministic SVG overlay charts for the sentiment/price series pairs.
//! Output is plain text with fixed-precision coordinates, so identical data
//! always yields identical bytes.

use chrono::NaiveDate;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

const SERIES_COLORS: [&str; 2] = ["#d62728", "#1f77b4"];

/// One curve in an overlay chart.
pub struct ChartSeries<'a> {
    pub label: &'a str,
    pub values: &'a [f64],
}

/// Renders an overlay of the series against the shared date axis. Each
/// series is min-max scaled onto the [0,1] vertical axis (a constant series
/// draws flat at 0.5), which puts differently scaled curves on one panel.
///
/// # Panics
/// Panics when series lengths differ from the date count or no dates are
/// given.
pub fn render_overlay(title: &str, dates: &[NaiveDate], series: &[ChartSeries<'_>]) -> String {
    assert!(!dates.is_empty(), "chart needs at least one point");
    for s in series {
        assert_eq!(s.values.len(), dates.len(), "series length mismatch");
    }

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_at = |i: usize| {
        if dates.len() == 1 {
            MARGIN_LEFT + plot_w / 2.0
        } else {
            MARGIN_LEFT + plot_w * i as f64 / (dates.len() - 1) as f64
        }
    };
    let y_at = |unit: f64| MARGIN_TOP + plot_h * (1.0 - unit);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));

    // Frame and horizontal gridlines at 0, 0.25, 0.5, 0.75, 1.
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT:.1}\" y=\"{MARGIN_TOP:.1}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n"
    ));
    for tick in 0..=4 {
        let unit = tick as f64 / 4.0;
        let y = y_at(unit);
        if tick > 0 && tick < 4 {
            svg.push_str(&format!(
                "<line x1=\"{MARGIN_LEFT:.1}\" y1=\"{y:.2}\" x2=\"{:.1}\" y2=\"{y:.2}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
                MARGIN_LEFT + plot_w
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{unit:.2}</text>\n",
            MARGIN_LEFT - 8.0,
            y + 4.0
        ));
    }

    // Date labels: first, middle, last.
    let mut label_idx = vec![0usize];
    if dates.len() > 2 {
        label_idx.push(dates.len() / 2);
    }
    if dates.len() > 1 {
        label_idx.push(dates.len() - 1);
    }
    for i in label_idx {
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            x_at(i),
            MARGIN_TOP + plot_h + 20.0,
            dates[i].format("%Y-%m-%d")
        ));
    }

    for (si, s) in series.iter().enumerate() {
        let color = SERIES_COLORS[si % SERIES_COLORS.len()];
        let scaled = unit_scale(s.values);
        let mut path = String::new();
        for (i, v) in scaled.iter().enumerate() {
            if i > 0 {
                path.push(' ');
            }
            path.push_str(&format!("{:.2},{:.2}", x_at(i), y_at(*v)));
        }
        svg.push_str(&format!(
            "<polyline points=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
        ));

        // Legend swatch + label.
        let ly = MARGIN_TOP + 14.0 + 18.0 * si as f64;
        svg.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            MARGIN_LEFT + 10.0,
            ly - 10.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{ly:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            MARGIN_LEFT + 28.0,
            escape(s.label)
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

/// Min-max scaling with a flat-at-midline fallback for constant series.
fn unit_scale(values: &[f64]) -> Vec<f64> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return vec![0.5; values.len()];
    }
    values.iter().map(|v| (v - min) / (max - min)).collect()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
