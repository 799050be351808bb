//! Self-contained SVG rendering for the analytics outputs: multi-series
//! weekly line charts with vertical event markers, and the topic-similarity
//! heatmap. No external assets, no dependencies; output is deterministic for
//! identical inputs.

use chrono::NaiveDate;

use crate::analytics::{EventMarker, SimilarityMatrix, TimelineSeries};

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Line chart of one or more weekly series sharing an x axis, with dashed
/// vertical rules for event markers.
pub fn line_chart(title: &str, series: &[TimelineSeries], events: &[EventMarker]) -> String {
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));

    let weeks: Vec<NaiveDate> = series
        .first()
        .map(|s| s.buckets.iter().map(|(w, _)| *w).collect())
        .unwrap_or_default();
    if weeks.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let max_count = series
        .iter()
        .flat_map(|s| s.buckets.iter().map(|(_, c)| *c))
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |week: NaiveDate| {
        let span = (*weeks.last().unwrap() - weeks[0]).num_days().max(1) as f64;
        MARGIN_LEFT + plot_w * (week - weeks[0]).num_days() as f64 / span
    };
    let y_of = |count: f64| MARGIN_TOP + plot_h * (1.0 - count / max_count);

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(MARGIN_LEFT),
        fmt(MARGIN_TOP + plot_h),
        fmt(MARGIN_LEFT + plot_w),
        fmt(MARGIN_TOP + plot_h)
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(MARGIN_LEFT),
        fmt(MARGIN_TOP),
        fmt(MARGIN_LEFT),
        fmt(MARGIN_TOP + plot_h)
    ));
    // Y ticks at 0, half, max.
    for tick in [0.0, max_count / 2.0, max_count] {
        let y = y_of(tick);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#cccccc\"/>\n",
            fmt(MARGIN_LEFT),
            fmt(y),
            fmt(MARGIN_LEFT + plot_w),
            fmt(y)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            fmt(MARGIN_LEFT - 6.0),
            fmt(y + 4.0),
            tick.round() as i64
        ));
    }
    // X tick per month boundary week plus first/last.
    for (k, week) in weeks.iter().enumerate() {
        let show = k == 0 || k == weeks.len() - 1 || week.format("%d").to_string().parse::<u32>().unwrap_or(8) <= 7;
        if !show {
            continue;
        }
        let x = x_of(*week);
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{week}</text>\n",
            fmt(x),
            fmt(MARGIN_TOP + plot_h + 18.0)
        ));
    }

    // Event markers.
    for event in events {
        if event.date < weeks[0] || event.date > *weeks.last().unwrap() {
            continue;
        }
        let x = x_of(event.date);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#888888\" \
             stroke-dasharray=\"4,3\"/>\n",
            fmt(MARGIN_TOP),
            fmt(MARGIN_TOP + plot_h),
            x = fmt(x)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" transform=\"rotate(-90 {} {})\" font-size=\"10\" \
             fill=\"#555555\">{}</text>\n",
            fmt(x - 4.0),
            fmt(MARGIN_TOP + 4.0),
            fmt(x - 4.0),
            fmt(MARGIN_TOP + 4.0),
            escape(&event.label)
        ));
    }

    // Series lines and legend.
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = s
            .buckets
            .iter()
            .map(|(w, c)| format!("{},{}", fmt(x_of(*w)), fmt(y_of(*c as f64))))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        let label = format!("topic {} ({})", s.topic, s.source.as_str());
        let lx = MARGIN_LEFT + 12.0 + 170.0 * k as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            fmt(lx),
            fmt(HEIGHT - 14.0),
            fmt(lx + 18.0),
            fmt(HEIGHT - 14.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            fmt(lx + 24.0),
            fmt(HEIGHT - 10.0),
            escape(&label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// White-to-red ramp for a value in [0, 1].
fn heat_color(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let r = 255.0 - 77.0 * v;
    let g = 255.0 - 207.0 * v;
    let b = 255.0 - 212.0 * v;
    format!("rgb({},{},{})", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Colored grid of the similarity matrix. Rows are official topics (top to
/// bottom), columns public topics (left to right); undefined cells are
/// hatched gray.
pub fn heatmap(title: &str, matrix: &SimilarityMatrix) -> String {
    let m = matrix.size();
    let cell: f64 = if m <= 10 { 36.0 } else { 26.0 };
    let left = 90.0;
    let top = 64.0;
    let width = left + cell * m as f64 + 40.0;
    let height = top + cell * m as f64 + 60.0;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
        width / 2.0,
        escape(title)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">public topics</text>\n",
        left + cell * m as f64 / 2.0,
        top - 26.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">official topics</text>\n",
        top + cell * m as f64 / 2.0,
        top + cell * m as f64 / 2.0
    ));
    for t in 0..m {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{t}</text>\n",
            fmt(left - 6.0),
            fmt(top + cell * t as f64 + cell / 2.0 + 4.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{t}</text>\n",
            fmt(left + cell * t as f64 + cell / 2.0),
            fmt(top - 8.0)
        ));
    }
    for (t, row) in matrix.values.iter().enumerate() {
        for (u, &value) in row.iter().enumerate() {
            let x = left + cell * u as f64;
            let y = top + cell * t as f64;
            let fill = if matrix.undefined[t][u] {
                "#dddddd".to_string()
            } else {
                heat_color(value)
            };
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"{fill}\" \
                 stroke=\"#ffffff\"><title>official {t} vs public {u}: {value:.4}</title></rect>\n",
                fmt(x),
                fmt(y)
            ));
        }
    }
    // Color scale.
    let scale_y = top + cell * m as f64 + 20.0;
    for k in 0..=10 {
        let v = k as f64 / 10.0;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"16\" height=\"12\" fill=\"{}\"/>\n",
            fmt(left + 16.0 * k as f64),
            fmt(scale_y),
            heat_color(v)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\">0</text>\n<text x=\"{}\" y=\"{}\">1</text>\n",
        fmt(left),
        fmt(scale_y + 26.0),
        fmt(left + 16.0 * 11.0),
        fmt(scale_y + 26.0)
    ));
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::Source;
    use chrono::NaiveDate;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn line_chart_is_wellformed() {
        let series = TimelineSeries {
            topic: 4,
            source: Source::Public,
            buckets: vec![(date(2020, 3, 2), 3), (date(2020, 3, 9), 7), (date(2020, 3, 16), 0)],
            normalized: None,
        };
        let events = vec![EventMarker {
            date: date(2020, 3, 9),
            label: "x < y & \"z\"".to_string(),
        }];
        let svg = line_chart("Topic 4", &[series], &events);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("stroke-dasharray"));
        // Escaped event label, no raw specials.
        assert!(svg.contains("x &lt; y &amp; &quot;z&quot;"));
    }

    #[test]
    fn line_chart_empty_series() {
        let svg = line_chart("empty", &[], &[]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn heatmap_is_wellformed_and_deterministic() {
        let m = SimilarityMatrix {
            values: vec![vec![1.0, 0.2], vec![0.3, 0.9]],
            undefined: vec![vec![false, false], vec![false, false]],
        };
        let a = heatmap("similarity", &m);
        let b = heatmap("similarity", &m);
        assert_eq!(a, b);
        assert_eq!(a.matches("<rect").count(), 1 + 4 + 11);
        assert!(a.contains("official 1 vs public 0: 0.3000"));
    }

    #[test]
    fn heat_color_endpoints() {
        assert_eq!(heat_color(0.0), "rgb(255,255,255)");
        assert_eq!(heat_color(1.0), "rgb(178,48,43)");
    }
}
