//! Self-contained SVG 1.1 figures: accuracy-vs-epoch line charts,
//! similarity-vs-homophily curves, and confusion-matrix heat grids.
//! No plotting dependency; the documents are plain strings, diffable and
//! structurally testable.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::ConfusionMatrix;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One named line of (x, y) points.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (v - self.x_min) / (self.x_max - self.x_min) * w
    }

    fn y(&self, v: f64) -> f64 {
        let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        HEIGHT - MARGIN_BOTTOM - (v - self.y_min) / (self.y_max - self.y_min) * h
    }
}

fn document(body: &str) -> String {
    format!(
        concat!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" ",
            "width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
            "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "{body}</svg>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        body = body
    )
}

fn nice_ticks(min: f64, max: f64, target: usize) -> Vec<f64> {
    let span = (max - min).max(f64::MIN_POSITIVE);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| span / s <= target as f64)
        .unwrap_or(mag * 10.0);
    let mut ticks = Vec::new();
    let mut t = (min / step).ceil() * step;
    while t <= max + 1e-9 * span {
        ticks.push(t);
        t += step;
    }
    ticks
}

fn fmt_tick(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.2}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn line_chart(series: &[Series], x_label: &str, y_label: &str, title: &str) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.points.is_empty()) {
        return Err(Error::EmptyInput("line chart needs non-empty series"));
    }
    let all = series.iter().flat_map(|s| s.points.iter());
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for &(x, y) in all {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
    }
    let pad = 0.04 * (y_max - y_min);
    let frame = Frame {
        x_min,
        x_max,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };

    let mut body = String::new();
    body.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        esc(title)
    ));

    // Axes, ticks, grid.
    let x0 = frame.x(frame.x_min);
    let x1 = frame.x(frame.x_max);
    let y0 = frame.y(frame.y_min);
    let y1 = frame.y(frame.y_max);
    body.push_str("<g id=\"axes\" stroke=\"black\" fill=\"none\">\n");
    body.push_str(&format!("<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\"/>\n"));
    body.push_str(&format!("<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\"/>\n"));
    body.push_str("</g>\n");
    body.push_str("<g id=\"ticks\" font-family=\"sans-serif\" font-size=\"11\">\n");
    for t in nice_ticks(frame.x_min, frame.x_max, 8) {
        let x = frame.x(t);
        body.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{}\" stroke=\"#cccccc\"/>\n",
            y1
        ));
        body.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            y0 + 16.0,
            fmt_tick(t)
        ));
    }
    for t in nice_ticks(frame.y_min, frame.y_max, 6) {
        let y = frame.y(t);
        body.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"#cccccc\"/>\n"
        ));
        body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            x0 - 6.0,
            y + 4.0,
            fmt_tick(t)
        ));
    }
    body.push_str("</g>\n");
    body.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 16.0,
        esc(x_label)
    ));
    body.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        esc(y_label)
    ));

    // Series polylines.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
            .collect();
        body.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
    }

    // Legend.
    body.push_str("<g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n");
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 16.0;
        body.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            lx + 22.0
        ));
        body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            lx + 28.0,
            ly + 4.0,
            esc(&s.label)
        ));
    }
    body.push_str("</g>\n");

    Ok(document(&body))
}

fn write(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content)?;
    Ok(())
}

/// Accuracy-vs-epoch line chart, one polyline per labelled series.
pub fn render_accuracy_svg(logs: &[Series], path: &Path) -> Result<()> {
    let svg = line_chart(logs, "epoch", "accuracy", "Validation accuracy per epoch")?;
    write(path, &svg)
}

/// In-class / across-class mean embedding cosine against homophily.
/// Points are (homophily, in_class_mean, across_class_mean).
pub fn render_similarity_svg(points: &[(f64, f64, f64)], path: &Path) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyInput("similarity chart needs points"));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let series = [
        Series {
            label: "In-class".into(),
            points: sorted.iter().map(|&(h, i, _)| (h, i)).collect(),
        },
        Series {
            label: "Across-class".into(),
            points: sorted.iter().map(|&(h, _, a)| (h, a)).collect(),
        },
    ];
    let svg = line_chart(
        &series,
        "node homophily",
        "mean embedding cosine",
        "First-layer embedding similarity",
    )?;
    write(path, &svg)
}

/// Heat grid of the row-normalized confusion matrix with count annotations.
pub fn render_confusion_svg(cm: &ConfusionMatrix, path: &Path) -> Result<()> {
    let c = cm.num_classes();
    if c == 0 {
        return Err(Error::EmptyInput("confusion matrix is empty"));
    }
    let grid = (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM).min(WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
    let cell = grid / c as f64;
    let ox = MARGIN_LEFT;
    let oy = MARGIN_TOP + 8.0;

    let mut body = String::new();
    body.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">Confusion matrix (rows: true class)</text>\n",
        WIDTH / 2.0
    ));
    body.push_str("<g id=\"cells\">\n");
    for i in 0..c {
        for j in 0..c {
            let v = cm.row_normalized[i][j];
            // White -> blue ramp.
            let channel = (255.0 - 185.0 * v).round() as u8;
            let fill = format!("rgb({channel},{},255)", (255.0 - 130.0 * v).round() as u8);
            let x = ox + j as f64 * cell;
            let y = oy + i as f64 * cell;
            body.push_str(&format!(
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell:.1}\" height=\"{cell:.1}\" fill=\"{fill}\" stroke=\"#888888\"/>\n"
            ));
            let text_fill = if v > 0.55 { "white" } else { "black" };
            body.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{text_fill}\">{}</text>\n",
                x + cell / 2.0,
                y + cell / 2.0 + 4.0,
                cm.counts[i][j]
            ));
        }
    }
    body.push_str("</g>\n");
    body.push_str("<g id=\"labels\" font-family=\"sans-serif\" font-size=\"12\">\n");
    for i in 0..c {
        body.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">true {i}</text>\n",
            ox - 8.0,
            oy + i as f64 * cell + cell / 2.0 + 4.0
        ));
        body.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">pred {i}</text>\n",
            ox + i as f64 * cell + cell / 2.0,
            oy + grid + 18.0
        ));
    }
    body.push_str("</g>\n");

    write(path, &document(&body))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::confusion;

    /// Minimal well-formedness check: every opened tag closes in order.
    fn assert_balanced(svg: &str) {
        let mut stack: Vec<String> = Vec::new();
        let mut rest = svg;
        while let Some(start) = rest.find('<') {
            rest = &rest[start + 1..];
            let end = rest.find('>').expect("unclosed tag");
            let tag = &rest[..end];
            rest = &rest[end + 1..];
            if tag.starts_with('?') || tag.starts_with('!') {
                continue;
            }
            if let Some(name) = tag.strip_prefix('/') {
                assert_eq!(stack.pop().as_deref(), Some(name.trim()), "mismatched close");
            } else if !tag.ends_with('/') {
                let name = tag.split_whitespace().next().unwrap().to_string();
                stack.push(name);
            }
        }
        assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    }

    fn demo_series(n: usize) -> Vec<Series> {
        (0..n)
            .map(|i| Series {
                label: format!("h = 0.{}", i + 1),
                points: (1..=30)
                    .map(|e| (e as f64, 0.1 * i as f64 + e as f64 / 60.0))
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn accuracy_chart_has_one_polyline_per_series_and_a_legend() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("figures/accuracy.svg");
        render_accuracy_svg(&demo_series(9), &path).unwrap();
        let svg = std::fs::read_to_string(&path).unwrap();
        assert_balanced(&svg);
        assert_eq!(svg.matches("<polyline").count(), 9);
        assert!(svg.contains("id=\"legend\""));
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains("version=\"1.1\""));
    }

    #[test]
    fn empty_input_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.svg");
        assert!(matches!(
            render_accuracy_svg(&[], &path),
            Err(Error::EmptyInput(_))
        ));
        let empty_series = vec![Series {
            label: "void".into(),
            points: vec![],
        }];
        assert!(matches!(
            render_accuracy_svg(&empty_series, &path),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            render_similarity_svg(&[], &path),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn similarity_chart_has_two_series() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("similarity.svg");
        let points: Vec<(f64, f64, f64)> = (1..=9)
            .map(|i| {
                let h = i as f64 / 10.0;
                (h, 0.2 + 0.6 * h, 0.3 - 0.2 * h)
            })
            .collect();
        render_similarity_svg(&points, &path).unwrap();
        let svg = std::fs::read_to_string(&path).unwrap();
        assert_balanced(&svg);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("In-class"));
        assert!(svg.contains("Across-class"));
    }

    #[test]
    fn confusion_grid_has_full_cell_grid_and_labels() {
        let labels: Vec<usize> = (0..28).map(|i| i % 7).collect();
        let preds: Vec<usize> = labels.iter().map(|&l| if l == 3 { 4 } else { l }).collect();
        let mask: Vec<usize> = (0..28).collect();
        let cm = confusion(&preds, &labels, &mask, 7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("confusion.svg");
        render_confusion_svg(&cm, &path).unwrap();
        let svg = std::fs::read_to_string(&path).unwrap();
        assert_balanced(&svg);
        // 49 heat cells plus the background rect.
        assert_eq!(svg.matches("<rect").count(), 50);
        assert!(svg.contains("true 6"));
        assert!(svg.contains("pred 6"));
    }
}
