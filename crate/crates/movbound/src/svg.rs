//! Dependency-free SVG line charts for run outputs.
//!
//! The runner emits a handful of diagnostic plots (energy decay, wall
//! trajectories, inter-run distances). A fixed-size chart with axes, ticks,
//! and a legend is all that is needed, so this renders one directly: the
//! output is a pure function of the input series, byte for byte.

/// One labeled polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// A line chart; render with [`LinePlot::render`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

impl LinePlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            series: Vec::new(),
        }
    }

    pub fn add_series(&mut self, label: &str, points: Vec<(f64, f64)>) {
        self.series.push(Series {
            label: label.to_string(),
            points,
        });
    }

    /// Renders the chart; non-finite points are dropped. An empty chart
    /// still renders axes.
    pub fn render(&self) -> String {
        let finite: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .copied()
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .collect()
            })
            .collect();
        let all = finite.iter().flatten().copied();
        let (x_min, x_max, y_min, y_max) = ranges(all);

        let px = |x: f64| {
            MARGIN_LEFT + (x - x_min) / (x_max - x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
        };
        let py = |y: f64| {
            HEIGHT - MARGIN_BOTTOM
                - (y - y_min) / (y_max - y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
        };

        let mut out = String::with_capacity(4096);
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
             font-family=\"sans-serif\" font-size=\"13\">\n"
        ));
        out.push_str(&format!(
            "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        ));

        // Axes.
        out.push_str(&format!(
            "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
             <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
            l = MARGIN_LEFT,
            r = WIDTH - MARGIN_RIGHT,
            t = MARGIN_TOP,
            b = HEIGHT - MARGIN_BOTTOM,
        ));

        // Ticks and grid.
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = x_min + f * (x_max - x_min);
            let yv = y_min + f * (y_max - y_min);
            let (xp, yp) = (px(xv), py(yv));
            out.push_str(&format!(
                "<line x1=\"{xp}\" y1=\"{b}\" x2=\"{xp}\" y2=\"{b2}\" stroke=\"black\"/>\n\
                 <text x=\"{xp}\" y=\"{ty}\" text-anchor=\"middle\">{}</text>\n",
                tick(xv),
                b = HEIGHT - MARGIN_BOTTOM,
                b2 = HEIGHT - MARGIN_BOTTOM + 6.0,
                ty = HEIGHT - MARGIN_BOTTOM + 22.0,
            ));
            out.push_str(&format!(
                "<line x1=\"{l1}\" y1=\"{yp}\" x2=\"{l}\" y2=\"{yp}\" stroke=\"black\"/>\n\
                 <text x=\"{tx}\" y=\"{typ}\" text-anchor=\"end\">{}</text>\n",
                tick(yv),
                l1 = MARGIN_LEFT - 6.0,
                l = MARGIN_LEFT,
                tx = MARGIN_LEFT - 10.0,
                typ = yp + 4.0,
            ));
            if k > 0 {
                out.push_str(&format!(
                    "<line x1=\"{l}\" y1=\"{yp}\" x2=\"{r}\" y2=\"{yp}\" stroke=\"#dddddd\"/>\n",
                    l = MARGIN_LEFT,
                    r = WIDTH - MARGIN_RIGHT,
                ));
            }
        }

        // Axis labels.
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
            (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
            (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
            escape(&self.y_label)
        ));

        // Series and legend.
        for (i, pts) in finite.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            if !pts.is_empty() {
                let coords: Vec<String> = pts
                    .iter()
                    .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
                    .collect();
                out.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>\n",
                    coords.join(" ")
                ));
            }
            let ly = MARGIN_TOP + 8.0 + 18.0 * i as f64;
            out.push_str(&format!(
                "<line x1=\"{x1}\" y1=\"{ly}\" x2=\"{x2}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n\
                 <text x=\"{tx}\" y=\"{ty}\">{}</text>\n",
                escape(&self.series[i].label),
                x1 = WIDTH - MARGIN_RIGHT - 150.0,
                x2 = WIDTH - MARGIN_RIGHT - 126.0,
                tx = WIDTH - MARGIN_RIGHT - 120.0,
                ty = ly + 4.0,
            ));
        }

        out.push_str("</svg>\n");
        out
    }
}

/// Data ranges padded by 4%, with degenerate spans widened to unit size.
fn ranges(points: impl Iterator<Item = (f64, f64)>) -> (f64, f64, f64, f64) {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (x, y) in points {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if !x_min.is_finite() {
        (x_min, x_max, y_min, y_max) = (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| {
        if hi - lo > f64::EPSILON * hi.abs().max(1.0) {
            let p = 0.04 * (hi - lo);
            (lo - p, hi + p)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x_min, x_max) = pad(x_min, x_max);
    let (y_min, y_max) = pad(y_min, y_max);
    (x_min, x_max, y_min, y_max)
}

/// Short, locale-independent tick label.
fn tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else if a >= 100.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.4}")
    }
}

/// Escapes text nodes.
fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_axes_series_and_legend() {
        let mut plot = LinePlot::new("energy decay", "t", "E");
        plot.add_series("run A", vec![(0.0, 1.0), (0.5, 0.5), (1.0, 0.4)]);
        plot.add_series("run B", vec![(0.0, 1.2), (1.0, 0.3)]);
        let svg = plot.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("energy decay"));
        assert!(svg.contains("run A") && svg.contains("run B"));
    }

    #[test]
    fn escapes_markup_and_survives_degenerate_data() {
        let mut plot = LinePlot::new("a < b & c", "x", "y");
        plot.add_series("flat", vec![(0.0, 2.0), (0.0, 2.0)]);
        plot.add_series("gappy", vec![(0.0, f64::NAN), (1.0, 3.0)]);
        let svg = plot.render();
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn identical_input_renders_identical_bytes() {
        let mut a = LinePlot::new("t", "x", "y");
        a.add_series("s", vec![(0.0, 0.1), (0.2, 0.3)]);
        let mut b = LinePlot::new("t", "x", "y");
        b.add_series("s", vec![(0.0, 0.1), (0.2, 0.3)]);
        assert_eq!(a.render(), b.render());
    }
}
