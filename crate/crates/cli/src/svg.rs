//! Self-contained SVG figures: polyline charts, scatter plots, and bar
//! charts with axes and tick labels. No external plotting dependency; the
//! output is plain XML with embedded geometry.

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 42.0;

/// Series colors in drawing order.
pub const PALETTE: [&str; 4] = ["#33658a", "#f26419", "#2f9c5c", "#804a9c"];

/// One x-y chart panel.
pub struct Chart {
    width: f64,
    height: f64,
    title: String,
    x_label: String,
    y_label: String,
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: String,
    legend: Vec<(String, String)>,
    equal_aspect: bool,
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Round a range outward a little so strokes stay inside the frame.
fn pad_range(lo: f64, hi: f64) -> (f64, f64) {
    if lo == hi {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str, width: f64, height: f64) -> Self {
        Chart {
            width,
            height,
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_range: (0.0, 1.0),
            y_range: (0.0, 1.0),
            body: String::new(),
            legend: Vec::new(),
            equal_aspect: false,
        }
    }

    /// Fit the axes to cover all supplied points, with a small pad.
    pub fn fit_ranges(&mut self, xs: &[f64], ys: &[f64]) {
        let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in xs {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
        }
        let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &y in ys {
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
        if !x_lo.is_finite() || !y_lo.is_finite() {
            return;
        }
        self.x_range = pad_range(x_lo, x_hi);
        self.y_range = pad_range(y_lo, y_hi);
    }

    pub fn set_ranges(&mut self, x: (f64, f64), y: (f64, f64)) {
        self.x_range = x;
        self.y_range = y;
    }

    /// Force identical units per pixel on both axes (for the complex plane).
    pub fn equal_aspect(&mut self) {
        self.equal_aspect = true;
    }

    fn plot_area(&self) -> (f64, f64, f64, f64) {
        let mut px = MARGIN_LEFT;
        let mut py = MARGIN_TOP;
        let mut pw = self.width - MARGIN_LEFT - MARGIN_RIGHT;
        let mut ph = self.height - MARGIN_TOP - MARGIN_BOTTOM;
        if self.equal_aspect {
            let unit_x = pw / (self.x_range.1 - self.x_range.0);
            let unit_y = ph / (self.y_range.1 - self.y_range.0);
            let unit = unit_x.min(unit_y);
            let new_w = unit * (self.x_range.1 - self.x_range.0);
            let new_h = unit * (self.y_range.1 - self.y_range.0);
            px += 0.5 * (pw - new_w);
            py += 0.5 * (ph - new_h);
            pw = new_w;
            ph = new_h;
        }
        (px, py, pw, ph)
    }

    fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        let (px, py, pw, ph) = self.plot_area();
        let fx = (x - self.x_range.0) / (self.x_range.1 - self.x_range.0);
        let fy = (y - self.y_range.0) / (self.y_range.1 - self.y_range.0);
        (px + fx * pw, py + (1.0 - fy) * ph)
    }

    pub fn polyline(&mut self, xs: &[f64], ys: &[f64], color: &str, stroke: f64, dashed: bool) {
        let mut points = String::new();
        for (&x, &y) in xs.iter().zip(ys) {
            let (cx, cy) = self.to_px(x, y);
            points.push_str(&format!("{cx:.2},{cy:.2} "));
        }
        let dash = if dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        self.body.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"{stroke}\"{dash} points=\"{}\"/>\n",
            points.trim_end()
        ));
    }

    pub fn scatter(&mut self, xs: &[f64], ys: &[f64], color: &str, radius: f64) {
        for (&x, &y) in xs.iter().zip(ys) {
            let (cx, cy) = self.to_px(x, y);
            self.body.push_str(&format!(
                "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{radius}\" fill=\"{color}\" fill-opacity=\"0.8\"/>\n"
            ));
        }
    }

    /// Outline circle in data units (e.g. the unit circle).
    pub fn outline_circle(&mut self, center: (f64, f64), radius: f64, color: &str) {
        let (cx, cy) = self.to_px(center.0, center.1);
        let (ex, _) = self.to_px(center.0 + radius, center.1);
        self.body.push_str(&format!(
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1\" stroke-dasharray=\"3 3\"/>\n",
            ex - cx
        ));
    }

    /// Vertical bars centred on integer x positions.
    pub fn bars(&mut self, values: &[f64], color: &str) {
        let (_, py, _, ph) = self.plot_area();
        for (i, &v) in values.iter().enumerate() {
            let (x0, y0) = self.to_px(i as f64 + 0.7, v.max(self.y_range.0));
            let (x1, _) = self.to_px(i as f64 + 1.3, v);
            let base = py + ph;
            self.body.push_str(&format!(
                "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\" fill-opacity=\"0.85\"/>\n",
                x1 - x0,
                (base - y0).max(0.0)
            ));
        }
    }

    pub fn legend_entry(&mut self, label: &str, color: &str) {
        self.legend.push((label.into(), color.into()));
    }

    /// Custom tick labels on the x axis (for categorical bars).
    pub fn render_with_x_labels(&self, labels: &[String]) -> String {
        self.render_inner(Some(labels))
    }

    pub fn render(&self) -> String {
        self.render_inner(None)
    }

    fn render_inner(&self, x_labels: Option<&[String]>) -> String {
        let (px, py, pw, ph) = self.plot_area();
        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
            w = self.width,
            h = self.height
        ));
        out.push_str(&format!(
            "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
            self.width, self.height
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
            px + pw / 2.0,
            esc(&self.title)
        ));
        out.push_str(&format!(
            "<rect x=\"{px:.1}\" y=\"{py:.1}\" width=\"{pw:.1}\" height=\"{ph:.1}\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n"
        ));

        // x ticks
        match x_labels {
            Some(labels) => {
                for (i, label) in labels.iter().enumerate() {
                    let (cx, _) = self.to_px(i as f64 + 1.0, self.y_range.0);
                    out.push_str(&format!(
                        "<text x=\"{cx:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                        py + ph + 16.0,
                        esc(label)
                    ));
                }
            }
            None => {
                for i in 0..=4 {
                    let x = self.x_range.0 + (self.x_range.1 - self.x_range.0) * i as f64 / 4.0;
                    let (cx, _) = self.to_px(x, self.y_range.0);
                    out.push_str(&format!(
                        "<line x1=\"{cx:.1}\" y1=\"{:.1}\" x2=\"{cx:.1}\" y2=\"{:.1}\" stroke=\"#444\"/>\n",
                        py + ph,
                        py + ph + 4.0
                    ));
                    out.push_str(&format!(
                        "<text x=\"{cx:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
                        py + ph + 16.0,
                        format_tick(x)
                    ));
                }
            }
        }
        // y ticks
        for i in 0..=4 {
            let y = self.y_range.0 + (self.y_range.1 - self.y_range.0) * i as f64 / 4.0;
            let (_, cy) = self.to_px(self.x_range.0, y);
            out.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{cy:.1}\" x2=\"{px:.1}\" y2=\"{cy:.1}\" stroke=\"#444\"/>\n",
                px - 4.0
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
                px - 7.0,
                cy + 3.5,
                format_tick(y)
            ));
        }
        // axis labels
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            px + pw / 2.0,
            self.height - 8.0,
            esc(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"14\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>\n",
            py + ph / 2.0,
            py + ph / 2.0,
            esc(&self.y_label)
        ));

        out.push_str(&self.body);

        for (i, (label, color)) in self.legend.iter().enumerate() {
            let ly = py + 14.0 + 16.0 * i as f64;
            let lx = px + pw - 130.0;
            out.push_str(&format!(
                "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                lx + 22.0
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                lx + 28.0,
                ly + 3.5,
                esc(label)
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

/// Stack rendered panels vertically into one SVG document.
pub fn stack_panels(panels: &[String], width: f64, panel_height: f64) -> String {
    let total = panel_height * panels.len() as f64;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{total}\" viewBox=\"0 0 {width} {total}\">\n"
    );
    for (i, panel) in panels.iter().enumerate() {
        out.push_str(&format!(
            "<g transform=\"translate(0 {:.1})\">\n",
            panel_height * i as f64
        ));
        // strip the outer <svg> wrapper of the panel
        let inner = panel
            .lines()
            .skip(1)
            .take_while(|line| !line.starts_with("</svg>"))
            .collect::<Vec<_>>()
            .join("\n");
        out.push_str(&inner);
        out.push_str("\n</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
