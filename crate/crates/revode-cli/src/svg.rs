//! Minimal self-contained SVG line plots: polylines, axis ticks, a legend.
//! Figures are for quick inspection; the CSV files are the real output.

pub struct Series<'a> {
    pub label: &'a str,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub fn render_loglog(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    render(title, xlabel, ylabel, series, true, true)
}

pub fn render_semilogy(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    render(title, xlabel, ylabel, series, false, true)
}

fn render(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[Series],
    logx: bool,
    logy: bool,
) -> String {
    let keep = |v: f64, log: bool| v.is_finite() && (!log || v > 0.0);
    let tx = |v: f64| if logx { v.log10() } else { v };
    let ty = |v: f64| if logy { v.log10() } else { v };

    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in series {
        for (&x, &y) in s.xs.iter().zip(s.ys) {
            if keep(x, logx) && keep(y, logy) {
                xmin = xmin.min(tx(x));
                xmax = xmax.max(tx(x));
                ymin = ymin.min(ty(y));
                ymax = ymax.max(ty(y));
            }
        }
    }
    if !(xmin.is_finite() && ymin.is_finite()) {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    if xmax - xmin < 1e-300 {
        xmax = xmin + 1.0;
    }
    if ymax - ymin < 1e-300 {
        ymax = ymin + 1.0;
    }
    let px = |x: f64| MARGIN + (x - xmin) / (xmax - xmin) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - ymin) / (ymax - ymin) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));

    for (v, label) in ticks(xmin, xmax, logx) {
        let x = px(v);
        out.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#ddd\"/>\n",
            MARGIN,
            HEIGHT - MARGIN
        ));
        out.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{label}</text>\n",
            HEIGHT - MARGIN + 18.0
        ));
    }
    for (v, label) in ticks(ymin, ymax, logy) {
        let y = py(v);
        out.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n",
            MARGIN,
            WIDTH - MARGIN
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{label}</text>\n",
            MARGIN - 6.0,
            y + 4.0
        ));
    }
    out.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{:.1}\" height=\"{:.1}\" \
         fill=\"none\" stroke=\"black\"/>\n",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    ));
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(xlabel)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(ylabel)
    ));

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s
            .xs
            .iter()
            .zip(s.ys)
            .filter(|(&x, &y)| keep(x, logx) && keep(y, logy))
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(tx(x)), py(ty(y))))
            .collect();
        if !pts.is_empty() {
            out.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                pts.join(" ")
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{}</text>\n",
            WIDTH - MARGIN - 120.0,
            MARGIN + 16.0 * (k + 1) as f64,
            escape(s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Tick positions in transformed coordinates with their labels: decades on a
/// log axis (thinned to at most eight), five even divisions otherwise.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        let a = lo.floor() as i64;
        let b = hi.ceil() as i64;
        let step = (((b - a) as usize).div_ceil(8)).max(1) as i64;
        (a..=b)
            .step_by(step as usize)
            .map(|e| (e as f64, format!("1e{e}")))
            .collect()
    } else {
        (0..=5)
            .map(|i| {
                let v = lo + (hi - lo) * i as f64 / 5.0;
                (v, format!("{v:.3}"))
            })
            .collect()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
