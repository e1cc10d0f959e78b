//! Minimal single-panel SVG line plot, used by the CLI for fidelity traces.

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if (hi - lo).abs() < 1e-30 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

/// Renders xs/ys as a polyline with axes and five tick labels per axis.
/// Returns an empty plot frame when the series is empty.
pub fn line_plot(title: &str, xs: &[f64], ys: &[f64]) -> String {
    let n = xs.len().min(ys.len());
    let (x0, x1) = nice_range(
        xs.iter().take(n).cloned().fold(f64::INFINITY, f64::min),
        xs.iter().take(n).cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = nice_range(
        ys.iter().take(n).cloned().fold(f64::INFINITY, f64::min),
        ys.iter().take(n).cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    s.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    ));
    // axes
    s.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = MARGIN_L,
        r = WIDTH - MARGIN_R,
        t = MARGIN_T,
        b = HEIGHT - MARGIN_B
    ));
    // ticks
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let px = sx(fx);
        let py = sy(fy);
        s.push_str(&format!(
            "<line x1=\"{px}\" y1=\"{b}\" x2=\"{px}\" y2=\"{b2}\" stroke=\"black\"/>\n\
             <text x=\"{px}\" y=\"{ly}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"11\">{fx:.3e}</text>\n",
            b = HEIGHT - MARGIN_B,
            b2 = HEIGHT - MARGIN_B + 5.0,
            ly = HEIGHT - MARGIN_B + 18.0
        ));
        s.push_str(&format!(
            "<line x1=\"{l}\" y1=\"{py}\" x2=\"{l2}\" y2=\"{py}\" stroke=\"black\"/>\n\
             <text x=\"{lx}\" y=\"{ty}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"11\">{fy:.3}</text>\n",
            l = MARGIN_L,
            l2 = MARGIN_L - 5.0,
            lx = MARGIN_L - 8.0,
            ty = py + 4.0
        ));
    }
    if n > 0 {
        let pts: Vec<String> = (0..n)
            .map(|i| format!("{:.2},{:.2}", sx(xs[i]), sy(ys[i])))
            .collect();
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
