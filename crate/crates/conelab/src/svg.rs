//! Minimal SVG line plots for the experiment tables. Plots are optional
//! output only; no check ever reads one back.

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// Renders series as polylines with auto-scaled axes and a small legend.
pub fn line_plot(title: &str, series: &[Series]) -> String {
    let (w, h, mx, my) = (720.0, 480.0, 70.0, 50.0);
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if all.is_empty() {
        return format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\"/>");
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| mx + (x - x0) / (x1 - x0) * (w - 2.0 * mx);
    let sy = |y: f64| h - my - (y - y0) / (y1 - y0) * (h - 2.0 * my);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        w / 2.0,
        title
    );
    // axes
    out.push_str(&format!(
        "<line x1=\"{mx}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{mx}\" y1=\"{my}\" x2=\"{mx}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - my,
        w - mx,
        h - my,
        h - my
    ));
    out.push_str(&format!(
        "<text x=\"{mx}\" y=\"{}\" font-size=\"11\">{:.3e}</text>\n\
         <text x=\"{mx}\" y=\"{}\" font-size=\"11\">{:.3e}</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{:.3e}</text>\n",
        h - my + 14.0,
        x0,
        my - 6.0,
        y1,
        w - mx,
        h - my + 14.0,
        x1
    ));
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            w - mx - 150.0,
            my + 16.0 * i as f64,
            s.name
        ));
    }
    out.push_str("</svg>\n");
    out
}
