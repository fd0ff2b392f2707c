use std::fmt::Write;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub struct Series {
    pub label: String,
    /// `(round, accuracy in [0, 1])`.
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Accuracy range rounded outwards to tenths.
fn y_range(series: &[Series]) -> (f64, f64) {
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let (lo, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let lo = ((lo * 10.0).floor() / 10.0).clamp(0.0, 0.9);
    let hi = ((hi * 10.0).ceil() / 10.0).clamp(lo + 0.1, 1.0);
    (lo, hi)
}

/// Line chart of test accuracy against round, one polyline per series.
pub fn render(title: &str, series: &[Series]) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .fold(1.0f64, f64::max);
    let (y_lo, y_hi) = y_range(series);
    let sx = |x: f64| LEFT + plot_w * x / x_max;
    let sy = |y: f64| TOP + plot_h * (1.0 - (y - y_lo) / (y_hi - y_lo));

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    )
    .unwrap();

    // Axes, ticks and grid.
    let (x0, y0) = (LEFT, TOP + plot_h);
    writeln!(s, r#"<g class="axes" stroke="black">"#).unwrap();
    writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}"/>"#, LEFT + plot_w).unwrap();
    writeln!(s, r#"<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}"/>"#).unwrap();
    writeln!(s, "</g>").unwrap();
    for i in 0..=5 {
        let x = x_max * i as f64 / 5.0;
        let px = sx(x);
        writeln!(s, r#"<line x1="{px}" y1="{y0}" x2="{px}" y2="{}" stroke="black"/>"#, y0 + 5.0).unwrap();
        writeln!(s, r#"<text x="{px}" y="{}" text-anchor="middle">{}</text>"#, y0 + 18.0, x.round()).unwrap();
    }
    let steps = ((y_hi - y_lo) * 10.0).round().max(1.0) as usize;
    for i in 0..=steps {
        let y = y_lo + (y_hi - y_lo) * i as f64 / steps as f64;
        let py = sy(y);
        writeln!(
            s,
            "<line x1=\"{x0}\" y1=\"{py}\" x2=\"{}\" y2=\"{py}\" stroke=\"#ddd\"/>",
            LEFT + plot_w
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{:.0}</text>"#,
            x0 - 8.0,
            py + 4.0,
            100.0 * y
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text class="x-label" x="{}" y="{}" text-anchor="middle">Communication round</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 18.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text class="y-label" x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">Test accuracy (%)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    )
    .unwrap();

    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y.clamp(y_lo, y_hi))))
            .collect();
        writeln!(
            s,
            r#"<polyline data-label="{}" fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
            escape(&ser.label),
            pts.join(" ")
        )
        .unwrap();
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#,
            lx + 20.0
        )
        .unwrap();
        writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&ser.label)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}
