//! Self-contained SVG line plots: polylines, ticks, axis labels, optional
//! logarithmic power axis. No external renderer involved.

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 76.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 58.0;

/// Values below this are clamped on a logarithmic axis.
const LOG_FLOOR: f64 = 1e-12;

pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
}

pub struct PlotOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
}

fn nice_step(raw: f64) -> f64 {
    let magnitude = 10f64.powf(raw.abs().log10().floor());
    for multiple in [1.0, 2.0, 5.0] {
        if multiple * magnitude >= raw {
            return multiple * magnitude;
        }
    }
    10.0 * magnitude
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let step = nice_step((hi - lo) / 6.0);
    let mut tick = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    while tick <= hi + step * 1e-9 {
        // avoid the "-0" label
        ticks.push(if tick == 0.0 { 0.0 } else { tick });
        tick += step;
    }
    ticks
}

fn fmt_tick(value: f64) -> String {
    if value == 0.0 {
        return "0".into();
    }
    let magnitude = value.abs();
    if !(1e-3..1e4).contains(&magnitude) {
        return format!("{value:e}");
    }
    let mut text = format!("{value:.4}");
    while text.contains('.') && (text.ends_with('0') || text.ends_with('.')) {
        text.pop();
    }
    text
}

/// Renders a full SVG document for the given series.
pub fn line_plot(series: &[Series], opts: &PlotOptions) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    let map_y = |v: f64| if opts.log_y { v.max(LOG_FLOOR).log10() } else { v };
    for s in series {
        for &(x, y) in &s.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            let y = map_y(y);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
    }
    if !y_min.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    if opts.log_y {
        y_min = y_min.floor();
        y_max = y_max.ceil();
        if y_max <= y_min {
            y_max = y_min + 1.0;
        }
    } else {
        let pad = 0.05 * (y_max - y_min).max(1e-12);
        y_min -= pad;
        y_max += pad;
    }
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }

    let px = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| MARGIN_TOP + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    let mut svg = String::with_capacity(4096);
    svg.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    ));
    svg.push('\n');
    svg.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(&opts.title)
    ));
    svg.push('\n');

    // gridlines and tick labels
    for tick in linear_ticks(x_min, x_max) {
        let x = px(tick);
        svg.push_str(&format!(
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#dddddd" stroke-width="1"/>"##,
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        ));
        svg.push('\n');
        svg.push_str(&format!(
            r#"<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            MARGIN_TOP + plot_h + 18.0,
            fmt_tick(tick)
        ));
        svg.push('\n');
    }
    let y_ticks: Vec<f64> = if opts.log_y {
        (y_min as i64..=y_max as i64).map(|d| d as f64).collect()
    } else {
        linear_ticks(y_min, y_max)
    };
    for tick in y_ticks {
        let y = py(tick);
        svg.push_str(&format!(
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd" stroke-width="1"/>"##,
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        ));
        svg.push('\n');
        let label = if opts.log_y { format!("1e{tick:.0}") } else { fmt_tick(tick) };
        svg.push_str(&format!(
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{label}</text>"#,
            MARGIN_LEFT - 8.0,
            y + 4.0
        ));
        svg.push('\n');
    }

    // axes
    svg.push_str(&format!(
        r##"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333333" stroke-width="1"/>"##
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 16.0,
        escape(&opts.x_label)
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="20" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(&opts.y_label)
    ));
    svg.push('\n');

    for s in series {
        let mut points = String::with_capacity(s.points.len() * 14);
        for &(x, y) in &s.points {
            points.push_str(&format!("{:.2},{:.2} ", px(x), py(map_y(y))));
        }
        svg.push_str(&format!(
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            s.color,
            points.trim_end()
        ));
        svg.push('\n');
    }

    // legend, only when there is more than one series
    if series.len() > 1 {
        for (i, s) in series.iter().enumerate() {
            let y = MARGIN_TOP + 16.0 + 18.0 * i as f64;
            let x = MARGIN_LEFT + plot_w - 150.0;
            svg.push_str(&format!(
                r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{}" stroke-width="2"/>"#,
                x + 26.0,
                s.color
            ));
            svg.push('\n');
            svg.push_str(&format!(
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
                x + 32.0,
                y + 4.0,
                escape(&s.label)
            ));
            svg.push('\n');
        }
    }

    svg.push_str("</svg>\n");
    svg
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
