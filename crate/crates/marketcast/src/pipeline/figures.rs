//! Minimal deterministic SVG charts: fixed-precision coordinates, no
//! timestamps, no randomness, so golden-file comparison and byte-identical
//! reruns both work.

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#ff7f0e",
];

pub struct Line {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Bars {
    /// Bin edges, one more than counts.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub struct Marker {
    pub label: String,
    pub x: f64,
    pub color: &'static str,
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub lines: Vec<Line>,
    pub bars: Option<Bars>,
    pub markers: Vec<Marker>,
}

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 280.0;
const MARGIN_L: f64 = 58.0;
const MARGIN_R: f64 = 14.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 46.0;

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let formatted = if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else if v.abs() >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.3}")
    };
    formatted
        .trim_end_matches('0')
        .trim_end_matches('.')
        .to_string()
}

struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Self { lo: 0.0, hi: 1.0 };
        }
        if hi - lo < 1e-12 {
            let pad = if hi.abs() < 1e-12 { 1.0 } else { hi.abs() * 0.1 };
            return Self {
                lo: lo - pad,
                hi: hi + pad,
            };
        }
        let pad = (hi - lo) * 0.05;
        Self {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn scale(&self, v: f64, out_lo: f64, out_hi: f64) -> f64 {
        out_lo + (v - self.lo) / (self.hi - self.lo) * (out_hi - out_lo)
    }

    fn ticks(&self, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / n as f64)
            .collect()
    }
}

fn render_panel(panel: &Panel, offset_x: f64, svg: &mut String) {
    use std::fmt::Write;

    let x0 = offset_x + MARGIN_L;
    let x1 = offset_x + PANEL_W - MARGIN_R;
    let y0 = PANEL_H - MARGIN_B; // bottom (data low)
    let y1 = MARGIN_T; // top (data high)

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for line in &panel.lines {
        for &(x, y) in &line.points {
            xs.push(x);
            ys.push(y);
        }
    }
    if let Some(bars) = &panel.bars {
        xs.extend(bars.edges.iter().copied());
        ys.push(0.0);
        ys.extend(bars.counts.iter().map(|&c| c as f64));
    }
    for marker in &panel.markers {
        xs.push(marker.x);
    }
    let x_range = Range::of(xs.into_iter());
    let y_range = Range::of(ys.into_iter());

    writeln!(
        svg,
        r##"<text x="{}" y="18" text-anchor="middle" font-size="13" font-weight="bold">{}</text>"##,
        fmt(offset_x + PANEL_W / 2.0),
        panel.title
    )
    .unwrap();

    // axes
    writeln!(
        svg,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#333" stroke-width="1"/>"##,
        fmt(x0),
        fmt(y0),
        fmt(x1),
        fmt(y0)
    )
    .unwrap();
    writeln!(
        svg,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#333" stroke-width="1"/>"##,
        fmt(x0),
        fmt(y0),
        fmt(x0),
        fmt(y1)
    )
    .unwrap();

    for tick in x_range.ticks(4) {
        let x = x_range.scale(tick, x0, x1);
        writeln!(
            svg,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#333" stroke-width="1"/>"##,
            fmt(x),
            fmt(y0),
            fmt(x),
            fmt(y0 + 4.0)
        )
        .unwrap();
        writeln!(
            svg,
            r##"<text x="{}" y="{}" text-anchor="middle" font-size="10">{}</text>"##,
            fmt(x),
            fmt(y0 + 16.0),
            tick_label(tick)
        )
        .unwrap();
    }
    for tick in y_range.ticks(4) {
        let y = y_range.scale(tick, y0, y1);
        writeln!(
            svg,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#333" stroke-width="1"/>"##,
            fmt(x0 - 4.0),
            fmt(y),
            fmt(x0),
            fmt(y)
        )
        .unwrap();
        writeln!(
            svg,
            r##"<text x="{}" y="{}" text-anchor="end" font-size="10">{}</text>"##,
            fmt(x0 - 7.0),
            fmt(y + 3.0),
            tick_label(tick)
        )
        .unwrap();
    }
    writeln!(
        svg,
        r##"<text x="{}" y="{}" text-anchor="middle" font-size="11">{}</text>"##,
        fmt((x0 + x1) / 2.0),
        fmt(PANEL_H - 12.0),
        panel.x_label
    )
    .unwrap();
    writeln!(
        svg,
        r##"<text x="{}" y="{}" text-anchor="middle" font-size="11" transform="rotate(-90 {} {})">{}</text>"##,
        fmt(offset_x + 14.0),
        fmt((y0 + y1) / 2.0),
        fmt(offset_x + 14.0),
        fmt((y0 + y1) / 2.0),
        panel.y_label
    )
    .unwrap();

    if let Some(bars) = &panel.bars {
        for (i, &count) in bars.counts.iter().enumerate() {
            let left = x_range.scale(bars.edges[i], x0, x1);
            let right = x_range.scale(bars.edges[i + 1], x0, x1);
            let top = y_range.scale(count as f64, y0, y1);
            let base = y_range.scale(0.0, y0, y1);
            writeln!(
                svg,
                r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#9ecae1" stroke="#4a7fa5" stroke-width="0.5"/>"##,
                fmt(left),
                fmt(top),
                fmt((right - left).max(0.0)),
                fmt((base - top).max(0.0)),
            )
            .unwrap();
        }
    }

    for (i, line) in panel.lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = line
            .points
            .iter()
            .map(|&(x, y)| {
                format!(
                    "{},{}",
                    fmt(x_range.scale(x, x0, x1)),
                    fmt(y_range.scale(y, y0, y1))
                )
            })
            .collect();
        writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"##,
            points.join(" "),
            color
        )
        .unwrap();
        writeln!(
            svg,
            r##"<text x="{}" y="{}" font-size="9" fill="{}">{}</text>"##,
            fmt(x1 - 80.0),
            fmt(y1 + 12.0 * (i as f64 + 1.0)),
            color,
            line.name
        )
        .unwrap();
    }

    for marker in &panel.markers {
        let x = x_range.scale(marker.x, x0, x1);
        writeln!(
            svg,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="1.5" stroke-dasharray="4 3"/>"##,
            fmt(x),
            fmt(y0),
            fmt(x),
            fmt(y1),
            marker.color
        )
        .unwrap();
        writeln!(
            svg,
            r##"<text x="{}" y="{}" text-anchor="middle" font-size="9" fill="{}">{}</text>"##,
            fmt(x),
            fmt(y1 - 4.0),
            marker.color,
            marker.label
        )
        .unwrap();
    }
}

/// Renders panels side by side into one standalone SVG document.
pub fn render(panels: &[Panel]) -> String {
    let width = PANEL_W * panels.len() as f64;
    let mut svg = format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif">"##,
        fmt(width),
        fmt(PANEL_H),
        fmt(width),
        fmt(PANEL_H)
    );
    svg.push('\n');
    svg.push_str(r##"<rect width="100%" height="100%" fill="white"/>"##);
    svg.push('\n');
    for (i, panel) in panels.iter().enumerate() {
        render_panel(panel, PANEL_W * i as f64, &mut svg);
    }
    svg.push_str("</svg>\n");
    svg
}

/// Fixed-count histogram bars for a set of values.
pub fn histogram_bars(values: &[f64], n_bins: usize) -> Bars {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if !(lo.is_finite() && hi.is_finite()) {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0usize; n_bins];
    for &v in values {
        let idx = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    Bars { edges, counts }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_deterministic() {
        let panel = Panel {
            title: "test".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            lines: vec![Line {
                name: "series".into(),
                points: vec![(0.0, 1.0), (0.5, 0.3), (1.0, 0.8)],
            }],
            bars: None,
            markers: vec![Marker {
                label: "star".into(),
                x: 0.5,
                color: "#d62728",
            }],
        };
        let a = render(std::slice::from_ref(&panel));
        let b = render(std::slice::from_ref(&panel));
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
    }

    #[test]
    fn histogram_counts_cover_all_values() {
        let values = [0.1, 0.2, 0.2, 0.9, 0.5];
        let bars = histogram_bars(&values, 4);
        assert_eq!(bars.counts.iter().sum::<usize>(), values.len());
        assert_eq!(bars.edges.len(), 5);
    }
}
