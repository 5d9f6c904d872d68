//! Static SVG figures: snapshot heatmaps, error-vs-time curves, metric-vs-SNR
//! curves and rank bars. Output is self-contained and deterministic.

use std::fmt::Write as _;

use crate::experiment::SummaryRow;
use crate::metrics::{Method, MetricsRecord};
use crate::snapshots::{GridKind, SnapshotMatrix};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(title: &str, width: f64, height: f64) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        width / 2.0,
        escape(title)
    )
    .unwrap();
    s
}

/// Linear map from data range to pixel range, padded when degenerate.
struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>, px_lo: f64, px_hi: f64) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
            lo -= 0.5;
            hi += 0.5;
        }
        Scale { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

fn axes(s: &mut String, x: &Scale, y: &Scale, xlabel: &str, ylabel: &str, left: f64, top: f64, w: f64, h: f64) {
    writeln!(
        s,
        r#"<rect class="frame" x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for k in 0..=4 {
        let fx = x.lo + (x.hi - x.lo) * k as f64 / 4.0;
        let fy = y.lo + (y.hi - y.lo) * k as f64 / 4.0;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            x.map(fx),
            top + h + 16.0,
            tick(fx)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            left - 6.0,
            y.map(fy) + 4.0,
            tick(fy)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        left + w / 2.0,
        top + h + 36.0,
        escape(xlabel)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {:.2})">{}</text>"#,
        top + h / 2.0,
        top + h / 2.0,
        escape(ylabel)
    )
    .unwrap();
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn legend(s: &mut String, labels: &[String], left: f64, top: f64) {
    for (k, label) in labels.iter().enumerate() {
        let y = top + 16.0 * k as f64;
        writeln!(
            s,
            r#"<line x1="{left:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"/>"#,
            left + 18.0,
            PALETTE[k % PALETTE.len()]
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            left + 22.0,
            y + 4.0,
            escape(label)
        )
        .unwrap();
    }
}

fn polyline(s: &mut String, label: &str, color: &str, points: &[(f64, f64)], x: &Scale, y: &Scale) {
    let pts: Vec<String> = points
        .iter()
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| format!("{:.2},{:.2}", x.map(*a), y.map(*b)))
        .collect();
    writeln!(
        s,
        r#"<polyline class="series" data-label="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
        escape(label),
        pts.join(" ")
    )
    .unwrap();
}

/// Perceptually ordered ramp (dark blue to yellow) for `u` in `[0, 1]`.
fn colormap(u: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] =
        [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let u = if u.is_finite() { u.clamp(0.0, 1.0) } else { 0.0 };
    let pos = u * (STOPS.len() - 1) as f64;
    let k = (pos.floor() as usize).min(STOPS.len() - 2);
    let f = pos - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Heatmap of `|x|`. Line data is drawn as space (rows) by time (columns);
/// plane data shows the single snapshot `column` on its 2-D grid.
pub fn surface_svg(x: &SnapshotMatrix, column: usize, title: &str) -> String {
    let v = x.values();
    let (cells_x, cells_y, value): (usize, usize, Box<dyn Fn(usize, usize) -> f64>) = match x.grid().kind {
        GridKind::Line1d => (x.ncols(), x.nrows(), Box::new(|cx, cy| v[(cy, cx)].norm())),
        GridKind::Plane2d => {
            let nx = x.grid().axes[0].count as usize;
            let ny = x.grid().axes[1].count as usize;
            let col = column.min(x.ncols() - 1);
            (nx, ny, Box::new(move |cx, cy| v[(cx + nx * cy, col)].norm()))
        }
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for cy in 0..cells_y {
        for cx in 0..cells_x {
            let m = value(cx, cy);
            lo = lo.min(m);
            hi = hi.max(m);
        }
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (w, h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let (cw, ch) = (w / cells_x as f64, h / cells_y as f64);
    let mut s = header(title, WIDTH, HEIGHT);
    writeln!(s, r#"<g class="heatmap" shape-rendering="crispEdges">"#).unwrap();
    for cy in 0..cells_y {
        for cx in 0..cells_x {
            let u = (value(cx, cy) - lo) / span;
            writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                MARGIN + cx as f64 * cw,
                MARGIN + h - (cy + 1) as f64 * ch,
                cw + 0.01,
                ch + 0.01,
                colormap(u)
            )
            .unwrap();
        }
    }
    writeln!(s, "</g>").unwrap();
    let (xs, ys, xl, yl) = match x.grid().kind {
        GridKind::Line1d => {
            let t = x.times();
            let ax = x.grid().axes[0];
            (
                Scale::new([t[0], *t.last().unwrap()].into_iter(), MARGIN, MARGIN + w),
                Scale::new([ax.min, ax.max].into_iter(), MARGIN + h, MARGIN),
                "t",
                "grid position",
            )
        }
        GridKind::Plane2d => {
            let (ax, ay) = (x.grid().axes[0], x.grid().axes[1]);
            (
                Scale::new([ax.min, ax.max].into_iter(), MARGIN, MARGIN + w),
                Scale::new([ay.min, ay.max].into_iter(), MARGIN + h, MARGIN),
                "x",
                "y",
            )
        }
    };
    axes(&mut s, &xs, &ys, xl, yl, MARGIN, MARGIN, w, h);
    s.push_str("</svg>\n");
    s
}

/// One polyline per labelled `(t, epsilon)` series.
pub fn error_t_svg(series: &[(String, Vec<(f64, f64)>)], title: &str) -> String {
    let (w, h) = (WIDTH - 2.0 * MARGIN - 100.0, HEIGHT - 2.0 * MARGIN);
    let xs = Scale::new(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)), MARGIN, MARGIN + w);
    let ys = Scale::new(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)), MARGIN + h, MARGIN);
    let mut s = header(title, WIDTH, HEIGHT);
    axes(&mut s, &xs, &ys, "t", "relative error", MARGIN, MARGIN, w, h);
    for (k, (label, pts)) in series.iter().enumerate() {
        polyline(&mut s, label, PALETTE[k % PALETTE.len()], pts, &xs, &ys);
    }
    let labels: Vec<String> = series.iter().map(|(l, _)| l.clone()).collect();
    legend(&mut s, &labels, MARGIN + w + 12.0, MARGIN + 8.0);
    s.push_str("</svg>\n");
    s
}

/// Mean RMSE and mean CC against SNR, one series per method, side by side.
pub fn sweep_svg(rows: &[SummaryRow], title: &str) -> String {
    let mut methods: Vec<Method> = rows.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    let width = 2.0 * WIDTH;
    let mut s = header(title, width, HEIGHT);
    let (w, h) = (WIDTH - 2.0 * MARGIN - 40.0, HEIGHT - 2.0 * MARGIN);
    let panels: [(&str, fn(&SummaryRow) -> f64); 2] = [("mean RMSE", |r| r.mean_rmse), ("mean CC", |r| r.mean_cc_paper)];
    for (p, (label, get)) in panels.iter().enumerate() {
        let left = MARGIN + p as f64 * WIDTH;
        let xs = Scale::new(rows.iter().map(|r| r.snr_db), left, left + w);
        let ys = Scale::new(rows.iter().map(get), MARGIN + h, MARGIN);
        writeln!(s, r#"<g class="panel" data-metric="{label}">"#).unwrap();
        axes(&mut s, &xs, &ys, "SNR (dB)", label, left, MARGIN, w, h);
        for (k, m) in methods.iter().enumerate() {
            let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.method == *m).map(|r| (r.snr_db, get(r))).collect();
            polyline(&mut s, m.as_str(), PALETTE[k % PALETTE.len()], &pts, &xs, &ys);
        }
        writeln!(s, "</g>").unwrap();
    }
    let labels: Vec<String> = methods.iter().map(|m| m.to_string()).collect();
    legend(&mut s, &labels, width - 90.0, MARGIN + 8.0);
    s.push_str("</svg>\n");
    s
}

/// Mean filtered rank per method, one bar each.
pub fn rank_bar_svg(records: &[MetricsRecord], title: &str) -> String {
    let mut methods: Vec<Method> = records.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    let bars: Vec<(Method, f64)> = methods
        .iter()
        .map(|m| {
            let ranks: Vec<f64> = records
                .iter()
                .filter(|r| r.method == *m)
                .filter_map(|r| r.filtered_rank.map(|k| k as f64))
                .collect();
            let mean = if ranks.is_empty() { 0.0 } else { ranks.iter().sum::<f64>() / ranks.len() as f64 };
            (*m, mean)
        })
        .collect();
    let (w, h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let top = bars.iter().map(|b| b.1).fold(0.0, f64::max).max(1.0);
    let ys = Scale::new([0.0, top].into_iter(), MARGIN + h, MARGIN);
    let xs = Scale::new([0.0, bars.len().max(1) as f64].into_iter(), MARGIN, MARGIN + w);
    let mut s = header(title, WIDTH, HEIGHT);
    writeln!(s, r#"<rect class="frame" x="{MARGIN}" y="{MARGIN}" width="{w}" height="{h}" fill="none" stroke="black"/>"#)
        .unwrap();
    for k in 0..=4 {
        let v = top * k as f64 / 4.0;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            MARGIN - 6.0,
            ys.map(v) + 4.0,
            tick(v)
        )
        .unwrap();
    }
    let slot = w / bars.len().max(1) as f64;
    for (k, (m, v)) in bars.iter().enumerate() {
        let x0 = xs.map(k as f64) + 0.2 * slot;
        let y0 = ys.map(*v);
        writeln!(
            s,
            r#"<rect class="bar" data-method="{m}" x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            0.6 * slot,
            MARGIN + h - y0,
            PALETTE[k % PALETTE.len()]
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">{m}</text>"#,
            x0 + 0.3 * slot,
            MARGIN + h + 18.0
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
