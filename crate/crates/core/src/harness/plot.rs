//! Minimal static SVG line plots.

use std::fmt::Write as _;

use crate::integrate::Trajectory;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>) -> Self {
        let (x0, x1) = bounds(xs);
        let (y0, y1) = bounds(ys);
        Self { x0, x1, y0: y0.min(0.0), y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn header(s: &mut String, title: &str, f: &Frame) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, WIDTH / 2.0);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let labels = [
        (MARGIN, HEIGHT - MARGIN + 15.0, "start", format!("{:.3}", f.x0)),
        (WIDTH - MARGIN, HEIGHT - MARGIN + 15.0, "end", format!("{:.3}", f.x1)),
        (MARGIN - 5.0, HEIGHT - MARGIN, "end", format!("{:.3}", f.y0)),
        (MARGIN - 5.0, MARGIN + 4.0, "end", format!("{:.3}", f.y1)),
    ];
    for (x, y, anchor, text) in labels {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{text}</text>"#);
    }
}

fn polyline(s: &mut String, f: &Frame, pts: impl Iterator<Item = (f64, f64)>, colour: &str) {
    let coords: Vec<String> = pts
        .map(|(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
        coords.join(" ")
    );
}

/// Profiles `f(t,·)` for up to six evenly chosen samples.
pub fn profiles_svg(traj: &Trajectory, title: &str) -> String {
    let n = traj.len();
    let picks: Vec<usize> = if n <= COLOURS.len() {
        (0..n).collect()
    } else {
        (0..COLOURS.len()).map(|i| i * (n - 1) / (COLOURS.len() - 1)).collect()
    };
    let grid = traj.first().grid;
    let frame = Frame::new(
        grid.centers(),
        picks.iter().flat_map(|&i| traj.samples[i].values.iter().copied()),
    );
    let mut s = String::new();
    header(&mut s, title, &frame);
    for (c, &i) in picks.iter().enumerate() {
        let field = &traj.samples[i];
        polyline(&mut s, &frame, grid.centers().zip(field.values.iter().copied()), COLOURS[c]);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{}">t = {:.3}</text>"#,
            WIDTH - MARGIN - 70.0,
            MARGIN + 15.0 * (c as f64 + 1.0),
            COLOURS[c],
            field.time
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One curve per named series against `times`.
pub fn series_svg(times: &[f64], series: &[(&str, Vec<f64>)], title: &str) -> String {
    let frame = Frame::new(
        times.iter().copied(),
        series.iter().flat_map(|(_, v)| v.iter().copied()),
    );
    let mut s = String::new();
    header(&mut s, title, &frame);
    for (c, (name, values)) in series.iter().enumerate() {
        let colour = COLOURS[c % COLOURS.len()];
        polyline(&mut s, &frame, times.iter().copied().zip(values.iter().copied()), colour);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{colour}">{name}</text>"#,
            MARGIN + 10.0,
            MARGIN + 15.0 * (c as f64 + 1.0)
        );
    }
    s.push_str("</svg>\n");
    s
}
