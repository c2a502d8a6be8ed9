//! Fixed-style PNG rendering of matrix dumps and sweep tables.

use image::{Rgb, RgbImage};
use mstatic_core::io::{Axis, MatrixDump};

const MARGIN: u32 = 28;
const TICK: u32 = 6;
const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);
const INK: Rgb<u8> = Rgb([0, 0, 0]);
/// Orange for unreliable, green for reliable.
const MASK_OFF: Rgb<u8> = Rgb([240, 140, 30]);
const MASK_ON: Rgb<u8> = Rgb([60, 170, 75]);
const DB_FLOOR: f64 = -40.0;

const VIRIDIS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

const SERIES: [Rgb<u8>; 6] = [
    Rgb([31, 119, 180]),
    Rgb([214, 39, 40]),
    Rgb([44, 160, 44]),
    Rgb([148, 103, 189]),
    Rgb([255, 127, 14]),
    Rgb([23, 190, 207]),
];

pub fn colormap(t: f64) -> Rgb<u8> {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (VIRIDIS.len() - 1) as f64;
    let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let c = |k: usize| (VIRIDIS[i][k] * (1.0 - f) + VIRIDIS[i + 1][k] * f).round() as u8;
    Rgb([c(0), c(1), c(2)])
}

/// Pixels per matrix cell so that the short side spans at least 300 px.
fn cell_scale(n: usize) -> u32 {
    (300 / n.max(1)).clamp(1, 8) as u32
}

/// Heatmap with the first row at the bottom and tick marks at round axis values.
pub fn heatmap(dump: &MatrixDump, db: bool) -> RgbImage {
    let (rows, cols) = (dump.rows.n, dump.cols.n);
    let max = dump.values.iter().cloned().fold(0.0, f64::max);
    let level = |v: f64| -> f64 {
        if max <= 0.0 {
            0.0
        } else if db {
            let rel = 10.0 * (v.max(0.0) / max).log10();
            (rel.max(DB_FLOOR) - DB_FLOOR) / -DB_FLOOR
        } else {
            v / max
        }
    };
    draw_matrix(dump, |v| colormap(level(v)), rows, cols)
}

/// Two-color rendering of a 0/1 matrix.
pub fn mask_image(dump: &MatrixDump) -> RgbImage {
    draw_matrix(dump, |v| if v > 0.5 { MASK_ON } else { MASK_OFF }, dump.rows.n, dump.cols.n)
}

fn draw_matrix(dump: &MatrixDump, color: impl Fn(f64) -> Rgb<u8>, rows: usize, cols: usize) -> RgbImage {
    let sx = cell_scale(cols);
    let sy = cell_scale(rows);
    let w = cols as u32 * sx;
    let h = rows as u32 * sy;
    let mut img = RgbImage::from_pixel(w + 2 * MARGIN, h + 2 * MARGIN, BACKGROUND);
    for r in 0..rows {
        for c in 0..cols {
            let px = color(dump.get(r, c));
            let y0 = MARGIN + h - (r as u32 + 1) * sy;
            let x0 = MARGIN + c as u32 * sx;
            for dy in 0..sy {
                for dx in 0..sx {
                    img.put_pixel(x0 + dx, y0 + dy, px);
                }
            }
        }
    }
    frame(&mut img, MARGIN, MARGIN, w, h);
    for t in ticks(&dump.cols) {
        let x = MARGIN + (t * sx as f64 + sx as f64 / 2.0).round() as u32;
        vline(&mut img, x.min(MARGIN + w - 1), MARGIN + h, MARGIN + h + TICK, INK);
    }
    for t in ticks(&dump.rows) {
        let y = MARGIN + h - 1 - (t * sy as f64 + sy as f64 / 2.0).round().min(h as f64 - 1.0) as u32;
        hline(&mut img, MARGIN - TICK, MARGIN, y, INK);
    }
    img
}

/// Fractional indices of round values along an axis.
fn ticks(axis: &Axis) -> Vec<f64> {
    if axis.n < 2 || axis.step == 0.0 {
        return Vec::new();
    }
    let span = (axis.end() - axis.start).abs();
    let step = nice_step(span / 6.0);
    let (lo, hi) = if axis.step > 0.0 { (axis.start, axis.end()) } else { (axis.end(), axis.start) };
    let mut out = Vec::new();
    let mut v = (lo / step).ceil() * step;
    while v <= hi + 1e-9 * step {
        out.push((v - axis.start) / axis.step);
        v += step;
    }
    out
}

fn nice_step(raw: f64) -> f64 {
    if !(raw > 0.0) {
        return 1.0;
    }
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn hline(img: &mut RgbImage, x0: u32, x1: u32, y: u32, c: Rgb<u8>) {
    for x in x0..x1.min(img.width()) {
        if y < img.height() {
            img.put_pixel(x, y, c);
        }
    }
}

fn vline(img: &mut RgbImage, x: u32, y0: u32, y1: u32, c: Rgb<u8>) {
    for y in y0..y1.min(img.height()) {
        if x < img.width() {
            img.put_pixel(x, y, c);
        }
    }
}

fn frame(img: &mut RgbImage, x: u32, y: u32, w: u32, h: u32) {
    hline(img, x - 1, x + w + 1, y - 1, INK);
    hline(img, x - 1, x + w + 1, y + h, INK);
    vline(img, x - 1, y - 1, y + h + 1, INK);
    vline(img, x + w, y - 1, y + h + 1, INK);
}

/// One line series of a chart.
pub struct Series {
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// Line chart with tick marks; series colors follow a fixed palette.
pub fn line_chart(series: &[Series]) -> RgbImage {
    const W: u32 = 640;
    const H: u32 = 400;
    const M: u32 = 40;
    let mut img = RgbImage::from_pixel(W, H, BACKGROUND);
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y1) = (f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    let y0 = 0.0;
    let y1 = if y1 > y0 { y1 * 1.1 } else { 1.0 };
    let (pw, ph) = ((W - 2 * M) as f64, (H - 2 * M) as f64);
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        (M as f64 + (x - x0) / (x1 - x0) * pw, M as f64 + ph - (y - y0) / (y1 - y0) * ph)
    };
    frame(&mut img, M, M, W - 2 * M, H - 2 * M);
    let xs = nice_step((x1 - x0) / 6.0);
    let mut v = (x0 / xs).ceil() * xs;
    while v <= x1 + 1e-9 {
        let (px, _) = to_px(v, y0);
        vline(&mut img, px.round() as u32, H - M, H - M + TICK, INK);
        v += xs;
    }
    let ys = nice_step((y1 - y0) / 6.0);
    let mut v = 0.0;
    while v <= y1 + 1e-12 {
        let (_, py) = to_px(x0, v);
        hline(&mut img, M - TICK, M, py.round() as u32, INK);
        v += ys;
    }
    for (i, s) in series.iter().enumerate() {
        let color = SERIES[i % SERIES.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| to_px(x, y))
            .collect();
        for w in pts.windows(2) {
            segment(&mut img, w[0], w[1], color, s.dashed);
        }
        for &(x, y) in &pts {
            for dy in -2i32..=2 {
                for dx in -2i32..=2 {
                    put(&mut img, x.round() as i32 + dx, y.round() as i32 + dy, color);
                }
            }
        }
    }
    img
}

fn put(img: &mut RgbImage, x: i32, y: i32, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

fn segment(img: &mut RgbImage, a: (f64, f64), b: (f64, f64), c: Rgb<u8>, dashed: bool) {
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    let n = len.ceil().max(1.0) as usize;
    for i in 0..=n {
        if dashed && (i / 6) % 2 == 1 {
            continue;
        }
        let t = i as f64 / n as f64;
        let x = a.0 + t * (b.0 - a.0);
        let y = a.1 + t * (b.1 - a.1);
        for d in [-1i32, 0] {
            put(img, x.round() as i32, y.round() as i32 + d, c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colormap_endpoints() {
        assert_eq!(colormap(0.0), Rgb([68, 1, 84]));
        assert_eq!(colormap(1.0), Rgb([253, 231, 37]));
        assert_eq!(colormap(f64::NAN), colormap(0.0));
    }

    #[test]
    fn nice_steps() {
        assert_eq!(nice_step(11.0), 10.0);
        assert_eq!(nice_step(0.3), 0.2);
        assert_eq!(nice_step(4.0), 5.0);
    }

    #[test]
    fn ticks_land_on_round_values() {
        let a = Axis::new("x", "m", -35.0, 0.2, 351);
        let t = ticks(&a);
        assert!(t.iter().any(|&i| (a.start + i * a.step).abs() < 1e-9));
        for i in t {
            let v = a.start + i * a.step;
            assert!((v / 10.0 - (v / 10.0).round()).abs() < 1e-9);
        }
    }
}
