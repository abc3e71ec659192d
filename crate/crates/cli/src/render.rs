//! Raster heatmaps of coherence fields.
//!
//! Coherence maps onto a blue-to-yellow ramp over `[0, 1]`. Cells outside
//! the cone of influence are faded toward white, significance contours are
//! drawn in black and phase arrows point right for in-phase motion and up
//! when the first series leads.

use image::{Rgb, RgbImage};
use ndarray::Array2;
use wavecoh::significance::contour;

use crate::config::PeriodAxis;

const LEFT: u32 = 36;
const RIGHT: u32 = 8;
const TOP: u32 = 8;
const BOTTOM: u32 = 22;
const UNDEFINED: Rgb<u8> = Rgb([128, 128, 128]);
const INK: Rgb<u8> = Rgb([0, 0, 0]);
const PAPER: Rgb<u8> = Rgb([255, 255, 255]);
const FADE: f64 = 0.55;

/// Color stops of the ramp, evenly spaced over `[0, 1]`.
const STOPS: [[f64; 3]; 5] = [
    [53.0, 42.0, 135.0],
    [18.0, 110.0, 220.0],
    [20.0, 170.0, 180.0],
    [170.0, 190.0, 70.0],
    [249.0, 250.0, 20.0],
];

pub fn colormap(v: f64) -> Rgb<u8> {
    if v.is_nan() {
        return UNDEFINED;
    }
    let x = v.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let k = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - k as f64;
    let c = |i: usize| (STOPS[k][i] + f * (STOPS[k + 1][i] - STOPS[k][i])).round() as u8;
    Rgb([c(0), c(1), c(2)])
}

fn fade(c: Rgb<u8>) -> Rgb<u8> {
    Rgb(c
        .0
        .map(|v| (v as f64 + FADE * (255.0 - v as f64)).round() as u8))
}

/// Everything needed to draw one panel; rows are in ascending period order.
#[derive(Debug, Clone, Copy)]
pub struct Panel<'a> {
    pub r2: &'a Array2<f64>,
    pub mask: &'a Array2<bool>,
    pub coi: &'a [f64],
    pub periods: &'a [f64],
    pub phase: Option<&'a Array2<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Style {
    pub period_axis: PeriodAxis,
    pub arrow_stride_time: usize,
    pub arrow_stride_scale: usize,
    pub arrow_threshold: f64,
}

impl Default for Style {
    fn default() -> Self {
        Self {
            period_axis: PeriodAxis::ShortTop,
            arrow_stride_time: 5,
            arrow_stride_scale: 6,
            arrow_threshold: 0.5,
        }
    }
}

/// Pixel geometry of a rendered panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub cell_width: u32,
    pub cell_height: u32,
    pub rows: usize,
    pub cols: usize,
    pub axis: PeriodAxis,
}

impl Layout {
    fn new(rows: usize, cols: usize, axis: PeriodAxis) -> Self {
        Self {
            cell_width: (720 / cols.max(1) as u32).clamp(1, 12),
            cell_height: (360 / rows.max(1) as u32).clamp(2, 12),
            rows,
            cols,
            axis,
        }
    }

    pub fn width(&self) -> u32 {
        LEFT + RIGHT + self.cell_width * self.cols as u32
    }

    pub fn height(&self) -> u32 {
        TOP + BOTTOM + self.cell_height * self.rows as u32
    }

    /// Pixel row of the lattice line `j` (0 = below the shortest period).
    fn line_y(&self, j: usize) -> u32 {
        let k = match self.axis {
            PeriodAxis::ShortTop => j,
            PeriodAxis::ShortBottom => self.rows - j,
        };
        TOP + k as u32 * self.cell_height
    }

    fn line_x(&self, t: usize) -> u32 {
        LEFT + t as u32 * self.cell_width
    }

    /// Half-open pixel rectangle `(x0, y0, x1, y1)` of cell `(scale j, time t)`.
    pub fn cell_rect(&self, j: usize, t: usize) -> (u32, u32, u32, u32) {
        let (ya, yb) = (self.line_y(j), self.line_y(j + 1));
        (self.line_x(t), ya.min(yb), self.line_x(t + 1), ya.max(yb))
    }
}

pub fn render(panel: &Panel, style: &Style) -> (RgbImage, Layout) {
    let (rows, cols) = panel.r2.dim();
    let layout = Layout::new(rows, cols, style.period_axis);
    let mut img = RgbImage::from_pixel(layout.width(), layout.height(), PAPER);

    for ((j, t), &v) in panel.r2.indexed_iter() {
        let mut c = colormap(v);
        if panel.periods[j] > panel.coi[t] {
            c = fade(c);
        }
        let (x0, y0, x1, y1) = layout.cell_rect(j, t);
        for y in y0..y1 {
            for x in x0..x1 {
                img.put_pixel(x, y, c);
            }
        }
    }

    for c in contour(panel.mask) {
        let pts: Vec<(u32, u32)> = c
            .closed()
            .map(|(t, j)| (layout.line_x(t), layout.line_y(j)))
            .collect();
        for w in pts.windows(2) {
            line(&mut img, w[0], w[1], INK);
        }
    }

    if let Some(phase) = panel.phase {
        draw_arrows(&mut img, &layout, panel, phase, style);
    }
    draw_axes(&mut img, &layout, panel.periods);
    (img, layout)
}

fn draw_arrows(
    img: &mut RgbImage,
    layout: &Layout,
    panel: &Panel,
    phase: &Array2<f64>,
    style: &Style,
) {
    let (st, ss) = (
        style.arrow_stride_time.max(1),
        style.arrow_stride_scale.max(1),
    );
    let reach =
        (st as f64 * layout.cell_width as f64).min(ss as f64 * layout.cell_height as f64) * 0.4;
    if reach < 2.0 {
        return;
    }
    for j in (ss / 2..layout.rows).step_by(ss) {
        for t in (st / 2..layout.cols).step_by(st) {
            let (r, a) = (panel.r2[[j, t]], phase[[j, t]]);
            if r.is_nan()
                || r < style.arrow_threshold
                || a.is_nan()
                || panel.periods[j] > panel.coi[t]
            {
                continue;
            }
            let (x0, y0, x1, y1) = layout.cell_rect(j, t);
            let cx = (x0 + x1) as f64 / 2.0;
            let cy = (y0 + y1) as f64 / 2.0;
            let (dx, dy) = (a.cos() * reach, -a.sin() * reach);
            let tail = (cx - dx, cy - dy);
            let head = (cx + dx, cy + dy);
            let at = |p: (f64, f64)| (p.0.round().max(0.0) as u32, p.1.round().max(0.0) as u32);
            line(img, at(tail), at(head), INK);
            for side in [2.6f64, -2.6] {
                let b = a + side;
                let wing = (
                    head.0 + b.cos() * reach * 0.45,
                    head.1 - b.sin() * reach * 0.45,
                );
                line(img, at(head), at(wing), INK);
            }
        }
    }
}

fn draw_axes(img: &mut RgbImage, layout: &Layout, periods: &[f64]) {
    let bottom = layout.line_y(0).max(layout.line_y(layout.rows));
    let right = layout.line_x(layout.cols);
    line(img, (LEFT - 1, TOP), (LEFT - 1, bottom), INK);
    line(img, (LEFT - 1, bottom), (right, bottom), INK);

    // Period ticks at powers of two.
    let mut p = 1.0f64;
    while p <= periods.last().copied().unwrap_or(0.0) * 1.01 {
        if let Some(j) = nearest(periods, p).filter(|&j| (periods[j] / p).log2().abs() < 0.1) {
            let (_, y0, _, y1) = layout.cell_rect(j, 0);
            let y = (y0 + y1) / 2;
            line(img, (LEFT - 5, y), (LEFT - 1, y), INK);
            text(img, &format!("{p}"), LEFT - 7, y.saturating_sub(5), true);
        }
        p *= 2.0;
    }

    // Observation ticks every 20, counted from 1.
    let mut obs = 1usize;
    while obs <= layout.cols {
        let x = layout.line_x(obs - 1) + layout.cell_width / 2;
        line(img, (x, bottom), (x, bottom + 3), INK);
        text(img, &obs.to_string(), x, bottom + 6, false);
        obs = if obs == 1 { 20 } else { obs + 20 };
    }
}

fn nearest(periods: &[f64], p: f64) -> Option<usize> {
    (0..periods.len()).min_by(|&a, &b| {
        (periods[a] / p)
            .log2()
            .abs()
            .total_cmp(&(periods[b] / p).log2().abs())
    })
}

fn line(img: &mut RgbImage, (x0, y0): (u32, u32), (x1, y1): (u32, u32), color: Rgb<u8>) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let (mut x, mut y) = (x0 as i64, y0 as i64);
    let (x1, y1) = (x1 as i64, y1 as i64);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let (sx, sy) = (if x < x1 { 1 } else { -1 }, if y < y1 { 1 } else { -1 });
    let mut err = dx + dy;
    loop {
        if (0..w).contains(&x) && (0..h).contains(&y) {
            img.put_pixel(x as u32, y as u32, color);
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// 3x5 digit glyphs, one bit per pixel, rows top to bottom.
const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

/// Draws decimal digits at twice the glyph size; `right_align` anchors the
/// last glyph at `x`, otherwise the text is centred on `x`.
fn text(img: &mut RgbImage, s: &str, x: u32, y: u32, right_align: bool) {
    let glyphs: Vec<usize> = s
        .chars()
        .filter_map(|c| c.to_digit(10))
        .map(|d| d as usize)
        .collect();
    let width = glyphs.len() as u32 * 8;
    let start = if right_align {
        x.saturating_sub(width)
    } else {
        x.saturating_sub(width / 2)
    };
    for (k, &g) in glyphs.iter().enumerate() {
        for (row, bits) in DIGITS[g].iter().enumerate() {
            for col in 0..3 {
                if bits & (0b100 >> col) == 0 {
                    continue;
                }
                for (ox, oy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let px = start + k as u32 * 8 + col * 2 + ox;
                    let py = y + row as u32 * 2 + oy;
                    if px < img.width() && py < img.height() {
                        img.put_pixel(px, py, INK);
                    }
                }
            }
        }
    }
}
