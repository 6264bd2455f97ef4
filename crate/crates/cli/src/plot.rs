//! Minimal line charts rendered straight into PNG images.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{CliError, CliResult};

const WIDTH: u32 = 640;
const HEIGHT: u32 = 400;
const MARGIN: f64 = 40.0;
const PALETTE: [[u8; 3]; 6] = [
    [31, 119, 180],
    [214, 39, 40],
    [44, 160, 44],
    [148, 103, 189],
    [255, 127, 14],
    [23, 190, 207],
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn draw_line(img: &mut RgbImage, a: (f64, f64), b: (f64, f64), color: Rgb<u8>) {
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let x = a.0 + t * (b.0 - a.0);
        let y = a.1 + t * (b.1 - a.1);
        if x >= 0.0 && y >= 0.0 && (x as u32) < WIDTH && (y as u32) < HEIGHT {
            img.put_pixel(x as u32, y as u32, color);
        }
    }
}

/// Plots every series on shared axes; the y axis is logarithmic when all values are positive.
pub fn render_lines(path: &Path, series: &[Series]) -> CliResult<()> {
    let finite = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite();
    let all: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().filter(finite).copied())
        .collect();
    let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, Rgb([255, 255, 255]));
    let axis = Rgb([0, 0, 0]);
    let (w, h) = (WIDTH as f64, HEIGHT as f64);
    draw_line(
        &mut img,
        (MARGIN, h - MARGIN),
        (w - MARGIN, h - MARGIN),
        axis,
    );
    draw_line(&mut img, (MARGIN, MARGIN), (MARGIN, h - MARGIN), axis);
    if !all.is_empty() {
        let log = all.iter().all(|p| p.1 > 0.0);
        let ty = |y: f64| if log { y.log10() } else { y };
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in &all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(ty(y));
            y1 = y1.max(ty(y));
        }
        let span = |a: f64, b: f64| if b > a { b - a } else { 1.0 };
        let (sx, sy) = (span(x0, x1), span(y0, y1));
        let map = |(x, y): (f64, f64)| {
            (
                MARGIN + (x - x0) / sx * (w - 2.0 * MARGIN),
                h - MARGIN - (ty(y) - y0) / sy * (h - 2.0 * MARGIN),
            )
        };
        for (i, s) in series.iter().enumerate() {
            let color = Rgb(PALETTE[i % PALETTE.len()]);
            let pts: Vec<(f64, f64)> = s.points.iter().filter(finite).map(|&p| map(p)).collect();
            for pair in pts.windows(2) {
                draw_line(&mut img, pair[0], pair[1], color);
            }
            for &p in &pts {
                draw_line(&mut img, (p.0 - 2.0, p.1), (p.0 + 2.0, p.1), color);
                draw_line(&mut img, (p.0, p.1 - 2.0), (p.0, p.1 + 2.0), color);
            }
        }
    }
    img.save(path).map_err(|e| CliError::Plot(e.to_string()))
}
