//! Diagnostic drawings over a faded copy of a page.

use crate::dots::BraillePoint;
use crate::geometry::{MarginLine, StructureEstimate};
use crate::image::GrayImage;
use crate::translate::CellGrid;

const INK: u8 = 0;

/// Maps the page into the upper half of the grey range so marks stand out.
pub fn faded(base: &GrayImage) -> GrayImage {
    let mut out = base.clone();
    for v in out.pixels_mut() {
        *v = 128 + *v / 2;
    }
    out
}

fn plot(img: &mut GrayImage, x: f64, y: f64) {
    let (x, y) = (x.round(), y.round());
    if x >= 0.0 && y >= 0.0 && (x as usize) < img.width() && (y as usize) < img.height() {
        img.set(x as usize, y as usize, INK);
    }
}

pub fn draw_line(img: &mut GrayImage, from: (f64, f64), to: (f64, f64)) {
    let steps = (to.0 - from.0).abs().max((to.1 - from.1).abs()).ceil().max(1.0) as usize;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        plot(img, from.0 + t * (to.0 - from.0), from.1 + t * (to.1 - from.1));
    }
}

pub fn draw_circle(img: &mut GrayImage, cx: f64, cy: f64, r: f64) {
    let steps = (2.0 * std::f64::consts::PI * r).ceil().max(8.0) as usize;
    for i in 0..steps {
        let a = i as f64 / steps as f64 * std::f64::consts::TAU;
        plot(img, cx + r * a.cos(), cy + r * a.sin());
    }
}

pub fn draw_cross(img: &mut GrayImage, cx: f64, cy: f64, arm: f64) {
    draw_line(img, (cx - arm, cy), (cx + arm, cy));
    draw_line(img, (cx, cy - arm), (cx, cy + arm));
}

fn draw_polygon(img: &mut GrayImage, corners: &[(f64, f64)]) {
    for i in 0..corners.len() {
        draw_line(img, corners[i], corners[(i + 1) % corners.len()]);
    }
}

/// Circles the accepted points and marks their centres.
pub fn points_overlay(base: &GrayImage, points: &[BraillePoint]) -> GrayImage {
    let mut out = faded(base);
    for p in points {
        draw_circle(&mut out, p.x, p.y, p.diameter / 2.0 + 1.0);
        draw_cross(&mut out, p.x, p.y, 2.0);
    }
    out
}

fn draw_margin(img: &mut GrayImage, line: &MarginLine) {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let half = line.thickness / 2.0;
    let norm = (1.0 + line.slope * line.slope).sqrt();
    for offset in [-half, 0.0, half] {
        let b = line.intercept + offset * norm;
        if line.side.is_horizontal() {
            draw_line(img, (0.0, b), (w, line.slope * w + b));
        } else {
            draw_line(img, (b, 0.0), (line.slope * h + b, h));
        }
    }
}

/// The four thick margin lines and a large cross at the writing origin.
pub fn margins_overlay(base: &GrayImage, estimate: &StructureEstimate) -> GrayImage {
    let mut out = faded(base);
    for line in &estimate.margins {
        draw_margin(&mut out, line);
    }
    let s = &estimate.structure;
    draw_cross(&mut out, s.p0_x, s.p0_y, 2.0 * s.delta_s);
    out
}

/// Every cell outline with its six dot sub-regions.
pub fn grid_overlay(base: &GrayImage, grid: &CellGrid) -> GrayImage {
    let mut out = faded(base);
    for l in 0..grid.lines() {
        for k in 0..grid.columns() {
            draw_polygon(&mut out, &grid.cell_corners(l, k));
            for n in 1..=6 {
                draw_polygon(&mut out, &grid.region_corners(l, k, n));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn faded_keeps_order_and_range() {
        let img = GrayImage::new(3, 1, vec![0, 100, 255]).unwrap();
        assert_eq!(faded(&img).pixels(), &[128, 178, 255]);
    }

    #[test]
    fn line_endpoints_inked() {
        let mut img = GrayImage::filled(10, 10, 255);
        draw_line(&mut img, (1.0, 1.0), (8.0, 5.0));
        assert_eq!(img.get(1, 1), INK);
        assert_eq!(img.get(8, 5), INK);
        // off-image drawing is clipped
        draw_line(&mut img, (-5.0, -5.0), (20.0, 20.0));
        assert_eq!(img.get(9, 9), INK);
    }

    #[test]
    fn circle_stays_on_radius() {
        let mut img = GrayImage::filled(30, 30, 255);
        draw_circle(&mut img, 15.0, 15.0, 6.0);
        assert_eq!(img.get(15, 15), 255);
        assert_eq!(img.get(21, 15), INK);
    }
}
