//! Candidate dot extraction: 8-connected component labeling, the
//! width/height circle test, and diameter banding around the page's standard
//! dot diameter (the median candidate diameter).

use crate::error::{Error, Result};
use crate::image::BinaryImage;

/// A labeled 8-connected foreground region.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub label: u32,
    pub bbox_x: usize,
    pub bbox_y: usize,
    /// Bounding-box width (omega).
    pub width: usize,
    /// Bounding-box height (eta).
    pub height: usize,
    pub area: usize,
    pub centroid_x: f64,
    pub centroid_y: f64,
}

/// A component accepted as a genuine Braille dot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BraillePoint {
    pub x: f64,
    pub y: f64,
    pub diameter: f64,
}

impl BraillePoint {
    pub fn new(x: f64, y: f64, diameter: f64) -> Self {
        BraillePoint { x, y, diameter }
    }
}

/// Labels 8-connected foreground regions with a two-pass union-find scan.
///
/// Components come back ordered by their first pixel in raster order, with
/// labels `1..=n` in that order.
pub fn connected_components(img: &BinaryImage) -> Vec<Component> {
    let (w, h) = (img.width(), img.height());
    let px = img.pixels();
    let mut labels = vec![0u32; w * h];
    let mut forest = DisjointSet::default();

    for y in 0..h {
        for x in 0..w {
            if !px[y * w + x] {
                continue;
            }
            // already-visited neighbours: W, NW, N, NE
            let mut current = 0u32;
            let neighbours = [
                (x > 0).then(|| y * w + x - 1),
                (x > 0 && y > 0).then(|| (y - 1) * w + x - 1),
                (y > 0).then(|| (y - 1) * w + x),
                (y > 0 && x + 1 < w).then(|| (y - 1) * w + x + 1),
            ];
            for n in neighbours.into_iter().flatten() {
                let l = labels[n];
                if l == 0 {
                    continue;
                }
                if current == 0 {
                    current = l;
                } else {
                    forest.union(current, l);
                }
            }
            if current == 0 {
                current = forest.make_set();
            }
            labels[y * w + x] = current;
        }
    }

    // second pass: resolve roots, renumber in raster order, accumulate stats
    let mut renumber = vec![0u32; forest.len() + 1];
    let mut stats: Vec<Accumulator> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            if l == 0 {
                continue;
            }
            let root = forest.find(l) as usize;
            if renumber[root] == 0 {
                stats.push(Accumulator::new(x, y));
                renumber[root] = stats.len() as u32;
            }
            stats[renumber[root] as usize - 1].add(x, y);
        }
    }

    stats
        .into_iter()
        .enumerate()
        .map(|(i, acc)| acc.finish(i as u32 + 1))
        .collect()
}

/// Per-pixel label map matching [`connected_components`] numbering
/// (0 is background).
pub fn label_map(img: &BinaryImage) -> Vec<u32> {
    let (w, h) = (img.width(), img.height());
    let comps = connected_components(img);
    let mut out = vec![0u32; w * h];
    // flood from each component's first raster pixel
    let mut stack = Vec::new();
    for comp in &comps {
        let start = (comp.bbox_x..comp.bbox_x + comp.width)
            .map(|x| comp.bbox_y * w + x)
            .find(|&i| img.pixels()[i] && out[i] == 0)
            .expect("component has a pixel on its top row");
        out[start] = comp.label;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if img.pixels()[j] && out[j] == 0 {
                        out[j] = comp.label;
                        stack.push(j);
                    }
                }
            }
        }
    }
    out
}

#[derive(Default)]
struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    /// Labels start at 1; index 0 is a placeholder.
    fn make_set(&mut self) -> u32 {
        if self.parent.is_empty() {
            self.parent.push(0);
        }
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn len(&self) -> usize {
        self.parent.len().saturating_sub(1)
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so roots stay stable in scan order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

struct Accumulator {
    min_x: usize,
    min_y: usize,
    max_x: usize,
    max_y: usize,
    area: usize,
    sum_x: u64,
    sum_y: u64,
}

impl Accumulator {
    fn new(x: usize, y: usize) -> Self {
        Accumulator {
            min_x: x,
            min_y: y,
            max_x: x,
            max_y: y,
            area: 0,
            sum_x: 0,
            sum_y: 0,
        }
    }

    fn add(&mut self, x: usize, y: usize) {
        self.min_x = self.min_x.min(x);
        self.min_y = self.min_y.min(y);
        self.max_x = self.max_x.max(x);
        self.max_y = self.max_y.max(y);
        self.area += 1;
        self.sum_x += x as u64;
        self.sum_y += y as u64;
    }

    fn finish(self, label: u32) -> Component {
        Component {
            label,
            bbox_x: self.min_x,
            bbox_y: self.min_y,
            width: self.max_x - self.min_x + 1,
            height: self.max_y - self.min_y + 1,
            area: self.area,
            centroid_x: self.sum_x as f64 / self.area as f64,
            centroid_y: self.sum_y as f64 / self.area as f64,
        }
    }
}

/// Circle test on the bounding box: `|w - h| <= min(w, h)`.
pub fn is_circle(c: &Component) -> bool {
    c.width.abs_diff(c.height) <= c.width.min(c.height)
}

/// Mean of bounding-box width and height; half-integers are exact in `f64`.
pub fn diameter(c: &Component) -> f64 {
    (c.width + c.height) as f64 / 2.0
}

/// Median of the candidate diameters; even counts average the middle pair.
pub fn standard_diameter(diameters: &[f64]) -> Result<f64> {
    if diameters.is_empty() {
        return Err(Error::NoCircleCandidates);
    }
    let mut sorted = diameters.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Ok(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    })
}

/// Closed acceptance band `[2/3 * ds, 4/3 * ds]`, evaluated without division.
pub fn within_band(diameter: f64, standard: f64) -> bool {
    3.0 * diameter >= 2.0 * standard && 3.0 * diameter <= 4.0 * standard
}

/// Why a component was not accepted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rejection {
    NotCircle,
    OutOfBand,
}

#[derive(Clone, Debug)]
pub struct DotDetection {
    pub points: Vec<BraillePoint>,
    /// Standard dot diameter of the page.
    pub standard_diameter: f64,
    pub rejected: Vec<(Component, Rejection)>,
}

/// Keeps circle-shaped components whose diameter lies in the accepted band
/// around the standard diameter; centroids become point coordinates.
pub fn filter_braille_points(components: &[Component]) -> Result<DotDetection> {
    let circles: Vec<&Component> = components.iter().filter(|c| is_circle(c)).collect();
    let diameters: Vec<f64> = circles.iter().map(|c| diameter(c)).collect();
    let standard = standard_diameter(&diameters)?;

    let mut points = Vec::with_capacity(circles.len());
    let mut rejected = Vec::new();
    for c in components {
        if !is_circle(c) {
            rejected.push((c.clone(), Rejection::NotCircle));
            continue;
        }
        let d = diameter(c);
        if within_band(d, standard) {
            points.push(BraillePoint::new(c.centroid_x, c.centroid_y, d));
        } else {
            rejected.push((c.clone(), Rejection::OutOfBand));
        }
    }
    Ok(DotDetection {
        points,
        standard_diameter: standard,
        rejected,
    })
}
