//! Recovery of the page's writing structure from the Braille point cloud.
//!
//! Margin lines are fitted through the extremal points of each page side;
//! their intersection gives the writing origin and their mean angle the
//! rotation. Peer distances between neighbouring marginal points cluster at
//! the intra-cell dot pitch and at the gap between cells (or lines); the two
//! strongest peaks of their smoothed frequency distribution give cell size
//! and spacing. Cell and line counts follow from text width and height.
//!
//! All lengths are measured between dot centres: `char_width` is the
//! distance between a cell's two dot columns, `char_gap` the distance from
//! a cell's right column to the next cell's left column, and likewise
//! vertically with three dot rows per cell.

use std::f64::consts::FRAC_PI_8;

use crate::dots::BraillePoint;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Upper,
    Lower,
    Left,
    Right,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Upper, Side::Lower, Side::Left, Side::Right];

    pub fn is_horizontal(self) -> bool {
        matches!(self, Side::Upper | Side::Lower)
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Upper => "upper",
            Side::Lower => "lower",
            Side::Left => "left",
            Side::Right => "right",
        }
    }

    /// Coordinate the stripes run along, and the coordinate that is extremal.
    fn split(self, p: &BraillePoint) -> (f64, f64) {
        if self.is_horizontal() {
            (p.x, p.y)
        } else {
            (p.y, p.x)
        }
    }

    /// Whether `a` lies further out than `b` on this side.
    fn more_extreme(self, a: f64, b: f64) -> bool {
        match self {
            Side::Upper | Side::Left => a < b,
            Side::Lower | Side::Right => a > b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// A thick line through the marginal points of one page side.
///
/// Horizontal sides are stored as `y = slope * x + intercept`, vertical
/// sides as `x = slope * y + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginLine {
    pub side: Side,
    pub slope: f64,
    pub intercept: f64,
    pub thickness: f64,
    /// Number of marginal points the line was fitted to.
    pub support: usize,
}

impl MarginLine {
    /// Rotation of the line away from its upright orientation, in radians,
    /// positive for a clockwise turn of the page (y grows downward).
    pub fn angle(&self) -> f64 {
        if self.side.is_horizontal() {
            self.slope.atan()
        } else {
            -self.slope.atan()
        }
    }

    /// Perpendicular distance of `(x, y)` from the line.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let (a, b) = if self.side.is_horizontal() { (x, y) } else { (y, x) };
        (b - self.slope * a - self.intercept).abs() / (1.0 + self.slope * self.slope).sqrt()
    }

    /// The line as `(point, direction)` in image coordinates.
    fn parametric(&self) -> ((f64, f64), (f64, f64)) {
        if self.side.is_horizontal() {
            ((0.0, self.intercept), (1.0, self.slope))
        } else {
            ((self.intercept, 0.0), (self.slope, 1.0))
        }
    }

    /// Intersection with another line, `None` when (nearly) parallel.
    pub fn intersect(&self, other: &MarginLine) -> Option<(f64, f64)> {
        let ((px, py), (dx, dy)) = self.parametric();
        let ((qx, qy), (ex, ey)) = other.parametric();
        let det = dx * ey - dy * ex;
        if det.abs() < 1e-9 {
            return None;
        }
        let t = ((qx - px) * ey - (qy - py) * ex) / det;
        Some((px + t * dx, py + t * dy))
    }
}

/// The page's writing structure. Lengths are centre-to-centre (see module
/// docs); `theta_b` is in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrailleStructure {
    pub p0_x: f64,
    pub p0_y: f64,
    pub theta_b: f64,
    pub char_width: f64,
    pub char_height: f64,
    pub char_gap: f64,
    pub line_gap: f64,
    pub chars_per_line: usize,
    pub line_count: usize,
    pub delta_s: f64,
}

impl BrailleStructure {
    pub fn cell_advance(&self) -> f64 {
        self.char_width + self.char_gap
    }

    pub fn line_advance(&self) -> f64 {
        self.char_height + self.line_gap
    }

    /// Unit vectors along the writing direction and down the page.
    pub fn axes(&self) -> ((f64, f64), (f64, f64)) {
        let (s, c) = self.theta_b.sin_cos();
        ((c, s), (-s, c))
    }

    /// Page position of local coordinates `(u, v)` measured from `P0`.
    pub fn to_page(&self, u: f64, v: f64) -> (f64, f64) {
        let ((ux, uy), (vx, vy)) = self.axes();
        (self.p0_x + u * ux + v * vx, self.p0_y + u * uy + v * vy)
    }

    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        to_local(x, y, self.p0_x, self.p0_y, self.theta_b)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.char_width > 0.0
            && self.char_height > 0.0
            && self.char_gap >= 0.0
            && self.line_gap >= 0.0
            && self.chars_per_line >= 1
            && self.line_count >= 1;
        if !ok {
            return Err(Error::TooFewPoints(format!("degenerate structure {self:?}")));
        }
        if self.theta_b.abs() >= FRAC_PI_8 {
            return Err(Error::RotationOutOfRange {
                degrees: self.theta_b.to_degrees(),
            });
        }
        Ok(())
    }
}

fn to_local(x: f64, y: f64, ox: f64, oy: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    let (dx, dy) = (x - ox, y - oy);
    (dx * c + dy * s, -dx * s + dy * c)
}

/// Picks the outermost point of each `delta_s`-wide stripe on `side`.
///
/// Stripes start at the smallest coordinate along the side, so the selection
/// moves with the point cloud. Ties go to the smaller `x`, then smaller `y`.
/// The result is ordered by stripe.
pub fn marginal_points(points: &[BraillePoint], side: Side, delta_s: f64) -> Result<Vec<BraillePoint>> {
    if points.is_empty() {
        return Err(Error::TooFewPoints("no points for marginal selection".into()));
    }
    if !(delta_s > 0.0) {
        return Err(Error::Config(format!("stripe width must be positive, got {delta_s}")));
    }
    let origin = points
        .iter()
        .map(|p| side.split(p).0)
        .fold(f64::INFINITY, f64::min);

    let mut stripes: std::collections::BTreeMap<i64, BraillePoint> = Default::default();
    for p in points {
        let (along, across) = side.split(p);
        let key = ((along - origin) / delta_s).floor() as i64;
        stripes
            .entry(key)
            .and_modify(|best| {
                let best_across = side.split(best).1;
                let better = side.more_extreme(across, best_across)
                    || (across == best_across && (p.x, p.y) < (best.x, best.y));
                if better {
                    *best = *p;
                }
            })
            .or_insert(*p);
    }
    Ok(stripes.into_values().collect())
}

/// Fits the thick line (width `delta_s`) through the most marginal points.
///
/// Every pair of points proposes a candidate; the one with the most points
/// within `delta_s / 2` wins, ties going to the smaller squared error. The
/// winner is refined by least squares over its supporters.
pub fn fit_margin_line(marginals: &[BraillePoint], side: Side, delta_s: f64) -> Result<MarginLine> {
    let pts: Vec<(f64, f64)> = marginals.iter().map(|p| side.split(p)).collect();
    let line = |slope: f64, intercept: f64, support: usize| MarginLine {
        side,
        slope,
        intercept,
        thickness: delta_s,
        support,
    };
    match pts.len() {
        0 => return Err(Error::TooFewPoints(format!("no {} marginal points", side.name()))),
        1 => return Ok(line(0.0, pts[0].1, 1)),
        _ => {}
    }

    let half = delta_s / 2.0;
    let max_slope = FRAC_PI_8.tan();
    let evaluate = |slope: f64, intercept: f64| {
        let norm = (1.0 + slope * slope).sqrt();
        let mut support = 0usize;
        let mut sse = 0.0;
        for &(a, b) in &pts {
            let d = (b - slope * a - intercept).abs() / norm;
            if d <= half {
                support += 1;
                sse += d * d;
            }
        }
        (support, sse)
    };

    let mut candidates = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let (da, db) = (pts[j].0 - pts[i].0, pts[j].1 - pts[i].1);
            if da.abs() < 1e-9 {
                continue;
            }
            let slope = db / da;
            if slope.abs() < max_slope {
                candidates.push((slope, pts[i].1 - slope * pts[i].0));
            }
        }
    }
    if candidates.is_empty() {
        // every pair was vertical or too steep: fall back to level lines
        candidates.extend(pts.iter().map(|&(_, b)| (0.0, b)));
    }
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for (slope, intercept) in candidates {
        let (support, sse) = evaluate(slope, intercept);
        let better = match best {
            None => true,
            Some((s, e, _, _)) => support > s || (support == s && sse < e),
        };
        if better {
            best = Some((support, sse, slope, intercept));
        }
    }
    let (_, _, slope, intercept) = best.expect("at least one candidate");

    let norm = (1.0 + slope * slope).sqrt();
    let supporters: Vec<(f64, f64)> = pts
        .iter()
        .copied()
        .filter(|&(a, b)| (b - slope * a - intercept).abs() / norm <= half)
        .collect();
    let (slope, intercept) = least_squares_line(&supporters).unwrap_or((slope, intercept));
    Ok(line(slope, intercept, supporters.len()))
}

/// Ordinary least squares `b = slope * a + intercept`; `None` when the
/// abscissae do not vary.
fn least_squares_line(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let ma = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let saa: f64 = pts.iter().map(|p| (p.0 - ma).powi(2)).sum();
    if saa < 1e-9 {
        return None;
    }
    let sab: f64 = pts.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum();
    let slope = sab / saa;
    Some((slope, mb - slope * ma))
}

/// Start point of writing (upper x left margin intersection) and writing
/// rotation (mean rotation angle of the four margin lines).
pub fn structure_origin_and_rotation(
    upper: &MarginLine,
    lower: &MarginLine,
    left: &MarginLine,
    right: &MarginLine,
) -> Result<((f64, f64), f64)> {
    let p0 = upper.intersect(left).ok_or(Error::ParallelMargins)?;
    let theta = (upper.angle() + lower.angle() + left.angle() + right.angle()) / 4.0;
    Ok((p0, theta))
}

/// Frequencies of peer distances, indexed by distance in whole pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyVector(pub Vec<f64>);

impl FrequencyVector {
    pub fn from_distances(distances: &[f64]) -> Self {
        let len = distances
            .iter()
            .map(|d| d.round().max(0.0) as usize + 1)
            .max()
            .unwrap_or(0);
        let mut counts = vec![0.0; len];
        for d in distances {
            counts[d.round().max(0.0) as usize] += 1.0;
        }
        FrequencyVector(counts)
    }

    pub fn counts(&self) -> &[f64] {
        &self.0
    }
}

/// Consecutive gaps between sorted coordinates. Coordinates closer than
/// `merge_within` to the running group are averaged into one position first,
/// so a dot column split across two stripes counts once.
pub fn peer_distances(coords: &[f64], merge_within: f64) -> Vec<f64> {
    let mut sorted = coords.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for c in sorted {
        match groups.last_mut() {
            Some((sum, n)) if c - *sum / *n as f64 <= merge_within => {
                *sum += c;
                *n += 1;
            }
            _ => groups.push((c, 1)),
        }
    }
    groups
        .windows(2)
        .map(|w| w[1].0 / w[1].1 as f64 - w[0].0 / w[0].1 as f64)
        .collect()
}

/// Frequency vector of adjacent marginal-point distances along `axis`.
pub fn peer_distance_histogram(marginals: &[BraillePoint], axis: Axis) -> Result<FrequencyVector> {
    if marginals.len() < 2 {
        return Err(Error::TooFewPoints("peer distances need two marginal points".into()));
    }
    let coords: Vec<f64> = marginals
        .iter()
        .map(|p| match axis {
            Axis::Horizontal => p.x,
            Axis::Vertical => p.y,
        })
        .collect();
    Ok(FrequencyVector::from_distances(&peer_distances(&coords, 0.0)))
}

/// Centred `n`-point running mean; near the ends the window shrinks to the
/// entries available.
pub fn running_mean(freq: &FrequencyVector, n: usize) -> FrequencyVector {
    assert!(n % 2 == 1, "running mean window must be odd");
    let half = n / 2;
    let f = &freq.0;
    let smoothed = (0..f.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(f.len());
            f[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    FrequencyVector(smoothed)
}

/// A local maximum of a smoothed frequency vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    /// Centre of the (possibly flat) maximum, in pixels.
    pub position: f64,
    /// Discrete second derivative across the maximum; more negative is sharper.
    pub curvature: f64,
}

/// All local maxima, sharpest first. Values outside the vector count as 0,
/// and a flat top is one peak whose curvature spans the plateau.
pub fn find_peaks(smoothed: &FrequencyVector) -> Vec<Peak> {
    let f = &smoothed.0;
    let at = |i: isize| if i < 0 || i as usize >= f.len() { 0.0 } else { f[i as usize] };
    let mut peaks = Vec::new();
    let mut i = 0usize;
    while i < f.len() {
        let mut end = i;
        while end + 1 < f.len() && f[end + 1] == f[i] {
            end += 1;
        }
        let (before, after) = (at(i as isize - 1), at(end as isize + 1));
        if f[i] > 0.0 && before < f[i] && after < f[i] {
            peaks.push(Peak {
                position: (i + end) as f64 / 2.0,
                curvature: before - f[i] - f[end] + after,
            });
        }
        i = end + 1;
    }
    peaks.sort_by(|a, b| {
        a.curvature
            .total_cmp(&b.curvature)
            .then(a.position.total_cmp(&b.position))
    });
    peaks
}

/// The two sharpest peaks as `(small, large)`.
pub fn extract_two_pitches(smoothed: &FrequencyVector) -> Result<(f64, f64)> {
    let peaks = find_peaks(smoothed);
    if peaks.len() < 2 {
        return Err(Error::PitchExtraction {
            dominant: peaks.first().map(|p| p.position),
        });
    }
    let (a, b) = (peaks[0].position, peaks[1].position);
    Ok((a.min(b), a.max(b)))
}

/// Characters per line: `n_L = (W_T + d_c) / (w_c + d_c)`, rounded, at least 1.
pub fn chars_per_line(text_width: f64, char_width: f64, char_gap: f64) -> usize {
    ((text_width + char_gap) / (char_width + char_gap)).round().max(1.0) as usize
}

/// Number of lines: `L_T = (H_T + d_L) / (h_c + d_L)`, rounded, at least 1.
pub fn line_count(text_height: f64, char_height: f64, line_gap: f64) -> usize {
    ((text_height + line_gap) / (char_height + line_gap)).round().max(1.0) as usize
}

/// Running-mean window used on peer-distance frequencies.
pub const RUNNING_MEAN_WINDOW: usize = 3;

/// Dot pitch assumed when a page offers no peer distances at all, as a
/// multiple of the standard dot diameter (standard Braille: about 2.5 mm
/// pitch for 1.5 mm dots).
pub const PITCH_PER_DIAMETER: f64 = 1.7;

/// Gap between cells assumed when only the dot pitch is observable, as a
/// multiple of that pitch (standard Braille: 6 mm cell advance).
pub const GAP_PER_PITCH: f64 = 1.4;

/// Gap between a cell's bottom row and the next line's top row, as a
/// multiple of the dot pitch (standard Braille: 10 mm line advance).
pub const LINE_GAP_PER_PITCH: f64 = 2.0;

/// Pitches recovered along one axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pitches {
    Two { small: f64, large: f64 },
    One(f64),
    None,
}

/// Everything [`estimate_structure_detailed`] computed on the way.
#[derive(Clone, Debug)]
pub struct StructureEstimate {
    pub structure: BrailleStructure,
    pub margins: [MarginLine; 4],
    /// Start point straight from the margin-line intersection.
    pub raw_origin: (f64, f64),
    /// Mean angle of the four margin lines, before refinement.
    pub margin_theta: f64,
    /// Raw peer-distance peaks, horizontal then vertical.
    pub horizontal_pitches: Pitches,
    pub vertical_pitches: Pitches,
    /// Weaker peaks beyond the two used, per axis.
    pub extra_peaks: Vec<(Axis, f64)>,
    /// Margin-to-margin text width and height before lattice snapping.
    pub raw_text_width: f64,
    pub raw_text_height: f64,
    pub warnings: Vec<String>,
}

impl StructureEstimate {
    pub fn margin(&self, side: Side) -> &MarginLine {
        &self.margins[Side::ALL.iter().position(|&s| s == side).expect("side")]
    }
}

pub fn estimate_structure(points: &[BraillePoint], delta_s: f64) -> Result<BrailleStructure> {
    estimate_structure_detailed(points, delta_s).map(|e| e.structure)
}

/// Full structure recovery; see the module docs for the outline.
///
/// After the margin lines and pitches are known, the origin and pitches are
/// tightened by fitting the dot lattice (two dot columns per cell, three dot
/// rows per line) to every point, and the far margins are snapped onto that
/// lattice before the character and line counts are evaluated.
pub fn estimate_structure_detailed(points: &[BraillePoint], delta_s: f64) -> Result<StructureEstimate> {
    if points.is_empty() {
        return Err(Error::TooFewPoints("no braille points".into()));
    }
    let mut margins = Vec::with_capacity(4);
    for side in Side::ALL {
        let marginal = marginal_points(points, side, delta_s)?;
        margins.push(fit_margin_line(&marginal, side, delta_s)?);
    }
    let margins: [MarginLine; 4] = margins.try_into().expect("four sides");
    let [upper, lower, left, right] = margins;
    let (raw_origin, margin_theta) = structure_origin_and_rotation(&upper, &lower, &left, &right)?;
    if margin_theta.abs() >= FRAC_PI_8 {
        return Err(Error::RotationOutOfRange {
            degrees: margin_theta.to_degrees(),
        });
    }
    // a sparse side can skew its margin line, so the search also starts
    // from each line's own angle and from upright
    let mut centres = vec![margin_theta, 0.0];
    centres.extend([upper, lower, left, right].iter().map(MarginLine::angle));
    let theta = refine_rotation_around(points, &centres, delta_s);

    let local: Vec<BraillePoint> = points
        .iter()
        .map(|p| {
            let (u, v) = to_local(p.x, p.y, raw_origin.0, raw_origin.1, theta);
            BraillePoint::new(u, v, p.diameter)
        })
        .collect();

    let mut warnings = Vec::new();
    let mut extra_peaks = Vec::new();
    let merge = delta_s / 2.0;
    let top: Vec<f64> = marginal_points(&local, Side::Upper, delta_s)?
        .iter()
        .map(|p| p.x)
        .collect();
    let side: Vec<f64> = marginal_points(&local, Side::Left, delta_s)?
        .iter()
        .map(|p| p.y)
        .collect();
    let horizontal = axis_pitches(&peer_distances(&top, merge), Axis::Horizontal, delta_s, &mut extra_peaks);
    let vertical = axis_pitches(&peer_distances(&side, merge), Axis::Vertical, delta_s, &mut extra_peaks);
    let (pitch_x, gap_x, pitch_y, gap_y) =
        resolve_pitches(horizontal, vertical, delta_s, &mut warnings);
    let period_x = reduce_period(pitch_x + gap_x, pitch_x, pitch_x, "cell", &mut warnings);
    let period_y = reduce_period(2.0 * pitch_y + gap_y, 2.0 * pitch_y, pitch_y, "line", &mut warnings);

    // far corners of the margin frame, in the local frame
    let corner = |a: &MarginLine, b: &MarginLine| {
        a.intersect(b)
            .map(|(x, y)| to_local(x, y, raw_origin.0, raw_origin.1, theta))
            .ok_or(Error::ParallelMargins)
    };
    let right_edge = corner(&upper, &right)?.0;
    let bottom_edge = corner(&left, &lower)?.1;

    let us: Vec<f64> = local.iter().map(|p| p.x).collect();
    let vs: Vec<f64> = local.iter().map(|p| p.y).collect();
    // both axes share one dot pitch in standard Braille, so each axis also
    // tries the pitch measured on the other
    let other_pitch = |own: f64, other: f64| {
        if (own - other).abs() > delta_s / 2.0 {
            vec![own, other]
        } else {
            vec![own]
        }
    };
    let peaks_on = |axis: Axis, pitches: Pitches| -> Vec<f64> {
        let mut peaks: Vec<f64> = extra_peaks.iter().filter(|e| e.0 == axis).map(|e| e.1).collect();
        match pitches {
            Pitches::Two { small, large } => peaks.extend([small, large]),
            Pitches::One(d) => peaks.push(d),
            Pitches::None => {}
        }
        peaks
    };
    let cols = choose_lattice(
        &us,
        LatticeAxis {
            dots: 2,
            prior_gap_per_pitch: GAP_PER_PITCH,
            what: "cell",
        },
        &other_pitch(pitch_x, pitch_y),
        period_x,
        &peaks_on(Axis::Horizontal, horizontal),
        delta_s,
        &mut warnings,
    );
    let rows = choose_lattice(
        &vs,
        LatticeAxis {
            dots: 3,
            prior_gap_per_pitch: LINE_GAP_PER_PITCH,
            what: "line",
        },
        &other_pitch(pitch_y, pitch_x),
        period_y,
        &peaks_on(Axis::Vertical, vertical),
        delta_s,
        &mut warnings,
    );

    // the frame spans the lattice-aligned points; margin lines can sit on an
    // inner row when the outer one is sparse, or lean off a skewed fit
    let (first_col, last_col) = cols
        .aligned_span(&us, delta_s)
        .unwrap_or_else(|| (cols.cell_index(0.0, delta_s), cols.cell_index(right_edge, delta_s)));
    let (first_row, last_row) = rows
        .aligned_span(&vs, delta_s)
        .unwrap_or_else(|| (rows.cell_index(0.0, delta_s), rows.cell_index(bottom_edge, delta_s)));
    let (last_col, last_row) = (last_col.max(first_col), last_row.max(first_row));

    let char_width = cols.pitch;
    let char_gap = (cols.period - cols.pitch).max(0.0);
    let char_height = 2.0 * rows.pitch;
    let line_gap = (rows.period - char_height).max(0.0);
    let text_width = (last_col - first_col) as f64 * cols.period + char_width;
    let text_height = (last_row - first_row) as f64 * rows.period + char_height;

    let origin_u = cols.offset + first_col as f64 * cols.period;
    let origin_v = rows.offset + first_row as f64 * rows.period;
    let (s, c) = theta.sin_cos();
    let structure = BrailleStructure {
        p0_x: raw_origin.0 + origin_u * c - origin_v * s,
        p0_y: raw_origin.1 + origin_u * s + origin_v * c,
        theta_b: theta,
        char_width,
        char_height,
        char_gap,
        line_gap,
        chars_per_line: chars_per_line(text_width, char_width, char_gap),
        line_count: line_count(text_height, char_height, line_gap),
        delta_s,
    };
    structure.validate()?;
    Ok(StructureEstimate {
        structure,
        margins,
        raw_origin,
        margin_theta,
        horizontal_pitches: horizontal,
        vertical_pitches: vertical,
        extra_peaks,
        raw_text_width: right_edge,
        raw_text_height: bottom_edge,
        warnings,
    })
}

/// Half-width of the window searched around the margin-line rotation.
pub const ROTATION_SEARCH_DEGREES: f64 = 4.0;

/// Fewest points for which the projection refinement is attempted.
const MIN_POINTS_FOR_REFINEMENT: usize = 8;

/// Sharpness of the point projections onto both writing axes at `theta`:
/// rows and columns of dots pile up in few bins when the angle is right.
fn alignment_score(points: &[BraillePoint], theta: f64, bin: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let mut score = 0.0;
    for phase in [0.0, 0.5] {
        let mut rows: std::collections::HashMap<i64, f64> = Default::default();
        let mut cols: std::collections::HashMap<i64, f64> = Default::default();
        for p in points {
            let u = p.x * c + p.y * s;
            let v = -p.x * s + p.y * c;
            *cols.entry((u / bin + phase).floor() as i64).or_default() += 1.0;
            *rows.entry((v / bin + phase).floor() as i64).or_default() += 1.0;
        }
        score += rows.values().chain(cols.values()).map(|n| n * n).sum::<f64>();
    }
    score
}

/// Tightens the margin-line rotation by maximizing [`alignment_score`] in a
/// window around it, coarse steps first, then fine ones. Ties keep the angle
/// closest to `theta0`.
pub fn refine_rotation(points: &[BraillePoint], theta0: f64, delta_s: f64) -> f64 {
    refine_rotation_around(points, &[theta0], delta_s)
}

/// [`refine_rotation`] over the union of windows around several starting
/// angles. Ties go to the earlier window, then to the angle closest to its
/// centre.
fn refine_rotation_around(points: &[BraillePoint], centres: &[f64], delta_s: f64) -> f64 {
    let theta0 = centres.first().copied().unwrap_or(0.0);
    if points.len() < MIN_POINTS_FOR_REFINEMENT || !(delta_s > 0.0) {
        return theta0;
    }
    let bin = delta_s / 4.0;
    let limit = FRAC_PI_8 - 1e-6;
    let search = |centre: f64, half: f64, step: f64| {
        let centre = centre.clamp(-limit, limit);
        let n = (half / step).round() as i64;
        let mut best = (alignment_score(points, centre, bin), centre);
        for i in 1..=n {
            for sign in [-1.0, 1.0] {
                let t = (centre + sign * i as f64 * step).clamp(-limit, limit);
                let score = alignment_score(points, t, bin);
                if score > best.0 {
                    best = (score, t);
                }
            }
        }
        best
    };
    let mut coarse = (f64::NEG_INFINITY, theta0);
    for &centre in centres {
        let found = search(centre, ROTATION_SEARCH_DEGREES.to_radians(), 0.1f64.to_radians());
        if found.0 > coarse.0 {
            coarse = found;
        }
    }
    search(coarse.1, 0.1f64.to_radians(), 0.01f64.to_radians()).1
}

/// Peaks of the smoothed peer-distance distribution, each refined to the
/// mean of the raw distances that fall under it.
fn axis_pitches(distances: &[f64], axis: Axis, delta_s: f64, extra: &mut Vec<(Axis, f64)>) -> Pitches {
    if distances.is_empty() {
        return Pitches::None;
    }
    let smoothed = running_mean(&FrequencyVector::from_distances(distances), RUNNING_MEAN_WINDOW);
    // positional noise can split one cluster into neighbouring maxima; the
    // sharper one stands for the cluster
    let mut kept: Vec<f64> = Vec::new();
    for peak in find_peaks(&smoothed) {
        if kept.iter().all(|k| (k - peak.position).abs() > delta_s / 2.0) {
            kept.push(peak.position);
        }
    }
    let reach = (delta_s / 4.0).max(2.0);
    let refine = |centre: f64| {
        let near: Vec<f64> = distances
            .iter()
            .copied()
            .filter(|d| (d - centre).abs() <= reach)
            .collect();
        if near.is_empty() {
            centre
        } else {
            near.iter().sum::<f64>() / near.len() as f64
        }
    };
    extra.extend(kept.iter().skip(2).map(|&p| (axis, p)));
    match kept.as_slice() {
        [] => Pitches::None,
        [one] => Pitches::One(refine(*one)),
        [a, b, ..] => Pitches::Two {
            small: refine(a.min(*b)),
            large: refine(a.max(*b)),
        },
    }
}

/// Turns per-axis peaks into `(pitch_x, gap_x, pitch_y, gap_y)`, where the
/// vertical gap is measured from a cell's bottom row to the next line's top
/// row. Dot pitch is shared by both axes in standard Braille, which lets a
/// page with too few distances on one axis borrow from the other.
fn resolve_pitches(
    horizontal: Pitches,
    vertical: Pitches,
    delta_s: f64,
    warnings: &mut Vec<String>,
) -> (f64, f64, f64, f64) {
    let close = |a: f64, b: f64| (a - b).abs() <= 0.25 * b;
    let hint = match (horizontal, vertical) {
        (Pitches::Two { small, .. }, _) => Some(small),
        (_, Pitches::Two { small, .. }) => Some(small),
        _ => None,
    };

    let (pitch_x, gap_x) = match horizontal {
        Pitches::Two { small, large } => (small, Some(large)),
        Pitches::One(d) => match hint {
            Some(p) if !close(d, p) && d > p => (p, Some(d - p)),
            _ => (d, None),
        },
        Pitches::None => (
            hint.unwrap_or(PITCH_PER_DIAMETER * delta_s),
            None,
        ),
    };
    let (pitch_y, gap_y) = match vertical {
        Pitches::Two { small, large } => (small, Some(large)),
        Pitches::One(d) if close(d, pitch_x) => (d, None),
        Pitches::One(d) if close(d, 2.0 * pitch_x) => (d / 2.0, None),
        Pitches::One(d) if d > 2.0 * pitch_x => (pitch_x, Some(d - 2.0 * pitch_x)),
        Pitches::One(d) => (d, None),
        Pitches::None => (pitch_x, None),
    };
    let gap_x = gap_x.unwrap_or_else(|| {
        warnings.push("cell gap not observable; using the default ratio".into());
        GAP_PER_PITCH * pitch_x
    });
    let gap_y = gap_y.unwrap_or_else(|| {
        warnings.push("line gap not observable; using the default ratio".into());
        LINE_GAP_PER_PITCH * pitch_y
    });
    if !matches!(horizontal, Pitches::Two { .. }) || !matches!(vertical, Pitches::Two { .. }) {
        warnings.push(format!(
            "pitch extraction incomplete (horizontal {horizontal:?}, vertical {vertical:?})"
        ));
    }
    (pitch_x, gap_x, pitch_y, gap_y)
}

/// Largest number of blank cells (or lines) a single peer distance is
/// assumed to skip.
const MAX_SKIPPED: usize = 8;

/// A peer distance that jumps over blank cells is a multiple of the true
/// advance. Returns the smallest `period / n` whose gap (period minus the
/// dot span) is still at least `min_gap`.
fn reduce_period(period: f64, span: f64, min_gap: f64, what: &str, warnings: &mut Vec<String>) -> f64 {
    for n in (2..=MAX_SKIPPED).rev() {
        let candidate = period / n as f64;
        if candidate - span >= min_gap {
            warnings.push(format!(
                "{what} advance {period:.1} read as {n} x {candidate:.1}"
            ));
            return candidate;
        }
    }
    period
}

/// Shape of the cells along one axis, for [`choose_lattice`].
struct LatticeAxis {
    dots: usize,
    /// Gap assumed by standard proportions, per pitch.
    prior_gap_per_pitch: f64,
    what: &'static str,
}

impl LatticeAxis {
    /// Extent of a cell's dots: one pitch across, two down.
    fn span(&self, pitch: f64) -> f64 {
        (self.dots - 1) as f64 * pitch
    }
}

/// Picks pitch and cell period along one axis.
///
/// Sparse pages hide some peer distances, so a peak may be the pitch, the
/// gap, the whole advance, or a multiple of it when blank cells intervene.
/// Every reading whose gap is at least one pitch is fitted, for each pitch
/// hypothesis; among the lattices that fit about as well as the best one,
/// the gap nearest standard proportions wins.
fn choose_lattice(
    coords: &[f64],
    axis: LatticeAxis,
    pitches: &[f64],
    primary: f64,
    peaks: &[f64],
    delta_s: f64,
    warnings: &mut Vec<String>,
) -> Lattice {
    let mut candidates: Vec<(f64, f64)> = vec![(pitches[0], primary)];
    for &pitch in pitches {
        let span = axis.span(pitch);
        let mut bases = Vec::new();
        for &d in peaks.iter().filter(|&&d| d > pitch + delta_s / 2.0) {
            bases.push(span + d);
            bases.push(d);
        }
        for b in bases {
            for n in 1..=MAX_SKIPPED {
                let c = b / n as f64;
                let seen = candidates
                    .iter()
                    .any(|&(p, k)| (p - pitch).abs() <= 1.0 && (k - c).abs() <= 1.0);
                if c - span >= pitch && !seen {
                    candidates.push((pitch, c));
                }
            }
        }
    }

    let cap = delta_s / 2.0;
    let fitted: Vec<(Lattice, f64)> = candidates
        .iter()
        .map(|&(pitch, period)| {
            let l = fit_lattice(coords, pitch, period, axis.dots, delta_s);
            let cost = l.cost(coords, cap);
            (l, cost)
        })
        .collect();
    let best_cost = fitted.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    let prior_miss = |l: &Lattice| ((l.period - axis.span(l.pitch)) / l.pitch - axis.prior_gap_per_pitch).abs();
    let chosen = fitted
        .iter()
        .filter(|f| f.1 <= best_cost + cap * cap / 2.0)
        .min_by(|a, b| prior_miss(&a.0).total_cmp(&prior_miss(&b.0)))
        .map(|f| f.0)
        .expect("the best candidate always qualifies");
    if (chosen.pitch - pitches[0]).abs() > delta_s / 2.0 {
        warnings.push(format!(
            "{} pitch read as {:.1}, not {:.1}",
            axis.what, chosen.pitch, pitches[0]
        ));
    }
    if (chosen.period - primary).abs() > delta_s / 2.0 {
        warnings.push(format!(
            "{} advance read as {:.1}, not {primary:.1}",
            axis.what, chosen.period
        ));
    }
    chosen
}

/// A one-dimensional dot lattice: positions `offset + k * period + j * pitch`
/// for `j < dots`.
#[derive(Clone, Copy, Debug)]
struct Lattice {
    offset: f64,
    pitch: f64,
    period: f64,
    dots: usize,
}

impl Lattice {
    /// Index of the cell whose dots lie around `coord`.
    fn cell_index(&self, coord: f64, delta_s: f64) -> i64 {
        ((coord + delta_s / 2.0 - self.offset) / self.period).floor() as i64
    }

    /// Smallest and largest cell index among points within `delta_s / 2`
    /// of a lattice slot.
    fn aligned_span(&self, coords: &[f64], delta_s: f64) -> Option<(i64, i64)> {
        coords
            .iter()
            .map(|&c| self.assign(c))
            .filter(|a| a.2.abs() <= delta_s / 2.0)
            .fold(None, |span, (k, _, _)| match span {
                None => Some((k, k)),
                Some((lo, hi)) => Some((lo.min(k), hi.max(k))),
            })
    }

    /// Nearest lattice slot `(k, j)` and the residual to it.
    fn assign(&self, coord: f64) -> (i64, usize, f64) {
        let mut best = (0, 0, f64::INFINITY);
        for j in 0..self.dots {
            let t = coord - self.offset - j as f64 * self.pitch;
            let k = (t / self.period).round();
            let r = t - k * self.period;
            if r.abs() < best.2.abs() {
                best = (k as i64, j, r);
            }
        }
        best
    }

    fn cost(&self, coords: &[f64], cap: f64) -> f64 {
        coords
            .iter()
            .map(|&c| self.assign(c).2.powi(2).min(cap * cap))
            .sum()
    }
}

/// Fits lattice phase by grid search, then offset, pitch and period jointly
/// by least squares over the points within `delta_s / 2` of their slot.
fn fit_lattice(coords: &[f64], pitch: f64, period: f64, dots: usize, delta_s: f64) -> Lattice {
    let cap = delta_s / 2.0;
    let mut lattice = Lattice {
        offset: 0.0,
        pitch,
        period,
        dots,
    };
    let steps = (period / 0.25).ceil().max(1.0) as usize;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..steps {
        // search outward from zero so ties keep the margin-line origin
        let magnitude = (i.div_ceil(2)) as f64 * 0.25;
        let offset = if i % 2 == 1 { magnitude } else { -magnitude };
        let cost = Lattice { offset, ..lattice }.cost(coords, cap);
        if cost < best.0 - 1e-9 {
            best = (cost, offset);
        }
    }
    lattice.offset = best.1;

    for _ in 0..3 {
        let rows: Vec<(f64, f64, f64)> = coords
            .iter()
            .filter_map(|&c| {
                let (k, j, r) = lattice.assign(c);
                (r.abs() <= cap).then_some((k as f64, j as f64, c))
            })
            .collect();
        if let Some((offset, period, pitch)) = solve_lattice(&rows, &lattice) {
            lattice.offset = offset;
            lattice.period = period;
            lattice.pitch = pitch;
        } else {
            break;
        }
    }
    lattice
}

/// Least squares for `c = offset + k * period + j * pitch`. Parameters the
/// data cannot identify (all `k` equal, or all `j` equal) keep their value.
fn solve_lattice(rows: &[(f64, f64, f64)], current: &Lattice) -> Option<(f64, f64, f64)> {
    if rows.is_empty() {
        return None;
    }
    let varies = |f: fn(&(f64, f64, f64)) -> f64| {
        let first = f(&rows[0]);
        rows.iter().any(|r| f(r) != first)
    };
    let fit_period = varies(|r| r.0);
    let fit_pitch = varies(|r| r.1);

    // columns: [1, k?, j?]; fixed parameters move to the right-hand side
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    let n = 1 + fit_period as usize + fit_pitch as usize;
    for &(k, j, c) in rows {
        let mut row = vec![1.0];
        let mut rhs = c;
        if fit_period {
            row.push(k);
        } else {
            rhs -= k * current.period;
        }
        if fit_pitch {
            row.push(j);
        } else {
            rhs -= j * current.pitch;
        }
        for a in 0..n {
            for b in 0..n {
                ata[a][b] += row[a] * row[b];
            }
            atb[a] += row[a] * rhs;
        }
    }
    let x = solve_small(&mut ata, &mut atb, n)?;
    let mut it = x.into_iter();
    let offset = it.next()?;
    let period = if fit_period { it.next()? } else { current.period };
    let pitch = if fit_pitch { it.next()? } else { current.pitch };
    // reject fits that collapse the lattice
    if period <= 0.0 || pitch <= 0.0 || pitch * (current.dots - 1) as f64 >= period {
        return None;
    }
    Some((offset, period, pitch))
}

/// Gaussian elimination with partial pivoting on the leading `n x n` block.
fn solve_small(a: &mut [[f64; 3]; 3], b: &mut [f64; 3], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64) -> BraillePoint {
        BraillePoint::new(x, y, 10.0)
    }

    /// Ideal dot centres of a fully populated page.
    fn lattice_page(
        cells: usize,
        lines: usize,
        pitch: f64,
        advance: f64,
        line_advance: f64,
        angle: f64,
        origin: (f64, f64),
    ) -> Vec<BraillePoint> {
        let (s, c) = angle.sin_cos();
        let mut out = vec![];
        for l in 0..lines {
            for k in 0..cells {
                for col in 0..2 {
                    for row in 0..3 {
                        let u = k as f64 * advance + col as f64 * pitch;
                        let v = l as f64 * line_advance + row as f64 * pitch;
                        out.push(pt(origin.0 + u * c - v * s, origin.1 + u * s + v * c));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn marginal_single_point() {
        for side in Side::ALL {
            let got = marginal_points(&[pt(3.0, 4.0)], side, 10.0).unwrap();
            assert_eq!(got, vec![pt(3.0, 4.0)]);
        }
    }

    #[test]
    fn marginal_keeps_uppermost_in_stripe() {
        let got = marginal_points(&[pt(5.0, 40.0), pt(7.0, 10.0)], Side::Upper, 10.0).unwrap();
        assert_eq!(got, vec![pt(7.0, 10.0)]);
        let got = marginal_points(&[pt(5.0, 40.0), pt(7.0, 10.0)], Side::Lower, 10.0).unwrap();
        assert_eq!(got, vec![pt(5.0, 40.0)]);
    }

    #[test]
    fn marginal_ties_prefer_smaller_x() {
        let got = marginal_points(&[pt(8.0, 10.0), pt(2.0, 10.0)], Side::Upper, 10.0).unwrap();
        assert_eq!(got, vec![pt(2.0, 10.0)]);
    }

    #[test]
    fn marginal_empty_is_error() {
        assert!(marginal_points(&[], Side::Left, 10.0).is_err());
    }

    #[test]
    fn marginal_top_row_of_grid() {
        // 3 x 4 cells, pitch 20, advance 48, line advance 80
        let page = lattice_page(4, 3, 20.0, 48.0, 80.0, 0.0, (40.0, 40.0));
        let got = marginal_points(&page, Side::Upper, 12.0).unwrap();
        let expect: Vec<BraillePoint> = (0..4)
            .flat_map(|k| (0..2).map(move |c| pt(40.0 + k as f64 * 48.0 + c as f64 * 20.0, 40.0)))
            .collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn collinear_points_fit_exactly() {
        let pts: Vec<BraillePoint> = (0..5).map(|i| pt(i as f64 * 10.0, 3.0 + i as f64 * 0.5)).collect();
        let line = fit_margin_line(&pts, Side::Upper, 10.0).unwrap();
        assert_eq!(line.support, 5);
        assert!((line.slope - 0.05).abs() < 1e-12);
        assert!((line.intercept - 3.0).abs() < 1e-9);
    }

    /// Exhaustive oracle: the pair line with the most points in the band.
    fn best_pair_support(pts: &[BraillePoint], band: f64) -> usize {
        let mut best = 1;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let (a, b) = (pts[i], pts[j]);
                let slope = (b.y - a.y) / (b.x - a.x);
                let c = a.y - slope * a.x;
                let n = pts
                    .iter()
                    .filter(|p| (p.y - slope * p.x - c).abs() / (1.0 + slope * slope).sqrt() <= band / 2.0)
                    .count();
                best = best.max(n);
            }
        }
        best
    }

    #[test]
    fn outlier_is_excluded() {
        let delta = 10.0;
        let mut pts: Vec<BraillePoint> = (0..4).map(|i| pt(i as f64 * 20.0, 50.0)).collect();
        pts.push(pt(90.0, 50.0 + 3.0 * delta));
        let line = fit_margin_line(&pts, Side::Upper, delta).unwrap();
        assert_eq!(line.support, best_pair_support(&pts, delta));
        assert_eq!(line.support, 4);
        assert!(line.slope.abs() < 1e-12);
        assert!((line.intercept - 50.0).abs() < 1e-9);
    }

    #[test]
    fn single_marginal_point_gives_level_line() {
        let line = fit_margin_line(&[pt(4.0, 9.0)], Side::Left, 10.0).unwrap();
        assert_eq!((line.slope, line.intercept, line.support), (0.0, 4.0, 1));
        assert!(fit_margin_line(&[], Side::Left, 10.0).is_err());
    }

    fn level(side: Side, slope: f64, intercept: f64) -> MarginLine {
        MarginLine {
            side,
            slope,
            intercept,
            thickness: 10.0,
            support: 2,
        }
    }

    #[test]
    fn axis_aligned_origin_and_rotation() {
        let (p0, theta) = structure_origin_and_rotation(
            &level(Side::Upper, 0.0, 30.0),
            &level(Side::Lower, 0.0, 300.0),
            &level(Side::Left, 0.0, 20.0),
            &level(Side::Right, 0.0, 400.0),
        )
        .unwrap();
        assert_eq!(p0, (20.0, 30.0));
        assert_eq!(theta, 0.0);
    }

    #[test]
    fn equal_rotation_on_all_sides() {
        let phi = 0.03f64;
        let (p0, theta) = structure_origin_and_rotation(
            &level(Side::Upper, phi.tan(), 30.0),
            &level(Side::Lower, phi.tan(), 300.0),
            &level(Side::Left, -phi.tan(), 20.0),
            &level(Side::Right, -phi.tan(), 400.0),
        )
        .unwrap();
        assert!((theta - phi).abs() < 1e-12);
        // P0 lies on both lines
        assert!(level(Side::Upper, phi.tan(), 30.0).distance(p0.0, p0.1) < 1e-9);
        assert!(level(Side::Left, -phi.tan(), 20.0).distance(p0.0, p0.1) < 1e-9);
    }

    #[test]
    fn parallel_upper_and_left_fail() {
        // x = y + 5 and y = x + 3 are parallel (slope product 1)
        let r = structure_origin_and_rotation(
            &level(Side::Upper, 1.0, 3.0),
            &level(Side::Lower, 0.0, 100.0),
            &level(Side::Left, 1.0, 5.0),
            &level(Side::Right, 0.0, 100.0),
        );
        assert!(matches!(r, Err(Error::ParallelMargins)));
    }

    #[test]
    fn peer_distance_counts() {
        let pts = [pt(0.0, 0.0), pt(10.0, 0.0), pt(20.0, 0.0), pt(35.0, 0.0)];
        let f = peer_distance_histogram(&pts, Axis::Horizontal).unwrap();
        assert_eq!(f.0.len(), 16);
        assert_eq!(f.0[10], 2.0);
        assert_eq!(f.0[15], 1.0);
        assert_eq!(f.0.iter().sum::<f64>(), 3.0);

        let two = peer_distance_histogram(&[pt(0.0, 0.0), pt(0.0, 7.0)], Axis::Vertical).unwrap();
        assert_eq!(two.0[7], 1.0);
        assert_eq!(two.0.iter().sum::<f64>(), 1.0);
        assert!(peer_distance_histogram(&[pt(0.0, 0.0)], Axis::Vertical).is_err());
    }

    #[test]
    fn peer_distances_merge_split_columns() {
        let d = peer_distances(&[0.0, 1.0, 20.0, 21.0, 48.0], 6.0);
        assert_eq!(d, vec![20.0, 27.5]);
    }

    #[test]
    fn running_mean_conventions() {
        let f = FrequencyVector(vec![0.0, 3.0, 0.0]);
        assert_eq!(running_mean(&f, 1), f);
        assert_eq!(running_mean(&f, 3).0, vec![1.5, 1.0, 1.5]);
        let flat = FrequencyVector(vec![2.0; 9]);
        assert_eq!(running_mean(&flat, 5), flat);
    }

    #[test]
    fn two_clean_spikes() {
        let mut v = vec![0.0; 30];
        v[10] = 6.0;
        v[24] = 6.0;
        let smoothed = running_mean(&FrequencyVector(v), 3);
        // hand computation: plateaus of 2.0 over 9..=11 and 23..=25, curvature -4
        let peaks = find_peaks(&smoothed);
        assert_eq!(peaks.len(), 2);
        assert!(peaks.iter().all(|p| p.curvature == -4.0));
        assert_eq!(extract_two_pitches(&smoothed).unwrap(), (10.0, 24.0));
    }

    #[test]
    fn sharper_peaks_win() {
        let v = FrequencyVector(vec![0.0, 0.0, 1.0, 0.0, 0.0, 5.0, 0.0, 0.0, 3.0, 0.0]);
        assert_eq!(extract_two_pitches(&v).unwrap(), (5.0, 8.0));
    }

    #[test]
    fn unimodal_fails_with_dominant() {
        let v = FrequencyVector(vec![0.0, 1.0, 3.0, 1.0, 0.0]);
        match extract_two_pitches(&v) {
            Err(Error::PitchExtraction { dominant }) => assert_eq!(dominant, Some(2.0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn count_formulas() {
        assert_eq!(chars_per_line(26.0, 5.0, 2.0), 4);
        assert_eq!(line_count(30.0, 30.0, 12.0), 1);
        assert_eq!(chars_per_line(0.0, 5.0, 0.0), 1);
    }

    #[test]
    fn ideal_page_structure() {
        let page = lattice_page(8, 5, 20.0, 48.0, 80.0, 0.0, (40.0, 40.0));
        let s = estimate_structure(&page, 12.0).unwrap();
        assert_eq!((s.chars_per_line, s.line_count), (8, 5));
        assert!((s.char_width - 20.0).abs() < 1e-6);
        assert!((s.char_gap - 28.0).abs() < 1e-6);
        assert!((s.char_height - 40.0).abs() < 1e-6);
        assert!((s.line_gap - 40.0).abs() < 1e-6);
        assert!((s.p0_x - 40.0).abs() < 1e-6 && (s.p0_y - 40.0).abs() < 1e-6);
        assert!(s.theta_b.abs() < 1e-9);
    }

    #[test]
    fn rotated_page_structure() {
        for deg in [-3.0f64, -1.0, 1.0, 3.0] {
            let page = lattice_page(8, 5, 20.0, 48.0, 80.0, deg.to_radians(), (60.0, 60.0));
            let s = estimate_structure(&page, 12.0).unwrap();
            assert_eq!((s.chars_per_line, s.line_count), (8, 5), "at {deg}");
            assert!((s.theta_b.to_degrees() - deg).abs() < 0.5, "theta {}", s.theta_b.to_degrees());
            assert!((s.p0_x - 60.0).abs() < 1.0 && (s.p0_y - 60.0).abs() < 1.0);
        }
    }

    #[test]
    fn missing_corner_dot_keeps_origin() {
        let mut page = lattice_page(4, 3, 20.0, 48.0, 80.0, 0.0, (40.0, 40.0));
        page.retain(|p| !(p.x == 40.0 && p.y == 40.0));
        let s = estimate_structure(&page, 12.0).unwrap();
        assert!((s.p0_x - 40.0).abs() < 1e-6 && (s.p0_y - 40.0).abs() < 1e-6);
        assert_eq!((s.chars_per_line, s.line_count), (4, 3));
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            estimate_structure(&[], 10.0),
            Err(Error::TooFewPoints(_))
        ));
    }

    proptest! {
        #[test]
        fn translation_moves_origin_only(dx in -200.0f64..200.0, dy in -200.0f64..200.0) {
            let page = lattice_page(5, 3, 20.0, 48.0, 80.0, 0.01, (300.0, 300.0));
            let moved: Vec<BraillePoint> = page.iter().map(|p| pt(p.x + dx, p.y + dy)).collect();
            let a = estimate_structure(&page, 12.0).unwrap();
            let b = estimate_structure(&moved, 12.0).unwrap();
            prop_assert!((b.p0_x - a.p0_x - dx).abs() < 1e-6);
            prop_assert!((b.p0_y - a.p0_y - dy).abs() < 1e-6);
            prop_assert!((a.theta_b - b.theta_b).abs() < 1e-9);
            prop_assert_eq!((a.chars_per_line, a.line_count), (b.chars_per_line, b.line_count));
            prop_assert!((a.char_width - b.char_width).abs() < 1e-6);
            prop_assert!((a.line_gap - b.line_gap).abs() < 1e-6);
        }

        #[test]
        fn pitch_peaks_ignore_uniform_scaling(counts in proptest::collection::vec(0u32..20, 5..60), shift in 0u32..8) {
            // power-of-two factors scale every smoothed value exactly
            let scale = 1u32 << shift;
            let base = FrequencyVector(counts.iter().map(|&c| c as f64).collect());
            let scaled = FrequencyVector(counts.iter().map(|&c| (c * scale) as f64).collect());
            let a = extract_two_pitches(&running_mean(&base, 3)).ok();
            let b = extract_two_pitches(&running_mean(&scaled, 3)).ok();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn wider_band_never_loses_support(
            ys in proptest::collection::vec(0.0f64..40.0, 2..15),
            band in 1.0f64..20.0,
            extra in 0.0f64..20.0,
        ) {
            let pts: Vec<BraillePoint> = ys.iter().enumerate().map(|(i, &y)| pt(i as f64 * 15.0, y)).collect();
            let narrow = fit_margin_line(&pts, Side::Upper, band).unwrap();
            let wide = fit_margin_line(&pts, Side::Upper, band + extra).unwrap();
            prop_assert!(wide.support >= narrow.support);
        }
    }
}
