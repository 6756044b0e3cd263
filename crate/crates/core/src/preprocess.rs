//! Page clean-up ahead of dot detection: brightness preserving bi-histogram
//! equalization, median filtering, Otsu binarization over the lower grey
//! range, and morphological closing to re-join fragmented dots.

use crate::error::{Error, Result};
use crate::image::{BinaryImage, GrayImage};

#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessConfig {
    /// Side of the square median window; odd.
    pub median_window: usize,
    /// Radius of the square closing element; 0 disables closing.
    pub closing_radius: usize,
    /// Share of the intensity range whose histogram feeds Otsu.
    pub otsu_range_fraction: f64,
    /// `None` picks the polarity automatically: the mask is inverted when
    /// more than half of the page would otherwise be foreground.
    pub invert_output: Option<bool>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            median_window: 3,
            closing_radius: 1,
            otsu_range_fraction: 0.5,
            invert_output: None,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.median_window == 0 || self.median_window % 2 == 0 {
            return Err(Error::Config(format!(
                "median window must be odd and positive, got {}",
                self.median_window
            )));
        }
        if !(self.otsu_range_fraction > 0.0 && self.otsu_range_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "otsu range fraction must lie in (0, 1], got {}",
                self.otsu_range_fraction
            )));
        }
        Ok(())
    }

    /// Highest intensity included in the restricted Otsu histogram.
    pub fn lower_range_limit(&self) -> u8 {
        (255.0 * self.otsu_range_fraction).floor().clamp(0.0, 255.0) as u8
    }
}

/// Brightness preserving bi-histogram equalization.
///
/// The image is split at `m = floor(mean)`; pixels `<= m` are equalized onto
/// `[0, m]` and the rest onto `[m + 1, 255]`, each half with its own CDF.
/// A half holding a single distinct value keeps that value.
pub fn bi_histogram_equalize(img: &GrayImage) -> GrayImage {
    let hist = img.histogram();
    let total: u64 = hist.iter().sum();
    let sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    let m = (sum / total) as usize;

    let mut lut = [0u8; 256];
    equalize_range(&hist, 0, m, 0, m, &mut lut);
    if m < 255 {
        equalize_range(&hist, m + 1, 255, m + 1, 255, &mut lut);
    }

    let pixels = img.pixels().iter().map(|&v| lut[v as usize]).collect();
    GrayImage::new(img.width(), img.height(), pixels).expect("same dimensions")
}

/// Fills `lut[lo..=hi]` by mapping the sub-histogram onto `[out_lo, out_hi]`
/// through its cumulative distribution, rounding to nearest. The CDF is
/// normalised from its first occupied bin so the darkest level lands on
/// `out_lo` and the brightest on `out_hi`.
fn equalize_range(
    hist: &[u64; 256],
    lo: usize,
    hi: usize,
    out_lo: usize,
    out_hi: usize,
    lut: &mut [u8; 256],
) {
    let counts = &hist[lo..=hi];
    let n: u64 = counts.iter().sum();
    let distinct = counts.iter().filter(|&&c| c > 0).count();
    if distinct <= 1 {
        for (v, slot) in lut.iter_mut().enumerate().take(hi + 1).skip(lo) {
            *slot = v as u8;
        }
        return;
    }
    let span = (out_hi - out_lo) as u64;
    let first = counts.iter().copied().find(|&c| c > 0).expect("two occupied bins");
    let range = n - first;
    let mut cum = 0u64;
    for (offset, &c) in counts.iter().enumerate() {
        cum += c;
        let above = cum.saturating_sub(first);
        lut[lo + offset] = (out_lo as u64 + (span * above + range / 2) / range) as u8;
    }
}

/// Median over a `window x window` neighbourhood with edge replication.
pub fn median_filter(img: &GrayImage, window: usize) -> GrayImage {
    assert!(window % 2 == 1, "median window must be odd");
    if window == 1 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let half = (window / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    // column indices are shared by every row
    let cols: Vec<Vec<usize>> = (0..w as isize)
        .map(|x| (-half..=half).map(|d| clamp(x + d, w)).collect())
        .collect();

    let mut out = Vec::with_capacity(w * h);
    let mut buf = Vec::with_capacity(window * window);
    for y in 0..h as isize {
        let rows: Vec<&[u8]> = (-half..=half)
            .map(|d| &img.pixels()[clamp(y + d, h) * w..][..w])
            .collect();
        for xs in &cols {
            buf.clear();
            for row in &rows {
                buf.extend(xs.iter().map(|&x| row[x]));
            }
            let mid = buf.len() / 2;
            let (_, median, _) = buf.select_nth_unstable(mid);
            out.push(*median);
        }
    }
    GrayImage::new(w, h, out).expect("same dimensions")
}

/// Otsu's threshold over a 256-bin histogram.
///
/// Pixels `<= t` form class 0. Only thresholds that leave both classes
/// non-empty are scored; the smallest maximiser of the between-class
/// variance wins. A histogram with a single occupied bin returns that bin.
pub fn otsu_threshold(histogram: &[u64; 256]) -> Result<u8> {
    let first = histogram.iter().position(|&c| c > 0).ok_or(Error::EmptyHistogram)?;
    let last = histogram.iter().rposition(|&c| c > 0).expect("non-empty");
    if first == last {
        return Ok(first as u8);
    }

    let total = histogram.iter().sum::<u64>() as f64;
    let mean_total = histogram
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum::<f64>()
        / total;

    let mut best_t = first;
    let mut best_var = f64::NEG_INFINITY;
    let (mut weight0, mut moment0) = (0.0f64, 0.0f64);
    for t in 0..last {
        weight0 += histogram[t] as f64 / total;
        moment0 += t as f64 * histogram[t] as f64 / total;
        if t < first {
            continue;
        }
        let diff = mean_total * weight0 - moment0;
        let var = diff * diff / (weight0 * (1.0 - weight0));
        if var > best_var {
            best_var = var;
            best_t = t;
        }
    }
    Ok(best_t as u8)
}

/// Result of [`binarize_lower_range`].
#[derive(Clone, Debug)]
pub struct Binarization {
    pub image: BinaryImage,
    pub threshold: u8,
    pub inverted: bool,
}

/// Otsu threshold computed from the lower part of the histogram only, since
/// the bright paper dominates the full-range distribution.
pub fn binarize_lower_range(img: &GrayImage, cfg: &PreprocessConfig) -> Result<Binarization> {
    let limit = cfg.lower_range_limit() as usize;
    let full = img.histogram();
    let mut restricted = [0u64; 256];
    restricted[..=limit].copy_from_slice(&full[..=limit]);
    if restricted.iter().all(|&c| c == 0) {
        return Err(Error::NoDotMass);
    }
    let threshold = otsu_threshold(&restricted)?;

    let below: u64 = full[..=threshold as usize].iter().sum();
    let total = (img.width() * img.height()) as u64;
    let inverted = cfg.invert_output.unwrap_or(2 * below > total);
    let pixels = img
        .pixels()
        .iter()
        .map(|&v| (v <= threshold) != inverted)
        .collect();
    Ok(Binarization {
        image: BinaryImage::new(img.width(), img.height(), pixels)?,
        threshold,
        inverted,
    })
}

/// Square dilation; pixels outside the image are background.
pub fn dilate(img: &BinaryImage, radius: usize) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let rows = sweep(img.pixels(), w, h, radius, Axis::Row, Rule::Any);
    let px = sweep(&rows, w, h, radius, Axis::Column, Rule::Any);
    BinaryImage::new(w, h, px).expect("same dimensions")
}

/// Square erosion; pixels outside the image are background.
pub fn erode(img: &BinaryImage, radius: usize) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let rows = sweep(img.pixels(), w, h, radius, Axis::Row, Rule::All);
    let px = sweep(&rows, w, h, radius, Axis::Column, Rule::All);
    BinaryImage::new(w, h, px).expect("same dimensions")
}

/// Dilation followed by erosion with a `(2r + 1)` square.
///
/// The input is zero-padded by `radius` first so that the dilated ring
/// outside the image is available to the erosion; this keeps the operator
/// extensive and idempotent right up to the image border.
pub fn morphological_close(img: &BinaryImage, radius: usize) -> BinaryImage {
    if radius == 0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let (pw, ph) = (w + 2 * radius, h + 2 * radius);
    let mut padded = vec![false; pw * ph];
    for y in 0..h {
        padded[(y + radius) * pw + radius..][..w].copy_from_slice(&img.pixels()[y * w..][..w]);
    }
    let grown = sweep(&padded, pw, ph, radius, Axis::Row, Rule::Any);
    let grown = sweep(&grown, pw, ph, radius, Axis::Column, Rule::Any);
    let shrunk = sweep(&grown, pw, ph, radius, Axis::Row, Rule::All);
    let shrunk = sweep(&shrunk, pw, ph, radius, Axis::Column, Rule::All);

    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        out.extend_from_slice(&shrunk[(y + radius) * pw + radius..][..w]);
    }
    BinaryImage::new(w, h, out).expect("same dimensions")
}

#[derive(Clone, Copy)]
enum Axis {
    Row,
    Column,
}

#[derive(Clone, Copy)]
enum Rule {
    Any,
    All,
}

/// One-dimensional running window over rows or columns, counting set pixels.
fn sweep(src: &[bool], w: usize, h: usize, radius: usize, axis: Axis, rule: Rule) -> Vec<bool> {
    let (len, lines) = match axis {
        Axis::Row => (w, h),
        Axis::Column => (h, w),
    };
    let index = |line: usize, i: usize| match axis {
        Axis::Row => line * w + i,
        Axis::Column => i * w + line,
    };
    let full = 2 * radius + 1;
    let mut out = vec![false; w * h];
    let mut prefix = vec![0usize; len + 1];
    for line in 0..lines {
        for i in 0..len {
            prefix[i + 1] = prefix[i] + src[index(line, i)] as usize;
        }
        for i in 0..len {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius + 1).min(len);
            let set = prefix[hi] - prefix[lo];
            out[index(line, i)] = match rule {
                Rule::Any => set > 0,
                Rule::All => set == full,
            };
        }
    }
    out
}

/// Intermediate images of the pre-processing chain, in order.
#[derive(Clone, Debug)]
pub struct PreprocessStages {
    pub equalized: GrayImage,
    pub filtered: GrayImage,
    /// `None` when the lower grey range was empty (blank page).
    pub binarization: Option<Binarization>,
    pub closed: BinaryImage,
}

/// Runs the whole chain and keeps every intermediate image.
pub fn preprocess_stages(img: &GrayImage, cfg: &PreprocessConfig) -> Result<PreprocessStages> {
    cfg.validate()?;
    let equalized = bi_histogram_equalize(img);
    let filtered = median_filter(&equalized, cfg.median_window);
    let binarization = match binarize_lower_range(&filtered, cfg) {
        Ok(b) => Some(b),
        Err(Error::NoDotMass) => None,
        Err(e) => return Err(e),
    };
    let closed = match &binarization {
        Some(b) => morphological_close(&b.image, cfg.closing_radius),
        None => BinaryImage::empty(img.width(), img.height()),
    };
    Ok(PreprocessStages {
        equalized,
        filtered,
        binarization,
        closed,
    })
}

/// Equalize, median filter, binarize, close. A page with nothing in the
/// lower grey range yields an all-background mask.
pub fn preprocess(img: &GrayImage, cfg: &PreprocessConfig) -> Result<BinaryImage> {
    preprocess_stages(img, cfg).map(|s| s.closed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(values: &[u8]) -> GrayImage {
        GrayImage::new(values.len(), 1, values.to_vec()).unwrap()
    }

    fn hist_of(pairs: &[(usize, u64)]) -> [u64; 256] {
        let mut h = [0u64; 256];
        for &(bin, count) in pairs {
            h[bin] += count;
        }
        h
    }

    /// Exhaustive Otsu oracle in exact integer arithmetic: maximises
    /// w0 * w1 * (mu0 - mu1)^2, i.e. (N*S0 - n0*S)^2 / (n0 * n1), with both
    /// classes non-empty and the smallest maximiser kept.
    pub(crate) fn otsu_oracle(hist: &[u64; 256]) -> u8 {
        let n: i128 = hist.iter().map(|&c| c as i128).sum();
        let s: i128 = hist.iter().enumerate().map(|(v, &c)| v as i128 * c as i128).sum();
        let mut best: Option<(i128, i128, usize)> = None;
        for t in 0..256 {
            let n0: i128 = hist[..=t].iter().map(|&c| c as i128).sum();
            let s0: i128 = hist[..=t].iter().enumerate().map(|(v, &c)| v as i128 * c as i128).sum();
            let n1 = n - n0;
            if n0 == 0 || n1 == 0 {
                continue;
            }
            let num = (n * s0 - n0 * s).pow(2);
            let den = n0 * n1;
            match best {
                Some((bn, bd, _)) if num * bd <= bn * den => {}
                _ => best = Some((num, den, t)),
            }
        }
        match best {
            Some((_, _, t)) => t as u8,
            None => hist.iter().position(|&c| c > 0).unwrap() as u8,
        }
    }

    #[test]
    fn bbhe_constant_image_is_identity() {
        let img = GrayImage::filled(4, 3, 128);
        assert_eq!(bi_histogram_equalize(&img), img);
    }

    #[test]
    fn bbhe_extremes_stay_fixed() {
        let img = row(&[0, 0, 255, 255]);
        assert_eq!(bi_histogram_equalize(&img).pixels(), &[0, 0, 255, 255]);
    }

    /// Direct per-half CDF evaluation, independent of the LUT construction.
    fn bbhe_oracle(values: &[u8]) -> Vec<u8> {
        let mean = values.iter().map(|&v| v as f64).sum::<f64>() / values.len() as f64;
        let m = mean.floor() as u8;
        let lower: Vec<u8> = values.iter().copied().filter(|&v| v <= m).collect();
        let upper: Vec<u8> = values.iter().copied().filter(|&v| v > m).collect();
        values
            .iter()
            .map(|&v| {
                let (half, lo, hi) = if v <= m {
                    (&lower, 0.0, m as f64)
                } else {
                    (&upper, m as f64 + 1.0, 255.0)
                };
                let darkest = *half.iter().min().unwrap();
                if half.iter().all(|&x| x == darkest) {
                    return v;
                }
                let cdf = |t: u8| half.iter().filter(|&&x| x <= t).count() as f64 / half.len() as f64;
                let base = cdf(darkest);
                (lo + (hi - lo) * (cdf(v) - base) / (1.0 - base)).round() as u8
            })
            .collect()
    }

    #[test]
    fn bbhe_ramp_matches_cdf_oracle_and_keeps_mean() {
        let ramp: Vec<u8> = (0..=255).collect();
        let out = bi_histogram_equalize(&row(&ramp));
        assert_eq!(out.pixels(), bbhe_oracle(&ramp).as_slice());
        let mean = out.pixels().iter().map(|&v| v as f64).sum::<f64>() / 256.0;
        assert!((mean - 127.5).abs() <= 8.0, "mean {mean}");
    }

    #[test]
    fn median_window_one_is_identity() {
        let img = GrayImage::new(3, 2, vec![9, 1, 200, 3, 4, 5]).unwrap();
        assert_eq!(median_filter(&img, 1), img);
        let flat = GrayImage::filled(6, 5, 42);
        assert_eq!(median_filter(&flat, 5), flat);
    }

    #[test]
    fn median_removes_impulse() {
        let mut img = GrayImage::filled(5, 5, 200);
        img.set(2, 2, 0);
        assert_eq!(median_filter(&img, 3), GrayImage::filled(5, 5, 200));
    }

    #[test]
    fn median_edge_replication() {
        // corner (0,0) window with replication: values {0,0,0,0,1,1? ...}
        let img = GrayImage::new(2, 2, vec![0, 10, 20, 30]).unwrap();
        // brute force: neighbourhood of (0,0) is rows [0,0,1] x cols [0,0,1]
        let mut n = vec![0, 0, 10, 0, 0, 10, 20, 20, 30];
        n.sort();
        assert_eq!(median_filter(&img, 3).get(0, 0), n[4]);
    }

    #[test]
    fn otsu_single_bin_returns_that_bin() {
        assert_eq!(otsu_threshold(&hist_of(&[(100, 37)])).unwrap(), 100);
    }

    #[test]
    fn otsu_two_spikes_matches_oracle() {
        let h = hist_of(&[(10, 50), (200, 50)]);
        let t = otsu_threshold(&h).unwrap();
        assert_eq!(t, otsu_oracle(&h));
        // flat maximum between the spikes; smallest maximiser is the lower spike
        assert_eq!(t, 10);
    }

    #[test]
    fn otsu_extreme_spikes_take_smallest_threshold() {
        let h = hist_of(&[(0, 7), (255, 7)]);
        assert_eq!(otsu_oracle(&h), 0);
        assert_eq!(otsu_threshold(&h).unwrap(), 0);
    }

    #[test]
    fn otsu_empty_histogram_errors() {
        assert!(matches!(otsu_threshold(&[0; 256]), Err(Error::EmptyHistogram)));
    }

    #[test]
    fn lower_range_isolates_dark_minority() {
        // 95 pixels at 240, 5 at 30
        let mut values = vec![240u8; 95];
        values.extend([30u8; 5]);
        let img = GrayImage::new(10, 10, values).unwrap();
        let b = binarize_lower_range(&img, &PreprocessConfig::default()).unwrap();
        assert_eq!(b.threshold, otsu_oracle(&hist_of(&[(30, 5)])));
        assert!(b.threshold >= 30);
        assert_eq!(b.image.count_foreground(), 5);
        assert!(!b.inverted);
    }

    #[test]
    fn lower_range_all_bright_has_no_mass() {
        let img = GrayImage::filled(4, 4, 250);
        assert!(matches!(
            binarize_lower_range(&img, &PreprocessConfig::default()),
            Err(Error::NoDotMass)
        ));
    }

    #[test]
    fn lower_range_separates_two_dark_levels() {
        let mut values = vec![20u8; 8];
        values.extend([100u8; 8]);
        let img = GrayImage::new(4, 4, values).unwrap();
        let cfg = PreprocessConfig {
            invert_output: Some(false),
            ..Default::default()
        };
        let b = binarize_lower_range(&img, &cfg).unwrap();
        assert_eq!(b.threshold, otsu_oracle(&hist_of(&[(20, 8), (100, 8)])));
        let fg: Vec<bool> = img.pixels().iter().map(|&v| v == 20).collect();
        assert_eq!(b.image.pixels(), fg.as_slice());
    }

    #[test]
    fn auto_polarity_inverts_majority_foreground() {
        let mut values = vec![20u8; 12];
        values.extend([200u8; 4]);
        let img = GrayImage::new(4, 4, values).unwrap();
        let b = binarize_lower_range(&img, &PreprocessConfig::default()).unwrap();
        assert!(b.inverted);
        assert_eq!(b.image.count_foreground(), 4);
    }

    #[test]
    fn closing_radius_zero_is_identity() {
        let img = BinaryImage::new(3, 1, vec![true, false, true]).unwrap();
        assert_eq!(morphological_close(&img, 0), img);
    }

    #[test]
    fn closing_fills_one_pixel_gap() {
        // 1x5 strip: pixels 1 and 3 set. Dilation (r=1) sets 0..=4; erosion
        // keeps 1..=3 because the padded ring holds the dilated border.
        let img = BinaryImage::new(5, 1, vec![false, true, false, true, false]).unwrap();
        let closed = morphological_close(&img, 1);
        assert_eq!(closed.pixels(), &[false, true, true, true, false]);
    }

    #[test]
    fn closing_keeps_isolated_pixel() {
        let mut img = BinaryImage::empty(5, 5);
        img.set(0, 0, true);
        img.set(3, 2, true);
        assert_eq!(morphological_close(&img, 1), img);
    }

    #[test]
    fn dilate_erode_zero_padding() {
        let mut img = BinaryImage::empty(3, 3);
        img.set(1, 1, true);
        assert_eq!(dilate(&img, 1).count_foreground(), 9);
        let full = BinaryImage::new(3, 3, vec![true; 9]).unwrap();
        // outside counts as background, so only the centre survives
        assert_eq!(erode(&full, 1).count_foreground(), 1);
    }

    #[test]
    fn blank_page_gives_empty_mask() {
        let img = GrayImage::filled(20, 10, 255);
        let out = preprocess(&img, &PreprocessConfig::default()).unwrap();
        assert_eq!(out.count_foreground(), 0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = PreprocessConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.median_window = 4;
        assert!(cfg.validate().is_err());
        cfg.median_window = 3;
        cfg.otsu_range_fraction = 0.0;
        assert!(cfg.validate().is_err());
        cfg.otsu_range_fraction = 1.0;
        assert_eq!(cfg.lower_range_limit(), 255);
        cfg.otsu_range_fraction = 0.5;
        assert_eq!(cfg.lower_range_limit(), 127);
    }

    fn random_binary(seed: u64, w: usize, h: usize, density: u64) -> BinaryImage {
        let mut state = seed | 1;
        let pixels = (0..w * h)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                state % 100 < density
            })
            .collect();
        BinaryImage::new(w, h, pixels).unwrap()
    }

    proptest! {
        #[test]
        fn otsu_agrees_with_oracle(counts in proptest::collection::vec(0u64..1000, 256)) {
            let mut h = [0u64; 256];
            h.copy_from_slice(&counts);
            prop_assume!(h.iter().any(|&c| c > 0));
            prop_assert_eq!(otsu_threshold(&h).unwrap(), otsu_oracle(&h));
        }

        #[test]
        fn median_never_invents_values(w in 1usize..12, h in 1usize..12, seed in any::<u64>(), win in prop_oneof![Just(1usize), Just(3), Just(5)]) {
            let pixels: Vec<u8> = (0..w * h).map(|i| (seed.rotate_left(i as u32 % 64) % 7) as u8 * 30).collect();
            let img = GrayImage::new(w, h, pixels).unwrap();
            let out = median_filter(&img, win);
            for v in out.pixels() {
                prop_assert!(img.pixels().contains(v));
            }
        }

        #[test]
        fn closing_extensive_and_idempotent(seed in any::<u64>(), radius in 1usize..4, density in 5u64..60) {
            let img = random_binary(seed, 64, 64, density);
            let once = morphological_close(&img, radius);
            for (a, b) in img.pixels().iter().zip(once.pixels()) {
                prop_assert!(!a || *b);
            }
            prop_assert_eq!(morphological_close(&once, radius), once);
        }

        #[test]
        fn bbhe_monotone_and_brightness_preserving(w in 32usize..80, h in 32usize..80, seed in any::<u64>()) {
            // smooth-ish "natural" image: low-frequency gradient plus noise
            let mut state = seed | 1;
            let pixels: Vec<u8> = (0..w * h).map(|i| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let (x, y) = ((i % w) as f64, (i / w) as f64);
                let base = 128.0 + 60.0 * ((x + 0.5) / w as f64 - 0.5) + 40.0 * ((y + 0.5) / h as f64 - 0.5);
                let noise = ((state >> 33) % 41) as f64 - 20.0;
                (base + noise).clamp(0.0, 255.0) as u8
            }).collect();
            let img = GrayImage::new(w, h, pixels).unwrap();
            let out = bi_histogram_equalize(&img);
            let mean = |g: &GrayImage| g.pixels().iter().map(|&v| v as f64).sum::<f64>() / g.pixels().len() as f64;
            prop_assert!((mean(&out) - mean(&img)).abs() <= 10.0);
            let m = mean(&img).floor() as u8;
            // the transform is a point map: recover it and check each half is monotone
            let mut map = [None::<u8>; 256];
            for (&i, &o) in img.pixels().iter().zip(out.pixels()) {
                prop_assert!(map[i as usize].is_none_or(|prev| prev == o));
                map[i as usize] = Some(o);
            }
            let seen: Vec<(u8, u8)> = map.iter().enumerate().filter_map(|(i, o)| o.map(|o| (i as u8, o))).collect();
            for pair in seen.windows(2) {
                let ((p, op), (q, oq)) = (pair[0], pair[1]);
                if q <= m || p > m {
                    prop_assert!(op <= oq);
                }
            }
        }
    }
}
