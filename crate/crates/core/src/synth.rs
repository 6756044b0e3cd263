//! Synthetic scanned pages with exact ground truth.
//!
//! Text is turned into cells through the reverse of a mapping table, each
//! raised dot becomes a dark soft-edged disc on bright textured paper, and
//! the page is rotated and degraded under a fixed seed.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dots::BraillePoint;
use crate::error::{Error, Result};
use crate::geometry::BrailleStructure;
use crate::image::GrayImage;
use crate::translate::{translate_page, BrailleCode, MappingTable};

/// Paper intensity before texture.
pub const PAPER_LEVEL: f64 = 235.0;

#[derive(Clone, Debug)]
pub struct SynthSpec {
    pub text: String,
    pub table: MappingTable,
    pub dot_diameter: f64,
    /// Distance between neighbouring dot centres inside a cell.
    pub dot_pitch: f64,
    /// Distance between the first dot columns of neighbouring cells.
    pub cell_advance: f64,
    /// Distance between the top dot rows of neighbouring lines.
    pub line_advance: f64,
    pub margin: f64,
    /// Clockwise page rotation in degrees.
    pub rotation: f64,
    pub noise_salt_pepper: f64,
    pub noise_gaussian_sigma: f64,
    pub dot_contrast: f64,
    pub dot_jitter: f64,
    pub dot_dropout: f64,
    pub seed: u64,
    pub max_lines: usize,
    pub max_chars: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            text: String::new(),
            table: MappingTable::bengali(),
            dot_diameter: 12.0,
            dot_pitch: 20.0,
            cell_advance: 48.0,
            line_advance: 80.0,
            margin: 40.0,
            rotation: 0.0,
            noise_salt_pepper: 0.0,
            noise_gaussian_sigma: 3.0,
            dot_contrast: 40.0,
            dot_jitter: 0.0,
            dot_dropout: 0.0,
            seed: 0,
            max_lines: 27,
            max_chars: 28,
        }
    }
}

impl SynthSpec {
    pub fn with_text(text: impl Into<String>) -> Self {
        SynthSpec {
            text: text.into(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SynthSpec(m));
        let finite = [
            self.dot_diameter,
            self.dot_pitch,
            self.cell_advance,
            self.line_advance,
            self.margin,
            self.rotation,
            self.noise_gaussian_sigma,
            self.dot_contrast,
            self.dot_jitter,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("non-finite parameter".into());
        }
        if self.dot_diameter <= 0.0 {
            return bad(format!("dot_diameter {} must be positive", self.dot_diameter));
        }
        if self.dot_pitch <= self.dot_diameter {
            return bad(format!(
                "dot_pitch {} must exceed dot_diameter {}",
                self.dot_pitch, self.dot_diameter
            ));
        }
        if self.cell_advance < self.dot_pitch + self.dot_diameter + 1.0 {
            return bad(format!(
                "cell_advance {} must be at least dot_pitch + dot_diameter + 1",
                self.cell_advance
            ));
        }
        if self.line_advance < 2.0 * self.dot_pitch + self.dot_diameter + 1.0 {
            return bad(format!(
                "line_advance {} must be at least 2 * dot_pitch + dot_diameter + 1",
                self.line_advance
            ));
        }
        if self.margin < 0.0 || self.noise_gaussian_sigma < 0.0 || self.dot_jitter < 0.0 {
            return bad("margin, sigma and jitter must be non-negative".into());
        }
        for (name, v) in [
            ("noise_salt_pepper", self.noise_salt_pepper),
            ("dot_dropout", self.dot_dropout),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} {v} outside [0, 1]"));
            }
        }
        if !(0.0..=PAPER_LEVEL).contains(&self.dot_contrast) {
            return bad(format!("dot_contrast {} outside [0, {PAPER_LEVEL}]", self.dot_contrast));
        }
        Ok(())
    }

    /// Cell codes for the text, line by line, trailing blanks removed.
    pub fn codes(&self) -> Result<Vec<Vec<BrailleCode>>> {
        let mut out = Vec::new();
        for (l, line) in self.text.lines().enumerate() {
            let mut row = Vec::new();
            for cell in self.table.segment(line) {
                if cell == " " {
                    row.push(BrailleCode::BLANK);
                    continue;
                }
                let code = self.table.code_for(&cell).ok_or(Error::UnmappableGrapheme {
                    grapheme: cell.clone(),
                    line: l + 1,
                })?;
                row.push(code);
            }
            while row.last().is_some_and(|c| c.is_blank()) {
                row.pop();
            }
            out.push(row);
        }
        while out.last().is_some_and(|r| r.is_empty()) {
            out.pop();
        }
        if out.len() > self.max_lines {
            return Err(Error::SynthSpec(format!(
                "{} lines exceed the page capacity of {}",
                out.len(),
                self.max_lines
            )));
        }
        if let Some(l) = out.iter().position(|r| r.len() > self.max_chars) {
            return Err(Error::SynthSpec(format!(
                "line {} holds {} cells, capacity is {}",
                l + 1,
                out[l].len(),
                self.max_chars
            )));
        }
        Ok(out)
    }
}

/// What a rendered page actually contains.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    /// The spec the page came from; `None` when read back from a sidecar.
    pub spec: Option<SynthSpec>,
    pub width: usize,
    pub height: usize,
    pub structure: BrailleStructure,
    /// Centres of the dots that were drawn, after rotation and jitter.
    pub dots: Vec<(f64, f64)>,
    /// Codes of the dots that were drawn (dropped dots are absent).
    pub cells: Vec<Vec<BrailleCode>>,
    /// Pixels overwritten by salt-and-pepper noise.
    pub noise_mask: Vec<bool>,
}

impl GroundTruth {
    /// Text a perfect reader would produce.
    pub fn text(&self, table: &MappingTable) -> String {
        translate_page(&self.cells, table).text
    }

    /// Grid size of the page in cells.
    pub fn grid_cells(&self) -> usize {
        self.structure.line_count * self.structure.chars_per_line
    }
}

/// Draws the page described by `spec`.
pub fn render(spec: &SynthSpec) -> Result<(GrayImage, GroundTruth)> {
    spec.validate()?;
    let codes = spec.codes()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let lines = codes.len();
    let cols = codes.iter().map(Vec::len).max().unwrap_or(0);
    let (p, a, b, m) = (spec.dot_pitch, spec.cell_advance, spec.line_advance, spec.margin);
    let page_w = 2.0 * m + if cols > 0 { (cols - 1) as f64 * a + p } else { 0.0 };
    let page_h = 2.0 * m + if lines > 0 { (lines - 1) as f64 * b + 2.0 * p } else { 0.0 };

    let theta = spec.rotation.to_radians();
    let (s, c) = theta.sin_cos();
    let width = (page_w * c.abs() + page_h * s.abs()).ceil().max(1.0) as usize;
    let height = (page_w * s.abs() + page_h * c.abs()).ceil().max(1.0) as usize;
    let (pcx, pcy) = (page_w / 2.0, page_h / 2.0);
    let (ccx, ccy) = (width as f64 / 2.0, height as f64 / 2.0);
    let place = |x: f64, y: f64| {
        let (dx, dy) = (x - pcx, y - pcy);
        (ccx + dx * c - dy * s, ccy + dx * s + dy * c)
    };

    let mut dots = Vec::new();
    let mut cells = Vec::with_capacity(lines);
    for (l, row) in codes.iter().enumerate() {
        let mut drawn_row = Vec::with_capacity(row.len());
        for (k, &code) in row.iter().enumerate() {
            let mut drawn = [false; 6];
            for n in 1..=6 {
                if !code.dot(n) {
                    continue;
                }
                let dropped = spec.dot_dropout > 0.0 && rng.random::<f64>() < spec.dot_dropout;
                let (jx, jy) = if spec.dot_jitter > 0.0 {
                    (
                        rng.random_range(-spec.dot_jitter..=spec.dot_jitter),
                        rng.random_range(-spec.dot_jitter..=spec.dot_jitter),
                    )
                } else {
                    (0.0, 0.0)
                };
                if dropped {
                    continue;
                }
                let col = ((n - 1) / 3) as f64;
                let r = ((n - 1) % 3) as f64;
                let (x, y) = place(m + k as f64 * a + col * p, m + l as f64 * b + r * p);
                dots.push((x + jx, y + jy));
                drawn[n - 1] = true;
            }
            drawn_row.push(BrailleCode::from_dots(drawn));
        }
        cells.push(drawn_row);
    }

    let mut canvas = vec![PAPER_LEVEL; width * height];
    let radius = spec.dot_diameter / 2.0;
    for &(x, y) in &dots {
        let reach = radius + 1.0;
        let x0 = (x - reach).floor().max(0.0) as usize;
        let y0 = (y - reach).floor().max(0.0) as usize;
        let x1 = ((x + reach).ceil() as usize).min(width - 1);
        let y1 = ((y + reach).ceil() as usize).min(height - 1);
        for py in y0..=y1 {
            for px in x0..=x1 {
                let dist = ((px as f64 - x).powi(2) + (py as f64 - y).powi(2)).sqrt();
                let coverage = (radius + 0.5 - dist).clamp(0.0, 1.0);
                let v = PAPER_LEVEL - spec.dot_contrast * coverage;
                let cell = &mut canvas[py * width + px];
                *cell = cell.min(v);
            }
        }
    }

    if spec.noise_gaussian_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_gaussian_sigma)
            .map_err(|e| Error::SynthSpec(e.to_string()))?;
        for v in canvas.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    let mut pixels: Vec<u8> = canvas.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    let mut noise_mask = vec![false; width * height];
    if spec.noise_salt_pepper > 0.0 {
        for (px, hit) in pixels.iter_mut().zip(noise_mask.iter_mut()) {
            if rng.random::<f64>() < spec.noise_salt_pepper {
                *px = if rng.random::<bool>() { 255 } else { 0 };
                *hit = true;
            }
        }
    }

    let (p0_x, p0_y) = place(m, m);
    let structure = BrailleStructure {
        p0_x,
        p0_y,
        theta_b: theta,
        char_width: p,
        char_height: 2.0 * p,
        char_gap: a - p,
        line_gap: b - 2.0 * p,
        chars_per_line: cols,
        line_count: lines,
        delta_s: spec.dot_diameter,
    };
    let image = GrayImage::new(width, height, pixels)?;
    Ok((
        image,
        GroundTruth {
            spec: Some(spec.clone()),
            width,
            height,
            structure,
            dots,
            cells,
            noise_mask,
        },
    ))
}

/// Dot-level confusion counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DotConfusion {
    pub t_p: u64,
    pub f_p: u64,
    pub t_n: u64,
    pub f_n: u64,
}

/// Greedy nearest matching of detected points to true dots within `tol`.
/// True negatives are the grid's empty dot positions.
pub fn compare_dots(found: &[BraillePoint], truth: &GroundTruth, tol: f64) -> DotConfusion {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, f) in found.iter().enumerate() {
        for (j, &(tx, ty)) in truth.dots.iter().enumerate() {
            let d = ((f.x - tx).powi(2) + (f.y - ty).powi(2)).sqrt();
            if d <= tol {
                pairs.push((d, j, i));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut used_found = vec![false; found.len()];
    let mut used_truth = vec![false; truth.dots.len()];
    let mut t_p = 0u64;
    for (_, j, i) in pairs {
        if !used_found[i] && !used_truth[j] {
            used_found[i] = true;
            used_truth[j] = true;
            t_p += 1;
        }
    }
    let positions = 6 * truth.grid_cells() as u64;
    DotConfusion {
        t_p,
        f_p: found.len() as u64 - t_p,
        t_n: positions.saturating_sub(truth.dots.len() as u64),
        f_n: truth.dots.len() as u64 - t_p,
    }
}

/// Parses a spec file: `key = value` lines, then `---`, then the text.
/// `table` is used unless the file names its own.
pub fn parse_spec(source: &str, table: MappingTable) -> Result<SynthSpec> {
    let mut spec = SynthSpec {
        table,
        ..Default::default()
    };
    let (header, text) = match source.split_once("\n---") {
        Some((h, rest)) => {
            let rest = rest.strip_prefix('\r').unwrap_or(rest);
            (h, rest.strip_prefix('\n').unwrap_or(rest))
        }
        None if source.starts_with("---") => ("", source[3..].trim_start_matches(['\r', '\n'])),
        None => (source, ""),
    };
    spec.text = text.to_string();
    for (idx, raw) in header.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::SynthSpec(format!("line {}: expected key = value", idx + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        let num = || {
            value
                .parse::<f64>()
                .map_err(|_| Error::SynthSpec(format!("line {}: {key} needs a number, got {value:?}", idx + 1)))
        };
        let int = || {
            value
                .parse::<u64>()
                .map_err(|_| Error::SynthSpec(format!("line {}: {key} needs an integer, got {value:?}", idx + 1)))
        };
        match key {
            "dot_diameter" => spec.dot_diameter = num()?,
            "dot_pitch" => spec.dot_pitch = num()?,
            "cell_advance" => spec.cell_advance = num()?,
            "line_advance" => spec.line_advance = num()?,
            "margin" => spec.margin = num()?,
            "rotation" => spec.rotation = num()?,
            "noise_salt_pepper" => spec.noise_salt_pepper = num()?,
            "noise_gaussian_sigma" => spec.noise_gaussian_sigma = num()?,
            "dot_contrast" => spec.dot_contrast = num()?,
            "dot_jitter" => spec.dot_jitter = num()?,
            "dot_dropout" => spec.dot_dropout = num()?,
            "seed" => spec.seed = int()?,
            "max_lines" => spec.max_lines = int()? as usize,
            "max_chars" => spec.max_chars = int()? as usize,
            other => return Err(Error::SynthSpec(format!("line {}: unknown key {other:?}", idx + 1))),
        }
    }
    spec.validate()?;
    Ok(spec)
}

pub fn format_truth(truth: &GroundTruth) -> String {
    let s = &truth.structure;
    let mut out = String::new();
    let _ = writeln!(out, "width {}", truth.width);
    let _ = writeln!(out, "height {}", truth.height);
    let _ = writeln!(out, "p0_x {:.4}", s.p0_x);
    let _ = writeln!(out, "p0_y {:.4}", s.p0_y);
    let _ = writeln!(out, "theta_b {:.8}", s.theta_b);
    let _ = writeln!(out, "char_width {:.4}", s.char_width);
    let _ = writeln!(out, "char_height {:.4}", s.char_height);
    let _ = writeln!(out, "char_gap {:.4}", s.char_gap);
    let _ = writeln!(out, "line_gap {:.4}", s.line_gap);
    let _ = writeln!(out, "chars_per_line {}", s.chars_per_line);
    let _ = writeln!(out, "line_count {}", s.line_count);
    let _ = writeln!(out, "delta_s {:.4}", s.delta_s);
    for (x, y) in &truth.dots {
        let _ = writeln!(out, "dot {x:.4} {y:.4}");
    }
    for (l, row) in truth.cells.iter().enumerate() {
        for (k, code) in row.iter().enumerate() {
            let _ = writeln!(out, "cell {l} {k} {code}");
        }
    }
    out
}

pub fn parse_truth(text: &str) -> Result<GroundTruth> {
    let mut fields = std::collections::HashMap::new();
    let mut dots = Vec::new();
    let mut cells: Vec<Vec<BrailleCode>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |reason: &str| Error::TruthSyntax {
            line: line_no,
            reason: reason.to_string(),
        };
        let parts: Vec<&str> = raw.split_whitespace().collect();
        match parts.as_slice() {
            [] => {}
            ["dot", x, y] => {
                let x: f64 = x.parse().map_err(|_| err("bad dot x"))?;
                let y: f64 = y.parse().map_err(|_| err("bad dot y"))?;
                dots.push((x, y));
            }
            ["cell", l, k, code] => {
                let l: usize = l.parse().map_err(|_| err("bad cell line"))?;
                let k: usize = k.parse().map_err(|_| err("bad cell column"))?;
                let code: BrailleCode = code.parse().map_err(|_| err("bad cell code"))?;
                if cells.len() <= l {
                    cells.resize(l + 1, Vec::new());
                }
                let row = &mut cells[l];
                if row.len() <= k {
                    row.resize(k + 1, BrailleCode::BLANK);
                }
                row[k] = code;
            }
            [key, value] => {
                let v: f64 = value.parse().map_err(|_| err("bad number"))?;
                fields.insert(key.to_string(), v);
            }
            _ => return Err(err("unrecognised line")),
        }
    }
    let get = |k: &str| {
        fields.get(k).copied().ok_or(Error::TruthSyntax {
            line: 0,
            reason: format!("missing field {k}"),
        })
    };
    let structure = BrailleStructure {
        p0_x: get("p0_x")?,
        p0_y: get("p0_y")?,
        theta_b: get("theta_b")?,
        char_width: get("char_width")?,
        char_height: get("char_height")?,
        char_gap: get("char_gap")?,
        line_gap: get("line_gap")?,
        chars_per_line: get("chars_per_line")? as usize,
        line_count: get("line_count")? as usize,
        delta_s: get("delta_s")?,
    };
    let (width, height) = (get("width")? as usize, get("height")? as usize);
    Ok(GroundTruth {
        spec: None,
        width,
        height,
        structure,
        dots,
        cells,
        noise_mask: Vec::new(),
    })
}

/// Sidecar path for an image: same base name, `.truth` extension.
pub fn truth_path(image: &Path) -> std::path::PathBuf {
    image.with_extension("truth")
}

pub fn write_truth(truth: &GroundTruth, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_truth(truth)).map_err(|e| Error::io(path, e))
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_truth(&text)
}
