//! Cell grid projection, six-dot code extraction and table lookup.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::BrailleStructure;
use crate::image::BinaryImage;

/// Marker written for a code that has no table entry.
pub const UNKNOWN_MARKER: &str = "\u{2370}";

/// Default share of the expected dot area that must be foreground.
pub const DEFAULT_FILL_THRESHOLD: f64 = 0.15;

/// Six raised/flat dots. Bit `i - 1` holds dot `i` (dots 1-3 run down the
/// left column, 4-6 down the right).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BrailleCode(u8);

impl BrailleCode {
    pub const BLANK: BrailleCode = BrailleCode(0);

    pub fn from_dots(dots: [bool; 6]) -> Self {
        let mut bits = 0u8;
        for (i, &on) in dots.iter().enumerate() {
            if on {
                bits |= 1 << i;
            }
        }
        BrailleCode(bits)
    }

    /// Builds a code from the low six bits, dot 1 in bit 0.
    pub fn from_bits(bits: u8) -> Self {
        BrailleCode(bits & 0x3f)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    /// Whether dot `n` (1..=6) is raised.
    pub fn dot(self, n: usize) -> bool {
        assert!((1..=6).contains(&n), "dot number {n} out of range");
        self.0 & (1 << (n - 1)) != 0
    }

    pub fn dots(self) -> [bool; 6] {
        std::array::from_fn(|i| self.dot(i + 1))
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_blank(self) -> bool {
        self.0 == 0
    }

    pub fn all() -> impl Iterator<Item = BrailleCode> {
        (0u8..64).map(BrailleCode)
    }
}

impl fmt::Display for BrailleCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for on in self.dots() {
            f.write_str(if on { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BrailleCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() != 6 || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::InvalidCode(s.to_string()));
        }
        Ok(BrailleCode::from_dots(std::array::from_fn(|i| s.as_bytes()[i] == b'1')))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CollisionPolicy {
    /// Keep the earliest line for a repeated code and record a warning.
    #[default]
    FirstWins,
    Error,
}

/// Code to grapheme mapping loaded from a table file.
#[derive(Clone, Debug)]
pub struct MappingTable {
    pub name: String,
    pub policy: CollisionPolicy,
    entries: BTreeMap<BrailleCode, String>,
    /// Grapheme to code, including graphemes whose code lost a collision.
    reverse: HashMap<String, BrailleCode>,
    /// Graphemes by descending length, for longest-match segmentation.
    by_length: Vec<String>,
    warnings: Vec<String>,
}

const DEFAULT_TABLE: &str = include_str!("../data/bengali.tbl");

impl MappingTable {
    /// The shipped Bengali table.
    pub fn bengali() -> Self {
        Self::parse(DEFAULT_TABLE, "bengali.tbl", CollisionPolicy::FirstWins)
            .expect("embedded table parses")
    }

    /// Parses `BITS<TAB>GRAPHEME` lines; `#` starts a comment.
    pub fn parse(text: &str, name: &str, policy: CollisionPolicy) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut first_line: HashMap<BrailleCode, usize> = HashMap::new();
        let mut reverse = HashMap::new();
        let mut warnings = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let content = content.trim_end_matches(['\r', ' ']);
            if content.trim().is_empty() {
                continue;
            }
            let (bits, grapheme) = content.split_once('\t').ok_or_else(|| Error::TableSyntax {
                line: line_no,
                reason: "expected BITS<TAB>GRAPHEME".into(),
            })?;
            let code: BrailleCode = bits.trim().parse().map_err(|_| Error::TableSyntax {
                line: line_no,
                reason: format!("bad code {bits:?}"),
            })?;
            if grapheme.is_empty() || grapheme.contains('\t') {
                return Err(Error::TableSyntax {
                    line: line_no,
                    reason: "expected one grapheme after the tab".into(),
                });
            }
            reverse.entry(grapheme.to_string()).or_insert(code);
            if let Some(&first) = first_line.get(&code) {
                match policy {
                    CollisionPolicy::Error => {
                        return Err(Error::DuplicateCode {
                            line: line_no,
                            code: code.to_string(),
                            first_line: first,
                        })
                    }
                    CollisionPolicy::FirstWins => warnings.push(format!(
                        "{name}:{line_no}: code {code} already maps to {:?} (line {first}); {grapheme:?} ignored",
                        entries[&code]
                    )),
                }
                continue;
            }
            first_line.insert(code, line_no);
            entries.insert(code, grapheme.to_string());
        }

        let mut by_length: Vec<String> = reverse.keys().cloned().collect();
        by_length.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
        Ok(MappingTable {
            name: name.to_string(),
            policy,
            entries,
            reverse,
            by_length,
            warnings,
        })
    }

    pub fn get(&self, code: BrailleCode) -> Option<&str> {
        self.entries.get(&code).map(String::as_str)
    }

    /// Code that renders `grapheme`; for a grapheme that lost a collision this
    /// is the shared code.
    pub fn code_for(&self, grapheme: &str) -> Option<BrailleCode> {
        self.reverse.get(grapheme).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (BrailleCode, &str)> {
        self.entries.iter().map(|(c, g)| (*c, g.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Splits one line into cell strings by greedy longest match against the
    /// table's graphemes. A space is a blank cell; any other unmatched
    /// character is a cell of its own.
    pub fn segment(&self, line: &str) -> Vec<String> {
        let mut cells = Vec::new();
        let mut rest = line;
        while let Some(c) = rest.chars().next() {
            if c == ' ' {
                cells.push(" ".to_string());
                rest = &rest[1..];
                continue;
            }
            match self.by_length.iter().find(|g| rest.starts_with(g.as_str())) {
                Some(g) => {
                    cells.push(g.clone());
                    rest = &rest[g.len()..];
                }
                None => {
                    cells.push(c.to_string());
                    rest = &rest[c.len_utf8()..];
                }
            }
        }
        cells
    }
}

pub fn load_mapping(path: impl AsRef<Path>, policy: CollisionPolicy) -> Result<MappingTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    MappingTable::parse(&text, &name, policy)
}

/// The page's cells projected onto the image.
#[derive(Clone, Debug)]
pub struct CellGrid {
    pub structure: BrailleStructure,
    /// Side of each square dot sub-region, centred on the nominal dot centre.
    pub region_side: f64,
}

impl CellGrid {
    pub fn lines(&self) -> usize {
        self.structure.line_count
    }

    pub fn columns(&self) -> usize {
        self.structure.chars_per_line
    }

    /// Local `(u, v)` of dot 1 of cell `(line, col)`.
    fn cell_local(&self, line: usize, col: usize) -> (f64, f64) {
        let s = &self.structure;
        (col as f64 * s.cell_advance(), line as f64 * s.line_advance())
    }

    /// Page position of the cell's top-left dot centre.
    pub fn cell_origin(&self, line: usize, col: usize) -> (f64, f64) {
        let (u, v) = self.cell_local(line, col);
        self.structure.to_page(u, v)
    }

    /// Local offset of dot `n` (1..=6) from the cell origin.
    pub fn dot_offset(&self, n: usize) -> (f64, f64) {
        let s = &self.structure;
        let col = (n - 1) / 3;
        let row = (n - 1) % 3;
        (col as f64 * s.char_width, row as f64 * s.char_height / 2.0)
    }

    /// Page position of dot `n` (1..=6) of cell `(line, col)`.
    pub fn dot_centre(&self, line: usize, col: usize, n: usize) -> (f64, f64) {
        let (u, v) = self.cell_local(line, col);
        let (du, dv) = self.dot_offset(n);
        self.structure.to_page(u + du, v + dv)
    }

    /// Corners of the cell rectangle (dot centres padded by half a region),
    /// clockwise from top-left.
    pub fn cell_corners(&self, line: usize, col: usize) -> [(f64, f64); 4] {
        let (u, v) = self.cell_local(line, col);
        let h = self.region_side / 2.0;
        let (w, ht) = (self.structure.char_width, self.structure.char_height);
        [
            (u - h, v - h),
            (u + w + h, v - h),
            (u + w + h, v + ht + h),
            (u - h, v + ht + h),
        ]
        .map(|(a, b)| self.structure.to_page(a, b))
    }

    /// Corners of the sub-region for dot `n`, clockwise from top-left.
    pub fn region_corners(&self, line: usize, col: usize, n: usize) -> [(f64, f64); 4] {
        let (u, v) = self.cell_local(line, col);
        let (du, dv) = self.dot_offset(n);
        let (cu, cv) = (u + du, v + dv);
        let h = self.region_side / 2.0;
        [(-h, -h), (h, -h), (h, h), (-h, h)].map(|(a, b)| self.structure.to_page(cu + a, cv + b))
    }
}

/// Sub-regions are squares of side `max(delta_s, char_width / 2)`, shrunk
/// so neighbouring regions never overlap.
pub fn build_grid(s: &BrailleStructure) -> CellGrid {
    let pitch = s.char_width.min(s.char_height / 2.0);
    let side = s.delta_s.max(s.char_width / 2.0).min(pitch);
    CellGrid {
        structure: *s,
        region_side: side,
    }
}

/// Foreground pixels whose centres fall inside the sub-region of dot `n`.
pub fn region_count(img: &BinaryImage, grid: &CellGrid, line: usize, col: usize, n: usize) -> usize {
    let (cx, cy) = grid.dot_centre(line, col, n);
    let h = grid.region_side / 2.0;
    let reach = h * std::f64::consts::SQRT_2;
    let (ux, uy) = grid.structure.axes().0;
    let x0 = (cx - reach).floor().max(0.0) as usize;
    let y0 = (cy - reach).floor().max(0.0) as usize;
    let x1 = ((cx + reach).ceil() as i64).min(img.width() as i64 - 1);
    let y1 = ((cy + reach).ceil() as i64).min(img.height() as i64 - 1);
    if x1 < 0 || y1 < 0 {
        return 0;
    }
    let mut count = 0;
    for y in y0..=y1 as usize {
        for x in x0..=x1 as usize {
            if !img.get(x, y) {
                continue;
            }
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let u = dx * ux + dy * uy;
            let v = -dx * uy + dy * ux;
            if u.abs() <= h && v.abs() <= h {
                count += 1;
            }
        }
    }
    count
}

/// Dot `i` is raised when its sub-region holds at least
/// `fill_threshold * (pi / 4) * delta_s^2` foreground pixels.
pub fn read_cell(img: &BinaryImage, grid: &CellGrid, line: usize, col: usize, fill_threshold: f64) -> BrailleCode {
    let ds = grid.structure.delta_s;
    let needed = fill_threshold * std::f64::consts::FRAC_PI_4 * ds * ds;
    BrailleCode::from_dots(std::array::from_fn(|i| {
        region_count(img, grid, line, col, i + 1) as f64 >= needed
    }))
}

/// Codes of every cell, line by line.
pub fn read_codes(img: &BinaryImage, grid: &CellGrid, fill_threshold: f64) -> Vec<Vec<BrailleCode>> {
    (0..grid.lines())
        .map(|l| {
            (0..grid.columns())
                .map(|k| read_cell(img, grid, l, k, fill_threshold))
                .collect()
        })
        .collect()
}

/// A code with no table entry, found at `(line, col)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnknownCode {
    pub line: usize,
    pub col: usize,
    pub code: BrailleCode,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Translation {
    pub text: String,
    pub unknown: Vec<UnknownCode>,
}

/// Maps codes to text. Blank cells become spaces, unknown codes the
/// [`UNKNOWN_MARKER`]; each line loses trailing spaces and trailing empty
/// lines are dropped.
pub fn translate_page(codes: &[Vec<BrailleCode>], table: &MappingTable) -> Translation {
    let mut unknown = Vec::new();
    let mut lines: Vec<String> = codes
        .iter()
        .enumerate()
        .map(|(l, row)| {
            let mut text = String::new();
            for (k, &code) in row.iter().enumerate() {
                if code.is_blank() {
                    text.push(' ');
                } else if let Some(g) = table.get(code) {
                    text.push_str(g);
                } else {
                    unknown.push(UnknownCode { line: l, col: k, code });
                    text.push_str(UNKNOWN_MARKER);
                }
            }
            text.trim_end_matches(' ').to_string()
        })
        .collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    Translation {
        text: lines.join("\n"),
        unknown,
    }
}
