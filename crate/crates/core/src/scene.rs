//! Binary object masks, spatial photon sampling, and plain-text netpbm I/O.
//!
//! Masks are read from plain PBM (`P1`) files, where `1` (black) marks a
//! reflective pixel. Count images are written as plain PGM (`P2`). Both
//! writers are byte-for-byte deterministic.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Plain netpbm writers keep lines at or under this many characters.
const MAX_LINE: usize = 70;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("line {line}, column {column}: {kind}")]
    Parse {
        line: usize,
        column: usize,
        kind: ParseErrorKind,
    },
    #[error("pixel ({x}, {y}) is outside the {width}x{height} mask")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("mask must be at least 1x1, got {width}x{height}")]
    EmptyMask { width: usize, height: usize },
    #[error("expected {expected} pixels, got {found}")]
    PixelCount { expected: usize, found: usize },
    #[error("unknown built-in mask {0:?} (expected \"aircraft\" or \"bird\")")]
    UnknownBuiltin(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("expected magic number {expected}, found {found:?}")]
    BadMagic {
        expected: &'static str,
        found: String,
    },
    #[error("malformed header field {field}: {found:?}")]
    BadHeader { field: &'static str, found: String },
    #[error("unexpected end of file while reading {0}")]
    UnexpectedEof(&'static str),
    #[error("invalid pixel value {0:?}")]
    BadPixel(String),
    #[error("dimension mismatch: header declares {expected} pixels, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PixelCoord {
    pub x: usize,
    pub y: usize,
}

impl PixelCoord {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reflection {
    Reflected,
    Absorbed,
}

/// A binary reflectance map. `true` pixels reflect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl ObjectMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, SceneError> {
        if width == 0 || height == 0 {
            return Err(SceneError::EmptyMask { width, height });
        }
        if bits.len() != width * height {
            return Err(SceneError::PixelCount {
                expected: width * height,
                found: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    /// A mask where every pixel reflects.
    pub fn filled(width: usize, height: usize) -> Result<Self, SceneError> {
        Self::new(width, height, vec![true; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn contains(&self, p: PixelCoord) -> bool {
        p.x < self.width && p.y < self.height
    }

    pub fn get(&self, p: PixelCoord) -> Result<bool, SceneError> {
        if !self.contains(p) {
            return Err(SceneError::OutOfBounds {
                x: p.x,
                y: p.y,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.bits[p.y * self.width + p.x])
    }

    pub fn reflective_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Reflective pixels in row-major order.
    pub fn reflective_pixels(&self) -> Vec<PixelCoord> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| PixelCoord::new(i % self.width, i / self.width))
            .collect()
    }

    pub fn same_shape(&self, other: &ObjectMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Plain PBM text for this mask.
    pub fn to_pbm(&self) -> String {
        let mut out = format!("P1\n{} {}\n", self.width, self.height);
        for row in self.bits.chunks(self.width) {
            let digits: String = row.iter().map(|&b| if b { '1' } else { '0' }).collect();
            for chunk in digits.as_bytes().chunks(MAX_LINE) {
                out.push_str(std::str::from_utf8(chunk).expect("ascii digits"));
                out.push('\n');
            }
        }
        out
    }

    pub fn write_pbm(&self, path: impl AsRef<Path>) -> Result<(), SceneError> {
        fs::write(path, self.to_pbm())?;
        Ok(())
    }
}

/// Reads a plain PBM mask from disk.
pub fn load_mask(path: impl AsRef<Path>) -> Result<ObjectMask, SceneError> {
    let text = fs::read_to_string(path)?;
    parse_pbm(&text)
}

/// Uniform pixel over the whole mask, column from `u1` and row from `u2`.
pub fn sample_position(mask: &ObjectMask, u1: f64, u2: f64) -> PixelCoord {
    PixelCoord::new(scale(u1, mask.width), scale(u2, mask.height))
}

/// Maps a unit-uniform draw onto `0..n`.
pub(crate) fn scale(u: f64, n: usize) -> usize {
    ((u * n as f64) as usize).min(n - 1)
}

/// Honest specular reflection: the photon survives iff the pixel reflects.
pub fn reflect(mask: &ObjectMask, p: PixelCoord) -> Result<Reflection, SceneError> {
    Ok(if mask.get(p)? {
        Reflection::Reflected
    } else {
        Reflection::Absorbed
    })
}

/// Per-pixel photon counts, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountGrid {
    width: usize,
    height: usize,
    counts: Vec<u64>,
}

impl CountGrid {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            counts: vec![0; width * height],
        }
    }

    pub fn from_counts(width: usize, height: usize, counts: Vec<u64>) -> Result<Self, SceneError> {
        if width == 0 || height == 0 {
            return Err(SceneError::EmptyMask { width, height });
        }
        if counts.len() != width * height {
            return Err(SceneError::PixelCount {
                expected: width * height,
                found: counts.len(),
            });
        }
        Ok(Self {
            width,
            height,
            counts,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, p: PixelCoord) -> u64 {
        self.counts[p.y * self.width + p.x]
    }

    pub fn increment(&mut self, p: PixelCoord) {
        self.counts[p.y * self.width + p.x] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    /// Pixelwise sum. Panics if the shapes differ.
    pub fn add(&mut self, other: &CountGrid) {
        assert_eq!((self.width, self.height), (other.width, other.height));
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// Plain PGM text. `maxval` is the largest count, or 1 for an all-zero
    /// grid.
    pub fn to_pgm(&self) -> String {
        let maxval = self.counts.iter().copied().max().unwrap_or(0).max(1);
        let mut out = format!("P2\n{} {}\n{}\n", self.width, self.height, maxval);
        for row in self.counts.chunks(self.width) {
            let mut line = String::new();
            for c in row {
                let token = c.to_string();
                if !line.is_empty() && line.len() + 1 + token.len() > MAX_LINE {
                    out.push_str(&line);
                    out.push('\n');
                    line.clear();
                }
                if !line.is_empty() {
                    line.push(' ');
                }
                line.push_str(&token);
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

/// Writes counts as a plain PGM image.
pub fn write_image_pgm(counts: &CountGrid, path: impl AsRef<Path>) -> Result<(), SceneError> {
    fs::write(path, counts.to_pgm())?;
    Ok(())
}

pub fn read_image_pgm(path: impl AsRef<Path>) -> Result<CountGrid, SceneError> {
    parse_pgm(&fs::read_to_string(path)?)
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    /// Skips whitespace and `#` comments.
    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_ascii_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn error(&self, kind: ParseErrorKind) -> SceneError {
        SceneError::Parse {
            line: self.line,
            column: self.column,
            kind,
        }
    }

    /// Next whitespace-delimited token with its starting position.
    fn token(&mut self) -> Option<(String, usize, usize)> {
        self.skip_blank();
        let (line, column) = (self.line, self.column);
        let mut tok = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_whitespace() || c == '#' {
                break;
            }
            tok.push(c);
            self.bump();
        }
        (!tok.is_empty()).then_some((tok, line, column))
    }

    fn magic(&mut self, expected: &'static str) -> Result<(), SceneError> {
        match self.token() {
            Some((tok, _, _)) if tok == expected => Ok(()),
            Some((tok, line, column)) => Err(SceneError::Parse {
                line,
                column,
                kind: ParseErrorKind::BadMagic {
                    expected,
                    found: tok,
                },
            }),
            None => Err(self.error(ParseErrorKind::UnexpectedEof("magic number"))),
        }
    }

    fn header_field(&mut self, field: &'static str, allow_zero: bool) -> Result<usize, SceneError> {
        let (tok, line, column) = self
            .token()
            .ok_or_else(|| self.error(ParseErrorKind::UnexpectedEof(field)))?;
        match tok.parse::<usize>() {
            Ok(v) if v > 0 || allow_zero => Ok(v),
            _ => Err(SceneError::Parse {
                line,
                column,
                kind: ParseErrorKind::BadHeader { field, found: tok },
            }),
        }
    }
}

/// Parses plain PBM (`P1`) text. Pixels may be separated by whitespace or
/// packed as a run of `0`/`1` digits.
pub fn parse_pbm(text: &str) -> Result<ObjectMask, SceneError> {
    let mut cur = Cursor::new(text);
    cur.magic("P1")?;
    let width = cur.header_field("width", false)?;
    let height = cur.header_field("height", false)?;
    let expected = width * height;
    let mut bits = Vec::with_capacity(expected);
    loop {
        cur.skip_blank();
        let Some(&c) = cur.chars.peek() else { break };
        let bit = match c {
            '0' => false,
            '1' => true,
            _ => {
                let (found, line, column) = cur.token().expect("non-blank character");
                return Err(SceneError::Parse {
                    line,
                    column,
                    kind: ParseErrorKind::BadPixel(found),
                });
            }
        };
        if bits.len() == expected {
            return Err(cur.error(ParseErrorKind::DimensionMismatch {
                expected,
                found: expected + 1,
            }));
        }
        bits.push(bit);
        cur.bump();
    }
    if bits.len() != expected {
        return Err(cur.error(ParseErrorKind::DimensionMismatch {
            expected,
            found: bits.len(),
        }));
    }
    ObjectMask::new(width, height, bits)
}

/// Parses plain PGM (`P2`) text into counts.
pub fn parse_pgm(text: &str) -> Result<CountGrid, SceneError> {
    let mut cur = Cursor::new(text);
    cur.magic("P2")?;
    let width = cur.header_field("width", false)?;
    let height = cur.header_field("height", false)?;
    let maxval = cur.header_field("maxval", false)? as u64;
    let expected = width * height;
    let mut counts = Vec::with_capacity(expected);
    while let Some((tok, line, column)) = cur.token() {
        let value = match tok.parse::<u64>() {
            Ok(v) if v <= maxval => v,
            _ => {
                return Err(SceneError::Parse {
                    line,
                    column,
                    kind: ParseErrorKind::BadPixel(tok),
                })
            }
        };
        if counts.len() == expected {
            return Err(SceneError::Parse {
                line,
                column,
                kind: ParseErrorKind::DimensionMismatch {
                    expected,
                    found: expected + 1,
                },
            });
        }
        counts.push(value);
    }
    if counts.len() != expected {
        return Err(cur.error(ParseErrorKind::DimensionMismatch {
            expected,
            found: counts.len(),
        }));
    }
    CountGrid::from_counts(width, height, counts)
}

/// Side length of the built-in masks.
pub const BUILTIN_SIZE: usize = 64;

// Flying-wing silhouette: nose at the top, sawtooth trailing edge.
const AIRCRAFT: &[(f64, f64)] = &[
    (32.0, 10.0),
    (62.0, 40.0),
    (56.0, 46.0),
    (48.0, 40.0),
    (40.0, 48.0),
    (32.0, 42.0),
    (24.0, 48.0),
    (16.0, 40.0),
    (8.0, 46.0),
    (2.0, 40.0),
];

// Gull-wing bird with a tail, seen from below.
const BIRD: &[(f64, f64)] = &[
    (4.0, 20.0),
    (14.0, 16.0),
    (24.0, 20.0),
    (30.0, 27.0),
    (32.0, 24.0),
    (34.0, 27.0),
    (40.0, 20.0),
    (50.0, 16.0),
    (60.0, 20.0),
    (48.0, 24.0),
    (38.0, 34.0),
    (36.0, 46.0),
    (40.0, 54.0),
    (32.0, 50.0),
    (24.0, 54.0),
    (28.0, 46.0),
    (26.0, 34.0),
    (16.0, 24.0),
];

/// Rasterizes a closed polygon by testing pixel centres with the even-odd
/// rule.
pub fn rasterize_polygon(width: usize, height: usize, vertices: &[(f64, f64)]) -> ObjectMask {
    let mut bits = vec![false; width * height];
    for y in 0..height {
        for x in 0..width {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut inside = false;
            let mut j = vertices.len() - 1;
            for i in 0..vertices.len() {
                let (xi, yi) = vertices[i];
                let (xj, yj) = vertices[j];
                if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
                    inside = !inside;
                }
                j = i;
            }
            bits[y * width + x] = inside;
        }
    }
    ObjectMask::new(width, height, bits).expect("non-empty raster")
}

/// The built-in 64×64 masks: `"aircraft"` (the imaged object) and `"bird"`
/// (the jammer's spoof image).
pub fn builtin_mask(name: &str) -> Result<ObjectMask, SceneError> {
    let vertices = match name {
        "aircraft" => AIRCRAFT,
        "bird" => BIRD,
        _ => return Err(SceneError::UnknownBuiltin(name.to_owned())),
    };
    Ok(rasterize_polygon(BUILTIN_SIZE, BUILTIN_SIZE, vertices))
}

/// Resolves a built-in mask name, or loads the PBM file at `name_or_path`.
pub fn resolve_mask(name_or_path: &str) -> Result<ObjectMask, SceneError> {
    match name_or_path {
        "aircraft" | "bird" => builtin_mask(name_or_path),
        path => load_mask(path),
    }
}

/// Debug rendering, `#` for reflective pixels.
pub fn ascii_art(mask: &ObjectMask) -> String {
    let mut s = String::new();
    for row in mask.bits.chunks(mask.width) {
        for &b in row {
            s.push(if b { '#' } else { '.' });
        }
        let _ = writeln!(s);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse_err_kind(text: &str) -> (usize, usize, ParseErrorKind) {
        match parse_pbm(text) {
            Err(SceneError::Parse { line, column, kind }) => (line, column, kind),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn loads_two_by_one() {
        let m = parse_pbm("P1\n2 1\n1 0\n").unwrap();
        assert_eq!((m.width(), m.height()), (2, 1));
        assert!(m.get(PixelCoord::new(0, 0)).unwrap());
        assert!(!m.get(PixelCoord::new(1, 0)).unwrap());
    }

    #[test]
    fn loads_all_zeros_and_packed_digits() {
        let m = parse_pbm("P1\n# comment\n4 4\n0000\n0000\n0000\n0000\n").unwrap();
        assert_eq!(m.reflective_count(), 0);
        let m = parse_pbm("P1 3 2 101 # trailing\n010").unwrap();
        assert_eq!(m.bits(), &[true, false, true, false, true, false]);
    }

    #[test]
    fn load_mask_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pbm");
        fs::write(&path, "P1\n2 1\n1 0\n").unwrap();
        let m = load_mask(&path).unwrap();
        assert_eq!(m.reflective_count(), 1);
        assert!(matches!(
            load_mask(dir.path().join("missing.pbm")),
            Err(SceneError::Io(_))
        ));
    }

    #[test]
    fn reports_malformed_header() {
        let (line, col, kind) = parse_err_kind("P4\n2 1\n");
        assert_eq!((line, col), (1, 1));
        assert!(matches!(kind, ParseErrorKind::BadMagic { .. }));

        let (line, col, kind) = parse_err_kind("P1\n2 x\n1 0\n");
        assert_eq!((line, col), (2, 3));
        assert!(matches!(
            kind,
            ParseErrorKind::BadHeader {
                field: "height",
                ..
            }
        ));

        let (_, _, kind) = parse_err_kind("P1\n0 1\n");
        assert!(matches!(
            kind,
            ParseErrorKind::BadHeader { field: "width", .. }
        ));

        let (_, _, kind) = parse_err_kind("P1\n2");
        assert_eq!(kind, ParseErrorKind::UnexpectedEof("height"));
    }

    #[test]
    fn reports_bad_pixel_with_position() {
        let (line, _, kind) = parse_err_kind("P1\n2 2\n1 0\n0 2\n");
        assert_eq!(line, 4);
        assert_eq!(kind, ParseErrorKind::BadPixel("2".into()));
    }

    #[test]
    fn reports_dimension_mismatch() {
        let (_, _, kind) = parse_err_kind("P1\n2 2\n1 0 1\n");
        assert_eq!(
            kind,
            ParseErrorKind::DimensionMismatch {
                expected: 4,
                found: 3
            }
        );
        let (line, col, kind) = parse_err_kind("P1\n2 1\n1 0 1\n");
        assert_eq!((line, col), (3, 5));
        assert_eq!(
            kind,
            ParseErrorKind::DimensionMismatch {
                expected: 2,
                found: 3
            }
        );
    }

    #[test]
    fn builtin_masks_are_nonempty_silhouettes() {
        for name in ["aircraft", "bird"] {
            let m = builtin_mask(name).unwrap();
            assert_eq!((m.width(), m.height()), (64, 64));
            let n = m.reflective_count();
            assert!(n > 200 && n < 64 * 64 / 2, "{name}: {n}");
        }
        assert!(matches!(
            builtin_mask("plane"),
            Err(SceneError::UnknownBuiltin(_))
        ));
    }

    /// `cargo test -p qsi-core -- --ignored regenerate_assets` rewrites the
    /// shipped PBM files from the vertex lists.
    #[test]
    #[ignore]
    fn regenerate_assets() {
        for name in ["aircraft", "bird"] {
            let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("assets/{name}.pbm"));
            builtin_mask(name).unwrap().write_pbm(path).unwrap();
        }
    }

    #[test]
    fn builtins_match_shipped_assets() {
        for name in ["aircraft", "bird"] {
            let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("assets/{name}.pbm"));
            let shipped = load_mask(&path).unwrap();
            assert_eq!(shipped, builtin_mask(name).unwrap(), "{name}");
            // count set bits straight from the file text, skipping the header
            let text = fs::read_to_string(&path).unwrap();
            let body: String = text.lines().skip(2).collect();
            let ones = body.chars().filter(|&c| c == '1').count();
            assert_eq!(ones, shipped.reflective_count());
        }
    }

    #[test]
    fn sample_position_examples() {
        let one = ObjectMask::filled(1, 1).unwrap();
        assert_eq!(sample_position(&one, 0.0, 0.0), PixelCoord::new(0, 0));
        assert_eq!(sample_position(&one, 0.999, 0.5), PixelCoord::new(0, 0));
        let two = ObjectMask::filled(2, 2).unwrap();
        assert_eq!(sample_position(&two, 0.6, 0.1), PixelCoord::new(1, 0));
    }

    #[test]
    fn reflect_examples() {
        let m = parse_pbm("P1 2 1 1 0").unwrap();
        assert_eq!(
            reflect(&m, PixelCoord::new(0, 0)).unwrap(),
            Reflection::Reflected
        );
        assert_eq!(
            reflect(&m, PixelCoord::new(1, 0)).unwrap(),
            Reflection::Absorbed
        );
        assert!(matches!(
            reflect(&m, PixelCoord::new(2, 0)),
            Err(SceneError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn pgm_examples() {
        let g = CountGrid::from_counts(1, 1, vec![5]).unwrap();
        assert_eq!(g.to_pgm(), "P2\n1 1\n5\n5\n");
        let z = CountGrid::zeros(2, 2);
        assert_eq!(z.to_pgm(), "P2\n2 2\n1\n0 0\n0 0\n");
    }

    #[test]
    fn pgm_lines_wrap_at_seventy() {
        let g = CountGrid::from_counts(64, 1, (0..64).map(|i| 1000 + i).collect()).unwrap();
        let text = g.to_pgm();
        assert!(text.lines().all(|l| l.len() <= MAX_LINE));
        assert_eq!(parse_pgm(&text).unwrap(), g);
        let m = builtin_mask("aircraft").unwrap();
        assert!(m.to_pbm().lines().all(|l| l.len() <= MAX_LINE));
    }

    #[test]
    fn pgm_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.pgm");
        let g = CountGrid::from_counts(3, 2, vec![0, 7, 2, 9, 1, 0]).unwrap();
        write_image_pgm(&g, &path).unwrap();
        assert_eq!(read_image_pgm(&path).unwrap(), g);
    }

    #[test]
    fn pgm_rejects_value_above_maxval() {
        assert!(matches!(
            parse_pgm("P2 1 1 3 4"),
            Err(SceneError::Parse {
                kind: ParseErrorKind::BadPixel(_),
                ..
            })
        ));
    }

    fn arb_mask() -> impl Strategy<Value = ObjectMask> {
        (1usize..90, 1usize..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<bool>(), w * h)
                .prop_map(move |bits| ObjectMask::new(w, h, bits).unwrap())
        })
    }

    proptest! {
        #[test]
        fn pbm_round_trip(mask in arb_mask()) {
            prop_assert_eq!(parse_pbm(&mask.to_pbm()).unwrap(), mask);
        }

        #[test]
        fn pgm_round_trip(w in 1usize..40, h in 1usize..6, seed in proptest::collection::vec(0u64..100_000, 240)) {
            let counts: Vec<u64> = seed.into_iter().take(w * h).collect();
            let g = CountGrid::from_counts(w, h, counts).unwrap();
            prop_assert_eq!(parse_pgm(&g.to_pgm()).unwrap(), g);
        }

        #[test]
        fn sample_position_in_bounds(w in 1usize..100, h in 1usize..100, u1 in 0.0f64..1.0, u2 in 0.0f64..1.0) {
            let m = ObjectMask::filled(w, h).unwrap();
            prop_assert!(m.contains(sample_position(&m, u1, u2)));
        }
    }
}
