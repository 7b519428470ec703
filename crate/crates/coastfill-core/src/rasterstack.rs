//! Categorical raster stacks: the frames-by-pixels data matrix, label
//! encoding, flatten/unflatten, and the GSF text format.
//!
//! A stack of `M` co-registered `rows × cols` frames is stored as an
//! `M × N` matrix (`N = rows · cols`) with one flattened frame per row.
//! Entries are optional: an absent entry is a cloud (or noise) pixel.
//! Missingness is tracked by a presence flag, never by a sentinel value,
//! so continuous reconstructions may take any finite real value.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Landscape category of a pixel, ordered by wetness.
///
/// The numeric codes mirror the ordering: water (1) < wetland (2) < land (3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassLabel {
    Water = 1,
    Wetland = 2,
    Land = 3,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::Water, ClassLabel::Wetland, ClassLabel::Land];

    /// Numeric code of the class.
    pub fn code(self) -> u8 {
        self as u8
    }

    /// Lowercase class name.
    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Water => "water",
            ClassLabel::Wetland => "wetland",
            ClassLabel::Land => "land",
        }
    }

    /// Parse a numeric code; only 1, 2 and 3 are constructible.
    pub fn from_code(code: u8) -> Result<ClassLabel> {
        match code {
            1 => Ok(ClassLabel::Water),
            2 => Ok(ClassLabel::Wetland),
            3 => Ok(ClassLabel::Land),
            other => Err(Error::Domain(format!(
                "class code must be 1, 2 or 3, got {other}"
            ))),
        }
    }

    /// Interpret a stored value as a class, if it is exactly a class code.
    pub fn from_value(value: f64) -> Option<ClassLabel> {
        if value == 1.0 {
            Some(ClassLabel::Water)
        } else if value == 2.0 {
            Some(ClassLabel::Wetland)
        } else if value == 3.0 {
            Some(ClassLabel::Land)
        } else {
            None
        }
    }

    /// Zero-based index used for confusion-matrix axes.
    pub fn index(self) -> usize {
        self as usize - 1
    }
}

/// Header of a serialized stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StackHeader {
    pub frames: usize,
    pub rows: usize,
    pub cols: usize,
}

impl StackHeader {
    pub const MAGIC: &'static str = "GSF1";
}

/// A stack of `frames` raster frames of `rows × cols` pixels each,
/// flattened row-major into a frames-by-pixels matrix.
///
/// Immutable after construction; all mutation happens by building new
/// stacks, so shared read-only use across threads is safe.
#[derive(Debug, Clone, PartialEq)]
pub struct GridStack {
    rows: usize,
    cols: usize,
    /// `M × N` values; entries where `present` is false hold 0 and carry no meaning.
    values: Array2<f64>,
    /// `M × N` presence flags; false marks a missing (cloud) entry.
    present: Array2<bool>,
}

impl GridStack {
    /// Build a stack from a values matrix and a presence matrix of equal shape.
    pub fn new(
        rows: usize,
        cols: usize,
        values: Array2<f64>,
        present: Array2<bool>,
    ) -> Result<GridStack> {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Domain("rows * cols overflows".into()))?;
        if values.dim() != present.dim() {
            return Err(Error::shape(
                format!("{:?}", values.dim()),
                format!("{:?} (presence matrix)", present.dim()),
            ));
        }
        if values.ncols() != n {
            return Err(Error::shape(
                format!("{} columns (= {rows}x{cols})", n),
                format!("{} columns", values.ncols()),
            ));
        }
        for ((i, j), &v) in values.indexed_iter() {
            if present[(i, j)] && !v.is_finite() {
                return Err(Error::Domain(format!(
                    "non-finite value {v} at frame {i}, pixel {j}"
                )));
            }
        }
        let mut values = values;
        // Normalize placeholders so equal stacks compare equal.
        for ((i, j), p) in present.indexed_iter() {
            if !p {
                values[(i, j)] = 0.0;
            }
        }
        Ok(GridStack {
            rows,
            cols,
            values,
            present,
        })
    }

    /// Build a fully observed stack from a numeric frames-by-pixels matrix.
    pub fn fully_observed(rows: usize, cols: usize, values: Array2<f64>) -> Result<GridStack> {
        let present = Array2::from_elem(values.dim(), true);
        GridStack::new(rows, cols, values, present)
    }

    /// Build a stack by flattening 2-D frames.
    pub fn from_frames(frames: &[Array2<Option<f64>>]) -> Result<GridStack> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Usage("cannot build a stack from zero frames".into()))?;
        let (rows, cols) = first.dim();
        let n = rows * cols;
        let mut values = Array2::zeros((frames.len(), n));
        let mut present = Array2::from_elem((frames.len(), n), false);
        for (t, frame) in frames.iter().enumerate() {
            let row = flatten_frame(frame, rows, cols)?;
            for (j, entry) in row.into_iter().enumerate() {
                if let Some(v) = entry {
                    values[(t, j)] = v;
                    present[(t, j)] = true;
                }
            }
        }
        GridStack::new(rows, cols, values, present)
    }

    pub fn header(&self) -> StackHeader {
        StackHeader {
            frames: self.frames(),
            rows: self.rows,
            cols: self.cols,
        }
    }

    /// Number of frames `M`.
    pub fn frames(&self) -> usize {
        self.values.nrows()
    }

    /// Frame height in pixels.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Frame width in pixels.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Pixels per frame `N = rows · cols`.
    pub fn pixels(&self) -> usize {
        self.rows * self.cols
    }

    /// Entry at (frame, flattened pixel index), `None` when missing.
    pub fn get(&self, frame: usize, pixel: usize) -> Option<f64> {
        if self.present[(frame, pixel)] {
            Some(self.values[(frame, pixel)])
        } else {
            None
        }
    }

    /// Entry addressed by frame and 2-D pixel coordinates.
    pub fn get_at(&self, frame: usize, row: usize, col: usize) -> Option<f64> {
        self.get(frame, row * self.cols + col)
    }

    pub fn is_present(&self, frame: usize, pixel: usize) -> bool {
        self.present[(frame, pixel)]
    }

    /// Reassemble frame `t` as a 2-D grid.
    pub fn frame(&self, t: usize) -> Result<Array2<Option<f64>>> {
        if t >= self.frames() {
            return Err(Error::Usage(format!(
                "frame index {t} out of range (stack has {})",
                self.frames()
            )));
        }
        let row: Vec<Option<f64>> = (0..self.pixels()).map(|j| self.get(t, j)).collect();
        unflatten_frame(&row, self.rows, self.cols)
    }

    /// Number of missing entries over the whole stack.
    pub fn missing_count(&self) -> usize {
        self.present.iter().filter(|&&p| !p).count()
    }

    /// True when every present entry is exactly a class code.
    pub fn is_categorical(&self) -> bool {
        self.values
            .indexed_iter()
            .all(|((i, j), &v)| !self.present[(i, j)] || ClassLabel::from_value(v).is_some())
    }

    pub(crate) fn raw_values(&self) -> &Array2<f64> {
        &self.values
    }

    pub(crate) fn presence(&self) -> &Array2<bool> {
        &self.present
    }
}

/// Flatten an `rows × cols` frame into a row vector of length `rows · cols`,
/// row-major, so horizontally adjacent pixels stay adjacent in the row.
pub fn flatten_frame(
    frame: &Array2<Option<f64>>,
    rows: usize,
    cols: usize,
) -> Result<Vec<Option<f64>>> {
    if frame.dim() != (rows, cols) {
        return Err(Error::shape(
            format!("{rows}x{cols} frame"),
            format!("{}x{} frame", frame.nrows(), frame.ncols()),
        ));
    }
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            out.push(frame[(r, c)]);
        }
    }
    Ok(out)
}

/// Inverse of [`flatten_frame`].
pub fn unflatten_frame(row: &[Option<f64>], rows: usize, cols: usize) -> Result<Array2<Option<f64>>> {
    if row.len() != rows * cols {
        return Err(Error::shape(
            format!("row of length {} (= {rows}x{cols})", rows * cols),
            format!("row of length {}", row.len()),
        ));
    }
    Ok(Array2::from_shape_fn((rows, cols), |(r, c)| {
        row[r * cols + c]
    }))
}

/// Per-frame composition: fractions of each class plus the missing fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassFractions {
    pub water: f64,
    pub wetland: f64,
    pub land: f64,
    pub missing: f64,
}

impl ClassFractions {
    pub fn sum(&self) -> f64 {
        self.water + self.wetland + self.land + self.missing
    }
}

/// Per-frame class composition of a categorical stack.
///
/// The four fractions of every frame sum to 1 up to rounding in the final
/// divisions (well inside 1e-12).
pub fn class_fractions(stack: &GridStack) -> Result<Vec<ClassFractions>> {
    let n = stack.pixels() as f64;
    let mut out = Vec::with_capacity(stack.frames());
    for t in 0..stack.frames() {
        let mut counts = [0usize; 3];
        let mut missing = 0usize;
        for j in 0..stack.pixels() {
            match stack.get(t, j) {
                None => missing += 1,
                Some(v) => match ClassLabel::from_value(v) {
                    Some(label) => counts[label.index()] += 1,
                    None => {
                        return Err(Error::Domain(format!(
                            "non-categorical value {v} at frame {t}, pixel {j}"
                        )))
                    }
                },
            }
        }
        out.push(ClassFractions {
            water: counts[0] as f64 / n,
            wetland: counts[1] as f64 / n,
            land: counts[2] as f64 / n,
            missing: missing as f64 / n,
        });
    }
    Ok(out)
}

/// Render a stack in the GSF text format.
///
/// Line 1 is `GSF1 <frames> <rows> <cols>`; then one block per frame of
/// `rows` lines with `cols` space-separated tokens, blank line between
/// frames. Missing entries are written `NA`; values print in the shortest
/// form that parses back to the same f64, so class codes appear as plain
/// integers and continuous reconstructions keep full precision.
pub fn format_stack(stack: &GridStack) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {}",
        StackHeader::MAGIC,
        stack.frames(),
        stack.rows(),
        stack.cols()
    );
    for t in 0..stack.frames() {
        if t > 0 {
            out.push('\n');
        }
        for r in 0..stack.rows() {
            for c in 0..stack.cols() {
                if c > 0 {
                    out.push(' ');
                }
                match stack.get_at(t, r, c) {
                    Some(v) => {
                        let _ = write!(out, "{v}");
                    }
                    None => out.push_str("NA"),
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Parse GSF text into a stack. Errors carry 1-based line numbers.
pub fn parse_stack(text: &str) -> Result<GridStack> {
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file, expected GSF1 header"))?;
    let header = parse_header(header_line)?;

    let n = header.rows * header.cols;
    let mut values = Array2::zeros((header.frames, n));
    let mut present = Array2::from_elem((header.frames, n), false);

    let mut frame = 0usize;
    let mut row_in_frame = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            if row_in_frame != 0 && row_in_frame != header.rows {
                return Err(parse_err(
                    line_no,
                    format!(
                        "blank line inside frame {frame}: got {row_in_frame} of {} rows",
                        header.rows
                    ),
                ));
            }
            continue;
        }
        if frame >= header.frames {
            return Err(parse_err(
                line_no,
                format!("data after the {} declared frames", header.frames),
            ));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != header.cols {
            return Err(parse_err(
                line_no,
                format!("expected {} tokens, got {}", header.cols, tokens.len()),
            ));
        }
        for (c, token) in tokens.iter().enumerate() {
            let j = row_in_frame * header.cols + c;
            if *token == "NA" {
                continue;
            }
            let v: f64 = token
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad token {token:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(
                    line_no,
                    format!("non-finite value {token:?} is not a legal entry"),
                ));
            }
            values[(frame, j)] = v;
            present[(frame, j)] = true;
        }
        row_in_frame += 1;
        if row_in_frame == header.rows {
            frame += 1;
            row_in_frame = 0;
        }
    }
    if frame != header.frames || row_in_frame != 0 {
        return Err(parse_err(
            text.lines().count(),
            format!(
                "file declares {} frames of {} rows but ends inside frame {frame}",
                header.frames, header.rows
            ),
        ));
    }
    GridStack::new(header.rows, header.cols, values, present)
}

fn parse_header(line: &str) -> Result<StackHeader> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != StackHeader::MAGIC {
        return Err(parse_err(
            1,
            format!("expected \"{} <frames> <rows> <cols>\"", StackHeader::MAGIC),
        ));
    }
    let parse_dim = |s: &str, name: &str| -> Result<usize> {
        let v: usize = s
            .parse()
            .map_err(|_| parse_err(1, format!("bad {name} {s:?}")))?;
        if v == 0 {
            return Err(parse_err(1, format!("{name} must be at least 1")));
        }
        Ok(v)
    };
    Ok(StackHeader {
        frames: parse_dim(fields[1], "frame count")?,
        rows: parse_dim(fields[2], "row count")?,
        cols: parse_dim(fields[3], "column count")?,
    })
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Read a stack from a GSF file.
pub fn read_stack(path: impl AsRef<Path>) -> Result<GridStack> {
    let text = std::fs::read_to_string(path)?;
    parse_stack(&text)
}

/// Write a stack to a GSF file (UTF-8, LF line endings).
pub fn write_stack(stack: &GridStack, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_stack(stack))?;
    Ok(())
}
