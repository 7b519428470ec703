//! Missing-data indicators and synthetic cloud masks.
//!
//! The indicator matrix marks every missing (cloud) entry of a stack with
//! a 1. Synthetic masks are grown at a target blocking rate either by
//! pasting blobs from a bank of harvested cloud shapes or, with an empty
//! bank, by seeded accretion growth that produces compact blobs.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rasterstack::GridStack;

/// Binary indicator of missing entries, same frames-by-pixels shape as the
/// stack it pairs with. 1 (true) marks a missing entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskMatrix {
    rows: usize,
    cols: usize,
    bits: Array2<bool>,
}

impl MaskMatrix {
    /// All-zero (nothing masked) indicator for an `frames` × `rows·cols` stack.
    pub fn zeros(frames: usize, rows: usize, cols: usize) -> MaskMatrix {
        MaskMatrix {
            rows,
            cols,
            bits: Array2::from_elem((frames, rows * cols), false),
        }
    }

    pub fn new(rows: usize, cols: usize, bits: Array2<bool>) -> Result<MaskMatrix> {
        if bits.ncols() != rows * cols {
            return Err(Error::shape(
                format!("{} columns (= {rows}x{cols})", rows * cols),
                format!("{} columns", bits.ncols()),
            ));
        }
        Ok(MaskMatrix { rows, cols, bits })
    }

    /// Stack-level mask that applies `frame_mask` to one frame and leaves
    /// every other frame untouched.
    pub fn for_frame(
        frames: usize,
        rows: usize,
        cols: usize,
        frame_index: usize,
        frame_mask: &Array2<bool>,
    ) -> Result<MaskMatrix> {
        if frame_index >= frames {
            return Err(Error::Usage(format!(
                "frame index {frame_index} out of range (stack has {frames})"
            )));
        }
        if frame_mask.dim() != (rows, cols) {
            return Err(Error::shape(
                format!("{rows}x{cols} frame mask"),
                format!("{}x{} frame mask", frame_mask.nrows(), frame_mask.ncols()),
            ));
        }
        let mut mask = MaskMatrix::zeros(frames, rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                mask.bits[(frame_index, r * cols + c)] = frame_mask[(r, c)];
            }
        }
        Ok(mask)
    }

    pub fn frames(&self) -> usize {
        self.bits.nrows()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_masked(&self, frame: usize, pixel: usize) -> bool {
        self.bits[(frame, pixel)]
    }

    /// Number of masked entries.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Entry-wise union of two masks of identical shape.
    pub fn union(&self, other: &MaskMatrix) -> Result<MaskMatrix> {
        if self.bits.dim() != other.bits.dim() || self.rows != other.rows {
            return Err(Error::shape(
                format!("{:?}", self.bits.dim()),
                format!("{:?}", other.bits.dim()),
            ));
        }
        let bits = Array2::from_shape_fn(self.bits.dim(), |ix| self.bits[ix] || other.bits[ix]);
        MaskMatrix::new(self.rows, self.cols, bits)
    }

    /// FNV-1a checksum of the bit pattern, used to audit that sweep cells
    /// sharing a (rate, seed) pair really saw the same mask.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |byte: u64| {
            h ^= byte;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        mix(self.frames() as u64);
        mix(self.rows as u64);
        mix(self.cols as u64);
        for &b in self.bits.iter() {
            mix(b as u64);
        }
        h
    }

    /// Serialize as a fully observed 0/1 stack (GSF-compatible).
    pub fn to_stack(&self) -> GridStack {
        let values = self.bits.mapv(|b| if b { 1.0 } else { 0.0 });
        GridStack::fully_observed(self.rows, self.cols, values)
            .expect("mask dims are valid stack dims")
    }

    /// Parse a fully observed 0/1 stack back into a mask.
    pub fn from_stack(stack: &GridStack) -> Result<MaskMatrix> {
        let mut bits = Array2::from_elem((stack.frames(), stack.pixels()), false);
        for t in 0..stack.frames() {
            for j in 0..stack.pixels() {
                match stack.get(t, j) {
                    Some(v) => {
                        if v == 1.0 {
                            bits[(t, j)] = true;
                        } else if v != 0.0 {
                            return Err(Error::Domain(format!(
                                "mask entry must be 0 or 1, got {v} at frame {t}, pixel {j}"
                            )));
                        }
                    }
                    None => {
                        return Err(Error::Domain(format!(
                            "mask stack has a missing entry at frame {t}, pixel {j}"
                        )))
                    }
                }
            }
        }
        MaskMatrix::new(stack.rows(), stack.cols(), bits)
    }

    pub(crate) fn bits(&self) -> &Array2<bool> {
        &self.bits
    }
}

/// Indicator of the entries that are missing in `stack`.
pub fn mask_from_stack(stack: &GridStack) -> MaskMatrix {
    let bits = stack.presence().mapv(|p| !p);
    MaskMatrix {
        rows: stack.rows(),
        cols: stack.cols(),
        bits,
    }
}

/// Fraction of masked entries.
pub fn blocking_rate(mask: &MaskMatrix) -> f64 {
    mask.count() as f64 / (mask.frames() * mask.pixels()) as f64
}

/// New stack in which every entry under the mask is missing; everything
/// else is copied unchanged. Entries that were already missing stay missing.
pub fn apply_mask(stack: &GridStack, mask: &MaskMatrix) -> Result<GridStack> {
    if mask.frames() != stack.frames()
        || mask.rows() != stack.rows()
        || mask.cols() != stack.cols()
    {
        return Err(Error::shape(
            format!(
                "mask of {}x{}x{}",
                stack.frames(),
                stack.rows(),
                stack.cols()
            ),
            format!("mask of {}x{}x{}", mask.frames(), mask.rows(), mask.cols()),
        ));
    }
    let values = stack.raw_values().clone();
    let present =
        Array2::from_shape_fn(values.dim(), |ix| stack.presence()[ix] && !mask.bits[ix]);
    GridStack::new(stack.rows(), stack.cols(), values, present)
}

/// Bank of cloud shapes, each a binary frame-sized blob. Every blob is
/// 4-connected.
#[derive(Debug, Clone, Default)]
pub struct CloudBank {
    shapes: Vec<Array2<bool>>,
}

impl CloudBank {
    pub fn empty() -> CloudBank {
        CloudBank { shapes: Vec::new() }
    }

    pub fn new(shapes: Vec<Array2<bool>>) -> Result<CloudBank> {
        for (i, shape) in shapes.iter().enumerate() {
            let sizes = component_sizes(shape);
            if sizes.is_empty() {
                return Err(Error::Domain(format!("bank shape {i} is empty")));
            }
            if sizes.len() > 1 {
                return Err(Error::Domain(format!(
                    "bank shape {i} is not 4-connected ({} components)",
                    sizes.len()
                )));
            }
        }
        Ok(CloudBank { shapes })
    }

    /// Harvest the 4-connected components of missing pixels in each frame
    /// as reusable cloud shapes.
    pub fn harvest_missing(stack: &GridStack) -> CloudBank {
        let mut shapes = Vec::new();
        for t in 0..stack.frames() {
            let miss = Array2::from_shape_fn((stack.rows(), stack.cols()), |(r, c)| {
                !stack.is_present(t, r * stack.cols() + c)
            });
            for component in components_of(&miss) {
                let mut shape = Array2::from_elem(miss.dim(), false);
                for &(r, c) in &component {
                    shape[(r, c)] = true;
                }
                shapes.push(shape);
            }
        }
        CloudBank { shapes }
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn shapes(&self) -> &[Array2<bool>] {
        &self.shapes
    }
}

/// Grow a synthetic cloud mask over a `rows × cols` frame whose blocking
/// rate lands within ±0.005 of `target_rate`. Deterministic per seed.
///
/// Shapes from the bank are pasted at random positions while they fit in
/// the remaining pixel budget; the remainder (or everything, with an empty
/// bank) is grown by seeded frontier accretion, which yields compact blobs.
pub fn synthesize_cloud(
    rows: usize,
    cols: usize,
    target_rate: f64,
    seed: u64,
    bank: &CloudBank,
) -> Result<Array2<bool>> {
    const RATE_TOL: f64 = 0.005;
    if !(0.0..=1.0).contains(&target_rate) {
        return Err(Error::Usage(format!(
            "target rate must lie in [0, 1], got {target_rate}"
        )));
    }
    let total = rows * cols;
    let mut mask = Array2::from_elem((rows, cols), false);
    let target_count = (target_rate * total as f64).round() as usize;
    let achievable = target_count as f64 / total as f64;
    if (achievable - target_rate).abs() > RATE_TOL {
        return Err(Error::Synthesis(format!(
            "no pixel count on a {rows}x{cols} grid lands within {RATE_TOL} of rate {target_rate}"
        )));
    }
    if target_count == 0 {
        return Ok(mask);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step_budget = 10 * total;
    let mut steps = 0usize;
    let mut masked = 0usize;

    while masked < target_count {
        let remaining = target_count - masked;
        let mut pasted = false;
        if !bank.is_empty() {
            // One paste attempt per round; oversized or useless shapes fall
            // through to accretion growth.
            steps += 1;
            if steps > step_budget {
                return Err(Error::Synthesis(format!(
                    "exceeded {step_budget} growth steps at rate {target_rate}"
                )));
            }
            let shape = &bank.shapes[rng.random_range(0..bank.shapes.len())];
            if let Some(added) = try_paste(&mut mask, shape, remaining, &mut rng) {
                masked += added;
                pasted = added > 0;
            }
        }
        if !pasted {
            let blob_cap = remaining.min(blob_size_for(total, &mut rng));
            let grown = grow_blob(&mut mask, blob_cap, &mut rng, &mut steps, step_budget)?;
            if grown == 0 {
                return Err(Error::Synthesis(format!(
                    "grid saturated before reaching rate {target_rate}"
                )));
            }
            masked += grown;
        }
    }
    Ok(mask)
}

fn blob_size_for(total: usize, rng: &mut ChaCha8Rng) -> usize {
    let hi = (total / 8).clamp(20, 400);
    rng.random_range(10..=hi)
}

/// Paste `shape` (translated by a random offset of its bounding box) if the
/// newly covered pixels fit in `budget`. Returns the number of new pixels.
fn try_paste(
    mask: &mut Array2<bool>,
    shape: &Array2<bool>,
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> Option<usize> {
    let cells: Vec<(usize, usize)> = shape
        .indexed_iter()
        .filter(|(_, &b)| b)
        .map(|(ix, _)| ix)
        .collect();
    if cells.is_empty() || cells.len() > budget {
        return None;
    }
    let (rows, cols) = mask.dim();
    let min_r = cells.iter().map(|&(r, _)| r).min().unwrap();
    let max_r = cells.iter().map(|&(r, _)| r).max().unwrap();
    let min_c = cells.iter().map(|&(_, c)| c).min().unwrap();
    let max_c = cells.iter().map(|&(_, c)| c).max().unwrap();
    let (h, w) = (max_r - min_r + 1, max_c - min_c + 1);
    if h > rows || w > cols {
        return None;
    }
    let dr = rng.random_range(0..=(rows - h));
    let dc = rng.random_range(0..=(cols - w));
    let new_cells: Vec<(usize, usize)> = cells
        .iter()
        .map(|&(r, c)| (r - min_r + dr, c - min_c + dc))
        .filter(|&ix| !mask[ix])
        .collect();
    if new_cells.len() > budget {
        return None;
    }
    for ix in &new_cells {
        mask[*ix] = true;
    }
    Some(new_cells.len())
}

/// Frontier-accretion growth of one blob of exactly `size` new pixels
/// (fewer only if the grid saturates). Each accreted pixel counts as one
/// growth step against the budget.
fn grow_blob(
    mask: &mut Array2<bool>,
    size: usize,
    rng: &mut ChaCha8Rng,
    steps: &mut usize,
    step_budget: usize,
) -> Result<usize> {
    let (rows, cols) = mask.dim();
    let seed_cell = match random_unmasked(mask, rng, steps, step_budget)? {
        Some(cell) => cell,
        None => return Ok(0),
    };
    let mut frontier: Vec<(usize, usize)> = vec![seed_cell];
    let mut queued = Array2::from_elem((rows, cols), false);
    queued[seed_cell] = true;
    let mut grown = 0usize;
    while grown < size && !frontier.is_empty() {
        *steps += 1;
        if *steps > step_budget {
            return Err(Error::Synthesis(format!(
                "exceeded {step_budget} growth steps"
            )));
        }
        let pick = rng.random_range(0..frontier.len());
        let (r, c) = frontier.swap_remove(pick);
        if mask[(r, c)] {
            continue;
        }
        mask[(r, c)] = true;
        grown += 1;
        for (nr, nc) in neighbors4(r, c, rows, cols) {
            if !mask[(nr, nc)] && !queued[(nr, nc)] {
                queued[(nr, nc)] = true;
                frontier.push((nr, nc));
            }
        }
    }
    Ok(grown)
}

fn random_unmasked(
    mask: &Array2<bool>,
    rng: &mut ChaCha8Rng,
    steps: &mut usize,
    step_budget: usize,
) -> Result<Option<(usize, usize)>> {
    let (rows, cols) = mask.dim();
    // Rejection sampling first; near saturation fall back to an explicit
    // enumeration of the free cells.
    for _ in 0..32 {
        *steps += 1;
        if *steps > step_budget {
            return Err(Error::Synthesis(format!(
                "exceeded {step_budget} growth steps while seeding a blob"
            )));
        }
        let r = rng.random_range(0..rows);
        let c = rng.random_range(0..cols);
        if !mask[(r, c)] {
            return Ok(Some((r, c)));
        }
    }
    let free: Vec<(usize, usize)> = mask
        .indexed_iter()
        .filter(|(_, &b)| !b)
        .map(|(ix, _)| ix)
        .collect();
    if free.is_empty() {
        Ok(None)
    } else {
        Ok(Some(free[rng.random_range(0..free.len())]))
    }
}

fn neighbors4(r: usize, c: usize, rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(4);
    if r > 0 {
        out.push((r - 1, c));
    }
    if r + 1 < rows {
        out.push((r + 1, c));
    }
    if c > 0 {
        out.push((r, c - 1));
    }
    if c + 1 < cols {
        out.push((r, c + 1));
    }
    out
}

/// Sizes of the 4-connected components of set pixels.
pub fn component_sizes(mask: &Array2<bool>) -> Vec<usize> {
    components_of(mask).iter().map(Vec::len).collect()
}

fn components_of(mask: &Array2<bool>) -> Vec<Vec<(usize, usize)>> {
    let (rows, cols) = mask.dim();
    let mut seen = Array2::from_elem((rows, cols), false);
    let mut components = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if !mask[(r, c)] || seen[(r, c)] {
                continue;
            }
            let mut queue = vec![(r, c)];
            seen[(r, c)] = true;
            let mut cells = Vec::new();
            while let Some((qr, qc)) = queue.pop() {
                cells.push((qr, qc));
                for (nr, nc) in neighbors4(qr, qc, rows, cols) {
                    if mask[(nr, nc)] && !seen[(nr, nc)] {
                        seen[(nr, nc)] = true;
                        queue.push((nr, nc));
                    }
                }
            }
            components.push(cells);
        }
    }
    components
}
