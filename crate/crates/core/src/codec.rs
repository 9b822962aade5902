//! Splitting binary images into shares, stacking shares, and decoding stacks.
//!
//! Each secret pixel becomes one `block_w × block_h` block of subpixels in
//! every share. Block cells that carry no subpixel hold a constant pad value
//! shared by all shares and both colors.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitcore::{permute_columns, BitMatrix, BitRow, ColumnPermutation};
use crate::error::{Error, Result};
use crate::schemes::{or_weight_extremes, Color, SchemeBasis};

/// A monochrome image; `true` is black.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    pixels: Vec<bool>,
}

impl BinaryImage {
    /// Row-major pixels, `0` white and `1` black.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "{} pixels supplied for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().position(|&v| v > 1) {
            return Err(Error::invalid(format!("pixel {p} is not binary")));
        }
        Ok(BinaryImage {
            width,
            height,
            pixels: pixels.into_iter().map(|v| v == 1).collect(),
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        BinaryImage {
            width,
            height,
            pixels,
        }
    }

    pub fn filled(width: usize, height: usize, color: Color) -> Self {
        BinaryImage::from_fn(width, height, |_, _| color.is_black())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.pixels.len()
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, black: bool) {
        self.pixels[y * self.width + x] = black;
    }

    pub fn color(&self, x: usize, y: usize) -> Color {
        Color::from_bit(self.get(x, y))
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    /// Each pixel becomes a solid `factor × factor` square.
    pub fn expand(&self, factor: usize) -> BinaryImage {
        BinaryImage::from_fn(self.width * factor, self.height * factor, |x, y| {
            self.get(x / factor, y / factor)
        })
    }
}

impl std::fmt::Debug for BinaryImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryImage {}x{} [", self.width, self.height)?;
        for y in 0..self.height {
            let row: String = (0..self.width)
                .map(|x| if self.get(x, y) { '#' } else { '.' })
                .collect();
            writeln!(f, "  {row}")?;
        }
        write!(f, "]")
    }
}

/// Placement of `m` subpixels inside a block.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubpixelLayout {
    m: usize,
    block_w: usize,
    block_h: usize,
    /// `(row, col)` of subpixel `i` within the block.
    placement: Vec<(usize, usize)>,
    pad: bool,
}

impl SubpixelLayout {
    pub fn new(
        m: usize,
        block_w: usize,
        block_h: usize,
        placement: Vec<(usize, usize)>,
        pad: bool,
    ) -> Result<Self> {
        if m == 0 || placement.len() != m {
            return Err(Error::invalid(format!(
                "layout places {} subpixels, expected m = {m} >= 1",
                placement.len()
            )));
        }
        if block_w.abs_diff(block_h) > 1 {
            return Err(Error::invalid(format!(
                "{block_w}x{block_h} block distorts the aspect ratio"
            )));
        }
        let mut used = vec![false; block_w * block_h];
        for &(r, c) in &placement {
            if r >= block_h || c >= block_w || std::mem::replace(&mut used[r * block_w + c], true) {
                return Err(Error::invalid(format!(
                    "placement {placement:?} is not injective into a {block_w}x{block_h} block"
                )));
            }
        }
        Ok(SubpixelLayout {
            m,
            block_w,
            block_h,
            placement,
            pad,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn block_w(&self) -> usize {
        self.block_w
    }

    pub fn block_h(&self) -> usize {
        self.block_h
    }

    pub fn placement(&self) -> &[(usize, usize)] {
        &self.placement
    }

    pub fn pad(&self) -> bool {
        self.pad
    }

    /// Whether every subpixel sits at its row-major index, which is what
    /// [`default_layout`] produces.
    pub fn is_row_major(&self) -> bool {
        self.placement
            .iter()
            .enumerate()
            .all(|(i, &(r, c))| r * self.block_w + c == i)
    }
}

/// Smallest near-square block holding `m` subpixels, filled row-major.
/// `block_h = ceil(sqrt(m))`, `block_w = ceil(m / block_h)`.
pub fn default_layout(m: usize, pad: bool) -> Result<SubpixelLayout> {
    if m == 0 {
        return Err(Error::invalid("layout needs m >= 1"));
    }
    let mut block_h = (m as f64).sqrt() as usize;
    while block_h * block_h < m {
        block_h += 1;
    }
    let block_w = m.div_ceil(block_h);
    let placement = (0..m).map(|i| (i / block_w, i % block_w)).collect();
    SubpixelLayout::new(m, block_w, block_h, placement, pad)
}

/// A grid of subpixel blocks, one block per secret pixel.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SubpixelGrid {
    width: usize,
    height: usize,
    layout: SubpixelLayout,
    cells: Vec<bool>,
}

impl SubpixelGrid {
    /// A grid with every mapped subpixel white and every pad cell at the pad value.
    pub fn blank(width: usize, height: usize, layout: SubpixelLayout) -> Self {
        let gw = width * layout.block_w;
        let gh = height * layout.block_h;
        let mut grid = SubpixelGrid {
            width,
            height,
            cells: vec![layout.pad; gw * gh],
            layout,
        };
        let empty = BitRow::zeros(grid.layout.m);
        for y in 0..height {
            for x in 0..width {
                grid.set_block(x, y, &empty);
            }
        }
        grid
    }

    /// Wraps raw subpixel cells, checking dimensions.
    pub fn from_cells(
        width: usize,
        height: usize,
        layout: SubpixelLayout,
        cells: Vec<bool>,
    ) -> Result<Self> {
        let expected = width * layout.block_w * height * layout.block_h;
        if cells.len() != expected {
            return Err(Error::invalid(format!(
                "{} cells supplied, {width}x{height} blocks of {}x{} need {expected}",
                cells.len(),
                layout.block_w,
                layout.block_h
            )));
        }
        Ok(SubpixelGrid {
            width,
            height,
            layout,
            cells,
        })
    }

    /// Secret-pixel width.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Secret-pixel height.
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn layout(&self) -> &SubpixelLayout {
        &self.layout
    }

    pub fn grid_width(&self) -> usize {
        self.width * self.layout.block_w
    }

    pub fn grid_height(&self) -> usize {
        self.height * self.layout.block_h
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn cell(&self, gx: usize, gy: usize) -> bool {
        self.cells[gy * self.grid_width() + gx]
    }

    fn cell_index(&self, x: usize, y: usize, r: usize, c: usize) -> usize {
        let gx = x * self.layout.block_w + c;
        let gy = y * self.layout.block_h + r;
        gy * self.grid_width() + gx
    }

    /// The `m` mapped subpixels of block `(x, y)`, pad cells excluded.
    pub fn block_bits(&self, x: usize, y: usize) -> BitRow {
        BitRow::from_bools(
            self.layout
                .placement
                .iter()
                .map(|&(r, c)| self.cells[self.cell_index(x, y, r, c)]),
        )
    }

    /// Writes the mapped subpixels of block `(x, y)` and resets its pad cells.
    pub fn set_block(&mut self, x: usize, y: usize, bits: &BitRow) {
        assert_eq!(bits.len(), self.layout.m, "block bit count mismatch");
        for r in 0..self.layout.block_h {
            for c in 0..self.layout.block_w {
                let idx = self.cell_index(x, y, r, c);
                self.cells[idx] = self.layout.pad;
            }
        }
        for (i, &(r, c)) in self.layout.placement.iter().enumerate() {
            let idx = self.cell_index(x, y, r, c);
            self.cells[idx] = bits.get(i);
        }
    }

    /// Black subpixels of block `(x, y)`, counting mapped cells only.
    pub fn block_weight(&self, x: usize, y: usize) -> usize {
        self.layout
            .placement
            .iter()
            .filter(|&&(r, c)| self.cells[self.cell_index(x, y, r, c)])
            .count()
    }

    /// Whether every pad cell holds the layout's pad value.
    pub fn pads_intact(&self) -> bool {
        let mut mapped = vec![false; self.layout.block_w * self.layout.block_h];
        for &(r, c) in &self.layout.placement {
            mapped[r * self.layout.block_w + c] = true;
        }
        (0..self.height).all(|y| {
            (0..self.width).all(|x| {
                (0..self.layout.block_h).all(|r| {
                    (0..self.layout.block_w).all(|c| {
                        mapped[r * self.layout.block_w + c]
                            || self.cells[self.cell_index(x, y, r, c)] == self.layout.pad
                    })
                })
            })
        })
    }
}

impl std::fmt::Debug for SubpixelGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "SubpixelGrid {}x{} blocks of {}x{}",
            self.width, self.height, self.layout.block_w, self.layout.block_h
        )
    }
}

/// One participant's share.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ShareImage {
    index: usize,
    grid: SubpixelGrid,
}

impl ShareImage {
    /// Rejects grids whose pad cells were altered.
    pub fn new(index: usize, grid: SubpixelGrid) -> Result<Self> {
        if !grid.pads_intact() {
            return Err(Error::invalid(format!(
                "share {index} has altered pad cells"
            )));
        }
        Ok(ShareImage { index, grid })
    }

    /// Participant index, `0..n`.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn grid(&self) -> &SubpixelGrid {
        &self.grid
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn layout(&self) -> &SubpixelLayout {
        &self.grid.layout
    }

    pub fn block_bits(&self, x: usize, y: usize) -> BitRow {
        self.grid.block_bits(x, y)
    }
}

/// The OR of several shares.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StackedImage {
    sources: Vec<usize>,
    grid: SubpixelGrid,
}

impl StackedImage {
    /// Participant indices that went into the stack, ascending.
    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn share_count(&self) -> usize {
        self.sources.len()
    }

    pub fn grid(&self) -> &SubpixelGrid {
        &self.grid
    }
}

/// The `n × m` matrix that encodes one secret pixel; row `i` goes to share `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PixelCode {
    matrix: BitMatrix,
}

impl PixelCode {
    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    pub fn row(&self, participant: usize) -> &BitRow {
        self.matrix.row(participant)
    }
}

/// A uniformly random permutation of `0..m`.
pub fn random_permutation<R: Rng + ?Sized>(m: usize, rng: &mut R) -> ColumnPermutation {
    let mut mapping: Vec<usize> = (0..m).collect();
    mapping.shuffle(rng);
    ColumnPermutation::new(mapping).expect("shuffle of 0..m is a permutation")
}

/// Picks a uniformly random member of the collection for `color`.
pub fn encode_pixel<R: Rng + ?Sized>(basis: &SchemeBasis, color: Color, rng: &mut R) -> PixelCode {
    let p = random_permutation(basis.m(), rng);
    encode_pixel_with(basis, color, &p).expect("permutation sized to basis")
}

/// The collection member obtained from the canonical by a given permutation.
pub fn encode_pixel_with(
    basis: &SchemeBasis,
    color: Color,
    p: &ColumnPermutation,
) -> Result<PixelCode> {
    Ok(PixelCode {
        matrix: permute_columns(basis.canonical(color), p)?,
    })
}

/// Generator for pixel `(x, y)`: one ChaCha stream per pixel under the master seed,
/// so pixels can be encoded in any order.
pub fn pixel_rng(seed: u64, x: usize, y: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((y as u64) << 32) | x as u64);
    rng
}

fn check_layout(basis: &SchemeBasis, layout: &SubpixelLayout) -> Result<()> {
    if layout.m != basis.m() {
        return Err(Error::invalid(format!(
            "layout holds {} subpixels, scheme {} expands to {}",
            layout.m,
            basis.label(),
            basis.m()
        )));
    }
    Ok(())
}

/// Builds `n` shares from a per-pixel code generator.
pub(crate) fn assemble_shares(
    basis: &SchemeBasis,
    layout: &SubpixelLayout,
    width: usize,
    height: usize,
    mut code_for: impl FnMut(usize, usize) -> Result<PixelCode>,
) -> Result<Vec<ShareImage>> {
    check_layout(basis, layout)?;
    let mut shares: Vec<ShareImage> = (0..basis.n())
        .map(|index| ShareImage {
            index,
            grid: SubpixelGrid::blank(width, height, layout.clone()),
        })
        .collect();
    for y in 0..height {
        for x in 0..width {
            let code = code_for(x, y)?;
            for share in &mut shares {
                share.grid.set_block(x, y, code.row(share.index));
            }
        }
    }
    Ok(shares)
}

/// Splits `img` into `n` shares; deterministic in `seed`.
pub fn split_image(
    img: &BinaryImage,
    basis: &SchemeBasis,
    layout: &SubpixelLayout,
    seed: u64,
) -> Result<Vec<ShareImage>> {
    assemble_shares(basis, layout, img.width, img.height, |x, y| {
        Ok(encode_pixel(
            basis,
            img.color(x, y),
            &mut pixel_rng(seed, x, y),
        ))
    })
}

/// Cell-wise OR of the given shares.
pub fn stack(shares: &[&ShareImage]) -> Result<StackedImage> {
    let first = shares
        .first()
        .ok_or_else(|| Error::invalid("cannot stack zero shares"))?;
    let mut sources = Vec::with_capacity(shares.len());
    let mut cells = first.grid.cells.clone();
    for share in shares {
        if share.width() != first.width()
            || share.height() != first.height()
            || share.layout() != first.layout()
        {
            return Err(Error::invalid(format!(
                "share {} does not match the dimensions or layout of share {}",
                share.index, first.index
            )));
        }
        if sources.contains(&share.index) {
            return Err(Error::invalid(format!(
                "share {} supplied twice",
                share.index
            )));
        }
        sources.push(share.index);
        for (acc, &c) in cells.iter_mut().zip(&share.grid.cells) {
            *acc |= c;
        }
    }
    sources.sort_unstable();
    Ok(StackedImage {
        sources,
        grid: SubpixelGrid {
            cells,
            ..first.grid.clone()
        },
    })
}

/// Smallest black OR weight over all `q`-row subsets, provided every white
/// subset stays strictly below it.
pub fn decision_threshold(basis: &SchemeBasis, q: usize) -> Result<usize> {
    if q < basis.k() {
        return Err(Error::ThresholdNotMet {
            needed: basis.k(),
            got: q,
        });
    }
    if q > basis.n() {
        return Err(Error::invalid(format!(
            "{q} shares stacked but scheme {} has only {}",
            basis.label(),
            basis.n()
        )));
    }
    let white = or_weight_extremes(basis.white(), q)?;
    let black = or_weight_extremes(basis.black(), q)?;
    if white.max >= black.min {
        return Err(Error::AmbiguousThreshold {
            count: q,
            white_max: white.max,
            black_min: black.min,
        });
    }
    Ok(black.min)
}

/// Thresholds each block of a stack of `stacked_count` shares back to a pixel.
pub fn decode(
    stacked: &StackedImage,
    basis: &SchemeBasis,
    stacked_count: usize,
) -> Result<BinaryImage> {
    check_layout(basis, stacked.grid.layout())?;
    let threshold = decision_threshold(basis, stacked_count)?;
    let grid = &stacked.grid;
    Ok(BinaryImage::from_fn(grid.width, grid.height, |x, y| {
        grid.block_weight(x, y) >= threshold
    }))
}
