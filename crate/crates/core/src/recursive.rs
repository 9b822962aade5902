//! Recursive hiding: the shares of a smaller secret are written verbatim into
//! the shares of a larger one, which still decode to the larger secret.
//!
//! Secrets are processed smallest first. Share `j` of each smaller secret is
//! placed in a region of share `j` of the next secret. Every larger-secret
//! pixel inside such a region is encoded with a collection member whose row
//! `j` equals the embedded block, drawn uniformly among all such members by
//! [`sample_constrained_permutation`]. Since each row of a uniformly permuted
//! canonical is itself uniform over patterns of its weight, the resulting
//! shares are distributed exactly like freshly split ones.
//!
//! The default placement cuts the larger image into `n` horizontal bands
//! ("levels"); share `j` of the smaller secret fills band `j`, pixel by pixel
//! in row-major order.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bitcore::{BitMatrix, BitRow, ColumnPermutation};
use crate::codec::{
    assemble_shares, encode_pixel, encode_pixel_with, pixel_rng, split_image, BinaryImage,
    ShareImage, SubpixelGrid, SubpixelLayout,
};
use crate::error::{Error, Result};
use crate::schemes::SchemeBasis;

/// A rectangle of pixels, filled row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn area(&self) -> usize {
        self.width * self.height
    }

    /// The first `count` positions in row-major order.
    pub fn positions(&self, count: usize) -> Vec<(usize, usize)> {
        (0..count.min(self.area()))
            .map(|i| (self.x + i % self.width, self.y + i / self.width))
            .collect()
    }
}

/// Where each share of a smaller secret goes inside the shares of the next
/// secret: `regions[j][p]` is the larger-secret pixel that receives block `p`
/// (row-major) of smaller share `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    regions: Vec<Vec<(usize, usize)>>,
}

impl Placement {
    pub fn new(regions: Vec<Vec<(usize, usize)>>) -> Self {
        Placement { regions }
    }

    /// One rectangle per share; the first `small_count` pixels of each are used.
    pub fn from_rects(small_count: usize, rects: &[Rect]) -> Result<Self> {
        let mut regions = Vec::with_capacity(rects.len());
        for (j, r) in rects.iter().enumerate() {
            if r.area() < small_count {
                return Err(Error::invalid(format!(
                    "region for share {j} holds {} pixels, {small_count} needed",
                    r.area()
                )));
            }
            regions.push(r.positions(small_count));
        }
        Ok(Placement { regions })
    }

    pub fn regions(&self) -> &[Vec<(usize, usize)>] {
        &self.regions
    }

    pub fn region(&self, share: usize) -> &[(usize, usize)] {
        &self.regions[share]
    }

    /// Checks counts, bounds, and that no larger-secret pixel is claimed twice.
    pub fn validate(&self, small: (usize, usize), large: (usize, usize), n: usize) -> Result<()> {
        let small_count = small.0 * small.1;
        if self.regions.len() != n {
            return Err(Error::invalid(format!(
                "placement has {} regions for {n} shares",
                self.regions.len()
            )));
        }
        let mut claimed = vec![false; large.0 * large.1];
        for (j, region) in self.regions.iter().enumerate() {
            if region.len() != small_count {
                return Err(Error::invalid(format!(
                    "region {j} has {} pixels, smaller secret has {small_count}",
                    region.len()
                )));
            }
            for &(x, y) in region {
                if x >= large.0 || y >= large.1 {
                    return Err(Error::invalid(format!(
                        "region {j} pixel ({x}, {y}) outside {}x{}",
                        large.0, large.1
                    )));
                }
                if std::mem::replace(&mut claimed[y * large.0 + x], true) {
                    return Err(Error::invalid(format!(
                        "pixel ({x}, {y}) claimed by more than one region"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Horizontal band `j` of `n` over a `large_w × large_h` image. The last band
/// absorbs any remainder rows.
pub fn band_rect(large_w: usize, large_h: usize, n: usize, j: usize) -> Rect {
    let band_h = large_h / n;
    let height = if j + 1 == n {
        large_h - band_h * (n - 1)
    } else {
        band_h
    };
    Rect {
        x: 0,
        y: j * band_h,
        width: large_w,
        height,
    }
}

/// Band placement from dimensions alone.
pub fn band_placement(small: (usize, usize), large: (usize, usize), n: usize) -> Result<Placement> {
    let small_count = small.0 * small.1;
    if n == 0 || small_count * n > large.0 * large.1 {
        return Err(Error::invalid(format!(
            "{n} shares of a {}x{} secret do not fit in a {}x{} secret",
            small.0, small.1, large.0, large.1
        )));
    }
    if large.1 < n {
        return Err(Error::invalid(format!(
            "a {}-pixel-high secret cannot hold {n} bands",
            large.1
        )));
    }
    let rects: Vec<Rect> = (0..n).map(|j| band_rect(large.0, large.1, n, j)).collect();
    Placement::from_rects(small_count, &rects)
}

/// Share `j` of `small` goes to band `j` of share `j` of `large`.
pub fn default_placement(small: &BinaryImage, large: &BinaryImage, n: usize) -> Result<Placement> {
    band_placement(
        (small.width(), small.height()),
        (large.width(), large.height()),
        n,
    )
}

/// Secrets ordered smallest first, with one placement per adjacent pair.
#[derive(Clone, Debug)]
pub struct SecretChain {
    basis: SchemeBasis,
    layout: SubpixelLayout,
    secrets: Vec<BinaryImage>,
    placements: Vec<Placement>,
}

impl SecretChain {
    pub fn new(
        basis: SchemeBasis,
        layout: SubpixelLayout,
        secrets: Vec<BinaryImage>,
        placements: Vec<Placement>,
    ) -> Result<Self> {
        if secrets.is_empty() {
            return Err(Error::invalid("a chain needs at least one secret"));
        }
        if placements.len() + 1 != secrets.len() {
            return Err(Error::invalid(format!(
                "{} secrets need {} placements, got {}",
                secrets.len(),
                secrets.len() - 1,
                placements.len()
            )));
        }
        if layout.m() != basis.m() {
            return Err(Error::invalid(format!(
                "layout holds {} subpixels, scheme expands to {}",
                layout.m(),
                basis.m()
            )));
        }
        for (i, pair) in secrets.windows(2).enumerate() {
            let (small, large) = (&pair[0], &pair[1]);
            if small.pixel_count() * basis.n() > large.pixel_count() {
                return Err(Error::invalid(format!(
                    "secret {} ({}x{}) is too small to hide {} shares of secret {} ({}x{})",
                    i + 1,
                    large.width(),
                    large.height(),
                    basis.n(),
                    i,
                    small.width(),
                    small.height()
                )));
            }
            placements[i].validate(
                (small.width(), small.height()),
                (large.width(), large.height()),
                basis.n(),
            )?;
        }
        Ok(SecretChain {
            basis,
            layout,
            secrets,
            placements,
        })
    }

    /// Chain with band placements between every pair.
    pub fn with_bands(
        basis: SchemeBasis,
        layout: SubpixelLayout,
        secrets: Vec<BinaryImage>,
    ) -> Result<Self> {
        let placements = secrets
            .windows(2)
            .map(|p| default_placement(&p[0], &p[1], basis.n()))
            .collect::<Result<Vec<_>>>()?;
        SecretChain::new(basis, layout, secrets, placements)
    }

    pub fn basis(&self) -> &SchemeBasis {
        &self.basis
    }

    pub fn layout(&self) -> &SubpixelLayout {
        &self.layout
    }

    pub fn secrets(&self) -> &[BinaryImage] {
        &self.secrets
    }

    /// `placements()[i]` places level `i` inside level `i + 1`.
    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    pub fn dimensions(&self) -> Vec<(usize, usize)> {
        self.secrets
            .iter()
            .map(|s| (s.width(), s.height()))
            .collect()
    }

    /// Recovers every level from final shares; see [`extract_levels`].
    pub fn extract(&self, shares: &[ShareImage]) -> Result<Vec<Vec<ShareImage>>> {
        extract_levels(shares, &self.dimensions(), &self.placements)
    }
}

/// A pixel whose code was forced to carry an embedded block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddingConstraint {
    /// Chain level of the larger secret.
    pub level: usize,
    pub share_index: usize,
    pub position: (usize, usize),
    pub required_row: BitRow,
}

/// Output of [`embed_chain`]: the shares of every level, smallest first, and
/// the constraints applied while building each level.
#[derive(Clone, Debug)]
pub struct ChainEmbedding {
    pub levels: Vec<Vec<ShareImage>>,
    pub constraints: Vec<Vec<EmbeddingConstraint>>,
}

impl ChainEmbedding {
    /// Shares of the largest secret.
    pub fn final_shares(&self) -> &[ShareImage] {
        self.levels.last().expect("chain has at least one level")
    }
}

/// A uniformly random permutation `p` with `permute(canonical, p)` row `row` equal to `target`.
///
/// Ones of the canonical row are sent to a uniformly random arrangement of the
/// target's ones, zeros likewise.
pub fn sample_constrained_permutation<R: Rng + ?Sized>(
    canonical: &BitMatrix,
    row: usize,
    target: &BitRow,
    rng: &mut R,
) -> Result<ColumnPermutation> {
    if row >= canonical.rows() {
        return Err(Error::invalid(format!(
            "row {row} out of range for {} rows",
            canonical.rows()
        )));
    }
    let source = canonical.row(row);
    if target.len() != source.len() {
        return Err(Error::InfeasibleConstraint(format!(
            "target has {} bits, rows have {}",
            target.len(),
            source.len()
        )));
    }
    if target.count_ones() != source.count_ones() {
        return Err(Error::InfeasibleConstraint(format!(
            "target weight {} differs from row {row} weight {}",
            target.count_ones(),
            source.count_ones()
        )));
    }
    let mut mapping = vec![0; source.len()];
    for bit in [true, false] {
        let from: Vec<usize> = (0..source.len())
            .filter(|&j| source.get(j) == bit)
            .collect();
        let mut to: Vec<usize> = (0..target.len())
            .filter(|&j| target.get(j) == bit)
            .collect();
        to.shuffle(rng);
        for (f, t) in from.into_iter().zip(to) {
            mapping[f] = t;
        }
    }
    ColumnPermutation::new(mapping)
}

const LEVEL_STREAM: u64 = 0xA24B_1C30_BEBC_CF59;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed used for chain level `level`; level 0 uses the master seed itself.
pub fn level_seed(seed: u64, level: usize) -> u64 {
    if level == 0 {
        seed
    } else {
        splitmix64(seed ^ LEVEL_STREAM.wrapping_mul(level as u64))
    }
}

/// Embeds every secret of the chain into the next, returning all levels.
pub fn embed_chain(chain: &SecretChain, seed: u64) -> Result<ChainEmbedding> {
    let basis = &chain.basis;
    let layout = &chain.layout;
    if chain.secrets.len() > 1 && basis.uniform_row_weight().is_none() {
        return Err(Error::InfeasibleConstraint(format!(
            "scheme {} has rows of unequal weight",
            basis.label()
        )));
    }
    let mut levels = vec![split_image(&chain.secrets[0], basis, layout, seed)?];
    let mut constraints = vec![Vec::new()];
    for (level, secret) in chain.secrets.iter().enumerate().skip(1) {
        let previous = &levels[level - 1];
        let small = &chain.secrets[level - 1];
        let placement = &chain.placements[level - 1];
        let mut forced: Vec<Option<(usize, BitRow)>> = vec![None; secret.pixel_count()];
        let mut applied = Vec::new();
        for share in previous {
            let j = share.index();
            for (p, &(x, y)) in placement.region(j).iter().enumerate() {
                let bits = share.block_bits(p % small.width(), p / small.width());
                forced[y * secret.width() + x] = Some((j, bits.clone()));
                applied.push(EmbeddingConstraint {
                    level,
                    share_index: j,
                    position: (x, y),
                    required_row: bits,
                });
            }
        }
        let seed = level_seed(seed, level);
        let shares = assemble_shares(basis, layout, secret.width(), secret.height(), |x, y| {
            let color = secret.color(x, y);
            let mut rng = pixel_rng(seed, x, y);
            match &forced[y * secret.width() + x] {
                Some((j, bits)) => {
                    let p =
                        sample_constrained_permutation(basis.canonical(color), *j, bits, &mut rng)?;
                    encode_pixel_with(basis, color, &p)
                }
                None => Ok(encode_pixel(basis, color, &mut rng)),
            }
        })?;
        levels.push(shares);
        constraints.push(applied);
    }
    Ok(ChainEmbedding {
        levels,
        constraints,
    })
}

/// Copies the embedded blocks out of the given shares. Any subset of shares
/// may be passed; each one yields the smaller share with the same index.
pub fn extract_embedded(
    shares: &[ShareImage],
    placement: &Placement,
    small: (usize, usize),
) -> Result<Vec<ShareImage>> {
    let count = small.0 * small.1;
    shares
        .iter()
        .map(|share| {
            let region = placement.regions.get(share.index()).ok_or_else(|| {
                Error::invalid(format!("no placement region for share {}", share.index()))
            })?;
            if region.len() != count {
                return Err(Error::invalid(format!(
                    "region for share {} has {} pixels, {count} needed",
                    share.index(),
                    region.len()
                )));
            }
            let mut grid = SubpixelGrid::blank(small.0, small.1, share.layout().clone());
            for (p, &(x, y)) in region.iter().enumerate() {
                if x >= share.width() || y >= share.height() {
                    return Err(Error::invalid(format!(
                        "placement pixel ({x}, {y}) outside a {}x{} share",
                        share.width(),
                        share.height()
                    )));
                }
                grid.set_block(p % small.0, p / small.0, &share.block_bits(x, y));
            }
            ShareImage::new(share.index(), grid)
        })
        .collect()
}

/// Walks down a chain from its final shares. `dims` lists every level's size
/// smallest first; the result is indexed the same way, with the final shares last.
pub fn extract_levels(
    shares: &[ShareImage],
    dims: &[(usize, usize)],
    placements: &[Placement],
) -> Result<Vec<Vec<ShareImage>>> {
    if dims.is_empty() || placements.len() + 1 != dims.len() {
        return Err(Error::invalid(format!(
            "{} levels need {} placements, got {}",
            dims.len(),
            dims.len().saturating_sub(1),
            placements.len()
        )));
    }
    let mut out = vec![shares.to_vec()];
    for level in (0..placements.len()).rev() {
        let next = extract_embedded(out.last().unwrap(), &placements[level], dims[level])?;
        out.push(next);
    }
    out.reverse();
    Ok(out)
}
