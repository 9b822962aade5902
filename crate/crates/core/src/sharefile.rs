//! Share files on disk and chain manifests.
//!
//! A share is stored as two files side by side: `share_J.pbm`, the full
//! subpixel grid as a plain bitmap any viewer can display or overlay, and
//! `share_J.toml`, a small header describing how to interpret it. Share
//! numbers in file names are 1-based; the `index` field in the header is the
//! 0-based participant index.
//!
//! ```toml
//! format = "vcs-share"
//! version = 1
//! scheme = "3ofN:5"
//! n = 5
//! k = 3
//! m = 8
//! index = 0
//! width = 40
//! height = 40
//! split_id = "5b0c0d6e1f2a3b4c5d6e7f8091a2b3c4"
//!
//! [layout]
//! block_w = 3
//! block_h = 3
//! order = "row-major"
//! pad = 1
//!
//! [[embedded]]
//! width = 8
//! height = 8
//! placement = "bands"
//!
//! [embedded.region]
//! x = 0
//! y = 0
//! width = 40
//! height = 8
//! ```
//!
//! `embedded` lists the smaller secrets hidden in this share, nearest level
//! first. Each entry gives the smaller secret's size and the rectangle of
//! this share (filled row-major) that holds its blocks.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{BinaryImage, ShareImage, SubpixelGrid, SubpixelLayout};
use crate::error::{Error, Result};
use crate::pbm::{read_pbm, write_pbm};
use crate::recursive::{Placement, Rect};
use crate::schemes::{SchemeBasis, SchemeSpec};

pub const SHARE_FORMAT: &str = "vcs-share";
pub const SHARE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutDescriptor {
    pub block_w: usize,
    pub block_h: usize,
    /// `row-major`, or `explicit` with a `placement` list of `[row, col]` pairs.
    pub order: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<Vec<[usize; 2]>>,
    pub pad: u8,
}

impl LayoutDescriptor {
    pub fn from_layout(layout: &SubpixelLayout) -> Self {
        let row_major = layout.is_row_major();
        LayoutDescriptor {
            block_w: layout.block_w(),
            block_h: layout.block_h(),
            order: if row_major { "row-major" } else { "explicit" }.to_owned(),
            placement: (!row_major)
                .then(|| layout.placement().iter().map(|&(r, c)| [r, c]).collect()),
            pad: u8::from(layout.pad()),
        }
    }

    pub fn to_layout(&self, m: usize) -> Result<SubpixelLayout> {
        let pad = match self.pad {
            0 => false,
            1 => true,
            other => return Err(Error::Format(format!("pad value {other} is not 0 or 1"))),
        };
        let placement = match (self.order.as_str(), &self.placement) {
            ("row-major", _) => (0..m)
                .map(|i| (i / self.block_w.max(1), i % self.block_w.max(1)))
                .collect(),
            ("explicit", Some(p)) => p.iter().map(|&[r, c]| (r, c)).collect(),
            (order, _) => {
                return Err(Error::Format(format!(
                    "unsupported subpixel order {order:?}"
                )))
            }
        };
        SubpixelLayout::new(m, self.block_w, self.block_h, placement, pad)
            .map_err(|e| Error::Format(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionDescriptor {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl From<Rect> for RegionDescriptor {
    fn from(r: Rect) -> Self {
        RegionDescriptor {
            x: r.x,
            y: r.y,
            width: r.width,
            height: r.height,
        }
    }
}

impl From<RegionDescriptor> for Rect {
    fn from(r: RegionDescriptor) -> Self {
        Rect {
            x: r.x,
            y: r.y,
            width: r.width,
            height: r.height,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddedLevel {
    pub width: usize,
    pub height: usize,
    /// `bands` (horizontal levels) or `explicit`.
    pub placement: String,
    pub region: RegionDescriptor,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareFileHeader {
    pub format: String,
    pub version: u32,
    pub scheme: String,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub index: usize,
    pub width: usize,
    pub height: usize,
    /// Identifies the split this share came from; equal across its siblings.
    pub split_id: String,
    pub layout: LayoutDescriptor,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embedded: Vec<EmbeddedLevel>,
}

impl ShareFileHeader {
    pub fn new(
        spec: &SchemeSpec,
        basis: &SchemeBasis,
        share: &ShareImage,
        split_id: String,
    ) -> Self {
        ShareFileHeader {
            format: SHARE_FORMAT.to_owned(),
            version: SHARE_FORMAT_VERSION,
            scheme: spec.to_string(),
            n: basis.n(),
            k: basis.k(),
            m: basis.m(),
            index: share.index(),
            width: share.width(),
            height: share.height(),
            split_id,
            layout: LayoutDescriptor::from_layout(share.layout()),
            embedded: Vec::new(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let header: ShareFileHeader =
            toml::from_str(text).map_err(|e| Error::Format(format!("share header: {e}")))?;
        if header.format != SHARE_FORMAT {
            return Err(Error::Format(format!(
                "unknown share format {:?}",
                header.format
            )));
        }
        if header.version != SHARE_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported share format version {}",
                header.version
            )));
        }
        if header.index >= header.n {
            return Err(Error::Format(format!(
                "share index {} out of range for n = {}",
                header.index, header.n
            )));
        }
        Ok(header)
    }

    pub fn scheme_spec(&self) -> Result<SchemeSpec> {
        self.scheme
            .parse()
            .map_err(|e: Error| Error::Format(e.to_string()))
    }

    pub fn subpixel_layout(&self) -> Result<SubpixelLayout> {
        self.layout.to_layout(self.m)
    }

    /// Errors unless both headers come from the same split (indices may differ).
    pub fn check_compatible(&self, other: &ShareFileHeader) -> Result<()> {
        let mismatch = |what: &str, a: String, b: String| {
            Err(Error::HeaderMismatch(format!(
                "{what} differs between share {} ({a}) and share {} ({b})",
                self.index + 1,
                other.index + 1
            )))
        };
        if self.scheme != other.scheme || (self.n, self.k, self.m) != (other.n, other.k, other.m) {
            return mismatch("scheme", self.scheme.clone(), other.scheme.clone());
        }
        if (self.width, self.height) != (other.width, other.height) {
            return mismatch(
                "secret size",
                format!("{}x{}", self.width, self.height),
                format!("{}x{}", other.width, other.height),
            );
        }
        if self.layout != other.layout {
            return mismatch(
                "layout",
                format!("{:?}", self.layout),
                format!("{:?}", other.layout),
            );
        }
        if self.split_id != other.split_id {
            return mismatch("split id", self.split_id.clone(), other.split_id.clone());
        }
        if self.embedded.len() != other.embedded.len()
            || self
                .embedded
                .iter()
                .zip(&other.embedded)
                .any(|(a, b)| (a.width, a.height) != (b.width, b.height))
        {
            return mismatch(
                "embedded levels",
                format!("{}", self.embedded.len()),
                format!("{}", other.embedded.len()),
            );
        }
        Ok(())
    }
}

/// Split identifier derived from the master seed through a ChaCha stream
/// that pixel encoding never uses.
pub fn split_id(seed: u64, scheme: &SchemeSpec) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let mut bytes = [0u8; 16];
    rng.fill_bytes(&mut bytes);
    let tag = scheme.to_string();
    for (i, b) in tag.bytes().enumerate() {
        bytes[i % 16] ^= b.rotate_left(i as u32 % 8);
    }
    hex(&bytes)
}

/// Identifier for shares extracted from level `level` of a parent split.
pub fn derived_split_id(parent: &str, level: usize) -> String {
    let mut seed = [0u8; 32];
    for (i, b) in parent.bytes().enumerate() {
        seed[i % 32] ^= b;
    }
    seed[31] ^= level as u8;
    seed[30] ^= (level >> 8) as u8;
    let mut rng = ChaCha8Rng::from_seed(seed);
    let mut bytes = [0u8; 16];
    rng.fill_bytes(&mut bytes);
    hex(&bytes)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// `share_J.pbm` for 0-based participant `index`.
pub fn share_file_name(index: usize) -> String {
    format!("share_{}.pbm", index + 1)
}

pub fn sidecar_path(pbm: &Path) -> PathBuf {
    pbm.with_extension("toml")
}

/// The share grid as a bitmap.
pub fn grid_image(grid: &SubpixelGrid) -> BinaryImage {
    BinaryImage::from_fn(grid.grid_width(), grid.grid_height(), |x, y| {
        grid.cell(x, y)
    })
}

/// Writes the bitmap and its header into `dir`; returns the bitmap path.
pub fn write_share(dir: &Path, share: &ShareImage, header: &ShareFileHeader) -> Result<PathBuf> {
    let pbm = dir.join(share_file_name(share.index()));
    write_pbm(&grid_image(share.grid()), &pbm)?;
    fs::write(sidecar_path(&pbm), header.to_toml()?)?;
    Ok(pbm)
}

/// Reads a share bitmap and the header next to it.
pub fn read_share(pbm: &Path) -> Result<(ShareFileHeader, ShareImage)> {
    let sidecar = sidecar_path(pbm);
    let text = fs::read_to_string(&sidecar).map_err(|e| {
        Error::Format(format!(
            "cannot read share header {}: {e}",
            sidecar.display()
        ))
    })?;
    let header = ShareFileHeader::from_toml(&text)?;
    let layout = header.subpixel_layout()?;
    let img = read_pbm(pbm)?;
    let expected = (
        header.width * layout.block_w(),
        header.height * layout.block_h(),
    );
    if (img.width(), img.height()) != expected {
        return Err(Error::Format(format!(
            "{} is {}x{}, header expects {}x{}",
            pbm.display(),
            img.width(),
            img.height(),
            expected.0,
            expected.1
        )));
    }
    let grid =
        SubpixelGrid::from_cells(header.width, header.height, layout, img.pixels().to_vec())?;
    let share = ShareImage::new(header.index, grid).map_err(|e| Error::Format(e.to_string()))?;
    Ok((header, share))
}

/// Reads several shares and checks that they belong together.
pub fn read_share_set(paths: &[PathBuf]) -> Result<(ShareFileHeader, Vec<ShareImage>)> {
    let mut loaded = paths
        .iter()
        .map(|p| read_share(p))
        .collect::<Result<Vec<_>>>()?;
    if loaded.is_empty() {
        return Err(Error::invalid("no share files given"));
    }
    let first = loaded[0].0.clone();
    for (h, _) in &loaded[1..] {
        first.check_compatible(h)?;
    }
    let mut seen = vec![false; first.n];
    for (h, _) in &loaded {
        if std::mem::replace(&mut seen[h.index], true) {
            return Err(Error::HeaderMismatch(format!(
                "share {} supplied more than once",
                h.index + 1
            )));
        }
    }
    Ok((first, loaded.drain(..).map(|(_, s)| s).collect()))
}

/// Placement of one chain level, as recorded in a manifest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRegion {
    /// 1-based level of the smaller secret.
    pub level: usize,
    /// 1-based share number.
    pub share: usize,
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

/// Description of a recursive chain, read from TOML:
///
/// ```toml
/// scheme = "3ofN:5"
/// seed = 42
/// secrets = ["tiny.pbm", "mid.pbm", "large.pbm"]   # smallest first
/// placement = "bands"                               # or "explicit"
/// pad = 1
/// ```
///
/// With `placement = "explicit"`, one `[[regions]]` table per (level, share)
/// gives the rectangle of the next secret's share that receives that share.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainManifest {
    pub scheme: String,
    pub seed: u64,
    pub secrets: Vec<PathBuf>,
    #[serde(default = "default_placement_mode")]
    pub placement: String,
    #[serde(default = "default_pad")]
    pub pad: u8,
    #[serde(default)]
    pub regions: Vec<ManifestRegion>,
}

fn default_placement_mode() -> String {
    "bands".to_owned()
}

fn default_pad() -> u8 {
    1
}

impl ChainManifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(format!("chain manifest: {e}")))
    }

    /// Reads the manifest and resolves secret paths relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut manifest = ChainManifest::from_toml(&fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for s in &mut manifest.secrets {
            if s.is_relative() {
                *s = base.join(&*s);
            }
        }
        Ok(manifest)
    }

    pub fn is_bands(&self) -> bool {
        self.placement == "bands"
    }

    /// Rectangles for every level and share: `result[level][share]`, both 0-based.
    pub fn rects(&self, dims: &[(usize, usize)], n: usize) -> Result<Vec<Vec<Rect>>> {
        let levels = dims.len().saturating_sub(1);
        match self.placement.as_str() {
            "bands" => Ok((0..levels)
                .map(|l| {
                    let (w, h) = dims[l + 1];
                    (0..n)
                        .map(|j| crate::recursive::band_rect(w, h, n, j))
                        .collect()
                })
                .collect()),
            "explicit" => {
                let mut out: Vec<Vec<Option<Rect>>> = vec![vec![None; n]; levels];
                for r in &self.regions {
                    if r.level == 0 || r.level > levels || r.share == 0 || r.share > n {
                        return Err(Error::invalid(format!(
                            "region for level {} share {} is out of range",
                            r.level, r.share
                        )));
                    }
                    out[r.level - 1][r.share - 1] = Some(Rect {
                        x: r.x,
                        y: r.y,
                        width: r.width,
                        height: r.height,
                    });
                }
                out.into_iter()
                    .enumerate()
                    .map(|(l, row)| {
                        row.into_iter()
                            .enumerate()
                            .map(|(j, r)| {
                                r.ok_or_else(|| {
                                    Error::invalid(format!(
                                        "no region given for level {} share {}",
                                        l + 1,
                                        j + 1
                                    ))
                                })
                            })
                            .collect()
                    })
                    .collect()
            }
            other => Err(Error::invalid(format!(
                "unknown placement mode {other:?} (expected bands or explicit)"
            ))),
        }
    }

    /// Placements built from [`ChainManifest::rects`].
    pub fn placements(&self, dims: &[(usize, usize)], n: usize) -> Result<Vec<Placement>> {
        for (l, pair) in dims.windows(2).enumerate() {
            let ((sw, sh), (lw, lh)) = (pair[0], pair[1]);
            if sw * sh * n > lw * lh {
                return Err(Error::invalid(format!(
                    "secret {} ({lw}x{lh}) is too small to hide {n} shares of secret {} ({sw}x{sh})",
                    l + 2,
                    l + 1
                )));
            }
        }
        self.rects(dims, n)?
            .iter()
            .enumerate()
            .map(|(l, rects)| Placement::from_rects(dims[l].0 * dims[l].1, rects))
            .collect()
    }
}
