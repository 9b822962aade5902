//! `embed` and `extract`: chains of secrets on disk.

use std::fs;
use std::path::{Path, PathBuf};

use recursive_vc::pbm::read_pbm;
use recursive_vc::recursive::{band_rect, Rect};
use recursive_vc::sharefile::{
    derived_split_id, read_share_set, split_id, write_share, ChainManifest, EmbeddedLevel,
    ShareFileHeader,
};
use recursive_vc::{
    default_layout, embed_chain, extract_embedded, Error, Placement, Result, SchemeSpec,
    SecretChain, ShareImage,
};
use serde_json::json;

/// Paths written by [`embed`].
pub struct EmbedOutput {
    pub final_shares: Vec<PathBuf>,
    /// `trail[l]` holds the share paths of level `l + 1`; the last level is the final one.
    pub trail: Vec<Vec<PathBuf>>,
}

fn trail_dir(out_dir: &Path, level: usize) -> PathBuf {
    out_dir.join("trail").join(format!("level_{level}"))
}

/// Embedding records for the levels below `level` (0-based), nearest first.
fn embedded_records(
    dims: &[(usize, usize)],
    rects: &[Vec<Rect>],
    mode: &str,
    level: usize,
    share: usize,
) -> Vec<EmbeddedLevel> {
    (0..level)
        .rev()
        .map(|l| EmbeddedLevel {
            width: dims[l].0,
            height: dims[l].1,
            placement: mode.to_owned(),
            region: rects[l][share].into(),
        })
        .collect()
}

pub fn embed(manifest_path: &Path, out_dir: &Path) -> Result<EmbedOutput> {
    let manifest = ChainManifest::load(manifest_path)?;
    let spec: SchemeSpec = manifest.scheme.parse()?;
    let basis = spec.build()?;
    let pad = match manifest.pad {
        0 => false,
        1 => true,
        other => {
            return Err(Error::Format(format!(
                "chain manifest: pad {other} is not 0 or 1"
            )))
        }
    };
    let layout = default_layout(basis.m(), pad)?;
    let secrets = manifest
        .secrets
        .iter()
        .map(read_pbm)
        .collect::<Result<Vec<_>>>()?;
    if secrets.is_empty() {
        return Err(Error::Format("chain manifest lists no secrets".into()));
    }
    let dims: Vec<(usize, usize)> = secrets.iter().map(|s| (s.width(), s.height())).collect();
    let n = basis.n();
    let rects = manifest.rects(&dims, n)?;
    let placements = manifest.placements(&dims, n)?;
    let chain = SecretChain::new(basis, layout, secrets, placements)?;
    let embedding = embed_chain(&chain, manifest.seed)?;

    let levels = dims.len();
    let mut ids = vec![split_id(manifest.seed, &spec); levels];
    for l in (0..levels - 1).rev() {
        ids[l] = derived_split_id(&ids[l + 1], l + 1);
    }

    let write_level = |l: usize, dir: &Path| -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        embedding.levels[l]
            .iter()
            .map(|share| {
                let mut header = ShareFileHeader::new(&spec, chain.basis(), share, ids[l].clone());
                header.embedded =
                    embedded_records(&dims, &rects, &manifest.placement, l, share.index());
                write_share(dir, share, &header)
            })
            .collect()
    };
    let final_shares = write_level(levels - 1, out_dir)?;
    let mut trail = Vec::with_capacity(levels);
    for l in 0..levels - 1 {
        trail.push(write_level(l, &trail_dir(out_dir, l + 1))?);
    }
    trail.push(final_shares.clone());

    if levels > 1 {
        let summary = json!({
            "scheme": spec.to_string(),
            "seed": manifest.seed,
            "placement": manifest.placement,
            "band_orientation": if manifest.is_bands() { "horizontal" } else { "n/a" },
            "levels": (0..levels).map(|l| json!({
                "level": l + 1,
                "width": dims[l].0,
                "height": dims[l].1,
                "split_id": ids[l],
                "regions": rects.get(l).map(|rs| rs.iter().map(|r| json!({
                    "x": r.x, "y": r.y, "width": r.width, "height": r.height,
                })).collect::<Vec<_>>()),
                "pixels_fixed_by_level_below": embedding.constraints[l].len(),
            })).collect::<Vec<_>>(),
        });
        let text =
            serde_json::to_string_pretty(&summary).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(out_dir.join("trail").join("summary.json"), text + "\n")?;
    }
    for (l, &(w, h)) in dims.iter().enumerate() {
        println!("level {}: {w}x{h}", l + 1);
    }
    for p in &final_shares {
        println!("wrote {}", p.display());
    }
    println!("{}", crate::summary_line(&spec, chain.basis()));
    Ok(EmbedOutput {
        final_shares,
        trail,
    })
}

/// Walks down from the given shares to chain level `target` (1 = smallest).
pub fn extract(
    target: usize,
    input: &[PathBuf],
    out_dir: &Path,
    assume_size: Option<(usize, usize)>,
) -> Result<Vec<PathBuf>> {
    let (first, mut shares) = read_share_set(input)?;
    let mut headers: Vec<ShareFileHeader> = input
        .iter()
        .map(|p| {
            let text = fs::read_to_string(recursive_vc::sharefile::sidecar_path(p))?;
            ShareFileHeader::from_toml(&text)
        })
        .collect::<Result<_>>()?;
    if headers.iter().any(|h| !h.embedded.is_empty()) && assume_size.is_some() {
        return Err(Error::InvalidArgument(
            "--assume-size only applies to shares without embedding records".into(),
        ));
    }
    if let Some((w, h)) = assume_size {
        for header in &mut headers {
            header.embedded = vec![EmbeddedLevel {
                width: w,
                height: h,
                placement: "bands".into(),
                region: band_rect(first.width, first.height, first.n, header.index).into(),
            }];
        }
    }
    let current = headers[0].embedded.len() + 1;
    if target == 0 || target > current {
        return Err(Error::InvalidArgument(format!(
            "level {target} is not available; these shares are level {current} of a chain numbered from 1"
        )));
    }
    let mut split = first.split_id.clone();
    for level in (target..current).rev() {
        let record = headers[0].embedded[0].clone();
        let small = (record.width, record.height);
        let mut regions = vec![Vec::new(); first.n];
        for h in &headers {
            let rect: Rect = h.embedded[0].region.into();
            if rect.area() < small.0 * small.1 {
                return Err(Error::Format(format!(
                    "share {} region holds {} pixels, {} needed",
                    h.index + 1,
                    rect.area(),
                    small.0 * small.1
                )));
            }
            regions[h.index] = rect.positions(small.0 * small.1);
        }
        shares = extract_embedded(&shares, &Placement::new(regions), small)?;
        split = derived_split_id(&split, level);
        for h in &mut headers {
            h.width = small.0;
            h.height = small.1;
            h.split_id = split.clone();
            h.embedded.remove(0);
        }
    }
    fs::create_dir_all(out_dir)?;
    let paths = shares
        .iter()
        .zip(&headers)
        .map(|(share, header): (&ShareImage, _)| write_share(out_dir, share, header))
        .collect::<Result<Vec<_>>>()?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    Ok(paths)
}
