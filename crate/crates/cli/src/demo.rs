//! A three-level chain built from generated images: a 72x72 ring hidden in
//! a 380x78 wave, itself hidden in a 380x390 dithered gradient.

use std::fs;
use std::path::Path;

use recursive_vc::pbm::write_pbm;
use recursive_vc::{BinaryImage, Result};

use crate::{chain, decode_files, Outcome};

const BAYER4: [[u8; 4]; 4] = [[0, 8, 2, 10], [12, 4, 14, 6], [3, 11, 1, 9], [15, 7, 13, 5]];

fn ring(size: usize) -> BinaryImage {
    let c = (size as f64 - 1.0) / 2.0;
    BinaryImage::from_fn(size, size, |x, y| {
        let r = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt();
        (size as f64 * 0.25..size as f64 * 0.45).contains(&r)
            || (x as f64 - c).abs() < 3.0 && r < size as f64 * 0.25
    })
}

fn wave(width: usize, height: usize) -> BinaryImage {
    let mid = height as f64 / 2.0;
    BinaryImage::from_fn(width, height, |x, y| {
        let crest = mid + (height as f64 * 0.3) * (x as f64 / 24.0).sin();
        (y as f64 - crest).abs() < 5.0 || y < 2 || y + 2 >= height
    })
}

fn dithered_gradient(width: usize, height: usize) -> BinaryImage {
    let (cx, cy) = (width as f64 * 0.45, height as f64 * 0.4);
    let reach = (width.max(height)) as f64 * 0.75;
    BinaryImage::from_fn(width, height, |x, y| {
        let r = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
        let darkness = (r / reach).clamp(0.0, 1.0);
        darkness * 16.0 > f64::from(BAYER4[y % 4][x % 4]) + 0.5
    })
}

pub fn run(out_dir: &Path, seed: u64) -> Result<Outcome> {
    let secrets = [ring(72), wave(380, 78), dithered_gradient(380, 390)];
    let secret_dir = out_dir.join("secrets");
    fs::create_dir_all(&secret_dir)?;
    for (l, s) in secrets.iter().enumerate() {
        write_pbm(s, secret_dir.join(format!("level_{}.pbm", l + 1)))?;
    }
    let manifest = out_dir.join("chain.toml");
    fs::write(
        &manifest,
        format!(
            "scheme = \"3ofN:5\"\nseed = {seed}\n\
             secrets = [\"secrets/level_1.pbm\", \"secrets/level_2.pbm\", \"secrets/level_3.pbm\"]\n\
             placement = \"bands\"\npad = 1\n"
        ),
    )?;
    let share_dir = out_dir.join("shares");
    let embedded = chain::embed(&manifest, &share_dir)?;

    let chosen = [0usize, 2, 4];
    let picked: Vec<_> = chosen
        .iter()
        .map(|&i| embedded.final_shares[i].clone())
        .collect();
    let revealed = out_dir.join("revealed");
    fs::create_dir_all(&revealed)?;
    let mut ok = true;
    for (l, secret) in secrets.iter().enumerate() {
        let level = l + 1;
        let dir = out_dir.join("extracted").join(format!("level_{level}"));
        let paths = chain::extract(level, &picked, &dir, None)?;
        let same_as_trail = chosen
            .iter()
            .zip(&paths)
            .all(|(&i, p)| fs::read(p).ok() == fs::read(&embedded.trail[l][i]).ok());
        let (decoded, stacked) = decode_files(&paths)?;
        write_pbm(&decoded, revealed.join(format!("level_{level}.pbm")))?;
        write_pbm(
            &decoded.expand(3),
            revealed.join(format!("level_{level}_x3.pbm")),
        )?;
        write_pbm(
            &stacked,
            revealed.join(format!("level_{level}_stacked.pbm")),
        )?;
        let matches = &decoded == secret;
        ok &= matches && same_as_trail;
        println!(
            "level {level} ({}x{}): shares 1, 3, 5 decode {}, extracted shares {} the audit trail",
            secret.width(),
            secret.height(),
            if matches { "exactly" } else { "WRONG" },
            if same_as_trail {
                "match"
            } else {
                "DIFFER FROM"
            },
        );
    }
    Ok(if ok {
        Outcome::Success
    } else {
        Outcome::VerificationFailed
    })
}
