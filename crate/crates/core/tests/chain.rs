use std::collections::HashMap;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recursive_vc::recursive::{extract_levels, Rect};
use recursive_vc::sharefile::{read_share, read_share_set, split_id, write_share, ShareFileHeader};
use recursive_vc::{
    build_three_of_n, decode, default_layout, embed_chain, split_image, stack, BinaryImage,
    BitMatrix, Color, Placement, SchemeSpec, SecretChain, ShareImage,
};

fn random_image(w: usize, h: usize, seed: u64) -> BinaryImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BinaryImage::from_fn(w, h, |_, _| rng.random_bool(0.5))
}

fn column_histogram(m: &BitMatrix) -> HashMap<u64, usize> {
    let mut hist = HashMap::new();
    for j in 0..m.cols() {
        *hist.entry(m.column_key(j)).or_insert(0) += 1;
    }
    hist
}

fn chain(dims: &[(usize, usize)], seed: u64) -> SecretChain {
    let basis = build_three_of_n(5).unwrap();
    let layout = default_layout(8, true).unwrap();
    let secrets = dims
        .iter()
        .enumerate()
        .map(|(i, &(w, h))| random_image(w, h, seed + i as u64))
        .collect();
    SecretChain::with_bands(basis, layout, secrets).unwrap()
}

#[test]
fn every_pixel_at_every_level_is_a_permuted_canonical() {
    let c = chain(&[(8, 8), (8, 40), (40, 40)], 17);
    let out = embed_chain(&c, 5).unwrap();
    let basis = c.basis();
    let white = column_histogram(basis.white());
    let black = column_histogram(basis.black());
    for (level, secret) in c.secrets().iter().enumerate() {
        let shares = &out.levels[level];
        for y in 0..secret.height() {
            for x in 0..secret.width() {
                let rows = shares.iter().map(|s| s.block_bits(x, y)).collect();
                let code = BitMatrix::from_rows(rows).unwrap();
                let expected = if secret.color(x, y) == Color::Black {
                    &black
                } else {
                    &white
                };
                assert_eq!(
                    &column_histogram(&code),
                    expected,
                    "level {level} pixel ({x},{y})"
                );
            }
        }
    }
}

#[test]
fn embedded_blocks_are_copied_verbatim() {
    let c = chain(&[(1, 1), (1, 5), (5, 5)], 2);
    let out = embed_chain(&c, 9).unwrap();
    for level in 0..2 {
        let placement = &c.placements()[level];
        for (j, region) in placement.regions().iter().enumerate() {
            for (p, &(x, y)) in region.iter().enumerate() {
                let small_w = c.secrets()[level].width();
                assert_eq!(
                    out.levels[level + 1][j].block_bits(x, y),
                    out.levels[level][j].block_bits(p % small_w, p / small_w)
                );
            }
        }
        assert_eq!(
            out.constraints[level + 1].len(),
            5 * c.secrets()[level].pixel_count()
        );
    }
}

#[test]
fn any_share_subset_extracts_its_own_shares() {
    let c = chain(&[(4, 4), (8, 10), (20, 20)], 4);
    let out = embed_chain(&c, 12).unwrap();
    let dims = c.dimensions();
    for subset in (0..5).combinations(3) {
        let picked: Vec<ShareImage> = subset
            .iter()
            .map(|&i| out.final_shares()[i].clone())
            .collect();
        let levels = extract_levels(&picked, &dims, c.placements()).unwrap();
        for (level, shares) in levels.iter().enumerate() {
            for (s, &i) in shares.iter().zip(&subset) {
                assert_eq!(s, &out.levels[level][i]);
            }
            let refs: Vec<&ShareImage> = shares.iter().collect();
            let got = decode(&stack(&refs).unwrap(), c.basis(), 3).unwrap();
            assert_eq!(&got, &c.secrets()[level]);
        }
    }
}

#[test]
fn pairs_reveal_nothing_at_any_level() {
    let c = chain(&[(8, 8), (8, 40), (40, 40)], 8);
    let out = embed_chain(&c, 1).unwrap();
    for shares in &out.levels {
        for pair in (0..5).combinations(2) {
            let st = stack(&[&shares[pair[0]], &shares[pair[1]]]).unwrap();
            for y in 0..shares[0].height() {
                for x in 0..shares[0].width() {
                    assert_eq!(st.grid().block_weight(x, y), 5);
                }
            }
        }
    }
}

#[test]
fn single_level_chain_equals_split() {
    let c = chain(&[(13, 7)], 3);
    let out = embed_chain(&c, 77).unwrap();
    let direct = split_image(&c.secrets()[0], c.basis(), c.layout(), 77).unwrap();
    assert_eq!(out.final_shares(), &direct[..]);
}

#[test]
fn explicit_placement_chain() {
    let basis = build_three_of_n(5).unwrap();
    let layout = default_layout(8, true).unwrap();
    let small = random_image(2, 2, 1);
    let large = random_image(6, 6, 2);
    // five 2x2 squares scattered over the 6x6 secret
    let corners = [(0, 0), (4, 0), (2, 2), (0, 4), (4, 4)];
    let rects: Vec<Rect> = corners
        .iter()
        .map(|&(x, y)| Rect {
            x,
            y,
            width: 2,
            height: 2,
        })
        .collect();
    let placement = Placement::from_rects(4, &rects).unwrap();
    let c = SecretChain::new(basis, layout, vec![small.clone(), large], vec![placement]).unwrap();
    let out = embed_chain(&c, 3).unwrap();
    let extracted = c.extract(out.final_shares()).unwrap();
    assert_eq!(extracted, out.levels);
    let refs: Vec<&ShareImage> = extracted[0][1..4].iter().collect();
    assert_eq!(decode(&stack(&refs).unwrap(), c.basis(), 3).unwrap(), small);
}

#[test]
fn overlapping_or_oversized_placements_are_rejected() {
    let basis = build_three_of_n(5).unwrap();
    let layout = default_layout(8, true).unwrap();
    let rect = Rect {
        x: 0,
        y: 0,
        width: 2,
        height: 2,
    };
    let same = Placement::from_rects(4, &[rect; 5]).unwrap();
    let secrets = vec![random_image(2, 2, 1), random_image(6, 6, 2)];
    assert!(SecretChain::new(basis.clone(), layout.clone(), secrets, vec![same]).is_err());
    let too_big = vec![random_image(3, 3, 1), random_image(6, 6, 2)];
    assert!(SecretChain::with_bands(basis, layout, too_big).is_err());
}

#[test]
fn share_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec: SchemeSpec = "3ofN:5".parse().unwrap();
    let basis = spec.build().unwrap();
    let layout = default_layout(8, false).unwrap();
    let shares = split_image(&random_image(9, 5, 0), &basis, &layout, 4).unwrap();
    let id = split_id(4, &spec);
    let mut paths = Vec::new();
    for share in &shares {
        let header = ShareFileHeader::new(&spec, &basis, share, id.clone());
        let path = write_share(dir.path(), share, &header).unwrap();
        let (h2, s2) = read_share(&path).unwrap();
        assert_eq!(h2, header);
        assert_eq!(&s2, share);
        paths.push(path);
    }
    let (header, loaded) = read_share_set(&paths[1..4]).unwrap();
    assert_eq!(header.index, 1);
    assert_eq!(loaded, shares[1..4]);
    let dup = vec![paths[0].clone(), paths[0].clone()];
    assert!(matches!(
        read_share_set(&dup),
        Err(recursive_vc::Error::HeaderMismatch(_))
    ));
}

#[test]
fn tampered_padding_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec: SchemeSpec = "3ofN:5".parse().unwrap();
    let basis = spec.build().unwrap();
    let layout = default_layout(8, true).unwrap();
    let shares = split_image(&random_image(3, 3, 0), &basis, &layout, 4).unwrap();
    let header = ShareFileHeader::new(&spec, &basis, &shares[0], split_id(4, &spec));
    let path = write_share(dir.path(), &shares[0], &header).unwrap();
    // the pad cell of block (0, 0) sits at grid (2, 2); clear it
    let mut img = recursive_vc::pbm::read_pbm(&path).unwrap();
    img.set(2, 2, false);
    recursive_vc::pbm::write_pbm(&img, &path).unwrap();
    assert!(matches!(
        read_share(&path),
        Err(recursive_vc::Error::Format(_))
    ));
}
