//! Acceptance criteria. Run with
//! `cargo test -p recursive-vc --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use itertools::Itertools;
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recursive_vc::audit::{composed_security_audit, security_audit, SecurityMode};
use recursive_vc::bitcore::{enumerate_permutations, permute_columns};
use recursive_vc::recursive::{embed_chain, SecretChain};
use recursive_vc::schemes::{
    analyze_family, build_function_family, build_k_of_k, build_k_of_n, build_three_of_n,
    FamilyMode, Rational, SchemeBasis,
};
use recursive_vc::{
    decode, default_layout, sample_constrained_permutation, stack, BinaryImage, BitRow, ShareImage,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Check = Result<(), String>;
type Criterion = (&'static str, &'static str, Duration, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

/// OR weight of the listed rows, computed on plain bit vectors.
fn or_weight(m: &recursive_vc::BitMatrix, rows: &[usize]) -> usize {
    (0..m.cols())
        .filter(|&j| rows.iter().any(|&i| m.get(i, j)))
        .count()
}

fn ac1_three_of_five_weights() -> Check {
    let s = build_three_of_n(5).map_err(|e| e.to_string())?;
    ensure!(s.m() == 8, "m = {}", s.m());
    for color in [s.white(), s.black()] {
        for i in 0..5 {
            ensure!(
                or_weight(color, &[i]) == 4,
                "single share {i} weight {}",
                or_weight(color, &[i])
            );
        }
    }
    for t in (0..5).combinations(3) {
        ensure!(or_weight(s.white(), &t) == 5, "white triplet {t:?}");
        ensure!(or_weight(s.black(), &t) == 6, "black triplet {t:?}");
    }
    let all = [0, 1, 2, 3, 4];
    ensure!(or_weight(s.white(), &all) == 5, "white all-5 stack");
    ensure!(or_weight(s.black(), &all) == 8, "black all-5 stack");
    Ok(())
}

fn ac2_three_of_n_family() -> Check {
    for n in 3..=8 {
        let s = build_three_of_n(n).map_err(|e| e.to_string())?;
        for t in (0..n).combinations(3) {
            ensure!(or_weight(s.white(), &t) == n, "n={n} white triplet {t:?}");
            ensure!(
                or_weight(s.black(), &t) == n + 1,
                "n={n} black triplet {t:?}"
            );
        }
        for canonical in [s.white(), s.black()] {
            for pair in (0..n).combinations(2) {
                let (a, b) = (canonical.row(pair[0]), canonical.row(pair[1]));
                let common = a.and(b).count_ones();
                let only_a = a.count_ones() - common;
                let only_b = b.count_ones() - common;
                ensure!(common == n - 2, "n={n} pair {pair:?} common {common}");
                ensure!(
                    only_a == 1 && only_b == 1,
                    "n={n} pair {pair:?} individual {only_a}+{only_b}"
                );
            }
        }
    }
    Ok(())
}

fn ac3_exact_security() -> Check {
    let s = build_three_of_n(5).map_err(|e| e.to_string())?;
    for q in [1, 2] {
        let e = security_audit(&s, q, SecurityMode::FullEnumeration).map_err(|e| e.to_string())?;
        ensure!(
            e.items_per_collection == 40320,
            "q={q}: {} permutations",
            e.items_per_collection
        );
        ensure!(
            e.subsets_checked == if q == 1 { 5 } else { 10 },
            "q={q} subsets"
        );
        ensure!(e.pass, "q={q} mismatched {:?}", e.mismatched);
    }
    // negative control: one flipped bit of the white canonical
    let mut white = s.white().clone();
    white.flip(2, 5);
    let bad = SchemeBasis::with_claimed_contrast(
        "flipped",
        3,
        white,
        s.black().clone(),
        s.d(),
        s.alpha(),
    )
    .map_err(|e| e.to_string())?;
    let failed = [1, 2].iter().any(|&q| {
        !security_audit(&bad, q, SecurityMode::FullEnumeration)
            .map(|e| e.pass)
            .unwrap_or(true)
    });
    ensure!(failed, "negative control passed the security audit");
    Ok(())
}

fn ac4_k_of_k() -> Check {
    for (k, r) in [(2usize, 2u32), (3, 24), (4, 40320)] {
        let s = build_k_of_k(k).map_err(|e| e.to_string())?;
        let m = 1usize << (k - 1);
        ensure!(s.m() == m, "k={k} m={}", s.m());
        let all: Vec<usize> = (0..k).collect();
        ensure!(
            or_weight(s.white(), &all) == m - 1,
            "k={k} white full stack"
        );
        ensure!(or_weight(s.black(), &all) == m, "k={k} black full stack");
        ensure!(
            s.collection_size() == &BigUint::from(r),
            "k={k} r={}",
            s.collection_size()
        );
        ensure!(s.alpha() == Rational::new(1, m as i64), "k={k} alpha");
    }
    Ok(())
}

fn ac5_composition() -> Check {
    let base = build_k_of_k(3).map_err(|e| e.to_string())?;
    let h = build_function_family(4, 3, FamilyMode::Exhaustive).map_err(|e| e.to_string())?;
    ensure!(h.l() == 81, "l = {}", h.l());
    let composed = build_k_of_n(&base, 4, &h).map_err(|e| e.to_string())?;
    ensure!(composed.m() == 324, "m' = {}", composed.m());

    // oracle: count injective maps restricted to each triple by nested loops
    for subset in (0..4usize).combinations(3) {
        let mut injective = 0i64;
        let mut total = 0i64;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        let f = [a, b, c, d];
                        let img: HashSet<usize> = subset.iter().map(|&i| f[i]).collect();
                        total += 1;
                        injective += i64::from(img.len() == 3);
                    }
                }
            }
        }
        ensure!(
            Rational::new(injective, total) == Rational::new(2, 9),
            "oracle beta_3 on {subset:?} = {injective}/{total}"
        );
    }
    let analysis = analyze_family(&h, 3).map_err(|e| e.to_string())?;
    for dist in &analysis.per_subset {
        ensure!(
            dist.beta(3) == Rational::new(2, 9),
            "beta_3 on {:?} = {}",
            dist.subset,
            dist.beta(3)
        );
    }

    let mut black_min = usize::MAX;
    let mut white_max = 0;
    for t in (0..4).combinations(3) {
        black_min = black_min.min(or_weight(composed.black(), &t));
        white_max = white_max.max(or_weight(composed.white(), &t));
    }
    let measured = Rational::new(black_min as i64 - white_max as i64, 324);
    let bound = Rational::new(2, 9) * Rational::new(1, 4);
    ensure!(measured >= bound, "alpha' = {measured} below {bound}");
    ensure!(
        composed.alpha() == measured,
        "stored alpha' {}",
        composed.alpha()
    );

    for q in [1, 2] {
        let r = composed_security_audit(&base, &h, q).map_err(|e| e.to_string())?;
        ensure!(r.pass, "composed security q={q}");
        for s in &r.per_subset {
            ensure!(
                s.white == s.black,
                "q={q} subset {:?}: {} vs {}",
                s.subset,
                s.white,
                s.black
            );
            ensure!(
                Rational::from_integer(s.white as i64) == s.predicted,
                "q={q} subset {:?}: weight {} vs predicted {}",
                s.subset,
                s.white,
                s.predicted
            );
        }
    }
    Ok(())
}

fn ac6_round_trip() -> Check {
    let basis = build_three_of_n(5).map_err(|e| e.to_string())?;
    let layout = default_layout(8, true).map_err(|e| e.to_string())?;
    let mut cases = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let secret = BinaryImage::from_fn(40, 40, |_, _| rng.random_bool(0.5));
        let shares =
            recursive_vc::split_image(&secret, &basis, &layout, seed).map_err(|e| e.to_string())?;
        for t in (0..5).combinations(3) {
            let picked: Vec<&ShareImage> = t.iter().map(|&i| &shares[i]).collect();
            let stacked = stack(&picked).map_err(|e| e.to_string())?;
            let out = decode(&stacked, &basis, 3).map_err(|e| e.to_string())?;
            ensure!(out == secret, "seed {seed} shares {t:?} decode mismatch");
            cases += 1;
        }
    }
    ensure!(cases == 200, "{cases} cases");
    Ok(())
}

fn random_image(w: usize, h: usize, seed: u64) -> BinaryImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BinaryImage::from_fn(w, h, |_, _| rng.random_bool(0.5))
}

fn check_chain(dims: &[(usize, usize)], seed: u64) -> Check {
    let basis = build_three_of_n(5).map_err(|e| e.to_string())?;
    let layout = default_layout(8, true).map_err(|e| e.to_string())?;
    let secrets: Vec<BinaryImage> = dims
        .iter()
        .enumerate()
        .map(|(i, &(w, h))| random_image(w, h, seed * 31 + i as u64))
        .collect();
    let chain = SecretChain::with_bands(basis.clone(), layout, secrets.clone())
        .map_err(|e| e.to_string())?;
    let out = embed_chain(&chain, seed).map_err(|e| e.to_string())?;
    let finals = out.final_shares();
    let extracted = chain.extract(finals).map_err(|e| e.to_string())?;
    for (level, secret) in secrets.iter().enumerate() {
        // (b) extracted shares equal the recorded ones
        ensure!(
            extracted[level] == out.levels[level],
            "level {level}: extraction differs from trail"
        );
        let shares = &extracted[level];
        // (a), (c) any 3 decode exactly
        for t in (0..5).combinations(3) {
            let picked: Vec<&ShareImage> = t.iter().map(|&i| &shares[i]).collect();
            let got = decode(&stack(&picked).map_err(|e| e.to_string())?, &basis, 3)
                .map_err(|e| e.to_string())?;
            ensure!(&got == secret, "level {level} shares {t:?} decode mismatch");
        }
        // (d) any 2 give weight 5 for every block, whatever the color
        for pair in (0..5).combinations(2) {
            let st = stack(&[&shares[pair[0]], &shares[pair[1]]]).map_err(|e| e.to_string())?;
            for y in 0..secret.height() {
                for x in 0..secret.width() {
                    let w = st.grid().block_weight(x, y);
                    ensure!(
                        w == 5,
                        "level {level} pair {pair:?} block ({x},{y}) weight {w}"
                    );
                }
            }
        }
        // no size expansion
        ensure!(
            shares[0].grid().grid_width() == secret.width() * 3
                && shares[0].grid().grid_height() == secret.height() * 3,
            "level {level}: share grid has unexpected size"
        );
    }
    Ok(())
}

fn ac7_recursive_chain() -> Check {
    // dimensions are (width, height)
    check_chain(&[(1, 1), (1, 5), (5, 5)], 3)?;
    check_chain(&[(8, 8), (8, 40), (40, 40)], 4)?;
    Ok(())
}

fn ac8_constrained_uniformity() -> Check {
    let basis = build_three_of_n(5).map_err(|e| e.to_string())?;
    let canonical = basis.black();
    let row = 1;
    let target: BitRow = "01010101"
        .parse()
        .map_err(|e: recursive_vc::Error| e.to_string())?;
    // exact reference set by brute force over all 8! permutations
    let satisfying: Vec<Vec<usize>> = enumerate_permutations(8)
        .map_err(|e| e.to_string())?
        .filter(|p| {
            permute_columns(canonical, p)
                .map(|m| m.row(row) == &target)
                .unwrap_or(false)
        })
        .map(|p| p.mapping().to_vec())
        .collect();
    ensure!(
        satisfying.len() == 576,
        "{} satisfying permutations",
        satisfying.len()
    );
    let index: HashMap<Vec<usize>, usize> = satisfying
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, p)| (p, i))
        .collect();

    let samples = 50_000usize;
    let mut counts = vec![0usize; satisfying.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    for _ in 0..samples {
        let p = sample_constrained_permutation(canonical, row, &target, &mut rng)
            .map_err(|e| e.to_string())?;
        let i = index
            .get(p.mapping())
            .ok_or_else(|| format!("sample {:?} outside the satisfying set", p.mapping()))?;
        counts[*i] += 1;
    }
    let expected = samples as f64 / satisfying.len() as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((satisfying.len() - 1) as f64).map_err(|e| e.to_string())?;
    let p_value = 1.0 - dist.cdf(chi2);
    println!("      chi2 = {chi2:.1} on 575 df, p = {p_value:.4}");
    ensure!(p_value > 0.001, "chi2 = {chi2:.1}, p = {p_value:.5}");
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 8] = [
        (
            "AC1",
            "(3,5) Hamming weights 4 / 5 vs 6 / 5 vs 8",
            Duration::from_secs(1),
            ac1_three_of_five_weights,
        ),
        (
            "AC2",
            "(3,n) n=3..8 triplet and pair properties",
            Duration::from_secs(1),
            ac2_three_of_n_family,
        ),
        (
            "AC3",
            "(3,5) exact security over 8! permutations + negative control",
            Duration::from_secs(10),
            ac3_exact_security,
        ),
        (
            "AC4",
            "(k,k) k=2,3,4 expansion, full-stack weights, r",
            Duration::from_secs(5),
            ac4_k_of_k,
        ),
        (
            "AC5",
            "(3,4) composition: m'=324, beta_3=2/9, contrast, security",
            Duration::from_secs(30),
            ac5_composition,
        ),
        (
            "AC6",
            "40x40 round trip, 20 seeds x C(5,3)",
            Duration::from_secs(10),
            ac6_round_trip,
        ),
        (
            "AC7",
            "recursive chains 1x1->5x1->5x5 and 8x8->40x8->40x40",
            Duration::from_secs(30),
            ac7_recursive_chain,
        ),
        (
            "AC8",
            "constrained sampling uniform over 576 permutations",
            Duration::from_secs(30),
            ac8_constrained_uniformity,
        ),
    ];
    let mut failures = Vec::new();
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = result.and_then(|()| {
            if elapsed <= limit {
                Ok(())
            } else {
                Err(format!("took {elapsed:.2?}, limit {limit:?}"))
            }
        });
        match &result {
            Ok(()) => println!("{id} PASS ({elapsed:.2?}) {name}"),
            Err(msg) => {
                println!("{id} FAIL ({elapsed:.2?}) {name}: {msg}");
                failures.push(id);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
