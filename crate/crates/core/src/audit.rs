//! Exhaustive checks of the contrast and security conditions.
//!
//! Contrast: over every `q`-subset of rows, the OR weights of the white and
//! black canonicals are enumerated; at `q = k` the black minimum must reach
//! `d` and the white maximum must stay at or below `d - alpha·m`. OR weights
//! do not depend on column order, so the canonicals stand in for their whole
//! collections.
//!
//! Security: for every `q < k` and every `q`-subset of rows, the restricted
//! white and black collections must be equal as multisets. Two routes are
//! available. [`SecurityMode::FullEnumeration`] walks all `m!` permutations
//! and counts the restricted matrices they produce. [`SecurityMode::ColumnMultiset`]
//! compares the column multisets of the two restricted canonicals, which
//! decides the same question: two matrices are column permutations of each
//! other exactly when their column multisets agree, and each permutation
//! class is hit equally often by the full enumeration.

use std::collections::HashMap;

use itertools::Itertools;
use num_traits::Zero;

use crate::bitcore::{enumerate_permutations, hamming_weight, or_rows, BitMatrix};
use crate::error::{Error, Result};
use crate::schemes::{
    analyze_family, check_subset_cap, compose_canonicals, or_weight_extremes, FunctionFamily,
    Rational, SchemeBasis, WeightRange,
};

/// OR-weight extremes at one subset size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubsetWeights {
    pub q: usize,
    pub white: WeightRange,
    pub black: WeightRange,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContrastReport {
    pub label: String,
    pub k: usize,
    pub m: usize,
    pub per_q: Vec<SubsetWeights>,
    /// Recomputed decision weight: smallest black OR weight at `k` rows.
    pub d: usize,
    /// Recomputed relative contrast.
    pub alpha: Rational,
    pub stored_d: usize,
    pub stored_alpha: Rational,
    pub pass: bool,
}

impl ContrastReport {
    pub fn at(&self, q: usize) -> Option<&SubsetWeights> {
        self.per_q.iter().find(|w| w.q == q)
    }
}

/// Enumerates every row subset of both canonicals and checks the contrast condition.
pub fn contrast_audit(basis: &SchemeBasis) -> Result<ContrastReport> {
    let per_q = (1..=basis.n())
        .map(|q| {
            Ok(SubsetWeights {
                q,
                white: or_weight_extremes(basis.white(), q)?,
                black: or_weight_extremes(basis.black(), q)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let at_k = per_q[basis.k() - 1];
    let m = basis.m() as i64;
    let d = at_k.black.min;
    let alpha = Rational::new(d as i64 - at_k.white.max as i64, m);
    let stored_d = basis.d();
    let stored_alpha = basis.alpha();
    let white_bound =
        Rational::from_integer(stored_d as i64) - stored_alpha * Rational::from_integer(m);
    let pass = alpha > Rational::zero()
        && d == stored_d
        && alpha == stored_alpha
        && at_k.black.min >= stored_d
        && Rational::from_integer(at_k.white.max as i64) <= white_bound;
    Ok(ContrastReport {
        label: basis.label().to_owned(),
        k: basis.k(),
        m: basis.m(),
        per_q,
        d,
        alpha,
        stored_d,
        stored_alpha,
        pass,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SecurityMode {
    /// Count restricted matrices over all `m!` column permutations.
    FullEnumeration,
    /// Compare column multisets of the restricted canonicals.
    ColumnMultiset,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecurityEntry {
    pub q: usize,
    pub mode: SecurityMode,
    pub subsets_checked: usize,
    /// Items per color per subset: `m!` matrices, or `m` columns.
    pub items_per_collection: u128,
    /// Row subsets whose white and black multisets differ.
    pub mismatched: Vec<Vec<usize>>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecurityReport {
    pub label: String,
    pub entries: Vec<SecurityEntry>,
    pub pass: bool,
}

fn column_histogram(m: &BitMatrix) -> HashMap<u64, usize> {
    let mut hist = HashMap::new();
    for j in 0..m.cols() {
        *hist.entry(m.column_key(j)).or_insert(0) += 1;
    }
    hist
}

/// Checks indistinguishability of all `q`-row restrictions, `1 <= q < k`.
pub fn security_audit(basis: &SchemeBasis, q: usize, mode: SecurityMode) -> Result<SecurityEntry> {
    if q == 0 || q >= basis.k() {
        return Err(Error::invalid(format!(
            "security is defined for 1 <= q < k = {}, got q = {q}",
            basis.k()
        )));
    }
    if q > 64 {
        return Err(Error::invalid(
            "restrictions wider than 64 rows are not supported",
        ));
    }
    check_subset_cap(basis.n(), q)?;
    let subsets: Vec<Vec<usize>> = (0..basis.n()).combinations(q).collect();
    let (items, mismatched) = match mode {
        SecurityMode::ColumnMultiset => {
            let mut bad = Vec::new();
            for r in &subsets {
                let w = column_histogram(&basis.white().restrict_rows(r)?);
                let b = column_histogram(&basis.black().restrict_rows(r)?);
                if w != b {
                    bad.push(r.clone());
                }
            }
            (basis.m() as u128, bad)
        }
        SecurityMode::FullEnumeration => full_enumeration(basis, q, &subsets)?,
    };
    Ok(SecurityEntry {
        q,
        mode,
        subsets_checked: subsets.len(),
        items_per_collection: items,
        pass: mismatched.is_empty(),
        mismatched,
    })
}

fn full_enumeration(
    basis: &SchemeBasis,
    q: usize,
    subsets: &[Vec<usize>],
) -> Result<(u128, Vec<Vec<usize>>)> {
    let m = basis.m();
    if q * m > 128 {
        return Err(Error::Capacity {
            what: "restricted matrix size q*m for full enumeration",
            value: (q * m) as u128,
            cap: 128,
        });
    }
    let perms = enumerate_permutations(m)?;
    // restricted column keys per subset, indexed by source column
    let keys = |canonical: &BitMatrix| -> Result<Vec<Vec<u128>>> {
        subsets
            .iter()
            .map(|r| {
                let restricted = canonical.restrict_rows(r)?;
                Ok((0..m)
                    .map(|j| u128::from(restricted.column_key(j)))
                    .collect())
            })
            .collect()
    };
    let white_keys = keys(basis.white())?;
    let black_keys = keys(basis.black())?;
    let mut white_counts: Vec<HashMap<u128, u32>> = vec![HashMap::new(); subsets.len()];
    let mut black_counts: Vec<HashMap<u128, u32>> = vec![HashMap::new(); subsets.len()];
    let mut total = 0u128;
    for p in perms {
        total += 1;
        let shifts: Vec<usize> = (0..m).map(|j| q * p.target(j)).collect();
        for (s, (wk, bk)) in white_keys.iter().zip(&black_keys).enumerate() {
            let pack = |cols: &[u128]| -> u128 {
                cols.iter()
                    .zip(&shifts)
                    .fold(0u128, |acc, (&c, &sh)| acc | (c << sh))
            };
            *white_counts[s].entry(pack(wk)).or_insert(0) += 1;
            *black_counts[s].entry(pack(bk)).or_insert(0) += 1;
        }
    }
    let mismatched = subsets
        .iter()
        .zip(white_counts.iter().zip(&black_counts))
        .filter(|(_, (w, b))| w != b)
        .map(|(r, _)| r.clone())
        .collect();
    Ok((total, mismatched))
}

/// Runs [`security_audit`] for every `q` in `1..k`.
pub fn security_report(basis: &SchemeBasis, mode: SecurityMode) -> Result<SecurityReport> {
    let entries = (1..basis.k())
        .map(|q| security_audit(basis, q, mode))
        .collect::<Result<Vec<_>>>()?;
    Ok(SecurityReport {
        label: basis.label().to_owned(),
        pass: entries.iter().all(|e| e.pass),
        entries,
    })
}

/// OR weight of `q` distinct rows of each canonical, when it does not depend
/// on which rows are chosen. Entry `q - 1` holds `(white, black)`.
pub fn or_weight_profile(basis: &SchemeBasis) -> Result<Vec<(Option<usize>, Option<usize>)>> {
    (1..=basis.n())
        .map(|q| {
            let constant = |r: WeightRange| (r.min == r.max).then_some(r.min);
            Ok((
                constant(or_weight_extremes(basis.white(), q)?),
                constant(or_weight_extremes(basis.black(), q)?),
            ))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComposedSubsetWeights {
    pub subset: Vec<usize>,
    pub white: usize,
    pub black: usize,
    /// `l · Σ_{q'} β_{q'}(subset) · f(q')`.
    pub predicted: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComposedSecurityReport {
    pub q: usize,
    pub l: usize,
    /// `f(q')` of the base scheme for `q' = 1..=q`, when color independent.
    pub f: Vec<Option<usize>>,
    pub per_subset: Vec<ComposedSubsetWeights>,
    pub pass: bool,
}

/// Compares the OR weight of every `q`-subset of composed rows across colors
/// and against the prediction from the base weights `f` and the family's
/// image-size distribution on that subset. OR weights are invariant under
/// column permutation, so each value is also its expectation over the collection.
pub fn composed_security_audit(
    base: &SchemeBasis,
    family: &FunctionFamily,
    q: usize,
) -> Result<ComposedSecurityReport> {
    let k = base.k();
    if q == 0 || q >= k {
        return Err(Error::invalid(format!("need 1 <= q < k = {k}, got {q}")));
    }
    if family.k() != k {
        return Err(Error::invalid(format!(
            "family range {} differs from base threshold {k}",
            family.k()
        )));
    }
    if base.n() != k {
        return Err(Error::invalid("base scheme must be k-of-k"));
    }
    let (white, black) = compose_canonicals(base, family);
    let profile = or_weight_profile(base)?;
    let f: Vec<Option<usize>> = profile[..q]
        .iter()
        .map(|&(w, b)| if w == b { w } else { None })
        .collect();
    let analysis = analyze_family(family, q)?;
    let l = family.l() as i64;
    let mut pass = f.iter().all(Option::is_some);
    let per_subset = analysis
        .per_subset
        .iter()
        .map(|dist| {
            let white = hamming_weight(&or_rows(&white, &dist.subset)?);
            let black = hamming_weight(&or_rows(&black, &dist.subset)?);
            let predicted = (1..=q).fold(Rational::zero(), |acc, qq| {
                let fq = f[qq - 1].unwrap_or(0) as i64;
                acc + dist.beta(qq) * Rational::from_integer(fq)
            }) * Rational::from_integer(l);
            let expected_white = Rational::from_integer(white as i64);
            pass &= white == black && expected_white == predicted;
            Ok(ComposedSubsetWeights {
                subset: dist.subset.clone(),
                white,
                black,
                predicted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComposedSecurityReport {
        q,
        l: family.l(),
        f,
        per_subset,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{build_function_family, build_k_of_k, build_three_of_n, FamilyMode};

    fn corrupted_three_of_five() -> SchemeBasis {
        let good = build_three_of_n(5).unwrap();
        let mut white = good.white().clone();
        white.flip(0, 0);
        SchemeBasis::with_claimed_contrast(
            "corrupt",
            3,
            white,
            good.black().clone(),
            good.d(),
            good.alpha(),
        )
        .unwrap()
    }

    #[test]
    fn contrast_three_of_five() {
        let r = contrast_audit(&build_three_of_n(5).unwrap()).unwrap();
        assert!(r.pass);
        assert_eq!((r.d, r.alpha), (6, Rational::new(1, 8)));
        let q3 = r.at(3).unwrap();
        assert_eq!((q3.white.max, q3.black.min), (5, 6));
        let q1 = r.at(1).unwrap();
        assert_eq!(q1.white, WeightRange { min: 4, max: 4 });
        assert_eq!(q1.black, WeightRange { min: 4, max: 4 });
    }

    #[test]
    fn contrast_four_of_four() {
        let r = contrast_audit(&build_k_of_k(4).unwrap()).unwrap();
        assert!(r.pass);
        let q4 = r.at(4).unwrap();
        assert_eq!((q4.white.max, q4.black.min), (7, 8));
    }

    #[test]
    fn contrast_detects_wrong_claim() {
        let good = build_three_of_n(5).unwrap();
        let lying = SchemeBasis::with_claimed_contrast(
            "lying",
            3,
            good.white().clone(),
            good.black().clone(),
            7,
            Rational::new(1, 8),
        )
        .unwrap();
        assert!(!contrast_audit(&lying).unwrap().pass);
    }

    #[test]
    fn security_routes_agree_on_small_schemes() {
        for basis in [
            build_three_of_n(3).unwrap(),
            build_three_of_n(4).unwrap(),
            build_k_of_k(3).unwrap(),
        ] {
            for q in 1..basis.k() {
                let full = security_audit(&basis, q, SecurityMode::FullEnumeration).unwrap();
                let fast = security_audit(&basis, q, SecurityMode::ColumnMultiset).unwrap();
                assert!(full.pass && fast.pass, "{} q={q}", basis.label());
            }
        }
    }

    #[test]
    fn security_negative_control() {
        let bad = corrupted_three_of_five();
        let report = security_report(&bad, SecurityMode::ColumnMultiset).unwrap();
        assert!(!report.pass);
        assert!(!report.entries[0].pass);
    }

    #[test]
    fn security_rejects_q_at_threshold() {
        let basis = build_three_of_n(5).unwrap();
        assert!(security_audit(&basis, 3, SecurityMode::ColumnMultiset).is_err());
        assert!(security_audit(&basis, 0, SecurityMode::ColumnMultiset).is_err());
    }

    #[test]
    fn full_enumeration_respects_cap() {
        let basis = build_three_of_n(6).unwrap();
        assert!(matches!(
            security_audit(&basis, 1, SecurityMode::FullEnumeration),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn base_profile_k3() {
        let profile = or_weight_profile(&build_k_of_k(3).unwrap()).unwrap();
        assert_eq!(profile[0], (Some(2), Some(2)));
        assert_eq!(profile[1], (Some(3), Some(3)));
        assert_eq!(profile[2], (Some(3), Some(4)));
    }

    #[test]
    fn composed_identity_reduces_to_base() {
        let base = build_k_of_k(3).unwrap();
        let r = composed_security_audit(&base, &FunctionFamily::identity(3), 2).unwrap();
        assert!(r.pass);
        assert!(r.per_subset.iter().all(|s| s.white == 3 && s.black == 3));
    }

    #[test]
    fn composed_sampled_family() {
        let base = build_k_of_k(3).unwrap();
        let h = build_function_family(5, 3, FamilyMode::Sampled { l: 40, seed: 3 }).unwrap();
        for q in 1..3 {
            assert!(composed_security_audit(&base, &h, q).unwrap().pass);
        }
    }
}
