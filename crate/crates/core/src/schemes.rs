//! Scheme constructions.
//!
//! A scheme is stored as a pair of canonical `n × m` matrices, one per pixel
//! color. The share collections for white and black are the sets of all
//! column permutations of those canonicals and are never materialized.
//!
//! Three constructions are provided:
//!
//! * [`build_three_of_n`]: black canonical `[B | I]` with `B` the all-ones
//!   `n × (n-2)` block and `I` the identity, white canonical its complement.
//! * [`build_k_of_k`]: columns are the characteristic vectors of the even
//!   (white) and odd (black) subsets of `{1..k}`.
//! * [`build_k_of_n`]: lifts a `(k,k)` scheme to `n` participants through a
//!   family of maps `{0..n-1} → {0..k-1}`.
//!
//! The decision weight `d` and relative contrast `alpha` of every basis are
//! measured from its matrices by enumerating all `k`-row subsets.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitcore::{hamming_weight, or_rows, BitMatrix, BitRow};
use crate::error::{Error, Result};

/// Exact rational used for contrast and family probabilities.
pub type Rational = num_rational::Ratio<i64>;

/// Largest `k` accepted by [`build_k_of_k`] (`m = 2^(k-1)` columns).
pub const K_OF_K_CAP: usize = 6;
/// Largest `k^n` accepted for an exhaustive function family.
pub const FAMILY_CAP: u128 = 1_000_000;
/// Largest number of row subsets any single weight analysis will enumerate.
pub const SUBSET_CAP: u128 = 4_000_000;

/// Secret pixel color. Black is `1`, matching the subpixel convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    White,
    Black,
}

impl Color {
    pub const BOTH: [Color; 2] = [Color::White, Color::Black];

    pub fn from_bit(bit: bool) -> Color {
        if bit {
            Color::Black
        } else {
            Color::White
        }
    }

    pub fn is_black(self) -> bool {
        self == Color::Black
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::White => "white",
            Color::Black => "black",
        })
    }
}

/// How a function family is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyMode {
    /// All `k^n` maps.
    Exhaustive,
    /// `l` maps drawn uniformly and independently from a seeded generator.
    Sampled { l: usize, seed: u64 },
}

impl fmt::Display for FamilyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyMode::Exhaustive => f.write_str("exhaustive"),
            FamilyMode::Sampled { l, seed } => write!(f, "sampled:{l}:{seed}"),
        }
    }
}

impl FromStr for FamilyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("exhaustive") {
            return Ok(FamilyMode::Exhaustive);
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [tag, l, seed] if tag.eq_ignore_ascii_case("sampled") => {
                let l = l
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad family size {l:?}")))?;
                let seed = seed
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad family seed {seed:?}")))?;
                Ok(FamilyMode::Sampled { l, seed })
            }
            _ => Err(Error::invalid(format!(
                "unknown family {s:?} (expected `exhaustive` or `sampled:L:SEED`)"
            ))),
        }
    }
}

/// Textual scheme descriptor: `3ofN:n`, `kofk:k`, or `kofn:k,n[,family]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeSpec {
    ThreeOfN {
        n: usize,
    },
    KOfK {
        k: usize,
    },
    KOfN {
        k: usize,
        n: usize,
        family: FamilyMode,
    },
}

impl SchemeSpec {
    pub fn build(&self) -> Result<SchemeBasis> {
        match *self {
            SchemeSpec::ThreeOfN { n } => build_three_of_n(n),
            SchemeSpec::KOfK { k } => build_k_of_k(k),
            SchemeSpec::KOfN { k, n, family } => {
                let base = build_k_of_k(k)?;
                let h = build_function_family(n, k, family)?;
                build_k_of_n(&base, n, &h)
            }
        }
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeSpec::ThreeOfN { n } => write!(f, "3ofN:{n}"),
            SchemeSpec::KOfK { k } => write!(f, "kofk:{k}"),
            SchemeSpec::KOfN { k, n, family } => write!(f, "kofn:{k},{n},{family}"),
        }
    }
}

impl FromStr for SchemeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, params) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("scheme {s:?} has no `:` separator")))?;
        let number = |p: &str| -> Result<usize> {
            p.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad scheme parameter {p:?} in {s:?}")))
        };
        match tag.to_ascii_lowercase().as_str() {
            "3ofn" => Ok(SchemeSpec::ThreeOfN { n: number(params)? }),
            "kofk" => Ok(SchemeSpec::KOfK { k: number(params)? }),
            "kofn" => {
                let mut parts = params.splitn(3, ',');
                let k = number(parts.next().unwrap_or(""))?;
                let n = number(
                    parts
                        .next()
                        .ok_or_else(|| Error::invalid(format!("scheme {s:?} needs `k,n`")))?,
                )?;
                let family = match parts.next() {
                    Some(f) => f.parse()?,
                    None => FamilyMode::Exhaustive,
                };
                Ok(SchemeSpec::KOfN { k, n, family })
            }
            _ => Err(Error::invalid(format!(
                "unknown scheme family {tag:?} (expected 3ofN, kofk or kofn)"
            ))),
        }
    }
}

/// A validated `(k, n)` scheme with pixel expansion `m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeBasis {
    label: String,
    n: usize,
    k: usize,
    m: usize,
    white: BitMatrix,
    black: BitMatrix,
    d: usize,
    alpha: Rational,
    r: BigUint,
}

impl SchemeBasis {
    /// Builds a basis from its canonicals, measuring `d` and `alpha` over all
    /// `k`-row subsets. Fails when the canonicals give no positive contrast.
    pub fn from_canonicals(
        label: impl Into<String>,
        k: usize,
        white: BitMatrix,
        black: BitMatrix,
        r: BigUint,
    ) -> Result<Self> {
        let label = label.into();
        check_shapes(k, &white, &black)?;
        let m = white.cols();
        let white_ext = or_weight_extremes(&white, k)?;
        let black_ext = or_weight_extremes(&black, k)?;
        let d = black_ext.min;
        if d == 0 || black_ext.min <= white_ext.max {
            return Err(Error::invalid(format!(
                "{label}: no positive contrast at {k} rows (white up to {}, black down to {})",
                white_ext.max, black_ext.min
            )));
        }
        let alpha = Rational::new((d - white_ext.max) as i64, m as i64);
        Ok(SchemeBasis {
            label,
            n: white.rows(),
            k,
            m,
            white,
            black,
            d,
            alpha,
            r,
        })
    }

    /// Builds a basis with caller-claimed `d` and `alpha`, skipping the
    /// contrast check. Intended for negative controls in audits.
    pub fn with_claimed_contrast(
        label: impl Into<String>,
        k: usize,
        white: BitMatrix,
        black: BitMatrix,
        d: usize,
        alpha: Rational,
    ) -> Result<Self> {
        check_shapes(k, &white, &black)?;
        let m = white.cols();
        Ok(SchemeBasis {
            label: label.into(),
            n: white.rows(),
            k,
            m,
            r: factorial(m),
            white,
            black,
            d,
            alpha,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Participant count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Threshold.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Pixel expansion.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> Rational {
        self.alpha
    }

    /// `alpha · m`, the guaranteed black/white weight gap at `k` rows.
    pub fn contrast_gap(&self) -> usize {
        (self.alpha * Rational::from_integer(self.m as i64)).to_integer() as usize
    }

    /// Size of each share collection, counted as column permutations per member.
    pub fn collection_size(&self) -> &BigUint {
        &self.r
    }

    pub fn white(&self) -> &BitMatrix {
        &self.white
    }

    pub fn black(&self) -> &BitMatrix {
        &self.black
    }

    pub fn canonical(&self, color: Color) -> &BitMatrix {
        match color {
            Color::White => &self.white,
            Color::Black => &self.black,
        }
    }

    /// The common row weight of both canonicals, if every row has the same weight.
    pub fn uniform_row_weight(&self) -> Option<usize> {
        let w = self.white.row_weights();
        let b = self.black.row_weights();
        let first = *w.first()?;
        w.iter().chain(&b).all(|&x| x == first).then_some(first)
    }
}

fn check_shapes(k: usize, white: &BitMatrix, black: &BitMatrix) -> Result<()> {
    if white.rows() != black.rows() || white.cols() != black.cols() {
        return Err(Error::invalid(format!(
            "canonical shapes differ: {}x{} vs {}x{}",
            white.rows(),
            white.cols(),
            black.rows(),
            black.cols()
        )));
    }
    if white.rows() == 0 || white.cols() == 0 {
        return Err(Error::invalid("canonicals must be non-empty"));
    }
    if k == 0 || k > white.rows() {
        return Err(Error::invalid(format!(
            "threshold {k} outside 1..={}",
            white.rows()
        )));
    }
    Ok(())
}

/// Minimum and maximum OR weight over a family of row subsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeightRange {
    pub min: usize,
    pub max: usize,
}

pub(crate) fn binomial(n: usize, q: usize) -> u128 {
    if q > n {
        return 0;
    }
    let q = q.min(n - q);
    (0..q).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

pub(crate) fn check_subset_cap(n: usize, q: usize) -> Result<()> {
    let count = binomial(n, q);
    if count > SUBSET_CAP {
        return Err(Error::Capacity {
            what: "row subsets C(n,q)",
            value: count,
            cap: SUBSET_CAP,
        });
    }
    Ok(())
}

/// Extremes of `H(OR of q rows)` over every `q`-subset of rows.
pub fn or_weight_extremes(m: &BitMatrix, q: usize) -> Result<WeightRange> {
    if q == 0 || q > m.rows() {
        return Err(Error::invalid(format!(
            "subset size {q} outside 1..={}",
            m.rows()
        )));
    }
    check_subset_cap(m.rows(), q)?;
    let mut range = WeightRange {
        min: usize::MAX,
        max: 0,
    };
    for subset in (0..m.rows()).combinations(q) {
        let w = hamming_weight(&or_rows(m, &subset)?);
        range.min = range.min.min(w);
        range.max = range.max.max(w);
    }
    Ok(range)
}

pub(crate) fn factorial(m: usize) -> BigUint {
    (1..=m).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// The `(3, n)` scheme: black canonical `[B | I]`, white canonical its complement.
pub fn build_three_of_n(n: usize) -> Result<SchemeBasis> {
    if n < 3 {
        return Err(Error::invalid(format!(
            "3-of-n scheme needs n >= 3, got {n}"
        )));
    }
    let black = BitMatrix::ones(n, n - 2).hconcat(&BitMatrix::identity(n))?;
    let white = black.complement();
    let m = 2 * n - 2;
    SchemeBasis::from_canonicals(format!("3ofN:{n}"), 3, white, black, factorial(m))
}

/// The `(k, k)` scheme with `m = 2^(k-1)`.
///
/// Columns are taken in binary counting order of their characteristic
/// vectors, with row 0 as the most significant bit, and split by parity.
pub fn build_k_of_k(k: usize) -> Result<SchemeBasis> {
    if k < 2 {
        return Err(Error::invalid(format!(
            "k-of-k scheme needs k >= 2, got {k}"
        )));
    }
    if k > K_OF_K_CAP {
        return Err(Error::Capacity {
            what: "k-of-k threshold k",
            value: k as u128,
            cap: K_OF_K_CAP as u128,
        });
    }
    let mut even = Vec::new();
    let mut odd = Vec::new();
    for v in 0u32..(1 << k) {
        let column: Vec<bool> = (0..k).map(|i| (v >> (k - 1 - i)) & 1 == 1).collect();
        if v.count_ones() % 2 == 0 {
            even.push(column);
        } else {
            odd.push(column);
        }
    }
    let white = columns_to_matrix(k, &even)?;
    let black = columns_to_matrix(k, &odd)?;
    let m = 1usize << (k - 1);
    SchemeBasis::from_canonicals(format!("kofk:{k}"), k, white, black, factorial(m))
}

fn columns_to_matrix(rows: usize, columns: &[Vec<bool>]) -> Result<BitMatrix> {
    BitMatrix::from_rows(
        (0..rows)
            .map(|i| BitRow::from_bools(columns.iter().map(|c| c[i])))
            .collect(),
    )
}

/// A list of maps `{0..n-1} → {0..k-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionFamily {
    n: usize,
    k: usize,
    functions: Vec<Vec<usize>>,
}

impl FunctionFamily {
    pub fn new(n: usize, k: usize, functions: Vec<Vec<usize>>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::invalid("function family is empty"));
        }
        for (idx, f) in functions.iter().enumerate() {
            if f.len() != n {
                return Err(Error::invalid(format!(
                    "function {idx} has domain size {}, expected {n}",
                    f.len()
                )));
            }
            if let Some(&v) = f.iter().find(|&&v| v >= k) {
                return Err(Error::invalid(format!(
                    "function {idx} takes value {v} outside 0..{k}"
                )));
            }
        }
        Ok(FunctionFamily { n, k, functions })
    }

    /// The single identity map on `{0..k-1}`.
    pub fn identity(k: usize) -> Self {
        FunctionFamily {
            n: k,
            k,
            functions: vec![(0..k).collect()],
        }
    }

    /// Domain size.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Range size.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of functions.
    pub fn l(&self) -> usize {
        self.functions.len()
    }

    pub fn functions(&self) -> &[Vec<usize>] {
        &self.functions
    }

    /// Number of distinct values `f` takes on `subset`.
    pub fn image_size(f: &[usize], subset: &[usize]) -> usize {
        let mut seen = 0u64;
        for &i in subset {
            seen |= 1 << f[i];
        }
        seen.count_ones() as usize
    }
}

pub fn build_function_family(n: usize, k: usize, mode: FamilyMode) -> Result<FunctionFamily> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "family needs 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    if k > 64 {
        return Err(Error::invalid(format!("family range {k} above 64")));
    }
    let functions = match mode {
        FamilyMode::Exhaustive => {
            let total = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
            if total > FAMILY_CAP {
                return Err(Error::Capacity {
                    what: "exhaustive family size k^n",
                    value: total,
                    cap: FAMILY_CAP,
                });
            }
            (0..total as usize)
                .map(|mut idx| {
                    // point 0 is the most significant digit
                    let mut f = vec![0; n];
                    for slot in f.iter_mut().rev() {
                        *slot = idx % k;
                        idx /= k;
                    }
                    f
                })
                .collect()
        }
        FamilyMode::Sampled { l, seed } => {
            if l == 0 {
                return Err(Error::invalid("sampled family needs l >= 1"));
            }
            if l as u128 > FAMILY_CAP {
                return Err(Error::Capacity {
                    what: "sampled family size l",
                    value: l as u128,
                    cap: FAMILY_CAP,
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..l)
                .map(|_| (0..n).map(|_| rng.random_range(0..k)).collect())
                .collect()
        }
    };
    FunctionFamily::new(n, k, functions)
}

/// `β_q` for one subset: `beta[q-1]` is the fraction of functions taking
/// exactly `q` distinct values on `subset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetDistribution {
    pub subset: Vec<usize>,
    pub beta: Vec<Rational>,
}

impl SubsetDistribution {
    pub fn beta(&self, q: usize) -> Rational {
        self.beta
            .get(q.wrapping_sub(1))
            .copied()
            .unwrap_or_else(Rational::zero)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyAnalysis {
    pub subset_size: usize,
    pub per_subset: Vec<SubsetDistribution>,
    /// Minimum over all subsets of `β_{subset_size}`.
    pub min_full_beta: Rational,
}

/// Distribution of image sizes of the family over every `subset_size`-subset.
pub fn analyze_family(h: &FunctionFamily, subset_size: usize) -> Result<FamilyAnalysis> {
    if subset_size == 0 || subset_size > h.n() {
        return Err(Error::invalid(format!(
            "subset size {subset_size} outside 1..={}",
            h.n()
        )));
    }
    check_subset_cap(h.n(), subset_size)?;
    let l = h.l() as i64;
    let per_subset: Vec<SubsetDistribution> = (0..h.n())
        .combinations(subset_size)
        .map(|subset| {
            let mut counts = vec![0i64; subset_size];
            for f in h.functions() {
                counts[FunctionFamily::image_size(f, &subset) - 1] += 1;
            }
            SubsetDistribution {
                subset,
                beta: counts.into_iter().map(|c| Rational::new(c, l)).collect(),
            }
        })
        .collect();
    let min_full_beta = per_subset
        .iter()
        .map(|s| s.beta(subset_size))
        .min()
        .unwrap_or_else(Rational::zero);
    Ok(FamilyAnalysis {
        subset_size,
        per_subset,
        min_full_beta,
    })
}

/// The composed white and black canonicals, without any contrast check.
///
/// Composed row `i`, column `(h, j)` holds base row `h(i)`, column `j`.
/// Columns are ordered block by block, one block of width `m` per function.
pub fn compose_canonicals(base: &SchemeBasis, h: &FunctionFamily) -> (BitMatrix, BitMatrix) {
    let compose = |t: &BitMatrix| {
        BitMatrix::from_rows(
            (0..h.n())
                .map(|i| BitRow::from_bools(h.functions().iter().flat_map(|f| t.row(f[i]).iter())))
                .collect(),
        )
        .expect("composed rows share one length")
    };
    (compose(base.white()), compose(base.black()))
}

/// Lifts a `(k, k)` basis to `n` participants.
/// See [`compose_canonicals`] for the column layout. Fails with
/// [`Error::DegenerateFamily`] when some `k`-subset has no injective function,
/// or when the measured contrast over all `k`-subsets is not positive.
pub fn build_k_of_n(base: &SchemeBasis, n: usize, h: &FunctionFamily) -> Result<SchemeBasis> {
    let k = base.k();
    if base.n() != k {
        return Err(Error::invalid(format!(
            "base scheme must be k-of-k, got {}-of-{}",
            k,
            base.n()
        )));
    }
    if h.n() != n || h.k() != k {
        return Err(Error::invalid(format!(
            "family maps {} points to {} values, scheme needs {n} to {k}",
            h.n(),
            h.k()
        )));
    }
    if n < k {
        return Err(Error::invalid(format!("n = {n} below threshold {k}")));
    }
    let analysis = analyze_family(h, k)?;
    if let Some(bad) = analysis.per_subset.iter().find(|s| s.beta(k).is_zero()) {
        return Err(Error::DegenerateFamily(format!(
            "no function is injective on participants {:?}",
            bad.subset
        )));
    }
    let (white, black) = compose_canonicals(base, h);
    let label = format!("kofn:{k},{n}");
    let r = num_traits::pow(base.collection_size().clone(), h.l());
    SchemeBasis::from_canonicals(label, k, white, black, r).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::DegenerateFamily(msg),
        other => other,
    })
}
