//! Dense Boolean vectors and matrices.
//!
//! Every basis matrix, pixel code, and stacked subpixel pattern in the crate
//! is a [`BitMatrix`] or a [`BitRow`]. Matrices are tiny (a few hundred
//! columns at most), so the representation is a plain vector of packed rows.
//!
//! Column permutations follow one fixed convention: applying a
//! [`ColumnPermutation`] `p` moves source column `j` to position `p(j)`.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;

use crate::error::{Error, Result};

/// Largest `m` for which [`enumerate_permutations`] will run by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 8;

const WORD: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A fixed-length sequence of bits, packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitRow {
    len: usize,
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        BitRow {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut row = BitRow::zeros(len);
        for i in 0..len {
            row.set(i, true);
        }
        row
    }

    /// Builds a row from `0`/`1` values. Anything else is rejected.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut row = BitRow::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => row.set(i, true),
                other => return Err(Error::invalid(format!("bit {i} has value {other}"))),
            }
        }
        Ok(row)
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut row = BitRow::zeros(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            row.set(i, b);
        }
        row
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// In-place OR with a row of the same length.
    pub fn or_assign(&mut self, other: &BitRow) {
        assert_eq!(self.len, other.len, "OR of rows with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    pub fn and(&self, other: &BitRow) -> BitRow {
        assert_eq!(self.len, other.len, "AND of rows with different lengths");
        BitRow {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    pub fn complement(&self) -> BitRow {
        let mut out = BitRow {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.clear_tail();
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of set bits, ascending.
    pub fn ones_positions(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.iter().map(u8::from).collect()
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Display for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitRow({self})")
    }
}

/// Parses a string of `0`/`1` characters; whitespace is ignored.
impl FromStr for BitRow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for (offset, c) in s.char_indices() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                c if c.is_whitespace() => {}
                other => {
                    return Err(Error::parse(
                        offset,
                        format!("unexpected character {other:?}"),
                    ))
                }
            }
        }
        Ok(BitRow::from_bools(bits))
    }
}

/// Number of set bits.
pub fn hamming_weight(v: &BitRow) -> usize {
    v.count_ones()
}

/// A dense `rows × cols` Boolean matrix stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitRow>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            cols,
            rows: vec![BitRow::zeros(cols); rows],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        BitMatrix {
            cols,
            rows: vec![BitRow::ones(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BitMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// All rows must share one length.
    pub fn from_rows(rows: Vec<BitRow>) -> Result<Self> {
        let cols = rows.first().map_or(0, BitRow::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::invalid(format!(
                "row {i} has {} columns, expected {cols}",
                r.len()
            )));
        }
        Ok(BitMatrix { cols, rows })
    }

    /// Convenience constructor from `"0101"`-style strings, one per row.
    pub fn from_strs(rows: &[&str]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<BitRow>>>()?;
        BitMatrix::from_rows(rows)
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitRow {
        &self.rows[i]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &BitRow> {
        self.rows.iter()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.rows[i].set(j, value);
    }

    /// Flips a single entry. Used to build corrupted bases for negative controls.
    pub fn flip(&mut self, i: usize, j: usize) {
        let v = self.get(i, j);
        self.set(i, j, !v);
    }

    pub fn column(&self, j: usize) -> BitRow {
        BitRow::from_bools(self.rows.iter().map(|r| r.get(j)))
    }

    /// Column `j` packed into an integer, row 0 in the least significant bit.
    /// Requires at most 64 rows.
    pub fn column_key(&self, j: usize) -> u64 {
        debug_assert!(self.rows() <= 64);
        self.rows
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, r)| acc | (u64::from(r.get(j)) << i))
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hconcat(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.rows() != other.rows() {
            return Err(Error::invalid(format!(
                "cannot concatenate {} rows with {} rows",
                self.rows(),
                other.rows()
            )));
        }
        let cols = self.cols + other.cols;
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| BitRow::from_bools(a.iter().chain(b.iter())))
            .collect();
        Ok(BitMatrix { cols, rows })
    }

    /// The submatrix formed by the given rows, in the given order.
    pub fn restrict_rows(&self, rows: &[usize]) -> Result<BitMatrix> {
        check_rows(self, rows)?;
        Ok(BitMatrix {
            cols: self.cols,
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
        })
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.rows.iter().map(BitRow::count_ones).collect()
    }

    pub fn complement(&self) -> BitMatrix {
        complement(self)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "  {r}")?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

fn check_rows(m: &BitMatrix, rows: &[usize]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid("row set is empty"));
    }
    if let Some(&bad) = rows.iter().find(|&&i| i >= m.rows()) {
        return Err(Error::invalid(format!(
            "row index {bad} out of range for {} rows",
            m.rows()
        )));
    }
    Ok(())
}

/// OR of the selected rows: bit `j` is set iff some selected row has bit `j` set.
pub fn or_rows(m: &BitMatrix, row_set: &[usize]) -> Result<BitRow> {
    check_rows(m, row_set)?;
    let mut acc = BitRow::zeros(m.cols());
    for &i in row_set {
        acc.or_assign(m.row(i));
    }
    Ok(acc)
}

/// Every bit flipped.
pub fn complement(m: &BitMatrix) -> BitMatrix {
    BitMatrix {
        cols: m.cols,
        rows: m.rows.iter().map(BitRow::complement).collect(),
    }
}

/// A bijection on column indices `0..m`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ColumnPermutation {
    mapping: Vec<usize>,
}

impl ColumnPermutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; mapping.len()];
        for &t in &mapping {
            if t >= mapping.len() || std::mem::replace(&mut seen[t], true) {
                return Err(Error::invalid(format!(
                    "{mapping:?} is not a permutation of 0..{}",
                    mapping.len()
                )));
            }
        }
        Ok(ColumnPermutation { mapping })
    }

    /// From the 1-based "source column order" notation, e.g. `[1, 8, 2, 7, ...]`,
    /// where entry `i` names the source column that ends up in position `i`.
    pub fn from_one_based_order(order: &[usize]) -> Result<Self> {
        let mut mapping = vec![usize::MAX; order.len()];
        for (pos, &src) in order.iter().enumerate() {
            if src == 0 || src > order.len() || mapping[src - 1] != usize::MAX {
                return Err(Error::invalid(format!(
                    "{order:?} is not a 1-based column order"
                )));
            }
            mapping[src - 1] = pos;
        }
        ColumnPermutation::new(mapping)
    }

    pub fn identity(m: usize) -> Self {
        ColumnPermutation {
            mapping: (0..m).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// Destination position of source column `j`.
    pub fn target(&self, j: usize) -> usize {
        self.mapping[j]
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn inverse(&self) -> ColumnPermutation {
        let mut inv = vec![0; self.mapping.len()];
        for (j, &t) in self.mapping.iter().enumerate() {
            inv[t] = j;
        }
        ColumnPermutation { mapping: inv }
    }

    /// Applying `self.then(next)` equals applying `self` and then `next`.
    pub fn then(&self, next: &ColumnPermutation) -> ColumnPermutation {
        assert_eq!(
            self.len(),
            next.len(),
            "composing permutations of different sizes"
        );
        ColumnPermutation {
            mapping: self.mapping.iter().map(|&t| next.mapping[t]).collect(),
        }
    }
}

/// Moves source column `j` of `m` to position `p(j)`.
pub fn permute_columns(m: &BitMatrix, p: &ColumnPermutation) -> Result<BitMatrix> {
    if p.len() != m.cols() {
        return Err(Error::invalid(format!(
            "permutation of length {} applied to {} columns",
            p.len(),
            m.cols()
        )));
    }
    let rows = m
        .rows
        .iter()
        .map(|r| {
            let mut out = BitRow::zeros(r.len());
            for j in 0..r.len() {
                if r.get(j) {
                    out.set(p.target(j), true);
                }
            }
            out
        })
        .collect();
    Ok(BitMatrix { cols: m.cols, rows })
}

/// All `m!` permutations of `0..m`, in lexicographic order of their mappings.
pub fn enumerate_permutations(m: usize) -> Result<impl Iterator<Item = ColumnPermutation>> {
    enumerate_permutations_with_cap(m, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_permutations_with_cap(
    m: usize,
    cap: usize,
) -> Result<impl Iterator<Item = ColumnPermutation>> {
    if m > cap {
        return Err(Error::Capacity {
            what: "permutation size m",
            value: m as u128,
            cap: cap as u128,
        });
    }
    Ok((0..m)
        .permutations(m)
        .map(|mapping| ColumnPermutation { mapping }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi5() -> BitMatrix {
        BitMatrix::from_strs(&["11110000", "11101000", "11100100", "11100010", "11100001"]).unwrap()
    }

    #[test]
    fn or_rows_examples() {
        let bi = bi5();
        assert_eq!(
            or_rows(&bi, &[0, 1, 2, 3, 4]).unwrap().to_string(),
            "11111111"
        );
        assert_eq!(
            or_rows(&bi.complement(), &[0, 1, 2, 3, 4])
                .unwrap()
                .to_string(),
            "00011111"
        );
        let three = or_rows(&bi, &[0, 1, 2]).unwrap();
        assert_eq!(three.to_string(), "11111100");
        assert_eq!(hamming_weight(&three), 6);
        for i in 0..5 {
            assert_eq!(&or_rows(&bi, &[i]).unwrap(), bi.row(i));
        }
    }

    #[test]
    fn or_rows_rejects_bad_sets() {
        let bi = bi5();
        assert!(matches!(or_rows(&bi, &[]), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            or_rows(&bi, &[0, 5]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn hamming_weight_examples() {
        assert_eq!(hamming_weight(&"00011111".parse().unwrap()), 5);
        assert_eq!(hamming_weight(&BitRow::zeros(130)), 0);
        assert_eq!(hamming_weight(&BitRow::ones(130)), 130);
    }

    #[test]
    fn printed_order_permutation_keeps_row_weights() {
        let p = ColumnPermutation::from_one_based_order(&[1, 8, 2, 7, 3, 6, 4, 5]).unwrap();
        let out = permute_columns(&bi5(), &p).unwrap();
        assert_eq!(out.row_weights(), vec![4; 5]);
        // position 1 now holds source column 8
        assert_eq!(out.column(1), bi5().column(7));
    }

    #[test]
    fn permutation_group_identities() {
        let bi = bi5();
        assert_eq!(
            permute_columns(&bi, &ColumnPermutation::identity(8)).unwrap(),
            bi
        );
        let p = ColumnPermutation::from_one_based_order(&[5, 8, 1, 6, 2, 3, 7, 4]).unwrap();
        let there = permute_columns(&bi, &p).unwrap();
        assert_eq!(permute_columns(&there, &p.inverse()).unwrap(), bi);
        assert_eq!(p.then(&p.inverse()), ColumnPermutation::identity(8));
    }

    #[test]
    fn permute_rejects_length_mismatch() {
        let err = permute_columns(&bi5(), &ColumnPermutation::identity(7));
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn permutation_validation() {
        assert!(ColumnPermutation::new(vec![0, 0, 1]).is_err());
        assert!(ColumnPermutation::new(vec![0, 3, 1]).is_err());
        assert!(ColumnPermutation::from_one_based_order(&[0, 1]).is_err());
    }

    #[test]
    fn complement_examples() {
        let bi = bi5();
        let cbi =
            BitMatrix::from_strs(&["00001111", "00010111", "00011011", "00011101", "00011110"])
                .unwrap();
        assert_eq!(complement(&bi), cbi);
        assert_eq!(complement(&complement(&bi)), bi);
        assert_eq!(complement(&BitMatrix::ones(5, 3)), BitMatrix::zeros(5, 3));
    }

    #[test]
    fn complement_clears_unused_word_bits() {
        let r = BitRow::zeros(70).complement();
        assert_eq!(r.count_ones(), 70);
        assert_eq!(r, BitRow::ones(70));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_permutations(1).unwrap().count(), 1);
        assert_eq!(enumerate_permutations(3).unwrap().count(), 6);
        assert_eq!(enumerate_permutations(8).unwrap().count(), 40320);
        assert!(matches!(
            enumerate_permutations(9).map(|_| ()),
            Err(Error::Capacity { cap: 8, .. })
        ));
        assert_eq!(
            enumerate_permutations_with_cap(9, 9)
                .unwrap()
                .take(3)
                .count(),
            3
        );
    }

    #[test]
    fn enumeration_is_distinct() {
        let all: std::collections::HashSet<_> = enumerate_permutations(5).unwrap().collect();
        assert_eq!(all.len(), 120);
    }

    #[test]
    fn bit_row_parsing() {
        let r: BitRow = "0101 1".parse().unwrap();
        assert_eq!(r.to_bits(), vec![0, 1, 0, 1, 1]);
        assert!("01x".parse::<BitRow>().is_err());
        assert!(BitRow::from_bits(&[0, 2]).is_err());
    }
}
