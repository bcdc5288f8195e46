//! Machinery shared by every systematic array code in the crate.
//!
//! A code is described by its `p x p` encoding blocks: parity `l` is
//! `sum_j B(l, j) a_j` where `a_j` is the column of systematic node `j`.
//! Encoding, erasure decoding and exhaustive MDS verification only need
//! those blocks, so they live here as provided methods of [`ArrayCode`].

use itertools::Itertools;
use serde::Serialize;

use crate::access::StripeReader;
use crate::error::{Error, Result};
use crate::field::{Elem, Field};
use crate::matrix::{det, solve_linear, FMatrix};

/// Largest `r^m` accepted anywhere in the crate.
pub const MAX_ROWS: usize = 4096;
/// Default cap on the number of erasure patterns `verify_mds` enumerates.
pub const DEFAULT_MAX_PATTERNS: u64 = 1_000_000;

/// Pattern cap, overridable with `ZGZ_MAX_PATTERNS`.
pub fn max_patterns() -> u64 {
    std::env::var("ZGZ_MAX_PATTERNS")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_PATTERNS)
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// A square block with a handful of nonzeros per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBlock {
    rows: Vec<Vec<(usize, Elem)>>,
}

impl SparseBlock {
    pub fn from_rows(rows: Vec<Vec<(usize, Elem)>>) -> Self {
        Self { rows }
    }

    /// Generalized permutation: row `t` has `coefs[t]` in column `cols[t]`.
    pub fn permutation(cols: &[usize], coefs: &[Elem]) -> Self {
        Self {
            rows: cols
                .iter()
                .zip(coefs)
                .map(|(&c, &v)| vec![(c, v)])
                .collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, t: usize) -> &[(usize, Elem)] {
        &self.rows[t]
    }

    pub fn entry(&self, t: usize, col: usize) -> Elem {
        self.rows[t]
            .iter()
            .find(|(c, _)| *c == col)
            .map_or(0, |&(_, v)| v)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn apply(&self, field: &Field, x: &[Elem]) -> Vec<Elem> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .fold(0, |acc, &(c, v)| field.mul_add(acc, v, x[c]))
            })
            .collect()
    }

    pub fn to_dense(&self) -> FMatrix {
        let n = self.size();
        let mut m = FMatrix::zeros(n, n);
        for (t, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m.set(t, c, v);
            }
        }
        m
    }
}

/// One stripe: systematic and parity columns, each of length `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeWordArray {
    pub info: Vec<Vec<Elem>>,
    pub parity: Vec<Vec<Elem>>,
}

impl CodeWordArray {
    pub fn nodes(&self) -> usize {
        self.info.len() + self.parity.len()
    }

    pub fn column(&self, node: usize) -> &[Elem] {
        let k = self.info.len();
        if node < k {
            &self.info[node]
        } else {
            &self.parity[node - k]
        }
    }

    pub fn column_mut(&mut self, node: usize) -> &mut Vec<Elem> {
        let k = self.info.len();
        if node < k {
            &mut self.info[node]
        } else {
            &mut self.parity[node - k]
        }
    }

    pub fn columns(&self) -> Vec<Vec<Elem>> {
        self.info.iter().chain(&self.parity).cloned().collect()
    }

    /// All columns present, ready for erasing.
    pub fn to_shards(&self) -> Vec<Option<Vec<Elem>>> {
        self.info
            .iter()
            .chain(&self.parity)
            .cloned()
            .map(Some)
            .collect()
    }

    pub fn from_columns(k: usize, mut cols: Vec<Vec<Elem>>) -> Self {
        let parity = cols.split_off(k);
        Self { info: cols, parity }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MdsReport {
    pub mds: bool,
    pub patterns_checked: u64,
    pub failing_pattern: Option<Vec<usize>>,
}

pub trait ArrayCode {
    fn field(&self) -> &Field;
    /// Rows per column, `p`.
    fn rows(&self) -> usize;
    fn systematic(&self) -> usize;
    fn parities(&self) -> usize;
    /// Encoding block of systematic node `node` in parity `parity`.
    fn block(&self, parity: usize, node: usize) -> &SparseBlock;

    fn nodes(&self) -> usize {
        self.systematic() + self.parities()
    }

    fn check_info(&self, info: &[Vec<Elem>]) -> Result<()> {
        if info.len() != self.systematic() {
            return Err(Error::DimensionMismatch {
                expected: self.systematic(),
                actual: info.len(),
            });
        }
        for col in info {
            self.check_column(col)?;
        }
        Ok(())
    }

    fn check_column(&self, col: &[Elem]) -> Result<()> {
        if col.len() != self.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                actual: col.len(),
            });
        }
        col.iter()
            .try_for_each(|&x| self.field().check(x).map(|_| ()))
    }

    fn parity_column(&self, parity: usize, info: &[Vec<Elem>]) -> Vec<Elem> {
        let f = self.field();
        let mut out = vec![0; self.rows()];
        for (j, col) in info.iter().enumerate() {
            let contrib = self.block(parity, j).apply(f, col);
            for (o, c) in out.iter_mut().zip(contrib) {
                *o = f.add(*o, c);
            }
        }
        out
    }

    fn encode(&self, info: &[Vec<Elem>]) -> Result<CodeWordArray> {
        self.check_info(info)?;
        Ok(CodeWordArray {
            info: info.to_vec(),
            parity: (0..self.parities())
                .map(|l| self.parity_column(l, info))
                .collect(),
        })
    }

    /// Dense system whose unknowns are the `erased` systematic columns and
    /// whose equations are the given parities, all rows.
    fn erasure_matrix(&self, erased: &[usize], parities: &[usize]) -> FMatrix {
        let p = self.rows();
        let mut m = FMatrix::zeros(parities.len() * p, erased.len() * p);
        for (bi, &l) in parities.iter().enumerate() {
            for (bj, &j) in erased.iter().enumerate() {
                let b = self.block(l, j);
                for t in 0..p {
                    for &(c, v) in b.row(t) {
                        m.set(bi * p + t, bj * p + c, v);
                    }
                }
            }
        }
        m
    }

    fn decode_erasures(&self, shards: &[Option<Vec<Elem>>]) -> Result<CodeWordArray> {
        if shards.len() != self.nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.nodes(),
                actual: shards.len(),
            });
        }
        for col in shards.iter().flatten() {
            self.check_column(col)?;
        }
        let mut rd = StripeReader::new(shards, self.rows());
        self.decode_with_reader(&mut rd)
    }

    /// Recovers every systematic column, reading all surviving systematic
    /// columns and as many surviving parities as there are lost systematic
    /// columns.
    fn recover_info(&self, rd: &mut StripeReader<'_>) -> Result<Vec<Vec<Elem>>> {
        let (k, p) = (self.systematic(), self.rows());
        let erased = rd.erased();
        if erased.len() > self.parities() {
            return Err(Error::TooManyErasures {
                erased: erased.len(),
                max: self.parities(),
            });
        }
        let lost: Vec<usize> = erased.iter().copied().filter(|&j| j < k).collect();
        let mut info = vec![Vec::new(); k];
        for (j, col) in info.iter_mut().enumerate() {
            if !rd.is_erased(j) {
                *col = rd.read_column(j)?;
            }
        }
        if lost.is_empty() {
            return Ok(info);
        }
        let used: Vec<usize> = (0..self.parities())
            .filter(|&l| !rd.is_erased(k + l))
            .take(lost.len())
            .collect();
        let f = self.field();
        let mut rhs = Vec::with_capacity(used.len() * p);
        for &l in &used {
            let mut col = rd.read_column(k + l)?;
            for (j, a) in info.iter().enumerate() {
                if a.is_empty() {
                    continue;
                }
                for (c, v) in col.iter_mut().zip(self.block(l, j).apply(f, a)) {
                    *c = f.sub(*c, v);
                }
            }
            rhs.extend(col);
        }
        let a = self.erasure_matrix(&lost, &used);
        let x = solve_linear(f, &a, &rhs).map_err(|e| match e {
            Error::Singular => Error::SingularErasures(erased.clone()),
            e => e,
        })?;
        for (bj, &j) in lost.iter().enumerate() {
            info[j] = x[bj * p..(bj + 1) * p].to_vec();
        }
        Ok(info)
    }

    /// Full decode through an instrumented reader.
    fn decode_with_reader(&self, rd: &mut StripeReader<'_>) -> Result<CodeWordArray> {
        let k = self.systematic();
        let info = self.recover_info(rd)?;
        let mut parity = Vec::with_capacity(self.parities());
        for l in 0..self.parities() {
            parity.push(if rd.is_erased(k + l) {
                self.parity_column(l, &info)
            } else {
                rd.read_column(k + l)?
            });
        }
        Ok(CodeWordArray { info, parity })
    }

    /// Recomputes only the erased columns, in ascending node order.
    fn recover_erased(&self, rd: &mut StripeReader<'_>) -> Result<Vec<Vec<Elem>>> {
        let k = self.systematic();
        let info = self.recover_info(rd)?;
        Ok(rd
            .erased()
            .into_iter()
            .map(|node| {
                if node < k {
                    info[node].clone()
                } else {
                    self.parity_column(node - k, &info)
                }
            })
            .collect())
    }

    /// Checks every size-`r` erasure pattern. Stops at the first failure.
    fn verify_mds(&self) -> Result<MdsReport> {
        let (n, r, k) = (self.nodes(), self.parities(), self.systematic());
        if self.rows() > MAX_ROWS {
            return Err(Error::CapExceeded(format!(
                "p = {} exceeds {MAX_ROWS} rows",
                self.rows()
            )));
        }
        let patterns = binomial(n, r);
        let cap = max_patterns();
        if patterns > cap {
            return Err(Error::CapExceeded(format!(
                "C({n}, {r}) = {patterns} erasure patterns exceed the cap of {cap}"
            )));
        }
        let mut checked = 0;
        for pattern in (0..n).combinations(r) {
            checked += 1;
            let lost: Vec<usize> = pattern.iter().copied().filter(|&j| j < k).collect();
            if lost.is_empty() {
                continue;
            }
            let used: Vec<usize> = (0..r).filter(|l| !pattern.contains(&(k + l))).collect();
            if det(self.field(), &self.erasure_matrix(&lost, &used))? == 0 {
                return Ok(MdsReport {
                    mds: false,
                    patterns_checked: checked,
                    failing_pattern: Some(pattern),
                });
            }
        }
        Ok(MdsReport {
            mds: true,
            patterns_checked: checked,
            failing_pattern: None,
        })
    }

    /// Number of parity elements each information element `(node, row)`
    /// appears in, indexed `[node][row]`.
    fn update_counts(&self) -> Vec<Vec<usize>> {
        let mut counts = vec![vec![0; self.rows()]; self.systematic()];
        for l in 0..self.parities() {
            for (j, c) in counts.iter_mut().enumerate() {
                let b = self.block(l, j);
                for t in 0..self.rows() {
                    for &(col, v) in b.row(t) {
                        if v != 0 {
                            c[col] += 1;
                        }
                    }
                }
            }
        }
        counts
    }
}
