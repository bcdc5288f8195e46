//! Access accounting for rebuilds.
//!
//! Every rebuild and decode path reads surviving cells through a
//! [`StripeReader`], which records each distinct `(node, row)` touched. The
//! resulting [`AccessLog`] is the source of measured rebuilding ratios.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::Elem;

/// Exact rational used for ratios and bounds.
pub type Fraction = Ratio<u64>;

/// Formats a fraction as `"num/den"`, always with an explicit denominator.
pub fn fraction_string(f: &Fraction) -> String {
    format!("{}/{}", f.numer(), f.denom())
}

pub fn serialize_fraction<S: Serializer>(
    f: &Fraction,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fraction_string(f))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessLog {
    rows: usize,
    nodes: usize,
    erased: BTreeSet<usize>,
    reads: BTreeMap<usize, BTreeSet<usize>>,
}

impl AccessLog {
    pub fn new(rows: usize, nodes: usize, erased: impl IntoIterator<Item = usize>) -> Self {
        Self {
            rows,
            nodes,
            erased: erased.into_iter().collect(),
            reads: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, node: usize, row: usize) {
        self.reads.entry(node).or_default().insert(row);
    }

    pub fn erased(&self) -> &BTreeSet<usize> {
        &self.erased
    }

    /// Rows read from `node`, sorted.
    pub fn rows_read(&self, node: usize) -> Vec<usize> {
        self.reads
            .get(&node)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    pub fn reads(&self) -> &BTreeMap<usize, BTreeSet<usize>> {
        &self.reads
    }

    pub fn total_reads(&self) -> u64 {
        self.reads.values().map(|s| s.len() as u64).sum()
    }

    /// `p * (n - e)`
    pub fn surviving_elements(&self) -> u64 {
        (self.rows * (self.nodes - self.erased.len())) as u64
    }

    pub fn ratio(&self) -> Fraction {
        Fraction::new(self.total_reads(), self.surviving_elements().max(1))
    }

    /// Folds another stripe's log into per-node totals (rows are offset by
    /// `stripe * rows` so cells stay distinct).
    pub fn absorb(&mut self, stripe: usize, other: &AccessLog) {
        for (&node, rows) in &other.reads {
            let entry = self.reads.entry(node).or_default();
            entry.extend(rows.iter().map(|&r| stripe * other.rows + r));
        }
    }
}

#[derive(Serialize)]
struct AccessLogJson {
    erased: Vec<usize>,
    reads: BTreeMap<String, Vec<usize>>,
    total_reads: u64,
    surviving_elements: u64,
    #[serde(serialize_with = "serialize_fraction")]
    ratio: Fraction,
}

impl Serialize for AccessLog {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AccessLogJson {
            erased: self.erased.iter().copied().collect(),
            reads: self
                .reads
                .iter()
                .map(|(n, rows)| (n.to_string(), rows.iter().copied().collect()))
                .collect(),
            total_reads: self.total_reads(),
            surviving_elements: self.surviving_elements(),
            ratio: self.ratio(),
        }
        .serialize(s)
    }
}

/// Read-only view of one stripe's columns; `None` marks an erased node.
pub struct StripeReader<'a> {
    columns: &'a [Option<Vec<Elem>>],
    log: AccessLog,
}

impl<'a> StripeReader<'a> {
    pub fn new(columns: &'a [Option<Vec<Elem>>], rows: usize) -> Self {
        let erased = columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_none())
            .map(|(i, _)| i);
        Self {
            log: AccessLog::new(rows, columns.len(), erased),
            columns,
        }
    }

    pub fn rows(&self) -> usize {
        self.log.rows
    }

    pub fn nodes(&self) -> usize {
        self.columns.len()
    }

    pub fn is_erased(&self, node: usize) -> bool {
        self.columns.get(node).is_none_or(Option::is_none)
    }

    pub fn erased(&self) -> Vec<usize> {
        self.log.erased.iter().copied().collect()
    }

    pub fn read(&mut self, node: usize, row: usize) -> Result<Elem> {
        let col = self
            .columns
            .get(node)
            .ok_or(Error::NoSuchNode(node))?
            .as_ref()
            .ok_or(Error::ErasedRead { node, row })?;
        let v = *col.get(row).ok_or(Error::IndexOutOfRange {
            index: row,
            base: 0,
            len: col.len(),
        })?;
        self.log.record(node, row);
        Ok(v)
    }

    pub fn read_column(&mut self, node: usize) -> Result<Vec<Elem>> {
        (0..self.rows()).map(|row| self.read(node, row)).collect()
    }

    pub fn log(&self) -> &AccessLog {
        &self.log
    }

    pub fn into_log(self) -> AccessLog {
        self.log
    }
}
