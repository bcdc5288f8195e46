//! Dense matrices over a [`Field`] and Gaussian elimination.
//!
//! Pivoting always takes the first nonzero entry at or below the diagonal
//! (lowest row index), so elimination traces are reproducible.

use crate::error::{Error, Result};
use crate::field::{Elem, Field};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Elem>,
}

impl FMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Elem>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Elem>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Elem {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Elem) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Elem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn check_field(&self, field: &Field) -> Result<()> {
        self.data
            .iter()
            .try_for_each(|&x| field.check(x).map(|_| ()))
    }

    pub fn mul(&self, field: &Field, rhs: &FMatrix) -> Result<FMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: rhs.rows,
            });
        }
        let mut out = FMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = field.mul_add(out.get(i, j), a, rhs.get(k, j));
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, field: &Field, x: &[Elem]) -> Result<Vec<Elem>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(0, |acc, (&a, &b)| field.mul_add(acc, a, b))
            })
            .collect())
    }
}

/// `row[dst] -= factor * row[src]` over the columns `from..`.
fn eliminate(field: &Field, m: &mut FMatrix, dst: usize, src: usize, factor: Elem, from: usize) {
    let cols = m.cols;
    for c in from..cols {
        let s = m.data[src * cols + c];
        if s != 0 {
            let d = &mut m.data[dst * cols + c];
            *d = field.sub(*d, field.mul(factor, s));
        }
    }
}

/// Solves `A x = b` for square invertible `A`.
pub fn solve_linear(field: &Field, a: &FMatrix, b: &[Elem]) -> Result<Vec<Elem>> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            actual: b.len(),
        });
    }
    a.check_field(field)?;
    b.iter().try_for_each(|&x| field.check(x).map(|_| ()))?;

    let n = a.rows;
    // Augment with b as the last column.
    let mut m = FMatrix::zeros(n, n + 1);
    for (i, &bi) in b.iter().enumerate() {
        m.data[i * (n + 1)..i * (n + 1) + n].copy_from_slice(a.row(i));
        m.data[i * (n + 1) + n] = bi;
    }
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| m.get(r, col) != 0)
            .ok_or(Error::Singular)?;
        if pivot != col {
            for c in col..=n {
                m.data.swap(pivot * (n + 1) + c, col * (n + 1) + c);
            }
        }
        let inv = field.inv(m.get(col, col)).expect("pivot is nonzero");
        for c in col..=n {
            let v = field.mul(m.get(col, c), inv);
            m.set(col, c, v);
        }
        for r in 0..n {
            if r != col {
                let f = m.get(r, col);
                if f != 0 {
                    eliminate(field, &mut m, r, col, f, col);
                }
            }
        }
    }
    Ok((0..n).map(|i| m.get(i, n)).collect())
}

/// Determinant of a square matrix.
pub fn det(field: &Field, a: &FMatrix) -> Result<Elem> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    a.check_field(field)?;
    let n = a.rows;
    let mut m = a.clone();
    let mut acc: Elem = 1;
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| m.get(r, col) != 0) else {
            return Ok(0);
        };
        if pivot != col {
            for c in 0..n {
                m.data.swap(pivot * n + c, col * n + c);
            }
            acc = field.neg(acc);
        }
        let d = m.get(col, col);
        acc = field.mul(acc, d);
        let inv = field.inv(d).expect("pivot is nonzero");
        for r in col + 1..n {
            let f = m.get(r, col);
            if f != 0 {
                eliminate(field, &mut m, r, col, field.mul(f, inv), col);
            }
        }
    }
    Ok(acc)
}

/// Rank by row reduction.
pub fn rank(field: &Field, a: &FMatrix) -> usize {
    let mut m = a.clone();
    let mut rank = 0;
    for col in 0..m.cols {
        if rank == m.rows {
            break;
        }
        let Some(pivot) = (rank..m.rows).find(|&r| m.get(r, col) != 0) else {
            continue;
        };
        if pivot != rank {
            for c in 0..m.cols {
                m.data.swap(pivot * m.cols + c, rank * m.cols + c);
            }
        }
        let inv = field.inv(m.get(rank, col)).expect("pivot is nonzero");
        for r in rank + 1..m.rows {
            let f = m.get(r, col);
            if f != 0 {
                eliminate(field, &mut m, r, rank, field.mul(f, inv), col);
            }
        }
        rank += 1;
    }
    rank
}
