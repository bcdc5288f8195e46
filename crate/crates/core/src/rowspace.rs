//! Row indices as vectors over Z_r^m.
//!
//! A row index `x` in `[0, r^m)` is identified with its base-`r` expansion,
//! most significant digit first: digit 1 is the leading digit, so with
//! `r = 3, m = 2` the index 4 is `(1, 1)` and the unit vector `e_1` is 3.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RVec {
    r: u32,
    digits: Vec<u32>,
}

impl RVec {
    pub fn new(r: u32, digits: Vec<u32>) -> Result<Self> {
        if let Some(&d) = digits.iter().find(|&&d| d >= r) {
            return Err(Error::DigitOutOfRange { digit: d, base: r });
        }
        Ok(Self { r, digits })
    }

    pub fn zero(r: u32, m: usize) -> Self {
        Self {
            r,
            digits: vec![0; m],
        }
    }

    /// The unit vector `e_i`, `1 <= i <= m`. `e_0` is the zero vector.
    pub fn unit(r: u32, m: usize, i: usize) -> Self {
        let mut v = Self::zero(r, m);
        if i > 0 {
            v.digits[i - 1] = 1;
        }
        v
    }

    pub fn ones(r: u32, m: usize) -> Self {
        Self {
            r,
            digits: vec![1; m],
        }
    }

    pub fn base(&self) -> u32 {
        self.r
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    /// Digit `i`, 1-based.
    pub fn digit(&self, i: usize) -> u32 {
        self.digits[i - 1]
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    pub fn index(&self) -> usize {
        vec_to_int(self)
    }

    fn check_compat(&self, other: &RVec) -> Result<()> {
        if self.r != other.r || self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &RVec) -> RVec {
        debug_assert_eq!(self.len(), other.len());
        RVec {
            r: self.r,
            digits: self
                .digits
                .iter()
                .zip(&other.digits)
                .map(|(a, b)| (a + b) % self.r)
                .collect(),
        }
    }

    pub fn sub(&self, other: &RVec) -> RVec {
        self.add(&other.scale(self.r - 1))
    }

    pub fn scale(&self, l: u32) -> RVec {
        RVec {
            r: self.r,
            digits: self
                .digits
                .iter()
                .map(|&d| d * (l % self.r) % self.r)
                .collect(),
        }
    }

    pub fn dot(&self, other: &RVec) -> Result<u32> {
        self.check_compat(other)?;
        Ok(self
            .digits
            .iter()
            .zip(&other.digits)
            .fold(0, |acc, (a, b)| (acc + a * b) % self.r))
    }
}

/// `r^m`, the number of rows.
pub fn row_count(r: u32, m: usize) -> usize {
    (r as usize).pow(m as u32)
}

pub fn int_to_vec(x: usize, r: u32, m: usize) -> Result<RVec> {
    let n = row_count(r, m);
    if x >= n {
        return Err(Error::IndexOutOfRange {
            index: x,
            base: r,
            len: m,
        });
    }
    let mut digits = vec![0; m];
    let mut rest = x;
    for d in digits.iter_mut().rev() {
        *d = (rest % r as usize) as u32;
        rest /= r as usize;
    }
    Ok(RVec { r, digits })
}

pub fn vec_to_int(v: &RVec) -> usize {
    v.digits
        .iter()
        .fold(0, |acc, &d| acc * v.r as usize + d as usize)
}

/// `f_v^l(x) = x + l v` over Z_r^m.
pub fn zigzag_perm(v: &RVec, l: u32, x: usize) -> Result<usize> {
    let xv = int_to_vec(x, v.base(), v.len())?;
    Ok(vec_to_int(&xv.add(&v.scale(l))))
}

/// Index-level arithmetic on `[0, r^m)` without allocating [`RVec`]s.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    pub r: u32,
    pub m: usize,
}

impl Lattice {
    pub fn new(r: u32, m: usize) -> Self {
        Self { r, m }
    }

    pub fn size(&self) -> usize {
        row_count(self.r, self.m)
    }

    fn digit_iter(&self, mut x: usize) -> impl Iterator<Item = usize> {
        let r = self.r as usize;
        (0..self.m).map(move |_| {
            let d = x % r;
            x /= r;
            d
        })
    }

    /// `x + l * y`
    pub fn add_scaled(&self, x: usize, y: usize, l: u32) -> usize {
        let r = self.r as usize;
        let l = l as usize % r;
        let mut out = 0;
        let mut place = 1;
        for (a, b) in self.digit_iter(x).zip(self.digit_iter(y)) {
            out += ((a + l * b) % r) * place;
            place *= r;
        }
        out
    }

    pub fn add(&self, x: usize, y: usize) -> usize {
        self.add_scaled(x, y, 1)
    }

    pub fn sub(&self, x: usize, y: usize) -> usize {
        self.add_scaled(x, y, self.r - 1)
    }

    pub fn dot(&self, x: usize, y: usize) -> u32 {
        let r = self.r as usize;
        (self
            .digit_iter(x)
            .zip(self.digit_iter(y))
            .map(|(a, b)| a * b)
            .sum::<usize>()
            % r) as u32
    }
}

fn is_prime(n: u32) -> bool {
    n >= 2
        && (2..n)
            .take_while(|d| d * d <= n)
            .all(|d| !n.is_multiple_of(d))
}

fn require_prime(r: u32) -> Result<()> {
    if is_prime(r) {
        Ok(())
    } else {
        Err(Error::NonPrimeBase(r))
    }
}

/// A linear subspace of F_r^m (prime `r`) with its full member list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    r: u32,
    m: usize,
    basis: Vec<RVec>,
    elements: Vec<usize>,
    member: Vec<bool>,
}

impl Subspace {
    pub fn base(&self) -> u32 {
        self.r
    }

    pub fn len_m(&self) -> usize {
        self.m
    }

    pub fn basis(&self) -> &[RVec] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Sorted member indices.
    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.member.get(x).copied().unwrap_or(false)
    }

    pub fn contains_vec(&self, v: &RVec) -> bool {
        self.contains(v.index())
    }
}

/// Span of `vectors` in F_r^m. Vectors that do not enlarge the span are
/// dropped from the stored basis.
pub fn span(r: u32, m: usize, vectors: &[RVec]) -> Result<Subspace> {
    require_prime(r)?;
    let lat = Lattice::new(r, m);
    let mut member = vec![false; lat.size()];
    member[0] = true;
    let mut elements = vec![0usize];
    let mut basis = Vec::new();
    for v in vectors {
        if v.base() != r || v.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: v.len(),
            });
        }
        let vi = v.index();
        if member[vi] {
            continue;
        }
        basis.push(v.clone());
        let mut grown = Vec::with_capacity(elements.len() * r as usize);
        for &e in &elements {
            for c in 0..r {
                let x = lat.add_scaled(e, vi, c);
                if !member[x] {
                    member[x] = true;
                }
                grown.push(x);
            }
        }
        grown.sort_unstable();
        grown.dedup();
        elements = grown;
    }
    elements.sort_unstable();
    Ok(Subspace {
        r,
        m,
        basis,
        elements,
        member,
    })
}

/// Cosets of `z`, ordered by smallest representative; each coset is sorted.
pub fn cosets(z: &Subspace) -> Result<Vec<Vec<usize>>> {
    require_prime(z.r)?;
    let lat = Lattice::new(z.r, z.m);
    let mut seen = vec![false; lat.size()];
    let mut out = Vec::new();
    for rep in 0..lat.size() {
        if seen[rep] {
            continue;
        }
        let mut coset: Vec<usize> = z.elements.iter().map(|&e| lat.add(rep, e)).collect();
        coset.sort_unstable();
        for &x in &coset {
            seen[x] = true;
        }
        out.push(coset);
    }
    Ok(out)
}

/// `{u : u . z = 0 for all z in s}`.
pub fn orth_complement(s: &Subspace) -> Result<Subspace> {
    require_prime(s.r)?;
    let lat = Lattice::new(s.r, s.m);
    let basis_idx: Vec<usize> = s.basis.iter().map(RVec::index).collect();
    let members: Vec<RVec> = (0..lat.size())
        .filter(|&u| basis_idx.iter().all(|&b| lat.dot(u, b) == 0))
        .map(|u| int_to_vec(u, s.r, s.m).expect("index in range"))
        .collect();
    span(s.r, s.m, &members)
}

/// Orthogonal complement of a single vector.
pub fn orth_complement_of(v: &RVec) -> Result<Subspace> {
    orth_complement(&span(v.base(), v.len(), std::slice::from_ref(v))?)
}
