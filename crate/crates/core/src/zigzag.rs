//! Zigzag codes.
//!
//! Systematic node `j` carries the generator vector `v_j` in Z_r^m. The
//! element `a_{i,j}` enters parity `l` at row `f_j^l(i) = i + l v_j`, scaled
//! by a nonzero coefficient. Parity 0 is the plain row sum. Parity `l`'s
//! block for node `j` is the `l`-th power of its parity-1 block, so a code is
//! fully described by `T` and the parity-1 coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::array::{ArrayCode, SparseBlock, MAX_ROWS};
use crate::error::{Error, Result};
use crate::field::{Elem, Field};
use crate::rowspace::{row_count, Lattice, RVec};

/// Where a code's coefficients came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Search { seed: u64, tries: u32 },
    Explicit,
}

/// Coefficient of `a_{i,j}` in parity `l`, indexed by `(j, l, i)` where `i`
/// is the information row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientTable {
    k: usize,
    r: usize,
    p: usize,
    data: Vec<Elem>,
}

impl CoefficientTable {
    pub fn ones(k: usize, r: usize, p: usize) -> Self {
        Self {
            k,
            r,
            p,
            data: vec![1; k * r * p],
        }
    }

    pub fn from_fn(k: usize, r: usize, p: usize, f: impl Fn(usize, usize, usize) -> Elem) -> Self {
        let mut t = Self::ones(k, r, p);
        for j in 0..k {
            for l in 0..r {
                for i in 0..p {
                    t.set(j, l, i, f(j, l, i));
                }
            }
        }
        t
    }

    /// Expands parity-1 coefficients `base[j][i]` to all parities using the
    /// power structure.
    pub fn from_parity_one(
        field: &Field,
        lat: Lattice,
        vectors: &[RVec],
        base: &[Vec<Elem>],
    ) -> Self {
        let (k, r, p) = (vectors.len(), lat.r as usize, lat.size());
        let mut t = Self::ones(k, r, p);
        for (j, v) in vectors.iter().enumerate() {
            let vi = v.index();
            for l in 1..r {
                for i in 0..p {
                    let prev = t.get(j, l - 1, i);
                    let row = lat.add_scaled(i, vi, (l - 1) as u32);
                    t.set(j, l, i, field.mul(prev, base[j][row]));
                }
            }
        }
        t
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.k, self.r, self.p)
    }

    pub fn get(&self, node: usize, parity: usize, row: usize) -> Elem {
        self.data[(node * self.r + parity) * self.p + row]
    }

    pub fn set(&mut self, node: usize, parity: usize, row: usize, v: Elem) {
        self.data[(node * self.r + parity) * self.p + row] = v;
    }

    pub fn parity_one(&self) -> Vec<Vec<Elem>> {
        (0..self.k)
            .map(|j| {
                (0..self.p)
                    .map(|i| self.get(j, 1.min(self.r - 1), i))
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZigzagCode {
    r: u32,
    m: usize,
    field: Field,
    vectors: Vec<RVec>,
    coeffs: CoefficientTable,
    blocks: Vec<Vec<SparseBlock>>,
    zero_node: Option<usize>,
    provenance: Provenance,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Validates raw digit lists and turns them into vectors.
pub fn parse_vectors(r: u32, m: usize, raw: &[Vec<u32>]) -> Result<Vec<RVec>> {
    if r < 2 || m == 0 {
        return Err(Error::InvalidParameters(format!(
            "need r >= 2 and m >= 1, got r={r}, m={m}"
        )));
    }
    if raw.is_empty() {
        return Err(Error::InvalidParameters(
            "T must contain at least one vector".into(),
        ));
    }
    raw.iter()
        .map(|d| {
            if d.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: d.len(),
                });
            }
            let g = d.iter().fold(r, |g, &x| gcd(g, x));
            if d.iter().any(|&x| x != 0) && g != 1 {
                return Err(Error::GcdViolation {
                    vector: d.clone(),
                    r,
                });
            }
            RVec::new(r, d.clone())
        })
        .collect()
}

/// `T = {0, e_1, ..., e_m}`.
pub fn optimal_vectors(r: u32, m: usize) -> Vec<RVec> {
    (0..=m).map(|i| RVec::unit(r, m, i)).collect()
}

fn check_rows(r: u32, m: usize) -> Result<usize> {
    let p = (r as u64).checked_pow(m as u32).unwrap_or(u64::MAX);
    if p > MAX_ROWS as u64 {
        return Err(Error::CapExceeded(format!(
            "r^m = {r}^{m} exceeds {MAX_ROWS} rows"
        )));
    }
    Ok(p as usize)
}

/// Closed-form parity-1 coefficients for `T = {0, e_1, ..., e_m}` and
/// `r` in {2, 3}, with `c` the field's primitive element: node `j >= 1` uses
/// `c` on info rows `i` with `i . (e_1 + ... + e_j) = 0`, and 1 elsewhere.
/// The zero node uses 1 when `r = 2` and `c` when `r = 3`.
pub fn closed_form_coefficients(r: u32, m: usize, field: &Field) -> Result<CoefficientTable> {
    if !(2..=3).contains(&r) {
        return Err(Error::NeedsCoefficientSearch(r));
    }
    let p = check_rows(r, m)?;
    let lat = Lattice::new(r, m);
    let c = field.primitive();
    let vectors = optimal_vectors(r, m);
    let base: Vec<Vec<Elem>> = (0..=m)
        .map(|j| {
            if j == 0 {
                return vec![if r == 2 { 1 } else { c }; p];
            }
            let mut prefix = RVec::zero(r, m);
            for s in 1..=j {
                prefix = prefix.add(&RVec::unit(r, m, s));
            }
            let w = prefix.index();
            (0..p)
                .map(|i| if lat.dot(i, w) == 0 { c } else { 1 })
                .collect()
        })
        .collect();
    Ok(CoefficientTable::from_parity_one(
        field, lat, &vectors, &base,
    ))
}

/// Parity-1 coefficients drawn for one search attempt. Deterministic in
/// `(seed, attempt)`.
pub fn search_attempt_coefficients(
    r: u32,
    m: usize,
    vectors: &[RVec],
    field: &Field,
    seed: u64,
    attempt: u32,
) -> CoefficientTable {
    let lat = Lattice::new(r, m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt as u64);
    let q = field.order();
    let base: Vec<Vec<Elem>> = vectors
        .iter()
        .map(|_| {
            (0..lat.size())
                .map(|_| rng.gen_range(1..q) as Elem)
                .collect()
        })
        .collect();
    CoefficientTable::from_parity_one(field, lat, vectors, &base)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub coeffs: CoefficientTable,
    pub seed: u64,
    pub tries: u32,
}

/// Seeded random search for an MDS coefficient assignment.
pub fn assign_coefficients_search(
    r: u32,
    m: usize,
    vectors: &[Vec<u32>],
    field: &Field,
    seed: u64,
    max_tries: u32,
) -> Result<SearchOutcome> {
    assign_coefficients_search_with(r, m, vectors, field, seed, max_tries, |_| Ok(true))
}

/// Like [`assign_coefficients_search`], with an extra acceptance test run
/// on each MDS candidate.
pub fn assign_coefficients_search_with(
    r: u32,
    m: usize,
    vectors: &[Vec<u32>],
    field: &Field,
    seed: u64,
    max_tries: u32,
    accept: impl Fn(&ZigzagCode) -> Result<bool>,
) -> Result<SearchOutcome> {
    let parsed = parse_vectors(r, m, vectors)?;
    check_rows(r, m)?;
    for attempt in 0..max_tries {
        let coeffs = search_attempt_coefficients(r, m, &parsed, field, seed, attempt);
        let code = ZigzagCode::assemble(
            r,
            m,
            field.clone(),
            parsed.clone(),
            coeffs,
            Provenance::Explicit,
        )?;
        if code.verify_mds()?.mds && accept(&code)? {
            return Ok(SearchOutcome {
                coeffs: code.coeffs,
                seed,
                tries: attempt + 1,
            });
        }
    }
    Err(Error::SearchExhausted { tries: max_tries })
}

/// Construction with explicit `T` and coefficients.
pub fn build_general(
    r: u32,
    m: usize,
    vectors: &[Vec<u32>],
    field: Field,
    coeffs: CoefficientTable,
) -> Result<ZigzagCode> {
    let parsed = parse_vectors(r, m, vectors)?;
    ZigzagCode::assemble(r, m, field, parsed, coeffs, Provenance::Explicit)
}

/// `T = {0, e_1, ..., e_m}` with closed-form coefficients (`r` in {2, 3}).
pub fn build_optimal(r: u32, m: usize, field: Field) -> Result<ZigzagCode> {
    let coeffs = closed_form_coefficients(r, m, &field)?;
    ZigzagCode::assemble(
        r,
        m,
        field,
        optimal_vectors(r, m),
        coeffs,
        Provenance::ClosedForm,
    )
}

/// Regenerates the coefficients of a finished search without re-searching.
pub fn build_from_search(
    r: u32,
    m: usize,
    vectors: &[Vec<u32>],
    field: Field,
    seed: u64,
    tries: u32,
) -> Result<ZigzagCode> {
    if tries == 0 {
        return Err(Error::InvalidParameters("search tries must be >= 1".into()));
    }
    let parsed = parse_vectors(r, m, vectors)?;
    check_rows(r, m)?;
    let coeffs = search_attempt_coefficients(r, m, &parsed, &field, seed, tries - 1);
    ZigzagCode::assemble(
        r,
        m,
        field,
        parsed,
        coeffs,
        Provenance::Search { seed, tries },
    )
}

impl ZigzagCode {
    fn assemble(
        r: u32,
        m: usize,
        field: Field,
        vectors: Vec<RVec>,
        coeffs: CoefficientTable,
        provenance: Provenance,
    ) -> Result<Self> {
        let p = check_rows(r, m)?;
        let k = vectors.len();
        let (ck, cr, cp) = coeffs.dims();
        if (ck, cr, cp) != (k, r as usize, p) {
            return Err(Error::DimensionMismatch {
                expected: k * r as usize * p,
                actual: ck * cr * cp,
            });
        }
        for j in 0..k {
            for l in 0..r as usize {
                for i in 0..p {
                    let c = coeffs.get(j, l, i);
                    field.check(c)?;
                    if c == 0 {
                        return Err(Error::ZeroCoefficient {
                            node: j,
                            parity: l,
                            row: i,
                        });
                    }
                    if l == 0 && c != 1 {
                        return Err(Error::RowParityCoefficient { node: j, row: i });
                    }
                }
            }
        }
        let lat = Lattice::new(r, m);
        let blocks = (0..r)
            .map(|l| {
                vectors
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let shift = v.index();
                        let cols: Vec<usize> =
                            (0..p).map(|t| lat.add_scaled(t, shift, r - l)).collect();
                        let cs: Vec<Elem> =
                            cols.iter().map(|&i| coeffs.get(j, l as usize, i)).collect();
                        SparseBlock::permutation(&cols, &cs)
                    })
                    .collect()
            })
            .collect();
        let zero_node = vectors.iter().position(RVec::is_zero);
        Ok(Self {
            r,
            m,
            field,
            vectors,
            coeffs,
            blocks,
            zero_node,
            provenance,
        })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.vectors.len()
    }

    pub fn n(&self) -> usize {
        self.k() + self.r as usize
    }

    pub fn p(&self) -> usize {
        row_count(self.r, self.m)
    }

    pub fn lattice(&self) -> Lattice {
        Lattice::new(self.r, self.m)
    }

    pub fn vectors(&self) -> &[RVec] {
        &self.vectors
    }

    pub fn coefficients(&self) -> &CoefficientTable {
        &self.coeffs
    }

    /// Node whose generator vector is zero; its single-node rebuild uses the
    /// all-ones dual vector.
    pub fn zero_node(&self) -> Option<usize> {
        self.zero_node
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Parity row that `a_{i,j}` enters in parity `l`: `i + l v_j`.
    pub fn parity_row(&self, node: usize, parity: usize, info_row: usize) -> usize {
        self.lattice()
            .add_scaled(info_row, self.vectors[node].index(), parity as u32)
    }

    /// Info row of node `j` that enters parity `l`, row `t`: `t - l v_j`.
    pub fn info_row(&self, node: usize, parity: usize, parity_row: usize) -> usize {
        let lat = self.lattice();
        lat.add_scaled(
            parity_row,
            self.vectors[node].index(),
            self.r - parity as u32 % self.r,
        )
    }

    /// The zigzag set of parity `l`, row `t` as `(info row, node, coefficient)`.
    pub fn zigzag_set(&self, parity: usize, parity_row: usize) -> Vec<(usize, usize, Elem)> {
        (0..self.k())
            .map(|j| {
                let i = self.info_row(j, parity, parity_row);
                (i, j, self.coeffs.get(j, parity, i))
            })
            .collect()
    }
}

impl ArrayCode for ZigzagCode {
    fn field(&self) -> &Field {
        &self.field
    }

    fn rows(&self) -> usize {
        self.p()
    }

    fn systematic(&self) -> usize {
        self.k()
    }

    fn parities(&self) -> usize {
        self.r as usize
    }

    fn block(&self, parity: usize, node: usize) -> &SparseBlock {
        &self.blocks[parity][node]
    }
}
