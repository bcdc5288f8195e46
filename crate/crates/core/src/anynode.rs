//! The any-node code: `k = m - 1` systematic nodes, `r` parities, `p = r^m`
//! rows, with access ratio `1/r` for rebuilding any single node.
//!
//! Rows split into `r` blocks `X_x` by their leading digit; inside a block a
//! row is addressed by its last `m - 1` digits. Systematic node `j` (digit
//! `j + 2`) owns a small generalized permutation `p_j` on those local indices
//! with `p_j(i, l) != 0` iff `l + e = i`. Parity `i`'s big block for node `j`
//! has `p_j^{x-i}` in block column `i` of every block row `x`, plus
//! `beta_x p_j^{i-x}` on the diagonal of block rows `x != i`, where
//! `beta_x = alpha` on `L_i` and 1 elsewhere.

use std::collections::{BTreeMap, BTreeSet};

use crate::access::{AccessLog, StripeReader};
use crate::array::{ArrayCode, SparseBlock};
use crate::error::{Error, Result};
use crate::field::{Elem, Field};
use crate::matrix::{rank, solve_linear, FMatrix};
use crate::rowspace::{row_count, Lattice, RVec};
use crate::zigzag::{self, Provenance};

/// `L_i` for `r` parities, sorted.
pub fn l_set(i: u32, r: u32) -> Result<Vec<u32>> {
    if r < 2 || i >= r {
        return Err(Error::InvalidParameters(format!(
            "need 0 <= i < r, got i={i}, r={r}"
        )));
    }
    let len = if r % 2 == 1 {
        (r - 1) / 2
    } else if i < r / 2 {
        r / 2
    } else {
        r / 2 - 1
    };
    let mut out: Vec<u32> = (1..=len).map(|d| (i + d) % r).collect();
    out.sort_unstable();
    Ok(out)
}

/// A small generalized permutation: row `a` has `coef[a]` at column `col[a]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmallBlock {
    col: Vec<usize>,
    coef: Vec<Elem>,
}

impl SmallBlock {
    pub fn identity(n: usize) -> Self {
        Self {
            col: (0..n).collect(),
            coef: vec![1; n],
        }
    }

    pub fn entry(&self, row: usize) -> (usize, Elem) {
        (self.col[row], self.coef[row])
    }

    pub fn mul(&self, field: &Field, rhs: &SmallBlock) -> SmallBlock {
        let (col, coef) = self
            .col
            .iter()
            .zip(&self.coef)
            .map(|(&c, &v)| (rhs.col[c], field.mul(v, rhs.coef[c])))
            .unzip();
        SmallBlock { col, coef }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnyNodeCode {
    r: u32,
    m: usize,
    field: Field,
    alpha: Elem,
    /// `powers[j][e] = p_j^e`, `e` in `[0, r)`.
    powers: Vec<Vec<SmallBlock>>,
    blocks: Vec<Vec<SparseBlock>>,
    provenance: Provenance,
}

fn check_params(r: u32, m: usize, field: &Field, alpha: Option<Elem>) -> Result<Elem> {
    if r < 2 || m < 2 {
        return Err(Error::InvalidParameters(format!(
            "any-node code needs r >= 2 and m >= 2, got r={r}, m={m}"
        )));
    }
    let p = (r as u64).checked_pow(m as u32).unwrap_or(u64::MAX);
    if p > crate::array::MAX_ROWS as u64 {
        return Err(Error::CapExceeded(format!(
            "r^m = {r}^{m} exceeds {} rows",
            crate::array::MAX_ROWS
        )));
    }
    if field.order() < 3 {
        return Err(Error::FieldTooSmall {
            q: field.order(),
            reason: "alpha must differ from 0 and 1",
        });
    }
    let alpha = alpha.unwrap_or_else(|| field.primitive());
    field.check(alpha)?;
    if alpha < 2 {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(alpha)
}

/// Local generator vectors `e_2, ..., e_m` over the last `m - 1` digits.
fn local_vectors(r: u32, m: usize) -> Vec<RVec> {
    (1..m).map(|i| RVec::unit(r, m - 1, i)).collect()
}

/// Closed-form small-block coefficients (`r` in {2, 3}): `c` where the
/// column's digits `2..=j` sum to zero, 1 elsewhere.
fn closed_form_small(r: u32, m: usize, field: &Field) -> Vec<Vec<Elem>> {
    let lat = Lattice::new(r, m - 1);
    let c = field.primitive();
    (1..m)
        .map(|j| {
            let mut prefix = RVec::zero(r, m - 1);
            for s in 1..=j {
                prefix = prefix.add(&RVec::unit(r, m - 1, s));
            }
            let w = prefix.index();
            (0..lat.size())
                .map(|l| if lat.dot(l, w) == 0 { c } else { 1 })
                .collect()
        })
        .collect()
}

/// With the closed-form coefficients (`r` in {2, 3}). `alpha` defaults to
/// the field's primitive element.
pub fn build_anynode(r: u32, m: usize, field: Field, alpha: Option<Elem>) -> Result<AnyNodeCode> {
    if !(2..=3).contains(&r) {
        return Err(Error::NeedsCoefficientSearch(r));
    }
    let alpha = check_params(r, m, &field, alpha)?;
    let coefs = closed_form_small(r, m, &field);
    AnyNodeCode::assemble(r, m, field, alpha, &coefs, Provenance::ClosedForm)
}

fn raw_local(r: u32, m: usize) -> Vec<Vec<u32>> {
    local_vectors(r, m)
        .iter()
        .map(|v| v.digits().to_vec())
        .collect()
}

/// Small-block coefficients from the shortened zigzag instance on the last
/// `m - 1` digits with `T = {e_2, ..., e_m}`.
fn coefs_from_zigzag(code: &zigzag::ZigzagCode) -> Vec<Vec<Elem>> {
    let table = code.coefficients();
    (0..code.k())
        .map(|j| (0..code.p()).map(|i| table.get(j, 1, i)).collect())
        .collect()
}

/// Searches small-block coefficients: the shortened zigzag instance must be
/// MDS and the resulting any-node code is verified as well.
pub fn build_anynode_searched(
    r: u32,
    m: usize,
    field: Field,
    alpha: Option<Elem>,
    seed: u64,
    max_tries: u32,
) -> Result<AnyNodeCode> {
    let alpha = check_params(r, m, &field, alpha)?;
    let raw = raw_local(r, m);
    let out =
        zigzag::assign_coefficients_search_with(r, m - 1, &raw, &field, seed, max_tries, |z| {
            let code = AnyNodeCode::assemble(
                r,
                m,
                field.clone(),
                alpha,
                &coefs_from_zigzag(z),
                Provenance::Explicit,
            )?;
            Ok(code.verify_mds()?.mds)
        })?;
    build_anynode_from_search(r, m, field, Some(alpha), seed, out.tries)
}

/// Regenerates a searched code from its `(seed, tries)` record.
pub fn build_anynode_from_search(
    r: u32,
    m: usize,
    field: Field,
    alpha: Option<Elem>,
    seed: u64,
    tries: u32,
) -> Result<AnyNodeCode> {
    let alpha = check_params(r, m, &field, alpha)?;
    let z = zigzag::build_from_search(r, m - 1, &raw_local(r, m), field.clone(), seed, tries)?;
    AnyNodeCode::assemble(
        r,
        m,
        field,
        alpha,
        &coefs_from_zigzag(&z),
        Provenance::Search { seed, tries },
    )
}

/// What a single-node rebuild read and solved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnyRebuilt {
    pub node: usize,
    pub column: Vec<Elem>,
    pub log: AccessLog,
    /// Rows read from every surviving node.
    pub rows: Vec<usize>,
    /// Sizes of the independent systems solved (systematic rebuilds only).
    pub system_sizes: BTreeMap<usize, usize>,
}

impl AnyNodeCode {
    fn assemble(
        r: u32,
        m: usize,
        field: Field,
        alpha: Elem,
        coefs: &[Vec<Elem>],
        provenance: Provenance,
    ) -> Result<Self> {
        let lat = Lattice::new(r, m - 1);
        let s = lat.size();
        let vectors = local_vectors(r, m);
        let mut powers = Vec::with_capacity(m - 1);
        for (v, cs) in vectors.iter().zip(coefs) {
            if let Some(row) = cs.iter().position(|&c| c == 0) {
                return Err(Error::ZeroCoefficient {
                    node: powers.len(),
                    parity: 1,
                    row,
                });
            }
            let shift = v.index();
            let base = SmallBlock {
                col: (0..s).map(|a| lat.sub(a, shift)).collect(),
                coef: (0..s).map(|a| cs[lat.sub(a, shift)]).collect(),
            };
            let mut list = vec![SmallBlock::identity(s)];
            for e in 1..r as usize {
                list.push(list[e - 1].mul(&field, &base));
            }
            powers.push(list);
        }
        let mut code = Self {
            r,
            m,
            field,
            alpha,
            powers,
            blocks: Vec::new(),
            provenance,
        };
        code.blocks = (0..r)
            .map(|i| (0..m - 1).map(|j| code.big_block(i, j)).collect())
            .collect::<Result<_>>()?;
        Ok(code)
    }

    fn pow(&self, node: usize, e: i64) -> &SmallBlock {
        &self.powers[node][e.rem_euclid(self.r as i64) as usize]
    }

    /// `beta_x` for parity `i`: `alpha` if `x` is in `L_i`, else 1.
    fn beta(&self, i: u32, x: u32) -> Result<Elem> {
        Ok(if l_set(i, self.r)?.contains(&x) {
            self.alpha
        } else {
            1
        })
    }

    fn big_block(&self, i: u32, node: usize) -> Result<SparseBlock> {
        let s = self.block_rows();
        let f = &self.field;
        let mut rows = Vec::with_capacity(self.p());
        for x in 0..self.r {
            let beta = self.beta(i, x)?;
            for a in 0..s {
                let (c, v) = self.pow(node, x as i64 - i as i64).entry(a);
                let mut row = vec![(i as usize * s + c, v)];
                if x != i {
                    let (c, v) = self.pow(node, i as i64 - x as i64).entry(a);
                    row.push((x as usize * s + c, f.mul(beta, v)));
                }
                rows.push(row);
            }
        }
        Ok(SparseBlock::from_rows(rows))
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.m - 1
    }

    pub fn n(&self) -> usize {
        self.k() + self.r as usize
    }

    pub fn p(&self) -> usize {
        row_count(self.r, self.m)
    }

    /// `r^{m-1}`, rows per block `X_x`.
    pub fn block_rows(&self) -> usize {
        row_count(self.r, self.m - 1)
    }

    pub fn alpha(&self) -> Elem {
        self.alpha
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `p_j^e` as `(column, coefficient)` per local row.
    pub fn small_block_power(&self, node: usize, e: u32) -> &SmallBlock {
        self.pow(node, e as i64)
    }

    /// Parity columns for `info` (`m - 1` columns of length `p`).
    pub fn encode_anynode(&self, info: &[Vec<Elem>]) -> Result<Vec<Vec<Elem>>> {
        Ok(self.encode(info)?.parity)
    }

    /// Rows `{v : digit (node + 2) of v is 0}`.
    pub fn systematic_rows(&self, node: usize) -> Vec<usize> {
        let lat = Lattice::new(self.r, self.m);
        let e = RVec::unit(self.r, self.m, node + 2).index();
        (0..self.p()).filter(|&v| lat.dot(v, e) == 0).collect()
    }

    /// Rows of block `X_i`.
    pub fn parity_rows(&self, parity: usize) -> Vec<usize> {
        let s = self.block_rows();
        (parity * s..(parity + 1) * s).collect()
    }

    /// Rebuilds the single erased column of `shards`.
    pub fn rebuild_any(&self, shards: &[Option<Vec<Elem>>]) -> Result<AnyRebuilt> {
        if shards.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: shards.len(),
            });
        }
        for col in shards.iter().flatten() {
            self.check_column(col)?;
        }
        let erased: Vec<usize> = (0..self.n()).filter(|&j| shards[j].is_none()).collect();
        if erased.len() != 1 {
            return Err(Error::InvalidParameters(format!(
                "any-node rebuild needs exactly one erasure, got {}; use full decoding",
                erased.len()
            )));
        }
        let node = erased[0];
        let mut rd = StripeReader::new(shards, self.p());
        if node < self.k() {
            self.rebuild_systematic(node, &mut rd)
        } else {
            self.rebuild_parity(node - self.k(), &mut rd)
        }
    }

    fn rebuild_systematic(&self, node: usize, rd: &mut StripeReader<'_>) -> Result<AnyRebuilt> {
        let (k, p) = (self.k(), self.p());
        let f = &self.field;
        let rows = self.systematic_rows(node);
        // One equation per accessed parity cell; unknowns are cells of `node`.
        let mut eqs: Vec<(Vec<(usize, Elem)>, Elem)> = Vec::with_capacity(p);
        for l in 0..self.r as usize {
            for &t in &rows {
                let mut acc = rd.read(k + l, t)?;
                for j in (0..k).filter(|&j| j != node) {
                    for &(c, v) in self.block(l, j).row(t) {
                        acc = f.sub(acc, f.mul(v, rd.read(j, c)?));
                    }
                }
                eqs.push((self.block(l, node).row(t).to_vec(), acc));
            }
        }
        // Equations sharing unknowns form small independent systems.
        let mut comp: Vec<usize> = (0..p).collect();
        fn root(comp: &mut [usize], x: usize) -> usize {
            let mut x = x;
            while comp[x] != x {
                comp[x] = comp[comp[x]];
                x = comp[x];
            }
            x
        }
        for (terms, _) in &eqs {
            for w in terms.windows(2) {
                let (a, b) = (root(&mut comp, w[0].0), root(&mut comp, w[1].0));
                comp[a] = b;
            }
        }
        let mut groups: BTreeMap<usize, (BTreeSet<usize>, Vec<usize>)> = BTreeMap::new();
        for (e, (terms, _)) in eqs.iter().enumerate() {
            let g = groups.entry(root(&mut comp, terms[0].0)).or_default();
            g.0.extend(terms.iter().map(|&(c, _)| c));
            g.1.push(e);
        }
        let mut column = vec![None; p];
        let mut system_sizes = BTreeMap::new();
        for (unknowns, members) in groups.values() {
            let idx: Vec<usize> = unknowns.iter().copied().collect();
            let dense = |e: usize| {
                let mut row = vec![0; idx.len()];
                for &(c, v) in &eqs[e].0 {
                    row[idx.binary_search(&c).expect("unknown in group")] = v;
                }
                row
            };
            let mut picked: Vec<usize> = Vec::with_capacity(idx.len());
            let mut rows: Vec<Vec<Elem>> = Vec::with_capacity(idx.len());
            for &e in members {
                if picked.len() == idx.len() {
                    break;
                }
                rows.push(dense(e));
                if rank(f, &FMatrix::from_rows(&rows)?) == rows.len() {
                    picked.push(e);
                } else {
                    rows.pop();
                }
            }
            if picked.len() != idx.len() {
                return Err(Error::SingularRebuild(vec![node]));
            }
            let b: Vec<Elem> = picked.iter().map(|&e| eqs[e].1).collect();
            let x = solve_linear(f, &FMatrix::from_rows(&rows)?, &b)
                .map_err(|_| Error::SingularRebuild(vec![node]))?;
            for (&c, v) in idx.iter().zip(x) {
                column[c] = Some(v);
            }
            *system_sizes.entry(idx.len()).or_insert(0) += 1;
        }
        let column = column
            .into_iter()
            .collect::<Option<Vec<Elem>>>()
            .ok_or(Error::SingularRebuild(vec![node]))?;
        Ok(AnyRebuilt {
            node,
            column,
            log: rd.log().clone(),
            rows,
            system_sizes,
        })
    }

    fn rebuild_parity(&self, parity: usize, rd: &mut StripeReader<'_>) -> Result<AnyRebuilt> {
        let (k, s) = (self.k(), self.block_rows());
        let f = &self.field;
        let i = parity as u32;
        let rows = self.parity_rows(parity);
        let mut known = vec![vec![0; self.p()]; k];
        for (j, col) in known.iter_mut().enumerate() {
            for &t in &rows {
                col[t] = rd.read(j, t)?;
            }
        }
        let mut column = vec![0; self.p()];
        // Block row i of parity i is the identity part.
        for &t in &rows {
            column[t] = (0..k).fold(0, |acc, j| f.add(acc, known[j][t]));
        }
        for x in (0..self.r).filter(|&x| x != i) {
            // Parity x, block row i: p^{i-x} a[X_x] + beta' p^{x-i} a[X_i].
            let beta_x = self.beta(x, i)?;
            let beta_i = self.beta(i, x)?;
            for a in 0..s {
                let mut hidden = rd.read(k + x as usize, i as usize * s + a)?;
                let mut direct = 0;
                for (j, col) in known.iter().enumerate() {
                    let (c, v) = self.pow(j, x as i64 - i as i64).entry(a);
                    let val = f.mul(v, col[i as usize * s + c]);
                    hidden = f.sub(hidden, f.mul(beta_x, val));
                    direct = f.add(direct, val);
                }
                column[x as usize * s + a] = f.add(direct, f.mul(beta_i, hidden));
            }
        }
        Ok(AnyRebuilt {
            node: k + parity,
            column,
            log: rd.log().clone(),
            rows,
            system_sizes: BTreeMap::new(),
        })
    }
}

impl ArrayCode for AnyNodeCode {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::access::Fraction;
    use itertools::Itertools;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn any_r2() -> AnyNodeCode {
        build_anynode(2, 3, Field::new(3).unwrap(), None).unwrap()
    }

    fn random_info(code: &AnyNodeCode, seed: u64) -> Vec<Vec<Elem>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = code.field().order();
        (0..code.k())
            .map(|_| (0..code.p()).map(|_| rng.gen_range(0..q) as Elem).collect())
            .collect()
    }

    /// Parity row as sorted `(node, info row, coefficient)`.
    fn terms(code: &AnyNodeCode, l: usize, t: usize) -> Vec<(usize, usize, Elem)> {
        let mut out: Vec<_> = (0..code.k())
            .flat_map(|j| code.block(l, j).row(t).iter().map(move |&(c, v)| (j, c, v)))
            .collect();
        out.sort_unstable();
        out
    }

    #[test]
    fn l_sets() {
        assert_eq!(l_set(0, 3).unwrap(), vec![1]);
        assert_eq!(l_set(1, 3).unwrap(), vec![2]);
        assert_eq!(l_set(2, 3).unwrap(), vec![0]);
        assert_eq!(l_set(0, 2).unwrap(), vec![1]);
        assert!(l_set(1, 2).unwrap().is_empty());
        assert_eq!(l_set(0, 5).unwrap(), vec![1, 2]);
        assert_eq!(l_set(4, 5).unwrap(), vec![0, 1]);
        assert!(l_set(3, 3).is_err());
    }

    #[test]
    fn l_set_complement_rule() {
        for r in 2..=7 {
            for i in 0..r {
                for i2 in (0..r).filter(|&x| x != i) {
                    let in_l = l_set(i, r).unwrap().contains(&i2);
                    let in_comp = !l_set(i2, r).unwrap().contains(&i);
                    assert_eq!(in_l, in_comp, "r={r} i={i} i'={i2}");
                }
            }
        }
    }

    #[test]
    fn any_r2_table() {
        let code = any_r2();
        // (node, row, coefficient) lists for P_0 and P_1, rows 0..8.
        let p0: [&[(usize, usize, Elem)]; 8] = [
            &[(0, 0, 1), (1, 0, 1)],
            &[(0, 1, 1), (1, 1, 1)],
            &[(0, 2, 1), (1, 2, 1)],
            &[(0, 3, 1), (1, 3, 1)],
            &[(0, 2, 1), (0, 6, 2), (1, 1, 1), (1, 5, 2)],
            &[(0, 3, 1), (0, 7, 2), (1, 0, 2), (1, 4, 1)],
            &[(0, 0, 2), (0, 4, 1), (1, 3, 2), (1, 7, 1)],
            &[(0, 1, 2), (0, 5, 1), (1, 2, 1), (1, 6, 2)],
        ];
        let p1: [&[(usize, usize, Elem)]; 8] = [
            &[(0, 2, 1), (0, 6, 1), (1, 1, 1), (1, 5, 1)],
            &[(0, 3, 1), (0, 7, 1), (1, 0, 2), (1, 4, 2)],
            &[(0, 0, 2), (0, 4, 2), (1, 3, 2), (1, 7, 2)],
            &[(0, 1, 2), (0, 5, 2), (1, 2, 1), (1, 6, 1)],
            &[(0, 4, 1), (1, 4, 1)],
            &[(0, 5, 1), (1, 5, 1)],
            &[(0, 6, 1), (1, 6, 1)],
            &[(0, 7, 1), (1, 7, 1)],
        ];
        for t in 0..8 {
            assert_eq!(terms(&code, 0, t), p0[t].to_vec(), "P_0 row {t}");
            assert_eq!(terms(&code, 1, t), p1[t].to_vec(), "P_1 row {t}");
        }
    }

    #[test]
    fn alpha_validation() {
        let f = Field::new(3).unwrap();
        assert_eq!(
            build_anynode(2, 3, f.clone(), Some(1)).unwrap_err(),
            Error::InvalidAlpha(1)
        );
        assert_eq!(
            build_anynode(2, 3, f.clone(), Some(0)).unwrap_err(),
            Error::InvalidAlpha(0)
        );
        assert!(build_anynode(2, 3, f, Some(3)).is_err());
        assert!(matches!(
            build_anynode(2, 3, Field::new(2).unwrap(), None),
            Err(Error::FieldTooSmall { .. })
        ));
    }

    #[test]
    fn big_block_structure() {
        for code in [
            any_r2(),
            build_anynode(3, 3, Field::new(4).unwrap(), None).unwrap(),
        ] {
            let s = code.block_rows();
            for i in 0..code.r() as usize {
                for j in 0..code.k() {
                    let b = code.block(i, j);
                    for t in 0..code.p() {
                        let x = t / s;
                        let mut blocks: Vec<usize> = b.row(t).iter().map(|&(c, _)| c / s).collect();
                        blocks.sort_unstable();
                        if x == i {
                            assert_eq!(b.row(t), &[(t, 1)]);
                        } else {
                            let mut want = vec![i, x];
                            want.sort_unstable();
                            assert_eq!(blocks, want);
                        }
                    }
                }
            }
            let r = code.r() as usize;
            assert!(code
                .update_counts()
                .iter()
                .flatten()
                .all(|&c| c == 2 * r - 1));
        }
    }

    #[test]
    fn small_blocks_have_order_r() {
        let code = build_anynode(3, 3, Field::new(4).unwrap(), None).unwrap();
        for j in 0..code.k() {
            let p1 = code.small_block_power(j, 1);
            let mut acc = SmallBlock::identity(code.block_rows());
            for e in 1..=3 {
                acc = acc.mul(code.field(), p1);
                let is_id_perm = acc.col.iter().enumerate().all(|(a, &c)| a == c);
                assert_eq!(is_id_perm, e == 3);
            }
        }
    }

    #[test]
    fn any_r2_rebuild_access_sets() {
        let code = any_r2();
        let cw = code.encode(&random_info(&code, 3)).unwrap();
        let mut shards = cw.to_shards();
        shards[0] = None;
        let out = code.rebuild_any(&shards).unwrap();
        assert_eq!(out.column, cw.info[0]);
        for node in 1..4 {
            assert_eq!(out.log.rows_read(node), vec![0, 1, 4, 5]);
        }
        let mut shards = cw.to_shards();
        shards[2] = None;
        let out = code.rebuild_any(&shards).unwrap();
        assert_eq!(out.column, cw.parity[0]);
        for node in [0, 1, 3] {
            assert_eq!(out.log.rows_read(node), vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn every_node_rebuilds_at_one_over_r() {
        for (r, m, q) in [(2, 3, 3), (3, 3, 4), (2, 4, 3), (3, 2, 4)] {
            let code = build_anynode(r, m, Field::new(q).unwrap(), None).unwrap();
            let cw = code.encode(&random_info(&code, 7)).unwrap();
            for node in 0..code.n() {
                let mut shards = cw.to_shards();
                shards[node] = None;
                let out = code.rebuild_any(&shards).unwrap();
                assert_eq!(out.column, cw.column(node));
                assert_eq!(
                    out.log.ratio(),
                    Fraction::new(1, r as u64),
                    "r={r} m={m} node {node}"
                );
            }
        }
    }

    #[test]
    fn systematic_rebuild_uses_singletons_and_pairs() {
        let code = build_anynode(3, 3, Field::new(4).unwrap(), None).unwrap();
        let cw = code.encode(&random_info(&code, 1)).unwrap();
        let mut shards = cw.to_shards();
        shards[1] = None;
        let out = code.rebuild_any(&shards).unwrap();
        assert!(out.system_sizes.keys().all(|&s| s <= 2));
        let cells: usize = out.system_sizes.iter().map(|(s, n)| s * n).sum();
        assert_eq!(cells, code.p());
    }

    #[test]
    fn mds_and_decode() {
        for (r, m, q) in [(2, 3, 3), (3, 3, 4), (2, 4, 3)] {
            let code = build_anynode(r, m, Field::new(q).unwrap(), None).unwrap();
            assert!(code.verify_mds().unwrap().mds, "r={r} m={m}");
            let cw = code.encode(&random_info(&code, 11)).unwrap();
            for e in 0..=r as usize {
                for pattern in (0..code.n()).combinations(e) {
                    let mut shards = cw.to_shards();
                    for &j in &pattern {
                        shards[j] = None;
                    }
                    assert_eq!(code.decode_erasures(&shards).unwrap(), cw);
                }
            }
        }
    }

    #[test]
    fn searched_r4() {
        let f = Field::new(16).unwrap();
        let code = build_anynode_searched(4, 2, f.clone(), None, 1, 500).unwrap();
        assert!(code.verify_mds().unwrap().mds);
        let Provenance::Search { seed, tries } = code.provenance() else {
            panic!("expected search provenance");
        };
        let again = build_anynode_from_search(4, 2, f, None, seed, tries).unwrap();
        assert_eq!(again, code);
        let cw = code.encode(&random_info(&code, 2)).unwrap();
        for node in 0..code.n() {
            let mut shards = cw.to_shards();
            shards[node] = None;
            let out = code.rebuild_any(&shards).unwrap();
            assert_eq!(out.column, cw.column(node));
            assert_eq!(out.log.ratio(), Fraction::new(1, 4));
        }
    }

    #[test]
    fn zero_info_zero_parity() {
        let code = any_r2();
        let par = code.encode_anynode(&vec![vec![0; 8]; 2]).unwrap();
        assert!(par.iter().flatten().all(|&x| x == 0));
    }
}
