//! Access-efficient rebuilding of erased systematic nodes of a zigzag code.
//!
//! Multi-erasure planning follows the subspace recipe: pick a helper set `I`
//! and anchor `v_a`, let `Z = span{v_j - v_a : j in I}`, find `u` orthogonal
//! to `Z` that separates every erased node from the anchor, and read the
//! rows `X` (a union of `e` cosets of `u^perp`) shifted by `l v_a` in parity
//! `l`. All reads go through a [`StripeReader`] so the reported ratio is
//! measured, not predicted.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use serde::Serialize;

use crate::access::{AccessLog, StripeReader};
use crate::array::ArrayCode;
use crate::error::{Error, Result};
use crate::field::Elem;
use crate::matrix::{det, solve_linear, FMatrix};
use crate::rowspace::{cosets, orth_complement, orth_complement_of, span, Lattice, RVec, Subspace};
use crate::zigzag::ZigzagCode;

/// Why a rebuild took the full-access path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    ParityErased,
    NoSystematicSurvivor,
    NoSeparatingVector,
    CompositeBase,
    /// The any-node code plans single erasures only.
    MultipleErasures,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RebuildPlan {
    pub erased: Vec<usize>,
    pub anchor: Option<usize>,
    /// Helper set `I`, anchor included.
    pub helpers: Vec<usize>,
    /// Members of `Z`.
    pub subspace: Vec<usize>,
    pub u: Vec<u32>,
    /// Row set `X`, sorted.
    pub rows: Vec<usize>,
    /// Parity rows read, per parity, in the order of `rows`.
    pub parity_rows: Vec<Vec<usize>>,
    /// Rows read from each surviving systematic node.
    pub node_rows: BTreeMap<usize, Vec<usize>>,
    /// `(parity, row)` equations solved.
    pub equations: Vec<(usize, usize)>,
    /// Every surviving systematic node is in `I`.
    pub optimal: bool,
}

impl RebuildPlan {
    /// Number of cells the plan reads.
    pub fn predicted_reads(&self) -> u64 {
        let parity: usize = self.parity_rows.iter().map(Vec::len).sum();
        let info: usize = self.node_rows.values().map(Vec::len).sum();
        (parity + info) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rebuilt {
    pub erased: Vec<usize>,
    /// Recovered columns in the order of `erased`.
    pub columns: Vec<Vec<Elem>>,
    pub log: AccessLog,
    pub plan: Option<RebuildPlan>,
    pub fallback: Option<Fallback>,
}

/// Greedy maximal helper set. Survivors are scanned in ascending order;
/// the first is the anchor, and a node joins `I` iff no erased difference
/// `v_i - v_a` falls into the enlarged span.
pub fn optimal_subspace(
    r: u32,
    m: usize,
    vectors: &[RVec],
    erased: &[usize],
) -> Result<(Subspace, Vec<usize>)> {
    let survivors: Vec<usize> = (0..vectors.len()).filter(|j| !erased.contains(j)).collect();
    let Some(&anchor) = survivors.first() else {
        return Ok((span(r, m, &[])?, Vec::new()));
    };
    let va = &vectors[anchor];
    let erased_diffs: Vec<RVec> = erased.iter().map(|&i| vectors[i].sub(va)).collect();
    let mut helpers = vec![anchor];
    let mut gens: Vec<RVec> = Vec::new();
    let mut z = span(r, m, &gens)?;
    for &j in &survivors[1..] {
        gens.push(vectors[j].sub(va));
        let candidate = span(r, m, &gens)?;
        if erased_diffs.iter().all(|d| !candidate.contains_vec(d)) {
            helpers.push(j);
            z = candidate;
        } else {
            gens.pop();
        }
    }
    Ok((z, helpers))
}

/// Smallest `u` (by row index) orthogonal to `Z` with `u . d != 0` for every
/// erased difference `d`.
pub fn find_u(z: &Subspace, diffs: &[RVec]) -> Result<RVec> {
    let lat = Lattice::new(z.base(), z.len_m());
    let perp = orth_complement(z)?;
    let idx: Vec<usize> = diffs.iter().map(RVec::index).collect();
    perp.elements()
        .iter()
        .copied()
        .find(|&u| idx.iter().all(|&d| lat.dot(u, d) != 0))
        .map(|u| crate::rowspace::int_to_vec(u, z.base(), z.len_m()).expect("index in range"))
        .ok_or(Error::NoSeparatingVector)
}

/// Union of the first `e` cosets of `x0` (smallest representatives first).
/// Each difference must complement `x0` to the whole space.
pub fn choose_x(x0: &Subspace, e: usize, diffs: &[RVec]) -> Result<Vec<usize>> {
    let full = x0.len() * x0.base() as usize == Lattice::new(x0.base(), x0.len_m()).size();
    for d in diffs {
        if !full || x0.contains_vec(d) {
            return Err(Error::DirectSumViolated(d.digits().to_vec()));
        }
    }
    let mut rows: Vec<usize> = cosets(x0)?.into_iter().take(e).flatten().collect();
    rows.sort_unstable();
    Ok(rows)
}

fn erased_list(code: &ZigzagCode, shards: &[Option<Vec<Elem>>]) -> Result<Vec<usize>> {
    if shards.len() != code.n() {
        return Err(Error::DimensionMismatch {
            expected: code.n(),
            actual: shards.len(),
        });
    }
    for col in shards.iter().flatten() {
        code.check_column(col)?;
    }
    let erased: Vec<usize> = (0..code.n()).filter(|&j| shards[j].is_none()).collect();
    if erased.is_empty() {
        return Err(Error::InvalidParameters("no erased node to rebuild".into()));
    }
    if erased.len() > code.r() as usize {
        return Err(Error::TooManyErasures {
            erased: erased.len(),
            max: code.r() as usize,
        });
    }
    Ok(erased)
}

fn read_sets(
    code: &ZigzagCode,
    erased: &[usize],
    equations: &[(usize, usize)],
) -> BTreeMap<usize, Vec<usize>> {
    let mut out: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for j in (0..code.k()).filter(|j| !erased.contains(j)) {
        let rows = out.entry(j).or_default();
        for &(l, t) in equations {
            rows.insert(code.info_row(j, l, t));
        }
    }
    out.into_iter()
        .map(|(j, s)| (j, s.into_iter().collect()))
        .collect()
}

fn parity_rows(code: &ZigzagCode, equations: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); code.r() as usize];
    for &(l, t) in equations {
        out[l].push(t);
    }
    out
}

fn is_prime(n: u32) -> bool {
    n >= 2
        && (2..n)
            .take_while(|d| d * d <= n)
            .all(|d| !n.is_multiple_of(d))
}

/// Plans a rebuild of the systematic set `erased`, or says why the
/// full-access path is needed. Subspace planning needs a prime `r`; for
/// composite `r` only single erasures are planned.
pub fn plan_rebuild(
    code: &ZigzagCode,
    erased: &[usize],
) -> Result<std::result::Result<RebuildPlan, Fallback>> {
    let (r, m, k) = (code.r(), code.m(), code.k());
    if erased.iter().any(|&i| i >= k) {
        return Ok(Err(Fallback::ParityErased));
    }
    if !is_prime(r) {
        if erased.len() == 1 {
            return plan_single(code, erased[0]).map(Ok);
        }
        return Ok(Err(Fallback::CompositeBase));
    }
    let (z, helpers) = optimal_subspace(r, m, code.vectors(), erased)?;
    let Some(&anchor) = helpers.first() else {
        return Ok(Err(Fallback::NoSystematicSurvivor));
    };
    let va = code.vectors()[anchor].clone();
    let diffs: Vec<RVec> = erased.iter().map(|&i| code.vectors()[i].sub(&va)).collect();
    let u = match find_u(&z, &diffs) {
        Ok(u) => u,
        Err(Error::NoSeparatingVector) => return Ok(Err(Fallback::NoSeparatingVector)),
        Err(e) => return Err(e),
    };
    let x0 = orth_complement_of(&u)?;
    let rows = choose_x(&x0, erased.len(), &diffs)?;
    let lat = code.lattice();
    let vai = va.index();
    let equations: Vec<(usize, usize)> = (0..r as usize)
        .flat_map(|l| {
            rows.iter()
                .map(move |&x| (l, lat.add_scaled(x, vai, l as u32)))
        })
        .collect();
    let survivors = k - erased.len();
    Ok(Ok(RebuildPlan {
        erased: erased.to_vec(),
        anchor: Some(anchor),
        optimal: helpers.len() == survivors,
        helpers,
        subspace: z.elements().to_vec(),
        u: u.digits().to_vec(),
        parity_rows: parity_rows(code, &equations),
        node_rows: read_sets(code, erased, &equations),
        rows,
        equations,
    }))
}

/// Single-erasure plan: rows `{x : x . w = -l}` are rebuilt by parity `l`,
/// with `w = v_i`, or `{x : x . 1 = l}` for the zero node.
pub fn plan_single(code: &ZigzagCode, node: usize) -> Result<RebuildPlan> {
    let (r, m) = (code.r(), code.m());
    if node >= code.k() {
        return Err(Error::NotSystematic(node));
    }
    let lat = code.lattice();
    let zero = code.zero_node() == Some(node);
    let w = if zero {
        RVec::ones(r, m)
    } else {
        code.vectors()[node].clone()
    };
    let wi = w.index();
    let target = |l: u32| if zero { l % r } else { (r - l) % r };
    let mut equations = Vec::with_capacity(lat.size());
    for l in 0..r {
        for x in (0..lat.size()).filter(|&x| lat.dot(x, wi) == target(l)) {
            equations.push((l as usize, code.parity_row(node, l as usize, x)));
        }
    }
    let rows: Vec<usize> = (0..lat.size())
        .filter(|&x| lat.dot(x, wi) == target(0))
        .collect();
    let helpers: Vec<usize> = (0..code.k()).filter(|&j| j != node).collect();
    let node_rows = read_sets(code, &[node], &equations);
    let optimal = node_rows
        .values()
        .all(|v| v.len() * r as usize == lat.size());
    Ok(RebuildPlan {
        erased: vec![node],
        anchor: None,
        helpers,
        subspace: Vec::new(),
        u: w.digits().to_vec(),
        parity_rows: parity_rows(code, &equations),
        node_rows,
        rows,
        equations,
        optimal,
    })
}

/// Sparse equation rows over the erased cells, with right-hand sides.
type SparseSystem = (Vec<Vec<(usize, Elem)>>, Vec<Elem>);

/// Builds the linear system of `equations` over the erased cells.
fn assemble(
    code: &ZigzagCode,
    rd: &mut StripeReader<'_>,
    erased: &[usize],
    equations: &[(usize, usize)],
) -> Result<SparseSystem> {
    let (k, p) = (code.k(), code.p());
    let f = code.field();
    let coeffs = code.coefficients();
    let mut terms = Vec::with_capacity(equations.len());
    let mut rhs = Vec::with_capacity(equations.len());
    for &(l, t) in equations {
        let mut acc = rd.read(k + l, t)?;
        for j in (0..k).filter(|j| !erased.contains(j)) {
            let i = code.info_row(j, l, t);
            acc = f.sub(acc, f.mul(coeffs.get(j, l, i), rd.read(j, i)?));
        }
        rhs.push(acc);
        terms.push(
            erased
                .iter()
                .enumerate()
                .map(|(b, &node)| {
                    let i = code.info_row(node, l, t);
                    (b * p + i, coeffs.get(node, l, i))
                })
                .collect(),
        );
    }
    Ok((terms, rhs))
}

fn solve(
    code: &ZigzagCode,
    erased: &[usize],
    terms: &[Vec<(usize, Elem)>],
    rhs: &[Elem],
) -> Result<Vec<Vec<Elem>>> {
    let p = code.p();
    let n = erased.len() * p;
    let f = code.field();
    let singular = || Error::SingularRebuild(erased.to_vec());
    if terms.len() != n {
        return Err(singular());
    }
    let x = if erased.len() == 1 {
        let mut x = vec![None; n];
        for (row, &b) in terms.iter().zip(rhs) {
            let (idx, c) = row[0];
            if x[idx].replace(f.div(b, c)).is_some() {
                return Err(singular());
            }
        }
        x.into_iter()
            .collect::<Option<Vec<Elem>>>()
            .ok_or_else(singular)?
    } else {
        let mut a = FMatrix::zeros(n, n);
        for (e, row) in terms.iter().enumerate() {
            for &(idx, c) in row {
                a.set(e, idx, c);
            }
        }
        solve_linear(f, &a, rhs).map_err(|e| match e {
            Error::Singular => singular(),
            e => e,
        })?
    };
    Ok(x.chunks(p).map(<[Elem]>::to_vec).collect())
}

fn run_plan(code: &ZigzagCode, shards: &[Option<Vec<Elem>>], plan: RebuildPlan) -> Result<Rebuilt> {
    let mut rd = StripeReader::new(shards, code.p());
    let (terms, rhs) = assemble(code, &mut rd, &plan.erased, &plan.equations)?;
    let columns = solve(code, &plan.erased, &terms, &rhs)?;
    Ok(Rebuilt {
        erased: plan.erased.clone(),
        columns,
        log: rd.into_log(),
        plan: Some(plan),
        fallback: None,
    })
}

fn full_access(
    code: &ZigzagCode,
    shards: &[Option<Vec<Elem>>],
    erased: Vec<usize>,
    why: Fallback,
) -> Result<Rebuilt> {
    let mut rd = StripeReader::new(shards, code.p());
    let columns = code.recover_erased(&mut rd)?;
    Ok(Rebuilt {
        erased,
        columns,
        log: rd.into_log(),
        plan: None,
        fallback: Some(why),
    })
}

/// Rebuilds the single erased column of `shards`.
pub fn rebuild_single(code: &ZigzagCode, shards: &[Option<Vec<Elem>>]) -> Result<Rebuilt> {
    let erased = erased_list(code, shards)?;
    if erased.len() != 1 {
        return Err(Error::InvalidParameters(format!(
            "single-node rebuild needs exactly one erasure, got {}",
            erased.len()
        )));
    }
    if erased[0] >= code.k() {
        return full_access(code, shards, erased, Fallback::ParityErased);
    }
    let plan = plan_single(code, erased[0])?;
    run_plan(code, shards, plan)
}

/// Rebuilds every erased column of `shards` (at most `r`).
pub fn rebuild_multi(code: &ZigzagCode, shards: &[Option<Vec<Elem>>]) -> Result<Rebuilt> {
    let erased = erased_list(code, shards)?;
    match plan_rebuild(code, &erased)? {
        Ok(plan) => run_plan(code, shards, plan),
        Err(why) => full_access(code, shards, erased, why),
    }
}

/// Whether the planned equations for `erased` have a unique solution.
pub fn plan_solvable(code: &ZigzagCode, erased: &[usize]) -> Result<bool> {
    let plan = match plan_rebuild(code, erased)? {
        Ok(plan) => plan,
        Err(_) => return Ok(true),
    };
    let p = code.p();
    let n = erased.len() * p;
    let mut a = FMatrix::zeros(n, n);
    for (e, &(l, t)) in plan.equations.iter().enumerate() {
        for (b, &node) in erased.iter().enumerate() {
            let i = code.info_row(node, l, t);
            a.set(e, b * p + i, code.coefficients().get(node, l, i));
        }
    }
    Ok(det(code.field(), &a)? != 0)
}

/// Checks [`plan_solvable`] for every systematic erasure set of size
/// `1..=r`, returning the first failure.
pub fn first_unsolvable(code: &ZigzagCode) -> Result<Option<Vec<usize>>> {
    for e in 1..=(code.r() as usize).min(code.k()) {
        for set in (0..code.k()).combinations(e) {
            if !plan_solvable(code, &set)? {
                return Ok(Some(set));
            }
        }
    }
    Ok(None)
}

/// Coefficient search that also requires every planned rebuild to be
/// solvable.
pub fn search_rebuildable(
    r: u32,
    m: usize,
    vectors: &[Vec<u32>],
    field: crate::field::Field,
    seed: u64,
    max_tries: u32,
) -> Result<ZigzagCode> {
    let out = crate::zigzag::assign_coefficients_search_with(
        r,
        m,
        vectors,
        &field,
        seed,
        max_tries,
        |c| Ok(first_unsolvable(c)?.is_none()),
    )?;
    crate::zigzag::build_from_search(r, m, vectors, field, seed, out.tries)
}

/// Rebuilds the erased rows by two disjoint coset choices and compares the
/// results. A mismatch means the surviving data is inconsistent.
pub fn consistency_check(code: &ZigzagCode, shards: &[Option<Vec<Elem>>]) -> Result<bool> {
    let erased = erased_list(code, shards)?;
    let Ok(plan) = plan_rebuild(code, &erased)? else {
        return Ok(true);
    };
    let r = code.r() as usize;
    if erased.len() >= r {
        return Ok(true);
    }
    let x0 = orth_complement_of(&RVec::new(code.r(), plan.u.clone())?)?;
    let all = cosets(&x0)?;
    let lat = code.lattice();
    let anchor = code.vectors()[plan.anchor.expect("planned rebuild has an anchor")].index();
    let e = erased.len();
    let mut results = Vec::new();
    for chunk in [&all[..e], &all[r - e..]] {
        let mut rows: Vec<usize> = chunk.iter().flatten().copied().collect();
        rows.sort_unstable();
        let equations: Vec<(usize, usize)> = (0..r)
            .flat_map(|l| {
                rows.iter()
                    .map(move |&x| (l, lat.add_scaled(x, anchor, l as u32)))
            })
            .collect();
        let mut rd = StripeReader::new(shards, code.p());
        let (terms, rhs) = assemble(code, &mut rd, &erased, &equations)?;
        results.push(solve(code, &erased, &terms, &rhs)?);
    }
    Ok(results[0] == results[1])
}
