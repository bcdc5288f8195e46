//! Syndrome decoding: one node erasure plus one systematic element error for
//! two-parity zigzag codes, and one whole-node error for any number of
//! parities.
//!
//! Syndromes are `recomputed - observed`, so a clean erased column `t`
//! satisfies `S_0 = -a_t` and a systematic error `E` gives `S_0 = E`.

use serde::Serialize;

use crate::array::{ArrayCode, CodeWordArray};
use crate::error::{Error, Result};
use crate::field::Elem;
use crate::rowspace::{Lattice, RVec};
use crate::zigzag::ZigzagCode;

/// `S_l = (parity l recomputed from observed info) - (observed parity l)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyndromeSet {
    pub syndromes: Vec<Vec<Elem>>,
}

impl SyndromeSet {
    pub fn is_zero(&self) -> bool {
        self.syndromes.iter().flatten().all(|&x| x == 0)
    }

    pub fn nonzero_parities(&self) -> Vec<usize> {
        (0..self.syndromes.len())
            .filter(|&l| self.syndromes[l].iter().any(|&x| x != 0))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagnosisKind {
    Clean,
    /// Erased columns refilled, no element error found.
    ErasureOnly {
        erased: Vec<usize>,
    },
    ParityError {
        parity: usize,
        error: Vec<Elem>,
    },
    ElementError {
        #[serde(skip_serializing_if = "Option::is_none")]
        erased: Option<usize>,
        row: usize,
        col: usize,
        magnitude: Elem,
    },
    NodeError {
        col: usize,
        error: Vec<Elem>,
    },
    Uncorrectable {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnosis {
    #[serde(flatten)]
    pub kind: DiagnosisKind,
    #[serde(skip)]
    pub corrected: Option<CodeWordArray>,
}

impl Diagnosis {
    fn uncorrectable(reason: impl Into<String>) -> Self {
        Self {
            kind: DiagnosisKind::Uncorrectable {
                reason: reason.into(),
            },
            corrected: None,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.kind == DiagnosisKind::Clean
    }

    pub fn is_corrected(&self) -> bool {
        !matches!(
            self.kind,
            DiagnosisKind::Clean | DiagnosisKind::Uncorrectable { .. }
        )
    }

    pub fn is_uncorrectable(&self) -> bool {
        matches!(self.kind, DiagnosisKind::Uncorrectable { .. })
    }
}

fn check_shards<C: ArrayCode + ?Sized>(code: &C, shards: &[Option<Vec<Elem>>]) -> Result<()> {
    if shards.len() != code.nodes() {
        return Err(Error::DimensionMismatch {
            expected: code.nodes(),
            actual: shards.len(),
        });
    }
    shards
        .iter()
        .flatten()
        .try_for_each(|c| code.check_column(c))
}

/// Syndromes of `shards`. Erased systematic columns are left out of the
/// recomputed sums; every parity must be present.
pub fn syndromes<C: ArrayCode + ?Sized>(
    code: &C,
    shards: &[Option<Vec<Elem>>],
) -> Result<SyndromeSet> {
    check_shards(code, shards)?;
    let (k, p) = (code.systematic(), code.rows());
    let f = code.field();
    let mut out = Vec::with_capacity(code.parities());
    for l in 0..code.parities() {
        let observed = shards[k + l]
            .as_ref()
            .ok_or_else(|| Error::Unsupported(format!("parity {l} is erased")))?;
        let mut s = vec![0; p];
        for (j, col) in shards[..k].iter().enumerate() {
            if let Some(col) = col {
                for (o, c) in s.iter_mut().zip(code.block(l, j).apply(f, col)) {
                    *o = f.add(*o, c);
                }
            }
        }
        for (o, &b) in s.iter_mut().zip(observed) {
            *o = f.sub(*o, b);
        }
        out.push(s);
    }
    Ok(SyndromeSet { syndromes: out })
}

fn all_present(shards: &[Option<Vec<Elem>>]) -> Result<Vec<Vec<Elem>>> {
    shards
        .iter()
        .enumerate()
        .map(|(j, c)| {
            c.clone()
                .ok_or_else(|| Error::Unsupported(format!("column {j} is erased")))
        })
        .collect()
}

/// Recovers systematic column `t` (erased) while locating and fixing at most
/// one element error in the other systematic columns. Needs `r = 2` and
/// pairwise distinct generator vectors.
pub fn correct_erasure_plus_element(
    code: &ZigzagCode,
    erased: usize,
    shards: &[Option<Vec<Elem>>],
) -> Result<Diagnosis> {
    check_shards(code, shards)?;
    if code.r() != 2 {
        return Err(Error::Unsupported(format!(
            "erasure plus element decoding needs r = 2, got r = {}",
            code.r()
        )));
    }
    let (k, p) = (code.k(), code.p());
    if erased >= k {
        return Err(Error::NotSystematic(erased));
    }
    let vectors = code.vectors();
    for a in 0..k {
        if vectors[a + 1..].contains(&vectors[a]) {
            return Err(Error::Unsupported(
                "generator vectors must be pairwise distinct".into(),
            ));
        }
    }
    if (0..code.n()).any(|j| (j == erased) != shards[j].is_none()) {
        return Err(Error::Unsupported(format!(
            "exactly column {erased} must be erased"
        )));
    }
    let f = code.field();
    let table = code.coefficients();
    let lat = code.lattice();
    let s = syndromes(code, shards)?;
    let (s0, s1) = (&s.syndromes[0], &s.syndromes[1]);
    let beta = |i: usize, j: usize| table.get(j, 1, i);
    // X = B o S_0, Y_i = S_1[f_t(i)], W = X - Y.
    let w: Vec<Elem> = (0..p)
        .map(|i| {
            let x = f.mul(beta(i, erased), s0[i]);
            let y = s1[code.parity_row(erased, 1, i)];
            f.sub(x, y)
        })
        .collect();
    let mut info: Vec<Vec<Elem>> = shards[..k]
        .iter()
        .map(|c| c.clone().unwrap_or_else(|| vec![0; p]))
        .collect();
    info[erased] = s0.iter().map(|&x| f.neg(x)).collect();
    let support: Vec<usize> = (0..p).filter(|&i| w[i] != 0).collect();
    let (kind, row_fix) = match support.as_slice() {
        [] => (
            DiagnosisKind::ErasureOnly {
                erased: vec![erased],
            },
            None,
        ),
        &[r0, r1] => {
            let target = lat.add(lat.add(r0, r1), vectors[erased].index());
            let Some(j) = (0..k).find(|&j| vectors[j].index() == target) else {
                return Ok(Diagnosis::uncorrectable(format!(
                    "rows {r0} and {r1} point to no column; more errors than assumed"
                )));
            };
            if j == erased {
                return Ok(Diagnosis::uncorrectable(
                    "error not in a surviving systematic column",
                ));
            }
            let ratio = f.div(w[r0], w[r1]);
            let at_r0 = ratio == f.neg(f.div(beta(r0, erased), beta(r0, j)));
            let at_r1 = ratio == f.neg(f.div(beta(r1, j), beta(r1, erased)));
            let row = match (at_r0, at_r1) {
                (true, false) => r0,
                (false, true) => r1,
                (true, true) => {
                    return Ok(Diagnosis::uncorrectable(format!(
                        "rows {r0} and {r1} are indistinguishable; coefficients are not MDS"
                    )))
                }
                (false, false) => {
                    return Ok(Diagnosis::uncorrectable(
                        "ratio test failed; more errors than assumed",
                    ))
                }
            };
            let e = f.div(w[row], beta(row, erased));
            (
                DiagnosisKind::ElementError {
                    erased: Some(erased),
                    row,
                    col: j,
                    magnitude: e,
                },
                Some((row, j, e)),
            )
        }
        &[_] => return Ok(Diagnosis::uncorrectable(
            "syndrome difference has a single nonzero entry; error outside the systematic columns",
        )),
        _ => {
            return Ok(Diagnosis::uncorrectable(format!(
                "syndrome difference has {} nonzero entries; more errors than assumed",
                support.len()
            )))
        }
    };
    if let Some((row, j, e)) = row_fix {
        info[j][row] = f.sub(info[j][row], e);
        info[erased][row] = f.add(info[erased][row], e);
    }
    let cw = code.encode(&info)?;
    let observed_parity: Vec<&Vec<Elem>> = shards[k..].iter().flatten().collect();
    if cw.parity.iter().zip(observed_parity).any(|(a, b)| a != b) {
        return Ok(Diagnosis::uncorrectable(
            "corrected array is not a codeword",
        ));
    }
    Ok(Diagnosis {
        kind,
        corrected: Some(cw),
    })
}

/// Locates and corrects at most one erroneous column (any number of its
/// elements). Never returns an array that fails to re-encode.
pub fn correct_node_error(code: &ZigzagCode, shards: &[Option<Vec<Elem>>]) -> Result<Diagnosis> {
    check_shards(code, shards)?;
    let cols = all_present(shards)?;
    let k = code.k();
    let f = code.field();
    let s = syndromes(code, shards)?;
    let nonzero = s.nonzero_parities();
    let mut cw = CodeWordArray::from_columns(k, cols);
    let kind = match nonzero.as_slice() {
        [] => {
            return Ok(Diagnosis {
                kind: DiagnosisKind::Clean,
                corrected: Some(cw),
            })
        }
        &[l] if code.r() > 1 => {
            // b_l = b^_l + S_l.
            let err: Vec<Elem> = s.syndromes[l].iter().map(|&x| f.neg(x)).collect();
            for (b, &x) in cw.parity[l].iter_mut().zip(&s.syndromes[l]) {
                *b = f.add(*b, x);
            }
            DiagnosisKind::ParityError {
                parity: l,
                error: err,
            }
        }
        _ => {
            let (s0, s1) = (&s.syndromes[0], &s.syndromes[1]);
            let hits: Vec<usize> = if code.r() > 1 {
                (0..k)
                    .filter(|&j| code.block(1, j).apply(f, s0) == *s1)
                    .collect()
            } else {
                Vec::new()
            };
            let &[j] = hits.as_slice() else {
                return Ok(Diagnosis::uncorrectable(format!(
                    "{} columns match the syndromes; more than one node in error",
                    hits.len()
                )));
            };
            // a_j = a^_j - S_0.
            for (a, &x) in cw.info[j].iter_mut().zip(s0) {
                *a = f.sub(*a, x);
            }
            DiagnosisKind::NodeError {
                col: j,
                error: s0.clone(),
            }
        }
    };
    let re = code.encode(&cw.info)?;
    if re.parity != cw.parity {
        return Ok(Diagnosis::uncorrectable(
            "correction leaves nonzero syndromes",
        ));
    }
    Ok(Diagnosis {
        kind,
        corrected: Some(cw),
    })
}

/// Node-error decoding for any array code: each column in turn is treated
/// as erased and the rest checked for consistency. Reports failure unless
/// exactly one column explains the observation. Needs at least two parities.
pub fn correct_node_error_generic<C: ArrayCode + ?Sized>(
    code: &C,
    shards: &[Option<Vec<Elem>>],
) -> Result<Diagnosis> {
    check_shards(code, shards)?;
    let cols = all_present(shards)?;
    let k = code.systematic();
    let f = code.field();
    let observed = CodeWordArray::from_columns(k, cols.clone());
    if code.encode(&observed.info)? == observed {
        return Ok(Diagnosis {
            kind: DiagnosisKind::Clean,
            corrected: Some(observed),
        });
    }
    if code.parities() < 2 {
        return Ok(Diagnosis::uncorrectable(
            "a single parity only detects errors",
        ));
    }
    let mut found = Vec::new();
    for j in 0..code.nodes() {
        let mut trial: Vec<Option<Vec<Elem>>> = cols.iter().cloned().map(Some).collect();
        trial[j] = None;
        let cw = match code.decode_erasures(&trial) {
            Ok(cw) => code.encode(&cw.info)?,
            Err(_) => continue,
        };
        if (0..code.nodes()).all(|c| c == j || cw.column(c) == cols[c].as_slice()) {
            found.push((j, cw));
        }
    }
    if found.len() != 1 {
        return Ok(Diagnosis::uncorrectable(format!(
            "{} columns explain the syndromes; more than one node in error",
            found.len()
        )));
    }
    let (j, cw) = found.remove(0);
    let error: Vec<Elem> = observed
        .column(j)
        .iter()
        .zip(cw.column(j))
        .map(|(&o, &c)| f.sub(o, c))
        .collect();
    let kind = if j < k {
        DiagnosisKind::NodeError { col: j, error }
    } else {
        DiagnosisKind::ParityError {
            parity: j - k,
            error,
        }
    };
    Ok(Diagnosis {
        kind,
        corrected: Some(cw),
    })
}

/// Whether errors in rows `rows` of column `col`, with column `erased`
/// erased, stay correctable on a binary (`r = 2`) code with generator
/// vectors `vectors`: (i) `R + (R + v_col)` is not `S + (S + v_i)` for any
/// row set `S` and column `i` outside `{col, erased}`, and (ii) no two rows
/// of `R` differ by `v_col + v_erased`.
pub fn multi_element_correctable(
    vectors: &[RVec],
    erased: usize,
    col: usize,
    rows: &[usize],
) -> Result<bool> {
    let Some(first) = vectors.first() else {
        return Err(Error::InvalidParameters("empty vector set".into()));
    };
    if first.base() != 2 {
        return Err(Error::Unsupported(format!(
            "needs r = 2, got r = {}",
            first.base()
        )));
    }
    if erased >= vectors.len() || col >= vectors.len() || erased == col {
        return Err(Error::InvalidParameters(format!(
            "need distinct columns below {}, got erased={erased}, col={col}",
            vectors.len()
        )));
    }
    let lat = Lattice::new(2, first.len());
    if let Some(&bad) = rows.iter().find(|&&x| x >= lat.size()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            base: 2,
            len: first.len(),
        });
    }
    let vj = vectors[col].index();
    let mut union: Vec<usize> = rows.iter().flat_map(|&x| [x, lat.add(x, vj)]).collect();
    union.sort_unstable();
    union.dedup();
    // S + (S + v_i) = U for some S iff U is closed under adding v_i.
    let shadowed = (0..vectors.len())
        .filter(|&i| i != col && i != erased)
        .any(|i| {
            let vi = vectors[i].index();
            union
                .iter()
                .all(|&x| union.binary_search(&lat.add(x, vi)).is_ok())
        });
    let shift = lat.add(vj, vectors[erased].index());
    let paired = rows.iter().any(|&a| rows.contains(&lat.add(a, shift)));
    Ok(!shadowed && !paired)
}
