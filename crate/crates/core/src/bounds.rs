//! Ratio and bandwidth bounds, and the property-e analysis of a vector set.

use itertools::Itertools;

use crate::access::Fraction;
use crate::error::{Error, Result};
use crate::rowspace::{span, RVec};

fn frac(n: u64, d: u64) -> Fraction {
    Fraction::new(n, d)
}

/// `e / r`.
pub fn ratio_lower_bound(e: u64, r: u64) -> Result<Fraction> {
    if e == 0 || e > r {
        return Err(Error::InvalidParameters(format!(
            "need 1 <= e <= r, got e={e}, r={r}"
        )));
    }
    Ok(frac(e, r))
}

/// Per-helper bandwidth bound `e M / (k (d_e - k + e))`.
pub fn bandwidth_lower_bound(file_size: u64, k: u64, e: u64, d_e: u64) -> Result<Fraction> {
    if e == 0 || e > k || d_e < k || k == 0 {
        return Err(Error::InvalidParameters(format!(
            "need 1 <= e <= k <= d_e, got k={k}, e={e}, d_e={d_e}"
        )));
    }
    Ok(frac(e * file_size, k * (d_e - k + e)))
}

/// The bandwidth bound relative to one node's share `M / k`:
/// `e / (d_e - k + e)`. With `d_e = n - e` this is `e / r`.
pub fn normalized_bandwidth_lower_bound(k: u64, e: u64, d_e: u64) -> Result<Fraction> {
    bandwidth_lower_bound(k, k, e, d_e)
}

/// Ratio reached when only `size_i` helpers are in the optimal subspace and
/// the remaining surviving systematic nodes are read in full:
/// `e/r + (r - e)(k - |I| - e) / (r (k + r - e))`.
pub fn ratio_upper_bound_partial(e: u64, r: u64, k: u64, size_i: u64) -> Result<Fraction> {
    if e == 0 || e > r || e > k || size_i + e > k {
        return Err(Error::InvalidParameters(format!(
            "need 1 <= e <= r, e <= k and |I| <= k - e, got e={e}, r={r}, k={k}, |I|={size_i}"
        )));
    }
    Ok(frac(e, r) + frac((r - e) * (k - size_i - e), r * (k + r - e)))
}

/// Property `e`: for every erased set `A` of size `e`, every `u` in `A` and
/// every `v` outside it, `u - v` is outside `span{w - v : w not in A}`.
pub fn check_property_e(r: u32, m: usize, vectors: &[RVec], e: usize) -> Result<bool> {
    let k = vectors.len();
    if e > k {
        return Err(Error::InvalidParameters(format!(
            "e = {e} exceeds |T| = {k}"
        )));
    }
    for erased in (0..k).combinations(e) {
        let rest: Vec<usize> = (0..k).filter(|j| !erased.contains(j)).collect();
        for &v in &rest {
            let diffs: Vec<RVec> = rest.iter().map(|&w| vectors[w].sub(&vectors[v])).collect();
            let z = span(r, m, &diffs)?;
            if erased
                .iter()
                .any(|&u| z.contains_vec(&vectors[u].sub(&vectors[v])))
            {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Least `e` in `[1, min(r, |T|)]` with property `e`.
pub fn min_optimal_e(r: u32, m: usize, vectors: &[RVec]) -> Result<Option<usize>> {
    for e in 1..=(r as usize).min(vectors.len()) {
        if check_property_e(r, m, vectors, e)? {
            return Ok(Some(e));
        }
    }
    Ok(None)
}
