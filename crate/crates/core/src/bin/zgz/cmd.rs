use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use zigzag::access::{fraction_string, AccessLog, Fraction};
use zigzag::array::{binomial, max_patterns, CodeWordArray};
use zigzag::bounds::{
    bandwidth_lower_bound, normalized_bandwidth_lower_bound, ratio_lower_bound,
    ratio_upper_bound_partial,
};
use zigzag::codec::{Codec, StripeRebuild};
use zigzag::error_decoder::{
    correct_erasure_plus_element, correct_node_error, correct_node_error_generic, Diagnosis,
    DiagnosisKind,
};
use zigzag::rebuild::first_unsolvable;
use zigzag::shard::{bytes_to_symbols, symbols_to_bytes, write_shard, Shard, ShardHeader};
use zigzag::{Elem, Error};

use crate::store::ShardSet;
use crate::{CodecArgs, EXIT_CLEAN, EXIT_CORRECTED, EXIT_UNCORRECTABLE};

fn emit(json: bool, value: &Value, human: impl FnOnce() -> String) {
    let text = if json {
        serde_json::to_string_pretty(value).expect("json value")
    } else {
        human()
    };
    // A closed pipe is not worth a panic.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn frac(f: &Fraction) -> Value {
    Value::String(fraction_string(f))
}

pub fn encode(input: &Path, out: &Path, args: &CodecArgs, json: bool) -> Result<u8> {
    let codec = args.build()?;
    let data = fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let (k, p, n) = (codec.k(), codec.p(), codec.n());
    let mut symbols = bytes_to_symbols(&data, codec.field().order());
    let per = k * p;
    let stripes = symbols.len().div_ceil(per);
    let pad = stripes * per - symbols.len();
    symbols.resize(stripes * per, 0);
    let mut columns = vec![Vec::with_capacity(stripes * p); n];
    for chunk in symbols.chunks(per) {
        let info: Vec<Vec<Elem>> = chunk.chunks(p).map(<[Elem]>::to_vec).collect();
        let cw = codec.array().encode(&info)?;
        for (col, c) in columns.iter_mut().zip(cw.columns()) {
            col.extend(c);
        }
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let header = ShardHeader {
        codec: codec.descriptor(),
        node: 0,
        stripes: stripes as u64,
        payload_len: (stripes * p) as u64,
        original_len: data.len() as u64,
        pad: pad as u32,
    };
    for (node, payload) in columns.into_iter().enumerate() {
        let mut header = header.clone();
        header.node = node as u16;
        write_shard(out, &Shard { header, payload })?;
    }
    let report = json!({
        "codec": codec.descriptor(),
        "nodes": n,
        "stripes": stripes,
        "original_len": data.len(),
        "pad_symbols": pad,
    });
    emit(json, &report, || {
        format!(
            "wrote {n} shards, {stripes} stripes, {} bytes, to {}",
            data.len(),
            out.display()
        )
    });
    Ok(EXIT_CLEAN)
}

pub fn decode(dir: &Path, output: &Path, json: bool) -> Result<u8> {
    let set = ShardSet::load(dir)?;
    let codec = &set.codec;
    let mut symbols = Vec::with_capacity(set.stripes() * codec.k() * codec.p());
    for s in 0..set.stripes() {
        let cw = codec.array().decode_erasures(&set.stripe(s))?;
        symbols.extend(cw.info.concat());
    }
    let len = set.template.original_len as usize;
    let data = symbols_to_bytes(&symbols, codec.field().order(), len)?;
    fs::write(output, &data).with_context(|| format!("writing {}", output.display()))?;
    let report = json!({ "missing": set.missing(), "stripes": set.stripes(), "bytes": len });
    emit(json, &report, || {
        format!("decoded {len} bytes to {}", output.display())
    });
    Ok(EXIT_CLEAN)
}

fn path_label(out: &StripeRebuild, codec: &Codec) -> String {
    match (&out.plan, out.fallback) {
        (_, Some(f)) => serde_json::to_value(f)
            .ok()
            .and_then(|v| v.as_str().map(|s| format!("fallback:{s}")))
            .unwrap_or_else(|| "fallback".into()),
        (Some(plan), None) if plan.optimal => "optimal".into(),
        (Some(_), None) => "partial".into(),
        (None, None) if matches!(codec, Codec::AnyNode(_)) => "any_node".into(),
        (None, None) => "direct".into(),
    }
}

pub fn rebuild(dir: &Path, json: bool) -> Result<u8> {
    let set = ShardSet::load(dir)?;
    let codec = &set.codec;
    let missing = set.missing();
    let (r, k) = (codec.r() as u64, codec.k() as u64);
    if missing.is_empty() {
        emit(json, &json!({ "erased": missing, "restored": [] }), || {
            "nothing to rebuild".into()
        });
        return Ok(EXIT_CLEAN);
    }
    if missing.len() > codec.r() as usize {
        return Err(Error::TooManyErasures {
            erased: missing.len(),
            max: codec.r() as usize,
        }
        .into());
    }
    let start = Instant::now();
    let stripes = set.stripes();
    let mut total = AccessLog::new(stripes * codec.p(), codec.n(), missing.iter().copied());
    let mut restored = vec![Vec::with_capacity(stripes); missing.len()];
    let mut first = None;
    for s in 0..stripes {
        let out = codec.rebuild(&set.stripe(s))?;
        total.absorb(s, &out.log);
        for (dst, col) in restored.iter_mut().zip(&out.columns) {
            dst.push(col.clone());
        }
        first.get_or_insert(out);
    }
    for (&node, cols) in missing.iter().zip(&restored) {
        set.write_node(node, cols)?;
    }
    let e = missing.len() as u64;
    let partial = first
        .as_ref()
        .and_then(|o| o.plan.as_ref())
        .and_then(|plan| ratio_upper_bound_partial(e, r, k, plan.helpers.len() as u64).ok());
    let ratio = (stripes > 0).then(|| total.ratio());
    let report = json!({
        "erased": missing,
        "stripes": stripes,
        "path": first.as_ref().map(|o| path_label(o, codec)),
        "ratio": ratio.as_ref().map(frac),
        "lower_bound": frac(&ratio_lower_bound(e, r)?),
        "partial_upper_bound": partial.as_ref().map(frac),
        "total_reads": total.total_reads(),
        "surviving_elements": total.surviving_elements(),
        "reads": total
            .reads()
            .iter()
            .map(|(n, rows)| (n.to_string(), json!(rows.len())))
            .collect::<serde_json::Map<_, _>>(),
        "wall_time_ms": start.elapsed().as_secs_f64() * 1000.0,
    });
    emit(json, &report, || {
        format!(
            "restored {:?}; ratio {}",
            missing,
            ratio
                .map(|r| fraction_string(&r))
                .unwrap_or_else(|| "n/a".into())
        )
    });
    Ok(EXIT_CLEAN)
}

struct CellFault {
    node: usize,
    row: usize,
    stripe: usize,
    delta: Elem,
}

fn parse_cell(spec: &str) -> Result<CellFault> {
    let bad = || {
        Error::InvalidParameters(format!(
            "cell spec {spec:?} is not NODE:ROW[:STRIPE][=DELTA]"
        ))
    };
    let (loc, delta) = match spec.split_once('=') {
        Some((l, d)) => (l, d.parse::<Elem>().map_err(|_| bad())?),
        None => (spec, 1),
    };
    let parts: Vec<usize> = loc
        .split(':')
        .map(|x| x.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    let (node, row, stripe) = match *parts.as_slice() {
        [n, r] => (n, r, 0),
        [n, r, s] => (n, r, s),
        _ => return Err(bad().into()),
    };
    Ok(CellFault {
        node,
        row,
        stripe,
        delta,
    })
}

pub fn corrupt(
    dir: &Path,
    cells: &[String],
    columns: &[usize],
    deletes: &[usize],
    seed: u64,
    json: bool,
) -> Result<u8> {
    let mut set = ShardSet::load(dir)?;
    let (p, n, stripes) = (set.codec.p(), set.codec.n(), set.stripes());
    let f = set.codec.field().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut applied = Vec::new();
    let mut touched = Vec::new();
    for spec in cells {
        let c = parse_cell(spec)?;
        if c.node >= n || c.row >= p || c.stripe >= stripes {
            bail!(Error::InvalidParameters(format!(
                "cell {spec:?} is outside the array"
            )));
        }
        if c.delta == 0 || !f.contains(c.delta as u32) {
            bail!(Error::InvalidParameters(format!(
                "delta {} is not a nonzero element of GF({})",
                c.delta,
                f.order()
            )));
        }
        let Some(shard) = set.shards[c.node].as_mut() else {
            bail!(Error::InvalidParameters(format!(
                "shard {} is missing",
                c.node
            )));
        };
        let cell = &mut shard.payload[c.stripe * p + c.row];
        *cell = f.add(*cell, c.delta);
        touched.push(c.node);
        applied.push(json!({ "kind": "cell", "node": c.node, "row": c.row, "stripe": c.stripe, "delta": c.delta }));
    }
    for &node in columns {
        let Some(shard) = set.shards.get_mut(node).and_then(Option::as_mut) else {
            bail!(Error::InvalidParameters(format!("shard {node} is missing")));
        };
        for s in 0..stripes {
            let mut err = vec![0; p];
            while err.iter().all(|&x| x == 0) {
                err = (0..p)
                    .map(|_| rng.gen_range(0..f.order()) as Elem)
                    .collect();
            }
            for (x, e) in shard.payload[s * p..(s + 1) * p].iter_mut().zip(err) {
                *x = f.add(*x, e);
            }
        }
        touched.push(node);
        applied.push(json!({ "kind": "column", "node": node }));
    }
    touched.sort_unstable();
    touched.dedup();
    for node in touched {
        let shard = set.shards[node].as_ref().expect("touched shard exists");
        write_shard(&set.dir, shard)?;
    }
    for &node in deletes {
        let path = set.path(node);
        fs::remove_file(&path).with_context(|| format!("removing {}", path.display()))?;
        applied.push(json!({ "kind": "delete", "node": node }));
    }
    let n_faults = applied.len();
    emit(json, &json!({ "faults": applied }), || {
        format!("applied {n_faults} faults")
    });
    Ok(EXIT_CLEAN)
}

/// Picks and runs the decoder that fits the stripe's erasures.
fn diagnose_stripe(codec: &Codec, shards: &[Option<Vec<Elem>>]) -> Result<Diagnosis> {
    let missing: Vec<usize> = (0..shards.len()).filter(|&j| shards[j].is_none()).collect();
    match (codec, missing.as_slice()) {
        (Codec::Zigzag(c), []) => Ok(correct_node_error(c, shards)?),
        (Codec::AnyNode(c), []) => Ok(correct_node_error_generic(c, shards)?),
        (Codec::Zigzag(c), &[t]) if c.r() == 2 && t < c.k() => {
            Ok(correct_erasure_plus_element(c, t, shards)?)
        }
        (_, m) if m.len() > codec.r() as usize => Ok(Diagnosis {
            kind: DiagnosisKind::Uncorrectable {
                reason: format!(
                    "{} shards missing, at most {} recoverable",
                    m.len(),
                    codec.r()
                ),
            },
            corrected: None,
        }),
        (_, m) => {
            let cw = codec.array().decode_erasures(shards)?;
            let cw = codec.array().encode(&cw.info)?;
            let consistent =
                (0..shards.len()).all(|j| shards[j].as_deref().is_none_or(|c| c == cw.column(j)));
            Ok(if consistent {
                Diagnosis {
                    kind: DiagnosisKind::ErasureOnly { erased: m.to_vec() },
                    corrected: Some(cw),
                }
            } else {
                Diagnosis {
                    kind: DiagnosisKind::Uncorrectable {
                        reason: "surviving shards are inconsistent".into(),
                    },
                    corrected: None,
                }
            })
        }
    }
}

pub fn scrub(dir: &Path, dry_run: bool, json: bool) -> Result<u8> {
    let set = ShardSet::load(dir)?;
    let codec = &set.codec;
    let stripes = set.stripes();
    let missing = set.missing();
    let mut fixed: Vec<Option<CodeWordArray>> = Vec::with_capacity(stripes);
    let mut reports = Vec::new();
    let (mut corrected, mut failed) = (0usize, 0usize);
    for s in 0..stripes {
        let d = diagnose_stripe(codec, &set.stripe(s))?;
        if d.is_uncorrectable() {
            failed += 1;
        } else if d.is_corrected() {
            corrected += 1;
        }
        if !d.is_clean() && !matches!(d.kind, DiagnosisKind::ErasureOnly { .. }) {
            let mut v = serde_json::to_value(&d)?;
            v["stripe"] = json!(s);
            reports.push(v);
        }
        fixed.push(d.corrected);
    }
    let status = if failed > 0 {
        "uncorrectable"
    } else if corrected > 0 || !missing.is_empty() {
        "corrected"
    } else {
        "clean"
    };
    let mut written = Vec::new();
    if status == "corrected" && !dry_run {
        for node in 0..codec.n() {
            let cols: Vec<Vec<Elem>> = fixed
                .iter()
                .map(|cw| cw.as_ref().expect("corrected stripe").column(node).to_vec())
                .collect();
            let changed = match &set.shards[node] {
                None => true,
                Some(sh) => sh.payload != cols.concat(),
            };
            if changed {
                set.write_node(node, &cols)?;
                written.push(node);
            }
        }
    }
    let report = json!({
        "status": status,
        "stripes": stripes,
        "missing": missing,
        "corrected_stripes": corrected,
        "uncorrectable_stripes": failed,
        "written": written,
        "diagnoses": reports,
    });
    emit(json, &report, || {
        format!("{status}: {corrected} stripes corrected, {failed} uncorrectable, shards written {written:?}")
    });
    Ok(match status {
        "clean" => EXIT_CLEAN,
        "corrected" => EXIT_CORRECTED,
        _ => EXIT_UNCORRECTABLE,
    })
}

pub fn verify(args: &CodecArgs, json: bool) -> Result<u8> {
    let codec = args.build()?;
    let report = codec.array().verify_mds()?;
    let counts = codec.array().update_counts();
    let flat = counts.iter().flatten();
    let (lo, hi) = (flat.clone().min().copied(), flat.max().copied());
    let unsolvable = match &codec {
        Codec::Zigzag(c) if report.mds => first_unsolvable(c)?,
        _ => None,
    };
    let out = json!({
        "codec": codec.descriptor(),
        "mds": report.mds,
        "patterns_checked": report.patterns_checked,
        "failing_pattern": report.failing_pattern,
        "update_count": { "min": lo, "max": hi },
        "rebuild_unsolvable": unsolvable,
    });
    emit(json, &out, || {
        format!(
            "{}: {} patterns checked",
            if report.mds { "MDS" } else { "NOT MDS" },
            report.patterns_checked
        )
    });
    Ok(if report.mds {
        EXIT_CLEAN
    } else {
        EXIT_UNCORRECTABLE
    })
}

pub fn bounds(
    e: u64,
    r: u64,
    file_size: Option<u64>,
    k: Option<u64>,
    d_e: Option<u64>,
    helpers: Option<u64>,
    json: bool,
) -> Result<u8> {
    let lower = ratio_lower_bound(e, r)?;
    let d_e = d_e.or(k.map(|k| k + r - e));
    let normalized = match (k, d_e) {
        (Some(k), Some(d)) => Some(normalized_bandwidth_lower_bound(k, e, d)?),
        _ => None,
    };
    let bandwidth = match (file_size, k, d_e) {
        (Some(m), Some(k), Some(d)) => Some(bandwidth_lower_bound(m, k, e, d)?),
        _ => None,
    };
    let partial = match (k, helpers) {
        (Some(k), Some(i)) => Some(ratio_upper_bound_partial(e, r, k, i)?),
        _ => None,
    };
    let out = json!({
        "e": e,
        "r": r,
        "ratio_lower_bound": frac(&lower),
        "normalized_bandwidth_lower_bound": normalized.as_ref().map(frac),
        "bandwidth_lower_bound": bandwidth.as_ref().map(frac),
        "ratio_upper_bound_partial": partial.as_ref().map(frac),
    });
    emit(json, &out, || {
        format!("ratio lower bound {}", fraction_string(&lower))
    });
    Ok(EXIT_CLEAN)
}

pub fn ratio_sweep(
    args: &CodecArgs,
    e: usize,
    all_nodes: bool,
    data_seed: u64,
    json: bool,
) -> Result<u8> {
    let codec = args.build()?;
    let r = codec.r() as usize;
    if e == 0 || e > r {
        bail!(Error::InvalidParameters(format!(
            "need 1 <= e <= r = {r}, got {e}"
        )));
    }
    let pool = if all_nodes || matches!(codec, Codec::AnyNode(_)) {
        codec.n()
    } else {
        codec.k()
    };
    if e > pool {
        bail!(Error::InvalidParameters(format!(
            "e = {e} exceeds the {pool} candidate nodes"
        )));
    }
    let count = binomial(pool, e);
    if count > max_patterns() {
        bail!(Error::CapExceeded(format!(
            "{count} patterns exceed the cap of {}",
            max_patterns()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
    let q = codec.field().order();
    let info: Vec<Vec<Elem>> = (0..codec.k())
        .map(|_| {
            (0..codec.p())
                .map(|_| rng.gen_range(0..q) as Elem)
                .collect()
        })
        .collect();
    let cw = codec.array().encode(&info)?;
    let lower = ratio_lower_bound(e as u64, r as u64)?;
    let mut sum = Fraction::from_integer(0);
    let (mut lo, mut hi) = (None::<Fraction>, None::<Fraction>);
    let mut patterns = Vec::new();
    for erased in (0..pool).combinations(e) {
        let mut shards = cw.to_shards();
        for &j in &erased {
            shards[j] = None;
        }
        let out = codec.rebuild(&shards)?;
        for (&j, col) in out.erased.iter().zip(&out.columns) {
            if col.as_slice() != cw.column(j) {
                bail!("rebuild of {erased:?} returned wrong data for node {j}");
            }
        }
        let ratio = out.log.ratio();
        if ratio < lower {
            bail!(
                "measured ratio {} is below the bound {}",
                fraction_string(&ratio),
                fraction_string(&lower)
            );
        }
        sum += ratio;
        lo = Some(lo.map_or(ratio, |x| x.min(ratio)));
        hi = Some(hi.map_or(ratio, |x| x.max(ratio)));
        patterns.push(
            json!({ "erased": erased, "ratio": frac(&ratio), "path": path_label(&out, &codec) }),
        );
    }
    let average = sum / Fraction::from_integer(patterns.len() as u64);
    let out = json!({
        "codec": codec.descriptor(),
        "e": e,
        "patterns": patterns,
        "average": frac(&average),
        "min": lo.as_ref().map(frac),
        "max": hi.as_ref().map(frac),
        "lower_bound": frac(&lower),
    });
    emit(json, &out, || {
        format!(
            "{} patterns, average {}, min {}, max {}, bound {}",
            patterns_len(&out),
            fraction_string(&average),
            lo.map(|x| fraction_string(&x)).unwrap_or_default(),
            hi.map(|x| fraction_string(&x)).unwrap_or_default(),
            fraction_string(&lower)
        )
    });
    Ok(EXIT_CLEAN)
}

fn patterns_len(v: &Value) -> usize {
    v["patterns"].as_array().map_or(0, Vec::len)
}
