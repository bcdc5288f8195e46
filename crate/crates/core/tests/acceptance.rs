//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails or exceeds its time limit.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::{Duration, Instant};

use itertools::Itertools;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zigzag::access::Fraction;
use zigzag::anynode::{build_anynode, AnyNodeCode};
use zigzag::array::{ArrayCode, CodeWordArray};
use zigzag::bounds::{
    check_property_e, min_optimal_e, normalized_bandwidth_lower_bound, ratio_upper_bound_partial,
};
use zigzag::codec::{Codec, CodecOptions};
use zigzag::error_decoder::{
    correct_erasure_plus_element, correct_node_error, syndromes, DiagnosisKind,
};
use zigzag::rebuild::{plan_rebuild, rebuild_multi, rebuild_single};
use zigzag::zigzag::{build_optimal, parse_vectors, ZigzagCode};
use zigzag::{Elem, Field};

type Check = std::result::Result<(), String>;

/// Name, time limit in seconds, and check.
type Criterion = (&'static str, u64, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn gf(q: u32) -> Field {
    Field::new(q).unwrap()
}

fn small_r2() -> ZigzagCode {
    build_optimal(2, 2, gf(3)).unwrap()
}

fn small_r3() -> ZigzagCode {
    build_optimal(3, 2, gf(4)).unwrap()
}

fn any_r2() -> AnyNodeCode {
    build_anynode(2, 3, gf(3), None).unwrap()
}

fn random_cw(code: &dyn ArrayCode, rng: &mut ChaCha8Rng) -> CodeWordArray {
    let q = code.field().order();
    let info: Vec<Vec<Elem>> = (0..code.systematic())
        .map(|_| {
            (0..code.rows())
                .map(|_| rng.gen_range(0..q) as Elem)
                .collect()
        })
        .collect();
    code.encode(&info).unwrap()
}

fn erase(cw: &CodeWordArray, nodes: &[usize]) -> Vec<Option<Vec<Elem>>> {
    let mut shards = cw.to_shards();
    for &j in nodes {
        shards[j] = None;
    }
    shards
}

/// The r = 2, GF(3) parities written out over the integers mod 3.
fn small_r2_oracle(a: &[Vec<Elem>]) -> (Vec<Elem>, Vec<Elem>) {
    let at = |i: usize, j: usize| a[j][i] as u32;
    let row: Vec<Elem> = (0..4)
        .map(|i| ((at(i, 0) + at(i, 1) + at(i, 2)) % 3) as Elem)
        .collect();
    let zig = [
        at(0, 0) + at(2, 1) + at(1, 2),
        at(1, 0) + at(3, 1) + 2 * at(0, 2),
        at(2, 0) + 2 * at(0, 1) + 2 * at(3, 2),
        at(3, 0) + 2 * at(1, 1) + at(2, 2),
    ];
    (row, zig.iter().map(|&x| (x % 3) as Elem).collect())
}

fn c1_small_r2_parities() -> Check {
    let code = small_r2();
    // (info row, node, coefficient) per zigzag row.
    let expected = [
        [(0, 0, 1), (2, 1, 1), (1, 2, 1)],
        [(1, 0, 1), (3, 1, 1), (0, 2, 2)],
        [(2, 0, 1), (0, 1, 2), (3, 2, 2)],
        [(3, 0, 1), (1, 1, 2), (2, 2, 1)],
    ];
    for (t, want) in expected.iter().enumerate() {
        let mut row = code.zigzag_set(0, t);
        row.sort_by_key(|&(_, j, _)| j);
        ensure!(
            row == vec![(t, 0, 1), (t, 1, 1), (t, 2, 1)],
            "row parity {t}: {row:?}"
        );
        let mut zig = code.zigzag_set(1, t);
        zig.sort_by_key(|&(_, j, _)| j);
        ensure!(zig == want.to_vec(), "zigzag parity {t}: {zig:?}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..100 {
        let cw = random_cw(&code, &mut rng);
        let (row, zig) = small_r2_oracle(&cw.info);
        ensure!(
            cw.parity[0] == row && cw.parity[1] == zig,
            "numeric mismatch on {:?}",
            cw.info
        );
    }
    Ok(())
}

fn c2_single_rebuild_reads_eight() -> Check {
    let code = small_r2();
    let cw = random_cw(&code, &mut ChaCha8Rng::seed_from_u64(102));
    for node in 0..3 {
        let out = rebuild_single(&code, &erase(&cw, &[node])).map_err(|e| e.to_string())?;
        ensure!(out.columns[0] == cw.info[node], "C_{node} not recovered");
        ensure!(
            out.log.total_reads() == 8,
            "C_{node}: {} reads",
            out.log.total_reads()
        );
        ensure!(
            out.log.surviving_elements() == 16,
            "C_{node}: {} survivors",
            out.log.surviving_elements()
        );
        if node == 1 {
            for j in [0, 2, 3, 4] {
                ensure!(
                    out.log.rows_read(j) == vec![0, 1],
                    "C_1 read rows {:?} of node {j}",
                    out.log.rows_read(j)
                );
            }
        }
    }
    Ok(())
}

fn c3_double_erasure() -> Check {
    let code = small_r3();
    let cw = random_cw(&code, &mut ChaCha8Rng::seed_from_u64(103));
    let out = rebuild_multi(&code, &erase(&cw, &[0, 1])).map_err(|e| e.to_string())?;
    let set = |v: &[usize]| v.iter().copied().collect::<BTreeSet<_>>();
    let expected = [
        (2, set(&[0, 1, 3, 4, 6, 7])),
        (3, set(&[0, 1, 3, 4, 6, 7])),
        (4, set(&[1, 2, 4, 5, 7, 8])),
        (5, set(&[2, 0, 5, 3, 8, 6])),
    ];
    for (node, rows) in expected {
        ensure!(
            set(&out.log.rows_read(node)) == rows,
            "node {node} read {:?}",
            out.log.rows_read(node)
        );
    }
    for pair in (0..3).combinations(2) {
        let out = rebuild_multi(&code, &erase(&cw, &pair)).map_err(|e| e.to_string())?;
        ensure!(
            out.columns == vec![cw.info[pair[0]].clone(), cw.info[pair[1]].clone()],
            "{pair:?} not recovered"
        );
        ensure!(
            out.log.ratio() == Fraction::new(2, 3),
            "{pair:?} ratio {}",
            out.log.ratio()
        );
    }
    Ok(())
}

fn c4_e_over_r() -> Check {
    for m in [2, 3] {
        let code = build_optimal(3, m, gf(4)).unwrap();
        let cw = random_cw(&code, &mut ChaCha8Rng::seed_from_u64(104 + m as u64));
        for e in 1..=3 {
            for set in (0..code.k()).combinations(e) {
                let out = rebuild_multi(&code, &erase(&cw, &set)).map_err(|e| e.to_string())?;
                let want: Vec<Vec<Elem>> = set.iter().map(|&j| cw.info[j].clone()).collect();
                ensure!(out.columns == want, "m={m} {set:?} not recovered");
                let ratio = Ratio::new(out.log.total_reads(), out.log.surviving_elements());
                ensure!(
                    ratio == Fraction::new(e as u64, 3),
                    "m={m} {set:?} ratio {ratio}"
                );
            }
        }
    }
    Ok(())
}

/// MDS by the library's exhaustive check and by decoding every pattern.
fn mds_both_ways(code: &dyn ArrayCode, expected: u64, seed: u64) -> Check {
    let rep = code.verify_mds().map_err(|e| e.to_string())?;
    ensure!(rep.mds, "failing pattern {:?}", rep.failing_pattern);
    ensure!(
        rep.patterns_checked == expected,
        "{} patterns checked",
        rep.patterns_checked
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = 0;
    for pattern in (0..code.nodes()).combinations(code.parities()) {
        for _ in 0..5 {
            let cw = random_cw(code, &mut rng);
            let got = code
                .decode_erasures(&erase(&cw, &pattern))
                .map_err(|e| e.to_string())?;
            ensure!(got == cw, "pattern {pattern:?} decoded wrongly");
        }
        n += 1;
    }
    ensure!(n == expected, "{n} patterns decoded");
    Ok(())
}

fn c5_mds() -> Check {
    mds_both_ways(&small_r2(), 10, 105)?;
    mds_both_ways(&small_r3(), 20, 106)?;
    mds_both_ways(&any_r2(), 6, 107)
}

fn t4() -> Vec<Vec<u32>> {
    vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]
}

fn c6_threshold() -> Check {
    let vs = parse_vectors(3, 2, &t4()).map_err(|e| e.to_string())?;
    let e_star = min_optimal_e(3, 2, &vs).map_err(|e| e.to_string())?;
    ensure!(e_star == Some(2), "e* = {e_star:?}");
    let mut opts = CodecOptions::new(1, 3, 2);
    opts.vectors = Some(t4());
    let codec = Codec::build(&opts).map_err(|e| e.to_string())?;
    let cw = random_cw(codec.array(), &mut ChaCha8Rng::seed_from_u64(108));
    let mut above = 0;
    for node in 0..4 {
        let out = codec
            .rebuild(&erase(&cw, &[node]))
            .map_err(|e| e.to_string())?;
        ensure!(out.columns[0] == cw.info[node], "node {node} not recovered");
        if out.log.ratio() > Fraction::new(1, 3) {
            above += 1;
        }
    }
    ensure!(above >= 1, "every single erasure reached 1/3");
    for pair in (0..4).combinations(2) {
        let out = codec
            .rebuild(&erase(&cw, &pair))
            .map_err(|e| e.to_string())?;
        ensure!(
            out.columns == vec![cw.info[pair[0]].clone(), cw.info[pair[1]].clone()],
            "{pair:?} not recovered"
        );
        ensure!(
            out.log.ratio() == Fraction::new(2, 3),
            "{pair:?} ratio {}",
            out.log.ratio()
        );
    }
    Ok(())
}

fn c7_any_node() -> Check {
    for (r, q) in [(2, 3), (3, 4)] {
        let code = build_anynode(r, 3, gf(q), None).unwrap();
        let cw = random_cw(&code, &mut ChaCha8Rng::seed_from_u64(109 + r as u64));
        for node in 0..code.n() {
            let out = code
                .rebuild_any(&erase(&cw, &[node]))
                .map_err(|e| e.to_string())?;
            ensure!(
                out.column == cw.column(node),
                "r={r} node {node} not recovered"
            );
            let expect = (code.n() - 1) as u64 * code.p() as u64 / r as u64;
            ensure!(
                out.log.total_reads() == expect,
                "r={r} node {node}: {} reads",
                out.log.total_reads()
            );
        }
    }
    let code = any_r2();
    let cw = random_cw(&code, &mut ChaCha8Rng::seed_from_u64(111));
    let c2 = code
        .rebuild_any(&erase(&cw, &[0]))
        .map_err(|e| e.to_string())?;
    let p0 = code
        .rebuild_any(&erase(&cw, &[2]))
        .map_err(|e| e.to_string())?;
    for j in 1..4 {
        ensure!(
            c2.log.rows_read(j) == vec![0, 1, 4, 5],
            "C_2 read {:?} of node {j}",
            c2.log.rows_read(j)
        );
    }
    for j in [0, 1, 3] {
        ensure!(
            p0.log.rows_read(j) == vec![0, 1, 2, 3],
            "P_0 read {:?} of node {j}",
            p0.log.rows_read(j)
        );
    }
    Ok(())
}

fn c8_erasure_plus_element() -> Check {
    let code = small_r2();
    let f = code.field().clone();
    let cw = random_cw(&code, &mut ChaCha8Rng::seed_from_u64(112));
    let mut cases = 0;
    for t in 0..3 {
        let erased = erase(&cw, &[t]);
        let cells = (0..3).filter(|&j| j != t).cartesian_product(0..4);
        for ((j, row), e) in cells.cartesian_product(1..3u8) {
            let mut bad = erased.clone();
            let c = bad[j].as_mut().unwrap();
            c[row] = f.add(c[row], e);
            let d = correct_erasure_plus_element(&code, t, &bad).map_err(|e| e.to_string())?;
            let want = DiagnosisKind::ElementError {
                erased: Some(t),
                row,
                col: j,
                magnitude: e,
            };
            ensure!(d.kind == want, "t={t} cell ({row},{j}) e={e}: {:?}", d.kind);
            ensure!(
                d.corrected.as_ref() == Some(&cw),
                "t={t} cell ({row},{j}) e={e} wrong array"
            );
            cases += 1;
        }
    }
    ensure!(cases == 48, "{cases} cases");
    // C_0 erased, a_{0,1} hit by e: W = S_0 - S_1 = (e, 0, e, 0).
    for e in 1..3u8 {
        let mut shards = erase(&cw, &[0]);
        let c = shards[1].as_mut().unwrap();
        c[0] = f.add(c[0], e);
        let s = syndromes(&code, &shards).map_err(|e| e.to_string())?;
        let w: Vec<Elem> = (0..4)
            .map(|i| f.sub(s.syndromes[0][i], s.syndromes[1][i]))
            .collect();
        ensure!(w == vec![e, 0, e, 0], "W = {w:?} for e={e}");
    }
    Ok(())
}

fn c9_node_error() -> Check {
    for (name, code) in [("small_r2", small_r2()), ("small_r3", small_r3())] {
        let f = code.field().clone();
        let q = f.order();
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        for trial in 0..1000 {
            let cw = random_cw(&code, &mut rng);
            let col = rng.gen_range(0..code.n());
            let mut shards = cw.to_shards();
            let mut err = vec![0; code.p()];
            while err.iter().all(|&x| x == 0) {
                err = (0..code.p()).map(|_| rng.gen_range(0..q) as Elem).collect();
            }
            for (x, &d) in shards[col].as_mut().unwrap().iter_mut().zip(&err) {
                *x = f.add(*x, d);
            }
            let d = correct_node_error(&code, &shards).map_err(|e| e.to_string())?;
            let found = match &d.kind {
                DiagnosisKind::NodeError { col, error } => Some((*col, error)),
                DiagnosisKind::ParityError { parity, error } => Some((code.k() + parity, error)),
                _ => None,
            };
            ensure!(
                found == Some((col, &err)),
                "{name} trial {trial}: column {col}, got {:?}",
                d.kind
            );
            ensure!(
                d.corrected.as_ref() == Some(&cw),
                "{name} trial {trial} wrong array"
            );
        }
        for trial in 0..1000 {
            let cw = random_cw(&code, &mut rng);
            let mut shards = cw.to_shards();
            for node in rand::seq::index::sample(&mut rng, code.n(), 2) {
                for x in shards[node].as_mut().unwrap() {
                    *x = f.add(*x, rng.gen_range(1..q) as Elem);
                }
            }
            let d = correct_node_error(&code, &shards).map_err(|e| e.to_string())?;
            if let Some(out) = &d.corrected {
                let re = code.encode(&out.info).map_err(|e| e.to_string())?;
                ensure!(
                    &re == out,
                    "{name} two-column trial {trial}: inconsistent output"
                );
            } else {
                ensure!(
                    d.is_uncorrectable(),
                    "{name} two-column trial {trial}: {:?}",
                    d.kind
                );
            }
        }
    }
    Ok(())
}

fn cross_vectors() -> Vec<Vec<u32>> {
    vec![
        vec![1, 0, 1, 0],
        vec![1, 0, 0, 1],
        vec![0, 1, 1, 0],
        vec![0, 1, 0, 1],
    ]
}

fn c10_bounds() -> Check {
    for r in 1..=4u64 {
        for e in 1..=r {
            for k in [e, e + 1, 4, 7] {
                let n = k + r;
                let b = normalized_bandwidth_lower_bound(k, e, n - e).map_err(|e| e.to_string())?;
                ensure!(b == Fraction::new(e, r), "k={k} e={e} r={r}: {b}");
            }
        }
    }
    let ub = ratio_upper_bound_partial(1, 2, 4, 2).map_err(|e| e.to_string())?;
    ensure!(ub == Fraction::new(3, 5), "partial bound {ub}");
    // 1/2 + (1/2)((m/2 - 1)/((m^2/4) + 1)) at m = 4.
    let m = 4u64;
    let closed =
        Fraction::new(1, 2) + Fraction::new(1, 2) * Fraction::new(m / 2 - 1, m * m / 4 + 1);
    ensure!(ub == closed, "closed form {closed}");
    let mut opts = CodecOptions::new(1, 2, 4);
    opts.vectors = Some(cross_vectors());
    let codec = Codec::build(&opts).map_err(|e| e.to_string())?;
    let cw = random_cw(codec.array(), &mut ChaCha8Rng::seed_from_u64(114));
    let out = codec
        .rebuild(&erase(&cw, &[0]))
        .map_err(|e| e.to_string())?;
    ensure!(out.columns[0] == cw.info[0], "w not recovered");
    ensure!(out.log.ratio() <= ub, "measured {}", out.log.ratio());
    Ok(())
}

/// Row indices of `u`'s orthogonal complement in Z_r^m, digits big-endian.
fn orth_rows(r: u32, m: usize, u: &[u32]) -> BTreeSet<usize> {
    (0..(r as usize).pow(m as u32))
        .filter(|&x| {
            let dot: u32 = (0..m)
                .map(|i| ((x / (r as usize).pow((m - 1 - i) as u32)) % r as usize) as u32 * u[i])
                .sum();
            dot.is_multiple_of(r)
        })
        .collect()
}

fn add_rows(r: u32, m: usize, x: usize, y: usize) -> usize {
    (0..m).fold(0, |acc, i| {
        let w = (r as usize).pow((m - 1 - i) as u32);
        acc + ((x / w + y / w) % r as usize) * w
    })
}

fn c11_properties() -> Check {
    let vector_sets: Vec<(u32, usize, Vec<Vec<u32>>)> = vec![
        (2, 2, vec![vec![0, 0], vec![1, 0], vec![0, 1]]),
        (
            2,
            3,
            vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]],
        ),
        (3, 2, vec![vec![0, 0], vec![1, 0], vec![0, 1]]),
        (3, 2, t4()),
        (2, 4, cross_vectors()),
    ];
    for (r, m, raw) in &vector_sets {
        let vs = parse_vectors(*r, *m, raw).map_err(|e| e.to_string())?;
        let props: Vec<bool> = (1..=raw.len())
            .map(|e| check_property_e(*r, *m, &vs, e))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        ensure!(
            props.windows(2).all(|w| !w[0] || w[1]),
            "r={r} {raw:?}: {props:?}"
        );
    }
    let mut zig = Vec::new();
    for (r, m, q) in [(2, 2, 3), (2, 3, 3), (3, 2, 4), (3, 3, 4)] {
        zig.push(build_optimal(r, m, gf(q)).unwrap());
    }
    for (r, m, raw) in [(3, 2, t4()), (2, 4, cross_vectors())] {
        let mut opts = CodecOptions::new(1, r, m);
        opts.vectors = Some(raw);
        match Codec::build(&opts).map_err(|e| e.to_string())? {
            Codec::Zigzag(z) => zig.push(z),
            Codec::AnyNode(_) => return Err("construction 1 built an any-node code".into()),
        }
    }
    for code in &zig {
        let (r, m, p) = (code.r(), code.m(), code.p());
        let counts = code.update_counts();
        ensure!(
            counts.iter().flatten().all(|&c| c == r as usize),
            "r={r} m={m} update counts"
        );
        for e in 1..=r as usize {
            for set in (0..code.k()).combinations(e) {
                let Ok(plan) = plan_rebuild(code, &set).map_err(|e| e.to_string())? else {
                    continue;
                };
                let rows: BTreeSet<usize> = plan.rows.iter().copied().collect();
                let x0 = orth_rows(r, m, &plan.u);
                ensure!(
                    rows.len() == e * x0.len(),
                    "r={r} m={m} {set:?}: {} rows",
                    rows.len()
                );
                ensure!(
                    rows.iter()
                        .all(|&x| x0.iter().all(|&z| rows.contains(&add_rows(r, m, x, z)))),
                    "r={r} m={m} {set:?}: rows not a union of cosets"
                );
                let mut covered = BTreeSet::new();
                for &(l, t) in &plan.equations {
                    for (i, j, c) in code.zigzag_set(l, t) {
                        if c != 0 && set.contains(&j) {
                            covered.insert((j, i));
                        }
                    }
                }
                ensure!(
                    covered.len() == e * p,
                    "r={r} m={m} {set:?}: {} of {} cells covered",
                    covered.len(),
                    e * p
                );
            }
        }
    }
    for (r, q) in [(2, 3), (3, 4)] {
        let code = build_anynode(r, 3, gf(q), None).unwrap();
        let want = 2 * r as usize - 1;
        ensure!(
            code.update_counts().iter().flatten().all(|&c| c == want),
            "any-node r={r} update counts"
        );
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        (
            "r=2 GF(3) parities symbolic and numeric",
            1,
            c1_small_r2_parities,
        ),
        (
            "r=2 GF(3) single rebuild reads 8 of 16",
            1,
            c2_single_rebuild_reads_eight,
        ),
        (
            "r=3 GF(4) double erasure rows and ratio 2/3",
            1,
            c3_double_erasure,
        ),
        (
            "r=3 e/r optimality for every systematic set",
            30,
            c4_e_over_r,
        ),
        ("MDS exhaustive 10/20/6 patterns", 5, c5_mds),
        ("e* threshold for T={0,e1,e2,e1+e2}", 10, c6_threshold),
        (
            "any-node rebuild at 1/r and r=2 access sets",
            30,
            c7_any_node,
        ),
        (
            "erasure plus element error, 48 cases and W trace",
            5,
            c8_erasure_plus_element,
        ),
        (
            "node error decoding and no mis-correction",
            30,
            c9_node_error,
        ),
        ("bounds engine and partial bound 3/5", 10, c10_bounds),
        ("property suite on regression codecs", 30, c11_properties),
    ];
    let mut failed = Vec::new();
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let limit = Duration::from_secs(*limit);
        let verdict = match (&outcome, elapsed <= limit) {
            (Ok(()), true) => "PASS".to_string(),
            (Ok(()), false) => format!("FAIL (over {}s limit)", limit.as_secs()),
            (Err(msg), _) => format!("FAIL ({msg})"),
        };
        // Written past the test harness capture so plain `cargo test` shows it.
        let _ = writeln!(
            std::io::stdout(),
            "{verdict} [{:>2}] {name} ({:.3}s)",
            i + 1,
            elapsed.as_secs_f64()
        );
        if !verdict.starts_with("PASS") {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
