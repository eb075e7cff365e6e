//! End-to-end acceptance checks, one line per criterion.

use std::collections::{HashMap, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use depthlab::bits::{all_of_length, all_up_to, BitString};
use depthlab::codec::{decode_fst, encode_fst};
use depthlab::fst::{random_fst, Edge, FstSpec, IlVerdict};
use depthlab::kfs::{enum_fsts, kfs_over_set, shortest_input, Complexity};
use depthlab::lz78::{lz_conditional, lz_decode, lz_encode, lz_parse, repeat_bound, Lz78State};
use depthlab::profile::{DepthProfile, Grid, Machine, RatioTable};
use depthlab::pushdown::{
    build_half_compressor, compose_pdc_fst, pdc_il_check, random_pdc, HalfCompressorLayout, PdcSpec, StackKind, Sym,
};
use depthlab::seqgen::{fs_random_string, generate, Certificate, RandomMode, Recipe, RecipeConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> BitString {
    (0..n).map(|_| rng.gen::<bool>()).collect()
}

fn lz_correctness() -> Outcome {
    let t0 = Instant::now();
    let mut exhaustive = 0;
    for x in all_up_to(14) {
        ensure(lz_decode(&lz_encode(&x)).as_ref() == Ok(&x), || format!("round trip failed on {x}"))?;
        exhaustive += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..1000 {
        let x = random_bits(&mut rng, 10_000);
        ensure(lz_decode(&lz_encode(&x)).as_ref() == Ok(&x), || format!("round trip failed on random string {i}"))?;
        let parse = lz_parse(&x);
        let mut phrases = parse.phrases();
        // A final incomplete phrase is coded as a repeat of an existing one.
        if let Some(j) = parse.tail {
            let last = phrases.pop().ok_or("tail without tokens")?;
            ensure(phrases.get(j as usize - 1) == Some(&last), || format!("string {i}: tail does not repeat phrase {j}"))?;
        }
        let mut seen: HashSet<&[bool]> = HashSet::new();
        for p in &phrases {
            let parent = &p[..p.len() - 1];
            ensure(parent.is_empty() || seen.contains(parent), || format!("string {i}: phrase {p} has no parent"))?;
            ensure(seen.insert(p), || format!("string {i}: duplicate phrase {p}"))?;
        }
    }
    let dt = t0.elapsed();
    ensure(dt < Duration::from_secs(60), || format!("took {dt:?}"))?;
    Ok(format!("{exhaustive} exhaustive + 1000 random (10^4 bits) round trips, parses prefix-closed and duplicate-free, {:.1}s", dt.as_secs_f64()))
}

fn repeat_bound_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0f64;
    for _ in 0..200 {
        let lx = rng.gen_range(0..=64);
        let x = random_bits(&mut rng, lx);
        let ly = rng.gen_range(1..=8);
        let y = random_bits(&mut rng, ly);
        let n = rng.gen_range(1..=64);
        let mut st = Lz78State::new();
        st.extend(&x);
        let d = st.phrase_count();
        let (_, len) = lz_conditional(&y.power(n), &x);
        let bound = repeat_bound(ly as u64, n as u64, d);
        ensure(len as f64 <= bound, || format!("x={x} y={y} n={n} d={d}: {len} > {bound:.3}"))?;
        worst = worst.max(len as f64 / bound);
    }
    Ok(format!("200 triples, 0 violations, max measured/bound = {worst:.3}"))
}

fn emissions_up_to(max: usize) -> Vec<BitString> {
    all_up_to(max).collect()
}

fn all_small_fsts() -> Vec<FstSpec> {
    let em = emissions_up_to(2);
    let mut out = Vec::new();
    for m in 1..=2usize {
        let choices: Vec<Edge> =
            (0..m).flat_map(|next| em.iter().map(move |out| Edge { next, out: out.clone() })).collect();
        let slots = 2 * m;
        let mut idx = vec![0usize; slots];
        loop {
            let table: Vec<[Edge; 2]> =
                (0..m).map(|q| [choices[idx[2 * q]].clone(), choices[idx[2 * q + 1]].clone()]).collect();
            for start in 0..m {
                out.push(FstSpec::new(start, table.clone()).expect("well-formed"));
            }
            let mut i = 0;
            while i < slots {
                idx[i] += 1;
                if idx[i] < choices.len() {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
            if i == slots {
                break;
            }
        }
    }
    out
}

fn codec_roundtrip() -> Outcome {
    let all = all_small_fsts();
    for t in &all {
        let d = encode_fst(t).bits;
        ensure(decode_fst(&d).as_ref() == Ok(t), || format!("round trip failed for\n{t}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut flips, mut decoded) = (0usize, 0usize);
    for _ in 0..500 {
        let m = rng.gen_range(1..=5);
        let e = rng.gen_range(0..=3);
        let t = random_fst(&mut rng, m, e);
        let d = encode_fst(&t).bits;
        ensure(decode_fst(&d).as_ref() == Ok(&t), || format!("round trip failed for\n{t}"))?;
        for i in 0..d.len() {
            let mut f = d.clone();
            f[i] = !f[i];
            let r = panic::catch_unwind(|| decode_fst(&f).is_ok());
            match r {
                Ok(ok) => decoded += ok as usize,
                Err(_) => return Err(format!("decoder panicked on bit flip {i} of {d}")),
            }
            flips += 1;
        }
    }
    Ok(format!(
        "{} exhaustive (m<=2, emissions<=2) + 500 random round trips; {flips} bit flips, {decoded} decoded, rest rejected, no panics",
        all.len()
    ))
}

/// Every machine with some description of at most `k` bits, found by
/// decoding all bit strings of that length.
fn decoded_universe(k: usize) -> Vec<FstSpec> {
    let mut set: HashSet<FstSpec> = HashSet::new();
    for d in all_up_to(k) {
        if let Ok(t) = decode_fst(&d) {
            set.insert(t);
        }
    }
    let mut v: Vec<FstSpec> = set.into_iter().collect();
    v.sort_by_key(|t| encode_fst(t).bits);
    v
}

/// Brute-force complexity: shortest input of length at most `max_in` that
/// some machine maps to `x`.
fn brute_complexity(machines: &[FstSpec], x: &[bool], max_in: usize) -> Option<usize> {
    for len in 0..=max_in {
        for y in all_of_length(len) {
            if machines.iter().any(|t| t.run(&y).output.as_slice() == x) {
                return Some(len);
            }
        }
    }
    None
}

fn kfs_oracle() -> Outcome {
    let t0 = Instant::now();
    let oracle_universe = decoded_universe(12);
    let universe = enum_fsts(12).map_err(|e| e.to_string())?;
    let ours: HashSet<&FstSpec> = universe.machines.iter().map(|e| &e.spec).collect();
    let theirs: HashSet<&FstSpec> = oracle_universe.iter().collect();
    ensure(ours == theirs, || format!("universe mismatch: {} enumerated vs {} decoded", ours.len(), theirs.len()))?;
    let mut checked = 0;
    for x in all_up_to(5) {
        for t in &oracle_universe {
            let sp = shortest_input(t, &x);
            let bf = (0..=6).flat_map(all_of_length).find(|y| t.run(y).output == x);
            let agree = match (&sp, &bf) {
                (Some(a), Some(b)) => a.len() == b.len() && t.run(a).output == x,
                (Some(a), None) => a.len() > 6 && t.run(a).output == x,
                (None, None) => true,
                (None, Some(_)) => false,
            };
            ensure(agree, || format!("x={x}: shortest path {sp:?} vs brute force {bf:?} on\n{t}"))?;
            checked += 1;
        }
        let value = universe.complexity(&x).value;
        let bf = brute_complexity(&oracle_universe, &x, 6);
        let agree = match (value, bf) {
            (Complexity::Finite(v), Some(b)) => v == b,
            (Complexity::Finite(v), None) => v > 6,
            (Complexity::Infinite, None) => true,
            (Complexity::Infinite, Some(_)) => false,
        };
        ensure(agree, || format!("x={x}: D={value} vs brute force {bf:?}"))?;
    }

    // Lower-bound inequality between the 4-bit and 12-bit complexities.
    let small = decoded_universe(4);
    let d4 = |s: &[bool]| -> Complexity {
        if small.is_empty() {
            return Complexity::Infinite;
        }
        kfs_over_set(s, &small).expect("nonempty").value
    };
    let d12 = |s: &[bool]| universe.complexity(s).value;
    let mut finite_cases = 0;
    let mut cases = 0;
    let short: Vec<BitString> = all_up_to(3).collect();
    let c12: HashMap<&BitString, Complexity> = short.iter().map(|s| (s, d12(s))).collect();
    for x in &short {
        for y in &short {
            for z in &short {
                for n in 0..=2usize {
                    cases += 1;
                    let w = x.concat(&y.power(n)).concat(z);
                    let lhs = d4(&w);
                    let rhs = match (c12[x], c12[y], c12[z]) {
                        (Complexity::Finite(a), Complexity::Finite(b), Complexity::Finite(c)) => Some(a + n * b + c),
                        _ => None,
                    };
                    if let (Complexity::Finite(l), Some(r)) = (lhs, rhs) {
                        finite_cases += 1;
                        ensure(l >= r, || format!("x={x} y={y} n={n} z={z}: {l} < {r}"))?;
                    }
                }
            }
        }
    }
    let dt = t0.elapsed();
    ensure(dt < Duration::from_secs(600), || format!("took {dt:?}"))?;
    Ok(format!(
        "{} machines in the 12-bit universe, {checked} (machine, target) pairs agree with brute force; \
         inequality: {cases} cases, {finite_cases} finite-valued (4-bit universe has {} machines, so D^4 is infinite and the check is vacuous); {:.1}s",
        universe.len(),
        small.len(),
        dt.as_secs_f64()
    ))
}

fn composition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pairs: Vec<(String, PdcSpec, FstSpec)> =
        vec![("half-compressor/identity".into(), build_half_compressor(9, 9, 0).map_err(|e| e.to_string())?, FstSpec::identity())];
    for i in 1..20 {
        let kind = if i % 2 == 1 { StackKind::Unary } else { StackKind::Binary };
        let mc = rng.gen_range(1..=4);
        let c = random_pdc(&mut rng, mc, kind);
        let mt = rng.gen_range(1..=3);
        let t = random_fst(&mut rng, mt, 2);
        pairs.push((format!("random #{i} ({kind})"), c, t));
    }
    let mut compared = 0;
    for (label, c, t) in &pairs {
        let n = compose_pdc_fst(c, t).map_err(|e| format!("{label}: {e}"))?;
        for x in all_up_to(8) {
            let direct = c.run(&t.run(&x).output).map(|r| r.output).ok();
            let composed = n.run(&x).map(|r| r.output).ok();
            ensure(direct == composed, || format!("{label}, x={x}: composed {composed:?} vs direct {direct:?}"))?;
            compared += 1;
        }
    }
    Ok(format!("20 pairs (10 unary), {compared} inputs, all outputs equal the direct run"))
}

fn half_compressor() -> Outcome {
    let (k, v) = (9, 9);
    let c = build_half_compressor(k, v, 0).map_err(|e| e.to_string())?;
    ensure(c.builder().validate().is_ok(), || "validation failed".into())?;
    ensure(pdc_il_check(&c, 12) == IlVerdict::Pass, || "IL check failed at L=12".into())?;
    let err = HalfCompressorLayout { k, v, m: 0 }.error();
    for seed in 0..5 {
        let g = generate(&RecipeConfig { recipe: Recipe::B { k, stages: 20 }, seed, max_bits: None }).map_err(|e| e.to_string())?;
        let mut runner = c.runner();
        let mut out = BitString::new();
        for (i, &b) in g.bits.iter().enumerate() {
            runner.feed(b, &mut out).map_err(|e| format!("seed {seed}: {e}"))?;
            ensure(runner.state() != err, || format!("seed {seed}: error state at bit {i}"))?;
        }
    }
    let g = generate(&RecipeConfig { recipe: Recipe::B { k, stages: 20 }, seed: 1, max_bits: None }).map_err(|e| e.to_string())?;
    let limit = 0.5 + 1.0 / v as f64 + 0.05;
    let mut worst = 0f64;
    let mut prefixes = 0;
    for b in &g.blocks {
        let half = (b.len as usize - k) / 2;
        let n = b.start as usize + half + k;
        if n < 10_000 {
            continue;
        }
        let prefix = &g.bits[..n];
        ensure(prefix[n - k..].iter().all(|&b| b), || format!("prefix {n} does not end with the flag"))?;
        let ratio = c.run(prefix).map_err(|e| e.to_string())?.output.len() as f64 / n as f64;
        ensure(ratio <= limit, || format!("ratio {ratio:.4} > {limit:.4} at n={n}"))?;
        worst = worst.max(ratio);
        prefixes += 1;
    }
    ensure(prefixes > 0, || "no flag-ending prefix of length >= 10^4".into())?;
    let id = Machine::Pdc(PdcSpec::identity(StackKind::Unary));
    let grid: Grid = "1000:17000:1000".parse().map_err(|e: depthlab::profile::ProfileError| e.to_string())?;
    let ratios = RatioTable::compute(&g.bits, ("identity-pdc", &id), &grid, 0.5).map_err(|e| e.to_string())?;
    ensure(ratios.rows.iter().all(|&(n, m)| RatioTable::ratio(n, m) == Some(1.0)), || "identity ratio is not 1".into())?;
    let cm = Machine::Pdc(c);
    let p = DepthProfile::compute(&g.bits, ("identity-pdc", &id), ("half-compressor", &cm), &grid, 0.5).map_err(|e| e.to_string())?;
    let tail = p.tail();
    let (lo, hi) = (tail.min.ok_or("empty tail")?, tail.max.ok_or("empty tail")?);
    ensure(lo >= 0.5 - 0.15, || format!("tail gap/n minimum {lo:.4} < 0.35"))?;
    Ok(format!(
        "valid, IL at L=12, no error state over 5 seeds x 20 stages; worst flag-ending ratio {worst:.4} <= {limit:.4} over {prefixes} prefixes; tail gap/n in [{lo:.4}, {hi:.4}]"
    ))
}

fn recipe_c_vs_lz() -> Outcome {
    let g = generate(&RecipeConfig { recipe: Recipe::C { k: 6, v: 2, stages: 13 }, seed: 1, max_bits: Some(100_000) })
        .map_err(|e| e.to_string())?;
    ensure(g.bits.len() == 100_000, || format!("only {} bits generated", g.bits.len()))?;
    let grid: Grid = "10000:100000:1000".parse().map_err(|e: depthlab::profile::ProfileError| e.to_string())?;
    let t = RatioTable::compute(&g.bits, ("lz78", &Machine::Lz78), &grid, 0.5).map_err(|e| e.to_string())?;
    let mut min = f64::INFINITY;
    for &(n, m) in &t.rows {
        let r = RatioTable::ratio(n, m).ok_or("missing length")?;
        ensure(r >= 0.6, || format!("LZ ratio {r:.4} < 0.6 at n={n}"))?;
        min = min.min(r);
    }
    Ok(format!("{} grid points in [10^4, 10^5], minimum LZ ratio {min:.4}", t.rows.len()))
}

fn certification() -> Outcome {
    let (r, cert) = fs_random_string(16, 2, RandomMode::Certified, 8, 0).map_err(|e| e.to_string())?;
    ensure(matches!(cert, Certificate::Certified { .. }), || "not certified".into())?;
    let six = decoded_universe(6);
    let oracle = brute_complexity(&six, &r, 24);
    ensure(oracle.is_none_or(|v| v >= 8), || format!("brute-force D^6(r) = {oracle:?} < 8"))?;
    let tr = FstSpec::repeater(&r);
    for t in 0..=8 {
        let v = kfs_over_set(&r.power(t), std::slice::from_ref(&tr)).map_err(|e| e.to_string())?.value;
        ensure(v == Complexity::Finite(t), || format!("t={t}: got {v}"))?;
    }
    Ok(format!(
        "r = {r}, certificate {cert:?}; brute force over the {}-machine 6-bit universe gives {} (vacuous: no description fits in 6 bits); repeater complexity of r^t is t for t <= 8",
        six.len(),
        oracle.map_or("inf".to_string(), |v| v.to_string())
    ))
}

fn height_irrelevance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut runs = 0;
    for i in 0..50 {
        let m = rng.gen_range(1..=5);
        let c = random_pdc(&mut rng, m, StackKind::Unary);
        let mut reachable: HashSet<usize> = HashSet::from([c.start()]);
        for p in all_up_to(8) {
            if let Ok(r) = c.run(&p) {
                reachable.insert(r.final_state);
            }
        }
        let stack = |h: usize| {
            let mut s = vec![Sym::Zero; h];
            s.push(Sym::Bottom);
            s
        };
        let per_bit = c.lambda_budget() + 1;
        for &q in &reachable {
            for x in all_up_to(8) {
                let h = per_bit * x.len();
                let outcome = |h: usize| match c.run_from(q, &stack(h), &x) {
                    Ok(r) => Ok(r.output),
                    Err(e) => Err(e.to_string()),
                };
                let (a, b) = (outcome(h), outcome(h + 7));
                ensure(a == b, || format!("spec {i}, state q{}, x={x}: {a:?} vs {b:?}", q + 1))?;
                runs += 1;
            }
        }
    }
    Ok(format!("50 unary specs, {runs} (state, input) pairs agree at heights (c+1)|x| and (c+1)|x|+7"))
}

fn sha_file(p: &Path) -> String {
    hex::encode(Sha256::digest(std::fs::read(p).expect("output file")))
}

fn determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_depthlab");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let jobs: Vec<(&str, Vec<&str>)> = vec![
        ("a.bits", vec!["generate", "--recipe", "a", "--growth", "scaled:2", "--stages", "8", "--certify"]),
        ("a_tower.bits", vec!["generate", "--recipe", "a", "--stages", "5"]),
        ("b.bits", vec!["generate", "--recipe", "b", "--k", "9", "--stages", "16"]),
        ("c.bits", vec!["generate", "--recipe", "c", "--k", "6", "--v", "2", "--stages", "10"]),
    ];
    let mut hashes = Vec::new();
    for run in 0..2 {
        let mut these = Vec::new();
        let out = |name: &str| dir.path().join(format!("{run}_{name}"));
        let cmd = |args: &[&str], envseed: &str| {
            let st = Command::new(exe).args(args).env("DEPTHLAB_SEED", envseed).output().expect("spawn");
            if st.status.success() {
                Ok(())
            } else {
                Err(format!("{args:?}: {}", String::from_utf8_lossy(&st.stderr)))
            }
        };
        for (name, args) in &jobs {
            let p = out(name);
            let mut a = args.clone();
            let ps = p.to_str().unwrap().to_string();
            a.extend(["--out", &ps]);
            cmd(&a, "42")?;
            these.push(sha_file(&p));
            these.push(sha_file(&depthlab::seqgen::manifest_path(&p)));
        }
        let b = out("b.bits");
        let prof = out("profile.csv");
        cmd(
            &[
                "profile", "--input", b.to_str().unwrap(), "--weak", "identity-pdc", "--strong", "half-compressor(9,9,0)",
                "--grid", "1000:11000:500", "--out", prof.to_str().unwrap(),
            ],
            "42",
        )?;
        these.push(sha_file(&prof));
        let ratio = out("ratio.csv");
        cmd(
            &["ratio", "--recipe", "c", "--k", "6", "--v", "2", "--stages", "10", "--compressor", "lz78", "--grid", "1000:18000:*1.5", "--out", ratio.to_str().unwrap()],
            "42",
        )?;
        these.push(sha_file(&ratio));
        hashes.push(these);
    }
    ensure(hashes[0] == hashes[1], || "files differ between runs".into())?;
    Ok(format!("{} files byte-identical across 2 runs (seed 42 from the environment)", hashes[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("LZ78 correctness", lz_correctness),
        ("repeat-lemma bound", repeat_bound_check),
        ("description codec round trip", codec_roundtrip),
        ("k-FS complexity oracle", kfs_oracle),
        ("pushdown/transducer composition", composition),
        ("half-compressor behavior", half_compressor),
        ("recipe C vs LZ78", recipe_c_vs_lz),
        ("FS-randomness certification", certification),
        ("stack-height irrelevance", height_irrelevance),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let label = format!("criterion {}: {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|p| label.contains(p.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let r = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("PASS {label} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {label} ({secs:.1}s): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
