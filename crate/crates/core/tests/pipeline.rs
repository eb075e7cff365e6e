use depthlab::bits::all_up_to;
use depthlab::codec::{decode_fst, encode_fst};
use depthlab::fst::{fst_compose, FstSpec};
use depthlab::lz78::lz_encode;
use depthlab::profile::{CompressorSpec, DepthProfile, Grid, Measure, RatioTable};
use depthlab::pushdown::compose_pdc_fst;
use depthlab::seqgen::{bits_sha256, generate, read_bits_file, write_generated, Recipe, RecipeConfig};

#[test]
fn generate_write_read_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RecipeConfig { recipe: Recipe::B { k: 9, stages: 12 }, seed: 11, max_bits: None };
    let g = generate(&cfg).unwrap();
    let path = dir.path().join("b.bits");
    write_generated(&path, &cfg, &g).unwrap();
    let x = read_bits_file(&path).unwrap();
    assert_eq!(bits_sha256(&x), bits_sha256(&g.bits));

    let weak: CompressorSpec = "identity-pdc".parse().unwrap();
    let strong: CompressorSpec = "half-compressor(9,9,0)".parse().unwrap();
    let grid: Grid = format!("100:{}:*1.3", x.len()).parse().unwrap();
    let p = DepthProfile::compute(
        &x,
        (&weak.to_string(), &weak.resolve().unwrap()),
        (&strong.to_string(), &strong.resolve().unwrap()),
        &grid,
        0.5,
    )
    .unwrap();
    let rows = DepthProfile::from_csv(&p.to_csv()).unwrap();
    assert_eq!(rows, p.rows);
    assert!(rows.iter().all(|r| r.weak == Measure::Bits(r.n)));
    let last = rows.last().unwrap();
    assert!(last.strong.bits().unwrap() < last.n);
}

#[test]
fn lz_ratio_matches_encoder() {
    let g = generate(&RecipeConfig { recipe: Recipe::C { k: 6, v: 2, stages: 9 }, seed: 0, max_bits: Some(5000) }).unwrap();
    let grid: Grid = "250:5000:250".parse().unwrap();
    let lz: CompressorSpec = "lz78".parse().unwrap();
    let t = RatioTable::compute(&g.bits, ("lz78", &lz.resolve().unwrap()), &grid, 0.5).unwrap();
    for &(n, m) in &t.rows {
        assert_eq!(m, Measure::Bits(lz_encode(&g.bits[..n as usize]).len() as u64));
    }
}

#[test]
fn spec_files_resolve() {
    let dir = tempfile::tempdir().unwrap();
    let fst = dir.path().join("t.fst");
    std::fs::write(&fst, "fst 2 1\n1 0 -> 2 01\n1 1 -> 1 -\n2 0 -> 1 1\n2 1 -> 2 00\n").unwrap();
    let spec: CompressorSpec = fst.to_str().unwrap().parse().unwrap();
    assert!(spec.resolve().is_ok());
    let missing: CompressorSpec = "nowhere.pdc".parse().unwrap();
    assert!(missing.resolve().is_err());
}

#[test]
fn codec_and_composition_agree() {
    let t = FstSpec::from_text("fst 2 1\n1 0 -> 2 01\n1 1 -> 1 -\n2 0 -> 1 1\n2 1 -> 2 00\n").unwrap();
    let back = decode_fst(&encode_fst(&t).bits).unwrap();
    let tt = fst_compose(&back, &t);
    let c = depthlab::pushdown::build_half_compressor(9, 9, 0).unwrap();
    let n = compose_pdc_fst(&c, &tt).unwrap();
    for x in all_up_to(7) {
        let inner = t.run(&t.run(&x).output).output;
        assert_eq!(tt.run(&x).output, inner);
        assert_eq!(n.run(&x).unwrap().output, c.run(&inner).unwrap().output);
    }
}
