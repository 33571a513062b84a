use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cellctx::io::{read_kvectors, WindowSpec};
use cellctx::RasterMap;

fn cellctx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cellctx")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = cellctx(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn setup(dir: &Path) -> (String, String) {
    let pts = dir.join("pts.csv");
    fs::write(
        &pts,
        "x,y,class\n10,10,0\n20,10,1\n10.4,30.6,1\n45,45,0\n60,20,2\n",
    )
    .unwrap();
    let win = dir.join("win.json");
    let spec = WindowSpec {
        x0: 0.0,
        y0: 0.0,
        width: 64.0,
        height: 64.0,
        n_classes: 3,
    };
    fs::write(&win, spec.to_json().unwrap()).unwrap();
    (pts.to_str().unwrap().into(), win.to_str().unwrap().into())
}

#[test]
fn version_reports_format() {
    let v = ok(&["--version"]);
    assert!(v.contains(cellctx::VERSION));
    assert!(v.contains("raster format v1"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (pts, win) = setup(dir.path());
    assert_eq!(cellctx(&["bogus"]).status.code(), Some(2));
    assert_eq!(cellctx(&["kvec", "--points", &pts, "--out", "-"]).status.code(), Some(2));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x,y,class\n1,2,0\n1,oops,0\n").unwrap();
    let out = cellctx(&["kvec", "--points", bad.to_str().unwrap(), "--window", &win, "--out", "-"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let dup = dir.path().join("dup.csv");
    fs::write(&dup, "x,y,class\n5,5,0\n5.2,5.1,1\n").unwrap();
    let gt = dir.path().join("gt");
    let args = ["gtmaps", "--points", dup.to_str().unwrap(), "--window", &win, "--out-dir", gt.to_str().unwrap()];
    assert_eq!(cellctx(&args).status.code(), Some(4));

    assert_eq!(cellctx(&["--workers", "0", "kvec", "--points", &pts, "--window", &win, "--out", "-"]).status.code(), Some(5));
    let args = ["envelope", "--points", &pts, "--window", &win, "--n-sims", "1", "--rank", "1", "--out", "-"];
    assert_eq!(cellctx(&args).status.code(), Some(5));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let (pts, win) = setup(dir.path());
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "radii = [10.0, 20.0]\nn_max = 10.0\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = ok(&["--config", cfg, "kvec", "--points", &pts, "--window", &win, "--out", "-"]);
    assert!(from_file.starts_with("cell_index,x,y,class,k0_r10,k0_r20,k1_r10"));
    // Cell 0 has one class-1 neighbour at distance 10: outside r=10, inside r=20.
    assert!(from_file.lines().nth(1).unwrap().starts_with("0,10,10,0,0,0,0,0.1,"));
    let flagged = ok(&["--config", cfg, "--n-max", "100", "kvec", "--points", &pts, "--window", &win, "--out", "-"]);
    assert!(flagged.lines().nth(1).unwrap().starts_with("0,10,10,0,0,0,0,0.01,"));

    fs::write(dir.path().join("typo.toml"), "radii = [10.0]\nnmax = 3\n").unwrap();
    let out = cellctx(&["--config", dir.path().join("typo.toml").to_str().unwrap(), "kvec", "--points", &pts, "--window", &win, "--out", "-"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn window_flags_stand_in_for_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let (pts, win) = setup(dir.path());
    let a = ok(&["ripley", "--points", &pts, "--window", &win, "--correction", "none", "--out", "-"]);
    let b = ok(&[
        "ripley", "--points", &pts, "--width", "64", "--height", "64", "--n-classes", "3", "--correction", "none", "--out", "-",
    ]);
    assert_eq!(a, b);
    assert!(a.starts_with("r,k,theoretical\n15,"));
}

#[test]
fn gtmaps_then_kvec_reconstructs_map() {
    let dir = tempfile::tempdir().unwrap();
    let (pts, win) = setup(dir.path());
    let gt = dir.path().join("gt");
    ok(&["gtmaps", "--points", &pts, "--window", &win, "--out-dir", gt.to_str().unwrap()]);
    let kv = ok(&["kvec", "--points", &pts, "--window", &win, "--out", "-"]);
    let rows = read_kvectors(kv.as_bytes()).unwrap();

    let det = RasterMap::load(gt.join("detection.csrm")).unwrap();
    let map = RasterMap::load(gt.join("kvector.csrm")).unwrap();
    let valid = RasterMap::load(gt.join("validity.csrm")).unwrap();
    assert_eq!(map.shape(), (64, 64, 18));
    assert_eq!(valid.as_u8(), det.as_u8());
    let spec = WindowSpec::load(&win).unwrap();
    let p = cellctx::io::load_pattern(&pts, &spec).unwrap();
    let (labeling, comp) = cellctx::groundtruth::assign_components(&p, &det).unwrap();
    for r in 0..64 {
        for c in 0..64 {
            let l = labeling.label_at(r, c);
            for ch in 0..18 {
                let want = if l == 0 {
                    0.0
                } else {
                    let cell = comp.iter().position(|&x| x == l).unwrap();
                    rows[cell].1[ch] as f32
                };
                assert_eq!(map.get(r, c, ch) as f32, want);
            }
        }
    }
    let dilation = fs::read_to_string(gt.join("dilation.csv")).unwrap();
    assert_eq!(dilation, "cell_index,halfwidth\n0,4\n1,4\n2,4\n3,4\n4,4\n");
}

#[test]
fn eval_of_ground_truth_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let (pts, _) = setup(dir.path());
    let report: serde_json::Value = serde_json::from_str(&ok(&["eval", "--pred", &pts, "--gt", &pts, "--out", "-"])).unwrap();
    assert_eq!(report["detection"]["f1"], 1.0);
    assert_eq!(report["mean_f1"], 1.0);
    assert_eq!(report["per_class"].as_array().unwrap().len(), 3);
    let out = cellctx(&["eval", "--pred", &pts, &pts, "--gt", &pts, "--out", "-"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn extract_writes_planted_cell() {
    let dir = tempfile::tempdir().unwrap();
    let mut like = RasterMap::zeros_f32(16, 16, 1);
    let mut cls = RasterMap::zeros_f32(16, 16, 2);
    let (mut lv, mut cv) = (like.as_f32().unwrap().to_vec(), cls.as_f32().unwrap().to_vec());
    for r in 2..5 {
        for c in 8..10 {
            lv[r * 16 + c] = 0.8;
            cv[(r * 16 + c) * 2 + 1] = 1.0;
        }
    }
    like = RasterMap::new(16, 16, 1, cellctx::raster::RasterData::F32(lv)).unwrap();
    cls = RasterMap::new(16, 16, 2, cellctx::raster::RasterData::F32(cv)).unwrap();
    let (l, c) = (dir.path().join("l.csrm"), dir.path().join("c.csrm"));
    like.save(&l).unwrap();
    cls.save(&c).unwrap();
    let out = ok(&["extract", "--likelihood", l.to_str().unwrap(), "--classes", c.to_str().unwrap(), "--out", "-"]);
    assert_eq!(out, "x,y,class,size\n8.5,3,1,6\n");
    let out = ok(&["--min-size", "7", "extract", "--likelihood", l.to_str().unwrap(), "--classes", c.to_str().unwrap(), "--out", "-"]);
    assert_eq!(out, "x,y,class,size\n");
}

#[test]
fn cluster_warm_start_advances_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let feats = dir.path().join("f.csv");
    let mut text = String::from("cell_index,class,f0,f1\n");
    for i in 0..20 {
        let b = if i % 2 == 0 { 0.0 } else { 5.0 };
        text += &format!("{i},{},{},{}\n", i % 2, b + i as f64 * 0.01, b);
    }
    fs::write(&feats, text).unwrap();
    let f = feats.to_str().unwrap();
    let m1 = dir.path().join("m1.json");
    let m2 = dir.path().join("m2.json");
    ok(&["--k", "2", "cluster", "--features", f, "--assignments", "-", "--model-out", m1.to_str().unwrap()]);
    let a2 = ok(&["cluster", "--features", f, "--model-in", m1.to_str().unwrap(), "--assignments", "-", "--model-out", m2.to_str().unwrap()]);
    let v1: serde_json::Value = serde_json::from_str(&fs::read_to_string(&m1).unwrap()).unwrap();
    let v2: serde_json::Value = serde_json::from_str(&fs::read_to_string(&m2).unwrap()).unwrap();
    assert_eq!(v1["epoch"], 1);
    assert_eq!(v2["epoch"], 2);
    assert_eq!(v2["k"], 2);
    assert_eq!(v1["centroids"], v2["centroids"]);
    assert_eq!(a2.lines().count(), 21);
}

#[test]
fn subcats_ids_are_class_offsets() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("p.csv");
    let mut text = String::from("x,y,class\n");
    for i in 0..40 {
        text += &format!("{},{},{}\n", (i * 37 % 200) as f64, (i * 53 % 200) as f64, i % 2);
    }
    fs::write(&pts, text).unwrap();
    let out = ok(&[
        "--k", "3", "subcats", "--points", pts.to_str().unwrap(), "--width", "200", "--height", "200", "--n-classes", "2", "--out", "-",
    ]);
    for line in out.lines().skip(1) {
        let f: Vec<usize> = line.split(',').skip(3).map(|v| v.parse().unwrap()).collect();
        assert!(f[1] < 3);
        assert_eq!(f[2], f[0] * 3 + f[1]);
    }
}
