use std::collections::HashMap;
use std::fs;

use modescope::config::{RunConfig, SynthPreset};
use modescope::ingest::NormalizeMethod;
use modescope::pipeline::run;
use modescope::report::{emit_bundle, ArtifactClass, Manifest, StageStatus, MANIFEST_FILE};

fn price_config(series: usize, len: usize) -> RunConfig {
    let mut c = RunConfig::default();
    c.input.synth = Some(SynthPreset::Price);
    c.input.series = series;
    c.input.length = len;
    c.dmd.rank = Some(15.min(series));
    c
}

#[test]
fn full_bundle_layout() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = run(&price_config(16, 1024)).unwrap();
    let manifest = emit_bundle(&bundle, dir.path()).unwrap();
    assert_eq!(
        manifest.classes(),
        [
            ArtifactClass::Panel,
            ArtifactClass::Stats,
            ArtifactClass::Wavelet,
            ArtifactClass::Multifractal,
            ArtifactClass::Dmd
        ]
    );
    assert!(manifest.stages.values().all(|s| *s == StageStatus::Done));

    let on_disk: Manifest = serde_json::from_slice(&fs::read(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(on_disk, manifest);
    for f in &manifest.files {
        let bytes = fs::read(dir.path().join(&f.path)).unwrap();
        assert_eq!(bytes.len() as u64, f.bytes, "{}", f.path);
    }

    let modes = fs::read_to_string(dir.path().join("dmd/modes.csv")).unwrap();
    assert_eq!(modes.lines().count(), 9);
    assert!(modes.contains(",0.0000,Inf\n"));
}

#[test]
fn emitted_decomposition_is_additive() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = price_config(2, 1024);
    config.multifractal.enabled = false;
    config.dmd.enabled = false;
    let manifest = emit_bundle(&run(&config).unwrap(), dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("wavelet/01_s1.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,component,value"));
    let mut x: HashMap<String, f64> = HashMap::new();
    let mut sum: HashMap<String, f64> = HashMap::new();
    let mut rows = 0;
    for line in lines {
        let mut cells = line.split(',');
        let (t, comp, v) = (cells.next().unwrap(), cells.next().unwrap(), cells.next().unwrap());
        let v: f64 = v.parse().unwrap();
        if comp == "x" {
            x.insert(t.to_string(), v);
        } else {
            *sum.entry(t.to_string()).or_default() += v;
        }
        rows += 1;
    }
    assert_eq!(rows, 8 * 1024);
    for (t, xv) in &x {
        assert!((sum[t] - xv).abs() <= 1e-10, "t={t}");
    }
    assert_eq!(manifest.stages["multifractal"], StageStatus::Skipped);
    assert_eq!(manifest.stages["dmd"], StageStatus::Skipped);
    assert!(manifest.files.iter().all(|f| !f.path.starts_with("dmd")));
}

#[test]
fn stats_only_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = price_config(3, 64);
    config.wavelet.enabled = false;
    config.multifractal.enabled = false;
    config.dmd.enabled = false;
    let manifest = emit_bundle(&run(&config).unwrap(), dir.path()).unwrap();
    assert_eq!(manifest.classes(), [ArtifactClass::Panel, ArtifactClass::Stats]);
    let stats = fs::read_to_string(dir.path().join("stats.csv")).unwrap();
    assert_eq!(stats.lines().count(), 4);
    assert!(stats.starts_with("id,mean,median,min,max,std,skewness,kurtosis,jb_h,jb_p\n"));
}

#[test]
fn file_input_is_hashed() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("panel.csv");
    let mut body = String::from("date,a,b\n");
    for d in 0..32 {
        body += &format!("{},{},{}\n", 100 + d, d as f64 * 0.5, ((d * d) % 7) as f64);
    }
    fs::write(&csv, &body).unwrap();
    let mut config = RunConfig::default();
    assert_eq!(config.input.normalize, NormalizeMethod::Minmax);
    config.input.normalize = NormalizeMethod::None;
    config.input.path = Some(csv);
    config.wavelet.levels = 5;
    config.dmd.top = 20;
    let bundle = run(&config).unwrap();
    let out = dir.path().join("out");
    let manifest = emit_bundle(&bundle, &out).unwrap();
    assert_eq!(manifest.input_sha256.as_ref().map(String::len), Some(64));
    assert_eq!(manifest.panel.first, "100");
    assert_eq!(manifest.panel.last, "131");
    let panel = fs::read_to_string(out.join("panel.csv")).unwrap();
    assert_eq!(panel, body);
}
