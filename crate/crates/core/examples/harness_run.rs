//! Drive the `hsw` harness in-process: a config, a run directory, a
//! manifest.

use hsw::harness::{run, LoadedConfig};

fn main() {
    let out = tempfile::tempdir().unwrap();
    let text = r#"{
  "name": "demo",
  "j": 2,
  "k_max": 32
}"#;
    let mut cfg = LoadedConfig::from_text(text, Some("demo.json".into())).unwrap();
    cfg.config.output_dir = Some(out.path().to_string_lossy().into_owned());

    let res = run("resonance-verify", &cfg).unwrap();
    println!("{}", serde_json::to_string_pretty(&res.summary).unwrap());
    let manifest = std::fs::read_to_string(res.run_dir.join("manifest.json")).unwrap();
    println!("{manifest}");

    let bad = LoadedConfig::from_text("{\n  \"j\": 0\n}", Some("bad.json".into())).unwrap();
    let err = run("resonance-verify", &bad).unwrap_err();
    println!("exit {}: {}", err.exit_code(), err.message());
}
