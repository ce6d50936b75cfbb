use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn tsreason(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsreason"))
        .args(args)
        .output()
        .expect("spawn tsreason")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn lines(p: &str) -> Vec<Value> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn gen(dir: &TempDir, n: &str, seed: &str) -> String {
    let out = path(dir, "data.jsonl");
    let o = tsreason(&["gen", "--n", n, "--seed", seed, "--output", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn gen_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "10", "4");
    let first = fs::read(&a).unwrap();
    let again = gen(&dir, "10", "4");
    assert_eq!(first, fs::read(&again).unwrap());
    let rows = lines(&a);
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r["values"].as_array().unwrap().len() == 1000));

    let other = path(&dir, "other.jsonl");
    assert!(tsreason(&["gen", "--n", "10", "--seed", "5", "--output", &other]).status.success());
    assert_ne!(first, fs::read(&other).unwrap());
}

#[test]
fn gen_mix_and_length_flags() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "mix.jsonl");
    let o = tsreason(&[
        "gen", "--n", "6", "--mix", "trend=0.5,global_point=0.5", "--length", "400", "--output", &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = lines(&out);
    let classes: Vec<&str> = rows.iter().map(|r| r["class"].as_str().unwrap()).collect();
    assert_eq!(classes.iter().filter(|c| **c == "trend").count(), 3);
    assert_eq!(classes.iter().filter(|c| **c == "global point").count(), 3);
    assert!(rows.iter().all(|r| r["values"].as_array().unwrap().len() == 400));
}

#[test]
fn trace_with_audit_passes() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "8", "1");
    let traces = path(&dir, "traces.jsonl");
    let o = tsreason(&["trace", "--input", &data, "--output", &traces, "--audit", "--jobs", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["traces"], 8);
    assert!(summary["max_deviation"].as_f64().unwrap() <= 1e-6);
    let rows = lines(&traces);
    let inst = lines(&data);
    for (t, i) in rows.iter().zip(&inst) {
        assert_eq!(t["id"], i["id"]);
        assert_eq!(t["conclusion"]["class"], i["class"]);
        assert_eq!(t["conclusion"]["intervals"], i["intervals"]);
        let flat = t["flat_text"].as_str().unwrap();
        assert!(flat.starts_with("<think>") && flat.contains("</think>") && flat.contains("<answer>"));
    }
}

#[test]
fn trace_audit_catches_tampering() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "3", "2");
    let traces = path(&dir, "traces.jsonl");
    assert!(tsreason(&["trace", "--input", &data, "--output", &traces]).status.success());

    // shift one instance's series; its trace no longer matches
    let mut inst = lines(&data);
    let v = inst[0]["values"][10].as_f64().unwrap();
    inst[0]["values"][10] = Value::from(v + 50.0);
    let text: String = inst.iter().map(|r| format!("{r}\n")).collect();
    fs::write(&data, text).unwrap();
    let o = tsreason(&["trace", "--input", &data, "--check", &traces]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["failures"].as_array().unwrap().len(), 1);
}

#[test]
fn advantage_report_shape() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "one.jsonl");
    assert!(tsreason(&["gen", "--n", "1", "--mix", "trend=1", "--output", &data])
        .status
        .success());
    let traces = path(&dir, "traces.jsonl");
    assert!(tsreason(&["trace", "--input", &data, "--output", &traces]).status.success());
    let trace = &lines(&traces)[0];
    let id = trace["id"].as_str().unwrap();
    let gt = &trace["conclusion"]["intervals"][0];
    let (s, e) = (gt[0].as_u64().unwrap(), gt[1].as_u64().unwrap());
    let responses = vec![
        trace["flat_text"].as_str().unwrap().to_string(),
        format!("<think>\nlevel drifts\n</think>\n<answer>[[{s}, {e}]]</answer>\n<class>trend</class>"),
        "<think>\nnothing\n</think>\n<answer>[]</answer>\n<class>normal</class>".to_string(),
        "plain text".to_string(),
        format!("<think>\nspike\n</think>\n<answer>[[{s}, {s}]]</answer>\n<class>global point</class>"),
    ];
    let groups = path(&dir, "responses.jsonl");
    fs::write(&groups, format!("{}\n", serde_json::json!({"id": id, "responses": responses}))).unwrap();
    let report = path(&dir, "adv.json");
    let o = tsreason(&[
        "advantage", "--input", &groups, "--traces", &traces, "--output", &report, "--alpha", "0.5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["config"]["alpha"], 0.5);
    let g = &r["groups"][0];
    assert_eq!(g["id"], id);
    for key in ["rewards", "a_main", "a_tsr", "a_perp", "a_final", "ot"] {
        assert_eq!(g[key].as_array().unwrap().len(), 5, "{key}");
    }
    let rewards: Vec<f64> = g["rewards"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((rewards[0] - 1.0).abs() < 1e-12);
    assert_eq!(rewards[3], 0.0);
    assert_eq!(g["uniform_marginals"], true);
}

#[test]
fn advantage_missing_trace_is_data_error() {
    let dir = TempDir::new().unwrap();
    let traces = path(&dir, "traces.jsonl");
    fs::write(&traces, "").unwrap();
    let groups = path(&dir, "responses.jsonl");
    fs::write(&groups, "{\"id\":\"nope\",\"responses\":[\"a\",\"b\"]}\n").unwrap();
    let o = tsreason(&["advantage", "--input", &groups, "--traces", &traces, "--output", &path(&dir, "x.json")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_scores_and_warns_on_missing() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "4", "3");
    let inst = lines(&data);
    // perfect predictions for all but the last instance
    let preds: String = inst[..3]
        .iter()
        .map(|r| {
            format!(
                "{}\n",
                serde_json::json!({"id": r["id"], "class": r["class"], "intervals": r["intervals"]})
            )
        })
        .collect();
    let pred_path = path(&dir, "preds.jsonl");
    fs::write(&pred_path, preds).unwrap();
    let report = path(&dir, "eval.json");
    let o = tsreason(&["eval", "--input", &pred_path, "--truth", &data, "--output", &report]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert!(!o.stdout.is_empty());
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["instances"], 4);
    assert!((r["accuracy"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert_eq!(r["missing"].as_array().unwrap().len(), 1);
}

#[test]
fn eval_rejects_unknown_ids() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "2", "3");
    let pred_path = path(&dir, "preds.jsonl");
    fs::write(&pred_path, "{\"id\":\"ghost\",\"response\":\"<answer>[]</answer>\"}\n").unwrap();
    let o = tsreason(&["eval", "--input", &pred_path, "--truth", &data, "--output", &path(&dir, "e.json")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn render_writes_one_image_per_instance() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "3", "9");
    let out = path(&dir, "img");
    assert!(tsreason(&["render", "--input", &data, "--output", &out]).status.success());
    let ids: Vec<String> = lines(&data).iter().map(|r| r["id"].as_str().unwrap().to_string()).collect();
    for id in &ids {
        let png = fs::read(Path::new(&out).join(format!("{id}.png"))).unwrap();
        let reader = png::Decoder::new(std::io::Cursor::new(png.as_slice())).read_info().unwrap();
        assert_eq!((reader.info().width, reader.info().height), (805, 124));
    }
    let svg_out = path(&dir, "svg");
    assert!(tsreason(&["render", "--input", &data, "--output", &svg_out, "--format", "svg"])
        .status
        .success());
    assert_eq!(fs::read_dir(&svg_out).unwrap().count(), 3);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "run.toml");
    fs::write(&cfg, "seed = 3\n[gen]\nn = 4\n[gen.base]\nlength = 300\n").unwrap();
    let out = path(&dir, "c.jsonl");
    let o = tsreason(&["gen", "--config", &cfg, "--n", "2", "--output", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = lines(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["values"].as_array().unwrap().len(), 300);

    fs::write(&cfg, "[gen]\nnn = 4\n").unwrap();
    assert_eq!(tsreason(&["gen", "--config", &cfg, "--output", &out]).status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(tsreason(&["bogus"]).status.code(), Some(1));
    assert_eq!(tsreason(&["--help"]).status.code(), Some(0));
    assert_eq!(tsreason(&["trace", "--input", "/nonexistent/x.jsonl", "--output", "/tmp/y"]).status.code(), Some(2));
    assert_eq!(tsreason(&["gen", "--n", "2", "--jobs", "0", "--output", "/tmp/z"]).status.code(), Some(1));
    let help = String::from_utf8(tsreason(&["trace", "--help"]).stdout).unwrap();
    assert!(help.contains("[default: 3.5]"));
}
