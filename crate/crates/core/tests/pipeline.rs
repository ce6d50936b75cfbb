use tsreason_core::analysis::ScanParams;
use tsreason_core::expcot::{audit, generate_expcot};
use tsreason_core::io::{read_instances, read_jsonl, write_jsonl};
use tsreason_core::metrics::{evaluate, Prediction};
use tsreason_core::synth::{generate_dataset, DatasetConfig};
use tsreason_core::AnomalyClass;

fn corpus(n: usize, seed: u64) -> Vec<tsreason_core::LabeledInstance> {
    generate_dataset(&DatasetConfig {
        n,
        seed,
        ..DatasetConfig::default()
    })
    .unwrap()
}

#[test]
fn jsonl_round_trip_is_bit_exact() {
    let data = corpus(20, 5);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.jsonl");
    write_jsonl(&p, &data).unwrap();
    assert_eq!(read_instances(&p).unwrap(), data);
}

#[test]
fn traces_survive_serialization_and_audit() {
    let data = corpus(15, 6);
    let params = ScanParams::default();
    let traces: Vec<_> = data.iter().map(|i| generate_expcot(i, &params).unwrap()).collect();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.jsonl");
    write_jsonl(&p, &traces).unwrap();
    let back: Vec<tsreason_core::expcot::ExpCotTrace> = read_jsonl(&p).unwrap();
    for ((t, b), inst) in traces.iter().zip(&back).zip(&data) {
        assert_eq!(serde_json::to_string(t).unwrap(), serde_json::to_string(b).unwrap());
        assert!(audit(b, inst).unwrap().passed(1e-6));
    }
    let twice: Vec<_> = data.iter().map(|i| generate_expcot(i, &params).unwrap()).collect();
    assert_eq!(
        serde_json::to_string(&traces).unwrap(),
        serde_json::to_string(&twice).unwrap()
    );
}

#[test]
fn oracle_predictions_score_perfectly() {
    let data = corpus(25, 7);
    let preds: Vec<Prediction> = data
        .iter()
        .map(|i| Prediction {
            id: i.id.clone(),
            class: Some(i.class),
            intervals: Some(i.intervals.clone()),
        })
        .collect();
    let r = evaluate(&preds, &data, None).unwrap();
    assert_eq!(r.accuracy, 1.0);
    assert!((r.macro_f1 - 1.0).abs() < 1e-12);
    for c in AnomalyClass::ANOMALOUS {
        assert_eq!(r.per_class[c.name()].f1, 1.0);
    }
}
