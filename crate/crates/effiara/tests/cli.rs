use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

use effiara::formats::{self, EvalJson, PlanJson, RecoveryJson, ReliabilityReport, ScenarioJson};
use effiara_core::simulator::SimScenario;

/// Runs the binary in `dir` with whitespace-separated `args`.
fn effiara(dir: &Path, args: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_effiara"))
        .args(args.split_whitespace())
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &str) -> Vec<u8> {
    let out = effiara(dir, args);
    assert!(
        out.status.success(),
        "effiara {args} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn samples_csv(n: usize) -> String {
    let mut csv = String::from("sample_id,claim_text,post_text\n");
    for i in 0..n {
        writeln!(csv, "s{i:04},claim {i},post {i}").unwrap();
    }
    csv
}

const REFERENCE_CAMPAIGN: &str =
    "--annotators 6 --hours 10 --rate 60 --double-prop 0.333333 --reanno-prop 0.5 --seed 1";

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(effiara(d, "").status.code(), Some(2));
    assert_eq!(effiara(d, "bogus").status.code(), Some(2));
    assert_eq!(effiara(d, "simulate --annotations-out a.csv").status.code(), Some(2));
    assert_eq!(
        effiara(d, "reliability --annotations a.csv --mode both").status.code(),
        Some(2)
    );

    let help = effiara(d, "reliability --help");
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8(help.stdout).unwrap();
    for flag in ["--lambda", "--mode", "--weighted-inter", "--annotations", "--out"] {
        assert!(text.contains(flag), "help lacks {flag}");
    }

    let missing = effiara(d, "reliability --annotations missing.csv");
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error: missing.csv:"));

    std::fs::write(
        d.join("bad.csv"),
        "sample_id,annotator_id,phase,primary_label,confidence,secondary_label\ns1,a1,first,misinfo,9,\n",
    )
    .unwrap();
    let bad = effiara(d, "reliability --annotations bad.csv");
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));
}

#[test]
fn distribute_reference_campaign() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("samples.csv"), samples_csv(2200)).unwrap();
    let out = ok(
        dir.path(),
        &format!("distribute --samples samples.csv {REFERENCE_CAMPAIGN}"),
    );
    let plan: PlanJson = formats::from_json(&out).unwrap();
    assert_eq!(plan.k, 2160);
    assert_eq!(plan.annotators.len(), 6);
    assert_eq!(plan.metadata.single_project_size, 240);
    assert_eq!(plan.metadata.reannotate_size, 120);
    assert_eq!(plan.metadata.double_project_size, 60);

    std::fs::write(dir.path().join("few.csv"), samples_csv(100)).unwrap();
    let short = effiara(
        dir.path(),
        &format!("distribute --samples few.csv {REFERENCE_CAMPAIGN}"),
    );
    assert_eq!(short.status.code(), Some(1));
}

#[test]
fn consistent_annotators_score_one_under_pure_intra_weight() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut scenario = SimScenario::standard(4);
    for a in &mut scenario.annotators {
        a.consistency = 1.0;
    }
    let json = formats::to_json(&ScenarioJson::from(&scenario)).unwrap();
    std::fs::write(d.join("scenario.json"), json).unwrap();
    ok(
        d,
        "simulate --scenario scenario.json --seed 4 --annotations-out ann.csv",
    );
    for mode in ["single", "iterative"] {
        let out = ok(
            d,
            &format!("reliability --annotations ann.csv --lambda 1 --mode {mode}"),
        );
        let report: ReliabilityReport = formats::from_json(&out).unwrap();
        for (id, r) in report.reliabilities() {
            assert!((r - 1.0).abs() < 1e-12, "{mode}: {id} = {r}");
        }
    }
}

#[test]
fn simulated_campaign_flows_through_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        "simulate --seed 8 --annotations-out ann.csv --truth-out truth.csv --samples-out samples.csv",
    );
    ok(
        d,
        "reliability --annotations ann.csv --mode iterative --weighted-inter --out rel.json",
    );
    ok(
        d,
        "labels --annotations ann.csv --reliability rel.json --out labeled.jsonl",
    );
    let eval = ok(
        d,
        "train --labeled labeled.jsonl --samples samples.csv --reliability rel.json \
         --weighting reliability --epochs 30 --seed 1 --trace-out trace.csv",
    );
    let eval: EvalJson = formats::from_json(&eval).unwrap();
    assert!(eval.n_test > 0 && (0.0..=1.0).contains(&eval.macro_f1));
    let trace = std::fs::read_to_string(d.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 31);

    let no_report = effiara(
        d,
        "train --labeled labeled.jsonl --samples samples.csv --weighting reliability --seed 1",
    );
    assert_eq!(no_report.status.code(), Some(1));

    let recovery: RecoveryJson = formats::from_json(&ok(d, "recover --seed 8 --reliability rel.json")).unwrap();
    assert_eq!(recovery.reliabilities.len(), 6);
    assert!(recovery.rho > 0.0);

    let dot = String::from_utf8(ok(d, "graph --annotations ann.csv")).unwrap();
    assert!(dot.starts_with("graph") && dot.matches(" -- ").count() == 12, "{dot}");

    let gold = String::from_utf8(ok(d, "gold --annotations ann.csv --merge debunk=other")).unwrap();
    assert!(gold.lines().count() > 0);
    assert!(gold
        .lines()
        .all(|l| l.contains("\"soft_label\":[") && !l.contains("\"debunk\"")));
}
