use effiara_core::distribution::verify_plan;
use effiara_core::graph::{build_graph, compute_reliability, ReliabilityConfig, ReliabilityMode};
use effiara_core::simulator::{evaluate_recovery, simulate_campaign, SimScenario, STANDARD_ACCURACIES};
use effiara_core::CampaignParams;

fn with_accuracy(seed: u64, accuracy: f64, consistency: f64) -> SimScenario {
    let mut sc = SimScenario::standard(seed);
    for a in &mut sc.annotators {
        a.accuracy = accuracy;
        a.consistency = consistency;
    }
    sc
}

fn iterative_weighted() -> ReliabilityConfig {
    ReliabilityConfig {
        lambda: 0.5,
        mode: ReliabilityMode::Iterative,
        use_weighted_inter: true,
        ..Default::default()
    }
}

#[test]
fn perfect_annotators_agree_perfectly() {
    let out = simulate_campaign(&with_accuracy(4, 1.0, 1.0)).unwrap();
    let mut graph = build_graph(&out.store).unwrap();
    assert!(graph.edges().values().all(|e| e.agreement == 1.0));
    assert!(graph.nodes().values().all(|n| n.intra_agreement == Some(1.0)));
    let rel = compute_reliability(&mut graph, &iterative_weighted()).unwrap();
    assert!(rel.reliabilities.values().all(|&r| r == 1.0));
}

#[test]
fn chance_level_annotators_have_alpha_near_zero() {
    let mut edges = Vec::new();
    for seed in 0..12 {
        let out = simulate_campaign(&with_accuracy(seed, 1.0 / 3.0, 1.0)).unwrap();
        let graph = build_graph(&out.store).unwrap();
        edges.extend(graph.edges().values().map(|e| e.agreement));
    }
    let mean = edges.iter().sum::<f64>() / edges.len() as f64;
    assert!(mean.abs() < 0.05, "mean alpha {mean}");
}

#[test]
fn simulated_plans_pass_audit_and_form_a_ring() {
    for seed in 0..5 {
        let out = simulate_campaign(&SimScenario::standard(seed)).unwrap();
        let report = verify_plan(&out.plan);
        assert!(report.passed(), "{:?}", report.violations);
        let graph = build_graph(&out.store).unwrap();
        assert_eq!(graph.nodes().len(), 6);
        assert_eq!(graph.edges().len(), 12);
        assert!(graph.nodes().keys().all(|id| graph.degree(id) == 4));
    }
}

#[test]
fn five_annotators_form_a_complete_graph() {
    let mut sc = SimScenario::standard(8);
    sc.annotators.truncate(5);
    sc.campaign = CampaignParams::new(5, sc.campaign.time_per_annotator, 60.0, 1.0 / 3.0, 0.5).unwrap();
    let out = simulate_campaign(&sc).unwrap();
    let graph = build_graph(&out.store).unwrap();
    assert_eq!(graph.edges().len(), 10);
}

#[test]
fn same_seed_same_campaign() {
    let a = simulate_campaign(&SimScenario::standard(21)).unwrap();
    let b = simulate_campaign(&SimScenario::standard(21)).unwrap();
    assert_eq!(a.store, b.store);
    assert_eq!(a.ground_truth, b.ground_truth);
    assert_eq!(a.samples, b.samples);
    assert_ne!(a.store, simulate_campaign(&SimScenario::standard(22)).unwrap().store);
}

#[test]
fn best_annotator_outscores_worst_on_average() {
    let (mut best, mut worst, mut rho) = (0.0, 0.0, 0.0);
    let seeds = 10;
    for seed in 0..seeds {
        let sc = SimScenario::standard(seed);
        let out = simulate_campaign(&sc).unwrap();
        let mut graph = build_graph(&out.store).unwrap();
        let rel = compute_reliability(&mut graph, &iterative_weighted())
            .unwrap()
            .reliabilities;
        best += rel["a1"];
        worst += rel[&format!("a{}", STANDARD_ACCURACIES.len())];
        rho += evaluate_recovery(&rel, &sc).unwrap();
    }
    assert!(best > worst, "{best} vs {worst}");
    assert!(rho / seeds as f64 > 0.5);
}
