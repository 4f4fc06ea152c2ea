use effiara_core::labeling::{
    aggregate_soft_labels, annotation_to_soft_label, confidence_to_probability, LabelMapping, LabeledSample, SoftLabel,
};
use effiara_core::{Annotation, LabelSet, Phase};
use proptest::prelude::*;

fn label_set(n: usize) -> LabelSet {
    LabelSet::new((0..n).map(|i| format!("l{i}"))).unwrap()
}

/// `(num_classes, max_confidence, annotation)` with an optional secondary.
fn annotations() -> impl Strategy<Value = (usize, u32, Annotation)> {
    (2usize..=5, 2u32..=7).prop_flat_map(|(n, maxc)| {
        (0..n, 1..=maxc, prop::option::of(0..n)).prop_map(move |(p, c, s)| {
            let mut a = Annotation::new("s", "a", Phase::First, format!("l{p}"), c);
            if let Some(s) = s.filter(|&s| s != p) {
                a = a.with_secondary(format!("l{s}"));
            }
            (n, maxc, a)
        })
    })
}

fn soft_labels(n: usize) -> impl Strategy<Value = SoftLabel> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|raw| {
        let sum: f64 = raw.iter().sum();
        SoftLabel::new(raw.iter().map(|v| v / sum).collect()).unwrap()
    })
}

#[test]
fn probability_endpoints_and_midpoints() {
    for n in 2..=6 {
        assert!((confidence_to_probability(1, n, 5).unwrap() - 1.0 / n as f64).abs() < 1e-12);
        assert!((confidence_to_probability(5, n, 5).unwrap() - 1.0).abs() < 1e-12);
    }
    assert!((confidence_to_probability(3, 2, 5).unwrap() - 0.75).abs() < 1e-12);
    assert!((confidence_to_probability(2, 3, 5).unwrap() - 0.5).abs() < 1e-12);
}

proptest! {
    #[test]
    fn soft_labels_are_distributions((n, maxc, a) in annotations()) {
        let soft = annotation_to_soft_label(&a, &label_set(n), maxc).unwrap();
        prop_assert_eq!(soft.len(), n);
        prop_assert!((soft.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(soft.probs().iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn secondary_never_exceeds_primary((n, maxc, a) in annotations()) {
        let ls = label_set(n);
        let soft = annotation_to_soft_label(&a, &ls, maxc).unwrap();
        let primary = soft.probs()[ls.index_of(&a.primary_label).unwrap()];
        for (i, p) in soft.probs().iter().enumerate() {
            if ls.name(i) != a.primary_label {
                prop_assert!(*p <= primary + 1e-15);
            }
        }
    }

    #[test]
    fn probability_increases_with_confidence(n in 2usize..=8, maxc in 2u32..=9) {
        let ps: Vec<f64> = (1..=maxc).map(|c| confidence_to_probability(c, n, maxc).unwrap()).collect();
        prop_assert!(ps.windows(2).all(|w| w[1] > w[0]));
        prop_assert!((ps[0] - 1.0 / n as f64).abs() < 1e-12);
        prop_assert!((ps[ps.len() - 1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aggregation_ignores_weight_scale(
        (a, b) in (2usize..=5).prop_flat_map(|n| (soft_labels(n), soft_labels(n))),
        wa in 0.1f64..3.0,
        wb in 0.1f64..3.0,
        c in 0.01f64..100.0,
    ) {
        let x = aggregate_soft_labels(&[(&a, wa), (&b, wb)]).unwrap();
        let y = aggregate_soft_labels(&[(&a, c * wa), (&b, c * wb)]).unwrap();
        for (p, q) in x.probs().iter().zip(y.probs()) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn merge_keeps_a_dominant_unmerged_class(
        raw in prop::collection::vec(0.01f64..1.0, 4),
        order in Just([0usize, 1, 2, 3]).prop_shuffle(),
        boost in 0.001f64..2.0,
    ) {
        let [top, source, target, other] = order;
        let mut probs = raw.clone();
        probs[top] = (raw[source] + raw[target]).max(raw[other]) + boost;
        let sum: f64 = probs.iter().sum();
        let soft = SoftLabel::new(probs.iter().map(|p| p / sum).collect()).unwrap();
        let ls = label_set(4);
        let mapping = LabelMapping::from_merges(&ls, &[(ls.name(source).to_string(), ls.name(target).to_string())]).unwrap();
        prop_assert_eq!(soft.argmax(), top);
        let sample = LabeledSample {
            sample_id: "s".into(),
            hard_label: ls.name(top).to_string(),
            soft_label: soft,
            annotator_ids: vec!["a".into()],
            weight: 1.0,
            gold: false,
        };
        let merged = mapping.merge_labeled(&sample).unwrap();
        prop_assert_eq!(merged.hard_label, sample.hard_label);
        prop_assert!((merged.soft_label.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
