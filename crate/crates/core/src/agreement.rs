//! Nominal Krippendorff's alpha between two raters.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::AnnotationStore;

/// Krippendorff's alpha for nominal data where every unit carries exactly two
/// values, one per rater.
///
/// Each unit contributes the ordered pairs `(a, b)` and `(b, a)` to the
/// coincidence matrix, so with `n = 2 * pairs.len()` pairable values
///
/// ```text
/// D_o = sum_{c != k} o_ck / n
/// D_e = sum_{c != k} n_c * n_k / (n * (n - 1))
/// alpha = 1 - D_o / D_e
/// ```
///
/// When every value is identical `D_e` is zero; this returns `1.0` since no
/// disagreement was observed either.
pub fn krippendorff_alpha_nominal<T: Ord>(pairs: &[(T, T)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    let mut marginals: BTreeMap<&T, u64> = BTreeMap::new();
    let mut disagreeing_units = 0u64;
    for (a, b) in pairs {
        *marginals.entry(a).or_default() += 1;
        *marginals.entry(b).or_default() += 1;
        if a != b {
            disagreeing_units += 1;
        }
    }
    let n = 2 * pairs.len() as u64;
    // sum over c != k of n_c * n_k
    let expected_mass = n * n - marginals.values().map(|m| m * m).sum::<u64>();
    if expected_mass == 0 {
        return Ok(1.0);
    }
    // off-diagonal coincidences: every disagreeing unit adds o_ab and o_ba
    let observed_mass = 2 * disagreeing_units;
    let d_o = observed_mass as f64 / n as f64;
    let d_e = expected_mass as f64 / (n as f64 * (n - 1) as f64);
    Ok(1.0 - d_o / d_e)
}

/// Agreement between two annotators on the primary labels they share.
///
/// For `x != y` the first-phase labels on jointly annotated samples are
/// compared (inter agreement). For `x == y` each first-phase label is
/// compared with the same annotator's re-annotation (intra agreement).
pub fn pairwise_agreement(store: &AnnotationStore, x: &str, y: &str) -> Result<f64> {
    for id in [x, y] {
        if !store.has_annotator(id) {
            return Err(Error::UnknownAnnotator(id.to_string()));
        }
    }
    let pairs: Vec<(&str, &str)> = if x == y {
        store
            .reannotated_pairs(x)
            .into_iter()
            .map(|(a, b)| (a.primary_label.as_str(), b.primary_label.as_str()))
            .collect()
    } else {
        store
            .shared_pairs(x, y)
            .into_iter()
            .map(|(a, b)| (a.primary_label.as_str(), b.primary_label.as_str()))
            .collect()
    };
    if pairs.is_empty() {
        return Err(Error::NoSharedSamples(x.to_string(), y.to_string()));
    }
    krippendorff_alpha_nominal(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Annotation, LabelSet, Phase};
    use alloc::format;
    use alloc::vec;

    #[test]
    fn perfect_agreement_is_one() {
        let alpha = krippendorff_alpha_nominal(&[("A", "A"), ("B", "B"), ("A", "A")]).unwrap();
        assert_eq!(alpha, 1.0);
    }

    #[test]
    fn worked_fixture() {
        // o_AB + o_BA = 2 of 8 values, D_o = 1/4, D_e = 30/56
        let alpha = krippendorff_alpha_nominal(&[("A", "A"), ("A", "B"), ("B", "B"), ("B", "B")]).unwrap();
        let expected = 1.0 - 0.25 / (30.0 / 56.0);
        assert!((alpha - expected).abs() < 1e-12);
        assert!((alpha - 0.5333).abs() < 1e-4);
    }

    #[test]
    fn systematic_disagreement_is_negative() {
        let alpha = krippendorff_alpha_nominal(&[("A", "B"), ("B", "A")]).unwrap();
        assert!(alpha < 0.0);
    }

    #[test]
    fn degenerate_and_empty() {
        assert_eq!(krippendorff_alpha_nominal(&[("A", "A"), ("A", "A")]), Ok(1.0));
        assert_eq!(krippendorff_alpha_nominal::<&str>(&[]), Err(Error::EmptyPairs));
    }

    fn fixture_store() -> AnnotationStore {
        let labels = LabelSet::new(["A", "B"]).unwrap();
        let x = ["A", "A", "B", "B"];
        let y = ["A", "B", "B", "B"];
        let mut anns = vec![];
        for (i, (lx, ly)) in x.iter().zip(y).enumerate() {
            anns.push(Annotation::new(format!("s{i}"), "x", Phase::First, *lx, 4));
            anns.push(Annotation::new(format!("s{i}"), "y", Phase::First, ly, 4));
        }
        for i in 10..20 {
            anns.push(Annotation::new(format!("s{i}"), "x", Phase::First, "A", 4));
            anns.push(Annotation::new(format!("s{i}"), "x", Phase::Reannotation, "A", 4));
        }
        anns.push(Annotation::new("s20", "x", Phase::First, "B", 4));
        anns.push(Annotation::new("s20", "x", Phase::Reannotation, "B", 4));
        anns.push(Annotation::new("s30", "z", Phase::First, "B", 4));
        AnnotationStore::from_annotations(labels, 5, anns).unwrap()
    }

    #[test]
    fn pairwise_on_store() {
        let store = fixture_store();
        let xy = pairwise_agreement(&store, "x", "y").unwrap();
        assert!((xy - 0.5333).abs() < 1e-4);
        assert_eq!(xy, pairwise_agreement(&store, "y", "x").unwrap());
        assert_eq!(pairwise_agreement(&store, "x", "x").unwrap(), 1.0);
        assert_eq!(
            pairwise_agreement(&store, "x", "z"),
            Err(Error::NoSharedSamples("x".into(), "z".into()))
        );
        assert!(matches!(
            pairwise_agreement(&store, "y", "y"),
            Err(Error::NoSharedSamples(..))
        ));
        assert_eq!(
            pairwise_agreement(&store, "x", "nobody"),
            Err(Error::UnknownAnnotator("nobody".into()))
        );
    }
}
