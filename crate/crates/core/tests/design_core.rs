use oedkit::design::{apportion, linspace, tensor_grid, DesignMeasure, ExactDesign, Point};
use proptest::prelude::*;

fn measure_strategy() -> impl Strategy<Value = (Vec<Point>, Vec<f64>)> {
    (1usize..8).prop_flat_map(|m| {
        (
            prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), m),
            prop::collection::vec(1e-6f64..1.0, m),
        )
    })
}

proptest! {
    #[test]
    fn construction_normalizes((support, weights) in measure_strategy()) {
        let xi = DesignMeasure::new(support, weights).unwrap();
        let total: f64 = xi.weights().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(xi.weights().iter().all(|w| *w > 0.0));
    }

    #[test]
    fn merge_keeps_mass((support, weights) in measure_strategy(), tol in 0.0f64..1.5) {
        let xi = DesignMeasure::new(support, weights).unwrap();
        let merged = xi.merge_support(tol);
        let total: f64 = merged.weights().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(merged.len() <= xi.len());
        // First moments are preserved by weighted centroids.
        for j in 0..2 {
            let before: f64 = xi.iter().map(|(p, w)| w * p[j]).sum();
            let after: f64 = merged.iter().map(|(p, w)| w * p[j]).sum();
            prop_assert!((before - after).abs() <= 1e-12);
        }
    }

    #[test]
    fn rounding_exact_weights_is_idempotent(counts in prop::collection::vec(1usize..12, 1..7)) {
        let n: usize = counts.iter().sum();
        let weights: Vec<f64> = counts.iter().map(|&k| k as f64 / n as f64).collect();
        prop_assert_eq!(apportion(&weights, n).unwrap(), counts.clone());
        let support: Vec<Point> = (0..counts.len()).map(|i| vec![i as f64]).collect();
        let xi = DesignMeasure::new(support, weights).unwrap();
        let exact = xi.round_to_exact(n).unwrap();
        let got: Vec<usize> = exact.counts().into_iter().map(|(_, c)| c).collect();
        prop_assert_eq!(got, counts);
    }

    #[test]
    fn apportion_sums_to_n(weights in prop::collection::vec(1e-3f64..1.0, 1..8), extra in 0usize..40) {
        let m = weights.len();
        let total: f64 = weights.iter().sum();
        let w: Vec<f64> = weights.iter().map(|x| x / total).collect();
        let r = apportion(&w, m + extra).unwrap();
        prop_assert_eq!(r.iter().sum::<usize>(), m + extra);
        prop_assert!(r.iter().all(|&k| k >= 1));
    }
}

#[test]
fn measure_json_roundtrip() {
    let xi = DesignMeasure::new(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
    let text = serde_json::to_string(&xi).unwrap();
    assert_eq!(text, r#"{"support":[[-1.0],[1.0]],"weights":[0.5,0.5]}"#);
    let back: DesignMeasure = serde_json::from_str(&text).unwrap();
    assert_eq!(back, xi);
    assert!(serde_json::from_str::<DesignMeasure>(r#"{"support":[[0.0]],"weights":[-1.0]}"#).is_err());
}

#[test]
fn exact_design_json() {
    let d = ExactDesign::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    assert_eq!(serde_json::to_string(&d).unwrap(), r#"{"points":[[0.0,1.0],[1.0,0.0]]}"#);
}

#[test]
fn grids() {
    assert_eq!(linspace(0.0, 1.0, 1), vec![0.5]);
    let g = tensor_grid(&[vec![0.0, 1.0], vec![2.0, 3.0, 4.0]]);
    assert_eq!(g.len(), 6);
    assert!(g.contains(&vec![1.0, 4.0]));
}
