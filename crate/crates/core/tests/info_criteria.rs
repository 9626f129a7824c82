use nalgebra::DMatrix;
use oedkit::design::{DesignMeasure, ExactDesign, Point};
use oedkit::info::{
    asymptotic_covariance, criterion_value, equivalence_certificate, info_matrix, info_matrix_exact, InfoMatrix,
    Criterion,
};
use oedkit::models::{hadamard_design, CompartmentModel, ExponentialDecay, LinearModel, RegressionModel};
use proptest::prelude::*;

fn measure(points: Vec<f64>, weights: Vec<f64>) -> DesignMeasure {
    DesignMeasure::new(points.into_iter().map(|x| vec![x]).collect(), weights).unwrap()
}

fn weighted_d_integral<M: RegressionModel>(model: &M, theta: &[f64], xi: &DesignMeasure) -> f64 {
    let m = info_matrix(model, theta, xi).unwrap();
    let minv = m.inverse().unwrap();
    xi.iter()
        .map(|(u, w)| {
            let g = nalgebra::DVector::from_vec(model.sensitivity(theta, u).unwrap());
            w * (g.transpose() * &minv * &g)[(0, 0)]
        })
        .sum()
}

fn random_measure(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = DesignMeasure> {
    (prop::collection::vec(lo..hi, n), prop::collection::vec(0.05f64..1.0, n)).prop_map(|(p, w)| measure(p, w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn quadratic_information_is_psd(xi in random_measure(3, -1.0, 1.0)) {
        let m = info_matrix(&LinearModel::polynomial(2), &[0.0; 3], &xi).unwrap();
        prop_assert!(m.eigenvalues().min() >= -1e-10);
        prop_assert_eq!(m.matrix().clone(), m.matrix().transpose());
    }

    #[test]
    fn compartment_information_is_psd(xi in random_measure(5, 0.0, 720.0)) {
        let m = info_matrix(&CompartmentModel::standard(), &CompartmentModel::NOMINAL_THETA, &xi).unwrap();
        let scale = m.eigenvalues().max().max(1.0);
        prop_assert!(m.eigenvalues().min() >= -1e-10 * scale);
    }

    #[test]
    fn variance_integrates_to_p_quadratic(xi in random_measure(4, -1.0, 1.0)) {
        let xi = xi.merge_support(1e-3);
        prop_assume!(xi.len() >= 3);
        let m = info_matrix(&LinearModel::polynomial(2), &[0.0; 3], &xi).unwrap();
        prop_assume!(!m.is_singular());
        prop_assert!((weighted_d_integral(&LinearModel::polynomial(2), &[0.0; 3], &xi) - 3.0).abs() <= 1e-10);
    }

    #[test]
    fn variance_integrates_to_p_exponential(xi in random_measure(3, 0.1, 10.0)) {
        prop_assert!((weighted_d_integral(&ExponentialDecay, &[0.7], &xi) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn variance_integrates_to_p_compartment(xi in random_measure(6, 1.0, 720.0)) {
        let xi = xi.merge_support(5.0);
        prop_assume!(xi.len() >= 4);
        let theta = CompartmentModel::NOMINAL_THETA;
        let m = info_matrix(&CompartmentModel::standard(), &theta, &xi).unwrap();
        prop_assume!(!m.is_singular());
        prop_assert!((weighted_d_integral(&CompartmentModel::standard(), &theta, &xi) - 4.0).abs() <= 1e-8);
    }

    #[test]
    fn log_det_is_concave(
        a in random_measure(4, -1.0, 1.0),
        b in random_measure(4, -1.0, 1.0),
        alpha in 0.01f64..0.99,
    ) {
        let model = LinearModel::polynomial(2);
        let m1 = info_matrix(&model, &[0.0; 3], &a).unwrap();
        let m2 = info_matrix(&model, &[0.0; 3], &b).unwrap();
        prop_assume!(!m1.is_singular() && !m2.is_singular());
        let mix = InfoMatrix::new(m1.matrix() * (1.0 - alpha) + m2.matrix() * alpha).unwrap();
        let lhs = mix.log_det().unwrap();
        let rhs = (1.0 - alpha) * m1.log_det().unwrap() + alpha * m2.log_det().unwrap();
        prop_assert!(lhs >= rhs - 1e-12);
        if (m1.matrix() - m2.matrix()).amax() > 1e-6 {
            prop_assert!(lhs > rhs);
        }
    }
}

#[test]
fn weighing_gain() {
    let model = LinearModel::identity(8);
    let theta = [0.0; 8];
    let hadamard = hadamard_design(8).unwrap();
    let m = info_matrix_exact(&model, &theta, &hadamard).unwrap();
    assert!((m.matrix() - DMatrix::<f64>::identity(8, 8)).amax() <= 1e-12);
    let cov = asymptotic_covariance(&m, 1.0, 8).unwrap();
    let one_at_a_time = ExactDesign::new(
        (0..8).map(|i| (0..8).map(|j| if i == j { 1.0 } else { 0.0 }).collect::<Point>()).collect(),
    )
    .unwrap();
    let m1 = info_matrix_exact(&model, &theta, &one_at_a_time).unwrap();
    let cov1 = asymptotic_covariance(&m1, 1.0, 8).unwrap();
    for i in 0..8 {
        assert!((cov[(i, i)] - 1.0 / 8.0).abs() <= 1e-12);
        assert!((cov1[(i, i)] - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn criteria_on_identity() {
    let m = InfoMatrix::identity(3);
    assert_eq!(criterion_value(&Criterion::D, &m).unwrap(), 0.0);
    assert_eq!(criterion_value(&Criterion::A, &m).unwrap(), 3.0);
    assert_eq!(criterion_value(&Criterion::E, &m).unwrap(), 1.0);
}

#[test]
fn suboptimal_measure_fails_certificate() {
    let grid: Vec<Point> = (0..=20).map(|i| vec![-1.0 + 0.1 * i as f64]).collect();
    let xi = measure(vec![-0.5, 0.5], vec![0.5, 0.5]);
    let c = equivalence_certificate(&LinearModel::polynomial(1), &[0.0, 0.0], &xi, &grid, 1e-4).unwrap();
    assert!(!c.certified);
    assert!(c.gap > 0.0);
    let opt = measure(vec![-1.0, 1.0], vec![0.5, 0.5]);
    let c = equivalence_certificate(&LinearModel::polynomial(1), &[0.0, 0.0], &opt, &grid, 1e-4).unwrap();
    assert!(c.certified);
}
