use mrbv::energy::{Example1, Example2};
use mrbv::mfunctional::property_suite;
use mrbv::potentials::Potentials;
use mrbv::regimes::{contact_agreement, segment_curve, RegimeLabel, SegmentOptions};
use mrbv::reparam::{arclength_reparam, normalize, ParameterizedCurve};
use mrbv::solver::{integrate, RateParams, SolverConfig};
use mrbv::{Dims, Exec, State};

fn curve_for(model: &dyn mrbv::energy::EnergyModel, alpha: f64, eps: f64, t: (f64, f64), q0: State) -> ParameterizedCurve {
    let pot = Potentials::standard(1, 1);
    let params = RateParams::new(eps, alpha).unwrap();
    let tr = integrate(model, &pot, &params, &SolverConfig::default(), t.0, t.1, &q0).unwrap();
    let eb = tr.energy_balance_residual(&pot, &params, 0, tr.len() - 1).unwrap();
    assert!(eb.relative < 1e-3, "{eb:?}");
    let curve = normalize(&arclength_reparam(&tr).unwrap()).unwrap();
    assert!(curve.normalization_defect() < 1e-6, "{}", curve.normalization_defect());
    curve.resample(2048).unwrap()
}

#[test]
fn example1_alpha_one_pipeline() {
    let curve = curve_for(&Example1, 1.0, 1e-3, (0.0, 1.6), State::scalar(2.0, -1.5));
    let pot = Potentials::standard(1, 1);
    let opts = SegmentOptions::default();
    let (segments, nodes) = segment_curve(&curve, &Example1, &pot, 1.0, &opts, Exec::Parallel).unwrap();
    let labels: Vec<_> = segments.iter().map(|s| s.label).collect();
    assert_eq!(labels, vec![RegimeLabel::VuVz, RegimeLabel::EuRz]);
    assert!(contact_agreement(&segments, &nodes, 5) >= 0.95);
    // the jump ends on the equilibrium line u = z + t with z on the stable boundary
    let q = &curve.q[segments[0].j_b];
    let t = curve.t[segments[0].j_b];
    assert!((q.u[0] - q.z[0] - t).abs() < 0.05, "{q:?} at t = {t}");
}

#[test]
fn sequential_and_parallel_classification_agree() {
    let model = Example2::new();
    let curve = curve_for(&model, 2.0, 1e-3, (-0.2, 1.0), State::scalar(-2.312, -1.2));
    let pot = Potentials::standard(1, 1);
    let opts = SegmentOptions::default();
    let seq = segment_curve(&curve, &model, &pot, 2.0, &opts, Exec::Sequential).unwrap();
    let par = segment_curve(&curve, &model, &pot, 2.0, &opts, Exec::Parallel).unwrap();
    assert_eq!(seq, par);
    let labels: Vec<_> = seq.0.iter().map(|s| s.label).collect();
    assert_eq!(labels, vec![RegimeLabel::EuRz, RegimeLabel::EuVz, RegimeLabel::EuRz]);
}

#[test]
fn sequential_and_parallel_property_suites_agree() {
    let pot = Potentials::standard(2, 2);
    for alpha in [2.0, 1.0, 0.5] {
        let a = property_suite(&pot, Dims::new(2, 2), alpha, 500, 3, Exec::Sequential).unwrap();
        let b = property_suite(&pot, Dims::new(2, 2), alpha, 500, 3, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.min_gap >= -1e-10);
    }
}

#[test]
fn curve_csv_round_trip() {
    let curve = curve_for(&Example1, 2.0, 3e-3, (0.0, 1.0), State::scalar(2.0, -1.5));
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).unwrap();
    let back = ParameterizedCurve::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, curve);
}
