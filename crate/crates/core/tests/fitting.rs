use gamlss_boost::metrics::{brier_score, default_grid, integrated_brier};
use gamlss_boost::model::CoefficientState;
use gamlss_boost::simulation::{simulate_gaussian, simulate_weibull};
use gamlss_boost::{boost_fit, kfold_cv, split_holdout, Family, FitConfig, FittedModel, Preset};

#[test]
fn f32_fit_tracks_f64_until_a_near_tie() {
    let (d, _) = simulate_gaussian::<f64>(300, 2, 17);
    let cfg = FitConfig::<f64>::new(Family::GaussianLs, Preset::ABl, 100).unwrap();
    let (_, t64) = boost_fit(&d, &cfg).unwrap();
    let cfg32 = FitConfig::<f32>::new(Family::GaussianLs, Preset::ABl, 100).unwrap();
    let (_, t32) = boost_fit(&d.convert::<f32>(), &cfg32).unwrap();
    assert_eq!(t32.records.len(), 100);
    let mut agreed = 0;
    for (a, b) in t64.records.iter().zip(&t32.records) {
        let gap = (a.candidates[0].loss - a.candidates[1].loss).abs();
        if gap <= 4.0 * f32::EPSILON as f64 * a.loss_after {
            break;
        }
        assert_eq!(a.applied, b.applied, "iteration {}", a.iteration);
        assert_eq!(a.candidates[a.applied].covariate, b.candidates[b.applied].covariate);
        agreed += 1;
    }
    assert!(agreed >= 10, "{agreed}");
    let (l64, l32) = (t64.records[99].loss_after, t32.records[99].loss_after as f64);
    assert!((l64 - l32).abs() / l64 < 1e-4, "{l64} vs {l32}");
}

#[test]
fn cv_risk_rises_past_minimum_under_heavy_noise() {
    let replicates = 20u64;
    let mut rising = 0;
    for r in 0..replicates {
        let (d, _) = simulate_gaussian::<f64>(150, 150, 900 + r);
        let cfg = FitConfig::new(Family::GaussianLs, Preset::ABl, 300).unwrap();
        let cv = kfold_cv(&d, &cfg, 5, 300, r).unwrap();
        let at_min = cv.risk_curve[cv.m_stop - 1];
        if cv.m_stop < 300 && cv.risk_curve[299] > at_min {
            rising += 1;
        }
    }
    assert!(rising * 10 >= replicates * 8, "{rising} of {replicates}");
}

#[test]
fn constant_hazard_beats_trivial_baseline() {
    let (d, _) = simulate_weibull::<f64>(400, 0, 31);
    let (train, val) = split_holdout(&d, 0.333, 2).unwrap();
    let offsets = Family::WeibullSs.init_offsets(train.y()).unwrap();
    let model = FittedModel {
        family: Family::WeibullSs,
        offsets,
        coefficients: CoefficientState::zeros(train.p()),
        names: train.names().to_vec(),
        m_stop: 0,
    };
    let grid = default_grid(&val, 100);
    let ibs = integrated_brier(&model, &val, &grid).unwrap();
    assert!(ibs <= 0.25, "{ibs}");
    let t0 = brier_score(&model, &val, 0.0).unwrap();
    assert!(t0.abs() < 1e-12);
}

#[test]
fn informative_weibull_fit_improves_ibs() {
    let (d, _) = simulate_weibull::<f64>(600, 0, 41);
    let (train, val) = split_holdout(&d, 0.333, 3).unwrap();
    let cfg = FitConfig::new(Family::WeibullSs, Preset::ABl, 200).unwrap();
    let (fit, _) = boost_fit(&train, &cfg).unwrap();
    let null = FittedModel {
        family: Family::WeibullSs,
        offsets: Family::WeibullSs.init_offsets(train.y()).unwrap(),
        coefficients: CoefficientState::zeros(train.p()),
        names: train.names().to_vec(),
        m_stop: 0,
    };
    let grid = default_grid(&val, 100);
    let a = integrated_brier(&fit, &val, &grid).unwrap();
    let b = integrated_brier(&null, &val, &grid).unwrap();
    assert!(a < b, "{a} vs {b}");
}
