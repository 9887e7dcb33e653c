mod common;

use common::{fixture_dir, probit_data, TestRng};
use industry_cohesion::econometrics::probit::{self, log_likelihood};
use industry_cohesion::econometrics::robust::information_se;
use industry_cohesion::econometrics::{fit_probit, robust_se, Design, Family, GridOptions};
use industry_cohesion::pipeline::{self, RunConfig};
use nalgebra::{DMatrix, DVector};

#[test]
fn robust_and_information_se_agree_under_correct_specification() {
    let mut rng = TestRng::new(11);
    let (x, y) = probit_data(&mut rng, 5000, &[0.2, 0.5, -0.3]);
    let fit = probit::fit(&x, &y).unwrap();
    let rse = robust_se(&x, &y, &fit.beta, None).unwrap();
    let ise = information_se(&x, &y, &fit.beta).unwrap();
    for j in 0..3 {
        let ratio = rse[j] / ise[j];
        assert!((ratio - 1.0).abs() < 0.15, "column {j}: ratio {ratio}");
    }
}

#[test]
fn duplicating_the_sample_shrinks_robust_se_by_sqrt_two() {
    let mut rng = TestRng::new(12);
    let (x, y) = probit_data(&mut rng, 800, &[-0.1, 0.7, 0.4]);
    let fit = probit::fit(&x, &y).unwrap();
    let se = robust_se(&x, &y, &fit.beta, None).unwrap();

    let n = x.nrows();
    let x2 = DMatrix::from_fn(2 * n, 3, |k, j| x[(k % n, j)]);
    let y2: Vec<f64> = y.iter().chain(y.iter()).copied().collect();
    let fit2 = probit::fit(&x2, &y2).unwrap();
    let se2 = robust_se(&x2, &y2, &fit2.beta, None).unwrap();
    for j in 0..3 {
        assert!((fit.beta[j] - fit2.beta[j]).abs() < 1e-8);
        assert!((se[j] / se2[j] - 2f64.sqrt()).abs() < 1e-6);
    }
}

#[test]
fn likelihood_never_decreases_along_the_path() {
    for seed in 0..10 {
        let mut rng = TestRng::new(100 + seed);
        let (x, y) = probit_data(&mut rng, 1000, &[0.3, 1.2, -0.8, 0.1]);
        let fit = probit::fit(&x, &y).unwrap();
        assert!(fit.converged);
        for w in fit.path.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-12 * w[0].abs(),
                "seed {seed}: {} -> {}",
                w[0],
                w[1]
            );
        }
        assert_eq!(*fit.path.last().unwrap(), fit.log_likelihood);
        assert_eq!(log_likelihood(&x, &y, &fit.beta), fit.log_likelihood);
    }
}

/// Rows in fixed-effect groups with a constant outcome are dropped before
/// fitting; the slopes must equal a direct fit on the retained rows.
#[test]
fn pruning_matches_fitting_the_retained_rows() {
    let mut rng = TestRng::new(13);
    let n = 600;
    let groups: Vec<String> = (0..n).map(|k| format!("g{}", k % 12)).collect();
    let z: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let y: Vec<f64> = (0..n)
        .map(|k| {
            let g = k % 12;
            if g == 0 {
                0.0
            } else if g == 1 {
                1.0
            } else if 0.1 * g as f64 - 0.5 + 0.8 * z[k] + rng.normal() > 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let base = DMatrix::from_fn(n, 2, |k, j| if j == 0 { 1.0 } else { z[k] });
    let design = Design::new(vec!["const".into(), "z".into()], base.clone(), y.clone())
        .unwrap()
        .with_factor("g", &groups)
        .unwrap();
    let full = fit_probit(&design).unwrap();
    assert_eq!(full.n_dropped_separation, 100);
    assert_eq!(full.n_obs, 500);

    let keep: Vec<bool> = (0..n).map(|k| k % 12 > 1).collect();
    let kept = design.select_rows(&keep);
    let direct = fit_probit(&kept).unwrap();
    assert_eq!(direct.n_dropped_separation, 0);
    assert!((full.coefficient("z").unwrap() - direct.coefficient("z").unwrap()).abs() < 1e-10);
    assert!(
        (full.term("z").unwrap().robust_se - direct.term("z").unwrap().robust_se).abs() < 1e-10
    );
}

#[test]
fn score_is_numerical_gradient() {
    let mut rng = TestRng::new(14);
    let (x, y) = probit_data(&mut rng, 300, &[0.1, -0.4, 0.9]);
    let beta = DVector::from_vec(vec![0.05, -0.2, 0.6]);
    let g = probit::score(&x, &y, &beta);
    for j in 0..3 {
        let h = 1e-6;
        let mut up = beta.clone();
        let mut down = beta.clone();
        up[j] += h;
        down[j] -= h;
        let fd = (log_likelihood(&x, &y, &up) - log_likelihood(&x, &y, &down)) / (2.0 * h);
        assert!(
            (fd - g[j]).abs() < 1e-6 * g[j].abs().max(1.0),
            "column {j}: {fd} vs {}",
            g[j]
        );
    }
}

fn fixture_run() -> (RunConfig, pipeline::Inputs) {
    let cfg = RunConfig::load(fixture_dir().join("run.toml")).unwrap();
    let inputs = pipeline::load_inputs(&cfg).unwrap();
    (cfg, inputs)
}

#[test]
fn design_rows_equal_hand_count_of_entry_sample() {
    let (cfg, inputs) = fixture_run();
    let (net, _) = pipeline::network_stage(&cfg, &inputs).unwrap();
    let (cube, table) = pipeline::presence_stage(&cfg, &inputs.panel, &net).unwrap();
    let cohesion = pipeline::cohesion_stage(&cfg, &net, &cube).unwrap();
    let periods = cfg.periods().unwrap();
    let spec = industry_cohesion::econometrics::RegressionSpec::new(
        industry_cohesion::econometrics::Outcome::Entry,
        periods[0].clone(),
        vec![],
    );
    let design =
        industry_cohesion::econometrics::build_design(&table, &cohesion, &cube, &spec).unwrap();

    let mut hand = 0;
    for (i, _) in cube.industries().iter().enumerate() {
        for r in 0..cube.regions().len() {
            if !cube.get(i, r, periods[0].base_year).dom {
                hand += 1;
            }
        }
    }
    assert_eq!(design.nrows(), hand);
}

#[test]
fn grid_recovers_the_planted_effect_on_the_fixture() {
    let (cfg, inputs) = fixture_run();
    let (net, _) = pipeline::network_stage(&cfg, &inputs).unwrap();
    let (cube, table) = pipeline::presence_stage(&cfg, &inputs.panel, &net).unwrap();
    let cohesion = pipeline::cohesion_stage(&cfg, &net, &cube).unwrap();
    let cells = industry_cohesion::econometrics::run_specification_grid(
        &table,
        &cohesion,
        &cube,
        &cfg.periods().unwrap(),
        GridOptions::default(),
    );
    let baseline: Vec<_> = cells
        .iter()
        .filter(|c| c.family == Family::WC && c.column == "(1)")
        .collect();
    assert!(!baseline.is_empty());
    for cell in baseline {
        let result = cell.result.as_ref().unwrap();
        let slopes: Vec<_> = result.slopes().map(|t| t.name.as_str()).collect();
        assert_eq!(slopes, ["const", "mne_presence"]);
    }

    let mut hits = 0;
    let mut total = 0;
    for cell in cells.iter().filter(|c| {
        c.family == Family::WC
            && c.column == "(4)"
            && c.spec.outcome == industry_cohesion::econometrics::Outcome::Entry
    }) {
        let term = cell
            .result
            .as_ref()
            .unwrap()
            .term("wc_overlap")
            .unwrap()
            .clone();
        total += 1;
        if (term.estimate - 1.0).abs() < 3.0 * term.robust_se {
            hits += 1;
        }
        assert!(term.estimate > 0.0 && term.p_value < 0.05, "{term:?}");
    }
    assert_eq!(total, 3);
    assert_eq!(hits, total);
}
