mod common;

use common::*;
use rand::Rng;
use twostage::glm::{fit_interaction_pair, fit_logistic, vif, Design, FitOptions};
use twostage::ingest::{Column, Frame};
use twostage::metrics::{auc, ks};
use twostage::prep::{apply_woe, fit_woe_with, woe_value};
use twostage::tinynet::{loss, loss_and_gradient, TinyNet};
use twostage::varclust::{cluster_variables, one_minus_r2_ratio, select_representatives};

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

#[test]
fn logistic_matches_coordinate_ascent() {
    let mut r = rng(11);
    let mut checked = 0;
    while checked < 20 {
        let n = r.random_range(40..=100);
        let p = r.random_range(1..=3);
        let x: Vec<Vec<f64>> = (0..p).map(|_| normals(n, &mut r)).collect();
        let beta: Vec<f64> = (0..=p).map(|_| r.random_range(-1.0..1.0)).collect();
        let eta: Vec<f64> = (0..n)
            .map(|i| beta[0] + (0..p).map(|j| beta[j + 1] * x[j][i]).sum::<f64>())
            .collect();
        let y = draw_labels(&eta, &mut r);
        let design = Design::from_columns(&names(p), &x).unwrap();
        let Ok(model) = fit_logistic(&design, &y, &FitOptions::default()) else {
            continue;
        };
        if !model.is_reliable() {
            continue;
        }
        let reference = coordinate_ascent_mle(&x, &y);
        for (a, b) in model.coefficients.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-6, "{:?} vs {reference:?}", model.coefficients);
        }
        checked += 1;
    }
}

#[test]
fn logistic_matches_oracle_on_fifty_by_three() {
    let mut r = rng(5);
    let x: Vec<Vec<f64>> = (0..3).map(|_| normals(50, &mut r)).collect();
    let eta: Vec<f64> = (0..50).map(|i| 0.3 + 0.8 * x[0][i] - 0.5 * x[1][i]).collect();
    let y = draw_labels(&eta, &mut r);
    let model = fit_logistic(&Design::from_columns(&names(3), &x).unwrap(), &y, &FitOptions::default()).unwrap();
    let reference = coordinate_ascent_mle(&x, &y);
    for (a, b) in model.coefficients.iter().zip(&reference) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn interaction_p_value_null_and_power() {
    let mut r = rng(21);
    let n = 5000;
    let mut null_p = Vec::new();
    let mut hits = 0;
    let reps = 200;
    for _ in 0..reps {
        let a = normals(n, &mut r);
        let b = normals(n, &mut r);
        let eta0: Vec<f64> = (0..n).map(|i| -0.2 + 0.5 * a[i] - 0.4 * b[i]).collect();
        let y0 = draw_labels(&eta0, &mut r);
        null_p.push(fit_interaction_pair(&a, &b, &y0, &FitOptions::default()).unwrap().p_value);
        let eta1: Vec<f64> = (0..n).map(|i| eta0[i] + a[i] * b[i]).collect();
        let y1 = draw_labels(&eta1, &mut r);
        if fit_interaction_pair(&a, &b, &y1, &FitOptions::default()).unwrap().p_value < 0.01 {
            hits += 1;
        }
    }
    null_p.sort_by(f64::total_cmp);
    let median = 0.5 * (null_p[reps / 2 - 1] + null_p[reps / 2]);
    assert!((0.35..=0.65).contains(&median), "null median {median}");
    assert!(hits as f64 >= 0.95 * reps as f64, "power {hits}/{reps}");
}

#[test]
fn auc_and_ks_match_brute_force() {
    let mut r = rng(3);
    for _ in 0..50 {
        let n = r.random_range(2..=500);
        let levels = r.random_range(2..=40);
        let scores: Vec<f64> = (0..n).map(|_| r.random_range(0..levels) as f64 / levels as f64).collect();
        let mut labels: Vec<u8> = (0..n).map(|_| u8::from(r.random_bool(0.4))).collect();
        labels[0] = 1;
        labels[1] = 0;
        assert_eq!(auc(&scores, &labels).unwrap(), concordance_auc(&scores, &labels));
        assert_eq!(ks(&scores, &labels).unwrap(), sweep_ks(&scores, &labels));
    }
}

#[test]
fn woe_encoding_has_unit_slope() {
    let mut r = rng(8);
    let mut checked = 0;
    while checked < 20 {
        let n = r.random_range(300..=2000);
        let x = normals(n, &mut r);
        let slope = r.random_range(-2.0..2.0);
        let eta: Vec<f64> = x.iter().map(|&v| 0.3 + slope * v + 0.5 * v * v).collect();
        let y = draw_labels(&eta, &mut r);
        let frame = Frame::new(
            vec![Column::dense("x", &x), Column::dense("y", &y.iter().map(|&v| f64::from(v)).collect::<Vec<_>>())],
            Some("y".into()),
        )
        .unwrap();
        let enc = fit_woe_with(&frame, &["x".to_string()], 10, 0.0).unwrap();
        if enc.variables[0].bins.iter().any(|b| b.events == 0 || b.nonevents == 0) {
            continue;
        }
        let w = apply_woe(&enc, &frame).unwrap().values_f64("x").unwrap();
        let model = fit_logistic(&Design::from_columns(&["x".to_string()], &[w]).unwrap(), &y, &FitOptions::default()).unwrap();
        let events = y.iter().filter(|&&v| v == 1).count() as f64;
        let base = (events / (n as f64 - events)).ln();
        assert!((model.coefficients[1] - 1.0).abs() < 1e-6, "slope {}", model.coefficients[1]);
        assert!((model.coefficients[0] - base).abs() < 1e-6);
        checked += 1;
    }
}

#[test]
fn woe_two_bin_values() {
    let pos = woe_value(30.0, 10.0, 40.0, 40.0, 2.0, 0.0_f64);
    let neg = woe_value(10.0, 30.0, 40.0, 40.0, 2.0, 0.0_f64);
    assert!((pos - 3.0_f64.ln()).abs() < 1e-12);
    assert!((pos - 1.0986).abs() < 1e-4);
    assert!((neg + 1.0986).abs() < 1e-4);
}

#[test]
fn tinynet_gradient_matches_central_differences() {
    let mut r = rng(13);
    for draw in 0..100 {
        let n = r.random_range(5..=60);
        let hidden = 1 + draw % 3;
        let x1 = normals(n, &mut r);
        let x2 = normals(n, &mut r);
        let y: Vec<u8> = (0..n).map(|_| u8::from(r.random_bool(0.5))).collect();
        let mut net: TinyNet<f64> = TinyNet::random(hidden, ("a".into(), "b".into()), draw as u64);
        let p: Vec<f64> = (0..net.n_params()).map(|_| r.random_range(-2.0..2.0)).collect();
        net.set_params(&p);
        let (l, g) = loss_and_gradient(&net, &x1, &x2, &y);
        assert!((l - net_loss(&p, &x1, &x2, &y)).abs() < 1e-12);
        assert!((l - loss(&net, &x1, &x2, &y)).abs() < 1e-12);
        for k in 0..p.len() {
            let h = 1e-5 * (1.0 + p[k].abs());
            let mut up = p.clone();
            let mut down = p.clone();
            up[k] += h;
            down[k] -= h;
            let numeric = (net_loss(&up, &x1, &x2, &y) - net_loss(&down, &x1, &x2, &y)) / (2.0 * h);
            let rel = (g[k] - numeric).abs() / g[k].abs().max(numeric.abs()).max(1e-3);
            assert!(rel < 1e-6, "param {k}: analytic {} numeric {numeric}", g[k]);
        }
    }
}

#[test]
fn vif_matches_ols() {
    let mut r = rng(17);
    for _ in 0..10 {
        let n = 200;
        let p = r.random_range(2..=5);
        let mut cols: Vec<Vec<f64>> = (0..p).map(|_| normals(n, &mut r)).collect();
        let mix = r.random_range(0.0..0.9);
        for i in 0..n {
            cols[1][i] = mix * cols[0][i] + (1.0 - mix) * cols[1][i];
        }
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let got = vif(&names(p), &refs).unwrap();
        for j in 0..p {
            let others: Vec<&[f64]> = (0..p).filter(|&k| k != j).map(|k| refs[k]).collect();
            let expected = 1.0 / (1.0 - ols_r2(refs[j], &others));
            assert!((got[j] - expected).abs() < 1e-8 * expected, "{j}: {} vs {expected}", got[j]);
        }
    }
}

#[test]
fn averaged_variable_represents_its_cluster() {
    let mut r = rng(2);
    let n = 100;
    let v2 = normals(n, &mut r);
    let v3: Vec<f64> = v2.iter().map(|&v| 0.6 * v + 0.8 * r.sample::<f64, _>(rand_distr::StandardNormal)).collect();
    let v1: Vec<f64> = v2.iter().zip(&v3).map(|(a, b)| 0.5 * (a + b)).collect();
    let names = vec!["v1".to_string(), "v2".to_string(), "v3".to_string()];
    let data = vec![v1.clone(), v2.clone(), v3.clone()];
    let model = cluster_variables(&names, &data, 0.5).unwrap();
    assert_eq!(model.n_clusters(), 1);
    let report = select_representatives(&model, &names, &data).unwrap();
    assert_eq!(report.representatives, vec!["v1".to_string()]);

    // brute force: the first principal component of a single cluster is the
    // best linear summary, so its squared correlation with each member is
    // its R²; v1 must have the largest
    let corr = |a: &[f64], b: &[f64]| {
        let ma = a.iter().sum::<f64>() / n as f64;
        let mb = b.iter().sum::<f64>() / n as f64;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for i in 0..n {
            sab += (a[i] - ma) * (b[i] - mb);
            saa += (a[i] - ma).powi(2);
            sbb += (b[i] - mb).powi(2);
        }
        sab / (saa * sbb).sqrt()
    };
    let total: Vec<f64> = [corr(&v1, &v2), corr(&v1, &v3), corr(&v2, &v3)].to_vec();
    assert!(total[0] > total[2] && total[1] > total[2]);
    let scores: Vec<f64> = report.variables.iter().map(|v| v.r2_own).collect();
    assert!(scores[0] > scores[1] && scores[0] > scores[2]);
}

#[test]
fn ratio_arithmetic() {
    assert!((one_minus_r2_ratio(0.64, 0.1) - 0.4_f64).abs() < 1e-12);
    assert_eq!(one_minus_r2_ratio(1.0_f64, 0.3), 0.0);
    assert_eq!(one_minus_r2_ratio(0.0_f64, 0.0), 1.0);
}
