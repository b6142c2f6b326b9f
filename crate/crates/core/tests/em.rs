use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use skewmix::data::bundled;
use skewmix::densities::{sample_component, ComponentParams, GaussianParams, VgParams};
use skewmix::diagnostics::adjusted_rand_index;
use skewmix::em::*;
use skewmix::init::{run_battery, Assignment, InitBattery, InitKind, InitPartition};
use skewmix::mathcore::digamma;
use skewmix::transforms::{TransGaussianParams, TransformKind, TransformVector};

fn hard(labels: Vec<usize>) -> InitPartition {
    InitPartition {
        id: 0,
        kind: InitKind::KMeans,
        assignment: Assignment::Hard(labels),
    }
}

fn gaussian(mu: &[f64], s: f64) -> ComponentParams {
    let p = mu.len();
    ComponentParams::Gaussian(GaussianParams {
        mu: DVector::from_column_slice(mu),
        sigma: DMatrix::identity(p, p) * s,
    })
}

fn vg(mu: &[f64], alpha: &[f64], gamma: f64) -> ComponentParams {
    let p = mu.len();
    ComponentParams::Vg(VgParams {
        mu: DVector::from_column_slice(mu),
        sigma: DMatrix::identity(p, p),
        alpha: DVector::from_column_slice(alpha),
        gamma,
    })
}

fn stack(parts: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = parts[0].ncols();
    let n: usize = parts.iter().map(|m| m.nrows()).sum();
    let mut out = DMatrix::zeros(n, p);
    let mut r = 0;
    for m in parts {
        out.rows_mut(r, m.nrows()).copy_from(m);
        r += m.nrows();
    }
    out
}

fn iris() -> DMatrix<f64> {
    bundled("iris").unwrap().standardized().matrix
}

#[test]
fn e_step_single_component() {
    let x = iris();
    let c = gaussian(&[0.0; 4], 1.0);
    let e = e_step(&x, &[1.0], std::slice::from_ref(&c)).unwrap();
    assert!(e.responsibilities.iter().all(|&z| z == 1.0));
    let direct: f64 = (0..150).map(|i| c.log_density(x.row(i).transpose().as_slice()).unwrap()).sum();
    assert_relative_eq!(e.loglik, direct, max_relative = 1e-12);
}

#[test]
fn e_step_identical_components_split_evenly() {
    let x = iris();
    let c = vg(&[0.1; 4], &[0.2; 4], 3.0);
    let e = e_step(&x, &[0.5, 0.5], &[c.clone(), c]).unwrap();
    assert!(e.responsibilities.iter().all(|&z| (z - 0.5).abs() < 1e-15));
}

#[test]
fn e_step_matches_direct_densities() {
    let x = DMatrix::from_column_slice(6, 1, &[-2.0, -0.3, 0.0, 0.4, 1.1, 3.5]);
    let comps = [vg(&[-0.5], &[0.7], 1.5), vg(&[1.0], &[-0.4], 4.0)];
    let w = [0.3, 0.7];
    let e = e_step(&x, &w, &comps).unwrap();
    for i in 0..6 {
        let f: Vec<f64> = comps.iter().zip(&w).map(|(c, w)| w * c.log_density(&[x[(i, 0)]]).unwrap().exp()).collect();
        let s: f64 = f.iter().sum();
        for g in 0..2 {
            assert_relative_eq!(e.responsibilities[(i, g)], f[g] / s, max_relative = 1e-12);
        }
    }
}

#[test]
fn gaussian_cm_step_uses_weighted_means() {
    let x = iris();
    let labels: Vec<usize> = (0..150).map(|i| usize::from(i >= 50)).collect();
    let z = DMatrix::from_fn(150, 2, |i, g| f64::from(u8::from(labels[i] == g)));
    let estep = EStep {
        responsibilities: z,
        loglik: 0.0,
        latent: None,
    };
    let prev = vec![gaussian(&[0.0; 4], 1.0), gaussian(&[0.0; 4], 1.0)];
    let (comps, w) = cm_steps(&x, &estep, Family::Gaussian, &prev).unwrap();
    assert_relative_eq!(w[0], 1.0 / 3.0, max_relative = 1e-15);
    let m0 = x.rows(0, 50).row_mean();
    let m1 = x.rows(50, 100).row_mean();
    for j in 0..4 {
        assert_relative_eq!(comps[0].mu()[j], m0[j], epsilon = 1e-12);
        assert_relative_eq!(comps[1].mu()[j], m1[j], epsilon = 1e-12);
    }
}

#[test]
fn gamma_root_at_two() {
    // ln 2 + 1 − ψ(2) + c̄ − ā = 0
    let a_bar = 1.3;
    let c_bar = a_bar - (2f64.ln() + 1.0 - digamma(2.0).unwrap());
    assert!((vg_gamma_update(a_bar, c_bar) - 2.0).abs() < 1e-8);
}

#[test]
fn single_gaussian_closed_form() {
    let x = iris();
    let fit = fit_once(&x, &MixtureSpec::new(Family::Gaussian, 1), &hard(vec![0; 150])).unwrap();
    assert!(fit.converged && fit.iterations == 1);
    let mean = x.row_mean();
    let mut c = x.clone();
    for mut r in c.row_iter_mut() {
        r -= &mean;
    }
    let cov = c.transpose() * &c / 150.0;
    for j in 0..4 {
        assert_relative_eq!(fit.components[0].mu()[j], mean[j], epsilon = 1e-10);
        for k in 0..4 {
            assert_relative_eq!(fit.components[0].sigma()[(j, k)], cov[(j, k)], epsilon = 1e-10);
        }
    }
    assert_eq!(fit.n_params, 4 + 10);
    assert_relative_eq!(fit.bic, 14.0 * 150f64.ln() - 2.0 * fit.loglik, max_relative = 1e-14);
}

#[test]
fn parameter_counts() {
    assert_eq!(count_params(Family::Vg, 2, 4), 39);
    assert_eq!(count_params(Family::Gh, 2, 13), 239);
    assert_eq!(count_params(Family::Power, 2, 3), 25);
}

#[test]
fn bic_values() {
    assert!((bic(-306.81, 37, 150) - 799.01).abs() < 0.01);
    assert!((bic(-114.84, 8, 66) - 263.20).abs() < 0.01);
    assert_eq!(bic(0.0, 0, 66), 0.0);
}

#[test]
fn traces_monotone_and_gamma_floored() {
    let x = iris();
    for family in Family::ALL {
        let labels: Vec<usize> = (0..150).map(|i| (i * 7 + i / 3) % 2).collect();
        let fit = fit_once(&x, &MixtureSpec::new(family, 2), &hard(labels)).unwrap();
        for w in fit.loglik_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8 * w[0].abs(), "{family}: {} -> {}", w[0], w[1]);
        }
        for c in &fit.components {
            if let ComponentParams::Vg(v) = c {
                assert!(v.gamma >= 2.0);
            }
        }
    }
}

#[test]
fn relabelled_start_gives_same_fit() {
    let x = iris();
    let labels: Vec<usize> = (0..150).map(|i| if i < 60 { 0 } else if i < 110 { 1 } else { 2 }).collect();
    let perm = [2usize, 0, 1];
    let relabelled: Vec<usize> = labels.iter().map(|&l| perm[l]).collect();
    for family in Family::ALL {
        let spec = MixtureSpec::new(family, 3);
        let a = fit_once(&x, &spec, &hard(labels.clone())).unwrap();
        let b = fit_once(&x, &spec, &hard(relabelled.clone())).unwrap();
        assert!((a.loglik - b.loglik).abs() < 1e-8, "{family}: {} vs {}", a.loglik, b.loglik);
    }
}

#[test]
fn power_transform_recovered() {
    let p = 2;
    let truth = TransGaussianParams {
        transform: TransformVector::new(TransformKind::Power, vec![0.5, 0.5]).unwrap(),
        mu: DVector::from_vec(vec![1.0, 2.0]),
        sigma: DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.8]),
    };
    let x = sample_component(&ComponentParams::Transformed(truth), 2000, 11).unwrap();
    let fit = fit_once(&x, &MixtureSpec::new(Family::Power, 1), &hard(vec![0; 2000])).unwrap();
    let ComponentParams::Transformed(t) = &fit.components[0] else { panic!() };
    for j in 0..p {
        assert!((t.transform.lambdas[j] - 0.5).abs() < 0.1, "{:?}", t.transform.lambdas);
    }
}

#[test]
fn vg_mixture_recovers_clusters() {
    let a = sample_component(&vg(&[0.0, 0.0], &[0.5, 0.5], 3.0), 500, 1).unwrap();
    let b = sample_component(&vg(&[8.0, -8.0], &[-0.5, 0.5], 3.0), 500, 2).unwrap();
    let x = stack(&[a, b]);
    let truth: Vec<usize> = (0..1000).map(|i| i / 500).collect();
    let battery = InitBattery {
        kmeans_count: 3,
        soft_count: 5,
        hard_per_group: 2,
        use_ward: false,
        true_labels: None,
        master_seed: 3,
    };
    let res = run_battery(&x, &MixtureSpec::new(Family::Vg, 2), &battery).unwrap();
    assert!(adjusted_rand_index(&truth, &res.best.labels()).unwrap() >= 0.95);
}

#[test]
fn too_small_groups_fail() {
    let x = iris();
    let mut labels = vec![0usize; 150];
    labels[0] = 1;
    labels[1] = 1;
    assert!(fit_once(&x, &MixtureSpec::new(Family::Gaussian, 2), &hard(labels)).is_err());
}
