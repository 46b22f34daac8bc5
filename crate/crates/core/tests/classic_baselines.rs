use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twosided::baselines::{
    make_baseline, ridge, stl_fit, tensor_complete, tensor_store, BaselineName, BaselineSpec,
};
use twosided::data::{Dataset, Group, TaskKind};
use twosided::descriptor::DescriptorSchema;
use twosided::linalg::{dot, Matrix};
use twosided::loss::LossKind;
use twosided::model::{Activation, TwoSidedModel};
use twosided::optim::{train, RegKind, TrainConfig};
use twosided::Error;

fn domains(m: usize, d: usize, per: usize, seed: u64) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = DescriptorSchema::atomic("domain", m, false).unwrap();
    let groups = (0..m)
        .map(|g| Group {
            name: format!("d{g}"),
            descriptor: schema.encode(&[g]).unwrap(),
        })
        .collect();
    let mut data = Dataset::new(d, TaskKind::Regression, groups).unwrap();
    let shared: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    for g in 0..m {
        let w: Vec<f64> = shared.iter().map(|s| s + 0.3 * rng.random_range(-1.0..1.0)).collect();
        for _ in 0..per {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = dot(&x, &w) + 0.05 * rng.random_range(-1.0..1.0);
            data.push(x, y, g).unwrap();
        }
    }
    data
}

fn fit(name: BaselineName, data: &Dataset<f64>, epochs: usize) -> (BaselineSpec<f64>, Dataset<f64>, TwoSidedModel<f64>) {
    let spec = make_baseline::<f64>(name, data.groups().len(), data.dim()).unwrap();
    let enc = spec.encode_dataset(data).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.02,
        epochs,
        batch_size: 16,
        ..TrainConfig::default()
    };
    let model = train(&enc, &spec.train_config(&cfg), &spec.structure).unwrap().model;
    (spec, enc, model)
}

#[test]
fn rmtl_schema_and_sum_of_columns() {
    let spec = make_baseline::<f64>(BaselineName::Rmtl, 3, 2).unwrap();
    let z = spec.schema.schema_matrix::<f64>();
    assert_eq!(
        z,
        Matrix::from_rows(&[[1.0, 0.0, 0.0, 1.0], [0.0, 1.0, 0.0, 1.0], [0.0, 0.0, 1.0, 1.0]]).unwrap()
    );

    let data = domains(3, 2, 40, 1);
    let (_, enc, model) = fit(BaselineName::Rmtl, &data, 100);
    let q = model.q();
    for i in 0..3 {
        let w = model.effective_weights(enc.z(i)).unwrap();
        for c in 0..2 {
            assert_eq!(w[c], q[(i, c)] + q[(3, c)]);
        }
    }
}

#[test]
fn feda_replication_and_mask_survive_training() {
    let spec = make_baseline::<f64>(BaselineName::Feda, 3, 2).unwrap();
    let p = spec.structure.fixed_p.as_ref().unwrap();
    assert_eq!(p.shape(), (2, 8));
    // x P is four copies of x: shared block first, then one per domain
    let xp = p.vecmat(&[0.5, -2.0]).unwrap();
    assert_eq!(xp, vec![0.5, -2.0, 0.5, -2.0, 0.5, -2.0, 0.5, -2.0]);

    let data = domains(3, 2, 40, 2);
    let (spec, enc, model) = fit(BaselineName::Feda, &data, 200);
    let mask = spec.structure.q_mask.as_ref().unwrap();
    for (v, mk) in model.q().as_slice().iter().zip(mask.as_slice()) {
        assert!(*mk != 0.0 || *v == 0.0);
    }
    // domain i's model is the shared block plus its own block
    let q = model.q();
    for i in 0..3 {
        let w = model.effective_weights(enc.z(i)).unwrap();
        for c in 0..2 {
            let want = q[(3, c)] + q[(i, (i + 1) * 2 + c)];
            assert!((w[c] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn mtfl_uses_identity_descriptors_and_group_norm() {
    let spec = make_baseline::<f64>(BaselineName::Mtfl, 3, 4).unwrap();
    assert_eq!(spec.schema.schema_matrix::<f64>(), Matrix::identity(3));
    assert_eq!(spec.reg_q.kind, RegKind::L21);
    assert_eq!(spec.structure.activation, Activation::Linear);
}

#[test]
fn gomtl_weights_factorise() {
    let data = domains(4, 5, 30, 3);
    let (spec, _, model) = fit(BaselineName::Gomtl, &data, 100);
    assert!(spec.structure.fixed_p.is_none());
    assert_eq!(spec.reg_p.kind, RegKind::Frobenius);
    assert_eq!(spec.reg_q.kind, RegKind::L1);
    let z = spec.schema.schema_matrix::<f64>();
    let w = model.p().matmul(&z.matmul(model.q()).unwrap().transpose()).unwrap();
    for i in 0..4 {
        let e = model.effective_weights(z.row(i)).unwrap();
        for c in 0..5 {
            assert!((e[c] - w[(c, i)]).abs() <= 1e-10);
        }
    }
}

#[test]
fn unknown_baseline_name_is_rejected() {
    assert!(matches!("SVM".parse::<BaselineName>(), Err(Error::UnknownBaseline(_))));
    assert_eq!("go-mtl".parse::<BaselineName>().unwrap(), BaselineName::Gomtl);
}

/// Gaussian elimination with partial pivoting on `XᵀX + λI`.
fn normal_equations(xs: &[Vec<f64>], ys: &[f64], lambda: f64) -> Vec<f64> {
    let d = xs[0].len();
    let mut a = vec![vec![0.0; d + 1]; d];
    for (x, &y) in xs.iter().zip(ys) {
        for r in 0..d {
            for c in 0..d {
                a[r][c] += x[r] * x[c];
            }
            a[r][d] += x[r] * y;
        }
    }
    for (r, row) in a.iter_mut().enumerate() {
        row[r] += lambda;
    }
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for r in col + 1..d {
            let f = a[r][col] / a[col][col];
            for c in col..=d {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut w = vec![0.0; d];
    for r in (0..d).rev() {
        let s: f64 = (r + 1..d).map(|c| a[r][c] * w[c]).sum();
        w[r] = (a[r][d] - s) / a[r][r];
    }
    w
}

#[test]
fn ridge_matches_normal_equations_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for lambda in [0.0, 0.1, 3.0] {
        let xs: Vec<Vec<f64>> = (0..40).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let ys: Vec<f64> = (0..40).map(|_| rng.random_range(-2.0..2.0)).collect();
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let got = ridge(&refs, &ys, lambda).unwrap();
        let want = normal_equations(&xs, &ys, lambda);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-8, "λ={lambda}: {g} vs {w}");
        }
    }
}

#[test]
fn stl_fits_each_domain_alone() {
    let data = domains(3, 4, 30, 5);
    let models = stl_fit(&data, LossKind::Squared, 0.0, &TrainConfig::default()).unwrap();
    for (g, w) in models.iter().enumerate() {
        let idx = data.indices_of_group(g);
        let xs: Vec<Vec<f64>> = idx.iter().map(|&i| data.instances()[i].x.clone()).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| data.instances()[i].y).collect();
        let want = normal_equations(&xs, &ys, 0.0);
        assert!(w.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-8));
    }
}

#[test]
fn hinge_stl_separates_separable_data() {
    let schema = DescriptorSchema::atomic("domain", 1, false).unwrap();
    let mut data = Dataset::new(
        2,
        TaskKind::Binary,
        vec![Group {
            name: "only".into(),
            descriptor: schema.encode(&[0]).unwrap(),
        }],
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..60 {
        let x: Vec<f64> = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if (x[0] + x[1]).abs() < 0.2 {
            continue;
        }
        let y = if x[0] + x[1] > 0.0 { 1.0 } else { -1.0 };
        data.push(x, y, 0).unwrap();
    }
    let cfg = TrainConfig {
        loss: LossKind::Hinge,
        learning_rate: 0.1,
        epochs: 300,
        momentum: 0.9,
        lr_decay_every: 100,
        ..TrainConfig::default()
    };
    let w = &stl_fit(&data, LossKind::Hinge, 1e-3, &cfg).unwrap()[0];
    let errors = data.instances().iter().filter(|i| dot(&i.x, w) * i.y <= 0.0).count();
    assert_eq!(errors, 0);
}

#[test]
fn completion_leaves_observed_cells_alone() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    // rank-2 truth on a 3x3 grid, two cells hidden, fitted at rank 1
    let u: Vec<Vec<f64>> = (0..2).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let a: Vec<Vec<f64>> = (0..2).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let b: Vec<Vec<f64>> = (0..2).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut models = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            if (i, j) == (1, 2) || (i, j) == (2, 0) {
                continue;
            }
            let w: Vec<f64> = (0..4).map(|d| (0..2).map(|r| u[r][d] * a[r][i] * b[r][j]).sum()).collect();
            models.push((vec![i, j], w));
        }
    }
    let t = tensor_store(&models, &[3, 3]).unwrap();
    assert_eq!(t.observed_mask().iter().filter(|&&o| !o).count(), 2);
    let done = tensor_complete(&t, 1, 200, 1).unwrap();
    for (levels, w) in &models {
        assert_eq!(done.tensor.slice(levels).unwrap(), w.as_slice());
    }
    assert!(done.tensor.slice(&[1, 2]).unwrap().iter().all(|v| v.is_finite()));
}

#[test]
fn completion_handles_sign_changes_across_the_grid() {
    let u = [0.3, -1.2, 0.8, 0.5, -0.4];
    let (a, b) = ([1.0, -1.5], [1.2, -0.8]);
    let cell = |i: usize, j: usize| -> Vec<f64> { u.iter().map(|v| v * a[i] * b[j]).collect() };
    for hide in 0..4 {
        let models: Vec<(Vec<usize>, Vec<f64>)> = (0..4)
            .filter(|&c| c != hide)
            .map(|c| (vec![c / 2, c % 2], cell(c / 2, c % 2)))
            .collect();
        let t = tensor_store(&models, &[2, 2]).unwrap();
        let done = tensor_complete(&t, 1, 500, 0).unwrap();
        let got = done.tensor.slice(&[hide / 2, hide % 2]).unwrap();
        let err = got.iter().zip(cell(hide / 2, hide % 2)).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "hidden cell {hide}: error {err}");
    }
}
