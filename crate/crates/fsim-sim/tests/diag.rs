//! Temporary probes (removed before release).

use fsim_core::estimator::{
    basis_design, smoother_matrix, tilde_transform, ProfileContext,
};
use fsim_core::linalg::Mat;
use fsim_core::{estimator, OptimizerConfig, RegressionData};
use fsim_sim::{monte_carlo, replication_data, Model, SimSpec};

/// Profiled objective at fixed beta, minimizing jointly over (alpha, b):
/// least squares on the augmented tilde design [W̃ | B̃] with the pipeline's
/// own knot rule at this beta.
fn joint_objective(data: &RegressionData, config: &OptimizerConfig, beta: &[f64]) -> f64 {
    let ctx = ProfileContext::new(data, config, beta).unwrap();
    let alpha0 = vec![0.0; data.q()];
    let ev = ctx.eval(&alpha0, beta).unwrap();
    let u = data.index_values(beta);
    let lam1 = data.eigenvalues()[0];
    let jpos = data.scores().eigen().positive_count(lam1 * 1e-12);
    let m = config.m.min(jpos).min(data.scores().len());
    let sm = smoother_matrix(data.scores(), m).unwrap();
    let bdes = basis_design(&ev.basis, &u);
    let tilde = tilde_transform(data, &bdes, &sm).unwrap();
    let n = data.n();
    let q = data.q();
    let k = tilde.b.cols();
    let mut aug = Mat::zeros(n, q + k);
    for i in 0..n {
        for j in 0..q {
            aug[(i, j)] = tilde.w[(i, j)];
        }
        for j in 0..k {
            aug[(i, q + j)] = tilde.b[(i, j)];
        }
    }
    // dense normal equations with tiny ridge
    let p = q + k;
    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    for a in 0..p {
        for b in 0..p {
            let mut s = 0.0;
            for i in 0..n {
                s += aug[(i, a)] * aug[(i, b)];
            }
            gram[a][b] = s;
        }
        let mut s = 0.0;
        for i in 0..n {
            s += aug[(i, a)] * tilde.y[i];
        }
        rhs[a] = s;
    }
    let trace: f64 = (0..p).map(|j| gram[j][j]).sum();
    let ridge = 1e-10_f64.max(1e-12 * trace / p as f64);
    for j in 0..p {
        gram[j][j] += ridge;
    }
    // gauss-jordan
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&i, &j| gram[i][col].abs().total_cmp(&gram[j][col].abs()))
            .unwrap();
        gram.swap(col, piv);
        rhs.swap(col, piv);
        let d = gram[col][col];
        for v in gram[col].iter_mut() {
            *v /= d;
        }
        rhs[col] /= d;
        for i in 0..p {
            if i != col {
                let f = gram[i][col];
                if f != 0.0 {
                    for j in 0..p {
                        gram[i][j] -= f * gram[col][j];
                    }
                    rhs[i] -= f * rhs[col];
                }
            }
        }
    }
    let fitted = aug.matvec(&rhs);
    tilde
        .y
        .iter()
        .zip(&fitted)
        .map(|(&y, &f)| (y - f) * (y - f))
        .sum::<f64>()
        / n as f64
}

#[test]
#[ignore]
fn probe_m42_outlier_basins() {
    let spec = SimSpec::new(Model::M42, 100, 1.5, 100, 20260819);
    let config = OptimizerConfig::default();
    let truth = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
    for &r in &[80usize, 53, 50, 47, 52, 57] {
        let (train, _) = replication_data(&spec, r).unwrap();
        let data = train.to_regression_data().unwrap();
        let fit = estimator::fit(&data, &config).unwrap();
        let g_hat = joint_objective(&data, &config, &fit.beta);
        let g_true = joint_objective(&data, &config, &truth);
        println!(
            "rep {r:3}: beta_hat ({:+.3}, {:+.3}, {:+.3})  obj(beta_hat) {:.6}  obj(beta_true) {:.6}  fit.obj {:.6}  {}",
            fit.beta[0],
            fit.beta[1],
            fit.beta[2],
            g_hat,
            g_true,
            fit.objective_value,
            if g_hat < g_true { "WRONG BASIN WINS" } else { "optimizer missed better basin" }
        );
    }
}

#[test]
#[ignore]
fn dump_m41_n200() {
    let spec = SimSpec::new(Model::M41, 200, 1.5, 100, 20260819);
    let rep = monte_carlo(&spec).unwrap();
    let t = 1.0 / 3.0_f64.sqrt();
    let mut rows: Vec<_> = rep
        .records
        .iter()
        .map(|r| (r.replication, r.beta.clone(), r.converged, r.iterations, r.mae))
        .collect();
    rows.sort_by(|a, b| {
        let da: f64 = a.1.iter().map(|v| (v - t).abs()).fold(0.0, f64::max);
        let db: f64 = b.1.iter().map(|v| (v - t).abs()).fold(0.0, f64::max);
        db.partial_cmp(&da).unwrap()
    });
    println!("worst 15 by max |beta_j - true|:");
    for (r, beta, conv, iters, mae) in rows.iter().take(15) {
        let dev: Vec<String> = beta.iter().map(|v| format!("{:+.4}", v - t)).collect();
        println!(
            "  rep {r:3}  dev ({})  conv {conv}  iters {iters}  mae {mae:.3}",
            dev.join(", ")
        );
    }
    let ag = &rep.aggregates;
    println!("bias: {:?}", ag.beta_bias);
    println!("sd:   {:?}", ag.beta_sd);
}

#[test]
#[ignore]
fn dump_m42_n100() {
    let spec = SimSpec::new(Model::M42, 100, 1.5, 100, 20260819);
    let rep = monte_carlo(&spec).unwrap();
    let tb = rep.aggregates.true_beta.clone();
    let mut rows: Vec<_> = rep
        .records
        .iter()
        .map(|r| {
            (
                r.replication,
                r.beta.clone(),
                r.linear_beta.clone(),
                r.converged,
                r.mae,
            )
        })
        .collect();
    rows.sort_by(|a, b| {
        let da: f64 = a
            .1
            .iter()
            .zip(&tb)
            .map(|(v, t)| (v - t).abs())
            .fold(0.0, f64::max);
        let db: f64 = b
            .1
            .iter()
            .zip(&tb)
            .map(|(v, t)| (v - t).abs())
            .fold(0.0, f64::max);
        db.partial_cmp(&da).unwrap()
    });
    println!("true beta: {tb:?}");
    println!("worst 15 by max |beta_j - true|:");
    for (r, beta, lin, conv, mae) in rows.iter().take(15) {
        let dev: Vec<String> = beta
            .iter()
            .zip(&tb)
            .map(|(v, t)| format!("{:+.4}", v - t))
            .collect();
        let ldev: Vec<String> = lin
            .iter()
            .zip(&tb)
            .map(|(v, t)| format!("{:+.4}", v - t))
            .collect();
        println!(
            "  rep {r:3}  dev ({})  linear dev ({})  conv {conv}  mae {mae:.3}",
            dev.join(", "),
            ldev.join(", ")
        );
    }
    let ag = &rep.aggregates;
    println!("profiled sd: {:?}", ag.beta_sd);
    println!("linear sd:   {:?}", ag.linear_beta_sd);
    println!("profiled bias: {:?}", ag.beta_bias);
    println!("linear bias:   {:?}", ag.linear_beta_mean);
}
