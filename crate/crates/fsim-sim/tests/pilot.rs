use std::time::Instant;

use fsim_sim::{monte_carlo, Model, SimSpec};

#[test]
#[ignore]
fn pilot() {
    for (model, n, reps) in [(Model::M41, 400usize, 10usize)] {
        let spec = SimSpec::new(model, n, 1.5, reps, 20260819);
        let t0 = Instant::now();
        let report = monte_carlo(&spec).unwrap();
        let wall = t0.elapsed();
        println!("=== {model} n={n} R={reps}  wall {:.1}s ===", wall.as_secs_f64());
        println!("{}", report.summary());
        let mean_mt = report.records.iter().map(|r| r.m_tilde as f64).sum::<f64>()
            / report.records.len() as f64;
        let mean_ks = report.records.iter().map(|r| r.k_star as f64).sum::<f64>()
            / report.records.len() as f64;
        let conv = report.records.iter().filter(|r| r.converged).count();
        let mean_iters = report.records.iter().map(|r| r.iterations as f64).sum::<f64>()
            / report.records.len() as f64;
        println!(
            "mean m_tilde {mean_mt:.2}  mean k_star {mean_ks:.2}  converged {conv}/{}  mean iters {mean_iters:.1}",
            report.records.len()
        );
    }
}
