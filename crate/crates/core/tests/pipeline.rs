use std::sync::Arc;

use greedyq::distortion::{
    cubature, distortion_exact_1d, distortion_mc, prefix_distortions_1d, voronoi_weights, voronoi_weights_exact_1d,
};
use greedyq::distributions::{from_spec, Distribution1D, Normal, NormalNd, Uniform};
use greedyq::greedy1d::{build_greedy_1d, build_greedy_symmetric, Greedy1dConfig};
use greedyq::greedy_nd::{build_greedy_nd, StochasticRunConfig};
use greedyq::io::{grid_table, read_grid};
use greedyq::qmc::{concatenated_sequence, scaled_trajectory_uniform, vdc};
use greedyq::{Quantizer, SeedStream, Solver, ZADOR_J21};

fn pool(n: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()
}

#[test]
fn stored_trajectory_matches_independent_evaluation() {
    let n = Normal::standard();
    let seq = build_greedy_1d(&n, 2.0, 200, &Greedy1dConfig::default()).unwrap();
    let pre = prefix_distortions_1d(&n, &seq.points, 2.0).unwrap();
    for (k, (a, b)) in seq.values().iter().zip(&pre).enumerate() {
        assert!((a - b).abs() <= 1e-13 * b, "level {}", k + 1);
    }
    let q = seq.prefix(200).unwrap();
    let exact = distortion_exact_1d(&n, &q, 2.0).unwrap().value;
    assert!((exact - pre[199]).abs() < 1e-15);
}

#[test]
fn monte_carlo_agrees_with_exact_in_one_dimension() {
    let law = from_spec("normal(0,1)").unwrap();
    let seq = build_greedy_1d(law.clone().one_d().unwrap().as_ref(), 2.0, 16, &Greedy1dConfig::default()).unwrap();
    let q = seq.prefix(16).unwrap();
    let mc = distortion_mc(law.nd().as_ref(), &q, 2.0, 400_000, SeedStream::new(5)).unwrap();
    let exact = seq.values()[15];
    assert!((mc.value - exact).abs() <= 5.0 * mc.std_error, "{} vs {exact} (se {})", mc.value, mc.std_error);
}

#[test]
fn voronoi_weights_mc_vs_exact() {
    let law = from_spec("exponential(2)").unwrap();
    let one = law.clone().one_d().unwrap();
    let q = Quantizer::from_1d(&[0.1, 0.4, 0.9, 2.0]).unwrap();
    let exact = voronoi_weights_exact_1d(one.as_ref(), &q).unwrap();
    let mc = voronoi_weights(law.nd().as_ref(), &q, 200_000, SeedStream::new(1)).unwrap();
    for (a, b) in exact.weights.iter().zip(&mc.weights) {
        let se = (a * (1.0 - a) / 200_000.0).sqrt();
        assert!((a - b).abs() <= 5.0 * se);
    }
    let mean = cubature(|x| x[0], &q, Some(&exact)).unwrap();
    assert!((mean - 0.5).abs() < 0.1);
}

#[test]
fn symmetric_build_mirrors_points() {
    let n: Arc<dyn Distribution1D> = Arc::new(Normal::standard());
    let sym = build_greedy_symmetric(n.clone(), 101, &Greedy1dConfig::default()).unwrap();
    assert_eq!(sym.points[0], 0.0);
    for k in 0..50 {
        assert_eq!(sym.points[1 + 2 * k], -sym.points[2 + 2 * k]);
    }
    let s = sym.scaled_values();
    assert!(s[100] > 1.5 && s[100] < 2.0);
}

#[test]
fn stochastic_build_is_independent_of_worker_count() {
    let cfg = StochasticRunConfig { seed: 31, mc_per_level: 300, eval_samples: 50_000, ..Default::default() };
    let law = NormalNd::new(2);
    for solver in [Solver::RandomizedLloyd, Solver::Clvq] {
        let a = pool(1).install(|| build_greedy_nd(&law, 12, &cfg, solver).unwrap());
        let b = pool(5).install(|| build_greedy_nd(&law, 12, &cfg, solver).unwrap());
        assert_eq!(a, b, "{solver:?}");
    }
}

#[test]
fn uniform_sequences_versus_zador_constant() {
    let u = Uniform::new(0.0, 1.0).unwrap();
    let greedy = build_greedy_1d(&u, 2.0, 512, &Greedy1dConfig::default()).unwrap().scaled_values();
    let vdc_t = scaled_trajectory_uniform(&vdc(2, 512).unwrap(), 2.0).unwrap();
    let concat = scaled_trajectory_uniform(&concatenated_sequence(&u, 10).unwrap()[..512], 2.0).unwrap();
    for ((g, v), c) in greedy.iter().zip(&vdc_t.scaled).zip(&concat.scaled) {
        assert!(*g >= ZADOR_J21 - 1e-12);
        assert!((v - c).abs() < 1e-12);
    }
}

#[test]
fn grids_round_trip_through_csv() {
    let seq = build_greedy_nd(
        &NormalNd::new(2),
        5,
        &StochasticRunConfig { seed: 3, eval_samples: 10_000, ..Default::default() },
        Solver::RandomizedLloyd,
    )
    .unwrap();
    let dir = tempdir();
    let p = dir.join("grid.csv");
    grid_table(2, &seq.points).write(&p).unwrap();
    assert_eq!(read_grid(&p).unwrap(), (2, seq.points.clone()));
    std::fs::remove_dir_all(dir).unwrap();
}

fn tempdir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("greedyq-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
