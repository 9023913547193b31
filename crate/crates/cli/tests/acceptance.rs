//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Run with `cargo test -p greedyq-cli --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use greedyq::diagnostics::{mismatch_trajectory, recursion_bound_check};
use greedyq::distortion::prefix_distortions_1d;
use greedyq::distributions::{Distribution1D, Exponential, Normal, NormalNd, Uniform};
use greedyq::greedy1d::{
    build_greedy_1d, build_greedy_symmetric, forgy_newton, lloyd_fixed_point, Greedy1dConfig, StepSchedule,
};
use greedyq::greedy_nd::{build_greedy_nd, StochasticRunConfig};
use greedyq::qmc::{concatenated_sequence, prefix_star_discrepancies, vdc, vdc_quantization_constants};
use greedyq::{GreedySequence, SeedStream, Solver, NORMAL_1D_LIMIT, ZADOR_J21};
use rand::Rng;

struct Report {
    failed: Vec<usize>,
}

impl Report {
    fn criterion(&mut self, id: usize, title: &str, checks: &[(bool, String)]) {
        let ok = checks.iter().all(|(c, _)| *c);
        println!("{} criterion {id}: {title}", if ok { "PASS" } else { "FAIL" });
        for (c, msg) in checks {
            println!("    [{}] {msg}", if *c { "ok" } else { "not met" });
        }
        if !ok {
            self.failed.push(id);
        }
    }
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

/// `(min, max)` of `scaled[N-1]` over `lo <= N <= hi` with `keep(N)`.
fn window(scaled: &[f64], lo: usize, hi: usize, keep: impl Fn(usize) -> bool) -> (f64, f64) {
    (lo..=hi.min(scaled.len()))
        .filter(|&n| keep(n))
        .map(|n| scaled[n - 1])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn lloyd() -> Greedy1dConfig {
    Greedy1dConfig::default()
}

fn criterion_1(r: &mut Report) -> (GreedySequence, f64) {
    let u = Uniform::new(0.0, 1.0).unwrap();
    let (seq, dt) = timed(|| build_greedy_1d(&u, 2.0, 5000, &lloyd()).unwrap());
    let s = seq.scaled_values();
    let (_, sup) = window(&s, 100, 5000, |_| true);
    let (inf, _) = window(&s, 2500, 5000, |_| true);
    r.criterion(
        1,
        "uniform greedy constants",
        &[
            (within(sup, 0.315, 0.340), format!("max N e_2 over [100, 5000] = {sup:.6} in [0.315, 0.340]")),
            (within(inf, 0.290, 0.305), format!("min N e_2 over [2500, 5000] = {inf:.6} in [0.290, 0.305]")),
            (sup > ZADOR_J21 && inf > ZADOR_J21, format!("both above 1/(2 sqrt 3) = {ZADOR_J21:.6}")),
            (dt < Duration::from_secs(120), format!("build time {dt:.2?} < 2 min")),
        ],
    );
    (seq, sup)
}

fn criterion_2(r: &mut Report) -> GreedySequence {
    let n: Arc<dyn Distribution1D> = Arc::new(Normal::standard());
    let (seq, dt) = timed(|| build_greedy_symmetric(n, 4001, &lloyd()).unwrap());
    let s = seq.scaled_values();
    let odd = |n: usize| n % 2 == 1;
    let (_, sup) = window(&s, 100, 4001, odd);
    let (inf, _) = window(&s, 2000, 4001, odd);
    r.criterion(
        2,
        "N(0,1) symmetric greedy constants (odd levels to 4001)",
        &[
            (
                within(sup, 1.84, 1.95),
                format!("limsup proxy (max over odd N in [100, 4001]) = {sup:.6} in [1.84, 1.95]"),
            ),
            (
                within(inf, 1.62, 1.69),
                format!("liminf proxy (min over odd N in [2000, 4001]) = {inf:.6} in [1.62, 1.69]"),
            ),
            (inf > NORMAL_1D_LIMIT, format!("liminf proxy > sqrt(3/2) pi^(1/4) = {NORMAL_1D_LIMIT:.6}")),
            (dt < Duration::from_secs(300), format!("build time {dt:.2?} < 5 min")),
        ],
    );
    seq
}

fn criterion_3(r: &mut Report) {
    let t = vdc_quantization_constants(1.0, 4096).unwrap();
    r.criterion(
        3,
        "Van der Corput L^1 constants (N <= 4096)",
        &[
            (
                (t.liminf_proxy - 0.25).abs() <= 0.005,
                format!("liminf proxy = {:.6}, target 0.250 +- 0.005", t.liminf_proxy),
            ),
            (
                (t.limsup_proxy - 0.28125).abs() <= 0.006,
                format!("limsup proxy = {:.6}, target 0.28125 +- 0.006", t.limsup_proxy),
            ),
        ],
    );
}

fn criterion_4(r: &mut Report) -> f64 {
    let t = vdc_quantization_constants(2.0, 4096).unwrap();
    r.criterion(
        4,
        "Van der Corput L^2 constants (N <= 4096)",
        &[
            (
                (t.liminf_proxy - 0.28868).abs() <= 0.006,
                format!("liminf proxy = {:.6}, target 0.28868 +- 0.006", t.liminf_proxy),
            ),
            (
                (t.limsup_proxy - 0.48412).abs() <= 0.010,
                format!("limsup proxy = {:.6}, target 0.48412 +- 0.010", t.limsup_proxy),
            ),
        ],
    );
    // cell counting at N = 3 2^(n-1): half of 2^n equal cells halved
    println!("    note: N e_2 -> sqrt(45/384) = {:.6} along N = 3 2^(n-1)", (45.0f64 / 384.0).sqrt());
    t.limsup_proxy
}

fn criterion_5(r: &mut Report) {
    let cfg = StochasticRunConfig { seed: 2024, mc_per_level: 1000, ..Default::default() };
    let (seq, dt) = timed(|| build_greedy_nd(&NormalNd::new(2), 200, &cfg, Solver::RandomizedLloyd).unwrap());
    let s = seq.scaled_values();
    let sup = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = window(&s, 150, 200, |_| true);
    let failures: Vec<usize> = seq.levels.iter().filter(|l| !l.stationary(0.0)).map(|l| l.level).collect();
    r.criterion(
        5,
        "N(0,I_2) randomized Lloyd greedy, N <= 200, M(N) = 1000 N, seed 2024",
        &[
            (sup <= 2.35, format!("sup sqrt(N) e_2 = {sup:.4} <= 2.35")),
            (lo >= 1.9 && hi <= 2.3, format!("window [150, 200] in [{lo:.4}, {hi:.4}], required within [1.9, 2.3]")),
            (failures.is_empty(), format!("stationarity failures: {failures:?}")),
            (dt < Duration::from_secs(900), format!("build time {dt:.2?} < 15 min")),
        ],
    );
}

/// `|a_N - E(X | X in W_N)|` at every level, from the prefix geometry alone.
fn max_centroid_gap(dist: &dyn Distribution1D, seq: &GreedySequence) -> f64 {
    let (lo, hi) = dist.support();
    let mut sorted: Vec<f64> = Vec::new();
    let mut worst: f64 = 0.0;
    for &a in &seq.points {
        let pos = sorted.partition_point(|&v| v < a);
        sorted.insert(pos, a);
        let l = if pos == 0 { lo } else { 0.5 * (sorted[pos - 1] + a) };
        let r = sorted.get(pos + 1).map_or(hi, |&b| 0.5 * (a + b));
        let c = dist.conditional_mean(l, r).expect("cell has mass");
        worst = worst.max((a - c).abs());
    }
    worst
}

fn criterion_6(r: &mut Report, uniform: &GreedySequence, normal_sym: &GreedySequence) {
    let u = Uniform::new(0.0, 1.0).unwrap();
    let n = Normal::standard();
    let e = Exponential::new(1.0).unwrap();
    let normal = build_greedy_1d(&n, 2.0, 1000, &lloyd()).unwrap();
    let expo = build_greedy_1d(&e, 2.0, 1000, &lloyd()).unwrap();
    let sequences: [(&str, &dyn Distribution1D, &GreedySequence); 4] =
        [("U[0,1]", &u, uniform), ("N(0,1) symmetric", &n, normal_sym), ("N(0,1)", &n, &normal), ("Exp(1)", &e, &expo)];
    let mut checks = Vec::new();
    for (name, dist, seq) in sequences {
        let v = seq.values();
        let bad = v.windows(2).position(|w| w[1] >= w[0]);
        checks.push((
            bad.is_none(),
            format!("{name}: e_2 strictly decreasing over {} levels (first violation: {bad:?})", v.len()),
        ));
        let gap = max_centroid_gap(dist, seq);
        checks.push((gap <= 1e-9, format!("{name}: max |a_N - centroid(W_N)| = {gap:.2e} <= 1e-9")));
    }
    for (name, dist, seq) in
        [("U[0,1]", &u as &dyn Distribution1D, uniform), ("N(0,1)", &n, &normal), ("Exp(1)", &e, &expo)]
    {
        let len = seq.len();
        let mut worst: f64 = 0.0;
        for k in 0..20 {
            let level = 2 + k * (len - 2) / 19;
            let st = &seq.levels[level - 1];
            let (l, rr) = st.bracket.expect("1-D level");
            let a = lloyd_fixed_point(dist, l, rr, st.start[0], 1e-13, 100_000).unwrap().a;
            let b = forgy_newton(dist, l, rr, st.start[0], StepSchedule::Newton, 1e-13, 100_000).unwrap().a;
            worst = worst.max((a - b).abs()).max((a - seq.points[level - 1]).abs());
        }
        checks.push((worst <= 1e-8, format!("{name}: Lloyd vs Forgy at 20 levels, max gap {worst:.2e} <= 1e-8")));
    }
    r.criterion(6, "monotonicity and stationarity", &checks);
}

fn criterion_7(r: &mut Report) {
    let laws: [(&str, Box<dyn Distribution1D>); 3] = [
        ("U[0,1]", Box::new(Uniform::new(0.0, 1.0).unwrap())),
        ("N(0,1)", Box::new(Normal::standard())),
        ("Exp(1)", Box::new(Exponential::new(1.0).unwrap())),
    ];
    let mut rng = SeedStream::new(7).rng(0);
    let mut checks = Vec::new();
    for (name, d) in &laws {
        let seq = build_greedy_1d(d.as_ref(), 2.0, 10, &lloyd()).unwrap();
        let (slo, shi) = d.support();
        let mut worst: f64 = 0.0;
        for level in 2..=10 {
            let (l, rr) = seq.levels[level - 1].bracket.unwrap();
            let lo = if l.is_finite() {
                l
            } else if slo.is_finite() {
                slo
            } else {
                rr - 4.0
            };
            let hi = if rr.is_finite() {
                rr
            } else if shi.is_finite() {
                shi
            } else {
                l + 4.0
            };
            for _ in 0..5 {
                let start = lo + (hi - lo) * rng.random_range(0.01..0.99);
                let a = lloyd_fixed_point(d.as_ref(), l, rr, start, 1e-13, 100_000).unwrap().a;
                worst = worst.max((a - seq.points[level - 1]).abs());
            }
        }
        checks
            .push((worst <= 1e-8, format!("{name}: 5 random starts at levels 2..10, max spread {worst:.2e} <= 1e-8")));
    }
    r.criterion(7, "fixed-point uniqueness", &checks);
}

fn criterion_8(r: &mut Report) {
    let mut checks = Vec::new();
    for (a1, c, rho) in [(1.0, 0.5, 1.0), (1.0, 0.1, 2.0), (0.5, 0.3, 0.5)] {
        let short = recursion_bound_check(a1, c, rho, 100_000).unwrap();
        let long = recursion_bound_check(a1, c, rho, 1_000_000).unwrap();
        let drift = (long.k - short.k).abs() / long.k;
        checks.push((
            long.k.is_finite() && long.plateau && drift < 0.01,
            format!(
                "(A1, C, rho) = ({a1}, {c}, {rho}): K(1e5) = {:.6}, K(1e6) = {:.6}, drift {drift:.2e} < 1%",
                short.k, long.k
            ),
        ));
    }
    r.criterion(8, "recursion lemma", &checks);
}

fn criterion_9(r: &mut Report, uniform: &GreedySequence) {
    let u = Uniform::new(0.0, 1.0).unwrap();
    let mut checks = Vec::new();
    for q in [2.5, 3.0] {
        let m = mismatch_trajectory(&u, uniform, q).unwrap();
        let (_, late) = window(&m, 2500, 5000, |_| true);
        let (_, early) = window(&m, 500, 1000, |_| true);
        checks.push((late <= 1.1 * early, format!("q = {q}: max over [2500, 5000] = {late:.6} <= 1.1 x {early:.6}")));
    }
    r.criterion(9, "distortion mismatch", &checks);
}

fn criterion_10(r: &mut Report, greedy_limsup: f64, vdc_l2_limsup: f64) {
    let u = Uniform::new(0.0, 1.0).unwrap();
    let v = vdc(2, 1024).unwrap();
    let e1 = prefix_distortions_1d(&u, &v, 1.0).unwrap();
    let ds = prefix_star_discrepancies(&v).unwrap();
    let bad: Vec<usize> = e1.iter().zip(&ds).enumerate().filter(|(_, (e, d))| e > d).map(|(i, _)| i + 1).collect();
    let mut c = concatenated_sequence(&u, 13).unwrap();
    c.truncate(4096);
    let e2 = prefix_distortions_1d(&u, &c, 2.0).unwrap();
    let cmax = e2.iter().enumerate().map(|(i, e)| (i + 1) as f64 * e).fold(0.0, f64::max);
    r.criterion(
        10,
        "QMC dominance",
        &[
            (bad.is_empty(), format!("e_1 <= D*_N for VdC prefixes N <= 1024 (violations: {bad:?})")),
            (cmax <= 0.578, format!("concatenated sequence max N e_2 over N <= 4096 = {cmax:.6} <= 0.578")),
            (
                greedy_limsup < vdc_l2_limsup,
                format!("greedy limsup proxy {greedy_limsup:.6} < VdC L^2 limsup proxy {vdc_l2_limsup:.6}"),
            ),
        ],
    );
}

fn run_cli(config: &Path, threads: usize) -> Result<serde_json::Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_greedyq"))
        .arg("run")
        .arg(config)
        .env("GREEDYQ_THREADS", threads.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let dir = config.parent().unwrap().join(format!("out-{}", config.file_stem().unwrap().to_string_lossy()));
    let text = std::fs::read_to_string(dir.join("summary.json")).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn criterion_11(r: &mut Report) {
    let tmp = tempfile::tempdir().unwrap();
    let mut checks = Vec::new();
    for solver in ["rlloyd", "clvq"] {
        let path = tmp.path().join(format!("{solver}.toml"));
        std::fs::write(
            &path,
            format!(
                "experiment = \"greedy_nd_normal2\"\nsolver = \"{solver}\"\nn_max = 24\nseed = 99\nmc_per_level = 400\neval_samples = 200000\noutput_dir = \"out-{solver}\"\n"
            ),
        )
        .unwrap();
        let runs: Vec<(usize, Result<serde_json::Value, String>)> =
            [1, 3, 8].into_iter().map(|t| (t, run_cli(&path, t))).collect();
        let base = match &runs[0].1 {
            Ok(v) => v["results"].as_object().cloned().unwrap_or_default(),
            Err(e) => {
                checks.push((false, format!("{solver}: run with 1 thread failed: {e}")));
                continue;
            }
        };
        for (t, run) in &runs[1..] {
            match run {
                Ok(v) => {
                    let other = v["results"].as_object().cloned().unwrap_or_default();
                    let worst = base
                        .iter()
                        .map(|(k, a)| match (a.as_f64(), other.get(k).and_then(|b| b.as_f64())) {
                            (Some(a), Some(b)) => (a - b).abs(),
                            _ => f64::INFINITY,
                        })
                        .fold(0.0, f64::max);
                    let same_keys = base.len() == other.len() && !base.is_empty();
                    checks.push((
                        same_keys && worst <= 1e-10,
                        format!("{solver}: {} summary values, GREEDYQ_THREADS=1 vs {t}: max difference {worst:.1e} <= 1e-10", base.len()),
                    ));
                }
                Err(e) => checks.push((false, format!("{solver}: run with {t} threads failed: {e}"))),
            }
        }
    }
    r.criterion(11, "reproducibility across worker counts", &checks);
}

fn main() {
    let mut r = Report { failed: Vec::new() };
    let (uniform, greedy_limsup) = criterion_1(&mut r);
    let normal_sym = criterion_2(&mut r);
    criterion_3(&mut r);
    let vdc_limsup = criterion_4(&mut r);
    criterion_5(&mut r);
    criterion_6(&mut r, &uniform, &normal_sym);
    criterion_7(&mut r);
    criterion_8(&mut r);
    criterion_9(&mut r, &uniform);
    criterion_10(&mut r, greedy_limsup, vdc_limsup);
    criterion_11(&mut r);
    if r.failed.is_empty() {
        println!("acceptance: all 11 criteria PASS");
    } else {
        println!("acceptance: FAILED criteria {:?}", r.failed);
        std::process::exit(1);
    }
}
