//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain binary
//! so the lines are always printed.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use betaflow::experiments::{
    beta_independence, corollary_comparison, decreasing_with_inversions, minors_equivalence, second_moment,
    triangular_increments, BetaIndependenceConfig, CorollaryConfig, ExperimentReport, InitialMeasureSpec, MinorsConfig,
    MomentConfig, Table, TriangularConfig, INVERSION_BAND,
};
use betaflow::flow::{iterated_derivative, log_monic_eval, randomized_step, run_chain_final, xj_values, RootVector};
use betaflow::measure::{check_interlacing, ks_critical_value, ks_one_sample};
use betaflow::sampling::{dirichlet_weights, InverseTemperature, SeedSpec};

const SEED: u64 = 42;

struct Outcome {
    pass: bool,
    detail: String,
    csv: Vec<String>,
}

fn finite(b: f64) -> InverseTemperature {
    InverseTemperature::Finite(b)
}

fn uniform() -> InitialMeasureSpec {
    InitialMeasureSpec::UniformInterval { a: -1.0, b: 1.0 }
}

fn csvs(r: &ExperimentReport) -> Vec<String> {
    r.tables.iter().map(Table::to_csv).collect()
}

fn column(t: &Table, name: &str) -> usize {
    t.column(name).unwrap_or_else(|| panic!("missing column {name}"))
}

/// `(n, value)` pairs of `value_col` for rows whose beta column equals `beta`.
fn series(t: &Table, beta: &str, value_col: &str) -> Vec<(usize, f64)> {
    let (cn, cb, cv) = (column(t, "n"), column(t, "beta"), column(t, value_col));
    t.rows
        .iter()
        .filter(|r| r[cb] == beta.into())
        .map(|r| (r[cn].as_f64().unwrap() as usize, r[cv].as_f64().unwrap()))
        .collect()
}

fn random_state(rng: &mut ChaCha8Rng, d: usize, with_ties: bool) -> RootVector {
    let mut roots: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    if with_ties && d >= 2 {
        let copies = rng.random_range(1..d);
        for _ in 0..copies {
            let (i, j) = (rng.random_range(0..d), rng.random_range(0..d));
            roots[i] = roots[j];
        }
    }
    RootVector::new(roots).unwrap()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let betas = [
        finite(0.5),
        finite(1.0),
        finite(2.0),
        finite(4.0),
        InverseTemperature::Infinite,
    ];
    let mut failures = Vec::new();
    for inst in 0..500 {
        let d = rng.random_range(1..=12);
        let ties = inst % 3 == 0;
        let state = random_state(&mut rng, d, ties);
        let beta = betas[inst % betas.len()];
        let w = dirichlet_weights(d, beta, &mut rng).unwrap();
        let out = randomized_step(&state, &w).unwrap();
        let (lam, rho) = (state.as_slice(), w.as_slice());

        let distinct = lam.windows(2).all(|p| p[0] < p[1]);
        if !check_interlacing(&state, &out, false).unwrap()
            || (distinct && !check_interlacing(&state, &out, true).unwrap())
        {
            failures.push(format!("#{inst}: interlacing"));
        }
        let weighted: f64 = lam.iter().zip(rho).map(|(l, r)| l * r).sum();
        let amax = lam.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if (out.sum() - (state.sum() - weighted)).abs() > 1e-9 * (1.0 + amax) * d as f64 {
            failures.push(format!("#{inst}: vieta"));
        }
        let mut i = 0;
        while i < d {
            let v = lam[i];
            let r = lam[i..].iter().take_while(|&&x| x == v).count();
            let seen = out.as_slice().iter().filter(|&&x| x == v).count();
            if seen != r - 1 {
                failures.push(format!("#{inst}: multiplicity of {v}: {r} -> {seen}"));
            }
            i += r;
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "500 instances, {} failures {:?}",
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
        csv: Vec::new(),
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for d in 2..=8 {
        for q in 1..=d {
            for _ in 0..50 {
                let state = random_state(&mut rng, d, false);
                let z = state.max().unwrap() + rng.random_range(0.1..3.0);
                let x = xj_values(&state, z, q).unwrap();
                let mean = x.iter().sum::<f64>() / d as f64;
                let flow = log_monic_eval(&iterated_derivative(&state, q).unwrap(), z)
                    .unwrap()
                    .exp();
                let w = dirichlet_weights(d, finite(2.0), &mut rng).unwrap();
                let weighted: f64 = x.iter().zip(w.as_slice()).map(|(a, b)| a * b).sum();
                let stepped = randomized_step(&state, &w).unwrap();
                let flow2 = log_monic_eval(&iterated_derivative(&stepped, q - 1).unwrap(), z)
                    .unwrap()
                    .exp();
                worst = worst.max(rel(mean, flow)).max(rel(weighted, flow2));
                cases += 1;
            }
        }
    }
    Outcome {
        pass: worst < 1e-10,
        detail: format!("{cases} cases, worst relative error {worst:.2e}"),
        csv: Vec::new(),
    }
}

fn criterion_3() -> Outcome {
    let initial = RootVector::new(vec![-1.0, 1.0]).unwrap();
    let mut table = Table::new("flow_root", &["beta", "trial", "root"]);
    let mut stats = Vec::new();
    let arcsine = |x: f64| 0.5 + x.clamp(-1.0, 1.0).asin() / std::f64::consts::PI;
    let uniform_cdf = |x: f64| (0.5 * (x + 1.0)).clamp(0.0, 1.0);
    for (b, beta) in [2.0, 1.0].into_iter().enumerate() {
        let roots: Vec<f64> = (0..10_000u64)
            .map(|t| {
                let s =
                    run_chain_final(&initial, 1, finite(beta), SeedSpec::new(SEED, ((b as u64) << 32) | t)).unwrap();
                s.as_slice()[0]
            })
            .collect();
        for (t, &x) in roots.iter().enumerate() {
            table.push(vec![beta.to_string().into(), t.into(), x.into()]);
        }
        let ks = if beta == 2.0 {
            ks_one_sample(&roots, uniform_cdf)
        } else {
            ks_one_sample(&roots, arcsine)
        };
        stats.push(ks);
    }
    Outcome {
        pass: stats.iter().all(|&k| k < 0.02),
        detail: format!(
            "KS beta=2 vs uniform {:.4}, beta=1 vs arcsine {:.4} (limit 0.02)",
            stats[0], stats[1]
        ),
        csv: vec![table.to_csv()],
    }
}

fn criterion_4() -> Outcome {
    let cfg = MinorsConfig {
        initial: uniform(),
        n: 16,
        betas: vec![finite(1.0), finite(2.0)],
        depths: Some(vec![1, 8]),
        trials: 10_000,
        seed: SEED,
    };
    let r = minors_equivalence(&cfg).unwrap();
    let t = r.table("observables").unwrap();
    let (co, ck) = (column(t, "observable"), column(t, "ks_two_sample"));
    let critical = ks_critical_value(10_000);
    let order: Vec<f64> = t
        .rows
        .iter()
        .filter(|row| matches!(&row[co], betaflow::experiments::Cell::Text(s) if s.starts_with("order_stat")))
        .map(|row| row[ck].as_f64().unwrap())
        .collect();
    let worst = order.iter().cloned().fold(0.0, f64::max);
    let failing = order.iter().filter(|&&k| k >= critical).count();
    Outcome {
        pass: failing == 0,
        detail: format!(
            "{} order statistics, max KS {worst:.4}, {failing} at or above {critical:.4}",
            order.len()
        ),
        csv: csvs(&r),
    }
}

fn criterion_5() -> Outcome {
    let cfg = BetaIndependenceConfig {
        initial: uniform(),
        n_grid: vec![250, 500, 1000, 2000],
        taus: vec![0.5],
        betas: vec![finite(1.0), finite(2.0)],
        trials: 20,
        seed: SEED,
        w1_threshold: Some(0.05),
        threshold_n: Some(1000),
    };
    let r = beta_independence(&cfg).unwrap();
    let t = r.table("aggregate").unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for beta in ["1", "2"] {
        let s = series(t, beta, "mean_w1");
        let values: Vec<f64> = s.iter().map(|p| p.1).collect();
        let at_1000 = s.iter().find(|p| p.0 == 1000).unwrap().1;
        pass &= decreasing_with_inversions(&values, 1, INVERSION_BAND) && at_1000 < 0.05;
        detail.push(format!(
            "beta={beta} mean W1 {:?}",
            values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        ));
    }
    Outcome {
        pass,
        detail: detail.join("; "),
        csv: csvs(&r),
    }
}

fn criterion_6() -> Outcome {
    let cfg = CorollaryConfig {
        initial: uniform(),
        n_grid: vec![250, 500, 1000, 2000],
        tau: 0.5,
        betas: vec![finite(1.0), finite(2.0), InverseTemperature::Infinite],
        z: Some(3.0),
        trials: 20,
        seed: SEED,
        threshold: 0.01,
        threshold_n: Some(1000),
    };
    let r = corollary_comparison(&cfg).unwrap();
    let t = r.table("aggregate").unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for beta in ["1", "2"] {
        let s = series(t, beta, "mean_delta_n");
        let values: Vec<f64> = s.iter().map(|p| p.1).collect();
        let at_1000 = s.iter().find(|p| p.0 == 1000).unwrap().1;
        pass &= values.windows(2).all(|w| w[1] < w[0]) && at_1000 < 0.01;
        detail.push(format!(
            "beta={beta} mean delta {:?}",
            values.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>()
        ));
    }
    let trials = r.table("trials").unwrap();
    let inf_exact = series(trials, "inf", "delta_n").iter().all(|p| p.1 == 0.0);
    pass &= inf_exact;
    detail.push(format!("beta=inf exact: {inf_exact}"));
    Outcome {
        pass,
        detail: detail.join("; "),
        csv: csvs(&r),
    }
}

fn criterion_7() -> Outcome {
    let cfg = TriangularConfig {
        initial: uniform(),
        n: 200,
        tau: 0.5,
        betas: vec![finite(1.0)],
        z: Some(3.0),
        delta: 0.1,
        trials: 100,
        seed: SEED,
    };
    let r = triangular_increments(&cfg).unwrap();
    let t = r.table("summary").unwrap();
    let max = t.rows[0][column(t, "max_increment")].as_f64().unwrap();
    let exceed = t.rows[0][column(t, "exceed_count")].as_f64().unwrap();
    Outcome {
        pass: max < 0.1 && exceed == 0.0,
        detail: format!("max increment {max:.4}, exceedances {exceed}"),
        csv: csvs(&r),
    }
}

fn criterion_8() -> Outcome {
    let cfg = MomentConfig {
        initial: InitialMeasureSpec::Semicircle { variance: 1.0 },
        n: 2000,
        tau: 0.5,
        betas: vec![finite(2.0)],
        trials: 10,
        seed: SEED,
        target: Some(0.5),
        tolerance: 0.03,
    };
    let r = second_moment(&cfg).unwrap();
    let t = r.table("trials").unwrap();
    let c = column(t, "second_moment");
    let values: Vec<f64> = t.rows.iter().map(|row| row[c].as_f64().unwrap()).collect();
    let worst = values.iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
    Outcome {
        pass: worst <= 0.03,
        detail: format!(
            "second moments in [{:.4}, {:.4}], max deviation {worst:.4}",
            values.iter().cloned().fold(f64::INFINITY, f64::min),
            values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        ),
        csv: csvs(&r),
    }
}

fn report(id: usize, name: &str, limit: Duration, f: fn() -> Outcome) -> (bool, Vec<String>) {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let pass = out.pass && took < limit;
    println!(
        "criterion {id} {} {name}: {} [{:.1} s, limit {} s]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        limit.as_secs()
    );
    (pass, out.csv)
}

type Criterion = (usize, &'static str, Duration, fn() -> Outcome);

fn main() {
    let secs = Duration::from_secs;
    let reproducible: [Criterion; 6] = [
        (3, "n=2 analytic marginals", secs(5), criterion_3),
        (4, "flow vs minor process at n=16", secs(180), criterion_4),
        (5, "beta-independence decay", secs(300), criterion_5),
        (6, "log comparison", secs(300), criterion_6),
        (7, "triangular increments", secs(600), criterion_7),
        (8, "second moment vs free prediction", secs(600), criterion_8),
    ];

    let mut all = true;
    all &= report(1, "exact algebra", secs(5), criterion_1).0;
    all &= report(2, "triangular identities", secs(30), criterion_2).0;
    let mut first = Vec::new();
    for &(id, name, limit, f) in &reproducible {
        let (pass, csv) = report(id, name, limit, f);
        all &= pass;
        first.push(csv);
    }

    let start = Instant::now();
    let mut mismatched = Vec::new();
    for (&(id, _, _, f), csv) in reproducible.iter().zip(&first) {
        if &f().csv != csv {
            mismatched.push(id);
        }
    }
    let pass9 = mismatched.is_empty();
    println!(
        "criterion 9 {} reproducibility: reran criteria 3-8, byte-identical CSV: {} [{:.1} s]",
        if pass9 { "PASS" } else { "FAIL" },
        if pass9 {
            "all".to_string()
        } else {
            format!("mismatch in {mismatched:?}")
        },
        start.elapsed().as_secs_f64()
    );
    all &= pass9;

    if !all {
        std::process::exit(1);
    }
}
