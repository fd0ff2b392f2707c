//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if any
//! gating criterion fails.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::{gradient_check, rng, FlGame};
use fedshap::selection::Strategy;
use fedshap::shapley::{exact_shapley, gtg_shapley, GtgConfig, Sampling};
use fedshap::sim::{compare, run, write_run, DataSource, SimConfig, SummaryRow, SvBackend};
use fedshap::stats::spearman;
use fedshap::Result;
use rand::Rng;

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Outcome {
    id: &'static str,
    name: &'static str,
    pass: Option<bool>,
    detail: String,
}

impl Outcome {
    fn line(&self) -> String {
        let tag = match self.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        format!("[{tag}] criterion {} {}: {}", self.id, self.name, self.detail)
    }
}

fn within(elapsed: Duration, limit: Duration) -> String {
    format!("{:.2}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs())
}

fn table_game(r: &mut impl Rng, m: usize) -> Vec<f64> {
    let mut t: Vec<f64> = (0..1usize << m).map(|_| r.random_range(-1.0..1.0)).collect();
    t[0] = 0.0;
    t
}

fn lookup(t: &[f64]) -> impl Fn(&[usize]) -> Result<f64> + '_ {
    move |s: &[usize]| Ok(t[s.iter().fold(0, |m, &k| m | (1 << k))])
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2024);
    let mut worst = 0.0f64;
    for g in 0..200 {
        let m = 2 + g % 5;
        let players: Vec<usize> = (0..m).collect();
        let a = table_game(&mut r, m);
        let b = table_game(&mut r, m);
        let sa = exact_shapley(&lookup(&a), &players).unwrap();
        let sb = exact_shapley(&lookup(&b), &players).unwrap();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let ss = exact_shapley(&lookup(&sum), &players).unwrap();
        worst = worst.max((sa.values().sum::<f64>() - a[(1 << m) - 1]).abs());
        for k in 0..m {
            worst = worst.max((ss[&k] - sa[&k] - sb[&k]).abs());
        }
        // Player 0 null; the two highest players symmetric (when distinct from player 0).
        let (p, q) = (m - 2, m - 1);
        let mut c = a.clone();
        for s in 0..1usize << m {
            if s & 1 == 1 {
                c[s] = c[s & !1];
            }
        }
        for s in (0..1usize << m).filter(|_| p != 0) {
            if s & (1 << p) != 0 && s & (1 << q) == 0 {
                c[s] = c[(s & !(1 << p)) | (1 << q)];
            }
        }
        let sc = exact_shapley(&lookup(&c), &players).unwrap();
        worst = worst.max(sc[&0].abs());
        if p != 0 {
            worst = worst.max((sc[&p] - sc[&q]).abs());
        }
    }
    let two = [0.0, 1.0, 2.0, 4.0];
    let ex = exact_shapley(&lookup(&two), &[0, 1]).unwrap();
    let worked = (ex[&0] - 1.5).abs() < 1e-12 && (ex[&1] - 2.5).abs() < 1e-12;
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(5);
    Outcome {
        id: "1",
        name: "exact-SV oracle suite",
        pass: Some(worst < 1e-9 && worked && elapsed < limit),
        detail: format!(
            "200 games, worst axiom residual {worst:.2e} (tol 1e-9), 2-player example ({:.3}, {:.3}), {}",
            ex[&0],
            ex[&1],
            within(elapsed, limit)
        ),
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut rhos = Vec::new();
    for trial in 0..50 {
        let game = FlGame::random(500 + trial, 4);
        let u = game.utility();
        let players = u.players();
        let exact = exact_shapley(&u, &players).unwrap();
        let tight = GtgConfig {
            epsilon: 1e-9,
            sampling: Sampling::Exhaustive,
            ..GtgConfig::default()
        };
        let rep = gtg_shapley(&u, &players, &tight, &mut rng(trial)).unwrap();
        for k in &players {
            worst = worst.max((rep.round_sv[k] - exact[k]).abs());
        }
        let approx = gtg_shapley(&u, &players, &GtgConfig::default(), &mut rng(trial)).unwrap();
        let e: Vec<f64> = players.iter().map(|k| exact[k]).collect();
        let a: Vec<f64> = players.iter().map(|k| approx.round_sv[k]).collect();
        rhos.push(spearman(&e, &a));
    }
    let mean_rho = rhos.iter().sum::<f64>() / rhos.len() as f64;
    let min_rho = rhos.iter().cloned().fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(120);
    Outcome {
        id: "2",
        name: "GTG vs exact",
        pass: Some(worst < 1e-6 && mean_rho >= 0.9 && elapsed < limit),
        detail: format!(
            "exhaustive max |diff| {worst:.2e} (tol 1e-6); default-settings Spearman mean {mean_rho:.3} (min {min_rho:.3}) over 50 trials (need >= 0.9); {}",
            within(elapsed, limit)
        ),
    }
}

fn criterion_3() -> Outcome {
    let mut cfg = SimConfig::synthetic(Strategy::GreedyFed).with_rounds(20).with_seed(7);
    cfg.sv_backend = SvBackend::Exact;
    let r = run(&cfg).unwrap();
    let total: f64 = r.records.iter().flat_map(|x| x.sv.values()).sum();
    let drop = r.records[0].val_loss_before - r.records.last().unwrap().val_loss_after;
    let err = (total - drop).abs();
    Outcome {
        id: "3",
        name: "additivity telescoping",
        pass: Some(err < 1e-6),
        detail: format!("sum of round SVs {total:.9}, validation loss drop {drop:.9}, |diff| {err:.2e} (tol 1e-6)"),
    }
}

fn cfg(strategy: Strategy, rounds: usize) -> SimConfig {
    let mut c = SimConfig::synthetic(strategy).with_rounds(rounds);
    c.label = Some(format!("{}-{rounds}", strategy.name()));
    c
}

struct Grid {
    greedy: Vec<SummaryRow>,
    fedavg: Vec<SummaryRow>,
    elapsed_base: Duration,
}

/// Rows: T=60, T=20, T=40, sigma 0.1, stragglers 0.9.
fn desk_grid() -> Grid {
    let start = Instant::now();
    let base = compare(&[cfg(Strategy::GreedyFed, 60), cfg(Strategy::FedAvg, 60)], &SEEDS).unwrap();
    let elapsed_base = start.elapsed();
    let mut variants = Vec::new();
    for s in [Strategy::GreedyFed, Strategy::FedAvg] {
        variants.push(cfg(s, 20));
        variants.push(cfg(s, 40));
        let mut noisy = cfg(s, 60);
        noisy.perturb.noise_scale = 0.1;
        noisy.label = Some(format!("{}-sigma", s.name()));
        variants.push(noisy);
        let mut slow = cfg(s, 60);
        slow.perturb.straggler_fraction = 0.9;
        slow.label = Some(format!("{}-straggler", s.name()));
        variants.push(slow);
    }
    let rest = compare(&variants, &SEEDS).unwrap();
    let greedy = std::iter::once(base.rows[0].clone()).chain(rest.rows[..4].iter().cloned()).collect();
    let fedavg = std::iter::once(base.rows[1].clone()).chain(rest.rows[4..].iter().cloned()).collect();
    Grid {
        greedy,
        fedavg,
        elapsed_base,
    }
}

fn pct(x: f64) -> f64 {
    100.0 * x
}

fn criteria_4_to_7(grid: &Grid) -> Vec<Outcome> {
    let (g, f) = (&grid.greedy, &grid.fedavg);
    let limit = Duration::from_secs(600);
    let c4 = Outcome {
        id: "4",
        name: "accuracy ordering",
        pass: Some(g[0].mean > f[0].mean && g[0].std <= f[0].std && grid.elapsed_base < limit),
        detail: format!(
            "GreedyFed {} vs FedAvg {} (need higher mean, std no larger); {}",
            g[0].cell(),
            f[0].cell(),
            within(grid.elapsed_base, limit)
        ),
    };
    let (g_gain, f_gain) = (g[0].mean - g[1].mean, f[0].mean - f[1].mean);
    let c5 = Outcome {
        id: "5",
        name: "timing constraint",
        pass: Some(g[1].mean > f[1].mean && g_gain < f_gain),
        detail: format!(
            "T=20/40/60 GreedyFed {} / {} / {}, FedAvg {} / {} / {}; gain 20->60 {:.2} vs {:.2} points",
            g[1].cell(),
            g[2].cell(),
            g[0].cell(),
            f[1].cell(),
            f[2].cell(),
            f[0].cell(),
            pct(g_gain),
            pct(f_gain)
        ),
    };
    let (g_drop, f_drop) = (g[0].mean - g[3].mean, f[0].mean - f[3].mean);
    let c6 = Outcome {
        id: "6",
        name: "noise robustness",
        pass: Some(g_drop < f_drop),
        detail: format!(
            "sigma=0.1 GreedyFed {} (drop {:.2}), FedAvg {} (drop {:.2})",
            g[3].cell(),
            pct(g_drop),
            f[3].cell(),
            pct(f_drop)
        ),
    };
    let (gs_drop, fs_drop) = (g[0].mean - g[4].mean, f[0].mean - f[4].mean);
    let (gs_inf, fs_inf) = (g[4].std - g[0].std, f[4].std - f[0].std);
    let c7 = Outcome {
        id: "7",
        name: "straggler robustness",
        pass: Some(gs_drop < fs_drop && gs_inf < fs_inf),
        detail: format!(
            "x=0.9 GreedyFed {} (drop {:.2}, std change {:+.2}), FedAvg {} (drop {:.2}, std change {:+.2})",
            g[4].cell(),
            pct(gs_drop),
            pct(gs_inf),
            f[4].cell(),
            pct(fs_drop),
            pct(fs_inf)
        ),
    };
    vec![c4, c5, c6, c7]
}

fn criterion_8() -> Outcome {
    let name = "full-scale MNIST (optional, not gating)";
    let dir = std::env::var_os("FEDSHAP_DATA_DIR").map(|d| PathBuf::from(d).join("mnist"));
    let have_data = dir.as_ref().is_some_and(|d| d.exists());
    if !have_data || std::env::var_os("FEDSHAP_FULL_SCALE").is_none() {
        return Outcome {
            id: "8",
            name,
            pass: None,
            detail: "set FEDSHAP_DATA_DIR (with mnist/) and FEDSHAP_FULL_SCALE=1 to run".into(),
        };
    }
    let mk = |s: Strategy| {
        let mut c = SimConfig::new(DataSource::Mnist { dir: None, train_samples: None }, s).with_clients(300, 3);
        c.rounds = 150;
        c
    };
    let s = compare(&[mk(Strategy::GreedyFed), mk(Strategy::FedAvg)], &SEEDS).unwrap();
    let (g, f) = (&s.rows[0], &s.rows[1]);
    Outcome {
        id: "8",
        name,
        pass: Some((pct(g.mean) - 91.12).abs() <= 3.0 && g.mean > f.mean),
        detail: format!("GreedyFed {} (target 91.12 +- 3), FedAvg {}", g.cell(), f.cell()),
    }
}

fn criterion_9() -> Outcome {
    let mut base = SimConfig::synthetic(Strategy::GreedyFed).with_seed(11);
    base.perturb.noise_scale = 0.05;
    base.perturb.straggler_fraction = 0.5;
    let mut identical = true;
    for strategy in [Strategy::GreedyFed, Strategy::FedAvg, Strategy::PowerOfChoice { d0: None, decay: 0.9 }] {
        let mut c = base.clone();
        c.strategy.kind = strategy;
        let mut bytes = Vec::new();
        for parallel in [true, true, false] {
            c.parallel = parallel;
            let r = run(&c).unwrap();
            let mut echo = r.clone();
            echo.config.parallel = true;
            let dir = tempfile::tempdir().unwrap();
            let out = write_run(dir.path(), &echo).unwrap();
            bytes.push(std::fs::read(out.join("rounds.csv")).unwrap());
        }
        identical &= bytes.windows(2).all(|w| w[0] == w[1]);
    }
    Outcome {
        id: "9",
        name: "determinism",
        pass: Some(identical),
        detail: "rounds.csv byte-identical across repeated parallel runs and a serial run (greedy_fed, fedavg, power_of_choice; noise and stragglers on)".into(),
    }
}

fn criterion_10() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        for mu in [0.0, 0.1, 1.0] {
            worst = worst.max(gradient_check(seed, mu));
        }
    }
    Outcome {
        id: "10",
        name: "gradient correctness",
        pass: Some(worst < 1e-4),
        detail: format!("20 random MLPs, mu in {{0, 0.1, 1}}, worst relative error {worst:.2e} (tol 1e-4)"),
    }
}

#[test]
fn acceptance() {
    let mut outcomes = vec![criterion_1(), criterion_2(), criterion_3()];
    outcomes.extend(criteria_4_to_7(&desk_grid()));
    outcomes.push(criterion_8());
    outcomes.push(criterion_9());
    outcomes.push(criterion_10());
    outcomes.sort_by_key(|o| o.id.parse::<u32>().unwrap());
    // Straight to the stderr handle so the report shows even when output is captured.
    let mut report = String::from("\n");
    for o in &outcomes {
        report.push_str(&o.line());
        report.push('\n');
    }
    std::io::Write::write_all(&mut std::io::stderr(), report.as_bytes()).unwrap();
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| o.id != "8" && o.pass == Some(false))
        .map(|o| o.id)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
