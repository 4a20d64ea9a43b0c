//! Acceptance suite: one test per benchmark criterion, each printing a
//! pass/fail line (visible with `--nocapture`; the test verdicts themselves
//! mirror the lines). Criteria run at their stated tolerances against the
//! shipped study configs.

use std::path::Path;
use std::sync::OnceLock;

use dhem_cli::config::{GmmBlock, ModelKind, RunConfig};
use dhem_cli::datagen::{generate_gmm_data, generate_zip_data};
use dhem_cli::probes::run_probe;
use dhem_cli::study::{run_study, MethodResult};
use dhem_core::diagnostics::{grad_fd_check, monotonicity_audit};
use dhem_core::gmm::{random_init, GmmModel, GmmParams};
use dhem_core::weibull::{aarset, WeibullMixParams, WeibullModel};
use dhem_core::zip::{ZipModel, ZipParams};
use dhem_core::{
    annealed_posterior, barrier_surrogate, delta_dkl, run_variant, MixtureModel, ScheduleConfig,
    Variant,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const JOBS: usize = 2;

fn config_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

struct Clause {
    label: String,
    pass: bool,
}

fn clause(label: impl Into<String>, pass: bool) -> Clause {
    Clause {
        label: label.into(),
        pass,
    }
}

fn report(criterion: &str, clauses: &[Clause]) {
    let ok = clauses.iter().all(|c| c.pass);
    println!("{criterion}: {}", if ok { "PASS" } else { "FAIL" });
    for c in clauses {
        println!("  [{}] {}", if c.pass { "pass" } else { "FAIL" }, c.label);
    }
    assert!(
        ok,
        "{criterion} failed clauses: {:?}",
        clauses.iter().filter(|c| !c.pass).map(|c| c.label.as_str()).collect::<Vec<_>>()
    );
}

fn zip_study() -> &'static Vec<MethodResult> {
    static STUDY: OnceLock<Vec<MethodResult>> = OnceLock::new();
    STUDY.get_or_init(|| {
        let cfg = RunConfig::load(&config_dir().join("zip_table2.cfg")).unwrap();
        assert_eq!(cfg.model, ModelKind::Zip);
        assert_eq!(cfg.replications, 200);
        run_study(&cfg, false, JOBS).unwrap()
    })
}

fn by_method(results: &[MethodResult], v: Variant) -> &MethodResult {
    results.iter().find(|r| r.method == v).unwrap()
}

fn metric_mean(res: &MethodResult, name: &str) -> f64 {
    res.summary
        .metrics
        .iter()
        .find(|(n, _, _)| n == name)
        .map(|(_, mean, _)| *mean)
        .unwrap()
}

#[test]
fn criterion_1_zip_value_reproduction() {
    let results = zip_study();
    let adaptive = by_method(results, Variant::AdaptiveDhem);
    let barrier = by_method(results, Variant::BarrierEm);
    let em = by_method(results, Variant::Em);
    let daem = by_method(results, Variant::Daem);
    let dhem = by_method(results, Variant::Dhem);

    let a_pi = metric_mean(adaptive, "pi_bias");
    let a_lam = metric_mean(adaptive, "lambda_bias");
    let b_pi = metric_mean(barrier, "pi_bias");
    let b_lam = metric_mean(barrier, "lambda_bias");
    let clauses = vec![
        clause(
            format!("adaptive pi bias {a_pi:+.4} within ±0.005 of -0.003"),
            (a_pi - (-0.003)).abs() <= 0.005,
        ),
        clause(
            format!("adaptive lambda bias {a_lam:+.4} within ±0.06 of -0.010"),
            (a_lam - (-0.010)).abs() <= 0.06,
        ),
        clause(
            format!("barrier pi bias {b_pi:+.4} matches adaptive within ±0.002"),
            (b_pi - a_pi).abs() <= 0.002,
        ),
        clause(
            format!("barrier lambda bias {b_lam:+.4} matches adaptive within ±0.002"),
            (b_lam - a_lam).abs() <= 0.002,
        ),
        clause(
            format!(
                "em pi bias {:+.4} within ±0.08 of +0.270",
                metric_mean(em, "pi_bias")
            ),
            (metric_mean(em, "pi_bias") - 0.270).abs() <= 0.08,
        ),
        clause(
            format!(
                "em lambda bias {:+.4} within ±0.8 of +3.171",
                metric_mean(em, "lambda_bias")
            ),
            (metric_mean(em, "lambda_bias") - 3.171).abs() <= 0.8,
        ),
        clause(
            format!(
                "daem pi bias {:+.4} within ±0.05 of -0.431",
                metric_mean(daem, "pi_bias")
            ),
            (metric_mean(daem, "pi_bias") - (-0.431)).abs() <= 0.05,
        ),
        clause(
            format!(
                "dhem pi bias {:+.4} within ±0.05 of -0.431",
                metric_mean(dhem, "pi_bias")
            ),
            (metric_mean(dhem, "pi_bias") - (-0.431)).abs() <= 0.05,
        ),
    ];
    report("criterion 1 (zip value reproduction)", &clauses);
}

#[test]
fn criterion_2_zip_ordering_property() {
    let results = zip_study();
    let adaptive = &by_method(results, Variant::AdaptiveDhem).records;
    let em = &by_method(results, Variant::Em).records;
    let daem = &by_method(results, Variant::Daem).records;
    let mut wins = 0usize;
    let mut total = 0usize;
    for i in 0..adaptive.len() {
        if adaptive[i].error.is_some() || em[i].error.is_some() || daem[i].error.is_some() {
            continue;
        }
        total += 1;
        let a = adaptive[i].metrics[0].abs();
        if a < em[i].metrics[0].abs() && a < daem[i].metrics[0].abs() {
            wins += 1;
        }
    }
    let frac = wins as f64 / total as f64;
    report(
        "criterion 2 (zip ordering property)",
        &[clause(
            format!("adaptive |pi bias| smallest in {frac:.3} of replications (need >= 0.95)"),
            frac >= 0.95,
        )],
    );
}

#[test]
fn criterion_3_gmm_rank_order() {
    let cfg = RunConfig::load(&config_dir().join("gmm_table1.cfg")).unwrap();
    assert_eq!(cfg.model, ModelKind::Gmm);
    assert!(cfg.replications >= 200);
    let results = run_study(&cfg, false, JOBS).unwrap();
    let pi = |v| metric_mean(by_method(&results, v), "pi_l1");
    let mu = |v| metric_mean(by_method(&results, v), "mu_l2");
    let succ = by_method(&results, Variant::AdaptiveDhem).summary.success_rate;
    let clauses = vec![
        clause(
            format!(
                "pi L1: adaptive {:.4} < daem {:.4}",
                pi(Variant::AdaptiveDhem),
                pi(Variant::Daem)
            ),
            pi(Variant::AdaptiveDhem) < pi(Variant::Daem),
        ),
        clause(
            format!(
                "pi L1: adaptive {:.4} < em {:.4}",
                pi(Variant::AdaptiveDhem),
                pi(Variant::Em)
            ),
            pi(Variant::AdaptiveDhem) < pi(Variant::Em),
        ),
        clause(
            format!(
                "mu L2: adaptive {:.4} < dhem {:.4}",
                mu(Variant::AdaptiveDhem),
                mu(Variant::Dhem)
            ),
            mu(Variant::AdaptiveDhem) < mu(Variant::Dhem),
        ),
        clause(
            format!(
                "mu L2: dhem {:.4} < daem {:.4}",
                mu(Variant::Dhem),
                mu(Variant::Daem)
            ),
            mu(Variant::Dhem) < mu(Variant::Daem),
        ),
        clause(
            format!("adaptive success rate {succ:.3} >= 0.90"),
            succ >= 0.90,
        ),
    ];
    report("criterion 3 (gmm rank order)", &clauses);
}

#[test]
fn criterion_4_weibull_table_reproduction() {
    let cfg = RunConfig::load(&config_dir().join("weibull_table3.cfg")).unwrap();
    assert_eq!(cfg.model, ModelKind::Weibull);
    let results = run_study(&cfg, true, 1).unwrap();
    let em = by_method(&results, Variant::Em);
    let barrier = by_method(&results, Variant::BarrierEm);
    let dhem = by_method(&results, Variant::Dhem);
    let adaptive = by_method(&results, Variant::AdaptiveDhem);

    let em_b3 = metric_mean(em, "beta3");
    let a_b1 = metric_mean(adaptive, "beta1");
    let a_b3 = metric_mean(adaptive, "beta3");
    let a_r = adaptive.records[0].final_r;
    let a_logliks: Vec<f64> = adaptive.records[0]
        .trace
        .iter()
        .filter(|t| t.accepted)
        .map(|t| t.loglik)
        .collect();
    let audit = monotonicity_audit(&a_logliks);

    let mut clauses = vec![
        clause(
            format!("em beta3 {em_b3:.3} within 5% of 78.57"),
            (em_b3 - 78.57).abs() <= 0.05 * 78.57,
        ),
        clause(
            format!(
                "em |grad Q(beta1)| {:.2e} and |grad Q(beta3)| {:.2e} below 1e-8",
                metric_mean(em, "grad_q_beta1").abs(),
                metric_mean(em, "grad_q_beta3").abs()
            ),
            metric_mean(em, "grad_q_beta1").abs() < 1e-8
                && metric_mean(em, "grad_q_beta3").abs() < 1e-8,
        ),
    ];
    for (name, res) in [("barrier", barrier), ("dhem", dhem)] {
        let b1 = metric_mean(res, "beta1");
        let g1 = metric_mean(res, "grad_q_beta1");
        clauses.push(clause(
            format!("{name} beta1 {b1:.4} within 0.01 of 1.00"),
            (b1 - 1.00).abs() <= 0.01,
        ));
        clauses.push(clause(
            format!("{name} grad Q(beta1) {g1:.3} within ±0.5 of 2.1"),
            (g1 - 2.1).abs() <= 0.5,
        ));
    }
    clauses.push(clause(
        format!("adaptive beta1 {a_b1:.4} in (0, 1)"),
        a_b1 > 0.0 && a_b1 < 1.0,
    ));
    clauses.push(clause(
        format!("adaptive beta3 {a_b3:.3} within 5% of 78.09"),
        (a_b3 - 78.09).abs() <= 0.05 * 78.09,
    ));
    clauses.push(clause(
        format!("adaptive final r {a_r:.3} within ±0.05 of 0.954"),
        (a_r - 0.954).abs() <= 0.05,
    ));
    clauses.push(clause(
        format!(
            "adaptive observed log-likelihood trace monotone ({} accepted steps)",
            a_logliks.len()
        ),
        audit.pass,
    ));
    report("criterion 4 (weibull table reproduction)", &clauses);
}

#[test]
fn criterion_5_adaptive_monotonicity_suite() {
    let mut clauses = Vec::new();
    let mut config = ScheduleConfig::default();
    config.max_iter = 3000;

    // ZIP: one dataset from the benchmark design, 50 random feasible inits.
    let mut rng = ChaCha8Rng::seed_from_u64(515151);
    let data = generate_zip_data(0.99, 0.3, 2000, &mut rng);
    let zip = ZipModel::new(&data, 0.5);
    let mut worst = 0usize;
    for i in 0..50 {
        let mut r = ChaCha8Rng::seed_from_u64(900 + i);
        let init = ZipParams {
            pi: r.gen_range(0.55..0.95),
            lambda: r.gen_range(0.1..3.0),
        };
        let out = run_variant(&zip, Variant::AdaptiveDhem, init, &config).unwrap();
        let lo: Vec<f64> = out.trace.iter().filter(|t| t.accepted).map(|t| t.loglik).collect();
        if !monotonicity_audit(&lo).pass {
            worst += 1;
        }
    }
    clauses.push(clause(format!("zip: {worst}/50 inits with violations"), worst == 0));

    // GMM: one dataset, adaptive from 50 random feasible inits.
    let truth = GmmBlock::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let data = generate_gmm_data(&truth, 100, &mut rng);
    let gmm = GmmModel::new(data, 3, 0.5);
    let mut worst = 0usize;
    for i in 0..50 {
        let mut r = ChaCha8Rng::seed_from_u64(1700 + i);
        let init = random_init(&gmm, &mut r, 100).unwrap();
        let out = run_variant(&gmm, Variant::AdaptiveDhem, init, &config).unwrap();
        let lo: Vec<f64> = out.trace.iter().filter(|t| t.accepted).map(|t| t.loglik).collect();
        if !monotonicity_audit(&lo).pass {
            worst += 1;
        }
    }
    clauses.push(clause(format!("gmm: {worst}/50 inits with violations"), worst == 0));

    // Weibull on the Aarset data.
    let weib = WeibullModel::new(&aarset());
    let mut worst = 0usize;
    for i in 0..50 {
        let mut r = ChaCha8Rng::seed_from_u64(2900 + i);
        let b1 = r.gen_range(0.05..0.95);
        let b3 = r.gen_range(1.1..6.0);
        let mut init = weib.paper_init([b1, 1.0, b3]);
        let w1: f64 = r.gen_range(0.2..0.4);
        let w2: f64 = r.gen_range(0.2..0.4);
        init.weights = [w1, w2, 1.0 - w1 - w2];
        let out = run_variant(&weib, Variant::AdaptiveDhem, init, &config).unwrap();
        let lo: Vec<f64> = out.trace.iter().filter(|t| t.accepted).map(|t| t.loglik).collect();
        if !monotonicity_audit(&lo).pass {
            worst += 1;
        }
    }
    clauses.push(clause(format!("weibull: {worst}/50 inits with violations"), worst == 0));

    report("criterion 5 (adaptive monotonicity suite)", &clauses);
}

fn identity_residual<M: MixtureModel>(
    model: &M,
    th0: &M::Params,
    th1: &M::Params,
    r: f64,
    xi: f64,
) -> f64 {
    let dl = model.observed_loglik(th1) - model.observed_loglik(th0);
    let dbq = barrier_surrogate(model, th1, th0, r, xi).unwrap()
        - barrier_surrogate(model, th0, th0, r, xi).unwrap();
    let ddkl = delta_dkl(model, th0, th1, r).unwrap();
    let db = model.barrier_value(th1).unwrap() - model.barrier_value(th0).unwrap();
    (dl - dbq - ddkl + xi * db).abs()
}

#[test]
fn criterion_6_identity_suite() {
    let mut clauses = Vec::new();

    let zip = ZipModel::new(&[0, 0, 0, 1, 2, 0, 4, 0], 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let th0 = ZipParams { pi: rng.gen_range(0.55..0.95), lambda: rng.gen_range(0.2..3.0) };
        let th1 = ZipParams { pi: rng.gen_range(0.55..0.95), lambda: rng.gen_range(0.2..3.0) };
        worst = worst.max(identity_residual(&zip, &th0, &th1, rng.gen_range(0.05..=1.0), rng.gen_range(0.0..2.0)));
    }
    clauses.push(clause(format!("zip worst residual {worst:.2e} < 1e-8"), worst < 1e-8));

    let weib = WeibullModel::new(&[0.4, 1.1, 2.7, 5.9, 9.3, 14.0, 21.5]);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let draw = |rng: &mut ChaCha8Rng| {
            let w1: f64 = rng.gen_range(0.2..0.4);
            let w2: f64 = rng.gen_range(0.2..0.4);
            WeibullMixParams {
                weights: [w1, w2, 1.0 - w1 - w2],
                lambdas: [rng.gen_range(0.1..1.5), rng.gen_range(0.05..0.5), rng.gen_range(0.001..0.05)],
                betas: [rng.gen_range(0.2..0.9), 1.0, rng.gen_range(1.2..3.0)],
            }
        };
        let th0 = draw(&mut rng);
        let th1 = draw(&mut rng);
        worst = worst.max(identity_residual(&weib, &th0, &th1, rng.gen_range(0.05..=1.0), rng.gen_range(0.0..2.0)));
    }
    clauses.push(clause(format!("weibull worst residual {worst:.2e} < 1e-8"), worst < 1e-8));

    let gmm_data = vec![
        DVector::from_row_slice(&[0.1, -0.2]),
        DVector::from_row_slice(&[-0.5, 0.4]),
        DVector::from_row_slice(&[0.3, 0.1]),
        DVector::from_row_slice(&[2.8, 2.1]),
        DVector::from_row_slice(&[3.2, 1.7]),
        DVector::from_row_slice(&[2.9, 2.4]),
    ];
    let gmm = GmmModel::new(gmm_data, 2, 0.5);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 100 {
        let draw = |rng: &mut ChaCha8Rng| -> GmmParams {
            let w: f64 = rng.gen_range(0.3..0.7);
            GmmParams {
                weights: vec![w, 1.0 - w],
                means: vec![
                    DVector::from_row_slice(&[rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)]),
                    DVector::from_row_slice(&[rng.gen_range(2.2..3.8), rng.gen_range(1.2..2.8)]),
                ],
                covs: vec![
                    DMatrix::identity(2, 2) * rng.gen_range(0.6..1.4),
                    DMatrix::identity(2, 2) * rng.gen_range(0.6..1.4),
                ],
            }
        };
        let th0 = draw(&mut rng);
        let th1 = draw(&mut rng);
        if !(gmm.is_feasible(&th0) && gmm.is_feasible(&th1)) {
            continue;
        }
        checked += 1;
        worst = worst.max(identity_residual(&gmm, &th0, &th1, rng.gen_range(0.05..=1.0), rng.gen_range(0.0..2.0)));
    }
    clauses.push(clause(format!("gmm worst residual {worst:.2e} < 1e-8"), worst < 1e-8));

    report("criterion 6 (likelihood-change identity)", &clauses);
}

#[test]
fn criterion_7_oracle_equivalence() {
    let mut clauses = Vec::new();

    // ZIP EM fixed points against dense two-stage grid searches. Every toy
    // carries a count >= 2 so the likelihood has an identified interior
    // maximum (all-ones samples sit on the degenerate lambda -> 0 ridge).
    let toys: [&[u64]; 5] = [
        &[0, 0, 2],
        &[0, 1, 0, 2],
        &[0, 0, 0, 3],
        &[0, 1, 1, 2, 0],
        &[0, 0, 1, 0, 2, 1],
    ];
    let mut worst: f64 = 0.0;
    for data in toys {
        let model = ZipModel::new(data, 0.5);
        let mut config = ScheduleConfig::default();
        config.param_tol = 1e-10;
        config.loglik_tol = 1e-12;
        config.max_iter = 20000;
        let out = run_variant(&model, Variant::Em, ZipParams { pi: 0.4, lambda: 1.2 }, &config)
            .unwrap();
        let oracle = zip_grid_mle(data, (1e-6, 0.99), (0.05, 4.0));
        worst = worst
            .max((out.params.pi - oracle.pi).abs())
            .max((out.params.lambda - oracle.lambda).abs());
    }
    clauses.push(clause(
        format!("zip em vs grid mle, worst coordinate gap {worst:.2e} < 1e-3"),
        worst < 1e-3,
    ));

    // GMM unpenalized cycle against the textbook update.
    let data = vec![
        DVector::from_row_slice(&[0.1, -0.2]),
        DVector::from_row_slice(&[-0.5, 0.4]),
        DVector::from_row_slice(&[0.3, 0.1]),
        DVector::from_row_slice(&[2.8, 2.1]),
        DVector::from_row_slice(&[3.2, 1.7]),
        DVector::from_row_slice(&[2.9, 2.4]),
    ];
    let model = GmmModel::new(data.clone(), 2, 0.5);
    let params = GmmParams {
        weights: vec![0.4, 0.6],
        means: vec![
            DVector::from_row_slice(&[0.0, 0.0]),
            DVector::from_row_slice(&[3.0, 2.0]),
        ],
        covs: vec![DMatrix::identity(2, 2), DMatrix::identity(2, 2)],
    };
    let resp = annealed_posterior(&model, &params, 1.0).unwrap();
    let cand = match model.m_step(&params, &resp, None, &[1.0]).unwrap() {
        dhem_core::MStepOutcome::Candidate(c) => c,
        dhem_core::MStepOutcome::Rejected => unreachable!(),
    };
    let mut worst: f64 = 0.0;
    for k in 0..2 {
        let n_k: f64 = (0..data.len()).map(|i| resp.prob(i, k)).sum();
        let mut mean = DVector::zeros(2);
        for (i, x) in data.iter().enumerate() {
            mean += x * resp.prob(i, k);
        }
        mean /= n_k;
        let mut cov = DMatrix::zeros(2, 2);
        for (i, x) in data.iter().enumerate() {
            let d = x - &mean;
            cov += (&d * d.transpose()) * resp.prob(i, k);
        }
        cov /= n_k;
        worst = worst
            .max((cand.weights[k] - n_k / data.len() as f64).abs())
            .max((&cand.means[k] - &mean).amax())
            .max((&cand.covs[k] - &cov).amax());
    }
    clauses.push(clause(
        format!("gmm textbook cycle, worst coordinate gap {worst:.2e} < 1e-12"),
        worst < 1e-12,
    ));

    report("criterion 7 (oracle equivalence)", &clauses);
}

// Two-stage dense grid search, independent of the EM path.
fn zip_grid_mle(data: &[u64], pi_range: (f64, f64), lambda_range: (f64, f64)) -> ZipParams {
    let model = ZipModel::new(data, 0.0);
    let argmax = |pr: (f64, f64), lr: (f64, f64), steps: usize| {
        let mut best = (f64::NEG_INFINITY, ZipParams { pi: 0.5, lambda: 1.0 });
        for i in 0..=steps {
            let pi = pr.0 + (pr.1 - pr.0) * i as f64 / steps as f64;
            for j in 0..=steps {
                let lambda = lr.0 + (lr.1 - lr.0) * j as f64 / steps as f64;
                let p = ZipParams { pi, lambda };
                let ll = model.observed_loglik(&p);
                if ll > best.0 {
                    best = (ll, p);
                }
            }
        }
        best.1
    };
    let coarse = argmax(pi_range, lambda_range, 400);
    let dp = (pi_range.1 - pi_range.0) / 400.0;
    let dl = (lambda_range.1 - lambda_range.0) / 400.0;
    argmax(
        ((coarse.pi - 2.0 * dp).max(1e-6), (coarse.pi + 2.0 * dp).min(1.0 - 1e-6)),
        ((coarse.lambda - 2.0 * dl).max(1e-6), coarse.lambda + 2.0 * dl),
        800,
    )
}

#[test]
fn criterion_8_theory_probes() {
    let mut clauses = Vec::new();
    for (name, which) in [
        ("kl_rate slope >= 0.8", "kl_rate"),
        ("dkl_limit final gap < 1e-6", "dkl_limit"),
        ("latent_effect envelope nonincreasing", "latent_effect"),
    ] {
        let reports = run_probe(which).unwrap();
        for r in reports {
            clauses.push(clause(format!("{name}: fitted {:.4e}", r.fitted), r.pass));
        }
    }
    report("criterion 8 (theory probes)", &clauses);
}

#[test]
fn criterion_9_gradient_suite() {
    let steps = [1e-4, 1e-5, 1e-6];
    let mut clauses = Vec::new();

    // ZIP pi score at 20 random feasible points.
    let zip = ZipModel::new(&[0, 0, 0, 1, 2, 0, 4, 0, 0, 1], 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = ZipParams { pi: rng.gen_range(0.55..0.95), lambda: rng.gen_range(0.2..3.0) };
        let resp = annealed_posterior(&zip, &p, rng.gen_range(0.1..=1.0)).unwrap();
        let analytic = zip.surrogate_gradient(&p, &resp);
        let err = grad_fd_check(
            |x| zip.surrogate_value(&ZipParams { pi: x[0], lambda: p.lambda }, &resp),
            &[p.pi],
            &analytic,
            &steps,
        );
        worst = worst.max(err);
    }
    clauses.push(clause(format!("zip pi score worst rel err {worst:.2e} <= 1e-6"), worst <= 1e-6));

    // GMM mean gradients at 20 random feasible points.
    let truth = GmmBlock::default();
    let mut rng2 = ChaCha8Rng::seed_from_u64(43);
    let data = generate_gmm_data(&truth, 60, &mut rng2);
    let gmm = GmmModel::new(data, 3, 0.5);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 20 {
        let init = random_init(&gmm, &mut rng2, 100).unwrap();
        if !gmm.is_feasible(&init) {
            continue;
        }
        done += 1;
        let resp = annealed_posterior(&gmm, &init, rng2.gen_range(0.1..=1.0)).unwrap();
        let analytic = gmm.surrogate_gradient(&init, &resp);
        let point: Vec<f64> = init.means.iter().flat_map(|m| m.iter().copied()).collect();
        let err = grad_fd_check(
            |x| {
                let mut probe = init.clone();
                for k in 0..3 {
                    probe.means[k] = DVector::from_row_slice(&x[k * 3..(k + 1) * 3]);
                }
                gmm.surrogate_value(&probe, &resp)
            },
            &point,
            &analytic,
            &steps,
        );
        worst = worst.max(err);
    }
    clauses.push(clause(
        format!("gmm mean gradient worst rel err {worst:.2e} <= 1e-6"),
        worst <= 1e-6,
    ));

    // Weibull shape scores at 20 random feasible points on Aarset.
    let weib = WeibullModel::new(&aarset());
    let mut rng3 = ChaCha8Rng::seed_from_u64(47);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut p = weib.paper_init([
            rng3.gen_range(0.1..0.9),
            1.0,
            rng3.gen_range(1.2..5.0),
        ]);
        let w1: f64 = rng3.gen_range(0.2..0.4);
        let w2: f64 = rng3.gen_range(0.2..0.4);
        p.weights = [w1, w2, 1.0 - w1 - w2];
        let resp = annealed_posterior(&weib, &p, rng3.gen_range(0.1..=1.0)).unwrap();
        let analytic = weib.surrogate_gradient(&p, &resp);
        let err = grad_fd_check(
            |x| {
                let mut probe = p.clone();
                probe.betas[0] = x[0];
                probe.betas[2] = x[1];
                weib.surrogate_value(&probe, &resp)
            },
            &[p.betas[0], p.betas[2]],
            &analytic,
            &steps,
        );
        worst = worst.max(err);
    }
    clauses.push(clause(
        format!("weibull shape score worst rel err {worst:.2e} <= 1e-6"),
        worst <= 1e-6,
    ));

    report("criterion 9 (gradient suite)", &clauses);
}
