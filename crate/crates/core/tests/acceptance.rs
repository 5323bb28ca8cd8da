//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use sindex::experiment::{inference_study, run_experiment, ExperimentKind, ExperimentResult, ExperimentSpec};
use sindex::model::ModelVariant;
use sindex::pipeline::PipelineConfig;

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion1() -> Outcome {
    let mut spec = ExperimentSpec::desk(ExperimentKind::Figure1);
    spec.models = vec![ModelVariant::Cubic, ModelVariant::XSqrt];
    let ExperimentResult::Figure1 { models } = run_experiment(&spec).expect("figure1") else {
        unreachable!()
    };
    let mut pass = true;
    let mut detail = Vec::new();
    for m in &models {
        let ok = m.ks < 0.08 && m.mean.abs() <= 0.15 && (0.8..=1.2).contains(&m.variance) && m.failures == 0;
        pass &= ok;
        detail.push(format!(
            "{} ks={:.4} mean={:+.3} var={:.3} reps={}",
            m.model.name(),
            m.ks,
            m.mean,
            m.variance,
            m.z.len()
        ));
    }
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

fn criterion2() -> Outcome {
    let mut spec = ExperimentSpec::desk(ExperimentKind::Figure2);
    spec.models = vec![ModelVariant::Piecewise];
    let ExperimentResult::Figure2 { rows } = run_experiment(&spec).expect("figure2") else {
        unreachable!()
    };
    let loss: Vec<f64> = rows.iter().map(|r| r.mean_loss).collect();
    let drop = 1.0 - loss[loss.len() - 1] / loss[0];
    let rises = loss.windows(2).filter(|w| w[1] >= w[0]).count();
    let ns: Vec<String> = rows.iter().map(|r| format!("n={}:{:.4}", r.n, r.mean_loss)).collect();
    Outcome {
        pass: drop >= 0.5 && rises <= 1,
        detail: format!("{} drop={:.1}% non-monotone steps={rises}", ns.join(" "), 100.0 * drop),
    }
}

fn criterion3() -> Outcome {
    let spec = ExperimentSpec::desk(ExperimentKind::Figure3);
    let ExperimentResult::Figure3 { study } = run_experiment(&spec).expect("figure3") else {
        unreachable!()
    };
    Outcome {
        pass: (0.91..=0.985).contains(&study.coverage) && study.ks_t1 < 0.08,
        detail: format!(
            "coverage={:.4} ks(T1)={:.4} reps={} failures={}",
            study.coverage,
            study.ks_t1,
            study.reps.len(),
            study.failures
        ),
    }
}

fn criterion4() -> Outcome {
    let spec = ExperimentSpec::desk(ExperimentKind::Table1);
    let ExperimentResult::Table1 { rows } = run_experiment(&spec).expect("table1") else {
        unreachable!()
    };
    let get = |model: ModelVariant, est: &str| {
        rows.iter()
            .find(|r| r.model == model && r.estimator == est)
            .map(|r| r.mean)
            .expect("table cell")
    };
    let (lp, lm) = (
        get(ModelVariant::Logit, "proposed"),
        get(ModelVariant::Logit, "logit-mle"),
    );
    let (pp, pl) = (
        get(ModelVariant::Piecewise, "proposed"),
        get(ModelVariant::Piecewise, "ls"),
    );
    let (cp, cl) = (
        get(ModelVariant::CubicPlus, "proposed"),
        get(ModelVariant::CubicPlus, "ls"),
    );
    let rel = (lp - lm).abs() / lm;
    let a = rel <= 0.10;
    let b = pp < pl;
    let c = cl >= 3.0 * cp;
    Outcome {
        pass: a && b && c,
        detail: format!(
            "(a) logit proposed={lp:.4} mle={lm:.4} rel={:.1}% [{}] (b) piecewise proposed={pp:.4} ls={pl:.4} [{}] (c) cubic+ ls/proposed={:.1} [{}]",
            100.0 * rel,
            tag(a),
            tag(b),
            cl / cp,
            tag(c)
        ),
    }
}

fn criterion5() -> Outcome {
    let id = (1..=3).map(common::identity_link_vs_least_squares).fold(0.0, f64::max);
    let logit = (4..=6).map(common::logistic_link_vs_irls).fold(0.0, f64::max);
    let v = common::vhat_unit_weights(7);
    let nw = common::deconv_noise_free_vs_nw(8);
    let cens = common::censored_all_covering_is_exact(9);
    Outcome {
        pass: id < 1e-8 && logit < 1e-6 && v < 1e-10 && nw < 1e-6 && cens,
        detail: format!(
            "identity/LS={id:.1e} logistic/IRLS={logit:.1e} vhat-(1-kappa)={v:.1e} deconv/NW={nw:.1e} censored exact={cens}"
        ),
    }
}

fn criterion6() -> Outcome {
    let grad = common::gradient_check(20);
    let mass = common::kernel_mass_error();
    let (idem, expand) = common::monotonizer_violations(1000);
    let rot = common::rotation_invariance_error(25);
    let rerun = common::pipeline_reruns_identical();
    Outcome {
        pass: grad < 1e-5 && mass < 1e-3 && idem == 0 && expand == 0 && rot < 1e-12 && rerun,
        detail: format!(
            "grad rel err={grad:.1e} |int K - 1|={mass:.1e} over {} pairs, idempotence failures={idem}, expansions={expand}, rotation={rot:.1e}, reruns identical={rerun}",
            common::kernel_sweep().len()
        ),
    }
}

fn criterion7() -> Outcome {
    let cfg = PipelineConfig::from_json(
        r#"{"model": "cloglog", "n": 2000, "p": 200, "pilot": {"kind": "logit-mle"},
            "penalty": {"kind": "ridge", "lambda": 0.1}}"#,
    )
    .expect("config");
    let seed = ExperimentSpec::desk(ExperimentKind::Custom).seed;
    let study = inference_study(&cfg, 200, seed).expect("study");
    Outcome {
        pass: study.mean_abs_mu_error < 0.08 && study.mean_abs_sigma2_error < 0.1 && study.failures == 0,
        detail: format!(
            "(n, p)=(2000, 200) mean|mu_hat-mu_n|={:.4} mean|s2_hat-s2_n|={:.4} reps={} failures={}",
            study.mean_abs_mu_error,
            study.mean_abs_sigma2_error,
            study.reps.len(),
            study.failures
        ),
    }
}

fn tag(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "no"
    }
}

type Criterion = (u32, fn() -> Outcome, u64);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        (1, criterion1, 180),
        (2, criterion2, 300),
        (3, criterion3, 300),
        (4, criterion4, 600),
        (5, criterion5, 30),
        (6, criterion6, 60),
        (7, criterion7, 180),
    ];
    let mut failed = 0;
    for (k, run, limit) in criteria {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let pass = out.pass && took < Duration::from_secs(limit);
        failed += usize::from(!pass);
        println!(
            "criterion {k}: {} ({:.1}s, limit {limit}s) {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            out.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
