//! Acceptance suite: one PASS / FAIL / SKIP line per criterion.
//!
//! Criteria 4 and 6 need external datasets: set `BFF_META_CSV` (columns
//! `id,estimate,se`, 48 rows) and `BFF_GLM_CSV` (an `outcome` column plus
//! covariates), or place them at `data/coin_flips.csv` and `data/births.csv`
//! under the workspace root. The process exits non-zero when any criterion fails.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use bff_cli::commands::meta_default_window;
use bff_cli::io::{read_glm_csv, read_meta_csv};
use bff_core::binomial::{binomial_bff, binomial_marginal_lik_oracle, BinomialData, TruncBetaPrior};
use bff_core::engine::{laplace_terms, LaplaceProblem};
use bff_core::glm::{glm_coefficient_bff, GlmDataset, GlmMethod, GlmPrior};
use bff_core::meta::{meta_denominator_mc, MetaAnalysis, MetaDataset, MetaPriors, ThetaPrior};
use bff_core::normal::{
    bff_threshold_prob, bff_threshold_prob_mc, normal_bff, normal_closed_summaries, partial_log_bff, replication_bff,
    replication_posterior, replication_posterior_params, NormalPrior, NormalSummary, ReplicationPair, ThresholdSetup,
};
use bff_core::{
    combine_sequential, find_mee, savage_dickey_bff, support_set, BffModel, DensityFn, GridSpec, SupportSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: String) -> Self {
        Self { verdict: if ok { Verdict::Pass } else { Verdict::Fail }, detail }
    }

    fn skip(detail: impl Into<String>) -> Self {
        Self { verdict: Verdict::Skip, detail: detail.into() }
    }
}

/// Collects named checks; the criterion passes when all of them do.
struct Checks {
    ok: bool,
    parts: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self { ok: true, parts: Vec::new() }
    }

    fn within(&mut self, name: &str, got: f64, want: f64, tol: f64) {
        let pass = (got - want).abs() <= tol;
        self.record(pass, format!("{name} {got:.6} vs {want} +-{tol}"));
    }

    fn record(&mut self, pass: bool, text: String) {
        self.ok &= pass;
        self.parts.push(if pass { text } else { format!("{text} [off]") });
    }

    fn done(self) -> Outcome {
        Outcome::check(self.ok, self.parts.join("; "))
    }
}

fn single(set: &SupportSet) -> (f64, f64) {
    assert_eq!(set.intervals.len(), 1, "expected one interval: {set:?}");
    (set.intervals[0].lo, set.intervals[0].hi)
}

fn npdf(x: f64, m: f64, v: f64) -> f64 {
    -0.5 * ((x - m).powi(2) / v + v.ln() + (2.0 * std::f64::consts::PI).ln())
}

fn workspace_file(env: &str, rel: &str) -> Option<PathBuf> {
    if let Ok(p) = std::env::var(env) {
        return Some(PathBuf::from(p));
    }
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel);
    p.exists().then_some(p)
}

fn recovery() -> NormalSummary {
    NormalSummary::new(-0.14, 0.064).unwrap()
}

fn criterion_1() -> Outcome {
    let prior = NormalPrior::Global { mean: -0.56, variance: 0.12 * 0.12 };
    let (mee, si) = normal_closed_summaries(recovery(), prior, 1.0).unwrap();
    let (lo, hi) = single(&si);
    let mut c = Checks::new();
    c.within("lower", lo, -0.35, 0.005);
    c.within("upper", hi, 0.08, 0.005);
    let x = mee.theta_hat.unwrap()[0];
    c.record(x == -0.14, format!("MEE {x} == -0.14"));
    c.done()
}

fn criterion_2() -> Outcome {
    let v = 0.12 * 0.12;
    let data = recovery();
    let (mee, si) = normal_closed_summaries(data, NormalPrior::Local { variance: v }, 1.0).unwrap();
    let (lo, hi) = single(&si);
    let mut c = Checks::new();
    c.within("lower", lo, -0.22, 0.005);
    c.within("upper", hi, -0.06, 0.005);
    let k_me = mee.k_me().unwrap();
    let exact = (1.0 + v / (0.064f64 * 0.064)).sqrt();
    c.record((k_me - exact).abs() <= 1e-12 * exact, format!("k_ME {k_me:.12} vs sqrt(1+v/s^2) {exact:.12}"));
    let (_, centred) = normal_closed_summaries(data, NormalPrior::Global { mean: -0.14, variance: v }, 1.0).unwrap();
    let (plo, phi) = single(&centred);
    let mut o = c.done();
    o.detail.push_str(&format!(" | for comparison, global prior with m=y: [{plo:.4}, {phi:.4}]"));
    o
}

fn coin() -> (BinomialData, TruncBetaPrior) {
    (BinomialData::new(178_078, 350_757).unwrap(), TruncBetaPrior::new(5100.0, 4900.0, 0.5, 1.0).unwrap())
}

fn criterion_3() -> Outcome {
    let (data, prior) = coin();
    let m = binomial_bff(data, prior).unwrap();
    let grid = GridSpec::one_d(0.5, 0.515, 601).unwrap();
    let mut c = Checks::new();
    let ln_bf = m.eval(0.5).unwrap();
    let target = -(1.71e17f64).ln();
    c.record((ln_bf - target).abs() <= 0.02 * target.abs(), format!("ln BF01(0.5) {ln_bf:.4} vs {target:.4} +-2%"));
    let mee = find_mee(&m, &grid).unwrap();
    c.within("MEE", mee.theta_hat.unwrap()[0], 0.508, 0.0005);
    c.within("k_ME", mee.log_k_me.unwrap().exp(), 6.51, 0.05);
    let (lo, hi) = single(&support_set(&m, 1.0, &grid).unwrap());
    c.within("SI lower", lo, 0.506, 0.0005);
    c.within("SI upper", hi, 0.509, 0.0005);
    c.done()
}

fn criterion_4() -> Outcome {
    let Some(path) = workspace_file("BFF_META_CSV", "data/coin_flips.csv") else {
        return Outcome::skip("48-row per-flipper dataset not available (set BFF_META_CSV)");
    };
    let data = match read_meta_csv(&path) {
        Ok(d) => d,
        Err(e) => return Outcome::check(false, format!("cannot load {}: {e}", path.display())),
    };
    let (_, prior) = coin();
    let priors = MetaPriors { theta: ThetaPrior::TruncBeta(prior), tau_scale: 0.02 };
    let a = Arc::new(MetaAnalysis::new(data, priors).unwrap());
    let (theta_win, tau_win) = meta_default_window(&a);
    let mut c = Checks::new();
    let grid2 = GridSpec::new(vec![theta_win[0], tau_win[0]], vec![theta_win[1], tau_win[1]], 101).unwrap();
    let joint = find_mee(&a.joint(), &grid2).unwrap();
    let x = joint.theta_hat.clone().unwrap_or_default();
    if x.len() == 2 {
        c.within("joint MEE theta", x[0], 0.51, 0.002);
        c.within("joint MEE tau", x[1], 0.016, 0.001);
        c.within("joint k_ME / 14", joint.log_k_me.unwrap().exp() / 14.0, 1.0, 0.2);
    } else {
        c.record(false, "joint MEE not found".into());
    }
    let theta_grid = GridSpec::one_d(theta_win[0], theta_win[1], 512).unwrap();
    let tau_grid = GridSpec::one_d(tau_win[0], tau_win[1], 512).unwrap();
    let mt = find_mee(&a.marginal_theta(), &theta_grid).unwrap();
    let mu = find_mee(&a.marginal_tau(), &tau_grid).unwrap();
    c.within("marginal theta k_ME / 2.2", mt.log_k_me.map_or(f64::NAN, f64::exp) / 2.2, 1.0, 0.2);
    c.within("marginal tau k_ME / 6.4", mu.log_k_me.map_or(f64::NAN, f64::exp) / 6.4, 1.0, 0.2);
    let at = a.joint().log_bff(&[0.5, 0.0]).unwrap();
    c.within("ln BF01(0.5, 0) / -1.81e5", at / -1.81e5, 1.0, 0.01);
    c.done()
}

fn criterion_5() -> Outcome {
    let lab3 = ReplicationPair::new(0.205, 0.051, 0.435, 0.044).unwrap();
    let (mee, _) = normal_closed_summaries(lab3.replication(), lab3.prior(), 1.0).unwrap();
    let mut c = Checks::new();
    c.within("lab 3 k_ME / 521", mee.k_me().unwrap() / 521.0, 1.0, 0.01);
    let post = replication_posterior_params(lab3).unwrap();
    c.within("posterior mode", post.mean, 0.34, 0.005);
    let (h0, h1) = post.hpd95();
    c.within("HPD lower", h0, 0.27, 0.005);
    c.within("HPD upper", h1, 0.40, 0.005);
    let lab1 = replication_bff(ReplicationPair::new(0.205, 0.051, 0.09, 0.052).unwrap()).unwrap();
    let bf = lab1.eval(0.0).exp();
    c.record((1.0 / 1.15..=1.15).contains(&bf), format!("lab 1 BF01(0) {bf:.4} within factor 1.15 of 1"));
    c.done()
}

fn find_column(data: &GlmDataset, env: &str, needle: &str) -> Option<usize> {
    if let Ok(name) = std::env::var(env) {
        return data.coefficient_index(&name);
    }
    data.names.iter().position(|n| {
        let squashed: String = n.to_lowercase().chars().filter(|c| c.is_alphanumeric()).collect();
        squashed.contains(needle)
    })
}

fn criterion_6() -> Outcome {
    let Some(path) = workspace_file("BFF_GLM_CSV", "data/births.csv") else {
        return Outcome::skip("births dataset not available (set BFF_GLM_CSV)");
    };
    let data = match read_glm_csv(&path) {
        Ok(d) => d,
        Err(e) => return Outcome::check(false, format!("cannot load {}: {e}", path.display())),
    };
    let (Some(early), Some(hydra)) =
        (find_column(&data, "BFF_GLM_EARLY_AGE", "early"), find_column(&data, "BFF_GLM_HYDRAMNIOS", "hydramnios"))
    else {
        return Outcome::check(false, format!("no 'early age' / 'hydramnios' columns among {:?}", data.names));
    };
    let prior = GlmPrior::flat_intercept(data.n_coefficients(), 0.5).unwrap();
    let mut c = Checks::new();
    let m = glm_coefficient_bff(&data, &prior, early, GlmMethod::Laplace).unwrap();
    let grid = GridSpec::one_d(-3.0, 3.0, 1201).unwrap();
    let mee = find_mee(&m, &grid).unwrap();
    let or = mee.theta_hat.unwrap()[0].exp();
    c.within("early age OR_ME / 1.4", or / 1.4, 1.0, 0.15);
    c.within("early age k_ME / 1.5", mee.log_k_me.unwrap().exp() / 1.5, 1.0, 0.15);
    let (lo, hi) = single(&support_set(&m, 1.0, &grid).unwrap());
    c.within("early age SI lower * 1.4", lo.exp() * 1.4, 1.0, 0.15);
    c.within("early age SI upper / 2.5", hi.exp() / 2.5, 1.0, 0.15);
    let h = glm_coefficient_bff(&data, &prior, hydra, GlmMethod::UnivariateNormal).unwrap();
    let wide = GridSpec::one_d(-5.0, 15.0, 2001).unwrap();
    let hm = find_mee(&h, &wide).unwrap();
    let lx = hm.theta_hat.unwrap()[0];
    c.within("hydramnios ln OR_ME vs ln 60.3 (relative)", lx / 60.3f64.ln(), 1.0, 0.15);
    let (lo, hi) = single(&support_set(&h, 1.0, &wide).unwrap());
    c.within("hydramnios SI ln lower vs ln 1.7 (relative)", lo / 1.7f64.ln(), 1.0, 0.15);
    c.within("hydramnios SI ln upper vs ln 2188 (relative)", hi / 2188f64.ln(), 1.0, 0.15);
    c.done()
}

fn random_prior(rng: &mut ChaCha8Rng) -> NormalPrior {
    match rng.random_range(0..3) {
        0 => NormalPrior::Global { mean: rng.random_range(-2.0..2.0), variance: rng.random_range(0.01..4.0) },
        1 => NormalPrior::Local { variance: rng.random_range(0.01..4.0) },
        _ => NormalPrior::PointShift { shift: rng.random_range(0.05..1.0) },
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut mismatched = 0;
    for _ in 0..100 {
        let data = NormalSummary::new(rng.random_range(-2.0..2.0), rng.random_range(0.02..1.0)).unwrap();
        let prior = random_prior(&mut rng);
        let k = rng.random_range(-3.0f64..1.5).exp();
        let (_, closed) = normal_closed_summaries(data, prior, k).unwrap();
        let model = normal_bff(data, prior).unwrap();
        let grid = GridSpec::one_d(data.y - 60.0 * data.sigma, data.y + 60.0 * data.sigma, 1001).unwrap();
        let engine = support_set(&model, k, &grid).unwrap();
        if engine.intervals.len() != closed.intervals.len() {
            mismatched += 1;
            continue;
        }
        for (e, f) in engine.intervals.iter().zip(&closed.intervals) {
            worst = worst.max((e.lo - f.lo).abs());
            if f.hi.is_finite() {
                worst = worst.max((e.hi - f.hi).abs());
            } else if !e.hi_unbounded {
                mismatched += 1;
            }
        }
    }
    Outcome::check(
        mismatched == 0 && worst <= 1e-8,
        format!("100 configurations; max endpoint difference {worst:.2e} (<= 1e-8); {mismatched} structural mismatches"),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let sigma = rng.random_range(0.2..3.0);
        let theta = rng.random_range(-1.0..1.0);
        let n = rng.random_range(3..60usize);
        let ys: Vec<f64> = (0..n).map(|_| theta + sigma * rng.sample::<f64, _>(StandardNormal)).collect();
        let cut1 = rng.random_range(1..n - 1);
        let cut2 = rng.random_range(cut1 + 1..n);
        let batch = |s: &[f64]| NormalSummary::new(s.iter().sum::<f64>() / s.len() as f64, sigma / (s.len() as f64).sqrt()).unwrap();
        let parts = [batch(&ys[..cut1]), batch(&ys[cut1..cut2]), batch(&ys[cut2..])];
        let all = batch(&ys);
        let prior = if rng.random_bool(0.5) {
            NormalPrior::Global { mean: rng.random_range(-1.0..1.0), variance: rng.random_range(0.05..2.0) }
        } else {
            NormalPrior::Local { variance: rng.random_range(0.05..2.0) }
        };
        let theta0 = rng.random_range(-1.5..1.5);
        let whole = normal_bff(all, prior).unwrap().eval(theta0);
        let mut acc = normal_bff(parts[0], prior).unwrap().eval(theta0);
        for i in 1..3 {
            acc = combine_sequential(acc, partial_log_bff(prior, &parts[..i], parts[i], theta0).unwrap());
        }
        worst = worst.max((acc - whole).abs() / whole.abs().max(1.0));
    }
    Outcome::check(worst <= 1e-10, format!("200 random 3-way splits; max difference {worst:.2e} (<= 1e-10)"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let data = NormalSummary::new(rng.random_range(-1.0..1.0), rng.random_range(0.02..0.5)).unwrap();
        let (m, v) = (rng.random_range(-1.0..1.0), rng.random_range(0.01..2.0));
        let s2 = data.var();
        let pv = 1.0 / (1.0 / v + 1.0 / s2);
        let pm = pv * (m / v + data.y / s2);
        let sd = savage_dickey_bff(DensityFn::normal(pm, pv).unwrap(), DensityFn::normal(m, v).unwrap()).unwrap();
        let direct = normal_bff(data, NormalPrior::Global { mean: m, variance: v }).unwrap();

        let pair = ReplicationPair::new(
            rng.random_range(-0.5..0.5),
            rng.random_range(0.02..0.3),
            rng.random_range(-0.5..0.5),
            rng.random_range(0.02..0.3),
        )
        .unwrap();
        let rep = replication_bff(pair).unwrap();
        let rep_sd =
            savage_dickey_bff(replication_posterior(pair).unwrap(), DensityFn::normal(pair.y_o, pair.sigma_o.powi(2)).unwrap()).unwrap();
        for _ in 0..10 {
            let t = rng.random_range(-1.0..1.0);
            worst = worst.max((sd.log_bff(&[t]).unwrap() - direct.eval(t)).abs());
            worst = worst.max((rep_sd.log_bff(&[t]).unwrap() - rep.eval(t)).abs());
        }
    }
    Outcome::check(worst <= 1e-8, format!("conjugate normal and replication, 2000 points; max |difference| {worst:.2e} (<= 1e-8)"))
}

fn criterion_10() -> Outcome {
    let reps = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut c = Checks::new();
    let configs = [
        ("global", NormalPrior::Global { mean: 0.5, variance: 1.0 }, 0.0, 0.3),
        ("local", NormalPrior::Local { variance: 2.0 }, 0.2, 0.5),
    ];
    for (name, prior, theta0, sigma) in configs {
        let bfs: Vec<f64> = (0..reps)
            .map(|_| {
                let y = theta0 + sigma * rng.sample::<f64, _>(StandardNormal);
                normal_bff(NormalSummary::new(y, sigma).unwrap(), prior).unwrap().eval(theta0)
            })
            .collect();
        for k in [0.01f64, 0.05, 0.1] {
            let p = bfs.iter().filter(|&&b| b <= k.ln()).count() as f64 / reps as f64;
            let se = (p * (1.0 - p) / reps as f64).sqrt();
            c.record(p <= k + 3.0 * se, format!("{name} k={k}: Pr {p:.5} <= {:.5}", k + 3.0 * se));
        }
    }
    c.done()
}

fn log_mean_exp(v: &[f64]) -> (f64, f64) {
    let peak = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = v.iter().map(|x| (x - peak).exp()).collect();
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (peak + mean.ln(), (var / n).sqrt() / mean)
}

fn criterion_11() -> Outcome {
    let mut c = Checks::new();
    // closed form vs quadrature, randomized
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(0..=200u64);
        let y = rng.random_range(0..=n);
        let (a, b) = (rng.random_range(0.5..50.0), rng.random_range(0.5..50.0));
        let l = rng.random_range(0.0..0.8);
        let u = rng.random_range(l + 0.05..=1.0f64).min(1.0);
        let (data, prior) = (BinomialData::new(y, n).unwrap(), TruncBetaPrior::new(a, b, l, u).unwrap());
        let closed = binomial_bff(data, prior).unwrap().log_marginal_lik().unwrap();
        let quad = binomial_marginal_lik_oracle(data, prior).unwrap();
        worst = worst.max((closed - quad).abs());
    }
    c.record(worst <= 1e-6, format!("binomial closed vs quadrature, 50 cases: max {worst:.1e} (<= 1e-6)"));

    // binomial quadrature vs Monte Carlo over prior draws
    let (data, prior) = (BinomialData::new(7, 10).unwrap(), TruncBetaPrior::new(2.0, 2.0, 0.2, 0.9).unwrap());
    let quad = binomial_marginal_lik_oracle(data, prior).unwrap();
    let beta = Beta::new(2.0, 2.0).unwrap();
    let draws: Vec<f64> = std::iter::repeat_with(|| beta.sample(&mut rng))
        .filter(|t| (0.2..=0.9).contains(t))
        .take(200_000)
        .map(|t: f64| 7.0 * t.ln() + 3.0 * (1.0 - t).ln())
        .collect();
    let (mc, se) = log_mean_exp(&draws);
    let mc = mc + (120.0f64).ln();
    c.record((mc - quad).abs() <= 3.0 * se, format!("binomial quadrature {quad:.5} vs MC {mc:.5} (3 SE = {:.5})", 3.0 * se));

    // meta-analysis denominator
    let data = MetaDataset::new(vec![0.51, 0.49, 0.53, 0.505, 0.52, 0.50], vec![0.01, 0.012, 0.015, 0.009, 0.02, 0.011], None).unwrap();
    for (label, theta) in [
        ("truncbeta", ThetaPrior::TruncBeta(TruncBetaPrior::new(50.0, 50.0, 0.4, 0.6).unwrap())),
        ("normal", ThetaPrior::Normal { mean: 0.5, variance: 0.02f64.powi(2) }),
    ] {
        let priors = MetaPriors { theta, tau_scale: 0.02 };
        let quad = MetaAnalysis::new(data.clone(), priors).unwrap().log_denominator;
        let (mc, se) = meta_denominator_mc(&data, &priors, 400_000, 11).unwrap();
        c.record((mc - quad).abs() <= 3.0 * se, format!("meta ({label}) quadrature {quad:.5} vs MC {mc:.5} (3 SE = {:.5})", 3.0 * se));
    }
    c.done()
}

fn criterion_12() -> Outcome {
    let (ybar, theta0, m, v): (f64, f64, f64, f64) = (0.2, 0.1, -0.1, 0.5);
    let mut errors = Vec::new();
    for n in [100usize, 1000, 10_000] {
        let nf = n as f64;
        let l0 = move |_: &[f64]| -0.5 * nf * (ybar - theta0).powi(2);
        let l1 = move |t: &[f64]| -0.5 * nf * (ybar - t[0]).powi(2);
        let p0 = |_: &[f64]| 0.0;
        let p1 = move |t: &[f64]| npdf(t[0], m, v);
        let approx = laplace_terms(&LaplaceProblem {
            loglik0: &l0,
            loglik1: &l1,
            log_prior0: &p0,
            log_prior1: &p1,
            dim_theta: 1,
            dim_psi: 0,
            n,
            starts0: vec![],
            starts1: vec![vec![0.0]],
        })
        .unwrap()
        .total();
        let exact = normal_bff(NormalSummary::new(ybar, 1.0 / nf.sqrt()).unwrap(), NormalPrior::Global { mean: m, variance: v })
            .unwrap()
            .eval(theta0);
        errors.push((approx - exact).abs());
    }
    let ok = errors.windows(2).all(|w| w[1] < w[0]);
    Outcome::check(ok, format!("|error| at n = 1e2, 1e3, 1e4: {:.2e}, {:.2e}, {:.2e}", errors[0], errors[1], errors[2]))
}

fn criterion_13() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut c = Checks::new();
    let draws = 1_000_000;
    for i in 0..5 {
        let setup = ThresholdSetup {
            theta0: rng.random_range(-1.0..1.0),
            theta_star: rng.random_range(-0.5..0.5),
            m: rng.random_range(-1.0..1.0),
            v: rng.random_range(0.5..5.0),
            kappa2: rng.random_range(0.5..5.0),
            n: rng.random_range(5..300u64),
        };
        let gamma = rng.random_range(-2.0f64..2.0).exp();
        let exact = bff_threshold_prob(gamma, &setup).unwrap();
        let (mc, se) = bff_threshold_prob_mc(gamma, &setup, draws, 100 + i).unwrap();
        let tol = 3.0 * se.max(1.0 / draws as f64);
        c.record((exact - mc).abs() <= tol, format!("analytic {exact:.5} vs MC {mc:.5} (3 SE {tol:.5})"));
    }
    c.done()
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 13] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
        (13, criterion_13),
    ];
    let mut failed = Vec::new();
    println!("acceptance criteria");
    for (id, f) in criteria {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        let tag = match o.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed.push(id);
                "FAIL"
            }
            Verdict::Skip => "SKIP",
        };
        println!("criterion {id:>2}: {tag} ({secs:.2}s) {}", o.detail);
    }
    if failed.is_empty() {
        println!("acceptance: all runnable criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
