//! One function per subcommand: resolve flags, compute, and lay out the outputs.

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use bff_core::binomial::{binomial_bff, BinomialData, TruncBetaPrior};
use bff_core::engine::support_region_2d;
use bff_core::glm::{fit_map, fit_mle, glm_coefficient_bff, GlmMethod, GlmPrior};
use bff_core::meta::{MetaAnalysis, MetaPriors, ThetaPrior};
use bff_core::normal::{
    bff_threshold_cdf_mc, bff_threshold_prob, normal_bff, normal_closed_summaries, replication_bff,
    replication_posterior_params, NormalPrior, NormalSummary, ReplicationPair, ThresholdSetup,
};
use bff_core::{find_mee, support_set, BffCurve, BffModel, GridSpec, MeeResult, PriorSpec, SupportSet, Warning};
use rayon::prelude::*;
use serde_json::json;

use crate::args::{
    echo, merge, required, BinomialArgs, Common, GlmArgs, GlmMethodArg, MetaArgs, MetaTarget, NormalArgs,
    ReplicationArgs, SimulateArgs,
};
use crate::error::{CliError, CliResult};
use crate::io::{num, opt_num, read_glm_csv, read_meta_csv, CsvTable};
use crate::summary::{
    display_number, identity, mee_summary, region_summary, support_summary, AxisMap, SummaryRecord, SupportSummary,
    WarningRecord, TOOL_VERSION,
};

/// Files to write, relative to `out`.
#[derive(Debug)]
pub struct Outputs {
    pub out: PathBuf,
    pub files: Vec<(&'static str, Vec<u8>)>,
    pub summary: Option<SummaryRecord>,
}

struct Settings {
    ks: Vec<f64>,
    out: PathBuf,
    seed: u64,
    digits: usize,
}

/// Fills the defaults of the shared flags so the echoed config is complete.
fn settle(c: &mut Common) -> CliResult<Settings> {
    if c.k.is_empty() {
        c.k = vec![1.0];
    }
    if let Some(k) = c.k.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(CliError::input(format!("support levels must be positive and finite, got {k}")));
    }
    let out = c.out.get_or_insert_with(|| PathBuf::from(".")).clone();
    Ok(Settings { ks: c.k.clone(), out, seed: *c.seed.get_or_insert(1), digits: *c.digits.get_or_insert(2) })
}

/// The user's grid, or the default filled into the flags.
fn settle_grid(c: &mut Common, lower: Vec<f64>, upper: Vec<f64>, points: usize) -> CliResult<GridSpec> {
    match (c.grid_lower.is_empty(), c.grid_upper.is_empty()) {
        (true, true) => {
            c.grid_lower = lower;
            c.grid_upper = upper;
        }
        (false, false) => {}
        _ => return Err(CliError::input("--grid-lower and --grid-upper must be given together")),
    }
    if c.grid_lower.len() != c.grid_upper.len() {
        return Err(CliError::input("--grid-lower and --grid-upper have different lengths"));
    }
    let points = *c.grid_points.get_or_insert(points);
    Ok(GridSpec::new(c.grid_lower.clone(), c.grid_upper.clone(), points)?)
}

fn parse_prior(s: &str) -> CliResult<PriorSpec> {
    let p = PriorSpec::from_str(s)?;
    p.validate()?;
    Ok(p)
}

/// Grid evaluation, in parallel over points.
pub fn curve<M: BffModel + ?Sized>(model: &M, grid: &GridSpec) -> CliResult<BffCurve> {
    grid.check_within(&model.domain())?;
    let points = grid.points();
    let results = points.par_iter().map(|p| model.log_bff(p)).collect();
    Ok(BffCurve::assemble(grid.clone(), model.descriptor(), points, results)?)
}

fn curve_rows(table: &mut CsvTable, prefix: Option<&str>, c: &BffCurve, map: AxisMap) {
    for (p, v) in c.points.iter().zip(&c.log_bf) {
        let mut cells: Vec<String> = prefix.map(str::to_string).into_iter().collect();
        cells.push(num(map(p[0])));
        cells.extend(p[1..].iter().map(|&x| num(x)));
        cells.push(opt_num(*v));
        table.row(cells);
    }
}

fn curve_csv(c: &BffCurve, axes: &[&str], map: AxisMap) -> Vec<u8> {
    let mut header = axes.to_vec();
    header.push("log_bf01");
    let mut t = CsvTable::new(&header);
    curve_rows(&mut t, None, c, map);
    t.into_bytes()
}

fn sensitivity_csv(curves: &[(String, BffCurve)], axes: &[&str], map: AxisMap) -> Vec<u8> {
    let mut header = vec!["prior"];
    header.extend_from_slice(axes);
    header.push("log_bf01");
    let mut t = CsvTable::new(&header);
    for (label, c) in curves {
        curve_rows(&mut t, Some(label), c, map);
    }
    t.into_bytes()
}

fn truncation_warning(c: &BffCurve) -> Option<Warning> {
    if !c.is_truncated() {
        return None;
    }
    c.defined_range().map(|(defined_from, defined_to)| Warning::TruncatedCurve { defined_from, defined_to })
}

/// Collects summaries and warnings in report order.
struct Report {
    descriptor: String,
    mee: MeeResult,
    sets: Vec<SupportSummary>,
    warnings: Vec<Warning>,
    details: serde_json::Value,
}

impl Report {
    fn new(descriptor: String, mee: MeeResult) -> Self {
        let warnings = mee.warnings.clone();
        Self { descriptor, mee, sets: Vec::new(), warnings, details: serde_json::Value::Null }
    }

    fn add_set(&mut self, set: &SupportSet, map: AxisMap, digits: usize) {
        self.warnings.extend(set.warnings.iter().cloned());
        self.sets.push(support_summary(set, map, digits));
    }

    fn finish(self, map: AxisMap, digits: usize, config: serde_json::Value) -> SummaryRecord {
        let log_k_me = self.mee.log_k_me.filter(|_| self.mee.exists);
        SummaryRecord {
            tool: "bff".into(),
            version: TOOL_VERSION.into(),
            descriptor: self.descriptor,
            mee: mee_summary(&self.mee, map, digits),
            k_me: log_k_me.map(f64::exp),
            log_k_me,
            support_sets: self.sets,
            warnings: self.warnings.iter().map(WarningRecord::from).collect(),
            details: self.details,
            config,
        }
    }
}

fn summary_bytes(s: &SummaryRecord) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(s).expect("summary serializes");
    v.push(b'\n');
    v
}

fn outputs(out: PathBuf, curve: Vec<u8>, summary: SummaryRecord, sensitivity: Option<Vec<u8>>) -> Outputs {
    let mut files = vec![("curve.csv", curve), ("summary.json", summary_bytes(&summary))];
    if let Some(s) = sensitivity {
        files.push(("sensitivity.csv", s));
    }
    Outputs { out, files, summary: Some(summary) }
}

pub fn normal(flags: &NormalArgs) -> CliResult<Outputs> {
    let mut a: NormalArgs = merge(flags, flags.common.config.as_deref(), "normal")?;
    let s = settle(&mut a.common)?;
    let data = NormalSummary::new(required(&a.estimate, "estimate")?, required(&a.se, "se")?)?;
    let prior_text = required(&a.prior, "prior")?;
    let prior = NormalPrior::try_from(parse_prior(&prior_text)?)?;
    let model = normal_bff(data, prior)?;

    let closed: Vec<(MeeResult, SupportSet)> =
        s.ks.iter().map(|&k| normal_closed_summaries(data, prior, k)).collect::<Result<_, _>>()?;
    let (mut lo, mut hi) = (data.y - 6.0 * data.sigma, data.y + 6.0 * data.sigma);
    for iv in closed.iter().flat_map(|(_, set)| &set.intervals) {
        if iv.lo.is_finite() {
            lo = lo.min(iv.lo - 2.0 * data.sigma);
        }
        if iv.hi.is_finite() {
            hi = hi.max(iv.hi + 2.0 * data.sigma);
        }
    }
    let grid = settle_grid(&mut a.common, vec![lo], vec![hi], GridSpec::DEFAULT_POINTS_1D)?;
    let c = curve(&model, &grid)?;

    let mut report = Report::new(model.descriptor(), closed[0].0.clone());
    for (_, set) in &closed {
        report.add_set(set, identity, s.digits);
    }
    let sensitivity = if a.sensitivity.is_empty() {
        None
    } else {
        let mut curves = vec![(PriorSpec::from(prior).to_string(), c.clone())];
        for text in &a.sensitivity {
            let p = NormalPrior::try_from(parse_prior(text)?)?;
            curves.push((PriorSpec::from(p).to_string(), curve(&normal_bff(data, p)?, &grid)?));
        }
        Some(sensitivity_csv(&curves, &["theta0"], identity))
    };
    let summary = report.finish(identity, s.digits, echo("normal", &a));
    Ok(outputs(s.out, curve_csv(&c, &["theta0"], identity), summary, sensitivity))
}

/// Engine summaries of a 1D model on its curve grid.
fn engine_report<M: BffModel + ?Sized>(model: &M, grid: &GridSpec, c: &BffCurve, s: &Settings, map: AxisMap) -> CliResult<Report> {
    let mut report = Report::new(model.descriptor(), find_mee(model, grid)?);
    report.warnings.extend(truncation_warning(c));
    for &k in &s.ks {
        report.add_set(&support_set(model, k, grid)?, map, s.digits);
    }
    Ok(report)
}

pub fn binomial(flags: &BinomialArgs) -> CliResult<Outputs> {
    let mut a: BinomialArgs = merge(flags, flags.common.config.as_deref(), "binomial")?;
    let s = settle(&mut a.common)?;
    let data = BinomialData::new(required(&a.y, "y")?, required(&a.n, "n")?)?;
    let prior = TruncBetaPrior::try_from(parse_prior(&required(&a.prior, "prior")?)?)?;
    let model = binomial_bff(data, prior)?;
    let grid = settle_grid(&mut a.common, vec![0.5], vec![0.515], 601)?;
    let c = curve(&model, &grid)?;
    let mut report = engine_report(&model, &grid, &c, &s, identity)?;
    report.details = json!({ "log_marginal_likelihood_h1": model.log_marginal_lik()? });
    let sensitivity = if a.sensitivity.is_empty() {
        None
    } else {
        let mut curves = vec![(PriorSpec::from(prior).to_string(), c.clone())];
        for text in &a.sensitivity {
            let p = TruncBetaPrior::try_from(parse_prior(text)?)?;
            curves.push((PriorSpec::from(p).to_string(), curve(&binomial_bff(data, p)?, &grid)?));
        }
        Some(sensitivity_csv(&curves, &["theta0"], identity))
    };
    let summary = report.finish(identity, s.digits, echo("binomial", &a));
    Ok(outputs(s.out, curve_csv(&c, &["theta0"], identity), summary, sensitivity))
}

/// Default `(theta0, tau0)` window: the pooled estimate +- its spread, and `tau0` up to
/// a few prior scales or sample standard deviations.
pub fn meta_default_window(analysis: &MetaAnalysis) -> ([f64; 2], [f64; 2]) {
    let d = &analysis.data;
    let w: Vec<f64> = d.std_errors.iter().map(|s| 1.0 / (s * s)).collect();
    let wsum: f64 = w.iter().sum();
    let pooled = w.iter().zip(&d.estimates).map(|(w, y)| w * y).sum::<f64>() / wsum;
    let mean = d.estimates.iter().sum::<f64>() / d.len() as f64;
    let spread = (d.estimates.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64).sqrt();
    let half = (10.0 / wsum.sqrt()).max(2.0 * spread / (d.len() as f64).sqrt());
    let (lo, hi) = analysis.theta_support();
    let theta = [(pooled - half).max(lo), (pooled + half).min(hi)];
    let tau = [0.0, (4.0 * analysis.priors.tau_scale).max(3.0 * spread)];
    (theta, tau)
}

pub fn meta(flags: &MetaArgs) -> CliResult<Outputs> {
    let mut a: MetaArgs = merge(flags, flags.common.config.as_deref(), "meta")?;
    let s = settle(&mut a.common)?;
    let path = required(&a.data, "data")?;
    let data = read_meta_csv(&path)?;
    let theta_prior = a.theta_prior.get_or_insert_with(|| "truncbeta:a=5100,b=4900,l=0.5,u=1".into()).clone();
    let theta = ThetaPrior::try_from(parse_prior(&theta_prior)?)?;
    let tau_scale = *a.tau_scale.get_or_insert(0.02);
    let target = *a.target.get_or_insert(MetaTarget::Joint);
    let analysis = Arc::new(MetaAnalysis::new(data.clone(), MetaPriors { theta, tau_scale })?);
    let (theta_win, tau_win) = meta_default_window(&analysis);
    let pick = |m: &Arc<MetaAnalysis>| match target {
        MetaTarget::Joint => m.joint(),
        MetaTarget::Theta => m.marginal_theta(),
        MetaTarget::Tau => m.marginal_tau(),
    };
    let model = pick(&analysis);
    let (axes, grid): (&[&str], GridSpec) = match target {
        MetaTarget::Joint => (
            &["theta0", "tau0"],
            settle_grid(&mut a.common, vec![theta_win[0], tau_win[0]], vec![theta_win[1], tau_win[1]], GridSpec::DEFAULT_POINTS_2D)?,
        ),
        MetaTarget::Theta => {
            (&["theta0"], settle_grid(&mut a.common, vec![theta_win[0]], vec![theta_win[1]], GridSpec::DEFAULT_POINTS_1D)?)
        }
        MetaTarget::Tau => (&["tau0"], settle_grid(&mut a.common, vec![tau_win[0]], vec![tau_win[1]], GridSpec::DEFAULT_POINTS_1D)?),
    };
    let c = curve(&model, &grid)?;
    let mut report = if target == MetaTarget::Joint {
        let mut r = Report::new(model.descriptor(), find_mee(&model, &grid)?);
        for &k in &s.ks {
            let region = support_region_2d(&model, k, &grid)?;
            r.sets.push(region_summary(&region));
        }
        r
    } else {
        engine_report(&model, &grid, &c, &s, identity)?
    };
    report.details = json!({
        "studies": analysis.data.len(),
        "log_marginal_likelihood_h1": analysis.log_denominator,
        "marginal_likelihood_rel_error": analysis.denominator_error,
    });
    let sensitivity = if a.sensitivity.is_empty() {
        None
    } else {
        let label = |s: f64| format!("halfnormal:s={s}");
        let mut curves = vec![(label(tau_scale), c.clone())];
        for &alt in &a.sensitivity {
            let m = Arc::new(MetaAnalysis::new(data.clone(), MetaPriors { theta, tau_scale: alt })?);
            curves.push((label(alt), curve(&pick(&m), &grid)?));
        }
        Some(sensitivity_csv(&curves, axes, identity))
    };
    let summary = report.finish(identity, s.digits, echo("meta", &a));
    Ok(outputs(s.out, curve_csv(&c, axes, identity), summary, sensitivity))
}

pub fn replication(flags: &ReplicationArgs) -> CliResult<Outputs> {
    let mut a: ReplicationArgs = merge(flags, flags.common.config.as_deref(), "replication")?;
    let s = settle(&mut a.common)?;
    let pair = ReplicationPair::new(
        required(&a.yo, "yo")?,
        required(&a.so, "so")?,
        required(&a.yr, "yr")?,
        required(&a.sr, "sr")?,
    )?;
    let model = replication_bff(pair)?;
    let closed: Vec<(MeeResult, SupportSet)> = s
        .ks
        .iter()
        .map(|&k| normal_closed_summaries(pair.replication(), pair.prior(), k))
        .collect::<Result<_, _>>()?;
    let (y, sd) = (pair.y_r, pair.sigma_r);
    let (mut lo, mut hi) = (y.min(0.0) - 6.0 * sd, y.max(0.0) + 6.0 * sd);
    for iv in closed.iter().flat_map(|(_, set)| &set.intervals) {
        lo = lo.min(iv.lo - 2.0 * sd);
        hi = hi.max(iv.hi + 2.0 * sd);
    }
    let grid = settle_grid(&mut a.common, vec![lo], vec![hi], GridSpec::DEFAULT_POINTS_1D)?;
    let c = curve(&model, &grid)?;
    let descriptor = format!("replication(yo={},so={},yr={},sr={})", pair.y_o, pair.sigma_o, pair.y_r, pair.sigma_r);
    let mut report = Report::new(descriptor, closed[0].0.clone());
    for (_, set) in &closed {
        report.add_set(set, identity, s.digits);
    }
    let post = replication_posterior_params(pair)?;
    let (h0, h1) = post.hpd95();
    report.details = json!({
        "posterior": {
            "mean": post.mean,
            "sd": post.sd(),
            "hpd95": [h0, h1],
            "display": format!(
                "{} [{}, {}]",
                display_number(post.mean, s.digits),
                display_number(h0, s.digits),
                display_number(h1, s.digits)
            ),
        },
        "bf01_at_zero": model.eval(0.0).exp(),
    });
    let summary = report.finish(identity, s.digits, echo("replication", &a));
    Ok(outputs(s.out, curve_csv(&c, &["theta0"], identity), summary, None))
}

fn exp_axis(x: f64) -> f64 {
    x.exp()
}

pub fn glm(flags: &GlmArgs) -> CliResult<Outputs> {
    let mut a: GlmArgs = merge(flags, flags.common.config.as_deref(), "glm")?;
    let s = settle(&mut a.common)?;
    let data = read_glm_csv(&required(&a.data, "data")?)?;
    let name = required(&a.coefficient, "coefficient")?;
    let j = data.coefficient_index(&name).filter(|&j| j > 0).ok_or_else(|| {
        CliError::input(format!("unknown coefficient '{name}'; covariates are: {}", data.names[1..].join(", ")))
    })?;
    let variance = *a.prior_variance.get_or_insert(0.5);
    let prior = GlmPrior::flat_intercept(data.n_coefficients(), variance)?;
    let method = match *a.method.get_or_insert(GlmMethodArg::Laplace) {
        GlmMethodArg::Laplace => GlmMethod::Laplace,
        GlmMethodArg::Mcmc => GlmMethod::Mcmc { n_samples: *a.samples.get_or_insert(200_000), seed: s.seed },
        GlmMethodArg::Univariate => GlmMethod::UnivariateNormal,
    };
    let model = glm_coefficient_bff(&data, &prior, j, method)?;

    // default window on the log-odds scale, covering the estimate and log OR = 0
    let fit = match method {
        GlmMethod::UnivariateNormal => fit_mle(&data)?,
        _ => fit_map(&data, &prior)?,
    };
    let (mode, se) = (fit.mode[j], fit.std_errors()?[j]);
    let (lo, hi) = ((mode - 6.0 * se).min(-se), (mode + 6.0 * se).max(se));
    if (!a.common.grid_lower.is_empty() || !a.common.grid_upper.is_empty())
        && a.common.grid_lower.iter().chain(&a.common.grid_upper).any(|&x| !(x > 0.0)) {
            return Err(CliError::input("glm grids are on the odds-ratio scale and must be positive"));
        }
    let or_grid = settle_grid(&mut a.common, vec![lo.exp()], vec![hi.exp()], GridSpec::DEFAULT_POINTS_1D)?;
    let grid = GridSpec::new(
        or_grid.lower.iter().map(|x| x.ln()).collect(),
        or_grid.upper.iter().map(|x| x.ln()).collect(),
        or_grid.points_per_dim,
    )?;
    let c = curve(&model, &grid)?;
    let mut report = engine_report(&model, &grid, &c, &s, exp_axis)?;
    report.warnings.extend(model.warnings.iter().cloned());
    if let Some(Warning::TruncatedCurve { defined_from, defined_to }) = report.warnings.iter_mut().find(|w| matches!(w, Warning::TruncatedCurve { .. })) {
        *defined_from = defined_from.exp();
        *defined_to = defined_to.exp();
    }
    report.details = json!({
        "coefficient": name,
        "axis": "odds ratio",
        "estimate_log_odds": mode,
        "se_log_odds": se,
        "observations": data.n_obs(),
    });
    let summary = report.finish(exp_axis, s.digits, echo("glm", &a));
    Ok(outputs(s.out, curve_csv(&c, &["odds_ratio"], exp_axis), summary, None))
}

pub fn simulate(flags: &SimulateArgs) -> CliResult<Outputs> {
    let mut a: SimulateArgs = merge(flags, flags.config.as_deref(), "simulate")?;
    if a.n.is_empty() {
        a.n = vec![10, 50, 200];
    }
    if a.theta0.is_empty() {
        a.theta0 = vec![0.0, 0.5, 1.0];
    }
    let theta_star = *a.theta_star.get_or_insert(0.0);
    let kappa2 = *a.kappa2.get_or_insert(4.0);
    let v = *a.v.get_or_insert(4.0);
    let g_lo = *a.gamma_lower.get_or_insert(1e-3);
    let g_hi = *a.gamma_upper.get_or_insert(1e3);
    let points = *a.gamma_points.get_or_insert(121);
    let out = a.out.get_or_insert_with(|| PathBuf::from(".")).clone();
    let seed = *a.seed.get_or_insert(1);
    if !(g_lo > 0.0 && g_hi > g_lo && points >= 2) {
        return Err(CliError::input("need 0 < gamma-lower < gamma-upper and gamma-points >= 2"));
    }
    let gammas: Vec<f64> = (0..points)
        .map(|i| match i {
            0 => g_lo,
            i if i == points - 1 => g_hi,
            i => {
                let t = i as f64 / (points - 1) as f64;
                (g_lo.ln() + t * (g_hi.ln() - g_lo.ln())).exp()
            }
        })
        .collect();
    let configs: Vec<ThresholdSetup> = a
        .n
        .iter()
        .flat_map(|&n| {
            a.theta0.iter().map(move |&theta0| ThresholdSetup { theta0, theta_star, m: theta0, v, kappa2, n })
        })
        .map(|mut c| {
            if let Some(m) = a.m {
                c.m = m;
            }
            c
        })
        .collect();
    let rows: Vec<Vec<String>> = configs
        .par_iter()
        .enumerate()
        .map(|(i, setup)| -> CliResult<Vec<Vec<String>>> {
            let mc = match a.mc {
                Some(draws) => Some(bff_threshold_cdf_mc(&gammas, setup, draws, seed.wrapping_add(i as u64))?),
                None => None,
            };
            gammas
                .iter()
                .enumerate()
                .map(|(g, &gamma)| {
                    let mut row = vec![setup.n.to_string(), num(setup.theta0), num(gamma), num(bff_threshold_prob(gamma, setup)?)];
                    if let Some(mc) = &mc {
                        row.push(num(mc[g].0));
                        row.push(num(mc[g].1));
                    }
                    Ok(row)
                })
                .collect()
        })
        .collect::<CliResult<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut header = vec!["n", "theta0", "gamma", "prob"];
    if a.mc.is_some() {
        header.extend(["prob_mc", "se_mc"]);
    }
    let mut t = CsvTable::new(&header);
    for r in rows {
        t.row(r);
    }
    let mut config = serde_json::to_vec_pretty(&echo("simulate", &a)).expect("config serializes");
    config.push(b'\n');
    Ok(Outputs { out, files: vec![("bff_cdf.csv", t.into_bytes()), ("config.json", config)], summary: None })
}
