//! Command implementations.

use std::io::Write;

use num_rational::BigRational;
use rangewalk::classify::{self, TrendOptions};
use rangewalk::dist_exact::{
    self, Arithmetic, EntropySequence, EntropyTarget, ExactConfig, LawTable, Probability,
};
use rangewalk::estimate_mc::{self, EntropyMethod, McConfig, McRecord, McTarget};
use rangewalk::ladder::{self, SkipFreeMeasure};
use rangewalk::walk::sample_trajectory;
use rangewalk::{trace_codec, RngStreamSpec, StepDistribution};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::report::Bundle;
use crate::{ArithmeticArg, Cli, CliError, Command, MethodArg, Suite};

/// Relative slack for exact identities evaluated in double precision.
const EXACT_TOL: f64 = 1e-9;

struct Ctx<'a> {
    cli: &'a Cli,
    config: Option<RunConfig>,
    seed: u64,
    mc: McConfig,
    bundle: Bundle,
    resolved: Map<String, Value>,
    failures: Vec<String>,
}

impl Ctx<'_> {
    fn params(&self) -> crate::config::Params {
        self.config.as_ref().map(|c| c.params.clone()).unwrap_or_default()
    }

    fn mu(&self) -> Result<StepDistribution, CliError> {
        match &self.config {
            Some(c) => Ok(c.measure()?),
            None => Err(CliError::Usage(format!("--config is required for {}", self.cli.command.name()))),
        }
    }

    fn set<T: serde::Serialize>(&mut self, key: &str, value: T) {
        self.resolved.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        println!("{} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
        if !passed {
            self.failures.push(format!("{name}: {detail}"));
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = cli.config.as_deref().map(RunConfig::load).transpose()?;
    let params = config.as_ref().map(|c| c.params.clone()).unwrap_or_default();
    if let Some(w) = cli.workers.or(params.workers) {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        // only fails if a pool already exists, e.g. when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let seed = cli.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
    let streams = cli.streams.or(params.streams).unwrap_or(McConfig::default().streams);
    if streams == 0 {
        return Err(CliError::Usage("--streams must be at least 1".into()));
    }
    let mut ctx = Ctx {
        cli,
        config,
        seed,
        mc: McConfig { seed, streams },
        bundle: Bundle::create(&cli.out)?,
        resolved: Map::new(),
        failures: Vec::new(),
    };
    ctx.set("seed", seed);
    ctx.set("streams", streams);
    match &cli.command {
        Command::Exact { n_max, targets, arithmetic, max_states, max_paths, law_n } => {
            let cfg = exact_config(&mut ctx, *arithmetic, *max_states, *max_paths)?;
            exact(&mut ctx, *n_max, targets.as_deref(), &cfg, *law_n)?
        }
        Command::Mc { n, samples, targets, method, escape, exact } => {
            mc(&mut ctx, *n, *samples, targets.as_deref(), *method, escape.as_deref(), *exact)?
        }
        Command::Classify { n_max, horizons, samples, lower_bound } => {
            classify_cmd(&mut ctx, *n_max, horizons.as_deref(), *samples, *lower_bound)?
        }
        Command::Ladder { n, t_grid, mc_samples, horizon } => ladder_cmd(&mut ctx, *n, t_grid, *mc_samples, *horizon)?,
        Command::CodecFuzz { cases, max_n } => codec_fuzz(&mut ctx, *cases, *max_n)?,
        Command::Check { suite, n_max, cases } => check(&mut ctx, *suite, *n_max, *cases)?,
    }
    let Ctx { bundle, resolved, failures, config, .. } = ctx;
    let invocation = serde_json::to_value(cli)?;
    let config = config.map(|c| serde_json::to_value(c)).transpose()?;
    bundle.finish(cli.command.name(), invocation, config, Value::Object(resolved))?;
    if cli.assert && !failures.is_empty() {
        return Err(CliError::Assertion(failures.join("; ")));
    }
    Ok(())
}

fn exact_config(
    ctx: &mut Ctx,
    arithmetic: Option<ArithmeticArg>,
    max_states: Option<usize>,
    max_paths: Option<usize>,
) -> Result<ExactConfig, CliError> {
    let params = ctx.params();
    let arithmetic = match (arithmetic, params.arithmetic.as_deref()) {
        (Some(ArithmeticArg::Rational), _) | (None, Some("rational")) => Arithmetic::Rational,
        (Some(ArithmeticArg::Double), _) | (None, Some("double")) | (None, None) => Arithmetic::Double,
        (None, Some(other)) => return Err(CliError::Config(format!("params.arithmetic: unknown mode {other:?}"))),
    };
    let d = ExactConfig::default();
    let cfg = ExactConfig {
        max_states: max_states.or(params.max_states).unwrap_or(d.max_states),
        max_paths: max_paths.or(params.max_paths).unwrap_or(d.max_paths),
        arithmetic,
    };
    ctx.set("exact", &cfg);
    Ok(cfg)
}

fn parse_list<T>(text: &str, what: &str, item: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, CliError> {
    let out: Vec<T> = text
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| item(s).ok_or_else(|| CliError::Usage(format!("invalid {what} {s:?}"))))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(CliError::Usage(format!("empty {what} list")));
    }
    Ok(out)
}

fn entropy_target(s: &str) -> Option<EntropyTarget> {
    Some(match s {
        "range" => EntropyTarget::Range,
        "range+endpoint" => EntropyTarget::RangeEndpoint,
        "trace" => EntropyTarget::Trace,
        "trace+endpoint" => EntropyTarget::TraceEndpoint,
        _ => return None,
    })
}

fn target_tag(t: EntropyTarget) -> &'static str {
    match t {
        EntropyTarget::Range => "range",
        EntropyTarget::RangeEndpoint => "range+endpoint",
        EntropyTarget::Trace => "trace",
        EntropyTarget::TraceEndpoint => "trace+endpoint",
    }
}

fn mc_target(s: &str) -> Option<McTarget> {
    McTarget::ALL.into_iter().find(|t| t.tag() == s)
}

fn resolve_targets(ctx: &Ctx, flag: Option<&str>) -> Result<Option<Vec<String>>, CliError> {
    Ok(match flag {
        Some(t) => Some(parse_list(t, "target", |s| Some(s.to_string()))?),
        None => ctx.params().targets,
    })
}

/// `start:end:count`, endpoints included.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("invalid grid {text:?}; expected start:end:count"));
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, k] = parts.as_slice() else { return Err(bad()) };
    let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    let k: usize = k.parse().map_err(|_| bad())?;
    if k == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if k == 1 {
        return Ok(vec![a]);
    }
    Ok((0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect())
}

fn horizons(ctx: &Ctx, flag: Option<&str>) -> Result<Option<Vec<u64>>, CliError> {
    Ok(match flag {
        Some(h) => Some(parse_list(h, "horizon", |s| s.parse().ok())?),
        None => ctx.params().horizons,
    })
}

fn write_law<P: Probability>(ctx: &mut Ctx, name: &str, law: &LawTable<P>) -> Result<(), CliError>
where
    LawTable<P>: LawCsv,
{
    ctx.bundle.csv(name, |w| law.csv(w))
}

trait LawCsv {
    fn csv(&self, w: &mut Vec<u8>) -> std::io::Result<()>;
}

impl LawCsv for LawTable<f64> {
    fn csv(&self, w: &mut Vec<u8>) -> std::io::Result<()> {
        self.write_csv(w)
    }
}

impl LawCsv for LawTable<BigRational> {
    fn csv(&self, w: &mut Vec<u8>) -> std::io::Result<()> {
        self.write_csv(w)
    }
}

fn laws_at<P: Probability>(
    ctx: &mut Ctx,
    mu: &StepDistribution,
    n: usize,
    targets: &[EntropyTarget],
    cfg: &ExactConfig,
) -> Result<(), CliError>
where
    LawTable<P>: LawCsv,
{
    for &t in targets {
        let law: LawTable<P> = match t {
            EntropyTarget::Range => dist_exact::law_range(mu, n, cfg)?,
            EntropyTarget::RangeEndpoint => dist_exact::law_range_endpoint(mu, n, cfg)?,
            EntropyTarget::Trace => dist_exact::law_trace(mu, n, false, cfg)?,
            EntropyTarget::TraceEndpoint => dist_exact::law_trace(mu, n, true, cfg)?,
        };
        let name = format!("law_{}_n{n}.csv", target_tag(t).replace('+', "_"));
        write_law(ctx, &name, &law)?;
    }
    Ok(())
}

fn print_sequence(seq: &EntropySequence) {
    println!("{:>4} {:>14} {:>14} {:>14} {:>14}", "n", "H_R", "H_RS", "H_G", "H_GS");
    let cell = |t: Option<&Vec<f64>>, n: usize| t.map(|v| format!("{:14.9}", v[n])).unwrap_or_else(|| format!("{:>14}", "-"));
    for n in 0..=seq.n_max {
        println!(
            "{n:>4} {} {} {} {}",
            cell(seq.range.as_ref(), n),
            cell(seq.range_endpoint.as_ref(), n),
            cell(seq.trace.as_ref(), n),
            cell(seq.trace_endpoint.as_ref(), n)
        );
    }
}

fn exact(
    ctx: &mut Ctx,
    n_max: Option<usize>,
    targets: Option<&str>,
    cfg: &ExactConfig,
    law_n: Option<usize>,
) -> Result<(), CliError> {
    let mu = ctx.mu()?;
    let n_max = n_max.or(ctx.params().n_max).unwrap_or(10);
    let targets: Vec<EntropyTarget> = match resolve_targets(ctx, targets)? {
        Some(t) => t.iter().map(|s| entropy_target(s).ok_or_else(|| CliError::Usage(format!("invalid target {s:?}")))).collect::<Result<_, _>>()?,
        None => EntropyTarget::ALL.to_vec(),
    };
    ctx.set("n_max", n_max);
    ctx.set("targets", targets.iter().map(|&t| target_tag(t)).collect::<Vec<_>>());
    let seq = dist_exact::entropy_sequence(&mu, n_max, &targets, cfg)?;
    ctx.bundle.csv("entropy.csv", |w| seq.write_csv(w))?;
    let violations = seq.invariant_violations(EXACT_TOL);
    ctx.bundle.json(
        "exact.json",
        &json!({
            "sequence": seq,
            "h_proxy": seq.h_proxy(),
            "invariant_violations": violations,
        }),
    )?;
    print_sequence(&seq);
    if let Some(p) = seq.h_proxy() {
        println!("min_n H(R_n,S_n)/n = {p:.9}");
    }
    ctx.check("sandwich-and-ceiling", violations.is_empty(), format!("{} violations", violations.len()));
    if let Some(n) = law_n {
        ctx.set("law_n", n);
        match cfg.arithmetic {
            Arithmetic::Double => laws_at::<f64>(ctx, &mu, n, &targets, cfg)?,
            Arithmetic::Rational => laws_at::<BigRational>(ctx, &mu, n, &targets, cfg)?,
        }
    }
    Ok(())
}

fn mc(
    ctx: &mut Ctx,
    n: Option<usize>,
    samples: Option<u64>,
    targets: Option<&str>,
    method: MethodArg,
    escape: Option<&str>,
    exact: bool,
) -> Result<(), CliError> {
    let mu = ctx.mu()?;
    let n = n.or(ctx.params().n).unwrap_or(8);
    let samples = samples.or(ctx.params().samples).unwrap_or(100_000);
    let horizons = horizons(ctx, escape)?;
    let target_list = resolve_targets(ctx, targets)?;
    let method = match method {
        MethodArg::PlugIn => EntropyMethod::PlugIn,
        MethodArg::MillerMadow => EntropyMethod::PlugInMillerMadow,
    };
    ctx.set("samples", samples);
    let mut summary = Map::new();
    // entropy estimates unless only escape horizons were asked for
    let targets: Vec<McTarget> = match (target_list, &horizons) {
        (Some(t), _) => t.iter().map(|s| mc_target(s).ok_or_else(|| CliError::Usage(format!("invalid target {s:?}")))).collect::<Result<_, _>>()?,
        (None, Some(_)) => Vec::new(),
        (None, None) => McTarget::ALL.to_vec(),
    };
    if !targets.is_empty() {
        ctx.set("n", n);
        ctx.set("targets", targets.iter().map(|t| t.tag()).collect::<Vec<_>>());
        ctx.set("method", method.tag());
        let mut records = Vec::new();
        let mut estimates = Vec::new();
        for &t in &targets {
            let est = estimate_mc::mc_entropy(&mu, n, samples, t, method, &ctx.mc)?;
            println!("{:>15} n={n} estimate={:.6} stderr={:.6} distinct={}", t.tag(), est.value, est.stderr, est.distinct);
            records.push(McRecord {
                target: t.tag().into(),
                n: n as u64,
                samples: est.samples,
                estimate: est.value,
                stderr: est.stderr,
                method: method.tag().into(),
                seed: ctx.seed,
            });
            estimates.push(est);
        }
        ctx.bundle.csv("mc.csv", |w| estimate_mc::write_mc_csv(&records, w))?;
        if exact {
            let exact_targets: Vec<EntropyTarget> = targets
                .iter()
                .map(|t| match t {
                    McTarget::Range => EntropyTarget::Range,
                    McTarget::RangeEndpoint => EntropyTarget::RangeEndpoint,
                    McTarget::Trace => EntropyTarget::Trace,
                    McTarget::TraceEndpoint => EntropyTarget::TraceEndpoint,
                })
                .collect();
            let seq = dist_exact::entropy_sequence(&mu, n, &exact_targets, &ExactConfig::default())?;
            let mut rows = Vec::new();
            for (est, &t) in estimates.iter().zip(&exact_targets) {
                let h = seq.track(t).map(|v| v[n]).unwrap_or(f64::NAN);
                let tol = 3.0 * (est.stderr + est.miller_madow_shift());
                let diff = (est.plug_in - h).abs();
                ctx.check(
                    &format!("mc-vs-exact {}", target_tag(t)),
                    diff <= tol,
                    format!("|{:.6} - {:.6}| = {diff:.2e} <= {tol:.2e}", est.plug_in, h),
                );
                rows.push(json!({"target": target_tag(t), "plug_in": est.plug_in, "exact": h, "diff": diff, "tolerance": tol}));
            }
            summary.insert("exact_comparison".into(), Value::Array(rows));
        }
        summary.insert("entropy".into(), serde_json::to_value(&estimates)?);
    }
    if let Some(h) = horizons {
        ctx.set("horizons", &h);
        let est = estimate_mc::escape_rate(&mu, &h, samples, &ctx.mc)?;
        ctx.bundle.csv("escape.csv", |w| {
            writeln!(w, "horizon,estimate,ci_half_width,samples")?;
            for e in &est {
                writeln!(w, "{},{:.12},{:.12},{}", e.horizon, e.estimate, e.ci_half_width, e.samples)?;
            }
            Ok(())
        })?;
        for e in &est {
            println!("escape horizon={} estimate={:.6} +/- {:.6}", e.horizon, e.estimate, e.ci_half_width);
        }
        summary.insert("escape".into(), serde_json::to_value(&est)?);
        if exact {
            let closed = estimate_mc::exact_escape_rate(&mu);
            if let (Some(g), Some(last)) = (closed, est.last()) {
                let diff = (last.estimate - g).abs();
                ctx.check("escape-vs-closed-form", diff <= 0.01, format!("|{:.6} - {g:.6}| = {diff:.2e} <= 1e-2", last.estimate));
            } else {
                println!("no closed-form escape rate for this walk");
            }
            summary.insert("exact_escape".into(), json!(closed));
            if let Some((a, lb)) = estimate_mc::exact_h_gamma_lower_bound(&mu) {
                println!("trace-rate lower bound c = {:.6} (a = {a})", lb.value);
                summary.insert("exact_lower_bound".into(), json!({"a": a.to_string(), "bound": lb}));
            }
        }
    }
    ctx.bundle.json("mc.json", &summary)?;
    Ok(())
}

fn classify_cmd(
    ctx: &mut Ctx,
    n_max: Option<usize>,
    horizons_flag: Option<&str>,
    samples: Option<u64>,
    lower_bound: Option<f64>,
) -> Result<(), CliError> {
    let mu = ctx.mu()?;
    let horizons = horizons(ctx, horizons_flag)?;
    let samples = samples.or(ctx.params().samples).unwrap_or(100_000);
    let class = match &horizons {
        Some(h) => classify::classify_with_evidence(&mu, h, samples, &ctx.mc)?,
        None => classify::classify(&mu),
    };
    let mut out = Map::new();
    out.insert("class".into(), serde_json::to_value(&class)?);
    println!("{}", serde_json::to_string(&class.kind)?);
    for e in &class.evidence {
        println!("  evidence: {e}");
    }
    if let Ok((hr, hg)) = classify::predict_vanishing(&class.kind) {
        out.insert("prediction".into(), json!({"h_r_zero": hr, "h_gamma_zero": hg}));
        println!("  predicts h_R = 0: {hr}, h_Gamma = 0: {hg}");
    }
    if let Some(h) = &horizons {
        ctx.set("horizons", h);
        ctx.set("samples", samples);
        let c = classify::corroborate(&mu, &class.kind, h, samples, &ctx.mc)?;
        ctx.check("corroboration", c.consistent, "truncated escape estimates agree with the class".into());
        out.insert("corroboration".into(), serde_json::to_value(&c)?);
    }
    if let Some(n_max) = n_max.or(ctx.params().n_max) {
        ctx.set("n_max", n_max);
        let cfg = ExactConfig::default();
        let seq = dist_exact::entropy_sequence(&mu, n_max, &EntropyTarget::ALL, &cfg)?;
        ctx.bundle.csv("entropy.csv", |w| seq.write_csv(w))?;
        let bound = match lower_bound {
            Some(c) => Some(c),
            None if class.kind != classify::ClassKind::Recurrent => {
                estimate_mc::exact_h_gamma_lower_bound(&mu).map(|(_, b)| b.value)
            }
            None => None,
        };
        let opts = TrendOptions {
            lower_bound: bound,
            full_rate: classify::find_grading(&mu).is_some(),
            ..Default::default()
        };
        ctx.set("lower_bound", bound);
        match classify::trend_report(&seq, &class.kind, &opts) {
            Ok(report) => {
                for c in &report.checks {
                    ctx.check(&c.name, c.passed, c.detail.clone());
                }
                out.insert("theorem_report".into(), serde_json::to_value(&report)?);
            }
            Err(e) => println!("no trend report: {e}"),
        }
    }
    ctx.bundle.json("classify.json", &out)?;
    Ok(())
}

fn ladder_cmd(ctx: &mut Ctx, n: usize, t_grid: &str, mc_samples: Option<u64>, horizon: u64) -> Result<(), CliError> {
    let mu = ctx.mu()?;
    let grid = parse_grid(t_grid)?;
    ctx.set("n", n);
    ctx.set("t_grid", &grid);
    let sk = SkipFreeMeasure::from_measure(&mu)?;
    let law = ladder::supremum_law(&sk, n)?;
    ctx.bundle.csv("ladder.csv", |w| law.write_csv(w))?;
    let gf = ladder::check_generating_function(&sk, &law, &grid)?;
    ctx.bundle.csv("gf.csv", |w| {
        writeln!(w, "t,partial,via_pgf,via_pbar,residual")?;
        for r in &gf.rows {
            writeln!(w, "{},{:.15e},{:.15e},{:.15e},{:.3e}", r.t, r.partial, r.via_pgf, r.via_pbar, r.residual)?;
        }
        Ok(())
    })?;
    let eta = ladder::entropy_eta(&sk, &law)?;
    let violations = law.lower_bound_violations(&sk);
    let ratios: Vec<f64> = law.f.windows(2).skip(1).take(50).filter(|w| w[0] > 1e-300 && w[1] > 0.0).map(|w| w[1] / w[0]).collect();
    let ratio_range = ratios.iter().copied().fold(None, |acc: Option<(f64, f64)>, r| {
        Some(acc.map_or((r, r), |(lo, hi)| (lo.min(r), hi.max(r))))
    });
    println!("f_0 = {:.15}", law.f0());
    if let Some((lo, hi)) = ratio_range {
        println!("f_(n+1)/f_n for 1 <= n <= 50: [{lo:.15}, {hi:.15}]");
    }
    println!("1 - sum f_n = {:.3e}", law.tail_mass);
    match eta.interval() {
        Some(b) => println!("H(eta) in [{:.9}, {:.9}]", b.lo, b.hi),
        None => println!("H(eta) partial sum {:.9}; tail not bounded", eta.partial),
    }
    ctx.check("gf-residual", gf.max_residual <= 1e-8, format!("max residual {:.2e} <= 1e-8", gf.max_residual));
    ctx.check("f_n-lower-bound", violations.is_empty(), format!("{} violations of f_n >= p_n+ f_0 / q", violations.len()));
    let mut out = json!({
        "q": sk.q(),
        "drift": sk.drift(),
        "f0": law.f0(),
        "tail_mass": law.tail_mass,
        "ratio_range": ratio_range,
        "eta": eta,
        "eta_interval": eta.interval(),
        "generating_function": gf,
        "lower_bound_violations": violations,
    });
    if let Some(samples) = mc_samples {
        ctx.set("mc_samples", samples);
        ctx.set("horizon", horizon);
        let chk = ladder::mc_supremum_check(&mu, &law, horizon, samples, &ctx.mc)?;
        ctx.check("mc-supremum-tv", chk.tv <= 0.01, format!("TV {:.2e} <= 1e-2", chk.tv));
        out["mc"] = serde_json::to_value(&chk)?;
    }
    ctx.bundle.json("ladder.json", &out)?;
    Ok(())
}

fn codec_fuzz(ctx: &mut Ctx, cases: usize, max_n: usize) -> Result<(), CliError> {
    let mu = ctx.mu()?;
    ctx.set("cases", cases);
    ctx.set("max_n", max_n);
    let r = trace_codec::fuzz(&mu, cases, max_n, ctx.seed);
    ctx.check(
        "codec-fuzz",
        r.passed(),
        format!(
            "{} cases, {} round-trip failures, {} collisions, {} distinct digraphs / {} keys",
            r.cases, r.round_trip_failures, r.key_collisions, r.distinct_digraphs, r.distinct_keys
        ),
    );
    ctx.bundle.json("codec_fuzz.json", &r)
}

fn check(ctx: &mut Ctx, suite: Suite, n_max: Option<usize>, cases: Option<usize>) -> Result<(), CliError> {
    let n_max_or = |ctx: &Ctx, d: usize| n_max.or(ctx.params().n_max).unwrap_or(d);
    let cfg = ExactConfig::default();
    let seed = ctx.seed;
    match suite {
        Suite::Subadditivity => {
            let mu = ctx.mu()?;
            let n = n_max_or(ctx, 10);
            ctx.set("n_max", n);
            let seq = dist_exact::entropy_sequence(&mu, n, &[EntropyTarget::RangeEndpoint, EntropyTarget::TraceEndpoint], &cfg)?;
            ctx.bundle.csv("entropy.csv", |w| seq.write_csv(w))?;
            let r = dist_exact::check_subadditivity(&seq, EXACT_TOL);
            ctx.check("subadditivity", r.holds(), format!("{} pairs, {} violations", r.pairs_checked, r.violations.len()));
            ctx.bundle.json("check_subadditivity.json", &r)
        }
        Suite::Reversal => {
            let mu = ctx.mu()?;
            let n = n_max_or(ctx, 8);
            ctx.set("n_max", n);
            let tv: Vec<f64> = (0..=n).map(|k| dist_exact::reversal_law_check(&mu, k, &cfg)).collect::<Result<_, _>>()?;
            ctx.bundle.csv("reversal.csv", |w| {
                writeln!(w, "n,tv")?;
                for (k, t) in tv.iter().enumerate() {
                    writeln!(w, "{k},{t:.3e}")?;
                }
                Ok(())
            })?;
            let worst = tv.iter().copied().fold(0.0, f64::max);
            ctx.check("reversal", worst <= EXACT_TOL, format!("max TV {worst:.2e} <= 1e-9 for n <= {n}"));
            ctx.bundle.json("check_reversal.json", &json!({"tv": tv}))
        }
        Suite::LogMoment => {
            let cases = cases.unwrap_or(10_000);
            ctx.set("cases", cases);
            let r = dist_exact::log_moment_sweep(cases, seed)?;
            ctx.check("log-moment", r.holds(), format!("{cases} cases, max lhs/rhs {:.4}", r.max_ratio));
            ctx.bundle.json("check_log_moment.json", &r)
        }
        Suite::EntropyIntegral => {
            let cases = cases.unwrap_or(10_000);
            ctx.set("cases", cases);
            let r = ladder::integral_bounds_sweep(cases, seed)?;
            ctx.check(
                "entropy-integral",
                r.holds(),
                format!(
                    "{cases} cases, C in [{:.9}, {:.9}], {} upper and {} lower (of {}) violations",
                    r.constant.lo,
                    r.constant.hi,
                    r.upper_violations.len(),
                    r.lower_violations.len(),
                    r.lower_checked
                ),
            );
            ctx.bundle.json("check_entropy_integral.json", &r)
        }
        Suite::Boundary => {
            let mu = ctx.mu()?;
            let n = n_max_or(ctx, 12);
            ctx.set("n_max", n);
            let mut rows = Vec::new();
            let mut all = true;
            for (i, (g, p)) in mu.support().iter().enumerate() {
                if mu.group().is_identity(g) || *p >= 1.0 {
                    continue;
                }
                let seq = dist_exact::boundary_sequence(&mu, n, g, &cfg)?;
                all &= seq.iter().all(|r| r.holds);
                rows.push((i, g.to_string(), seq));
            }
            ctx.bundle.csv("boundary.csv", |w| {
                writeln!(w, "atom,n,expected_boundary,bound,range_entropy")?;
                for (i, _, seq) in &rows {
                    for r in seq {
                        writeln!(w, "{i},{},{:.12},{:.12},{:.12}", r.n, r.expected_boundary, r.bound, r.range_entropy)?;
                    }
                }
                Ok(())
            })?;
            ctx.check("boundary", all, format!("H(R_n) >= -(E|d_g R_n| - 1) ln(1 - mu(g)) for n <= {n}"));
            let js: Vec<Value> = rows.iter().map(|(i, g, s)| json!({"atom": i, "element": g, "rows": s})).collect();
            ctx.bundle.json("check_boundary.json", &js)
        }
        Suite::Conditional => {
            let mu = ctx.mu()?;
            let n = n_max_or(ctx, 12);
            ctx.set("n_max", n);
            let seq = dist_exact::conditional_endpoint_sequence(&mu, n, &cfg)?;
            ctx.bundle.csv("conditional.csv", |w| {
                writeln!(w, "n,endpoint_given_range,entropy_bound,max_log_square_moment,moment_bound")?;
                for r in &seq {
                    writeln!(
                        w,
                        "{},{:.12},{:.12},{:.12},{:.12}",
                        r.n, r.endpoint_given_range, r.entropy_bound, r.max_log_square_moment, r.moment_bound
                    )?;
                }
                Ok(())
            })?;
            ctx.check("conditional", seq.iter().all(|r| r.holds), format!("ln^2 moment and H(S|R) bounds for n <= {n}"));
            ctx.bundle.json("check_conditional.json", &seq)
        }
        Suite::Aep => {
            let mu = ctx.mu()?;
            let n = n_max_or(ctx, 10);
            let cases = cases.unwrap_or(1000);
            ctx.set("n", n);
            ctx.set("cases", cases);
            let law = dist_exact::law_range_endpoint::<f64>(&mu, n, &cfg)?;
            let trajs: Vec<_> = (0..cases).map(|i| sample_trajectory(&mu, n, RngStreamSpec::new(seed, i as u64))).collect();
            let r = dist_exact::aep_samples(&mu, n, &law, &trajs)?;
            println!("-ln q_n / n over {cases} trajectories: mean {:.9}, variance {:.3e}", r.mean, r.variance);
            if classify::find_grading(&mu).is_some() {
                let h = mu.entropy();
                let worst = r.values.iter().map(|v| (v - h).abs()).fold(0.0, f64::max);
                ctx.check("aep-exact", worst <= 1e-12, format!("max |value - H(X_1)| = {worst:.2e}"));
            }
            ctx.bundle.json("check_aep.json", &json!({"n": n, "entropy_rate_bound": mu.entropy(), "report": r}))
        }
        Suite::Transport => {
            let mu = ctx.mu()?;
            let n = n_max_or(ctx, 8);
            ctx.set("n_max", n);
            let rational = mu.exact_probabilities().is_some();
            let mut reports = Vec::new();
            for k in 0..=n {
                for with_end in [false, true] {
                    let r = if rational {
                        dist_exact::trace_key_transport::<BigRational>(&mu, k, with_end, &cfg)?
                    } else {
                        dist_exact::trace_key_transport::<f64>(&mu, k, with_end, &cfg)?
                    };
                    reports.push(r);
                }
            }
            let ok = reports.iter().all(|r| r.holds());
            ctx.check(
                "transport",
                ok,
                format!("structural and codec keys give identical laws for n <= {n} ({})", if rational { "rational" } else { "double" }),
            );
            ctx.bundle.json("check_transport.json", &reports)
        }
    }
}
