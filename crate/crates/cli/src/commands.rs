use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use cppp_core::capture_recapture::Variant;
use cppp_core::conjugate_gn::{sweep_prior, GnPrior, NormalSampleModel, OrderGap, VagueNormalModel, SENSITIVITY_SWEEP};
use cppp_core::elicitation::{elicit, sample_rho_prior, ElicitationInput, SigmaMode, SolverOptions, DEFAULT_MC_SIZE};
use cppp_core::engine::{
    calibrate_cppp, estimate_ppp, CalibrationOptions, PppOptions, DEFAULT_INNER_DRAWS, DEFAULT_OUTER_REPLICATES,
};
use cppp_core::nonparametric::{compare_np, DpPrior, NormalBase};
use cppp_core::normal_normal::NormalNormalConfig;
use cppp_core::registry::{Analysis, Dataset, Registry, RoutePreference};
use cppp_core::stats::RngStream;

use crate::config::{file_sha256, AnalysisConfig};
use crate::data;
use crate::error::{CliError, CliResult};
use crate::record::RunRecord;
use crate::{Command, CommonArgs, ModelArgs};

const DIPPER_REPLICATES: usize = 500;

pub fn run(command: Command, args: &CommonArgs) -> CliResult<()> {
    let started = Instant::now();
    match command {
        Command::Models => {
            let registry = Registry::default();
            let mut out = String::new();
            for (name, summary) in registry.names() {
                out.push_str(&format!("{name:<16}{summary}\n"));
            }
            emit(None, &out)
        }
        Command::Ppp(m) => {
            let (cfg, analysis) = registry_analysis(args, &m)?;
            let report = analysis.ppp(&cfg.settings(), RngStream::new(cfg.seed()))?;
            let ppp = report.value;
            finish("ppp", cfg, started, Some(ppp), None, to_value(&report)?)
        }
        Command::Cppp(m) => {
            let (cfg, analysis) = registry_analysis(args, &m)?;
            let report = analysis.cppp(&cfg.settings(), RngStream::new(cfg.seed()))?;
            let (ppp, cppp) = (report.ppp.value, report.value);
            finish("cppp", cfg, started, Some(ppp), Some(cppp), to_value(&report)?)
        }
        Command::NullDist(m) => {
            let (cfg, analysis) = registry_analysis(args, &m)?;
            let report = analysis.null_ppp(&cfg.settings(), RngStream::new(cfg.seed()))?;
            let rows = report.null_ppp.iter().enumerate().map(|(k, &p)| vec![k.to_string(), number(p)]);
            write_csv(&cfg, &["replicate", "ppp"], rows)
        }
        Command::Curves => curves(args),
        Command::Elicit => elicitation(args, started),
        Command::Dipper { variant } => dipper(args, variant, started),
        Command::CompareNp => nonparametric_comparison(args, started),
        Command::NewcombTable => order_gap_table(args, started),
    }
}

fn resolve(args: &CommonArgs, default_replicates: usize) -> CliResult<AnalysisConfig> {
    AnalysisConfig::resolve(args, DEFAULT_INNER_DRAWS, default_replicates)
}

fn registry_analysis(args: &CommonArgs, m: &ModelArgs) -> CliResult<(AnalysisConfig, Box<dyn Analysis>)> {
    let mut cfg = resolve(args, DEFAULT_OUTER_REPLICATES)?;
    if m.model.is_some() {
        cfg.model = m.model.clone();
    }
    if m.engine {
        cfg.route = RoutePreference::Engine;
    }
    let model = cfg.model.clone().ok_or_else(|| CliError::Config("no model given (use --model)".into()))?;
    let dataset = match &cfg.data {
        None => Dataset::Empty,
        Some(path) => match model.as_str() {
            "dipper" => Dataset::Recaptures(data::recaptures(path)?),
            "gn-regression" => {
                let response = cfg.response.clone().unwrap_or_else(|| "y".into());
                let (x, y) = data::regression(path, &response, cfg.intercept.unwrap_or(true))?;
                Dataset::Regression { x, y }
            }
            _ => Dataset::Observations(data::observations(path)?),
        },
    };
    let analysis = Registry::default().build(&model, &cfg.params, dataset)?;
    Ok((cfg, analysis))
}

fn to_value<T: Serialize>(v: &T) -> CliResult<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| CliError::Output(e.to_string()))
}

fn finish(
    command: &str,
    config: AnalysisConfig,
    started: Instant,
    ppp: Option<f64>,
    cppp: Option<f64>,
    report: serde_json::Value,
) -> CliResult<()> {
    let data_sha256 = config.data.as_deref().map(file_sha256).transpose()?;
    let out = config.out.clone();
    let config = AnalysisConfig { out: None, ..config };
    let record = RunRecord {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: config.hash(),
        config,
        data_sha256,
        wall_time_secs: started.elapsed().as_secs_f64(),
        ppp,
        cppp,
        report,
    };
    let text = serde_json::to_string_pretty(&record).map_err(|e| CliError::Output(e.to_string()))?;
    emit(out.as_deref(), &(text + "\n"))
}

fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Output(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Output(e.to_string())),
    }
}

/// CSV preceded by a `# config-hash:` line.
fn write_csv<I>(cfg: &AnalysisConfig, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let out_err = |e: csv::Error| CliError::Output(e.to_string());
    let mut w = csv::Writer::from_writer(format!("# config-hash: {}\n", cfg.hash()).into_bytes());
    w.write_record(header).map_err(out_err)?;
    for row in rows {
        w.write_record(&row).map_err(out_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    emit(cfg.out.as_deref(), &String::from_utf8_lossy(&bytes))
}

/// Shortest round-tripping form, in exponent notation when tiny or huge.
fn number(v: f64) -> String {
    if v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn observations(cfg: &AnalysisConfig, command: &str) -> CliResult<Vec<f64>> {
    let path = cfg.data.as_deref().ok_or_else(|| CliError::Config(format!("{command} needs --data")))?;
    data::observations(path)
}

fn calibration(cfg: &AnalysisConfig) -> CalibrationOptions {
    let s = cfg.settings();
    CalibrationOptions {
        inner: PppOptions::with_draws(s.draws),
        outer_replicates: s.replicates,
        workers: s.workers,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurvesParams {
    #[serde(default = "CurvesParams::default_n")]
    n: usize,
    #[serde(default = "CurvesParams::default_sigma")]
    sigma: f64,
    #[serde(default)]
    theta0: f64,
    #[serde(default = "CurvesParams::default_sigma0")]
    sigma0: Vec<f64>,
    #[serde(default = "CurvesParams::default_from")]
    ybar_from: f64,
    #[serde(default = "CurvesParams::default_to")]
    ybar_to: f64,
    #[serde(default = "CurvesParams::default_points")]
    points: usize,
}

impl CurvesParams {
    fn default_n() -> usize {
        10
    }
    fn default_sigma() -> f64 {
        1.0
    }
    fn default_sigma0() -> Vec<f64> {
        vec![0.1, 1.0, 5.0]
    }
    fn default_from() -> f64 {
        -3.0
    }
    fn default_to() -> f64 {
        3.0
    }
    fn default_points() -> usize {
        61
    }
}

fn curves(args: &CommonArgs) -> CliResult<()> {
    let cfg = resolve(args, DEFAULT_OUTER_REPLICATES)?;
    let p: CurvesParams = cfg.params("curves")?;
    if p.points < 2 || !(p.ybar_to > p.ybar_from) {
        return Err(CliError::Config("curves need at least 2 points and ybar_to > ybar_from".into()));
    }
    let step = (p.ybar_to - p.ybar_from) / (p.points - 1) as f64;
    let grid: Vec<f64> = (0..p.points).map(|i| p.ybar_from + step * i as f64).collect();
    let mut rows = Vec::new();
    for &s0 in &p.sigma0 {
        let nn = NormalNormalConfig::new(p.n, p.sigma, p.theta0, s0)?;
        for point in nn.curve(&grid)? {
            rows.push(vec![
                number(s0),
                number(point.ybar),
                number(point.ppp),
                number(point.cppp),
                number(point.cppp_star),
            ]);
        }
    }
    write_csv(&cfg, &["sigma0", "ybar", "ppp", "cppp", "cppp_star"], rows)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ElicitParams {
    /// Defaults to the bundled speed-skating problem.
    input: Option<ElicitationInput>,
    mc_size: Option<usize>,
    /// Draws summarizing the induced correlation prior.
    rho_draws: Option<usize>,
}

fn elicitation(args: &CommonArgs, started: Instant) -> CliResult<()> {
    let cfg = resolve(args, DEFAULT_OUTER_REPLICATES)?;
    let p: ElicitParams = cfg.params("elicit")?;
    let input = p.input.unwrap_or_else(ElicitationInput::speedskating);
    let belief = input.belief()?;
    let options = SolverOptions {
        mc_size: p.mc_size.unwrap_or(DEFAULT_MC_SIZE),
        ..Default::default()
    };
    let stream = RngStream::new(cfg.seed());
    let (prior, solution) = elicit(&belief, input.kappa_hat, input.n, input.intercept, &options, stream.substream(0))?;
    let rho = sample_rho_prior(
        &prior.z0,
        &belief,
        p.rho_draws.unwrap_or(DEFAULT_MC_SIZE),
        SigmaMode::Gamma { a0: prior.a0, b0: prior.b0 },
        false,
        stream.substream(1),
    )?;
    let report = json!({
        "z0": prior.z0.as_slice(),
        "b_bar": prior.b_bar.as_slice(),
        "tau": prior.tau,
        "c0": prior.c0,
        "a0": prior.a0,
        "b0": prior.b0,
        "intercept": prior.intercept,
        "objective": solution.objective,
        "iterations": solution.iterations,
        "rho_prior": {
            "mean": rho.mean.as_slice(),
            "sd": rho.sd.as_slice(),
            "correlations": rho.correlations,
            "max_constraint": rho.max_constraint,
        },
    });
    finish("elicit", cfg, started, None, None, report)
}

fn dipper(args: &CommonArgs, variant: Option<String>, started: Instant) -> CliResult<()> {
    let mut cfg = resolve(args, DIPPER_REPLICATES)?;
    cfg.model = Some("dipper".into());
    if let Some(v) = variant {
        let v: Variant = v.parse()?;
        let mut params = if cfg.params.is_object() { cfg.params.clone() } else { json!({}) };
        params["variant"] = to_value(&v)?;
        cfg.params = params;
    } else if cfg.params.get("variant").is_none() {
        let mut params = if cfg.params.is_object() { cfg.params.clone() } else { json!({}) };
        params["variant"] = to_value(&Variant::Tt)?;
        cfg.params = params;
    }
    let dataset = match &cfg.data {
        Some(path) => Dataset::Recaptures(data::recaptures(path)?),
        None => Dataset::Empty,
    };
    let analysis = Registry::default().build("dipper", &cfg.params, dataset)?;
    let report = analysis.cppp(&cfg.settings(), RngStream::new(cfg.seed()))?;
    let (ppp, cppp) = (report.ppp.value, report.value);
    finish("dipper", cfg, started, Some(ppp), Some(cppp), to_value(&report)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DirichletParams {
    a: Option<f64>,
    base_mean: Option<f64>,
    base_sd: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GnScalarPrior {
    a: f64,
    b: f64,
    mu0: f64,
    c0: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareParams {
    dirichlet: Option<DirichletParams>,
    normal: Option<GnScalarPrior>,
}

fn nonparametric_comparison(args: &CommonArgs, started: Instant) -> CliResult<()> {
    let cfg = resolve(args, DEFAULT_OUTER_REPLICATES)?;
    let p: CompareParams = cfg.params("compare-np")?;
    let y = observations(&cfg, "compare-np")?;
    let centred = DpPrior::centred_on(&y)?;
    let d = p.dirichlet.unwrap_or(DirichletParams { a: None, base_mean: None, base_sd: None });
    let dp = DpPrior::new(
        d.a.unwrap_or(centred.a),
        NormalBase {
            mean: d.base_mean.unwrap_or(centred.base.mean),
            sd: d.base_sd.unwrap_or(centred.base.sd),
        },
    )?;
    // unit-information normal prior matching the default base measure
    let gn = p.normal.unwrap_or(GnScalarPrior {
        a: 1.0,
        b: centred.base.sd * centred.base.sd,
        mu0: centred.base.mean,
        c0: 1.0,
    });
    let gn = GnPrior::scalar(gn.a, gn.b, gn.mu0, gn.c0)?;
    let result = compare_np(&y, &dp, &gn, &calibration(&cfg), RngStream::new(cfg.seed()))?;
    let report = json!({
        "dirichlet": summary(&result.dirichlet),
        "normal": summary(&result.normal),
    });
    finish("compare-np", cfg, started, None, None, report)
}

fn summary(c: &cppp_core::engine::CpppEstimate) -> serde_json::Value {
    json!({
        "ppp": c.ppp_obs.value,
        "ppp_mc_se": c.ppp_obs.mc_se,
        "cppp": c.value,
        "ci_95": c.ci_95,
        "inner_draws": c.inner_draws,
        "outer_replicates": c.outer_replicates,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GapTableParams {
    #[serde(default = "GapTableParams::default_mu0")]
    mu0: f64,
    #[serde(default = "GapTableParams::default_k")]
    k: usize,
    #[serde(default = "GapTableParams::default_vague_draws")]
    vague_draws: usize,
    sweep: Option<Vec<f64>>,
}

impl GapTableParams {
    fn default_mu0() -> f64 {
        30.0
    }
    fn default_k() -> usize {
        6
    }
    fn default_vague_draws() -> usize {
        200_000
    }
}

fn order_gap_table(args: &CommonArgs, started: Instant) -> CliResult<()> {
    let cfg = resolve(args, DEFAULT_OUTER_REPLICATES)?;
    let p: GapTableParams = cfg.params("newcomb-table")?;
    let y = observations(&cfg, "newcomb-table")?;
    let n = y.len();
    let gap = OrderGap::symmetric(n, p.k)?;
    let stream = RngStream::new(cfg.seed());
    let vague = estimate_ppp(
        &VagueNormalModel::new(n)?,
        &gap,
        &y,
        &PppOptions::with_draws(p.vague_draws),
        stream.substream(0),
    )?;
    let options = calibration(&cfg);
    let sweep = p.sweep.unwrap_or_else(|| SENSITIVITY_SWEEP.to_vec());
    let mut rows = Vec::with_capacity(sweep.len());
    for (k, &c) in sweep.iter().enumerate() {
        let model = NormalSampleModel::new(sweep_prior(c, p.mu0)?, n)?;
        let r = calibrate_cppp(&model, &gap, &y, &options, stream.substream(k as u64 + 1))?;
        rows.push(json!({ "c": c, "ppp": r.ppp_obs.value, "cppp": r.value, "ci_95": r.ci_95 }));
    }
    let report = json!({
        "n": n,
        "k": p.k,
        "vague_ppp": vague.value,
        "vague_mc_se": vague.mc_se,
        "rows": rows,
    });
    finish("newcomb-table", cfg, started, Some(vague.value), None, report)
}
