//! Analyses selectable by name: each pairs a prior/model with its
//! discrepancy and knows which of its quantities have closed forms.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::capture_recapture::{ChainConfig, DipperModel, RecaptureData, Variant};
use crate::conjugate_gn::{
    cppp_regression_proportional, null_ppp_regression_proportional, ppp_gn_scalar, ppp_proportional, GnPrior,
    GnRegressionModel, IntegralMethod, NormalSampleModel, OrderGap, RegressionData, StandardizedMeanGap,
    VagueNormalModel,
};
use crate::engine::{
    calibrate_against, calibrate_cppp, estimate_ppp, null_ppp_sample, CalibrationOptions, ChainDiagnostics,
    Discrepancy, GenerativeModel, PppEstimate, PppOptions, PriorPredictive,
};
use crate::error::{Error, Result};
use crate::nonparametric::{DirichletModel, DpPrior, NormalBase, ScaledKs};
use crate::normal_normal::{MixtureComponent, MixtureModel, MixturePrior, NormalNormalConfig, NormalNormalModel};
use crate::stats::RngStream;

/// Which computation produced a number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    ClosedForm,
    Engine,
}

/// `Auto` takes a closed form whenever the analysis has one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoutePreference {
    #[default]
    Auto,
    Engine,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    /// Posterior draws `A`.
    pub draws: usize,
    /// Null replicates `B`.
    pub replicates: usize,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub route: RoutePreference,
}

impl Default for RunSettings {
    fn default() -> Self {
        let c = CalibrationOptions::default();
        RunSettings {
            draws: c.inner.draws,
            replicates: c.outer_replicates,
            workers: c.workers,
            route: RoutePreference::Auto,
        }
    }
}

impl RunSettings {
    fn calibration(&self) -> CalibrationOptions {
        CalibrationOptions {
            inner: PppOptions::with_draws(self.draws),
            outer_replicates: self.replicates,
            workers: self.workers,
        }
    }

    fn closed_form(&self) -> bool {
        self.route == RoutePreference::Auto
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PppReport {
    pub value: f64,
    /// Absent for closed forms.
    pub mc_se: Option<f64>,
    pub route: Route,
    pub tie_count: usize,
    pub rao_blackwellized: bool,
    pub diagnostics: Option<ChainDiagnostics>,
}

impl PppReport {
    fn closed(value: f64) -> Self {
        PppReport {
            value,
            mc_se: None,
            route: Route::ClosedForm,
            tie_count: 0,
            rao_blackwellized: false,
            diagnostics: None,
        }
    }
}

impl From<PppEstimate> for PppReport {
    fn from(e: PppEstimate) -> Self {
        PppReport {
            value: e.value,
            mc_se: Some(e.mc_se),
            route: Route::Engine,
            tie_count: e.tie_count,
            rao_blackwellized: e.rao_blackwellized,
            diagnostics: e.diagnostics,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpppReport {
    pub ppp: PppReport,
    pub value: f64,
    /// Absent when the null law is used exactly.
    pub ci_95: Option<(f64, f64)>,
    pub route: Route,
    /// Null ppp sample the value was read from, if one was drawn.
    pub null_ppp: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullReport {
    pub null_ppp: Vec<f64>,
    pub route: Route,
}

/// A configured analysis of one data set.
pub trait Analysis: Send + Sync {
    fn name(&self) -> &'static str;

    fn ppp(&self, settings: &RunSettings, stream: RngStream) -> Result<PppReport>;

    fn cppp(&self, settings: &RunSettings, stream: RngStream) -> Result<CpppReport>;

    /// `B` draws of ppp(Y) with `Y` from the prior predictive.
    fn null_ppp(&self, settings: &RunSettings, stream: RngStream) -> Result<NullReport>;
}

/// Data handed to an analysis builder.
#[derive(Clone, Debug, Default)]
pub enum Dataset {
    #[default]
    Empty,
    Observations(Vec<f64>),
    Regression { x: DMatrix<f64>, y: DVector<f64> },
    Recaptures(RecaptureData),
}

impl Dataset {
    fn kind(&self) -> &'static str {
        match self {
            Dataset::Empty => "no data",
            Dataset::Observations(_) => "observations",
            Dataset::Regression { .. } => "regression data",
            Dataset::Recaptures(_) => "a recapture table",
        }
    }
}

pub type Builder = fn(&serde_json::Value, Dataset) -> Result<Box<dyn Analysis>>;

struct Entry {
    builder: Builder,
    summary: &'static str,
}

/// Name → analysis builder.
pub struct Registry {
    entries: BTreeMap<String, Entry>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Registry::empty();
        r.register("normal-normal", "normal mean, known σ, normal prior", build_normal_normal);
        r.register("gn-scalar", "normal sample, unknown σ, GN or vague prior", build_gn_scalar);
        r.register("gn-regression", "normal linear regression, GN prior", build_gn_regression);
        r.register("mixture", "normal mean, known σ, mixture-of-normals prior", build_mixture);
        r.register("dipper", "capture-recapture survival, uniform priors", build_dipper);
        r.register("nonparametric", "Dirichlet-process prior, scaled KS discrepancy", build_nonparametric);
        r
    }
}

impl Registry {
    pub fn empty() -> Self {
        Registry { entries: BTreeMap::new() }
    }

    pub fn register(&mut self, name: &str, summary: &'static str, builder: Builder) {
        self.entries.insert(name.to_string(), Entry { builder, summary });
    }

    pub fn names(&self) -> impl Iterator<Item = (&str, &'static str)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), e.summary))
    }

    pub fn build(&self, name: &str, params: &serde_json::Value, data: Dataset) -> Result<Box<dyn Analysis>> {
        let entry = self.entries.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.entries.keys().map(String::as_str).collect();
            Error::Config(format!("unknown model '{name}' (known: {})", known.join(", ")))
        })?;
        (entry.builder)(params, data)
    }
}

fn parse<P: DeserializeOwned>(model: &str, params: &serde_json::Value) -> Result<P> {
    let value = if params.is_null() { serde_json::json!({}) } else { params.clone() };
    serde_json::from_value(value).map_err(|e| Error::Config(format!("{model} parameters: {e}")))
}

fn wrong_data(model: &str, want: &str, got: &Dataset) -> Error {
    Error::Data(format!("{model} needs {want}, got {}", got.kind()))
}

fn engine_ppp<M, D>(model: &M, disc: &D, y: &M::Data, s: &RunSettings, stream: RngStream) -> Result<PppReport>
where
    M: GenerativeModel,
    D: Discrepancy<M::Param, M::Data>,
{
    estimate_ppp(model, disc, y, &PppOptions::with_draws(s.draws), stream).map(Into::into)
}

fn engine_cppp<M, D>(model: &M, disc: &D, y: &M::Data, s: &RunSettings, stream: RngStream) -> Result<CpppReport>
where
    M: GenerativeModel,
    D: Discrepancy<M::Param, M::Data>,
{
    let c = calibrate_cppp(model, disc, y, &s.calibration(), stream)?;
    Ok(CpppReport {
        ppp: c.ppp_obs.into(),
        value: c.value,
        ci_95: Some(c.ci_95),
        route: Route::Engine,
        null_ppp: Some(c.null_ppp),
    })
}

fn engine_null<M, D>(model: &M, disc: &D, s: &RunSettings, stream: RngStream) -> Result<NullReport>
where
    M: GenerativeModel,
    D: Discrepancy<M::Param, M::Data>,
{
    if !model.prior_is_samplable() {
        return Err(Error::ImproperPrior("null distribution needs a proper prior".into()));
    }
    Ok(NullReport {
        null_ppp: null_ppp_sample(model, disc, &PriorPredictive(model), &s.calibration(), stream)?,
        route: Route::Engine,
    })
}

fn mean(y: &[f64]) -> f64 {
    y.iter().sum::<f64>() / y.len() as f64
}

/// Observations, or `n` copies of a given mean when only the summary is
/// supplied (the mean is sufficient for the known-σ models).
fn observations_or_mean(model: &str, data: Dataset, n: Option<usize>, ybar: Option<f64>) -> Result<Vec<f64>> {
    match (data, ybar) {
        (Dataset::Observations(y), None) => {
            if n.is_some_and(|n| n != y.len()) {
                return Err(Error::Config(format!("{model}: n does not match the {} observations", y.len())));
            }
            Ok(y)
        }
        (Dataset::Empty, Some(ybar)) => {
            let n = n.ok_or_else(|| Error::Config(format!("{model}: a summary mean needs n")))?;
            Ok(vec![ybar; n])
        }
        (Dataset::Empty, None) => {
            let n = n.ok_or_else(|| Error::Config(format!("{model}: needs data, or n (with optional ybar)")))?;
            Ok(vec![0.0; n])
        }
        (Dataset::Observations(_), Some(_)) => {
            Err(Error::Config(format!("{model}: give either observations or ybar, not both")))
        }
        (other, _) => Err(wrong_data(model, "observations", &other)),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NormalNormalParams {
    sigma: f64,
    theta0: f64,
    sigma0: f64,
    n: Option<usize>,
    ybar: Option<f64>,
}

struct NormalNormalAnalysis {
    model: NormalNormalModel,
    y: Vec<f64>,
}

fn build_normal_normal(params: &serde_json::Value, data: Dataset) -> Result<Box<dyn Analysis>> {
    let p: NormalNormalParams = parse("normal-normal", params)?;
    let y = observations_or_mean("normal-normal", data, p.n, p.ybar)?;
    let config = NormalNormalConfig::new(y.len(), p.sigma, p.theta0, p.sigma0)?;
    Ok(Box::new(NormalNormalAnalysis {
        model: NormalNormalModel::new(config)?,
        y,
    }))
}

impl Analysis for NormalNormalAnalysis {
    fn name(&self) -> &'static str {
        "normal-normal"
    }

    fn ppp(&self, s: &RunSettings, stream: RngStream) -> Result<PppReport> {
        if s.closed_form() {
            return Ok(PppReport::closed(self.model.config.ppp_closed_form(mean(&self.y))?));
        }
        engine_ppp(&self.model, &self.model.discrepancy(), &self.y, s, stream)
    }

    fn cppp(&self, s: &RunSettings, stream: RngStream) -> Result<CpppReport> {
        if s.closed_form() {
            let ybar = mean(&self.y);
            return Ok(CpppReport {
                ppp: PppReport::closed(self.model.config.ppp_closed_form(ybar)?),
                value: self.model.config.cppp_closed_form(ybar)?,
                ci_95: None,
                route: Route::ClosedForm,
                null_ppp: None,
            });
        }
        engine_cppp(&self.model, &self.model.discrepancy(), &self.y, s, stream)
    }

    fn null_ppp(&self, s: &RunSettings, stream: RngStream) -> Result<NullReport> {
        if s.closed_form() {
            return Ok(NullReport {
                null_ppp: self.model.config.null_ppp_sample(s.replicates, &mut stream.rng())?,
                route: Route::ClosedForm,
            });
        }
        engine_null(&self.model, &self.model.discrepancy(), s, stream)
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GnScalarPrior {
    a: f64,
    b: f64,
    mu0: f64,
    c0: f64,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum ScalarDiscrepancy {
    /// `λ n (ȳ − μ)²`.
    #[default]
    StandardizedMean,
    /// `|y_(n+1−k) − μ| − |y_(k) − μ|`.
    OrderGap { k: usize },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GnScalarParams {
    /// Absent means the vague prior `π(μ, σ) ∝ 1/σ`.
    prior: Option<GnScalarPrior>,
    #[serde(default)]
    discrepancy: ScalarDiscrepancy,
}

struct GnScalarAnalysis {
    prior: Option<GnPrior>,
    discrepancy: ScalarDiscrepancy,
    y: Vec<f64>,
}

fn build_gn_scalar(params: &serde_json::Value, data: Dataset) -> Result<Box<dyn Analysis>> {
    let p: GnScalarParams = parse("gn-scalar", params)?;
    let y = match data {
        Dataset::Observations(y) if y.len() >= 2 => y,
        Dataset::Observations(_) => return Err(Error::Data("gn-scalar needs at least two observations".into())),
        other => return Err(wrong_data("gn-scalar", "observations", &other)),
    };
    if let ScalarDiscrepancy::OrderGap { k } = p.discrepancy {
        OrderGap::symmetric(y.len(), k).map_err(|e| Error::Config(e.to_string()))?;
    }
    let prior = p.prior.map(|q| GnPrior::scalar(q.a, q.b, q.mu0, q.c0)).transpose()?;
    Ok(Box::new(GnScalarAnalysis {
        prior,
        discrepancy: p.discrepancy,
        y,
    }))
}

impl GnScalarAnalysis {
    fn has_closed_form(&self, s: &RunSettings) -> bool {
        s.closed_form() && self.prior.is_some() && matches!(self.discrepancy, ScalarDiscrepancy::StandardizedMean)
    }

    /// Runs `f` with whichever model and discrepancy are configured.
    fn with_engine<T>(&self, f: impl EngineTask<T>) -> Result<T> {
        let n = self.y.len();
        match (&self.prior, self.discrepancy) {
            (Some(prior), ScalarDiscrepancy::StandardizedMean) => {
                f.run(&NormalSampleModel::new(prior.clone(), n)?, &StandardizedMeanGap, &self.y)
            }
            (Some(prior), ScalarDiscrepancy::OrderGap { k }) => {
                f.run(&NormalSampleModel::new(prior.clone(), n)?, &OrderGap::symmetric(n, k)?, &self.y)
            }
            (None, ScalarDiscrepancy::StandardizedMean) => f.run(&VagueNormalModel::new(n)?, &StandardizedMeanGap, &self.y),
            (None, ScalarDiscrepancy::OrderGap { k }) => {
                f.run(&VagueNormalModel::new(n)?, &OrderGap::symmetric(n, k)?, &self.y)
            }
        }
    }
}

/// A computation generic over the model types of one analysis.
trait EngineTask<T> {
    fn run<M, D>(self, model: &M, disc: &D, y: &M::Data) -> Result<T>
    where
        M: GenerativeModel,
        D: Discrepancy<M::Param, M::Data>;
}

struct PppTask<'a>(&'a RunSettings, RngStream);
struct CpppTask<'a>(&'a RunSettings, RngStream);
struct NullTask<'a>(&'a RunSettings, RngStream);

impl EngineTask<PppReport> for PppTask<'_> {
    fn run<M, D>(self, model: &M, disc: &D, y: &M::Data) -> Result<PppReport>
    where
        M: GenerativeModel,
        D: Discrepancy<M::Param, M::Data>,
    {
        engine_ppp(model, disc, y, self.0, self.1)
    }
}

impl EngineTask<CpppReport> for CpppTask<'_> {
    fn run<M, D>(self, model: &M, disc: &D, y: &M::Data) -> Result<CpppReport>
    where
        M: GenerativeModel,
        D: Discrepancy<M::Param, M::Data>,
    {
        engine_cppp(model, disc, y, self.0, self.1)
    }
}

impl EngineTask<NullReport> for NullTask<'_> {
    fn run<M, D>(self, model: &M, disc: &D, _y: &M::Data) -> Result<NullReport>
    where
        M: GenerativeModel,
        D: Discrepancy<M::Param, M::Data>,
    {
        engine_null(model, disc, self.0, self.1)
    }
}

impl Analysis for GnScalarAnalysis {
    fn name(&self) -> &'static str {
        "gn-scalar"
    }

    fn ppp(&self, s: &RunSettings, stream: RngStream) -> Result<PppReport> {
        if let (true, Some(prior)) = (self.has_closed_form(s), &self.prior) {
            return Ok(PppReport::closed(ppp_gn_scalar(prior, &self.y, IntegralMethod::default(), stream)?));
        }
        self.with_engine(PppTask(s, stream))
    }

    fn cppp(&self, s: &RunSettings, stream: RngStream) -> Result<CpppReport> {
        if let (true, Some(prior)) = (self.has_closed_form(s), &self.prior) {
            let data = RegressionData::location(&self.y)?;
            return proportional_report(prior, &data, s, stream);
        }
        self.with_engine(CpppTask(s, stream))
    }

    fn null_ppp(&self, s: &RunSettings, stream: RngStream) -> Result<NullReport> {
        if let (true, Some(prior)) = (self.has_closed_form(s), &self.prior) {
            return Ok(NullReport {
                null_ppp: null_ppp_regression_proportional(1, prior.c0, self.y.len(), s.replicates, &mut stream.rng())?,
                route: Route::ClosedForm,
            });
        }
        self.with_engine(NullTask(s, stream))
    }
}

fn proportional_report(prior: &GnPrior, data: &RegressionData, s: &RunSettings, stream: RngStream) -> Result<CpppReport> {
    let c = cppp_regression_proportional(prior, data, s.replicates, IntegralMethod::default(), stream)?;
    Ok(CpppReport {
        ppp: PppReport::closed(c.ppp),
        value: c.cppp,
        ci_95: Some(c.ci_95),
        route: Route::ClosedForm,
        null_ppp: Some(c.null_ppp),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GnRegressionParams {
    a: f64,
    b: f64,
    beta0: Vec<f64>,
    c0: f64,
    /// Rows of `Ω₀`; absent means `XᵀX / n`.
    omega0: Option<Vec<Vec<f64>>>,
}

struct GnRegressionAnalysis {
    model: GnRegressionModel,
    data: RegressionData,
    proportional: bool,
}

fn build_gn_regression(params: &serde_json::Value, data: Dataset) -> Result<Box<dyn Analysis>> {
    let p: GnRegressionParams = parse("gn-regression", params)?;
    let data = match data {
        Dataset::Regression { x, y } => RegressionData::new(x, y)?,
        other => return Err(wrong_data("gn-regression", "regression data", &other)),
    };
    let dim = data.p();
    if p.beta0.len() != dim {
        return Err(Error::Config(format!("beta0 has {} entries, design has {dim} columns", p.beta0.len())));
    }
    let (omega0, proportional) = match p.omega0 {
        None => (data.omega_n() / data.n() as f64, true),
        Some(rows) => {
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(Error::Config(format!("omega0 must be {dim}×{dim}")));
            }
            let m = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
            let target = data.omega_n() / data.n() as f64;
            let proportional = (&m - &target).amax() <= 1e-8 * target.amax();
            (m, proportional)
        }
    };
    let prior = GnPrior::new(p.a, p.b, DVector::from_vec(p.beta0), p.c0, omega0)?;
    Ok(Box::new(GnRegressionAnalysis {
        model: GnRegressionModel::new(prior, data.x().clone())?,
        data,
        proportional,
    }))
}

impl Analysis for GnRegressionAnalysis {
    fn name(&self) -> &'static str {
        "gn-regression"
    }

    fn ppp(&self, s: &RunSettings, stream: RngStream) -> Result<PppReport> {
        if s.closed_form() && self.proportional {
            let v = ppp_proportional(self.model.prior(), &self.data, IntegralMethod::default(), stream)?;
            return Ok(PppReport::closed(v));
        }
        engine_ppp(&self.model, &self.model.discrepancy()?, self.data.y(), s, stream)
    }

    fn cppp(&self, s: &RunSettings, stream: RngStream) -> Result<CpppReport> {
        if s.closed_form() && self.proportional {
            return proportional_report(self.model.prior(), &self.data, s, stream);
        }
        engine_cppp(&self.model, &self.model.discrepancy()?, self.data.y(), s, stream)
    }

    fn null_ppp(&self, s: &RunSettings, stream: RngStream) -> Result<NullReport> {
        if s.closed_form() && self.proportional {
            let (p, n) = (self.data.p(), self.data.n());
            return Ok(NullReport {
                null_ppp: null_ppp_regression_proportional(p, self.model.prior().c0, n, s.replicates, &mut stream.rng())?,
                route: Route::ClosedForm,
            });
        }
        engine_null(&self.model, &self.model.discrepancy()?, s, stream)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureParams {
    sigma: f64,
    components: Vec<MixtureComponent>,
    n: Option<usize>,
    ybar: Option<f64>,
}

struct MixtureAnalysis {
    model: MixtureModel,
    y: Vec<f64>,
}

fn build_mixture(params: &serde_json::Value, data: Dataset) -> Result<Box<dyn Analysis>> {
    let p: MixtureParams = parse("mixture", params)?;
    let y = observations_or_mean("mixture", data, p.n, p.ybar)?;
    let prior = MixturePrior::new(p.components)?;
    Ok(Box::new(MixtureAnalysis {
        model: MixtureModel::new(prior, y.len(), p.sigma)?,
        y,
    }))
}

impl MixtureAnalysis {
    fn closed_ppp(&self) -> Result<f64> {
        self.model.prior.ppp(self.model.n, self.model.sigma, mean(&self.y))
    }
}

impl Analysis for MixtureAnalysis {
    fn name(&self) -> &'static str {
        "mixture"
    }

    fn ppp(&self, s: &RunSettings, stream: RngStream) -> Result<PppReport> {
        if s.closed_form() {
            return Ok(PppReport::closed(self.closed_ppp()?));
        }
        engine_ppp(&self.model, &self.model.discrepancy(), &self.y, s, stream)
    }

    /// The null law has no closed form; with `Auto` the exact observed ppp is
    /// calibrated against an engine null sample.
    fn cppp(&self, s: &RunSettings, stream: RngStream) -> Result<CpppReport> {
        if !s.closed_form() {
            return engine_cppp(&self.model, &self.model.discrepancy(), &self.y, s, stream);
        }
        let ppp = self.closed_ppp()?;
        let disc = self.model.discrepancy();
        let c = calibrate_against(ppp, &self.model, &disc, &PriorPredictive(&self.model), &s.calibration(), stream)?;
        Ok(CpppReport {
            ppp: PppReport::closed(ppp),
            value: c.value,
            ci_95: Some(c.ci_95),
            route: Route::Engine,
            null_ppp: Some(c.null_ppp),
        })
    }

    fn null_ppp(&self, s: &RunSettings, stream: RngStream) -> Result<NullReport> {
        engine_null(&self.model, &self.model.discrepancy(), s, stream)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DipperParams {
    variant: Variant,
    chain: Option<ChainConfig>,
}

struct DipperAnalysis {
    model: DipperModel,
    data: RecaptureData,
}

fn build_dipper(params: &serde_json::Value, data: Dataset) -> Result<Box<dyn Analysis>> {
    let p: DipperParams = parse("dipper", params)?;
    let data = match data {
        Dataset::Recaptures(d) => d,
        Dataset::Empty => RecaptureData::dipper(),
        other => return Err(wrong_data("dipper", "a recapture table", &other)),
    };
    Ok(Box::new(DipperAnalysis {
        model: DipperModel::new(&data, p.variant, p.chain.unwrap_or_default()),
        data,
    }))
}

impl Analysis for DipperAnalysis {
    fn name(&self) -> &'static str {
        "dipper"
    }

    fn ppp(&self, s: &RunSettings, stream: RngStream) -> Result<PppReport> {
        engine_ppp(&self.model, &self.model.discrepancy(), &self.data, s, stream)
    }

    fn cppp(&self, s: &RunSettings, stream: RngStream) -> Result<CpppReport> {
        engine_cppp(&self.model, &self.model.discrepancy(), &self.data, s, stream)
    }

    fn null_ppp(&self, s: &RunSettings, stream: RngStream) -> Result<NullReport> {
        engine_null(&self.model, &self.model.discrepancy(), s, stream)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NonparametricParams {
    a: Option<f64>,
    base_mean: Option<f64>,
    base_sd: Option<f64>,
}

struct NonparametricAnalysis {
    model: DirichletModel,
    y: Vec<f64>,
}

fn build_nonparametric(params: &serde_json::Value, data: Dataset) -> Result<Box<dyn Analysis>> {
    let p: NonparametricParams = parse("nonparametric", params)?;
    let y = match data {
        Dataset::Observations(y) => y,
        other => return Err(wrong_data("nonparametric", "observations", &other)),
    };
    let centred = DpPrior::centred_on(&y)?;
    let base = NormalBase {
        mean: p.base_mean.unwrap_or(centred.base.mean),
        sd: p.base_sd.unwrap_or(centred.base.sd),
    };
    let prior = DpPrior::new(p.a.unwrap_or(centred.a), base)?;
    Ok(Box::new(NonparametricAnalysis {
        model: DirichletModel::new(prior, y.len())?,
        y,
    }))
}

impl Analysis for NonparametricAnalysis {
    fn name(&self) -> &'static str {
        "nonparametric"
    }

    fn ppp(&self, s: &RunSettings, stream: RngStream) -> Result<PppReport> {
        engine_ppp(&self.model, &ScaledKs::default(), &self.y, s, stream)
    }

    fn cppp(&self, s: &RunSettings, stream: RngStream) -> Result<CpppReport> {
        engine_cppp(&self.model, &ScaledKs::default(), &self.y, s, stream)
    }

    fn null_ppp(&self, s: &RunSettings, stream: RngStream) -> Result<NullReport> {
        engine_null(&self.model, &ScaledKs::default(), s, stream)
    }
}
