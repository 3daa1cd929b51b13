use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statica_core::catalog::{build, sphere_area};
use statica_core::chart::End;
use statica_core::integrals::FluxWeight;
use statica_core::static_ops::Positivity;
use statica_core::{
    parse, BoundaryFace, ChartMetric, Cohomog1Metric, ExampleName, Interval, Params,
    PotentialSpec, QuadratureSettings, SamplePlan, Tolerances,
};

use crate::CliError;

/// Everything a command needs, as read from `--config` and inline flags.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSpec>,
    /// Potential `V` in the expression grammar; examples supply their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positivity: Option<Positivity>,
    /// Constant `H`; the face average is used when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_curvature: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sampling: SamplePlan,
    #[serde(default)]
    pub quadrature: QuadratureSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<FluxWeight>,
    /// Scan radii for the truncated identity and radial curvature tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    /// Chart points at which `curvature` prints full tensors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    /// CSV destination for flux scans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Example {
        name: ExampleName,
        #[serde(default)]
        params: Params,
    },
    Cohomog1(Cohomog1Spec),
    Chart(ChartSpec),
}

/// `A(s)² ds² + B(s)² b` over a fiber with `Ric_b = κ b`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cohomog1Spec {
    pub n: usize,
    pub coord: String,
    pub lapse: String,
    pub warp: String,
    pub kappa: f64,
    /// Defaults to the round sphere's area.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_volume: Option<f64>,
    #[serde(default)]
    pub fiber_flat: bool,
    /// `[lo, hi]`, `null` for an unbounded end.
    pub domain: [Option<f64>; 2],
    pub boundary: End,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub coords: Vec<String>,
    /// Full symmetric matrix of component expressions.
    pub components: Vec<Vec<String>>,
    pub domain: Vec<[Option<f64>; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face: Option<FaceSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceSpec {
    pub coord: String,
    pub end: End,
}

fn interval([lo, hi]: [Option<f64>; 2]) -> Interval {
    Interval::new(lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY))
}

fn expr(src: &str, what: &str) -> Result<statica_core::Expr, CliError> {
    parse(src).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        CliError::Config(format!("{}: at `{at}`: {}", path.display(), e.into_inner()))
    })
}

/// A metric ready for the engines.
pub struct Prepared {
    pub chart: ChartMetric,
    pub radial: Option<Cohomog1Metric>,
    pub potential: Option<PotentialSpec>,
}

impl Prepared {
    pub fn potential(&self) -> Result<&PotentialSpec, CliError> {
        self.potential
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a `potential`".into()))
    }

    pub fn radial(&self) -> Result<&Cohomog1Metric, CliError> {
        self.radial
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a cohomogeneity-one metric".into()))
    }
}

impl RunConfig {
    pub fn prepare(&self) -> Result<Prepared, CliError> {
        let spec = self
            .metric
            .as_ref()
            .ok_or_else(|| CliError::Config("no metric given; use --example or a `metric` entry".into()))?;
        let mut prepared = match spec {
            MetricSpec::Example { name, params } => {
                let d = build(*name, params)?;
                Prepared { chart: d.chart()?, radial: Some(d.metric), potential: Some(d.potential) }
            }
            MetricSpec::Cohomog1(c) => {
                let m = Cohomog1Metric::new(
                    c.n,
                    &c.coord,
                    expr(&c.lapse, "metric.cohomog1.lapse")?,
                    expr(&c.warp, "metric.cohomog1.warp")?,
                    c.kappa,
                    c.fiber_volume.unwrap_or_else(|| sphere_area(c.n)),
                    c.fiber_flat,
                    interval(c.domain),
                    c.boundary,
                )?;
                Prepared { chart: m.to_chart()?, radial: Some(m), potential: None }
            }
            MetricSpec::Chart(c) => {
                let components = c
                    .components
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        row.iter()
                            .enumerate()
                            .map(|(j, src)| expr(src, &format!("metric.chart.components[{i}][{j}]")))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let face = match &c.face {
                    None => None,
                    Some(f) => Some(BoundaryFace {
                        coord: c.coords.iter().position(|x| *x == f.coord).ok_or_else(|| {
                            CliError::Config(format!("metric.chart.face.coord: unknown coordinate `{}`", f.coord))
                        })?,
                        end: f.end,
                    }),
                };
                let domain = c.domain.iter().copied().map(interval).collect();
                let chart = ChartMetric::new(c.coords.clone(), components, domain, face)?;
                Prepared { chart, radial: None, potential: None }
            }
        };
        if let Some(src) = &self.potential {
            prepared.potential = Some(PotentialSpec::new(expr(src, "potential")?));
        }
        if let (Some(p), Some(pos)) = (prepared.potential.as_mut(), self.positivity) {
            p.positivity = pos;
        }
        Ok(prepared)
    }
}
