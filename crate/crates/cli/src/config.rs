//! JSON experiment configuration and its mapping onto library types.

use anyhow::{anyhow, bail, Result};
use serde::Deserialize;

use gossipnet::graph::{
    assign_straggler_delays, build_topology, DelayProfile, GraphKind, Topology,
};
use gossipnet::objective::ProblemInstance;
use gossipnet::rng::{stream, StreamId};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: TopologySpec,
    pub delays: DelaySpec,
    #[serde(default)]
    pub epsilon: f64,
    pub instance: InstanceSpec,
    #[serde(default)]
    pub model: Model,
    #[serde(default)]
    pub algorithm: AlgorithmSpec,
    pub horizon: f64,
    #[serde(default)]
    pub record: RecordSpec,
    #[serde(default)]
    pub seeds: SeedSpec,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub emit_svg: bool,
    #[serde(default)]
    pub record_activation_log: bool,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TopologySpec {
    Path {
        params: Vec<usize>,
    },
    Cycle {
        params: Vec<usize>,
    },
    Grid2d {
        params: Vec<usize>,
    },
    Complete {
        params: Vec<usize>,
    },
    /// Pass-through edge-list graphs.
    Edges {
        n: usize,
        edges: Vec<(usize, usize)>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum DelaySpec {
    Straggler { fraction: f64, slow: f64, fast: f64 },
    Explicit { node_delays: Vec<f64> },
    Uniform { tau: f64 },
}

#[derive(Debug, Deserialize)]
pub struct InstanceSpec {
    pub family: String,
    #[serde(default)]
    pub curvatures: Option<serde_json::Value>,
    #[serde(default)]
    pub centers: Option<serde_json::Value>,
    #[serde(default = "default_dim")]
    pub dimension: usize,
}

fn default_dim() -> usize {
    1
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Sync,
    #[default]
    Ppp,
    Rlnm,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmSpec {
    #[default]
    Cdm,
    Cacdm,
    SyncGossip,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum RecordSpec {
    Count { count: usize },
    Times { times: Vec<f64> },
}

impl Default for RecordSpec {
    fn default() -> Self {
        RecordSpec::Count { count: 200 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Count(u64),
    List(Vec<u64>),
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::Count(1)
    }
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::Count(n) => (0..*n).collect(),
            SeedSpec::List(v) => v.clone(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.horizon <= 0.0 {
            bail!("horizon must be positive");
        }
        if self.epsilon < 0.0 {
            bail!("epsilon must be non-negative");
        }
        if self.algorithm == AlgorithmSpec::SyncGossip && self.model != Model::Sync {
            bail!("sync-gossip requires model = sync");
        }
        if self.model == Model::Sync && self.algorithm != AlgorithmSpec::SyncGossip {
            bail!("model sync requires algorithm = sync-gossip");
        }
        Ok(())
    }

    pub fn build_topology(&self) -> Result<Topology> {
        let kind = match &self.topology {
            TopologySpec::Path { params } => GraphKind::Path(param(params, 0)?),
            TopologySpec::Cycle { params } => GraphKind::Cycle(param(params, 0)?),
            TopologySpec::Grid2d { params } => {
                GraphKind::Grid2d(param(params, 0)?, param(params, 1)?)
            }
            TopologySpec::Complete { params } => GraphKind::Complete(param(params, 0)?),
            TopologySpec::Edges { n, edges } => {
                return Ok(Topology::from_edges(*n, edges.clone())?);
            }
        };
        Ok(build_topology(kind)?)
    }

    /// The delay profile; straggler placement draws from the topology
    /// sub-stream of `seed`.
    pub fn build_delays(&self, topology: &Topology, seed: u64) -> Result<DelayProfile> {
        Ok(match &self.delays {
            DelaySpec::Straggler {
                fraction,
                slow,
                fast,
            } => {
                let mut rng = stream(seed, StreamId::Topology);
                assign_straggler_delays(topology, *fraction, *slow, *fast, self.epsilon, &mut rng)?
            }
            DelaySpec::Explicit { node_delays } => {
                DelayProfile::from_node_delays(topology, node_delays.clone(), self.epsilon)?
            }
            DelaySpec::Uniform { tau } => DelayProfile::uniform(topology, *tau, self.epsilon)?,
        })
    }

    pub fn build_instance(&self, topology: &Topology) -> Result<ProblemInstance> {
        if self.instance.family != "quadratic" {
            bail!("unsupported family {:?}", self.instance.family);
        }
        let n = topology.node_count();
        let d = self.instance.dimension;
        let curvatures: Vec<f64> = match &self.instance.curvatures {
            None => vec![1.0; n],
            Some(serde_json::Value::Number(x)) => {
                vec![x.as_f64().ok_or_else(|| anyhow!("bad curvature"))?; n]
            }
            Some(serde_json::Value::Array(xs)) => {
                let v: Vec<f64> = xs
                    .iter()
                    .map(|x| x.as_f64().ok_or_else(|| anyhow!("bad curvature entry")))
                    .collect::<Result<_>>()?;
                if v.len() != n {
                    bail!("curvature count {} != node count {n}", v.len());
                }
                v
            }
            Some(other) => bail!("bad curvatures: {other}"),
        };
        let centers: Vec<Vec<f64>> = match &self.instance.centers {
            None | Some(serde_json::Value::String(_)) => {
                let tag = match &self.instance.centers {
                    Some(serde_json::Value::String(s)) => s.as_str(),
                    _ => "e0",
                };
                if tag != "e0" {
                    bail!("unknown centers tag {tag:?}");
                }
                (0..n)
                    .map(|i| {
                        let mut c = vec![0.0; d];
                        if i == 0 {
                            c[0] = 1.0;
                        }
                        c
                    })
                    .collect()
            }
            Some(serde_json::Value::Array(rows)) => {
                let v: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|row| {
                        row.as_array()
                            .ok_or_else(|| anyhow!("center row must be an array"))?
                            .iter()
                            .map(|x| x.as_f64().ok_or_else(|| anyhow!("bad center entry")))
                            .collect()
                    })
                    .collect::<Result<_>>()?;
                if v.len() != n || v.iter().any(|r| r.len() != d) {
                    bail!("centers must be {n} rows of dimension {d}");
                }
                v
            }
            Some(other) => bail!("bad centers: {other}"),
        };
        Ok(ProblemInstance::quadratic(curvatures, centers)?)
    }

    pub fn record_count(&self) -> usize {
        match &self.record {
            RecordSpec::Count { count } => *count,
            RecordSpec::Times { times } => times.len(),
        }
    }

    pub fn record_times(&self) -> Option<Vec<f64>> {
        match &self.record {
            RecordSpec::Count { .. } => None,
            RecordSpec::Times { times } => Some(times.clone()),
        }
    }
}

fn param(params: &[usize], k: usize) -> Result<usize> {
    params
        .get(k)
        .copied()
        .ok_or_else(|| anyhow!("missing topology parameter {k}"))
}
