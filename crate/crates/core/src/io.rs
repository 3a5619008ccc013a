//! JSON instance and transition files.
//!
//! Clusters and items are numbered from 1 in files and from 0 in memory.
//! Step indices (diagram `refs`) are 0-based positions in the clustering list.

use serde::{Deserialize, Serialize};

use crate::cdg::{Arc, Exchange, ExchangeKind};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::model::{Clustering, DataSet, SiteVector, SizeBounds};
use crate::pipeline::{DiagramEntry, DiagramRole, Leg, TransitionSequence};
use crate::power_diagram::{Margin, PowerDiagram};

pub const VERSION: u32 = 1;

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn to_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("file types always serialize");
    s.push('\n');
    s
}

fn check_version(v: u32) -> Result<()> {
    if v != VERSION {
        return Err(Error::Unsupported(format!("file version {v}, expected {VERSION}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsFile {
    pub lower: Vec<usize>,
    pub upper: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointFile {
    pub sites: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clustering: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    pub points: Vec<Vec<f64>>,
    pub source: EndpointFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<EndpointFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsFile>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    pub sites: SiteVector,
    pub clustering: Option<Clustering>,
}

/// A validated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub data: DataSet,
    pub source: Endpoint,
    pub target: Option<Endpoint>,
    pub bounds: Option<SizeBounds>,
}

pub fn clustering_from_labels(labels: &[usize], k: usize) -> Result<Clustering> {
    let zero = labels
        .iter()
        .map(|&l| {
            l.checked_sub(1)
                .ok_or_else(|| Error::InvalidClustering("cluster labels start at 1".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Clustering::new(zero, k)
}

pub fn labels(c: &Clustering) -> Vec<usize> {
    c.assignment().iter().map(|&i| i + 1).collect()
}

fn endpoint(f: &EndpointFile, ds: &DataSet) -> Result<Endpoint> {
    let sites = SiteVector::new(f.sites.clone())?;
    let clustering = f
        .clustering
        .as_ref()
        .map(|l| clustering_from_labels(l, sites.k()))
        .transpose()?;
    if let Some(c) = &clustering {
        c.check_against(ds)?;
    }
    sites.check_compatible(ds, sites.k())?;
    Ok(Endpoint { sites, clustering })
}

fn endpoint_file(e: &Endpoint) -> EndpointFile {
    EndpointFile {
        sites: e.sites.to_vecs(),
        clustering: e.clustering.as_ref().map(labels),
    }
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        let f: InstanceFile = serde_json::from_str(text).map_err(parse_error)?;
        check_version(f.version)?;
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    pub fn validate(&self) -> Result<Instance> {
        let data = DataSet::new(self.points.clone())?;
        let source = endpoint(&self.source, &data)?;
        let target = self.target.as_ref().map(|t| endpoint(t, &data)).transpose()?;
        let k = source.sites.k();
        if let Some(t) = &target {
            if t.sites.k() != k {
                return Err(Error::Incompatible(format!(
                    "source has {k} sites, target {}",
                    t.sites.k()
                )));
            }
        }
        let bounds = self
            .bounds
            .as_ref()
            .map(|b| SizeBounds::new(b.lower.clone(), b.upper.clone(), data.len()))
            .transpose()?;
        if let Some(b) = &bounds {
            if b.k() != k {
                return Err(Error::Incompatible(format!("bounds for {} clusters, {k} sites", b.k())));
            }
        }
        Ok(Instance {
            data,
            source,
            target,
            bounds,
        })
    }

    pub fn from_instance(inst: &Instance) -> Self {
        InstanceFile {
            version: VERSION,
            points: inst.data.to_vecs(),
            source: endpoint_file(&inst.source),
            target: inst.target.as_ref().map(endpoint_file),
            bounds: inst.bounds.as_ref().map(|b| BoundsFile {
                lower: b.lower().to_vec(),
                upper: b.upper().to_vec(),
            }),
        }
    }
}

/// Parses and validates an instance.
pub fn parse_instance(text: &str) -> Result<Instance> {
    InstanceFile::parse(text)?.validate()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MarginValue {
    Finite(f64),
    Word(String),
}

fn margin_to_file(m: Margin) -> Option<MarginValue> {
    match m {
        Margin::Finite(v) => Some(MarginValue::Finite(v)),
        Margin::Unbounded => Some(MarginValue::Word("unbounded".into())),
        Margin::None => None,
    }
}

fn margin_from_file(m: &Option<MarginValue>) -> Result<Margin> {
    match m {
        None => Ok(Margin::None),
        Some(MarginValue::Finite(v)) => Ok(Margin::Finite(*v)),
        Some(MarginValue::Word(w)) if w == "unbounded" => Ok(Margin::Unbounded),
        Some(MarginValue::Word(w)) => Err(Error::Incompatible(format!("unknown margin `{w}`"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExchangeFile {
    pub kind: ExchangeKind,
    /// `[from, to, item]`, all 1-based.
    pub arcs: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramFile {
    pub role: DiagramRole,
    pub refs: Vec<usize>,
    pub leg: Leg,
    pub lambda: f64,
    pub sites: Vec<Vec<f64>>,
    pub gammas: Vec<f64>,
    pub weights: Vec<f64>,
    pub margin: Option<MarginValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionFile {
    pub version: u32,
    pub config: Config,
    /// Points after subtracting `offset`; all sites are in this frame.
    pub points: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    pub s: Vec<Vec<f64>>,
    pub t: Vec<Vec<f64>>,
    pub bounds: BoundsFile,
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    pub p: usize,
    pub q: usize,
    pub lambdas: Vec<f64>,
    pub clusterings: Vec<Vec<usize>>,
    pub exchanges: Vec<ExchangeFile>,
    pub diagrams: Vec<DiagramFile>,
}

fn exchange_to_file(e: &Exchange) -> ExchangeFile {
    ExchangeFile {
        kind: e.kind,
        arcs: e.arcs.iter().map(|a| [a.from + 1, a.to + 1, a.item + 1]).collect(),
    }
}

fn exchange_from_file(e: &ExchangeFile) -> Result<Exchange> {
    let arcs = e
        .arcs
        .iter()
        .map(|a| {
            if a.contains(&0) {
                return Err(Error::InvalidClustering("exchange indices start at 1".into()));
            }
            Ok(Arc {
                from: a[0] - 1,
                to: a[1] - 1,
                item: a[2] - 1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Exchange { kind: e.kind, arcs })
}

impl TransitionFile {
    pub fn parse(text: &str) -> Result<Self> {
        let f: TransitionFile = serde_json::from_str(text).map_err(parse_error)?;
        check_version(f.version)?;
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    /// `ds` must be the frame the sequence was computed in.
    pub fn from_sequence(seq: &TransitionSequence, ds: &DataSet, offset: &[f64], config: &Config) -> Self {
        TransitionFile {
            version: VERSION,
            config: *config,
            points: ds.to_vecs(),
            offset: offset.to_vec(),
            s: seq.s.to_vecs(),
            t: seq.t.to_vecs(),
            bounds: BoundsFile {
                lower: seq.bounds.lower().to_vec(),
                upper: seq.bounds.upper().to_vec(),
            },
            source: labels(&seq.source),
            target: labels(&seq.target),
            p: seq.p,
            q: seq.q,
            lambdas: seq.lambdas.clone(),
            clusterings: seq.clusterings.iter().map(labels).collect(),
            exchanges: seq.exchanges.iter().map(exchange_to_file).collect(),
            diagrams: seq
                .diagrams
                .iter()
                .map(|d| DiagramFile {
                    role: d.role,
                    refs: d.refs.clone(),
                    leg: d.leg,
                    lambda: d.lambda,
                    sites: d.diagram.sites.to_vecs(),
                    gammas: d.diagram.gammas.clone(),
                    weights: d.diagram.weights.clone(),
                    margin: margin_to_file(d.diagram.margin),
                })
                .collect(),
        }
    }

    /// Rebuilds the data and the sequence. Structural consistency is left
    /// to the verifier; only what is needed to build the values is checked.
    pub fn to_sequence(&self) -> Result<(DataSet, TransitionSequence)> {
        let ds = DataSet::new(self.points.clone())?;
        if self.offset.len() != ds.dim() {
            return Err(Error::Incompatible("offset dimension differs from the points".into()));
        }
        let s = SiteVector::new(self.s.clone())?;
        let t = SiteVector::new(self.t.clone())?;
        let k = s.k();
        let bounds = SizeBounds::new(self.bounds.lower.clone(), self.bounds.upper.clone(), ds.len())?;
        let clustering = |l: &Vec<usize>| clustering_from_labels(l, k);
        let diagrams = self
            .diagrams
            .iter()
            .map(|d| {
                let sites = SiteVector::new(d.sites.clone())?;
                if d.gammas.len() != sites.k() || d.weights.len() != sites.k() {
                    return Err(Error::Incompatible("diagram has the wrong number of weights".into()));
                }
                if d.gammas.iter().chain(&d.weights).any(|v| !v.is_finite()) {
                    return Err(Error::Incompatible("diagram has a non-finite weight".into()));
                }
                Ok(DiagramEntry {
                    role: d.role,
                    refs: d.refs.clone(),
                    leg: d.leg,
                    lambda: d.lambda,
                    diagram: PowerDiagram {
                        sites,
                        gammas: d.gammas.clone(),
                        weights: d.weights.clone(),
                        margin: margin_from_file(&d.margin)?,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let seq = TransitionSequence {
            source: clustering(&self.source)?,
            target: clustering(&self.target)?,
            s,
            t,
            bounds,
            p: self.p,
            q: self.q,
            lambdas: self.lambdas.clone(),
            clusterings: self.clusterings.iter().map(clustering).collect::<Result<_>>()?,
            exchanges: self.exchanges.iter().map(exchange_from_file).collect::<Result<_>>()?,
            diagrams,
        };
        Ok((ds, seq))
    }
}

pub fn parse_transition(text: &str) -> Result<(DataSet, TransitionSequence)> {
    TransitionFile::parse(text)?.to_sequence()
}
