//! Text-in, text-out implementations of the command-line commands.
//!
//! Instances are processed with the point mean subtracted from points and
//! sites; transition files record the offset and store the centered frame.

use crate::config::{Config, SolverConfig};
use crate::error::{Error, Result};
use crate::fixed_site::check_lsa;
use crate::generate::{random_instance, GenerateParams};
use crate::io::{parse_instance, parse_transition, Instance, InstanceFile, TransitionFile};
use crate::model::{center_dataset, objective_from_sites, DataSet, Shape, SiteVector, SizeBounds};
use crate::oracle::{brute_force_best, exhaustive_separability_check, EnumerationBudget};
use crate::pipeline::full_transition;
use crate::render::render_svg;
use crate::transport::{gap_tolerance, optimize};
use crate::verify::{diagram_for, verify_sequence, Report};

struct Centered {
    data: DataSet,
    offset: Vec<f64>,
}

fn centered(ds: &DataSet) -> Result<Centered> {
    let offset = ds.mean();
    Ok(Centered {
        data: center_dataset(ds)?,
        offset,
    })
}

fn shift(s: &SiteVector, offset: &[f64]) -> SiteVector {
    let neg: Vec<f64> = offset.iter().map(|v| -v).collect();
    s.translated(&neg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitOutcome {
    pub report: Report,
    /// The transition file; written by the caller only if the report passed.
    pub file: String,
    pub steps: usize,
}

pub fn cmd_transit(instance: &str, config: &Config) -> Result<TransitOutcome> {
    let inst = parse_instance(instance)?;
    let target = inst
        .target
        .as_ref()
        .ok_or_else(|| Error::Incompatible("transit needs a target endpoint".into()))?;
    let need = |c: &Option<_>, which: &str| {
        c.clone()
            .ok_or_else(|| Error::Incompatible(format!("transit needs a {which} clustering")))
    };
    let c_s = need(&inst.source.clustering, "source")?;
    let c_t = need(&target.clustering, "target")?;
    let frame = centered(&inst.data)?;
    let s = shift(&inst.source.sites, &frame.offset);
    let t = shift(&target.sites, &frame.offset);
    let seq = full_transition(&frame.data, &c_s, &c_t, &s, &t, &config.solver)?;
    let report = verify_sequence(&frame.data, &seq, &config.solver);
    let file = TransitionFile::from_sequence(&seq, &frame.data, &frame.offset, config).to_json();
    Ok(TransitOutcome {
        report,
        file,
        steps: seq.len() - 1,
    })
}

fn with_source_clustering(inst: &Instance, c: crate::model::Clustering) -> String {
    let mut out = inst.clone();
    out.source.clustering = Some(c);
    InstanceFile::from_instance(&out).to_json()
}

/// Constrained LSA for the source sites at `shape`.
pub fn cmd_lsa(instance: &str, shape: &[usize], cfg: &SolverConfig) -> Result<String> {
    let inst = parse_instance(instance)?;
    let shape = Shape(shape.to_vec());
    if shape.k() != inst.source.sites.k() {
        return Err(Error::Incompatible(format!(
            "shape has {} clusters, instance has {} sites",
            shape.k(),
            inst.source.sites.k()
        )));
    }
    if shape.total() != inst.data.len() {
        return Err(Error::Incompatible(format!(
            "shape sums to {}, instance has {} points",
            shape.total(),
            inst.data.len()
        )));
    }
    let frame = centered(&inst.data)?;
    let c = objective_from_sites(&frame.data, &shift(&inst.source.sites, &frame.offset))?;
    let (v, _) = optimize(&c, &SizeBounds::single_shape(&shape), None, cfg)?;
    Ok(with_source_clustering(&inst, v.clustering))
}

/// Radial clustering for the source sites within the instance bounds.
pub fn cmd_radial(instance: &str, cfg: &SolverConfig) -> Result<String> {
    let inst = parse_instance(instance)?;
    let bounds = inst
        .bounds
        .clone()
        .ok_or_else(|| Error::Incompatible("radial needs bounds".into()))?;
    let frame = centered(&inst.data)?;
    let c = objective_from_sites(&frame.data, &shift(&inst.source.sites, &frame.offset))?;
    let (v, _) = optimize(&c, &bounds, None, cfg)?;
    Ok(with_source_clustering(&inst, v.clustering))
}

/// Re-verifies a transition file. Uses the solver settings stored in the
/// file unless `cfg` overrides them.
pub fn cmd_verify(transition: &str, cfg: Option<&SolverConfig>) -> Result<Report> {
    let file = TransitionFile::parse(transition)?;
    let (ds, seq) = file.to_sequence()?;
    let solver = cfg.copied().unwrap_or(file.config.solver);
    solver.validate()?;
    Ok(verify_sequence(&ds, &seq, &solver))
}

/// SVG of clustering `step` (0-based) with its inducing diagram.
pub fn cmd_render(transition: &str, step: usize) -> Result<String> {
    let (ds, seq) = parse_transition(transition)?;
    let clustering = seq.clusterings.get(step).ok_or_else(|| {
        Error::Incompatible(format!("step {step} out of range 0..{}", seq.len()))
    })?;
    render_svg(&ds, clustering, diagram_for(&seq, step), &format!("step {step}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub lines: Vec<String>,
    pub passed: bool,
}

/// Cross-checks the simplex solver against enumeration for each endpoint.
pub fn cmd_oracle(instance: &str, config: &Config) -> Result<OracleOutcome> {
    let inst = parse_instance(instance)?;
    let frame = centered(&inst.data)?;
    let budget = EnumerationBudget::new(config.budget);
    let mut lines = Vec::new();
    let mut passed = true;
    let endpoints = std::iter::once(("source", &inst.source)).chain(inst.target.iter().map(|t| ("target", t)));
    for (name, e) in endpoints {
        let sites = shift(&e.sites, &frame.offset);
        let c = objective_from_sites(&frame.data, &sites)?;
        let mut compare = |what: &str, bounds: &SizeBounds| -> Result<()> {
            let (_, want) = brute_force_best(&frame.data, &sites, bounds, &budget)?;
            let (v, _) = optimize(&c, bounds, None, &config.solver)?;
            let got = c.evaluate(&v.clustering);
            let ok = (got - want).abs() <= gap_tolerance(want);
            passed &= ok;
            lines.push(format!(
                "{} {name} {what}: simplex {got} enumeration {want}",
                if ok { "ok  " } else { "FAIL" }
            ));
            Ok(())
        };
        if let Some(b) = &inst.bounds {
            compare("radial", b)?;
        }
        if let Some(cl) = &e.clustering {
            compare("lsa", &SizeBounds::single_shape(&cl.shape()))?;
            let sep = exhaustive_separability_check(&frame.data, cl, &sites, &budget)?;
            let lsa = check_lsa(&c, cl, &config.solver).is_ok();
            let ok = sep == lsa;
            passed &= ok && sep;
            lines.push(format!(
                "{} {name} clustering: enumeration says {}, simplex says {}",
                if ok && sep { "ok  " } else { "FAIL" },
                if sep { "LSA" } else { "not LSA" },
                if lsa { "LSA" } else { "not LSA" }
            ));
        }
    }
    Ok(OracleOutcome { lines, passed })
}

pub fn cmd_generate(params: &GenerateParams, cfg: &SolverConfig) -> Result<String> {
    let inst = random_instance(params, cfg)?;
    Ok(InstanceFile::from_instance(&inst).to_json())
}
