//! Seeded random instances: points, two site vectors and the constrained
//! LSAs at random shapes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::io::{Endpoint, Instance};
use crate::model::{center_dataset, objective_from_sites, Clustering, DataSet, Shape, SiteVector, SizeBounds};
use crate::transport::optimize;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateParams {
    pub n: usize,
    pub k: usize,
    pub dim: usize,
    pub seed: u64,
    /// Target sites are the source sites plus noise of this size.
    pub perturbation: f64,
    /// Whether both endpoints share one random shape.
    pub same_shape: bool,
}

impl Default for GenerateParams {
    fn default() -> Self {
        GenerateParams {
            n: 20,
            k: 3,
            dim: 2,
            seed: 0,
            perturbation: 1.0,
            same_shape: false,
        }
    }
}

/// Random shape with every cluster nonempty.
pub fn random_shape(rng: &mut impl Rng, n: usize, k: usize) -> Shape {
    let mut sizes = vec![1; k];
    for _ in k..n {
        sizes[rng.gen_range(0..k)] += 1;
    }
    Shape(sizes)
}

pub fn random_points(rng: &mut impl Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

fn lsa(ds: &DataSet, s: &SiteVector, shape: &Shape, cfg: &SolverConfig) -> Result<Clustering> {
    let c = objective_from_sites(ds, s)?;
    Ok(optimize(&c, &SizeBounds::single_shape(shape), None, cfg)?.0.clustering)
}

/// Centered points with two endpoints, each a constrained LSA for its sites.
pub fn random_instance(p: &GenerateParams, cfg: &SolverConfig) -> Result<Instance> {
    if p.k == 0 || p.n < p.k || p.dim == 0 {
        return Err(Error::Incompatible(format!(
            "need n >= k >= 1 and dim >= 1, got n={}, k={}, dim={}",
            p.n, p.k, p.dim
        )));
    }
    if !(p.perturbation.is_finite() && p.perturbation >= 0.0) {
        return Err(Error::Incompatible("perturbation must be finite and nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let data = center_dataset(&DataSet::new(random_points(&mut rng, p.n, p.dim))?)?;
    let s = SiteVector::new(random_points(&mut rng, p.k, p.dim))?;
    let t = SiteVector::new(
        s.to_vecs()
            .into_iter()
            .map(|site| site.into_iter().map(|v| v + p.perturbation * rng.gen_range(-1.0..1.0)).collect())
            .collect(),
    )?;
    let shape_s = random_shape(&mut rng, p.n, p.k);
    let shape_t = if p.same_shape {
        shape_s.clone()
    } else {
        random_shape(&mut rng, p.n, p.k)
    };
    let cs = lsa(&data, &s, &shape_s, cfg)?;
    let ct = lsa(&data, &t, &shape_t, cfg)?;
    Ok(Instance {
        data,
        source: Endpoint {
            sites: s,
            clustering: Some(cs),
        },
        target: Some(Endpoint {
            sites: t,
            clustering: Some(ct),
        }),
        bounds: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_valid() {
        let p = GenerateParams {
            n: 15,
            k: 4,
            ..GenerateParams::default()
        };
        let a = random_instance(&p, &SolverConfig::default()).unwrap();
        let b = random_instance(&p, &SolverConfig::default()).unwrap();
        assert_eq!(a, b);
        let cs = a.source.clustering.unwrap();
        assert_eq!(cs.len(), 15);
        assert!(cs.shape().0.iter().all(|&c| c >= 1));
        let other = random_instance(&GenerateParams { seed: 1, ..p }, &SolverConfig::default()).unwrap();
        assert_ne!(other.data, a.data);
    }

    #[test]
    fn same_shape_option() {
        let p = GenerateParams {
            same_shape: true,
            seed: 4,
            ..GenerateParams::default()
        };
        let inst = random_instance(&p, &SolverConfig::default()).unwrap();
        let t = inst.target.unwrap().clustering.unwrap();
        assert_eq!(inst.source.clustering.unwrap().shape(), t.shape());
    }

    #[test]
    fn rejects_bad_sizes() {
        let p = GenerateParams {
            n: 2,
            k: 3,
            ..GenerateParams::default()
        };
        assert!(random_instance(&p, &SolverConfig::default()).is_err());
    }
}
