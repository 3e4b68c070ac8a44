//! JSON experiment descriptions: run parameters, seed surfaces and an
//! optional phantom to segment when no image file is given.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aabb::Aabb;
use crate::driver::RunConfig;
use crate::error::Error;
use crate::scalar::Real;
use crate::trimesh::{make_seed, RegionPair, Seed, SurfaceSet};
use crate::voxel_image::{make_phantom, Phantom, VoxelGrid};

fn one() -> usize {
    1
}

fn two() -> usize {
    2
}

/// A seed shape with its target edge length and region labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSpec {
    #[serde(flatten)]
    pub seed: Seed,
    pub edge_length: f64,
    #[serde(default = "one")]
    pub plus: usize,
    #[serde(default = "two")]
    pub minus: usize,
}

/// Synthetic image: phantom kind, voxel counts and world box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    #[serde(flatten)]
    pub phantom: Phantom,
    pub dims: [usize; 3],
    /// `[min, max]`; the phantom's reference domain when absent.
    #[serde(default)]
    pub domain: Option<[[f64; 3]; 2]>,
}

impl PhantomSpec {
    pub fn build<T: Real>(&self) -> Result<VoxelGrid<T>, Error> {
        let [lo, hi] = self.domain.unwrap_or_else(|| {
            let (lo, hi) = self.phantom.default_domain();
            [lo, hi]
        });
        make_phantom(&self.phantom, self.dims, Aabb::from_f64(lo, hi))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub phantom: Option<PhantomSpec>,
    pub seeds: Vec<SeedSpec>,
    #[serde(default)]
    pub run: RunConfig<f64>,
}

impl Experiment {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let e: Experiment = serde_json::from_str(text).map_err(|e| Error::Param(format!("config: {e}")))?;
        e.validate()?;
        Ok(e)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, Error> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.seeds.is_empty() {
            return Err(Error::Param("config needs at least one seed".into()));
        }
        self.run.validate()
    }

    /// Meshes the seeds in order; surface ids follow the seed order.
    pub fn seed_surfaces<T: Real>(&self) -> Result<SurfaceSet<T>, Error> {
        let mut s = SurfaceSet::new();
        for spec in &self.seeds {
            let m = make_seed(&spec.seed, spec.edge_length)?;
            s.push(m, RegionPair::new(spec.plus, spec.minus))?;
        }
        s.validate()?;
        Ok(s)
    }

    /// The run parameters converted to `T`.
    pub fn run_config<T: Real>(&self) -> RunConfig<T> {
        let r = &self.run;
        RunConfig {
            sigma: T::lit(r.sigma),
            lambda: T::lit(r.lambda),
            tau0: T::lit(r.tau0),
            control: r.control.clone(),
            detection: r.detection.clone(),
            topology: r.topology,
            quality: r.quality.clone(),
            band_width: r.band_width,
            max_steps: r.max_steps,
            stop_eps: r.stop_eps.map(T::lit),
            stop_k: r.stop_k,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let e = Experiment::from_json(
            r#"{"seeds": [{"shape": "sphere", "center": [0, 0, 0], "radius": 0.5, "edge_length": 0.2}],
                "run": {"sigma": 2.0, "max_steps": 0}}"#,
        )
        .unwrap();
        assert_eq!(e.run.sigma, 2.0);
        assert_eq!(e.run.lambda, 100.0);
        let s = e.seed_surfaces::<f64>().unwrap();
        assert_eq!(s.region_pair(0), RegionPair::new(1, 2));
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(Experiment::from_json(r#"{"seeds": [], "bogus": 1}"#).is_err());
        assert!(Experiment::from_json(r#"{"seeds": []}"#).is_err());
    }

    #[test]
    fn phantom_block_builds() {
        let p: PhantomSpec = serde_json::from_str(r#"{"kind": "one_ball", "radius": 0.6, "dims": [8, 6, 6]}"#).unwrap();
        let g = p.build::<f64>().unwrap();
        assert_eq!(g.dims(), [8, 6, 6]);
    }
}
