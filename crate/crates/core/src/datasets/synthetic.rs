use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{build_graph_dataset_with, make_blobs, make_circles, make_moons, make_swissroll, ComponentPolicy};
use super::{GraphDataset, PointCloud};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// The four synthetic benchmark families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Blobs,
    Circles,
    Moons,
    Swissroll,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 4] = [Self::Blobs, Self::Circles, Self::Moons, Self::Swissroll];

    pub fn name(self) -> &'static str {
        match self {
            Self::Blobs => "blobs",
            Self::Circles => "circles",
            Self::Moons => "moons",
            Self::Swissroll => "swissroll",
        }
    }

    /// Noise used when a spec leaves it unset.
    pub fn default_noise(self) -> f64 {
        match self {
            Self::Blobs | Self::Swissroll => 0.0,
            Self::Circles | Self::Moons => 0.1,
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Validation(vec![format!("unknown dataset {s:?}")]))
    }
}

pub const DEFAULT_N: usize = 500;
pub const DEFAULT_K_GRAPH: usize = 20;
pub const DEFAULT_FEAT_COMPONENTS: usize = 10;
pub const BLOB_CENTERS: usize = 4;
pub const BLOB_STD: f64 = 1.0;
pub const CIRCLE_FACTOR: f64 = 0.5;

/// Everything needed to regenerate a synthetic graph dataset from a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n: usize,
    /// `None` picks [`SyntheticKind::default_noise`].
    pub noise: Option<f64>,
    pub centers: usize,
    pub std: f64,
    pub factor: f64,
    pub k_graph: usize,
    pub feat_components: usize,
    pub policy: ComponentPolicy,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self::new(SyntheticKind::Blobs)
    }
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind) -> Self {
        Self {
            kind,
            n: DEFAULT_N,
            noise: None,
            centers: BLOB_CENTERS,
            std: BLOB_STD,
            factor: CIRCLE_FACTOR,
            k_graph: DEFAULT_K_GRAPH,
            feat_components: DEFAULT_FEAT_COMPONENTS,
            policy: ComponentPolicy::Bridge,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn noise(&self) -> f64 {
        self.noise.unwrap_or_else(|| self.kind.default_noise())
    }

    pub fn point_cloud(&self, seed: u64) -> Result<PointCloud> {
        let mut rng = Rng::new(seed);
        match self.kind {
            SyntheticKind::Blobs => make_blobs(self.n, self.centers, self.std, &mut rng),
            SyntheticKind::Circles => make_circles(self.n, self.factor, self.noise(), &mut rng),
            SyntheticKind::Moons => make_moons(self.n, self.noise(), &mut rng),
            SyntheticKind::Swissroll => make_swissroll(self.n, self.noise(), &mut rng),
        }
    }

    pub fn generate(&self, seed: u64) -> Result<GraphDataset> {
        let pc = self.point_cloud(seed)?;
        let mut ds = build_graph_dataset_with(&pc, self.k_graph, self.feat_components, self.policy)?;
        ds.name = self.kind.name().to_string();
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in SyntheticKind::ALL {
            assert_eq!(k.name().parse::<SyntheticKind>().unwrap(), k);
        }
        assert!("mnist".parse::<SyntheticKind>().is_err());
    }

    #[test]
    fn generate_is_seeded() {
        let spec = SyntheticSpec::new(SyntheticKind::Moons).with_n(100);
        let a = spec.generate(3).unwrap();
        assert_eq!(a, spec.generate(3).unwrap());
        assert_ne!(a.features, spec.generate(4).unwrap().features);
        assert_eq!(a.name, "moons");
        assert!(a.graph.is_connected());
    }

    #[test]
    fn spec_json_rejects_unknown_keys() {
        let ok: SyntheticSpec = serde_json::from_str(r#"{"kind":"circles","n":60}"#).unwrap();
        assert_eq!(ok.noise(), 0.1);
        assert!(serde_json::from_str::<SyntheticSpec>(r#"{"kind":"circles","size":60}"#).is_err());
    }
}
