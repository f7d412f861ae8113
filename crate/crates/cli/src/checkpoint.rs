//! Versioned JSON checkpoints of trained nets.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tuttenet::optim::AdamState;
use tuttenet::{DeformationNet, Frame, Mat3, Mesh2D, TutteLayerParams};

use crate::error::{CliError, Result};
use crate::geometry::{write_atomic, Normalization};

pub const CHECKPOINT_FORMAT: &str = "tuttenet-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Raw parameters of one layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub edge_weights: Vec<f64>,
    pub boundary_increments: Vec<f64>,
}

impl From<&TutteLayerParams<f64>> for LayerRecord {
    fn from(p: &TutteLayerParams<f64>) -> Self {
        LayerRecord {
            edge_weights: p.edge_weights.clone(),
            boundary_increments: p.boundary_increments.clone(),
        }
    }
}

impl From<&LayerRecord> for TutteLayerParams<f64> {
    fn from(r: &LayerRecord) -> Self {
        TutteLayerParams {
            edge_weights: r.edge_weights.clone(),
            boundary_increments: r.boundary_increments.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamRecord {
    pub step: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<LayerRecord>,
    pub v: Vec<LayerRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub resolution: usize,
    /// Row-major layer rotations.
    pub frames: Vec<[[f64; 3]; 3]>,
    pub layers: Vec<LayerRecord>,
    pub adam: Option<AdamRecord>,
    /// Transform from input coordinates into the net's working box.
    pub normalization: Option<Normalization>,
    /// SHA-256 of the job configuration that produced the net.
    pub config_hash: Option<String>,
}

impl Checkpoint {
    pub fn from_net(net: &DeformationNet<f64>) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            resolution: net.mesh().resolution(),
            frames: net.frames().iter().map(|f| f.matrix().0).collect(),
            layers: net.params().iter().map(LayerRecord::from).collect(),
            adam: None,
            normalization: None,
            config_hash: None,
        }
    }

    pub fn with_adam(mut self, adam: &AdamState<f64>) -> Self {
        self.adam = Some(AdamRecord {
            step: adam.step,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            m: adam.m.iter().map(LayerRecord::from).collect(),
            v: adam.v.iter().map(LayerRecord::from).collect(),
        });
        self
    }

    pub fn with_normalization(mut self, n: Normalization) -> Self {
        self.normalization = Some(n);
        self
    }

    pub fn with_config_hash(mut self, hash: String) -> Self {
        self.config_hash = Some(hash);
        self
    }

    fn check_header(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(CliError::Config(format!(
                "format: expected {CHECKPOINT_FORMAT:?}, found {:?}",
                self.format
            )));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(CliError::Config(format!(
                "version: unsupported checkpoint version {}",
                self.version
            )));
        }
        if self.frames.len() != self.layers.len() {
            return Err(CliError::Config(format!(
                "frames: {} frames for {} layers",
                self.frames.len(),
                self.layers.len()
            )));
        }
        if let Some(n) = &self.normalization {
            n.validate()?;
        }
        Ok(())
    }

    /// Rebuilds the net; every layer's certificate is re-checked.
    pub fn to_net(&self) -> Result<DeformationNet<f64>> {
        self.check_header()?;
        let mesh = Arc::new(Mesh2D::build(self.resolution).map_err(|e| CliError::Config(format!("resolution: {e}")))?);
        let frames = self
            .frames
            .iter()
            .enumerate()
            .map(|(i, m)| Frame::new(Mat3(*m)).map_err(|e| CliError::Config(format!("frames[{i}]: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let params = self.layers.iter().map(TutteLayerParams::from).collect();
        Ok(DeformationNet::realize(mesh, params, frames)?)
    }

    pub fn adam_state(&self) -> Option<AdamState<f64>> {
        self.adam.as_ref().map(|a| AdamState {
            m: a.m.iter().map(TutteLayerParams::from).collect(),
            v: a.v.iter().map(TutteLayerParams::from).collect(),
            step: a.step,
            beta1: a.beta1,
            beta2: a.beta2,
            eps: a.eps,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Numerical(format!("checkpoint serialisation: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Config(format!("checkpoint {}: {}", e.path(), e.inner())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let ck = Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        ck.check_header()?;
        Ok(ck)
    }
}

/// Hex SHA-256 of the compact JSON form of `value`.
pub fn config_hash<S: Serialize>(value: &S) -> String {
    let json = serde_json::to_vec(value).expect("configuration serialises");
    hex::encode(Sha256::digest(&json))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tuttenet::{triplane_frames, Vec3};

    fn random_net(layers: usize, res: usize, seed: u64) -> DeformationNet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = Arc::new(Mesh2D::build(res).unwrap());
        let params = (0..layers)
            .map(|_| {
                let mut p = TutteLayerParams::zeros(&mesh);
                for k in 0..p.len() {
                    *p.get_mut(k) = rng.gen_range(-1.5..1.5);
                }
                p
            })
            .collect();
        DeformationNet::realize(mesh, params, triplane_frames(layers)).unwrap()
    }

    #[test]
    fn round_trip_forward_is_bit_identical() {
        let net = random_net(5, 7, 3);
        let text = Checkpoint::from_net(&net).to_json().unwrap();
        let back = Checkpoint::from_json(&text).unwrap().to_net().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let p = Vec3::new(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7));
            assert_eq!(net.forward_point(p).unwrap(), back.forward_point(p).unwrap());
        }
    }

    #[test]
    fn adam_state_survives() {
        let net = random_net(2, 3, 1);
        let mut adam = AdamState::new(net.params());
        adam.step = 17;
        adam.m[1].edge_weights[2] = 0.1 + 0.2;
        let ck = Checkpoint::from_net(&net).with_adam(&adam);
        let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
        assert_eq!(back.adam_state().unwrap(), adam);
    }

    #[test]
    fn rejects_foreign_and_malformed_records() {
        let net = random_net(1, 3, 0);
        let mut ck = Checkpoint::from_net(&net);
        ck.format = "other".into();
        assert!(matches!(ck.to_net(), Err(CliError::Config(_))));
        let text = Checkpoint::from_net(&net).to_json().unwrap().replacen("\"resolution\"", "\"resolutoin\"", 1);
        match Checkpoint::from_json(&text) {
            Err(CliError::Config(m)) => assert!(m.contains("resolutoin"), "{m}"),
            other => panic!("{other:?}"),
        }
        let mut bad = Checkpoint::from_net(&net);
        bad.layers[0].edge_weights.pop();
        assert!(bad.to_net().is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&serde_json::json!({"a": 1, "b": [1.5]}));
        assert_eq!(a, config_hash(&serde_json::json!({"a": 1, "b": [1.5]})));
        assert_ne!(a, config_hash(&serde_json::json!({"a": 2, "b": [1.5]})));
        assert_eq!(a.len(), 64);
    }
}
