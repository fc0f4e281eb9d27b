//! `GNET` model files.
//!
//! Layout: the magic bytes `GNET`, a version byte (1), the header length as
//! a little-endian `u32`, a UTF-8 JSON header, then every parameter tensor
//! as little-endian IEEE-754 `f32` values in header order.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::network::{Architecture, Network};
use super::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GNET";
pub const VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Classifier,
    Vae,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub kind: ModelKind,
    /// Layer specs for classifiers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub architecture: Option<Architecture>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    /// Layer sizes for VAEs, or other kind-specific settings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<serde_json::Value>,
    pub shapes: Vec<Vec<usize>>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub header: ModelHeader,
    pub tensors: Vec<Tensor>,
}

impl ModelFile {
    pub fn classifier(net: &Network, seed: u64, config: Option<serde_json::Value>) -> Self {
        let arch = net.architecture().clone();
        Self {
            header: ModelHeader {
                kind: ModelKind::Classifier,
                fingerprint: Some(arch.fingerprint()),
                shapes: arch.param_shapes(),
                architecture: Some(arch),
                layout: None,
                seed,
                config,
            },
            tensors: net.params().to_vec(),
        }
    }

    /// Rebuilds the classifier network, checking the stored fingerprint.
    pub fn into_network(self) -> Result<Network> {
        if self.header.kind != ModelKind::Classifier {
            return Err(Error::Format("model file holds a VAE, not a classifier".into()));
        }
        let arch = self.header.architecture.ok_or_else(|| Error::Format("classifier without architecture".into()))?;
        arch.output_shapes().map_err(|e| Error::Format(format!("stored architecture is invalid: {e}")))?;
        if let Some(fp) = &self.header.fingerprint {
            if *fp != arch.fingerprint() {
                return Err(Error::Format("architecture fingerprint mismatch".into()));
            }
        }
        Network::from_params(arch, self.tensors)
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header).map_err(|e| Error::Format(e.to_string()))?;
        let mut out = Vec::with_capacity(9 + header.len() + 4 * self.tensors.iter().map(Tensor::len).sum::<usize>());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.write_u32::<LittleEndian>(header.len() as u32)?;
        out.extend_from_slice(&header);
        for t in &self.tensors {
            for &v in t.data() {
                out.write_f32::<LittleEndian>(v as f32)?;
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor::new(bytes);
        let mut magic = [0u8; 4];
        cur.read_exact(&mut magic).map_err(|_| Error::Format("file too short for magic".into()))?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}, expected GNET")));
        }
        let version = cur.read_u8().map_err(|_| Error::Format("missing version byte".into()))?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let len = cur.read_u32::<LittleEndian>().map_err(|_| Error::Format("missing header length".into()))? as usize;
        let start = cur.position() as usize;
        let header_bytes = bytes.get(start..start + len).ok_or_else(|| Error::Format("truncated header".into()))?;
        let header: ModelHeader =
            serde_json::from_slice(header_bytes).map_err(|e| Error::Format(format!("bad header: {e}")))?;
        cur.set_position((start + len) as u64);

        let mut tensors = Vec::with_capacity(header.shapes.len());
        for shape in &header.shapes {
            let n: usize = shape.iter().product();
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                data.push(
                    cur.read_f32::<LittleEndian>().map_err(|_| Error::Format("truncated tensor data".into()))? as f64
                );
            }
            tensors.push(Tensor::from_vec(shape.clone(), data).map_err(|e| Error::Format(e.to_string()))?);
        }
        if (cur.position() as usize) != bytes.len() {
            return Err(Error::Format("trailing bytes after tensor data".into()));
        }
        Ok(Self { header, tensors })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.encode()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::init::init_params;
    use crate::neuralnet::{Activation, LayerSpec};

    fn small_net() -> Network {
        let arch = Architecture::new(
            [6, 6, 1],
            vec![
                LayerSpec::Conv2d { filters: 2, kernel: 3, activation: Activation::Relu },
                LayerSpec::Flatten,
                LayerSpec::Dense { units: 3, activation: Activation::Softmax },
            ],
        )
        .unwrap();
        init_params(&arch, 9)
    }

    #[test]
    fn byte_identical_round_trip() {
        let f = ModelFile::classifier(&small_net(), 9, Some(serde_json::json!({"lr": 0.01})));
        let bytes = f.encode().unwrap();
        assert_eq!(&bytes[..5], b"GNET\x01");
        let back = ModelFile::decode(&bytes).unwrap();
        assert_eq!(back.encode().unwrap(), bytes);
        let net = back.into_network().unwrap();
        for (a, b) in net.params().iter().zip(small_net().params()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert_eq!(*x, *y as f32 as f64);
            }
        }
    }

    #[test]
    fn rejects_corruption() {
        let bytes = ModelFile::classifier(&small_net(), 1, None).encode().unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(ModelFile::decode(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(ModelFile::decode(&bad), Err(Error::Format(_))));
        assert!(matches!(ModelFile::decode(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(ModelFile::decode(&long), Err(Error::Format(_))));
    }
}
