//! Portable little-endian checkpoint of all six TD3 networks.
//!
//! Layout: 8-byte magic, `u64` seed, 32-byte hyperparameter hash, `u32`
//! network count, then per network a `u32` layer count, `u32` widths and the
//! flat `f64` parameters.

use std::path::Path;

use super::net::Mlp;
use super::td3::Td3Agent;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"USVTD3\0\x01";

/// Decoded checkpoint contents.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub seed: u64,
    pub hyper_hash: [u8; 32],
    pub nets: Vec<(Vec<usize>, Vec<f64>)>,
}

impl Checkpoint {
    pub fn from_agent(agent: &Td3Agent) -> Self {
        Self {
            seed: agent.seed,
            hyper_hash: agent.hyper.hash(),
            nets: agent.networks().iter().map(|n| (n.widths(), n.params())).collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.hyper_hash);
        out.extend_from_slice(&(self.nets.len() as u32).to_le_bytes());
        for (widths, params) in &self.nets {
            out.extend_from_slice(&(widths.len() as u32).to_le_bytes());
            for &w in widths {
                out.extend_from_slice(&(w as u32).to_le_bytes());
            }
            for p in params {
                out.extend_from_slice(&p.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let seed = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
        let hyper_hash: [u8; 32] = r.take(32)?.try_into().unwrap();
        let n_nets = r.u32()? as usize;
        if n_nets != 6 {
            return Err(Error::Checkpoint(format!("expected 6 networks, found {n_nets}")));
        }
        let mut nets = Vec::with_capacity(n_nets);
        for _ in 0..n_nets {
            let n_layers = r.u32()? as usize;
            if !(2..=16).contains(&n_layers) {
                return Err(Error::Checkpoint(format!("implausible layer count {n_layers}")));
            }
            let widths = (0..n_layers).map(|_| r.u32().map(|w| w as usize)).collect::<Result<Vec<_>>>()?;
            let count: usize = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
            let raw = r.take(count.checked_mul(8).ok_or_else(|| Error::Checkpoint("overflow".into()))?)?;
            let params = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            nets.push((widths, params));
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { seed, hyper_hash, nets })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Install into `agent` after checking every width; nothing is written
    /// unless the whole checkpoint fits.
    pub fn apply(&self, agent: &mut Td3Agent) -> Result<()> {
        let expected: Vec<Vec<usize>> = agent.networks().iter().map(|n| n.widths()).collect();
        for (i, ((w, _), e)) in self.nets.iter().zip(&expected).enumerate() {
            if w != e {
                return Err(Error::Checkpoint(format!("network {i} has widths {w:?}, expected {e:?}")));
            }
        }
        let mut staged: Vec<Mlp> = agent.networks().iter().map(|n| (*n).clone()).collect();
        for (net, (_, p)) in staged.iter_mut().zip(&self.nets) {
            net.set_params(p)?;
        }
        for (slot, net) in agent.networks_mut().into_iter().zip(staged) {
            *slot = net;
        }
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Checkpoint(format!("truncated at byte {}", self.bytes.len()))),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}
