//! Binary checkpoint of a trained agent.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes  "PERCHCK\0"
//! version u32
//! hlen    u32      length of the JSON header
//! header  hlen bytes
//! arrays  f64 LE, in the order and lengths listed by the header
//! sha256  32 bytes over everything before it
//! ```

use std::path::Path;

use perch_core::policy::{Actor, Critic, Mlp, ObsNorm, Temperature};
use perch_core::sac::Agent;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

pub const MAGIC: &[u8; 8] = b"PERCHCK\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub config_digest: String,
    pub seed: u64,
    /// Index of the selected training restart.
    pub restart: usize,
    pub episodes: usize,
    pub best_episode: usize,
    pub norm: ObsNorm,
    pub actor_sizes: Vec<usize>,
    pub critic_sizes: Vec<usize>,
    /// `(name, length)` of each stored array.
    pub arrays: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub actor: Actor,
    /// Actor with the best moving-average training reward.
    pub best_actor: Actor,
    pub q1: Critic,
    pub q2: Critic,
    pub q1_target: Critic,
    pub q2_target: Critic,
    pub temperature: Temperature,
}

const NAMES: [&str; 7] = [
    "actor",
    "best_actor",
    "q1",
    "q2",
    "q1_target",
    "q2_target",
    "log_alpha",
];

impl Checkpoint {
    pub fn from_agent(
        agent: &Agent,
        best_actor: &Actor,
        config_digest: &str,
        seed: u64,
        restart: usize,
        episodes: usize,
        best_episode: usize,
    ) -> Self {
        let mut c = Checkpoint {
            header: CheckpointHeader {
                config_digest: config_digest.into(),
                seed,
                restart,
                episodes,
                best_episode,
                norm: agent.norm,
                actor_sizes: agent.actor.net.sizes().to_vec(),
                critic_sizes: agent.q1.net.sizes().to_vec(),
                arrays: Vec::new(),
            },
            actor: agent.actor.clone(),
            best_actor: best_actor.clone(),
            q1: agent.q1.clone(),
            q2: agent.q2.clone(),
            q1_target: agent.q1_target.clone(),
            q2_target: agent.q2_target.clone(),
            temperature: agent.temperature,
        };
        c.header.arrays = NAMES
            .iter()
            .zip(c.arrays())
            .map(|(n, a)| (n.to_string(), a.len()))
            .collect();
        c
    }

    fn arrays(&self) -> [&[f64]; 7] {
        [
            &self.actor.net.params,
            &self.best_actor.net.params,
            &self.q1.net.params,
            &self.q2.net.params,
            &self.q1_target.net.params,
            &self.q2_target.net.params,
            std::slice::from_ref(&self.temperature.log_alpha),
        ]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for a in self.arrays() {
            for v in a {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let sum = Sha256::digest(&out);
        out.extend_from_slice(&sum);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| LabError::Checkpoint(m.to_string());
        if bytes.len() < 16 + 32 {
            return Err(bad("file too short"));
        }
        let (body, sum) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != sum {
            return Err(bad("checksum mismatch"));
        }
        if &body[..8] != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = u32::from_le_bytes(body[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(LabError::Checkpoint(format!("unsupported version {version}")));
        }
        let hlen = u32::from_le_bytes(body[12..16].try_into().unwrap()) as usize;
        let header_end = 16usize
            .checked_add(hlen)
            .filter(|&e| e <= body.len())
            .ok_or_else(|| bad("truncated header"))?;
        let header: CheckpointHeader = serde_json::from_slice(&body[16..header_end])
            .map_err(|e| LabError::Checkpoint(format!("header: {e}")))?;
        let names: Vec<&str> = header.arrays.iter().map(|(n, _)| n.as_str()).collect();
        if names != NAMES {
            return Err(bad("unexpected array list"));
        }
        let total: usize = header.arrays.iter().map(|(_, n)| n).sum();
        let data = &body[header_end..];
        if data.len() != total * 8 {
            return Err(bad("array section has the wrong length"));
        }
        let mut values = data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mut take = |n: usize| -> Vec<f64> { values.by_ref().take(n).collect() };
        let lens: Vec<usize> = header.arrays.iter().map(|(_, n)| *n).collect();
        let mlp = |sizes: &[usize], p: Vec<f64>| {
            Mlp::from_params(sizes, p).map_err(|e| LabError::Checkpoint(format!("network: {e}")))
        };
        let actor = Actor { net: mlp(&header.actor_sizes, take(lens[0]))? };
        let best_actor = Actor { net: mlp(&header.actor_sizes, take(lens[1]))? };
        let q1 = Critic { net: mlp(&header.critic_sizes, take(lens[2]))? };
        let q2 = Critic { net: mlp(&header.critic_sizes, take(lens[3]))? };
        let q1_target = Critic { net: mlp(&header.critic_sizes, take(lens[4]))? };
        let q2_target = Critic { net: mlp(&header.critic_sizes, take(lens[5]))? };
        let la = take(lens[6]);
        if la.len() != 1 {
            return Err(bad("temperature must hold one value"));
        }
        Ok(Checkpoint {
            header,
            actor,
            best_actor,
            q1,
            q2,
            q1_target,
            q2_target,
            temperature: Temperature { log_alpha: la[0] },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())
            .map_err(|e| LabError::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| LabError::io(format!("reading {}", path.display()), e))?;
        Self::from_bytes(&bytes)
    }

    pub fn actor_named(&self, which: &str) -> &Actor {
        if which == "best" {
            &self.best_actor
        } else {
            &self.actor
        }
    }
}
