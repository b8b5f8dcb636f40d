//! Binary checkpoint of a running chain.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic        b"TPCK"
//! version      u32                      (currently 1)
//! config       algorithm u8 (0 Metropolis, 1 Wolff), symmetrize u8,
//!              sweeps u64, burn_in u64, thinning u64, seed u64, stream u64,
//!              blocks u32, marginal_cap u32
//! params       coupling, field, beta, probe_rate, probe_frequency: f64
//! geometry     side u32, clusters u32, then per cluster: center u32, radius f64
//! chain        sweeps_done u64, measurements_done u64, N bytes of spin bits
//! wolff        calibration steps u64, flipped u64, steps_per_sweep u64
//! rng          seed [u8; 32], stream u64, word_pos u128
//! blocks       count u32, then per block:
//!                samples u64, bond_sum i64, bond_sq i128,
//!                (2N + 1) × u64 magnetization histogram,
//!                per cluster: n u32, (2n + 1) × u64 charge counts,
//!                (2n + 1) × i64 charge bond sums, marginal tag u8
//!                (0 none, 1 dense: 2^n × (u64, i64), 2 sparse: len u64 then
//!                len × (key u64, count u64, bonds i64))
//! checksum     u64 FNV-1a over all preceding bytes
//! ```
//!
//! Fields are only ever appended in later versions; a reader rejects
//! versions it does not know.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::accumulate::{BlockCounts, ClusterCounts, MarginalCounts};
use super::{Algorithm, SamplerConfig, WolffCalibration};
use crate::lattice::ThermoParams;
use crate::Error;

pub const MAGIC: [u8; 4] = *b"TPCK";
pub const VERSION: u32 = 1;

/// Everything needed to continue a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerState {
    pub config: SamplerConfig,
    pub params: ThermoParams,
    pub side: usize,
    /// `(center, radius)` per measured cluster.
    pub clusters: Vec<(usize, f64)>,
    pub bits: Vec<u8>,
    pub sweeps_done: u64,
    pub measurements_done: u64,
    pub wolff: WolffCalibration,
    pub rng_seed: [u8; 32],
    pub rng_stream: u64,
    pub rng_word_pos: u128,
    pub blocks: Vec<BlockCounts>,
}

/// Errors while decoding a checkpoint.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("checkpoint checksum mismatch")]
    Checksum,
    #[error("checkpoint field is invalid: {0}")]
    Invalid(&'static str),
}

impl From<CheckpointError> for Error {
    fn from(_: CheckpointError) -> Self {
        Error::StateMismatch
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

struct Writer(Vec<u8>);

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.bytes(&(v as u32).to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.bytes(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> core::result::Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated)?;
        let s = self.data.get(self.pos..end).ok_or(CheckpointError::Truncated)?;
        self.pos = end;
        Ok(s)
    }
    fn array<const N: usize>(&mut self) -> core::result::Result<[u8; N], CheckpointError> {
        Ok(self.take(N)?.try_into().unwrap())
    }
    fn u8(&mut self) -> core::result::Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> core::result::Result<usize, CheckpointError> {
        Ok(u32::from_le_bytes(self.array()?) as usize)
    }
    fn u64(&mut self) -> core::result::Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn i64(&mut self) -> core::result::Result<i64, CheckpointError> {
        Ok(i64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> core::result::Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    /// Guards allocation sizes against corrupt length fields.
    fn len(&mut self, per_item: usize) -> core::result::Result<usize, CheckpointError> {
        let n = self.u64()? as usize;
        if n.saturating_mul(per_item) > self.data.len() - self.pos {
            return Err(CheckpointError::Truncated);
        }
        Ok(n)
    }
}

impl SamplerState {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.bytes(&MAGIC);
        w.u32(VERSION as usize);
        let c = &self.config;
        w.u8(match c.algorithm {
            Algorithm::Wolff => 1,
            _ => 0,
        });
        w.u8(c.symmetrize as u8);
        for v in [c.sweeps, c.burn_in, c.thinning, c.seed, c.stream] {
            w.u64(v);
        }
        w.u32(c.blocks);
        w.u32(c.marginal_cap);
        let p = &self.params;
        for v in [p.coupling, p.field, p.beta, p.probe_rate, p.probe_frequency] {
            w.f64(v);
        }
        w.u32(self.side);
        w.u32(self.clusters.len());
        for &(center, radius) in &self.clusters {
            w.u32(center);
            w.f64(radius);
        }
        w.u64(self.sweeps_done);
        w.u64(self.measurements_done);
        w.bytes(&self.bits);
        w.u64(self.wolff.steps);
        w.u64(self.wolff.flipped);
        w.u64(self.wolff.steps_per_sweep);
        w.bytes(&self.rng_seed);
        w.u64(self.rng_stream);
        w.bytes(&self.rng_word_pos.to_le_bytes());
        w.u32(self.blocks.len());
        for b in &self.blocks {
            w.u64(b.samples);
            w.i64(b.bond_sum);
            w.bytes(&b.bond_sq.to_le_bytes());
            for &m in &b.magnetization {
                w.u64(m);
            }
            for cl in &b.clusters {
                w.u32(cl.n);
                for &k in &cl.charge {
                    w.u64(k);
                }
                for &s in &cl.charge_bonds {
                    w.i64(s);
                }
                match &cl.marginal {
                    None => w.u8(0),
                    Some(MarginalCounts::Dense(v)) => {
                        w.u8(1);
                        for &(k, s) in v {
                            w.u64(k);
                            w.i64(s);
                        }
                    }
                    Some(MarginalCounts::Sparse(m)) => {
                        w.u8(2);
                        w.u64(m.len() as u64);
                        for (&key, &(k, s)) in m {
                            w.u64(key);
                            w.u64(k);
                            w.i64(s);
                        }
                    }
                }
            }
        }
        let sum = fnv1a(&w.0);
        w.u64(sum);
        w.0
    }

    pub fn from_bytes(data: &[u8]) -> core::result::Result<Self, CheckpointError> {
        if data.len() < 8 || data[..4] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = u32::from_le_bytes(data[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        if data.len() < 16 {
            return Err(CheckpointError::Truncated);
        }
        let (body, tail) = data.split_at(data.len() - 8);
        if fnv1a(body) != u64::from_le_bytes(tail.try_into().unwrap()) {
            return Err(CheckpointError::Checksum);
        }
        let mut r = Reader { data: body, pos: 8 };
        let algorithm = match r.u8()? {
            0 => Algorithm::Metropolis,
            1 => Algorithm::Wolff,
            _ => return Err(CheckpointError::Invalid("algorithm")),
        };
        let symmetrize = match r.u8()? {
            0 => false,
            1 => true,
            _ => return Err(CheckpointError::Invalid("symmetrize")),
        };
        let config = SamplerConfig {
            algorithm,
            symmetrize,
            sweeps: r.u64()?,
            burn_in: r.u64()?,
            thinning: r.u64()?,
            seed: r.u64()?,
            stream: r.u64()?,
            blocks: r.u32()?,
            marginal_cap: r.u32()?,
        };
        let params = ThermoParams {
            coupling: r.f64()?,
            field: r.f64()?,
            beta: r.f64()?,
            probe_rate: r.f64()?,
            probe_frequency: r.f64()?,
        };
        let side = r.u32()?;
        let sites = side.checked_mul(side).ok_or(CheckpointError::Invalid("side"))?;
        let cluster_count = r.u32()?;
        let mut clusters = Vec::new();
        for _ in 0..cluster_count {
            clusters.push((r.u32()?, r.f64()?));
        }
        let sweeps_done = r.u64()?;
        let measurements_done = r.u64()?;
        let bits = r.take(sites)?.to_vec();
        if bits.iter().any(|&b| b > 1) {
            return Err(CheckpointError::Invalid("spin bits"));
        }
        let wolff = WolffCalibration {
            steps: r.u64()?,
            flipped: r.u64()?,
            steps_per_sweep: r.u64()?,
        };
        let rng_seed = r.array::<32>()?;
        let rng_stream = r.u64()?;
        let rng_word_pos = u128::from_le_bytes(r.array()?);
        let block_count = r.u32()?;
        let mut blocks = Vec::new();
        for _ in 0..block_count {
            let samples = r.u64()?;
            let bond_sum = r.i64()?;
            let bond_sq = i128::from_le_bytes(r.array()?);
            let mut magnetization = Vec::with_capacity(2 * sites + 1);
            for _ in 0..2 * sites + 1 {
                magnetization.push(r.u64()?);
            }
            let mut cl = Vec::with_capacity(cluster_count);
            for _ in 0..cluster_count {
                let n = r.u32()?;
                if n > 64 {
                    return Err(CheckpointError::Invalid("cluster size"));
                }
                let mut charge = Vec::with_capacity(2 * n + 1);
                for _ in 0..2 * n + 1 {
                    charge.push(r.u64()?);
                }
                let mut charge_bonds = Vec::with_capacity(2 * n + 1);
                for _ in 0..2 * n + 1 {
                    charge_bonds.push(r.i64()?);
                }
                let marginal = match r.u8()? {
                    0 => None,
                    1 => {
                        if n > super::DENSE_MARGINAL_LIMIT {
                            return Err(CheckpointError::Invalid("dense marginal too large"));
                        }
                        let mut v = Vec::with_capacity(1 << n);
                        for _ in 0..(1usize << n) {
                            v.push((r.u64()?, r.i64()?));
                        }
                        Some(MarginalCounts::Dense(v))
                    }
                    2 => {
                        let len = r.len(24)?;
                        let mut m = BTreeMap::new();
                        for _ in 0..len {
                            let key = r.u64()?;
                            m.insert(key, (r.u64()?, r.i64()?));
                        }
                        Some(MarginalCounts::Sparse(m))
                    }
                    _ => return Err(CheckpointError::Invalid("marginal tag")),
                };
                cl.push(ClusterCounts {
                    n,
                    charge,
                    charge_bonds,
                    marginal,
                });
            }
            blocks.push(BlockCounts {
                samples,
                bond_sum,
                bond_sq,
                magnetization,
                clusters: cl,
            });
        }
        if r.pos != body.len() {
            return Err(CheckpointError::Invalid("trailing bytes"));
        }
        Ok(SamplerState {
            config,
            params,
            side,
            clusters,
            bits,
            sweeps_done,
            measurements_done,
            wolff,
            rng_seed,
            rng_stream,
            rng_word_pos,
            blocks,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Sampler, SamplerConfig};
    use super::*;
    use crate::lattice::{ClusterSpec, Lattice};

    fn state() -> SamplerState {
        let lat = Lattice::new(8).unwrap();
        // dense and sparse marginal layouts
        let clusters = [
            ClusterSpec::centered(&lat, 1.0).unwrap(),
            ClusterSpec::centered(&lat, 5f64.sqrt()).unwrap(),
        ];
        let p = ThermoParams::new(1.0, 0.4, 0.4);
        let cfg = SamplerConfig::new(100, 4).with_marginal_cap(25).with_symmetrize(true);
        let mut s = Sampler::new(&lat, &clusters, &p, &cfg).unwrap();
        s.advance(60);
        s.state()
    }

    #[test]
    fn roundtrip() {
        let st = state();
        let bytes = st.to_bytes();
        assert_eq!(&bytes[..4], b"TPCK");
        assert_eq!(SamplerState::from_bytes(&bytes).unwrap(), st);
    }

    #[test]
    fn detects_corruption() {
        let mut bytes = state().to_bytes();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        assert_eq!(SamplerState::from_bytes(&bytes), Err(CheckpointError::Checksum));
        assert_eq!(SamplerState::from_bytes(b"nope"), Err(CheckpointError::BadMagic));
        let mut v2 = state().to_bytes();
        v2[4] = 2;
        assert_eq!(SamplerState::from_bytes(&v2), Err(CheckpointError::UnsupportedVersion(2)));
        let good = state().to_bytes();
        assert!(SamplerState::from_bytes(&good[..good.len() - 20]).is_err());
    }
}
