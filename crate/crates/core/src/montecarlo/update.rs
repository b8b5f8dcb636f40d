//! Single-spin Metropolis and Wolff cluster updates.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::lattice::{Lattice, SpinConfig, ThermoParams};
use crate::{Error, Result};

/// Metropolis acceptance probabilities indexed by `(σ Σ_nb σ + 4) / 2`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct AcceptanceTable([f64; 5]);

impl AcceptanceTable {
    pub(crate) fn new(params: &ThermoParams) -> Self {
        let mut table = [1.0; 5];
        for (slot, k) in table.iter_mut().zip([-4i32, -2, 0, 2, 4]) {
            // ΔE = 2 J σ Σ_nb σ
            let delta = 2.0 * params.coupling * k as f64;
            if delta > 0.0 {
                *slot = (-params.beta * delta).exp();
            }
        }
        AcceptanceTable(table)
    }
}

/// One sequential Metropolis sweep over all sites. Returns the change of
/// the bond sum `Σσσ` and of the magnetization.
pub(crate) fn metropolis_sweep_bits<R: Rng + ?Sized>(
    lattice: &Lattice,
    bits: &mut [u8],
    table: &AcceptanceTable,
    rng: &mut R,
) -> (i64, i64) {
    let mut d_bonds = 0i64;
    let mut d_mag = 0i64;
    for site in 0..bits.len() {
        let s = 1 - 2 * bits[site] as i32;
        let k = s * lattice.local_field_sum(bits, site);
        let p = table.0[((k + 4) / 2) as usize];
        if p >= 1.0 || rng.random::<f64>() < p {
            bits[site] ^= 1;
            d_bonds -= 2 * k as i64;
            d_mag -= 2 * s as i64;
        }
    }
    (d_bonds, d_mag)
}

/// One Metropolis sweep on a configuration (zero field only, like the sampler).
pub fn metropolis_sweep<R: Rng + ?Sized>(
    lattice: &Lattice,
    config: &mut SpinConfig,
    params: &ThermoParams,
    rng: &mut R,
) -> Result<()> {
    if params.field != 0.0 {
        return Err(Error::FieldNotSupported);
    }
    if config.len() != lattice.num_sites() {
        return Err(Error::ConfigLength {
            expected: lattice.num_sites(),
            actual: config.len(),
        });
    }
    let mut bits = config.bits().to_vec();
    metropolis_sweep_bits(lattice, &mut bits, &AcceptanceTable::new(params), rng);
    *config = SpinConfig::from_bits(bits)?;
    Ok(())
}

/// Scratch space for cluster growth, reused across steps.
#[derive(Clone, Debug, Default)]
pub(crate) struct WolffScratch {
    stack: Vec<u32>,
}

/// Grows and flips one Wolff cluster from a random seed site with bond
/// activation probability `p_add = 1 - e^{-2βJ}`. Returns the cluster size.
pub(crate) fn wolff_step_bits<R: Rng + ?Sized>(
    lattice: &Lattice,
    bits: &mut [u8],
    p_add: f64,
    scratch: &mut WolffScratch,
    rng: &mut R,
) -> usize {
    let seed = rng.random_range(0..bits.len());
    let orientation = bits[seed];
    // Flip on insertion; a flipped site no longer matches `orientation`,
    // which doubles as the visited mark.
    bits[seed] ^= 1;
    scratch.stack.clear();
    scratch.stack.push(seed as u32);
    let mut size = 1;
    while let Some(site) = scratch.stack.pop() {
        for &nb in lattice.neighbors(site as usize) {
            let nb = nb as usize;
            if bits[nb] == orientation && (p_add >= 1.0 || rng.random::<f64>() < p_add) {
                bits[nb] ^= 1;
                scratch.stack.push(nb as u32);
                size += 1;
            }
        }
    }
    size
}

/// `1 - e^{-2βJ}`.
pub fn wolff_add_probability(params: &ThermoParams) -> f64 {
    -(-2.0 * params.beta * params.coupling).exp_m1()
}

/// One Wolff cluster update. Rejects a nonzero field, for which the
/// single-cluster rule does not satisfy detailed balance.
pub fn wolff_step<R: Rng + ?Sized>(
    lattice: &Lattice,
    config: &mut SpinConfig,
    params: &ThermoParams,
    rng: &mut R,
) -> Result<usize> {
    if params.field != 0.0 {
        return Err(Error::FieldNotSupported);
    }
    if config.len() != lattice.num_sites() {
        return Err(Error::ConfigLength {
            expected: lattice.num_sites(),
            actual: config.len(),
        });
    }
    let mut bits = config.bits().to_vec();
    let size = wolff_step_bits(lattice, &mut bits, wolff_add_probability(params), &mut WolffScratch::default(), rng);
    *config = SpinConfig::from_bits(bits)?;
    Ok(size)
}
