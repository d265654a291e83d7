use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default largest Hilbert-space dimension accepted by [`enumerate_basis`].
pub const DEFAULT_CAPACITY: usize = 2_000_000;

/// Configurations are packed into a `u128` key with
/// `bits = ⌈log2(n_modes + 1)⌉` bits per photon, so `n_max · bits ≤ 128`.
const KEY_BITS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    Ground,
    Excited,
}

impl Level {
    pub fn bit(self) -> usize {
        match self {
            Level::Ground => 0,
            Level::Excited => 1,
        }
    }

    pub fn from_bit(b: usize) -> Level {
        if b & 1 == 0 {
            Level::Ground
        } else {
            Level::Excited
        }
    }

    /// `σ_z` eigenvalue.
    pub fn sz(self) -> f64 {
        match self {
            Level::Ground => -1.0,
            Level::Excited => 1.0,
        }
    }
}

/// Photon configurations with at most `n_max` photons in `n_modes` modes,
/// tensored with the two atomic levels.
///
/// Configurations are ordered by total photon number, then lexicographically
/// by their sorted list of occupied mode indices, so `|1_0⟩` precedes
/// `|1_1⟩` and `|1_0 1_0⟩ < |1_0 1_1⟩ < |1_1 1_1⟩`. The atom is the fastest
/// index: state `2c + level`.
#[derive(Debug, Clone)]
pub struct FockBasis {
    n_modes: usize,
    n_max: usize,
    /// Sorted occupied-mode lists.
    configs: Vec<Vec<u16>>,
    /// `(mode, occupation)` pairs per configuration.
    occupations: Vec<Vec<(u16, u16)>>,
    lookup: HashMap<u128, u32>,
    bits: u32,
    /// First configuration index of each photon-number sector.
    sector_start: Vec<usize>,
}

fn key(modes: &[u16], bits: u32) -> u128 {
    let mut k = 0u128;
    for &m in modes {
        k = (k << bits) | (m as u128 + 1);
    }
    k
}

fn key_bits(n_modes: usize) -> u32 {
    usize::BITS - n_modes.leading_zeros()
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
        if r > usize::MAX as u128 {
            return None;
        }
    }
    Some(r as usize)
}

/// Number of states `2 · C(n_modes + n_max, n_max)`, or `None` on overflow.
pub fn basis_dimension(n_modes: usize, n_max: usize) -> Option<usize> {
    binomial(n_modes + n_max, n_max).and_then(|c| c.checked_mul(2))
}

pub fn enumerate_basis(n_modes: usize, n_max: usize) -> Result<FockBasis> {
    enumerate_basis_with_limit(n_modes, n_max, DEFAULT_CAPACITY)
}

pub fn enumerate_basis_with_limit(n_modes: usize, n_max: usize, limit: usize) -> Result<FockBasis> {
    if n_modes == 0 {
        return Err(Error::InvalidConfig("Fock basis needs at least one mode".into()));
    }
    if n_modes > u16::MAX as usize {
        return Err(Error::InvalidConfig(format!(
            "too many modes for the Fock basis: {n_modes}"
        )));
    }
    let bits = key_bits(n_modes);
    if n_max * bits as usize > KEY_BITS {
        return Err(Error::InvalidConfig(format!(
            "photon cutoff {n_max} too large for {n_modes} modes (at most {})",
            KEY_BITS / bits as usize
        )));
    }
    let dim = basis_dimension(n_modes, n_max).unwrap_or(usize::MAX);
    if dim > limit {
        return Err(Error::Capacity { dimension: dim, limit });
    }
    let n_cfg = dim / 2;
    let mut configs: Vec<Vec<u16>> = Vec::with_capacity(n_cfg);
    let mut sector_start = Vec::with_capacity(n_max + 2);
    for n in 0..=n_max {
        sector_start.push(configs.len());
        // Non-decreasing index sequences of length n in lexicographic order.
        let mut cur = vec![0u16; n];
        loop {
            configs.push(cur.clone());
            // advance
            let mut pos = n;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                if (cur[pos] as usize) + 1 < n_modes {
                    cur[pos] += 1;
                    let v = cur[pos];
                    for x in cur.iter_mut().skip(pos + 1) {
                        *x = v;
                    }
                    pos = usize::MAX;
                    break;
                }
            }
            if pos != usize::MAX {
                break;
            }
        }
    }
    sector_start.push(configs.len());
    debug_assert_eq!(configs.len(), n_cfg);
    let lookup = configs
        .iter()
        .enumerate()
        .map(|(i, c)| (key(c, bits), i as u32))
        .collect();
    let occupations = configs
        .iter()
        .map(|c| {
            let mut occ: Vec<(u16, u16)> = Vec::new();
            for &m in c {
                match occ.last_mut() {
                    Some((mm, n)) if *mm == m => *n += 1,
                    _ => occ.push((m, 1)),
                }
            }
            occ
        })
        .collect();
    Ok(FockBasis {
        n_modes,
        n_max,
        configs,
        occupations,
        lookup,
        bits,
        sector_start,
    })
}

impl FockBasis {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        2 * self.configs.len()
    }

    pub fn n_configs(&self) -> usize {
        self.configs.len()
    }

    /// Sorted occupied-mode list of a configuration.
    pub fn config(&self, c: usize) -> &[u16] {
        &self.configs[c]
    }

    /// `(mode, n)` pairs of a configuration.
    pub fn occupations(&self, c: usize) -> &[(u16, u16)] {
        &self.occupations[c]
    }

    pub fn photon_number(&self, c: usize) -> usize {
        self.configs[c].len()
    }

    pub fn occupation(&self, c: usize, mode: usize) -> usize {
        self.occupations[c]
            .iter()
            .find(|(m, _)| *m as usize == mode)
            .map(|(_, n)| *n as usize)
            .unwrap_or(0)
    }

    /// `(level, configuration)` of a state index.
    pub fn state(&self, index: usize) -> (Level, usize) {
        (Level::from_bit(index), index / 2)
    }

    pub fn index(&self, level: Level, config: usize) -> usize {
        2 * config + level.bit()
    }

    /// Configuration index of a sorted occupied-mode list.
    pub fn config_index(&self, modes: &[u16]) -> Option<usize> {
        if modes.len() > self.n_max {
            return None;
        }
        self.lookup.get(&key(modes, self.bits)).map(|&i| i as usize)
    }

    /// Index of a state given as an occupation vector.
    pub fn index_of(&self, level: Level, occupation: &[usize]) -> Option<usize> {
        if occupation.len() != self.n_modes {
            return None;
        }
        let mut modes = Vec::new();
        for (m, &n) in occupation.iter().enumerate() {
            modes.extend(std::iter::repeat_n(m as u16, n));
        }
        self.config_index(&modes).map(|c| self.index(level, c))
    }

    /// Occupation vector of a configuration.
    pub fn occupation_vector(&self, c: usize) -> Vec<usize> {
        let mut v = vec![0; self.n_modes];
        for &(m, n) in &self.occupations[c] {
            v[m as usize] = n as usize;
        }
        v
    }

    /// Configuration reached by adding one photon to `mode`.
    pub fn raise(&self, c: usize, mode: usize) -> Option<usize> {
        let cfg = &self.configs[c];
        if cfg.len() >= self.n_max {
            return None;
        }
        let m = mode as u16;
        let pos = cfg.partition_point(|&x| x <= m);
        let mut k = 0u128;
        for &x in &cfg[..pos] {
            k = (k << self.bits) | (x as u128 + 1);
        }
        k = (k << self.bits) | (m as u128 + 1);
        for &x in &cfg[pos..] {
            k = (k << self.bits) | (x as u128 + 1);
        }
        self.lookup.get(&k).map(|&i| i as usize)
    }

    /// Configuration reached by removing one photon from `mode`.
    pub fn lower(&self, c: usize, mode: usize) -> Option<usize> {
        let cfg = &self.configs[c];
        let m = mode as u16;
        let pos = cfg.iter().position(|&x| x == m)?;
        let mut k = 0u128;
        for (i, &x) in cfg.iter().enumerate() {
            if i != pos {
                k = (k << self.bits) | (x as u128 + 1);
            }
        }
        self.lookup.get(&k).map(|&i| i as usize)
    }

    /// Configuration range of the sector with `n` photons.
    pub fn sector(&self, n: usize) -> std::ops::Range<usize> {
        self.sector_start[n]..self.sector_start[n + 1]
    }

    /// Human-readable label such as `|e; 1_0 2_3⟩`.
    pub fn label(&self, index: usize) -> String {
        let (level, c) = self.state(index);
        let atom = match level {
            Level::Ground => "g",
            Level::Excited => "e",
        };
        if self.occupations[c].is_empty() {
            return format!("|{atom}; 0>");
        }
        let field: Vec<String> = self.occupations[c].iter().map(|(m, n)| format!("{n}_{m}")).collect();
        format!("|{atom}; {}>", field.join(" "))
    }
}
