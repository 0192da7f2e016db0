//! Bit-packed occupation configurations over the fixed site enumeration.

use crate::error::{Error, Result};

/// Occupation variables `eta(x)` for every site of `U_n`, one bit per site
/// in the lexicographic enumeration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    blocks: Vec<u64>,
    sites: usize,
}

impl Configuration {
    pub fn empty(sites: usize) -> Self {
        Self {
            blocks: vec![0; sites.div_ceil(64)],
            sites,
        }
    }

    pub fn filled(sites: usize) -> Self {
        let mut c = Self::empty(sites);
        for i in 0..sites {
            c.set(i, true);
        }
        c
    }

    pub fn from_fn(sites: usize, mut occupied: impl FnMut(usize) -> bool) -> Self {
        let mut c = Self::empty(sites);
        for i in 0..sites {
            if occupied(i) {
                c.set(i, true);
            }
        }
        c
    }

    /// Configuration from a state index: bit `i` of `state` is site `i`.
    /// Only valid for lattices small enough for the master-equation engine.
    pub fn from_state(sites: usize, state: u64) -> Self {
        debug_assert!(sites <= 64);
        Self {
            blocks: vec![state],
            sites,
        }
    }

    /// State index when the lattice fits into one word.
    pub fn as_state(&self) -> Option<u64> {
        if self.sites <= 64 {
            Some(self.blocks[0])
        } else {
            None
        }
    }

    #[inline]
    pub fn sites(&self) -> usize {
        self.sites
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.sites);
        self.blocks[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, occupied: bool) {
        debug_assert!(i < self.sites);
        let mask = 1u64 << (i % 64);
        if occupied {
            self.blocks[i / 64] |= mask;
        } else {
            self.blocks[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        debug_assert!(i < self.sites);
        self.blocks[i / 64] ^= 1u64 << (i % 64);
    }

    /// Number of occupied sites.
    pub fn ones(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.sites).map(move |i| self.get(i))
    }

    /// Hex encoding of the packed bits, least-significant block first,
    /// fixed width. Round-trips through [`from_hex`](Self::from_hex).
    pub fn to_hex(&self) -> String {
        let nibbles = self.sites.div_ceil(4);
        let mut out = String::with_capacity(nibbles);
        for k in 0..nibbles {
            let i = k * 4;
            let nib = (self.blocks[i / 64] >> (i % 64)) & 0xf;
            out.push(char::from_digit(nib as u32, 16).unwrap());
        }
        out
    }

    pub fn from_hex(text: &str, sites: usize) -> Result<Self> {
        let nibbles = sites.div_ceil(4);
        if text.len() != nibbles {
            return Err(Error::Config(format!(
                "occupancy hex `{text}` has {} nibbles, expected {nibbles}",
                text.len()
            )));
        }
        let mut c = Self::empty(sites);
        for (k, ch) in text.chars().enumerate() {
            let nib = ch
                .to_digit(16)
                .ok_or_else(|| Error::Config(format!("bad hex digit `{ch}`")))? as u64;
            let i = k * 4;
            c.blocks[i / 64] |= nib << (i % 64);
        }
        // bits beyond `sites` must be zero
        if c.ones() != c.iter().filter(|&b| b).count() {
            return Err(Error::Config("occupancy hex has stray high bits".into()));
        }
        Ok(c)
    }
}
