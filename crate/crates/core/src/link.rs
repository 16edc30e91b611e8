//! Bit framing and the precoded PSM / MD-PSM transmission path.
//!
//! Frame layout, most significant bit first:
//!
//! * PSM: `q` signal bits, then `K` spatial bits.
//! * MD-PSM: `K` spatial bits and `q1` signal bits for the first station,
//!   then `K` spatial bits and `q2` signal bits for the second.
//!
//! Spatial bits select the receive antenna in natural binary; signal bits
//! select the symbol through its Gray label. Antenna and symbol indices are
//! zero-based throughout.

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, ChannelRealization, DualChannel};
use crate::constellation::{build_receive_set, rotate, Constellation, ReceiveSet, Scheme};
use crate::error::{Error, Result};

/// Single base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsmConfig {
    pub n_t: usize,
    pub n_r: usize,
    pub scheme: Scheme,
}

/// Two cooperating base stations; the second rotates its alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdPsmConfig {
    pub n_t1: usize,
    pub n_t2: usize,
    pub n_r: usize,
    pub scheme1: Scheme,
    pub scheme2: Scheme,
    pub theta_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SystemConfig {
    Psm(PsmConfig),
    MdPsm(MdPsmConfig),
}

fn check_antennas(n_r: usize, n_ts: &[usize]) -> Result<()> {
    if n_r < 2 || !n_r.is_power_of_two() {
        return Err(Error::Config(format!("n_R must be a power of two >= 2, got {n_r}")));
    }
    for &n_t in n_ts {
        if n_t < n_r {
            return Err(Error::Config(format!("need n_T >= n_R, got n_T = {n_t}, n_R = {n_r}")));
        }
    }
    Ok(())
}

impl SystemConfig {
    pub fn psm(n_t: usize, n_r: usize, scheme: Scheme) -> Self {
        SystemConfig::Psm(PsmConfig { n_t, n_r, scheme })
    }

    pub fn mdpsm(n_t1: usize, n_t2: usize, n_r: usize, scheme1: Scheme, scheme2: Scheme, theta_deg: f64) -> Self {
        SystemConfig::MdPsm(MdPsmConfig { n_t1, n_t2, n_r, scheme1, scheme2, theta_deg })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SystemConfig::Psm(c) => check_antennas(c.n_r, &[c.n_t]),
            SystemConfig::MdPsm(c) => {
                check_antennas(c.n_r, &[c.n_t1, c.n_t2])?;
                if !c.theta_deg.is_finite() {
                    return Err(Error::Config("rotation angle must be finite".into()));
                }
                Ok(())
            }
        }
    }

    pub fn n_r(&self) -> usize {
        match self {
            SystemConfig::Psm(c) => c.n_r,
            SystemConfig::MdPsm(c) => c.n_r,
        }
    }

    /// `K = log2(n_R)`.
    pub fn spatial_bits(&self) -> u32 {
        self.n_r().trailing_zeros()
    }

    /// Spectral efficiency in bits per channel use.
    pub fn bits_per_use(&self) -> u32 {
        let k = self.spatial_bits();
        match self {
            SystemConfig::Psm(c) => c.scheme.bits_per_symbol() + k,
            SystemConfig::MdPsm(c) => c.scheme1.bits_per_symbol() + c.scheme2.bits_per_symbol() + 2 * k,
        }
    }

    /// Bits per station used in the noise normalization: `q + K` for PSM,
    /// `(q1 + q2)/2 + K` for MD-PSM.
    pub fn bits_per_station(&self) -> f64 {
        let k = self.spatial_bits() as f64;
        match self {
            SystemConfig::Psm(c) => c.scheme.bits_per_symbol() as f64 + k,
            SystemConfig::MdPsm(c) => {
                0.5 * (c.scheme1.bits_per_symbol() + c.scheme2.bits_per_symbol()) as f64 + k
            }
        }
    }

    /// Paper-style legend tuple, e.g. `PSM(4,4,2)` or `MD-PSM(4,4,4,2,2)`.
    pub fn tag(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SystemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemConfig::Psm(c) => write!(f, "PSM({},{},{})", c.n_t, c.n_r, c.scheme.bits_per_symbol()),
            SystemConfig::MdPsm(c) => write!(
                f,
                "MD-PSM({},{},{},{},{})",
                c.n_t1,
                c.n_t2,
                c.n_r,
                c.scheme1.bits_per_symbol(),
                c.scheme2.bits_per_symbol()
            ),
        }
    }
}

/// SNR per bit and the resulting per-dimension noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub gamma_b: f64,
    pub sigma2: f64,
}

impl NoiseModel {
    pub fn new(config: &SystemConfig, gamma_b: f64) -> Self {
        Self { gamma_b, sigma2: 1.0 / (config.bits_per_station() * gamma_b) }
    }

    /// `snr_db = +inf` gives a noiseless link.
    pub fn from_db(config: &SystemConfig, snr_db: f64) -> Self {
        Self::new(config, 10f64.powf(snr_db / 10.0))
    }
}

/// The information carried by one channel use. PSM leaves `i2`/`k2` at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransmitMessage {
    pub i1: usize,
    pub k1: usize,
    pub i2: usize,
    pub k2: usize,
    /// Source bits packed MSB-first into the low `len` bits.
    pub word: u64,
    pub len: u32,
}

impl TransmitMessage {
    pub fn bits(&self) -> Vec<u8> {
        unpack(self.word, self.len)
    }
}

pub fn pack(bits: &[u8]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b & 1))
}

pub fn unpack(word: u64, len: u32) -> Vec<u8> {
    (0..len).rev().map(|i| ((word >> i) & 1) as u8).collect()
}

fn take(word: u64, shift: u32, width: u32) -> u32 {
    ((word >> shift) & ((1u64 << width) - 1)) as u32
}

/// Constellations and framing for one configuration.
#[derive(Debug, Clone)]
pub struct Link {
    config: SystemConfig,
    first: Constellation,
    second: Option<Constellation>,
    receive_set: Option<ReceiveSet>,
}

impl Link {
    pub fn new(config: SystemConfig) -> Result<Self> {
        config.validate()?;
        Ok(match config {
            SystemConfig::Psm(c) => Self {
                config,
                first: Constellation::new(c.scheme),
                second: None,
                receive_set: None,
            },
            SystemConfig::MdPsm(c) => {
                let a = Constellation::new(c.scheme1);
                let b = Constellation::new(c.scheme2);
                let rs = build_receive_set(&a, &rotate(&b, c.theta_deg));
                Self { config, first: a, second: Some(b), receive_set: Some(rs) }
            }
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn constellation(&self) -> &Constellation {
        &self.first
    }

    pub fn receive_set(&self) -> Option<&ReceiveSet> {
        self.receive_set.as_ref()
    }

    pub fn frame_len(&self) -> u32 {
        self.config.bits_per_use()
    }

    pub fn map_bits(&self, bits: &[u8]) -> Result<TransmitMessage> {
        let len = self.frame_len() as usize;
        if bits.len() != len {
            return Err(Error::Framing { expected: len, got: bits.len() });
        }
        Ok(self.map_word(pack(bits)))
    }

    /// Maps the low `frame_len()` bits of `word`.
    pub fn map_word(&self, word: u64) -> TransmitMessage {
        let k = self.config.spatial_bits();
        let len = self.frame_len();
        let word = word & ((1u64 << len) - 1);
        match &self.second {
            None => {
                let q = self.first.bits_per_symbol();
                let label = take(word, k, q);
                TransmitMessage {
                    i1: take(word, 0, k) as usize,
                    k1: self.first.index_of_label(label),
                    i2: 0,
                    k2: 0,
                    word,
                    len,
                }
            }
            Some(second) => {
                let (q1, q2) = (self.first.bits_per_symbol(), second.bits_per_symbol());
                let i1 = take(word, q2 + k + q1, k) as usize;
                let l1 = take(word, q2 + k, q1);
                let i2 = take(word, q2, k) as usize;
                let l2 = take(word, 0, q2);
                TransmitMessage {
                    i1,
                    k1: self.first.index_of_label(l1),
                    i2,
                    k2: second.index_of_label(l2),
                    word,
                    len,
                }
            }
        }
    }

    /// Inverse of [`Link::map_word`] for a detected hypothesis.
    pub fn unmap(&self, i1: usize, k1: usize, i2: usize, k2: usize) -> u64 {
        let k = self.config.spatial_bits();
        match &self.second {
            None => (u64::from(self.first.label(k1)) << k) | i1 as u64,
            Some(second) => {
                let (q1, q2) = (self.first.bits_per_symbol(), second.bits_per_symbol());
                let mut w = i1 as u64;
                w = (w << q1) | u64::from(self.first.label(k1));
                w = (w << k) | i2 as u64;
                (w << q2) | u64::from(second.label(k2))
            }
        }
    }

    /// The signal symbol of the second station, rotated.
    pub fn second_symbol(&self, k2: usize) -> Complex64 {
        self.receive_set.as_ref().expect("MD-PSM link").omega_b().points()[k2]
    }
}

/// One-shot helper over [`Link::map_bits`].
pub fn map_bits(bits: &[u8], config: &SystemConfig) -> Result<TransmitMessage> {
    Link::new(*config)?.map_bits(bits)
}

/// Adds CN(0, sigma2) noise to every entry.
pub fn awgn<R: Rng + ?Sized>(v: &[Complex64], sigma2: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    if !(sigma2 >= 0.0) {
        return Err(Error::Domain(format!("noise variance must be non-negative, got {sigma2}")));
    }
    if sigma2 == 0.0 {
        return Ok(v.to_vec());
    }
    let sd = sigma2.sqrt();
    Ok(v.iter().map(|&z| z + complex_gaussian(rng) * sd).collect())
}

fn precoded_image(chan: &ChannelRealization, beta: f64, antenna: usize, s: Complex64) -> DVector<Complex64> {
    let x = chan.precoder().column(antenna) * (s * beta.sqrt());
    chan.h() * x
}

fn to_vec(v: DVector<Complex64>) -> Vec<Complex64> {
    v.iter().copied().collect()
}

/// `y = H √β P e_i s_k + n`.
pub fn transmit_psm<R: Rng + ?Sized>(
    msg: &TransmitMessage,
    chan: &ChannelRealization,
    constellation: &Constellation,
    sigma2: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let s = constellation.points()[msg.k1];
    let z = precoded_image(chan, chan.beta(), msg.i1, s);
    awgn(&to_vec(z), sigma2, rng)
}

/// Transmit vector `x = √β P e_i s_k` of a single station.
pub fn precoded_vector(chan: &ChannelRealization, beta: f64, antenna: usize, s: Complex64) -> Vec<Complex64> {
    to_vec(chan.precoder().column(antenna) * (s * beta.sqrt()))
}

/// `y = H1 x1 + H2 x2 + n`, both stations normalized by the unified β.
pub fn transmit_mdpsm<R: Rng + ?Sized>(
    msg: &TransmitMessage,
    dual: &DualChannel,
    link: &Link,
    sigma2: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let beta = dual.unified_beta();
    let s1 = link.constellation().points()[msg.k1];
    let s2 = link.second_symbol(msg.k2);
    let z = precoded_image(&dual.bs1, beta, msg.i1, s1) + precoded_image(&dual.bs2, beta, msg.i2, s2);
    awgn(&to_vec(z), sigma2, rng)
}

/// `r = y / √β`.
pub fn normalize(y: &[Complex64], beta: f64) -> Vec<Complex64> {
    let g = 1.0 / beta.sqrt();
    y.iter().map(|&z| z * g).collect()
}
