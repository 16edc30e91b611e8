//! Signal alphabets and the MD-PSM receive constellation.
//!
//! The first base station draws symbols from a conventional alphabet `Ω_a`,
//! the second from a rotated copy `Ω_b = Ω e^{jθ}`. When both stations hit
//! the same receive antenna the receiver observes a symbol of the Minkowski
//! sum `Ω_c = Ω_a ⊕ Ω_b`, so the full noiseless alphabet at any active
//! antenna is `Ω_d = Ω_a ∪ Ω_b ∪ Ω_c`.
//!
//! All PSK alphabets start at phase zero, so BPSK ⊂ QPSK ⊂ 8PSK
//! geometrically. 16QAM uses the `(±1, ±3) + j(±1, ±3)` grid scaled by
//! `1/√10`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two points closer than this are treated as the same symbol.
pub const COLLISION_TOLERANCE: f64 = 1e-9;

/// Supported modulation alphabets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "BPSK")]
    Bpsk,
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "8PSK")]
    Psk8,
    #[serde(rename = "16QAM")]
    Qam16,
    /// Square Gray-mapped 64QAM. Only the PSM baseline needs it, to match
    /// MD-PSM spectral efficiency at 6 signal bits; no closed forms or
    /// tabulated angles exist for it.
    #[serde(rename = "64QAM")]
    Qam64,
}

impl Scheme {
    /// The alphabets usable at either MD-PSM station.
    pub const ALL: [Scheme; 4] = [Scheme::Bpsk, Scheme::Qpsk, Scheme::Psk8, Scheme::Qam16];

    pub fn bits_per_symbol(self) -> u32 {
        match self {
            Scheme::Bpsk => 1,
            Scheme::Qpsk => 2,
            Scheme::Psk8 => 3,
            Scheme::Qam16 => 4,
            Scheme::Qam64 => 6,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    pub fn is_psk(self) -> bool {
        !matches!(self, Scheme::Qam16 | Scheme::Qam64)
    }

    /// Scheme for a given number of bits per symbol.
    pub fn from_bits(q: u32) -> Result<Self> {
        match q {
            1 => Ok(Scheme::Bpsk),
            2 => Ok(Scheme::Qpsk),
            3 => Ok(Scheme::Psk8),
            4 => Ok(Scheme::Qam16),
            6 => Ok(Scheme::Qam64),
            _ => Err(Error::Config(format!("no supported scheme carries {q} bits per symbol"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Bpsk => "BPSK",
            Scheme::Qpsk => "QPSK",
            Scheme::Psk8 => "8PSK",
            Scheme::Qam16 => "16QAM",
            Scheme::Qam64 => "64QAM",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BPSK" => Ok(Scheme::Bpsk),
            "QPSK" | "4PSK" => Ok(Scheme::Qpsk),
            "8PSK" => Ok(Scheme::Psk8),
            "16QAM" => Ok(Scheme::Qam16),
            "64QAM" => Ok(Scheme::Qam64),
            other => Err(Error::Config(format!("unsupported scheme `{other}`"))),
        }
    }
}

fn gray(x: u32) -> u32 {
    x ^ (x >> 1)
}

/// Unit-energy square QAM with `2^axis_bits` levels per axis, I-major,
/// each axis Gray-labelled independently.
fn square_qam(axis_bits: u32) -> Vec<(Complex64, u32)> {
    let side = 1usize << axis_bits;
    let levels: Vec<f64> = (0..side).map(|l| (2 * l) as f64 - (side - 1) as f64).collect();
    let energy = 2.0 * levels.iter().map(|v| v * v).sum::<f64>() / side as f64;
    let scale = 1.0 / energy.sqrt();
    let mut out = Vec::with_capacity(side * side);
    for (li, &re) in levels.iter().enumerate() {
        for (lq, &im) in levels.iter().enumerate() {
            let label = (gray(li as u32) << axis_bits) | gray(lq as u32);
            out.push((Complex64::new(re * scale, im * scale), label));
        }
    }
    out
}

/// Unit-energy M-PSK points starting at phase zero.
pub fn psk_points(order: usize) -> Vec<Complex64> {
    (0..order)
        .map(|p| Complex64::from_polar(1.0, 2.0 * PI * p as f64 / order as f64))
        .collect()
}

/// A modulation alphabet with Gray bit labels.
///
/// `points` are kept in geometric order (phase order for PSK, I-major grid
/// order for 16QAM); `labels[k]` is the bit pattern carried by `points[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    scheme: Scheme,
    points: Vec<Complex64>,
    labels: Vec<u32>,
    index_of_label: Vec<usize>,
}

impl Constellation {
    pub fn new(scheme: Scheme) -> Self {
        let (points, labels): (Vec<Complex64>, Vec<u32>) = match scheme {
            Scheme::Bpsk | Scheme::Qpsk | Scheme::Psk8 => {
                let m = scheme.order();
                psk_points(m)
                    .into_iter()
                    .enumerate()
                    .map(|(p, s)| (s, gray(p as u32)))
                    .collect()
            }
            Scheme::Qam16 | Scheme::Qam64 => square_qam(scheme.bits_per_symbol() / 2).into_iter().unzip(),
        };
        let mut index_of_label = vec![0; points.len()];
        for (k, &l) in labels.iter().enumerate() {
            index_of_label[l as usize] = k;
        }
        Self { scheme, points, labels, index_of_label }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.scheme.bits_per_symbol()
    }

    pub fn label(&self, k: usize) -> u32 {
        self.labels[k]
    }

    pub fn index_of_label(&self, label: u32) -> usize {
        self.index_of_label[label as usize]
    }

    /// `(re, im, label)` triples in point order.
    pub fn labeled_points(&self) -> Vec<(f64, f64, u32)> {
        self.points
            .iter()
            .zip(&self.labels)
            .map(|(p, &l)| (p.re, p.im, l))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.labeled_points()).expect("plain tuples always serialize")
    }
}

/// Builds the alphabet for `scheme`, checking that `q` matches it.
pub fn make_constellation(scheme: Scheme, q: u32) -> Result<Constellation> {
    if scheme.bits_per_symbol() != q {
        return Err(Error::Config(format!(
            "{scheme} carries {} bits per symbol, not {q}",
            scheme.bits_per_symbol()
        )));
    }
    Ok(Constellation::new(scheme))
}

/// A base alphabet multiplied by `e^{jθ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedConstellation {
    base: Constellation,
    theta_deg: f64,
    points: Vec<Complex64>,
}

impl RotatedConstellation {
    pub fn base(&self) -> &Constellation {
        &self.base
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta_deg
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }
}

/// Rotates every point of `c` by `theta_deg` degrees. The stored angle is
/// reduced to `[0, 360)`.
pub fn rotate(c: &Constellation, theta_deg: f64) -> RotatedConstellation {
    let phasor = Complex64::from_polar(1.0, theta_deg.to_radians());
    RotatedConstellation {
        base: c.clone(),
        theta_deg: theta_deg.rem_euclid(360.0),
        points: c.points().iter().map(|&s| s * phasor).collect(),
    }
}

/// `Ω_a`, `Ω_b`, their Minkowski sum and the union `Ω_d`.
#[derive(Debug, Clone)]
pub struct ReceiveSet {
    omega_a: Constellation,
    omega_b: RotatedConstellation,
    omega_c: Vec<Complex64>,
    omega_d: Vec<Complex64>,
    min_distance: f64,
    uniqueness_ok: bool,
}

impl ReceiveSet {
    pub fn omega_a(&self) -> &Constellation {
        &self.omega_a
    }

    pub fn omega_b(&self) -> &RotatedConstellation {
        &self.omega_b
    }

    /// Minkowski sum, entry `k1 * M2 + k2` is `s_{k1} + s'_{k2}`.
    pub fn omega_c(&self) -> &[Complex64] {
        &self.omega_c
    }

    /// `Ω_a`, then `Ω_b`, then `Ω_c`, concatenated.
    pub fn omega_d(&self) -> &[Complex64] {
        &self.omega_d
    }

    pub fn uniqueness_ok(&self) -> bool {
        self.uniqueness_ok
    }

    /// Minimum pairwise distance over `Ω_d`; zero when uniqueness fails.
    pub fn min_distance(&self) -> f64 {
        self.min_distance
    }

    pub fn theta_deg(&self) -> f64 {
        self.omega_b.theta_deg
    }

    pub fn sum_index(&self, k1: usize, k2: usize) -> usize {
        k1 * self.omega_b.order() + k2
    }
}

pub fn build_receive_set(a: &Constellation, b: &RotatedConstellation) -> ReceiveSet {
    let m2 = b.order();
    let mut omega_c = Vec::with_capacity(a.order() * m2);
    for &sa in a.points() {
        for &sb in b.points() {
            omega_c.push(sa + sb);
        }
    }

    let disjoint = cross_min_distance(a.points(), b.points()) >= COLLISION_TOLERANCE;
    let sums_distinct = min_distance_unchecked(&omega_c) >= COLLISION_TOLERANCE;

    let mut omega_d = Vec::with_capacity(a.order() + m2 + omega_c.len());
    omega_d.extend_from_slice(a.points());
    omega_d.extend_from_slice(b.points());
    omega_d.extend_from_slice(&omega_c);
    let d = min_distance_unchecked(&omega_d);
    let uniqueness_ok = disjoint && sums_distinct && d >= COLLISION_TOLERANCE;

    ReceiveSet {
        omega_a: a.clone(),
        omega_b: b.clone(),
        omega_c,
        omega_d,
        min_distance: if uniqueness_ok { d } else { 0.0 },
        uniqueness_ok,
    }
}

fn cross_min_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for &x in a {
        for &y in b {
            best = best.min((x - y).norm_sqr());
        }
    }
    best.sqrt()
}

pub(crate) fn min_distance_unchecked(points: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, &x) in points.iter().enumerate() {
        for &y in &points[i + 1..] {
            let d = (x - y).norm_sqr();
            if d < best {
                best = d;
            }
        }
    }
    best.sqrt()
}

/// Minimum pairwise Euclidean distance (not squared).
pub fn dmin(points: &[Complex64]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Domain(format!(
            "minimum distance needs at least 2 points, got {}",
            points.len()
        )));
    }
    Ok(min_distance_unchecked(points))
}

/// Number of pairwise-distinct points under [`COLLISION_TOLERANCE`].
pub fn distinct_count(points: &[Complex64]) -> usize {
    let mut kept: Vec<Complex64> = Vec::with_capacity(points.len());
    for &p in points {
        if kept.iter().all(|&q| (p - q).norm() >= COLLISION_TOLERANCE) {
            kept.push(p);
        }
    }
    kept.len()
}

/// Equal-norm symbols spaced uniformly on a circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetDescriptor {
    pub radius: f64,
    /// Phase of the first symbol, radians.
    pub phi: f64,
    pub count: usize,
}

impl SubsetDescriptor {
    pub fn points(&self) -> Vec<Complex64> {
        (0..self.count)
            .map(|l| {
                Complex64::from_polar(self.radius, self.phi + 2.0 * PI * l as f64 / self.count as f64)
            })
            .collect()
    }
}

/// `arctan(1/3)`, the phase of the unit-radius 16QAM corner-adjacent points.
pub fn qam16_alpha() -> f64 {
    (1.0f64 / 3.0).atan()
}

/// The four scaled-QPSK rings making up unit-energy 16QAM.
pub fn qam16_subsets() -> [SubsetDescriptor; 4] {
    let alpha = qam16_alpha();
    [
        SubsetDescriptor { radius: 0.2f64.sqrt(), phi: FRAC_PI_4, count: 4 },
        SubsetDescriptor { radius: 1.8f64.sqrt(), phi: FRAC_PI_4, count: 4 },
        SubsetDescriptor { radius: 1.0, phi: alpha, count: 4 },
        SubsetDescriptor { radius: 1.0, phi: FRAC_PI_2 - alpha, count: 4 },
    ]
}

/// One closed-form value of `|s''|²/2` and how many `Ω_c` symbols share it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerm {
    pub value: f64,
    pub multiplicity: usize,
    /// Phase of the first symbol of the ring, PSK–PSK only.
    pub phi: Option<f64>,
}

impl EnergyTerm {
    /// The ring of `Ω_c` symbols described by a PSK–PSK term.
    pub fn subset(&self) -> Option<SubsetDescriptor> {
        self.phi.map(|phi| SubsetDescriptor {
            radius: (2.0 * self.value).sqrt(),
            phi,
            count: self.multiplicity,
        })
    }
}

/// The sixteen `|s''|²/2` rows for a unit-energy PSK symbol at phase zero
/// plus a 16QAM symbol rotated by `theta` (radians).
fn qam16_rows(theta: f64) -> [f64; 16] {
    let alpha = qam16_alpha();
    let (r18, r02) = (1.8f64.sqrt(), 0.2f64.sqrt());
    [
        1.4 + r18 * (theta + FRAC_PI_4).cos(),
        1.4 - r18 * (theta - FRAC_PI_4).cos(),
        1.4 - r18 * (theta + FRAC_PI_4).cos(),
        1.4 + r18 * (theta - FRAC_PI_4).cos(),
        0.6 + r02 * (theta + FRAC_PI_4).cos(),
        0.6 - r02 * (theta - FRAC_PI_4).cos(),
        0.6 - r02 * (theta + FRAC_PI_4).cos(),
        0.6 + r02 * (theta - FRAC_PI_4).cos(),
        1.0 + (theta + alpha).cos(),
        1.0 - (theta + alpha).sin(),
        1.0 - (theta + alpha).cos(),
        1.0 + (theta + alpha).sin(),
        1.0 - (theta - alpha).sin(),
        1.0 - (theta - alpha).cos(),
        1.0 + (theta - alpha).sin(),
        1.0 + (theta - alpha).cos(),
    ]
}

/// Closed-form half-energies of the Minkowski-sum symbols.
///
/// PSK–PSK: with `N = max(M1, M2)` and `δ_n = 2πn/N`, the values are
/// `1 + cos(θ ± δ_n)`, each shared by `min(M1, M2)` symbols on a ring whose
/// first phase is `(θ + δ_n)/2`.
///
/// PSK–16QAM (either order): the sixteen 16QAM rows evaluated at `θ − ψ`
/// for every distinct PSK phase `ψ` modulo `π/2`. For BPSK and QPSK this is
/// just `ψ = 0`; 8PSK adds `ψ = π/4`.
pub fn closed_form_energy_terms(a: Scheme, b: Scheme, theta_deg: f64) -> Result<Vec<EnergyTerm>> {
    let theta = theta_deg.to_radians();
    match (a.is_psk(), b.is_psk()) {
        (true, true) => {
            let (m1, m2) = (a.order(), b.order());
            let n = m1.max(m2);
            let count = m1.min(m2);
            let sign = if m1 <= m2 { 1.0 } else { -1.0 };
            Ok((0..n)
                .map(|i| {
                    let delta = 2.0 * PI * i as f64 / n as f64;
                    EnergyTerm {
                        value: 1.0 + (theta + sign * delta).cos(),
                        multiplicity: count,
                        phi: Some((theta + delta) / 2.0),
                    }
                })
                .collect())
        }
        (true, false) | (false, true) if a != Scheme::Qam64 && b != Scheme::Qam64 => {
            let psk = if a.is_psk() { a } else { b };
            let residues = (psk.order() / 4).max(1);
            let per_row = psk.order() / residues;
            let mut out = Vec::with_capacity(16 * residues);
            for r in 0..residues {
                let psi = FRAC_PI_2 * r as f64 / residues as f64;
                out.extend(qam16_rows(theta - psi).into_iter().map(|value| EnergyTerm {
                    value,
                    multiplicity: per_row,
                    phi: None,
                }));
            }
            Ok(out)
        }
        _ => Err(Error::UnsupportedClosedForm(a.to_string(), b.to_string())),
    }
}

/// Membership and per-symbol probabilities of the noiseless receive symbol
/// under uniformly random bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolProbabilities {
    /// `Pr[m ∈ Ω_a] = Pr[i1 ≠ i2]`.
    pub class_a: f64,
    /// `Pr[m ∈ Ω_b] = Pr[i1 ≠ i2]`; occurs together with `class_a`.
    pub class_b: f64,
    /// `Pr[m ∈ Ω_c] = Pr[i1 = i2]`.
    pub class_c: f64,
    pub per_symbol_a: f64,
    pub per_symbol_b: f64,
    pub per_symbol_c: f64,
}

pub fn symbol_probabilities(n_r: usize, m1: usize, m2: usize) -> SymbolProbabilities {
    let n = n_r as f64;
    let unequal = 1.0 - 1.0 / n;
    SymbolProbabilities {
        class_a: unequal,
        class_b: unequal,
        class_c: 1.0 / n,
        per_symbol_a: (n - 1.0) / (m1 as f64 * n),
        per_symbol_b: (n - 1.0) / (m2 as f64 * n),
        per_symbol_c: 1.0 / (m1 as f64 * m2 as f64 * n),
    }
}
