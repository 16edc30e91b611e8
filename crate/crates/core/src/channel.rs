//! Rayleigh channels, zero-forcing precoders and normalization factors.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Redraw when `cond(H H^H)` exceeds this.
pub const CONDITION_LIMIT: f64 = 1e12;

const MAX_REDRAWS: u32 = 64;

pub type CMatrix = DMatrix<Complex64>;

/// One BS-to-MS channel with its ZF precoder.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    h: CMatrix,
    p: CMatrix,
    beta: f64,
    redraws: u32,
}

impl ChannelRealization {
    /// Computes `P = H^H (H H^H)^{-1}` and `β = n_R / Tr(P P^H)` for a given
    /// `n_R × n_T` channel.
    pub fn from_matrix(h: CMatrix) -> Result<Self> {
        let (n_r, n_t) = h.shape();
        if n_r == 0 || n_t < n_r {
            return Err(Error::Config(format!(
                "zero forcing needs n_T >= n_R >= 1, got n_T = {n_t}, n_R = {n_r}"
            )));
        }
        let hh = h.adjoint();
        let gram = &h * &hh;
        let cond = condition_number(&gram);
        if !cond.is_finite() || cond > CONDITION_LIMIT {
            return Err(Error::Channel(format!("H H^H is ill-conditioned (cond = {cond:e})")));
        }
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::Channel("H H^H is not positive definite".into()))?;
        // P = H^H G^{-1}  <=>  G P^H = H  (G Hermitian)
        let p = chol.solve(&h).adjoint();
        let power: f64 = p.iter().map(|z| z.norm_sqr()).sum();
        let beta = n_r as f64 / power;
        Ok(Self { h, p, beta, redraws: 0 })
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn precoder(&self) -> &CMatrix {
        &self.p
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_r(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.h.ncols()
    }

    /// Draws rejected by the conditioning guard before this one was accepted.
    pub fn redraws(&self) -> u32 {
        self.redraws
    }

    /// `Tr(P P^H)`, i.e. `Tr((H H^H)^{-1})`.
    pub fn precoder_power(&self) -> f64 {
        self.n_r() as f64 / self.beta
    }

    /// `H` as CSV, one row per receive antenna, `re,im` interleaved.
    pub fn h_to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.h.nrows() {
            let row: Vec<String> = (0..self.h.ncols())
                .map(|j| {
                    let z = self.h[(i, j)];
                    format!("{},{}", z.re, z.im)
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Both base stations' channels and the shared normalization factor.
#[derive(Debug, Clone)]
pub struct DualChannel {
    pub bs1: ChannelRealization,
    pub bs2: ChannelRealization,
    unified_beta: f64,
}

impl DualChannel {
    pub fn new(bs1: ChannelRealization, bs2: ChannelRealization) -> Result<Self> {
        if bs1.n_r() != bs2.n_r() {
            return Err(Error::Config("both base stations must serve the same n_R".into()));
        }
        let unified_beta = unified_beta(bs1.beta, bs2.beta)?;
        Ok(Self { bs1, bs2, unified_beta })
    }

    pub fn unified_beta(&self) -> f64 {
        self.unified_beta
    }
}

fn condition_number(gram: &CMatrix) -> f64 {
    let eig = gram.clone().symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Circularly-symmetric unit-variance complex Gaussian.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `n_R × n_T` matrix of i.i.d. CN(0, 1) gains.
pub fn draw_gains<R: Rng + ?Sized>(n_r: usize, n_t: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n_r, n_t, |_, _| complex_gaussian(rng))
}

/// Draws an i.i.d. Rayleigh channel and its ZF precoder, redrawing
/// ill-conditioned matrices.
pub fn draw_channel<R: Rng + ?Sized>(n_t: usize, n_r: usize, rng: &mut R) -> Result<ChannelRealization> {
    if n_r == 0 || n_t < n_r {
        return Err(Error::Config(format!(
            "zero forcing needs n_T >= n_R >= 1, got n_T = {n_t}, n_R = {n_r}"
        )));
    }
    for attempt in 0..=MAX_REDRAWS {
        match ChannelRealization::from_matrix(draw_gains(n_r, n_t, rng)) {
            Ok(mut c) => {
                if attempt > 0 {
                    log::debug!("channel accepted after {attempt} redraw(s)");
                }
                c.redraws = attempt;
                return Ok(c);
            }
            Err(Error::Channel(msg)) => log::warn!("redrawing channel: {msg}"),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Channel(format!("{MAX_REDRAWS} consecutive ill-conditioned draws")))
}

/// Channel number `index` of the stream identified by `seed`.
pub fn draw_channel_indexed(seed: u64, index: u64, n_t: usize, n_r: usize) -> Result<ChannelRealization> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    draw_channel(n_t, n_r, &mut rng)
}

/// `E[β] = n_T − n_R`, defined only for `n_T > n_R`.
pub fn expected_beta(n_t: usize, n_r: usize) -> Result<f64> {
    if n_t <= n_r {
        return Err(Error::UndefinedExpectation(format!(
            "E[Tr((H H^H)^-1)] diverges for n_T = {n_t} <= n_R = {n_r}"
        )));
    }
    Ok((n_t - n_r) as f64)
}

pub fn unified_beta(b1: f64, b2: f64) -> Result<f64> {
    if !(b1 > 0.0 && b2 > 0.0) {
        return Err(Error::Domain(format!("normalization factors must be positive, got {b1} and {b2}")));
    }
    Ok(0.5 * (b1 + b2))
}

/// Asymptotic law `Pr[n σ_min ≥ x] → e^{−x − x²/2}`.
pub fn min_singular_tail(x: f64) -> f64 {
    (-x - 0.5 * x * x).exp()
}

/// Tail probability `Pr[σ_min ≥ threshold]` for an `n_r × n_r` matrix under
/// the asymptotic law, i.e. the law evaluated at `x = n_r · threshold`.
pub fn min_singular_tail_at(n_r: usize, threshold: f64) -> f64 {
    min_singular_tail(n_r as f64 * threshold)
}

/// Smallest singular value of a complex matrix.
pub fn min_singular_value(m: &CMatrix) -> f64 {
    m.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}
