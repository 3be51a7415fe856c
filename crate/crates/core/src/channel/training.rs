use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::array::{partial_steering, ArrayGeometry, Mount};
use crate::error::{Error, Result};

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Training-side knobs shared by every frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingParams {
    /// RF chains at the receiver (access point).
    pub m_r: usize,
    /// RF chains at the transmitter (user device).
    #[serde(default = "one")]
    pub m_t: usize,
    /// Pilot symbols after the leading zero padding.
    pub pilot_ones: usize,
    /// Trailing zero padding.
    #[serde(default)]
    pub pilot_tail: usize,
    /// Delay taps `D`; also the leading zero padding.
    pub taps: usize,
    pub sampling_time_s: f64,
    pub tx_power_dbm: f64,
    /// `None` means noiseless.
    #[serde(default)]
    pub noise_dbm: Option<f64>,
    /// Keep only this many evenly spaced frames of the full DFT sweep.
    #[serde(default)]
    pub frames: Option<usize>,
}

fn one() -> usize {
    1
}

impl TrainingParams {
    /// Symbols per frame, `Q`.
    pub fn q(&self) -> usize {
        self.pilot_ones + self.pilot_tail
    }

    pub fn tx_power_w(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    pub fn noise_var_w(&self) -> f64 {
        self.noise_dbm.map_or(0.0, dbm_to_watts)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.m_r == 0 || self.m_t == 0 {
            return bad("RF chain counts must be positive");
        }
        if self.pilot_ones == 0 {
            return bad("pilot needs at least one symbol");
        }
        if self.taps == 0 {
            return bad("tap count must be positive");
        }
        if !(self.sampling_time_s > 0.0 && self.sampling_time_s.is_finite()) {
            return bad("sampling time must be positive");
        }
        if !self.tx_power_dbm.is_finite() || self.noise_dbm.is_some_and(|n| !n.is_finite()) {
            return bad("powers must be finite");
        }
        if self.frames == Some(0) {
            return bad("frame count must be positive");
        }
        Ok(())
    }
}

/// Analog and digital stages of one training frame.
#[derive(Debug, Clone)]
pub struct Frame {
    /// `N_T x M_T`, unit-modulus entries.
    pub f_rf: DMatrix<Complex64>,
    pub f_bb: DMatrix<Complex64>,
    /// `N_R x M_R`, unit-modulus entries.
    pub w_rf: DMatrix<Complex64>,
    pub w_bb: DMatrix<Complex64>,
}

impl Frame {
    pub fn precoder(&self) -> DMatrix<Complex64> {
        &self.f_rf * &self.f_bb
    }

    pub fn combiner(&self) -> DMatrix<Complex64> {
        &self.w_rf * &self.w_bb
    }
}

/// Every frame shares one pilot matrix.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub frames: Vec<Frame>,
    /// `M_T x (D + Q)`: `D` zero columns, then the pilot symbols, then the tail.
    pub pilot: DMatrix<Complex64>,
    pub q: usize,
    pub taps: usize,
    pub sampling_time_s: f64,
    pub tx_power_w: f64,
    pub noise_var_w: f64,
}

impl TrainingSet {
    pub fn m(&self) -> usize {
        self.frames.len()
    }

    pub fn m_r(&self) -> usize {
        self.frames[0].w_bb.ncols()
    }

    pub fn m_t(&self) -> usize {
        self.pilot.nrows()
    }
}

/// Unit-modulus DFT-like codebook of a planar array: column `p * ny + s` is
/// `a^x(2p/nx) ⊗ a^y(2s/ny)`, i.e. the columns of `DFT_nx ⊗ DFT_ny`.
pub fn dft_codebook(array: &ArrayGeometry) -> DMatrix<Complex64> {
    let n = array.len();
    let mut m = DMatrix::zeros(n, n);
    for p in 0..array.nx {
        let ax = partial_steering(array.nx, 2.0 * p as f64 / array.nx as f64);
        for s in 0..array.ny {
            let ay = partial_steering(array.ny, 2.0 * s as f64 / array.ny as f64);
            let col = p * array.ny + s;
            for (a, va) in ax.iter().enumerate() {
                for (b, vb) in ay.iter().enumerate() {
                    m[(a * array.ny + b, col)] = va * vb;
                }
            }
        }
    }
    m
}

/// Sylvester Hadamard matrix of order `n` (a power of two).
fn hadamard(n: usize) -> DMatrix<f64> {
    let mut h = DMatrix::from_element(1, 1, 1.0);
    while h.nrows() < n {
        let k = h.nrows();
        let mut next = DMatrix::zeros(2 * k, 2 * k);
        next.view_mut((0, 0), (k, k)).copy_from(&h);
        next.view_mut((0, k), (k, k)).copy_from(&h);
        next.view_mut((k, 0), (k, k)).copy_from(&h);
        next.view_mut((k, k), (k, k)).copy_from(&(-&h));
        h = next;
    }
    h
}

/// Pilot matrix with `taps` leading and `tail` trailing zero columns.
/// The symbol block is the first `M_T` rows of a Sylvester Hadamard matrix
/// whose order is `ones` rounded up to a power of two, scaled by
/// `1/sqrt(M_T)`; with one RF chain that is all ones.
pub fn build_pilot(m_t: usize, ones: usize, tail: usize, taps: usize) -> DMatrix<Complex64> {
    let h = hadamard(ones.next_power_of_two().max(m_t.next_power_of_two()));
    let scale = 1.0 / (m_t as f64).sqrt();
    let mut s = DMatrix::zeros(m_t, taps + ones + tail);
    for q in 0..ones {
        for r in 0..m_t {
            s[(r, taps + q)] = Complex64::new(h[(r, q)] * scale, 0.0);
        }
    }
    s
}

/// DFT training: transmit precoders are `M_T`-column blocks of the device's
/// DFT codebook, receive combiners are `M_R`-column blocks of the access
/// point's codebook, and every precoder/combiner pair gets one frame, frame
/// index `precoder * n_combiner_blocks + block`. Digital stages are identity.
pub fn build_training_dft(tx: &ArrayGeometry, rx: &ArrayGeometry, params: &TrainingParams) -> Result<TrainingSet> {
    params.validate()?;
    let (m_r, m_t) = (params.m_r, params.m_t);
    if !rx.len().is_multiple_of(m_r) {
        return Err(Error::Config(format!(
            "M_R = {m_r} does not divide the {}-element receive array",
            rx.len()
        )));
    }
    if !tx.len().is_multiple_of(m_t) {
        return Err(Error::Config(format!(
            "M_T = {m_t} does not divide the {}-element transmit array",
            tx.len()
        )));
    }
    let f_book = dft_codebook(tx);
    let w_book = dft_codebook(rx);
    let n_pre = tx.len() / m_t;
    let n_blocks = rx.len() / m_r;
    let full = n_pre * n_blocks;
    let keep: Vec<usize> = match params.frames {
        None => (0..full).collect(),
        Some(m) if m > full => {
            return Err(Error::Config(format!(
                "requested {m} frames but the DFT sweep has only {full}"
            )))
        }
        Some(m) => (0..m).map(|i| i * full / m).collect(),
    };
    let frames = keep
        .into_iter()
        .map(|idx| {
            let (p, b) = (idx / n_blocks, idx % n_blocks);
            Frame {
                f_rf: f_book.columns(p * m_t, m_t).into_owned(),
                f_bb: DMatrix::identity(m_t, m_t),
                w_rf: w_book.columns(b * m_r, m_r).into_owned(),
                w_bb: DMatrix::identity(m_r, m_r),
            }
        })
        .collect();
    Ok(TrainingSet {
        tx: *tx,
        rx: *rx,
        frames,
        pilot: build_pilot(m_t, params.pilot_ones, params.pilot_tail, params.taps),
        q: params.q(),
        taps: params.taps,
        sampling_time_s: params.sampling_time_s,
        tx_power_w: params.tx_power_w(),
        noise_var_w: params.noise_var_w(),
    })
}

/// The full-scale setup: 4x4 device array, 8x8 access point with
/// eight RF chains, single-chain device, 20 dBm, -81 dBm noise, 64 taps at
/// 2 GHz bandwidth, pilot of 64 ones plus 32 trailing zeros.
pub fn full_scale_arrays() -> (ArrayGeometry, ArrayGeometry) {
    (
        ArrayGeometry {
            nx: 4,
            ny: 4,
            mount: Mount::PosZ,
        },
        ArrayGeometry {
            nx: 8,
            ny: 8,
            mount: Mount::PosZ,
        },
    )
}

pub fn full_scale_training() -> TrainingParams {
    TrainingParams {
        m_r: 8,
        m_t: 1,
        pilot_ones: 64,
        pilot_tail: 32,
        taps: 64,
        sampling_time_s: 0.5e-9,
        tx_power_dbm: 20.0,
        noise_dbm: Some(-81.0),
        frames: None,
    }
}
