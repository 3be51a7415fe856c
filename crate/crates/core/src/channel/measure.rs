use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::training::TrainingSet;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Received training frames `Y_m` (`M_R x Q`):
/// `[Y_m]_{:,q} = sqrt(P_t) sum_d W_m^H H_d F_m [S]_{:, q+D-1-d} + W_m^H [N_m]_{:,q}`.
///
/// Noise is drawn per antenna before combining, circularly symmetric with
/// variance `sigma^2` per entry. Frame `m` uses stream `m` of a ChaCha8
/// generator seeded with `noise_seed`, so frames are independent of the
/// order they are produced in.
pub fn synthesize_measurements(
    taps: &[DMatrix<Complex64>],
    training: &TrainingSet,
    noise_seed: u64,
) -> Result<Vec<DMatrix<Complex64>>> {
    let d_len = training.taps;
    if taps.len() != d_len {
        return Err(Error::Dimension {
            axis: 0,
            expected: d_len,
            found: taps.len(),
        });
    }
    let (n_r, n_t) = (training.rx.len(), training.tx.len());
    if let Some(h) = taps.iter().find(|h| h.shape() != (n_r, n_t)) {
        return Err(Error::Shape(format!(
            "tap is {}x{}, arrays need {n_r}x{n_t}",
            h.nrows(),
            h.ncols()
        )));
    }
    let q_len = training.q;
    let amp = training.tx_power_w.sqrt();
    let sigma = (training.noise_var_w / 2.0).sqrt();
    let mut out = Vec::with_capacity(training.m());
    for (m, frame) in training.frames.iter().enumerate() {
        let f = frame.precoder();
        let w_h = frame.combiner().adjoint();
        let g: Vec<DMatrix<Complex64>> = taps.iter().map(|h| &w_h * h * &f).collect();
        let mut y = DMatrix::zeros(w_h.nrows(), q_len);
        for q in 0..q_len {
            for (d, gd) in g.iter().enumerate() {
                let s = training.pilot.column(q + d_len - 1 - d);
                if s.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                    continue;
                }
                let mut col = y.column_mut(q);
                col += gd * s * Complex64::new(amp, 0.0);
            }
        }
        if sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
            rng.set_stream(m as u64);
            let noise = DMatrix::from_fn(n_r, q_len, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re * sigma, im * sigma)
            });
            y += &w_h * noise;
        }
        out.push(y);
    }
    Ok(out)
}

/// Output of [`whiten`].
#[derive(Debug, Clone)]
pub struct Whitened {
    pub y: DMatrix<Complex64>,
    pub w: DMatrix<Complex64>,
    /// Lower Cholesky factor, `L L^H = W^H W`.
    pub l: DMatrix<Complex64>,
}

/// Whitens combined noise: `Y' = L^{-1} Y`, `W' = W L^{-H}`.
pub fn whiten(y: &DMatrix<Complex64>, w: &DMatrix<Complex64>) -> Result<Whitened> {
    let gram = w.adjoint() * w;
    let l = gram
        .cholesky()
        .ok_or_else(|| Error::Decomposition("combiner does not have full column rank".into()))?
        .unpack();
    // nalgebra accepts an exactly singular Gram as long as no pivot goes negative
    let pivot_max = l.diagonal().iter().map(|z| z.re).fold(0.0, f64::max);
    let floor = l.nrows() as f64 * f64::EPSILON.sqrt() * pivot_max;
    if l.diagonal().iter().any(|z| z.re <= floor) {
        return Err(Error::Decomposition("combiner does not have full column rank".into()));
    }
    let solve = |b: &DMatrix<Complex64>| {
        l.solve_lower_triangular(b)
            .ok_or_else(|| Error::Decomposition("singular Cholesky factor".into()))
    };
    let y_w = solve(y)?;
    let w_w = solve(&w.adjoint())?.adjoint();
    Ok(Whitened { y: y_w, w: w_w, l })
}

/// The measurement operator in factor form: whitened combiners `W'_m` and
/// transmitted blocks `F_m S`, plus the Cholesky factors needed to whiten
/// future observations.
///
/// The dense tensor has shape `(M M_R Q) x N_R^x x N_R^y x N_T^x x N_T^y x D`
/// with `Phi[m M_R Q + r Q + q, i1, i2, i3, i4, d] =
/// conj(W'_m[i1 N_R^y + i2, r]) (F_m S)[i3 N_T^y + i4, q + D - 1 - d]`.
#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    combiners: Vec<DMatrix<Complex64>>,
    factors: Vec<DMatrix<Complex64>>,
    transmit: Vec<DMatrix<Complex64>>,
    shape: Vec<usize>,
    m_r: usize,
    q: usize,
    taps: usize,
}

impl MeasurementOperator {
    pub fn new(training: &TrainingSet) -> Result<Self> {
        let mut combiners = Vec::with_capacity(training.m());
        let mut factors = Vec::with_capacity(training.m());
        let mut transmit = Vec::with_capacity(training.m());
        for frame in &training.frames {
            let w = frame.combiner();
            let wh = whiten(&DMatrix::zeros(w.ncols(), 0), &w)?;
            combiners.push(wh.w);
            factors.push(wh.l);
            transmit.push(frame.precoder() * &training.pilot);
        }
        let (rx, tx) = (training.rx, training.tx);
        let m_r = training.m_r();
        let rows = training.m() * m_r * training.q;
        Ok(Self {
            combiners,
            factors,
            transmit,
            shape: vec![rows, rx.nx, rx.ny, tx.nx, tx.ny, training.taps],
            m_r,
            q: training.q,
            taps: training.taps,
        })
    }

    /// Dense tensor shape.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn frames(&self) -> usize {
        self.combiners.len()
    }

    /// Whitened combiner `W'_m`.
    pub fn combiner(&self, m: usize) -> &DMatrix<Complex64> {
        &self.combiners[m]
    }

    /// One entry of the dense tensor; `ix = [i1, i2, i3, i4, d]`.
    pub fn entry(&self, row: usize, ix: &[usize; 5]) -> Complex64 {
        let (m, rem) = (row / (self.m_r * self.q), row % (self.m_r * self.q));
        let (r, q) = (rem / self.q, rem % self.q);
        let rx_el = ix[0] * self.shape[2] + ix[1];
        let tx_el = ix[2] * self.shape[4] + ix[3];
        self.combiners[m][(rx_el, r)].conj() * self.transmit[m][(tx_el, q + self.taps - 1 - ix[4])]
    }

    /// Number of dense entries as `u128` (the full-scale tensor overflows
    /// nothing but memory).
    pub fn dense_len(&self) -> u128 {
        self.shape.iter().map(|&n| n as u128).product()
    }

    /// Materializes the dense tensor, refusing beyond `cap` entries.
    pub fn to_tensor(&self, cap: usize) -> Result<Tensor> {
        let needed = self.dense_len();
        if needed > cap as u128 {
            return Err(Error::Resource {
                needed,
                cap: cap as u128,
            });
        }
        let n_r = self.shape[1] * self.shape[2];
        let n_t = self.shape[3] * self.shape[4];
        let d_len = self.taps;
        let mut data = Vec::with_capacity(needed as usize);
        for (w, fs) in self.combiners.iter().zip(&self.transmit) {
            for r in 0..self.m_r {
                for q in 0..self.q {
                    for rx_el in 0..n_r {
                        let cw = w[(rx_el, r)].conj();
                        for tx_el in 0..n_t {
                            for d in 0..d_len {
                                data.push(cw * fs[(tx_el, q + d_len - 1 - d)]);
                            }
                        }
                    }
                }
            }
        }
        Tensor::new(self.shape.clone(), data)
    }

    /// Whitens each frame and stacks `[O]_{m M_R Q + r Q + q} = Y'_m[r, q]`.
    pub fn observation(&self, received: &[DMatrix<Complex64>]) -> Result<DMatrix<Complex64>> {
        if received.len() != self.frames() {
            return Err(Error::Dimension {
                axis: 0,
                expected: self.frames(),
                found: received.len(),
            });
        }
        let mut o = DMatrix::zeros(self.shape[0], 1);
        for (m, (y, l)) in received.iter().zip(&self.factors).enumerate() {
            if y.shape() != (self.m_r, self.q) {
                return Err(Error::Shape(format!(
                    "frame {m} is {}x{}, expected {}x{}",
                    y.nrows(),
                    y.ncols(),
                    self.m_r,
                    self.q
                )));
            }
            let yw = l
                .solve_lower_triangular(y)
                .ok_or_else(|| Error::Decomposition("singular Cholesky factor".into()))?;
            let base = m * self.m_r * self.q;
            for r in 0..self.m_r {
                for q in 0..self.q {
                    o[(base + r * self.q + q, 0)] = yw[(r, q)];
                }
            }
        }
        Ok(o)
    }
}

/// Observation vector plus the operator that produced it.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub observation: DMatrix<Complex64>,
    pub operator: MeasurementOperator,
}

impl MeasurementSet {
    pub fn shape(&self) -> &[usize] {
        self.operator.shape()
    }
}

/// Whitens the received frames and builds the measurement operator.
pub fn build_measurement_tensor(training: &TrainingSet, received: &[DMatrix<Complex64>]) -> Result<MeasurementSet> {
    let operator = MeasurementOperator::new(training)?;
    let observation = operator.observation(received)?;
    Ok(MeasurementSet { observation, operator })
}
