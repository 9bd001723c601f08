//! Rate-distortion bookkeeping and the desk-scale fine-tuning demonstrator.
//!
//! The compression-ratio-to-tradeoff mapping is a monotone calibration table
//! (identity by default). The learnable codec is a linear autoencoder trained
//! with exact analytic gradients of the mean-squared reconstruction error,
//! checked against central finite differences. Entropy / mutual-information
//! accounting works on empirical joint tables over finite alphabets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RdError {
    #[error("calibration table invalid: {0}")]
    InvalidTable(String),
    #[error("rho {rho} outside calibration domain [{lo}, {hi}]")]
    OutOfDomain { rho: f64, lo: f64, hi: f64 },
    #[error("operating set must be non-empty and strictly increasing")]
    InvalidOperatingSet,
    #[error("dimension mismatch: frame length {frame} vs codec input {input}")]
    FrameDimension { frame: usize, input: usize },
    #[error("codec dimensions invalid: bottleneck {bottleneck} > input {input}")]
    CodecDimension { bottleneck: usize, input: usize },
    #[error("training diverged to a non-finite loss at step {step}")]
    Divergence { step: usize },
    #[error("distribution not normalized: total mass {0}")]
    Unnormalized(f64),
    #[error("distribution has a negative entry {0}")]
    NegativeMass(f64),
}

/// Monotone calibration table mapping compression ratio rho to the
/// rate-distortion tradeoff parameter beta, interpolated piecewise-linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaMap {
    points: Vec<(f64, f64)>,
}

impl BetaMap {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, RdError> {
        if points.len() < 2 {
            return Err(RdError::InvalidTable("need at least two points".into()));
        }
        for w in points.windows(2) {
            if !(w[0].0 < w[1].0 && w[0].1 < w[1].1) {
                return Err(RdError::InvalidTable(format!(
                    "points must be strictly increasing in both coordinates: {:?} then {:?}",
                    w[0], w[1]
                )));
            }
        }
        Ok(BetaMap { points })
    }

    /// Identity mapping over [0, 1].
    pub fn identity() -> Self {
        BetaMap {
            points: vec![(0.0, 0.0), (1.0, 1.0)],
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }
}

pub fn beta_from_rho(map: &BetaMap, rho: f64) -> Result<f64, RdError> {
    let (lo, hi) = map.domain();
    if !(rho >= lo && rho <= hi) {
        return Err(RdError::OutOfDomain { rho, lo, hi });
    }
    for w in map.points().windows(2) {
        let ((r0, b0), (r1, b1)) = (w[0], w[1]);
        if rho <= r1 {
            return Ok(b0 + (b1 - b0) * (rho - r0) / (r1 - r0));
        }
    }
    unreachable!("rho within domain")
}

/// Finite set of admissible tradeoff operating points, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct RdOperatingSet {
    betas: Vec<f64>,
}

impl RdOperatingSet {
    pub fn new(betas: Vec<f64>) -> Result<Self, RdError> {
        if betas.is_empty() || betas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RdError::InvalidOperatingSet);
        }
        Ok(RdOperatingSet { betas })
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }
}

impl Default for RdOperatingSet {
    fn default() -> Self {
        RdOperatingSet {
            betas: vec![0.2, 0.4, 0.6, 0.8, 1.0],
        }
    }
}

/// Indicator-weight control: returns beta when it is a member of the set,
/// otherwise 0.
pub fn control_function(theta: &RdOperatingSet, beta: f64) -> f64 {
    if theta.betas.iter().any(|&b| b == beta) {
        beta
    } else {
        0.0
    }
}

/// Pick the operating point nearest to the mapped tradeoff value of rho_star,
/// breaking ties toward the smaller beta (less rate).
pub fn select_operating_point(
    theta: &RdOperatingSet,
    rho_star: f64,
    map: &BetaMap,
) -> Result<f64, RdError> {
    let target = beta_from_rho(map, rho_star)?;
    let mut best = theta.betas[0];
    for &b in &theta.betas[1..] {
        if (b - target).abs() < (best - target).abs() {
            best = b;
        }
    }
    Ok(best)
}

/// Linear autoencoder: encode with W1 (bottleneck x input), decode with W2
/// (input x bottleneck). Row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCodec {
    pub input_dim: usize,
    pub bottleneck_dim: usize,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl LinearCodec {
    pub fn zeros(input_dim: usize, bottleneck_dim: usize) -> Result<Self, RdError> {
        if bottleneck_dim > input_dim {
            return Err(RdError::CodecDimension {
                bottleneck: bottleneck_dim,
                input: input_dim,
            });
        }
        Ok(LinearCodec {
            input_dim,
            bottleneck_dim,
            w1: vec![0.0; bottleneck_dim * input_dim],
            w2: vec![0.0; input_dim * bottleneck_dim],
        })
    }

    pub fn random(input_dim: usize, bottleneck_dim: usize, seed: u64) -> Result<Self, RdError> {
        let mut codec = Self::zeros(input_dim, bottleneck_dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (input_dim as f64).sqrt();
        for w in codec.w1.iter_mut().chain(codec.w2.iter_mut()) {
            *w = rng.gen_range(-scale..scale);
        }
        Ok(codec)
    }

    /// 1-D identity codec; reconstructs its input exactly.
    pub fn identity_1d() -> Self {
        LinearCodec {
            input_dim: 1,
            bottleneck_dim: 1,
            w1: vec![1.0],
            w2: vec![1.0],
        }
    }

    pub fn encode(&self, frame: &[f64]) -> Vec<f64> {
        let (k, n) = (self.bottleneck_dim, self.input_dim);
        (0..k)
            .map(|r| (0..n).map(|c| self.w1[r * n + c] * frame[c]).sum())
            .collect()
    }

    pub fn decode(&self, latent: &[f64]) -> Vec<f64> {
        let (k, n) = (self.bottleneck_dim, self.input_dim);
        (0..n)
            .map(|r| (0..k).map(|c| self.w2[r * k + c] * latent[c]).sum())
            .collect()
    }

    pub fn reconstruct(&self, frame: &[f64]) -> Vec<f64> {
        self.decode(&self.encode(frame))
    }

    fn check_frames(&self, frames: &[Vec<f64>]) -> Result<(), RdError> {
        for f in frames {
            if f.len() != self.input_dim {
                return Err(RdError::FrameDimension {
                    frame: f.len(),
                    input: self.input_dim,
                });
            }
        }
        Ok(())
    }

    /// Mean squared reconstruction error per element, averaged over frames.
    pub fn mse(&self, frames: &[Vec<f64>]) -> Result<f64, RdError> {
        self.check_frames(frames)?;
        if frames.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for f in frames {
            let r = self.reconstruct(f);
            total += f
                .iter()
                .zip(&r)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        Ok(total / (frames.len() * self.input_dim) as f64)
    }

    /// Analytic gradients of [`Self::mse`] with respect to (W1, W2).
    pub fn mse_gradients(&self, frames: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>), RdError> {
        self.check_frames(frames)?;
        let (k, n) = (self.bottleneck_dim, self.input_dim);
        let mut g1 = vec![0.0; k * n];
        let mut g2 = vec![0.0; n * k];
        if frames.is_empty() {
            return Ok((g1, g2));
        }
        let norm = 2.0 / (frames.len() * n) as f64;
        for f in frames {
            let z = self.encode(f);
            let xhat = self.decode(&z);
            let e: Vec<f64> = xhat.iter().zip(f).map(|(a, b)| a - b).collect();
            // dL/dW2 = norm * e z^T
            for r in 0..n {
                for c in 0..k {
                    g2[r * k + c] += norm * e[r] * z[c];
                }
            }
            // dL/dW1 = norm * W2^T e x^T
            for r in 0..k {
                let w2t_e: f64 = (0..n).map(|i| self.w2[i * k + r] * e[i]).sum();
                for c in 0..n {
                    g1[r * n + c] += norm * w2t_e * f[c];
                }
            }
        }
        Ok((g1, g2))
    }
}

/// Gradient descent on the reconstruction MSE, starting from `codec`. The
/// step size halves whenever a step would increase the loss, so the recorded
/// loss sequence is non-increasing. Returns the updated codec and the loss
/// after each accepted step.
pub fn finetune_codec(
    codec: &LinearCodec,
    frames_ft: &[Vec<f64>],
    steps: usize,
    alpha: f64,
) -> Result<(LinearCodec, Vec<f64>), RdError> {
    let mut current = codec.clone();
    let mut lr = alpha;
    let mut loss = current.mse(frames_ft)?;
    let mut losses = Vec::with_capacity(steps);
    for step in 0..steps {
        if lr == 0.0 {
            losses.push(loss);
            continue;
        }
        let (g1, g2) = current.mse_gradients(frames_ft)?;
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = current.clone();
            for (w, g) in trial.w1.iter_mut().zip(&g1) {
                *w -= lr * g;
            }
            for (w, g) in trial.w2.iter_mut().zip(&g2) {
                *w -= lr * g;
            }
            let trial_loss = trial.mse(frames_ft)?;
            if !trial_loss.is_finite() {
                return Err(RdError::Divergence { step });
            }
            if trial_loss <= loss {
                current = trial;
                loss = trial_loss;
                accepted = true;
                break;
            }
            lr /= 2.0;
        }
        let _ = accepted; // a fully rejected step leaves the codec unchanged
        losses.push(loss);
    }
    Ok((current, losses))
}

/// Worst relative error between the analytic MSE gradient and central finite
/// differences with h = 1e-5.
pub fn gradient_check(codec: &LinearCodec, frames: &[Vec<f64>]) -> Result<f64, RdError> {
    const H: f64 = 1e-5;
    let (g1, g2) = codec.mse_gradients(frames)?;
    let mut worst = 0.0f64;
    let mut check = |analytic: f64, perturb: &dyn Fn(&mut LinearCodec, f64)| -> Result<(), RdError> {
        let mut plus = codec.clone();
        perturb(&mut plus, H);
        let mut minus = codec.clone();
        perturb(&mut minus, -H);
        let fd = (plus.mse(frames)? - minus.mse(frames)?) / (2.0 * H);
        let denom = analytic.abs().max(fd.abs()).max(1e-8);
        worst = worst.max((analytic - fd).abs() / denom);
        Ok(())
    };
    for (idx, &g) in g1.iter().enumerate() {
        check(g, &move |c: &mut LinearCodec, h: f64| c.w1[idx] += h)?;
    }
    for (idx, &g) in g2.iter().enumerate() {
        check(g, &move |c: &mut LinearCodec, h: f64| c.w2[idx] += h)?;
    }
    Ok(worst)
}

/// Synthetic correlated frame sequence: a scene-specific random loading
/// matrix applied to an AR(1) latent process, plus small observation noise.
pub fn correlated_frames(
    dim: usize,
    latent_dim: usize,
    count: usize,
    correlation: f64,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loading: Vec<f64> = (0..dim * latent_dim)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let mut z: Vec<f64> = (0..latent_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let innovation = (1.0 - correlation * correlation).sqrt();
    let mut frames = Vec::with_capacity(count);
    for _ in 0..count {
        for zi in z.iter_mut() {
            let eps: f64 = rng.gen_range(-1.0..1.0);
            *zi = correlation * *zi + innovation * eps;
        }
        let frame: Vec<f64> = (0..dim)
            .map(|r| {
                let signal: f64 = (0..latent_dim).map(|c| loading[r * latent_dim + c] * z[c]).sum();
                signal + 0.05 * rng.gen_range(-1.0..1.0)
            })
            .collect();
        frames.push(frame);
    }
    frames
}

/// Empirical joint probability table Pr(d_f, d_p) over finite alphabets;
/// rows index the future symbol, columns the past symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalJoint {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
}

impl EmpiricalJoint {
    pub fn new(rows: usize, cols: usize, p: Vec<f64>) -> Result<Self, RdError> {
        assert_eq!(p.len(), rows * cols, "table shape mismatch");
        if let Some(&bad) = p.iter().find(|&&v| v < 0.0) {
            return Err(RdError::NegativeMass(bad));
        }
        let mass: f64 = p.iter().sum();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(RdError::Unnormalized(mass));
        }
        Ok(EmpiricalJoint { rows, cols, p })
    }

    /// Joint counts of consecutive symbol pairs (future, past).
    pub fn from_symbol_pairs(alphabet: usize, pairs: &[(usize, usize)]) -> Result<Self, RdError> {
        let mut counts = vec![0.0; alphabet * alphabet];
        for &(f, p) in pairs {
            counts[f * alphabet + p] += 1.0;
        }
        let total: f64 = counts.iter().sum();
        for c in counts.iter_mut() {
            *c /= total;
        }
        // renormalize the largest cell so the mass is exactly 1
        let sum: f64 = counts.iter().sum();
        let imax = (0..counts.len())
            .max_by(|&a, &b| counts[a].partial_cmp(&counts[b]).unwrap())
            .unwrap();
        counts[imax] += 1.0 - sum;
        Self::new(alphabet, alphabet, counts)
    }

    pub fn get(&self, f: usize, p: usize) -> f64 {
        self.p[f * self.cols + p]
    }

    /// Marginal of the future symbol.
    pub fn marginal_future(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|f| (0..self.cols).map(|p| self.get(f, p)).sum())
            .collect()
    }

    /// Marginal of the past symbol.
    pub fn marginal_past(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|p| (0..self.rows).map(|f| self.get(f, p)).sum())
            .collect()
    }
}

fn xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits; 0 log 0 := 0.
pub fn entropy(dist: &[f64]) -> Result<f64, RdError> {
    if let Some(&bad) = dist.iter().find(|&&v| v < 0.0) {
        return Err(RdError::NegativeMass(bad));
    }
    let mass: f64 = dist.iter().sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(RdError::Unnormalized(mass));
    }
    Ok(-dist.iter().map(|&p| xlog2x(p)).sum::<f64>())
}

/// Mutual information I(D_f; D_p) in bits, from the joint table.
pub fn mutual_information(joint: &EmpiricalJoint) -> f64 {
    let pf = joint.marginal_future();
    let pp = joint.marginal_past();
    let mut i = 0.0;
    for f in 0..joint.rows {
        for p in 0..joint.cols {
            let pj = joint.get(f, p);
            if pj > 0.0 {
                i += pj * (pj / (pf[f] * pp[p])).log2();
            }
        }
    }
    i
}

/// Conditional entropy H(D_f | D_p) in bits, computed directly from the
/// joint; must agree with H(D_f) - I(D_f; D_p).
pub fn conditional_entropy(joint: &EmpiricalJoint) -> f64 {
    let pp = joint.marginal_past();
    let mut h = 0.0;
    for f in 0..joint.rows {
        for p in 0..joint.cols {
            let pj = joint.get(f, p);
            if pj > 0.0 {
                h -= pj * (pj / pp[p]).log2();
            }
        }
    }
    h
}
