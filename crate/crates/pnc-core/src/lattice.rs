//! Nested lattice codes at desk scale and the compute-and-forward decoder:
//! mod-lattice arithmetic, MMSE scaling, equal-gain sum decoding, integer-
//! combination decoding over real and complex fading channels, rate
//! formulas, and bounded coefficient search.
//!
//! # Construction
//!
//! The coarse lattice is `beta * q * Z^n`. Messages map onto codewords of a
//! linear code with generator `G` (n-by-k over F_q), centered by
//! `s = (q-1)/2` and scaled by `beta = sqrt(12 P / (q^2 - 1))` so the
//! uniform codebook ensemble has average power exactly `P`:
//!
//! ```text
//! phi(w) = beta * (G w - s * 1)
//! ```
//!
//! Integer combinations of centered codewords accumulate multiples of
//! `beta * s * 1`, so the set actually closed under the channel's integer
//! arithmetic is the code *augmented by the all-ones vector*: the fine
//! lattice here is `beta * ([G | 1]-code + q Z^n)`. Construction requires
//! `rank([G | 1]) = k + 1` over F_q, which keeps `phi_inv` unambiguous: a
//! fine-lattice point determines the message part `u` uniquely, with the
//! constant-shift coordinate discarded. Under that convention the linearity
//! identity
//!
//! ```text
//! phi_inv([ sum_l a_l phi(w_l) ] mod coarse) = (+)_l a_l w_l
//! ```
//!
//! holds exactly for every integer coefficient vector. `q` must be an odd
//! prime so the centering shift is itself an integer lattice direction.

use std::fmt;

use num_complex::Complex64;

use crate::galois::{self, FieldError, FieldMatrix, FieldVector};
use crate::netcod::Packet;

/// Codebook size cap: exhaustive decoding must stay desk-scale.
pub const MAX_CODEBOOK: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub enum LatticeError {
    Field(FieldError),
    /// The modulus must be an odd prime for the centered embedding.
    BadModulus(u32),
    /// q^k exceeds the exhaustive-decoding cap.
    CodebookTooLarge { size: u64 },
    /// The all-ones direction lies in the column span of G, so messages
    /// cannot be separated from the centering shift.
    AmbiguousCode,
    /// A generator row is all zero; that symbol would carry no information
    /// and break the power normalization.
    ZeroGeneratorRow(usize),
    /// A point is not within tolerance of any fine-lattice point.
    NotCodeword,
    /// Complex encoding needs an even message length.
    OddMessageLength(usize),
    /// Coefficient vector is all zero.
    ZeroCoefficients,
    /// Power and noise variance must be positive.
    NonPositiveParameter(&'static str),
    DimensionMismatch { expected: usize, got: usize },
}

impl fmt::Display for LatticeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeError::Field(e) => write!(f, "{}", e),
            LatticeError::BadModulus(q) => write!(f, "modulus {} must be an odd prime", q),
            LatticeError::CodebookTooLarge { size } => {
                write!(f, "codebook size {} exceeds {}", size, MAX_CODEBOOK)
            }
            LatticeError::AmbiguousCode => {
                write!(f, "all-ones vector lies in the generator span")
            }
            LatticeError::ZeroGeneratorRow(i) => write!(f, "generator row {} is zero", i),
            LatticeError::NotCodeword => write!(f, "point is not on the fine lattice"),
            LatticeError::OddMessageLength(k) => {
                write!(f, "message length {} must be even for complex encoding", k)
            }
            LatticeError::ZeroCoefficients => write!(f, "coefficient vector is all zero"),
            LatticeError::NonPositiveParameter(name) => {
                write!(f, "{} must be positive", name)
            }
            LatticeError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {}, got {}", expected, got)
            }
        }
    }
}

impl std::error::Error for LatticeError {}

impl From<FieldError> for LatticeError {
    fn from(e: FieldError) -> Self {
        LatticeError::Field(e)
    }
}

/// A point with real coordinates, produced by the encoding map or the
/// lattice decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    coords: Vec<f64>,
}

impl LatticePoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// A nested lattice code: coarse lattice `beta q Z^n`, fine lattice built
/// from the `[G | 1]`-augmented linear code, codebook centered for average
/// power `P`.
#[derive(Debug, Clone)]
pub struct NestedLatticeCode {
    q: u32,
    generator: FieldMatrix,
    augmented: FieldMatrix,
    beta: f64,
    power: f64,
}

impl NestedLatticeCode {
    pub fn new(generator: FieldMatrix, power: f64) -> Result<Self, LatticeError> {
        let q = generator.modulus() as u32;
        if q < 3 {
            return Err(LatticeError::BadModulus(q));
        }
        if power <= 0.0 {
            return Err(LatticeError::NonPositiveParameter("power"));
        }
        let k = generator.cols() as u32;
        let size = (q as u64).checked_pow(k).unwrap_or(u64::MAX);
        if size > MAX_CODEBOOK {
            return Err(LatticeError::CodebookTooLarge { size });
        }
        let n = generator.rows();
        for i in 0..n {
            if (0..generator.cols()).all(|j| generator.get(i, j).is_zero()) {
                return Err(LatticeError::ZeroGeneratorRow(i));
            }
        }
        // Augment with the all-ones column; full rank keeps the centering
        // shift separable from the message.
        let mut entries = Vec::with_capacity(n * (generator.cols() + 1));
        for i in 0..n {
            for j in 0..generator.cols() {
                entries.push(generator.get(i, j).value() as u32);
            }
            entries.push(1);
        }
        let augmented = FieldMatrix::new(n, generator.cols() + 1, &entries, q)?;
        if augmented.rank() != generator.cols() + 1 {
            return Err(LatticeError::AmbiguousCode);
        }
        let beta = (12.0 * power / ((q * q - 1) as f64)).sqrt();
        Ok(Self {
            q,
            generator,
            augmented,
            beta,
            power,
        })
    }

    /// Draws random generators until the `[G | 1]` rank condition holds.
    pub fn random<R: rand::Rng + ?Sized>(
        q: u32,
        n: usize,
        k: usize,
        power: f64,
        rng: &mut R,
    ) -> Result<Self, LatticeError> {
        loop {
            let g = galois::random_matrix(n, k, q, rng)?;
            match Self::new(g, power) {
                Ok(code) => return Ok(code),
                Err(LatticeError::AmbiguousCode) | Err(LatticeError::ZeroGeneratorRow(_)) => {
                    continue
                }
                Err(e) => return Err(e),
            }
        }
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn blocklength(&self) -> usize {
        self.generator.rows()
    }

    pub fn message_len(&self) -> usize {
        self.generator.cols()
    }

    pub fn generator(&self) -> &FieldMatrix {
        &self.generator
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Nominal code rate in bits per channel use: `k log2(q) / n`.
    pub fn rate(&self) -> f64 {
        self.message_len() as f64 * (self.q as f64).log2() / self.blocklength() as f64
    }

    /// The centering shift `(q - 1) / 2`.
    pub fn center_shift(&self) -> f64 {
        (self.q as f64 - 1.0) / 2.0
    }

    /// Coarse-lattice modulus `beta * q`.
    pub fn coarse_modulus(&self) -> f64 {
        self.beta * self.q as f64
    }

    fn augmented_size(&self) -> u64 {
        (self.q as u64).pow(self.message_len() as u32 + 1)
    }

    /// The augmented codeword with lexicographic index `idx`: message part
    /// first (most significant), shift coordinate last.
    fn augmented_symbols(&self, idx: u64, out: &mut Vec<u16>) {
        let q = self.q as u64;
        let width = self.message_len() + 1;
        let mut digits = vec![0u32; width];
        let mut rem = idx;
        for j in (0..width).rev() {
            digits[j] = (rem % q) as u32;
            rem /= q;
        }
        out.clear();
        let n = self.blocklength();
        for i in 0..n {
            let mut acc = 0u64;
            for (j, &d) in digits.iter().enumerate() {
                acc += self.augmented.get(i, j).value() as u64 * d as u64;
            }
            out.push((acc % q) as u16);
        }
    }
}

/// Maps a message onto its centered codeword `beta * (G w - s * 1)`.
pub fn phi_map(code: &NestedLatticeCode, w: &Packet) -> Result<LatticePoint, LatticeError> {
    let symbols = code.generator.matvec(w.payload())?;
    let s = code.center_shift();
    Ok(LatticePoint::new(
        symbols
            .values()
            .iter()
            .map(|&c| code.beta * (c as f64 - s))
            .collect(),
    ))
}

/// Inverts the encoding map on fine-lattice points, discarding the
/// constant-shift coordinate. Coordinates must land within 1e-9 of lattice
/// integers after unscaling; anything else is rejected.
pub fn phi_inv(code: &NestedLatticeCode, x: &LatticePoint) -> Result<Packet, LatticeError> {
    let n = code.blocklength();
    if x.coords().len() != n {
        return Err(LatticeError::DimensionMismatch {
            expected: n,
            got: x.coords().len(),
        });
    }
    let q = code.q;
    let s = code.center_shift();
    let mut residues = Vec::with_capacity(n);
    for &v in x.coords() {
        let unscaled = v / code.beta + s;
        let rounded = unscaled.round();
        if (unscaled - rounded).abs() > 1e-9 {
            return Err(LatticeError::NotCodeword);
        }
        residues.push((rounded as i64).rem_euclid(q as i64) as u32);
    }
    let rhs = FieldMatrix::new(n, 1, &residues, q)?;
    let solution = galois::solve(&code.augmented, &rhs).map_err(|e| match e {
        FieldError::Inconsistent => LatticeError::NotCodeword,
        other => LatticeError::Field(other),
    })?;
    let k = code.message_len();
    let msg: Vec<u32> = (0..k).map(|i| solution.get(i, 0).value() as u32).collect();
    Ok(Packet::new(FieldVector::new(&msg, q)?))
}

/// Reduces modulo the coarse lattice: componentwise
/// `x - beta q * round(x / (beta q))`, landing in `[-beta q / 2, beta q / 2)`.
pub fn mod_coarse(code: &NestedLatticeCode, x: &[f64]) -> Vec<f64> {
    let m = code.coarse_modulus();
    x.iter().map(|&v| v - m * (v / m + 0.5).floor()).collect()
}

/// Centered residue of `v` modulo `m`, in `[-m/2, m/2)`.
fn centered_mod(v: f64, m: f64) -> f64 {
    v - m * (v / m + 0.5).floor()
}

/// Quantizes onto the fine lattice by exhaustive search over the augmented
/// codebook, one coset at a time: within a coset the nearest translate is
/// the componentwise centered residue. Ties break to the lexicographically
/// smallest augmented index, message part major.
pub fn quantize_fine(code: &NestedLatticeCode, x: &[f64]) -> Result<LatticePoint, LatticeError> {
    let n = code.blocklength();
    if x.len() != n {
        return Err(LatticeError::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let m = code.coarse_modulus();
    let mut symbols = Vec::with_capacity(n);
    let mut best_dist = f64::INFINITY;
    let mut best_point: Option<Vec<f64>> = None;
    for idx in 0..code.augmented_size() {
        code.augmented_symbols(idx, &mut symbols);
        let mut dist = 0.0;
        for (i, &c) in symbols.iter().enumerate() {
            let r = centered_mod(x[i] - code.beta * c as f64, m);
            dist += r * r;
        }
        if dist < best_dist {
            best_dist = dist;
            // Nearest translate of this coset to x, coordinatewise.
            let point = symbols
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let base = code.beta * c as f64;
                    base + m * ((x[i] - base) / m).round()
                })
                .collect();
            best_point = Some(point);
        }
    }
    Ok(LatticePoint::new(best_point.expect("nonempty codebook")))
}

/// The lattice decoding rule: scale the observation by `alpha`, quantize
/// onto the fine lattice, and reduce modulo the coarse lattice.
pub fn lattice_decode_point(
    code: &NestedLatticeCode,
    y: &[f64],
    alpha: f64,
) -> Result<LatticePoint, LatticeError> {
    let scaled: Vec<f64> = y.iter().map(|&v| alpha * v).collect();
    let fine = quantize_fine(code, &scaled)?;
    Ok(LatticePoint::new(mod_coarse(code, fine.coords())))
}

/// Decodes the finite-field combination carried by `y`: lattice-decode,
/// then invert the message map. Works without knowing the integer
/// coefficients, at the cost of quantizing against the shift-augmented
/// lattice.
pub fn decode_combination(
    code: &NestedLatticeCode,
    y: &[f64],
    alpha: f64,
) -> Result<Packet, LatticeError> {
    let point = lattice_decode_point(code, y, alpha)?;
    phi_inv(code, &point)
}

/// Decodes the combination for *known* integer coefficients. The receiver
/// chose `coeffs`, so the accumulated centering offset
/// `(sum_l a_l) * beta * s * 1` is deterministic and is removed before
/// quantization, exactly as dither removal would do. Quantization then runs
/// over the bare code cosets, which have no shift neighbors and therefore a
/// larger minimum distance than the augmented lattice. Ties break to the
/// lexicographically smallest message.
pub fn decode_integer_combination(
    code: &NestedLatticeCode,
    y: &[f64],
    alpha: f64,
    coeffs: &[i64],
) -> Result<Packet, LatticeError> {
    let n = code.blocklength();
    if y.len() != n {
        return Err(LatticeError::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if coeffs.iter().all(|&a| a == 0) {
        return Err(LatticeError::ZeroCoefficients);
    }
    let offset = coeffs.iter().sum::<i64>() as f64 * code.beta * code.center_shift();
    let target: Vec<f64> = y.iter().map(|&v| alpha * v + offset).collect();
    let m = code.coarse_modulus();
    let q = code.q as u64;
    let k = code.message_len();
    let mut best = (f64::INFINITY, 0u64);
    let mut msg = vec![0u32; k];
    let mut symbols = vec![0u16; n];
    for idx in 0..q.pow(k as u32) {
        let mut rem = idx;
        for j in (0..k).rev() {
            msg[j] = (rem % q) as u32;
            rem /= q;
        }
        for (i, sym) in symbols.iter_mut().enumerate() {
            let mut acc = 0u64;
            for (j, &d) in msg.iter().enumerate() {
                acc += code.generator.get(i, j).value() as u64 * d as u64;
            }
            *sym = (acc % q) as u16;
        }
        let mut dist = 0.0;
        for (i, &c) in symbols.iter().enumerate() {
            let r = centered_mod(target[i] - code.beta * c as f64, m);
            dist += r * r;
        }
        if dist < best.0 {
            best = (dist, idx);
        }
    }
    let mut rem = best.1;
    for j in (0..k).rev() {
        msg[j] = (rem % q) as u32;
        rem /= q;
    }
    Ok(Packet::new(FieldVector::new(&msg, code.q)?))
}

/// The finite-field combination `sum_l (a_l mod q) w_l` that integer
/// coefficients induce on messages.
pub fn integer_combination(
    code: &NestedLatticeCode,
    coeffs: &[i64],
    messages: &[Packet],
) -> Result<Packet, LatticeError> {
    if coeffs.len() != messages.len() {
        return Err(LatticeError::DimensionMismatch {
            expected: coeffs.len(),
            got: messages.len(),
        });
    }
    let q = code.q;
    let mut acc = FieldVector::zero(code.message_len(), q)?;
    for (a, w) in coeffs.iter().zip(messages) {
        let scalar = galois::FieldElement::new(a.rem_euclid(q as i64) as u32, q)?;
        acc = acc.add(&w.payload().scale(&scalar)?)?;
    }
    Ok(Packet::new(acc))
}

/// MMSE scaling for the equal-gain two-user sum: `2P / (2P + sigma^2)`.
pub fn alpha_mmse_equal(power: f64, sigma2: f64) -> f64 {
    2.0 * power / (2.0 * power + sigma2)
}

/// MMSE scaling against arbitrary gains and integer coefficients:
/// `P <h, a> / (sigma^2 + P ||h||^2)`.
pub fn alpha_mmse_cf(h: &[f64], a: &[i64], power: f64, sigma2: f64) -> f64 {
    let dot: f64 = h.iter().zip(a).map(|(&hv, &av)| hv * av as f64).sum();
    let h2: f64 = h.iter().map(|&v| v * v).sum();
    power * dot / (sigma2 + power * h2)
}

/// A real compute-and-forward problem instance.
#[derive(Debug, Clone)]
pub struct CfProblem {
    pub gains: Vec<f64>,
    pub coeffs: Vec<i64>,
    pub power: f64,
    pub sigma2: f64,
    pub alpha: f64,
}

/// The effective noise variance seen by the lattice quantizer; always
/// nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveNoise {
    value: f64,
}

impl EffectiveNoise {
    pub fn value(&self) -> f64 {
        self.value
    }
}

/// Effective noise variance after alpha-scaling:
/// `alpha^2 sigma^2 + P sum_l (alpha h_l - a_l)^2`.
pub fn n_effec(prob: &CfProblem) -> EffectiveNoise {
    let mismatch: f64 = prob
        .gains
        .iter()
        .zip(&prob.coeffs)
        .map(|(&h, &a)| {
            let d = prob.alpha * h - a as f64;
            d * d
        })
        .sum();
    EffectiveNoise {
        value: prob.alpha * prob.alpha * prob.sigma2 + prob.power * mismatch,
    }
}

/// Computation rate for explicit `alpha`, without the nonnegativity clamp:
/// `0.5 log2(P / N_effec)`.
pub fn comp_rate_real_at(h: &[f64], a: &[i64], power: f64, sigma2: f64, alpha: f64) -> f64 {
    let prob = CfProblem {
        gains: h.to_vec(),
        coeffs: a.to_vec(),
        power,
        sigma2,
        alpha,
    };
    0.5 * (power / n_effec(&prob).value()).log2()
}

fn check_cf_args(h_len: usize, a: &[i64], power: f64, sigma2: f64) -> Result<(), LatticeError> {
    if h_len != a.len() {
        return Err(LatticeError::DimensionMismatch {
            expected: h_len,
            got: a.len(),
        });
    }
    if a.iter().all(|&v| v == 0) {
        return Err(LatticeError::ZeroCoefficients);
    }
    if power <= 0.0 {
        return Err(LatticeError::NonPositiveParameter("power"));
    }
    if sigma2 <= 0.0 {
        return Err(LatticeError::NonPositiveParameter("sigma2"));
    }
    Ok(())
}

/// Computation rate with the MMSE-optimal alpha substituted, clamped at 0:
/// `max(0, 0.5 log2(1 / (||a||^2 - alpha_mmse <h, a>)))`.
pub fn comp_rate_real(h: &[f64], a: &[i64], power: f64, sigma2: f64) -> Result<f64, LatticeError> {
    Ok(comp_rate_real_unclamped(h, a, power, sigma2)?.max(0.0))
}

fn comp_rate_real_unclamped(
    h: &[f64],
    a: &[i64],
    power: f64,
    sigma2: f64,
) -> Result<f64, LatticeError> {
    check_cf_args(h.len(), a, power, sigma2)?;
    let alpha = alpha_mmse_cf(h, a, power, sigma2);
    let dot: f64 = h.iter().zip(a).map(|(&hv, &av)| hv * av as f64).sum();
    let a2: f64 = a.iter().map(|&v| (v * v) as f64).sum();
    Ok(0.5 * (1.0 / (a2 - alpha * dot)).log2())
}

/// Rate for decoding message `m` alone while treating all other
/// transmissions as noise:
/// `0.5 log2(1 + P h_m^2 / (sigma^2 + P sum_{l != m} h_l^2))`.
pub fn interference_as_noise_rate(h: &[f64], m: usize, power: f64, sigma2: f64) -> f64 {
    let other: f64 = h
        .iter()
        .enumerate()
        .filter(|&(l, _)| l != m)
        .map(|(_, &v)| v * v)
        .sum();
    0.5 * (1.0 + power * h[m] * h[m] / (sigma2 + power * other)).log2()
}

/// A Gaussian integer coefficient `re + j im`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaussianInt {
    pub re: i64,
    pub im: i64,
}

impl GaussianInt {
    pub fn new(re: i64, im: i64) -> Self {
        Self { re, im }
    }

    pub fn is_zero(&self) -> bool {
        self.re == 0 && self.im == 0
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re as f64, self.im as f64)
    }
}

/// Complex MMSE scaling: `P <h, a>* / (sigma^2 + P ||h||^2)` with the
/// conjugated inner product `sum conj(h_l) a_l`.
pub fn alpha_mmse_complex(
    h: &[Complex64],
    a: &[GaussianInt],
    power: f64,
    sigma2: f64,
) -> Complex64 {
    let dot: Complex64 = h
        .iter()
        .zip(a)
        .map(|(&hv, &av)| hv.conj() * av.to_complex())
        .sum();
    let h2: f64 = h.iter().map(|v| v.norm_sqr()).sum();
    dot * (power / (sigma2 + power * h2))
}

/// Complex effective noise variance for explicit alpha.
pub fn n_effec_complex(
    h: &[Complex64],
    a: &[GaussianInt],
    power: f64,
    sigma2: f64,
    alpha: Complex64,
) -> f64 {
    let mismatch: f64 = h
        .iter()
        .zip(a)
        .map(|(&hv, &av)| (alpha * hv - av.to_complex()).norm_sqr())
        .sum();
    alpha.norm_sqr() * sigma2 + power * mismatch
}

/// Complex computation rate with MMSE alpha, clamped at 0:
/// `max(0, log2(P / N_effec))` bits per complex channel use.
pub fn comp_rate_complex(
    h: &[Complex64],
    a: &[GaussianInt],
    power: f64,
    sigma2: f64,
) -> Result<f64, LatticeError> {
    if h.len() != a.len() {
        return Err(LatticeError::DimensionMismatch {
            expected: h.len(),
            got: a.len(),
        });
    }
    if a.iter().all(|v| v.is_zero()) {
        return Err(LatticeError::ZeroCoefficients);
    }
    if power <= 0.0 {
        return Err(LatticeError::NonPositiveParameter("power"));
    }
    if sigma2 <= 0.0 {
        return Err(LatticeError::NonPositiveParameter("sigma2"));
    }
    let alpha = alpha_mmse_complex(h, a, power, sigma2);
    let n = n_effec_complex(h, a, power, sigma2, alpha);
    Ok((power / n).log2().max(0.0))
}

/// Splits an even-length message into its real and imaginary halves.
pub fn split_message(w: &Packet) -> Result<(Packet, Packet), LatticeError> {
    let k = w.len();
    if !k.is_multiple_of(2) {
        return Err(LatticeError::OddMessageLength(k));
    }
    let q = w.modulus() as u32;
    let vals: Vec<u32> = w.payload().values().iter().map(|&v| v as u32).collect();
    let re = FieldVector::new(&vals[..k / 2], q)?;
    let im = FieldVector::new(&vals[k / 2..], q)?;
    Ok((Packet::new(re), Packet::new(im)))
}

/// Rejoins the halves produced by [`split_message`].
pub fn merge_message(re: &Packet, im: &Packet) -> Result<Packet, LatticeError> {
    let q = re.modulus() as u32;
    let mut vals: Vec<u32> = re.payload().values().iter().map(|&v| v as u32).collect();
    vals.extend(im.payload().values().iter().map(|&v| v as u32));
    Ok(Packet::new(FieldVector::new(&vals, q)?))
}

/// Encodes an even-length message as the real and imaginary lattice points
/// of one complex codeword.
pub fn split_complex_encode(
    code: &NestedLatticeCode,
    w: &Packet,
) -> Result<(LatticePoint, LatticePoint), LatticeError> {
    let (re, im) = split_message(w)?;
    Ok((phi_map(code, &re)?, phi_map(code, &im)?))
}

/// Ground truth for the two functions a complex-channel receiver decodes:
/// `u_re = sum a_re w_re - a_im w_im` and `u_im = sum a_im w_re + a_re w_im`,
/// all modulo q.
pub fn complex_function_pair(
    code: &NestedLatticeCode,
    coeffs: &[GaussianInt],
    parts: &[(Packet, Packet)],
) -> Result<(Packet, Packet), LatticeError> {
    if coeffs.len() != parts.len() {
        return Err(LatticeError::DimensionMismatch {
            expected: coeffs.len(),
            got: parts.len(),
        });
    }
    let q = code.q;
    let half = code.message_len();
    let mut u_re = FieldVector::zero(half, q)?;
    let mut u_im = FieldVector::zero(half, q)?;
    for (a, (w_re, w_im)) in coeffs.iter().zip(parts) {
        let are = galois::FieldElement::new(a.re.rem_euclid(q as i64) as u32, q)?;
        let aim = galois::FieldElement::new(a.im.rem_euclid(q as i64) as u32, q)?;
        u_re = u_re
            .add(&w_re.payload().scale(&are)?)?
            .sub(&w_im.payload().scale(&aim)?)?;
        u_im = u_im
            .add(&w_re.payload().scale(&aim)?)?
            .add(&w_im.payload().scale(&are)?)?;
    }
    Ok((Packet::new(u_re), Packet::new(u_im)))
}

/// Decodes the complementary function pair from the real and imaginary
/// received vectors, each treated as a real channel.
pub fn split_complex_decode(
    code: &NestedLatticeCode,
    y_re: &[f64],
    y_im: &[f64],
    alpha: Complex64,
) -> Result<(Packet, Packet), LatticeError> {
    // alpha y = (alpha_re y_re - alpha_im y_im) + j (alpha_im y_re + alpha_re y_im)
    let scaled_re: Vec<f64> = y_re
        .iter()
        .zip(y_im)
        .map(|(&r, &i)| alpha.re * r - alpha.im * i)
        .collect();
    let scaled_im: Vec<f64> = y_re
        .iter()
        .zip(y_im)
        .map(|(&r, &i)| alpha.im * r + alpha.re * i)
        .collect();
    let u_re = decode_combination(code, &scaled_re, 1.0)?;
    let u_im = decode_combination(code, &scaled_im, 1.0)?;
    Ok((u_re, u_im))
}

/// Exhaustive search over nonzero integer vectors with sup-norm at most
/// `radius`, maximizing the computation rate. Ties keep the
/// lexicographically smallest vector. Returns the winner and its clamped
/// rate.
pub fn best_coeffs(
    h: &[f64],
    power: f64,
    sigma2: f64,
    radius: i64,
) -> Result<(Vec<i64>, f64), LatticeError> {
    if radius < 1 {
        return Err(LatticeError::NonPositiveParameter("radius"));
    }
    if h.is_empty() {
        return Err(LatticeError::DimensionMismatch { expected: 1, got: 0 });
    }
    let l = h.len();
    let mut current = vec![-radius; l];
    let mut best: Option<(f64, Vec<i64>)> = None;
    loop {
        if current.iter().any(|&v| v != 0) {
            // Maximize the unclamped objective so low-SNR comparisons stay
            // meaningful; the reported rate is clamped.
            let r = comp_rate_real_unclamped(h, &current, power, sigma2)?;
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                best = Some((r, current.clone()));
            }
        }
        // Odometer step in lexicographic order, last coordinate fastest.
        let mut i = l;
        loop {
            if i == 0 {
                let (rate, coeffs) = best.expect("radius >= 1 yields candidates");
                return Ok((coeffs, rate.max(0.0)));
            }
            i -= 1;
            if current[i] < radius {
                current[i] += 1;
                for v in &mut current[i + 1..] {
                    *v = -radius;
                }
                break;
            }
        }
    }
}

/// Gaussian-integer variant of [`best_coeffs`] for complex channels.
pub fn best_coeffs_complex(
    h: &[Complex64],
    power: f64,
    sigma2: f64,
    radius: i64,
) -> Result<(Vec<GaussianInt>, f64), LatticeError> {
    if radius < 1 {
        return Err(LatticeError::NonPositiveParameter("radius"));
    }
    if h.is_empty() {
        return Err(LatticeError::DimensionMismatch { expected: 1, got: 0 });
    }
    let l = h.len();
    let width = 2 * l;
    let mut flat = vec![-radius; width];
    let mut best: Option<(f64, Vec<GaussianInt>)> = None;
    loop {
        let a: Vec<GaussianInt> = (0..l)
            .map(|i| GaussianInt::new(flat[2 * i], flat[2 * i + 1]))
            .collect();
        if a.iter().any(|v| !v.is_zero()) {
            let alpha = alpha_mmse_complex(h, &a, power, sigma2);
            let n = n_effec_complex(h, &a, power, sigma2, alpha);
            let r = (power / n).log2();
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                best = Some((r, a));
            }
        }
        let mut i = width;
        loop {
            if i == 0 {
                let (rate, coeffs) = best.expect("radius >= 1 yields candidates");
                return Ok((coeffs, rate.max(0.0)));
            }
            i -= 1;
            if flat[i] < radius {
                flat[i] += 1;
                for v in &mut flat[i + 1..] {
                    *v = -radius;
                }
                break;
            }
        }
    }
}

/// Tests whether a matrix of Gaussian-integer coefficients is invertible for
/// message recovery: each entry maps to the 2x2 real block
/// `[[re, -im], [im, re]]` reduced mod q, and the 2M-by-2L image must have
/// full column rank over F_q. That embedded system is exactly the linear
/// system relating the recovered function pairs to the message halves.
pub fn full_rank_complex(rows: &[Vec<GaussianInt>], q: u32) -> Result<bool, LatticeError> {
    let m = rows.len();
    let l = rows.first().map(|r| r.len()).unwrap_or(0);
    if m == 0 || l == 0 {
        return Err(LatticeError::DimensionMismatch { expected: 1, got: 0 });
    }
    let qi = q as i64;
    let mut entries = vec![0u32; (2 * m) * (2 * l)];
    let width = 2 * l;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != l {
            return Err(LatticeError::DimensionMismatch {
                expected: l,
                got: row.len(),
            });
        }
        for (j, a) in row.iter().enumerate() {
            let re = a.re.rem_euclid(qi) as u32;
            let im = a.im.rem_euclid(qi) as u32;
            let neg_im = (-a.im).rem_euclid(qi) as u32;
            entries[(2 * i) * width + 2 * j] = re;
            entries[(2 * i) * width + 2 * j + 1] = neg_im;
            entries[(2 * i + 1) * width + 2 * j] = im;
            entries[(2 * i + 1) * width + 2 * j + 1] = re;
        }
    }
    let mat = FieldMatrix::new(2 * m, 2 * l, &entries, q)?;
    Ok(mat.rank() == 2 * l)
}
