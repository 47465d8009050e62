//! Finite-field physical layers: the noiseless modulo-q adder, the erasure
//! adder with its one-in-three block structure, the modulo-additive-noise
//! adder, and computation coding where every transmitter uses the same
//! linear code.
//!
//! Rates returned here are bits per channel use; entropies are base 2 with
//! the convention 0*log(0) = 0.

use std::fmt;

use rand::Rng;

use crate::galois::{self, FieldElement, FieldError, FieldMatrix, FieldVector};
use crate::netcod::Packet;

/// Erasure blocks are three symbols long with exactly one erased.
pub const ERASURE_BLOCK_LEN: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum ModqError {
    Field(FieldError),
    /// The noise mass function is not a probability distribution.
    InvalidPmf { len: usize, total: f64 },
    /// Erasure-channel input length must be a multiple of the block length.
    BadBlockLength { len: usize },
    /// Too many erasures to recover the parity block.
    Unrecoverable { erasures: usize },
    /// User count below one.
    NoUsers,
}

impl fmt::Display for ModqError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModqError::Field(e) => write!(f, "{}", e),
            ModqError::InvalidPmf { len, total } => {
                write!(f, "noise pmf of length {} sums to {}", len, total)
            }
            ModqError::BadBlockLength { len } => {
                write!(f, "length {} is not a multiple of {}", len, ERASURE_BLOCK_LEN)
            }
            ModqError::Unrecoverable { erasures } => {
                write!(f, "{} erasures in one block cannot be recovered", erasures)
            }
            ModqError::NoUsers => write!(f, "at least one transmitter required"),
        }
    }
}

impl std::error::Error for ModqError {}

impl From<FieldError> for ModqError {
    fn from(e: FieldError) -> Self {
        ModqError::Field(e)
    }
}

/// A modulo-q multiple-access channel description: optional additive noise
/// over F_q and an optional one-in-three erasure pattern.
#[derive(Debug, Clone)]
pub struct ModqChannelSpec {
    q: u32,
    users: usize,
    noise_pmf: Vec<f64>,
    erasures: bool,
}

impl ModqChannelSpec {
    /// A channel with additive noise drawn i.i.d. from `noise_pmf` over
    /// {0, ..., q-1}. The pmf must sum to 1 within 1e-12.
    pub fn with_noise(q: u32, users: usize, noise_pmf: &[f64]) -> Result<Self, ModqError> {
        if users == 0 {
            return Err(ModqError::NoUsers);
        }
        if !galois::is_prime(q) || q >= galois::MAX_MODULUS {
            return Err(ModqError::Field(FieldError::NonPrimeModulus(q)));
        }
        let total: f64 = noise_pmf.iter().sum();
        if noise_pmf.len() != q as usize
            || noise_pmf.iter().any(|&p| !(0.0..=1.0).contains(&p))
            || (total - 1.0).abs() > 1e-12
        {
            return Err(ModqError::InvalidPmf {
                len: noise_pmf.len(),
                total,
            });
        }
        Ok(Self {
            q,
            users,
            noise_pmf: noise_pmf.to_vec(),
            erasures: false,
        })
    }

    /// A noiseless channel.
    pub fn noiseless(q: u32, users: usize) -> Result<Self, ModqError> {
        let mut pmf = vec![0.0; q as usize];
        if let Some(p0) = pmf.first_mut() {
            *p0 = 1.0;
        }
        Self::with_noise(q, users, &pmf)
    }

    /// A noiseless adder that erases one random symbol per aligned block of
    /// three.
    pub fn with_erasures(q: u32, users: usize) -> Result<Self, ModqError> {
        let mut spec = Self::noiseless(q, users)?;
        spec.erasures = true;
        Ok(spec)
    }

    /// Symmetric symbol-error channel: the noise is 0 with probability
    /// `1 - flip`, and uniform over the q-1 nonzero symbols otherwise.
    pub fn symmetric_flip(q: u32, users: usize, flip: f64) -> Result<Self, ModqError> {
        if !(0.0..=1.0).contains(&flip) {
            return Err(ModqError::InvalidPmf { len: q as usize, total: flip });
        }
        let mut pmf = vec![flip / (q as f64 - 1.0); q as usize];
        pmf[0] = 1.0 - flip;
        Self::with_noise(q, users, &pmf)
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn noise_pmf(&self) -> &[f64] {
        &self.noise_pmf
    }

    /// Whether the channel erases one symbol per aligned three-block.
    pub fn has_erasures(&self) -> bool {
        self.erasures
    }

    fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> u16 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (z, &p) in self.noise_pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                return z as u16;
            }
        }
        (self.q - 1) as u16
    }
}

/// One channel output symbol: a field value or an erasure mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelOutputSymbol {
    Symbol(FieldElement),
    Erased,
}

impl ChannelOutputSymbol {
    pub fn is_erased(&self) -> bool {
        matches!(self, ChannelOutputSymbol::Erased)
    }
}

/// The noiseless modulo-q sum of all inputs, componentwise.
pub fn noiseless_mac(inputs: &[FieldVector]) -> Result<FieldVector, ModqError> {
    let first = inputs.first().ok_or(ModqError::NoUsers)?;
    let mut acc = first.clone();
    for x in &inputs[1..] {
        acc = acc.add(x)?;
    }
    Ok(acc)
}

/// Uncoded one-shot network coding on the noiseless adder: each transmitter
/// pre-multiplies its packet by its coefficient, and the channel sum is the
/// desired combination.
pub fn precoded_onehot_transmit(
    packets: &[Packet],
    coeffs: &FieldVector,
) -> Result<FieldVector, ModqError> {
    if packets.len() != coeffs.len() {
        return Err(ModqError::Field(FieldError::DimensionMismatch {
            expected: coeffs.len(),
            got: packets.len(),
        }));
    }
    let inputs: Vec<FieldVector> = packets
        .iter()
        .enumerate()
        .map(|(i, p)| p.payload().scale(&coeffs.get(i)?))
        .collect::<Result<_, _>>()?;
    noiseless_mac(&inputs)
}

/// The modulo-q sum of the inputs plus i.i.d. additive noise from the
/// channel's pmf, one draw per symbol.
pub fn modnoise_mac<R: Rng + ?Sized>(
    inputs: &[FieldVector],
    rng: &mut R,
    spec: &ModqChannelSpec,
) -> Result<FieldVector, ModqError> {
    let sum = noiseless_mac(inputs)?;
    if sum.modulus() as u32 != spec.q {
        return Err(ModqError::Field(FieldError::ModulusMismatch {
            left: sum.modulus(),
            right: spec.q as u16,
        }));
    }
    let noise: Vec<u32> = (0..sum.len()).map(|_| spec.sample_noise(rng) as u32).collect();
    let z = FieldVector::new(&noise, spec.q)?;
    Ok(sum.add(&z)?)
}

/// The erasure adder: noiseless modulo-q sum, then one uniformly random
/// symbol erased in each aligned block of three. Input length must be a
/// multiple of three.
pub fn erasure_mac<R: Rng + ?Sized>(
    inputs: &[FieldVector],
    rng: &mut R,
) -> Result<Vec<ChannelOutputSymbol>, ModqError> {
    let sum = noiseless_mac(inputs)?;
    if sum.len() % ERASURE_BLOCK_LEN != 0 {
        return Err(ModqError::BadBlockLength { len: sum.len() });
    }
    let mut out: Vec<ChannelOutputSymbol> = (0..sum.len())
        .map(|i| ChannelOutputSymbol::Symbol(sum.get(i).expect("in range")))
        .collect();
    for block in 0..sum.len() / ERASURE_BLOCK_LEN {
        let hit = rng.gen_range(0..ERASURE_BLOCK_LEN);
        out[block * ERASURE_BLOCK_LEN + hit] = ChannelOutputSymbol::Erased;
    }
    Ok(out)
}

/// Maps two information symbols to the three-symbol parity block
/// `(b1, b2, b1+b2)`.
pub fn parity3_encode(b1: &FieldElement, b2: &FieldElement) -> Result<FieldVector, ModqError> {
    let sum = b1.add(b2)?;
    Ok(FieldVector::new(
        &[b1.value() as u32, b2.value() as u32, sum.value() as u32],
        b1.modulus() as u32,
    )?)
}

/// Recovers the two symbol sums `(b1+c1, b2+c2)` from the erasure-channel
/// output of two simultaneous parity blocks. The channel-combined parity
/// position carries `(b1+b2)+(c1+c2)`, so any single erasure is repairable.
pub fn parity3_decode_sum(
    y: &[ChannelOutputSymbol; 3],
) -> Result<(FieldElement, FieldElement), ModqError> {
    let erased = y.iter().filter(|s| s.is_erased()).count();
    if erased > 1 {
        return Err(ModqError::Unrecoverable { erasures: erased });
    }
    let sym = |i: usize| match y[i] {
        ChannelOutputSymbol::Symbol(v) => Some(v),
        ChannelOutputSymbol::Erased => None,
    };
    match (sym(0), sym(1), sym(2)) {
        (Some(s1), Some(s2), _) => Ok((s1, s2)),
        (None, Some(s2), Some(p)) => Ok((p.sub(&s2)?, s2)),
        (Some(s1), None, Some(p)) => Ok((s1, p.sub(&s1)?)),
        _ => unreachable!("at most one erasure"),
    }
}

/// A computation code: one shared generator matrix and a per-user scale.
/// Sharing G is what lets the channel sum land back inside the code.
#[derive(Debug, Clone)]
pub struct CompCode {
    generator: FieldMatrix,
}

impl CompCode {
    /// `generator` is n-by-k; the codebook is `{G u : u in F_q^k}` with
    /// q^k at most 2^16 so exhaustive decoding stays feasible.
    pub fn new(generator: FieldMatrix) -> Result<Self, ModqError> {
        let q = generator.modulus() as u64;
        let k = generator.cols() as u32;
        let size = q.checked_pow(k).unwrap_or(u64::MAX);
        if size > 1 << 16 {
            return Err(ModqError::Field(FieldError::DimensionMismatch {
                expected: 1 << 16,
                got: size.min(u64::from(u32::MAX)) as usize,
            }));
        }
        Ok(Self { generator })
    }

    pub fn generator(&self) -> &FieldMatrix {
        &self.generator
    }

    pub fn q(&self) -> u32 {
        self.generator.modulus() as u32
    }

    pub fn blocklength(&self) -> usize {
        self.generator.rows()
    }

    pub fn message_len(&self) -> usize {
        self.generator.cols()
    }

    fn codebook_size(&self) -> u64 {
        (self.q() as u64).pow(self.message_len() as u32)
    }

    /// The message with lexicographic index `idx` (first symbol most
    /// significant).
    fn message_for_index(&self, idx: u64) -> FieldVector {
        let q = self.q() as u64;
        let k = self.message_len();
        let mut vals = vec![0u32; k];
        let mut rem = idx;
        for j in (0..k).rev() {
            vals[j] = (rem % q) as u32;
            rem /= q;
        }
        FieldVector::new(&vals, self.q()).expect("valid message")
    }
}

/// Encodes user `l`'s packet as `x_l = a_l * G * w_l`.
pub fn compcode_encode(
    code: &CompCode,
    w: &Packet,
    scale: &FieldElement,
) -> Result<FieldVector, ModqError> {
    let coded = code.generator.matvec(w.payload())?;
    Ok(coded.scale(scale)?)
}

/// Decodes the function packet `u = sum a_l w_l` by exhaustive minimum
/// Hamming distance over the shared codebook `{G u}`. Ties go to the
/// lexicographically smallest message, so the result is deterministic.
pub fn compcode_decode(code: &CompCode, y: &FieldVector) -> Result<Packet, ModqError> {
    if y.len() != code.blocklength() {
        return Err(ModqError::Field(FieldError::DimensionMismatch {
            expected: code.blocklength(),
            got: y.len(),
        }));
    }
    let mut best: Option<(usize, FieldVector)> = None;
    for idx in 0..code.codebook_size() {
        let u = code.message_for_index(idx);
        let cw = code.generator.matvec(&u)?;
        let dist = cw
            .values()
            .iter()
            .zip(y.values())
            .filter(|(a, b)| a != b)
            .count();
        // Strict improvement keeps the first (lexicographically smallest)
        // message on ties.
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, u));
        }
    }
    Ok(Packet::new(best.expect("nonempty codebook").1))
}

/// Entropy of the additive noise in bits.
pub fn noise_entropy(spec: &ModqChannelSpec) -> f64 {
    spec.noise_pmf
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// The computation rate of same-code computation coding over the
/// modulo-additive-noise adder: `log2(q) - H(Z)` bits per channel use.
pub fn comp_rate_modq(spec: &ModqChannelSpec) -> f64 {
    (spec.q as f64).log2() - noise_entropy(spec)
}

/// The rate of sending everyone's data separately and computing at the
/// receiver: `L` times more channel uses.
pub fn separation_rate_modq(spec: &ModqChannelSpec, users: usize) -> Result<f64, ModqError> {
    if users == 0 {
        return Err(ModqError::NoUsers);
    }
    Ok(comp_rate_modq(spec) / users as f64)
}

/// Computation rate of the two-user parity scheme on the one-in-three
/// erasure adder: two information symbols land per three channel uses,
/// `(2/3) log2(q)`.
pub fn erasure_comp_rate(q: u32) -> Result<f64, ModqError> {
    if !galois::is_prime(q) || q >= galois::MAX_MODULUS {
        return Err(ModqError::Field(FieldError::NonPrimeModulus(q)));
    }
    Ok(2.0 / 3.0 * (q as f64).log2())
}

/// Rate of the separate-transmission alternative on the same channel: each
/// user needs its own protected slots, `(1/3) log2(q)` for two users.
pub fn erasure_separation_rate(q: u32) -> Result<f64, ModqError> {
    Ok(erasure_comp_rate(q)? / 2.0)
}
