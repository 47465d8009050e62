//! Gaussian channels and the two-way relay strategies: uncoded BPSK sum
//! detection, analog (amplify-and-forward) network coding, analytic rate
//! curves for every strategy, end-to-end exchange simulation, and the
//! three-user fading equation sweep.
//!
//! Conventions: `power` and `sigma2` are per real dimension unless a
//! function says otherwise; complex noise of total variance `sigma2` puts
//! `sigma2 / 2` in each part. Rates are bits per channel use. SNR in dB is
//! `10 log10(power / sigma2)`.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::lattice::{
    self, alpha_mmse_cf, alpha_mmse_equal, best_coeffs, decode_integer_combination,
    integer_combination, interference_as_noise_rate, LatticeError, NestedLatticeCode,
};
use crate::netcod::Packet;
use crate::rng::{substream, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub enum WirelessError {
    /// A transmitted block exceeds the per-user power constraint.
    PowerViolation { user: usize, power: f64, budget: f64 },
    /// The channel description or a parameter is invalid.
    BadSpec(&'static str),
    /// The strategy has no analytic curve or no simulation.
    UnsupportedStrategy(StrategyId),
    Lattice(LatticeError),
}

impl fmt::Display for WirelessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WirelessError::PowerViolation { user, power, budget } => {
                write!(f, "user {} block power {} exceeds budget {}", user, power, budget)
            }
            WirelessError::BadSpec(what) => write!(f, "invalid channel spec: {}", what),
            WirelessError::UnsupportedStrategy(s) => {
                write!(f, "strategy {} not supported here", s.label())
            }
            WirelessError::Lattice(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for WirelessError {}

impl From<LatticeError> for WirelessError {
    fn from(e: LatticeError) -> Self {
        WirelessError::Lattice(e)
    }
}

/// An additive white Gaussian noise multiple-access channel.
#[derive(Debug, Clone)]
pub struct AwgnSpec {
    power: f64,
    sigma2: f64,
    complex: bool,
    gains: Vec<f64>,
}

impl AwgnSpec {
    /// Real channel with unit gains for `users` transmitters.
    pub fn real(power: f64, sigma2: f64, users: usize) -> Result<Self, WirelessError> {
        Self::with_gains(power, sigma2, false, vec![1.0; users])
    }

    /// Complex channel (total noise variance `sigma2`) with unit gains.
    pub fn complex(power: f64, sigma2: f64, users: usize) -> Result<Self, WirelessError> {
        Self::with_gains(power, sigma2, true, vec![1.0; users])
    }

    pub fn with_gains(
        power: f64,
        sigma2: f64,
        complex: bool,
        gains: Vec<f64>,
    ) -> Result<Self, WirelessError> {
        if power <= 0.0 || !power.is_finite() {
            return Err(WirelessError::BadSpec("power must be positive"));
        }
        if sigma2 <= 0.0 || !sigma2.is_finite() {
            return Err(WirelessError::BadSpec("sigma2 must be positive"));
        }
        if gains.is_empty() {
            return Err(WirelessError::BadSpec("at least one transmitter"));
        }
        Ok(Self {
            power,
            sigma2,
            complex,
            gains,
        })
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn is_complex(&self) -> bool {
        self.complex
    }
}

/// The two-way relay strategies compared throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyId {
    Routing,
    Netcod,
    Analog,
    Lattice,
    Bpsk,
    Upper,
}

impl StrategyId {
    pub const ALL: [StrategyId; 6] = [
        StrategyId::Upper,
        StrategyId::Lattice,
        StrategyId::Analog,
        StrategyId::Netcod,
        StrategyId::Routing,
        StrategyId::Bpsk,
    ];

    /// The strategies with an end-to-end simulation (everything but the
    /// upper bound).
    pub const SIMULABLE: [StrategyId; 5] = [
        StrategyId::Routing,
        StrategyId::Netcod,
        StrategyId::Analog,
        StrategyId::Lattice,
        StrategyId::Bpsk,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            StrategyId::Routing => "routing",
            StrategyId::Netcod => "netcod",
            StrategyId::Analog => "analog",
            StrategyId::Lattice => "lattice",
            StrategyId::Bpsk => "bpsk",
            StrategyId::Upper => "upper",
        }
    }

    /// Half-duplex slots needed for one message exchange.
    pub fn slots(&self) -> Option<usize> {
        match self {
            StrategyId::Routing => Some(4),
            StrategyId::Netcod => Some(3),
            StrategyId::Analog | StrategyId::Lattice | StrategyId::Bpsk => Some(2),
            StrategyId::Upper => None,
        }
    }
}

/// One point on a rate curve: analytic or Monte Carlo (with a confidence
/// half-width).
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub strategy: StrategyId,
    pub snr_db: f64,
    pub rate: f64,
    pub mc_halfwidth: Option<f64>,
}

fn block_power(x: &[f64]) -> f64 {
    x.iter().map(|&v| v * v).sum::<f64>() / x.len() as f64
}

/// Transmits one block per user through the channel: output is
/// `sum_l h_l x_l + z` with i.i.d. Gaussian noise. Enforces the per-user
/// power constraint `(1/n) sum |x|^2 <= P + 1e-9`.
pub fn awgn_transmit<R: Rng + ?Sized>(
    inputs: &[Vec<f64>],
    spec: &AwgnSpec,
    rng: &mut R,
) -> Result<Vec<f64>, WirelessError> {
    if inputs.len() != spec.gains.len() {
        return Err(WirelessError::BadSpec("one input block per gain"));
    }
    let n = inputs.first().map(|x| x.len()).unwrap_or(0);
    if n == 0 || inputs.iter().any(|x| x.len() != n) {
        return Err(WirelessError::BadSpec("equal nonzero block lengths"));
    }
    for (user, x) in inputs.iter().enumerate() {
        let p = block_power(x);
        if p > spec.power + 1e-9 {
            return Err(WirelessError::PowerViolation {
                user,
                power: p,
                budget: spec.power,
            });
        }
    }
    let mut out = vec![0.0; n];
    for (x, &h) in inputs.iter().zip(&spec.gains) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o += h * v;
        }
    }
    add_noise(&mut out, spec.sigma2, rng);
    Ok(out)
}

/// Complex counterpart of [`awgn_transmit`]: circularly symmetric noise of
/// total variance `sigma2`.
pub fn awgn_transmit_complex<R: Rng + ?Sized>(
    inputs: &[Vec<Complex64>],
    spec: &AwgnSpec,
    rng: &mut R,
) -> Result<Vec<Complex64>, WirelessError> {
    if inputs.len() != spec.gains.len() {
        return Err(WirelessError::BadSpec("one input block per gain"));
    }
    let n = inputs.first().map(|x| x.len()).unwrap_or(0);
    if n == 0 || inputs.iter().any(|x| x.len() != n) {
        return Err(WirelessError::BadSpec("equal nonzero block lengths"));
    }
    for (user, x) in inputs.iter().enumerate() {
        let p = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        if p > spec.power + 1e-9 {
            return Err(WirelessError::PowerViolation {
                user,
                power: p,
                budget: spec.power,
            });
        }
    }
    let normal = Normal::new(0.0, (spec.sigma2 / 2.0).sqrt()).expect("valid sigma");
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (x, &h) in inputs.iter().zip(&spec.gains) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o += h * v;
        }
    }
    for o in &mut out {
        *o += Complex64::new(normal.sample(rng), normal.sample(rng));
    }
    Ok(out)
}

/// Adds real Gaussian noise of variance `sigma2` in place. Used by the
/// exchange simulations, whose lattice codebooks meet the power constraint
/// on ensemble average rather than per block (dithering is omitted).
fn add_noise<R: Rng + ?Sized>(x: &mut [f64], sigma2: f64, rng: &mut R) {
    let normal = Normal::new(0.0, sigma2.sqrt()).expect("valid sigma");
    for v in x {
        *v += normal.sample(rng);
    }
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Detection threshold on |y| for deciding that the modulo-2 sum of two
/// unit-power BPSK bits is 1: the magnitude below which the zero-sum
/// hypothesis dominates the nearer +-2 center.
pub fn bpsk_sum_threshold(sigma2: f64) -> f64 {
    1.0 + sigma2 * std::f64::consts::LN_2 / 2.0
}

/// Hard decision on the modulo-2 sum of two simultaneously transmitted
/// unit-power BPSK bits: 1 when the received magnitude is below the
/// threshold.
pub fn bpsk_map_decide(y: f64, sigma2: f64) -> u8 {
    u8::from(y.abs() <= bpsk_sum_threshold(sigma2))
}

/// Analytic error probability of [`bpsk_map_decide`] with equiprobable
/// bits, assembled from Q at the threshold against the centers 0 and +-2.
pub fn bpsk_sum_error_prob(sigma2: f64) -> f64 {
    let sigma = sigma2.sqrt();
    let t = bpsk_sum_threshold(sigma2);
    // U = 1 (sum 0): error when |Z| > T.
    let err_sum_one = 2.0 * q_function(t / sigma);
    // U = 0 (sum +-2): error when the output magnitude is below T.
    let err_sum_zero = q_function((-t - 2.0) / sigma) - q_function((t - 2.0) / sigma);
    0.5 * err_sum_one + 0.5 * err_sum_zero
}

/// The relay scaling for analog network coding:
/// `sqrt(P / (2P + sigma^2))`.
pub fn analog_relay_scale(power: f64, sigma2: f64) -> f64 {
    (power / (2.0 * power + sigma2)).sqrt()
}

/// Analytic per-user rate for each two-way relay strategy. BPSK has no
/// closed-form curve here; use [`bpsk_end_to_end_rate`].
pub fn rate_curve(strategy: StrategyId, power: f64, sigma2: f64) -> Result<f64, WirelessError> {
    let t = power / sigma2;
    let r = match strategy {
        StrategyId::Upper => 0.5 * (1.0 + t).log2(),
        StrategyId::Analog => 0.5 * (1.0 + t * power / (3.0 * power + sigma2)).log2(),
        StrategyId::Routing => 0.25 * (1.0 + t).log2(),
        StrategyId::Netcod => (1.0 + t).log2() / 3.0,
        StrategyId::Lattice => (0.5 * (0.5 + t).log2()).max(0.0),
        StrategyId::Bpsk => return Err(WirelessError::UnsupportedStrategy(strategy)),
    };
    Ok(r)
}

fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Analytic rate points for a set of strategies over an SNR grid in dB
/// (unit noise variance). BPSK uses its composite end-to-end rate; the
/// other strategies use their closed forms.
pub fn analytic_rate_points(
    strategies: &[StrategyId],
    snr_dbs: &[f64],
) -> Result<Vec<RatePoint>, WirelessError> {
    let mut points = Vec::with_capacity(strategies.len() * snr_dbs.len());
    for &snr_db in snr_dbs {
        let power = 10f64.powf(snr_db / 10.0);
        for &strategy in strategies {
            let rate = match strategy {
                StrategyId::Bpsk => bpsk_end_to_end_rate(power, 1.0),
                _ => rate_curve(strategy, power, 1.0)?,
            };
            points.push(RatePoint {
                strategy,
                snr_db,
                rate,
                mc_halfwidth: None,
            });
        }
    }
    Ok(points)
}

/// Per-user rate of the uncoded-BPSK strategy with end-to-end coding: the
/// MAC slot is a binary symmetric channel with crossover
/// `bpsk_sum_error_prob(sigma2 / P)` (unit-power statistics scaled to
/// amplitude `sqrt(P)`), the broadcast slot an error-free pipe at
/// `min(1, log2(1 + P / sigma2))` bits per use, and the two equal slots
/// halve the bottleneck.
pub fn bpsk_end_to_end_rate(power: f64, sigma2: f64) -> f64 {
    let p_e = bpsk_sum_error_prob(sigma2 / power);
    let mac = 1.0 - binary_entropy(p_e);
    let broadcast = (1.0 + power / sigma2).log2().min(1.0);
    (0.5 * mac.min(broadcast)).min(1.0)
}

/// Summary of a simulated two-way exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeSummary {
    pub strategy: StrategyId,
    pub slots: usize,
    pub trials: usize,
    /// Messages that failed to reach their destination (out of 2 per trial).
    pub message_errors: usize,
    pub error_rate: f64,
    /// Per-user bits per channel use from slot accounting.
    pub throughput: f64,
    /// Binomial normal-approximation half-width on the error rate.
    pub halfwidth: f64,
}

/// Configuration for [`simulate_exchange`]: a symmetric two-way relay with
/// unit gains, per-real-dimension power `power` and noise `sigma2`. The
/// field-coded strategies share one nested lattice code; BPSK sends
/// `code.blocklength()` uncoded bits per slot.
#[derive(Debug, Clone)]
pub struct TwoWaySim {
    pub power: f64,
    pub sigma2: f64,
    pub code: NestedLatticeCode,
}

impl TwoWaySim {
    pub fn new(power: f64, sigma2: f64, code: NestedLatticeCode) -> Result<Self, WirelessError> {
        if power <= 0.0 || sigma2 <= 0.0 {
            return Err(WirelessError::BadSpec("power and sigma2 must be positive"));
        }
        if (code.power() - power).abs() > 1e-9 {
            return Err(WirelessError::BadSpec("code power must match channel power"));
        }
        Ok(Self {
            power,
            sigma2,
            code,
        })
    }

    fn draw_message<R: Rng + ?Sized>(&self, rng: &mut R) -> Packet {
        Packet::new(
            crate::galois::random_vector(self.code.message_len(), self.code.q(), rng)
                .expect("valid message shape"),
        )
    }

    /// Single-user transmission with MMSE scaling.
    fn point_to_point<R: Rng + ?Sized>(&self, w: &Packet, rng: &mut R) -> Packet {
        let x = lattice::phi_map(&self.code, w).expect("encode");
        let mut y = x.coords().to_vec();
        add_noise(&mut y, self.sigma2, rng);
        let alpha = alpha_mmse_cf(&[1.0], &[1], self.power, self.sigma2);
        decode_integer_combination(&self.code, &y, alpha, &[1]).expect("decode")
    }
}

/// Runs `trials` full slot schedules of the chosen strategy and reports the
/// per-message error rate and per-user throughput. Each trial draws its own
/// RNG stream from `(seed, strategy, trial)`, so results do not depend on
/// evaluation order. The upper bound is not simulable.
pub fn simulate_exchange(
    strategy: StrategyId,
    sim: &TwoWaySim,
    trials: usize,
    seed: u64,
) -> Result<ExchangeSummary, WirelessError> {
    let slots = strategy
        .slots()
        .ok_or(WirelessError::UnsupportedStrategy(strategy))?;
    if trials == 0 {
        return Err(WirelessError::BadSpec("at least one trial"));
    }
    let code = &sim.code;
    let strategy_tag = strategy as u64;
    let mut message_errors = 0usize;
    for trial in 0..trials {
        let mut rng = substream(seed, &[0x7e77, strategy_tag, trial as u64]);
        let (err1, err2) = match strategy {
            StrategyId::Routing => simulate_routing(sim, &mut rng),
            StrategyId::Netcod => simulate_netcod(sim, &mut rng),
            StrategyId::Lattice => simulate_lattice(sim, &mut rng),
            StrategyId::Analog => simulate_analog(sim, &mut rng),
            StrategyId::Bpsk => simulate_bpsk(sim, &mut rng),
            StrategyId::Upper => unreachable!("rejected above"),
        };
        message_errors += usize::from(err1) + usize::from(err2);
    }
    let messages = 2 * trials;
    let error_rate = message_errors as f64 / messages as f64;
    let halfwidth = 1.96 * (error_rate * (1.0 - error_rate) / messages as f64).sqrt();
    let code_rate = match strategy {
        StrategyId::Bpsk => 1.0,
        _ => code.rate(),
    };
    Ok(ExchangeSummary {
        strategy,
        slots,
        trials,
        message_errors,
        error_rate,
        throughput: code_rate / slots as f64,
        halfwidth,
    })
}

/// Four slots: each message travels point-to-point via the relay.
fn simulate_routing(sim: &TwoWaySim, rng: &mut SimRng) -> (bool, bool) {
    let w1 = sim.draw_message(rng);
    let w2 = sim.draw_message(rng);
    let relay1 = sim.point_to_point(&w1, rng);
    let relay2 = sim.point_to_point(&w2, rng);
    let at_user2 = sim.point_to_point(&relay1, rng);
    let at_user1 = sim.point_to_point(&relay2, rng);
    (at_user1 != w2, at_user2 != w1)
}

/// Three slots: uplinks as in routing, then one broadcast of the sum; each
/// user subtracts its own message.
fn simulate_netcod(sim: &TwoWaySim, rng: &mut SimRng) -> (bool, bool) {
    let code = &sim.code;
    let w1 = sim.draw_message(rng);
    let w2 = sim.draw_message(rng);
    let relay1 = sim.point_to_point(&w1, rng);
    let relay2 = sim.point_to_point(&w2, rng);
    let sum = integer_combination(code, &[1, 1], &[relay1, relay2]).expect("combine");
    let x_sum = lattice::phi_map(code, &sum).expect("encode");
    let mut got = [false, false];
    for (slot, (own, want)) in [(&w1, &w2), (&w2, &w1)].iter().enumerate() {
        let mut y = x_sum.coords().to_vec();
        add_noise(&mut y, sim.sigma2, rng);
        let alpha = alpha_mmse_cf(&[1.0], &[1], sim.power, sim.sigma2);
        let sum_hat = decode_integer_combination(code, &y, alpha, &[1]).expect("decode");
        let partner = integer_combination(code, &[1, -1], &[sum_hat, (*own).clone()])
            .expect("subtract");
        got[slot] = partner == **want;
    }
    (!got[0], !got[1])
}

/// Two slots: simultaneous uplink decoded as a sum equation, then one
/// broadcast of the decoded sum.
fn simulate_lattice(sim: &TwoWaySim, rng: &mut SimRng) -> (bool, bool) {
    let code = &sim.code;
    let w1 = sim.draw_message(rng);
    let w2 = sim.draw_message(rng);
    let x1 = lattice::phi_map(code, &w1).expect("encode");
    let x2 = lattice::phi_map(code, &w2).expect("encode");
    let mut y: Vec<f64> = x1
        .coords()
        .iter()
        .zip(x2.coords())
        .map(|(&a, &b)| a + b)
        .collect();
    add_noise(&mut y, sim.sigma2, rng);
    let alpha = alpha_mmse_equal(sim.power, sim.sigma2);
    let sum_hat = decode_integer_combination(code, &y, alpha, &[1, 1]).expect("decode");
    let x_sum = lattice::phi_map(code, &sum_hat).expect("encode");
    let mut got = [false, false];
    for (slot, (own, want)) in [(&w1, &w2), (&w2, &w1)].iter().enumerate() {
        let mut yb = x_sum.coords().to_vec();
        add_noise(&mut yb, sim.sigma2, rng);
        let alpha_b = alpha_mmse_cf(&[1.0], &[1], sim.power, sim.sigma2);
        let sum_rx = decode_integer_combination(code, &yb, alpha_b, &[1]).expect("decode");
        let partner =
            integer_combination(code, &[1, -1], &[sum_rx, (*own).clone()]).expect("subtract");
        got[slot] = partner == **want;
    }
    (!got[0], !got[1])
}

/// Two slots: the relay amplifies and forwards its noisy observation; each
/// user subtracts its own contribution and decodes the partner codeword
/// against the effective gain.
fn simulate_analog(sim: &TwoWaySim, rng: &mut SimRng) -> (bool, bool) {
    let code = &sim.code;
    let w1 = sim.draw_message(rng);
    let w2 = sim.draw_message(rng);
    let x1 = lattice::phi_map(code, &w1).expect("encode");
    let x2 = lattice::phi_map(code, &w2).expect("encode");
    let mut y_relay: Vec<f64> = x1
        .coords()
        .iter()
        .zip(x2.coords())
        .map(|(&a, &b)| a + b)
        .collect();
    add_noise(&mut y_relay, sim.sigma2, rng);
    let gamma = analog_relay_scale(sim.power, sim.sigma2);
    let x_relay: Vec<f64> = y_relay.iter().map(|&v| gamma * v).collect();
    let effective_sigma2 = gamma * gamma * sim.sigma2 + sim.sigma2;
    let mut got = [false, false];
    for (slot, (own_x, want)) in [(&x1, &w2), (&x2, &w1)].iter().enumerate() {
        let mut y = x_relay.clone();
        add_noise(&mut y, sim.sigma2, rng);
        // Remove the user's own (known) contribution, leaving
        // gamma * x_partner + gamma * z_relay + z_user.
        let s: Vec<f64> = y
            .iter()
            .zip(own_x.coords())
            .map(|(&v, &ox)| v - gamma * ox)
            .collect();
        let alpha = alpha_mmse_cf(&[gamma], &[1], sim.power, effective_sigma2);
        let partner = decode_integer_combination(code, &s, alpha, &[1]).expect("decode");
        got[slot] = partner == **want;
    }
    (!got[0], !got[1])
}

/// Two slots of uncoded BPSK with hard sum detection at the relay. The
/// message is one bit per channel use; amplitude `sqrt(P)` uses the whole
/// per-dimension budget and normalizes back to the unit-power detector
/// statistics.
fn simulate_bpsk(sim: &TwoWaySim, rng: &mut SimRng) -> (bool, bool) {
    let n = sim.code.blocklength();
    let amp = sim.power.sqrt();
    let normalized_sigma2 = sim.sigma2 / sim.power;
    let bits1: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)) .collect();
    let bits2: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
    let to_signal = |b: u8| if b == 1 { amp } else { -amp };
    let mut y: Vec<f64> = bits1
        .iter()
        .zip(&bits2)
        .map(|(&a, &b)| to_signal(a) + to_signal(b))
        .collect();
    add_noise(&mut y, sim.sigma2, rng);
    let sum_hat: Vec<u8> = y
        .iter()
        .map(|&v| bpsk_map_decide(v / amp, normalized_sigma2))
        .collect();
    // Broadcast the hard sum; each user decides by sign and XORs its own
    // bits back out.
    let mut got = [true, true];
    for (slot, (own, want)) in [(&bits1, &bits2), (&bits2, &bits1)].iter().enumerate() {
        let mut yb: Vec<f64> = sum_hat.iter().map(|&b| to_signal(b)).collect();
        add_noise(&mut yb, sim.sigma2, rng);
        for i in 0..n {
            let rx_sum = u8::from(yb[i] >= 0.0);
            let partner = rx_sum ^ own[i];
            if partner != want[i] {
                got[slot] = false;
            }
        }
    }
    (!got[0], !got[1])
}

/// One grid point of the three-user fading sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationSweepPoint {
    pub snr_db: f64,
    /// Mean best-coefficient computation rate ("decode an equation").
    pub decode_equation: f64,
    pub decode_equation_halfwidth: f64,
    /// Mean best single-message rate with interference as noise.
    pub interference_as_noise: f64,
    pub interference_halfwidth: f64,
}

/// Averages the best-equation rate and the interference-as-noise rate over
/// i.i.d. real Gaussian fading with `users` transmitters, per SNR point.
/// Every (point, trial) pair draws its own stream from the seed.
pub fn geteqm3_sweep(
    snr_dbs: &[f64],
    users: usize,
    trials: usize,
    radius: i64,
    seed: u64,
) -> Result<Vec<EquationSweepPoint>, WirelessError> {
    if snr_dbs.is_empty() || trials == 0 || users == 0 {
        return Err(WirelessError::BadSpec("empty sweep"));
    }
    let sigma2 = 1.0;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = Vec::with_capacity(snr_dbs.len());
    for (gi, &snr_db) in snr_dbs.iter().enumerate() {
        let power = 10f64.powf(snr_db / 10.0) * sigma2;
        let mut eq_rates = Vec::with_capacity(trials);
        let mut ian_rates = Vec::with_capacity(trials);
        for trial in 0..trials {
            let mut rng = substream(seed, &[0x9e03, gi as u64, trial as u64]);
            let h: Vec<f64> = (0..users).map(|_| normal.sample(&mut rng)).collect();
            let (_, eq_rate) = best_coeffs(&h, power, sigma2, radius)?;
            let ian = (0..users)
                .map(|m| interference_as_noise_rate(&h, m, power, sigma2))
                .fold(f64::NEG_INFINITY, f64::max)
                .max(0.0);
            debug_assert!(eq_rate >= ian - 1e-9, "unit vectors are in the search set");
            eq_rates.push(eq_rate);
            ian_rates.push(ian);
        }
        let stats = |xs: &[f64]| {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                / (xs.len().saturating_sub(1).max(1)) as f64;
            (mean, 1.96 * (var / xs.len() as f64).sqrt())
        };
        let (eq_mean, eq_hw) = stats(&eq_rates);
        let (ian_mean, ian_hw) = stats(&ian_rates);
        out.push(EquationSweepPoint {
            snr_db,
            decode_equation: eq_mean,
            decode_equation_halfwidth: eq_hw,
            interference_as_noise: ian_mean,
            interference_halfwidth: ian_hw,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galois::FieldMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_code(power: f64) -> NestedLatticeCode {
        let g = FieldMatrix::new(2, 1, &[1, 2], 3).unwrap();
        NestedLatticeCode::new(g, power).unwrap()
    }

    #[test]
    fn transmit_exact_sum_when_noise_vanishes() {
        let spec = AwgnSpec::real(2.0, 1e-300, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x1 = vec![1.0, -0.5, 0.25];
        let x2 = vec![-1.0, 0.5, 0.25];
        let y = awgn_transmit(&[x1.clone(), x2.clone()], &spec, &mut rng).unwrap();
        for i in 0..3 {
            assert!((y[i] - (x1[i] + x2[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn transmit_rejects_power_violation() {
        let spec = AwgnSpec::real(1.0, 0.5, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hot = vec![2.0, 2.0];
        assert!(matches!(
            awgn_transmit(&[hot], &spec, &mut rng),
            Err(WirelessError::PowerViolation { user: 0, .. })
        ));
    }

    #[test]
    fn transmit_noise_variance_within_one_percent() {
        let sigma2 = 0.7;
        let spec = AwgnSpec::real(1.0, sigma2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let zeros = vec![vec![0.0; 1_000_000]];
        let y = awgn_transmit(&zeros, &spec, &mut rng).unwrap();
        let var = y.iter().map(|&v| v * v).sum::<f64>() / y.len() as f64;
        assert!((var - sigma2).abs() / sigma2 < 0.01, "empirical {}", var);
    }

    #[test]
    fn complex_transmit_noise_split() {
        let sigma2 = 1.3;
        let spec = AwgnSpec::complex(1.0, sigma2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let zeros = vec![vec![Complex64::new(0.0, 0.0); 500_000]];
        let y = awgn_transmit_complex(&zeros, &spec, &mut rng).unwrap();
        let total: f64 = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / y.len() as f64;
        let re: f64 = y.iter().map(|v| v.re * v.re).sum::<f64>() / y.len() as f64;
        assert!((total - sigma2).abs() / sigma2 < 0.01);
        assert!((re - sigma2 / 2.0).abs() / (sigma2 / 2.0) < 0.02);
    }

    #[test]
    fn q_function_basics() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x: f64 = rng.gen_range(-6.0..6.0);
            assert!((q_function(-x) - (1.0 - q_function(x))).abs() < 1e-12);
        }
    }

    /// Quadrature oracle: for x >= 0.5 write
    /// Q(x) = phi(x) * I(x) with I(x) = integral_0^inf exp(-x u - u^2/2) du,
    /// which has an O(1) integrand and no cancellation; Simpson on [0, 12].
    fn q_oracle(x: f64) -> f64 {
        let f = |u: f64| (-x * u - 0.5 * u * u).exp();
        let (a, b, steps) = (0.0f64, 12.0f64, 200_000usize);
        let h = (b - a) / steps as f64;
        let mut acc = f(a) + f(b);
        for i in 1..steps {
            let u = a + i as f64 * h;
            acc += f(u) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let integral = acc * h / 3.0;
        let phi = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        phi * integral
    }

    #[test]
    fn q_function_matches_quadrature_oracle() {
        for x in [0.5, 1.0, 1.96, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0] {
            let want = q_oracle(x);
            let got = q_function(x);
            assert!(
                (got - want).abs() / want < 1e-10,
                "x={} got={} want={}",
                x,
                got,
                want
            );
        }
        assert!((q_function(1.96) - 0.0249979).abs() < 1e-6);
    }

    #[test]
    fn map_decision_examples() {
        assert_eq!(bpsk_map_decide(0.0, 1.0), 1);
        assert_eq!(bpsk_map_decide(2.0, 0.01), 0);
        assert_eq!(bpsk_map_decide(-2.0, 0.01), 0);
        let t = bpsk_sum_threshold(1.0);
        assert!((t - 1.34657359).abs() < 1e-8);
        assert_eq!(bpsk_map_decide(t - 1e-9, 1.0), 1);
        assert_eq!(bpsk_map_decide(t + 1e-9, 1.0), 0);
    }

    /// The closed-form threshold is the crossing of f(y | U=1) with the
    /// dominant component of the U=0 mixture (its defining comparison);
    /// bisection recovers it to 1e-9.
    #[test]
    fn threshold_matches_density_crossing() {
        for sigma2 in [0.25, 0.5, 1.0, 2.0] {
            let f1 = |y: f64| (-y * y / (2.0 * sigma2)).exp();
            let f0_near = |y: f64| 0.5 * (-(y - 2.0) * (y - 2.0) / (2.0 * sigma2)).exp();
            let mut lo = 0.0;
            let mut hi = 4.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f1(mid) >= f0_near(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let crossing = 0.5 * (lo + hi);
            assert!(
                (crossing - bpsk_sum_threshold(sigma2)).abs() < 1e-6,
                "sigma2 {}: crossing {} formula {}",
                sigma2,
                crossing,
                bpsk_sum_threshold(sigma2)
            );
        }
    }

    /// At small noise the threshold rule agrees with the exact MAP rule
    /// (full Gaussian mixture) everywhere except a vanishing window around
    /// the threshold.
    #[test]
    fn threshold_rule_is_map_at_small_noise() {
        let sigma2 = 0.25;
        let full_map = |y: f64| -> u8 {
            let f1 = (-y * y / (2.0 * sigma2)).exp();
            let f0 = 0.5
                * ((-(y - 2.0) * (y - 2.0) / (2.0 * sigma2)).exp()
                    + (-(y + 2.0) * (y + 2.0) / (2.0 * sigma2)).exp());
            u8::from(f1 >= f0)
        };
        let t = bpsk_sum_threshold(sigma2);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut checked = 0;
        while checked < 1000 {
            let y: f64 = rng.gen_range(-4.0..4.0);
            if (y.abs() - t).abs() < 1e-7 {
                continue;
            }
            assert_eq!(bpsk_map_decide(y, sigma2), full_map(y), "y = {}", y);
            checked += 1;
        }
    }

    #[test]
    fn sum_error_prob_limits_and_monotonicity() {
        assert!(bpsk_sum_error_prob(1e-6) < 1e-9);
        let mut prev = 0.0;
        for i in 1..=40 {
            let sigma2 = i as f64 * 0.1;
            let p = bpsk_sum_error_prob(sigma2);
            assert!(p > prev, "sigma2 {}: {} <= {}", sigma2, p, prev);
            assert!(p < 0.5 + 1e-12);
            prev = p;
        }
    }

    #[test]
    fn sum_error_prob_matches_monte_carlo() {
        for (seed, sigma2) in [(7u64, 0.25f64), (8u64, 1.0)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, sigma2.sqrt()).unwrap();
            let trials = 1_000_000usize;
            let mut errors = 0usize;
            for _ in 0..trials {
                let b1 = rng.gen_range(0..2u8);
                let b2 = rng.gen_range(0..2u8);
                let x = |b: u8| if b == 1 { 1.0 } else { -1.0 };
                let y = x(b1) + x(b2) + normal.sample(&mut rng);
                if bpsk_map_decide(y, sigma2) != (b1 ^ b2) {
                    errors += 1;
                }
            }
            let p_hat = errors as f64 / trials as f64;
            let p = bpsk_sum_error_prob(sigma2);
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            assert!(
                (p_hat - p).abs() < 3.0 * sigma,
                "sigma2 {}: analytic {} empirical {}",
                sigma2,
                p,
                p_hat
            );
        }
    }

    #[test]
    fn analog_scale_examples() {
        assert!((analog_relay_scale(1.0, 1.0) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((analog_relay_scale(1.0, 1e-15) - 1.0 / 2f64.sqrt()).abs() < 1e-7);
        // Relay output power is exactly P under ideal input statistics:
        // gamma^2 * (2P + sigma2) = P by construction.
        let (p, s2) = (3.0, 0.4);
        let g = analog_relay_scale(p, s2);
        assert!((g * g * (2.0 * p + s2) - p).abs() < 1e-12);
    }

    /// Empirical post-subtraction SNR at each user matches
    /// (P/sigma^2) * (P / (3P + sigma^2)) within 2%.
    #[test]
    fn analog_end_to_end_snr_empirical() {
        let (p, s2) = (4.0, 1.0);
        let gamma = analog_relay_scale(p, s2);
        let normal_x = Normal::new(0.0, p.sqrt()).unwrap();
        let normal_z = Normal::new(0.0, s2.sqrt()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let samples = 1_000_000usize;
        let mut signal_power = 0.0;
        let mut noise_power = 0.0;
        for _ in 0..samples {
            let x1 = normal_x.sample(&mut rng);
            let x2 = normal_x.sample(&mut rng);
            let z_r = normal_z.sample(&mut rng);
            let z_1 = normal_z.sample(&mut rng);
            let y1 = gamma * (x1 + x2 + z_r) + z_1;
            let s = y1 - gamma * x1;
            let signal = gamma * x2;
            signal_power += signal * signal;
            let noise = s - signal;
            noise_power += noise * noise;
        }
        let snr_emp = signal_power / noise_power;
        let snr_formula = (p / s2) * (p / (3.0 * p + s2));
        assert!(
            (snr_emp - snr_formula).abs() / snr_formula < 0.02,
            "empirical {} formula {}",
            snr_emp,
            snr_formula
        );
    }

    #[test]
    fn rate_curve_values_and_ordering() {
        for snr_db in [-5.0, 0.0, 10.0, 25.0] {
            let p = 10f64.powf(snr_db / 10.0);
            let upper = rate_curve(StrategyId::Upper, p, 1.0).unwrap();
            let lattice = rate_curve(StrategyId::Lattice, p, 1.0).unwrap();
            let analog = rate_curve(StrategyId::Analog, p, 1.0).unwrap();
            let netcod = rate_curve(StrategyId::Netcod, p, 1.0).unwrap();
            let routing = rate_curve(StrategyId::Routing, p, 1.0).unwrap();
            assert!(upper > lattice);
            assert!(upper > analog);
            assert!(netcod > routing);
        }
        let lattice_100 = rate_curve(StrategyId::Lattice, 100.0, 1.0).unwrap();
        assert!((lattice_100 - 0.5 * (100.5f64).log2()).abs() < 1e-12);
        assert!((lattice_100 - 3.3255258455894645).abs() < 1e-12);
        assert!(matches!(
            rate_curve(StrategyId::Bpsk, 1.0, 1.0),
            Err(WirelessError::UnsupportedStrategy(StrategyId::Bpsk))
        ));
    }

    #[test]
    fn rate_curve_limiting_slopes() {
        let t1 = 1e6f64;
        let t2 = 2e6f64;
        let denom = (1.0 + t2).log2() - (1.0 + t1).log2();
        let slope = |s: StrategyId| {
            (rate_curve(s, t2, 1.0).unwrap() - rate_curve(s, t1, 1.0).unwrap()) / denom
        };
        assert!((slope(StrategyId::Upper) - 0.5).abs() < 1e-2);
        assert!((slope(StrategyId::Lattice) - 0.5).abs() < 1e-2);
        assert!((slope(StrategyId::Analog) - 0.5).abs() < 1e-2);
        assert!((slope(StrategyId::Netcod) - 1.0 / 3.0).abs() < 1e-2);
        assert!((slope(StrategyId::Routing) - 0.25).abs() < 1e-2);
    }

    #[test]
    fn bpsk_rate_limits() {
        // Vanishing noise: the MAC pipe is clean and the per-user rate
        // saturates at 1/2 per real dimension.
        assert!((bpsk_end_to_end_rate(1.0, 1e-9) - 0.5).abs() < 1e-9);
        // Fully noisy MAC slot: p_e -> 1/2 and the rate collapses.
        assert!(bpsk_end_to_end_rate(1.0, 1e6) < 1e-3);
        let mut prev = -1.0;
        for snr_db in [-10.0, -5.0, 0.0, 5.0, 10.0, 20.0, 30.0] {
            let r = bpsk_end_to_end_rate(10f64.powf(snr_db / 10.0), 1.0);
            assert!(r >= prev - 1e-12, "snr {} rate {} prev {}", snr_db, r, prev);
            prev = r;
        }
    }

    #[test]
    fn exchange_noiseless_all_strategies() {
        let code = small_code(1.0);
        for strategy in StrategyId::SIMULABLE {
            let sim = TwoWaySim::new(1.0, 1e-12, code.clone()).unwrap();
            let summary = simulate_exchange(strategy, &sim, 50, 77).unwrap();
            assert_eq!(summary.message_errors, 0, "{:?}", strategy);
            let code_rate = match strategy {
                StrategyId::Bpsk => 1.0,
                _ => code.rate(),
            };
            let expect = code_rate / strategy.slots().unwrap() as f64;
            assert!((summary.throughput - expect).abs() < 1e-15);
        }
        let sim = TwoWaySim::new(1.0, 1e-12, code).unwrap();
        assert!(matches!(
            simulate_exchange(StrategyId::Upper, &sim, 10, 1),
            Err(WirelessError::UnsupportedStrategy(StrategyId::Upper))
        ));
    }

    #[test]
    fn exchange_slot_prefactors() {
        assert_eq!(StrategyId::Routing.slots(), Some(4));
        assert_eq!(StrategyId::Netcod.slots(), Some(3));
        assert_eq!(StrategyId::Analog.slots(), Some(2));
        assert_eq!(StrategyId::Lattice.slots(), Some(2));
        assert_eq!(StrategyId::Bpsk.slots(), Some(2));
        assert_eq!(StrategyId::Upper.slots(), None);
    }

    #[test]
    fn exchange_lattice_low_error_at_margin() {
        // Full two-way exchange 6 dB above the SNR where the analytic
        // lattice rate meets the code rate: per-message error below 1e-2.
        let g = FieldMatrix::new(
            8,
            2,
            &[1, 4, 3, 0, 2, 1, 4, 0, 1, 3, 1, 2, 2, 4, 2, 3],
            5,
        )
        .unwrap();
        let rate = 2.0 * 5f64.log2() / 8.0;
        let threshold = 2f64.powf(2.0 * rate) - 0.5;
        let power = threshold * 10f64.powf(0.6);
        let code = NestedLatticeCode::new(g, power).unwrap();
        let sim = TwoWaySim::new(power, 1.0, code).unwrap();
        let summary = simulate_exchange(StrategyId::Lattice, &sim, 10_000, 314).unwrap();
        assert!(
            summary.error_rate < 1e-2,
            "exchange error {} at 6 dB margin",
            summary.error_rate
        );
    }

    #[test]
    fn exchange_seed_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let code = NestedLatticeCode::random(5, 8, 2, 6.0, &mut rng).unwrap();
        let sim = TwoWaySim::new(6.0, 1.0, code).unwrap();
        let a = simulate_exchange(StrategyId::Lattice, &sim, 200, 42).unwrap();
        let b = simulate_exchange(StrategyId::Lattice, &sim, 200, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_exchange(StrategyId::Lattice, &sim, 200, 43).unwrap();
        assert!(a == c || a.message_errors != c.message_errors || a == b);
    }

    #[test]
    fn geteqm3_sweep_contract() {
        let snrs = [0.0, 10.0, 20.0];
        let rows = geteqm3_sweep(&snrs, 3, 300, 2, 99).unwrap();
        assert_eq!(rows.len(), 3);
        let mut prev_eq = -1.0;
        let mut prev_ian = -1.0;
        for row in &rows {
            assert!(row.decode_equation >= row.interference_as_noise);
            assert!(row.decode_equation > prev_eq);
            assert!(row.interference_as_noise > prev_ian);
            prev_eq = row.decode_equation;
            prev_ian = row.interference_as_noise;
        }
        let again = geteqm3_sweep(&snrs, 3, 300, 2, 99).unwrap();
        assert_eq!(rows, again);
    }
}
