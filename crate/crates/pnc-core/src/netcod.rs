//! Linear network coding above the physical layer: packets, relay linear
//! combining, destination collection and solving, and random coefficient
//! generation.
//!
//! Coefficients travel with payloads inside [`Combination`] headers so a
//! destination can assemble the coefficient matrix without out-of-band
//! signalling. The wire format is fixed: a `q,k,L` header followed by the
//! coefficients and then the payload, each symbol little-endian 16-bit.

use rand::Rng;

use crate::galois::{self, FieldError, FieldMatrix, FieldVector};

/// A length-k message packet over F_q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    payload: FieldVector,
}

impl Packet {
    pub fn new(payload: FieldVector) -> Self {
        Self { payload }
    }

    pub fn payload(&self) -> &FieldVector {
        &self.payload
    }

    pub fn len(&self) -> usize {
        self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }

    pub fn modulus(&self) -> u16 {
        self.payload.modulus()
    }
}

/// A coded packet: the coefficient vector a_1..a_L and the combined payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Combination {
    coeffs: FieldVector,
    payload: FieldVector,
}

impl Combination {
    pub fn coeffs(&self) -> &FieldVector {
        &self.coeffs
    }

    pub fn payload(&self) -> &FieldVector {
        &self.payload
    }

    /// Serializes as `q, k, L` then L coefficients then k payload symbols,
    /// every field a little-endian u16.
    pub fn to_bytes(&self) -> Vec<u8> {
        let q = self.coeffs.modulus();
        let k = self.payload.len() as u16;
        let l = self.coeffs.len() as u16;
        let mut out = Vec::with_capacity(2 * (3 + self.coeffs.len() + self.payload.len()));
        for v in [q, k, l] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &c in self.coeffs.values() {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for &p in self.payload.values() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    /// Parses the wire format produced by [`Combination::to_bytes`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FieldError> {
        let word = |i: usize| -> Result<u16, FieldError> {
            let lo = bytes.get(2 * i).copied();
            let hi = bytes.get(2 * i + 1).copied();
            match (lo, hi) {
                (Some(lo), Some(hi)) => Ok(u16::from_le_bytes([lo, hi])),
                _ => Err(FieldError::DimensionMismatch {
                    expected: 2 * (i + 1),
                    got: bytes.len(),
                }),
            }
        };
        let q = word(0)? as u32;
        let k = word(1)? as usize;
        let l = word(2)? as usize;
        let expected = 2 * (3 + l + k);
        if bytes.len() != expected {
            return Err(FieldError::DimensionMismatch {
                expected,
                got: bytes.len(),
            });
        }
        let coeffs: Vec<u32> = (0..l).map(|i| word(3 + i).map(u32::from)).collect::<Result<_, _>>()?;
        let payload: Vec<u32> = (0..k)
            .map(|i| word(3 + l + i).map(u32::from))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            coeffs: FieldVector::new(&coeffs, q)?,
            payload: FieldVector::new(&payload, q)?,
        })
    }
}

/// The combinations collected at a destination: row m of `coeffs` describes
/// row m of `payloads`.
#[derive(Debug, Clone)]
pub struct CollectedSystem {
    coeffs: FieldMatrix,
    payloads: FieldMatrix,
}

impl CollectedSystem {
    /// Stacks received combinations. Duplicate or dependent rows are kept;
    /// solvability is decided later, never by silent deduplication.
    pub fn collect(received: &[Combination]) -> Result<Self, FieldError> {
        let coeff_rows: Vec<FieldVector> = received.iter().map(|c| c.coeffs.clone()).collect();
        let payload_rows: Vec<FieldVector> = received.iter().map(|c| c.payload.clone()).collect();
        Ok(Self {
            coeffs: FieldMatrix::from_rows(&coeff_rows)?,
            payloads: FieldMatrix::from_rows(&payload_rows)?,
        })
    }

    pub fn coeffs(&self) -> &FieldMatrix {
        &self.coeffs
    }

    pub fn payloads(&self) -> &FieldMatrix {
        &self.payloads
    }
}

/// Forms the linear combination `u = a_1 w_1 + ... + a_L w_L` over F_q.
pub fn relay_combine(packets: &[Packet], coeffs: &FieldVector) -> Result<Combination, FieldError> {
    if packets.len() != coeffs.len() {
        return Err(FieldError::DimensionMismatch {
            expected: coeffs.len(),
            got: packets.len(),
        });
    }
    let first = packets.first().ok_or(FieldError::Degenerate { rows: 0, cols: 1 })?;
    let mut acc = FieldVector::zero(first.len(), first.modulus() as u32)?;
    for (i, p) in packets.iter().enumerate() {
        let scaled = p.payload.scale(&coeffs.get(i)?)?;
        acc = acc.add(&scaled)?;
    }
    Ok(Combination {
        coeffs: coeffs.clone(),
        payload: acc,
    })
}

/// The routing special case: forward packet `index` with a unit coefficient
/// vector.
pub fn route(packets: &[Packet], index: usize) -> Result<Combination, FieldError> {
    let p = packets.get(index).ok_or(FieldError::IndexOutOfRange {
        index,
        len: packets.len(),
    })?;
    let q = p.modulus() as u32;
    let mut coeffs = vec![0u32; packets.len()];
    coeffs[index] = 1;
    Ok(Combination {
        coeffs: FieldVector::new(&coeffs, q)?,
        payload: p.payload.clone(),
    })
}

/// The destination can solve iff the coefficient matrix has full column rank.
pub fn is_solvable(sys: &CollectedSystem) -> bool {
    sys.coeffs.rank() == sys.coeffs.cols()
}

/// Recovers the original L packets from a solvable system.
pub fn recover_messages(sys: &CollectedSystem) -> Result<Vec<Packet>, FieldError> {
    let w = galois::solve(&sys.coeffs, &sys.payloads)?;
    (0..w.rows())
        .map(|i| Ok(Packet::new(w.row(i)?)))
        .collect()
}

/// Draws i.i.d. uniform coefficients for a relay.
pub fn random_coefficients<R: Rng + ?Sized>(
    l: usize,
    q: u32,
    rng: &mut R,
) -> Result<FieldVector, FieldError> {
    galois::random_vector(l, q, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galois::random_matrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn packet(vals: &[u32], q: u32) -> Packet {
        Packet::new(FieldVector::new(vals, q).unwrap())
    }

    #[test]
    fn combine_zero_coeffs_gives_zero_packet() {
        let ps = [packet(&[1, 2, 3], 5), packet(&[4, 0, 1], 5)];
        let c = relay_combine(&ps, &FieldVector::new(&[0, 0], 5).unwrap()).unwrap();
        assert_eq!(c.payload().values(), &[0, 0, 0]);
    }

    #[test]
    fn combine_xor_case() {
        let ps = [packet(&[1, 0, 1], 2), packet(&[0, 0, 1], 2)];
        let c = relay_combine(&ps, &FieldVector::new(&[1, 1], 2).unwrap()).unwrap();
        assert_eq!(c.payload().values(), &[1, 0, 0]);
    }

    #[test]
    fn combine_f5_hand_example() {
        // 2*2 + 4*3 = 16 = 1 mod 5
        let ps = [packet(&[2], 5), packet(&[3], 5)];
        let c = relay_combine(&ps, &FieldVector::new(&[2, 4], 5).unwrap()).unwrap();
        assert_eq!(c.payload().values(), &[1]);
    }

    #[test]
    fn route_unit_vectors() {
        let ps = [packet(&[1, 2], 3), packet(&[0, 1], 3)];
        let c = route(&ps, 0).unwrap();
        assert_eq!(c.coeffs().values(), &[1, 0]);
        assert_eq!(c.payload(), ps[0].payload());
        let c = route(&ps, 1).unwrap();
        assert_eq!(c.coeffs().values(), &[0, 1]);
        assert_eq!(c.payload(), ps[1].payload());
        assert!(matches!(
            route(&ps, 2),
            Err(FieldError::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn solvability_follows_rank() {
        let ps = [packet(&[1], 3), packet(&[2], 3)];
        let c1 = relay_combine(&ps, &FieldVector::new(&[1, 1], 3).unwrap()).unwrap();
        let c2 = relay_combine(&ps, &FieldVector::new(&[1, 2], 3).unwrap()).unwrap();
        let c_dep = relay_combine(&ps, &FieldVector::new(&[2, 2], 3).unwrap()).unwrap();
        let good = CollectedSystem::collect(&[c1.clone(), c2]).unwrap();
        assert!(is_solvable(&good));
        let bad = CollectedSystem::collect(&[c1, c_dep]).unwrap();
        assert!(!is_solvable(&bad));
        assert!(recover_messages(&bad).is_err());
    }

    #[test]
    fn recover_round_trip_random() {
        // Random full-rank coefficient sets recover the originals exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let primes = [2u32, 3, 5];
        let mut done = 0;
        while done < 1000 {
            let q = primes[done % primes.len()];
            let l = rng.gen_range(1..=4usize);
            let k = rng.gen_range(1..=8usize);
            let packets: Vec<Packet> = (0..l)
                .map(|_| Packet::new(crate::galois::random_vector(k, q, &mut rng).unwrap()))
                .collect();
            let coeff_mat = random_matrix(l, l, q, &mut rng).unwrap();
            if coeff_mat.rank() < l {
                continue;
            }
            let received: Vec<Combination> = (0..l)
                .map(|m| relay_combine(&packets, &coeff_mat.row(m).unwrap()).unwrap())
                .collect();
            let sys = CollectedSystem::collect(&received).unwrap();
            assert!(is_solvable(&sys));
            assert_eq!(recover_messages(&sys).unwrap(), packets);
            done += 1;
        }
    }

    #[test]
    fn random_solvability_increases_with_field_size() {
        // Empirical full-rank probability for random LxL matrices grows
        // with q; compare q=2 against q=5 over 10^4 draws.
        let l = 3usize;
        let draws = 10_000;
        let full = |q: u32, seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..draws)
                .filter(|_| random_matrix(l, l, q, &mut rng).unwrap().rank() == l)
                .count()
        };
        let q2 = full(2, 11);
        let q5 = full(5, 11);
        assert!(q5 > q2, "q=5 count {} should exceed q=2 count {}", q5, q2);
    }

    #[test]
    fn random_coefficients_contract() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            random_coefficients(4, 7, &mut a).unwrap(),
            random_coefficients(4, 7, &mut b).unwrap()
        );
        assert!(matches!(
            random_coefficients(0, 7, &mut a),
            Err(FieldError::Degenerate { .. })
        ));
        // Uniformity: chi-square style 3-sigma bound per symbol.
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let q = 3u32;
        let n = 30_000usize;
        let mut counts = vec![0usize; q as usize];
        for _ in 0..n / 10 {
            let v = random_coefficients(10, q, &mut rng).unwrap();
            for &x in v.values() {
                counts[x as usize] += 1;
            }
        }
        let p = 1.0 / q as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts {
            assert!((c as f64 - n as f64 * p).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn wire_format_fixed_example() {
        let c = Combination {
            coeffs: FieldVector::new(&[1, 2], 5).unwrap(),
            payload: FieldVector::new(&[3, 4], 5).unwrap(),
        };
        let bytes = c.to_bytes();
        assert_eq!(
            bytes,
            vec![5, 0, 2, 0, 2, 0, 1, 0, 2, 0, 3, 0, 4, 0],
            "header q,k,L then coefficients then payload, LE u16 each"
        );
        assert_eq!(Combination::from_bytes(&bytes).unwrap(), c);
    }

    #[test]
    fn wire_format_rejects_truncation() {
        let c = Combination {
            coeffs: FieldVector::new(&[1], 3).unwrap(),
            payload: FieldVector::new(&[2, 0], 3).unwrap(),
        };
        let bytes = c.to_bytes();
        assert!(Combination::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(Combination::from_bytes(&[]).is_err());
    }

    proptest! {
        #[test]
        fn wire_format_round_trip(q in prop::sample::select(vec![2u32, 3, 5, 7, 11, 251]),
                                  l in 1usize..6, k in 1usize..9, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coeffs = crate::galois::random_vector(l, q, &mut rng).unwrap();
            let payload = crate::galois::random_vector(k, q, &mut rng).unwrap();
            let c = Combination { coeffs, payload };
            prop_assert_eq!(Combination::from_bytes(&c.to_bytes()).unwrap(), c);
        }
    }
}
