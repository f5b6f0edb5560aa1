//! Prime-field arithmetic over F_q and message vectors.
//!
//! A database message is an element of the extension field F_{q^m}. Every
//! protocol in this crate applies only F_q-scalar coefficients to messages,
//! so a message is represented as its coordinate vector: `m` elements of
//! F_q acted on componentwise. No irreducible polynomial is ever needed.
//!
//! All values are immutable after construction and all operations are pure,
//! so everything here is safe to share across threads.

use crate::error::{Error, Result};

/// Field parameters: a prime modulus `q` and the extension degree `m`
/// (symbols per message). One message carries `m * log2(q)` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldParams {
    q: u64,
    m: usize,
}

impl FieldParams {
    /// Validates that `q` is prime (deterministic trial division) and `m >= 1`.
    pub fn new(q: u64, m: usize) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        if m == 0 {
            return Err(Error::InvalidInstance("m must be >= 1".into()));
        }
        Ok(FieldParams { q, m })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Entropy of one message in bits: L = m * log2(q).
    pub fn entropy_bits(&self) -> f64 {
        self.m as f64 * (self.q as f64).log2()
    }

    /// A field element of this field, reduced mod q.
    pub fn elem(&self, value: u64) -> Fq {
        Fq {
            value: value % self.q,
            q: self.q,
        }
    }

    /// The all-zero message of this field.
    pub fn zero_message(&self) -> Message {
        Message {
            coords: vec![self.elem(0); self.m],
        }
    }

    /// Builds a message from raw coordinates; values are reduced mod q.
    pub fn message(&self, coords: &[u64]) -> Result<Message> {
        if coords.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "message needs {} coordinates, got {}",
                self.m,
                coords.len()
            )));
        }
        Ok(Message {
            coords: coords.iter().map(|&v| self.elem(v)).collect(),
        })
    }
}

/// Deterministic primality test by trial division. The toolkit operates at
/// desk scale (q up to a few thousand), where this is instant.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// An element of F_q. Carries its modulus so that values from different
/// fields can never be combined silently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fq {
    value: u64,
    q: u64,
}

impl Fq {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn check_same_field(&self, rhs: &Fq) -> Result<()> {
        if self.q != rhs.q {
            return Err(Error::FieldMismatch {
                left: self.q,
                right: rhs.q,
            });
        }
        Ok(())
    }

    pub fn add(&self, rhs: &Fq) -> Result<Fq> {
        self.check_same_field(rhs)?;
        Ok(Fq {
            value: mod_add(self.value, rhs.value, self.q),
            q: self.q,
        })
    }

    pub fn sub(&self, rhs: &Fq) -> Result<Fq> {
        self.check_same_field(rhs)?;
        Ok(Fq {
            value: mod_sub(self.value, rhs.value, self.q),
            q: self.q,
        })
    }

    pub fn mul(&self, rhs: &Fq) -> Result<Fq> {
        self.check_same_field(rhs)?;
        Ok(Fq {
            value: mod_mul(self.value, rhs.value, self.q),
            q: self.q,
        })
    }

    /// Multiplicative inverse; zero has none.
    pub fn inv(&self) -> Result<Fq> {
        if self.value == 0 {
            return Err(Error::InversionOfZero { q: self.q });
        }
        Ok(Fq {
            value: mod_inv(self.value, self.q),
            q: self.q,
        })
    }

    /// Non-negative integer power, with the convention 0^0 = 1. The
    /// convention makes omega = 0 a legal evaluation point: the first
    /// Vandermonde row is then an unweighted sum.
    pub fn pow(&self, exp: u64) -> Fq {
        Fq {
            value: mod_pow(self.value, exp, self.q),
            q: self.q,
        }
    }
}

impl std::fmt::Display for Fq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value)
    }
}

// Raw modular helpers on u64 values. Hot paths (Gaussian elimination) use
// these directly against a single modulus held by the matrix.

pub(crate) fn mod_add(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 + b as u128) % q as u128) as u64
}

pub(crate) fn mod_sub(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 + q as u128 - b as u128) % q as u128) as u64
}

pub(crate) fn mod_mul(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

/// 0^0 = 1 by convention.
pub(crate) fn mod_pow(mut base: u64, mut exp: u64, q: u64) -> u64 {
    let mut acc: u64 = 1 % q;
    base %= q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mod_mul(acc, base, q);
        }
        base = mod_mul(base, base, q);
        exp >>= 1;
    }
    acc
}

/// Inverse by Fermat: a^(q-2) mod q. Caller guarantees a != 0 mod q.
pub(crate) fn mod_inv(a: u64, q: u64) -> u64 {
    debug_assert!(!a.is_multiple_of(q));
    mod_pow(a, q - 2, q)
}

/// One database message: a length-m coordinate vector over F_q.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    coords: Vec<Fq>,
}

impl Message {
    /// Number of F_q coordinates (the extension degree m).
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[Fq] {
        &self.coords
    }

    pub fn values(&self) -> Vec<u64> {
        self.coords.iter().map(|c| c.value()).collect()
    }

    fn check_compatible(&self, rhs: &Message) -> Result<()> {
        if self.coords.len() != rhs.coords.len() {
            return Err(Error::DimensionMismatch(format!(
                "message lengths differ: {} vs {}",
                self.coords.len(),
                rhs.coords.len()
            )));
        }
        if let (Some(a), Some(b)) = (self.coords.first(), rhs.coords.first()) {
            a.check_same_field(b)?;
        }
        Ok(())
    }

    pub fn add(&self, rhs: &Message) -> Result<Message> {
        self.check_compatible(rhs)?;
        let coords = self
            .coords
            .iter()
            .zip(&rhs.coords)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(Message { coords })
    }

    pub fn sub(&self, rhs: &Message) -> Result<Message> {
        self.check_compatible(rhs)?;
        let coords = self
            .coords
            .iter()
            .zip(&rhs.coords)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(Message { coords })
    }

    /// Componentwise scalar action of F_q on the message.
    pub fn scale(&self, c: &Fq) -> Result<Message> {
        let coords = self
            .coords
            .iter()
            .map(|a| a.mul(c))
            .collect::<Result<_>>()?;
        Ok(Message { coords })
    }
}

/// Computes the F_q-linear combination sum_j coeffs[j] * msgs[j],
/// componentwise. This is the single primitive behind every coded symbol
/// the server produces.
pub fn message_combine(coeffs: &[Fq], msgs: &[Message]) -> Result<Message> {
    if coeffs.len() != msgs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients vs {} messages",
            coeffs.len(),
            msgs.len()
        )));
    }
    if coeffs.is_empty() {
        return Err(Error::DimensionMismatch(
            "message_combine needs at least one term".into(),
        ));
    }
    let mut acc = msgs[0].scale(&coeffs[0])?;
    for (c, msg) in coeffs.iter().zip(msgs).skip(1) {
        acc = acc.add(&msg.scale(c)?)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(q: u64, m: usize) -> FieldParams {
        FieldParams::new(q, m).unwrap()
    }

    #[test]
    fn field_params_rejects_composites_and_zero_m() {
        assert!(matches!(FieldParams::new(4, 1), Err(Error::NotPrime(4))));
        assert!(matches!(FieldParams::new(1, 1), Err(Error::NotPrime(1))));
        assert!(FieldParams::new(2, 1).is_ok());
        assert!(FieldParams::new(5, 0).is_err());
    }

    #[test]
    fn basic_arithmetic_mod_5() {
        let f = fp(5, 1);
        assert_eq!(f.elem(3).add(&f.elem(4)).unwrap(), f.elem(2));
        assert_eq!(f.elem(3).inv().unwrap(), f.elem(2)); // 3 * 2 = 6 = 1 mod 5
        assert_eq!(f.elem(0).pow(0), f.elem(1)); // declared convention
        assert!(matches!(
            f.elem(0).inv(),
            Err(Error::InversionOfZero { q: 5 })
        ));
    }

    #[test]
    fn mismatched_moduli_are_rejected() {
        let a = fp(5, 1).elem(3);
        let b = fp(7, 1).elem(3);
        assert!(matches!(
            a.add(&b),
            Err(Error::FieldMismatch { left: 5, right: 7 })
        ));
    }

    #[test]
    fn field_axioms_exhaustive_small_q() {
        for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
            let f = fp(q, 1);
            for a in 0..q {
                let fa = f.elem(a);
                if a != 0 {
                    assert_eq!(fa.mul(&fa.inv().unwrap()).unwrap(), f.elem(1));
                }
                for b in 0..q {
                    let fb = f.elem(b);
                    assert_eq!(fa.add(&fb).unwrap(), fb.add(&fa).unwrap());
                    assert_eq!(fa.mul(&fb).unwrap(), fb.mul(&fa).unwrap());
                    for c in 0..q {
                        let fc = f.elem(c);
                        assert_eq!(
                            fa.add(&fb).unwrap().add(&fc).unwrap(),
                            fa.add(&fb.add(&fc).unwrap()).unwrap()
                        );
                        assert_eq!(
                            fa.mul(&fb).unwrap().mul(&fc).unwrap(),
                            fa.mul(&fb.mul(&fc).unwrap()).unwrap()
                        );
                    }
                }
            }
        }
    }

    /// Brute-force scalar oracle: evaluate the combination with plain
    /// integer arithmetic, reducing at the end.
    fn combine_oracle(q: u64, coeffs: &[u64], msgs: &[Vec<u64>]) -> Vec<u64> {
        let m = msgs[0].len();
        let mut out = vec![0u128; m];
        for (c, msg) in coeffs.iter().zip(msgs) {
            for (slot, v) in out.iter_mut().zip(msg) {
                *slot += *c as u128 * *v as u128;
            }
        }
        out.into_iter().map(|v| (v % q as u128) as u64).collect()
    }

    #[test]
    fn message_combine_examples() {
        let f = fp(5, 1);
        let msgs = vec![
            f.message(&[4]).unwrap(),
            f.message(&[1]).unwrap(),
            f.message(&[3]).unwrap(),
        ];
        let ones = vec![f.elem(1); 3];
        assert_eq!(message_combine(&ones, &msgs).unwrap().values(), vec![3]);

        let f2 = fp(5, 2);
        let msg = vec![f2.message(&[2, 3]).unwrap()];
        assert_eq!(
            message_combine(&[f2.elem(0)], &msg).unwrap().values(),
            vec![0, 0]
        );

        // derived via the brute-force oracle: 1*1 + 2*2 = 5 = 0 mod 5
        let msgs = vec![f.message(&[1]).unwrap(), f.message(&[2]).unwrap()];
        let coeffs = vec![f.elem(1), f.elem(2)];
        let expect = combine_oracle(5, &[1, 2], &[vec![1], vec![2]]);
        assert_eq!(expect, vec![0]);
        assert_eq!(message_combine(&coeffs, &msgs).unwrap().values(), expect);
    }

    #[test]
    fn message_combine_length_mismatch() {
        let f = fp(5, 1);
        let msgs = vec![f.message(&[1]).unwrap()];
        let coeffs = vec![f.elem(1), f.elem(2)];
        assert!(matches!(
            message_combine(&coeffs, &msgs),
            Err(Error::DimensionMismatch(_))
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// message_combine is linear in each message argument.
            #[test]
            fn combine_is_linear(
                seed_x in proptest::collection::vec(0u64..5, 3),
                seed_y in proptest::collection::vec(0u64..5, 3),
                coeffs in proptest::collection::vec(0u64..5, 2),
            ) {
                let f = fp(5, 3);
                let x = f.message(&seed_x).unwrap();
                let y = f.message(&seed_y).unwrap();
                let c: Vec<Fq> = coeffs.iter().map(|&v| f.elem(v)).collect();
                let z = f.zero_message();

                let lhs = message_combine(&c, &[x.add(&y).unwrap(), z.clone()]).unwrap();
                let rhs = message_combine(&c, &[x.clone(), z.clone()]).unwrap()
                    .add(&message_combine(&c, &[y, z]).unwrap())
                    .unwrap();
                prop_assert_eq!(lhs, rhs);
            }
        }
    }
}
