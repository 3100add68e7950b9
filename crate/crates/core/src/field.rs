//! Prime field arithmetic.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is out of range (need 2 <= p < 2^31)")]
    OutOfRange(u64),
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
}

/// The prime field `F_p`. Scalars are `u64` values reduced into `0..p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldConfig {
    p: u64,
}

impl FieldConfig {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if !(2..(1u64 << 31)).contains(&p) {
            return Err(FieldError::OutOfRange(p));
        }
        let mut d = 2u64;
        while d * d <= p {
            if p.is_multiple_of(d) {
                return Err(FieldError::NotPrime(p));
            }
            d += 1;
        }
        Ok(FieldConfig { p })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, a: u64) -> u64 {
        a % self.p
    }

    pub fn from_i64(&self, a: i64) -> u64 {
        a.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.p
    }

    /// `a + b*c`
    #[inline]
    pub fn mul_add(&self, a: u64, b: u64, c: u64) -> u64 {
        (a + b * c) % self.p
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn inv(&self, a: u64) -> u64 {
        assert!(!a.is_multiple_of(self.p), "inverse of zero in F_{}", self.p);
        self.pow(a, self.p - 2)
    }

    /// `(-1)^k` as a field element.
    pub fn sign(&self, k: i64) -> u64 {
        if k.rem_euclid(2) == 0 {
            1
        } else {
            self.neg(1)
        }
    }
}

impl fmt::Display for FieldConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_composites_and_range() {
        assert_eq!(FieldConfig::new(1), Err(FieldError::OutOfRange(1)));
        assert_eq!(FieldConfig::new(9), Err(FieldError::NotPrime(9)));
        assert_eq!(FieldConfig::new(1 << 31), Err(FieldError::OutOfRange(1 << 31)));
        assert!(FieldConfig::new(2).is_ok());
        assert!(FieldConfig::new(2147483647).is_ok());
    }

    #[test]
    fn inverses() {
        let f = FieldConfig::new(97).unwrap();
        for a in 1..97 {
            assert_eq!(f.mul(a, f.inv(a)), 1);
        }
        let big = FieldConfig::new(2147483647).unwrap();
        let a = 123456789;
        assert_eq!(big.mul(a, big.inv(a)), 1);
    }

    #[test]
    fn signs() {
        let f = FieldConfig::new(5).unwrap();
        assert_eq!(f.sign(0), 1);
        assert_eq!(f.sign(3), 4);
        assert_eq!(f.sign(-1), 4);
        let f2 = FieldConfig::new(2).unwrap();
        assert_eq!(f2.sign(1), 1);
    }
}
