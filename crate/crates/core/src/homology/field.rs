use serde::{Deserialize, Serialize};

use super::HomologyError;

/// A prime field F_q with elements stored as reduced `u32` residues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    q: u32,
}

impl FieldSpec {
    pub fn new(q: u32) -> Result<Self, HomologyError> {
        if !is_prime(q) || q > (1 << 16) {
            return Err(HomologyError::NotPrime(q));
        }
        Ok(Self { q })
    }

    pub fn q(self) -> u32 {
        self.q
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.q as u64) as u32
    }

    pub fn pow(self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(self, a: u32) -> u32 {
        assert!(a != 0, "inverse of zero in F_{}", self.q);
        self.pow(a, (self.q - 2) as u64)
    }

    pub fn from_i64(self, v: i64) -> u32 {
        v.rem_euclid(self.q as i64) as u32
    }

    /// The residue as a signed representative in (-q/2, q/2].
    pub fn to_signed(self, a: u32) -> i64 {
        let a = a as i64;
        let q = self.q as i64;
        if a > q / 2 {
            a - q
        } else {
            a
        }
    }
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_composites() {
        assert!(FieldSpec::new(4).is_err());
        assert!(FieldSpec::new(1).is_err());
        assert!(FieldSpec::new(0).is_err());
        assert!(FieldSpec::new(7).is_ok());
    }

    #[test]
    fn inverses_are_inverses() {
        for q in [2, 3, 5, 7, 11, 101] {
            let f = FieldSpec::new(q).unwrap();
            for a in 1..q {
                assert_eq!(f.mul(a, f.inv(a)), 1);
            }
        }
    }

    #[test]
    fn signed_residues() {
        let f = FieldSpec::new(5).unwrap();
        assert_eq!(f.from_i64(-1), 4);
        assert_eq!(f.to_signed(4), -1);
        assert_eq!(f.to_signed(2), 2);
    }
}
