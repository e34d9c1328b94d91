//! Residues mod `m`, characters of `Z/m`, `p`-ary digits and Lucas binomials.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

use num_complex::Complex64;

use crate::{Error, Result};

/// Deterministic trial division.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
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

/// The size `m >= 2` of the alphabet `Z/m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Modulus {
    m: u32,
    prime: bool,
}

impl Modulus {
    pub fn new(m: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidModulus(m as u64));
        }
        Ok(Self {
            m,
            prime: is_prime(m as u64),
        })
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.m
    }

    #[inline]
    pub fn is_prime(self) -> bool {
        self.prime
    }

    /// Returns `p` when the modulus is prime.
    pub fn require_prime(self) -> Result<u32> {
        if self.prime {
            Ok(self.m)
        } else {
            Err(Error::NotPrime(self.m as u64))
        }
    }

    #[inline]
    pub fn reduce(self, v: i64) -> u32 {
        v.rem_euclid(self.m as i64) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        ((a as u64 + b as u64) % self.m as u64) as u32
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        ((a as u64 + self.m as u64 - (b % self.m) as u64) % self.m as u64) as u32
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.m as u64) as u32
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        self.sub(0, a)
    }

    pub fn pow(self, base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.m;
        let mut b = base % self.m;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse, if `a` is a unit.
    pub fn inverse(self, a: u32) -> Option<u32> {
        let (mut r0, mut r1) = (self.m as i64, (a % self.m) as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        if r0 != 1 {
            return None;
        }
        Some(self.reduce(t0))
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z/{}", self.m)
    }
}

/// `exp(2 pi i j / m)`, exact at quarter turns.
pub fn root_of_unity(j: u64, m: u32) -> Complex64 {
    let m = m as u64;
    let j = j % m;
    if (4 * j).is_multiple_of(m) {
        return match 4 * j / m {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let theta = TAU * j as f64 / m as f64;
    Complex64::new(libm::cos(theta), libm::sin(theta))
}

/// Value of the character `a -> exp(2 pi i k a / m)` of `Z/m` at `element`.
pub fn cyclic_char_value(exponent: u32, element: u32, modulus: Modulus) -> Complex64 {
    let m = modulus.get() as u64;
    root_of_unity((exponent as u64 % m) * (element as u64 % m), modulus.get())
}

/// All `m` values of the character with the given exponent.
pub fn character_table(exponent: u32, modulus: Modulus) -> Vec<Complex64> {
    (0..modulus.get())
        .map(|a| cyclic_char_value(exponent, a, modulus))
        .collect()
}

/// Base-`p` digits of an integer, least significant first, with no trailing
/// zero digit stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PAryExpansion {
    base: u64,
    digits: Vec<u32>,
}

impl PAryExpansion {
    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    /// Digit at position `i`; zero past the most significant digit.
    pub fn digit(&self, i: usize) -> u32 {
        self.digits.get(i).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Reconstructs the integer, or `None` on overflow.
    pub fn value(&self) -> Option<u64> {
        self.digits.iter().rev().try_fold(0u64, |acc, &d| {
            acc.checked_mul(self.base)?.checked_add(d as u64)
        })
    }

    /// Positions of the nonzero digits.
    pub fn index_set(&self) -> Vec<usize> {
        self.digits
            .iter()
            .enumerate()
            .filter(|(_, &d)| d != 0)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn p_ary_expansion(mut n: u64, p: u64) -> Result<PAryExpansion> {
    if p < 2 {
        return Err(Error::InvalidBase(p));
    }
    let mut digits = Vec::new();
    while n > 0 {
        digits.push((n % p) as u32);
        n /= p;
    }
    Ok(PAryExpansion { base: p, digits })
}

pub fn index_set(n: u64, p: u64) -> Result<Vec<usize>> {
    Ok(p_ary_expansion(n, p)?.index_set())
}

fn require_prime_base(p: u64) -> Result<()> {
    if p < 2 {
        return Err(Error::InvalidBase(p));
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    Ok(())
}

/// The Lucas set `{k : k << n}` in base `p`, in increasing order.
pub fn lucas_set(n: u64, p: u64) -> Result<Vec<u64>> {
    let expansion = p_ary_expansion(n, p)?;
    let mut out = vec![0u64];
    let mut place = 1u64;
    for &d in expansion.digits() {
        let current = out.len();
        for c in 1..=d as u64 {
            for i in 0..current {
                out.push(out[i] + c * place);
            }
        }
        place = place.saturating_mul(p);
    }
    out.sort_unstable();
    Ok(out)
}

/// Digitwise domination `n << big_n` in base `p`.
pub fn lucas_leq(n: u64, big_n: u64, p: u64) -> Result<bool> {
    require_prime_base(p)?;
    let (mut a, mut b) = (n, big_n);
    while a > 0 {
        if a % p > b % p {
            return Ok(false);
        }
        a /= p;
        b /= p;
    }
    Ok(true)
}

/// Binomial coefficients mod a prime `p`, evaluated digitwise from a table of
/// `C(a, b) mod p` for `a, b < p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LucasTable {
    p: u32,
    table: Vec<u32>,
}

impl LucasTable {
    pub fn new(p: u32) -> Result<Self> {
        require_prime_base(p as u64)?;
        let n = p as usize;
        let mut table = vec![0u32; n * n];
        for a in 0..n {
            table[a * n] = 1;
            for b in 1..=a {
                let above = table[(a - 1) * n + b];
                let left = table[(a - 1) * n + b - 1];
                table[a * n + b] = (above + left) % p;
            }
        }
        Ok(Self { p, table })
    }

    pub fn prime(&self) -> u32 {
        self.p
    }

    /// `C(a, b) mod p` for single digits `a, b < p`.
    #[inline]
    pub fn small(&self, a: u32, b: u32) -> u32 {
        self.table[a as usize * self.p as usize + b as usize]
    }

    /// `C(big_n, n) mod p`.
    pub fn binomial(&self, big_n: u64, n: u64) -> u32 {
        let p = self.p as u64;
        let (mut top, mut bottom) = (big_n, n);
        let mut acc = 1u64;
        while bottom > 0 {
            let (a, b) = ((top % p) as u32, (bottom % p) as u32);
            if b > a {
                return 0;
            }
            acc = acc * self.small(a, b) as u64 % p;
            if acc == 0 {
                return 0;
            }
            top /= p;
            bottom /= p;
        }
        acc as u32
    }

    /// Overwrites one small-table entry. Used by the self-test harness to
    /// check that a corrupted table is caught.
    #[doc(hidden)]
    pub fn with_entry(mut self, a: u32, b: u32, value: u32) -> Self {
        let n = self.p as usize;
        self.table[a as usize * n + b as usize] = value % self.p;
        self
    }
}

pub fn lucas_binomial(big_n: u64, n: u64, p: u64) -> Result<u32> {
    require_prime_base(p)?;
    let p = u32::try_from(p).map_err(|_| Error::InvalidBase(p))?;
    Ok(LucasTable::new(p)?.binomial(big_n, n))
}

/// Smallest `k` with `p^k >= x` (zero for `x <= 1`).
pub fn ceil_log(x: u128, p: u64) -> u32 {
    let mut k = 0;
    let mut power = 1u128;
    while power < x {
        power = power.saturating_mul(p as u128);
        k += 1;
    }
    k
}

/// First digit position past which a sum of `count` integers, each with no
/// nonzero digit at or above `cutoff`, is guaranteed to vanish:
/// `cutoff + ceil(log_p count)`.
pub fn carry_spill_bound(count: u64, cutoff: u32, p: u64) -> Result<u32> {
    if p < 2 {
        return Err(Error::InvalidBase(p));
    }
    Ok(cutoff + ceil_log(count as u128, p))
}
