//! Arithmetic in GF(2^q) for network-coding coefficients.
//!
//! Elements are polynomials over GF(2) of degree `< q`, stored as bitmasks.
//! Addition is XOR; multiplication is carry-less multiplication reduced modulo
//! an irreducible polynomial of degree `q`. A [`FieldContext`] owns log/antilog
//! tables built against a generator found at construction, so every irreducible
//! reduction polynomial works, primitive or not (the AES polynomial used for
//! `q = 8` is irreducible but `x` does not generate its multiplicative group).
//!
//! Two APIs are offered. [`FieldElement`] values remember which field they came
//! from and the checked operations on [`FieldContext`] reject mixed-field
//! arguments. The `*_symbol` methods and [`FieldContext::axpy`] work on bare
//! `u16` symbols and are what the matrix code uses on hot paths.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use thiserror::Error;

/// Largest supported exponent. Keeps every symbol in a `u16` and the tables small.
pub const MAX_EXPONENT: u8 = 16;

/// Fixed reduction polynomial for each exponent `1..=16`, indexed by `q - 1`.
///
/// `q = 8` uses the AES polynomial `x^8 + x^4 + x^3 + x + 1`.
pub const DEFAULT_POLYNOMIALS: [u32; 16] = [
    0x3,     // x + 1
    0x7,     // x^2 + x + 1
    0xB,     // x^3 + x + 1
    0x13,    // x^4 + x + 1
    0x25,    // x^5 + x^2 + 1
    0x43,    // x^6 + x + 1
    0x89,    // x^7 + x^3 + 1
    0x11B,   // x^8 + x^4 + x^3 + x + 1
    0x211,   // x^9 + x^4 + 1
    0x409,   // x^10 + x^3 + 1
    0x805,   // x^11 + x^2 + 1
    0x1053,  // x^12 + x^6 + x^4 + x + 1
    0x201B,  // x^13 + x^4 + x^3 + x + 1
    0x4443,  // x^14 + x^10 + x^6 + x + 1
    0x8003,  // x^15 + x + 1
    0x1100B, // x^16 + x^12 + x^3 + x + 1
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("field exponent {0} outside 1..=16")]
    InvalidExponent(u8),
    #[error("reduction polynomial {poly:#x} does not have degree {exponent}")]
    WrongDegree { poly: u32, exponent: u8 },
    #[error("reduction polynomial {0:#x} is reducible over GF(2)")]
    Reducible(u32),
    #[error("value {value:#x} is not an element of GF(2^{exponent})")]
    ValueOutOfRange { value: u32, exponent: u8 },
    #[error("operands belong to different fields")]
    ContextMismatch,
    #[error("zero has no inverse")]
    ZeroInverse,
}

/// Identity of a field: exponent plus reduction polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldId {
    pub exponent: u8,
    pub poly: u32,
}

/// An element of a specific GF(2^q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u16,
    field: FieldId,
}

impl FieldElement {
    pub fn value(self) -> u16 {
        self.value
    }

    pub fn field(self) -> FieldId {
        self.field
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.value)
    }
}

#[derive(Debug)]
struct Tables {
    id: FieldId,
    /// `exp[k] = g^k`, stored twice over so `log a + log b` never needs a modulus.
    exp: Vec<u16>,
    /// `log[a]` for `a != 0`; `log[0]` is unused.
    log: Vec<u32>,
}

/// Parameters and lookup tables of GF(2^q). Cheap to clone; immutable.
#[derive(Debug, Clone)]
pub struct FieldContext {
    tables: Arc<Tables>,
}

impl PartialEq for FieldContext {
    fn eq(&self, other: &Self) -> bool {
        self.tables.id == other.tables.id
    }
}

impl Eq for FieldContext {}

impl FieldContext {
    /// The field GF(2^exponent) with its default reduction polynomial.
    pub fn new(exponent: u8) -> Result<Self, FieldError> {
        if !(1..=MAX_EXPONENT).contains(&exponent) {
            return Err(FieldError::InvalidExponent(exponent));
        }
        Self::with_polynomial(exponent, DEFAULT_POLYNOMIALS[exponent as usize - 1])
    }

    /// The field GF(2^exponent) reduced modulo `poly`, which must be
    /// irreducible of degree exactly `exponent`.
    pub fn with_polynomial(exponent: u8, poly: u32) -> Result<Self, FieldError> {
        if !(1..=MAX_EXPONENT).contains(&exponent) {
            return Err(FieldError::InvalidExponent(exponent));
        }
        if poly_degree(poly as u64) != Some(exponent as u32) {
            return Err(FieldError::WrongDegree { poly, exponent });
        }
        if !is_irreducible(poly as u64) {
            return Err(FieldError::Reducible(poly));
        }
        let id = FieldId { exponent, poly };
        Ok(Self {
            tables: Arc::new(build_tables(id)),
        })
    }

    pub fn exponent(&self) -> u8 {
        self.tables.id.exponent
    }

    /// Field size `Q = 2^q`.
    pub fn size(&self) -> u32 {
        1 << self.exponent()
    }

    pub fn reduction_poly(&self) -> u32 {
        self.tables.id.poly
    }

    pub fn id(&self) -> FieldId {
        self.tables.id
    }

    fn mask(&self) -> u32 {
        self.size() - 1
    }

    pub fn element(&self, value: u32) -> Result<FieldElement, FieldError> {
        if value > self.mask() {
            return Err(FieldError::ValueOutOfRange {
                value,
                exponent: self.exponent(),
            });
        }
        Ok(FieldElement {
            value: value as u16,
            field: self.id(),
        })
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            value: 0,
            field: self.id(),
        }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement {
            value: 1,
            field: self.id(),
        }
    }

    /// Every element of the field in increasing value order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.size()).map(move |v| FieldElement {
            value: v as u16,
            field: self.id(),
        })
    }

    fn check(&self, a: FieldElement) -> Result<(), FieldError> {
        if a.field != self.id() {
            return Err(FieldError::ContextMismatch);
        }
        Ok(())
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a)?;
        self.check(b)?;
        Ok(FieldElement {
            value: a.value ^ b.value,
            field: self.id(),
        })
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a)?;
        self.check(b)?;
        Ok(FieldElement {
            value: self.mul_symbols(a.value, b.value),
            field: self.id(),
        })
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a)?;
        let value = self.inv_symbol(a.value).ok_or(FieldError::ZeroInverse)?;
        Ok(FieldElement {
            value,
            field: self.id(),
        })
    }

    /// A uniformly random element, zero included.
    pub fn random_element<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement {
            value: self.random_symbol(rng),
            field: self.id(),
        }
    }

    /// Uniform symbol in `0..Q`. `Q` is a power of two, so masking is exact.
    #[inline]
    pub fn random_symbol<R: RngCore + ?Sized>(&self, rng: &mut R) -> u16 {
        (rng.next_u32() & self.mask()) as u16
    }

    #[inline]
    pub fn mul_symbols(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        let t = &self.tables;
        t.exp[(t.log[a as usize] + t.log[b as usize]) as usize]
    }

    /// Inverse of a nonzero symbol; `None` for zero.
    pub fn inv_symbol(&self, a: u16) -> Option<u16> {
        if a == 0 {
            return None;
        }
        let t = &self.tables;
        let order = self.size() - 1;
        let l = t.log[a as usize];
        Some(t.exp[((order - l) % order) as usize])
    }

    /// `dst[j] += c * src[j]` for every `j`.
    #[inline]
    pub fn axpy(&self, dst: &mut [u16], c: u16, src: &[u16]) {
        debug_assert_eq!(dst.len(), src.len());
        if c == 0 {
            return;
        }
        if c == 1 {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d ^= s;
            }
            return;
        }
        let t = &self.tables;
        let lc = t.log[c as usize];
        for (d, &s) in dst.iter_mut().zip(src) {
            if s != 0 {
                *d ^= t.exp[(t.log[s as usize] + lc) as usize];
            }
        }
    }

    /// `row[j] *= c` for every `j`.
    pub fn scale(&self, row: &mut [u16], c: u16) {
        for x in row.iter_mut() {
            *x = self.mul_symbols(*x, c);
        }
    }
}

/// Carry-less product of `a` and `b` reduced modulo `poly` (degree `q`).
///
/// Bit-serial; used to build the tables and as a slow reference.
pub fn clmul_reduce(a: u16, b: u16, poly: u32, q: u8) -> u16 {
    let top = 1u32 << q;
    let mut a = a as u32;
    let mut b = b as u32;
    let mut acc = 0u32;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & top != 0 {
            a ^= poly;
        }
    }
    acc as u16
}

fn build_tables(id: FieldId) -> Tables {
    let q = id.exponent;
    let order = (1u32 << q) - 1;
    let generator = (1..=order)
        .map(|g| g as u16)
        .find(|&g| multiplicative_order(g, id.poly, q) == order)
        .expect("the multiplicative group of a finite field is cyclic");

    let mut exp = vec![0u16; 2 * order as usize];
    let mut log = vec![0u32; order as usize + 1];
    let mut x = 1u16;
    for k in 0..order {
        exp[k as usize] = x;
        exp[(k + order) as usize] = x;
        log[x as usize] = k;
        x = clmul_reduce(x, generator, id.poly, q);
    }
    Tables { id, exp, log }
}

fn multiplicative_order(g: u16, poly: u32, q: u8) -> u32 {
    let mut x = g;
    let mut k = 1;
    while x != 1 {
        x = clmul_reduce(x, g, poly, q);
        k += 1;
        if k > (1u32 << q) {
            // g generates nothing useful; only reachable with a reducible modulus
            return 0;
        }
    }
    k
}

fn poly_degree(p: u64) -> Option<u32> {
    (p != 0).then(|| 63 - p.leading_zeros())
}

/// Remainder of GF(2) polynomial division.
fn poly_rem(mut p: u64, d: u64) -> u64 {
    let dd = poly_degree(d).expect("division by the zero polynomial");
    while let Some(pd) = poly_degree(p) {
        if pd < dd {
            break;
        }
        p ^= d << (pd - dd);
    }
    p
}

/// Trial division by every polynomial of degree `1..=deg(p)/2`.
pub fn is_irreducible(p: u64) -> bool {
    let Some(deg) = poly_degree(p) else {
        return false;
    };
    if deg == 0 {
        return false;
    }
    for k in 1..=deg / 2 {
        for d in (1u64 << k)..(1u64 << (k + 1)) {
            if poly_rem(p, d) == 0 {
                return false;
            }
        }
    }
    true
}
