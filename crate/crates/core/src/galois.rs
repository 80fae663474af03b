//! Binary extension fields GF(2^m) in polynomial basis.
//!
//! Elements are bit vectors of polynomial coefficients reduced modulo a
//! primitive polynomial, so the residue class of `x` (returned by
//! [`BinaryField::alpha`]) generates the whole multiplicative group. That is
//! all the Singer construction in [`crate::masks`] needs: the exponent map
//! `i -> alpha^i` and the absolute trace.

use thiserror::Error;

/// Smallest supported extension degree.
pub const MIN_DEGREE: u32 = 2;
/// Largest supported extension degree.
pub const MAX_DEGREE: u32 = 20;

/// One primitive polynomial per degree, as a coefficient mask including the
/// leading term. Index `m - MIN_DEGREE`.
const PRIMITIVE_POLYS: [u32; (MAX_DEGREE - MIN_DEGREE + 1) as usize] = [
    0x7,      // x^2 + x + 1
    0xB,      // x^3 + x + 1
    0x13,     // x^4 + x + 1
    0x25,     // x^5 + x^2 + 1
    0x43,     // x^6 + x + 1
    0x83,     // x^7 + x + 1
    0x11D,    // x^8 + x^4 + x^3 + x^2 + 1
    0x211,    // x^9 + x^4 + 1
    0x409,    // x^10 + x^3 + 1
    0x805,    // x^11 + x^2 + 1
    0x1053,   // x^12 + x^6 + x^4 + x + 1
    0x201B,   // x^13 + x^4 + x^3 + x + 1
    0x4443,   // x^14 + x^10 + x^6 + x + 1
    0x8003,   // x^15 + x + 1
    0x1100B,  // x^16 + x^12 + x^3 + x + 1
    0x20009,  // x^17 + x^3 + 1
    0x40081,  // x^18 + x^7 + 1
    0x80027,  // x^19 + x^5 + x^2 + x + 1
    0x100009, // x^20 + x^3 + 1
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GaloisError {
    #[error("extension degree {0} outside supported range {MIN_DEGREE}..={MAX_DEGREE}")]
    DegreeOutOfRange(u32),
    #[error("polynomial {poly:#x} does not have degree {degree}")]
    WrongDegree { poly: u32, degree: u32 },
    #[error("polynomial {0:#x} has zero constant term")]
    ZeroConstantTerm(u32),
    #[error("polynomial {0:#x} is not primitive")]
    NotPrimitive(u32),
    #[error("element {bits:#x} does not fit in GF(2^{degree})")]
    ElementOutOfField { bits: u32, degree: u32 },
}

/// A field element: the coefficient bits of a reduced polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl std::ops::Add for FieldElement {
    type Output = FieldElement;

    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: FieldElement) -> FieldElement {
        FieldElement(self.0 ^ rhs.0)
    }
}

/// GF(2^m) defined by a primitive polynomial of degree `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryField {
    degree: u32,
    poly: u32,
}

impl BinaryField {
    /// Field of degree `m` using the built-in primitive polynomial.
    ///
    /// The table entry is re-checked for primitivity.
    pub fn new(degree: u32) -> Result<Self, GaloisError> {
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&degree) {
            return Err(GaloisError::DegreeOutOfRange(degree));
        }
        Self::with_polynomial(degree, PRIMITIVE_POLYS[(degree - MIN_DEGREE) as usize])
    }

    /// Field of degree `m` modulo `poly` (coefficient mask including the
    /// leading `x^m` bit). Fails unless `poly` is primitive.
    pub fn with_polynomial(degree: u32, poly: u32) -> Result<Self, GaloisError> {
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&degree) {
            return Err(GaloisError::DegreeOutOfRange(degree));
        }
        if poly >> degree != 1 {
            return Err(GaloisError::WrongDegree { poly, degree });
        }
        if poly & 1 == 0 {
            return Err(GaloisError::ZeroConstantTerm(poly));
        }
        let field = BinaryField { degree, poly };
        if !field.alpha_is_generator() {
            return Err(GaloisError::NotPrimitive(poly));
        }
        Ok(field)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn polynomial(&self) -> u32 {
        self.poly
    }

    /// Number of field elements, `2^m`.
    pub fn size(&self) -> u64 {
        1u64 << self.degree
    }

    /// Order of the multiplicative group, `2^m - 1`.
    pub fn group_order(&self) -> u64 {
        self.size() - 1
    }

    /// Validates `bits` as an element of this field.
    pub fn element(&self, bits: u32) -> Result<FieldElement, GaloisError> {
        if u64::from(bits) >= self.size() {
            return Err(GaloisError::ElementOutOfField { bits, degree: self.degree });
        }
        Ok(FieldElement(bits))
    }

    /// The primitive element: the residue class of `x`.
    pub fn alpha(&self) -> FieldElement {
        FieldElement(0b10)
    }

    fn check(&self, a: FieldElement) -> Result<(), GaloisError> {
        self.element(a.0).map(|_| ())
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, GaloisError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul_unchecked(a, b))
    }

    // Shift-and-add with reduction after every shift; operands already fit.
    fn mul_unchecked(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let top = 1u32 << self.degree;
        let mut acc = 0u32;
        let mut x = a.0;
        let mut y = b.0;
        while y != 0 {
            if y & 1 == 1 {
                acc ^= x;
            }
            y >>= 1;
            x <<= 1;
            if x & top != 0 {
                x ^= self.poly;
            }
        }
        FieldElement(acc)
    }

    pub fn pow(&self, a: FieldElement, exponent: u64) -> Result<FieldElement, GaloisError> {
        self.check(a)?;
        Ok(self.pow_unchecked(a, exponent))
    }

    fn pow_unchecked(&self, a: FieldElement, mut exponent: u64) -> FieldElement {
        let mut result = FieldElement::ONE;
        let mut base = a;
        while exponent > 0 {
            if exponent & 1 == 1 {
                result = self.mul_unchecked(result, base);
            }
            base = self.mul_unchecked(base, base);
            exponent >>= 1;
        }
        result
    }

    /// Absolute trace `Tr(a) = a + a^2 + a^4 + ... + a^(2^(m-1))`, which
    /// always lands in GF(2).
    pub fn trace(&self, a: FieldElement) -> Result<u8, GaloisError> {
        self.check(a)?;
        Ok(self.trace_unchecked(a))
    }

    fn trace_unchecked(&self, a: FieldElement) -> u8 {
        let mut acc = FieldElement::ZERO;
        let mut term = a;
        for _ in 0..self.degree {
            acc = acc + term;
            term = self.mul_unchecked(term, term);
        }
        debug_assert!(acc.0 <= 1);
        acc.0 as u8
    }

    /// Successive powers `alpha^0, alpha^1, ..., alpha^(2^m - 2)`.
    pub fn powers(&self) -> Powers<'_> {
        Powers { field: self, current: FieldElement::ONE, remaining: self.group_order() }
    }

    fn alpha_is_generator(&self) -> bool {
        let order = self.group_order();
        let alpha = self.alpha();
        if self.pow_unchecked(alpha, order) != FieldElement::ONE {
            return false;
        }
        prime_factors(order).into_iter().all(|p| self.pow_unchecked(alpha, order / p) != FieldElement::ONE)
    }
}

/// Iterator over the powers of the primitive element.
pub struct Powers<'a> {
    field: &'a BinaryField,
    current: FieldElement,
    remaining: u64,
}

impl Iterator for Powers<'_> {
    type Item = FieldElement;

    fn next(&mut self) -> Option<FieldElement> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = self.current;
        self.current = self.field.mul_unchecked(self.current, self.field.alpha());
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining as usize, Some(self.remaining as usize))
    }
}

impl ExactSizeIterator for Powers<'_> {}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}
