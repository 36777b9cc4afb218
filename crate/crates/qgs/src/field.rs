//! Exact arithmetic in the prime field `F_d` for odd primes `d ≥ 3`.
//!
//! Every graph weight, vertex label, Pauli exponent, and protocol parameter
//! in this crate is a [`FieldElement`]. The modulus travels with each value
//! and is checked on every binary operation, so protocol suites can iterate
//! over several `d` in one process without cross-contamination.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not an odd prime in 3..={}", Field::MAX_MODULUS)]
    InvalidModulus(u64),
    #[error("value {value} is not reducible into F_{modulus}")]
    ValueOutOfRange { value: u64, modulus: u64 },
}

/// An odd prime modulus `d`, the single piece of shared context for a run.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Field {
    d: u64,
}

impl Field {
    /// Smallest supported modulus. `d = 2` is rejected: the calculus needs
    /// `2` invertible (the `k(k−1)/2` phase bookkeeping and rule M2's
    /// half-weight term).
    pub const MIN_MODULUS: u64 = 3;
    /// Desk-scale bound; trial division is plenty below this.
    pub const MAX_MODULUS: u64 = 31;

    pub fn new(d: u64) -> Result<Self, FieldError> {
        if !(Self::MIN_MODULUS..=Self::MAX_MODULUS).contains(&d) || d.is_multiple_of(2) {
            return Err(FieldError::InvalidModulus(d));
        }
        let mut k = 3;
        while k * k <= d {
            if d.is_multiple_of(k) {
                return Err(FieldError::InvalidModulus(d));
            }
            k += 2;
        }
        Ok(Field { d })
    }

    pub fn modulus(self) -> u64 {
        self.d
    }

    /// Reduce an arbitrary signed integer into the field.
    pub fn elem(self, value: i64) -> FieldElement {
        let d = self.d as i64;
        FieldElement {
            value: value.rem_euclid(d) as u64,
            d: self.d,
        }
    }

    /// Strict conversion: accepts only already-reduced values. Used by the
    /// parsers, where an out-of-range weight is a reportable error rather
    /// than something to silently wrap.
    pub fn checked_elem(self, value: u64) -> Result<FieldElement, FieldError> {
        if value < self.d {
            Ok(FieldElement { value, d: self.d })
        } else {
            Err(FieldError::ValueOutOfRange {
                value,
                modulus: self.d,
            })
        }
    }

    pub fn zero(self) -> FieldElement {
        FieldElement { value: 0, d: self.d }
    }

    pub fn one(self) -> FieldElement {
        FieldElement { value: 1, d: self.d }
    }

    /// All of `0, 1, …, d−1` in order.
    pub fn elements(self) -> impl Iterator<Item = FieldElement> {
        let d = self.d;
        (0..d).map(move |value| FieldElement { value, d })
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.d)
    }
}

/// A fully reduced residue mod an odd prime.
///
/// Binary operations panic on a modulus mismatch: mixing fields is a
/// programming error, not a recoverable condition.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    d: u64,
}

impl FieldElement {
    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> u64 {
        self.d
    }

    pub fn field(self) -> Field {
        Field { d: self.d }
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn assert_same_field(self, other: FieldElement) {
        assert_eq!(
            self.d, other.d,
            "field mismatch: F_{} vs F_{}",
            self.d, other.d
        );
    }

    /// `a^k` by square-and-multiply (exponent is a plain integer, not a
    /// field element — the exponent group is Z).
    pub fn pow(self, mut k: u64) -> FieldElement {
        let mut base = self;
        let mut acc = FieldElement { value: 1, d: self.d };
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat: `a^{d−2}`.
    ///
    /// Panics on zero — callers guard (shuffle requires `A_ij ≠ 0`, etc.).
    pub fn inv(self) -> FieldElement {
        assert!(self.value != 0, "zero has no inverse in F_{}", self.d);
        self.pow(self.d - 2)
    }

    /// Division by two, well defined because `d` is odd.
    pub fn half(self) -> FieldElement {
        // (d+1)/2 is the inverse of 2.
        self * FieldElement {
            value: self.d.div_ceil(2),
            d: self.d,
        }
    }
}

impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        self.assert_same_field(rhs);
        FieldElement {
            value: (self.value + rhs.value) % self.d,
            d: self.d,
        }
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        self.assert_same_field(rhs);
        FieldElement {
            value: (self.value + self.d - rhs.value) % self.d,
            d: self.d,
        }
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        self.assert_same_field(rhs);
        FieldElement {
            value: (self.value * rhs.value) % self.d,
            d: self.d,
        }
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement {
            value: (self.d - self.value) % self.d,
            d: self.d,
        }
    }
}

impl AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: FieldElement) {
        *self = *self + rhs;
    }
}

impl SubAssign for FieldElement {
    fn sub_assign(&mut self, rhs: FieldElement) {
        *self = *self - rhs;
    }
}

impl MulAssign for FieldElement {
    fn mul_assign(&mut self, rhs: FieldElement) {
        *self = *self * rhs;
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.d)
    }
}

/// Dense row-major matrix over `F_d`. Only what Gaussian elimination and the
/// access solver need — not a general linear-algebra type.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl Matrix {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Matrix {
        Matrix {
            field,
            rows,
            cols,
            data: vec![field.zero(); rows * cols],
        }
    }

    /// Build from explicit rows; panics on ragged input.
    pub fn from_rows(field: Field, rows: &[Vec<FieldElement>]) -> Matrix {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix rows");
        Matrix {
            field,
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.data[r * self.cols + c] = v;
    }

    pub fn mul_vec(&self, v: &[FieldElement]) -> Vec<FieldElement> {
        assert_eq!(v.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|r| {
                let mut acc = self.field.zero();
                for (c, &vc) in v.iter().enumerate() {
                    acc += self.get(r, c) * vc;
                }
                acc
            })
            .collect()
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                write!(f, "{:>3}", self.get(r, c))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Outcome of [`solve_linear`]: inconsistency is a value, not an error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LinearSolution {
    /// `particular` solves `M·x = rhs`; the affine solution set is
    /// `particular + span(nullspace)`.
    Solution {
        particular: Vec<FieldElement>,
        nullspace: Vec<Vec<FieldElement>>,
    },
    Inconsistent,
}

/// Gaussian elimination over `F_d`: reduces the augmented system to RREF and
/// reads off one particular solution (free variables set to zero) plus a
/// nullspace basis (one vector per free column).
pub fn solve_linear(m: &Matrix, rhs: &[FieldElement]) -> LinearSolution {
    assert_eq!(m.rows(), rhs.len(), "rhs length must match row count");
    let field = m.field;
    let (rows, cols) = (m.rows, m.cols);

    let mut a = m.clone();
    let mut b = rhs.to_vec();
    let mut pivot_col_of_row = Vec::new();

    let mut row = 0;
    for col in 0..cols {
        let Some(pivot) = (row..rows).find(|&r| !a.get(r, col).is_zero()) else {
            continue;
        };
        for c in 0..cols {
            let tmp = a.get(row, c);
            a.set(row, c, a.get(pivot, c));
            a.set(pivot, c, tmp);
        }
        b.swap(row, pivot);

        let scale = a.get(row, col).inv();
        for c in 0..cols {
            a.set(row, c, a.get(row, c) * scale);
        }
        b[row] *= scale;

        for r in 0..rows {
            if r != row && !a.get(r, col).is_zero() {
                let factor = a.get(r, col);
                for c in 0..cols {
                    let v = a.get(r, c) - factor * a.get(row, c);
                    a.set(r, c, v);
                }
                b[r] = b[r] - factor * b[row];
            }
        }

        pivot_col_of_row.push(col);
        row += 1;
        if row == rows {
            break;
        }
    }

    // Zero rows with nonzero rhs ⇒ no solution.
    if b[row..rows].iter().any(|bv| !bv.is_zero()) {
        return LinearSolution::Inconsistent;
    }

    let pivot_cols: Vec<usize> = pivot_col_of_row.clone();
    let is_pivot = {
        let mut v = vec![false; cols];
        for &c in &pivot_cols {
            v[c] = true;
        }
        v
    };

    let mut particular = vec![field.zero(); cols];
    for (r, &c) in pivot_cols.iter().enumerate() {
        particular[c] = b[r];
    }

    let mut nullspace = Vec::new();
    for free in (0..cols).filter(|&c| !is_pivot[c]) {
        let mut vec = vec![field.zero(); cols];
        vec[free] = field.one();
        for (r, &c) in pivot_cols.iter().enumerate() {
            vec[c] = -a.get(r, free);
        }
        nullspace.push(vec);
    }

    LinearSolution::Solution {
        particular,
        nullspace,
    }
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    const MODULI: [u64; 4] = [3, 5, 7, 11];

    proptest! {
        #[test]
        fn ring_axioms(d_idx in 0usize..4, a in 0i64..1000, b in 0i64..1000, c in 0i64..1000) {
            let field = Field::new(MODULI[d_idx]).unwrap();
            let (a, b, c) = (field.elem(a), field.elem(b), field.elem(c));
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!((a * b) * c, a * (b * c));
            prop_assert_eq!(a * (b + c), a * b + a * c);
            prop_assert_eq!(a + (-a), field.zero());
            prop_assert_eq!(a - b, a + (-b));
        }

        #[test]
        fn inverses_and_powers(d_idx in 0usize..4, a in 0i64..1000, k in 0u64..32) {
            let field = Field::new(MODULI[d_idx]).unwrap();
            let a = field.elem(a);
            if !a.is_zero() {
                prop_assert_eq!(a * a.inv(), field.one());
            }
            let mut acc = field.one();
            for _ in 0..k {
                acc *= a;
            }
            prop_assert_eq!(a.pow(k), acc);
        }

        #[test]
        fn halving_doubles_back(d_idx in 0usize..4, a in 0i64..1000) {
            let field = Field::new(MODULI[d_idx]).unwrap();
            let a = field.elem(a);
            prop_assert_eq!(a.half() + a.half(), a);
        }
    }
}
