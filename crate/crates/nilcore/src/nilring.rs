//! Polynomials in commuting nilpotent variables.
//!
//! A [`NilPoly`] stores one complex coefficient per monomial in a dense
//! mixed-radix array. Element `i` carries exponents `0..=caps[i]`; element 0
//! varies fastest, so for qubits the array index is the bitmask of excited
//! elements (`σ₂σ₁` lives at index 3).

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// How exponents of the same element combine under multiplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MulRule {
    /// One variable per qubit with `σ² = 0`; products need disjoint supports.
    QubitSubset,
    /// Exponent `k` at element `i` names the `k`-th commuting root vector of
    /// that element; any product of two of them vanishes.
    QuditExclusive,
    /// Ordinary powers of one variable per element, truncated above the cap.
    DegreeCapped,
}

impl MulRule {
    pub fn name(self) -> &'static str {
        match self {
            MulRule::QubitSubset => "QUBIT_SUBSET",
            MulRule::QuditExclusive => "QUDIT_EXCLUSIVE",
            MulRule::DegreeCapped => "DEGREE_CAPPED",
        }
    }
}

/// A polynomial over nilpotent variables with dense coefficient storage.
#[derive(Debug, Clone, PartialEq)]
pub struct NilPoly {
    caps: Vec<u8>,
    rule: MulRule,
    coeffs: Vec<Complex64>,
}

fn shape_len(caps: &[u8]) -> usize {
    caps.iter().map(|&c| c as usize + 1).product()
}

impl NilPoly {
    /// The zero polynomial.
    ///
    /// Panics if a cap is 0, or if `QubitSubset` is paired with a cap other than 1.
    pub fn zero(caps: Vec<u8>, rule: MulRule) -> Self {
        assert!(caps.iter().all(|&c| c >= 1), "caps must be at least 1");
        if rule == MulRule::QubitSubset {
            assert!(caps.iter().all(|&c| c == 1), "qubit rule needs caps of 1");
        }
        let len = shape_len(&caps);
        NilPoly {
            caps,
            rule,
            coeffs: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Zero polynomial in `n` qubit variables.
    pub fn qubits(n: usize) -> Self {
        Self::zero(vec![1; n], MulRule::QubitSubset)
    }

    pub fn from_coeffs(caps: Vec<u8>, rule: MulRule, coeffs: Vec<Complex64>) -> Result<Self> {
        if caps.contains(&0) {
            return Err(Error::Shape("caps must be at least 1".into()));
        }
        if rule == MulRule::QubitSubset && caps.iter().any(|&c| c != 1) {
            return Err(Error::Shape("qubit rule needs caps of 1".into()));
        }
        if coeffs.len() != shape_len(&caps) {
            return Err(Error::Shape(alloc::format!(
                "{} coefficients for a shape of {}",
                coeffs.len(),
                shape_len(&caps)
            )));
        }
        Ok(NilPoly { caps, rule, coeffs })
    }

    /// Qubit polynomial from `(bitmask, coefficient)` pairs.
    pub fn qubit_terms(n: usize, terms: &[(usize, Complex64)]) -> Self {
        let mut p = Self::qubits(n);
        for &(m, c) in terms {
            p.coeffs[m] += c;
        }
        p
    }

    pub fn zero_like(&self) -> Self {
        Self::zero(self.caps.clone(), self.rule)
    }

    pub fn one_like(&self) -> Self {
        let mut p = self.zero_like();
        p.coeffs[0] = Complex64::new(1.0, 0.0);
        p
    }

    /// The monomial `(variable_i)^k` (coefficient 1) in the shape of `self`.
    pub fn var_like(&self, i: usize, k: u8) -> Self {
        let mut p = self.zero_like();
        p.coeffs[k as usize * self.stride(i)] = Complex64::new(1.0, 0.0);
        p
    }

    pub fn n(&self) -> usize {
        self.caps.len()
    }

    pub fn caps(&self) -> &[u8] {
        &self.caps
    }

    pub fn rule(&self) -> MulRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn get(&self, idx: usize) -> Complex64 {
        self.coeffs[idx]
    }

    pub fn set(&mut self, idx: usize, c: Complex64) {
        self.coeffs[idx] = c;
    }

    pub fn constant(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn stride(&self, i: usize) -> usize {
        self.caps[..i].iter().map(|&c| c as usize + 1).product()
    }

    /// Exponent of element `i` in monomial `idx`.
    pub fn digit(&self, idx: usize, i: usize) -> u8 {
        ((idx / self.stride(i)) % (self.caps[i] as usize + 1)) as u8
    }

    pub fn exponents(&self, idx: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.n());
        let mut rest = idx;
        for &c in &self.caps {
            let radix = c as usize + 1;
            out.push((rest % radix) as u8);
            rest /= radix;
        }
        out
    }

    pub fn index_of(&self, exps: &[u8]) -> Result<usize> {
        if exps.len() != self.n() {
            return Err(Error::Shape("exponent vector length".into()));
        }
        let mut idx = 0;
        let mut stride = 1;
        for (&k, &c) in exps.iter().zip(&self.caps) {
            if k > c {
                return Err(Error::Shape("exponent above cap".into()));
            }
            idx += k as usize * stride;
            stride *= c as usize + 1;
        }
        Ok(idx)
    }

    /// Number of elements with a nonzero exponent in monomial `idx`.
    pub fn support_size(&self, idx: usize) -> usize {
        self.exponents(idx).iter().filter(|&&k| k > 0).count()
    }

    /// Nonzero terms as `(index, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(i, &c)| (i, c))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &NilPoly) -> f64 {
        assert!(self.same_shape(other), "shape mismatch");
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn same_shape(&self, other: &NilPoly) -> bool {
        self.caps == other.caps && self.rule == other.rule
    }

    pub fn scale(&self, c: Complex64) -> NilPoly {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|x| *x *= c);
        out
    }

    /// Copy with the constant term removed.
    pub fn without_constant(&self) -> NilPoly {
        let mut out = self.clone();
        out.coeffs[0] = Complex64::new(0.0, 0.0);
        out
    }

    /// Zero every coefficient with modulus below `tol`.
    pub fn chop(&self, tol: f64) -> NilPoly {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            if c.norm() < tol {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    fn check_shape(&self, other: &NilPoly) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape("operands differ in caps or rule".into()))
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                n: self.n(),
            })
        }
    }

    fn check_qubit(&self) -> Result<()> {
        if self.rule == MulRule::QubitSubset {
            Ok(())
        } else {
            Err(Error::WrongRule("QUBIT_SUBSET"))
        }
    }
}

/// Ring product of two polynomials of the same shape.
pub fn mul(p: &NilPoly, q: &NilPoly) -> Result<NilPoly> {
    p.check_shape(q)?;
    let mut out = p.zero_like();
    match p.rule {
        MulRule::QubitSubset => subset_convolution(&p.coeffs, &q.coeffs, &mut out.coeffs),
        MulRule::QuditExclusive | MulRule::DegreeCapped => general_product(p, q, &mut out.coeffs),
    }
    Ok(out)
}

fn subset_convolution(p: &[Complex64], q: &[Complex64], out: &mut [Complex64]) {
    for (m, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut s = m;
        loop {
            let a = p[s];
            if a.re != 0.0 || a.im != 0.0 {
                acc += a * q[m ^ s];
            }
            if s == 0 {
                break;
            }
            s = (s - 1) & m;
        }
        *slot = acc;
    }
}

fn general_product(p: &NilPoly, q: &NilPoly, out: &mut [Complex64]) {
    let digits: Vec<Vec<u8>> = (0..p.len()).map(|i| p.exponents(i)).collect();
    let exclusive = p.rule == MulRule::QuditExclusive;
    for (a, pa) in p.terms() {
        for (b, qb) in q.terms() {
            let ok = digits[a]
                .iter()
                .zip(&digits[b])
                .zip(&p.caps)
                .all(|((&x, &y), &cap)| {
                    if exclusive {
                        x == 0 || y == 0
                    } else {
                        x + y <= cap
                    }
                });
            if ok {
                // Digits never carry, so the product monomial sits at a + b.
                out[a + b] += pa * qb;
            }
        }
    }
}

/// `K = Σ caps`: every zero-constant polynomial satisfies `G^{K+1} = 0`.
fn nilpotency_bound(p: &NilPoly) -> usize {
    p.caps.iter().map(|&c| c as usize).sum()
}

/// Logarithm of a polynomial with unit constant term.
///
/// The series `Σ (−1)^{k+1} G^k / k` with `G = F − 1` terminates because `G`
/// is nilpotent; the result has zero constant term.
pub fn log_unit(f: &NilPoly) -> Result<NilPoly> {
    log_unit_tol(f, crate::Tolerances::default().unit)
}

pub fn log_unit_tol(f: &NilPoly, tol: f64) -> Result<NilPoly> {
    let c0 = f.constant();
    if (c0 - 1.0).norm() > tol {
        return Err(Error::NotUnitNormalized {
            re: c0.re,
            im: c0.im,
        });
    }
    let g = f.without_constant();
    let mut out = g.clone();
    let mut power = g.clone();
    for k in 2..=nilpotency_bound(f) {
        power = &power * &g;
        if power.max_abs() == 0.0 {
            break;
        }
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        out = &out + &power.scale(Complex64::new(sign / k as f64, 0.0));
    }
    Ok(out)
}

/// Exponential of a polynomial with zero constant term.
pub fn exp_nil(f: &NilPoly) -> Result<NilPoly> {
    if f.constant().norm() > crate::Tolerances::default().unit {
        return Err(Error::NonzeroConstant);
    }
    Ok(exp_series(&f.without_constant()))
}

fn exp_series(g: &NilPoly) -> NilPoly {
    let mut out = g.one_like();
    let mut term = g.one_like();
    for k in 1..=nilpotency_bound(g) {
        term = (&term * g).scale(Complex64::new(1.0 / k as f64, 0.0));
        if term.max_abs() == 0.0 {
            break;
        }
        out = &out + &term;
    }
    out
}

/// Exponential allowing a constant term: `e^{c₀}·exp_nil(p − c₀)`.
pub fn exp_any(p: &NilPoly) -> NilPoly {
    exp_series(&p.without_constant()).scale(p.constant().exp())
}

/// Principal logarithm allowing any nonzero constant term.
pub fn ln_any(p: &NilPoly) -> Result<NilPoly> {
    let c0 = p.constant();
    if c0.norm() == 0.0 {
        return Err(Error::VacuumZero { time: None });
    }
    let mut out = log_unit(&p.scale(c0.inv()))?;
    out.coeffs[0] = c0.ln();
    Ok(out)
}

/// Multiplicative inverse; needs a nonzero constant term.
pub fn inverse(p: &NilPoly) -> Result<NilPoly> {
    let c0 = p.constant();
    if c0.norm() == 0.0 {
        return Err(Error::VacuumZero { time: None });
    }
    // 1/(c0 + N) = c0⁻¹ Σ (−N/c0)^k
    let minus_n = p.without_constant().scale(-c0.inv());
    let mut out = p.one_like();
    let mut power = p.one_like();
    for _ in 1..=nilpotency_bound(p) {
        power = &power * &minus_n;
        if power.max_abs() == 0.0 {
            break;
        }
        out = &out + &power;
    }
    Ok(out.scale(c0.inv()))
}

/// Derivative with respect to qubit variable `σ_i⁺`.
pub fn partial(p: &NilPoly, i: usize) -> Result<NilPoly> {
    p.check_qubit()?;
    p.check_index(i)?;
    let bit = 1usize << i;
    let mut out = p.zero_like();
    for m in (0..p.len()).filter(|m| m & bit != 0) {
        out.coeffs[m ^ bit] = p.coeffs[m];
    }
    Ok(out)
}

/// Coefficient extraction for root vector `k` of element `i`: terms carrying
/// exponent `k` at `i` lose that factor, all others are dropped.
///
/// For qubits and `k = 1` this coincides with [`partial`].
pub fn partial_level(p: &NilPoly, i: usize, k: u8) -> Result<NilPoly> {
    p.check_index(i)?;
    if p.rule == MulRule::DegreeCapped {
        return Err(Error::WrongRule("QUBIT_SUBSET or QUDIT_EXCLUSIVE"));
    }
    if k == 0 || k > p.caps[i] {
        return Err(Error::Shape("level outside 1..=cap".into()));
    }
    let stride = p.stride(i);
    let mut out = p.zero_like();
    for idx in 0..p.len() {
        if p.digit(idx, i) == k {
            out.coeffs[idx - k as usize * stride] = p.coeffs[idx];
        }
    }
    Ok(out)
}

/// Replace `σ_i⁺` by `a + b·σ_i⁺`.
pub fn affine_substitute(p: &NilPoly, i: usize, a: Complex64, b: Complex64) -> Result<NilPoly> {
    p.check_qubit()?;
    p.check_index(i)?;
    let bit = 1usize << i;
    let mut out = p.clone();
    for m in (0..p.len()).filter(|m| m & bit != 0) {
        let c = p.coeffs[m];
        out.coeffs[m] = b * c;
        out.coeffs[m ^ bit] += a * c;
    }
    Ok(out)
}

impl Add for &NilPoly {
    type Output = NilPoly;
    fn add(self, rhs: &NilPoly) -> NilPoly {
        assert!(self.same_shape(rhs), "shape mismatch");
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .zip(&rhs.coeffs)
            .for_each(|(a, b)| *a += b);
        out
    }
}

impl Sub for &NilPoly {
    type Output = NilPoly;
    fn sub(self, rhs: &NilPoly) -> NilPoly {
        assert!(self.same_shape(rhs), "shape mismatch");
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .zip(&rhs.coeffs)
            .for_each(|(a, b)| *a -= b);
        out
    }
}

impl Neg for &NilPoly {
    type Output = NilPoly;
    fn neg(self) -> NilPoly {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// Panics on shape mismatch; use [`mul`] for a checked product.
impl Mul for &NilPoly {
    type Output = NilPoly;
    fn mul(self, rhs: &NilPoly) -> NilPoly {
        mul(self, rhs).expect("shape mismatch")
    }
}

impl Mul<Complex64> for &NilPoly {
    type Output = NilPoly;
    fn mul(self, rhs: Complex64) -> NilPoly {
        self.scale(rhs)
    }
}
