//! Dense state vectors and their nilpotent-polynomial images.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fm;
use crate::linalg::{hermitian_eigenvalues, CMat};
use crate::nilring::{log_unit, MulRule, NilPoly};
use crate::Tolerances;

/// Which normalization a [`StateVector`] claims, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    None,
    /// `Σ|ψ|² = 1`.
    Probability,
    /// `ψ_{0…0} = 1`.
    Vacuum,
}

const NORM_CHECK: f64 = 1e-9;

/// Amplitudes of an assembly in mixed-radix order, element 0 fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amps: Vec<Complex64>,
    norm: Normalization,
}

impl StateVector {
    pub fn new(dims: Vec<usize>, amps: Vec<Complex64>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidState(
                "every element needs dimension at least 2".into(),
            ));
        }
        let len: usize = dims.iter().product();
        if amps.len() != len {
            return Err(Error::InvalidState(format!(
                "{} amplitudes for dimensions {:?} (expected {len})",
                amps.len(),
                dims
            )));
        }
        Ok(StateVector {
            dims,
            amps,
            norm: Normalization::None,
        })
    }

    /// An `n`-qubit state with `n` inferred from the amplitude count.
    pub fn qubits(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if n == 0 || amps.len() != 1 << n {
            return Err(Error::InvalidState(
                "qubit amplitude count must be 2^n, n ≥ 1".into(),
            ));
        }
        Self::new(vec![2; n], amps)
    }

    /// Basis state `|idx⟩`.
    pub fn basis(dims: Vec<usize>, idx: usize) -> Result<Self> {
        let len: usize = dims.iter().product();
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        if idx >= len {
            return Err(Error::InvalidState("basis index out of range".into()));
        }
        amps[idx] = Complex64::new(1.0, 0.0);
        Self::new(dims, amps)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        self.norm = Normalization::None;
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn normalization(&self) -> Normalization {
        self.norm
    }

    pub fn is_qubits(&self) -> bool {
        self.dims.iter().all(|&d| d == 2)
    }

    pub fn amp(&self, idx: usize) -> Complex64 {
        self.amps[idx]
    }

    pub fn stride(&self, i: usize) -> usize {
        self.dims[..i].iter().product()
    }

    pub fn digit(&self, idx: usize, i: usize) -> usize {
        (idx / self.stride(i)) % self.dims[i]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Claim a normalization; the claim is verified.
    pub fn with_normalization(mut self, norm: Normalization) -> Result<Self> {
        match norm {
            Normalization::Probability if fm::abs(self.norm_sqr() - 1.0) > NORM_CHECK => {
                return Err(Error::InvalidState(
                    "state is not probability-normalized".into(),
                ));
            }
            Normalization::Vacuum if (self.amps[0] - 1.0).norm() > NORM_CHECK => {
                return Err(Error::InvalidState("vacuum amplitude is not 1".into()));
            }
            _ => {}
        }
        self.norm = norm;
        Ok(self)
    }

    /// Copy scaled to `Σ|ψ|² = 1`.
    pub fn normalized(&self) -> Result<Self> {
        let ns = self.norm_sqr();
        if ns == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let k = 1.0 / fm::sqrt(ns);
        Ok(StateVector {
            dims: self.dims.clone(),
            amps: self.amps.iter().map(|a| a * k).collect(),
            norm: Normalization::Probability,
        })
    }

    /// Copy scaled to unit vacuum amplitude.
    pub fn vacuum_normalized(&self) -> Result<Self> {
        let a0 = self.amps[0];
        if a0.norm() == 0.0 {
            return Err(Error::VacuumZero { time: None });
        }
        let k = a0.inv();
        Ok(StateVector {
            dims: self.dims.clone(),
            amps: self.amps.iter().map(|a| a * k).collect(),
            norm: Normalization::Vacuum,
        })
    }

    pub fn scale(&self, k: Complex64) -> Self {
        StateVector {
            dims: self.dims.clone(),
            amps: self.amps.iter().map(|a| a * k).collect(),
            norm: Normalization::None,
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest amplitude mismatch after normalizing both states and
    /// removing the best-fitting global phase.
    pub fn distance_up_to_phase(&self, other: &StateVector) -> f64 {
        let (Ok(a), Ok(b)) = (self.normalized(), other.normalized()) else {
            return f64::INFINITY;
        };
        let ov = a.inner(&b);
        let phase = if ov.norm() > 0.0 {
            ov / ov.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        a.amps
            .iter()
            .zip(&b.amps)
            .map(|(x, y)| (x * phase - y).norm())
            .fold(0.0, f64::max)
    }
}

/// A grouping of elements into new composite elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub groups: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(groups: Vec<Vec<usize>>) -> Self {
        Partition { groups }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for g in &self.groups {
            if g.is_empty() {
                return Err(Error::InvalidPartition("empty group".into()));
            }
            for &e in g {
                if e >= n {
                    return Err(Error::InvalidPartition(format!("element {e} out of range")));
                }
                if seen[e] {
                    return Err(Error::InvalidPartition(format!("element {e} repeated")));
                }
                seen[e] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidPartition(
                "groups do not cover all elements".into(),
            ));
        }
        Ok(())
    }
}

/// Multiplication rule and caps matching a list of element dimensions.
pub fn poly_shape(dims: &[usize]) -> (Vec<u8>, MulRule) {
    let caps = dims.iter().map(|&d| (d - 1) as u8).collect();
    let rule = if dims.iter().all(|&d| d == 2) {
        MulRule::QubitSubset
    } else {
        MulRule::QuditExclusive
    };
    (caps, rule)
}

/// `F` with `α_k = ψ_k / ψ_{0…0}`.
pub fn to_poly(s: &StateVector) -> Result<NilPoly> {
    let v = s.vacuum_normalized()?;
    let (caps, rule) = poly_shape(&s.dims);
    NilPoly::from_coeffs(caps, rule, v.amps)
}

/// Vacuum-normalized state `F|O⟩`.
pub fn from_poly(f: &NilPoly) -> Result<StateVector> {
    if f.rule() == MulRule::DegreeCapped {
        return Err(Error::WrongRule("QUBIT_SUBSET or QUDIT_EXCLUSIVE"));
    }
    let dims = f.caps().iter().map(|&c| c as usize + 1).collect();
    StateVector::new(dims, f.coeffs().to_vec())
}

/// `f = ln F` for the state's polynomial.
pub fn nilpotential(s: &StateVector) -> Result<NilPoly> {
    log_unit(&to_poly(s)?)
}

/// Whether parts `a` and `b` are unentangled: no coefficient of `f` above
/// `τ_crit` couples an element of `a` to one of `b`.
///
/// This is the cross-derivative criterion; a monomial survives
/// `∂²/∂x_k∂x_m` exactly when it contains both variables.
pub fn is_unentangled(f: &NilPoly, a: &[usize], b: &[usize]) -> Result<bool> {
    is_unentangled_tol(f, a, b, Tolerances::default().crit)
}

pub fn is_unentangled_tol(f: &NilPoly, a: &[usize], b: &[usize], tol: f64) -> Result<bool> {
    let n = f.n();
    let mut side = vec![0u8; n];
    for (tag, set) in [(1u8, a), (2u8, b)] {
        for &e in set {
            if e >= n {
                return Err(Error::IndexOutOfRange { index: e, n });
            }
            if side[e] != 0 {
                return Err(Error::InvalidPartition(format!(
                    "element {e} in both parts"
                )));
            }
            side[e] = tag;
        }
    }
    if side.contains(&0) {
        return Err(Error::InvalidPartition(
            "parts do not cover all elements".into(),
        ));
    }
    for (idx, coef) in f.terms() {
        if coef.norm() < tol {
            continue;
        }
        let exps = f.exponents(idx);
        let touches = |tag| exps.iter().zip(&side).any(|(&k, &s)| k > 0 && s == tag);
        if touches(1) && touches(2) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Local index of `idx` restricted to `elems` (first listed fastest) and
/// the dimension of that subsystem.
fn sub_index(s: &StateVector, idx: usize, elems: &[usize]) -> usize {
    let mut out = 0;
    let mut stride = 1;
    for &e in elems {
        out += s.digit(idx, e) * stride;
        stride *= s.dims[e];
    }
    out
}

/// `ρ` of the elements in `keep`, normalized to unit trace.
pub fn reduced_density(s: &StateVector, keep: &[usize]) -> Result<CMat> {
    if keep.is_empty() {
        return Err(Error::InvalidPartition("empty keep set".into()));
    }
    let n = s.n();
    let mut seen = vec![false; n];
    for &e in keep {
        if e >= n || seen[e] {
            return Err(Error::InvalidPartition(format!(
                "bad element {e} in keep set"
            )));
        }
        seen[e] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|e| !seen[*e]).collect();
    let da: usize = keep.iter().map(|&e| s.dims[e]).product();
    let db: usize = rest.iter().map(|&e| s.dims[e]).product();
    let mut m = CMat::zeros(da, db);
    for (idx, &a) in s.amps.iter().enumerate() {
        m[(sub_index(s, idx, keep), sub_index(s, idx, &rest))] = a;
    }
    let rho = &m * m.adjoint();
    let tr = rho.trace();
    if tr.norm() == 0.0 {
        return Err(Error::InvalidState("zero vector".into()));
    }
    Ok(rho.map(|z| z / tr))
}

/// Von Neumann and linear entropy of part `a`.
pub fn entropies(s: &StateVector, a: &[usize]) -> Result<(f64, f64)> {
    let rho = reduced_density(s, a)?;
    let ev = hermitian_eigenvalues(&rho);
    let svn = -ev
        .iter()
        .filter(|&&l| l > 1e-300)
        .map(|&l| l * fm::ln(l))
        .sum::<f64>();
    let purity: f64 = ev.iter().map(|l| l * l).sum();
    Ok((svn.max(0.0), (1.0 - purity).max(0.0)))
}

/// Schmidt coefficients squared across the cut `a | rest`, decreasing.
pub fn schmidt_spectrum(s: &StateVector, a: &[usize]) -> Result<Vec<f64>> {
    Ok(hermitian_eigenvalues(&reduced_density(s, a)?))
}

/// Partial transpose of a density matrix on `dims` (element 0 fastest) with
/// respect to element `which`.
pub fn partial_transpose(rho: &CMat, dims: &[usize], which: usize) -> CMat {
    let stride: usize = dims[..which].iter().product();
    let d = dims[which];
    let n = rho.nrows();
    let digit = |i: usize| (i / stride) % d;
    CMat::from_fn(n, n, |r, c| {
        let (dr, dc) = (digit(r), digit(c));
        let r2 = r - dr * stride + dc * stride;
        let c2 = c - dc * stride + dr * stride;
        rho[(r2, c2)]
    })
}

/// Regroup elements; amplitudes are reindexed, nothing else changes.
///
/// Within a group the first listed element varies fastest.
pub fn merge(s: &StateVector, part: &Partition) -> Result<StateVector> {
    part.validate(s.n())?;
    let dims: Vec<usize> = part
        .groups
        .iter()
        .map(|g| g.iter().map(|&e| s.dims[e]).product())
        .collect();
    let mut amps = vec![Complex64::new(0.0, 0.0); s.len()];
    for (idx, &a) in s.amps.iter().enumerate() {
        let mut new_idx = 0;
        let mut stride = 1;
        for (g, &d) in part.groups.iter().zip(&dims) {
            new_idx += sub_index(s, idx, g) * stride;
            stride *= d;
        }
        amps[new_idx] = a;
    }
    Ok(StateVector {
        dims,
        amps,
        norm: s.norm,
    })
}

/// I.i.d. complex Gaussian amplitudes, probability-normalized.
pub fn random_state(dims: &[usize], seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_state_rng(dims, &mut rng)
}

pub fn random_state_rng<R: rand::Rng + ?Sized>(dims: &[usize], rng: &mut R) -> StateVector {
    let len: usize = dims.iter().product();
    let amps = (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    StateVector::new(dims.to_vec(), amps)
        .and_then(|s| s.normalized())
        .expect("Gaussian sample is nonzero")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn r(x: f64) -> Complex64 {
        c(x, 0.0)
    }

    fn bell() -> StateVector {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        StateVector::qubits(vec![r(h), r(0.0), r(0.0), r(h)]).unwrap()
    }

    fn ghz3() -> StateVector {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let mut a = vec![r(0.0); 8];
        a[0] = r(h);
        a[7] = r(h);
        StateVector::qubits(a).unwrap()
    }

    fn two_bell_pairs() -> StateVector {
        let mut a = vec![r(0.0); 16];
        for i in [0, 3, 12, 15] {
            a[i] = r(0.5);
        }
        StateVector::qubits(a).unwrap()
    }

    #[test]
    fn bell_polynomial() {
        let f = to_poly(&bell()).unwrap();
        assert!(f.max_abs_diff(&NilPoly::qubit_terms(2, &[(0, r(1.0)), (3, r(1.0))])) < 1e-15);
    }

    #[test]
    fn vacuum_polynomial_is_one() {
        let s = StateVector::basis(vec![2, 2, 2], 0).unwrap();
        assert_eq!(to_poly(&s).unwrap(), NilPoly::qubits(3).one_like());
    }

    #[test]
    fn two_bell_pairs_polynomial_and_nilpotential() {
        let s = two_bell_pairs();
        let f = to_poly(&s).unwrap();
        let expect =
            NilPoly::qubit_terms(4, &[(0, r(1.0)), (3, r(1.0)), (12, r(1.0)), (15, r(1.0))]);
        assert!(f.max_abs_diff(&expect) < 1e-15);
        let g = nilpotential(&s).unwrap();
        assert!(g.max_abs_diff(&NilPoly::qubit_terms(4, &[(3, r(1.0)), (12, r(1.0))])) < 1e-15);
    }

    #[test]
    fn ghz_nilpotential() {
        let g = nilpotential(&ghz3()).unwrap();
        assert!(g.max_abs_diff(&NilPoly::qubit_terms(3, &[(7, r(1.0))])) < 1e-15);
    }

    #[test]
    fn product_state_nilpotential_is_linear() {
        let cs = [c(0.3, 0.1), c(-1.2, 0.5), c(0.0, 2.0)];
        let mut amps = vec![r(1.0)];
        for &ci in &cs {
            amps = [amps.clone(), amps.iter().map(|a| a * ci).collect()].concat();
        }
        let g = nilpotential(&StateVector::qubits(amps).unwrap()).unwrap();
        let expect = NilPoly::qubit_terms(3, &[(1, cs[0]), (2, cs[1]), (4, cs[2])]);
        assert!(g.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn vacuum_zero_is_an_error() {
        let s = StateVector::basis(vec![2, 2], 3).unwrap();
        assert!(matches!(to_poly(&s), Err(Error::VacuumZero { .. })));
    }

    #[test]
    fn from_poly_round_trip() {
        let s = random_state(&[2, 3, 2], 11);
        let back = from_poly(&to_poly(&s).unwrap()).unwrap();
        assert!(s.distance_up_to_phase(&back) < 1e-14);
    }

    #[test]
    fn unentangled_criterion_examples() {
        let f = nilpotential(&two_bell_pairs()).unwrap();
        assert!(is_unentangled(&f, &[0, 1], &[2, 3]).unwrap());
        assert!(!is_unentangled(&f, &[0, 2], &[1, 3]).unwrap());
        let g = nilpotential(&ghz3()).unwrap();
        for (a, b) in [
            (vec![0], vec![1, 2]),
            (vec![1], vec![0, 2]),
            (vec![2], vec![0, 1]),
        ] {
            assert!(!is_unentangled(&g, &a, &b).unwrap());
        }
    }

    #[test]
    fn reduced_density_examples() {
        let rho = reduced_density(&bell(), &[0]).unwrap();
        assert!((rho[(0, 0)] - 0.5).norm() < 1e-15 && (rho[(1, 1)] - 0.5).norm() < 1e-15);
        assert!(rho[(0, 1)].norm() < 1e-15);
        let s = StateVector::basis(vec![2, 2, 2], 5).unwrap();
        let ev = hermitian_eigenvalues(&reduced_density(&s, &[0, 2]).unwrap());
        assert!((ev[0] - 1.0).abs() < 1e-14 && ev[1].abs() < 1e-14);
    }

    #[test]
    fn entropy_examples() {
        let (svn, slin) = entropies(&bell(), &[0]).unwrap();
        assert!((svn - core::f64::consts::LN_2).abs() < 1e-12);
        assert!((slin - 0.5).abs() < 1e-12);
        let (svn, slin) = entropies(&StateVector::basis(vec![2, 2], 0).unwrap(), &[1]).unwrap();
        assert!(svn.abs() < 1e-12 && slin.abs() < 1e-12);
    }

    #[test]
    fn linear_entropy_matches_two_qubit_formula() {
        // ψ ∝ 1 + β σ₂σ₁ has S_lin = 2|β|²/(1+|β|²)².
        for &b in &[c(0.3, 0.4), c(1.0, 0.0), c(-2.0, 0.7)] {
            let s = StateVector::qubits(vec![r(1.0), r(0.0), r(0.0), b]).unwrap();
            let (svn, slin) = entropies(&s, &[0]).unwrap();
            let b2 = b.norm_sqr();
            assert!((slin - 2.0 * b2 / ((1.0 + b2) * (1.0 + b2))).abs() < 1e-12);
            let expect_vn = fm::ln(1.0 + b2) - b2 / (1.0 + b2) * fm::ln(b2);
            assert!((svn - expect_vn).abs() < 1e-12);
        }
    }

    #[test]
    fn merge_two_bell_pairs_into_ququarts() {
        let m = merge(
            &two_bell_pairs(),
            &Partition::new(vec![vec![0, 1], vec![2, 3]]),
        )
        .unwrap();
        assert_eq!(m.dims(), &[4, 4]);
        let f = nilpotential(&m).unwrap();
        assert!(is_unentangled(&f, &[0], &[1]).unwrap());
    }

    #[test]
    fn merge_into_single_element_is_linear() {
        let s = random_state(&[2, 2, 2], 5);
        let m = merge(&s, &Partition::new(vec![vec![0, 1, 2]])).unwrap();
        let f = to_poly(&m).unwrap();
        assert_eq!(f.rule(), MulRule::QuditExclusive);
        assert_eq!(f.caps(), &[7]);
        // Every monomial is a single root vector ν^κ, so F is linear in them.
        assert!(f.terms().all(|(i, _)| f.support_size(i) <= 1));
    }

    #[test]
    fn merge_coefficients_give_reduced_density() {
        let s = random_state(&[2, 2, 2, 2], 17);
        let m = merge(&s, &Partition::new(vec![vec![0, 2], vec![1, 3]])).unwrap();
        let alpha = to_poly(&m).unwrap();
        let mut rho = CMat::zeros(4, 4);
        for ka in 0..4 {
            for kb in 0..4 {
                for ka2 in 0..4 {
                    rho[(ka, ka2)] += alpha.get(ka + 4 * kb) * alpha.get(ka2 + 4 * kb).conj();
                }
            }
        }
        let direct = reduced_density(&s, &[0, 2]).unwrap();
        let tr = rho.trace();
        assert!((rho.map(|z| z / tr) - direct)
            .iter()
            .all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn merge_preserves_schmidt_spectrum() {
        let s = random_state(&[2, 2, 2, 2, 2], 3);
        let m = merge(&s, &Partition::new(vec![vec![0, 3], vec![1], vec![2, 4]])).unwrap();
        let a = schmidt_spectrum(&s, &[0, 3]).unwrap();
        let b = schmidt_spectrum(&m, &[0]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn random_state_is_deterministic_and_normalized() {
        let a = random_state(&[2, 2, 3], 42);
        assert_eq!(a, random_state(&[2, 2, 3], 42));
        assert!((a.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn invalid_partitions_rejected() {
        let s = random_state(&[2, 2], 1);
        for g in [vec![vec![0]], vec![vec![0, 1], vec![1]], vec![vec![0, 2]]] {
            assert!(matches!(
                merge(&s, &Partition::new(g)),
                Err(Error::InvalidPartition(_))
            ));
        }
    }

    #[test]
    fn normalization_claims_are_verified() {
        let s = StateVector::qubits(vec![r(2.0), r(0.0)]).unwrap();
        assert!(s
            .clone()
            .with_normalization(Normalization::Probability)
            .is_err());
        assert!(s
            .vacuum_normalized()
            .unwrap()
            .with_normalization(Normalization::Vacuum)
            .is_ok());
    }

    #[test]
    fn partial_transpose_is_involution() {
        let s = random_state(&[2, 2], 9);
        let rho = reduced_density(&s, &[0, 1]).unwrap();
        let back = partial_transpose(&partial_transpose(&rho, &[2, 2], 1), &[2, 2], 1);
        assert!((back - &rho).iter().all(|z| z.norm() < 1e-15));
    }
}
