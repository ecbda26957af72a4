//! Local SU(2)/SL(2, C) transformations and the two-qubit exchange gate,
//! applied to state vectors and directly to `F` and `f`.
//!
//! Basis order is `(|0⟩, |1⟩)` with `σ⁺|0⟩ = |1⟩` and `σᶻ|0⟩ = −|0⟩`, so
//! `σᶻ = diag(−1, 1)` and `σʸ = [[0, i], [−i, 0]]`.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fm;
use crate::linalg::{c, c0, c1, ci, CMat};
use crate::nilring::{affine_substitute, inverse, ln_any, partial, MulRule, NilPoly};
use crate::states::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    SU,
    SL,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::SU => "su",
            Group::SL => "sl",
        }
    }
}

/// Parameters of `e^{Aσ⁻} e^{Bσᶻ} e^{Cσ⁺}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abc {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
}

/// One element's invertible transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOp {
    pub element: usize,
    pub matrix: CMat,
    /// Factorization of `matrix / sqrt(det)`; qubits only.
    pub abc: Option<Abc>,
    pub group: Group,
}

/// `exp[it(σᵢ⁺σⱼ⁻ + σᵢ⁻σⱼ⁺)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOp {
    pub i: usize,
    pub j: usize,
    pub t: f64,
}

/// Finite transformations with closed forms on the nilpotential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NilTransform {
    /// `exp[iP(cos φ σˣ + sin φ σʸ)]` on one qubit.
    Rotation {
        element: usize,
        p: f64,
        phi: f64,
    },
    Gate(GateOp),
}

pub fn sigma_plus() -> CMat {
    CMat::from_row_slice(2, 2, &[c0(), c0(), c1(), c0()])
}

pub fn sigma_minus() -> CMat {
    CMat::from_row_slice(2, 2, &[c0(), c1(), c0(), c0()])
}

pub fn sigma_z() -> CMat {
    CMat::from_row_slice(2, 2, &[-c1(), c0(), c0(), c1()])
}

pub fn sigma_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c0(), c1(), c1(), c0()])
}

pub fn sigma_y() -> CMat {
    CMat::from_row_slice(2, 2, &[c0(), ci(), -ci(), c0()])
}

/// `sin P / P` and `cos P` for complex `P² = Σ P_k²`.
fn sinc_cos(p: &[Complex64; 3]) -> (Complex64, Complex64) {
    let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    let pm = p2.sqrt();
    if pm.norm() < 1e-4 {
        // Even series; both functions depend on P² only.
        let sinc = c1() - p2 / 6.0 + p2 * p2 / 120.0 - p2 * p2 * p2 / 5040.0;
        let cos = c1() - p2 / 2.0 + p2 * p2 / 24.0 - p2 * p2 * p2 / 720.0;
        (sinc, cos)
    } else {
        (pm.sin() / pm, pm.cos())
    }
}

/// `exp(i P·σ)`; `P` may be complex (SL).
pub fn exp_i_p_sigma(p: [Complex64; 3]) -> CMat {
    let (sinc, cos) = sinc_cos(&p);
    let i = ci();
    let (px, py, pz) = (p[0], p[1], p[2]);
    CMat::from_row_slice(
        2,
        2,
        &[
            cos - i * sinc * pz,
            i * sinc * (px + i * py),
            i * sinc * (px - i * py),
            cos + i * sinc * pz,
        ],
    )
}

/// `(A, B, C)` with `e^{Aσ⁻}e^{Bσᶻ}e^{Cσ⁺} = exp(iP·σ)`.
pub fn su2_to_abc(p: [Complex64; 3]) -> Result<Abc> {
    let (sinc, cos) = sinc_cos(&p);
    let i = ci();
    let denom = cos + i * p[2] * sinc;
    if denom.norm() < 1e-14 {
        return Err(Error::SingularFactorization);
    }
    Ok(Abc {
        a: (i * p[0] - p[1]) * sinc / denom,
        b: denom.ln(),
        c: (i * p[0] + p[1]) * sinc / denom,
    })
}

/// Reassemble `e^{Aσ⁻}e^{Bσᶻ}e^{Cσ⁺}`.
pub fn abc_matrix(abc: &Abc) -> CMat {
    let eb = abc.b.exp();
    let emb = (-abc.b).exp();
    CMat::from_row_slice(
        2,
        2,
        &[emb + abc.a * abc.c * eb, abc.a * eb, abc.c * eb, eb],
    )
}

/// Factorization of a 2×2 matrix scaled to determinant 1, when its
/// `|1⟩⟨1|` entry is nonzero.
fn abc_from_matrix(m: &CMat) -> Option<Abc> {
    let d = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if d.norm() == 0.0 {
        return None;
    }
    let k = d.sqrt().inv();
    let m11 = m[(1, 1)] * k;
    if m11.norm() < 1e-12 {
        return None;
    }
    Some(Abc {
        a: m[(0, 1)] * k / m11,
        b: m11.ln(),
        c: m[(1, 0)] * k / m11,
    })
}

impl LocalOp {
    /// A qubit or qudit operation from its matrix.
    pub fn from_matrix(element: usize, matrix: CMat, group: Group) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() < 2 {
            return Err(Error::Shape(
                "local operation must be square, dimension ≥ 2".into(),
            ));
        }
        let abc = if matrix.nrows() == 2 {
            abc_from_matrix(&matrix)
        } else {
            None
        };
        Ok(LocalOp {
            element,
            matrix,
            abc,
            group,
        })
    }

    /// `exp(iP·σ)` with real `P`.
    pub fn su2(element: usize, p: [f64; 3]) -> Self {
        let pc = [c(p[0], 0.0), c(p[1], 0.0), c(p[2], 0.0)];
        LocalOp {
            element,
            matrix: exp_i_p_sigma(pc),
            abc: su2_to_abc(pc).ok(),
            group: Group::SU,
        }
    }

    /// `exp(iP·σ)` with complex `P`.
    pub fn sl2(element: usize, p: [Complex64; 3]) -> Self {
        LocalOp {
            element,
            matrix: exp_i_p_sigma(p),
            abc: su2_to_abc(p).ok(),
            group: Group::SL,
        }
    }

    pub fn from_abc(element: usize, abc: Abc) -> Self {
        LocalOp {
            element,
            matrix: abc_matrix(&abc),
            abc: Some(abc),
            group: Group::SL,
        }
    }

    pub fn identity(element: usize, d: usize) -> Self {
        let matrix = CMat::identity(d, d);
        let abc = (d == 2).then_some(Abc {
            a: c0(),
            b: c0(),
            c: c0(),
        });
        LocalOp {
            element,
            matrix,
            abc,
            group: Group::SU,
        }
    }

    /// `diag(e^{−iθ/2}, e^{iθ/2})`: multiplies `σ⁺` by `e^{iθ}`.
    pub fn phase(element: usize, theta: f64) -> Self {
        Self::su2(element, [0.0, 0.0, theta / 2.0])
    }

    /// `diag(q^{−1/2}, q^{1/2})`: multiplies `σ⁺` by `q`.
    pub fn scaling(element: usize, q: Complex64) -> Self {
        let h = q.sqrt();
        let matrix = CMat::from_row_slice(2, 2, &[h.inv(), c0(), c0(), h]);
        Self::from_matrix(element, matrix, Group::SL).expect("2×2")
    }

    /// `iσˣ`, a determinant-1 exchange of `|0⟩` and `|1⟩`.
    pub fn flip(element: usize) -> Self {
        let matrix = CMat::from_row_slice(2, 2, &[c0(), ci(), ci(), c0()]);
        LocalOp {
            element,
            matrix,
            abc: None,
            group: Group::SU,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn det(&self) -> Complex64 {
        self.matrix.clone().determinant()
    }

    pub fn inverse(&self) -> Self {
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .expect("local operation is invertible");
        LocalOp::from_matrix(self.element, inv, self.group).expect("square")
    }

    /// The operation `next ∘ self`.
    pub fn then(&self, next: &LocalOp) -> Self {
        let group = if self.group == Group::SU && next.group == Group::SU {
            Group::SU
        } else {
            Group::SL
        };
        LocalOp::from_matrix(self.element, &next.matrix * &self.matrix, group).expect("square")
    }
}

/// Apply a `d×d` matrix to element `e` of a state.
pub fn apply_matrix_to_state(s: &StateVector, e: usize, m: &CMat) -> Result<StateVector> {
    if e >= s.n() {
        return Err(Error::IndexOutOfRange { index: e, n: s.n() });
    }
    let d = s.dims()[e];
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::Shape(
            "operation dimension differs from element dimension".into(),
        ));
    }
    let stride = s.stride(e);
    let src = s.amps();
    let mut out = src.to_vec();
    let mut buf = alloc::vec![c0(); d];
    for base in (0..s.len()).filter(|&idx| s.digit(idx, e) == 0) {
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = src[base + k * stride];
        }
        for r in 0..d {
            out[base + r * stride] = (0..d).map(|k| m[(r, k)] * buf[k]).sum();
        }
    }
    StateVector::new(s.dims().to_vec(), out)
}

pub fn apply_local_to_state(s: &StateVector, op: &LocalOp) -> Result<StateVector> {
    apply_matrix_to_state(s, op.element, &op.matrix)
}

/// Apply every operation in turn.
pub fn apply_locals_to_state(s: &StateVector, ops: &[LocalOp]) -> Result<StateVector> {
    let mut out = s.clone();
    for op in ops {
        out = apply_local_to_state(&out, op)?;
    }
    Ok(out)
}

/// Apply a factorized qubit operation to `F`.
///
/// Returns `(F′, κ)` where `F′` has unit constant term and
/// `op·F|O⟩ = κ F′|O⟩`.
pub fn apply_local_to_poly(f: &NilPoly, op: &LocalOp) -> Result<(NilPoly, Complex64)> {
    if f.rule() != MulRule::QubitSubset || op.dim() != 2 {
        return Err(Error::WrongRule("QUBIT_SUBSET"));
    }
    if op.element >= f.n() {
        return Err(Error::IndexOutOfRange {
            index: op.element,
            n: f.n(),
        });
    }
    let (g, k) = match op.abc {
        Some(abc) => {
            let lambda = op.det().sqrt();
            (apply_abc(f, op.element, &abc)?, lambda)
        }
        None => {
            // Split into two factorizable pieces: M = (M X⁻¹) X.
            let (first, second) = split_factorizable(op).ok_or(Error::SingularFactorization)?;
            let (g1, k1) = apply_local_to_poly(f, &first)?;
            let (g2, k2) = apply_local_to_poly(&g1, &second)?;
            return Ok((g2, k1 * k2));
        }
    };
    let kappa = g.constant();
    if kappa.norm() < 1e-300 {
        return Err(Error::VacuumZero { time: None });
    }
    Ok((g.scale(kappa.inv()), kappa * k))
}

fn apply_abc(f: &NilPoly, i: usize, abc: &Abc) -> Result<NilPoly> {
    let mut lin = f.one_like();
    lin.set(1 << i, abc.c);
    let g = f * &lin;
    let e2b = (abc.b * 2.0).exp();
    Ok(affine_substitute(&g, i, e2b * abc.a, e2b)?.scale((-abc.b).exp()))
}

fn split_factorizable(op: &LocalOp) -> Option<(LocalOp, LocalOp)> {
    let quarter = core::f64::consts::FRAC_PI_4;
    for p in [[quarter, 0.0, 0.0], [0.0, quarter, 0.0], [1.0, 0.3, 0.2]] {
        let x = LocalOp::su2(op.element, p);
        let rest = &op.matrix * x.matrix.clone().try_inverse()?;
        let rest = LocalOp::from_matrix(op.element, rest, op.group).ok()?;
        if x.abc.is_some() && rest.abc.is_some() {
            return Some((x, rest));
        }
    }
    None
}

fn check_gate(n: usize, g: &GateOp) -> Result<()> {
    if g.i == g.j {
        return Err(Error::Shape("gate needs two distinct qubits".into()));
    }
    for e in [g.i, g.j] {
        if e >= n {
            return Err(Error::IndexOutOfRange { index: e, n });
        }
    }
    Ok(())
}

/// Rotate the `σᵢ⁺`- and `σⱼ⁺`-coefficients; other terms are untouched.
fn rotate_pair(amps: &mut [Complex64], g: &GateOp) {
    let (bi, bj) = (1usize << g.i, 1usize << g.j);
    let (cs, sn) = (fm::cos(g.t), fm::sin(g.t));
    for m in 0..amps.len() {
        if m & bi != 0 && m & bj == 0 {
            let m2 = m ^ bi ^ bj;
            let (a, b) = (amps[m], amps[m2]);
            amps[m] = a * cs + ci() * b * sn;
            amps[m2] = b * cs + ci() * a * sn;
        }
    }
}

pub fn apply_gate(f: &NilPoly, gate: &GateOp) -> Result<NilPoly> {
    if f.rule() != MulRule::QubitSubset {
        return Err(Error::WrongRule("QUBIT_SUBSET"));
    }
    check_gate(f.n(), gate)?;
    let mut out = f.clone();
    rotate_pair(out.coeffs_mut(), gate);
    Ok(out)
}

pub fn apply_gate_to_state(s: &StateVector, gate: &GateOp) -> Result<StateVector> {
    if !s.is_qubits() {
        return Err(Error::Unsupported("gate on non-qubit elements".into()));
    }
    check_gate(s.n(), gate)?;
    let mut amps = s.amps().to_vec();
    rotate_pair(&mut amps, gate);
    StateVector::new(s.dims().to_vec(), amps)
}

/// Transform `f` by the closed-form expressions; the constant term is dropped.
pub fn transform_nilpotential(f: &NilPoly, tr: &NilTransform) -> Result<NilPoly> {
    if f.rule() != MulRule::QubitSubset {
        return Err(Error::WrongRule("QUBIT_SUBSET"));
    }
    let out = match *tr {
        NilTransform::Rotation { element, p, phi } => rotate_nilpotential(f, element, p, phi)?,
        NilTransform::Gate(g) => {
            check_gate(f.n(), &g)?;
            gate_nilpotential(f, &g)?
        }
    };
    Ok(out.without_constant())
}

fn rotate_nilpotential(f: &NilPoly, i: usize, p: f64, phi: f64) -> Result<NilPoly> {
    let fi = partial(f, i)?;
    let e = Complex64::from_polar(1.0, phi);
    let (cp, sp) = (c(fm::cos(p), 0.0), c(fm::sin(p), 0.0));
    // D = cos P + i e^{iφ} f_i sin P; the tan P form of the second term is
    // multiplied through by cos P so that P = π/2 stays finite.
    let d = &f.one_like().scale(cp) + &fi.scale(ci() * e * sp);
    if d.constant().norm() < 1e-14 {
        return Err(Error::VacuumZero { time: None });
    }
    let log_d = ln_any(&d)?;
    let mut numer = (&fi * &fi).scale(e);
    numer.set(0, numer.constant() - e.conj());
    let mut sigma = f.zero_like();
    sigma.set(1 << i, c1());
    let second = &(&sigma * &numer) * &inverse(&d)?;
    Ok(&(f + &log_d) - &second.scale(ci() * sp))
}

fn gate_nilpotential(f: &NilPoly, g: &GateOp) -> Result<NilPoly> {
    let fi = partial(f, g.i)?;
    let fj = partial(f, g.j)?;
    let fij = partial(&fi, g.j)?;
    let (cs, sn) = (fm::cos(g.t), fm::sin(g.t));
    let mut si = f.zero_like();
    si.set(1 << g.i, c1());
    let mut sj = f.zero_like();
    sj.set(1 << g.j, c1());
    let sij = &si * &sj;
    let i = ci();
    let r = |x: f64| c(x, 0.0);
    let mut out = f + &(&sij * &fij).scale(r(2.0 * (1.0 - cs)));
    // −(σⱼ − σⱼ cos t − iσᵢ sin t) fⱼ
    let wj = &sj.scale(r(1.0 - cs)) - &si.scale(i * sn);
    out = &out - &(&wj * &fj);
    let wi = &si.scale(r(1.0 - cs)) - &sj.scale(i * sn);
    out = &out - &(&wi * &fi);
    let s2 = fm::sin(2.0 * g.t) / 2.0;
    let quad = &(&(&fi * &fi) + &(&fj * &fj)).scale(r(s2)) + &(&fi * &fj).scale(i * 2.0 * sn * sn);
    out = &out - &(&sij * &quad).scale(i);
    Ok(out)
}

/// Haar-random SU(2) matrix.
pub fn random_su2<R: Rng + ?Sized>(rng: &mut R) -> CMat {
    let mut q = [0.0f64; 4];
    for x in q.iter_mut() {
        *x = StandardNormal.sample(rng);
    }
    let n = fm::sqrt(q.iter().map(|x| x * x).sum());
    let (a, b) = (c(q[0] / n, q[1] / n), c(q[2] / n, q[3] / n));
    CMat::from_row_slice(2, 2, &[a, -b.conj(), b, a.conj()])
}

/// Random determinant-1 2×2 matrix with condition number below `max_cond`.
pub fn random_sl2<R: Rng + ?Sized>(rng: &mut R, max_cond: f64) -> CMat {
    let u = random_su2(rng);
    let v = random_su2(rng);
    let s = fm::sqrt(1.0 + (max_cond - 1.0) * rng.gen::<f64>() * 0.999);
    let phase = Complex64::from_polar(1.0, rng.gen::<f64>() * core::f64::consts::TAU);
    // Any complex diagonal with modulus ratio s² keeps the condition number.
    let d = CMat::from_row_slice(
        2,
        2,
        &[phase * fm::sqrt(s), c0(), c0(), phase.inv() / fm::sqrt(s)],
    );
    u * d * v
}

/// One random local operation per element.
pub fn random_local_ops<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    group: Group,
    max_cond: f64,
) -> Vec<LocalOp> {
    (0..n)
        .map(|e| {
            let m = match group {
                Group::SU => random_su2(rng),
                Group::SL => random_sl2(rng, max_cond),
            };
            LocalOp::from_matrix(e, m, group).expect("2×2")
        })
        .collect()
}
