//! Qudit canonical forms and generating functions of restricted algebras.
//!
//! Levels are numbered from the reference state: `|0⟩` is the lowest level
//! and `ν^κ = |κ⟩⟨0|` raises it. Matrices act on column vectors indexed by
//! level, so raising operators are strictly lower triangular here; reversing
//! the level order gives the upper-triangular picture.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::canon::{self, Convergence, Tanglemeter};
use crate::error::{Error, Result};
use crate::fm;
use crate::linalg::{c, c0, c1, ci, expm, hermitian_eigen, CMat};
use crate::localops::{apply_matrix_to_state, Group, LocalOp};
use crate::nilring::{log_unit, MulRule, NilPoly};
use crate::states::{nilpotential, reduced_density, StateVector};
use crate::Tolerances;

/// `|to⟩⟨from|` in dimension `d`.
pub fn unit(d: usize, to: usize, from: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(to, from)] = c1();
    m
}

fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Cartan subalgebra and a commuting set of raising operators of `su(d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartanWeyl {
    pub d: usize,
    /// `d − 1` diagonal traceless generators; for `d = 3` these are `λ³`, `λ⁸`.
    pub cartan: Vec<CMat>,
    /// `ν^κ = |κ⟩⟨0|` for `κ = 1..d−1`.
    pub raising: Vec<CMat>,
}

impl CartanWeyl {
    pub fn new(d: usize) -> Self {
        assert!(d >= 2, "dimension must be at least 2");
        // Generalized Gell-Mann diagonals, written in the reversed level order.
        let cartan = (1..d)
            .map(|l| {
                let norm = fm::sqrt(2.0 / (l * (l + 1)) as f64);
                CMat::from_fn(d, d, |r, k| {
                    if r != k {
                        return c0();
                    }
                    let j = d - 1 - r;
                    match j.cmp(&l) {
                        core::cmp::Ordering::Less => c(norm, 0.0),
                        core::cmp::Ordering::Equal => c(-(l as f64) * norm, 0.0),
                        core::cmp::Ordering::Greater => c0(),
                    }
                })
            })
            .collect();
        let raising = (1..d).map(|k| unit(d, k, 0)).collect();
        CartanWeyl { d, cartan, raising }
    }

    pub fn lowering(&self) -> Vec<CMat> {
        self.raising.iter().map(|m| m.adjoint()).collect()
    }

    /// Orthogonal Hermitian basis of `su(d)`: symmetric and antisymmetric
    /// off-diagonal pairs, then the Cartan generators.
    pub fn hermitian_basis(&self) -> Vec<CMat> {
        let d = self.d;
        let mut out = Vec::new();
        for r in 0..d {
            for k in r + 1..d {
                out.push(unit(d, r, k) + unit(d, k, r));
                out.push((unit(d, r, k) - unit(d, k, r)) * c(0.0, -1.0));
            }
        }
        out.extend(self.cartan.iter().cloned());
        out
    }

    /// Largest violation of the structural identities: traceless commuting
    /// diagonal Cartan set, strictly triangular raising set with vanishing
    /// pairwise products, lowering set annihilating `|0⟩`.
    pub fn residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for h in &self.cartan {
            worst = worst.max(h.trace().norm());
            for r in 0..self.d {
                for k in 0..self.d {
                    if r != k {
                        worst = worst.max(h[(r, k)].norm());
                    }
                }
            }
            for g in &self.cartan {
                worst = worst.max(max_abs(&commutator(h, g)));
            }
        }
        for a in &self.raising {
            for r in 0..self.d {
                for k in r..self.d {
                    worst = worst.max(a[(r, k)].norm());
                }
            }
            for b in &self.raising {
                worst = worst.max(max_abs(&(a * b)));
            }
        }
        let mut vac = DVector::from_element(self.d, c0());
        vac[0] = c1();
        for low in self.lowering() {
            worst = worst.max((low * &vac).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        worst
    }
}

/// `s⁺ = |2⟩⟨1|`.
pub fn s_plus() -> CMat {
    unit(3, 2, 1)
}

/// `t⁺ = |1⟩⟨0|`.
pub fn t_plus() -> CMat {
    unit(3, 1, 0)
}

/// `u⁺ = |2⟩⟨0|`.
pub fn u_plus() -> CMat {
    unit(3, 2, 0)
}

/// An `su(2)` embedded in `su(d)` with a distinguished reference level.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedAlgebra {
    pub d: usize,
    /// `S₊`, the raising element whose powers generate the variables.
    pub raising: CMat,
    pub sz: CMat,
    /// `J₊` normalized so that `[J₊, J₋] = 2 S_z`.
    pub su2_raising: CMat,
    pub reference: usize,
    /// Smallest `p` with `S₊^p = 0`.
    pub order: usize,
}

impl RestrictedAlgebra {
    /// Spin 1 in `su(3)`: `S₊ = u⁺ + t⁻`, `S_z = λ³`, reference level 1.
    pub fn spin1() -> Self {
        let raising = u_plus() + t_plus().adjoint();
        let sz = CartanWeyl::new(3).cartan[0].clone();
        let su2_raising = &raising * c(fm::sqrt(2.0), 0.0);
        RestrictedAlgebra {
            d: 3,
            raising,
            sz,
            su2_raising,
            reference: 1,
            order: 3,
        }
    }

    pub fn lowering(&self) -> CMat {
        self.raising.adjoint()
    }

    /// `S₊^e|ref⟩` for `e = 0..order`.
    fn ladder(&self) -> Vec<DVector<Complex64>> {
        let mut v = DVector::from_element(self.d, c0());
        v[self.reference] = c1();
        let mut out = Vec::with_capacity(self.order);
        for _ in 0..self.order {
            out.push(v.clone());
            v = &self.raising * v;
        }
        out
    }

    fn ladder_is_basis(&self) -> bool {
        let l = self.ladder();
        self.order == self.d
            && (0..self.d).all(|a| {
                (0..self.d).all(|b| {
                    let ip: Complex64 = l[a]
                        .iter()
                        .zip(l[b].iter())
                        .map(|(x, y)| x.conj() * y)
                        .sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    (ip - want).norm() < 1e-12
                })
            })
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

fn check_uniform(s: &StateVector, d: usize) -> Result<()> {
    if s.dims().iter().any(|&x| x != d) {
        return Err(Error::Unsupported(format!(
            "restricted algebra needs every element of dimension {d}"
        )));
    }
    Ok(())
}

/// `F(x) = ⟨O| exp[Σ xᵢ S₋ᵢ] |Ψ⟩ / ⟨O|Ψ⟩` with `O` the all-reference state,
/// as a polynomial with per-variable degree below `alg.order`.
pub fn generating_function(s: &StateVector, alg: &RestrictedAlgebra) -> Result<NilPoly> {
    check_uniform(s, alg.d)?;
    let n = s.n();
    let p = alg.order;
    let ladder = alg.ladder();
    let ref_idx: usize = (0..n).map(|e| alg.reference * s.stride(e)).sum();
    let psi_ref = s.amp(ref_idx);
    if psi_ref.norm() < 1e-300 {
        return Err(Error::VacuumZero { time: None });
    }
    let mut out = NilPoly::zero(vec![(p - 1) as u8; n], MulRule::DegreeCapped);
    for m in 0..out.len() {
        let exps = out.exponents(m);
        let weight: f64 = exps.iter().map(|&e| factorial(e as usize)).product();
        let mut acc = c0();
        for (idx, &a) in s.amps().iter().enumerate() {
            if a == c0() {
                continue;
            }
            let mut w = c1();
            for (e, &k) in exps.iter().enumerate() {
                w *= ladder[k as usize][s.digit(idx, e)].conj();
            }
            acc += w * a;
        }
        out.set(m, acc / (psi_ref * weight));
    }
    Ok(out)
}

/// Inverse of [`generating_function`] up to normalization: the state whose
/// reference amplitude is 1. Needs the ladder `S₊^e|ref⟩` to be an
/// orthonormal basis, as it is for spin 1.
pub fn state_from_generating_function(f: &NilPoly, alg: &RestrictedAlgebra) -> Result<StateVector> {
    if f.rule() != MulRule::DegreeCapped
        || f.caps().iter().any(|&cap| cap as usize + 1 != alg.order)
    {
        return Err(Error::WrongRule("DEGREE_CAPPED"));
    }
    if !alg.ladder_is_basis() {
        return Err(Error::Unsupported(
            "ladder does not span the element".into(),
        ));
    }
    let n = f.n();
    let ladder = alg.ladder();
    let dims = vec![alg.d; n];
    let mut amps = vec![c0(); alg.d.pow(n as u32)];
    for (m, coef) in f.terms() {
        let exps = f.exponents(m);
        let weight: f64 = exps.iter().map(|&e| factorial(e as usize)).product();
        for (idx, slot) in amps.iter_mut().enumerate() {
            let mut w = c1();
            let mut rest = idx;
            for &k in &exps {
                w *= ladder[k as usize][rest % alg.d];
                rest /= alg.d;
            }
            *slot += coef * weight * w;
        }
    }
    StateVector::new(dims, amps)
}

/// Level permutation `ψ̃₀ = ψ₁, ψ̃₁ = −ψ₀, ψ̃₂ = ψ₂` (determinant 1) making
/// the spin-1 extremal-weight level the reference.
pub fn extremal_weight_matrix() -> CMat {
    let mut m = CMat::zeros(3, 3);
    m[(0, 1)] = c1();
    m[(1, 0)] = -c1();
    m[(2, 2)] = c1();
    m
}

/// Apply [`extremal_weight_matrix`] to every qutrit.
pub fn extremal_weight_relabel(s: &StateVector) -> Result<StateVector> {
    check_uniform(s, 3)?;
    let m = extremal_weight_matrix();
    let mut out = s.clone();
    for e in 0..s.n() {
        out = apply_matrix_to_state(&out, e, &m)?;
    }
    Ok(out)
}

/// Maximization of one basis amplitude over rotations `exp(Σ aR − āR†)`.
///
/// Every generator `R` must satisfy `R†|K⟩ = 0` for the target `|K⟩`, so that
/// `⟨RK|φ⟩ / ⟨K|φ⟩` vanishes exactly at stationary points.
struct Target {
    dims: Vec<usize>,
    strides: Vec<usize>,
    index: usize,
    gens: Vec<(usize, CMat)>,
    /// `‖R|K⟩‖²` per generator.
    weights: Vec<f64>,
}

struct Run {
    frame: Vec<CMat>,
    iterations: usize,
    residual: f64,
    converged: bool,
}

impl Target {
    fn new(dims: &[usize], levels: &[usize], gens: Vec<(usize, CMat)>) -> Self {
        let mut strides = Vec::with_capacity(dims.len());
        let mut acc = 1;
        for &d in dims {
            strides.push(acc);
            acc *= d;
        }
        let index = levels.iter().zip(&strides).map(|(k, s)| k * s).sum();
        let weights = gens
            .iter()
            .map(|(e, r)| (0..dims[*e]).map(|l| r[(l, levels[*e])].norm_sqr()).sum())
            .collect();
        Target {
            dims: dims.to_vec(),
            strides,
            index,
            gens,
            weights,
        }
    }

    fn identity(&self) -> Vec<CMat> {
        self.dims.iter().map(|&d| CMat::identity(d, d)).collect()
    }

    fn apply(&self, frame: &[CMat], s: &StateVector) -> StateVector {
        let mut out = s.clone();
        for (e, m) in frame.iter().enumerate() {
            if *m != CMat::identity(m.nrows(), m.ncols()) {
                out = apply_matrix_to_state(&out, e, m).expect("frame matches dims");
            }
        }
        out
    }

    fn level(&self, e: usize) -> usize {
        self.index / self.strides[e] % self.dims[e]
    }

    fn residuals(&self, phi: &StateVector) -> Option<Vec<Complex64>> {
        let pk = phi.amp(self.index);
        if pk.norm() < 1e-150 {
            return None;
        }
        Some(
            self.gens
                .iter()
                .map(|(e, r)| {
                    let k = self.level(*e);
                    let base = self.index - k * self.strides[*e];
                    let ip: Complex64 = (0..self.dims[*e])
                        .map(|l| r[(l, k)].conj() * phi.amp(base + l * self.strides[*e]))
                        .sum();
                    ip / pk
                })
                .collect(),
        )
    }

    fn rotate(&self, frame: &[CMat], a: &[Complex64]) -> Vec<CMat> {
        let mut out = frame.to_vec();
        for (e, u) in out.iter_mut().enumerate() {
            let d = self.dims[e];
            let mut g = CMat::zeros(d, d);
            let mut any = false;
            for ((ge, r), &aj) in self.gens.iter().zip(a) {
                if *ge == e && aj != c0() {
                    g += r * aj - r.adjoint() * aj.conj();
                    any = true;
                }
            }
            if any {
                *u = expm(&g) * &*u;
            }
        }
        out
    }

    fn population(&self, phi: &StateVector) -> f64 {
        phi.amp(self.index).norm_sqr() / phi.norm_sqr()
    }

    fn real_residual(&self, frame: &[CMat], s: &StateVector, x: &[f64]) -> Option<Vec<f64>> {
        let a: Vec<Complex64> = x.chunks(2).map(|p| c(p[0], p[1])).collect();
        let r = self.residuals(&self.apply(&self.rotate(frame, &a), s))?;
        Some(r.iter().flat_map(|z| [z.re, z.im]).collect())
    }

    /// Newton step on the real residual with a central-difference Jacobian.
    fn newton(&self, frame: &[CMat], s: &StateVector, r0: &[Complex64]) -> Option<Vec<CMat>> {
        let m2 = 2 * self.gens.len();
        let h = 1e-7;
        let mut jac = DMatrix::<f64>::zeros(m2, m2);
        let mut x = vec![0.0; m2];
        for j in 0..m2 {
            x[j] = h;
            let plus = self.real_residual(frame, s, &x)?;
            x[j] = -h;
            let minus = self.real_residual(frame, s, &x)?;
            x[j] = 0.0;
            for i in 0..m2 {
                jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        let rhs = DVector::from_iterator(m2, r0.iter().flat_map(|z| [-z.re, -z.im]));
        let step = jac.svd(true, true).solve(&rhs, 1e-12).ok()?;
        let norm0: f64 = r0.iter().map(|z| z.norm_sqr()).sum();
        let mut t = 1.0;
        for _ in 0..12 {
            let xs: Vec<f64> = step.iter().map(|v| v * t).collect();
            if let Some(r) = self.real_residual(frame, s, &xs) {
                if r.iter().map(|v| v * v).sum::<f64>() < norm0 {
                    let a: Vec<Complex64> = xs.chunks(2).map(|p| c(p[0], p[1])).collect();
                    return Some(self.rotate(frame, &a));
                }
            }
            t *= 0.5;
        }
        None
    }

    fn run(&self, s: &StateVector, start: Vec<CMat>, tol: &Tolerances) -> Run {
        let mut frame = start;
        let mut iterations = 0;
        loop {
            let phi = self.apply(&frame, s);
            let r = self.residuals(&phi);
            let residual = r.as_ref().map_or(f64::INFINITY, |r| {
                r.iter().map(|z| z.norm()).fold(0.0, f64::max)
            });
            if residual < tol.conv {
                return Run {
                    frame,
                    iterations,
                    residual,
                    converged: true,
                };
            }
            if iterations >= tol.max_iter {
                return Run {
                    frame,
                    iterations,
                    residual,
                    converged: false,
                };
            }
            iterations += 1;
            let r = match r {
                Some(r) => r,
                None => {
                    // Target amplitude vanishes: push off with a fixed rotation.
                    let a = vec![c(0.5, 0.0); self.gens.len()];
                    frame = self.rotate(&frame, &a);
                    continue;
                }
            };
            if residual < 1e-3 {
                if let Some(next) = self.newton(&frame, s, &r) {
                    frame = next;
                    continue;
                }
            }
            let a: Vec<Complex64> = r
                .iter()
                .zip(&self.weights)
                .map(|(rj, w)| {
                    let a = -rj * (0.1 / w);
                    if a.norm() > 0.5 {
                        a * (0.5 / a.norm())
                    } else {
                        a
                    }
                })
                .collect();
            frame = self.rotate(&frame, &a);
        }
    }

    /// Best converged run over the starts, ties to the earlier start.
    fn best(&self, s: &StateVector, starts: Vec<Vec<CMat>>, tol: &Tolerances) -> Result<Run> {
        let mut best: Option<(Run, f64)> = None;
        let mut total = 0;
        let mut worst = f64::INFINITY;
        for start in starts {
            let run = self.run(s, start, tol);
            total += run.iterations;
            if !run.converged {
                worst = worst.min(run.residual);
                continue;
            }
            let pop = self.population(&self.apply(&run.frame, s));
            if best.as_ref().is_none_or(|(_, p)| pop > p + 1e-12) {
                best = Some((run, pop));
            }
        }
        match best {
            Some((mut run, _)) => {
                run.iterations = total;
                Ok(run)
            }
            None => Err(Error::NonConverged {
                iterations: total,
                residual: worst,
            }),
        }
    }

    fn random_starts(&self, count: usize, seed: u64) -> Vec<Vec<CMat>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let a: Vec<Complex64> = self
                    .gens
                    .iter()
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        c(re, im)
                    })
                    .collect();
                self.rotate(&self.identity(), &a)
            })
            .collect()
    }
}

fn normalized(s: &StateVector) -> Result<StateVector> {
    let norm = fm::sqrt(s.norm_sqr());
    if norm == 0.0 {
        return Err(Error::InvalidState("zero vector".into()));
    }
    Ok(s.scale(c(1.0 / norm, 0.0)))
}

/// Frames sending each element's reduced eigenvectors to levels in
/// decreasing order, plus variants where the second eigenvector takes level
/// 0 on a subset of elements.
fn eigen_starts(s: &StateVector) -> Result<Vec<Vec<CMat>>> {
    let n = s.n();
    let mut bases = Vec::with_capacity(n);
    for e in 0..n {
        let (_, vecs) = hermitian_eigen(&reduced_density(s, &[e])?);
        bases.push(vecs);
    }
    let subsets: Vec<usize> = if n <= 4 {
        (0..1usize << n).collect()
    } else {
        (0..=n)
            .map(|k| if k == 0 { 0 } else { 1 << (k - 1) })
            .collect()
    };
    Ok(subsets
        .into_iter()
        .map(|mask| {
            bases
                .iter()
                .enumerate()
                .map(|(e, v)| {
                    let mut v = v.clone();
                    if mask >> e & 1 == 1 {
                        v.swap_columns(0, 1);
                    }
                    v.adjoint()
                })
                .collect()
        })
        .collect())
}

/// `SU(d)`-canonical form by sequential maximization.
///
/// Step `k` maximizes the population of the basis state with element `i` at
/// level `min(k, dᵢ − 1)`, rotating only levels `≥ k` of the elements with at
/// least two such levels. Earlier targets keep their stationarity because
/// those rotations never touch the amplitudes that had to vanish. Phases of
/// the nilpotent variables then make the largest independent coefficients
/// real positive. All-qubit input goes through [`canon::su_canonicalize`].
pub fn qudit_su_canonicalize(s: &StateVector) -> Result<Tanglemeter> {
    qudit_su_canonicalize_tol(s, &Tolerances::default())
}

pub fn qudit_su_canonicalize_tol(s: &StateVector, tol: &Tolerances) -> Result<Tanglemeter> {
    if s.is_qubits() {
        return canon::su_canonicalize_tol(s, tol);
    }
    let dims = s.dims().to_vec();
    let n = dims.len();
    let dmax = dims.iter().copied().max().unwrap_or(2);
    let mut cur = normalized(s)?;
    let mut frame: Vec<CMat> = dims.iter().map(|&d| CMat::identity(d, d)).collect();
    let mut iterations = 0;
    let mut residual: f64 = 0.0;
    for step in 0..dmax - 1 {
        let active: Vec<usize> = (0..n).filter(|&e| dims[e] >= step + 2).collect();
        let levels: Vec<usize> = dims.iter().map(|&d| step.min(d - 1)).collect();
        let mut gens = Vec::new();
        for &e in &active {
            for k in step + 1..dims[e] {
                gens.push((e, unit(dims[e], k, step)));
            }
        }
        let target = Target::new(&dims, &levels, gens);
        let mut starts = vec![target.identity()];
        if step == 0 {
            starts.extend(eigen_starts(&cur)?);
        } else {
            starts.extend(target.random_starts(3, step as u64));
        }
        let run = target.best(&cur, starts, tol)?;
        iterations += run.iterations;
        residual = residual.max(run.residual);
        cur = target.apply(&run.frame, &cur);
        for (f, r) in frame.iter_mut().zip(&run.frame) {
            *f = r * &*f;
        }
    }
    let f = nilpotential(&cur)?;
    let thetas = variable_phases(&f, &dims, tol.crit);
    for (e, th) in thetas.iter().enumerate() {
        let d = dims[e];
        let shift = th.iter().sum::<f64>() / d as f64;
        let ph = CMat::from_fn(d, d, |r, k| {
            if r != k {
                c0()
            } else {
                let t = if r == 0 { 0.0 } else { th[r - 1] };
                Complex64::from_polar(1.0, t - shift)
            }
        });
        cur = apply_matrix_to_state(&cur, e, &ph)?;
        frame[e] = ph * &frame[e];
    }
    let poly = nilpotential(&cur)?;
    let kappa = cur.amp(0);
    let transform = frame
        .into_iter()
        .enumerate()
        .map(|(e, m)| LocalOp::from_matrix(e, m, Group::SU))
        .collect::<Result<Vec<_>>>()?;
    Ok(Tanglemeter {
        poly,
        group: Group::SU,
        transform,
        kappa,
        convergence: Convergence {
            iterations,
            residual,
        },
    })
}

/// Greedy independent monomials by decreasing modulus, index order on ties,
/// solved for least-norm phases making them real positive.
fn greedy_phases(rows: Vec<(Vec<f64>, Complex64)>, nv: usize) -> Vec<f64> {
    let mut chosen: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut reduced: Vec<(Vec<f64>, usize)> = Vec::new();
    for (row, coef) in rows {
        if chosen.len() == nv {
            break;
        }
        let mut r = row.clone();
        for (red, p) in &reduced {
            let factor = r[*p] / red[*p];
            for (x, y) in r.iter_mut().zip(red) {
                *x -= factor * y;
            }
        }
        if let Some(p) = (0..nv).find(|&k| r[k].abs() > 1e-9) {
            reduced.push((r, p));
            chosen.push((row, -coef.arg()));
        }
    }
    if chosen.is_empty() {
        return vec![0.0; nv];
    }
    let a = DMatrix::<f64>::from_fn(chosen.len(), nv, |i, j| chosen[i].0[j]);
    let b = DVector::<f64>::from_iterator(chosen.len(), chosen.iter().map(|(_, t)| *t));
    let pinv = a
        .pseudo_inverse(1e-12)
        .expect("pseudo-inverse of a small matrix");
    (pinv * b).iter().copied().collect()
}

/// Phases `θ[e][k−1]` of `ν_e^k` for the qudit convention.
fn variable_phases(f: &NilPoly, dims: &[usize], floor: f64) -> Vec<Vec<f64>> {
    let mut offsets = Vec::with_capacity(dims.len());
    let mut nv = 0;
    for &d in dims {
        offsets.push(nv);
        nv += d - 1;
    }
    let mut order: Vec<usize> = (1..f.len())
        .filter(|&m| {
            f.get(m).norm() > floor && f.exponents(m).iter().filter(|&&k| k > 0).count() >= 2
        })
        .collect();
    order.sort_by(|&a, &b| {
        f.get(b)
            .norm()
            .partial_cmp(&f.get(a).norm())
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let rows = order
        .into_iter()
        .map(|m| {
            let mut row = vec![0.0; nv];
            for (e, &k) in f.exponents(m).iter().enumerate() {
                if k > 0 {
                    row[offsets[e] + k as usize - 1] = 1.0;
                }
            }
            (row, f.get(m))
        })
        .collect();
    let theta = greedy_phases(rows, nv);
    dims.iter()
        .enumerate()
        .map(|(e, &d)| theta[offsets[e]..offsets[e] + d - 1].to_vec())
        .collect()
}

/// Canonical form under the restricted spin-1 `SU(2)` on every qutrit.
///
/// The reference population is maximized, which removes the linear terms of
/// the generating function; rotations about `S_z` then make the `Sᵢ₊²`
/// coefficients (or, when they vanish, the next largest independent ones)
/// real positive. The returned polynomial is `ln F` in the `S₊` variables.
pub fn spin1_canonicalize(s: &StateVector) -> Result<Tanglemeter> {
    spin1_canonicalize_tol(s, &Tolerances::default())
}

pub fn spin1_canonicalize_tol(s: &StateVector, tol: &Tolerances) -> Result<Tanglemeter> {
    let alg = RestrictedAlgebra::spin1();
    check_uniform(s, 3)?;
    let n = s.n();
    let dims = s.dims().to_vec();
    let cur = normalized(s)?;
    let gens = (0..n).map(|e| (e, alg.su2_raising.clone())).collect();
    let target = Target::new(&dims, &vec![alg.reference; n], gens);
    let mut starts = vec![target.identity()];
    starts.extend(target.random_starts(7, 17));
    let run = target.best(&cur, starts, tol)?;
    let mut cur = target.apply(&run.frame, &cur);
    let mut frame = run.frame;

    let big_f = generating_function(&cur, &alg)?;
    let mut order: Vec<usize> = (1..big_f.len())
        .filter(|&m| big_f.get(m).norm() > tol.crit)
        .collect();
    let pure = |m: usize| big_f.exponents(m).iter().filter(|&&k| k > 0).count() == 1;
    order.sort_by(|&a, &b| {
        pure(b)
            .cmp(&pure(a))
            .then(
                big_f
                    .get(b)
                    .norm()
                    .partial_cmp(&big_f.get(a).norm())
                    .unwrap_or(core::cmp::Ordering::Equal),
            )
            .then(a.cmp(&b))
    });
    let rows = order
        .into_iter()
        .map(|m| {
            (
                big_f.exponents(m).iter().map(|&k| k as f64).collect(),
                big_f.get(m),
            )
        })
        .collect();
    let theta = greedy_phases(rows, n);
    for (e, &t) in theta.iter().enumerate() {
        // exp(iθ S_z) multiplies S₊ by e^{iθ}.
        let rot = CMat::from_fn(3, 3, |r, k| {
            if r == k {
                (alg.sz[(r, r)] * ci() * t).exp()
            } else {
                c0()
            }
        });
        cur = apply_matrix_to_state(&cur, e, &rot)?;
        frame[e] = rot * &frame[e];
    }
    let poly = log_unit(&generating_function(&cur, &alg)?)?;
    let ref_idx: usize = (0..n).map(|e| alg.reference * cur.stride(e)).sum();
    let transform = frame
        .into_iter()
        .enumerate()
        .map(|(e, m)| LocalOp::from_matrix(e, m, Group::SU))
        .collect::<Result<Vec<_>>>()?;
    Ok(Tanglemeter {
        poly,
        group: Group::SU,
        transform,
        kappa: cur.amp(ref_idx),
        convergence: Convergence {
            iterations: run.iterations,
            residual: run.residual,
        },
    })
}

/// Whether a qutrit state is a spin-1 coherent state (or a product of them):
/// its canonical generating function is identically 1.
pub fn is_spin1_coherent(s: &StateVector, tol: &Tolerances) -> Result<bool> {
    Ok(spin1_canonicalize_tol(s, tol)?.poly.max_abs() <= tol.class)
}

/// Real dimension of the local-unitary orbit space through `s`:
/// `2N` minus the rank of the tangent vectors `iHψ`, `ψ` and `iψ`.
pub fn qudit_coset_dimension(s: &StateVector) -> Result<usize> {
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    for (e, &d) in s.dims().iter().enumerate() {
        for h in CartanWeyl::new(d).hermitian_basis() {
            cols.push(apply_matrix_to_state(s, e, &(h * ci()))?.into_amps());
        }
    }
    cols.push(s.amps().to_vec());
    cols.push(s.amps().iter().map(|a| a * ci()).collect());
    Ok(2 * s.len() - canon::rank(&cols))
}

/// Parameter count `2∏dᵢ − 2 − Σ(dᵢ² − 1)` for a discrete generic stabilizer.
pub fn su_invariant_count(dims: &[usize]) -> usize {
    let total: usize = dims.iter().product();
    (2 * total).saturating_sub(2 + dims.iter().map(|d| d * d - 1).sum::<usize>())
}

/// Digits `(level of element 0, 1, 2)` of the pair terms with coefficient `β_g`.
const G_TERMS: [[u8; 3]; 3] = [[0, 1, 2], [1, 2, 0], [2, 0, 1]];
const U_TERMS: [[u8; 3]; 3] = [[2, 1, 0], [1, 0, 2], [0, 2, 1]];

/// Check that a three-qutrit nilpotential has the `SL`-canonical shape
/// `β_g(u₃t₂ + u₂t₁ + t₃u₁) + t₃t₂t₁ + β_u(t₂u₁ + u₃t₁ + t₃u₂) + u₃u₂u₁`
/// and return `(β_g, β_u)`.
pub fn sl_qutrit_form(f: &NilPoly, tol: f64) -> Result<(Complex64, Complex64)> {
    if f.caps() != [2, 2, 2] || f.rule() != MulRule::QuditExclusive {
        return Err(Error::Shape("three-qutrit nilpotential required".into()));
    }
    let at = |d: &[u8; 3]| f.get(f.index_of(d).expect("in range"));
    let bg = at(&G_TERMS[0]);
    let bu = at(&U_TERMS[0]);
    let mut expected = f.zero_like();
    for (terms, b) in [(G_TERMS, bg), (U_TERMS, bu)] {
        for d in terms {
            expected.set(f.index_of(&d).expect("in range"), b);
        }
    }
    for d in [[1u8, 1, 1], [2, 2, 2]] {
        expected.set(f.index_of(&d).expect("in range"), c1());
    }
    let diff = (f - &expected).max_abs();
    if diff > tol {
        return Err(Error::UnsupportedForm(format!(
            "deviates from the SL qutrit form by {diff:e}"
        )));
    }
    Ok((bg, bu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nilring::exp_nil;
    use crate::states::{random_state, schmidt_spectrum};
    use rand::Rng;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn cartan_weyl_structure() {
        for d in 2..=5 {
            assert!(CartanWeyl::new(d).residual() < 1e-14, "d = {d}");
        }
        let q = CartanWeyl::new(2);
        assert_eq!(q.cartan[0], crate::localops::sigma_z());
        let cw = CartanWeyl::new(3);
        let s3 = fm::sqrt(3.0);
        let want3 = [0.0, -1.0, 1.0];
        let want8 = [-2.0 / s3, 1.0 / s3, 1.0 / s3];
        for k in 0..3 {
            assert!((cw.cartan[0][(k, k)].re - want3[k]).abs() < 1e-15);
            assert!((cw.cartan[1][(k, k)].re - want8[k]).abs() < 1e-15);
        }
        assert_eq!(cw.raising, vec![t_plus(), u_plus()]);
    }

    #[test]
    fn su3_commutators() {
        let (s, t, u) = (s_plus(), t_plus(), u_plus());
        assert_eq!(commutator(&s, &t), u);
        assert_eq!(commutator(&s, &u), CMat::zeros(3, 3));
        assert_eq!(commutator(&t, &u), CMat::zeros(3, 3));
        assert_eq!(&t * &u, CMat::zeros(3, 3));
        assert_eq!(&u * &t, CMat::zeros(3, 3));
        // Raising set vanishes at power d − 1 = 2.
        assert_eq!(&t * &t, CMat::zeros(3, 3));
        let mu = &t + &s;
        assert_eq!(&mu * &mu, u);
    }

    #[test]
    fn spin1_algebra() {
        let a = RestrictedAlgebra::spin1();
        let sp = &a.raising;
        let sq = sp * sp;
        assert_eq!(sq, s_plus());
        assert!(max_abs(&sq) > 0.0);
        assert_eq!(&sq * sp, CMat::zeros(3, 3));
        assert_eq!(commutator(sp, &a.lowering()), a.sz);
        let jp = &a.su2_raising;
        assert!(max_abs(&(commutator(jp, &jp.adjoint()) - &a.sz * c(2.0, 0.0))) < 1e-14);
        assert!(max_abs(&(commutator(&a.sz, jp) - jp)) < 1e-14);
        assert!(a.ladder_is_basis());
    }

    fn spin1_state(alpha_s: Complex64, alpha_t: Complex64) -> StateVector {
        // levels: 0 = spin 0, 1 = reference, 2 = spin +1
        StateVector::new(vec![3], vec![alpha_t, c1(), alpha_s]).unwrap()
    }

    #[test]
    fn single_spin_generating_function() {
        let alg = RestrictedAlgebra::spin1();
        let (a_s, a_t) = (c(0.3, -0.7), c(-1.1, 0.4));
        let f = generating_function(&spin1_state(a_s, a_t), &alg).unwrap();
        assert_eq!(f.coeffs(), &[c1(), a_t, a_s * 0.5]);
        let g = generating_function(&spin1_state(c1(), c0()), &alg).unwrap();
        assert_eq!(g.coeffs(), &[c1(), c0(), c(0.5, 0.0)]);
    }

    #[test]
    fn two_spin_generating_function() {
        let alg = RestrictedAlgebra::spin1();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut r = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (s1, t1, s2, t2) = (r(), r(), r(), r());
        let (tt, ts, st, ss) = (r(), r(), r(), r());
        // Variable level of each element: reference 1, t⁻ → 0, s⁺ → 2.
        let mut amps = vec![c0(); 9];
        let idx = |l1: usize, l2: usize| l1 + 3 * l2;
        amps[idx(1, 1)] = c1();
        amps[idx(2, 1)] = s1;
        amps[idx(0, 1)] = t1;
        amps[idx(1, 2)] = s2;
        amps[idx(1, 0)] = t2;
        amps[idx(0, 0)] = tt;
        amps[idx(0, 2)] = ts;
        amps[idx(2, 0)] = st;
        amps[idx(2, 2)] = ss;
        let orig = StateVector::new(vec![3, 3], amps).unwrap();
        let f = generating_function(&orig, &alg).unwrap();
        let at = |x: u8, y: u8| f.get(f.index_of(&[x, y]).unwrap());
        assert_eq!(at(0, 0), c1());
        assert_eq!(at(1, 0), t1);
        assert_eq!(at(2, 0), s1 * 0.5);
        assert_eq!(at(0, 1), t2);
        assert_eq!(at(0, 2), s2 * 0.5);
        assert_eq!(at(1, 1), tt);
        assert_eq!(at(1, 2), ts * 0.5);
        assert_eq!(at(2, 1), st * 0.5);
        assert_eq!(at(2, 2), ss * 0.25);
        let back = state_from_generating_function(&f, &alg).unwrap();
        assert!(back
            .amps()
            .iter()
            .zip(orig.amps())
            .all(|(a, b)| close(*a, *b, 1e-15)));
    }

    #[test]
    fn generating_function_needs_reference() {
        let alg = RestrictedAlgebra::spin1();
        let s = StateVector::new(vec![3], vec![c1(), c0(), c0()]).unwrap();
        assert_eq!(
            generating_function(&s, &alg).unwrap_err().code(),
            "VACUUM_ZERO"
        );
        let q = StateVector::qubits(vec![c1(), c0()]).unwrap();
        assert_eq!(
            generating_function(&q, &alg).unwrap_err().code(),
            "UNSUPPORTED"
        );
    }

    #[test]
    fn two_qutrits_give_schmidt_values() {
        for seed in 0..5 {
            let s = random_state(&[3, 3], seed);
            let tm = qudit_su_canonicalize(&s).unwrap();
            let p = schmidt_spectrum(&s, &[0]).unwrap();
            let f = &tm.poly;
            for k in 1..3u8 {
                let want = fm::sqrt(p[k as usize] / p[0]);
                assert!(
                    close(f.get(f.index_of(&[k, k]).unwrap()), c(want, 0.0), 1e-9),
                    "seed {seed} k {k}"
                );
            }
            let others = f
                .terms()
                .filter(|(m, _)| ![4usize, 8].contains(m))
                .map(|(_, z)| z.norm())
                .fold(0.0, f64::max);
            assert!(others < 1e-9, "seed {seed}: {others}");
            assert!((tm.vacuum_population() - p[0]).abs() < 1e-9);
        }
    }

    /// Digits of the nonzero `F` coefficients of a generic canonical three-qutrit state.
    fn support_30a() -> Vec<[u8; 3]> {
        let mut out = Vec::new();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            for a in 1..3u8 {
                for b in 1..3u8 {
                    let mut d = [0u8; 3];
                    d[i] = a;
                    d[j] = b;
                    out.push(d);
                }
            }
        }
        out.extend([[1, 1, 1], [1, 2, 2], [2, 1, 2], [2, 2, 1], [2, 2, 2]]);
        out
    }

    #[test]
    fn three_qutrit_support() {
        let want = support_30a();
        assert_eq!(want.len(), 17);
        for seed in 0..3 {
            let s = random_state(&[3, 3, 3], 100 + seed);
            let tm = qudit_su_canonicalize(&s).unwrap();
            let big_f = exp_nil(&tm.poly).unwrap();
            for m in 1..big_f.len() {
                let d = big_f.exponents(m);
                let z = big_f.get(m).norm();
                if want.iter().any(|w| w[..] == d[..]) {
                    assert!(z > 1e-6, "seed {seed}: {d:?} should be present");
                } else {
                    assert!(z < 1e-9, "seed {seed}: {d:?} = {z:e}");
                }
            }
            let rec = tm.reconstruct().unwrap();
            assert!(rec.distance_up_to_phase(&s.normalized().unwrap()) < 1e-9);
        }
    }

    #[test]
    fn mixed_dimensions_follow_vanishing_rule() {
        for dims in [vec![2usize, 3], vec![3, 2, 4], vec![4, 4]] {
            let s = random_state(&dims, 7);
            let tm = qudit_su_canonicalize(&s).unwrap();
            let st = tm.state().unwrap();
            let dmax = *dims.iter().max().unwrap();
            for step in 0..dmax - 1 {
                for e in 0..dims.len() {
                    let k = step.min(dims[e] - 1);
                    if dims[e] < step + 2 {
                        continue;
                    }
                    for kp in k + 1..dims[e] {
                        let idx: usize = (0..dims.len())
                            .map(|i| if i == e { kp } else { step.min(dims[i] - 1) } * st.stride(i))
                            .sum();
                        assert!(
                            st.amp(idx).norm() < 1e-9,
                            "{dims:?} step {step} element {e} level {kp}"
                        );
                    }
                }
            }
            let rec = tm.reconstruct().unwrap();
            assert!(
                rec.distance_up_to_phase(&s.normalized().unwrap()) < 1e-9,
                "{dims:?}"
            );
        }
    }

    #[test]
    fn qubits_delegate_to_canon() {
        let s = random_state(&[2, 2, 2], 4);
        let a = qudit_su_canonicalize(&s).unwrap();
        let b = canon::su_canonicalize(&s).unwrap();
        assert!((&a.poly - &b.poly).max_abs() < 1e-9);
    }

    #[test]
    fn invariant_counts() {
        assert_eq!(su_invariant_count(&[3, 3, 3]), 28);
        assert_eq!(su_invariant_count(&[2, 2, 2]), 5);
        let s = random_state(&[3, 3, 3], 9);
        assert_eq!(qudit_coset_dimension(&s).unwrap(), 28);
        let q = random_state(&[2, 2, 2], 9);
        assert_eq!(
            qudit_coset_dimension(&q).unwrap(),
            canon::coset_dimension(&q, Group::SU).unwrap()
        );
    }

    #[test]
    fn middle_state_canonical_form() {
        let middle = StateVector::new(vec![3], vec![c1(), c0(), c0()]).unwrap();
        let tm = spin1_canonicalize(&middle).unwrap();
        assert!(close(tm.poly.get(1), c0(), 1e-9));
        assert!(close(tm.poly.get(2), c(0.5, 0.0), 1e-9));
        assert!((tm.vacuum_population() - 0.5).abs() < 1e-9);
        assert!(!is_spin1_coherent(&middle, &Tolerances::default()).unwrap());
    }

    #[test]
    fn single_spin_is_one_real_parameter() {
        for seed in 0..5 {
            let s = random_state(&[3], 30 + seed);
            let tm = spin1_canonicalize(&s).unwrap();
            assert!(tm.poly.get(1).norm() < 1e-9);
            let q = tm.poly.get(2);
            assert!(q.im.abs() < 1e-9 && q.re >= 0.0, "{q}");
            assert!(
                tm.reconstruct()
                    .unwrap()
                    .distance_up_to_phase(&s.normalized().unwrap())
                    < 1e-9
            );
        }
    }

    #[test]
    fn coherent_states_have_trivial_form() {
        let alg = RestrictedAlgebra::spin1();
        let g = &alg.su2_raising * c(0.7, -0.2);
        let rot = expm(&(&g - g.adjoint()));
        let s = apply_matrix_to_state(&StateVector::basis(vec![3], 1).unwrap(), 0, &rot).unwrap();
        assert!(is_spin1_coherent(&s, &Tolerances::default()).unwrap());
    }

    #[test]
    fn product_of_middle_states() {
        let amps: Vec<Complex64> = (0..9).map(|i| if i == 0 { c1() } else { c0() }).collect();
        let s = StateVector::new(vec![3, 3], amps).unwrap();
        let tm = spin1_canonicalize(&s).unwrap();
        let f = &tm.poly;
        for m in 1..f.len() {
            let want = if [2usize, 6].contains(&m) { 0.5 } else { 0.0 };
            assert!(close(f.get(m), c(want, 0.0), 1e-9), "{:?}", f.exponents(m));
        }
    }

    #[test]
    fn two_spin_canonical_relation() {
        let alg = RestrictedAlgebra::spin1();
        for seed in 0..5 {
            let s = random_state(&[3, 3], 50 + seed);
            let tm = spin1_canonicalize(&s).unwrap();
            let st = tm.state().unwrap();
            // |0,−1⟩ and |−1,0⟩ carry no population.
            // Index = level of element 0 + 3 × level of element 1.
            assert!(st.amp(1).norm() < 1e-9 * st.amp(4).norm());
            assert!(st.amp(3).norm() < 1e-9 * st.amp(4).norm());
            let big_f = generating_function(&st, &alg).unwrap();
            let at = |p: &NilPoly, x: u8, y: u8| p.get(p.index_of(&[x, y]).unwrap());
            let a_ss = 4.0 * at(&big_f, 2, 2);
            let a_tt = at(&big_f, 1, 1);
            let (a_s1, a_s2) = (2.0 * at(&big_f, 2, 0), 2.0 * at(&big_f, 0, 2));
            let b_ss = 4.0 * at(&tm.poly, 2, 2);
            assert!(
                close(b_ss, a_ss - 2.0 * a_tt * a_tt - a_s1 * a_s2, 1e-9),
                "seed {seed}"
            );
            assert!(
                tm.reconstruct()
                    .unwrap()
                    .distance_up_to_phase(&s.normalized().unwrap())
                    < 1e-9
            );
        }
    }

    #[test]
    fn extremal_relabel_moves_reference() {
        let m = extremal_weight_matrix();
        assert!(close(crate::linalg::det(&m), c1(), 1e-15));
        assert!(crate::linalg::is_unitary(&m, 1e-15));
        let s = StateVector::new(vec![3], vec![c(0.1, 0.0), c(0.2, 0.0), c(0.3, 0.0)]).unwrap();
        let r = extremal_weight_relabel(&s).unwrap();
        assert_eq!(r.amps(), &[c(0.2, 0.0), c(-0.1, 0.0), c(0.3, 0.0)]);
    }

    #[test]
    fn sl_form_membership() {
        let (bg, bu) = (c(0.3, 0.1), c(-0.5, 0.2));
        let mut f = NilPoly::zero(vec![2, 2, 2], MulRule::QuditExclusive);
        for d in G_TERMS {
            f.set(f.index_of(&d).unwrap(), bg);
        }
        for d in U_TERMS {
            f.set(f.index_of(&d).unwrap(), bu);
        }
        f.set(f.index_of(&[1, 1, 1]).unwrap(), c1());
        f.set(f.index_of(&[2, 2, 2]).unwrap(), c1());
        assert_eq!(sl_qutrit_form(&f, 1e-12).unwrap(), (bg, bu));
        f.set(f.index_of(&[1, 1, 0]).unwrap(), c(1e-3, 0.0));
        assert_eq!(
            sl_qutrit_form(&f, 1e-9).unwrap_err().code(),
            "UNSUPPORTED_FORM"
        );
    }
}
