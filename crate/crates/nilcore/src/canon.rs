//! Canonical forms under local SU(2) and SL(2, C), orbit classes, and
//! orbit-dimension counts.
//!
//! The SU form maximizes the vacuum population. Its stationarity condition
//! is the vanishing of every linear coefficient of the nilpotential, and the
//! search climbs to it with a feedback flow whose step on qubit `k` is the
//! rotation `exp(−ε(β_k σ⁺ − β̄_k σ⁻))`, followed by Newton polishing.
//!
//! The SL form additionally removes all `(n−1)`-order coefficients by a
//! holomorphic Newton iteration on `exp(u σ⁺ + v σ⁻)`, then fixes the scale.

use alloc::{format, string::String, vec, vec::Vec};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fm;
use crate::invariants::three_tangle;
use crate::linalg::{self, c, c0, c1, ci, CMat, CVec};
use crate::localops::{Group, LocalOp};
use crate::nilring::{exp_nil, mul, partial, MulRule, NilPoly};
use crate::states::{nilpotential, reduced_density, StateVector};
use crate::tol::Tolerances;

type M2 = [[Complex64; 2]; 2];

const ID2: M2 = [
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
];

/// Flow step size.
const FLOW_STEP: f64 = 0.1;
/// Residual below which the SU search switches to Newton.
const NEWTON_SWITCH: f64 = 1e-3;
const SL_NEWTON_MAX: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub iterations: usize,
    pub residual: f64,
}

/// A canonical nilpotential together with the local transformation that
/// produced it.
///
/// `transform` holds one operation per qubit; applying them to the input
/// gives `kappa · exp(poly)|O⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tanglemeter {
    pub poly: NilPoly,
    pub group: Group,
    pub transform: Vec<LocalOp>,
    pub kappa: Complex64,
    pub convergence: Convergence,
}

impl Tanglemeter {
    /// `kappa · exp(poly)|O⟩`. A degree-capped polynomial is read as the
    /// logarithm of a spin-1 generating function.
    pub fn state(&self) -> Result<StateVector> {
        Ok(self.unit_state()?.scale(self.kappa))
    }

    fn unit_state(&self) -> Result<StateVector> {
        let big_f = exp_nil(&self.poly)?;
        if self.poly.rule() == MulRule::DegreeCapped {
            crate::qudit::state_from_generating_function(
                &big_f,
                &crate::qudit::RestrictedAlgebra::spin1(),
            )
        } else {
            crate::states::from_poly(&big_f)
        }
    }

    /// The input state recovered from the canonical one.
    pub fn reconstruct(&self) -> Result<StateVector> {
        let mut out = self.state()?;
        for op in &self.transform {
            out = crate::localops::apply_local_to_state(&out, &op.inverse())?;
        }
        Ok(out)
    }

    /// `|ψ_O|² / Σ|ψ|²` of the canonical state.
    pub fn vacuum_population(&self) -> f64 {
        self.unit_state().map_or(0.0, |s| 1.0 / s.norm_sqr())
    }
}

/// An orbit class with its free parameters and, when known, the canonical
/// form written in the class's own qubit labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassLabel {
    pub name: String,
    pub params: Vec<Complex64>,
    pub gamma_zero_count: u8,
    pub form: Option<NilPoly>,
}

impl ClassLabel {
    fn plain(name: &str, form: Option<NilPoly>) -> Self {
        ClassLabel {
            name: name.into(),
            params: Vec::new(),
            gamma_zero_count: 0,
            form,
        }
    }
}

fn m2_mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[c0(); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn to_m2(m: &CMat) -> M2 {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn to_op(k: usize, m: &M2, group: Group) -> LocalOp {
    let mat = CMat::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]);
    LocalOp::from_matrix(k, mat, group).expect("2×2")
}

fn apply_m2(v: &mut [Complex64], k: usize, m: &M2) {
    let bit = 1 << k;
    for i in 0..v.len() {
        if i & bit == 0 {
            let (a, b) = (v[i], v[i | bit]);
            v[i] = m[0][0] * a + m[0][1] * b;
            v[i | bit] = m[1][0] * a + m[1][1] * b;
        }
    }
}

fn apply_frame(ms: &[M2], amps: &[Complex64]) -> Vec<Complex64> {
    let mut v = amps.to_vec();
    for (k, m) in ms.iter().enumerate() {
        apply_m2(&mut v, k, m);
    }
    v
}

/// `exp(a σ⁺ − ā σ⁻)`.
fn su_rotation(a: Complex64) -> M2 {
    let r = a.norm();
    if r == 0.0 {
        return ID2;
    }
    let s = fm::sin(r) / r;
    let co = c(fm::cos(r), 0.0);
    [[co, -a.conj() * s], [a * s, co]]
}

/// `exp(u σ⁺ + v σ⁻)`.
fn sl_exp(u: Complex64, v: Complex64) -> M2 {
    let g = CMat::from_row_slice(2, 2, &[c0(), v, u, c0()]);
    to_m2(&linalg::expm(&g))
}

/// Diagonal scaling multiplying `σ⁺` by `q`.
fn scaling_m2(q: Complex64) -> M2 {
    let h = q.sqrt();
    [[h.inv(), c0()], [c0(), h]]
}

/// `iσˣ`.
fn flip_m2() -> M2 {
    [[c0(), ci()], [ci(), c0()]]
}

fn require_qubits(s: &StateVector) -> Result<()> {
    if !s.is_qubits() {
        return Err(Error::Shape("qubit assembly required".into()));
    }
    Ok(())
}

fn linear_coeffs(v: &[Complex64], n: usize) -> (Vec<Complex64>, f64) {
    let v0 = v[0];
    if v0.norm() < 1e-150 {
        return (vec![c0(); n], f64::INFINITY);
    }
    let beta: Vec<Complex64> = (0..n).map(|k| v[1 << k] / v0).collect();
    let res = beta.iter().map(|b| b.norm()).fold(0.0, f64::max);
    (beta, res)
}

fn population(v: &[Complex64]) -> f64 {
    let total: f64 = v.iter().map(|a| a.norm_sqr()).sum();
    v[0].norm_sqr() / total
}

/// Solve a real square system, falling back to least squares.
fn solve_real(a: DMatrix<f64>, b: nalgebra::DVector<f64>) -> Option<nalgebra::DVector<f64>> {
    if let Some(x) = a.clone().lu().solve(&b) {
        if x.iter().all(|v| v.is_finite()) {
            return Some(x);
        }
    }
    a.svd(true, true).solve(&b, 1e-14).ok()
}

/// One damped Newton step on the linear coefficients, or `None` if no
/// step along the Newton direction lowers the residual.
fn su_newton_step(
    amps: &[Complex64],
    ms: &[M2],
    v: &[Complex64],
    beta: &[Complex64],
    res: f64,
) -> Option<Vec<M2>> {
    let n = ms.len();
    let v0 = v[0];
    // δβ_j = a_j + Σ_k C_jk ā_k to first order in the rotation parameters.
    let mut jm = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let cjk = if j == k {
                beta[j] * beta[j]
            } else {
                beta[j] * beta[k] - v[(1 << j) | (1 << k)] / v0
            };
            let delta = if j == k { c1() } else { c0() };
            let dx = delta + cjk;
            let dy = ci() * delta - ci() * cjk;
            jm[(j, k)] = dx.re;
            jm[(n + j, k)] = dx.im;
            jm[(j, n + k)] = dy.re;
            jm[(n + j, n + k)] = dy.im;
        }
    }
    let rhs = nalgebra::DVector::from_fn(
        2 * n,
        |i, _| if i < n { -beta[i].re } else { -beta[i - n].im },
    );
    let x = solve_real(jm, rhs)?;
    let mut t = 1.0;
    for _ in 0..8 {
        let trial: Vec<M2> = (0..n)
            .map(|k| m2_mul(&su_rotation(c(x[k], x[n + k]) * t), &ms[k]))
            .collect();
        let (_, r) = linear_coeffs(&apply_frame(&trial, amps), n);
        if r < res {
            return Some(trial);
        }
        t *= 0.5;
    }
    None
}

struct SuRun {
    ms: Vec<M2>,
    iterations: usize,
    residual: f64,
    converged: bool,
}

fn su_flow(amps: &[Complex64], mut ms: Vec<M2>, tol: &Tolerances) -> SuRun {
    let n = ms.len();
    let mut it = 0;
    loop {
        let v = apply_frame(&ms, amps);
        let (beta, res) = linear_coeffs(&v, n);
        if res < tol.conv || it >= tol.max_iter {
            return SuRun {
                ms,
                iterations: it,
                residual: res,
                converged: res < tol.conv,
            };
        }
        it += 1;
        if !res.is_finite() {
            for m in ms.iter_mut() {
                *m = m2_mul(&su_rotation(c(0.3, 0.1)), m);
            }
            continue;
        }
        if res < NEWTON_SWITCH {
            if let Some(next) = su_newton_step(amps, &ms, &v, &beta, res) {
                ms = next;
                continue;
            }
        }
        for (k, m) in ms.iter_mut().enumerate() {
            let mut a = -beta[k] * FLOW_STEP;
            if a.norm() > 0.5 {
                a *= 0.5 / a.norm();
            }
            *m = m2_mul(&su_rotation(a), m);
        }
    }
}

/// Starting frames: identity, then each qubit's dominant reduced
/// eigenvector rotated onto `|0⟩`, with subsets of qubits using the minor
/// eigenvector instead.
fn su_starts(amps: &[Complex64], n: usize) -> Vec<Vec<M2>> {
    let mut eig = Vec::with_capacity(n);
    for k in 0..n {
        let bit = 1 << k;
        let mut rho = CMat::zeros(2, 2);
        for i in (0..amps.len()).filter(|i| i & bit == 0) {
            let (a, b) = (amps[i], amps[i | bit]);
            rho[(0, 0)] += a * a.conj();
            rho[(0, 1)] += a * b.conj();
            rho[(1, 0)] += b * a.conj();
            rho[(1, 1)] += b * b.conj();
        }
        let (_, vecs) = linalg::hermitian_eigen(&rho);
        let (e0, e1) = (vecs[(0, 0)], vecs[(1, 0)]);
        let major = [[e0.conj(), e1.conj()], [-e1, e0]];
        let minor = [[-e1, e0], [-e0.conj(), -e1.conj()]];
        eig.push((major, minor));
    }
    let mut starts = vec![vec![ID2; n]];
    let subsets: Vec<usize> = if n <= 4 {
        (0..1usize << n).collect()
    } else {
        core::iter::once(0).chain((0..n).map(|k| 1 << k)).collect()
    };
    for mask in subsets {
        starts.push(
            (0..n)
                .map(|k| {
                    if mask >> k & 1 == 1 {
                        eig[k].1
                    } else {
                        eig[k].0
                    }
                })
                .collect(),
        );
    }
    starts
}

/// Local SU(2) canonical form: no linear terms, maximal vacuum population,
/// phases fixed.
pub fn su_canonicalize(s: &StateVector) -> Result<Tanglemeter> {
    su_canonicalize_tol(s, &Tolerances::default())
}

pub fn su_canonicalize_tol(s: &StateVector, tol: &Tolerances) -> Result<Tanglemeter> {
    require_qubits(s)?;
    let n = s.n();
    let norm = fm::sqrt(s.norm_sqr());
    if norm == 0.0 {
        return Err(Error::InvalidState("zero vector".into()));
    }
    let amps: Vec<Complex64> = s.amps().iter().map(|a| a / norm).collect();
    let mut best: Option<(SuRun, f64)> = None;
    let mut fallback: Option<SuRun> = None;
    let mut total_iter = 0;
    for start in su_starts(&amps, n) {
        let run = su_flow(&amps, start, tol);
        total_iter += run.iterations;
        if !run.converged {
            if fallback.as_ref().is_none_or(|f| run.residual < f.residual) {
                fallback = Some(run);
            }
            continue;
        }
        let pop = population(&apply_frame(&run.ms, &amps));
        if best.as_ref().is_none_or(|(_, p)| pop > p + 1e-12) {
            best = Some((run, pop));
        }
    }
    let run = match best {
        Some((run, _)) => run,
        None => {
            let f = fallback.expect("at least one start");
            return Err(Error::NonConverged {
                iterations: total_iter,
                residual: f.residual,
            });
        }
    };
    let mut ms = run.ms;
    let v = apply_frame(&ms, s.amps());
    let f = nilpotential(&StateVector::qubits(v)?)?;
    let theta = phase_angles(&f, tol.class);
    for (k, &t) in theta.iter().enumerate() {
        let ph = [
            [c(0.0, -t / 2.0).exp(), c0()],
            [c0(), c(0.0, t / 2.0).exp()],
        ];
        ms[k] = m2_mul(&ph, &ms[k]);
    }
    let v = apply_frame(&ms, s.amps());
    let kappa = v[0];
    let poly = nilpotential(&StateVector::qubits(v.clone())?)?;
    let (_, residual) = linear_coeffs(&v, n);
    Ok(Tanglemeter {
        poly,
        group: Group::SU,
        transform: ms
            .iter()
            .enumerate()
            .map(|(k, m)| to_op(k, m, Group::SU))
            .collect(),
        kappa,
        convergence: Convergence {
            iterations: run.iterations,
            residual,
        },
    })
}

/// Per-qubit phases `θ` making a maximal independent set of coefficients
/// real and positive: `(n−1)`-order monomials first, then the rest by
/// decreasing modulus.
fn phase_angles(f: &NilPoly, floor: f64) -> Vec<f64> {
    let n = f.n();
    let full = (1usize << n) - 1;
    let weight = |m: usize| m.count_ones() as usize;
    let mut order: Vec<usize> = (1..=full)
        .filter(|&m| weight(m) >= 2 && f.get(m).norm() > floor)
        .collect();
    order.sort_by(|&a, &b| {
        let pa = n >= 3 && weight(a) == n - 1;
        let pb = n >= 3 && weight(b) == n - 1;
        pb.cmp(&pa)
            .then(
                f.get(b)
                    .norm()
                    .partial_cmp(&f.get(a).norm())
                    .unwrap_or(core::cmp::Ordering::Equal),
            )
            .then(a.cmp(&b))
    });
    // Greedy independent rows, reduced in place for the rank test.
    let mut chosen: Vec<usize> = Vec::new();
    let mut reduced: Vec<Vec<f64>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for m in order {
        if chosen.len() == n {
            break;
        }
        let mut row: Vec<f64> = (0..n).map(|k| (m >> k & 1) as f64).collect();
        for (r, &p) in reduced.iter().zip(&pivots) {
            let factor = row[p] / r[p];
            for (x, y) in row.iter_mut().zip(r) {
                *x -= factor * y;
            }
        }
        if let Some(p) = (0..n).find(|&k| row[k].abs() > 1e-9) {
            reduced.push(row);
            pivots.push(p);
            chosen.push(m);
        }
    }
    if chosen.is_empty() {
        return vec![0.0; n];
    }
    let a = DMatrix::from_fn(chosen.len(), n, |i, k| (chosen[i] >> k & 1) as f64);
    let b = nalgebra::DVector::from_fn(chosen.len(), |i, _| {
        let z = f.get(chosen[i]);
        -fm::atan2(z.im, z.re)
    });
    let aat = &a * a.transpose();
    let y = aat.lu().solve(&b).expect("independent rows");
    let theta = a.transpose() * y;
    theta.iter().copied().collect()
}

/// Residual monomials of the SL normal form: linear and `(n−1)`-order.
fn sl_masks(n: usize) -> Vec<usize> {
    let full = (1usize << n) - 1;
    let mut masks: Vec<usize> = (0..n).map(|k| 1 << k).collect();
    masks.extend((0..n).map(|k| full ^ (1 << k)));
    masks
}

fn sl_residual(f: &NilPoly, masks: &[usize]) -> f64 {
    masks.iter().map(|&m| f.get(m).norm()).fold(0.0, f64::max)
}

/// Newton iteration removing linear and `(n−1)`-order coefficients with
/// `exp(u σ⁺ + v σ⁻)` on each qubit.
fn sl_newton(
    amps: &[Complex64],
    mut ms: Vec<M2>,
    tol: &Tolerances,
) -> Result<(Vec<M2>, Convergence)> {
    let n = ms.len();
    let masks = sl_masks(n);
    let poly_of = |ms: &[M2]| -> Result<NilPoly> {
        nilpotential(&StateVector::qubits(apply_frame(ms, amps))?)
    };
    let mut f = poly_of(&ms)?;
    let mut res = sl_residual(&f, &masks);
    let mut it = 0;
    while res >= tol.conv {
        if it >= SL_NEWTON_MAX.min(tol.max_iter) {
            return Err(Error::NonConverged {
                iterations: it,
                residual: res,
            });
        }
        it += 1;
        // δf = Σ u_k σ_k + v_k (f_k − σ_k f_k²), f_k = ∂f/∂σ_k.
        let mut jm = CMat::zeros(2 * n, 2 * n);
        for k in 0..n {
            let fk = partial(&f, k)?;
            let sq = mul(&fk, &fk)?;
            let g = &fk - &mul(&f.var_like(k, 1), &sq)?;
            for (row, &m) in masks.iter().enumerate() {
                if m == 1 << k {
                    jm[(row, k)] = c1();
                }
                jm[(row, n + k)] = g.get(m);
            }
        }
        let rhs = CVec::from_fn(2 * n, |i, _| -f.get(masks[i]));
        let step = linalg::solve(&jm, &rhs).ok_or(Error::IllConditioned { det: 0.0 })?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let trial: Vec<M2> = (0..n)
                .map(|k| m2_mul(&sl_exp(step[k] * t, step[n + k] * t), &ms[k]))
                .collect();
            if let Ok(g) = poly_of(&trial) {
                let r = sl_residual(&g, &masks);
                if r < res {
                    ms = trial;
                    f = g;
                    res = r;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConverged {
                iterations: it,
                residual: res,
            });
        }
    }
    Ok((
        ms,
        Convergence {
            iterations: it,
            residual: res,
        },
    ))
}

/// Local SL(2, C) canonical form and orbit class.
///
/// For three qubits in the generic orbit the result is `σ₁σ₂σ₃`; for four
/// qubits with no vanishing `γ` the cubic terms are removed and the scale
/// is fixed so that the quartic coefficient is 1 and paired bilinears are
/// equal. Singular four-qubit orbits are labeled from the SU form, which is
/// then returned unchanged.
pub fn sl_canonicalize(s: &StateVector) -> Result<(Tanglemeter, ClassLabel)> {
    sl_canonicalize_tol(s, &Tolerances::default())
}

pub fn sl_canonicalize_tol(s: &StateVector, tol: &Tolerances) -> Result<(Tanglemeter, ClassLabel)> {
    require_qubits(s)?;
    let n = s.n();
    if !(2..=4).contains(&n) {
        return Err(Error::Unsupported(format!(
            "SL canonicalization for {n} qubits"
        )));
    }
    let su = su_canonicalize_tol(s, tol)?;
    let ms: Vec<M2> = su.transform.iter().map(|op| to_m2(&op.matrix)).collect();
    match n {
        2 => {
            let b = su.poly.get(3);
            if b.norm() <= tol.class {
                return Ok((su, ClassLabel::plain("product", Some(NilPoly::qubits(2)))));
            }
            let ms: Vec<M2> = ms
                .iter()
                .enumerate()
                .map(|(k, m)| {
                    if k == 0 {
                        m2_mul(&scaling_m2(b.inv()), m)
                    } else {
                        *m
                    }
                })
                .collect();
            let tm = finish(s, ms, su.convergence)?;
            Ok((
                tm,
                ClassLabel::plain("entangled", Some(NilPoly::qubit_terms(2, &[(3, c1())]))),
            ))
        }
        3 => {
            let su_state = su.state()?;
            let tau = three_tangle(&su_state)?;
            if tau <= tol.class {
                let label = classify3_tol(s, tol)?;
                return Ok((su, label));
            }
            let (ms, conv) = sl_newton(s.amps(), ms, tol)?;
            let f = nilpotential(&StateVector::qubits(apply_frame(&ms, s.amps()))?)?;
            let q = f.get(7).powf(-1.0 / 3.0);
            let ms: Vec<M2> = ms.iter().map(|m| m2_mul(&scaling_m2(q), m)).collect();
            let tm = finish(s, ms, conv)?;
            Ok((
                tm,
                ClassLabel::plain("GHZ-generic", Some(NilPoly::qubit_terms(3, &[(7, c1())]))),
            ))
        }
        _ => {
            let gz = gamma_zero_count_tol(&su.poly, tol.class)?;
            if gz > 0 {
                let label = match_table(&su.poly, gz, tol).0;
                return Ok((su, label));
            }
            let det = feedback_matrix(&su.poly)?.determinant();
            if det.norm() < tol.det {
                return Err(Error::IllConditioned { det: det.norm() });
            }
            let (ms, conv) = if has_cubics(&su.poly, tol.class) {
                sl_newton(s.amps(), ms, tol)?
            } else {
                (ms, su.convergence)
            };
            let f = nilpotential(&StateVector::qubits(apply_frame(&ms, s.amps()))?)?;
            let (label, q) = match_table(&f, gz, tol);
            let ms: Vec<M2> = match q {
                Some(q) => ms
                    .iter()
                    .zip(&q)
                    .map(|(m, &qk)| m2_mul(&scaling_m2(qk), m))
                    .collect(),
                None => ms,
            };
            let tm = finish(s, ms, conv)?;
            Ok((tm, label))
        }
    }
}

fn finish(s: &StateVector, ms: Vec<M2>, convergence: Convergence) -> Result<Tanglemeter> {
    let v = apply_frame(&ms, s.amps());
    let kappa = v[0];
    let poly = nilpotential(&StateVector::qubits(v)?)?;
    Ok(Tanglemeter {
        poly,
        group: Group::SL,
        transform: ms
            .iter()
            .enumerate()
            .map(|(k, m)| to_op(k, m, Group::SL))
            .collect(),
        kappa,
        convergence,
    })
}

fn has_cubics(f: &NilPoly, floor: f64) -> bool {
    [7usize, 11, 13, 14]
        .iter()
        .any(|&m| f.get(m).norm() > floor)
}

fn require4(f: &NilPoly) -> Result<()> {
    if f.n() != 4 || f.caps().iter().any(|&c| c != 1) {
        return Err(Error::Shape("four-qubit nilpotential required".into()));
    }
    Ok(())
}

fn gamma_radicals(f: &NilPoly) -> (Complex64, [Complex64; 3]) {
    let b = |m: usize| f.get(m);
    let r1 = (b(5) * b(6) * b(9) * b(10)).sqrt();
    let r2 = (b(3) * b(6) * b(9) * b(12)).sqrt();
    let mut r3 = (b(3) * b(5) * b(10) * b(12)).sqrt();
    let target = b(3) * b(5) * b(6) * b(9) * b(10) * b(12);
    if (r1 * r2 * r3 - target).norm() > (r1 * r2 * r3 + target).norm() {
        r3 = -r3;
    }
    (b(15), [r1, r2, r3])
}

/// The four eigenvalues `β₁₅ − 2(s₁r₁ + s₂r₂ + s₃r₃)`, `s₁s₂s₃ = 1`, of
/// the negated SL feedback matrix; their product is its determinant.
///
/// Radicals use principal roots, with `r₃` flipped if needed so that
/// `r₁r₂r₃ = β₃β₅β₆β₉β₁₀β₁₂`.
pub fn gamma_eigenvalues(f: &NilPoly) -> Result<[Complex64; 4]> {
    require4(f)?;
    let (b15, [r1, r2, r3]) = gamma_radicals(f);
    let g = |s1: f64, s2: f64, s3: f64| b15 - (r1 * s1 + r2 * s2 + r3 * s3) * 2.0;
    Ok([
        g(-1.0, 1.0, -1.0),
        g(1.0, -1.0, -1.0),
        g(-1.0, -1.0, 1.0),
        g(1.0, 1.0, 1.0),
    ])
}

/// Coefficient matrix of the cubic-elimination system on an SU form.
pub fn feedback_matrix(f: &NilPoly) -> Result<CMat> {
    require4(f)?;
    let b = |m: usize| f.get(m);
    let d = -b(15);
    let two = 2.0;
    Ok(CMat::from_row_slice(
        4,
        4,
        &[
            d,
            b(6) * b(10) * two,
            b(6) * b(12) * two,
            b(10) * b(12) * two,
            b(5) * b(9) * two,
            d,
            b(5) * b(12) * two,
            b(9) * b(12) * two,
            b(3) * b(9) * two,
            b(3) * b(10) * two,
            d,
            b(9) * b(10) * two,
            b(3) * b(5) * two,
            b(3) * b(6) * two,
            b(5) * b(6) * two,
            d,
        ],
    ))
}

pub fn gamma_zero_count(f: &NilPoly) -> Result<u8> {
    gamma_zero_count_tol(f, Tolerances::default().class)
}

pub fn gamma_zero_count_tol(f: &NilPoly, tol: f64) -> Result<u8> {
    let gammas = gamma_eigenvalues(f)?;
    let (b15, r) = gamma_radicals(f);
    let scale = r
        .iter()
        .map(|x| x.norm())
        .fold(b15.norm(), f64::max)
        .max(1.0);
    Ok(gammas.iter().filter(|g| g.norm() < tol * scale).count() as u8)
}

#[derive(Debug, Clone, Copy)]
enum Coef {
    Const(f64),
    Lin(&'static [(usize, f64)]),
    /// `2(β₃β₆ − β₅β₆ − β₃β₅)` in the `G_b` row, which makes `γ₁` vanish.
    GbQuartic,
}

struct Row {
    name: &'static str,
    nparams: usize,
    gz: Option<u8>,
    terms: &'static [(usize, Coef)],
}

const P0: Coef = Coef::Lin(&[(0, 1.0)]);
const P1: Coef = Coef::Lin(&[(1, 1.0)]);
const P2: Coef = Coef::Lin(&[(2, 1.0)]);
const ONE: Coef = Coef::Const(1.0);
const MINUS_TWO: Coef = Coef::Const(-2.0);

/// Four-qubit SL canonical representatives. Masks use bit `k` for qubit
/// `k+1`: pairs 12→3, 13→5, 23→6, 14→9, 24→10, 34→12.
///
/// The quartic coefficients of `G_b`, `G_c` and `G_d` carry the sign for
/// which the feedback determinant vanishes; with the opposite sign the
/// cubic terms can be removed and the form falls in `G_a`.
const ROWS: &[Row] = &[
    Row {
        name: "G_a",
        nparams: 3,
        gz: Some(0),
        terms: &[
            (3, P0),
            (12, P0),
            (5, P1),
            (10, P1),
            (9, P2),
            (6, P2),
            (15, ONE),
        ],
    },
    Row {
        name: "G_b",
        nparams: 3,
        gz: Some(1),
        terms: &[
            (3, P0),
            (12, P0),
            (5, P1),
            (10, P1),
            (9, P2),
            (6, P2),
            (7, ONE),
            (11, Coef::Const(-1.0)),
            (13, ONE),
            (14, Coef::Const(-1.0)),
            (15, Coef::GbQuartic),
        ],
    },
    Row {
        name: "G_c",
        nparams: 3,
        gz: Some(2),
        terms: &[
            (3, ONE),
            (5, ONE),
            (10, ONE),
            (12, ONE),
            (9, P0),
            (6, P0),
            (7, P1),
            (14, Coef::Lin(&[(1, -1.0)])),
            (11, P2),
            (13, Coef::Lin(&[(2, -1.0)])),
            (15, MINUS_TWO),
        ],
    },
    Row {
        name: "G_d",
        nparams: 3,
        gz: Some(3),
        terms: &[
            (3, ONE),
            (5, ONE),
            (10, ONE),
            (12, ONE),
            (9, ONE),
            (6, ONE),
            (7, Coef::Lin(&[(0, 1.0), (1, 1.0), (2, 1.0)])),
            (11, Coef::Lin(&[(0, -1.0), (1, 1.0), (2, -1.0)])),
            (13, Coef::Lin(&[(0, 1.0), (1, -1.0), (2, -1.0)])),
            (14, Coef::Lin(&[(0, -1.0), (1, -1.0), (2, 1.0)])),
            (15, MINUS_TWO),
        ],
    },
    Row {
        name: "G_e",
        nparams: 3,
        gz: Some(4),
        terms: &[
            (7, ONE),
            (11, ONE),
            (13, ONE),
            (14, ONE),
            (3, P0),
            (5, P1),
            (6, P2),
        ],
    },
    Row {
        name: "LG2_a",
        nparams: 2,
        gz: None,
        terms: &[(12, ONE), (5, P0), (10, P0), (9, P1), (6, P1), (15, ONE)],
    },
    Row {
        name: "LG2_b",
        nparams: 2,
        gz: None,
        terms: &[(3, ONE), (12, ONE), (5, P0), (10, P0), (9, P1), (6, P1)],
    },
    Row {
        name: "LG2_c",
        nparams: 2,
        gz: None,
        terms: &[(13, ONE), (11, ONE), (14, ONE), (3, ONE), (5, P0), (6, P1)],
    },
    Row {
        name: "LG1_a",
        nparams: 1,
        gz: None,
        terms: &[(3, ONE), (5, ONE), (9, P0), (6, P0), (15, ONE)],
    },
    Row {
        name: "LG1_b",
        nparams: 1,
        gz: None,
        terms: &[(11, ONE), (14, ONE), (3, ONE), (5, ONE), (6, P0)],
    },
    Row {
        name: "S_a",
        nparams: 0,
        gz: None,
        terms: &[(7, ONE), (13, ONE), (10, ONE)],
    },
    Row {
        name: "S_b",
        nparams: 0,
        gz: None,
        terms: &[(7, ONE), (13, ONE), (11, ONE)],
    },
    Row {
        name: "S_c",
        nparams: 0,
        gz: None,
        terms: &[(7, ONE), (13, ONE)],
    },
    Row {
        name: "S_d",
        nparams: 0,
        gz: None,
        terms: &[(7, ONE)],
    },
    Row {
        name: "S_e",
        nparams: 0,
        gz: None,
        terms: &[(12, ONE), (5, ONE), (6, ONE), (15, ONE)],
    },
    Row {
        name: "S_f",
        nparams: 0,
        gz: None,
        terms: &[(3, ONE), (6, ONE), (5, ONE), (15, ONE)],
    },
    Row {
        name: "W",
        nparams: 0,
        gz: Some(4),
        terms: &[(12, ONE), (5, ONE), (6, ONE)],
    },
];

/// Names of the four-qubit class rows, in table order.
pub fn class_names() -> Vec<&'static str> {
    ROWS.iter().map(|r| r.name).collect()
}

fn coef_value(coef: Coef, p: &[Complex64]) -> Complex64 {
    match coef {
        Coef::Const(x) => c(x, 0.0),
        Coef::Lin(lin) => lin.iter().map(|&(i, s)| p[i] * s).sum(),
        Coef::GbQuartic => (p[0] * p[2] - p[1] * p[2] - p[0] * p[1]) * 2.0,
    }
}

/// The canonical nilpotential of a named four-qubit class.
pub fn class_form(name: &str, params: &[Complex64]) -> Result<NilPoly> {
    let row = ROWS
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| Error::Unsupported(format!("unknown class {name}")))?;
    if params.len() != row.nparams {
        return Err(Error::Shape(format!(
            "{name} takes {} parameters",
            row.nparams
        )));
    }
    let terms: Vec<(usize, Complex64)> = row
        .terms
        .iter()
        .map(|&(m, cf)| (m, coef_value(cf, params)))
        .collect();
    Ok(NilPoly::qubit_terms(4, &terms))
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (0..4).all(|i| (0..i).all(|j| p[i] != p[j])) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

fn permute_mask(m: usize, perm: &[usize; 4]) -> usize {
    (0..4)
        .filter(|&r| m >> r & 1 == 1)
        .map(|r| 1 << perm[r])
        .sum()
}

fn support(f: &NilPoly, floor: f64) -> Vec<usize> {
    (1..f.len()).filter(|&m| f.get(m).norm() > floor).collect()
}

/// Fit per-qubit scalings and parameters of `row` to `f` under `perm`
/// (row qubit `r` is input qubit `perm[r]`). Returns input-labeled scalings
/// and the parameters.
fn fit_row(f: &NilPoly, row: &Row, perm: &[usize; 4]) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut eqs: Vec<([f64; 4], Complex64)> = Vec::new();
    let indicator = |m: usize| {
        let mut v = [0.0; 4];
        for (r, x) in v.iter_mut().enumerate() {
            *x = (m >> r & 1) as f64;
        }
        v
    };
    let value = |m: usize| f.get(permute_mask(m, perm));
    for &(m, coef) in row.terms {
        let fv = value(m);
        if fv.norm() == 0.0 {
            continue;
        }
        if let Coef::Const(x) = coef {
            eqs.push((indicator(m), (c(x, 0.0) / fv).ln()));
        }
    }
    // Masks carrying the same single parameter must end up equal.
    for p in 0..row.nparams {
        let tied: Vec<(usize, f64)> = row
            .terms
            .iter()
            .filter_map(|&(m, cf)| match cf {
                Coef::Lin(&[(i, s)]) if i == p && value(m).norm() > 0.0 => Some((m, s)),
                _ => None,
            })
            .collect();
        for w in tied.windows(2) {
            let (m1, s1) = w[0];
            let (m2, s2) = w[1];
            let (a, b) = (indicator(m1), indicator(m2));
            let mut row_v = [0.0; 4];
            for r in 0..4 {
                row_v[r] = a[r] - b[r];
            }
            eqs.push((row_v, ((value(m2) / s2) / (value(m1) / s1)).ln()));
        }
    }
    let mut lambda = [c0(); 4];
    if !eqs.is_empty() {
        let a = DMatrix::from_fn(eqs.len(), 4, |i, j| eqs[i].0[j]);
        let pinv = a.pseudo_inverse(1e-12).expect("nonnegative tolerance");
        for (r, l) in lambda.iter_mut().enumerate() {
            *l = (0..eqs.len()).map(|i| eqs[i].1 * pinv[(r, i)]).sum();
        }
    }
    let scaled = |m: usize| {
        let s: Complex64 = (0..4).filter(|&r| m >> r & 1 == 1).map(|r| lambda[r]).sum();
        value(m) * s.exp()
    };
    let mut params = vec![c0(); row.nparams];
    let lin: Vec<(usize, &'static [(usize, f64)])> = row
        .terms
        .iter()
        .filter_map(|&(m, cf)| match cf {
            Coef::Lin(l) => Some((m, l)),
            _ => None,
        })
        .collect();
    if row.nparams > 0 && !lin.is_empty() {
        let a = DMatrix::<f64>::from_fn(lin.len(), row.nparams, |i, j| {
            lin[i]
                .1
                .iter()
                .filter(|&&(p, _)| p == j)
                .map(|&(_, s)| s)
                .sum::<f64>()
        });
        let pinv = a.pseudo_inverse(1e-12).expect("nonnegative tolerance");
        for (j, p) in params.iter_mut().enumerate() {
            *p = (0..lin.len())
                .map(|i| scaled(lin[i].0) * pinv[(j, i)])
                .sum();
        }
    }
    let mut q = vec![c1(); 4];
    for r in 0..4 {
        q[perm[r]] = lambda[r].exp();
    }
    (q, params)
}

/// Match a four-qubit form against the class rows. Exact support matches
/// win; otherwise rows whose constant terms are all present and whose
/// support contains the input's are tried, smallest first.
fn match_table(f: &NilPoly, gz: u8, tol: &Tolerances) -> (ClassLabel, Option<Vec<Complex64>>) {
    let sup = support(f, tol.class);
    let perms = permutations4();
    let gz_ok = |row: &Row| row.gz.is_none_or(|g| g == gz);
    // (score, support size, row, permutation); lower score is better.
    let mut best: Option<(usize, usize, usize, [usize; 4])> = None;
    for (ri, row) in ROWS.iter().enumerate() {
        for perm in &perms {
            let mut rsup: Vec<usize> = row
                .terms
                .iter()
                .map(|&(m, _)| permute_mask(m, perm))
                .collect();
            rsup.sort_unstable();
            let exact = rsup == sup;
            let consts_ok = row
                .terms
                .iter()
                .filter(|(_, cf)| matches!(cf, Coef::Const(_)))
                .all(|&(m, _)| sup.contains(&permute_mask(m, perm)));
            if !(exact || consts_ok && sup.iter().all(|m| rsup.contains(m))) {
                continue;
            }
            let score = (!exact as usize) * 2 + !gz_ok(row) as usize;
            let size = row.terms.len();
            if best.is_none_or(|(bs, bsize, _, _)| (score, size) < (bs, bsize)) {
                best = Some((score, size, ri, *perm));
            }
        }
    }
    // A partial support with an inconsistent γ-count is not trusted.
    if let Some((score, _, ri, perm)) = best {
        if score != 3 {
            let row = &ROWS[ri];
            let (q, params) = fit_row(f, row, &perm);
            let form = class_form(row.name, &params).ok();
            let label = ClassLabel {
                name: row.name.into(),
                params,
                gamma_zero_count: gz,
                form,
            };
            return (label, Some(q));
        }
    }
    (fallback_label(f, &sup, gz), None)
}

/// Labels for forms outside the table: a bilinear star is W-type, a form
/// whose monomials split the qubits is separable.
fn fallback_label(f: &NilPoly, sup: &[usize], gz: u8) -> ClassLabel {
    let n = f.n();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for &m in sup {
        let bits: Vec<usize> = (0..n).filter(|&k| m >> k & 1 == 1).collect();
        for w in bits.windows(2) {
            let (a, b) = (root(&mut parent, w[0]), root(&mut parent, w[1]));
            parent[a] = b;
        }
    }
    let pairs: Vec<usize> = sup
        .iter()
        .copied()
        .filter(|m| m.count_ones() == 2)
        .collect();
    let star = pairs.len() == sup.len()
        && pairs.len() >= 2
        && (0..n).any(|k| pairs.iter().all(|m| m >> k & 1 == 1));
    let roots: Vec<usize> = (0..n).map(|k| root(&mut parent, k)).collect();
    let connected = roots.iter().all(|&r| r == roots[0]);
    let name = if star && pairs.len() == n - 1 {
        "W"
    } else if !connected {
        "separable"
    } else {
        "Other"
    };
    ClassLabel {
        name: name.into(),
        params: Vec::new(),
        gamma_zero_count: gz,
        form: Some(f.clone()),
    }
}

/// Bring the largest amplitude to the vacuum by flipping the qubits of its
/// index, when the vacuum amplitude is negligible.
fn vacuum_repair(amps: &mut [Complex64], n: usize, floor: f64) {
    let top = amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if amps[0].norm() > floor * top {
        return;
    }
    let mut best = 0;
    for m in 1..amps.len() {
        let (a, b) = (amps[m].norm(), amps[best].norm());
        if a > b * (1.0 + 1e-12) || (a >= b * (1.0 - 1e-12) && m.count_ones() < best.count_ones()) {
            best = m;
        }
    }
    for k in (0..n).filter(|&k| best >> k & 1 == 1) {
        apply_m2(amps, k, &flip_m2());
    }
}

/// Four-qubit orbit class from the table, with `W`, separable and `Other`
/// as fallbacks.
pub fn classify4(s: &StateVector) -> Result<ClassLabel> {
    classify4_tol(s, &Tolerances::default())
}

pub fn classify4_tol(s: &StateVector, tol: &Tolerances) -> Result<ClassLabel> {
    require_qubits(s)?;
    if s.n() != 4 {
        return Err(Error::Shape("four qubits required".into()));
    }
    let mut amps = s.normalized()?.into_amps();
    vacuum_repair(&mut amps, 4, tol.class);
    let state = StateVector::qubits(amps)?;
    let mut f = nilpotential(&state)?;
    let state = if (0..4).any(|k| f.get(1 << k).norm() > tol.class) {
        let tm = su_canonicalize_tol(&state, tol)?;
        f = tm.poly.clone();
        tm.state()?
    } else {
        state
    };
    let gz = gamma_zero_count_tol(&f, tol.class)?;
    if gz == 0 && has_cubics(&f, tol.class) {
        let (ms, _) = sl_newton(state.amps(), vec![ID2; 4], tol)?;
        f = nilpotential(&StateVector::qubits(apply_frame(&ms, state.amps()))?)?;
    }
    Ok(match_table(&f, gz, tol).0)
}

/// Three-qubit orbit class: `GHZ-generic` when the 3-tangle is nonzero,
/// otherwise `W`, `biseparable` or `product` from the ranks of the
/// one-qubit reduced states.
pub fn classify3(s: &StateVector) -> Result<ClassLabel> {
    classify3_tol(s, &Tolerances::default())
}

pub fn classify3_tol(s: &StateVector, tol: &Tolerances) -> Result<ClassLabel> {
    require_qubits(s)?;
    if s.n() != 3 {
        return Err(Error::Shape("three qubits required".into()));
    }
    let s = s.normalized()?;
    let tau = three_tangle(&s)?;
    if tau > 10.0 * tol.class {
        let mut label =
            ClassLabel::plain("GHZ-generic", Some(NilPoly::qubit_terms(3, &[(7, c1())])));
        label.params.push(c(tau, 0.0));
        return Ok(label);
    }
    if tau > 0.1 * tol.class {
        return Err(Error::Ambiguous(format!("3-tangle {tau:e} near threshold")));
    }
    let mut full_rank = [false; 3];
    for (k, slot) in full_rank.iter_mut().enumerate() {
        let rho = reduced_density(&s, &[k])?;
        let low = linalg::hermitian_eigenvalues(&rho)
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if (0.1 * tol.class..=10.0 * tol.class).contains(&low) {
            return Err(Error::Ambiguous(format!(
                "reduced eigenvalue {low:e} of qubit {} near threshold",
                k + 1
            )));
        }
        *slot = low > 10.0 * tol.class;
    }
    let count = full_rank.iter().filter(|&&x| x).count();
    match count {
        3 => {
            let center = star_center(&s, tol).unwrap_or(0);
            let terms: Vec<(usize, Complex64)> = (0..3)
                .filter(|&k| k != center)
                .map(|k| ((1 << k) | (1 << center), c1()))
                .collect();
            Ok(ClassLabel::plain(
                "W",
                Some(NilPoly::qubit_terms(3, &terms)),
            ))
        }
        2 => {
            let pair: usize = (0..3).filter(|&k| full_rank[k]).map(|k| 1 << k).sum();
            Ok(ClassLabel::plain(
                "biseparable",
                Some(NilPoly::qubit_terms(3, &[(pair, c1())])),
            ))
        }
        0 => Ok(ClassLabel::plain("product", Some(NilPoly::qubits(3)))),
        _ => Err(Error::Degenerate("a single entangled qubit".into())),
    }
}

/// Center of a two-bilinear star in the SU form, if the form is one.
fn star_center(s: &StateVector, tol: &Tolerances) -> Option<usize> {
    let tm = su_canonicalize_tol(s, tol).ok()?;
    let pairs: Vec<usize> = [3usize, 5, 6]
        .into_iter()
        .filter(|&m| tm.poly.get(m).norm() > tol.class)
        .collect();
    if pairs.len() != 2 {
        return None;
    }
    (0..3).find(|&k| pairs.iter().all(|m| m >> k & 1 == 1))
}

fn paulis() -> [M2; 3] {
    [
        [[c0(), c1()], [c1(), c0()]],
        [[c0(), ci()], [-ci(), c0()]],
        [[-c1(), c0()], [c0(), c1()]],
    ]
}

/// Real columns `(Re, Im)` of vectors, as a matrix.
fn real_columns(cols: &[Vec<Complex64>]) -> DMatrix<f64> {
    let len = cols[0].len();
    DMatrix::from_fn(2 * len, cols.len(), |i, j| {
        if i < len {
            cols[j][i].re
        } else {
            cols[j][i - len].im
        }
    })
}

pub(crate) fn rank(cols: &[Vec<Complex64>]) -> usize {
    let sv = linalg::singular_values_real(&real_columns(cols));
    linalg::numerical_rank(&sv, 1e-9)
}

/// Generated vectors `g ψ` for each one-qubit Pauli, times `factor`.
fn pauli_images(s: &StateVector, factor: Complex64) -> Vec<Vec<Complex64>> {
    let mut out = Vec::new();
    for k in 0..s.n() {
        for p in paulis() {
            let mut v: Vec<Complex64> = s.amps().iter().map(|a| a * factor).collect();
            apply_m2(&mut v, k, &p);
            out.push(v);
        }
    }
    out
}

/// Dimension of the local-SU(2) Lie algebra directions that annihilate `s`.
pub fn stabilizer_dimension(s: &StateVector) -> Result<usize> {
    require_qubits(s)?;
    let cols = pauli_images(s, ci());
    Ok(cols.len() - rank(&cols))
}

/// Real dimension of the quotient of the state space by the local orbit
/// through `s`, including global scale and phase. For a generic state and
/// `Group::SU` this is the number of independent tanglemeter parameters.
pub fn coset_dimension(s: &StateVector, group: Group) -> Result<usize> {
    require_qubits(s)?;
    let mut cols = pauli_images(s, ci());
    if group == Group::SL {
        cols.extend(pauli_images(s, c1()));
    }
    cols.push(s.amps().to_vec());
    cols.push(s.amps().iter().map(|a| a * ci()).collect());
    Ok(2 * s.len() - rank(&cols))
}

/// `(a, b, c, d)` of the standard generic four-qubit family equivalent to
/// the `G_a` form with parameters `(β₃, β₅, β₆)`, up to overall scale.
pub fn ga_to_abcd(t: [Complex64; 3]) -> [Complex64; 4] {
    let r = (c1() + t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
    let (x, y, z) = (t[0] / r, t[1] / r, t[2] / r);
    [c1() + x, y + z, y - z, c1() - x]
}

/// Whether two `G_a` parameter triples name the same orbit: their
/// `(a, b, c, d)` agree up to scale after some permutation combined with an
/// even number of sign changes.
pub fn ga_equivalent(t1: [Complex64; 3], t2: [Complex64; 3], tol: f64) -> bool {
    let u = ga_to_abcd(t1);
    let v = ga_to_abcd(t2);
    let vn: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    for perm in permutations4() {
        for signs in 0..16u32 {
            if signs.count_ones() % 2 == 1 {
                continue;
            }
            let w: Vec<Complex64> = (0..4)
                .map(|i| {
                    if signs >> i & 1 == 1 {
                        -u[perm[i]]
                    } else {
                        u[perm[i]]
                    }
                })
                .collect();
            let wn: f64 = w.iter().map(|x| x.norm_sqr()).sum();
            let lambda: Complex64 = w
                .iter()
                .zip(&v)
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>()
                / wn;
            let err: f64 = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (a * lambda - b).norm_sqr())
                .sum();
            if fm::sqrt(err) <= tol * fm::sqrt(vn) {
                return true;
            }
        }
    }
    false
}
