//! Time evolution of the nilpotential `f` under local and pairwise qubit
//! Hamiltonians, with a Schrödinger-picture reference integrator.
//!
//! All flows integrate `i ∂f/∂t = R(f)` where `R = e^{−f} H e^{f}` with the
//! constant term removed.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, c0, c1, ci, CMat};
use crate::nilring::{exp_nil, partial, MulRule, NilPoly};
use crate::states::StateVector;

/// A time-dependent coefficient.
pub type Drive = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

pub fn constant(z: Complex64) -> Drive {
    Arc::new(move |_| z)
}

pub fn real(x: f64) -> Drive {
    constant(c(x, 0.0))
}

fn zero_drive() -> Drive {
    constant(c0())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Single-qubit terms only.
    Local,
    /// Local `σ⁺`/`σ⁻` drives plus exchange couplings.
    XyUniversal,
    /// Local terms plus exchange, `σᶻσᶻ` and `σ⁺σ⁺ + σ⁻σ⁻` couplings.
    Spherical,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Local => "local",
            Family::XyUniversal => "xy",
            Family::Spherical => "spherical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// `σᵢ⁺σⱼ⁻ + σᵢ⁻σⱼ⁺`
    Exchange,
    /// `σᵢᶻσⱼᶻ`
    ZZ,
    /// `σᵢ⁺σⱼ⁺ + σᵢ⁻σⱼ⁻`
    PlusPlus,
}

#[derive(Clone)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub kind: CouplingKind,
    pub g: Drive,
}

/// `Pˣσˣ + Pʸσʸ + Pᶻσᶻ` on one qubit.
#[derive(Clone)]
pub struct LocalDrive {
    pub x: Drive,
    pub y: Drive,
    pub z: Drive,
}

impl Default for LocalDrive {
    fn default() -> Self {
        LocalDrive {
            x: zero_drive(),
            y: zero_drive(),
            z: zero_drive(),
        }
    }
}

/// Each unordered pair appears once in `couplings`, which keeps `G`
/// symmetric with an empty diagonal.
#[derive(Clone)]
pub struct HamiltonianSpec {
    pub family: Family,
    pub local: Vec<LocalDrive>,
    pub couplings: Vec<Coupling>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    Plus,
    Minus,
    Z,
}

/// A product of single-qubit operators with its coefficient.
pub type Term = (Complex64, Vec<(usize, Pauli)>);

impl HamiltonianSpec {
    pub fn new(family: Family, n: usize) -> Self {
        HamiltonianSpec {
            family,
            local: vec![LocalDrive::default(); n],
            couplings: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.local.len()
    }

    /// Constant `(Pˣ, Pʸ, Pᶻ)` on qubit `i`.
    pub fn with_local(mut self, i: usize, p: [f64; 3]) -> Self {
        self.local[i] = LocalDrive {
            x: real(p[0]),
            y: real(p[1]),
            z: real(p[2]),
        };
        self
    }

    pub fn with_local_drive(mut self, i: usize, d: LocalDrive) -> Self {
        self.local[i] = d;
        self
    }

    pub fn with_coupling(mut self, kind: CouplingKind, i: usize, j: usize, g: Drive) -> Self {
        self.couplings.push(Coupling { i, j, kind, g });
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        for cp in &self.couplings {
            if cp.i == cp.j {
                return Err(Error::Shape("coupling G_ii must vanish".into()));
            }
            for e in [cp.i, cp.j] {
                if e >= n {
                    return Err(Error::IndexOutOfRange { index: e, n });
                }
            }
            let allowed = match self.family {
                Family::Local => false,
                Family::XyUniversal => cp.kind == CouplingKind::Exchange,
                Family::Spherical => true,
            };
            if !allowed {
                return Err(Error::Unsupported(alloc::format!(
                    "{:?} coupling in {} family",
                    cp.kind,
                    self.family.name()
                )));
            }
        }
        Ok(())
    }

    /// `(Pˣ, Pʸ, Pᶻ)` of every qubit at time `t`.
    pub fn local_at(&self, t: f64) -> Vec<[Complex64; 3]> {
        self.local
            .iter()
            .map(|d| [(d.x)(t), (d.y)(t), (d.z)(t)])
            .collect()
    }

    /// The Hamiltonian at time `t` as a sum of operator products.
    pub fn terms(&self, t: f64) -> Vec<Term> {
        let mut out = Vec::new();
        for (i, p) in self.local_at(t).into_iter().enumerate() {
            let (pm, pp) = (p[0] - ci() * p[1], p[0] + ci() * p[1]);
            out.push((pm, vec![(i, Pauli::Plus)]));
            out.push((pp, vec![(i, Pauli::Minus)]));
            out.push((p[2], vec![(i, Pauli::Z)]));
        }
        for cp in &self.couplings {
            let g = (cp.g)(t);
            let (i, j) = (cp.i, cp.j);
            match cp.kind {
                CouplingKind::Exchange => {
                    out.push((g, vec![(i, Pauli::Plus), (j, Pauli::Minus)]));
                    out.push((g, vec![(i, Pauli::Minus), (j, Pauli::Plus)]));
                }
                CouplingKind::ZZ => out.push((g, vec![(i, Pauli::Z), (j, Pauli::Z)])),
                CouplingKind::PlusPlus => {
                    out.push((g, vec![(i, Pauli::Plus), (j, Pauli::Plus)]));
                    out.push((g, vec![(i, Pauli::Minus), (j, Pauli::Minus)]));
                }
            }
        }
        out.retain(|(z, _)| *z != c0());
        out
    }
}

/// Apply one operator in place on a qubit coefficient array.
///
/// The same rules act on amplitudes and on `F`: `σ⁺` multiplies by the
/// variable, `σ⁻` differentiates, `σᶻ` is `∓1` on terms without/with it.
fn apply_pauli(src: &[Complex64], e: usize, op: Pauli) -> Vec<Complex64> {
    let b = 1usize << e;
    let mut out = vec![c0(); src.len()];
    for m in 0..src.len() {
        match op {
            Pauli::Plus if m & b == 0 => out[m | b] = src[m],
            Pauli::Minus if m & b == 0 => out[m] = src[m | b],
            Pauli::Z => out[m] = if m & b == 0 { -src[m] } else { src[m] },
            _ => {}
        }
    }
    out
}

/// `H·v` for a qubit coefficient vector.
pub fn apply_terms(terms: &[Term], v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![c0(); v.len()];
    for (coef, ops) in terms {
        let mut w = v.to_vec();
        // Operators on distinct qubits commute; apply right to left anyway.
        for &(e, op) in ops.iter().rev() {
            w = apply_pauli(&w, e, op);
        }
        for (o, x) in out.iter_mut().zip(w) {
            *o += coef * x;
        }
    }
    out
}

/// Dense matrix of the Hamiltonian at time `t`.
pub fn hamiltonian_matrix(h: &HamiltonianSpec, t: f64) -> CMat {
    let dim = 1usize << h.n();
    let terms = h.terms(t);
    let mut m = CMat::zeros(dim, dim);
    for k in 0..dim {
        let mut e = vec![c0(); dim];
        e[k] = c1();
        for (r, z) in apply_terms(&terms, &e).into_iter().enumerate() {
            m[(r, k)] = z;
        }
    }
    m
}

fn check_shape(f: &NilPoly, h: &HamiltonianSpec) -> Result<()> {
    if f.rule() != MulRule::QubitSubset {
        return Err(Error::WrongRule("QUBIT_SUBSET"));
    }
    if f.n() != h.n() {
        return Err(Error::Shape(alloc::format!(
            "f has {} qubits, H has {}",
            f.n(),
            h.n()
        )));
    }
    h.validate()
}

fn sigma(f: &NilPoly, i: usize) -> NilPoly {
    let mut s = f.zero_like();
    s.set(1 << i, c1());
    s
}

/// Single-qubit part of the right-hand side, closed form.
fn rhs_local_terms(f: &NilPoly, p: &[[Complex64; 3]]) -> Result<NilPoly> {
    let mut out = f.zero_like();
    for (i, pi) in p.iter().enumerate() {
        let (pm, pp, pz) = (pi[0] - ci() * pi[1], pi[0] + ci() * pi[1], pi[2]);
        if pm == c0() && pp == c0() && pz == c0() {
            continue;
        }
        let fi = partial(f, i)?;
        let si = sigma(f, i);
        let mut lin = si.scale(pz * 2.0);
        lin.set(0, pp);
        out = &out + &si.scale(pm);
        out = &out + &(&lin * &fi);
        out = &out - &(&si * &(&fi * &fi)).scale(pp);
    }
    Ok(out)
}

/// `σⱼ fᵢ (1 − σᵢ fᵢ)` summed over both orientations of each exchange pair.
fn rhs_exchange_terms(f: &NilPoly, h: &HamiltonianSpec, t: f64) -> Result<NilPoly> {
    let mut out = f.zero_like();
    for cp in &h.couplings {
        let g = (cp.g)(t);
        if g == c0() {
            continue;
        }
        for (a, b) in [(cp.i, cp.j), (cp.j, cp.i)] {
            let fa = partial(f, a)?;
            let mut one_minus = &f.one_like() - &(&sigma(f, a) * &fa);
            one_minus = &fa * &one_minus;
            out = &out + &(&sigma(f, b) * &one_minus).scale(g);
        }
    }
    Ok(out)
}

/// `e^{−f} H e^{f}` through the operator rules, any family.
pub fn rhs_general(f: &NilPoly, h: &HamiltonianSpec, t: f64) -> Result<NilPoly> {
    check_shape(f, h)?;
    let f = f.without_constant();
    let big_f = exp_nil(&f)?;
    let hf = NilPoly::from_coeffs(
        f.caps().to_vec(),
        f.rule(),
        apply_terms(&h.terms(t), big_f.coeffs()),
    )?;
    let back = exp_nil(&-&f)?;
    Ok((&back * &hf).without_constant())
}

/// Right-hand side of `i ∂f/∂t`, closed forms for the local and XY
/// families and the operator rules otherwise.
pub fn rhs_nilpotential(f: &NilPoly, h: &HamiltonianSpec, t: f64) -> Result<NilPoly> {
    check_shape(f, h)?;
    match h.family {
        Family::Local => Ok(rhs_local_terms(f, &h.local_at(t))?.without_constant()),
        Family::XyUniversal => {
            let local = rhs_local_terms(f, &h.local_at(t))?;
            Ok((&local + &rhs_exchange_terms(f, h, t)?).without_constant())
        }
        Family::Spherical => rhs_general(f, h, t),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorCfg {
    pub dt: f64,
    /// Keep every `checkpoint_stride`-th step (the final point is always kept).
    pub checkpoint_stride: usize,
}

impl Default for IntegratorCfg {
    fn default() -> Self {
        IntegratorCfg {
            dt: 1e-3,
            checkpoint_stride: 100,
        }
    }
}

impl IntegratorCfg {
    fn steps(&self, total: f64) -> Result<(usize, f64)> {
        let valid = self.dt > 0.0 && total >= 0.0 && self.checkpoint_stride > 0;
        if !valid {
            return Err(Error::Shape(
                "need dt > 0, T ≥ 0 and a positive checkpoint stride".into(),
            ));
        }
        let n = libm::ceil(total / self.dt - 1e-9).max(0.0) as usize;
        Ok((n, if n == 0 { 0.0 } else { total / n as f64 }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<f64>,
    pub values: Vec<T>,
}

impl<T> Trajectory<T> {
    pub fn last(&self) -> Option<&T> {
        self.values.last()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn rk4<T, F>(y: &T, t: f64, h: f64, rhs: F, axpy: impl Fn(&T, f64, &T) -> T) -> Result<T>
where
    F: Fn(&T, f64) -> Result<T>,
{
    let k1 = rhs(y, t)?;
    let k2 = rhs(&axpy(y, h / 2.0, &k1), t + h / 2.0)?;
    let k3 = rhs(&axpy(y, h / 2.0, &k2), t + h / 2.0)?;
    let k4 = rhs(&axpy(y, h, &k3), t + h)?;
    let sum = axpy(&axpy(&axpy(&k1, 2.0, &k2), 2.0, &k3), 1.0, &k4);
    Ok(axpy(y, h / 6.0, &sum))
}

/// `|⟨O|ψ⟩|` of the state `e^{f}|O⟩` normalized to unit probability.
pub fn vacuum_amplitude(f: &NilPoly) -> Result<f64> {
    let big_f = exp_nil(&f.without_constant())?;
    let norm = libm::sqrt(big_f.coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>());
    Ok(if norm.is_finite() { 1.0 / norm } else { 0.0 })
}

const VACUUM_FLOOR: f64 = 1e-6;

/// Integrate `∂f/∂t = −i R(f)` with fixed-step RK4 from `t = 0` to `total`.
///
/// Aborts with `VacuumZero` once the vacuum amplitude falls below 1e−6 or
/// a linear extrapolation puts its zero inside the next step.
pub fn evolve_nilpotential(
    f0: &NilPoly,
    h: &HamiltonianSpec,
    total: f64,
    cfg: &IntegratorCfg,
) -> Result<Trajectory<NilPoly>> {
    check_shape(f0, h)?;
    let (steps, dt) = cfg.steps(total)?;
    let mut f = f0.without_constant();
    let mut traj = Trajectory {
        times: vec![0.0],
        values: vec![f.clone()],
    };
    let mut prev_vac = vacuum_amplitude(&f)?;
    let rhs = |y: &NilPoly, t: f64| rhs_nilpotential(y, h, t).map(|r| r.scale(-ci()));
    let axpy = |y: &NilPoly, a: f64, k: &NilPoly| y + &k.scale(c(a, 0.0));
    for step in 1..=steps {
        let t = step as f64 * dt;
        f = rk4(&f, t - dt, dt, rhs, axpy)?;
        let vac = vacuum_amplitude(&f)?;
        let alive = vac >= VACUUM_FLOOR && f.coeffs().iter().all(|z| z.is_finite());
        if !alive {
            return Err(Error::VacuumZero { time: Some(t) });
        }
        let drop = prev_vac - vac;
        if drop > vac && step < steps {
            return Err(Error::VacuumZero {
                time: Some(t + dt * vac / drop),
            });
        }
        prev_vac = vac;
        if step % cfg.checkpoint_stride == 0 || step == steps {
            traj.times.push(t);
            traj.values.push(f.clone());
        }
    }
    Ok(traj)
}

/// Schrödinger evolution `i ∂ψ/∂t = Hψ` with fixed-step RK4.
pub fn evolve_state(
    s: &StateVector,
    h: &HamiltonianSpec,
    total: f64,
    cfg: &IntegratorCfg,
) -> Result<Trajectory<StateVector>> {
    if !s.is_qubits() || s.n() != h.n() {
        return Err(Error::Shape(
            "state and Hamiltonian disagree on the qubit count".into(),
        ));
    }
    h.validate()?;
    let (steps, dt) = cfg.steps(total)?;
    let mut psi = s.amps().to_vec();
    let mut traj = Trajectory {
        times: vec![0.0],
        values: vec![s.clone()],
    };
    let rhs = |y: &Vec<Complex64>, t: f64| -> Result<Vec<Complex64>> {
        Ok(apply_terms(&h.terms(t), y)
            .into_iter()
            .map(|z| -ci() * z)
            .collect())
    };
    let axpy = |y: &Vec<Complex64>, a: f64, k: &Vec<Complex64>| -> Vec<Complex64> {
        y.iter().zip(k).map(|(p, q)| p + q * a).collect()
    };
    for step in 1..=steps {
        let t = step as f64 * dt;
        psi = rk4(&psi, t - dt, dt, rhs, axpy)?;
        if step % cfg.checkpoint_stride == 0 || step == steps {
            traj.times.push(t);
            traj.values
                .push(StateVector::new(s.dims().to_vec(), psi.clone())?);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, CVec};
    use crate::nilring::log_unit;
    use crate::states::{nilpotential, random_state, to_poly};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_f(n: usize, seed: u64, scale: f64) -> NilPoly {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = NilPoly::qubits(n);
        for z in f.coeffs_mut().iter_mut().skip(1) {
            *z = c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
        }
        f
    }

    fn random_xy(n: usize, seed: u64) -> HamiltonianSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = HamiltonianSpec::new(Family::XyUniversal, n);
        for i in 0..n {
            h = h.with_local(i, [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0]);
        }
        for i in 0..n {
            for j in i + 1..n {
                h = h.with_coupling(CouplingKind::Exchange, i, j, real(rng.gen_range(-1.0..1.0)));
            }
        }
        h
    }

    /// Nilpotential of `exp(−iHT)·e^{f}|O⟩` for constant `H`.
    fn oracle(f: &NilPoly, h: &HamiltonianSpec, total: f64) -> NilPoly {
        let u = expm(&(hamiltonian_matrix(h, 0.0) * c(0.0, -total)));
        let v = u * CVec::from_column_slice(exp_nil(f).unwrap().coeffs());
        let s = StateVector::new(vec![2; f.n()], v.iter().copied().collect()).unwrap();
        nilpotential(&s).unwrap()
    }

    #[test]
    fn pz_only_phases_match_oracle() {
        let f = random_f(3, 1, 0.5);
        let h = HamiltonianSpec::new(Family::Local, 3)
            .with_local(0, [0.0, 0.0, 0.7])
            .with_local(2, [0.0, 0.0, -0.3]);
        let r = rhs_nilpotential(&f, &h, 0.0).unwrap();
        // Each β_m rotates with 2 Σ_{i ∈ m} Pᶻᵢ.
        for m in 1..8usize {
            let w = 2.0 * (0.7 * (m & 1) as f64 - 0.3 * ((m >> 2) & 1) as f64);
            assert!((r.get(m) - f.get(m) * w).norm() < 1e-14);
        }
        let traj = evolve_nilpotential(
            &f,
            &h,
            1.0,
            &IntegratorCfg {
                dt: 1e-2,
                checkpoint_stride: 1000,
            },
        )
        .unwrap();
        assert!(traj.last().unwrap().max_abs_diff(&oracle(&f, &h, 1.0)) < 1e-8);
    }

    #[test]
    fn linear_terms_grow_first_from_vacuum() {
        let h = HamiltonianSpec::new(Family::Local, 2)
            .with_local(0, [0.4, -0.2, 0.0])
            .with_local(1, [0.1, 0.3, 0.0]);
        let r = rhs_nilpotential(&NilPoly::qubits(2), &h, 0.0).unwrap();
        let expect = NilPoly::qubit_terms(2, &[(1, c(0.4, 0.2)), (2, c(0.1, -0.3))]);
        assert!(r.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn closed_forms_match_general_path() {
        for seed in 0..10 {
            let f = random_f(4, seed, 1.0);
            let h = random_xy(4, seed + 50);
            let a = rhs_nilpotential(&f, &h, 0.0).unwrap();
            let b = rhs_general(&f, &h, 0.0).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12, "seed {seed}");
            let mut hl = HamiltonianSpec::new(Family::Local, 4);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..4 {
                hl = hl.with_local(
                    i,
                    [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ],
                );
            }
            let a = rhs_nilpotential(&f, &hl, 0.0).unwrap();
            let b = rhs_general(&f, &hl, 0.0).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn zero_hamiltonian_keeps_f() {
        let f = random_f(3, 4, 0.4);
        let h = HamiltonianSpec::new(Family::Local, 3);
        let traj = evolve_nilpotential(&f, &h, 1.0, &IntegratorCfg::default()).unwrap();
        assert!(traj.values.iter().all(|g| g.max_abs_diff(&f) == 0.0));
        let s = random_state(&[2, 2, 2], 3);
        let st = evolve_state(&s, &h, 1.0, &IntegratorCfg::default()).unwrap();
        assert_eq!(st.last().unwrap().amps(), s.amps());
    }

    #[test]
    fn rabi_tangent_and_vacuum_crossing() {
        let px = 1.3;
        let h = HamiltonianSpec::new(Family::Local, 1).with_local(0, [px, 0.0, 0.0]);
        let cfg = IntegratorCfg {
            dt: 1e-4,
            checkpoint_stride: 1000,
        };
        let traj = evolve_nilpotential(&NilPoly::qubits(1), &h, 1.0, &cfg).unwrap();
        for (t, f) in traj.times.iter().zip(&traj.values) {
            let want = c(0.0, -libm::tan(px * t));
            assert!((f.get(1) - want).norm() < 1e-9, "t = {t}");
        }
        let pole = core::f64::consts::FRAC_PI_2 / px;
        match evolve_nilpotential(&NilPoly::qubits(1), &h, 2.0, &cfg) {
            Err(Error::VacuumZero { time: Some(t) }) => {
                assert!((t - pole).abs() < 1e-3, "crossing at {t}")
            }
            other => panic!("expected a vacuum crossing, got {other:?}"),
        }
    }

    #[test]
    fn xy_chain_matches_dense_oracle() {
        let h = HamiltonianSpec::new(Family::XyUniversal, 3)
            .with_local(0, [0.5, 0.2, 0.0])
            .with_local(1, [-0.3, 0.4, 0.0])
            .with_local(2, [0.1, -0.6, 0.0])
            .with_coupling(CouplingKind::Exchange, 0, 1, real(0.8))
            .with_coupling(CouplingKind::Exchange, 1, 2, real(-0.5));
        let f = nilpotential(&random_state(&[2, 2, 2], 12)).unwrap();
        let cfg = IntegratorCfg {
            dt: 1e-3,
            checkpoint_stride: 250,
        };
        let traj = evolve_nilpotential(&f, &h, 1.0, &cfg).unwrap();
        assert!(traj.last().unwrap().max_abs_diff(&oracle(&f, &h, 1.0)) < 1e-6);
        assert_eq!(traj.times.len(), 5);
    }

    #[test]
    fn spherical_flow_matches_oracle() {
        let h = HamiltonianSpec::new(Family::Spherical, 2)
            .with_local(0, [0.2, 0.1, 0.3])
            .with_coupling(CouplingKind::ZZ, 0, 1, real(0.4))
            .with_coupling(CouplingKind::PlusPlus, 0, 1, real(0.25))
            .with_coupling(CouplingKind::Exchange, 0, 1, real(-0.3));
        let f = random_f(2, 9, 0.3);
        let traj = evolve_nilpotential(
            &f,
            &h,
            0.5,
            &IntegratorCfg {
                dt: 1e-3,
                checkpoint_stride: 1000,
            },
        )
        .unwrap();
        assert!(traj.last().unwrap().max_abs_diff(&oracle(&f, &h, 0.5)) < 1e-8);
    }

    #[test]
    fn state_evolution_agrees_with_nilpotential() {
        let h = random_xy(3, 77);
        let s = random_state(&[2, 2, 2], 5);
        let cfg = IntegratorCfg {
            dt: 1e-3,
            checkpoint_stride: 1000,
        };
        let st = evolve_state(&s, &h, 1.0, &cfg).unwrap();
        let fin = st.last().unwrap();
        assert!((fin.norm_sqr() - s.norm_sqr()).abs() < 1e-10);
        let nf = evolve_nilpotential(&nilpotential(&s).unwrap(), &h, 1.0, &cfg).unwrap();
        assert!(
            nf.last()
                .unwrap()
                .max_abs_diff(&log_unit(&to_poly(fin).unwrap()).unwrap())
                < 1e-6
        );
    }

    #[test]
    fn family_restrictions() {
        let h = HamiltonianSpec::new(Family::Local, 2).with_coupling(
            CouplingKind::Exchange,
            0,
            1,
            real(1.0),
        );
        assert!(h.validate().is_err());
        let h = HamiltonianSpec::new(Family::XyUniversal, 2).with_coupling(
            CouplingKind::ZZ,
            0,
            1,
            real(1.0),
        );
        assert!(h.validate().is_err());
        let h = HamiltonianSpec::new(Family::Spherical, 2).with_coupling(
            CouplingKind::ZZ,
            1,
            1,
            real(1.0),
        );
        assert!(h.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rhs_ignores_constant_term(seed in 0u64..10_000, k in -3.0f64..3.0) {
            let f = random_f(3, seed, 1.0);
            let h = random_xy(3, seed ^ 0xabc);
            let mut g = f.clone();
            g.set(0, c(k, -k));
            let a = rhs_nilpotential(&f, &h, 0.0).unwrap();
            let b = rhs_nilpotential(&g, &h, 0.0).unwrap();
            prop_assert!(a.max_abs_diff(&b) < 1e-14);
        }

        #[test]
        fn xy_closed_form_is_operator_identity(seed in 0u64..10_000) {
            let f = random_f(3, seed, 1.0);
            let h = random_xy(3, seed + 1);
            let a = rhs_nilpotential(&f, &h, 0.0).unwrap();
            let b = rhs_general(&f, &h, 0.0).unwrap();
            prop_assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }
}
