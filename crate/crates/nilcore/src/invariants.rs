//! Polynomial invariants of local transformations, derived measures,
//! reconstruction of the four-qubit sl-canonic form from invariants,
//! partial-transpose relations and the entanglement graph.
//!
//! Tensor indices follow the element order: the first index of `ψ_{ijkl}`
//! belongs to element 0 (the fastest bit of the flat amplitude index).
//! Raised indices use `ε = [[0, 1], [−1, 0]]`, so
//! `ψ^{x} = (−1)^{|x|} ψ_{x̄}` with `x̄` the bitwise complement.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fm;
use crate::linalg::{c, c0, c1, hermitian_eigen, CMat};
use crate::localops::{Group, LocalOp};
use crate::nilring::NilPoly;
use crate::states::{partial_transpose, reduced_density, Normalization, StateVector};

const NORM_EPS: f64 = 1e-9;

fn require_qubits(s: &StateVector, n: usize) -> Result<()> {
    if !s.is_qubits() || s.n() != n {
        return Err(Error::Shape(format!(
            "expected {n} qubits, got dimensions {:?}",
            s.dims()
        )));
    }
    Ok(())
}

/// Normalization the amplitudes actually satisfy.
pub fn detect_normalization(s: &StateVector) -> Normalization {
    if (s.amp(0) - c1()).norm() < NORM_EPS {
        Normalization::Vacuum
    } else if (s.norm_sqr() - 1.0).abs() < NORM_EPS {
        Normalization::Probability
    } else {
        Normalization::None
    }
}

/// `ψ` with every index raised by `ε`.
pub fn raise(amps: &[Complex64]) -> Vec<Complex64> {
    let last = amps.len() - 1;
    (0..amps.len())
        .map(|x| {
            let v = amps[last ^ x];
            if x.count_ones() % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect()
}

/// A dense binary tensor whose axis `k` carries `labels[k]`.
#[derive(Clone)]
struct Tensor {
    labels: Vec<u8>,
    data: Vec<Complex64>,
}

impl Tensor {
    fn new(data: &[Complex64], labels: &str) -> Self {
        Tensor {
            labels: labels.bytes().collect(),
            data: data.to_vec(),
        }
    }
}

/// Contract two tensors over their shared labels.
fn contract_pair(a: &Tensor, b: &Tensor) -> Tensor {
    let shared: Vec<u8> = a
        .labels
        .iter()
        .copied()
        .filter(|l| b.labels.contains(l))
        .collect();
    let a_only: Vec<u8> = a
        .labels
        .iter()
        .copied()
        .filter(|l| !shared.contains(l))
        .collect();
    let b_only: Vec<u8> = b
        .labels
        .iter()
        .copied()
        .filter(|l| !shared.contains(l))
        .collect();
    let out_labels: Vec<u8> = a_only.iter().chain(&b_only).copied().collect();
    let pos = |labels: &[u8], l: u8| labels.iter().position(|&x| x == l).expect("label present");
    // Bit of each label inside a and b.
    let a_out: Vec<usize> = a_only.iter().map(|&l| pos(&a.labels, l)).collect();
    let b_out: Vec<usize> = b_only.iter().map(|&l| pos(&b.labels, l)).collect();
    let a_sh: Vec<usize> = shared.iter().map(|&l| pos(&a.labels, l)).collect();
    let b_sh: Vec<usize> = shared.iter().map(|&l| pos(&b.labels, l)).collect();
    let mut data = vec![c0(); 1 << out_labels.len()];
    for (o, slot) in data.iter_mut().enumerate() {
        let mut ia = 0usize;
        let mut ib = 0usize;
        for (k, &p) in a_out.iter().enumerate() {
            ia |= ((o >> k) & 1) << p;
        }
        for (k, &p) in b_out.iter().enumerate() {
            ib |= ((o >> (a_out.len() + k)) & 1) << p;
        }
        let mut acc = c0();
        for s in 0..(1usize << shared.len()) {
            let (mut ja, mut jb) = (ia, ib);
            for k in 0..shared.len() {
                let bit = (s >> k) & 1;
                ja |= bit << a_sh[k];
                jb |= bit << b_sh[k];
            }
            acc += a.data[ja] * b.data[jb];
        }
        *slot = acc;
    }
    Tensor {
        labels: out_labels,
        data,
    }
}

/// Fully contract a network in which every label occurs exactly twice,
/// always merging the pair with the smallest result.
fn contract_network(mut factors: Vec<Tensor>) -> Complex64 {
    while factors.len() > 1 {
        let mut best = (0, 1, usize::MAX);
        for i in 0..factors.len() {
            for j in (i + 1)..factors.len() {
                let shared = factors[i]
                    .labels
                    .iter()
                    .filter(|l| factors[j].labels.contains(l))
                    .count();
                let size = factors[i].labels.len() + factors[j].labels.len() - 2 * shared;
                if size < best.2 {
                    best = (i, j, size);
                }
            }
        }
        let b = factors.swap_remove(best.1);
        let a = factors.swap_remove(best.0);
        factors.push(contract_pair(&a, &b));
    }
    let last = factors.pop().expect("nonempty network");
    debug_assert!(last.labels.is_empty());
    last.data[0]
}

fn network(t: &[Complex64], u: &[Complex64], lower: &[&str], upper: &[&str]) -> Complex64 {
    let mut fs: Vec<Tensor> = lower.iter().map(|l| Tensor::new(t, l)).collect();
    fs.extend(upper.iter().map(|l| Tensor::new(u, l)));
    contract_network(fs)
}

/// `ψ₀₀ψ₁₁ − ψ₀₁ψ₁₀`.
pub fn invariants2(s: &StateVector) -> Result<Complex64> {
    require_qubits(s, 2)?;
    let a = s.amps();
    Ok(a[0] * a[3] - a[1] * a[2])
}

/// The five local-unitary invariants of three qubits.
///
/// `i1`, `i2`, `i3` are the purities (unnormalized) of elements 0, 1, 2;
/// `i4 + i·i5` is the ε-contraction whose modulus gives the 3-tangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants3 {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub i5: f64,
    pub normalization: Normalization,
}

pub fn invariants3(s: &StateVector) -> Result<Invariants3> {
    require_qubits(s, 3)?;
    let t = s.amps();
    let tc: Vec<Complex64> = t.iter().map(|z| z.conj()).collect();
    let u = raise(t);
    let i1 = network(t, &tc, &["kij", "pmn"], &["pij", "kmn"]);
    let i2 = network(t, &tc, &["ikj", "mpn"], &["ipj", "mkn"]);
    let i3 = network(t, &tc, &["ijk", "mnp"], &["ijp", "mnk"]);
    let i45 = network(t, &u, &["ijk", "mnp"], &["ijp", "mnk"]);
    Ok(Invariants3 {
        i1: i1.re,
        i2: i2.re,
        i3: i3.re,
        i4: i45.re,
        i5: i45.im,
        normalization: detect_normalization(s),
    })
}

/// Wootters concurrence of the reduced state of qubits `pair`.
pub fn concurrence(s: &StateVector, pair: (usize, usize)) -> Result<f64> {
    if !s.is_qubits() || s.n() < 2 {
        return Err(Error::Shape("concurrence needs at least two qubits".into()));
    }
    if pair.0 == pair.1 || pair.0 >= s.n() || pair.1 >= s.n() {
        return Err(Error::IndexOutOfRange {
            index: pair.0.max(pair.1),
            n: s.n(),
        });
    }
    let rho = reduced_density(s, &[pair.0, pair.1])?;
    // σʸ⊗σʸ is real with entries ±1 on the anti-diagonal.
    let yy = CMat::from_fn(4, 4, |r, k| {
        if r + k == 3 {
            if r == 0 || r == 3 {
                c(-1.0, 0.0)
            } else {
                c1()
            }
        } else {
            c0()
        }
    });
    // Wootters through a decomposition of ρ: the singular values of
    // τ_kl = ψ_kᵀ (σʸ⊗σʸ) ψ_l avoid square roots of round-off eigenvalues.
    let (vals, vecs) = hermitian_eigen(&rho);
    let top = vals[0].max(0.0);
    let keep: Vec<usize> = (0..4).filter(|&k| vals[k] > 1e-14 * top).collect();
    let cols: Vec<crate::linalg::CVec> = keep
        .iter()
        .map(|&k| vecs.column(k).into_owned() * c(fm::sqrt(vals[k]), 0.0))
        .collect();
    let tau = CMat::from_fn(keep.len(), keep.len(), |i, j| {
        (cols[i].transpose() * &yy * &cols[j])[(0, 0)]
    });
    let mut lam: Vec<f64> = tau.singular_values().iter().copied().collect();
    lam.sort_by(|x, y| y.partial_cmp(x).unwrap_or(core::cmp::Ordering::Equal));
    lam.resize(4, 0.0);
    Ok((lam[0] - lam[1] - lam[2] - lam[3]).max(0.0))
}

/// `2|I₄ + iI₅| / (Σ|ψ|²)²`.
pub fn three_tangle(s: &StateVector) -> Result<f64> {
    let inv = invariants3(s)?;
    let n2 = s.norm_sqr();
    Ok(2.0 * c(inv.i4, inv.i5).norm() / (n2 * n2))
}

/// The sl-invariants of four qubits: `I⁽²⁾`, the three quartic and the
/// three sextic ε-contractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants4 {
    pub i2: Complex64,
    pub i12: Complex64,
    pub i13: Complex64,
    pub i14: Complex64,
    pub j12: Complex64,
    pub j23: Complex64,
    pub j13: Complex64,
    pub normalization: Normalization,
}

impl Invariants4 {
    /// `|I₁₂⁽⁴⁾ + I₁₃⁽⁴⁾ + I₁₄⁽⁴⁾ − (3/2)(I⁽²⁾)²|`.
    pub fn identity_residual(&self) -> f64 {
        (self.i12 + self.i13 + self.i14 - self.i2 * self.i2 * 1.5).norm()
    }

    /// Largest deviation of `6(I₁₂⁽⁶⁾ − I₂₃⁽⁶⁾) = I⁽²⁾(I₁₂⁽⁴⁾ − I₁₃⁽⁴⁾)` and
    /// its two companions.
    pub fn difference_residual(&self) -> f64 {
        let checks = [
            (self.j12 - self.j23) * 6.0 - self.i2 * (self.i12 - self.i13),
            (self.j12 - self.j13) * 6.0 - self.i2 * (self.i12 - self.i14),
            (self.j23 - self.j13) * 6.0 - self.i2 * (self.i13 - self.i14),
        ];
        checks.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn invariants4(s: &StateVector) -> Result<Invariants4> {
    require_qubits(s, 4)?;
    let t = s.amps();
    let u = raise(t);
    let i2: Complex64 = t.iter().zip(&u).map(|(a, b)| a * b).sum();
    let i12 = network(t, &u, &["ijkl", "opmn"], &["ijmn", "opkl"]);
    let i13 = network(t, &u, &["ikjl", "ompn"], &["imjn", "okpl"]);
    let i14 = network(t, &u, &["iklj", "omnp"], &["imnj", "oklp"]);
    let up = ["mrgd", "inph", "sjko"];
    let sextic = |plus: [&str; 3], minus: [&str; 3]| {
        (network(t, &u, &plus, &up) - network(t, &u, &minus, &up)) / 6.0
    };
    let j12 = sextic(["ingd", "mrko", "sjph"], ["ingo", "mrkh", "sjpd"]);
    let j23 = sextic(["ijpo", "mngh", "srkd"], ["ijpd", "mngo", "srkh"]);
    let j13 = sextic(["ijkh", "mnpd", "srgo"], ["ijgh", "mnkd", "srpo"]);
    Ok(Invariants4 {
        i2,
        i12,
        i13,
        i14,
        j12,
        j23,
        j13,
        normalization: detect_normalization(s),
    })
}

/// Named invariant values for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub entries: Vec<(&'static str, Complex64)>,
    pub normalization: Normalization,
}

impl InvariantReport {
    pub fn get(&self, name: &str) -> Option<Complex64> {
        self.entries
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
    }
}

impl From<Invariants3> for InvariantReport {
    fn from(v: Invariants3) -> Self {
        InvariantReport {
            entries: vec![
                ("I1", c(v.i1, 0.0)),
                ("I2", c(v.i2, 0.0)),
                ("I3", c(v.i3, 0.0)),
                ("I4", c(v.i4, 0.0)),
                ("I5", c(v.i5, 0.0)),
            ],
            normalization: v.normalization,
        }
    }
}

impl From<Invariants4> for InvariantReport {
    fn from(v: Invariants4) -> Self {
        InvariantReport {
            entries: vec![
                ("I2", v.i2),
                ("I4_12", v.i12),
                ("I4_13", v.i13),
                ("I4_14", v.i14),
                ("I6_12", v.j12),
                ("I6_23", v.j23),
                ("I6_13", v.j13),
            ],
            normalization: v.normalization,
        }
    }
}

/// All invariants available for the state's qubit count (2, 3 or 4).
pub fn invariant_report(s: &StateVector) -> Result<InvariantReport> {
    if !s.is_qubits() {
        return Err(Error::Unsupported(
            "invariants are defined for qubit assemblies".into(),
        ));
    }
    match s.n() {
        2 => Ok(InvariantReport {
            entries: vec![("I", invariants2(s)?)],
            normalization: detect_normalization(s),
        }),
        3 => Ok(invariants3(s)?.into()),
        4 => Ok(invariants4(s)?.into()),
        n => Err(Error::Unsupported(format!(
            "no invariant set for {n} qubits"
        ))),
    }
}

/// Roots of the monic cubic `z³ + a z² + b z + c`.
pub fn cubic_roots(a: Complex64, b: Complex64, cc: Complex64) -> [Complex64; 3] {
    let third = a / 3.0;
    let p = b - a * a / 3.0;
    let q = a * a * a * (2.0 / 27.0) - a * b / 3.0 + cc;
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let u1 = -q / 2.0 + disc;
    let u2 = -q / 2.0 - disc;
    let u3 = if u1.norm() >= u2.norm() { u1 } else { u2 };
    let omega = Complex64::from_polar(1.0, 2.0 * core::f64::consts::PI / 3.0);
    let mut roots = [c0(); 3];
    if u3.norm() < 1e-300 {
        roots = [-third; 3];
    } else {
        let u = u3.powf(1.0 / 3.0);
        let mut w = c1();
        for r in roots.iter_mut() {
            let uk = u * w;
            *r = uk - p / (uk * 3.0) - third;
            w *= omega;
        }
    }
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let f = ((*r + a) * *r + b) * *r + cc;
            let df = (*r * 3.0 + a * 2.0) * *r + b;
            if df.norm() > 1e-300 {
                *r -= f / df;
            }
        }
    }
    roots
}

/// One branch of the reconstruction: cubic root, square-root signs and the
/// resulting canonic amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub p: Complex64,
    pub xyz: [Complex64; 3],
    /// Square of the vacuum amplitude of the canonic state.
    pub psi0_sq: Complex64,
    /// `(β₃², β₅², β₆²)`.
    pub beta_sq: [Complex64; 3],
    /// Principal square roots of `beta_sq`.
    pub beta: [Complex64; 3],
    /// `Σ|ψ|²` of the canonic state.
    pub norm_sq: f64,
    pub nonunitarity: f64,
    /// `|β₃|² + |β₅|² + |β₆|²`.
    pub sl_measure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub branches: Vec<Branch>,
    /// Index of the branch minimizing the nonunitarity.
    pub selected: usize,
    /// Index of the branch minimizing the sl measure.
    pub sl_selected: usize,
}

impl Reconstruction {
    pub fn best(&self) -> &Branch {
        &self.branches[self.selected]
    }
}

/// Recover the sl-canonic amplitudes from `I⁽²⁾` and the sextic invariants.
///
/// With `I = I⁽²⁾/2`, the canonic state gives `I = ψ₀²(t+x+y+z)` and
/// `I₁₂⁽⁶⁾ = X(IX − YZ)` (cyclic), so `P = XYZ` solves
/// `(I₁₂⁽⁶⁾+P)(I₂₃⁽⁶⁾+P)(I₁₃⁽⁶⁾+P) = I³P²`, `X² = (I₁₂⁽⁶⁾+P)/I`,
/// `ψ₀² = (X+Y+Z−I)/2` and `x = (X/ψ₀² − 1)/2`.
pub fn reconstruct4(inv: &Invariants4) -> Result<Reconstruction> {
    let h = inv.i2 * 0.5;
    let scale = inv
        .j12
        .norm()
        .max(inv.j23.norm())
        .max(inv.j13.norm())
        .max(1e-300);
    if h.norm() < 1e-9 * fm::sqrt(fm::sqrt(scale)).max(1e-9) || h.norm() < 1e-14 {
        return Err(Error::Degenerate("I2 vanishes".into()));
    }
    let js = [inv.j12, inv.j23, inv.j13];
    let e1 = js[0] + js[1] + js[2];
    let e2 = js[0] * js[1] + js[1] * js[2] + js[0] * js[2];
    let e3 = js[0] * js[1] * js[2];
    let h3 = h * h * h;
    let roots = cubic_roots(e1 - h3, e2, e3);
    let mut branches = Vec::new();
    for &p in &roots {
        let base: Vec<Complex64> = js.iter().map(|&j| ((j + p) / h).sqrt()).collect();
        for signs in [
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ] {
            let mut xyz = [base[0] * signs[0], base[1] * signs[1], base[2] * signs[2]];
            // Keep XYZ = P; flipping one factor fixes the overall sign.
            if (xyz[0] * xyz[1] * xyz[2] - p).norm() > (xyz[0] * xyz[1] * xyz[2] + p).norm() {
                xyz[0] = -xyz[0];
            }
            let psi0_sq = (xyz[0] + xyz[1] + xyz[2] - h) * 0.5;
            if psi0_sq.norm() < 1e-300 {
                continue;
            }
            let beta_sq = [
                (xyz[0] / psi0_sq - 1.0) * 0.5,
                (xyz[1] / psi0_sq - 1.0) * 0.5,
                (xyz[2] / psi0_sq - 1.0) * 0.5,
            ];
            let t = c1() + beta_sq[0] + beta_sq[1] + beta_sq[2];
            let sum_b: f64 = beta_sq.iter().map(|b| b.norm()).sum();
            let norm_sq = psi0_sq.norm() * (1.0 + 2.0 * sum_b + t.norm_sqr());
            branches.push(Branch {
                p,
                xyz,
                psi0_sq,
                beta_sq,
                beta: [beta_sq[0].sqrt(), beta_sq[1].sqrt(), beta_sq[2].sqrt()],
                norm_sq,
                nonunitarity: fm::abs(fm::ln(norm_sq)),
                sl_measure: sum_b,
            });
        }
    }
    if branches.is_empty() {
        return Err(Error::Degenerate("no admissible branch".into()));
    }
    let pick = |key: &dyn Fn(&Branch) -> f64| {
        let mut best = 0;
        for (k, b) in branches.iter().enumerate() {
            let (kb, kk) = (key(b), key(&branches[best]));
            if kb < kk - 1e-12
                || (fm::abs(kb - kk) <= 1e-12 && b.p.norm() < branches[best].p.norm())
            {
                best = k;
            }
        }
        best
    };
    let selected = pick(&|b: &Branch| b.nonunitarity);
    let sl_selected = pick(&|b: &Branch| b.sl_measure);
    Ok(Reconstruction {
        branches,
        selected,
        sl_selected,
    })
}

/// The four scatter quantities compared across random states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measures4 {
    pub nonunitarity: f64,
    pub sl_measure: f64,
    pub poly_su: f64,
    pub poly_sl: f64,
}

pub fn measures4(s: &StateVector) -> Result<Measures4> {
    let s = s.normalized()?;
    let inv = invariants4(&s)?;
    let rec = reconstruct4(&inv)?;
    let i2 = inv.i2.norm();
    Ok(Measures4 {
        nonunitarity: rec.best().nonunitarity,
        sl_measure: rec.branches[rec.sl_selected].sl_measure,
        poly_su: i2,
        poly_sl: (inv.j13.norm() + inv.j23.norm() + inv.j12.norm()) / (i2 * i2),
    })
}

/// Result of the GHZ-orbit analysis of a three-qubit su-canonic state.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaReport {
    pub zeta: Complex64,
    /// Both solutions of `−(1+2z)²/(z(1+z)) = ζ`; they are related by `z ↔ −1−z`.
    pub roots: [Complex64; 2],
    /// Off-diagonal product `A e^{2B} C` of each filter operation.
    pub z_per_qubit: [Complex64; 3],
    /// Determinant-1 operations with `s = scale · (⊗ops)(|000⟩+|111⟩)/√2`.
    pub ops: Vec<LocalOp>,
    pub scale: Complex64,
}

fn det2(m: &[[Complex64; 2]; 2]) -> Complex64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// `ζ = ψ₁₁₁²ψ₀₀₀² / (ψ₀₀₀ψ₁₁₀ψ₀₁₁ψ₁₀₁)` and a determinant-1 filter
/// relating the state to GHZ.
pub fn zeta_filter(s: &StateVector, tol: f64) -> Result<ZetaReport> {
    require_qubits(s, 3)?;
    let a = s.amps();
    let scale = fm::sqrt(s.norm_sqr());
    let (p0, p3, p5, p6, p7) = (a[0], a[3], a[5], a[6], a[7]);
    for k in [1usize, 2, 4] {
        if a[k].norm() > 1e-6 * scale {
            return Err(Error::UnsupportedForm(
                "state is not su-canonic (linear amplitudes present)".into(),
            ));
        }
    }
    let tau = three_tangle(s)?;
    let den = p0 * p3 * p5 * p6;
    if tau < tol {
        return Err(Error::NotInGenericOrbit);
    }
    if den.norm() < 1e-12 * (scale * scale) * (scale * scale) {
        return Err(Error::UnsupportedForm(
            "a bilinear amplitude vanishes".into(),
        ));
    }
    let zeta = p7 * p7 * p0 * p0 / den;
    if (zeta + 4.0).norm() < tol {
        return Err(Error::NotInGenericOrbit);
    }
    // (4+ζ)z² + (4+ζ)z + 1 = 0
    let disc = (c1() - 4.0 / (zeta + 4.0)).sqrt();
    let roots = [(-c1() + disc) * 0.5, (-c1() - disc) * 0.5];

    // Slices Ψ_i[j][k] = ψ_{ijk}; the pencil αΨ₀ + βΨ₁ has two rank-one members.
    let slice = |i: usize| -> [[Complex64; 2]; 2] {
        let mut m = [[c0(); 2]; 2];
        for (j, row) in m.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = a[i | (j << 1) | (k << 2)];
            }
        }
        m
    };
    let (s0, s1) = (slice(0), slice(1));
    let d0 = det2(&s0);
    let d1 = det2(&s1);
    let mixed =
        s0[0][0] * s1[1][1] + s1[0][0] * s0[1][1] - s0[0][1] * s1[1][0] - s1[0][1] * s0[1][0];
    let pencil: [(Complex64, Complex64); 2] = if d1.norm() >= d0.norm() {
        let sq = (mixed * mixed - d0 * d1 * 4.0).sqrt();
        [
            (c1(), (-mixed + sq) / (d1 * 2.0)),
            (c1(), (-mixed - sq) / (d1 * 2.0)),
        ]
    } else {
        let sq = (mixed * mixed - d0 * d1 * 4.0).sqrt();
        [
            ((-mixed + sq) / (d0 * 2.0), c1()),
            ((-mixed - sq) / (d0 * 2.0), c1()),
        ]
    };
    let mut u2 = [[c0(); 2]; 2];
    let mut u3 = [[c0(); 2]; 2];
    let mut rank1 = [[[c0(); 2]; 2]; 2];
    for (r, &(al, be)) in pencil.iter().enumerate() {
        let mut m = [[c0(); 2]; 2];
        for j in 0..2 {
            for k in 0..2 {
                m[j][k] = s0[j][k] * al + s1[j][k] * be;
            }
        }
        let (mut jb, mut kb) = (0, 0);
        for j in 0..2 {
            for k in 0..2 {
                if m[j][k].norm() > m[jb][kb].norm() {
                    jb = j;
                    kb = k;
                }
            }
        }
        let piv = m[jb][kb];
        u2[r] = [m[0][kb], m[1][kb]];
        u3[r] = [m[jb][0] / piv, m[jb][1] / piv];
        for j in 0..2 {
            for k in 0..2 {
                rank1[r][j][k] = u2[r][j] * u3[r][k];
            }
        }
    }
    // Ψ_i = w_i⁰ R₀ + w_i¹ R₁ in the least-squares sense.
    let flat = |m: &[[Complex64; 2]; 2]| [m[0][0], m[0][1], m[1][0], m[1][1]];
    let (r0, r1) = (flat(&rank1[0]), flat(&rank1[1]));
    let g = |x: &[Complex64; 4], y: &[Complex64; 4]| -> Complex64 {
        x.iter().zip(y).map(|(p, q)| p.conj() * q).sum()
    };
    let gram = [[g(&r0, &r0), g(&r0, &r1)], [g(&r1, &r0), g(&r1, &r1)]];
    let gd = det2(&gram);
    if gd.norm() < 1e-300 {
        return Err(Error::NotInGenericOrbit);
    }
    let mut w = [[c0(); 2]; 2];
    for (i, sl) in [s0, s1].iter().enumerate() {
        let f = flat(sl);
        let (b0, b1) = (g(&r0, &f), g(&r1, &f));
        w[i][0] = (b0 * gram[1][1] - b1 * gram[0][1]) / gd;
        w[i][1] = (gram[0][0] * b1 - gram[1][0] * b0) / gd;
    }
    // Columns: |0⟩ ↦ first product vector, |1⟩ ↦ second.
    let mats = [
        [[w[0][0], w[0][1]], [w[1][0], w[1][1]]],
        [[u2[0][0], u2[1][0]], [u2[0][1], u2[1][1]]],
        [[u3[0][0], u3[1][0]], [u3[0][1], u3[1][1]]],
    ];
    let mut total = c(core::f64::consts::SQRT_2, 0.0);
    let mut ops = Vec::with_capacity(3);
    let mut zs = [c0(); 3];
    for (e, m) in mats.iter().enumerate() {
        let d = det2(m);
        if d.norm() < 1e-300 {
            return Err(Error::NotInGenericOrbit);
        }
        let r = d.sqrt();
        total *= r;
        let mm = CMat::from_row_slice(2, 2, &[m[0][0] / r, m[0][1] / r, m[1][0] / r, m[1][1] / r]);
        zs[e] = mm[(0, 1)] * mm[(1, 0)];
        ops.push(LocalOp::from_matrix(e, mm, Group::SL)?);
    }
    Ok(ZetaReport {
        zeta,
        roots,
        z_per_qubit: zs,
        ops,
        scale: total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeresForm {
    Bilinear,
    Trilinear,
}

/// Partial-transpose spectrum of `ρ₁₂` for four-qubit canonic states
/// supported on bilinear or trilinear amplitudes.
///
/// `ρ₁₂^{T₂}` splits into two 2×2 blocks; `computed` holds (product, sum)
/// of the eigenvalues of each block, `stated` the closed forms as
/// originally tabulated and `derived` closed forms obtained directly from
/// the block entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PeresReport {
    pub form: PeresForm,
    pub eigenvalues: [f64; 4],
    pub computed: [(f64, f64); 2],
    pub stated: [(f64, f64); 2],
    pub derived: [(f64, f64); 2],
    pub negative: bool,
}

impl PeresReport {
    pub fn stated_residual(&self) -> f64 {
        residual(&self.computed, &self.stated)
    }

    pub fn derived_residual(&self) -> f64 {
        residual(&self.computed, &self.derived)
    }
}

fn residual(a: &[(f64, f64); 2], b: &[(f64, f64); 2]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| fm::abs(x.0 - y.0).max(fm::abs(x.1 - y.1)))
        .fold(0.0, f64::max)
}

pub fn peres_relations(s: &StateVector, tol: f64) -> Result<PeresReport> {
    require_qubits(s, 4)?;
    let a = s.amps();
    let scale = fm::sqrt(s.norm_sqr());
    let nz = |k: usize| a[k].norm() > tol * scale;
    let weight_of = |w: u32| (1..16usize).filter(|k| k.count_ones() == w).any(nz);
    let form = match (weight_of(1), weight_of(2), weight_of(3), weight_of(4)) {
        (false, _, false, false) => PeresForm::Bilinear,
        (false, false, _, false) => PeresForm::Trilinear,
        _ => {
            return Err(Error::UnsupportedForm(
                "needs a canonic state with only bilinear or only trilinear amplitudes".into(),
            ))
        }
    };
    let rho = reduced_density(s, &[0, 1])?.map(|z| z * s.norm_sqr());
    let pt = partial_transpose(&rho, &[2, 2], 1);
    // Blocks {|00⟩, |11⟩} and {|10⟩, |01⟩} in the (q1 fastest) pair basis.
    let block = |i: usize, j: usize| {
        let (p, q, r) = (pt[(i, i)].re, pt[(j, j)].re, pt[(i, j)]);
        (p * q - r.norm_sqr(), p + q)
    };
    let even = block(0, 3);
    let odd = block(1, 2);
    let eig = |(prod, sum): (f64, f64)| {
        let d = fm::sqrt((sum * sum / 4.0 - prod).max(0.0));
        [sum / 2.0 - d, sum / 2.0 + d]
    };
    let (e1, e2) = (eig(even), eig(odd));
    let mut eigenvalues = [e1[0], e1[1], e2[0], e2[1]];
    eigenvalues.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    let m = |k: usize| a[k].norm_sqr();
    let (computed, stated, derived) = match form {
        PeresForm::Bilinear => {
            let cross = a[5] * a[9] + a[10] * a[6];
            let stated = [
                (
                    cross.norm_sqr() - m(3) * m(0),
                    2.0 * (a[9].conj() * a[10] + a[5].conj() * a[6]).re,
                ),
                (
                    -cross.norm_sqr() + m(3) * m(0) + m(3) * m(12),
                    m(0) + m(3) + m(12),
                ),
            ];
            let mix = a[6] * a[5].conj() + a[10] * a[9].conj();
            let derived = [
                (
                    (m(5) + m(9)) * (m(6) + m(10)) - m(3) * m(0),
                    m(5) + m(6) + m(9) + m(10),
                ),
                ((m(0) + m(12)) * m(3) - mix.norm_sqr(), m(0) + m(3) + m(12)),
            ];
            ([odd, even], stated, derived)
        }
        PeresForm::Trilinear => {
            let stated = [
                (
                    m(0) * m(7) + m(0) * m(11) - m(14) * m(13),
                    m(0) + m(11) + m(7),
                ),
                (m(14) * m(13), m(14) + m(13)),
            ];
            ([even, odd], stated, stated)
        }
    };
    Ok(PeresReport {
        form,
        eigenvalues,
        computed,
        stated,
        derived,
        negative: eigenvalues[0] < -tol * scale * scale,
    })
}

/// Hypergraph of tanglemeter coefficients: one node per element, an edge
/// per bilinear term and a hyperedge per higher term.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementGraph {
    pub n: usize,
    pub edges: Vec<((usize, usize), f64)>,
    /// Terms of order three and above; element lists are increasing.
    pub hyperedges: Vec<(Vec<usize>, f64)>,
}

impl EntanglementGraph {
    pub fn triangles(&self) -> impl Iterator<Item = &(Vec<usize>, f64)> {
        self.hyperedges.iter().filter(|(v, _)| v.len() == 3)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph tanglemeter {\n");
        for k in 0..self.n {
            let _ = writeln!(out, "  q{};", k + 1);
        }
        for ((i, j), w) in &self.edges {
            let _ = writeln!(out, "  q{} -- q{} [label=\"{:.6}\"];", i + 1, j + 1, w);
        }
        for (k, (v, w)) in self.hyperedges.iter().enumerate() {
            let _ = writeln!(out, "  subgraph cluster_h{k} {{");
            let _ = writeln!(out, "    label=\"{:.6}\";", w);
            for e in v {
                let _ = writeln!(out, "    q{};", e + 1);
            }
            out.push_str("  }\n");
        }
        out.push_str("}\n");
        out
    }
}

/// Graph of a qubit tanglemeter; coefficients with `|β| ≤ tol` are dropped.
pub fn graph_export(f: &NilPoly, tol: f64) -> Result<EntanglementGraph> {
    if f.caps().iter().any(|&k| k != 1) {
        return Err(Error::Unsupported(
            "graph export needs a qubit tanglemeter".into(),
        ));
    }
    let n = f.n();
    let mut edges = Vec::new();
    let mut hyper: BTreeMap<(usize, usize), (Vec<usize>, f64)> = BTreeMap::new();
    for (idx, v) in f.terms() {
        let w = v.norm();
        if w <= tol {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&k| idx >> k & 1 == 1).collect();
        match members.len() {
            0 | 1 => {}
            2 => edges.push(((members[0], members[1]), w)),
            len => {
                hyper.insert((len, idx), (members, w));
            }
        }
    }
    Ok(EntanglementGraph {
        n,
        edges,
        hyperedges: hyper.into_values().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localops::{apply_locals_to_state, random_local_ops};
    use crate::states::random_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn st(amps: &[(usize, Complex64)], n: usize) -> StateVector {
        let mut v = vec![c0(); 1 << n];
        for &(k, a) in amps {
            v[k] = a;
        }
        StateVector::qubits(v).unwrap()
    }

    /// Loop over every index assignment of a contraction written with
    /// single-letter labels.
    fn brute(t: &[Complex64], u: &[Complex64], lower: &[&str], upper: &[&str]) -> Complex64 {
        let mut letters: Vec<u8> = Vec::new();
        for w in lower.iter().chain(upper) {
            for b in w.bytes() {
                if !letters.contains(&b) {
                    letters.push(b);
                }
            }
        }
        let flat = |w: &str, asg: usize| -> usize {
            w.bytes()
                .enumerate()
                .map(|(k, b)| ((asg >> letters.iter().position(|&x| x == b).unwrap()) & 1) << k)
                .sum()
        };
        let mut acc = c0();
        for asg in 0..(1usize << letters.len()) {
            let mut term = c1();
            for w in lower {
                term *= t[flat(w, asg)];
            }
            for w in upper {
                term *= u[flat(w, asg)];
            }
            acc += term;
        }
        acc
    }

    /// Raising by explicit ε sums.
    fn brute_raise(t: &[Complex64], n: usize) -> Vec<Complex64> {
        let eps = |a: usize, b: usize| match (a, b) {
            (0, 1) => 1.0,
            (1, 0) => -1.0,
            _ => 0.0,
        };
        (0..t.len())
            .map(|x| {
                let mut acc = c0();
                for (y, &ty) in t.iter().enumerate() {
                    let mut f = 1.0;
                    for k in 0..n {
                        f *= eps((x >> k) & 1, (y >> k) & 1);
                    }
                    acc += ty * f;
                }
                acc
            })
            .collect()
    }

    #[test]
    fn raise_matches_epsilon_sums() {
        let s = random_state(&[2; 4], 3);
        let a = raise(s.amps());
        let b = brute_raise(s.amps(), 4);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-15));
    }

    #[test]
    fn contractions_match_brute_force() {
        let s = random_state(&[2; 4], 11);
        let t = s.amps();
        let u = brute_raise(t, 4);
        let inv = invariants4(&s).unwrap();
        let i2 = brute(t, &u, &["ijkl"], &["ijkl"]);
        let i13 = brute(t, &u, &["ikjl", "ompn"], &["imjn", "okpl"]);
        let up = ["mrgd", "inph", "sjko"];
        let j23 = (brute(t, &u, &["ijpo", "mngh", "srkd"], &up)
            - brute(t, &u, &["ijpd", "mngo", "srkh"], &up))
            / 6.0;
        assert!((inv.i2 - i2).norm() < 1e-12);
        assert!((inv.i13 - i13).norm() < 1e-12);
        assert!((inv.j23 - j23).norm() < 1e-12);
        let s3 = random_state(&[2; 3], 5);
        let t3 = s3.amps();
        let u3 = brute_raise(t3, 3);
        let tc: Vec<Complex64> = t3.iter().map(|z| z.conj()).collect();
        let inv3 = invariants3(&s3).unwrap();
        let i2b = brute(t3, &tc, &["ikj", "mpn"], &["ipj", "mkn"]);
        let i45 = brute(t3, &u3, &["ijk", "mnp"], &["ijp", "mnk"]);
        assert!((inv3.i2 - i2b.re).abs() < 1e-12 && i2b.im.abs() < 1e-12);
        assert!((c(inv3.i4, inv3.i5) - i45).norm() < 1e-12);
    }

    #[test]
    fn two_qubit_values() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let bell = st(&[(0, c(h, 0.0)), (3, c(h, 0.0))], 2);
        assert!((invariants2(&bell).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        let prod = st(&[(0, c(0.6, 0.0)), (1, c(0.8, 0.0))], 2);
        assert!(invariants2(&prod).unwrap().norm() < 1e-15);
        assert!((concurrence(&bell, (0, 1)).unwrap() - 1.0).abs() < 1e-10);
    }

    /// Purity of element `q`'s complement pair written through the canonic
    /// coefficients, with `opp` the bilinear not touching `q`.
    fn purity_formula(b: [Complex64; 3], b7: Complex64, opp: usize) -> f64 {
        let a = b7.norm_sqr();
        let s: f64 = b.iter().map(|z| z.norm_sqr()).sum();
        let o = b[opp].norm_sqr();
        (1.0 + o) * (1.0 + o) + (s - o + a) * (s - o + a) + 2.0 * o * a
    }

    #[test]
    fn three_qubit_canonic_values() {
        let (b3, b5, b6, b7) = (c(0.3, 0.0), c(0.5, 0.0), c(-0.2, 0.0), c(0.4, 0.7));
        let s = st(&[(0, c1()), (3, b3), (5, b5), (6, b6), (7, b7)], 3);
        let inv = invariants3(&s).unwrap();
        let b = [b3, b5, b6];
        // Element 0's purity involves the bilinear on elements 1, 2 (β₆).
        assert!((inv.i1 - purity_formula(b, b7, 2)).abs() < 1e-12);
        assert!((inv.i2 - purity_formula(b, b7, 1)).abs() < 1e-12);
        assert!((inv.i3 - purity_formula(b, b7, 0)).abs() < 1e-12);
        let expect = (b7 * b7 + b3 * b5 * b6 * 4.0) * 2.0;
        assert!((c(inv.i4, inv.i5) - expect).norm() < 1e-12);
        let vac = st(&[(0, c1())], 3);
        let v = invariants3(&vac).unwrap();
        assert_eq!(v.normalization, Normalization::Vacuum);
        assert!(
            (v.i1 - 1.0).abs() < 1e-15 && (v.i3 - 1.0).abs() < 1e-15 && v.i4 == 0.0 && v.i5 == 0.0
        );
    }

    #[test]
    fn tangle_and_concurrence_examples() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let ghz = st(&[(0, c(h, 0.0)), (7, c(h, 0.0))], 3);
        assert!((three_tangle(&ghz).unwrap() - 1.0).abs() < 1e-12);
        assert!(concurrence(&ghz, (0, 1)).unwrap() < 1e-7);
        let r = 1.0 / fm::sqrt(3.0);
        let w = st(&[(1, c(r, 0.0)), (2, c(r, 0.0)), (4, c(r, 0.0))], 3);
        assert!(three_tangle(&w).unwrap() < 1e-12);
        assert!((concurrence(&w, (0, 2)).unwrap() - 2.0 / 3.0).abs() < 1e-7);
        let bell0 = st(&[(0, c(h, 0.0)), (3, c(h, 0.0))], 3);
        assert!((concurrence(&bell0, (0, 1)).unwrap() - 1.0).abs() < 1e-10);
        assert!(three_tangle(&bell0).unwrap() < 1e-12);
    }

    #[test]
    fn canonic_concurrence_formula() {
        // Elements 0 and 1 of a vacuum-normalized canonic state. Without the
        // cubic term C = 2||β₃| − |β₅β₆||/N; with it the cross term enters.
        let (b3, b5, b6) = (0.7, -0.4, 0.25);
        for b7 in [c0(), c(0.3, -0.5)] {
            let s = st(
                &[
                    (0, c1()),
                    (3, c(b3, 0.0)),
                    (5, c(b5, 0.0)),
                    (6, c(b6, 0.0)),
                    (7, b7),
                ],
                3,
            );
            let n = 1.0 + b3 * b3 + b5 * b5 + b6 * b6 + b7.norm_sqr();
            let frob = 4.0 * b3 * b3 + 4.0 * (b5 * b6) * (b5 * b6) + 2.0 * b7.norm_sqr();
            let det = (b7 * b7 + 4.0 * b3 * b5 * b6).norm();
            let expect = fm::sqrt(frob - 2.0 * det) / n;
            assert!((concurrence(&s, (0, 1)).unwrap() - expect).abs() < 1e-10);
            if b7 == c0() {
                assert!((expect - 2.0 * (fm::abs(b3) - fm::abs(b5 * b6)).abs() / n).abs() < 1e-12);
            }
            let tau = 4.0 * det / (n * n);
            assert!((three_tangle(&s).unwrap() - tau).abs() < 1e-12);
        }
    }

    #[test]
    fn four_qubit_identities() {
        for seed in 0..20 {
            let inv = invariants4(&random_state(&[2; 4], seed)).unwrap();
            assert!(
                inv.identity_residual() < 1e-12,
                "{}",
                inv.identity_residual()
            );
            assert!(inv.difference_residual() < 1e-12);
        }
    }

    fn canonic4(b3: Complex64, b5: Complex64, b6: Complex64) -> StateVector {
        let t = c1() + b3 * b3 + b5 * b5 + b6 * b6;
        st(
            &[
                (0, c1()),
                (3, b3),
                (12, b3),
                (5, b5),
                (10, b5),
                (6, b6),
                (9, b6),
                (15, t),
            ],
            4,
        )
    }

    #[test]
    fn canonic_sextic_closed_form() {
        let (b3, b5, b6) = (c(0.3, 0.0), c(0.0, 0.5), c(-0.2, 0.0));
        let inv = invariants4(&canonic4(b3, b5, b6)).unwrap();
        let (x, y, z) = (b3 * b3, b5 * b5, b6 * b6);
        let t = c1() + x + y + z;
        assert!((inv.i2 - (t + x + y + z) * 2.0).norm() < 1e-12);
        assert!((inv.j12 - (t + x - y - z) * (t * x - y * z) * 4.0).norm() < 1e-12);
        assert!((inv.j23 - (t - x + y - z) * (t * y - x * z) * 4.0).norm() < 1e-12);
        assert!((inv.j13 - (t - x - y + z) * (t * z - x * y) * 4.0).norm() < 1e-12);
    }

    #[test]
    fn sl_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = random_state(&[2; 4], 2);
        let a = invariants4(&s).unwrap();
        for _ in 0..5 {
            let ops = random_local_ops(&mut rng, 4, Group::SL, 5.0);
            let b = invariants4(&apply_locals_to_state(&s, &ops).unwrap()).unwrap();
            for (x, y) in [(a.i2, b.i2), (a.i12, b.i12), (a.j13, b.j13), (a.j23, b.j23)] {
                assert!((x - y).norm() < 1e-10 * (1.0 + x.norm()));
            }
        }
    }

    #[test]
    fn cubic_roots_solve() {
        let (a, b, cc) = (c(0.3, -1.0), c(2.0, 0.5), c(-0.7, 0.1));
        for r in cubic_roots(a, b, cc) {
            assert!((((r + a) * r + b) * r + cc).norm() < 1e-12);
        }
        let triple = cubic_roots(c(-3.0, 0.0), c(3.0, 0.0), c(-1.0, 0.0));
        assert!(triple.iter().all(|r| (r - c1()).norm() < 1e-4));
    }

    #[test]
    fn reconstruction_recovers_canonic_triple() {
        let (b3, b5, b6) = (c(0.3, 0.1), c(-0.2, 0.5), c(0.6, -0.3));
        let s = canonic4(b3, b5, b6);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ops = random_local_ops(&mut rng, 4, Group::SL, 4.0);
        let dressed = apply_locals_to_state(&s, &ops)
            .unwrap()
            .normalized()
            .unwrap();
        let rec = reconstruct4(&invariants4(&dressed).unwrap()).unwrap();
        let want = [b3 * b3, b5 * b5, b6 * b6];
        let hit = rec
            .branches
            .iter()
            .any(|br| (0..3).all(|k| (br.beta_sq[k] - want[k]).norm() < 1e-8));
        assert!(hit);
    }

    #[test]
    fn ghz4_has_zero_sl_measure() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let ghz = st(&[(0, c(h, 0.0)), (15, c(h, 0.0))], 4);
        let m = measures4(&ghz).unwrap();
        assert!(m.sl_measure < 1e-9);
        assert!(m.nonunitarity < 1e-9);
    }

    #[test]
    fn zeta_recovers_dressing() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let (b3, b5, b6, b7) = (c(0.4, 0.1), c(0.3, -0.2), c(-0.5, 0.2), c(0.9, 0.3));
        let s = st(&[(0, c1()), (3, b3), (5, b5), (6, b6), (7, b7)], 3);
        let rep = zeta_filter(&s, 1e-9).unwrap();
        for z in rep.roots {
            let back = -(c1() + z * 2.0) * (c1() + z * 2.0) / (z * (c1() + z));
            assert!((back - rep.zeta).norm() < 1e-9);
        }
        let inv_ops: Vec<LocalOp> = rep.ops.iter().map(|o| o.inverse()).collect();
        let back = apply_locals_to_state(&s, &inv_ops).unwrap();
        let b = back.amps();
        let expect = rep.scale * c(h, 0.0);
        assert!((b[0] - expect).norm() < 1e-9 && (b[7] - expect).norm() < 1e-9);
        assert!((1..7).all(|k| b[k].norm() < 1e-9));
        for z in rep.z_per_qubit {
            assert!(
                rep.roots.iter().any(|r| (r - z).norm() < 1e-8),
                "{z} vs {:?}",
                rep.roots
            );
        }
    }

    #[test]
    fn zeta_rejects_singular_states() {
        let r = 1.0 / fm::sqrt(3.0);
        let s = st(&[(0, c(r, 0.0)), (3, c(r, 0.0)), (5, c(r, 0.0))], 3);
        assert_eq!(zeta_filter(&s, 1e-9).unwrap_err(), Error::NotInGenericOrbit);
    }

    #[test]
    fn peres_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        use rand_distr::{Distribution, StandardNormal};
        let mut g = || {
            c(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        };
        let bi = st(
            &[
                (0, c1()),
                (3, g()),
                (5, g()),
                (6, g()),
                (9, g()),
                (10, g()),
                (12, g()),
            ],
            4,
        );
        let rep = peres_relations(&bi, 1e-12).unwrap();
        assert_eq!(rep.form, PeresForm::Bilinear);
        assert!(rep.derived_residual() < 1e-9);
        // Only the sum over the {|00⟩,|11⟩} block survives from the tabulated forms.
        assert!(fm::abs(rep.computed[1].1 - rep.stated[1].1) < 1e-9);
        let tri = st(&[(0, c1()), (7, g()), (11, g()), (13, g()), (14, g())], 4);
        let rep = peres_relations(&tri, 1e-12).unwrap();
        assert_eq!(rep.form, PeresForm::Trilinear);
        assert!(rep.stated_residual() < 1e-9);
        let prod = st(&[(0, c1())], 4);
        assert!(!peres_relations(&prod, 1e-12).unwrap().negative);
        let bad = st(&[(0, c1()), (1, c1())], 4);
        assert!(matches!(
            peres_relations(&bad, 1e-12),
            Err(Error::UnsupportedForm(_))
        ));
    }

    #[test]
    fn graph_shapes() {
        let pairs = NilPoly::qubit_terms(4, &[(3, c1()), (12, c1())]);
        let g = graph_export(&pairs, 1e-9).unwrap();
        assert_eq!(g.edges.len(), 2);
        assert!(g.hyperedges.is_empty());
        let ghz = NilPoly::qubit_terms(3, &[(7, c1())]);
        let g = graph_export(&ghz, 1e-9).unwrap();
        assert!(g.edges.is_empty());
        assert_eq!(g.triangles().count(), 1);
        let loop3 =
            NilPoly::qubit_terms(3, &[(3, c(0.5, 0.0)), (5, c(0.5, 0.0)), (6, c(0.5, 0.0))]);
        let g = graph_export(&loop3, 1e-9).unwrap();
        assert_eq!(g.edges.len(), 3);
        assert!(g.to_dot().contains("q1 -- q2"));
    }
}
