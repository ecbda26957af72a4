//! The `tangle` command line.
//!
//! Results go to stdout as JSON unless a command writes CSV or DOT. Exit
//! status is 0 on success, 2 when the library reports a domain error and 1
//! for unreadable input or a bad invocation.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nilcore::canon::{self, ClassLabel, Tanglemeter};
use nilcore::dynamics::{evolve_nilpotential, IntegratorCfg};
use nilcore::invariants::{self, concurrence, three_tangle};
use nilcore::linalg::CMat;
use nilcore::qudit::{self, RestrictedAlgebra};
use nilcore::states::{self, Normalization, Partition};
use nilcore::{StateVector, Tolerances};
use serde_json::{json, Value};

use crate::io::{self, coeff_map, complex_json, IoError};
use crate::sample::sample_figpoly;

#[derive(Debug, Parser)]
#[command(
    name = "tangle",
    version,
    about = "Nilpotent-polynomial entanglement analysis of pure states"
)]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Residual at which feedback flows stop.
    #[arg(long, global = true, default_value_t = Tolerances::default().conv)]
    pub tol: f64,
    /// Coefficients below this count as zero in criteria and output.
    #[arg(long, global = true, default_value_t = Tolerances::default().crit)]
    pub tol_crit: f64,
    /// Feedback-matrix determinant below which a four-qubit orbit is singular.
    #[arg(long, global = true, default_value_t = Tolerances::default().det)]
    pub tol_det: f64,
    /// Threshold separating zero from nonzero classifying quantities.
    #[arg(long, global = true, default_value_t = Tolerances::default().class)]
    pub tol_class: f64,
    #[arg(long, global = true, default_value_t = Tolerances::default().max_iter)]
    pub max_iter: usize,
    /// Worker threads for sampling commands.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

impl GlobalOpts {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            conv: self.tol,
            crit: self.tol_crit,
            det: self.tol_det,
            class: self.tol_class,
            max_iter: self.max_iter,
            ..Tolerances::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Dot,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// SU-canonical tanglemeter (qubits or qudits).
    Tanglemeter { input: PathBuf },
    /// SL-canonical form and orbit label (2 to 4 qubits).
    SlCanon { input: PathBuf },
    /// Orbit class (3 or 4 qubits).
    Classify { input: PathBuf },
    /// Polynomial invariants (2 to 4 qubits).
    Invariants { input: PathBuf },
    /// Entanglement measures (2 to 4 qubits).
    Measures { input: PathBuf },
    /// Integrate the nilpotential under a constant Hamiltonian.
    Evolve {
        input: PathBuf,
        #[arg(long)]
        hamiltonian: PathBuf,
        #[arg(long)]
        time: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Keep every k-th step.
        #[arg(long, default_value_t = 100)]
        stride: usize,
    },
    /// Regroup elements, e.g. `--group 0,1 --group 2`.
    Merge {
        input: PathBuf,
        #[arg(long = "group", required = true)]
        groups: Vec<String>,
    },
    /// Correlation graph of the SU tanglemeter (qubits).
    Graph { input: PathBuf },
    /// Random four-qubit states with their polynomial and canonical measures.
    SampleFigpoly {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
    },
    /// GHZ-orbit parameter and filter of a three-qubit state.
    GhzFilter { input: PathBuf },
    /// Spin-1 generating function of a qutrit state.
    Genfun {
        input: PathBuf,
        /// Canonicalize under the spin-1 SU(2) first.
        #[arg(long)]
        canonical: bool,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Domain(#[from] nilcore::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Domain(_) => 2,
            Failure::Usage(_) | Failure::Io(_) => 1,
        }
    }
}

/// Parse `args` (program name first), run, and return the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok(text) => {
            if out.write_all(text.as_bytes()).is_err() {
                return 1;
            }
            0
        }
        Err(f) => {
            let _ = match &f {
                Failure::Domain(e) => writeln!(
                    err,
                    "{}",
                    json!({"error": e.code(), "message": e.to_string()})
                ),
                other => writeln!(err, "error: {other}"),
            };
            f.exit_code()
        }
    }
}

fn read(path: &Path) -> Result<StateVector, Failure> {
    Ok(io::read_state(path)?)
}

fn only_json(opts: &GlobalOpts) -> Result<(), Failure> {
    match opts.format {
        None | Some(Format::Json) => Ok(()),
        Some(f) => Err(Failure::Usage(format!(
            "this command writes JSON only, not {f:?}"
        ))),
    }
}

fn line(v: Value) -> String {
    let mut s = v.to_string();
    s.push('\n');
    s
}

fn require_qubits(s: &StateVector, allowed: &[usize]) -> Result<(), Failure> {
    if !s.is_qubits() || !allowed.contains(&s.n()) {
        return Err(nilcore::Error::Unsupported(format!(
            "needs {allowed:?} qubits, got dimensions {:?}",
            s.dims()
        ))
        .into());
    }
    Ok(())
}

fn matrix_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| {
                Value::Array(
                    (0..m.ncols())
                        .map(|c| json!([m[(r, c)].re, m[(r, c)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn tanglemeter_json(tm: &Tanglemeter, dims: &[usize], floor: f64) -> Value {
    json!({
        "beta": coeff_map(&tm.poly, floor),
        "group": tm.group.name(),
        "dims": dims,
        "kappa": complex_json(tm.kappa, floor),
        "vacuum_population": tm.vacuum_population(),
        "convergence": {"iterations": tm.convergence.iterations, "residual": tm.convergence.residual},
        "transform": tm.transform.iter().map(|op| json!({"element": op.element, "matrix": matrix_json(&op.matrix)})).collect::<Vec<_>>(),
    })
}

fn label_json(label: &ClassLabel, floor: f64) -> Value {
    json!({
        "class": label.name,
        "params": label.params.iter().map(|&z| complex_json(z, floor)).collect::<Vec<_>>(),
        "gamma_zero_count": label.gamma_zero_count,
        "form": label.form.as_ref().map(|f| coeff_map(f, floor)),
    })
}

fn normalization_name(n: Normalization) -> &'static str {
    match n {
        Normalization::None => "none",
        Normalization::Probability => "probability",
        Normalization::Vacuum => "vacuum",
    }
}

fn parse_groups(groups: &[String]) -> Result<Partition, Failure> {
    let parsed = groups
        .iter()
        .map(|g| {
            g.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<usize>()
                        .map_err(|e| Failure::Usage(format!("group {g:?}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Partition::new(parsed))
}

pub fn execute(cli: &Cli) -> Result<String, Failure> {
    let opts = &cli.opts;
    let tol = opts.tolerances();
    let floor = tol.crit;
    match &cli.command {
        Command::Tanglemeter { input } => {
            only_json(opts)?;
            let s = read(input)?;
            let tm = qudit::qudit_su_canonicalize_tol(&s, &tol)?;
            Ok(line(tanglemeter_json(&tm, s.dims(), floor)))
        }
        Command::SlCanon { input } => {
            only_json(opts)?;
            let s = read(input)?;
            require_qubits(&s, &[2, 3, 4])?;
            let (tm, label) = canon::sl_canonicalize_tol(&s, &tol)?;
            let mut v = tanglemeter_json(&tm, s.dims(), floor);
            v["label"] = label_json(&label, floor);
            Ok(line(v))
        }
        Command::Classify { input } => {
            only_json(opts)?;
            let s = read(input)?;
            require_qubits(&s, &[3, 4])?;
            let label = if s.n() == 3 {
                canon::classify3_tol(&s, &tol)?
            } else {
                canon::classify4_tol(&s, &tol)?
            };
            Ok(line(label_json(&label, floor)))
        }
        Command::Invariants { input } => {
            only_json(opts)?;
            let s = read(input)?;
            require_qubits(&s, &[2, 3, 4])?;
            let rep = invariants::invariant_report(&s)?;
            let mut map = serde_json::Map::new();
            for (name, z) in &rep.entries {
                map.insert((*name).to_string(), json!([z.re, z.im]));
            }
            Ok(line(
                json!({"normalization": normalization_name(rep.normalization), "invariants": map}),
            ))
        }
        Command::Measures { input } => {
            only_json(opts)?;
            let s = read(input)?;
            require_qubits(&s, &[2, 3, 4])?;
            let s = s.normalized()?;
            let v = match s.n() {
                2 => {
                    let (svn, slin) = states::entropies(&s, &[0])?;
                    let i = invariants::invariants2(&s)?;
                    json!({"I": [i.re, i.im], "concurrence": concurrence(&s, (0, 1))?, "entropy": svn, "linear_entropy": slin})
                }
                3 => {
                    let mut ent = Vec::new();
                    for k in 0..3 {
                        ent.push(states::entropies(&s, &[k])?.1);
                    }
                    json!({
                        "tau3": three_tangle(&s)?,
                        "concurrence": {"12": concurrence(&s, (0, 1))?, "13": concurrence(&s, (0, 2))?, "23": concurrence(&s, (1, 2))?},
                        "linear_entropy": ent,
                    })
                }
                _ => {
                    let m = invariants::measures4(&s)?;
                    json!({"poly_su": m.poly_su, "nonunitarity": m.nonunitarity, "poly_sl": m.poly_sl, "sl_measure": m.sl_measure})
                }
            };
            Ok(line(v))
        }
        Command::Evolve {
            input,
            hamiltonian,
            time,
            dt,
            stride,
        } => {
            let s = read(input)?;
            let h = io::read_hamiltonian(hamiltonian)?;
            if !s.is_qubits() || s.n() != h.n() {
                return Err(nilcore::Error::Shape(
                    "state and Hamiltonian disagree on the qubit count".into(),
                )
                .into());
            }
            let f0 = states::nilpotential(&s)?;
            let traj = evolve_nilpotential(
                &f0,
                &h,
                *time,
                &IntegratorCfg {
                    dt: *dt,
                    checkpoint_stride: *stride,
                },
            )?;
            match opts.format {
                None | Some(Format::Csv) => Ok(io::trajectory_csv(&traj)?),
                Some(Format::Json) => {
                    let points: Vec<Value> = traj
                        .times
                        .iter()
                        .zip(&traj.values)
                        .map(|(t, f)| json!({"t": t, "beta": coeff_map(f, 0.0)}))
                        .collect();
                    Ok(line(Value::Array(points)))
                }
                Some(Format::Dot) => Err(Failure::Usage("evolve writes CSV or JSON".into())),
            }
        }
        Command::Merge { input, groups } => {
            only_json(opts)?;
            let s = read(input)?;
            let merged = states::merge(&s, &parse_groups(groups)?)?;
            Ok(line(io::state_json(&merged)))
        }
        Command::Graph { input } => {
            let s = read(input)?;
            if !s.is_qubits() {
                return Err(nilcore::Error::Unsupported("graph export needs qubits".into()).into());
            }
            let tm = canon::su_canonicalize_tol(&s, &tol)?;
            let g = invariants::graph_export(&tm.poly, floor)?;
            match opts.format {
                None | Some(Format::Dot) => Ok(g.to_dot()),
                Some(Format::Json) => Ok(line(json!({
                    "n": g.n,
                    "edges": g.edges.iter().map(|((i, j), w)| json!({"nodes": [i, j], "weight": w})).collect::<Vec<_>>(),
                    "hyperedges": g.hyperedges.iter().map(|(v, w)| json!({"nodes": v, "weight": w})).collect::<Vec<_>>(),
                }))),
                Some(Format::Csv) => Err(Failure::Usage("graph writes DOT or JSON".into())),
            }
        }
        Command::SampleFigpoly { n, seed } => {
            let rows = sample_figpoly(*n, *seed, opts.jobs)?;
            match opts.format {
                None | Some(Format::Csv) => Ok(io::figpoly_csv(&rows)?),
                Some(Format::Json) => Ok(line(
                    serde_json::to_value(&rows).expect("plain data serializes"),
                )),
                Some(Format::Dot) => {
                    Err(Failure::Usage("sample-figpoly writes CSV or JSON".into()))
                }
            }
        }
        Command::GhzFilter { input } => {
            only_json(opts)?;
            let s = read(input)?;
            require_qubits(&s, &[3])?;
            // The filter is defined on the su-canonical form.
            let tm = canon::su_canonicalize_tol(&s, &tol)?;
            let canonical = tm.state()?;
            let rep = invariants::zeta_filter(&canonical, tol.class)?;
            Ok(line(json!({
                "canonicalized": true,
                "zeta": complex_json(rep.zeta, 0.0),
                "roots": rep.roots.iter().map(|&z| complex_json(z, 0.0)).collect::<Vec<_>>(),
                "z_per_qubit": rep.z_per_qubit.iter().map(|&z| complex_json(z, 0.0)).collect::<Vec<_>>(),
                "scale": complex_json(rep.scale, 0.0),
                "ops": rep.ops.iter().map(|op| json!({"element": op.element, "matrix": matrix_json(&op.matrix)})).collect::<Vec<_>>(),
            })))
        }
        Command::Genfun { input, canonical } => {
            only_json(opts)?;
            let s = read(input)?;
            let alg = RestrictedAlgebra::spin1();
            if *canonical {
                let tm = qudit::spin1_canonicalize_tol(&s, &tol)?;
                let big_f = qudit::generating_function(&tm.state()?, &alg)?;
                Ok(line(json!({
                    "caps": tm.poly.caps(),
                    "F": coeff_map(&big_f, floor),
                    "f": coeff_map(&tm.poly, floor),
                    "vacuum_population": tm.vacuum_population(),
                    "transform": tm.transform.iter().map(|op| json!({"element": op.element, "matrix": matrix_json(&op.matrix)})).collect::<Vec<_>>(),
                })))
            } else {
                let big_f = qudit::generating_function(&s, &alg)?;
                Ok(line(
                    json!({"caps": big_f.caps(), "F": coeff_map(&big_f, floor)}),
                ))
            }
        }
    }
}
