//! Benchmark objectives with known optima.
//!
//! | kind         | `f(X)`                | `∇f(X)`         | optimum over St(p, n)              |
//! |--------------|-----------------------|-----------------|------------------------------------|
//! | `linear`     | `⟨A, X⟩`              | `A`             | `−‖A‖_*` at `−polar(A)`            |
//! | `procrustes` | `½‖A X − B‖²_F`       | `Aᵀ(A X − B)`   | closed form only for `A = I`       |
//! | `rayleigh`   | `½ tr(Xᵀ A X)`        | `A X`           | `½ Σ` of the `p` smallest eigvals  |
//! | `constant`   | `c`                   | `0`             | every point                        |
//!
//! Problem files are JSON objects `{"kind", "n", "p", "seed", ...}`; see
//! [`ProblemSpec`]. Missing matrices are drawn from the seed.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::Scheme;
use crate::landing::{validate_gradient, ConstantObjective, FieldKind, GradientCheck, Objective};
use crate::linalg::FullRankMatrix;
use crate::random::{gaussian_matrix, random_orthonormal, rng_from_seed, substream};

/// `⟨A, X⟩`.
#[derive(Debug, Clone)]
pub struct LinearObjective {
    pub a: DMatrix<f64>,
}

impl Objective for LinearObjective {
    fn name(&self) -> &str {
        "linear"
    }

    fn value(&self, x: &DMatrix<f64>) -> f64 {
        self.a.dot(x)
    }

    fn gradient(&self, _x: &DMatrix<f64>) -> DMatrix<f64> {
        self.a.clone()
    }
}

/// `½‖A X − B‖²_F`.
#[derive(Debug, Clone)]
pub struct ProcrustesObjective {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl Objective for ProcrustesObjective {
    fn name(&self) -> &str {
        "procrustes"
    }

    fn value(&self, x: &DMatrix<f64>) -> f64 {
        0.5 * (&self.a * x - &self.b).norm_squared()
    }

    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.a.transpose() * (&self.a * x - &self.b)
    }
}

/// `½ tr(Xᵀ A X)` for symmetric `A`.
#[derive(Debug, Clone)]
pub struct RayleighObjective {
    pub a: DMatrix<f64>,
}

impl Objective for RayleighObjective {
    fn name(&self) -> &str {
        "rayleigh"
    }

    fn value(&self, x: &DMatrix<f64>) -> f64 {
        0.5 * x.dot(&(&self.a * x))
    }

    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a * x
    }
}

/// Known optimum of a problem over St(p, n).
#[derive(Debug, Clone)]
pub struct Optimum {
    pub value: f64,
    /// One optimizer; unique only up to the symmetries noted in `description`.
    pub minimizer: Option<DMatrix<f64>>,
    pub description: String,
}

#[derive(Clone)]
pub struct ProblemInstance {
    objective: Arc<dyn Objective>,
    n: usize,
    p: usize,
    optimum: Option<Optimum>,
    seed: u64,
}

impl std::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("objective", &self.objective.name())
            .field("n", &self.n)
            .field("p", &self.p)
            .field("optimum", &self.optimum)
            .field("seed", &self.seed)
            .finish()
    }
}

impl ProblemInstance {
    pub fn objective(&self) -> &dyn Objective {
        self.objective.as_ref()
    }

    pub fn shared_objective(&self) -> Arc<dyn Objective> {
        Arc::clone(&self.objective)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn optimum(&self) -> Option<&Optimum> {
        self.optimum.as_ref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Central finite differences (`h = 1e-6`) at `probes` random points.
    pub fn check_gradient(&self, probes: usize) -> GradientCheck {
        let mut rng = substream(self.seed, 7);
        validate_gradient(self.objective(), self.n, self.p, probes, 1e-6, &mut rng)
    }
}

fn check_dims(n: usize, p: usize) -> Result<()> {
    if p == 0 || n < p {
        return Err(Error::Config(format!("need n >= p >= 1, got n={n}, p={p}")));
    }
    Ok(())
}

fn check_shape(m: &DMatrix<f64>, rows: usize, cols: usize, what: &str) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::dim(format!(
            "{what} must be {rows}x{cols}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Orthogonal polar factor `U Vᵀ` of a tall matrix and its nuclear norm.
pub fn polar_factor(b: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let svd = b.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested Vᵀ");
    (u * vt, svd.singular_values.sum())
}

/// `f(X) = ⟨A, X⟩`.
pub fn make_linear(n: usize, p: usize, a: DMatrix<f64>) -> Result<ProblemInstance> {
    check_dims(n, p)?;
    check_shape(&a, n, p, "A")?;
    if a.norm() == 0.0 {
        return Err(Error::Config("linear objective needs A ≠ 0".into()));
    }
    let (polar, nuclear) = polar_factor(&a);
    let full_rank = crate::linalg::singular_value_ratio(&a) > crate::linalg::RANK_RTOL;
    let optimum = Optimum {
        value: -nuclear,
        minimizer: full_rank.then(|| -polar),
        description: "minimizer −polar(A); −A/‖A‖ when p = 1".into(),
    };
    Ok(ProblemInstance {
        objective: Arc::new(LinearObjective { a }),
        n,
        p,
        optimum: Some(optimum),
        seed: 0,
    })
}

/// `f(X) = ½‖A X − B‖²_F` with `A: m×n`, `B: m×p`.
pub fn make_procrustes(n: usize, p: usize, a: DMatrix<f64>, b: DMatrix<f64>) -> Result<ProblemInstance> {
    check_dims(n, p)?;
    let m = a.nrows();
    check_shape(&a, m, n, "A")?;
    check_shape(&b, m, p, "B")?;
    let optimum = (m == n && a == DMatrix::identity(n, n)).then(|| {
        let (polar, nuclear) = polar_factor(&b);
        Optimum {
            value: 0.5 * (b.norm_squared() + p as f64) - nuclear,
            minimizer: Some(polar),
            description: "A = I: minimizer is the polar factor of B".into(),
        }
    });
    Ok(ProblemInstance {
        objective: Arc::new(ProcrustesObjective { a, b }),
        n,
        p,
        optimum,
        seed: 0,
    })
}

/// `f(X) = ½ tr(Xᵀ A X)` for symmetric `A: n×n`.
pub fn make_rayleigh(n: usize, p: usize, a: DMatrix<f64>) -> Result<ProblemInstance> {
    check_dims(n, p)?;
    check_shape(&a, n, n, "A")?;
    if (&a - a.transpose()).norm() > 1e-12 * a.norm() {
        return Err(Error::Config("Rayleigh objective needs symmetric A".into()));
    }
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let value = 0.5 * order[..p].iter().map(|&i| eig.eigenvalues[i]).sum::<f64>();
    let mut minimizer = DMatrix::zeros(n, p);
    for (col, &i) in order[..p].iter().enumerate() {
        minimizer.set_column(col, &eig.eigenvectors.column(i));
    }
    let optimum = Optimum {
        value,
        minimizer: Some(minimizer),
        description: "eigenvectors of the p smallest eigenvalues; unique up to X Q, Q ∈ O(p)".into(),
    };
    Ok(ProblemInstance {
        objective: Arc::new(RayleighObjective { a }),
        n,
        p,
        optimum: Some(optimum),
        seed: 0,
    })
}

/// `f ≡ value`; every point of St(p, n) is optimal.
pub fn make_constant(n: usize, p: usize, value: f64) -> Result<ProblemInstance> {
    check_dims(n, p)?;
    Ok(ProblemInstance {
        objective: Arc::new(ConstantObjective(value)),
        n,
        p,
        optimum: Some(Optimum {
            value,
            minimizer: None,
            description: "every point of St(p, n)".into(),
        }),
        seed: 0,
    })
}

/// Kind-specific part of a problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemKind {
    Linear {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<Vec<Vec<f64>>>,
    },
    Procrustes {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<Vec<f64>>>,
        /// Use `A = I` when `a` is absent.
        #[serde(default)]
        identity_a: bool,
    },
    Rayleigh {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<Vec<Vec<f64>>>,
        /// Spectrum of a randomly rotated `A` when `a` is absent (default `1..=n`).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eigenvalues: Option<Vec<f64>>,
    },
    Constant {
        #[serde(default)]
        value: f64,
    },
}

/// How the starting point is drawn when `x0` is absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    /// Gaussian entries scaled by `x0_scale` (default `1/√n`).
    #[default]
    Gaussian,
    /// Random point of St(p, n).
    Orthonormal,
}

/// Optional run settings stored alongside a problem; command-line flags override them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<Scheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tmax: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
}

/// A problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(flatten)]
    pub kind: ProblemKind,
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub seed: u64,
    /// Explicit starting point, one inner array per row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_scale: Option<f64>,
    #[serde(default)]
    pub start: StartKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSettings>,
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config(format!("{what} must be a non-empty rectangular array of rows")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(nrows, ncols, &flat))
}

/// Names accepted by [`ProblemSpec::builtin`].
pub const BUILTIN_PROBLEMS: [&str; 4] = ["linear21", "procrustes", "rayleigh", "constant"];

/// Cost vector of the built-in St(1, 2) linear problem; the optimizer is `−A`.
pub const LINEAR21_A: [f64; 2] = [0.6, 0.8];

impl ProblemSpec {
    pub fn builtin(name: &str) -> Option<Self> {
        let spec = match name {
            "linear21" => ProblemSpec {
                kind: ProblemKind::Linear {
                    a: Some(vec![vec![LINEAR21_A[0]], vec![LINEAR21_A[1]]]),
                },
                n: 2,
                p: 1,
                seed: 0,
                x0: Some(vec![vec![1.5], vec![-0.5]]),
                x0_scale: None,
                start: StartKind::Gaussian,
                run: None,
            },
            "procrustes" => ProblemSpec {
                kind: ProblemKind::Procrustes {
                    m: None,
                    a: None,
                    b: None,
                    identity_a: true,
                },
                n: 10,
                p: 3,
                seed: 0,
                x0: None,
                x0_scale: None,
                start: StartKind::Gaussian,
                run: None,
            },
            "rayleigh" => ProblemSpec {
                kind: ProblemKind::Rayleigh {
                    a: None,
                    eigenvalues: None,
                },
                n: 20,
                p: 3,
                seed: 0,
                x0: None,
                x0_scale: None,
                start: StartKind::Gaussian,
                run: None,
            },
            "constant" => ProblemSpec {
                kind: ProblemKind::Constant { value: 1.0 },
                n: 5,
                p: 2,
                seed: 0,
                x0: None,
                x0_scale: None,
                start: StartKind::Orthonormal,
                run: None,
            },
            _ => return None,
        };
        Some(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// A builtin name or a path to a JSON problem file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if let Some(spec) = Self::builtin(name_or_path) {
            return Ok(spec);
        }
        let path = Path::new(name_or_path);
        if path.exists() {
            Self::from_file(path)
        } else {
            Err(Error::Config(format!(
                "'{name_or_path}' is neither a builtin problem ({}) nor a file",
                BUILTIN_PROBLEMS.join(", ")
            )))
        }
    }

    pub fn build(&self) -> Result<ProblemInstance> {
        let (n, p) = (self.n, self.p);
        check_dims(n, p)?;
        let mut rng = substream(self.seed, 0);
        let instance = match &self.kind {
            ProblemKind::Linear { a } => {
                let a = match a {
                    Some(rows) => rows_to_matrix(rows, "a")?,
                    None => gaussian_matrix(&mut rng, n, p),
                };
                make_linear(n, p, a)?
            }
            ProblemKind::Procrustes { m, a, b, identity_a } => {
                let m = m.unwrap_or(n);
                let a = match a {
                    Some(rows) => rows_to_matrix(rows, "a")?,
                    None if *identity_a => DMatrix::identity(n, n),
                    None => gaussian_matrix(&mut rng, m, n),
                };
                let b = match b {
                    Some(rows) => rows_to_matrix(rows, "b")?,
                    None => gaussian_matrix(&mut rng, a.nrows(), p),
                };
                make_procrustes(n, p, a, b)?
            }
            ProblemKind::Rayleigh { a, eigenvalues } => {
                let a = match (a, eigenvalues) {
                    (Some(rows), _) => rows_to_matrix(rows, "a")?,
                    (None, spectrum) => {
                        let spectrum = match spectrum {
                            Some(s) if s.len() == n => s.clone(),
                            Some(s) => {
                                return Err(Error::Config(format!(
                                    "expected {n} eigenvalues, got {}",
                                    s.len()
                                )))
                            }
                            None => (1..=n).map(|i| i as f64).collect(),
                        };
                        let q = random_orthonormal(&mut rng, n, n);
                        let d = DMatrix::from_diagonal(&DVector::from_vec(spectrum));
                        let a = &q * d * q.transpose();
                        (&a + a.transpose()) * 0.5
                    }
                };
                make_rayleigh(n, p, a)?
            }
            ProblemKind::Constant { value } => make_constant(n, p, *value)?,
        };
        Ok(instance.with_seed(self.seed))
    }

    /// Starting point: `x0` if given, otherwise drawn from the seed.
    pub fn initial_point(&self) -> Result<FullRankMatrix> {
        if let Some(rows) = &self.x0 {
            let x0 = rows_to_matrix(rows, "x0")?;
            check_shape(&x0, self.n, self.p, "x0")?;
            return FullRankMatrix::new(x0);
        }
        let mut rng = substream(self.seed, 1);
        let x0 = match self.start {
            StartKind::Gaussian => {
                let scale = self.x0_scale.unwrap_or(1.0 / (self.n as f64).sqrt());
                gaussian_matrix(&mut rng, self.n, self.p) * scale
            }
            StartKind::Orthonormal => random_orthonormal(&mut rng, self.n, self.p),
        };
        FullRankMatrix::new(x0)
    }
}

/// Symmetric `n×n` matrix `Q diag(spectrum) Qᵀ` with a seeded random rotation.
pub fn rotated_spectrum(seed: u64, spectrum: &[f64]) -> DMatrix<f64> {
    let n = spectrum.len();
    let mut rng = rng_from_seed(seed);
    let q = random_orthonormal(&mut rng, n, n);
    let a = &q * DMatrix::from_diagonal(&DVector::from_column_slice(spectrum)) * q.transpose();
    (&a + a.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_on_the_circle() {
        let prob = make_linear(2, 1, DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let opt = prob.optimum().unwrap();
        assert_relative_eq!(opt.value, -1.0, epsilon = 1e-15);
        assert_relative_eq!(
            opt.minimizer.as_ref().unwrap(),
            &DMatrix::from_column_slice(2, 1, &[-1.0, 0.0]),
            epsilon = 1e-15
        );
        let x = DMatrix::from_column_slice(2, 1, &[0.3, 0.7]);
        assert_eq!(prob.objective().gradient(&x), DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
        assert!(make_linear(2, 1, DMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn procrustes_with_orthonormal_target() {
        let mut rng = rng_from_seed(4);
        let b = random_orthonormal(&mut rng, 6, 2);
        let prob = make_procrustes(6, 2, DMatrix::identity(6, 6), b.clone()).unwrap();
        let opt = prob.optimum().unwrap();
        assert!(opt.value.abs() < 1e-12);
        assert_relative_eq!(opt.minimizer.as_ref().unwrap(), &b, epsilon = 1e-12);
        assert!(prob.objective().value(&b).abs() < 1e-28);
    }

    #[test]
    fn rayleigh_identity_and_diagonal() {
        let prob = make_rayleigh(4, 2, DMatrix::identity(4, 4)).unwrap();
        let q = random_orthonormal(&mut rng_from_seed(2), 4, 2);
        assert_relative_eq!(prob.objective().value(&q), 1.0, epsilon = 1e-14);
        assert_relative_eq!(prob.optimum().unwrap().value, 1.0, epsilon = 1e-14);

        let diag = DMatrix::from_diagonal(&DVector::from_fn(5, |i, _| (i + 1) as f64));
        let prob = make_rayleigh(5, 2, diag).unwrap();
        assert_relative_eq!(prob.optimum().unwrap().value, 1.5, epsilon = 1e-14);
    }

    #[test]
    fn spec_json_round_trip_and_builtins() {
        let text = r#"{"kind":"rayleigh","n":6,"p":2,"seed":9,"eigenvalues":[1,2,3,4,5,6],
                       "run":{"lambda":2.0,"field":"plam"}}"#;
        let spec = ProblemSpec::from_json(text).unwrap();
        assert_eq!(spec.run.as_ref().unwrap().lambda, Some(2.0));
        let again = ProblemSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(again, spec);
        let prob = spec.build().unwrap();
        assert_relative_eq!(prob.optimum().unwrap().value, 1.5, epsilon = 1e-12);

        for name in BUILTIN_PROBLEMS {
            let spec = ProblemSpec::builtin(name).unwrap();
            let prob = spec.build().unwrap();
            spec.initial_point().unwrap();
            assert!(prob.check_gradient(3).passes(1e-5), "{name}");
        }
        assert!(ProblemSpec::resolve("no-such-problem").is_err());
    }

    #[test]
    fn bad_shapes_are_config_errors() {
        let text = r#"{"kind":"linear","n":3,"p":1,"a":[[1.0],[2.0]]}"#;
        assert!(ProblemSpec::from_json(text).unwrap().build().is_err());
        let text = r#"{"kind":"linear","n":1,"p":2}"#;
        assert!(ProblemSpec::from_json(text).unwrap().build().is_err());
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let spec = ProblemSpec::builtin("rayleigh").unwrap();
        let a = spec.initial_point().unwrap();
        let b = spec.initial_point().unwrap();
        assert_eq!(a, b);
    }
}
