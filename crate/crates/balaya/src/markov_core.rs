//! Finite discrete balayage spaces.
//!
//! A sub-Markov kernel `P` on a finite state space carries the whole
//! structure: the Poisson transition semigroup `P_t = e^{-t} Σ tᵏ/k! Pᵏ`, the
//! potential kernel `K = Σ Pᵏ` of a transient chain, the supermedian cone
//! `{u ≥ 0 : Pu ≤ u}`, and the balayage-space criterion (existence of s₀ ≥ 0
//! with `P s₀ < s₀`, equivalent to transience on finite spaces).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tol;

/// A finite state space with optional distinct labels.
#[derive(Debug, Clone)]
pub struct StateSpace {
    n: usize,
    labels: Option<Vec<String>>,
}

impl StateSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("state space needs n >= 1".into()));
        }
        Ok(StateSpace { n, labels: None })
    }

    pub fn with_labels(n: usize, labels: Vec<String>) -> Result<Self> {
        let mut sp = Self::new(n)?;
        if labels.len() != n {
            return Err(Error::InvalidInput(format!(
                "expected {n} labels, got {}",
                labels.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(Error::InvalidInput(format!("duplicate label `{l}`")));
            }
        }
        sp.labels = Some(labels);
        Ok(sp)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
}

/// Sub-Markov transition kernel: a nonnegative n×n array whose row `x` is the
/// measure `P(x, ·)`, with row sums at most 1 (mass deficit = killing).
///
/// Inputs violating the row-sum slack are rejected rather than renormalized,
/// so the provenance of instances stays exact.
#[derive(Debug, Clone)]
pub struct SubMarkovKernel {
    p: DMatrix<f64>,
}

impl SubMarkovKernel {
    pub fn new(p: DMatrix<f64>) -> Result<Self> {
        if p.nrows() != p.ncols() || p.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "kernel must be square and non-empty, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        for x in 0..p.nrows() {
            let mut row_sum = 0.0;
            for y in 0..p.ncols() {
                let v = p[(x, y)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "P[{x}][{y}] = {v} is negative or non-finite"
                    )));
                }
                row_sum += v;
            }
            if row_sum > 1.0 + tol::ROW_SUM_SLACK {
                return Err(Error::InvalidInput(format!(
                    "row {x} sums to {row_sum} > 1 + {:e}",
                    tol::ROW_SUM_SLACK
                )));
            }
        }
        Ok(SubMarkovKernel { p })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("rows must form a square array".into()));
        }
        let p = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(p)
    }

    /// The zero kernel (instant killing) on n states.
    pub fn zero(n: usize) -> Self {
        SubMarkovKernel {
            p: DMatrix::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.p[(x, y)]
    }

    /// `(Pf)(x) = Σ_y P(x,y) f(y)`.
    pub fn apply(&self, f: &DVector<f64>) -> DVector<f64> {
        &self.p * f
    }

    pub fn row_sum(&self, x: usize) -> f64 {
        self.p.row(x).sum()
    }
}

/// A real function on the state space, with an optional nonnegativity tag.
///
/// Nonnegative-tagged functions clamp entries in [-1e-14, 0) to 0 and reject
/// anything more negative.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFunction {
    values: DVector<f64>,
    nonnegative: bool,
}

impl StateFunction {
    /// A function with unconstrained sign. Entries must be finite.
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite function entry".into()));
        }
        Ok(StateFunction {
            values,
            nonnegative: false,
        })
    }

    /// A nonnegative-tagged function; tiny negative noise is clamped to 0.
    pub fn nonnegative(mut values: DVector<f64>) -> Result<Self> {
        for v in values.iter_mut() {
            if !v.is_finite() {
                return Err(Error::InvalidInput("non-finite function entry".into()));
            }
            if *v < 0.0 {
                if *v < -1e-14 {
                    return Err(Error::InvalidInput(format!(
                        "entry {v} below the nonnegativity clamp -1e-14"
                    )));
                }
                *v = 0.0;
            }
        }
        Ok(StateFunction {
            values,
            nonnegative: true,
        })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(values))
    }

    pub fn nonnegative_from_slice(values: &[f64]) -> Result<Self> {
        Self::nonnegative(DVector::from_column_slice(values))
    }

    pub fn constant(n: usize, c: f64) -> Self {
        StateFunction {
            values: DVector::from_element(n, c),
            nonnegative: c >= 0.0,
        }
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }

    pub fn is_nonnegative_tagged(&self) -> bool {
        self.nonnegative
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Evaluation context for the Poisson transition semigroup
/// `P_t = e^{-t} Σ_{k≥0} tᵏ/k! · Pᵏ`.
#[derive(Debug, Clone)]
pub struct PoissonSemigroupEval {
    kernel: SubMarkovKernel,
    series_tolerance: f64,
}

impl PoissonSemigroupEval {
    pub fn new(kernel: SubMarkovKernel) -> Self {
        PoissonSemigroupEval {
            kernel,
            series_tolerance: tol::SERIES_TOL,
        }
    }

    pub fn with_tolerance(kernel: SubMarkovKernel, series_tolerance: f64) -> Result<Self> {
        if !(series_tolerance > 0.0) {
            return Err(Error::InvalidInput(
                "series tolerance must be > 0".into(),
            ));
        }
        Ok(PoissonSemigroupEval {
            kernel,
            series_tolerance,
        })
    }

    pub fn kernel(&self) -> &SubMarkovKernel {
        &self.kernel
    }

    /// Default series cap: `10 (t+1) n + 200` terms.
    fn max_terms(&self, t: f64) -> usize {
        (10.0 * (t + 1.0) * self.kernel.n() as f64) as usize + 200
    }
}

/// Applies `P_t` to `f`.
///
/// The series is truncated once the remaining coefficient mass
/// `1 - e^{-t} Σ_{k≤K} tᵏ/k!` times `max|Pᴷf|` falls below the series
/// tolerance; substochasticity makes `‖Pᵏf‖_∞` nonincreasing in k, so that
/// is an exact tail bound. `t = 0` returns `f` unchanged.
pub fn poisson_apply(
    sg: &PoissonSemigroupEval,
    t: f64,
    f: &StateFunction,
) -> Result<StateFunction> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("t = {t} must be >= 0")));
    }
    if f.len() != sg.kernel.n() {
        return Err(Error::InvalidInput(format!(
            "function length {} does not match state count {}",
            f.len(),
            sg.kernel.n()
        )));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    if f.sup_norm() == 0.0 {
        return StateFunction::new(DVector::zeros(f.len()));
    }
    let mut coeff = (-t).exp(); // e^{-t} t^k / k!, starting at k = 0
    let mut mass_left = 1.0 - coeff;
    let mut term = f.values().clone(); // Pᵏ f
    let mut acc = &term * coeff;
    let cap = sg.max_terms(t);
    for k in 1..=cap {
        if mass_left.max(0.0) * term.amax() < sg.series_tolerance {
            return StateFunction::new(acc);
        }
        term = sg.kernel.apply(&term);
        coeff *= t / k as f64;
        mass_left -= coeff;
        acc += &term * coeff;
    }
    if mass_left.max(0.0) * term.amax() < sg.series_tolerance {
        return StateFunction::new(acc);
    }
    Err(Error::NumericalFailure(format!(
        "Poisson series not converged after {cap} terms (t = {t}, tail mass {mass_left:.3e})"
    )))
}

/// The matrix of `P_t` (columns are `P_t e_j`); used by semigroup checks.
pub fn poisson_matrix(sg: &PoissonSemigroupEval, t: f64) -> Result<DMatrix<f64>> {
    let n = sg.kernel.n();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        let col = poisson_apply(sg, t, &StateFunction::new(e)?)?;
        out.set_column(j, col.values());
    }
    Ok(out)
}

/// Power-iteration estimate of the spectral radius of a nonnegative matrix.
///
/// Uses the Gelfand quotient `‖Pᵏ·1‖_∞^{1/k}` with periodic renormalization;
/// exact early exits when the iterate collapses to zero (ρ < 1 certificate
/// via `ρ ≤ ‖Pᵏ‖_∞^{1/k}`).
pub fn spectral_radius_estimate(kernel: &SubMarkovKernel) -> f64 {
    let n = kernel.n();
    let mut v = DVector::from_element(n, 1.0);
    let mut log_scale = 0.0f64;
    let mut estimate = kernel
        .matrix()
        .row_iter()
        .map(|r| r.sum())
        .fold(0.0f64, f64::max);
    for k in 1..=tol::SPECTRAL_MAX_ITER {
        v = kernel.apply(&v);
        let norm = v.amax();
        if norm == 0.0 {
            return 0.0;
        }
        log_scale += norm.ln();
        v /= norm;
        let gelfand = (log_scale / k as f64).exp();
        if k >= 32 && (gelfand - estimate).abs() < 1e-12 {
            return gelfand;
        }
        estimate = gelfand;
        // certified transient well below iteration budget
        if k >= 64 && gelfand < 0.999 {
            return gelfand;
        }
    }
    estimate
}

/// The potential kernel `K = Σ_{k≥0} Pᵏ` of a transient chain, obtained as
/// the solution of `(I - P) K = I`.
pub fn potential_kernel(kernel: &SubMarkovKernel) -> Result<DMatrix<f64>> {
    let rho = spectral_radius_estimate(kernel);
    if rho >= 1.0 - tol::SPECTRAL_TOL {
        return Err(Error::NotTransient { rho });
    }
    let n = kernel.n();
    let a = DMatrix::identity(n, n) - kernel.matrix();
    let lu = a.lu();
    let k = lu
        .solve(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::NumericalFailure("(I - P) is numerically singular".into()))?;
    Ok(k)
}

/// True iff `(Pu)(x) <= u(x) + 1e-12` for every state.
pub fn is_supermedian(kernel: &SubMarkovKernel, u: &StateFunction) -> Result<bool> {
    if u.len() != kernel.n() {
        return Err(Error::InvalidInput("length mismatch".into()));
    }
    if u.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput(
            "supermedian test needs u >= 0".into(),
        ));
    }
    let pu = kernel.apply(u.values());
    Ok(pu
        .iter()
        .zip(u.values().iter())
        .all(|(p, v)| *p <= v + tol::SUPERMEDIAN_SLACK))
}

/// Outcome of the balayage-space criterion.
#[derive(Debug, Clone)]
pub enum BalayageVerdict {
    /// Transient: `s₀ = K·1` satisfies `P s₀ = s₀ - 1 < s₀` strictly.
    Yes { witness: StateFunction },
    /// Not transient; no s₀ ≥ 0 with `P s₀ < s₀` everywhere exists.
    No { rho: f64 },
}

impl BalayageVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, BalayageVerdict::Yes { .. })
    }
}

/// Decides whether `(X, S_P)` is a balayage space.
///
/// On finite spaces this is exactly transience, ρ(P) < 1; the returned
/// witness is `s₀ = K·1`.
pub fn is_balayage_space(kernel: &SubMarkovKernel) -> BalayageVerdict {
    match potential_kernel(kernel) {
        Ok(k) => {
            let ones = DVector::from_element(kernel.n(), 1.0);
            let witness = StateFunction::nonnegative(&k * ones)
                .expect("K·1 is nonnegative for a transient kernel");
            BalayageVerdict::Yes { witness }
        }
        Err(Error::NotTransient { rho }) => BalayageVerdict::No { rho },
        Err(_) => BalayageVerdict::No { rho: f64::NAN },
    }
}
