//! Harmonic kernels, reduced functions, killed-chain Green functions,
//! Hunt's formula and the domination principle on finite balayage spaces.
//!
//! In the discrete topology every subset is open (and finely open), so no
//! regularization step is ever needed: reduced functions equal their
//! lower-semicontinuous versions.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::markov_core::{
    is_supermedian, potential_kernel, spectral_radius_estimate, StateFunction, SubMarkovKernel,
};
use crate::tol;

/// A subset of the state space, as a boolean membership array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetMask {
    members: Vec<bool>,
}

impl SubsetMask {
    pub fn new(members: Vec<bool>) -> Self {
        SubsetMask { members }
    }

    pub fn empty(n: usize) -> Self {
        SubsetMask {
            members: vec![false; n],
        }
    }

    pub fn full(n: usize) -> Self {
        SubsetMask {
            members: vec![true; n],
        }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut members = vec![false; n];
        for &i in indices {
            if i >= n {
                return Err(Error::InvalidInput(format!(
                    "index {i} out of range for {n} states"
                )));
            }
            members[i] = true;
        }
        Ok(SubsetMask { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members[x]
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.members.len()).filter(|&i| self.members[i]).collect()
    }

    pub fn complement(&self) -> SubsetMask {
        SubsetMask {
            members: self.members.iter().map(|b| !b).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &SubsetMask) -> bool {
        self.members
            .iter()
            .zip(&other.members)
            .all(|(a, b)| !a || *b)
    }

    pub fn union(&self, other: &SubsetMask) -> SubsetMask {
        SubsetMask {
            members: self
                .members
                .iter()
                .zip(&other.members)
                .map(|(a, b)| *a || *b)
                .collect(),
        }
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }
}

/// Exit-distribution kernel of an open set V: for x outside V the unit mass
/// at x, for x in V the distribution of the chain at its first exit from V
/// (mass deficit = death before exit).
#[derive(Debug, Clone)]
pub struct HarmonicKernel {
    h: DMatrix<f64>,
    domain: SubsetMask,
}

impl HarmonicKernel {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn domain(&self) -> &SubsetMask {
        &self.domain
    }

    pub fn apply(&self, f: &DVector<f64>) -> DVector<f64> {
        &self.h * f
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.h[(x, y)]
    }
}

/// The killed kernel `P_V`: transitions of P with rows and columns off V
/// zeroed (leaving V, or starting outside it, kills the chain).
pub fn killed_kernel(kernel: &SubMarkovKernel, v: &SubsetMask) -> Result<SubMarkovKernel> {
    let n = kernel.n();
    if v.len() != n {
        return Err(Error::InvalidInput("mask length mismatch".into()));
    }
    let m = DMatrix::from_fn(n, n, |x, y| {
        if v.contains(x) && v.contains(y) {
            kernel.entry(x, y)
        } else {
            0.0
        }
    });
    SubMarkovKernel::new(m)
}

fn killed_submatrix(kernel: &SubMarkovKernel, v_idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(v_idx.len(), v_idx.len(), |i, j| {
        kernel.entry(v_idx[i], v_idx[j])
    })
}

fn check_killed_transient(kernel: &SubMarkovKernel, v: &SubsetMask) -> Result<()> {
    let killed = killed_kernel(kernel, v)?;
    let rho = spectral_radius_estimate(&killed);
    if rho >= 1.0 - tol::SPECTRAL_TOL {
        return Err(Error::NotSolvable(format!(
            "killed kernel on V has spectral radius estimate {rho:.12}"
        )));
    }
    Ok(())
}

/// Harmonic kernel `H_V` by direct dense solve of the exit system
/// `(I - P_VV) H = P_{V,Vᶜ}` on V.
///
/// Singleton sets use the one-point formula
/// `H(x, A) = P(x, A∖{x}) / (1 - P(x,{x}))`, with the zero row when
/// `P(x,{x}) = 1` (the chain never exits).
pub fn harmonic_kernel(kernel: &SubMarkovKernel, v: &SubsetMask) -> Result<HarmonicKernel> {
    let n = kernel.n();
    if v.len() != n {
        return Err(Error::InvalidInput("mask length mismatch".into()));
    }
    let v_idx = v.indices();
    let mut h = DMatrix::zeros(n, n);
    for x in 0..n {
        if !v.contains(x) {
            h[(x, x)] = 1.0;
        }
    }
    if v_idx.is_empty() {
        return Ok(HarmonicKernel {
            h,
            domain: v.clone(),
        });
    }
    if v_idx.len() == 1 {
        let x = v_idx[0];
        let pxx = kernel.entry(x, x);
        if pxx < 1.0 {
            for y in 0..n {
                if y != x {
                    h[(x, y)] = kernel.entry(x, y) / (1.0 - pxx);
                }
            }
        }
        return Ok(HarmonicKernel {
            h,
            domain: v.clone(),
        });
    }
    check_killed_transient(kernel, v)?;
    let w_idx: Vec<usize> = (0..n).filter(|&x| !v.contains(x)).collect();
    let pvv = killed_submatrix(kernel, &v_idx);
    let a = DMatrix::identity(v_idx.len(), v_idx.len()) - pvv;
    let rhs = DMatrix::from_fn(v_idx.len(), w_idx.len(), |i, j| {
        kernel.entry(v_idx[i], w_idx[j])
    });
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NotSolvable("exit system singular".into()))?;
    for (i, &x) in v_idx.iter().enumerate() {
        for (j, &y) in w_idx.iter().enumerate() {
            h[(x, y)] = sol[(i, j)];
        }
    }
    // exit distributions are sub-probabilities
    for x in 0..n {
        let s = h.row(x).sum();
        if s > 1.0 + tol::ROW_SUM_SLACK || h.row(x).iter().any(|&e| e < -tol::ROW_SUM_SLACK) {
            return Err(Error::NumericalFailure(format!(
                "exit row {x} not substochastic (sum {s})"
            )));
        }
    }
    Ok(HarmonicKernel {
        h,
        domain: v.clone(),
    })
}

/// Smallest supermedian majorant of `u` on `A` (the réduite `R_u^A`),
/// computed by the increasing sweep `w ← max(1_A u, Pw)` from `w = 1_A u`.
pub fn reduced_function(
    kernel: &SubMarkovKernel,
    u: &StateFunction,
    a: &SubsetMask,
) -> Result<StateFunction> {
    let n = kernel.n();
    if u.len() != n || a.len() != n {
        return Err(Error::InvalidInput("length mismatch".into()));
    }
    if u.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput("reduction needs u >= 0".into()));
    }
    let obstacle = DVector::from_fn(n, |i, _| if a.contains(i) { u.values()[i] } else { 0.0 });
    let mut w = obstacle.clone();
    for _ in 0..tol::SWEEP_MAX {
        let pw = kernel.apply(&w);
        let mut change = 0.0f64;
        for i in 0..n {
            let next = obstacle[i].max(pw[i]);
            change = change.max(next - w[i]);
            w[i] = next;
        }
        if change < tol::SWEEP_TOL {
            return StateFunction::nonnegative(w);
        }
    }
    Err(Error::NumericalFailure(format!(
        "reduction sweep did not settle within {} iterations",
        tol::SWEEP_MAX
    )))
}

/// Green function of the chain killed outside V: `G_V = Σ (P_VV)ᵏ`,
/// embedded into n×n with zero rows and columns off V.
pub fn killed_green(kernel: &SubMarkovKernel, v: &SubsetMask) -> Result<DMatrix<f64>> {
    let n = kernel.n();
    if v.len() != n {
        return Err(Error::InvalidInput("mask length mismatch".into()));
    }
    let v_idx = v.indices();
    let mut g = DMatrix::zeros(n, n);
    if v_idx.is_empty() {
        return Ok(g);
    }
    check_killed_transient(kernel, v)?;
    let pvv = killed_submatrix(kernel, &v_idx);
    let a = DMatrix::identity(v_idx.len(), v_idx.len()) - pvv;
    let gv = a
        .lu()
        .solve(&DMatrix::identity(v_idx.len(), v_idx.len()))
        .ok_or_else(|| Error::NotSolvable("killed resolvent singular".into()))?;
    for (i, &x) in v_idx.iter().enumerate() {
        for (j, &y) in v_idx.iter().enumerate() {
            g[(x, y)] = gv[(i, j)];
        }
    }
    Ok(g)
}

/// Max-abs residual of Hunt's formula `G_V = K - H_V K` over V×V.
pub fn hunt_formula_check(kernel: &SubMarkovKernel, v: &SubsetMask) -> Result<f64> {
    let k = potential_kernel(kernel)?;
    let h = harmonic_kernel(kernel, v)?;
    let gv = killed_green(kernel, v)?;
    let rhs = &k - h.matrix() * &k;
    let mut resid = 0.0f64;
    for x in v.indices() {
        for y in v.indices() {
            resid = resid.max((gv[(x, y)] - rhs[(x, y)]).abs());
        }
    }
    Ok(resid)
}

/// A potential kernel `K` paired with a density ν, acting as
/// `f ↦ K(f ⊙ ν)`; the represented potential is `p = Kν` and the support of
/// ν plays the role of the carrier of p.
#[derive(Debug, Clone)]
pub struct WeightedPotentialKernel {
    k: DMatrix<f64>,
    density: DVector<f64>,
    chain: Option<SubMarkovKernel>,
}

impl WeightedPotentialKernel {
    pub fn new(k: DMatrix<f64>, density: DVector<f64>) -> Result<Self> {
        if k.nrows() != k.ncols() || k.nrows() != density.len() {
            return Err(Error::InvalidInput("dimension mismatch".into()));
        }
        if k.iter().any(|v| !v.is_finite()) || density.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(
                "kernel entries must be finite, density finite and nonnegative".into(),
            ));
        }
        Ok(WeightedPotentialKernel {
            k,
            density,
            chain: None,
        })
    }

    /// `K = Σ Pᵏ` with unit density; carries the chain for cone checks.
    pub fn from_chain(kernel: &SubMarkovKernel) -> Result<Self> {
        let k = potential_kernel(kernel)?;
        let n = kernel.n();
        Ok(WeightedPotentialKernel {
            k,
            density: DVector::from_element(n, 1.0),
            chain: Some(kernel.clone()),
        })
    }

    /// Killed Green operator of V with density ν supported in V; carries the
    /// killed chain.
    pub fn from_killed_chain(
        kernel: &SubMarkovKernel,
        v: &SubsetMask,
        density: DVector<f64>,
    ) -> Result<Self> {
        if density.len() != kernel.n() {
            return Err(Error::InvalidInput("density length mismatch".into()));
        }
        for (i, d) in density.iter().enumerate() {
            if *d < 0.0 || !d.is_finite() {
                return Err(Error::InvalidInput("density must be >= 0 and finite".into()));
            }
            if *d > 0.0 && !v.contains(i) {
                return Err(Error::InvalidInput(format!(
                    "density charges state {i} outside V"
                )));
            }
        }
        let k = killed_green(kernel, v)?;
        let killed = killed_kernel(kernel, v)?;
        Ok(WeightedPotentialKernel {
            k,
            density,
            chain: Some(killed),
        })
    }

    pub fn n(&self) -> usize {
        self.density.len()
    }

    pub fn kernel_matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn density(&self) -> &DVector<f64> {
        &self.density
    }

    pub fn chain(&self) -> Option<&SubMarkovKernel> {
        self.chain.as_ref()
    }

    /// `K_p f = K (f ⊙ ν)`.
    pub fn apply(&self, f: &DVector<f64>) -> DVector<f64> {
        let weighted = DVector::from_fn(f.len(), |i, _| f[i] * self.density[i]);
        &self.k * weighted
    }

    /// The represented potential `p = Kν`.
    pub fn potential(&self) -> DVector<f64> {
        &self.k * &self.density
    }

    /// Support of ν, standing in for the carrier C(p).
    pub fn carrier_mask(&self) -> SubsetMask {
        SubsetMask::new(self.density.iter().map(|&d| d > 0.0).collect())
    }
}

/// Outcome of a domination-principle check.
#[derive(Debug, Clone, Copy)]
pub struct DominationReport {
    /// Whether `K_p f <= K_p g + w` held on `{f > 0}` (with 1e-12 slack).
    pub hypothesis_held: bool,
    /// Whether the inequality then held everywhere (tolerance 1e-10);
    /// true vacuously when the hypothesis fails.
    pub implication_confirmed: bool,
    /// `max_x (K_p f - K_p g - w)(x)` over all states.
    pub max_excess: f64,
}

/// Checks the domination principle: if `K_p f <= K_p g + w` on `{f > 0}` for
/// supermedian `w`, the inequality propagates to every state.
pub fn domination_check(
    kp: &WeightedPotentialKernel,
    f: &StateFunction,
    g: &StateFunction,
    w: &StateFunction,
) -> Result<DominationReport> {
    let n = kp.n();
    if f.len() != n || g.len() != n || w.len() != n {
        return Err(Error::InvalidInput("length mismatch".into()));
    }
    if f.values().iter().any(|&v| v < 0.0) || g.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput("domination check needs f, g >= 0".into()));
    }
    let chain = kp
        .chain()
        .ok_or_else(|| Error::InvalidInput("kernel carries no chain for the cone check".into()))?;
    if !is_supermedian(chain, w)? {
        return Err(Error::InvalidInput("w is not supermedian".into()));
    }
    let kf = kp.apply(f.values());
    let kg = kp.apply(g.values());
    let mut hypothesis_held = true;
    let mut max_excess = f64::NEG_INFINITY;
    for x in 0..n {
        let excess = kf[x] - kg[x] - w.values()[x];
        max_excess = max_excess.max(excess);
        if f.values()[x] > 0.0 && excess > tol::DOMINATION_HYP_SLACK {
            hypothesis_held = false;
        }
    }
    let implication_confirmed = !hypothesis_held || max_excess <= tol::DOMINATION_TOL;
    Ok(DominationReport {
        hypothesis_held,
        implication_confirmed,
        max_excess,
    })
}

/// Empirical exit distribution from Monte Carlo path sampling.
#[derive(Debug, Clone)]
pub struct ExitEstimate {
    /// Frequencies over the n states followed by the death bucket
    /// (index n); normalized over completed paths.
    pub freq: Vec<f64>,
    /// Paths that finished (exited or died) within the step cap.
    pub completed: u64,
    /// Paths cut off at the 10⁶-step cap (possible only near ρ = 1).
    pub cap_hits: u64,
}

const MC_STEP_CAP: usize = 1_000_000;
const MC_BLOCK: u64 = 8192;

/// Samples exit locations from V starting at x; the seed is split
/// deterministically per path block (one ChaCha stream per block).
pub fn mc_exit_estimate(
    kernel: &SubMarkovKernel,
    v: &SubsetMask,
    x: usize,
    paths: u64,
    seed: u64,
) -> Result<ExitEstimate> {
    let n = kernel.n();
    if v.len() != n || x >= n {
        return Err(Error::InvalidInput("bad mask or start state".into()));
    }
    if paths == 0 {
        return Err(Error::InvalidInput("paths must be >= 1".into()));
    }
    let mut counts = vec![0u64; n + 1];
    let mut cap_hits = 0u64;
    let mut done = 0u64;
    let mut block = 0u64;
    while done < paths {
        let in_block = MC_BLOCK.min(paths - done);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        for _ in 0..in_block {
            match walk_to_exit(kernel, v, x, &mut rng) {
                Some(hit) => counts[hit] += 1,
                None => cap_hits += 1,
            }
        }
        done += in_block;
        block += 1;
    }
    let completed = paths - cap_hits;
    let denom = completed.max(1) as f64;
    Ok(ExitEstimate {
        freq: counts.iter().map(|&c| c as f64 / denom).collect(),
        completed,
        cap_hits,
    })
}

/// One path; `Some(state)` for an exit at `state`, `Some(n)` for death,
/// `None` when the step cap is hit.
fn walk_to_exit(
    kernel: &SubMarkovKernel,
    v: &SubsetMask,
    start: usize,
    rng: &mut ChaCha8Rng,
) -> Option<usize> {
    let n = kernel.n();
    let mut s = start;
    for _ in 0..MC_STEP_CAP {
        if !v.contains(s) {
            return Some(s);
        }
        let r: f64 = rng.random();
        let mut acc = 0.0;
        let mut next = None;
        for y in 0..n {
            acc += kernel.entry(s, y);
            if r < acc {
                next = Some(y);
                break;
            }
        }
        match next {
            Some(y) => s = y,
            None => return Some(n), // killed
        }
    }
    None
}
