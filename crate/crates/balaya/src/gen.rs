//! Seeded instance generators for the verification drivers and the CLI.
//!
//! Everything is deterministic given (seed, parameters); the stream is a
//! single ChaCha8 generator owned by the caller.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::markov_core::{StateFunction, SubMarkovKernel};
use crate::potential_ops::{harmonic_kernel, SubsetMask, WeightedPotentialKernel};
use crate::semilinear::{Exhaustion, Nonlinearity, ProblemBackend, SemilinearProblem};

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random substochastic kernel with every row sum at most `max_row_sum`
/// (which caps the spectral radius).
pub fn substochastic(rng: &mut ChaCha8Rng, n: usize, max_row_sum: f64) -> SubMarkovKernel {
    let mut rows = vec![vec![0.0; n]; n];
    for row in rows.iter_mut() {
        let targets = rng.random_range(1..=n);
        let total: f64 = rng.random_range(0.1..max_row_sum);
        let mut raw = vec![0.0; n];
        for _ in 0..targets {
            let y = rng.random_range(0..n);
            raw[y] += rng.random_range(0.1..1.0);
        }
        let s: f64 = raw.iter().sum();
        for (slot, r) in row.iter_mut().zip(&raw) {
            *slot = r / s * total;
        }
    }
    SubMarkovKernel::from_rows(&rows).expect("generated rows are substochastic")
}

/// Random nonempty proper subset.
pub fn proper_subset(rng: &mut ChaCha8Rng, n: usize) -> SubsetMask {
    loop {
        let members: Vec<bool> = (0..n).map(|_| rng.random_bool(0.6)).collect();
        let count = members.iter().filter(|&&b| b).count();
        if count >= 1 && count < n {
            return SubsetMask::new(members);
        }
    }
}

/// Random increasing chain of subsets ending exactly at `u_set`.
pub fn nested_exhaustion(rng: &mut ChaCha8Rng, u_set: &SubsetMask) -> Exhaustion {
    let mut idx = u_set.indices();
    // deterministic shuffle
    for i in (1..idx.len()).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    let stages = rng.random_range(1..=3.min(idx.len()));
    let mut sets = Vec::new();
    for s in 1..=stages {
        let take = (idx.len() * s).div_ceil(stages);
        sets.push(SubsetMask::from_indices(u_set.len(), &idx[..take]).unwrap());
    }
    Exhaustion::new(sets).expect("prefix chain is increasing")
}

/// Nonnegative function with entries in `[lo, hi)`.
pub fn state_function(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> StateFunction {
    StateFunction::nonnegative(DVector::from_fn(n, |_, _| rng.random_range(lo..hi))).unwrap()
}

/// `h ≥ 0` harmonic on U, built from boundary values in `[0.5, 2)`;
/// `None` when every path from U dies before reaching the boundary.
pub fn harmonic_on(
    rng: &mut ChaCha8Rng,
    chain: &SubMarkovKernel,
    u_set: &SubsetMask,
) -> Option<StateFunction> {
    let n = chain.n();
    let hk = harmonic_kernel(chain, u_set).ok()?;
    let f = DVector::from_fn(n, |x, _| {
        if u_set.contains(x) {
            0.0
        } else {
            rng.random_range(0.5..2.0)
        }
    });
    let mut h = hk.apply(&f);
    for x in 0..n {
        if !u_set.contains(x) {
            h[x] = f[x];
        }
    }
    if u_set.indices().iter().all(|&x| h[x] < 1e-9) {
        return None;
    }
    StateFunction::nonnegative(h.map(|v| v.max(0.0))).ok()
}

/// Random increasing nonlinearity (zero / linear / power mix).
pub fn nonlinearity(rng: &mut ChaCha8Rng, n: usize) -> Nonlinearity {
    let pick: f64 = rng.random();
    let phi = if pick < 0.1 {
        Nonlinearity::zero(n)
    } else if pick < 0.4 {
        Nonlinearity::Linear {
            rho: (0..n).map(|_| rng.random_range(0.0..0.8)).collect(),
        }
    } else {
        Nonlinearity::Power {
            rho: (0..n).map(|_| rng.random_range(0.0..0.8)).collect(),
            gamma: rng.random_range(0.6..2.5),
        }
    };
    phi.validated().expect("generated families are valid")
}

/// A complete discrete problem: killed-chain operator on a proper subset,
/// harmonic h, random increasing φ, exhaustion extended until the caps are
/// inactive.
pub fn problem(rng: &mut ChaCha8Rng, n_max: usize) -> SemilinearProblem {
    problem_sized(rng, 2, n_max)
}

/// As [`problem`], with the state count drawn from `[n_min, n_max]`.
pub fn problem_sized(rng: &mut ChaCha8Rng, n_min: usize, n_max: usize) -> SemilinearProblem {
    loop {
        let n = rng.random_range(n_min.max(2)..=n_max.max(n_min).max(2));
        let chain = substochastic(rng, n, 0.9);
        let u_set = proper_subset(rng, n);
        let Some(h) = harmonic_on(rng, &chain, &u_set) else {
            continue;
        };
        let phi = nonlinearity(rng, n);
        let density = DVector::from_fn(n, |x, _| {
            if u_set.contains(x) {
                rng.random_range(0.2..1.0)
            } else {
                0.0
            }
        });
        let Ok(kp) = WeightedPotentialKernel::from_killed_chain(&chain, &u_set, density) else {
            continue;
        };
        let cap = phi.sup_at(h.sup_norm()) + 1.0;
        let exhaustion = nested_exhaustion(rng, &u_set).extended_to_cap(cap);
        match SemilinearProblem::new(
            kp,
            phi,
            h,
            u_set,
            exhaustion,
            ProblemBackend::Discrete { chain },
        ) {
            Ok(p) => return p,
            Err(_) => continue,
        }
    }
}

/// Serializable instance file for the CLI `gen` command.
pub fn problem_json(rng: &mut ChaCha8Rng, n: usize) -> Result<crate::io::ProblemJson> {
    let p = problem_sized(rng, n.max(2), n.max(2));
    let chain = match &p.backend {
        ProblemBackend::Discrete { chain } => chain.clone(),
        ProblemBackend::Radial { .. } => unreachable!("generator is discrete"),
    };
    let phi = match &p.phi {
        Nonlinearity::Zero { .. } => crate::io::PhiJson::Zero,
        Nonlinearity::Linear { rho } => crate::io::PhiJson::Linear { rho: rho.clone() },
        Nonlinearity::Power { rho, gamma } => crate::io::PhiJson::Power {
            rho: rho.clone(),
            gamma: *gamma,
        },
        other => {
            return Err(crate::Error::InvalidInput(format!(
                "generator produced a non-serializable family {other:?}"
            )))
        }
    };
    Ok(crate::io::ProblemJson {
        kernel: crate::io::KernelJson::from_kernel(&chain),
        u: crate::io::MaskJson::from_mask(&p.domain),
        exhaustion: p
            .exhaustion
            .sets()
            .iter()
            .map(crate::io::MaskJson::from_mask)
            .collect(),
        phi,
        h: p.h.values().iter().copied().collect(),
    })
}
