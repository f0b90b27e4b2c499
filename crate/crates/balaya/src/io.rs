//! JSON schemas for kernels, masks, nonlinearities and problem files, plus
//! small report helpers.
//!
//! Kernel files: `{"n": 3, "rows": [[0.0, 0.5, 0.25], ...]}` (dense,
//! row-major). Masks: `{"members": [0, 3, 4]}` (index list). Problem files
//! bundle `kernel`, `U`, `exhaustion`, `phi`, `h`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov_core::{StateFunction, SubMarkovKernel};
use crate::potential_ops::{SubsetMask, WeightedPotentialKernel};
use crate::semilinear::{Exhaustion, Nonlinearity, ProblemBackend, SemilinearProblem};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelJson {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl KernelJson {
    pub fn to_kernel(&self) -> Result<SubMarkovKernel> {
        if self.rows.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "kernel declares n = {} but has {} rows",
                self.n,
                self.rows.len()
            )));
        }
        SubMarkovKernel::from_rows(&self.rows)
    }

    pub fn from_kernel(k: &SubMarkovKernel) -> Self {
        let n = k.n();
        KernelJson {
            n,
            rows: (0..n)
                .map(|x| (0..n).map(|y| k.entry(x, y)).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskJson {
    pub members: Vec<usize>,
}

impl MaskJson {
    pub fn to_mask(&self, n: usize) -> Result<SubsetMask> {
        SubsetMask::from_indices(n, &self.members)
    }

    pub fn from_mask(m: &SubsetMask) -> Self {
        MaskJson {
            members: m.indices(),
        }
    }
}

/// Nonlinearity families exposed in problem files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PhiJson {
    Zero,
    Linear { rho: Vec<f64> },
    Power { rho: Vec<f64>, gamma: f64 },
    RadialExp { gamma: f64, radii: Vec<f64> },
    Tabulated { tables: Vec<Vec<(f64, f64)>> },
}

impl PhiJson {
    pub fn to_phi(&self, n: usize) -> Result<Nonlinearity> {
        let phi = match self {
            PhiJson::Zero => Nonlinearity::zero(n),
            PhiJson::Linear { rho } => Nonlinearity::Linear { rho: rho.clone() },
            PhiJson::Power { rho, gamma } => Nonlinearity::Power {
                rho: rho.clone(),
                gamma: *gamma,
            },
            PhiJson::RadialExp { gamma, radii } => Nonlinearity::RadialExp {
                gamma: *gamma,
                radii: radii.clone(),
            },
            PhiJson::Tabulated { tables } => Nonlinearity::Tabulated {
                tables: tables.clone(),
            },
        };
        if phi.n() != n {
            return Err(Error::InvalidInput(format!(
                "phi is sized for {} states, kernel has {n}",
                phi.n()
            )));
        }
        phi.validated()
    }
}

/// A discrete problem file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemJson {
    pub kernel: KernelJson,
    #[serde(rename = "U")]
    pub u: MaskJson,
    pub exhaustion: Vec<MaskJson>,
    pub phi: PhiJson,
    pub h: Vec<f64>,
}

impl ProblemJson {
    /// Builds the problem: the operator is the Green function of the chain
    /// killed outside U with unit density on U.
    pub fn to_problem(&self) -> Result<SemilinearProblem> {
        let chain = self.kernel.to_kernel()?;
        let n = chain.n();
        let domain = self.u.to_mask(n)?;
        let sets = self
            .exhaustion
            .iter()
            .map(|m| m.to_mask(n))
            .collect::<Result<Vec<_>>>()?;
        let phi = self.phi.to_phi(n)?;
        if self.h.len() != n {
            return Err(Error::InvalidInput(format!(
                "h has length {}, expected {n}",
                self.h.len()
            )));
        }
        let h = StateFunction::nonnegative(DVector::from_column_slice(&self.h))?;
        let density = DVector::from_fn(n, |x, _| if domain.contains(x) { 1.0 } else { 0.0 });
        let kp = WeightedPotentialKernel::from_killed_chain(&chain, &domain, density)?;
        let cap_needed = phi.sup_at(h.sup_norm()) + 1.0;
        let exhaustion = Exhaustion::new(sets)?.extended_to_cap(cap_needed);
        SemilinearProblem::new(kp, phi, h, domain, exhaustion, ProblemBackend::Discrete { chain })
    }
}

/// A radial instance file: kernel descriptor plus the solve parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialJson {
    pub kind: crate::continuum::KernelKind,
    pub d: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub h: f64,
    pub radius: f64,
    #[serde(default = "default_per_octave")]
    pub nodes_per_octave: usize,
}

fn default_per_octave() -> usize {
    12
}

/// Parses JSON with a line/column diagnostic on failure.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        Error::InvalidInput(format!(
            "malformed JSON at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

/// One-line instance digest used in verification-failure dumps.
pub fn problem_summary(problem: &SemilinearProblem) -> String {
    let h: Vec<f64> = problem.h.values().iter().copied().collect();
    format!(
        "{{\"n\":{},\"U\":{:?},\"phi\":\"{:?}\",\"h\":{:?}}}",
        problem.n(),
        problem.domain.indices(),
        problem.phi,
        h
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_round_trip() {
        let text = r#"{"n": 2, "rows": [[0.0, 0.5], [0.25, 0.0]]}"#;
        let kj: KernelJson = parse_json(text).unwrap();
        let k = kj.to_kernel().unwrap();
        assert_eq!(k.entry(1, 0), 0.25);
        let back = KernelJson::from_kernel(&k);
        assert_eq!(back.rows, kj.rows);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_json::<KernelJson>("{\"n\": 2,\n  \"rows\": [[oops]]}").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn problem_file_builds() {
        let text = r#"{
            "kernel": {"n": 3, "rows": [[0.0, 0.5, 0.25], [0.3333333333333333, 0.0, 0.3333333333333333], [0.0, 0.0, 0.0]]},
            "U": {"members": [0, 1]},
            "exhaustion": [{"members": [0]}, {"members": [0, 1]}],
            "phi": {"family": "power", "rho": [0.5, 0.5, 0.0], "gamma": 2.0},
            "h": [0.5, 0.5, 1.0]
        }"#;
        let pj: ProblemJson = parse_json(text).unwrap();
        let problem = pj.to_problem().unwrap();
        assert_eq!(problem.n(), 3);
        // the builder extends the exhaustion until the caps are inactive
        assert!(problem.exhaustion.len() >= 2);

        // a right-hand side that is not harmonic on U is rejected
        let mut bad = pj.clone();
        bad.h = vec![0.9, 0.5, 1.0];
        let err = bad.to_problem().unwrap_err();
        assert!(format!("{err}").contains("harmonic"));
    }
}
