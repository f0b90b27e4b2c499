//! Closed-form Green functions and transition densities for the standard
//! continuum examples, their quadrature cross-checks, and radial discretized
//! operators feeding the semilinear layer.
//!
//! Normalization: the constants `c` are the ones forced by
//! `G(x,y) = ∫_0^∞ p_t(x,y) dt`, validated by quadrature at α = 2 (gaussian)
//! and α = 1 (cauchy); general riesz orders use
//! `c(d,α) = Γ((d−α)/2) / (2^α π^{d/2} Γ(α/2))`.

use nalgebra::DMatrix;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad;
use crate::tol;

/// Kernel family of a closed-form Green function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Newtonian,
    Riesz,
    Heat,
    SpaceTime,
}

/// Descriptor of a closed-form kernel with its normalization constant.
#[derive(Debug, Clone, Copy)]
pub struct GreenKernelSpec {
    pub kind: KernelKind,
    pub d: usize,
    pub alpha: f64,
    pub c: f64,
}

/// `c(d,α) = Γ((d−α)/2) / (2^α π^{d/2} Γ(α/2))`.
pub fn riesz_constant(d: usize, alpha: f64) -> f64 {
    let df = d as f64;
    gamma((df - alpha) / 2.0)
        / (2f64.powf(alpha) * std::f64::consts::PI.powf(df / 2.0) * gamma(alpha / 2.0))
}

impl GreenKernelSpec {
    pub fn new(kind: KernelKind, d: usize, alpha: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        let c = match kind {
            KernelKind::Newtonian => {
                if d < 3 {
                    return Err(Error::InvalidInput(
                        "newtonian kernel needs d >= 3".into(),
                    ));
                }
                if (alpha - 2.0).abs() > 1e-14 {
                    return Err(Error::InvalidInput("newtonian kernel fixes alpha = 2".into()));
                }
                riesz_constant(d, 2.0)
            }
            KernelKind::Riesz => {
                if !(alpha > 0.0 && alpha < 2.0 && alpha < d as f64) {
                    return Err(Error::InvalidInput(format!(
                        "riesz kernel needs 0 < alpha < min(2, d), got alpha = {alpha}, d = {d}"
                    )));
                }
                riesz_constant(d, alpha)
            }
            KernelKind::Heat | KernelKind::SpaceTime => {
                (4.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0)
            }
        };
        Ok(GreenKernelSpec { kind, d, alpha, c })
    }

    pub fn is_elliptic(&self) -> bool {
        matches!(self.kind, KernelKind::Newtonian | KernelKind::Riesz)
    }

    /// `c · r^{α−d}` for elliptic kinds.
    pub fn radial_profile(&self, r: f64) -> f64 {
        self.c * r.powf(self.alpha - self.d as f64)
    }
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Green-function value.
///
/// Elliptic kinds take points in ℝ^d and return `c |x−y|^{α−d}` (the
/// diagonal is a singularity error). The heat kind takes points in
/// ℝ^{d+1} whose last coordinate is time and returns
/// `c (r−s)^{−d/2} exp(−|x'−y'|²/(4(r−s)))` for `r > s`, else 0.
pub fn green_eval(spec: &GreenKernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    match spec.kind {
        KernelKind::Newtonian | KernelKind::Riesz => {
            if x.len() != spec.d || y.len() != spec.d {
                return Err(Error::InvalidInput(format!(
                    "points must have dimension {}",
                    spec.d
                )));
            }
            let r = dist(x, y);
            if r == 0.0 {
                return Err(Error::InvalidInput(
                    "elliptic kernel is singular on the diagonal".into(),
                ));
            }
            Ok(spec.radial_profile(r))
        }
        KernelKind::Heat | KernelKind::SpaceTime => {
            if x.len() != spec.d + 1 || y.len() != spec.d + 1 {
                return Err(Error::InvalidInput(format!(
                    "space-time points must have dimension {} + 1",
                    spec.d
                )));
            }
            let (xs, r) = (&x[..spec.d], x[spec.d]);
            let (ys, s) = (&y[..spec.d], y[spec.d]);
            if r <= s {
                return Ok(0.0);
            }
            let dt = r - s;
            let rho = dist(xs, ys);
            Ok(spec.c * dt.powf(-(spec.d as f64) / 2.0) * (-rho * rho / (4.0 * dt)).exp())
        }
    }
}

/// Transition-density family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityKind {
    Gaussian,
    Cauchy,
}

/// `p_t(x,y)`: gaussian `(4πt)^{−d/2} exp(−|x−y|²/(4t))`, or the α = 1
/// stable (cauchy) density `c_d · t / (t² + |x−y|²)^{(d+1)/2}` with
/// `c_d = Γ((d+1)/2) / π^{(d+1)/2}`.
pub fn density_eval(kind: DensityKind, d: usize, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("time t = {t} must be > 0")));
    }
    if x.len() != d || y.len() != d {
        return Err(Error::InvalidInput(format!("points must have dimension {d}")));
    }
    Ok(density_radial(kind, d, t, dist(x, y)))
}

/// Same density as a function of `r = |x−y|`.
pub fn density_radial(kind: DensityKind, d: usize, t: f64, r: f64) -> f64 {
    let df = d as f64;
    match kind {
        DensityKind::Gaussian => {
            (4.0 * std::f64::consts::PI * t).powf(-df / 2.0) * (-r * r / (4.0 * t)).exp()
        }
        DensityKind::Cauchy => {
            let cd = gamma((df + 1.0) / 2.0) / std::f64::consts::PI.powf((df + 1.0) / 2.0);
            cd * t / (t * t + r * r).powf((df + 1.0) / 2.0)
        }
    }
}

/// Total mass `∫_{ℝ^d} p_t(x, y) dy` by radial quadrature.
pub fn density_mass(kind: DensityKind, d: usize, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput("t must be > 0".into()));
    }
    let area = unit_sphere_area(d);
    quad::integrate_halfline_log(
        move |r| density_radial(kind, d, t, r) * r.powi(d as i32 - 1) * area,
        tol::QUAD_REL,
    )
}

/// Surface area of the unit sphere in ℝ^d (`2` for d = 1, counting both
/// half-lines).
pub fn unit_sphere_area(d: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// `|p_{s+t}(x,y) − ∫ p_s(x,z) p_t(z,y) dz|` with adaptive quadrature.
///
/// Implemented for d = 1 (the verification grid); the cauchy kind in d ≥ 2
/// would need a genuinely d-dimensional quadrature.
pub fn chapman_kolmogorov_residual(
    kind: DensityKind,
    d: usize,
    s: f64,
    t: f64,
    x: f64,
    y: f64,
) -> Result<f64> {
    if !(s > 0.0 && t > 0.0) {
        return Err(Error::InvalidInput("s, t must be > 0".into()));
    }
    if d != 1 {
        return Err(Error::InvalidInput(
            "chapman-kolmogorov check implemented for d = 1".into(),
        ));
    }
    let lhs = density_radial(kind, 1, s + t, (x - y).abs());
    let half_width = match kind {
        DensityKind::Gaussian => 20.0 * (s.max(t)).sqrt() + (x - y).abs() + 5.0,
        // heavy tails: beyond Z the product is O(st/z⁴), truncation error O(Z^{-3})
        DensityKind::Cauchy => 2.0e4 * (1.0 + s + t) + 10.0 * (x.abs() + y.abs()),
    };
    let center = 0.5 * (x + y);
    let conv = quad::adaptive(
        |z| density_radial(kind, 1, s, (x - z).abs()) * density_radial(kind, 1, t, (z - y).abs()),
        center - half_width,
        center + half_width,
        tol::QUAD_REL,
        lhs * 1e-14,
    )?;
    Ok((lhs - conv).abs())
}

/// `G(x,y) = ∫_0^∞ p_t(x,y) dt` by adaptive quadrature in log time.
///
/// Transient ranges only: gaussian needs d ≥ 3, cauchy needs d ≥ 2.
pub fn green_from_density(kind: DensityKind, d: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    match kind {
        DensityKind::Gaussian if d < 3 => {
            return Err(Error::InvalidInput(
                "gaussian time integral diverges for d < 3".into(),
            ))
        }
        DensityKind::Cauchy if d < 2 => {
            return Err(Error::InvalidInput(
                "cauchy time integral diverges for d < 2".into(),
            ))
        }
        _ => {}
    }
    if x.len() != d || y.len() != d {
        return Err(Error::InvalidInput(format!("points must have dimension {d}")));
    }
    let r = dist(x, y);
    if r == 0.0 {
        return Err(Error::InvalidInput("diagonal is singular".into()));
    }
    quad::integrate_halfline_log(move |t| density_radial(kind, d, t, r), tol::QUAD_REL)
}

/// A point of space-time, `(x, r)` with `x ∈ ℝ^d` and time `r`.
#[derive(Debug, Clone)]
pub struct SpaceTimePoint {
    pub x: Vec<f64>,
    pub r: f64,
}

impl SpaceTimePoint {
    pub fn new(x: Vec<f64>, r: f64) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) || !r.is_finite() {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        Ok(SpaceTimePoint { x, r })
    }
}

/// Space-time Green value `G̃((x,r),(y,s)) = p_{r−s}(x,y)` with the gaussian
/// density, 0 when `r ≤ s`.
pub fn spacetime_green_eval(d: usize, a: &SpaceTimePoint, b: &SpaceTimePoint) -> Result<f64> {
    if a.x.len() != d || b.x.len() != d {
        return Err(Error::InvalidInput(format!("points must have dimension {d}")));
    }
    if a.r <= b.r {
        return Ok(0.0);
    }
    density_eval(DensityKind::Gaussian, d, a.r - b.r, &a.x, &b.x)
}

/// `∫_ℝ G̃((x,r),(y,s)) ds`, which collapses to `∫_0^∞ p_u(x,y) du`; needs
/// d ≥ 3.
pub fn spacetime_time_integral(d: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    green_from_density(DensityKind::Gaussian, d, x, y)
}

// ---------------------------------------------------------------------------
// Truncation-trend classification
// ---------------------------------------------------------------------------

/// Verdict of a truncation trend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Finiteness {
    /// Saturating trend; `value` includes a geometric tail estimate.
    Finite { value: f64 },
    /// Non-saturating trend; `last_value` is the largest partial sum seen.
    Divergent { last_value: f64 },
}

impl Finiteness {
    pub fn is_finite(&self) -> bool {
        matches!(self, Finiteness::Finite { .. })
    }
}

/// Classifies a sequence of nonnegative shell increments (one per doubling
/// of the truncation level).
///
/// Divergent when the cumulative value blows past `1e6·scale` or the tail
/// increment ratio reaches 1 (log-critical growth has ratio exactly 1,
/// power growth above 1); finite when increments saturate or decay
/// geometrically, in which case the geometric tail is added.
pub fn classify_trend(increments: &[f64], scale: f64) -> Finiteness {
    let mut cum = 0.0f64;
    let blowup = tol::BLOWUP_FACTOR * scale.max(1e-300);
    let mut saturated_run = 0usize;
    for (j, &inc) in increments.iter().enumerate() {
        cum += inc;
        if cum > blowup {
            return Finiteness::Divergent { last_value: cum };
        }
        if j > 0 && inc <= tol::SATURATION_REL * cum.max(1e-300) {
            saturated_run += 1;
            if saturated_run >= 2 {
                return Finiteness::Finite { value: cum };
            }
        } else {
            saturated_run = 0;
        }
    }
    // tail increment ratios
    let mut ratios: Vec<f64> = Vec::new();
    for w in increments.windows(2).rev().take(5) {
        if w[0] > 0.0 {
            ratios.push(w[1] / w[0]);
        }
    }
    if ratios.is_empty() {
        return Finiteness::Finite { value: cum };
    }
    ratios.sort_by(f64::total_cmp);
    let med = ratios[ratios.len() / 2];
    if med >= 1.0 - tol::INCREMENT_RATIO_MARGIN {
        Finiteness::Divergent { last_value: cum }
    } else {
        let last = *increments.last().unwrap();
        Finiteness::Finite {
            value: cum + last * med / (1.0 - med),
        }
    }
}

/// Finiteness of `∫_1^∞ r^{d−1} · r^{α−d} · r^{c−γ} dr`, decided numerically
/// from dyadic-shell quadrature up to `2^40` and the trend classifier.
///
/// The analytic predicate is `c < γ − α`; boundary cases (`c = γ − α`,
/// log-critical) classify as divergent.
pub fn example22_finiteness(d: usize, alpha: f64, gamma: f64, c_level: f64) -> Result<Finiteness> {
    if d == 0 || !(alpha > 0.0 && alpha <= 2.0 && alpha < d as f64 + f64::EPSILON) {
        return Err(Error::InvalidInput(format!(
            "need 0 < alpha <= 2 and alpha < d, got alpha = {alpha}, d = {d}"
        )));
    }
    if !(c_level >= 0.0) {
        return Err(Error::InvalidInput("c_level must be >= 0".into()));
    }
    let q = alpha + c_level - gamma - 1.0; // integrand r^q
    let mut increments = Vec::with_capacity(40);
    let mut lo = 1.0f64;
    for _ in 0..40 {
        let hi = 2.0 * lo;
        increments.push(quad::integrate_gl(|r| r.powf(q), lo, hi, 16));
        lo = hi;
    }
    Ok(classify_trend(&increments, increments[0].max(1.0)))
}

/// Near-boundary integrability of `∫_0^ε s^{α/2} s^{(α/2−1)γ} ds`, decided
/// from halving shells down to `2^{−40}`.
pub fn ball_boundary_divergent(alpha: f64, gamma: f64) -> Result<bool> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidInput("need 0 < alpha < 2".into()));
    }
    let q = alpha / 2.0 + (alpha / 2.0 - 1.0) * gamma;
    let mut increments = Vec::with_capacity(40);
    let mut hi = 0.5f64;
    for _ in 0..40 {
        let lo = 0.5 * hi;
        increments.push(quad::integrate_gl(|s| s.powf(q), lo, hi, 16));
        hi = lo;
    }
    let scale = increments[0].max(1.0);
    Ok(!classify_trend(&increments, scale).is_finite())
}

/// Locates the exponent at which the near-boundary integral flips between
/// finite and divergent, by bisection on the numeric detector.
///
/// The analytic flip sits at `γ* = (1 + α/2) / (1 − α/2)`.
pub fn ball_exponent_flip(alpha: f64) -> Result<f64> {
    let mut lo = 0.05f64; // finite side
    let mut hi = 40.0f64; // divergent side
    if ball_boundary_divergent(alpha, lo)? || !ball_boundary_divergent(alpha, hi)? {
        return Err(Error::NumericalFailure(
            "bisection bracket invalid for the boundary detector".into(),
        ));
    }
    for _ in 0..45 {
        let mid = 0.5 * (lo + hi);
        if ball_boundary_divergent(alpha, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// Radial grids and operators
// ---------------------------------------------------------------------------

/// Radial quadrature grid: node radii with node-centered annuli whose
/// weights are d-dimensional annulus volumes.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    weights: Vec<f64>,
    d: usize,
}

impl RadialGrid {
    /// Node-centered annuli with midpoint boundaries, covering
    /// `[inner, outer]`.
    pub fn from_nodes(nodes: Vec<f64>, d: usize, inner: f64, outer: f64) -> Result<Self> {
        if nodes.is_empty() || d == 0 {
            return Err(Error::InvalidInput("empty grid".into()));
        }
        for w in nodes.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidInput("nodes must be strictly increasing".into()));
            }
        }
        if nodes[0] < 0.0 || inner > nodes[0] || outer < *nodes.last().unwrap() {
            return Err(Error::InvalidInput("bounds must bracket the nodes".into()));
        }
        let m = nodes.len();
        let mut bounds = Vec::with_capacity(m);
        for i in 0..m {
            let lo = if i == 0 {
                inner
            } else {
                0.5 * (nodes[i - 1] + nodes[i])
            };
            let hi = if i == m - 1 {
                outer
            } else {
                0.5 * (nodes[i] + nodes[i + 1])
            };
            bounds.push((lo, hi));
        }
        Self::from_parts(nodes, bounds, d)
    }

    /// Explicit annulus boundaries (degenerate zero-width annuli allowed).
    pub fn from_parts(nodes: Vec<f64>, bounds: Vec<(f64, f64)>, d: usize) -> Result<Self> {
        if nodes.len() != bounds.len() {
            return Err(Error::InvalidInput("nodes/bounds length mismatch".into()));
        }
        let df = d as f64;
        let area = unit_sphere_area(d);
        let mut weights = Vec::with_capacity(nodes.len());
        for (&r, &(lo, hi)) in nodes.iter().zip(&bounds) {
            if !(lo <= r && r <= hi) {
                return Err(Error::InvalidInput(format!(
                    "node {r} outside its annulus [{lo}, {hi}]"
                )));
            }
            weights.push(area * (hi.powf(df) - lo.powf(df)) / df);
        }
        // weights must reproduce the covered volume
        let total: f64 = weights.iter().sum();
        let covered: f64 = bounds
            .iter()
            .map(|&(lo, hi)| area * (hi.powf(df) - lo.powf(df)) / df)
            .sum();
        if (total - covered).abs() > 1e-10 * covered.abs().max(1.0) {
            return Err(Error::InternalConsistency(
                "annulus weights do not sum to the covered volume".into(),
            ));
        }
        Ok(RadialGrid {
            nodes,
            bounds,
            weights,
            d,
        })
    }

    /// Geometric node spacing on `[1, r_outer]` with `per_octave` nodes per
    /// radius doubling, optionally prefixed by an origin node covering
    /// `[0, 1)`.
    pub fn geometric(
        d: usize,
        r_outer: f64,
        per_octave: usize,
        include_origin: bool,
    ) -> Result<Self> {
        if !(r_outer > 1.0) || per_octave == 0 {
            return Err(Error::InvalidInput("need r_outer > 1 and per_octave >= 1".into()));
        }
        let octaves = r_outer.log2();
        let steps = (octaves * per_octave as f64).ceil() as usize;
        let ratio = r_outer.powf(1.0 / steps as f64);
        let mut nodes = Vec::with_capacity(steps + 2);
        if include_origin {
            nodes.push(0.0);
        }
        let mut r = 1.0;
        for _ in 0..=steps {
            nodes.push(r);
            r *= ratio;
        }
        let last = nodes.len() - 1;
        nodes[last] = r_outer;
        Self::from_nodes(nodes, d, 0.0, r_outer)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `sign(u) |u|^α / α`, the antiderivative of `|u|^{α−1}`.
fn pow_antideriv(u: f64, alpha: f64) -> f64 {
    u.signum() * u.abs().powf(alpha) / alpha
}

/// `∫_lo^hi |r − s|^{α−1} ds` (the singular point may sit inside).
fn line_abs_integral(r: f64, lo: f64, hi: f64, alpha: f64) -> f64 {
    pow_antideriv(r - lo, alpha) - pow_antideriv(r - hi, alpha)
}

/// `∫_lo^hi (r + s)^{α−1} ds` for r, s ≥ 0.
fn line_sum_integral(r: f64, lo: f64, hi: f64, alpha: f64) -> f64 {
    ((r + hi).powf(alpha) - (r + lo).powf(alpha)) / alpha
}

/// `∫_a^b s |s − r|^{α−1} ds` with `a ≤ r ≤ b`, by exact antiderivatives.
fn moment_abs_integral(r: f64, a: f64, b: f64, alpha: f64) -> f64 {
    let right = {
        let u = b - r;
        r * u.powf(alpha) / alpha + u.powf(alpha + 1.0) / (alpha + 1.0)
    };
    let left = {
        let v = r - a;
        r * v.powf(alpha) / alpha - v.powf(alpha + 1.0) / (alpha + 1.0)
    };
    right + left
}

/// `∫_a^b s ln|s − r| ds` with `a ≤ r ≤ b` (`0 · ln 0 = 0`).
fn moment_log_integral(r: f64, a: f64, b: f64) -> f64 {
    let xlx = |u: f64| if u > 0.0 { u * u.ln() } else { 0.0 };
    let x2lx = |u: f64| if u > 0.0 { 0.5 * u * u * u.ln() } else { 0.0 };
    let right = {
        let u = b - r;
        r * (xlx(u) - u) + x2lx(u) - 0.25 * u * u
    };
    let left = {
        let v = r - a;
        r * (xlx(v) - v) - (x2lx(v) - 0.25 * v * v)
    };
    right + left
}

/// Surface integral of the elliptic kernel over the sphere of radius `s`,
/// seen from a point at radius `r`, for d = 3 (closed polar reduction):
/// `S(r,s) = c · 2πs [ (r+s)^{α−1} − |r−s|^{α−1} ] / (r (α−1))`.
fn sphere_profile_d3(spec: &GreenKernelSpec, r: f64, s: f64) -> f64 {
    let a = spec.alpha;
    if s == 0.0 {
        return 0.0;
    }
    if r == 0.0 {
        return spec.c * 4.0 * std::f64::consts::PI * s.powf(a - 1.0);
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    if (a - 1.0).abs() < 1e-12 {
        spec.c * two_pi * s / r * ((r + s) / (r - s).abs()).ln()
    } else {
        spec.c * two_pi * s / (r * (a - 1.0))
            * ((r + s).powf(a - 1.0) - (r - s).abs().powf(a - 1.0))
    }
}

/// Same surface integral by 64-node Gauss–Legendre in the polar angle
/// (cross-check path; inaccurate only when s ≈ r).
pub fn sphere_profile_d3_gl(spec: &GreenKernelSpec, r: f64, s: f64) -> f64 {
    let a = spec.alpha;
    let two_pi = 2.0 * std::f64::consts::PI;
    spec.c
        * two_pi
        * s
        * s
        * quad::integrate_gl(
            |psi| {
                let w2 = r * r + s * s - 2.0 * r * s * psi.cos();
                w2.powf((a - 3.0) / 2.0) * psi.sin()
            },
            0.0,
            std::f64::consts::PI,
            64,
        )
}

/// Dense radial operator: `K[i][j] ≈ ∫_{annulus j} G(x_i, y) dy` with
/// `|x_i| = r_i`.
///
/// d = 1 uses exact power-law antiderivatives on both half-lines; d = 3
/// integrates the closed polar profile radially (16-node Gauss–Legendre per
/// annulus), with the self-annulus singularity `|r−s|^{α−1}` integrated
/// analytically. Other dimensions are not supported: their self-annulus
/// angular integrals cannot be certified by a fixed-order rule.
pub fn build_radial_operator(spec: &GreenKernelSpec, grid: &RadialGrid) -> Result<DMatrix<f64>> {
    if !spec.is_elliptic() {
        return Err(Error::InvalidInput(
            "radial operator needs an elliptic kernel kind".into(),
        ));
    }
    if spec.d != grid.d() {
        return Err(Error::InvalidInput("spec/grid dimension mismatch".into()));
    }
    let m = grid.len();
    let mut k = DMatrix::zeros(m, m);
    match spec.d {
        1 => {
            let a = spec.alpha;
            for i in 0..m {
                let r = grid.nodes()[i];
                for j in 0..m {
                    let (lo, hi) = grid.bounds()[j];
                    if hi <= lo {
                        continue;
                    }
                    k[(i, j)] = spec.c
                        * (line_abs_integral(r, lo, hi, a) + line_sum_integral(r, lo, hi, a));
                }
            }
        }
        3 => {
            let a = spec.alpha;
            let two_pi = 2.0 * std::f64::consts::PI;
            for i in 0..m {
                let r = grid.nodes()[i];
                for j in 0..m {
                    let (lo, hi) = grid.bounds()[j];
                    if hi <= lo {
                        continue;
                    }
                    if j != i || r == 0.0 {
                        if r == 0.0 && j == i {
                            // self annulus seen from the origin: exact
                            k[(i, j)] = spec.c * 4.0 * std::f64::consts::PI
                                * (hi.powf(a) - lo.powf(a))
                                / a;
                        } else {
                            k[(i, j)] =
                                quad::integrate_gl(|s| sphere_profile_d3(spec, r, s), lo, hi, 16);
                        }
                        continue;
                    }
                    // self annulus: smooth (r+s) part by quadrature, the
                    // |r−s|^{α−1} part by exact antiderivative
                    if (a - 1.0).abs() < 1e-12 {
                        let smooth = quad::integrate_gl(
                            |s| spec.c * two_pi * s / r * (r + s).ln(),
                            lo,
                            hi,
                            16,
                        );
                        let singular = spec.c * two_pi / r * moment_log_integral(r, lo, hi);
                        k[(i, j)] = smooth - singular;
                    } else {
                        let smooth = quad::integrate_gl(
                            |s| spec.c * two_pi * s / (r * (a - 1.0)) * (r + s).powf(a - 1.0),
                            lo,
                            hi,
                            16,
                        );
                        let singular =
                            spec.c * two_pi / (r * (a - 1.0)) * moment_abs_integral(r, lo, hi, a);
                        k[(i, j)] = smooth - singular;
                    }
                }
            }
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "radial operator supports d = 1 and d = 3, got d = {other}"
            )))
        }
    }
    if k.iter().any(|v| !v.is_finite() || *v < -1e-12) {
        return Err(Error::NumericalFailure(
            "radial operator has negative or non-finite entries".into(),
        ));
    }
    Ok(k)
}

// ---------------------------------------------------------------------------
// Radial whole-space instances
// ---------------------------------------------------------------------------

/// Parameters of a radial whole-space instance with constant right-hand
/// side: riesz order α in dimension d, growth exponent γ of the radial
/// nonlinearity, level h.
#[derive(Debug, Clone, Copy)]
pub struct RadialInstanceConfig {
    pub d: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub h: f64,
}

/// Builds the radial semilinear problem at truncation radius `r_trunc`:
/// the radial operator on `[0, r_trunc]` (the nonlinearity vanishes inside
/// the unit ball), the radial-exponent nonlinearity, constant h, and an
/// exhaustion growing by octaves.
pub fn radial_instance(
    cfg: &RadialInstanceConfig,
    r_trunc: f64,
    per_octave: usize,
) -> Result<crate::semilinear::SemilinearProblem> {
    use crate::semilinear as sl;
    if !(cfg.h > 0.0) {
        return Err(Error::InvalidInput("h must be > 0".into()));
    }
    if r_trunc < 8.0 {
        return Err(Error::InvalidInput("truncation radius must be >= 2^3".into()));
    }
    let spec = GreenKernelSpec::new(KernelKind::Riesz, cfg.d, cfg.alpha)?;
    let grid = RadialGrid::geometric(cfg.d, r_trunc, per_octave, true)?;
    let k = build_radial_operator(&spec, &grid)?;
    let n = grid.len();
    let kp = crate::potential_ops::WeightedPotentialKernel::new(
        k,
        nalgebra::DVector::from_element(n, 1.0),
    )?;
    let phi = sl::Nonlinearity::RadialExp {
        gamma: cfg.gamma,
        radii: grid.nodes().to_vec(),
    }
    .validated()?;
    let h = crate::markov_core::StateFunction::constant(n, cfg.h);
    let domain = crate::potential_ops::SubsetMask::full(n);
    // octave prefixes: V_k = {r <= 2^k}
    let octaves = r_trunc.log2().ceil() as i32;
    let mut sets = Vec::new();
    for k_oct in 0..=octaves {
        let lim = 2f64.powi(k_oct);
        let members: Vec<bool> = grid.nodes().iter().map(|&r| r <= lim).collect();
        sets.push(crate::potential_ops::SubsetMask::new(members));
    }
    let last = sets.last().unwrap();
    if last.count() != n {
        sets.push(crate::potential_ops::SubsetMask::full(n));
    }
    let cap = phi.sup_at(cfg.h) + 1.0;
    let exhaustion = sl::Exhaustion::new(sets)?.extended_to_cap(cap);
    sl::SemilinearProblem::new(
        kp,
        phi,
        h,
        domain,
        exhaustion,
        sl::ProblemBackend::Radial { spec, grid },
    )
}

/// One truncation level of the solvability trend.
#[derive(Debug, Clone, Copy)]
pub struct TrendRow {
    pub radius: f64,
    /// Recomputed residual of the solve at this truncation.
    pub residual: f64,
    /// Smallest solution value over the grid.
    pub min_u: f64,
    /// `(h − P^φh)(0)` from the level-trend estimate.
    pub gap_at_origin: f64,
}

/// Solves the instance at each truncation radius and reports the
/// solvability gap trend.
pub fn radial_trend(
    cfg: &RadialInstanceConfig,
    radii: &[f64],
    per_octave: usize,
) -> Result<Vec<TrendRow>> {
    use crate::semilinear as sl;
    let mut rows = Vec::with_capacity(radii.len());
    for &r_trunc in radii {
        let problem = radial_instance(cfg, r_trunc, per_octave)?;
        let rep = sl::solve_fixed(&problem.kp, &problem.phi, &problem.h)?;
        let p = sl::p_phi(&problem)?;
        let gap = cfg.h - p.values()[0];
        rows.push(TrendRow {
            radius: r_trunc,
            residual: rep.residual,
            min_u: rep.u.values().min(),
            gap_at_origin: gap,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn riesz_constants_match_known_values() {
        // alpha = 2, d = 3: Newtonian 1/(4π)
        assert!((riesz_constant(3, 2.0) - 1.0 / (4.0 * PI)).abs() < 1e-15);
        // alpha = 1, d = 2: 1/(2π)
        assert!((riesz_constant(2, 1.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn green_eval_examples() {
        let newt = GreenKernelSpec::new(KernelKind::Newtonian, 3, 2.0).unwrap();
        let v = green_eval(&newt, &[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!(green_eval(&newt, &[0.0; 3], &[0.0; 3]).is_err());

        let riesz = GreenKernelSpec::new(KernelKind::Riesz, 2, 1.0).unwrap();
        let v = green_eval(&riesz, &[0.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-15);

        // heat kernel vanishes backwards in time
        let heat = GreenKernelSpec::new(KernelKind::Heat, 3, 2.0).unwrap();
        let v = green_eval(&heat, &[0.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn green_symmetry_and_homogeneity() {
        let spec = GreenKernelSpec::new(KernelKind::Riesz, 1, 0.5).unwrap();
        let x = [0.3];
        let y = [2.0];
        let gxy = green_eval(&spec, &x, &y).unwrap();
        let gyx = green_eval(&spec, &y, &x).unwrap();
        assert_eq!(gxy, gyx);
        // G(λx, λy) = λ^{α−d} G(x,y)
        let lam = 3.7;
        let gl = green_eval(&spec, &[lam * x[0]], &[lam * y[0]]).unwrap();
        let expect = lam.powf(spec.alpha - spec.d as f64) * gxy;
        assert!((gl - expect).abs() <= 1e-12 * expect.abs());
    }

    #[test]
    fn density_pointwise_examples() {
        // gaussian at x = y, d = 1, t = 1/(4π): (4πt)^{-1/2} = 1
        let t = 1.0 / (4.0 * PI);
        let v = density_eval(DensityKind::Gaussian, 1, t, &[0.0], &[0.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-14);

        // cauchy at x = y, d = 1, t = 1: 1/π
        let v = density_eval(DensityKind::Cauchy, 1, 1.0, &[0.0], &[0.0]).unwrap();
        assert!((v - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn densities_have_unit_mass() {
        for kind in [DensityKind::Gaussian, DensityKind::Cauchy] {
            for d in [1usize, 2, 3] {
                for t in [0.25, 1.0, 3.0] {
                    let m = density_mass(kind, d, t).unwrap();
                    assert!((m - 1.0).abs() < 1e-6, "{kind:?} d={d} t={t}: mass {m}");
                }
            }
        }
    }

    #[test]
    fn density_radially_decreasing() {
        for kind in [DensityKind::Gaussian, DensityKind::Cauchy] {
            let mut last = f64::INFINITY;
            for k in 0..30 {
                let r = 0.2 * k as f64;
                let v = density_radial(kind, 2, 0.7, r);
                assert!(v >= 0.0 && v <= last);
                last = v;
            }
        }
    }

    #[test]
    fn chapman_kolmogorov_examples() {
        // exact semigroup identities, quadrature is the oracle
        let r = chapman_kolmogorov_residual(DensityKind::Gaussian, 1, 1.0, 1.0, 0.0, 0.0).unwrap();
        let scale = density_radial(DensityKind::Gaussian, 1, 2.0, 0.0);
        assert!(r < 1e-8 * scale.max(1.0), "residual {r}");

        let r = chapman_kolmogorov_residual(DensityKind::Cauchy, 1, 0.5, 1.5, 0.0, 2.0).unwrap();
        let scale = density_radial(DensityKind::Cauchy, 1, 2.0, 2.0);
        assert!(r < 1e-6 * scale, "residual {r} vs scale {scale}");

        // far tail: both sides vanish
        let r = chapman_kolmogorov_residual(DensityKind::Gaussian, 1, 1.0, 1.0, 0.0, 60.0).unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn green_from_density_matches_closed_forms() {
        // gaussian d = 3 at r = 1: 1/(4π)
        let v = green_from_density(DensityKind::Gaussian, 3, &[0.0; 3], &[1.0, 0.0, 0.0]).unwrap();
        let expect = 1.0 / (4.0 * PI);
        assert!((v - expect).abs() < 1e-6 * expect, "{v} vs {expect}");

        // cauchy d = 2 at r = 1: 1/(2π)
        let v = green_from_density(DensityKind::Cauchy, 2, &[0.0; 2], &[1.0, 0.0]).unwrap();
        let expect = 1.0 / (2.0 * PI);
        assert!((v - expect).abs() < 1e-6 * expect, "{v} vs {expect}");

        // scaling law: value at r = 2 is 2^{α−d} times value at 1
        let v2 = green_from_density(DensityKind::Cauchy, 2, &[0.0; 2], &[2.0, 0.0]).unwrap();
        let ratio = v2 / v;
        assert!((ratio - 2.0f64.powf(1.0 - 2.0)).abs() < 1e-6);

        assert!(green_from_density(DensityKind::Gaussian, 2, &[0.0; 2], &[1.0, 0.0]).is_err());
        assert!(green_from_density(DensityKind::Cauchy, 1, &[0.0], &[1.0]).is_err());
    }

    #[test]
    fn spacetime_green_cases() {
        let a = SpaceTimePoint::new(vec![0.0, 0.0, 0.0], 0.0).unwrap();
        let b = SpaceTimePoint::new(vec![1.0, 0.0, 0.0], 1.0).unwrap();
        // r <= s
        assert_eq!(spacetime_green_eval(3, &a, &b).unwrap(), 0.0);

        // matches the heat-kind green_eval with c = (4π)^{-d/2}
        let heat = GreenKernelSpec::new(KernelKind::Heat, 3, 2.0).unwrap();
        let v1 = spacetime_green_eval(3, &b, &a).unwrap();
        let v2 = green_eval(&heat, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((v1 - v2).abs() < 1e-15 * v1.abs().max(1.0));

        // time integral reproduces the elliptic Green function
        let ti = spacetime_time_integral(3, &[0.0; 3], &[1.0, 0.0, 0.0]).unwrap();
        let expect = 1.0 / (4.0 * PI);
        assert!((ti - expect).abs() < 1e-6 * expect);
    }

    #[test]
    fn finiteness_dichotomy_examples() {
        // γ = α + c + 1: finite
        let f = example22_finiteness(1, 0.5, 0.5 + 0.3 + 1.0, 0.3).unwrap();
        assert!(f.is_finite());
        // boundary γ = α + c: log-critical, divergent
        let f = example22_finiteness(1, 0.5, 0.5 + 0.3, 0.3).unwrap();
        assert!(!f.is_finite());
        // c = 0 with γ > α: value matches the closed antiderivative 1/(γ−α)
        let gamma = 1.7;
        let alpha = 0.5;
        match example22_finiteness(1, alpha, gamma, 0.0).unwrap() {
            Finiteness::Finite { value } => {
                let expect = 1.0 / (gamma - alpha);
                assert!((value - expect).abs() < 1e-6 * expect, "{value} vs {expect}");
            }
            other => panic!("expected finite, got {other:?}"),
        }
    }

    #[test]
    fn ball_exponent_flip_matches_formula() {
        for alpha in [0.5, 1.0, 1.5] {
            let flip = ball_exponent_flip(alpha).unwrap();
            let expect = (1.0 + alpha / 2.0) / (1.0 - alpha / 2.0);
            assert!(
                (flip - expect).abs() < 5e-3,
                "alpha {alpha}: flip {flip} vs {expect}"
            );
        }
    }

    #[test]
    fn radial_grid_weights_are_annulus_volumes() {
        let g = RadialGrid::from_nodes(vec![1.0, 2.0, 4.0], 3, 0.5, 5.0).unwrap();
        let area = unit_sphere_area(3);
        // first annulus [0.5, 1.5]
        let expect = area * (1.5f64.powi(3) - 0.5f64.powi(3)) / 3.0;
        assert!((g.weights()[0] - expect).abs() < 1e-12 * expect);
        // d = 1 counts both half-lines
        let g = RadialGrid::from_nodes(vec![0.0, 1.0], 1, 0.0, 2.0).unwrap();
        assert!((g.weights()[0] - 2.0 * 0.5).abs() < 1e-14);
        assert!((g.weights()[1] - 2.0 * 1.5).abs() < 1e-14);
    }

    #[test]
    fn radial_operator_zero_width_annulus_gives_zero_column() {
        let spec = GreenKernelSpec::new(KernelKind::Riesz, 1, 0.5).unwrap();
        let grid = RadialGrid::from_parts(
            vec![1.0, 2.0, 3.0],
            vec![(0.5, 1.5), (2.0, 2.0), (2.5, 3.5)],
            1,
        )
        .unwrap();
        let k = build_radial_operator(&spec, &grid).unwrap();
        for i in 0..3 {
            assert_eq!(k[(i, 1)], 0.0);
        }
    }

    #[test]
    fn radial_operator_d1_matches_direct_quadrature() {
        let spec = GreenKernelSpec::new(KernelKind::Riesz, 1, 0.5).unwrap();
        let grid = RadialGrid::geometric(1, 16.0, 6, false).unwrap();
        let k = build_radial_operator(&spec, &grid).unwrap();
        for &(i, j) in &[(0usize, 3usize), (5, 5), (7, 2), (2, 7)] {
            let r = grid.nodes()[i];
            let (lo, hi) = grid.bounds()[j];
            // direct adaptive quadrature on both half-lines, split at the
            // interior singularity when present
            let f = |s: f64| {
                spec.radial_profile((r - s).abs().max(1e-300)) + spec.radial_profile(r + s)
            };
            let oracle = if lo < r && r < hi {
                quad::adaptive(f, lo, r, 1e-9, 0.0).unwrap()
                    + quad::adaptive(f, r, hi, 1e-9, 0.0).unwrap()
            } else {
                quad::adaptive(f, lo, hi, 1e-9, 0.0).unwrap()
            };
            let rel = (k[(i, j)] - oracle).abs() / oracle.abs();
            assert!(rel < 1e-4, "entry ({i},{j}): {} vs {oracle}", k[(i, j)]);
        }
    }

    #[test]
    fn radial_operator_d3_alpha2_matches_newton_theorem() {
        // sphere average of 1/(4π|x−y|) is 1/(4π max(r,s)); annulus columns
        // integrate 4πs²·G against it exactly in s
        let spec = GreenKernelSpec::new(KernelKind::Newtonian, 3, 2.0).unwrap();
        let grid = RadialGrid::from_nodes(vec![1.0, 2.0, 4.0, 8.0], 3, 0.5, 10.0).unwrap();
        let k = build_radial_operator(&spec, &grid).unwrap();
        for i in 0..4 {
            let r = grid.nodes()[i];
            for j in 0..4 {
                let (lo, hi) = grid.bounds()[j];
                let oracle = quad::adaptive(|s| s * s / r.max(s), lo, hi, 1e-12, 0.0).unwrap();
                let rel = (k[(i, j)] - oracle).abs() / oracle.abs();
                assert!(rel < 1e-9, "({i},{j}): {} vs {oracle}", k[(i, j)]);
            }
        }
    }

    #[test]
    fn radial_operator_d3_profile_agrees_with_polar_gl() {
        // off-diagonal closed polar profile vs the 64-node rule
        let spec = GreenKernelSpec::new(KernelKind::Riesz, 3, 1.4).unwrap();
        for &(r, s) in &[(1.0, 2.5), (3.0, 1.2), (5.0, 9.0)] {
            let closed = sphere_profile_d3(&spec, r, s);
            let gl = sphere_profile_d3_gl(&spec, r, s);
            assert!(
                (closed - gl).abs() < 1e-10 * closed.abs(),
                "profile at ({r},{s}): {closed} vs {gl}"
            );
        }
    }

    #[test]
    fn radial_operator_symmetry_and_positivity() {
        // self-adjointness of G against Lebesgue measure:
        // K[i][j]/w_j = K[j][i]/w_i up to the node-centered approximation.
        // Checked on a fine single-octave grid with tight end annuli, for
        // pairs separated enough that the O((Δ/dist)²) error sits below the
        // tolerance.
        for (spec, per_octave) in [
            (GreenKernelSpec::new(KernelKind::Riesz, 1, 0.5).unwrap(), 3200),
            (GreenKernelSpec::new(KernelKind::Riesz, 3, 1.3).unwrap(), 1600),
        ] {
            let steps = per_octave;
            let ratio = 2f64.powf(1.0 / steps as f64);
            let mut nodes = Vec::with_capacity(steps + 1);
            let mut r = 1.0f64;
            for _ in 0..=steps {
                nodes.push(r);
                r *= ratio;
            }
            *nodes.last_mut().unwrap() = 2.0;
            let grid = RadialGrid::from_nodes(nodes, spec.d, 1.0, 2.0).unwrap();
            let k = build_radial_operator(&spec, &grid).unwrap();
            let w = grid.weights();
            let m = grid.len();
            let mut worst = 0.0f64;
            // interior nodes only: the first and last annuli are one-sided
            for i in (7..m - 7).step_by(m / 9) {
                for j in (3..m - 3).step_by(m / 7) {
                    if (grid.nodes()[i] - grid.nodes()[j]).abs() < 0.3 {
                        continue;
                    }
                    let a = k[(i, j)] / w[j];
                    let b = k[(j, i)] / w[i];
                    worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
                }
            }
            assert!(worst < 1e-6, "d = {}: asymmetry {worst}", spec.d);
            assert!(k.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn radial_operator_refines_consistently() {
        // applying K to a fixed smooth function drifts < 1e-3 from m to 2m
        let spec = GreenKernelSpec::new(KernelKind::Riesz, 1, 0.5).unwrap();
        let eval_at_one = |per_octave: usize| -> f64 {
            let grid = RadialGrid::geometric(1, 64.0, per_octave, false).unwrap();
            let k = build_radial_operator(&spec, &grid).unwrap();
            let f: Vec<f64> = grid.nodes().iter().map(|r| (-r / 10.0).exp()).collect();
            let row = 0; // node r = 1 is shared by both grids
            (0..grid.len()).map(|j| k[(row, j)] * f[j]).sum()
        };
        let coarse = eval_at_one(8);
        let fine = eval_at_one(16);
        assert!((coarse - fine).abs() / fine.abs() < 1e-3, "{coarse} vs {fine}");
    }
}
