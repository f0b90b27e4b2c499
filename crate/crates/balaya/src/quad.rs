//! Quadrature: Gauss–Legendre rules and an adaptive Gauss–Kronrod integrator.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// P_n(x) and P_n'(x) via the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Cached Gauss–Legendre rule (the radial assembler calls it per entry).
pub fn gauss_legendre_cached(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(gauss_legendre(n)))
        .clone()
}

/// Fixed Gauss–Legendre integral of `f` over [a, b].
pub fn integrate_gl<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let rule = gauss_legendre_cached(n);
    let (nodes, weights) = (&rule.0, &rule.1);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        sum += w * f(mid + half * x);
    }
    sum * half
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK constants).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One G7/K15 panel: returns (kronrod value, |kronrod - gauss| error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = half * XGK[j];
        let fsum = f(mid - x) + f(mid + x);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    kronrod *= half;
    gauss *= half;
    (kronrod, (kronrod - gauss).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over [a, b].
///
/// Bisects panels until the summed error estimate is below
/// `rel_tol * |integral| + abs_floor`, or fails after `max_panels`.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput("adaptive: bounds must be finite".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let max_panels = 20_000usize;
    // (a, b, value, err), kept as a worst-first work list
    let (v0, e0) = gk15(&f, a, b);
    let mut panels: Vec<(f64, f64, f64, f64)> = vec![(a, b, v0, e0)];
    for _ in 0..max_panels {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= rel_tol * total.abs() + abs_floor {
            return Ok(total);
        }
        // split the panel with the largest error estimate
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (pa, pb, _, perr) = panels.swap_remove(idx);
        let pm = 0.5 * (pa + pb);
        if pm <= pa || pm >= pb {
            // interval exhausted at machine precision; accept its estimate
            panels.push((pa, pb, gk15(&f, pa, pb).0, 0.0));
            if perr > rel_tol.max(1e-12) {
                continue;
            }
            continue;
        }
        let (v1, e1) = gk15(&f, pa, pm);
        let (v2, e2) = gk15(&f, pm, pb);
        panels.push((pa, pm, v1, e1));
        panels.push((pm, pb, v2, e2));
    }
    Err(Error::NumericalFailure(format!(
        "adaptive quadrature on [{a}, {b}] did not reach rel_tol {rel_tol} within {max_panels} panels"
    )))
}

/// `∫_0^∞ f(t) dt` via the substitution `t = e^u` (so `du`-integrand
/// `e^u f(e^u)`), integrated adaptively over a wide log window.
pub fn integrate_halfline_log<F: Fn(f64) -> f64>(f: F, rel_tol: f64) -> Result<f64> {
    let g = |u: f64| {
        let t = u.exp();
        let v = f(t) * t;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // coarse scan for the active window
    let mut lo = -700.0f64;
    let mut hi = 700.0f64;
    let mut peak = 0.0f64;
    let mut peak_u = 0.0f64;
    let mut u = -700.0;
    while u <= 700.0 {
        let v = g(u).abs();
        if v > peak {
            peak = v;
            peak_u = u;
        }
        u += 1.0;
    }
    if peak == 0.0 {
        return Ok(0.0);
    }
    let cutoff = peak * 1e-18;
    let mut x = peak_u;
    while x > -700.0 && g(x).abs() > cutoff {
        x -= 1.0;
    }
    lo = lo.max(x - 2.0);
    let mut x = peak_u;
    while x < 700.0 && g(x).abs() > cutoff {
        x += 1.0;
    }
    hi = hi.min(x + 2.0);
    adaptive(g, lo, hi, rel_tol, peak * 1e-300)
}
