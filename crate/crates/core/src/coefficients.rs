//! Wave coefficients and their structural functionals.
//!
//! The wave equation on (0,1) reads u_tt = a(x)u_xx + b(x)u_x with a(0) = 0
//! allowed (degenerate endpoint). The drift is absorbed into the weight pair
//!
//!   η(x) = exp(∫_{1/2}^x b/a ds),    σ(x) = a(x)/η(x),
//!
//! so that a u_xx + b u_x = σ (η u_x)_x and the natural energy density for
//! u_t is 1/σ. Everything downstream (assembly, energy norm, Hardy-Poincaré
//! bounds) consumes these weights rather than a and b directly.
//!
//! Degeneracy strength is measured by K_a = sup_{x∈(0,1]} x·|a′(x)|/a(x);
//! drift strength by M₁ = sup |x(a′−b)/a| and M₂ = sup |x·b/a|. The
//! supported classes require K_a < 2, and the stability hypothesis used by
//! the analysis layer is M₁ < 1 + K_a/2 together with M₂ < 1 − K_a/2.

use serde::Serialize;

use crate::{Error, Result};

/// Poincaré constant of the unit interval used in the Hardy-Poincaré bound.
pub const POINCARE_UNIT_INTERVAL: f64 = 1.0 / (std::f64::consts::PI * std::f64::consts::PI);

/// Relative refinement tolerance for grid maximization of suprema.
const SUP_REFINE_TOL: f64 = 1e-6;

/// Initial size of the log-graded maximization grid.
const SUP_GRID_BASE: usize = 4096;

/// Minimum sample count for finite-difference work on sampled models.
const MIN_SAMPLES: usize = 8;

/// Degeneracy classification by K_a.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DegeneracyClass {
    /// K_a = 0: the principal coefficient does not degenerate.
    NonDegenerate,
    /// K_a ∈ (0,1).
    WeaklyDegenerate,
    /// K_a ∈ [1,2).
    StronglyDegenerate,
    /// K_a ≥ 2: outside the supported theory.
    Unsupported,
}

impl DegeneracyClass {
    fn from_k_a(k_a: f64) -> Self {
        if k_a <= 0.0 {
            DegeneracyClass::NonDegenerate
        } else if k_a < 1.0 {
            DegeneracyClass::WeaklyDegenerate
        } else if k_a < 2.0 {
            DegeneracyClass::StronglyDegenerate
        } else {
            DegeneracyClass::Unsupported
        }
    }
}

/// Pointwise coefficient and weight values at a single x.
#[derive(Debug, Clone, Copy)]
pub struct Weights {
    pub a: f64,
    pub b: f64,
    pub eta: f64,
    pub sigma: f64,
}

/// Structural functionals of a coefficient model.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoefficientReport {
    /// K_a = sup x|a′|/a.
    #[serde(rename = "K_a")]
    pub degeneracy: f64,
    pub class: DegeneracyClass,
    /// M₁ = sup |x(a′−b)/a|.
    pub drift_m1: f64,
    /// M₂ = sup |x b/a|.
    pub drift_m2: f64,
}

/// Full hypothesis verdict for a coefficient model.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HypothesisReport {
    #[serde(flatten)]
    pub coefficients: CoefficientReport,
    /// Numerical integrability of b/a near the degenerate endpoint.
    pub b_over_a_integrable: bool,
    /// M₁ < 1 + K_a/2 and M₂ < 1 − K_a/2 (and integrable drift).
    pub condition1_holds: bool,
    /// For power-law models: the closed-form criterion "exponent gap < 1 and
    /// |amplitude| < 1 − a_exponent/2", which is equivalent to
    /// `condition1_holds` on that family.
    pub power_law_criterion: Option<bool>,
}

/// Coefficient model on \[0,1\]: either a closed-form power-law pair
/// a = x^p, b = c_b x^q, or tabulated samples on a reference grid.
#[derive(Debug, Clone)]
pub enum CoefficientModel {
    PowerLaw {
        a_exponent: f64,
        b_amplitude: f64,
        b_exponent: f64,
    },
    Sampled {
        x: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
    },
}

impl CoefficientModel {
    /// a(x) = x^p, b(x) = c_b·x^q on \[0,1\]. Exponents must be nonnegative so
    /// both coefficients stay continuous up to the degenerate endpoint.
    pub fn power_law(a_exponent: f64, b_amplitude: f64, b_exponent: f64) -> Result<Self> {
        if !a_exponent.is_finite() || a_exponent < 0.0 {
            return Err(Error::Domain(format!(
                "a_exponent must be finite and >= 0, got {a_exponent}"
            )));
        }
        if !b_exponent.is_finite() || b_exponent < 0.0 {
            return Err(Error::Domain(format!(
                "b_exponent must be finite and >= 0, got {b_exponent}"
            )));
        }
        if !b_amplitude.is_finite() {
            return Err(Error::Domain("b_amplitude must be finite".into()));
        }
        Ok(CoefficientModel::PowerLaw {
            a_exponent,
            b_amplitude,
            b_exponent,
        })
    }

    /// Tabulated coefficients on a strictly increasing grid spanning \[0,1\].
    /// a must be positive away from 0 and nonnegative at 0. Values between
    /// samples are linearly interpolated.
    pub fn sampled(x: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if x.len() != a.len() || x.len() != b.len() {
            return Err(Error::Domain(format!(
                "sample arrays must have equal length: x={}, a={}, b={}",
                x.len(),
                a.len(),
                b.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::Domain("need at least two samples".into()));
        }
        if (x[0] - 0.0).abs() > 1e-14 || (x[x.len() - 1] - 1.0).abs() > 1e-14 {
            return Err(Error::Domain("sample grid must span [0,1]".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(
                "sample grid must be strictly increasing".into(),
            ));
        }
        if a[0] < 0.0 || a.iter().skip(1).any(|&v| v <= 0.0) {
            return Err(Error::Domain(
                "a must be nonnegative at 0 and positive on (0,1]".into(),
            ));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("coefficient samples must be finite".into()));
        }
        Ok(CoefficientModel::Sampled { x, a, b })
    }

    /// a(x) by closed form or linear interpolation.
    pub fn a(&self, x: f64) -> f64 {
        match self {
            CoefficientModel::PowerLaw { a_exponent, .. } => powx(x, *a_exponent),
            CoefficientModel::Sampled { x: xs, a, .. } => interp(xs, a, x),
        }
    }

    /// b(x) by closed form or linear interpolation.
    pub fn b(&self, x: f64) -> f64 {
        match self {
            CoefficientModel::PowerLaw {
                b_amplitude,
                b_exponent,
                ..
            } => b_amplitude * powx(x, *b_exponent),
            CoefficientModel::Sampled { x: xs, b, .. } => interp(xs, b, x),
        }
    }
}

fn powx(x: f64, p: f64) -> f64 {
    // 0^0 = 1 by continuity of the constant-coefficient family.
    if p == 0.0 {
        1.0
    } else {
        x.powf(p)
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => return ys[i],
        Err(i) => i,
    };
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

/// ∫ of the piecewise-linear interpolant of b/a over [lo, hi] ⊂ (0,1].
/// Exact trapezoid over the sample breakpoints, with partial end cells.
fn drift_integral_sampled(xs: &[f64], a: &[f64], b: &[f64], lo: f64, hi: f64) -> f64 {
    debug_assert!(lo > 0.0 && hi <= 1.0);
    if (hi - lo).abs() < f64::EPSILON {
        return 0.0;
    }
    let (lo, hi, sign) = if lo <= hi {
        (lo, hi, 1.0)
    } else {
        (hi, lo, -1.0)
    };
    let ratio = |x: f64| interp(xs, b, x) / interp(xs, a, x);
    // Breakpoints of the interpolant inside (lo, hi).
    let mut prev_x = lo;
    let mut prev_r = ratio(lo);
    let mut acc = 0.0;
    for (&x, (&av, &bv)) in xs.iter().zip(a.iter().zip(b.iter())) {
        if x <= lo {
            continue;
        }
        if x >= hi {
            break;
        }
        let r = bv / av;
        acc += 0.5 * (prev_r + r) * (x - prev_x);
        prev_x = x;
        prev_r = r;
    }
    let r_hi = ratio(hi);
    acc += 0.5 * (prev_r + r_hi) * (hi - prev_x);
    sign * acc
}

/// η(x) = exp(∫_{1/2}^x b/a).
fn eta_at(model: &CoefficientModel, x: f64) -> f64 {
    match model {
        CoefficientModel::PowerLaw {
            a_exponent,
            b_amplitude,
            b_exponent,
        } => {
            if *b_amplitude == 0.0 {
                return 1.0;
            }
            let s = b_exponent - a_exponent + 1.0;
            if s.abs() < 1e-14 {
                // ∫ c_b/x = c_b ln(2x); only reachable through the
                // non-integrable guard, kept for completeness.
                (2.0 * x).powf(*b_amplitude)
            } else {
                (b_amplitude * (x.powf(s) - 0.5_f64.powf(s)) / s).exp()
            }
        }
        CoefficientModel::Sampled { x: xs, a, b } => drift_integral_sampled(xs, a, b, 0.5, x).exp(),
    }
}

/// Whether b/a is (numerically) integrable near x = 0.
///
/// Sampled models are scanned over dyadic windows [2^{-j-1}, 2^{-j}]: the
/// window masses of an integrable ratio decay geometrically toward 0, while
/// a critical or supercritical ratio keeps them level or growing.
pub fn drift_integrable(model: &CoefficientModel) -> bool {
    match model {
        CoefficientModel::PowerLaw {
            a_exponent,
            b_amplitude,
            b_exponent,
        } => *b_amplitude == 0.0 || b_exponent - a_exponent > -1.0,
        CoefficientModel::Sampled { x: xs, a, b } => {
            let mut masses = Vec::new();
            let mut hi = 0.5;
            // Scan down to the resolution limit of the sample grid.
            let floor = xs[1].clamp(1e-300, 1e-12);
            while hi / 2.0 >= floor && masses.len() < 60 {
                let lo = hi / 2.0;
                masses.push(drift_integral_sampled(xs, a, b, lo, hi).abs());
                hi = lo;
            }
            if masses.len() < 3 {
                return true;
            }
            // Median ratio of consecutive window masses over the deepest
            // windows; geometric decay (< 0.95) counts as integrable.
            let tail = &masses[masses.len().saturating_sub(6)..];
            let mut ratios: Vec<f64> = tail
                .windows(2)
                .map(|w| if w[0] > 1e-300 { w[1] / w[0] } else { 0.0 })
                .collect();
            ratios.sort_by(|p, q| p.partial_cmp(q).unwrap());
            ratios[ratios.len() / 2] < 0.95
        }
    }
}

/// Evaluate (a, b, η, σ) at x ∈ (0,1].
///
/// Requires integrable drift (so η extends continuously to 0); the
/// degenerate endpoint itself is excluded because σ may vanish there.
pub fn eval_weights(model: &CoefficientModel, x: f64) -> Result<Weights> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain(format!("x must lie in (0,1], got {x}")));
    }
    if !drift_integrable(model) {
        return Err(Error::NonIntegrableDrift(
            "quadrature of b/a diverges near x = 0".into(),
        ));
    }
    Ok(eval_weights_unchecked(model, x))
}

/// Weight evaluation without the per-call integrability scan. Callers must
/// have verified `drift_integrable` once and pass x ∈ (0,1].
pub(crate) fn eval_weights_unchecked(model: &CoefficientModel, x: f64) -> Weights {
    let a = model.a(x);
    let b = model.b(x);
    let eta = eta_at(model, x);
    Weights {
        a,
        b,
        eta,
        sigma: a / eta,
    }
}

/// Log-graded evaluation grid on (x_min, 1], clustered at the degenerate end.
fn log_grid(x_min: f64, n: usize) -> Vec<f64> {
    let lg_min = x_min.log10();
    (0..n)
        .map(|i| 10f64.powf(lg_min * (1.0 - i as f64 / (n - 1) as f64)))
        .collect()
}

/// Supremum of |f| over (0,1] by log-graded grid evaluation, refined
/// (grid doubled) until the change is below `SUP_REFINE_TOL` relatively.
fn grid_sup(f: impl Fn(f64) -> f64, x_min: f64) -> f64 {
    let mut n = SUP_GRID_BASE;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..5 {
        let sup = log_grid(x_min, n)
            .iter()
            .map(|&x| f(x).abs())
            .fold(f64::NEG_INFINITY, f64::max);
        if best.is_finite() && (sup - best).abs() <= SUP_REFINE_TOL * sup.abs().max(1.0) {
            return sup.max(best);
        }
        best = best.max(sup);
        n *= 2;
    }
    best
}

/// Finite-difference derivative samples of a sampled model's a-array:
/// centered differences in the interior, one-sided at the ends.
fn fd_derivative(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut d = vec![0.0; n];
    d[0] = (ys[1] - ys[0]) / (xs[1] - xs[0]);
    d[n - 1] = (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]);
    for i in 1..n - 1 {
        d[i] = (ys[i + 1] - ys[i - 1]) / (xs[i + 1] - xs[i - 1]);
    }
    d
}

/// K_a, class, M₁, M₂.
///
/// Power-law models use closed forms: K_a = p exactly, and since
/// x(a′−b)/a = p − c_b·x^{q−p+1} and x·b/a = c_b·x^{q−p+1} are monotone in x
/// whenever q − p + 1 > 0, the suprema sit at the interval ends:
/// M₁ = max(p, |p − c_b|), M₂ = |c_b|. When q − p + 1 < 0 both drift
/// functionals are unbounded. Sampled models use refined grid maximization
/// with finite-difference derivatives (at least 8 samples required).
pub fn characterize(model: &CoefficientModel) -> Result<CoefficientReport> {
    match model {
        CoefficientModel::PowerLaw {
            a_exponent: p,
            b_amplitude: c_b,
            b_exponent: q,
        } => {
            let k_a = *p;
            let (m1, m2) = if *c_b == 0.0 {
                (*p, 0.0)
            } else {
                let s = q - p + 1.0;
                if s > 0.0 {
                    (p.max((p - c_b).abs()), c_b.abs())
                } else if s == 0.0 {
                    ((p - c_b).abs(), c_b.abs())
                } else {
                    (f64::INFINITY, f64::INFINITY)
                }
            };
            Ok(CoefficientReport {
                degeneracy: k_a,
                class: DegeneracyClass::from_k_a(k_a),
                drift_m1: m1,
                drift_m2: m2,
            })
        }
        CoefficientModel::Sampled { x: xs, a, b } => {
            if xs.len() < MIN_SAMPLES {
                return Err(Error::NonDifferentiable(format!(
                    "sampled model has {} points, need at least {MIN_SAMPLES}",
                    xs.len()
                )));
            }
            let da = fd_derivative(xs, a);
            // The ratio functionals are evaluated at the sample nodes
            // (x > 0), where the finite-difference derivative is meaningful;
            // evaluating between nodes near the degenerate end would measure
            // interpolation error of the ratio, not the data.
            let node_sup = |f: &dyn Fn(usize) -> f64| {
                (1..xs.len())
                    .map(|i| f(i).abs())
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let k_a = node_sup(&|i| xs[i] * da[i] / a[i]);
            let m1 = node_sup(&|i| xs[i] * (da[i] - b[i]) / a[i]);
            let m2 = node_sup(&|i| xs[i] * b[i] / a[i]);
            Ok(CoefficientReport {
                degeneracy: k_a,
                class: DegeneracyClass::from_k_a(k_a),
                drift_m1: m1,
                drift_m2: m2,
            })
        }
    }
}

/// Full hypothesis check: integrability of the drift ratio plus the drift
/// smallness condition M₁ < 1 + K_a/2, M₂ < 1 − K_a/2. For power-law models
/// the equivalent closed-form criterion is reported alongside.
pub fn check_hypotheses(model: &CoefficientModel) -> Result<HypothesisReport> {
    let coefficients = characterize(model)?;
    let integrable = drift_integrable(model);
    let k_a = coefficients.degeneracy;
    let condition1_holds = integrable
        && coefficients.drift_m1 < 1.0 + 0.5 * k_a
        && coefficients.drift_m2 < 1.0 - 0.5 * k_a;
    let power_law_criterion = match model {
        CoefficientModel::PowerLaw {
            a_exponent: p,
            b_amplitude: c_b,
            b_exponent: q,
        } => {
            if *c_b == 0.0 {
                Some(*p < 2.0)
            } else {
                Some(p - q < 1.0 && c_b.abs() < 1.0 - 0.5 * p)
            }
        }
        CoefficientModel::Sampled { .. } => None,
    };
    Ok(HypothesisReport {
        coefficients,
        b_over_a_integrable: integrable,
        condition1_holds,
        power_law_criterion,
    })
}

/// Hardy-Poincaré constant
///
///   C_HP(β) = (4/a(1) + max over \[β,1\] of (1/a) · C_P) · max over \[0,1\] of η,
///
/// with C_P the unit-interval Poincaré constant, valid for every β ∈ (0,1).
/// With `beta = None` the constant is minimized over a 32-point logarithmic
/// β grid. The discrete inequality Σ(u²/σ)w ≤ C_HP·Σ(u_x²)w for mesh
/// functions with u(0) = 0 is exercised in the test suite.
pub fn hardy_poincare_constant(model: &CoefficientModel, beta: Option<f64>) -> Result<f64> {
    if let Some(b) = beta {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::Domain(format!("beta must lie in (0,1), got {b}")));
        }
    }
    if !drift_integrable(model) {
        return Err(Error::NonIntegrableDrift(
            "eta is unbounded or degenerate when b/a is not integrable".into(),
        ));
    }
    let a1 = model.a(1.0);
    if a1 <= 0.0 {
        return Err(Error::Domain("a(1) must be positive".into()));
    }
    let x_min = match model {
        CoefficientModel::PowerLaw { .. } => 1e-9,
        CoefficientModel::Sampled { x, .. } => x[1],
    };
    let max_eta = grid_sup(|x| eta_at(model, x), x_min).max(eta_at(model, x_min).abs());
    let max_inv_a = |b: f64| {
        // 1/a on [β,1]; the maximization grid is linear since the interval
        // stays away from the degenerate endpoint.
        let n = 512;
        (0..=n)
            .map(|i| b + (1.0 - b) * i as f64 / n as f64)
            .map(|x| 1.0 / model.a(x))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let constant = |b: f64| (4.0 / a1 + max_inv_a(b) * POINCARE_UNIT_INTERVAL) * max_eta;
    match beta {
        Some(b) => Ok(constant(b)),
        None => {
            let lg_lo = -4.0;
            let lg_hi = (0.98_f64).log10();
            Ok((0..32)
                .map(|i| 10f64.powf(lg_lo + (lg_hi - lg_lo) * i as f64 / 31.0))
                .map(constant)
                .fold(f64::INFINITY, f64::min))
        }
    }
}
