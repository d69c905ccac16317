//! Memory kernel for the heat component and its truncated history grid.
//!
//! The thermal flux carries a fading-memory term ∫₀^∞ μ(s)·γ(·,s) ds over the
//! summed-past temperature γ. This module implements the normalized
//! exponential family
//!
//!   μ(s) = k²·e^{-ks},   g(s) = ∫_s^∞ μ = k·e^{-ks},   ∫₀^∞ s·μ(s) ds = 1,
//!
//! which satisfies every structural hypothesis the analysis needs: μ ≥ 0,
//! μ′ ≤ 0, and the decay gap μ′ + kμ = 0. The frequency response of the
//! memory term is the dissipation symbol
//!
//!   N(λ) = 2∫₀^∞ μ(s)(1 − cos λs) ds = 2kλ²/(k² + λ²),
//!
//! which is positive for λ ≠ 0 and bounded by 2g(0); its decay as k/λ² → 0
//! never vanishes, which is what rules out purely imaginary spectrum.
//!
//! For simulation the half-line history is truncated at s_max and sampled on
//! a uniform grid. Node weights are exact hat-function moments of μ — the
//! weight of node j is ∫ μ(s)·φ_j(s) ds with φ_j the piecewise-linear hat —
//! so the partition-of-unity identity Σ_j w_j = g(0) − g(s_max) holds to
//! machine precision, and consecutive interior weights satisfy
//! w_{j+1} = e^{-kδ}·w_j exactly, making the sequence monotone decreasing.
//! Monotonicity is what makes the upwind transport in the history variable
//! dissipative, so it is a hard invariant here, not a nicety.

use serde::Serialize;

use crate::{Error, Result};

/// Hard floor on the truncation horizon, in units of memory half-lives.
const MIN_HORIZON_RATE_PRODUCT: f64 = 5.0;

/// Exponential memory kernel μ(s) = k²·e^{-ks}, normalized to unit first
/// moment.
#[derive(Debug, Clone, Copy)]
pub struct MemoryKernel {
    rate: f64,
}

/// Structural summary of a kernel.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KernelReport {
    /// Decay rate k.
    pub rate: f64,
    /// g(0) = ∫₀^∞ μ, the instantaneous memory weight.
    pub g0: f64,
    /// ∫₀^∞ s·μ(s) ds; 1 for this normalized family.
    pub first_moment: f64,
    /// Largest κ with μ′ + κμ ≤ 0; equals k for the exponential family.
    pub decay_gap: f64,
}

/// Truncated uniform history grid with exact hat-function quadrature
/// weights for μ.
#[derive(Debug, Clone)]
pub struct HistoryGrid {
    /// Nodes s_0 = 0, …, s_N = s_max (N+1 entries for N slices).
    pub s: Vec<f64>,
    /// Node weights w_j = ∫ μ·φ_j; same length as `s`. The history unknowns
    /// live on nodes 1..=N (the node at s = 0 carries the boundary value 0),
    /// so assembly consumes `weights[1..]`.
    pub weights: Vec<f64>,
    /// Truncation horizon.
    pub s_max: f64,
    /// Discarded mass g(s_max) = g(0) − Σ_j w_j, exact.
    pub tail_mass: f64,
    /// Grid spacing s_max / N.
    pub delta: f64,
}

impl MemoryKernel {
    /// Exponential kernel with decay rate k > 0.
    pub fn exponential(rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::Domain(format!(
                "kernel rate must be finite and positive, got {rate}"
            )));
        }
        Ok(MemoryKernel { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// μ(s) = k²·e^{-ks}.
    pub fn mu(&self, s: f64) -> f64 {
        let k = self.rate;
        k * k * (-k * s).exp()
    }

    /// Tail mass g(s) = ∫_s^∞ μ = k·e^{-ks}.
    pub fn g(&self, s: f64) -> f64 {
        self.rate * (-self.rate * s).exp()
    }

    /// g(0) = k.
    pub fn g0(&self) -> f64 {
        self.rate
    }

    /// Largest κ with μ′ + κμ ≤ 0 (here μ′ = -kμ exactly).
    pub fn decay_gap(&self) -> f64 {
        self.rate
    }

    /// Dissipation symbol N(λ) = 2∫₀^∞ μ(s)(1 − cos λs) ds, closed form
    /// 2kλ²/(k² + λ²).
    pub fn dissipation_symbol(&self, lambda: f64) -> f64 {
        let k = self.rate;
        2.0 * k * lambda * lambda / (k * k + lambda * lambda)
    }

    /// Dissipation symbol by adaptive quadrature of the defining integral,
    /// truncated where the integrand tail is below `tol`/10. Independent of
    /// the closed form; intended for cross-validation.
    pub fn dissipation_symbol_quadrature(&self, lambda: f64, tol: f64) -> f64 {
        let k = self.rate;
        // Tail bound: 2∫_S^∞ μ(1 − cos) ≤ 4∫_S^∞ μ = 4k·e^{-kS}.
        let s_cut = ((40.0 * k / tol).ln() / k).max(1.0 / k);
        let f = |s: f64| 2.0 * self.mu(s) * (1.0 - (lambda * s).cos());
        adaptive_simpson(&f, 0.0, s_cut, tol / 10.0)
    }

    /// Structural report for hypothesis output.
    pub fn report(&self) -> KernelReport {
        KernelReport {
            rate: self.rate,
            g0: self.g0(),
            first_moment: 1.0,
            decay_gap: self.decay_gap(),
        }
    }

    /// Truncate the history at s_max = max(ln(k/ε)/k, 5/k) and build `nodes`
    /// uniform slices with exact hat-moment weights.
    ///
    /// The horizon makes the discarded mass g(s_max) ≤ ε while never using
    /// fewer than five memory half-lives.
    pub fn truncate(&self, nodes: usize, eps_tail: f64) -> Result<HistoryGrid> {
        if nodes < 2 {
            return Err(Error::Domain(format!(
                "history grid needs at least 2 slices, got {nodes}"
            )));
        }
        if !(eps_tail > 0.0 && eps_tail < 1.0) {
            return Err(Error::Domain(format!(
                "eps_tail must lie in (0,1), got {eps_tail}"
            )));
        }
        let k = self.rate;
        let s_max = ((k / eps_tail).ln() / k).max(MIN_HORIZON_RATE_PRODUCT / k);
        let delta = s_max / nodes as f64;
        let s: Vec<f64> = (0..=nodes).map(|j| j as f64 * delta).collect();

        // Exact μ-moments of each cell [s_j, s_{j+1}]:
        //   m0 = ∫ μ,  m1 = ∫ s·μ,
        // split onto the two endpoint hats:
        //   A_j = (s_{j+1}·m0 − m1)/δ (left node),
        //   B_j = (m1 − s_j·m0)/δ (right node).
        let mu0 = k * k;
        let e: Vec<f64> = s.iter().map(|&sj| (-k * sj).exp()).collect();
        let mut weights = vec![0.0; nodes + 1];
        for j in 0..nodes {
            let de = e[j] - e[j + 1];
            let m0 = mu0 / k * de;
            let m1 = mu0 / k * (s[j] * e[j] - s[j + 1] * e[j + 1]) + mu0 / (k * k) * de;
            weights[j] += (s[j + 1] * m0 - m1) / delta;
            weights[j + 1] += (m1 - s[j] * m0) / delta;
        }

        Ok(HistoryGrid {
            s,
            weights,
            s_max,
            tail_mass: self.g(s_max),
            delta,
        })
    }
}

/// Adaptive Simpson quadrature with a fixed depth cap.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, right, tol / 2.0, depth - 1)
        }
    }
    recurse(f, lo, hi, simpson(f, lo, hi), tol, 48)
}
