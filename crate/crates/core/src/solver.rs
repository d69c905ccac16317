//! Structured solves of the shifted systems (zI − A)x = b and (zI − Aᵀ)x = b.
//!
//! The generator has a layered structure that makes every shifted solve an
//! O(n) operation instead of a generic sparse factorization:
//!
//! 1. **History elimination.** The transport rows couple slice k only to
//!    slice k−1 (forward) or k+1 (adjoint) and to the temperature, so each
//!    slice satisfies the scalar recursion
//!    xγ^k = r·xγ^{k∓1} + β·(source) with β = 1/(z + 1/δ), r = 1/(1 + zδ),
//!    whose closed form splits into a temperature-proportional part P_k and
//!    a data part Q^k. The kernel-weighted sums Σ_k w_k xγ^k collapse into
//!    an effective complex conductivity ĉ = c(1−m) + c·m·Σ_k w_k P_k plus a
//!    known source.
//! 2. **Displacement elimination.** The u-rows give xu = (bu + xv)/z, so the
//!    velocity rows close over xv alone.
//!
//! What remains is a tridiagonal system over (v interior, shared trace,
//! y interior), solved by LU with partial pivoting. Both eliminations
//! require z ≠ 0; the z = 0 resolvent goes through the dense path instead.
//!
//! The same factorization object serves Crank–Nicolson stepping (real
//! z = 2/Δt, reused every step) and resolvent applies (z = iλ, reused for
//! every Lanczos iteration), including adjoint applies for the latter.

use crate::discretization::{re, Field, GeneratorSystem};
use crate::{Error, Result};

/// Smallest |z| accepted by the structured elimination.
const MIN_SHIFT: f64 = 1e-10;

/// Tridiagonal LU factorization with partial pivoting (one fill-in band).
#[derive(Debug, Clone)]
pub(crate) struct TridiagLU<T> {
    /// Elimination multipliers.
    low: Vec<T>,
    /// Row-swap flags per elimination step.
    swapped: Vec<bool>,
    /// Upper factor bands: main, first, and second superdiagonal.
    u0: Vec<T>,
    u1: Vec<T>,
    u2: Vec<T>,
}

impl<T: Field> TridiagLU<T> {
    /// Factor the tridiagonal matrix with bands (sub, diag, sup).
    pub fn factor(sub: &[T], diag: &[T], sup: &[T]) -> Result<Self> {
        let n = diag.len();
        assert!(n >= 1 && sub.len() == n - 1 && sup.len() == n - 1);
        let mut u0 = diag.to_vec();
        let mut u1 = sup.to_vec();
        u1.push(T::zero());
        let mut u2 = vec![T::zero(); n];
        let mut low = vec![T::zero(); n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        // Row i+1 during step i: [a at col i, b at col i+1, c at col i+2].
        for i in 0..n - 1 {
            let mut a = sub[i];
            let mut b = u0[i + 1];
            let mut c = u1[i + 1];
            if a.abs() > u0[i].abs() {
                swapped[i] = true;
                std::mem::swap(&mut a, &mut u0[i]);
                std::mem::swap(&mut b, &mut u1[i]);
                std::mem::swap(&mut c, &mut u2[i]);
            }
            if u0[i].abs() == 0.0 {
                return Err(Error::NearSingular(format!(
                    "zero pivot in reduced tridiagonal system at row {i}"
                )));
            }
            let m = a / u0[i];
            low[i] = m;
            u0[i + 1] = b - m * u1[i];
            u1[i + 1] = c - m * u2[i];
        }
        if u0[n - 1].abs() == 0.0 {
            return Err(Error::NearSingular(
                "zero pivot in reduced tridiagonal system at last row".into(),
            ));
        }
        Ok(TridiagLU {
            low,
            swapped,
            u0,
            u1,
            u2,
        })
    }

    /// Solve in place.
    pub fn solve(&self, rhs: &mut [T]) {
        let n = self.u0.len();
        assert_eq!(rhs.len(), n);
        for i in 0..n - 1 {
            if self.swapped[i] {
                rhs.swap(i, i + 1);
            }
            let update = rhs[i] * self.low[i];
            rhs[i + 1] = rhs[i + 1] - update;
        }
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            if i + 1 < n {
                acc = acc - self.u1[i] * rhs[i + 1];
            }
            if i + 2 < n {
                acc = acc - self.u2[i] * rhs[i + 2];
            }
            rhs[i] = acc / self.u0[i];
        }
    }
}

/// Cached factorization of (zI − A) or (zI − Aᵀ) for one shift.
#[derive(Debug, Clone)]
pub(crate) struct ShiftedFactor<T> {
    z: T,
    adjoint: bool,
    lu: TridiagLU<T>,
    /// History recursion constants (empty when no memory).
    beta: T,
    r: T,
    /// Temperature-proportionality per slice: P_k (forward) or P̃_k (adjoint).
    p: Vec<T>,
}

impl GeneratorSystem {
    /// Precompute the structured factorization for one shift z.
    pub(crate) fn shifted_factor<T: Field>(&self, z: T, adjoint: bool) -> Result<ShiftedFactor<T>> {
        if z.abs() < MIN_SHIFT {
            return Err(Error::NearSingular(format!(
                "structured elimination needs |z| >= {MIN_SHIFT}, got {}",
                z.abs()
            )));
        }
        let ns = self.n_slices;
        let (beta, r, p, chat) = if ns > 0 {
            let pole = z + re::<T>(1.0 / self.delta);
            if pole.abs() < MIN_SHIFT {
                return Err(Error::NearSingular(
                    "shift collides with the history transport pole -1/delta".into(),
                ));
            }
            let beta = T::one() / pole;
            let r = beta * re::<T>(1.0 / self.delta);
            let mut p = vec![T::zero(); ns];
            let chat;
            if !adjoint {
                // P_k = β + r·P_{k−1};  ĉ = c(1−m) + c·m Σ w_k P_k.
                let mut acc = T::zero();
                let mut wp = T::zero();
                for (pk, &wk) in p.iter_mut().zip(&self.w_hist) {
                    acc = beta + r * acc;
                    *pk = acc;
                    wp = wp + acc * re::<T>(wk);
                }
                chat = re::<T>(self.c_inst) + re::<T>(self.c_mem) * wp;
            } else {
                // S_k = w_k + r·S_{k+1};  P̃_k = c·m·β·S_k;  c̃ = c(1−m) + Σ P̃_k.
                let mut s = T::zero();
                let mut total = T::zero();
                for k in (0..ns).rev() {
                    s = re::<T>(self.w_hist[k]) + r * s;
                    p[k] = re::<T>(self.c_mem) * beta * s;
                    total = total + p[k];
                }
                chat = re::<T>(self.c_inst) + total;
            }
            (beta, r, p, chat)
        } else {
            (T::zero(), T::zero(), Vec::new(), re::<T>(self.c_inst))
        };

        let lu = self.reduced_tridiag(z, chat, adjoint)?;
        Ok(ShiftedFactor {
            z,
            adjoint,
            lu,
            beta,
            r,
            p,
        })
    }

    /// Assemble and factor the reduced tridiagonal over
    /// (v_1..v_{Nw−1}, s, y_1..y_{Nh−1}).
    fn reduced_tridiag<T: Field>(&self, z: T, chat: T, adjoint: bool) -> Result<TridiagLU<T>> {
        let nw = self.n_wave;
        let nh = self.n_heat;
        let h = self.h_heat;
        let n_red = nw + nh - 1;
        let zinv = T::one() / z;
        // Wave coupling constants κ_i = η_i/h_i (1-based cells).
        let kap = |i: usize| self.eta_mid[i - 1] / self.h_wave[i - 1];
        let mv = |j: usize| self.v_mass[j - 1];
        let ms = mv(nw);

        let mut diag = vec![T::zero(); n_red];
        let mut sub = vec![T::zero(); n_red - 1];
        let mut sup = vec![T::zero(); n_red - 1];

        // Velocity rows (identical diagonals in both orientations).
        for j in 1..nw {
            let idx = j - 1;
            diag[idx] = z + zinv * re::<T>((kap(j) + kap(j + 1)) / mv(j));
            if !adjoint {
                if j >= 2 {
                    sub[idx - 1] = -(zinv * re::<T>(kap(j) / mv(j)));
                }
                sup[idx] = -(zinv * re::<T>(kap(j + 1) / mv(j)));
            } else {
                if j >= 2 {
                    sub[idx - 1] = -(zinv * re::<T>(kap(j) / mv(j - 1)));
                }
                let m_next = if j + 1 < nw { mv(j + 1) } else { ms };
                sup[idx] = -(zinv * re::<T>(kap(j + 1) / m_next));
            }
        }
        // Shared-trace row.
        let idx_s = nw - 1;
        diag[idx_s] = z + zinv * re::<T>(kap(nw) / ms) + chat * re::<T>(1.0 / (h * ms));
        if !adjoint {
            sub[idx_s - 1] = -(zinv * re::<T>(kap(nw) / ms));
            sup[idx_s] = -(chat * re::<T>(1.0 / (h * ms)));
        } else {
            sub[idx_s - 1] = -(zinv * re::<T>(kap(nw) / mv(nw - 1)));
            sup[idx_s] = -(chat * re::<T>(1.0 / (h * h)));
        }
        // Temperature rows.
        for j in 1..nh {
            let idx = nw - 1 + j;
            diag[idx] = z + chat * re::<T>(2.0 / (h * h));
            let coupling = chat * re::<T>(1.0 / (h * h));
            sub[idx - 1] = if j == 1 {
                if !adjoint {
                    // Forward y_1 row sees the trace through the Laplacian.
                    -coupling
                } else {
                    -(chat * re::<T>(1.0 / (h * ms)))
                }
            } else {
                -coupling
            };
            if j < nh - 1 {
                sup[idx] = -coupling;
            }
        }
        TridiagLU::factor(&sub, &diag, &sup)
    }

    /// Solve (zI − A)x = b (or the transpose) using a cached factorization.
    /// O(n).
    pub(crate) fn shifted_solve<T: Field>(
        &self,
        f: &ShiftedFactor<T>,
        b: &[T],
        x: &mut [T],
    ) -> Result<()> {
        assert_eq!(b.len(), self.dim());
        assert_eq!(x.len(), self.dim());
        let nw = self.n_wave;
        let nh = self.n_heat;
        let ns = self.n_slices;
        let h = self.h_heat;
        let ms = self.v_mass[nw - 1];
        let z = f.z;
        let zinv = T::one() / z;
        let kap = |i: usize| self.eta_mid[i - 1] / self.h_wave[i - 1];

        // History data sweep: Q^k (forward, k ascending) or Q̃^k (adjoint,
        // k descending) stored into the γ-slots of x; the kernel-weighted
        // sums land in r_sum (forward: R_j = Σ w_k Q^k_j; adjoint:
        // R̃_j = Σ_k Q̃^k_j).
        let mut r_sum = vec![T::zero(); nh];
        if ns > 0 {
            if !f.adjoint {
                for k in 0..ns {
                    let o = self.off_g + k * nh;
                    let prev = if k > 0 { self.off_g + (k - 1) * nh } else { 0 };
                    let w = re::<T>(self.w_hist[k]);
                    for j in 0..nh {
                        let prior = if k > 0 { x[prev + j] } else { T::zero() };
                        let q = f.r * prior + f.beta * b[o + j];
                        x[o + j] = q;
                        r_sum[j] = r_sum[j] + w * q;
                    }
                }
            } else {
                for k in (0..ns).rev() {
                    let o = self.off_g + k * nh;
                    let next = self.off_g + (k + 1) * nh;
                    for j in 0..nh {
                        let later = if k + 1 < ns { x[next + j] } else { T::zero() };
                        let q = f.r * later + f.beta * b[o + j];
                        x[o + j] = q;
                        r_sum[j] = r_sum[j] + q;
                    }
                }
            }
        }

        // Reduced right-hand side.
        let n_red = nw + nh - 1;
        let mut rhs = vec![T::zero(); n_red];
        if !f.adjoint {
            // Wave fluxes of bu.
            let gb = |i: usize| {
                let u_r = b[i - 1];
                let u_l = if i >= 2 { b[i - 2] } else { T::zero() };
                (u_r - u_l) * re::<T>(kap(i))
            };
            for j in 1..nw {
                let wbu = (gb(j + 1) - gb(j)) * re::<T>(1.0 / self.v_mass[j - 1]);
                rhs[j - 1] = b[self.off_v + j - 1] + zinv * wbu;
            }
            let r1 = if nh >= 2 { r_sum[1] } else { T::zero() };
            rhs[nw - 1] = b[self.off_v + nw - 1] - zinv * gb(nw) * re::<T>(1.0 / ms)
                + (r1 - r_sum[0]) * re::<T>(self.c_mem / (h * ms));
            for j in 1..nh {
                let r_next = if j + 1 < nh { r_sum[j + 1] } else { T::zero() };
                let lap = r_next - r_sum[j] - r_sum[j] + r_sum[j - 1];
                rhs[nw - 1 + j] = b[self.off_y + j - 1] + lap * re::<T>(self.c_mem / (h * h));
            }
        } else {
            for j in 1..nw {
                rhs[j - 1] = b[self.off_v + j - 1] + zinv * b[j - 1];
            }
            rhs[nw - 1] = b[self.off_v + nw - 1] + zinv * b[nw - 1] + r_sum[0];
            for j in 1..nh {
                rhs[nw - 1 + j] = b[self.off_y + j - 1] + r_sum[j];
            }
        }

        f.lu.solve(&mut rhs);

        // Scatter the reduced solution.
        for j in 0..nw {
            x[self.off_v + j] = rhs[j];
        }
        for j in 1..nh {
            x[self.off_y + j - 1] = rhs[nw - 1 + j];
        }
        let xs = rhs[nw - 1];

        // Displacement back-substitution.
        if !f.adjoint {
            for j in 0..nw {
                x[j] = (b[j] + x[self.off_v + j]) * zinv;
            }
        } else {
            // xu = (bu + Wᵀ xv)/z, where column j of W collects how the
            // velocity rows reference u_j: row j−1 via +κ_j/mv_{j−1},
            // row j via −(κ_j+κ_{j+1})/mv_j (shared: −κ_nw/ms), and
            // row j+1 via +κ_{j+1}/mv_{j+1} (shared: +κ_nw/ms).
            let mut wtxv = vec![T::zero(); nw];
            for j in 1..=nw {
                let mut wt = T::zero();
                if j >= 2 {
                    wt = wt + x[self.off_v + j - 2] * re::<T>(kap(j) / self.v_mass[j - 2]);
                }
                let own = if j < nw {
                    -((kap(j) + kap(j + 1)) / self.v_mass[j - 1])
                } else {
                    -(kap(nw) / ms)
                };
                wt = wt + x[self.off_v + j - 1] * re::<T>(own);
                if j < nw {
                    let coeff = if j + 1 < nw {
                        kap(j + 1) / self.v_mass[j]
                    } else {
                        kap(nw) / ms
                    };
                    wt = wt + x[self.off_v + j] * re::<T>(coeff);
                }
                wtxv[j - 1] = wt;
            }
            for j in 0..nw {
                x[j] = (b[j] + wtxv[j]) * zinv;
            }
        }

        // History reconstruction.
        if ns > 0 {
            if !f.adjoint {
                for k in 0..ns {
                    let o = self.off_g + k * nh;
                    let pk = f.p[k];
                    for j in 0..nh {
                        let y = if j == 0 { xs } else { x[self.off_y + j - 1] };
                        x[o + j] = pk * y + x[o + j];
                    }
                }
            } else {
                // t_j: how the trace and temperature rows sense one unit of
                // heat flux potential ζ at node j (per c·m·w_k). ζ_0 feeds
                // the trace row (−1/(h·ms)) and ẏ_1 (+1/h²); ζ_1 feeds the
                // trace row (+1/(h·ms)) and the Laplacian rows; interior ζ_j
                // feeds the Laplacian stencil only.
                let mut yv = vec![T::zero(); nh + 1];
                for j in 1..nh {
                    yv[j] = x[self.off_y + j - 1];
                }
                let inv_h2 = re::<T>(1.0 / (h * h));
                let mut t = vec![T::zero(); nh];
                t[0] = -(xs * re::<T>(1.0 / (h * ms))) + yv[1] * inv_h2;
                for j in 1..nh {
                    let left = if j >= 2 { yv[j - 1] } else { T::zero() };
                    let mut val = (left + yv[j + 1] - yv[j] - yv[j]) * inv_h2;
                    if j == 1 {
                        val = val + xs * re::<T>(1.0 / (h * ms));
                    }
                    t[j] = val;
                }
                for k in 0..ns {
                    let o = self.off_g + k * nh;
                    let pk = f.p[k];
                    for j in 0..nh {
                        x[o + j] = pk * t[j] + x[o + j];
                    }
                }
            }
        }
        Ok(())
    }
}
