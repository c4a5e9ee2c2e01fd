//! Riemann zeta and the lattice sums c_α = Σ_{y≠0} |y|^{-α}.
//!
//! All sums carry an explicit error bound. The ℓ₁ and ℓ∞ sums reduce exactly to
//! finite combinations of zeta values because the number of lattice points on a
//! norm shell is a polynomial in the shell radius. The ℓ₂ sum is split into rows
//! along the last axis: near rows are summed exactly (binomial expansion into
//! Hurwitz tails), far rows are replaced by their integral, whose error is
//! exponentially small by the strip bound for the trapezoid rule.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::InteractionError;
use crate::lattice::Norm;

/// A numerically evaluated series with a bound on its truncation error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSum {
    pub value: f64,
    pub error_bound: f64,
}

// B_2, B_4, ..., B_22
const BERNOULLI: [f64; 11] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
];

const EM_START: u64 = 16;
const EM_TERMS: usize = 10;

/// Σ_{n ≥ start} n^{-t} for t > 1, start ≥ 1 (Euler–Maclaurin).
pub fn zeta_tail(t: f64, start: u64) -> LatticeSum {
    assert!(t > 1.0, "zeta tail needs t > 1");
    assert!(start >= 1);
    let n0 = start.max(EM_START);
    let mut direct = 0.0;
    // small terms first
    for n in (start..n0).rev() {
        direct += (n as f64).powf(-t);
    }
    let nf = n0 as f64;
    let mut em = nf.powf(1.0 - t) / (t - 1.0) + 0.5 * nf.powf(-t);
    // rising factorial (t)_{2k-1} / (2k)! * N^{-t-2k+1}, built incrementally
    let mut coef = t / 2.0 * nf.powf(-t - 1.0); // k = 1
    let mut last = 0.0;
    for k in 1..=EM_TERMS + 1 {
        let term = BERNOULLI[k - 1] * coef;
        if k == EM_TERMS + 1 {
            last = term.abs();
            break;
        }
        em += term;
        let kk = k as f64;
        // (t)_{2k+1}/(2k+2)! = (t)_{2k-1}/(2k)! * (t+2k-1)(t+2k)/((2k+1)(2k+2))
        coef *= (t + 2.0 * kk - 1.0) * (t + 2.0 * kk) / ((2.0 * kk + 1.0) * (2.0 * kk + 2.0)) / (nf * nf);
    }
    let value = direct + em;
    LatticeSum {
        value,
        error_bound: 2.0 * last + value.abs() * 4.0 * f64::EPSILON,
    }
}

/// Riemann zeta for real s > 1.
pub fn zeta(s: f64) -> LatticeSum {
    zeta_tail(s, 1)
}

/// c_α in dimension `dim` for the given point norm.
pub fn c_alpha(dim: usize, alpha: f64, norm: Norm, tol: f64) -> Result<LatticeSum, InteractionError> {
    if dim == 0 {
        return Err(InteractionError::InvalidParameter("dimension must be positive".into()));
    }
    if !(alpha > dim as f64) || !alpha.is_finite() {
        return Err(InteractionError::Divergent { alpha, dim });
    }
    let sum = match norm {
        Norm::L2 => l2_sum(dim, alpha),
        Norm::LInf => shell_polynomial_sum(&linf_shell_counts(dim), alpha),
        Norm::L1 => shell_polynomial_sum(&l1_shell_counts(dim), alpha),
    };
    if sum.error_bound > tol {
        return Err(InteractionError::ToleranceUnreachable {
            requested: tol,
            achieved: sum.error_bound,
        });
    }
    Ok(sum)
}

/// Σ_n P(n) n^{-α} for a shell-count polynomial P with coefficients in
/// increasing degree.
fn shell_polynomial_sum(poly: &[f64], alpha: f64) -> LatticeSum {
    let mut value = 0.0;
    let mut err = 0.0;
    for (j, &c) in poly.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let z = zeta(alpha - j as f64);
        value += c * z.value;
        err += c.abs() * z.error_bound;
    }
    LatticeSum {
        value,
        error_bound: err + value.abs() * 8.0 * f64::EPSILON,
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// #{y : |y|∞ = n} = (2n+1)^d − (2n−1)^d for n ≥ 1.
fn linf_shell_counts(dim: usize) -> Vec<f64> {
    let mut poly = vec![0.0; dim];
    for k in 0..dim {
        if (dim - k) % 2 == 1 {
            poly[k] = 2.0 * binomial(dim, k) * 2f64.powi(k as i32);
        }
    }
    poly
}

/// #{y : |y|₁ = n} = Σ_k 2^k C(d,k) C(n−1,k−1) for n ≥ 1.
fn l1_shell_counts(dim: usize) -> Vec<f64> {
    let mut total = vec![0.0; dim];
    for k in 1..=dim {
        // C(n-1, k-1) = Π_{i=1}^{k-1} (n - i) / (k-1)!
        let mut p = vec![1.0];
        for i in 1..k {
            let mut next = vec![0.0; p.len() + 1];
            for (deg, &c) in p.iter().enumerate() {
                next[deg + 1] += c;
                next[deg] -= c * i as f64;
            }
            p = next;
        }
        let fact: f64 = (1..k).map(|i| i as f64).product();
        let scale = 2f64.powi(k as i32) * binomial(dim, k) / fact;
        for (deg, &c) in p.iter().enumerate() {
            total[deg] += scale * c;
        }
    }
    total
}

/// ∫_ℝ (A + u²)^{-s} du = A^{1/2 - s} · √π Γ(s − ½)/Γ(s).
fn row_integral_coefficient(s: f64) -> f64 {
    (0.5 * std::f64::consts::PI.ln() + ln_gamma(s - 0.5) - ln_gamma(s)).exp()
}

/// Σ_{n∈ℤ} (A + n²)^{-s} for A > 0.
fn row_sum(a: f64, s: f64) -> LatticeSum {
    debug_assert!(a > 0.0);
    let cut = (2.0 * a.sqrt()).ceil() as u64 + 2;
    let mut direct = 0.0;
    for n in (1..cut).rev() {
        let nf = n as f64;
        direct += (a + nf * nf).powf(-s);
    }
    // Σ_{n ≥ cut} n^{-2s} (1 + A/n²)^{-s} = Σ_j C(-s, j) A^j ζ_cut(2s + 2j)
    let mut tail = 0.0;
    let mut err = 0.0;
    let mut binom = 1.0; // C(-s, j)
    let mut apow = 1.0;
    for j in 0..400 {
        let z = zeta_tail(2.0 * s + 2.0 * j as f64, cut);
        let term = binom * apow * z.value;
        tail += term;
        err += (binom * apow).abs() * z.error_bound;
        if term.abs() < 1e-19 * tail.abs() {
            // remaining terms decay at least geometrically with ratio A/cut² ≤ 1/4
            err += 2.0 * term.abs();
            break;
        }
        binom *= -(s + j as f64) / (j as f64 + 1.0);
        apow *= a;
    }
    let value = a.powf(-s) + 2.0 * (direct + tail);
    LatticeSum {
        value,
        error_bound: 2.0 * err + value * 8.0 * f64::EPSILON,
    }
}

/// Upper bound on |Σ_{n∈ℤ} (ρ² + n²)^{-s} − ∫|| for ρ > 0. The summand is
/// analytic in the strip |Im t| < ρ; on |Im t| ≤ cρ it is bounded by
/// ((1 − c²)ρ² + u²)^{-s}, which gives the trapezoid strip bound.
fn row_poisson_error(rho: f64, s: f64) -> f64 {
    const C: f64 = 0.8;
    let m = row_integral_coefficient(s) * ((1.0 - C * C) * rho * rho).powf(0.5 - s);
    2.0 * m / (2.0 * std::f64::consts::PI * C * rho).exp_m1()
}

fn l2_sum(dim: usize, alpha: f64) -> LatticeSum {
    if dim == 1 {
        let z = zeta(alpha);
        return LatticeSum {
            value: 2.0 * z.value,
            error_bound: 2.0 * z.error_bound,
        };
    }
    let s = alpha / 2.0;
    let outer = dim - 1;

    // pick the exact-row radius so that the far-row error is negligible
    let far_error = |r0: i64| -> f64 {
        let mut total = 0.0;
        let mut k = r0.max(1);
        loop {
            let shell = ((2 * k + 3) as f64).powi(outer as i32);
            let term = shell * row_poisson_error(k as f64, s);
            total += term;
            if term < 1e-30 || k > r0 + 10_000 {
                break;
            }
            k += 1;
        }
        total
    };
    let mut r0: i64 = 4;
    while far_error(r0) > 1e-16 && r0 < 64 {
        r0 += 1;
    }
    let r0sq = r0 * r0;

    let z = zeta(alpha);
    let mut near = 2.0 * z.value;
    let mut near_err = 2.0 * z.error_bound;
    let mut near_power = 0.0; // Σ_{0<A≤R0²} A^{(1-α)/2}
    let mut y = vec![-r0; outer];
    loop {
        let a: i64 = y.iter().map(|&c| c * c).sum();
        if a > 0 && a <= r0sq {
            let row = row_sum(a as f64, s);
            near += row.value;
            near_err += row.error_bound;
            near_power += (a as f64).powf(0.5 - s);
        }
        let mut axis = 0;
        loop {
            if axis == outer {
                break;
            }
            y[axis] += 1;
            if y[axis] <= r0 {
                break;
            }
            y[axis] = -r0;
            axis += 1;
        }
        if axis == outer {
            break;
        }
    }
    let lower = l2_sum(outer, alpha - 1.0);
    let coeff = row_integral_coefficient(s);
    let far = coeff * (lower.value - near_power);
    let value = near + far;
    LatticeSum {
        value,
        error_bound: near_err + coeff * lower.error_bound + far_error(r0) + value * 16.0 * f64::EPSILON,
    }
}
