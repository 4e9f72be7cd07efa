//! Deterministic scalar math for the coded path, plus a small dense solver.
//!
//! Probability tables that end up in the bitstream must be bit-identical
//! across platforms. System libm makes no such promise for `exp`, `ln` or
//! `erf`, so the coded path (entropy parameters and PMF construction) uses
//! the implementations below: they are built from IEEE-exact operations
//! (+, -, *, /, round, bit twiddling) only.

use std::f64::consts::{LN_2, SQRT_2};

/// 2^k as f64, exact, including the subnormal range.
fn pow2i(k: i64) -> f64 {
    if k > 1023 {
        f64::INFINITY
    } else if k >= -1022 {
        f64::from_bits(((k + 1023) as u64) << 52)
    } else if k >= -1074 {
        // subnormal: go through an exact power-of-two product
        f64::from_bits(1u64 << 52) * pow2i(k + 1022)
    } else {
        0.0
    }
}

/// Deterministic exp: ln2 range reduction + degree-13 Taylor on |r| <= ln2/2.
/// Relative accuracy ~2e-16 over the normal range.
pub fn exp_d(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 709.8 {
        return f64::INFINITY;
    }
    if x < -745.2 {
        return 0.0;
    }
    let k = (x / LN_2).round();
    let r = x - k * LN_2;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..=13 {
        term *= r / n as f64;
        sum += term;
    }
    sum * pow2i(k as i64)
}

/// Deterministic natural log via mantissa reduction + atanh series.
pub fn ln_d(x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let bits = x.to_bits();
    let mut e = ((bits >> 52) & 0x7ff) as i64 - 1023;
    let mut m = if e == -1023 {
        // subnormal: renormalize
        let lz = (bits << 12).leading_zeros() as i64;
        e = -1022 - lz - 1;
        f64::from_bits(bits) * pow2i(-e)
    } else {
        f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | (1023u64 << 52))
    };
    // keep m in [sqrt(1/2), sqrt(2)) so the series argument stays small
    if m > SQRT_2 {
        m *= 0.5;
        e += 1;
    }
    let s = (m - 1.0) / (m + 1.0);
    let s2 = s * s;
    let mut term = s;
    let mut sum = s;
    for n in 1..=13 {
        term *= s2;
        sum += term / (2 * n + 1) as f64;
    }
    2.0 * sum + e as f64 * LN_2
}

/// softplus(x) = ln(1 + e^x), deterministic, overflow-safe.
pub fn softplus_d(x: f64) -> f64 {
    if x > 36.0 {
        x
    } else if x < -36.0 {
        exp_d(x)
    } else {
        ln_d(1.0 + exp_d(x))
    }
}

/// Complementary error function for x >= 0; fractional error < 1.3e-7.
/// Rational Chebyshev fit (the classic single-formula approximation).
fn erfc_pos(x: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.5 * x);
    t * exp_d(
        -x * x - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))),
    )
}

/// Odd-symmetric erf built on `erfc_pos`; erf(-x) == -erf(x) exactly.
pub fn erf_d(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 - erfc_pos(x)
    } else {
        -(1.0 - erfc_pos(-x))
    }
}

/// Centered normal CDF: Phi(x) - 1/2, an odd function of x.
///
/// PMF construction uses differences of this, so that a symmetric input
/// yields an exactly symmetric table.
pub fn phi_centered(x: f64) -> f64 {
    0.5 * erf_d(x / SQRT_2)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 + phi_centered(x)
}

/// Solve `a x = b` for a dense n x n system, partial pivoting, in place.
/// `a` is row-major. Returns None for (numerically) singular systems.
pub fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col * n + k] * x[k];
        }
        x[col] = s / a[col * n + col];
    }
    Some(x)
}
