//! Bessel functions of the first kind, orders 0 and 1.
//!
//! Power series for `|x| ≤ 8`, Miller's backward recurrence normalized by
//! `J₀ + 2ΣJ₂ₖ = 1` up to `|x| ≤ 60`, and the Hankel asymptotic expansion
//! beyond. Absolute error stays below 1e-12 on the range of use `|x| < 50`.

use std::f64::consts::PI;

use crate::{Error, Result};

const SERIES_LIMIT: f64 = 8.0;
const RECURRENCE_LIMIT: f64 = 60.0;

/// `J₀(x)` or `J₁(x)`; any other order is rejected.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    match order {
        0 => Ok(j0(x)),
        1 => Ok(j1(x)),
        _ => Err(Error::invalid("order", format!("only orders 0 and 1 are supported, got {order}"))),
    }
}

pub fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SERIES_LIMIT {
        series(ax, 0)
    } else if ax <= RECURRENCE_LIMIT {
        miller(ax).0
    } else {
        asymptotic(ax, 0)
    }
}

pub fn j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SERIES_LIMIT {
        series(ax, 1)
    } else if ax <= RECURRENCE_LIMIT {
        miller(ax).1
    } else {
        asymptotic(ax, 1)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// `Jₙ(x) = (x/2)ⁿ Σ (−x²/4)ᵏ / (k! (k+n)!)` for `n ∈ {0, 1}`.
fn series(x: f64, order: u32) -> f64 {
    let q = -x * x / 4.0;
    let mut term = if order == 0 { 1.0 } else { x / 2.0 };
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + order as f64));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// `(J₀(x), J₁(x))` for `x > 0` by downward recurrence.
fn miller(x: f64) -> (f64, f64) {
    // start well above x so the seeded tail is negligible
    let start = 2 * ((x + 20.0 + 4.0 * x.sqrt()) as usize / 2 + 10);
    let two_over_x = 2.0 / x;
    let mut above = 0.0f64;
    let mut current = 1e-300f64;
    let mut norm = 0.0f64;
    let mut j0 = 0.0;
    let mut j1 = 0.0;
    for n in (1..=start).rev() {
        // J_{n-1} = (2n/x) J_n − J_{n+1}
        let below = n as f64 * two_over_x * current - above;
        above = current;
        current = below;
        let order = n - 1;
        if order == 1 {
            j1 = current;
        }
        if order == 0 {
            j0 = current;
            norm += current;
        } else if order % 2 == 0 {
            norm += 2.0 * current;
        }
        if current.abs() > 1e250 {
            let s = 1e-250;
            current *= s;
            above *= s;
            norm *= s;
            j1 *= s;
        }
    }
    (j0 / norm, j1 / norm)
}

/// Hankel expansion `Jₙ(x) ≈ √(2/πx) [P cos χ − Q sin χ]`, `χ = x − (2n+1)π/4`,
/// truncated at the smallest term.
fn asymptotic(x: f64, order: u32) -> f64 {
    let mu = 4.0 * (order as f64).powi(2);
    let eight_x = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0f64;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * eight_x);
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        // odd k feed Q, even k feed P, with alternating signs
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    let chi = x - (2.0 * order as f64 + 1.0) * PI / 4.0;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
