//! Gauge angles and the coefficient sets of the transformed Hamiltonian.
//!
//! `U₁ = exp(iμĴx)` and `U₂ = exp(iνĴy)` with `ν = π` fixed and
//! `μ(t) = π − v₀t/2 + (v₀T/4π) sin(2πt/T)`, so `μ̇ = −f(t)`.
//!
//! Twelve-term operator order for [`ACoeffs`]:
//! `Ĵx, Ĵy, Ĵz, ĴxĴy, ĴyĴx, ĴxĴz, ĴzĴx, ĴyĴz, ĴzĴy, Ĵx², Ĵy², Ĵz²`.
//! [`CCoeffs`] uses the last nine of these.

use std::f64::consts::PI;

use crate::bessel::{j0, j1};
use crate::model::ModelParams;
use crate::spin::{Operator, SpinSpace};
use crate::{Error, Result};

/// Second gauge angle, constant.
pub const NU: f64 = PI;

/// Half-width in `v₀T` of the expansion window around each removable singularity.
pub const GUARD_RADIUS: f64 = 1e-4;

pub const A_LABELS: [&str; 12] = [
    "Jx", "Jy", "Jz", "JxJy", "JyJx", "JxJz", "JzJx", "JyJz", "JzJy", "Jx^2", "Jy^2", "Jz^2",
];

/// `μ(t)`, with `t` clamped to `[0, T]`.
pub fn mu_of_t(p: &ModelParams, t: f64) -> f64 {
    let t = t.clamp(0.0, p.period);
    PI - p.v0 * t / 2.0 + p.pulse_area() / (4.0 * PI) * (2.0 * PI * t / p.period).sin()
}

/// `μ̇(t) = −v₀ sin²(πt/T)` inside `[0, T]`, zero outside.
pub fn mu_dot(p: &ModelParams, t: f64) -> f64 {
    -crate::model::drive_amplitude(p, t)
}

/// `A₁..A₁₂`; `get(n)` is one-based.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ACoeffs(pub [f64; 12]);

impl ACoeffs {
    pub fn get(&self, n: usize) -> f64 {
        self.0[n - 1]
    }
}

/// `C₁..C₉`; `get(n)` is one-based.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CCoeffs(pub [f64; 9]);

impl CCoeffs {
    pub fn get(&self, n: usize) -> f64 {
        self.0[n - 1]
    }
}

/// Coefficients of `U₂U₁HU₁†U₂†` plus the gauge terms, written with general
/// `ν` and evaluated at `ν = π`, `ν̇ = 0`. The `Ĵz²` prefactor is `2λΔ/N`.
pub fn a_coeffs(p: &ModelParams, t: f64) -> ACoeffs {
    let (sm, cm) = mu_of_t(p, t).sin_cos();
    let (sn, cn) = NU.sin_cos();
    let f = crate::model::drive_amplitude(p, t);
    let md = mu_dot(p, t);
    let d = p.delta;
    let chi = p.interaction();
    let a45 = -chi * sm * cm * sn;
    let a67 = -chi * sn * cn * cm * cm;
    let a89 = chi * sm * cm * cn;
    ACoeffs([
        f * cn + md * cn - d * cm * sn,
        d * sm,
        -f * sn - md * sn + d * cm * cn,
        a45,
        a45,
        a67,
        a67,
        a89,
        a89,
        chi * cm * cm * sn * sn,
        chi * sm * sm,
        chi * cm * cm * cn * cn,
    ])
}

/// Coefficients of `U₂U₁Ĵz²U₁†U₂†` at `ν = π`.
pub fn c_coeffs(p: &ModelParams, t: f64) -> CCoeffs {
    let (sm, cm) = mu_of_t(p, t).sin_cos();
    let (sn, cn) = NU.sin_cos();
    let c12 = -sm * cm * sn;
    let c34 = -sn * cn * cm * cm;
    let c56 = sm * cm * cn;
    CCoeffs([
        c12,
        c12,
        c34,
        c34,
        c56,
        c56,
        cm * cm * sn * sn,
        sm * sm,
        cm * cm * cn * cn,
    ])
}

/// The twelve operators multiplying `A₁..A₁₂`.
pub fn a_operators(space: &SpinSpace) -> [Operator; 12] {
    let (x, y, z) = (space.jx(), space.jy(), space.jz());
    [
        x.clone(),
        y.clone(),
        z.clone(),
        x * y,
        y * x,
        x * z,
        z * x,
        y * z,
        z * y,
        x * x,
        y * y,
        z * z,
    ]
}

/// The nine operators multiplying `C₁..C₉`.
pub fn c_operators(space: &SpinSpace) -> [Operator; 9] {
    let [_, _, _, rest @ ..] = a_operators(space);
    rest
}

/// Time integrals of the transformed coefficients over one period, with
/// Bessel terms of order ≥ 2 dropped. `B₁, B₄..B₇, B₁₀` vanish.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselCoeffs {
    pub b2: f64,
    pub b3: f64,
    pub b8: f64,
    pub b9: f64,
    pub b11: f64,
    pub b12: f64,
}

impl BesselCoeffs {
    /// One-based lookup over `B₁..B₁₂`.
    pub fn get(&self, n: usize) -> f64 {
        match n {
            2 => self.b2,
            3 => self.b3,
            8 => self.b8,
            9 => self.b9,
            11 => self.b11,
            12 => self.b12,
            _ => 0.0,
        }
    }

    /// `v₀ → 0` limit, where `μ ≡ π`.
    pub fn zero_drive(p: &ModelParams) -> Self {
        let chi_t = p.interaction() * p.period;
        Self {
            b2: 0.0,
            b3: -p.delta * p.period,
            b8: 0.0,
            b9: 0.0,
            b11: 0.0,
            b12: chi_t,
        }
    }

    /// `B₂² + B₃²`.
    pub fn rotation_sq(&self) -> f64 {
        self.b2 * self.b2 + self.b3 * self.b3
    }
}

/// Which form of the singular quotients to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// Expansion inside [`GUARD_RADIUS`], printed quotient outside.
    Auto,
    /// Printed quotients everywhere (0/0 at the singular points).
    Direct,
    /// Second-order expansions everywhere; only accurate near the singular points.
    Expansion,
}

pub fn b_coeffs(p: &ModelParams) -> Result<BesselCoeffs> {
    b_coeffs_branch(p, Branch::Auto)
}

pub fn b_coeffs_branch(p: &ModelParams, branch: Branch) -> Result<BesselCoeffs> {
    if !(p.v0 > 0.0) {
        return Err(Error::invalid("v0", format!("analytic coefficients need v0 > 0, got {}", p.v0)));
    }
    if !(p.period > 0.0) {
        return Err(Error::invalid("period", format!("must be > 0, got {}", p.period)));
    }
    let (v0, t, d) = (p.v0, p.period, p.delta);
    let a = p.pulse_area();
    let half_chi = p.interaction() / 2.0;

    let use_expansion = |centre: f64| match branch {
        Branch::Auto => (a - centre).abs() < GUARD_RADIUS,
        Branch::Direct => false,
        Branch::Expansion => true,
    };

    // x = v₀T − 4π: 16π² − (v₀T)² = −x(8π + x)
    let x4 = a - 4.0 * PI;
    let (sin2_quarter_q, sin_half_q) = if use_expansion(4.0 * PI) {
        (-(x4 / 16.0) / (8.0 * PI + x4), -(0.5 - x4 * x4 / 48.0) / (8.0 * PI + x4))
    } else {
        let den = 16.0 * PI * PI - a * a;
        ((a / 4.0).sin().powi(2) / den, (a / 2.0).sin() / den)
    };
    let z1 = -a / (4.0 * PI);
    let (j0a, j1a) = (j0(z1), j1(z1));
    let b2 = 4.0 * d * (j0a / v0 * (a / 4.0).sin().powi(2) + 8.0 * PI * t * j1a * sin2_quarter_q);
    let b3 = -2.0 * d * (j0a / v0 * (a / 2.0).sin() + 8.0 * PI * t * j1a * sin_half_q);

    // x = v₀T − 2π: 4π² − (v₀T)² = −x(4π + x); 1 − cos(v₀T) = 2 sin²(v₀T/2)
    let x2 = a - 2.0 * PI;
    let versine = 2.0 * (a / 2.0).sin().powi(2);
    let (vers_q, sin_q) = if use_expansion(2.0 * PI) {
        (-(x2 / 2.0) / (4.0 * PI + x2), (1.0 - x2 * x2 / 6.0) / (4.0 * PI + x2))
    } else {
        (versine / (4.0 * PI * PI - a * a), a.sin() / (a * a - 4.0 * PI * PI))
    };
    let z2 = -a / (2.0 * PI);
    let (j0b, j1b) = (j0(z2), j1(z2));
    let b8 = half_chi * (j0b / v0 * versine + 4.0 * PI * t * j1b * vers_q);
    let odd = j0b / v0 * a.sin() - 4.0 * PI * t * j1b * sin_q;
    Ok(BesselCoeffs {
        b2,
        b3,
        b8,
        b9: b8,
        b11: half_chi * (t - odd),
        b12: half_chi * (t + odd),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::expm_hermitian;
    use crate::C64;
    use nalgebra::{DMatrix, DVector};

    fn golden_times(p: &ModelParams, n: usize) -> impl Iterator<Item = f64> + '_ {
        let g = 0.618_033_988_749_894_9;
        (0..n).map(move |k| ((k as f64 * g).fract()) * p.period)
    }

    #[test]
    fn mu_endpoints_and_monotonicity() {
        let p = ModelParams::new(6, 1.0, 20.0, 0.1 * PI).unwrap();
        assert_eq!(mu_of_t(&p, 0.0), PI);
        assert!((mu_of_t(&p, p.period) - (PI - p.pulse_area() / 2.0)).abs() < 1e-14);
        assert!((mu_of_t(&p, p.period / 2.0) - (PI - p.pulse_area() / 4.0)).abs() < 1e-14);
        let mut prev = f64::INFINITY;
        for k in 0..=1000 {
            let m = mu_of_t(&p, k as f64 * p.period / 1000.0);
            assert!(m <= prev + 1e-15);
            prev = m;
        }
        assert_eq!(mu_of_t(&p, -1.0), PI);
        assert_eq!(mu_of_t(&p, 9.0), mu_of_t(&p, p.period));
    }

    #[test]
    fn mu_dot_matches_finite_difference() {
        let p = ModelParams::new(6, 1.0, 13.0, 0.37).unwrap();
        let h = 1e-6;
        for t in golden_times(&p, 50).filter(|&t| t > h && t < p.period - h) {
            let fd = (mu_of_t(&p, t + h) - mu_of_t(&p, t - h)) / (2.0 * h);
            assert!((fd - mu_dot(&p, t)).abs() < 1e-7);
        }
    }

    #[test]
    fn gauge_condition_removes_linear_jx_and_cross_terms() {
        let p = ModelParams::new(8, -1.3, 25.0, 0.2 * PI).unwrap();
        for t in golden_times(&p, 100) {
            let a = a_coeffs(&p, t);
            for n in [1, 4, 5, 6, 7, 10] {
                assert!(a.get(n).abs() < 1e-12, "A{n}({t}) = {}", a.get(n));
            }
            assert_eq!(a.get(8), a.get(9));
        }
    }

    #[test]
    fn c_coefficient_identities() {
        let p = ModelParams::new(8, 2.0, 40.0, 0.1 * PI).unwrap();
        for t in golden_times(&p, 100) {
            let c = c_coeffs(&p, t);
            let mu = mu_of_t(&p, t);
            for n in 1..=4 {
                assert!(c.get(n).abs() < 1e-12);
            }
            assert!(c.get(7).abs() < 1e-12);
            assert!((c.get(8) - mu.sin().powi(2)).abs() < 1e-15);
            assert!((c.get(9) - mu.cos().powi(2)).abs() < 1e-15);
            assert!((c.get(8) + c.get(9) - 1.0).abs() < 1e-14);
        }
    }

    /// `exp(iθĴ)`.
    fn rotation(generator: &Operator, theta: f64) -> Operator {
        expm_hermitian(generator, -theta).unwrap()
    }

    /// Real least-squares coordinates of `target` on
    /// `Ĵx, Ĵy, Ĵz, {ĴxĴy}, {ĴxĴz}, {ĴyĴz}, Ĵx², Ĵy², Ĵz²` with `{AB} = AB + BA`.
    /// The twelve-term set is linearly dependent through the commutators, so
    /// paired coefficients are recovered through their symmetrized sum.
    fn extract(space: &SpinSpace, target: &Operator, span_tol: f64) -> [f64; 9] {
        let ops = a_operators(space);
        let basis: Vec<Operator> = vec![
            ops[0].clone(),
            ops[1].clone(),
            ops[2].clone(),
            &ops[3] + &ops[4],
            &ops[5] + &ops[6],
            &ops[7] + &ops[8],
            ops[9].clone(),
            ops[10].clone(),
            ops[11].clone(),
        ];
        let d2 = target.len();
        let mut design = DMatrix::<f64>::zeros(2 * d2, basis.len());
        for (j, b) in basis.iter().enumerate() {
            for (i, z) in b.iter().enumerate() {
                design[(i, j)] = z.re;
                design[(d2 + i, j)] = z.im;
            }
        }
        let rhs = DVector::from_iterator(
            2 * d2,
            target.iter().map(|z| z.re).chain(target.iter().map(|z| z.im)),
        );
        let sol = design.clone().svd(true, true).solve(&rhs, 1e-14).unwrap();
        let residual = (&design * &sol - &rhs).amax();
        assert!(residual < span_tol, "target outside the operator span: {residual}");
        let mut out = [0.0; 9];
        out.copy_from_slice(sol.as_slice());
        out
    }

    fn conjugate(space: &SpinSpace, mu: f64, op: &Operator) -> Operator {
        let u = rotation(space.jy(), NU) * rotation(space.jx(), mu);
        &u * op * u.adjoint()
    }

    #[test]
    fn dense_conjugation_reproduces_c_coefficients() {
        let space = SpinSpace::new(4).unwrap();
        let p = ModelParams::new(4, 2.0, 20.0, 0.1 * PI).unwrap();
        for t in golden_times(&p, 25) {
            let got = extract(&space, &conjugate(&space, mu_of_t(&p, t), space.jz2()), 1e-10);
            let c = c_coeffs(&p, t);
            let want = [0.0, 0.0, 0.0, c.get(1), c.get(3), c.get(5), c.get(7), c.get(8), c.get(9)];
            for k in 0..9 {
                assert!((got[k] - want[k]).abs() < 1e-10, "t={t} k={k}: {} vs {}", got[k], want[k]);
            }
        }
    }

    /// The similarity part `U₂U₁H U₁†U₂†` against the printed coefficients with
    /// their `μ̇` (gauge) contributions removed.
    #[test]
    fn dense_conjugation_reproduces_a_coefficients() {
        for n in [2usize, 4, 6] {
            let space = SpinSpace::new(n).unwrap();
            let p = ModelParams::new(n, -0.7, 17.0, 0.23 * PI).unwrap().with_delta(1.3).unwrap();
            for t in golden_times(&p, 15) {
                let h = crate::model::hamiltonian_at(&p, &space, t).h;
                let got = extract(&space, &conjugate(&space, mu_of_t(&p, t), &h), 1e-10);
                let a = a_coeffs(&p, t);
                let md = mu_dot(&p, t);
                let want = [
                    a.get(1) - md * NU.cos(),
                    a.get(2),
                    a.get(3) + md * NU.sin(),
                    a.get(4),
                    a.get(6),
                    a.get(8),
                    a.get(10),
                    a.get(11),
                    a.get(12),
                ];
                for k in 0..9 {
                    assert!((got[k] - want[k]).abs() < 1e-10, "N={n} t={t} k={k}: {} vs {}", got[k], want[k]);
                }
            }
        }
    }

    /// `i (d/dt)(U₂U₁) (U₂U₁)†` at `ν = π` is `+μ̇Ĵx`, while the printed first
    /// coefficient carries `μ̇ cos ν = −μ̇`. The printed gauge term therefore has
    /// the opposite sign, and the exact transformed `Ĵx` coefficient is `−2f`.
    #[test]
    fn gauge_term_sign() {
        let space = SpinSpace::new(4).unwrap();
        let p = ModelParams::new(4, 1.0, 20.0, 0.1 * PI).unwrap();
        let t = 0.37 * p.period;
        let h = 1e-6;
        let u = |t: f64| rotation(space.jy(), NU) * rotation(space.jx(), mu_of_t(&p, t));
        let du = (u(t + h) - u(t - h)) / C64::new(2.0 * h, 0.0);
        let gauge = du * u(t).adjoint() * C64::new(0.0, 1.0);
        let got = extract(&space, &gauge, 1e-7);
        let md = mu_dot(&p, t);
        assert!((got[0] - md).abs() < 1e-6, "{} vs {md}", got[0]);
        assert!((got[0] - md * NU.cos()).abs() > 1.0);
        let similarity = -crate::model::drive_amplitude(&p, t);
        assert!((similarity + got[0] - (-2.0 * crate::model::drive_amplitude(&p, t))).abs() < 1e-6);
    }

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    /// Quadrature of `∫₀ᵀ A_n dt` with the exact (untruncated) integrands.
    fn quadrature(p: &ModelParams) -> [f64; 5] {
        let n = 20_000;
        let (d, chi) = (p.delta, p.interaction());
        let mu = |t: f64| mu_of_t(p, t);
        [
            simpson(|t| d * mu(t).sin(), 0.0, p.period, n),
            simpson(|t| d * mu(t).cos(), 0.0, p.period, n),
            simpson(|t| -chi * mu(t).sin() * mu(t).cos(), 0.0, p.period, n),
            simpson(|t| chi * mu(t).sin().powi(2), 0.0, p.period, n),
            simpson(|t| chi * mu(t).cos().powi(2), 0.0, p.period, n),
        ]
    }

    /// Relative deviations `|B − ∫A|/scale` for B₂, B₃, B₈, B₁₁, B₁₂.
    fn quadrature_deviation(v0: f64, t: f64) -> [f64; 5] {
        let p = ModelParams::new(10, 2.0, v0, t).unwrap();
        let b = b_coeffs(&p).unwrap();
        let q = quadrature(&p);
        let (s, cs) = (p.period * p.delta, p.period * p.interaction());
        [
            (b.b2 - q[0]).abs() / s,
            (b.b3 - q[1]).abs() / s,
            (b.b8 - q[2]).abs() / cs,
            (b.b11 - q[3]).abs() / cs,
            (b.b12 - q[4]).abs() / cs,
        ]
    }

    #[test]
    fn bessel_coefficients_track_quadrature_below_critical_area() {
        // B₂ = ∫A₂, B₃ = −∫A₃, B₈ = ∫A₈, B₁₁ = ∫A₁₁, B₁₂ = ∫A₁₂ up to dropped Bessel orders
        for (v0, t) in [(20.0, 0.1 * PI), (10.0, 0.1 * PI), (15.0, 0.1 * PI), (5.0, 0.3 * PI), (3.0, 0.3 * PI)] {
            for (k, dev) in quadrature_deviation(v0, t).into_iter().enumerate() {
                assert!(dev < 5e-3, "v0={v0} T={t} entry {k}: {dev:.3e}");
            }
        }
    }

    #[test]
    fn dropped_orders_are_bounded_above_critical_area() {
        // resonant areas 3π, 4π, 6π are where the dropped terms integrate coherently
        for v0 in [30.0, 40.0, 60.0] {
            for (k, dev) in quadrature_deviation(v0, 0.1 * PI).into_iter().enumerate() {
                assert!(dev < 0.2, "v0={v0} entry {k}: {dev:.3e}");
            }
        }
    }

    #[test]
    fn zero_drive_limit() {
        let p = ModelParams::new(10, 2.0, 1e-7, 0.1 * PI).unwrap();
        let b = b_coeffs(&p).unwrap();
        let z = BesselCoeffs::zero_drive(&p);
        for n in 1..=12 {
            assert!((b.get(n) - z.get(n)).abs() < 1e-6, "B{n}: {} vs {}", b.get(n), z.get(n));
        }
    }

    #[test]
    fn rejects_nonpositive_drive() {
        let mut p = ModelParams::new(10, 2.0, 1.0, 1.0).unwrap();
        p.v0 = 0.0;
        assert!(b_coeffs(&p).is_err());
        p.v0 = 1.0;
        p.period = -1.0;
        assert!(b_coeffs(&p).is_err());
    }

    fn at_area(area: f64) -> ModelParams {
        let t = 0.1 * PI;
        ModelParams::new(10, 2.0, area / t, t).unwrap()
    }

    #[test]
    fn vanishing_values_at_singular_points() {
        let b = b_coeffs(&at_area(2.0 * PI)).unwrap();
        assert!(b.b8.abs() < 1e-12 && b.b9 == b.b8);
        assert!(b.b11.is_finite() && b.b12.is_finite());
        let b = b_coeffs(&at_area(4.0 * PI)).unwrap();
        assert!(b.b2.abs() < 1e-12);
        assert!(b.b3.is_finite() && b.b3 != 0.0);
    }

    fn relative(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn expansion_matches_printed_form_near_singular_points() {
        for (centre, set) in [(2.0 * PI, &[8, 9, 11, 12][..]), (4.0 * PI, &[2, 3][..])] {
            for off in [1e-3, -1e-3, 1e-5, -1e-5] {
                let p = at_area(centre + off);
                let e = b_coeffs_branch(&p, Branch::Expansion).unwrap();
                let d = b_coeffs_branch(&p, Branch::Direct).unwrap();
                for &n in set {
                    assert!(relative(e.get(n), d.get(n)) < 1e-6, "x*={centre} off={off} B{n}: {} vs {}", e.get(n), d.get(n));
                }
            }
        }
    }

    #[test]
    fn continuous_across_guard_boundary() {
        for (centre, set) in [(2.0 * PI, &[8, 9, 11, 12][..]), (4.0 * PI, &[2, 3][..])] {
            for side in [1.0, -1.0] {
                let p = at_area(centre + side * GUARD_RADIUS);
                let e = b_coeffs_branch(&p, Branch::Expansion).unwrap();
                let d = b_coeffs_branch(&p, Branch::Direct).unwrap();
                for &n in set {
                    assert!(relative(e.get(n), d.get(n)) < 1e-8, "x*={centre} B{n}: {} vs {}", e.get(n), d.get(n));
                }
            }
        }
    }
}
