//! Special-function kernel.
//!
//! Only the parameter regimes the seed functions need are supported:
//! Kummer's `M(a, b, z)` with real arguments, either terminating (`a` a
//! nonpositive integer) or summed as a positive-term series after the Kummer
//! transformation `M(a, b, z) = e^z M(b - a, b, -z)` for `z < 0`.

use crate::error::{Error, Result};

/// Relative tolerance on the last added term.
pub const SERIES_REL_TOL: f64 = 1e-14;

/// Hard cap on series terms; exceeding it yields `converged == false`.
pub const SERIES_MAX_TERMS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: usize,
    pub converged: bool,
}

impl SeriesResult {
    /// The value, or a convergence error carrying the arguments.
    pub fn value_or_err(self, a: f64, b: f64, z: f64) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::Convergence {
                a,
                b,
                z,
                terms: self.terms_used,
            })
        }
    }
}

/// Rising factorial `(a)_n = a (a+1) ... (a+n-1)`, with `(a)_0 = 1`.
pub fn pochhammer(a: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, i| acc * (a + f64::from(i)))
}

/// `n!` as a float.
pub fn factorial(n: u32) -> f64 {
    (2..=n).fold(1.0, |acc, i| acc * f64::from(i))
}

fn as_nonpositive_integer(x: f64) -> Option<u64> {
    (x <= 0.0 && x.fract() == 0.0).then(|| (-x) as u64)
}

/// Confluent hypergeometric function `M(a, b, z) = Σ (a)_n / (b)_n z^n / n!`.
///
/// A nonpositive integer `b` is accepted only when `a` is a nonpositive
/// integer with `|a| < |b|`, so the series stops before the pole.
pub fn kummer_m(a: f64, b: f64, z: f64) -> Result<SeriesResult> {
    if let Some(p) = as_nonpositive_integer(a) {
        if let Some(q) = as_nonpositive_integer(b) {
            if p >= q {
                return Err(Error::domain(format!(
                    "M({a}, {b}, z): series reaches the pole of (b)_n before terminating"
                )));
            }
        }
        return Ok(terminating(a, b, z, p));
    }
    if as_nonpositive_integer(b).is_some() {
        return Err(Error::domain(format!(
            "M({a}, {b}, z) is undefined: b is a nonpositive integer and a does not terminate the series"
        )));
    }
    if z < 0.0 {
        let c = b - a;
        if let Some(p) = as_nonpositive_integer(c) {
            let mut res = terminating(c, b, -z, p);
            res.value *= z.exp();
            return Ok(res);
        }
        Ok(scaled_series(c, b, -z, z))
    } else {
        Ok(scaled_series(a, b, z, 0.0))
    }
}

/// Exactly `p + 1` terms of the polynomial `M(-p, b, z)`.
fn terminating(a: f64, b: f64, z: f64, p: u64) -> SeriesResult {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..p {
        let n = n as f64;
        term *= (a + n) / (b + n) * z / (n + 1.0);
        sum += term;
    }
    SeriesResult {
        value: sum,
        terms_used: p as usize + 1,
        converged: true,
    }
}

/// `exp(log_prefactor) · Σ (a)_n/(b)_n x^n/n!` for `x >= 0`.
///
/// Partial sums are rescaled whenever they grow past 1e250 so that the
/// `e^z` of the Kummer transformation can be folded in at the end without
/// overflowing the intermediate sum.
fn scaled_series(a: f64, b: f64, x: f64, log_prefactor: f64) -> SeriesResult {
    const RESCALE: f64 = 1e250;
    let ln_rescale = RESCALE.ln();

    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut log_scale = 0.0;
    let mut terms_used = 1;
    let mut converged = x == 0.0;
    let mut n = 0.0;
    while !converged && terms_used < SERIES_MAX_TERMS {
        let ratio = (a + n) / (b + n) * x / (n + 1.0);
        term *= ratio;
        sum += term;
        terms_used += 1;
        n += 1.0;
        if sum.abs() > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            log_scale += ln_rescale;
        }
        if term == 0.0 || (ratio.abs() < 1.0 && term.abs() <= SERIES_REL_TOL * sum.abs()) {
            converged = true;
        }
    }
    SeriesResult {
        value: sum * (log_scale + log_prefactor).exp(),
        terms_used,
        converged,
    }
}

/// `M` and its first two derivatives with respect to `z`, from
/// `d/dz M(a, b, z) = (a/b) M(a+1, b+1, z)`.
///
/// A vanishing numerator parameter short-circuits the higher derivatives,
/// which matters for the terminating `M(k, -2l, z)` where `M(1, 1-2l, z)`
/// would otherwise hit the pole.
pub fn kummer_m_derivatives(a: f64, b: f64, z: f64) -> Result<[f64; 3]> {
    let m0 = kummer_m(a, b, z)?.value_or_err(a, b, z)?;
    if a == 0.0 {
        return Ok([m0, 0.0, 0.0]);
    }
    let m1 = kummer_m(a + 1.0, b + 1.0, z)?.value_or_err(a + 1.0, b + 1.0, z)?;
    let d1 = a / b * m1;
    if a + 1.0 == 0.0 {
        return Ok([m0, d1, 0.0]);
    }
    let m2 = kummer_m(a + 2.0, b + 2.0, z)?.value_or_err(a + 2.0, b + 2.0, z)?;
    let d2 = a * (a + 1.0) / (b * (b + 1.0)) * m2;
    Ok([m0, d1, d2])
}

/// Lower incomplete gamma `γ(s, x) = ∫_0^x t^{s-1} e^{-t} dt` for integer `s >= 1`.
///
/// Uses `(s-1)! (1 - e^{-x} Σ_{j<s} x^j/j!)` for `x > s`; below that the
/// bracket cancels badly and the equivalent tail `e^{-x} Σ_{j>=s} x^j/j!`
/// is summed instead.
///
/// # Panics
/// If `s == 0` or `x < 0`.
pub fn lower_incomplete_gamma(s: u32, x: f64) -> f64 {
    assert!(s >= 1, "lower_incomplete_gamma needs s >= 1");
    assert!(x >= 0.0, "lower_incomplete_gamma needs x >= 0");
    let sf = f64::from(s);
    let gamma_s = factorial(s - 1);
    if x == 0.0 {
        return 0.0;
    }
    if x > sf {
        let mut term = 1.0;
        let mut partial = 1.0;
        for j in 1..s {
            term *= x / f64::from(j);
            partial += term;
        }
        gamma_s * (1.0 - (-x).exp() * partial)
    } else {
        // x^s e^{-x} / s! · Σ_i x^i s!/(s+i)!
        let lead = (sf * x.ln() - x).exp() / factorial(s);
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut i = 0.0;
        while term > SERIES_REL_TOL * sum {
            i += 1.0;
            term *= x / (sf + i);
            sum += term;
        }
        gamma_s * lead * sum
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }

    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(&f, a, b, fa, fm, fb, whole, tol, 50)
}
