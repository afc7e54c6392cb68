//! Unphysical seed solutions at the factorization energies
//! `ε_l^{(k)} = -1/(l+k)²`, `k = 0, -1, ..., -(l-1)`.
//!
//! Each seed is `u(r) = r^{-l} e^{r/(l+k)} Φ(r)` with
//!
//! ```text
//! Φ(r) = M(k, -2l, -z) - ν z^{2l+1} M(1+k+2l, 2+2l, -z),   z = 2r/(l+k)
//! ν    = |k|! / (2l+1)! · λ / (-2l)_{|k|}
//! ```
//!
//! and the SUSY potential is `β = -u'/u = l/r - 1/(l+k) - Φ'/Φ`; `λ`
//! labels the one-parameter family of Riccati solutions at fixed `ε`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hydrogen::coulomb;
use crate::jet::Jet;
use crate::specfun::{adaptive_simpson, factorial, kummer_m_derivatives, lower_incomplete_gamma, pochhammer};

/// Open interval of admissible λ for a single seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaDomain {
    /// `(-inf, 1)`
    BelowOne,
    /// `(1, inf)`
    AboveOne,
}

impl LambdaDomain {
    pub fn contains(self, lambda: f64) -> bool {
        match self {
            LambdaDomain::BelowOne => lambda < 1.0,
            LambdaDomain::AboveOne => lambda > 1.0 && lambda.is_finite(),
        }
    }

    pub fn bounds(self) -> (f64, f64) {
        match self {
            LambdaDomain::BelowOne => (f64::NEG_INFINITY, 1.0),
            LambdaDomain::AboveOne => (1.0, f64::INFINITY),
        }
    }
}

impl fmt::Display for LambdaDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaDomain::BelowOne => f.write_str("(-inf, 1)"),
            LambdaDomain::AboveOne => f.write_str("(1, inf)"),
        }
    }
}

pub(crate) fn parity_name(k: i32) -> &'static str {
    if k % 2 == 0 {
        "even"
    } else {
        "odd"
    }
}

/// `(-inf, 1)` for even `|k|`, `(1, inf)` for odd `|k|`.
pub fn lambda_domain(k: i32) -> LambdaDomain {
    if k % 2 == 0 {
        LambdaDomain::BelowOne
    } else {
        LambdaDomain::AboveOne
    }
}

/// `ε_l^{(k)} = -1/(l+k)²`.
pub fn factorization_energy(l: u32, k: i32) -> Result<f64> {
    let q = l as i64 + k as i64;
    if q <= 0 {
        return Err(Error::domain(format!(
            "factorization energy needs l + k >= 1, got l = {l}, k = {k}"
        )));
    }
    let q = q as f64;
    Ok(-1.0 / (q * q))
}

/// A function value with its first two derivatives in `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivs2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeedSolution {
    l: u32,
    k: i32,
    lambda: f64,
    epsilon: f64,
    nu: f64,
}

impl SeedSolution {
    /// Validated seed: `l >= 1`, `-(l-1) <= k <= 0`, `λ` in [`lambda_domain`]`(k)`.
    pub fn new(l: u32, k: i32, lambda: f64) -> Result<Self> {
        let seed = SeedSolution::new_unchecked(l, k, lambda)?;
        let domain = lambda_domain(k);
        if !domain.contains(lambda) {
            return Err(Error::domain(format!(
                "lambda {lambda} not in {domain} required for |k| {} (k = {k})",
                parity_name(k)
            )));
        }
        Ok(seed)
    }

    /// Seed whose λ is not checked against the single-seed domain.
    ///
    /// Second-order families need exactly such seeds: the lower of the two
    /// energies takes λ outside its own domain, and regularity is decided
    /// by the paired domain instead.
    pub fn new_unchecked(l: u32, k: i32, lambda: f64) -> Result<Self> {
        if l < 1 {
            return Err(Error::domain("seeds need l >= 1"));
        }
        if k > 0 || k < -(l as i32 - 1) {
            return Err(Error::domain(format!(
                "k = {k} outside the integer range [-(l-1), 0] = [{}, 0]",
                -(l as i32 - 1)
            )));
        }
        if !lambda.is_finite() {
            return Err(Error::domain(format!("lambda = {lambda} must be finite")));
        }
        let abs_k = k.unsigned_abs();
        let nu = factorial(abs_k) / factorial(2 * l + 1) * lambda / pochhammer(-2.0 * f64::from(l), abs_k);
        Ok(SeedSolution {
            l,
            k,
            lambda,
            epsilon: factorization_energy(l, k)?,
            nu,
        })
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn k(&self) -> i32 {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `l + k`, the effective principal number of the seed.
    pub fn q(&self) -> f64 {
        f64::from(self.l) + f64::from(self.k)
    }

    pub fn in_own_domain(&self) -> bool {
        lambda_domain(self.k).contains(self.lambda)
    }

    /// Φ and its first two derivatives, all from the `M` derivative identity.
    pub fn phi(&self, r: f64) -> Result<Derivs2> {
        if !(r >= 0.0) {
            return Err(Error::domain(format!("phi needs r >= 0, got {r}")));
        }
        let l = f64::from(self.l);
        let k = f64::from(self.k);
        let q = self.q();
        let z = 2.0 * r / q;
        let dz = 2.0 / q;

        let [p0, p1, p2] = kummer_m_derivatives(k, -2.0 * l, -z)?;
        let mut value = p0;
        let mut d1 = -dz * p1;
        let mut d2 = dz * dz * p2;

        if self.nu != 0.0 {
            // T(z) = ν z^s G(z), G(z) = M(a, b, -z)
            let s = 2 * self.l + 1;
            let sf = f64::from(s);
            let [g0, g1, g2] = kummer_m_derivatives(1.0 + k + 2.0 * l, 2.0 + 2.0 * l, -z)?;
            let zs = z.powi(s as i32);
            let zs1 = z.powi(s as i32 - 1);
            let zs2 = z.powi(s as i32 - 2);
            let t0 = zs * g0;
            let t1 = sf * zs1 * g0 - zs * g1;
            let t2 = sf * (sf - 1.0) * zs2 * g0 - 2.0 * sf * zs1 * g1 + zs * g2;
            value -= self.nu * t0;
            d1 -= self.nu * dz * t1;
            d2 -= self.nu * dz * dz * t2;
        }
        Ok(Derivs2 { value, d1, d2 })
    }

    /// `u = r^{-l} e^{r/q} Φ` with `u'` and `u''`.
    pub fn u(&self, r: f64) -> Result<Derivs2> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("seed u needs r > 0, got {r}")));
        }
        let l = f64::from(self.l);
        let phi = self.phi(r)?;
        let g = r.powi(-(self.l as i32)) * (r / self.q()).exp();
        let a = -l / r + 1.0 / self.q();
        Ok(Derivs2 {
            value: g * phi.value,
            d1: g * (phi.d1 + a * phi.value),
            d2: g * (phi.d2 + 2.0 * a * phi.d1 + (a * a + l / (r * r)) * phi.value),
        })
    }

    /// `β = l/r - 1/q - Φ'/Φ` and `β'`.
    pub fn beta(&self, r: f64) -> Result<Jet> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("beta needs r > 0, got {r}")));
        }
        let l = f64::from(self.l);
        let phi = self.phi(r)?;
        if phi.value == 0.0 || !phi.value.is_finite() {
            return Err(Error::Singularity {
                r,
                what: format!("Φ vanishes for (l, k, λ) = ({}, {}, {})", self.l, self.k, self.lambda),
            });
        }
        let lg = phi.d1 / phi.value;
        Ok(Jet::new(
            l / r - 1.0 / self.q() - lg,
            -l / (r * r) - phi.d2 / phi.value + lg * lg,
        ))
    }

    /// Riccati residual `-β' + β² - (V_l - ε)` at `r`.
    pub fn riccati_residual(&self, r: f64) -> Result<f64> {
        let b = self.beta(r)?;
        Ok(-b.deriv + b.value * b.value - (coulomb(f64::from(self.l), r) - self.epsilon))
    }

    /// Residual of `-u'' + V_l u - ε u` at `r`.
    pub fn ode_residual(&self, r: f64) -> Result<f64> {
        let u = self.u(r)?;
        Ok(-u.d2 + (coulomb(f64::from(self.l), r) - self.epsilon) * u.value)
    }

    /// The closed-form constant `C_lk` of the missing state
    /// `C r^l e^{-r/q} / Φ`; `None` when the radicand is not positive
    /// (λ outside the seed's own domain).
    pub fn missing_state_constant(&self) -> Option<f64> {
        let abs_k = self.k.unsigned_abs();
        let radicand = (2.0 / self.q()).powi(2 * self.l as i32 + 1)
            * ((1.0 - self.lambda) / pochhammer(-2.0 * f64::from(self.l), abs_k))
            * factorial(abs_k)
            / factorial(2 * self.l);
        (radicand > 0.0).then(|| radicand.sqrt())
    }
}

/// Explicit integral representations of Φ for `k = 0` and `k = -1`.
///
/// `k = 0`: `1 - λ/(2l)! · γ(2l+1, 2r/l)`.
///
/// `k = -1`: `[1 - r/c] {1 + λ/(2l-1)! (2/(l-1))^{2l-1} F(r)}` with
/// `c = l(l-1)` and `F(r) = ∫_0^r x^{2l} e^{-2x/(l-1)} / (c-x)² dx`. The
/// integrand has a double pole at `x = c`; the numerator's derivative
/// vanishes there, so past `c` the integral continues analytically as its
/// Hadamard finite part. Points within 0.1 of `c` are refused.
pub fn phi_integral_form(l: u32, k: i32, lambda: f64, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::domain(format!("phi_integral_form needs r >= 0, got {r}")));
    }
    let lf = f64::from(l);
    match k {
        0 => {
            if l < 1 {
                return Err(Error::domain("k = 0 needs l >= 1"));
            }
            Ok(1.0 - lambda / factorial(2 * l) * lower_incomplete_gamma(2 * l + 1, 2.0 * r / lf))
        }
        -1 => {
            if l < 2 {
                return Err(Error::domain("k = -1 needs l >= 2"));
            }
            let c = lf * (lf - 1.0);
            if (r - c).abs() < 0.1 {
                return Err(Error::Range(format!(
                    "r = {r} lies within 0.1 of the removable point l(l-1) = {c}"
                )));
            }
            let decay = 2.0 / (lf - 1.0);
            let f = |x: f64| x.powi(2 * l as i32) * (-decay * x).exp();
            let integral = if r < c {
                let integrand = |x: f64| f(x) / ((c - x) * (c - x));
                let scale = coarse_magnitude(&integrand, 0.0, r);
                adaptive_simpson(integrand, 0.0, r, 1e-14 * scale.max(1e-300))
            } else {
                let fc = f(c);
                // (f(x) - f(c)) / (x-c)², with f(x)/f(c) = exp(2l (ln(1+u) - u)), u = (x-c)/c
                let g = |x: f64| {
                    let t = x - c;
                    if t == 0.0 {
                        return -fc * lf / (c * c);
                    }
                    let u = t / c;
                    fc * (2.0 * lf * ln1p_minus_x(u)).exp_m1() / (t * t)
                };
                let s1 = coarse_magnitude(&g, 0.0, c);
                let s2 = coarse_magnitude(&g, c, r);
                let smooth = adaptive_simpson(g, 0.0, c, 1e-14 * s1.max(1e-300))
                    + adaptive_simpson(g, c, r, 1e-14 * s2.max(1e-300));
                smooth - fc * (1.0 / (r - c) + 1.0 / c)
            };
            let amplitude = lambda / factorial(2 * l - 1) * decay.powi(2 * l as i32 - 1);
            Ok((1.0 - r / c) * (1.0 + amplitude * integral))
        }
        _ => Err(Error::domain(format!(
            "integral form exists only for k in {{0, -1}}, got k = {k}"
        ))),
    }
}

/// `ln(1+x) - x` without cancellation for small `x`.
fn ln1p_minus_x(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // -x²/2 + x³/3 - x⁴/4 + ...
        let mut power = x * x;
        let mut sum = 0.0;
        let mut n = 2.0;
        loop {
            let term = power / n;
            sum += if (n as u32).is_multiple_of(2) { -term } else { term };
            if term.abs() < 1e-17 * sum.abs() {
                return sum;
            }
            power *= x;
            n += 1.0;
        }
    } else {
        x.ln_1p() - x
    }
}

fn coarse_magnitude(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const PANELS: usize = 64;
    let h = (b - a) / PANELS as f64;
    (0..=PANELS).map(|i| f(a + i as f64 * h).abs()).sum::<f64>() * h.abs()
}

/// True iff Φ keeps one sign on `n_samples` equispaced points of `(0, r_max]`.
///
/// Fewer than 1000 samples are raised to 1000.
pub fn phi_positivity_scan(seed: &SeedSolution, r_max: f64, n_samples: usize) -> bool {
    let n = n_samples.max(1000);
    let mut sign = 0.0_f64;
    for i in 1..=n {
        let r = r_max * i as f64 / n as f64;
        match seed.phi(r) {
            Ok(p) if p.value != 0.0 && p.value.is_finite() => {
                if sign == 0.0 {
                    sign = p.value.signum();
                } else if p.value.signum() != sign {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}
