//! Power-series Wronskians of seed solutions near the origin.
//!
//! Each seed is `u_j = r^{-l} F_j` with `F_j = e^{r/q_j} Φ_j` entire, so
//! `W(u_1, ..., u_n) = r^{-nl} W(F_1, ..., F_n)`. The `F_j` share their
//! Frobenius coefficients through order one and their differences start at
//! ever higher powers, which is why the stage recursion loses about
//! `r^{-2(n-1)}` in relative accuracy as `r -> 0`. Reducing the coefficient
//! rows to distinct leading powers first makes the lowest power of the
//! Wronskian series explicit, with no cancellation left.

use crate::error::{Error, Result};
use crate::seeds::SeedSolution;
use crate::specfun::{factorial, pochhammer};

/// Below this radius chains are evaluated from the series.
pub(crate) const SERIES_SWITCH_R: f64 = 0.5;

const EXTRA_TERMS: usize = 64;

/// Relative size under which a reduced coefficient counts as zero.
const ZERO_PIVOT: f64 = 1e-9;

/// Taylor coefficients of `F = e^{r/q} Φ` up to degree `len - 1`.
///
/// `F` solves `r F'' - 2l F' + (2 + εr) F = 0`, so
/// `p (p - 1 - 2l) c_p = -2 c_{p-1} - ε c_{p-2}`; at `p = 2l + 1` the
/// left side vanishes and `c_{2l+1}` carries the λ dependence.
pub(crate) fn frobenius_coefficients(seed: &SeedSolution, len: usize) -> Vec<f64> {
    let l = seed.l() as usize;
    let q = seed.q();
    let eps = seed.epsilon();
    let abs_k = seed.k().unsigned_abs();
    let free = 2 * l + 1;
    // terminating M(k, -2l, -2r/q) times e^{r/q}, up to degree 2l + 1
    let poly: Vec<f64> = (0..=abs_k)
        .map(|i| {
            pochhammer(f64::from(seed.k()), i) / (pochhammer(-2.0 * l as f64, i) * factorial(i))
                * (-2.0 / q).powi(i as i32)
        })
        .collect();
    let mut c = vec![0.0; len];
    for (p, cp) in c.iter_mut().enumerate().take(len.min(free + 1)) {
        *cp = poly
            .iter()
            .enumerate()
            .filter(|(i, _)| *i <= p)
            .map(|(i, m)| m * q.powi(-((p - i) as i32)) / factorial((p - i) as u32))
            .sum();
    }
    if len > free {
        c[free] -= seed.nu() * (2.0 / q).powi(free as i32);
    }
    for p in free + 1..len {
        let pf = p as f64;
        c[p] = (-2.0 * c[p - 1] - eps * c[p - 2]) / (pf * (pf - 1.0 - 2.0 * l as f64));
    }
    c
}

fn mul_truncated(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, x) in a.iter().enumerate().filter(|(_, x)| **x != 0.0) {
        for (j, y) in b.iter().enumerate().take(len - i.min(len)) {
            out[i + j] += x * y;
        }
    }
    out
}

fn derivative(a: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().enumerate().skip(1).map(|(p, c)| p as f64 * c).collect();
    out.push(0.0);
    out
}

/// `W(u_1, ..., u_n) = r^{t - nl} w(r)` with `w(0) != 0`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CrumSeries {
    n: usize,
    l: u32,
    t: usize,
    w: Vec<f64>,
}

impl CrumSeries {
    pub(crate) fn new(seeds: &[SeedSolution]) -> Result<Self> {
        let n = seeds.len();
        let l = seeds[0].l();
        let len = 2 * l as usize + 1 + EXTRA_TERMS;
        let mut rows: Vec<Vec<f64>> = seeds.iter().map(|s| frobenius_coefficients(s, len)).collect();
        let column_scale: Vec<f64> = (0..len)
            .map(|p| rows.iter().map(|row| row[p].abs()).fold(0.0_f64, f64::max))
            .collect();

        // Echelon form by adding multiples of pivot rows; W is unchanged.
        let mut lead = vec![usize::MAX; n];
        let mut open: Vec<usize> = (0..n).collect();
        for p in 0..len {
            if open.is_empty() {
                break;
            }
            let Some(&pivot) = open
                .iter()
                .max_by(|a, b| rows[**a][p].abs().total_cmp(&rows[**b][p].abs()))
            else {
                break;
            };
            if rows[pivot][p].abs() <= ZERO_PIVOT * column_scale[p] {
                for &i in &open {
                    rows[i][p] = 0.0;
                }
                continue;
            }
            lead[pivot] = p;
            open.retain(|i| *i != pivot);
            let pivot_row = rows[pivot].clone();
            for &i in &open {
                let f = rows[i][p] / pivot_row[p];
                for (x, y) in rows[i].iter_mut().zip(&pivot_row).skip(p) {
                    *x -= f * y;
                }
                rows[i][p] = 0.0;
            }
        }
        if !open.is_empty() {
            return Err(Error::domain(
                "seed coefficient rows are linearly dependent at the series order used",
            ));
        }

        // derivative table: table[m][i] = D^m G_i
        let mut table = vec![rows];
        for m in 1..n {
            let next = table[m - 1].iter().map(|s| derivative(s)).collect();
            table.push(next);
        }
        // det over column subsets, expanding along derivative row |mask| - 1
        let mut minors: Vec<Vec<f64>> = vec![Vec::new(); 1 << n];
        let mut one = vec![0.0; len];
        one[0] = 1.0;
        minors[0] = one;
        for mask in 1usize..(1 << n) {
            let m = mask.count_ones() as usize - 1;
            let mut acc = vec![0.0; len];
            let mut sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
            // columns of the mask in increasing order; the sign alternates from
            // the last-column cofactor backwards
            let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            for &i in members.iter() {
                let sub = mask & !(1 << i);
                let term = mul_truncated(&table[m][i], &minors[sub], len);
                for (a, b) in acc.iter_mut().zip(&term) {
                    *a += sign * b;
                }
                sign = -sign;
            }
            minors[mask] = acc;
        }
        let full = &minors[(1 << n) - 1];
        let lead_sum: usize = lead.iter().sum();
        let t = lead_sum - n * (n - 1) / 2;
        let w = full[t..].to_vec();
        if w[0] == 0.0 {
            return Err(Error::domain("Wronskian series has a vanishing leading coefficient"));
        }
        Ok(CrumSeries { n, l, t, w })
    }

    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for c in self.w.iter().rev() {
            d2 = d2 * r + 2.0 * d1;
            d1 = d1 * r + v;
            v = v * r + c;
        }
        (v, d1, d2)
    }

    /// `(ln |W|)'` and `(ln |W|)''` of `W(u_1, ..., u_n)`.
    pub(crate) fn log_derivatives(&self, r: f64) -> Result<(f64, f64)> {
        let (w, w1, w2) = self.eval(r);
        if w == 0.0 || !w.is_finite() {
            return Err(Error::Singularity {
                r,
                what: "Wronskian series vanishes".into(),
            });
        }
        let p = self.t as f64 - (self.n as f64) * f64::from(self.l);
        let g = w1 / w;
        Ok((p / r + g, -p / (r * r) + w2 / w - g * g))
    }

    /// Sign of `W(u_1, ..., u_n)` at `r`.
    pub(crate) fn sign(&self, r: f64) -> f64 {
        self.eval(r).0.signum()
    }
}
