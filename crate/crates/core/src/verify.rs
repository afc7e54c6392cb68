//! Independent numerical oracle.
//!
//! A potential is sampled on the radial grid, the three-point operator
//! `-D² + V` with Dirichlet ends is built, and its eigenvalues are located by
//! Sturm-sequence bisection. Nothing here knows how the potential was made.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{build_potential, FamilySpec, PartnerPotential, Spectrum};
use crate::hydrogen::{coulomb, energy_level, GridFunction, RadialGrid};

/// Default search interval; the deepest factorization energy is `-1`.
pub const DEFAULT_BRACKET: (f64, f64) = (-1.5, 0.0);

/// Eigenvalues are bisected to this absolute width.
pub const BISECTION_WIDTH: f64 = 1e-10;

/// A predicted hole is confirmed when no eigenvalue lies this close to it.
pub const HOLE_WINDOW: f64 = 0.02;

/// Anything that can be sampled at `r > 0`.
pub trait RadialPotential {
    fn potential(&self, r: f64) -> Result<f64>;
}

impl RadialPotential for PartnerPotential {
    fn potential(&self, r: f64) -> Result<f64> {
        self.value(r)
    }
}

/// The hydrogen-like `V_l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coulomb(pub u32);

impl RadialPotential for Coulomb {
    fn potential(&self, r: f64) -> Result<f64> {
        Ok(coulomb(f64::from(self.0), r))
    }
}

/// Wraps a plain closure.
pub struct FnPotential<F>(pub F);

impl<F: Fn(f64) -> f64> RadialPotential for FnPotential<F> {
    fn potential(&self, r: f64) -> Result<f64> {
        Ok((self.0)(r))
    }
}

/// Symmetric tridiagonal `-D² + V` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    diagonal: Vec<f64>,
    off_diagonal: Vec<f64>,
    grid: RadialGrid,
}

impl TridiagonalOperator {
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.off_diagonal
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.diagonal[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for (d, e) in self.diagonal[1..].iter().zip(&self.off_diagonal) {
            let prev = if q == 0.0 { f64::EPSILON * e.abs() } else { q };
            q = d - x - e * e / prev;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Eigenvalues in `[lo, hi)`.
    pub fn count_between(&self, lo: f64, hi: f64) -> usize {
        self.sturm_count(hi).saturating_sub(self.sturm_count(lo))
    }

    #[cfg(test)]
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diagonal[i] * v[i];
                if i > 0 {
                    y += self.off_diagonal[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    y += self.off_diagonal[i] * v[i + 1];
                }
                y
            })
            .collect()
    }
}

/// `diag = 2/h² + V(r_i)`, `off = -1/h²`; `ψ = 0` one step outside both ends.
pub fn discretize(potential: &impl RadialPotential, grid: &RadialGrid) -> Result<TridiagonalOperator> {
    let h = grid.h();
    let diagonal = grid
        .points()
        .map(|r| {
            let v = potential.potential(r)?;
            if v.is_finite() {
                Ok(2.0 / (h * h) + v)
            } else {
                Err(Error::NonFinite { r, value: v })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TridiagonalOperator {
        off_diagonal: vec![-1.0 / (h * h); diagonal.len() - 1],
        diagonal,
        grid: *grid,
    })
}

/// The `count` smallest eigenvalues inside `bracket`, ascending.
pub fn lowest_eigenvalues(op: &TridiagonalOperator, count: usize, bracket: (f64, f64)) -> Result<Vec<f64>> {
    let (lo, hi) = bracket;
    if !(lo < hi) {
        return Err(Error::domain(format!("bracket ({lo}, {hi}) is empty")));
    }
    if count == 0 {
        return Err(Error::domain("count must be >= 1"));
    }
    let base = op.sturm_count(lo);
    let found = op.sturm_count(hi) - base;
    if found < count {
        return Err(Error::Bracket {
            lo,
            hi,
            found,
            wanted: count,
        });
    }
    let mut out = Vec::with_capacity(count);
    let mut floor = lo;
    for j in 0..count {
        // smallest x with sturm_count(x) > base + j
        let (mut a, mut b) = (floor, hi);
        while b - a > BISECTION_WIDTH {
            let mid = 0.5 * (a + b);
            if op.sturm_count(mid) > base + j {
                b = mid;
            } else {
                a = mid;
            }
        }
        let e = 0.5 * (a + b);
        out.push(e);
        floor = a;
    }
    Ok(out)
}

/// Eigenvalues within `half_width` of `center`.
pub fn count_in_window(op: &TridiagonalOperator, center: f64, half_width: f64) -> usize {
    op.count_between(center - half_width, center + half_width)
}

/// Unit-norm eigenvector at a computed eigenvalue, by inverse iteration.
pub fn eigenvector(op: &TridiagonalOperator, eigenvalue: f64) -> Result<GridFunction> {
    let n = op.len();
    // shift slightly so the solve stays regular
    let shift = eigenvalue + 1e-9 * eigenvalue.abs().max(1.0);
    let mut v = vec![1.0; n];
    for _ in 0..4 {
        v = thomas_solve(&op.diagonal, &op.off_diagonal, shift, &v);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NonFinite {
                r: f64::NAN,
                value: norm,
            });
        }
        v.iter_mut().for_each(|x| *x /= norm);
    }
    let f = GridFunction::new(op.grid, v)?;
    let (mut f, _) = f.normalized()?;
    let lead = f.values().iter().copied().find(|x| x.abs() > 1e-8).unwrap_or(1.0);
    if lead < 0.0 {
        f = f.scaled(-1.0);
    }
    Ok(f)
}

fn thomas_solve(diag: &[f64], off: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut b = diag[0] - shift;
    c[0] = if n > 1 { off[0] / b } else { 0.0 };
    d[0] = rhs[0] / b;
    for i in 1..n {
        b = diag[i] - shift - off[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = off[i] / b;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / b;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Predicted versus computed levels for one family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub family: FamilySpec,
    pub predicted: Vec<f64>,
    pub computed: Vec<f64>,
    pub abs_errors: Vec<f64>,
    pub holes_expected: Vec<f64>,
    pub holes_confirmed: Vec<bool>,
    /// Eigenvalues below the search bracket; nonzero means spurious deep states.
    pub below_bracket: usize,
    pub grid_used: RadialGrid,
    pub tolerance: f64,
}

impl SpectrumReport {
    pub fn levels_ok(&self) -> bool {
        self.abs_errors.len() == self.predicted.len() && self.abs_errors.iter().all(|e| *e <= self.tolerance)
    }

    pub fn holes_ok(&self) -> bool {
        self.holes_confirmed.iter().all(|c| *c)
    }

    pub fn passed(&self) -> bool {
        self.levels_ok() && self.holes_ok() && self.below_bracket == 0
    }

    pub fn max_error(&self) -> f64 {
        self.abs_errors.iter().copied().fold(0.0, f64::max)
    }
}

/// Build the family, discretize it and compare its lowest `levels`
/// eigenvalues with the prediction.
pub fn spectrum_check(spec: &FamilySpec, levels: usize, grid: &RadialGrid, tol: f64) -> Result<SpectrumReport> {
    let potential = build_potential(spec)?;
    compare_spectrum(&potential, &potential.spectrum().lowest(levels), grid, tol)
}

/// Compare against an arbitrary prediction (the report fails if it is wrong).
pub fn compare_spectrum(
    potential: &PartnerPotential,
    predicted: &Spectrum,
    grid: &RadialGrid,
    tol: f64,
) -> Result<SpectrumReport> {
    let levels = predicted.levels.len();
    let op = discretize(potential, grid)?;
    let computed = lowest_eigenvalues(&op, levels, DEFAULT_BRACKET)?;
    let predicted_e = predicted.energies();
    let abs_errors = computed.iter().zip(&predicted_e).map(|(c, p)| (c - p).abs()).collect();
    let holes_expected: Vec<f64> = predicted.holes.iter().map(|h| h.energy).collect();
    let holes_confirmed = holes_expected
        .iter()
        .map(|h| count_in_window(&op, *h, HOLE_WINDOW) == 0)
        .collect();
    Ok(SpectrumReport {
        family: potential.family().clone(),
        predicted: predicted_e,
        computed,
        abs_errors,
        holes_expected,
        holes_confirmed,
        below_bracket: op.sturm_count(DEFAULT_BRACKET.0),
        grid_used: *grid,
        tolerance: tol,
    })
}

/// `‖(-D² + V - E) ψ‖ / ‖ψ‖` over interior points, central differences.
pub fn eigen_residual(potential: &impl RadialPotential, psi: &GridFunction, energy: f64) -> Result<f64> {
    let grid = psi.grid();
    let h = grid.h();
    let v = psi.values();
    let n = v.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 1..n - 1 {
        let r = grid.r(i);
        let lap = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
        let res = -lap + (potential.potential(r)? - energy) * v[i];
        num += res * res;
        den += v[i] * v[i];
    }
    if den == 0.0 {
        return Err(Error::domain("eigen residual of a zero function"));
    }
    Ok((num / den).sqrt())
}

/// Relative residual of `H̃ (A ψ_{nl}) = E_n (A ψ_{nl})`.
pub fn intertwining_residual(potential: &PartnerPotential, n: u32, grid: &RadialGrid) -> Result<f64> {
    let f = potential.intertwine(n, grid)?;
    let l = potential.family().l;
    eigen_residual(potential, &f, energy_level(l, n - l))
}

/// `‖A ψ_{nl}‖² / Π_s (E_n - ε_s) - 1`; the quadratic form `⟨A†A ψ, ψ⟩`
/// evaluated through the norm of `A ψ`.
pub fn quadratic_form_discrepancy(potential: &PartnerPotential, n: u32, grid: &RadialGrid) -> Result<f64> {
    let l = potential.family().l;
    let e = energy_level(l, n - l);
    let f = potential.intertwine(n, grid)?;
    let expected: f64 = potential.family().seeds()?.iter().map(|s| e - s.epsilon()).product();
    Ok(f.norm_sq() / expected - 1.0)
}

/// `log2(e_coarse / e_fine)` for a grid refinement by two.
pub fn observed_order(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::FamilySpec;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn discrete_laplacian_spectrum() {
        let grid = RadialGrid::new(0.1, 1.0, 200).unwrap();
        let c = 0.75;
        let op = discretize(&FnPotential(|_| c), &grid).unwrap();
        let h = grid.h();
        let n = grid.len() as f64;
        let exact: Vec<f64> = (1..=5)
            .map(|j| c + 2.0 / (h * h) * (1.0 - (f64::from(j) * PI / (n + 1.0)).cos()))
            .collect();
        let got = lowest_eigenvalues(&op, 5, (0.0, 1e3)).unwrap();
        for (g, e) in got.iter().zip(&exact) {
            assert!((g - e).abs() <= 1e-9, "{g} vs {e}");
        }
        let op2 = discretize(&FnPotential(|_| c), &RadialGrid::new(0.1, 1.0, 40).unwrap()).unwrap();
        let h2 = op2.grid().h();
        let e1 = c + 2.0 / (h2 * h2) * (1.0 - (PI / 41.0).cos());
        let got = lowest_eigenvalues(&op2, 1, (0.0, 1e3)).unwrap()[0];
        assert!((got - e1).abs() <= 1e-12 * e1.max(1.0) + BISECTION_WIDTH);
    }

    #[test]
    fn particle_in_a_box() {
        let grid = RadialGrid::new(0.01, 1.0, 400).unwrap();
        let op = discretize(&FnPotential(|_| 0.0), &grid).unwrap();
        let length = grid.r_max() - grid.r_min() + 2.0 * grid.h();
        let e = lowest_eigenvalues(&op, 1, (0.0, 100.0)).unwrap()[0];
        assert_relative_eq!(e, PI * PI / (length * length), max_relative = 1e-4);
    }

    #[test]
    fn operator_structure() {
        let grid = RadialGrid::new(0.5, 2.0, 11).unwrap();
        let op = discretize(&Coulomb(1), &grid).unwrap();
        let h = grid.h();
        assert_eq!(op.off_diagonal().len(), 10);
        assert!(op.off_diagonal().iter().all(|x| *x == -1.0 / (h * h)));
        assert_relative_eq!(op.diagonal()[3], 2.0 / (h * h) + coulomb(1.0, grid.r(3)));
        // symmetric by construction: <x, Ay> = <Ax, y>
        let x: Vec<f64> = (0..11).map(|i| (i as f64).sin()).collect();
        let y: Vec<f64> = (0..11).map(|i| (i as f64 * 0.3).cos()).collect();
        let lhs: f64 = x.iter().zip(op.apply(&y)).map(|(a, b)| a * b).sum();
        let rhs: f64 = op.apply(&x).iter().zip(&y).map(|(a, b)| a * b).sum();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn non_finite_potential_is_rejected() {
        let grid = RadialGrid::new(0.5, 2.0, 11).unwrap();
        let err = discretize(&FnPotential(|r| if r > 1.0 { f64::NAN } else { 0.0 }), &grid).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn bracket_errors() {
        let grid = RadialGrid::new(1e-3, 60.0, 20_001).unwrap();
        let op = discretize(&Coulomb(0), &grid).unwrap();
        assert!(matches!(
            lowest_eigenvalues(&op, 2, (-1.5, -0.5)),
            Err(Error::Bracket { found: 1, wanted: 2, .. })
        ));
        assert!(lowest_eigenvalues(&op, 1, (0.0, -1.0)).is_err());
    }

    #[test]
    fn coarse_hydrogen() {
        let grid = RadialGrid::new(2e-3, 80.0, 40_000).unwrap();
        let op = discretize(&Coulomb(0), &grid).unwrap();
        let e = lowest_eigenvalues(&op, 3, DEFAULT_BRACKET).unwrap();
        for (k, ek) in e.iter().enumerate() {
            assert!((ek - energy_level(0, k as u32 + 1)).abs() < 2e-3, "{ek}");
        }
        let v = eigenvector(&op, e[0]).unwrap();
        assert_eq!(v.sign_changes(), 0);
        let v = eigenvector(&op, e[2]).unwrap();
        assert_eq!(v.sign_changes(), 2);
        assert_eq!(count_in_window(&op, -0.25, 0.02), 1);
        assert_eq!(count_in_window(&op, -0.5, 0.02), 0);
    }

    #[test]
    fn hole_report() {
        let grid = RadialGrid::new(1e-3, 100.0, 50_001).unwrap();
        let report = spectrum_check(&FamilySpec::first_order(2, -1, 2.0), 3, &grid, 2e-3).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.holes_expected, vec![-0.25]);
    }

    #[test]
    fn wrong_prediction_fails() {
        let grid = RadialGrid::new(1e-3, 100.0, 50_001).unwrap();
        let p = build_potential(&FamilySpec::first_order(2, -1, 2.0)).unwrap();
        let mut predicted = p.spectrum().lowest(3);
        predicted.levels[0].energy = -0.9;
        let report = compare_spectrum(&p, &predicted, &grid, 2e-3).unwrap();
        assert!(!report.passed());
        assert!(report.holes_ok());
    }

    #[test]
    fn residual_orders() {
        assert_relative_eq!(observed_order(4.0, 1.0), 2.0);
    }
}
