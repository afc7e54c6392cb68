//! The base model: `H_l = -d²/dr² + l(l+1)/r² - 2/r` on the half line,
//! in units of the Bohr-like radius, plus the grid machinery every other
//! module samples onto.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[r_min, r_max]`, `r_min > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridParams", into = "GridParams")]
pub struct RadialGrid {
    r_min: f64,
    r_max: f64,
    n_points: usize,
}

/// Unvalidated grid description, as it appears in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub r_min: f64,
    pub r_max: f64,
    pub n_points: usize,
}

impl TryFrom<GridParams> for RadialGrid {
    type Error = Error;
    fn try_from(p: GridParams) -> Result<Self> {
        RadialGrid::new(p.r_min, p.r_max, p.n_points)
    }
}

impl From<RadialGrid> for GridParams {
    fn from(g: RadialGrid) -> Self {
        GridParams {
            r_min: g.r_min,
            r_max: g.r_max,
            n_points: g.n_points,
        }
    }
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, n_points: usize) -> Result<Self> {
        if !(r_min.is_finite() && r_max.is_finite()) {
            return Err(Error::domain("grid bounds must be finite"));
        }
        if r_min <= 0.0 {
            return Err(Error::domain(format!(
                "r_min = {r_min} must be > 0 (the potential is singular at the origin)"
            )));
        }
        if r_max <= r_min {
            return Err(Error::domain(format!(
                "r_max = {r_max} must exceed r_min = {r_min}"
            )));
        }
        if n_points < 3 {
            return Err(Error::domain(format!(
                "n_points = {n_points} must be at least 3"
            )));
        }
        Ok(RadialGrid {
            r_min,
            r_max,
            n_points,
        })
    }

    /// `(1e-3, 300, 300001)`, `h ≈ 1e-3`.
    pub fn reference() -> Self {
        RadialGrid {
            r_min: 1e-3,
            r_max: 300.0,
            n_points: 300_001,
        }
    }

    /// A grid reaching `4 n_max²` (the n-th state extends to about `2n²`)
    /// with spacing `h` and first point `h`, so that the implicit Dirichlet
    /// node sits at the origin.
    pub fn for_states(n_max: u32, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::domain(format!("grid spacing must be positive, got {h}")));
        }
        let r_max = (4.0 * f64::from(n_max * n_max)).max(20.0);
        let n_points = (r_max / h).round() as usize;
        RadialGrid::new(h, h * n_points as f64, n_points)
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        (self.r_max - self.r_min) / (self.n_points - 1) as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r_min + i as f64 * self.h()
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        let h = self.h();
        (0..self.n_points).map(move |i| self.r_min + i as f64 * h)
    }

    /// Same interval, half the spacing.
    pub fn refined(&self) -> Self {
        RadialGrid {
            n_points: 2 * self.n_points - 1,
            ..*self
        }
    }
}

/// Values of a real function at every point of a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                r: grid.r(i),
                value: *v,
            });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        GridFunction::new(grid, grid.points().map(f).collect())
    }

    pub fn try_from_fn(grid: RadialGrid, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let values = grid.points().map(f).collect::<Result<Vec<_>>>()?;
        GridFunction::new(grid, values)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Trapezoid quadrature of `self · other`.
    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        let n = self.values.len();
        let mut s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        s -= 0.5 * (self.values[0] * other.values[0] + self.values[n - 1] * other.values[n - 1]);
        Ok(s * self.grid.h())
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self).expect("same grid")
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, s: f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// Unit trapezoid norm; returns the normalized function and the factor applied.
    pub fn normalized(&self) -> Result<(GridFunction, f64)> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::domain(format!("cannot normalize a function of norm {norm}")));
        }
        Ok((self.scaled(1.0 / norm), 1.0 / norm))
    }

    pub fn zip_with(
        &self,
        other: &GridFunction,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        GridFunction::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Strict sign changes, skipping values below `1e-12 · max|f|`.
    pub fn sign_changes(&self) -> usize {
        self.sign_changes_above(1e-12 * self.max_abs())
    }

    pub fn sign_changes_above(&self, threshold: f64) -> usize {
        let mut last = 0.0_f64;
        let mut changes = 0;
        for &v in self.values.iter().filter(|v| v.abs() > threshold) {
            if last != 0.0 && v.signum() != last.signum() {
                changes += 1;
            }
            last = v;
        }
        changes
    }

    /// Second-order central differences, one-sided second-order stencils at the ends.
    pub fn derivative(&self) -> GridFunction {
        let f = &self.values;
        let n = f.len();
        let h = self.grid.h();
        let mut d = vec![0.0; n];
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
        for i in 1..n - 1 {
            d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        }
        GridFunction {
            grid: self.grid,
            values: d,
        }
    }

    pub fn second_derivative(&self) -> GridFunction {
        let f = &self.values;
        let n = f.len();
        let h2 = self.grid.h().powi(2);
        let mut d = vec![0.0; n];
        if n >= 4 {
            d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
            d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
        }
        for i in 1..n - 1 {
            d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
        }
        GridFunction {
            grid: self.grid,
            values: d,
        }
    }
}

/// `n = l + K`, `K >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantumNumbers {
    pub l: u32,
    pub radial: u32,
    pub n: u32,
}

impl QuantumNumbers {
    pub fn new(l: u32, radial: u32) -> Result<Self> {
        if radial == 0 {
            return Err(Error::domain("radial index K must be >= 1"));
        }
        Ok(QuantumNumbers {
            l,
            radial,
            n: l + radial,
        })
    }

    pub fn energy(&self) -> f64 {
        energy_level(self.l, self.radial)
    }
}

#[inline]
pub(crate) fn coulomb(l: f64, r: f64) -> f64 {
    l * (l + 1.0) / (r * r) - 2.0 / r
}

/// `V_l(r) = l(l+1)/r² - 2/r`.
pub fn coulomb_potential(l: u32, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("coulomb_potential needs r > 0, got {r}")));
    }
    Ok(coulomb(f64::from(l), r))
}

/// `E_{lK} = -1/(l+K)²`.
pub fn energy_level(l: u32, radial: u32) -> f64 {
    debug_assert!(radial >= 1);
    let n = f64::from(l + radial);
    -1.0 / (n * n)
}

/// Generalized Laguerre `L_k^{(α)}(x)` by the three-term recurrence.
pub fn laguerre(k: u32, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for j in 1..k {
        let j = f64::from(j);
        let next = ((2.0 * j + 1.0 + alpha - x) * cur - (j + alpha) * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Unnormalized `ψ_{nl}` and `ψ'_{nl}` at `r`:
/// `r^{l+1} e^{-r/n} L_{n-l-1}^{(2l+1)}(2r/n)`.
fn radial_shape(n: u32, l: u32, r: f64) -> (f64, f64) {
    let nf = f64::from(n);
    let lf = f64::from(l);
    let k = n - l - 1;
    let alpha = 2.0 * lf + 1.0;
    let x = 2.0 * r / nf;
    let lag = laguerre(k, alpha, x);
    let dlag = if k == 0 {
        0.0
    } else {
        -laguerre(k - 1, alpha + 1.0, x)
    };
    let envelope = r.powf(lf + 1.0) * (-r / nf).exp();
    let value = envelope * lag;
    let deriv = envelope * ((lf + 1.0) / r - 1.0 / nf) * lag + envelope * (2.0 / nf) * dlag;
    (value, deriv)
}

/// Bound state `ψ_{nl}` on `grid`, unit trapezoid norm, positive near the origin.
pub fn radial_eigenfunction(n: u32, l: u32, grid: &RadialGrid) -> Result<GridFunction> {
    Ok(radial_eigenfunction_with_derivative(n, l, grid)?.0)
}

/// `ψ_{nl}` and its analytic derivative, both scaled by the same normalization.
pub fn radial_eigenfunction_with_derivative(
    n: u32,
    l: u32,
    grid: &RadialGrid,
) -> Result<(GridFunction, GridFunction)> {
    if n <= l {
        return Err(Error::domain(format!(
            "principal number n = {n} must exceed l = {l}"
        )));
    }
    let (values, derivs): (Vec<f64>, Vec<f64>) = grid.points().map(|r| radial_shape(n, l, r)).unzip();
    let psi = GridFunction::new(*grid, values)?;
    let dpsi = GridFunction::new(*grid, derivs)?;
    let (psi, scale) = psi.normalized()?;
    Ok((psi, dpsi.scaled(scale)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coulomb_values() {
        assert_eq!(coulomb_potential(0, 1.0).unwrap(), -2.0);
        assert_eq!(coulomb_potential(1, 1.0).unwrap(), 0.0);
        assert_eq!(coulomb_potential(2, 2.0).unwrap(), 0.5);
        assert!(coulomb_potential(1, 0.0).is_err());
        assert!(coulomb_potential(1, -1.0).is_err());
    }

    #[test]
    fn coulomb_shape() {
        for l in 1..5u32 {
            // minimum at r = l(l+1)
            let r_star = f64::from(l * (l + 1));
            let mut prev = coulomb_potential(l, r_star).unwrap();
            for i in 1..400 {
                let r = r_star * (1.0 + 0.05 * f64::from(i));
                let v = coulomb_potential(l, r).unwrap();
                assert!(v > prev && v < 0.0);
                prev = v;
            }
        }
        assert!(coulomb_potential(3, 1e9).unwrap() > -3e-9);
    }

    #[test]
    fn energy_values() {
        assert_eq!(energy_level(1, 1), -0.25);
        assert_eq!(energy_level(2, 1), -1.0 / 9.0);
        assert_eq!(energy_level(0, 1), -1.0);
        assert_eq!(QuantumNumbers::new(2, 3).unwrap().n, 5);
        assert!(QuantumNumbers::new(2, 0).is_err());
    }

    #[test]
    fn grid_invariants() {
        let g = RadialGrid::new(1e-3, 10.0, 1001).unwrap();
        assert_relative_eq!(g.h(), (10.0 - 1e-3) / 1000.0);
        let pts: Vec<f64> = g.points().collect();
        assert!(pts.windows(2).all(|w| w[1] > w[0]));
        assert_relative_eq!(*pts.last().unwrap(), 10.0, max_relative = 1e-14);
        assert!(RadialGrid::new(0.0, 1.0, 10).is_err());
        assert!(RadialGrid::new(1.0, 1.0, 10).is_err());
        assert!(RadialGrid::new(0.1, 1.0, 2).is_err());
        assert_eq!(g.refined().len(), 2001);
    }

    #[test]
    fn grid_serde_validates() {
        let g: RadialGrid =
            serde_json::from_str(r#"{"r_min":0.001,"r_max":5.0,"n_points":11}"#).unwrap();
        assert_eq!(g.len(), 11);
        assert!(serde_json::from_str::<RadialGrid>(r#"{"r_min":-1,"r_max":5.0,"n_points":11}"#).is_err());
    }

    #[test]
    fn ground_state_normalization() {
        let g = RadialGrid::new(1e-3, 200.0, 200_001).unwrap();
        let psi = radial_eigenfunction(1, 0, &g).unwrap();
        assert!((psi.norm_sq() - 1.0).abs() < 1e-6);
        // ψ_10 = 2 r e^{-r}
        let i = 5000;
        assert_relative_eq!(psi.values()[i], 2.0 * g.r(i) * (-g.r(i)).exp(), max_relative = 1e-6);
    }

    #[test]
    fn node_counts() {
        let g = RadialGrid::new(1e-3, 400.0, 100_001).unwrap();
        for l in 0..4u32 {
            for n in (l + 1)..(l + 6) {
                let psi = radial_eigenfunction(n, l, &g).unwrap();
                assert_eq!(psi.sign_changes(), (n - l - 1) as usize, "n={n} l={l}");
            }
        }
        assert!(radial_eigenfunction(2, 2, &g).is_err());
    }

    #[test]
    fn small_r_behaviour() {
        let g = RadialGrid::new(1e-4, 50.0, 50_001).unwrap();
        for l in 0..4u32 {
            let psi = radial_eigenfunction(l + 2, l, &g).unwrap();
            let ratio = psi.values()[1] / psi.values()[0];
            let expect = (g.r(1) / g.r(0)).powi(l as i32 + 1);
            assert_relative_eq!(ratio, expect, max_relative = 1e-2);
        }
    }

    #[test]
    fn orthogonality() {
        let g = RadialGrid::new(1e-3, 300.0, 300_001).unwrap();
        for l in 0..3u32 {
            let states: Vec<_> = ((l + 1)..=(l + 4))
                .map(|n| radial_eigenfunction(n, l, &g).unwrap())
                .collect();
            for i in 0..states.len() {
                for j in 0..i {
                    assert!(states[i].inner(&states[j]).unwrap().abs() <= 1e-5);
                }
            }
        }
    }

    #[test]
    fn analytic_derivative_matches_differences() {
        let g = RadialGrid::new(1e-3, 60.0, 60_001).unwrap();
        let (psi, dpsi) = radial_eigenfunction_with_derivative(4, 1, &g).unwrap();
        let fd = psi.derivative();
        let err = fd
            .values()
            .iter()
            .zip(dpsi.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn discrete_residual_is_second_order() {
        let residual = |grid: &RadialGrid| {
            let (n, l) = (3u32, 1u32);
            let psi = radial_eigenfunction(n, l, grid).unwrap();
            let d2 = psi.second_derivative();
            let e = energy_level(l, n - l);
            let v = psi.values();
            let (mut num, mut den) = (0.0, 0.0);
            for i in 1..v.len() - 1 {
                let r = grid.r(i);
                let res = -d2.values()[i] + (coulomb(f64::from(l), r) - e) * v[i];
                num += res * res;
                den += v[i] * v[i];
            }
            (num / den).sqrt()
        };
        let g = RadialGrid::new(1e-3, 80.0, 8001).unwrap();
        let coarse = residual(&g);
        let fine = residual(&g.refined());
        assert!(coarse <= 1.0 * g.h().powi(2), "{coarse}");
        assert!(coarse / fine > 3.5 && coarse / fine < 4.5, "{}", coarse / fine);
    }
}
