//! Partner families of `H_l`.
//!
//! * order 1: `V_{l-1}^{(k)} = V_{l-1} - 2 (ln Φ_k)''`
//! * order 2: `V_{l-2}^{(km)} = V_l + 2η' = V_{l-2} + 2α'`, with
//!   `η = -(ε_m - ε_k)/(β_m - β_k)` and `α = η + (1-2l)/r`
//! * order n: the chain `β^{(km)} = -β^{(k)} - (ε_m - ε_k)/(β^{(m)} - β^{(k)})`
//!   applied stage by stage, `V = V_l + 2 (Σ_s β_s)'`.
//!
//! Every derivative that enters a potential is analytic: seeds supply
//! `(β, β')` from the Kummer derivative identity and [`Jet`] arithmetic
//! carries them through the chain.

use serde::{Deserialize, Serialize};

use crate::crum::{CrumSeries, SERIES_SWITCH_R};
use crate::error::{Error, Result};
use crate::hydrogen::{coulomb, energy_level, radial_eigenfunction_with_derivative, GridFunction, RadialGrid};
use crate::jet::Jet;
use crate::seeds::{parity_name, Derivs2, LambdaDomain, SeedSolution};

/// Default number of inherited levels stored on a [`PartnerPotential`].
pub const DEFAULT_K_MAX: u32 = 8;

/// Regularity scans for chains of order >= 3 sample `(0, CHAIN_SCAN_R_MAX]`.
pub const CHAIN_SCAN_R_MAX: f64 = 300.0;
pub const CHAIN_SCAN_SAMPLES: usize = 30_000;

/// One `(k, λ)` stage of a family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub k: i32,
    pub lambda: f64,
}

/// Base `l` and the ordered chain of seeds; `order = chain.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub l: u32,
    pub chain: Vec<Stage>,
}

impl FamilySpec {
    pub fn new(l: u32, chain: Vec<Stage>) -> Self {
        FamilySpec { l, chain }
    }

    pub fn first_order(l: u32, k: i32, lambda: f64) -> Self {
        FamilySpec::new(l, vec![Stage { k, lambda }])
    }

    pub fn second_order(l: u32, (k, lambda_k): (i32, f64), (m, lambda_m): (i32, f64)) -> Self {
        FamilySpec::new(
            l,
            vec![
                Stage { k, lambda: lambda_k },
                Stage { k: m, lambda: lambda_m },
            ],
        )
    }

    pub fn order(&self) -> usize {
        self.chain.len()
    }

    /// Centrifugal index of the partner, `l - order`.
    pub fn l_out(&self) -> u32 {
        self.l.saturating_sub(self.order() as u32)
    }

    /// Same stages in the opposite order.
    pub fn reversed(&self) -> FamilySpec {
        let mut chain = self.chain.clone();
        chain.reverse();
        FamilySpec::new(self.l, chain)
    }

    /// Seeds for every stage, checking only the structural rules
    /// (`k` range, distinct energies, `order <= l`).
    pub fn seeds(&self) -> Result<Vec<SeedSolution>> {
        if self.chain.is_empty() {
            return Err(Error::domain("a family needs at least one stage"));
        }
        if self.order() > self.l as usize {
            return Err(Error::domain(format!(
                "order {} exceeds l = {} (only l distinct k values exist)",
                self.order(),
                self.l
            )));
        }
        let seeds = self
            .chain
            .iter()
            .map(|s| SeedSolution::new_unchecked(self.l, s.k, s.lambda))
            .collect::<Result<Vec<_>>>()?;
        for (i, a) in seeds.iter().enumerate() {
            if seeds[..i].iter().any(|b| b.epsilon() == a.epsilon()) {
                return Err(Error::CoincidentEnergy(a.epsilon()));
            }
        }
        Ok(seeds)
    }

    /// Seeds after the full regularity check for this order.
    pub fn validated_seeds(&self) -> Result<Vec<SeedSolution>> {
        let seeds = self.seeds()?;
        match seeds.as_slice() {
            [one] => {
                SeedSolution::new(one.l(), one.k(), one.lambda())?;
            }
            [a, b] => check_paired_domain(a, b)?,
            _ => {
                if !crum_sign_scan(&seeds, CHAIN_SCAN_R_MAX, CHAIN_SCAN_SAMPLES) {
                    return Err(Error::domain(format!(
                        "chain {:?} is singular: the stage Wronskian changes sign on (0, {}]",
                        self.chain, CHAIN_SCAN_R_MAX
                    )));
                }
            }
        }
        Ok(seeds)
    }
}

/// Which admissibility rule a stage's λ was checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainRule {
    SingleSeed,
    /// Higher factorization energy of a second-order pair.
    PairedHigher,
    /// Lower factorization energy of a second-order pair.
    PairedLower,
    /// Order >= 3: sign scan of the chain Wronskian.
    WronskianScan,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppliedDomain {
    pub k: i32,
    pub lambda: f64,
    pub rule: DomainRule,
    /// The open interval required, when the rule is an interval.
    pub interval: Option<String>,
}

impl FamilySpec {
    /// The admissibility rule and interval each stage is held to.
    pub fn applied_domains(&self) -> Result<Vec<AppliedDomain>> {
        let seeds = self.seeds()?;
        let paired = match seeds.as_slice() {
            [a, b] => Some(paired_lambda_domain(a.k(), b.k())?),
            _ => None,
        };
        Ok(seeds
            .iter()
            .map(|s| {
                let (rule, interval) = match (seeds.len(), paired) {
                    (1, _) => (DomainRule::SingleSeed, Some(crate::seeds::lambda_domain(s.k()))),
                    (2, Some(d)) if s.k() == d.n => (DomainRule::PairedHigher, Some(d.lambda_n)),
                    (2, Some(d)) => (DomainRule::PairedLower, Some(d.lambda_s)),
                    _ => (DomainRule::WronskianScan, None),
                };
                AppliedDomain {
                    k: s.k(),
                    lambda: s.lambda(),
                    rule,
                    interval: interval.map(|d| d.to_string()),
                }
            })
            .collect())
    }
}

/// Where a predicted level comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "origin", rename_all = "snake_case")]
pub enum LevelOrigin {
    /// Added at the factorization energy of seed `k`.
    New { k: i32 },
    /// `E_{lK}` of the base Hamiltonian.
    Inherited { radial: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    /// Principal number: the level sits at `-1/n²`.
    pub n: u32,
    pub energy: f64,
    #[serde(flatten)]
    pub origin: LevelOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub n: u32,
    pub energy: f64,
}

/// Sorted levels plus the `-1/m²` values missing between the lowest and
/// highest of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub levels: Vec<Level>,
    pub holes: Vec<Hole>,
}

impl Spectrum {
    fn from_levels(mut levels: Vec<Level>) -> Spectrum {
        levels.sort_by_key(|lv| lv.n);
        let holes = match (levels.first(), levels.last()) {
            (Some(lo), Some(hi)) => (lo.n..hi.n)
                .filter(|m| !levels.iter().any(|lv| lv.n == *m))
                .map(|n| Hole {
                    n,
                    energy: -1.0 / f64::from(n * n),
                })
                .collect(),
            _ => Vec::new(),
        };
        Spectrum { levels, holes }
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|lv| lv.energy).collect()
    }

    /// The `count` lowest levels, holes recomputed for that range.
    pub fn lowest(&self, count: usize) -> Spectrum {
        Spectrum::from_levels(self.levels.iter().take(count).copied().collect())
    }
}

/// `{ε_l^{(k_i)}} ∪ {-1/(l+K)² : 1 <= K <= k_max}` with origins and holes.
pub fn predicted_spectrum(spec: &FamilySpec, k_max: u32) -> Result<Spectrum> {
    if k_max == 0 {
        return Err(Error::domain("K_max must be >= 1"));
    }
    let seeds = spec.seeds()?;
    let mut levels: Vec<Level> = seeds
        .iter()
        .map(|s| Level {
            n: (s.l() as i32 + s.k()) as u32,
            energy: s.epsilon(),
            origin: LevelOrigin::New { k: s.k() },
        })
        .collect();
    levels.extend((1..=k_max).map(|radial| Level {
        n: spec.l + radial,
        energy: energy_level(spec.l, radial),
        origin: LevelOrigin::Inherited { radial },
    }));
    Ok(Spectrum::from_levels(levels))
}

/// The `(λ_n, λ_s)` domain of a second-order family, where `n` labels the
/// higher factorization energy and `s` the lower.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedDomain {
    pub n: i32,
    pub s: i32,
    pub lambda_n: LambdaDomain,
    pub lambda_s: LambdaDomain,
}

impl PairedDomain {
    /// Domains in the `(k, m)` argument order.
    pub fn for_pair(&self, k: i32) -> LambdaDomain {
        if k == self.n {
            self.lambda_n
        } else {
            self.lambda_s
        }
    }
}

/// Parity table for second-order families.
///
/// `|n|` even, `|s|` odd: both in `(-inf, 1)`; `|n|` odd, `|s|` even: both in
/// `(1, inf)`; equal parities: `λ_n` in its own single-seed domain, `λ_s` in
/// the opposite one.
pub fn paired_lambda_domain(k: i32, m: i32) -> Result<PairedDomain> {
    if k == m {
        return Err(Error::domain(format!("paired domain needs k != m, got k = m = {k}")));
    }
    // ε = -1/(l+k)² grows with k, so n = max(k, m).
    let (n, s) = if k > m { (k, m) } else { (m, k) };
    let n_even = n % 2 == 0;
    let s_even = s % 2 == 0;
    use LambdaDomain::{AboveOne, BelowOne};
    let (lambda_n, lambda_s) = match (n_even, s_even) {
        (true, false) => (BelowOne, BelowOne),
        (false, true) => (AboveOne, AboveOne),
        (true, true) => (BelowOne, AboveOne),
        (false, false) => (AboveOne, BelowOne),
    };
    Ok(PairedDomain {
        n,
        s,
        lambda_n,
        lambda_s,
    })
}

fn check_paired_domain(a: &SeedSolution, b: &SeedSolution) -> Result<()> {
    let dom = paired_lambda_domain(a.k(), b.k())?;
    for seed in [a, b] {
        let d = dom.for_pair(seed.k());
        if !d.contains(seed.lambda()) {
            let role = if seed.k() == dom.n { "n" } else { "s" };
            return Err(Error::domain(format!(
                "lambda {} (k = {}) not in {d} required for the pair (|n| {}, |s| {}) with {role} = {}",
                seed.lambda(),
                seed.k(),
                parity_name(dom.n),
                parity_name(dom.s),
                seed.k()
            )));
        }
    }
    Ok(())
}

/// `-β_k - (ε_m - ε_k)/(β_m - β_k)` on jets.
pub fn chain_beta_at(beta_k: Jet, beta_m: Jet, eps_k: f64, eps_m: f64) -> Result<Jet> {
    if eps_k == eps_m {
        return Err(Error::CoincidentEnergy(eps_k));
    }
    let diff = beta_m - beta_k;
    if diff.value == 0.0 {
        return Err(Error::Singularity {
            r: f64::NAN,
            what: "β^(m) = β^(k) in the chain denominator".into(),
        });
    }
    Ok(-beta_k - Jet::constant(eps_m - eps_k) / diff)
}

/// Iterated SUSY potential as an r-evaluator.
pub fn chain_beta<F, G>(beta_k: F, beta_m: G, eps_k: f64, eps_m: f64) -> Result<impl Fn(f64) -> Result<Jet>>
where
    F: Fn(f64) -> Result<Jet>,
    G: Fn(f64) -> Result<Jet>,
{
    if eps_k == eps_m {
        return Err(Error::CoincidentEnergy(eps_k));
    }
    Ok(move |r: f64| {
        chain_beta_at(beta_k(r)?, beta_m(r)?, eps_k, eps_m).map_err(|e| match e {
            Error::Singularity { what, .. } => Error::Singularity { r, what },
            other => other,
        })
    })
}

/// The SUSY potential of every stage at `r`: `[β^{(k1)}, β^{(k1 k2)}, ...]`.
pub fn stage_betas(seeds: &[SeedSolution], r: f64) -> Result<Vec<Jet>> {
    let mut row = seeds.iter().map(|s| s.beta(r)).collect::<Result<Vec<_>>>()?;
    let mut eps: Vec<f64> = seeds.iter().map(SeedSolution::epsilon).collect();
    let mut out = Vec::with_capacity(seeds.len());
    while !row.is_empty() {
        let head = row[0];
        let eps_head = eps[0];
        out.push(head);
        let next = row[1..]
            .iter()
            .zip(&eps[1..])
            .map(|(b, e)| chain_beta_at(head, *b, eps_head, *e))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                Error::Singularity { what, .. } => Error::Singularity { r, what },
                other => other,
            })?;
        row = next;
        eps.remove(0);
    }
    Ok(out)
}

/// Riccati residual of each stage against the potential it factorizes:
/// `-β_s' + β_s² - (V_{s-1} - ε_s)` with `V_0 = V_l`.
pub fn chain_riccati_residuals(seeds: &[SeedSolution], r: f64) -> Result<Vec<f64>> {
    let betas = stage_betas(seeds, r)?;
    let l = f64::from(seeds[0].l());
    let mut v = coulomb(l, r);
    let mut out = Vec::with_capacity(betas.len());
    for (b, s) in betas.iter().zip(seeds) {
        out.push(-b.deriv + b.value * b.value - (v - s.epsilon()));
        v += 2.0 * b.deriv;
    }
    Ok(out)
}

/// Sign of the Crum Wronskian `Wr(u_1, ..., u_n) = Π_s u_s^{(s)}` along a
/// dense scan; true iff it never changes.
///
/// The stage seeds obey `u_j^{(s+1)} = u_j^{(s)} (β_s - β_s(j))`, so only
/// signs of Φ and of the stage denominators are needed. Near the origin,
/// where those denominators are lost to cancellation, the series form is
/// used instead.
pub fn crum_sign_scan(seeds: &[SeedSolution], r_max: f64, samples: usize) -> bool {
    let Ok(series) = CrumSeries::new(seeds) else {
        return false;
    };
    let mut reference = 0.0_f64;
    for i in 1..=samples {
        let r = r_max * i as f64 / samples as f64;
        let sign = if r < SERIES_SWITCH_R {
            series.sign(r)
        } else {
            match crum_sign_at(seeds, r) {
                Some(s) => s,
                None => continue,
            }
        };
        if reference == 0.0 {
            reference = sign;
        } else if sign != reference {
            return false;
        }
    }
    reference != 0.0
}

fn crum_sign_at(seeds: &[SeedSolution], r: f64) -> Option<f64> {
    let mut sign: Vec<f64> = Vec::with_capacity(seeds.len());
    for s in seeds {
        let phi = s.phi(r).ok()?.value;
        if phi == 0.0 {
            return None;
        }
        sign.push(phi.signum());
    }
    let mut row: Vec<Jet> = seeds.iter().map(|s| s.beta(r)).collect::<Result<_>>().ok()?;
    let mut eps: Vec<f64> = seeds.iter().map(SeedSolution::epsilon).collect();
    let mut total = 1.0;
    while !row.is_empty() {
        total *= sign[0];
        let (head, eps_head) = (row[0], eps[0]);
        for j in 1..row.len() {
            let d = head.value - row[j].value;
            if d == 0.0 {
                return None;
            }
            sign[j] *= d.signum();
            row[j] = chain_beta_at(head, row[j], eps_head, eps[j]).ok()?;
        }
        row.remove(0);
        sign.remove(0);
        eps.remove(0);
    }
    Some(total)
}

/// η, γ, d, c of the second-order intertwiner `B = D² + η D + γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderCoefficients {
    seed_k: SeedSolution,
    seed_m: SeedSolution,
    /// `-ε_m - ε_k`
    pub d: f64,
    /// `((ε_m - ε_k)/2)²`
    pub c: f64,
}

/// Below this `|β_k - β_m|` the Wronskian form of η is used.
const ETA_FALLBACK: f64 = 1e-12;

impl SecondOrderCoefficients {
    pub fn seeds(&self) -> (&SeedSolution, &SeedSolution) {
        (&self.seed_k, &self.seed_m)
    }

    /// `(η, η')`; `η' = η² - η (β_k + β_m)` follows from `η = -W'/W`,
    /// `W' = (ε_k - ε_m) u_k u_m`.
    pub fn eta(&self, r: f64) -> Result<Jet> {
        let (sk, sm) = (&self.seed_k, &self.seed_m);
        let pk = sk.phi(r)?;
        let pm = sm.phi(r)?;
        let de = sm.epsilon() - sk.epsilon();
        if pk.value != 0.0 && pm.value != 0.0 {
            let lk = pk.d1 / pk.value;
            let lm = pm.d1 / pm.value;
            // β_k - β_m with the common l/r dropped
            let delta = (1.0 / sm.q() - 1.0 / sk.q()) - lk + lm;
            if delta.abs() >= ETA_FALLBACK {
                let l_over_r = f64::from(sk.l()) / r;
                let sum = 2.0 * l_over_r - 1.0 / sk.q() - 1.0 / sm.q() - lk - lm;
                let eta = de / delta;
                return Ok(Jet::new(eta, eta * eta - eta * sum));
            }
        }
        self.eta_wronskian(r, &pk, &pm)
    }

    /// η from the scaled Wronskian `W/(g_k g_m) = Φ_k Φ_m (β_k - β_m)`,
    /// which stays finite where either Φ vanishes.
    fn eta_wronskian(&self, r: f64, pk: &Derivs2, pm: &Derivs2) -> Result<Jet> {
        let (sk, sm) = (&self.seed_k, &self.seed_m);
        let w = scaled_wronskian(sk, sm, pk, pm);
        if w == 0.0 || !w.is_finite() {
            return Err(Error::Singularity {
                r,
                what: format!("Wronskian W({}, {}) vanishes", sk.k(), sm.k()),
            });
        }
        let l_over_r = f64::from(sk.l()) / r;
        let nk = (l_over_r - 1.0 / sk.q()) * pk.value - pk.d1;
        let nm = (l_over_r - 1.0 / sm.q()) * pm.value - pm.d1;
        let de = sm.epsilon() - sk.epsilon();
        let eta = de * pk.value * pm.value / w;
        let eta_sum = de * (nk * pm.value + nm * pk.value) / w;
        Ok(Jet::new(eta, eta * eta - eta_sum))
    }

    /// `γ = (η² - η' - d - 2V_l)/2`.
    pub fn gamma(&self, r: f64) -> Result<f64> {
        let e = self.eta(r)?;
        Ok(0.5 * (e.value * e.value - e.deriv - self.d - 2.0 * coulomb(f64::from(self.seed_k.l()), r)))
    }

    /// `α = η + (1-2l)/r` and `α'`.
    pub fn alpha(&self, r: f64) -> Result<Jet> {
        let e = self.eta(r)?;
        let c = 1.0 - 2.0 * f64::from(self.seed_k.l());
        Ok(Jet::new(e.value + c / r, e.deriv - c / (r * r)))
    }
}

fn scaled_wronskian(sk: &SeedSolution, sm: &SeedSolution, pk: &Derivs2, pm: &Derivs2) -> f64 {
    pk.value * pm.value * (1.0 / sm.q() - 1.0 / sk.q()) + pk.value * pm.d1 - pk.d1 * pm.value
}

/// Coefficients of `B^{(km)}`; needs a common `l` and `ε_k != ε_m`.
pub fn second_order_coefficients(seed_k: &SeedSolution, seed_m: &SeedSolution) -> Result<SecondOrderCoefficients> {
    if seed_k.l() != seed_m.l() {
        return Err(Error::domain(format!(
            "seeds must share l (got {} and {})",
            seed_k.l(),
            seed_m.l()
        )));
    }
    let (ek, em) = (seed_k.epsilon(), seed_m.epsilon());
    if ek == em {
        return Err(Error::CoincidentEnergy(ek));
    }
    Ok(SecondOrderCoefficients {
        seed_k: *seed_k,
        seed_m: *seed_m,
        d: -em - ek,
        c: (0.5 * (em - ek)).powi(2),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Construction {
    FirstOrder(SeedSolution),
    /// The evaluator supplies the stage betas, which the closed form lacks.
    SecondOrder(SecondOrderCoefficients, ChainEvaluator),
    Chain(ChainEvaluator),
}

/// Stage recursion away from the origin, prefix Wronskian series near it.
#[derive(Debug, Clone, PartialEq)]
struct ChainEvaluator {
    seeds: Vec<SeedSolution>,
    /// `prefixes[s]` is the series of `W(u_1, ..., u_{s+1})`.
    prefixes: Vec<CrumSeries>,
}

impl ChainEvaluator {
    fn new(seeds: Vec<SeedSolution>) -> Result<Self> {
        let prefixes = (1..=seeds.len())
            .map(|s| CrumSeries::new(&seeds[..s]))
            .collect::<Result<Vec<_>>>()?;
        Ok(ChainEvaluator { seeds, prefixes })
    }

    /// `β_s = -(ln W_s / W_{s-1})'`.
    fn stage_betas(&self, r: f64) -> Result<Vec<Jet>> {
        if r >= SERIES_SWITCH_R {
            return stage_betas(&self.seeds, r);
        }
        let mut prev = (0.0, 0.0);
        let mut out = Vec::with_capacity(self.seeds.len());
        for p in &self.prefixes {
            let cur = p.log_derivatives(r)?;
            out.push(Jet::new(prev.0 - cur.0, prev.1 - cur.1));
            prev = cur;
        }
        Ok(out)
    }

    fn slope(&self, r: f64) -> Result<f64> {
        if r < SERIES_SWITCH_R {
            let full = self.prefixes.last().expect("chains are non-empty");
            return Ok(-full.log_derivatives(r)?.1);
        }
        Ok(stage_betas(&self.seeds, r)?.iter().map(|b| b.deriv).sum())
    }
}

/// A generated potential with its predicted spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct PartnerPotential {
    l_out: u32,
    family: FamilySpec,
    predicted: Spectrum,
    construction: Construction,
}

impl PartnerPotential {
    fn new(family: FamilySpec, construction: Construction) -> Result<Self> {
        Ok(PartnerPotential {
            l_out: family.l_out(),
            predicted: predicted_spectrum(&family, DEFAULT_K_MAX)?,
            family,
            construction,
        })
    }

    pub fn l_out(&self) -> u32 {
        self.l_out
    }

    pub fn family(&self) -> &FamilySpec {
        &self.family
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.predicted
    }

    pub fn predicted_levels(&self) -> Vec<f64> {
        self.predicted.energies()
    }

    /// `V_{l_out}(r)`, the hydrogen-like potential the partner tends to at both ends.
    pub fn base_value(&self, r: f64) -> f64 {
        coulomb(f64::from(self.l_out), r)
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("potentials are evaluated at r > 0, got {r}")));
        }
        match &self.construction {
            Construction::FirstOrder(seed) => {
                let phi = seed.phi(r)?;
                if phi.value == 0.0 {
                    return Err(Error::Singularity {
                        r,
                        what: "Φ vanishes".into(),
                    });
                }
                let lg = phi.d1 / phi.value;
                Ok(coulomb(f64::from(self.l_out), r) - 2.0 * (phi.d2 / phi.value - lg * lg))
            }
            Construction::SecondOrder(coef, _) => {
                let eta = coef.eta(r)?;
                Ok(coulomb(f64::from(self.family.l), r) + 2.0 * eta.deriv)
            }
            Construction::Chain(chain) => Ok(coulomb(f64::from(self.family.l), r) + 2.0 * chain.slope(r)?),
        }
    }

    /// SUSY potential of every stage, in chain order.
    pub fn stage_betas(&self, r: f64) -> Result<Vec<Jet>> {
        match &self.construction {
            Construction::Chain(chain) => chain.stage_betas(r),
            Construction::FirstOrder(seed) => Ok(vec![seed.beta(r)?]),
            Construction::SecondOrder(_, chain) => chain.stage_betas(r),
        }
    }

    /// `A ψ_{nl}` without normalization, `A` the intertwiner of this family.
    ///
    /// Orders 1 and 2 are analytic throughout (`ψ''` comes from the
    /// eigenvalue equation); higher orders difference the intermediate
    /// states from the third stage on.
    pub fn intertwine(&self, n: u32, grid: &RadialGrid) -> Result<GridFunction> {
        let l = self.family.l;
        let (psi, dpsi) = radial_eigenfunction_with_derivative(n, l, grid)?;
        let e = energy_level(l, n.checked_sub(l).filter(|k| *k >= 1).ok_or_else(|| {
            Error::domain(format!("n = {n} must exceed l = {l}"))
        })?);
        match &self.construction {
            Construction::FirstOrder(seed) => apply_a(seed, &psi, &dpsi),
            Construction::SecondOrder(coef, _) => {
                let values = grid
                    .points()
                    .enumerate()
                    .map(|(i, r)| {
                        let eta = coef.eta(r)?.value;
                        let gamma = coef.gamma(r)?;
                        Ok((coulomb(f64::from(l), r) - e + gamma) * psi.values()[i] + eta * dpsi.values()[i])
                    })
                    .collect::<Result<Vec<_>>>()?;
                GridFunction::new(*grid, values)
            }
            Construction::Chain(chain) => {
                let betas: Vec<Vec<Jet>> = grid.points().map(|r| chain.stage_betas(r)).collect::<Result<_>>()?;
                let first: Vec<f64> = (0..grid.len())
                    .map(|i| dpsi.values()[i] + betas[i][0].value * psi.values()[i])
                    .collect();
                let mut f = GridFunction::new(*grid, first)?;
                if chain.seeds.len() >= 2 {
                    let values = grid
                        .points()
                        .enumerate()
                        .map(|(i, r)| {
                            let (b1, b2) = (betas[i][0], betas[i][1]);
                            let (p, dp) = (psi.values()[i], dpsi.values()[i]);
                            let df = (coulomb(f64::from(l), r) - e) * p + b1.deriv * p + b1.value * dp;
                            df + b2.value * f.values()[i]
                        })
                        .collect();
                    f = GridFunction::new(*grid, values)?;
                }
                for s in 2..chain.seeds.len() {
                    let df = f.derivative();
                    let values = (0..grid.len())
                        .map(|i| df.values()[i] + betas[i][s].value * f.values()[i])
                        .collect();
                    f = GridFunction::new(*grid, values)?;
                }
                Ok(f)
            }
        }
    }

    /// `-β_s' + β_s² - (V_{s-1} - ε_s)` for every stage, `V_0 = V_l`.
    pub fn riccati_residuals(&self, r: f64) -> Result<Vec<f64>> {
        let betas = self.stage_betas(r)?;
        let seeds = self.family.seeds()?;
        let mut v = coulomb(f64::from(self.family.l), r);
        let mut out = Vec::with_capacity(betas.len());
        for (b, s) in betas.iter().zip(&seeds) {
            out.push(-b.deriv + b.value * b.value - (v - s.epsilon()));
            v += 2.0 * b.deriv;
        }
        Ok(out)
    }

    /// For second-order potentials, the `V_{l-2} + 2α'` form.
    pub fn value_alpha_form(&self, r: f64) -> Result<Option<f64>> {
        match &self.construction {
            Construction::SecondOrder(coef, _) => {
                let alpha = coef.alpha(r)?;
                Ok(Some(coulomb(f64::from(self.l_out), r) + 2.0 * alpha.deriv))
            }
            _ => Ok(None),
        }
    }

    pub fn sample(&self, grid: &RadialGrid) -> Result<GridFunction> {
        GridFunction::try_from_fn(*grid, |r| self.value(r))
    }
}

/// `V_{l-1}^{(k)} = V_{l-1} - 2 (ln Φ)''`.
pub fn first_order_potential(seed: &SeedSolution) -> Result<PartnerPotential> {
    let checked = SeedSolution::new(seed.l(), seed.k(), seed.lambda())?;
    PartnerPotential::new(
        FamilySpec::first_order(seed.l(), seed.k(), seed.lambda()),
        Construction::FirstOrder(checked),
    )
}

/// `V_{l-2}^{(km)} = V_l + 2η'`, symmetric in `k ↔ m`.
pub fn second_order_potential(seed_k: &SeedSolution, seed_m: &SeedSolution) -> Result<PartnerPotential> {
    if seed_k.l() < 2 {
        return Err(Error::domain("second-order families need l >= 2"));
    }
    let coef = second_order_coefficients(seed_k, seed_m)?;
    check_paired_domain(seed_k, seed_m)?;
    PartnerPotential::new(
        FamilySpec::second_order(
            seed_k.l(),
            (seed_k.k(), seed_k.lambda()),
            (seed_m.k(), seed_m.lambda()),
        ),
        Construction::SecondOrder(coef, ChainEvaluator::new(vec![*seed_k, *seed_m])?),
    )
}

/// Any order through the stage recursion, `V_l + 2 (Σ_s β_s)'`.
pub fn chain_potential(spec: &FamilySpec) -> Result<PartnerPotential> {
    let seeds = spec.validated_seeds()?;
    PartnerPotential::new(spec.clone(), Construction::Chain(ChainEvaluator::new(seeds)?))
}

/// Closed forms for orders 1 and 2, the chain recursion beyond.
pub fn build_potential(spec: &FamilySpec) -> Result<PartnerPotential> {
    let seeds = spec.validated_seeds()?;
    match seeds.as_slice() {
        [one] => first_order_potential(one),
        [a, b] => second_order_potential(a, b),
        _ => PartnerPotential::new(spec.clone(), Construction::Chain(ChainEvaluator::new(seeds)?)),
    }
}

/// A missing (kernel) state on a grid, with the closed-form normalization
/// for comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingState {
    pub energy: f64,
    /// Unit trapezoid norm, positive near the origin.
    pub psi: GridFunction,
    /// Factor that turned the raw closed-form shape into `psi`.
    pub numeric_constant: f64,
    /// The closed-form constant, when real.
    pub closed_form_constant: Option<f64>,
}

impl MissingState {
    /// `numeric / closed-form`; 1 when both normalize under `∫ dr`.
    pub fn constant_ratio(&self) -> Option<f64> {
        self.closed_form_constant.map(|c| self.numeric_constant / c)
    }

    fn from_raw(energy: f64, raw: GridFunction, closed_form_constant: Option<f64>) -> Result<Self> {
        let (mut psi, mut scale) = raw.normalized()?;
        let lead = psi
            .values()
            .iter()
            .copied()
            .find(|v| v.abs() > 1e-8)
            .unwrap_or(1.0);
        if lead < 0.0 {
            psi = psi.scaled(-1.0);
            scale = -scale;
        }
        Ok(MissingState {
            energy,
            psi,
            numeric_constant: scale.abs(),
            closed_form_constant,
        })
    }
}

/// `ψ_ε ∝ r^l e^{-r/q} / Φ`, the extra ground state of `V_{l-1}^{(k)}`.
pub fn missing_state_1(seed: &SeedSolution, grid: &RadialGrid) -> Result<MissingState> {
    let l = seed.l() as i32;
    let raw = GridFunction::try_from_fn(*grid, |r| {
        let phi = seed.phi(r)?.value;
        if phi == 0.0 {
            return Err(Error::Singularity {
                r,
                what: "Φ vanishes in the missing state".into(),
            });
        }
        Ok(r.powi(l) * (-r / seed.q()).exp() / phi)
    })?;
    MissingState::from_raw(seed.epsilon(), raw, seed.missing_state_constant())
}

/// `(Ψ_{ε_k} ∝ u_m/W, Ψ_{ε_m} ∝ u_k/W)` of the second-order partner.
///
/// The closed-form constants are `C_lk √|ε_k - ε_m|` (and `k ↔ m`); the
/// magnitude is taken because the square root is imaginary for one of
/// the two orderings.
pub fn missing_states_2(
    seed_k: &SeedSolution,
    seed_m: &SeedSolution,
    grid: &RadialGrid,
) -> Result<(MissingState, MissingState)> {
    second_order_coefficients(seed_k, seed_m)?;
    check_paired_domain(seed_k, seed_m)?;
    let l = seed_k.l() as i32;
    let wronskian = |r: f64| -> Result<(Derivs2, Derivs2, f64)> {
        let pk = seed_k.phi(r)?;
        let pm = seed_m.phi(r)?;
        let w = scaled_wronskian(seed_k, seed_m, &pk, &pm);
        if w == 0.0 {
            return Err(Error::Singularity {
                r,
                what: "Wronskian vanishes inside the paired domain".into(),
            });
        }
        Ok((pk, pm, w))
    };
    let raw_k = GridFunction::try_from_fn(*grid, |r| {
        let (_, pm, w) = wronskian(r)?;
        Ok(r.powi(l) * (-r / seed_k.q()).exp() * pm.value / w)
    })?;
    let raw_m = GridFunction::try_from_fn(*grid, |r| {
        let (pk, _, w) = wronskian(r)?;
        Ok(r.powi(l) * (-r / seed_m.q()).exp() * pk.value / w)
    })?;
    let gap = (seed_k.epsilon() - seed_m.epsilon()).abs().sqrt();
    Ok((
        MissingState::from_raw(
            seed_k.epsilon(),
            raw_k,
            seed_k.missing_state_constant().map(|c| c * gap),
        )?,
        MissingState::from_raw(
            seed_m.epsilon(),
            raw_m,
            seed_m.missing_state_constant().map(|c| c * gap),
        )?,
    ))
}

fn same_grid(a: &GridFunction, b: &GridFunction) -> Result<()> {
    if a.grid() == b.grid() {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

fn beta_on_grid(seed: &SeedSolution, grid: &RadialGrid) -> Result<Vec<f64>> {
    grid.points().map(|r| seed.beta(r).map(|b| b.value)).collect()
}

/// `a ψ = ψ' + β ψ`.
pub fn apply_a(seed: &SeedSolution, psi: &GridFunction, dpsi: &GridFunction) -> Result<GridFunction> {
    same_grid(psi, dpsi)?;
    let beta = beta_on_grid(seed, psi.grid())?;
    let values = psi
        .values()
        .iter()
        .zip(dpsi.values())
        .zip(&beta)
        .map(|((p, dp), b)| dp + b * p)
        .collect();
    GridFunction::new(*psi.grid(), values)
}

/// `a† ψ = -ψ' + β ψ`.
pub fn apply_a_adjoint(seed: &SeedSolution, psi: &GridFunction, dpsi: &GridFunction) -> Result<GridFunction> {
    same_grid(psi, dpsi)?;
    let beta = beta_on_grid(seed, psi.grid())?;
    let values = psi
        .values()
        .iter()
        .zip(dpsi.values())
        .zip(&beta)
        .map(|((p, dp), b)| -dp + b * p)
        .collect();
    GridFunction::new(*psi.grid(), values)
}

/// `(E_n - ε)^{-1/2} a ψ_{nl}` from the analytic eigenfunction derivative.
pub fn transformed_state_1(seed: &SeedSolution, n: u32, grid: &RadialGrid) -> Result<GridFunction> {
    let (psi, dpsi) = radial_eigenfunction_with_derivative(n, seed.l(), grid)?;
    let e = energy_level(seed.l(), n - seed.l());
    Ok(apply_a(seed, &psi, &dpsi)?.scaled((e - seed.epsilon()).sqrt().recip()))
}

/// The seed with the higher factorization energy has a zero-free Φ inside
/// the paired domain, so it goes first in the factorization `a^{(nm)} a^{(n)}`.
fn regular_first<'a>(a: &'a SeedSolution, b: &'a SeedSolution) -> (&'a SeedSolution, &'a SeedSolution) {
    if a.epsilon() > b.epsilon() {
        (a, b)
    } else {
        (b, a)
    }
}

/// `B ψ` as the composition of two first-order steps, with finite-difference
/// derivatives of the grid data.
pub fn apply_b(seed_k: &SeedSolution, seed_m: &SeedSolution, psi: &GridFunction) -> Result<GridFunction> {
    second_order_coefficients(seed_k, seed_m)?;
    let (first, second) = regular_first(seed_k, seed_m);
    let grid = *psi.grid();
    let inner = apply_a(first, psi, &psi.derivative())?;
    let d_inner = inner.derivative();
    let values = grid
        .points()
        .zip(inner.values().iter().zip(d_inner.values()))
        .map(|(r, (f, df))| {
            let b = chain_beta_at(first.beta(r)?, second.beta(r)?, first.epsilon(), second.epsilon())?;
            Ok(df + b.value * f)
        })
        .collect::<Result<Vec<_>>>()?;
    GridFunction::new(grid, values)
}

/// `B ψ = ψ'' + η ψ' + γ ψ` directly from the coefficients.
pub fn apply_b_direct(seed_k: &SeedSolution, seed_m: &SeedSolution, psi: &GridFunction) -> Result<GridFunction> {
    let coef = second_order_coefficients(seed_k, seed_m)?;
    let grid = *psi.grid();
    let d1 = psi.derivative();
    let d2 = psi.second_derivative();
    let values = grid
        .points()
        .enumerate()
        .map(|(i, r)| {
            let eta = coef.eta(r)?.value;
            let gamma = coef.gamma(r)?;
            Ok(d2.values()[i] + eta * d1.values()[i] + gamma * psi.values()[i])
        })
        .collect::<Result<Vec<_>>>()?;
    GridFunction::new(grid, values)
}

/// `B† ψ = ψ'' - η ψ' + (γ - η') ψ`.
pub fn apply_b_adjoint(seed_k: &SeedSolution, seed_m: &SeedSolution, psi: &GridFunction) -> Result<GridFunction> {
    let coef = second_order_coefficients(seed_k, seed_m)?;
    let grid = *psi.grid();
    let d1 = psi.derivative();
    let d2 = psi.second_derivative();
    let values = grid
        .points()
        .enumerate()
        .map(|(i, r)| {
            let eta = coef.eta(r)?;
            let gamma = coef.gamma(r)?;
            Ok(d2.values()[i] - eta.value * d1.values()[i] + (gamma - eta.deriv) * psi.values()[i])
        })
        .collect::<Result<Vec<_>>>()?;
    GridFunction::new(grid, values)
}

/// `B ψ_{nl} / √((E_n - ε_m)(E_n - ε_k))`, with `ψ''` taken from the
/// eigenvalue equation so that no differencing is involved.
pub fn transformed_state_2(
    seed_k: &SeedSolution,
    seed_m: &SeedSolution,
    n: u32,
    grid: &RadialGrid,
) -> Result<GridFunction> {
    let coef = second_order_coefficients(seed_k, seed_m)?;
    let l = seed_k.l();
    let (psi, dpsi) = radial_eigenfunction_with_derivative(n, l, grid)?;
    let e = energy_level(l, n - l);
    let values = grid
        .points()
        .enumerate()
        .map(|(i, r)| {
            let eta = coef.eta(r)?.value;
            let gamma = coef.gamma(r)?;
            let p = psi.values()[i];
            Ok((coulomb(f64::from(l), r) - e + gamma) * p + eta * dpsi.values()[i])
        })
        .collect::<Result<Vec<_>>>()?;
    let norm = ((e - seed_m.epsilon()) * (e - seed_k.epsilon())).sqrt();
    Ok(GridFunction::new(*grid, values)?.scaled(norm.recip()))
}
