//! Self-checks run by `urnmix verify`: each check compares an independent
//! computation against the representation catalog of every registered family.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::Ratio;
use serde::Serialize;

use crate::catalog::Catalog;
use crate::chains::{ChainModel, Registry};
use crate::error::Result;
use crate::exact::{evolve_path, spectrum};
use crate::model::{Family, ModelSpec, State};
use crate::montecarlo::{self, SimConfig};
use crate::space::{state_count, StateSpace};
use crate::spectral::{l2n_sq_bound, moment_s1, tv_upper, variance_ratio};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn record(&mut self, name: &str, outcome: Result<std::result::Result<String, String>>) {
        let (passed, detail) = match outcome {
            Ok(Ok(d)) => (true, d),
            Ok(Err(d)) => (false, d),
            Err(e) => (false, format!("error: {e}")),
        };
        self.checks.push(CheckOutcome {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

type Outcome = Result<std::result::Result<String, String>>;

pub const UNSIGNED_SPECTRUM_GRID: [(usize, usize); 3] = [(4, 2), (5, 2), (6, 3)];
pub const SIGNED_SPECTRUM_GRID: [(usize, usize); 3] = [(2, 1), (3, 1), (4, 2)];

fn spectrum_grid(signed: bool) -> &'static [(usize, usize)] {
    if signed {
        &SIGNED_SPECTRUM_GRID
    } else {
        &UNSIGNED_SPECTRUM_GRID
    }
}

/// Grid of the distribution sweeps: the spectrum grid plus one larger case.
pub fn plancherel_grid(signed: bool) -> Vec<(usize, usize)> {
    let mut grid = spectrum_grid(signed).to_vec();
    grid.push(if signed { (6, 3) } else { (12, 6) });
    grid
}

fn is_signed_family(registry: &Registry, name: &str) -> Result<bool> {
    Ok(registry.build(name, 2, 1)?.is_signed())
}

pub fn relative_error(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value.abs()
    } else {
        (value - reference).abs() / reference.abs()
    }
}

/// `sum dim * mult == |X|` for `n` up to `max_n`.
pub fn check_dimensions(registry: &Registry, name: &str, max_n: usize) -> Outcome {
    let mut cases = 0;
    for n in 2..=max_n {
        for r in 1..=n / 2 {
            let chain = registry.build(name, n, r)?;
            let total: BigUint = chain.catalog()?.total_dimension();
            let want = state_count(n, r, chain.is_signed());
            if total != want {
                return Ok(Err(format!(
                    "{name}({n},{r}): sum of dim*mult is {total}, state count is {want}"
                )));
            }
            cases += 1;
        }
    }
    Ok(Ok(format!("{cases} cases up to n = {max_n}")))
}

/// Sorted kernel eigenvalues equal the expanded catalog within `tol`.
pub fn check_spectrum(chain: &dyn ChainModel, tol: f64) -> Outcome {
    let spec = chain.spec();
    let from_kernel = spectrum(chain)?;
    let from_catalog = chain.catalog()?.expanded_spectrum();
    if from_kernel.len() != from_catalog.len() {
        return Ok(Err(format!(
            "spectrum mismatch for {spec}: {} kernel eigenvalues vs {} from catalog",
            from_kernel.len(),
            from_catalog.len()
        )));
    }
    let worst = from_kernel
        .iter()
        .zip(&from_catalog)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if worst > tol {
        Ok(Err(format!(
            "spectrum mismatch for {spec}: max deviation {worst:.3e}"
        )))
    } else {
        Ok(Ok(format!("{spec}: max deviation {worst:.3e}")))
    }
}

/// Exact `l2` distance vs catalog sum and `TV <= tv_upper`, for `k = 1..=kmax`.
pub fn check_plancherel(chain: &dyn ChainModel, kmax: u64, tol: f64) -> Outcome {
    let spec = chain.spec();
    let catalog: Catalog = chain.catalog()?;
    let path = evolve_path(chain, kmax)?;
    let mut worst = 0.0f64;
    for dist in &path[1..] {
        let k = dist.steps;
        let exact = dist.l2n_sq_distance();
        let bound = l2n_sq_bound(&catalog, k);
        let err = relative_error(exact, bound);
        worst = worst.max(err);
        if err > tol {
            return Ok(Err(format!(
                "plancherel mismatch for {spec} at k = {k}: exact {exact:.16e}, catalog {bound:.16e}"
            )));
        }
        let tv = dist.tv_distance();
        let (upper, _) = tv_upper(&catalog, k);
        if tv > upper {
            return Ok(Err(format!(
                "upper bound violated for {spec} at k = {k}: tv {tv:.16e} > {upper:.16e}"
            )));
        }
    }
    Ok(Ok(format!(
        "{spec}: k = 1..{kmax}, max relative error {worst:.3e}"
    )))
}

/// Exact `E s1` and `Var f / (E f)^2` against their closed forms for variant chains.
pub fn check_moments(chain: &dyn ChainModel, kmax: u64) -> Outcome {
    let spec = chain.spec();
    let space = StateSpace::for_chain(chain);
    let (n, r) = (spec.n, spec.r);
    let mut worst_mean = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for dist in &evolve_path(chain, kmax)?[1..] {
        let k = dist.steps;
        let (m1, m2) = dist.s1_moments(&space);
        let mean_err = (m1 - moment_s1(n, k)).abs();
        let ratio = (m2 - m1 * m1) / (m1 * m1);
        let ratio_err = relative_error(ratio, variance_ratio(n, r, k)?);
        worst_mean = worst_mean.max(mean_err);
        worst_ratio = worst_ratio.max(ratio_err);
        if mean_err > 1e-10 || ratio_err > 1e-8 {
            return Ok(Err(format!(
                "moment mismatch for {spec} at k = {k}: mean error {mean_err:.3e}, variance ratio error {ratio_err:.3e}"
            )));
        }
    }
    Ok(Ok(format!(
        "{spec}: mean error {worst_mean:.3e}, variance ratio error {worst_ratio:.3e}"
    )))
}

/// Subset marginal of a signed chain equals the unsigned reference chain.
pub fn check_marginal(
    signed: &dyn ChainModel,
    unsigned: &dyn ChainModel,
    kmax: u64,
    tol: f64,
) -> Outcome {
    let space = StateSpace::for_chain(signed);
    let a = evolve_path(signed, kmax)?;
    let b = evolve_path(unsigned, kmax)?;
    let mut worst = 0.0f64;
    for (da, db) in a.iter().zip(&b) {
        let marginal = da.subset_marginal(&space);
        for (x, y) in marginal.iter().zip(&db.probs) {
            worst = worst.max((x - y).abs());
        }
    }
    let label = format!("{} vs {}", signed.spec(), unsigned.spec());
    if worst > tol {
        Ok(Err(format!("marginal mismatch for {label}: {worst:.3e}")))
    } else {
        Ok(Ok(format!(
            "{label}: k = 0..{kmax}, max deviation {worst:.3e}"
        )))
    }
}

/// Sample mean of `s1` within `sigmas` standard errors of `(1 - 2/n)^k`.
pub fn check_mc_mean(
    chain: &dyn ChainModel,
    k: u64,
    walkers: u64,
    seed: u64,
    sigmas: f64,
) -> Outcome {
    let spec = chain.spec();
    let s = montecarlo::run(
        chain,
        &SimConfig {
            model: spec,
            k,
            walkers,
            seed,
        },
    )?;
    let want = moment_s1(spec.n, k);
    let z = (s.mean_s1 - want).abs() / s.stderr_s1;
    let detail = format!(
        "{spec}, k = {k}: mean s1 {:.6} vs {want:.6}, {z:.2} standard errors",
        s.mean_s1
    );
    Ok(if z <= sigmas { Ok(detail) } else { Err(detail) })
}

/// Empirical TV within `tol` of the exact value.
pub fn check_mc_tv(chain: &dyn ChainModel, k: u64, walkers: u64, seed: u64, tol: f64) -> Outcome {
    let spec = chain.spec();
    let s = montecarlo::run(
        chain,
        &SimConfig {
            model: spec,
            k,
            walkers,
            seed,
        },
    )?;
    let exact = crate::exact::evolve(chain, k)?.tv_distance();
    let Some(emp) = s.empirical_tv else {
        return Ok(Err(format!("{spec}: too few walkers for empirical TV")));
    };
    let detail = format!("{spec}, k = {k}: empirical tv {emp:.6} vs exact {exact:.6}");
    Ok(if (emp - exact).abs() <= tol {
        Ok(detail)
    } else {
        Err(detail)
    })
}

pub const MC_SEED: u64 = 20_240_601;

/// Runs the suite for every family in `registry`.
pub fn run_suite(registry: &Registry, level: Level) -> VerifyReport {
    let mut report = VerifyReport::default();
    for name in registry.names() {
        let signed = match is_signed_family(registry, name) {
            Ok(s) => s,
            Err(e) => {
                report.record(&format!("{name} build"), Err(e));
                continue;
            }
        };
        let max_n = if signed { 10 } else { 14 };
        report.record(
            &format!("dimension identity {name}"),
            check_dimensions(registry, name, max_n),
        );
        for &(n, r) in spectrum_grid(signed) {
            let outcome = registry
                .build(name, n, r)
                .and_then(|c| check_spectrum(c.as_ref(), 1e-8));
            report.record(&format!("spectrum match {name}"), outcome);
        }
        if level == Level::Full {
            for (n, r) in plancherel_grid(signed) {
                let outcome = registry
                    .build(name, n, r)
                    .and_then(|c| check_plancherel(c.as_ref(), 20, 1e-9));
                report.record(&format!("plancherel {name}"), outcome);
            }
        }
    }
    if level == Level::Full {
        full_variant_checks(registry, &mut report);
    }
    report
}

fn full_variant_checks(registry: &Registry, report: &mut VerifyReport) {
    let variant = Family::Variant.name();
    if !registry.contains(variant) {
        return;
    }
    for n in [6, 8, 10] {
        let outcome = registry
            .build(variant, n, n / 2)
            .and_then(|c| check_moments(c.as_ref(), 15));
        report.record(&format!("moments {variant}"), outcome);
    }
    for name in registry.names() {
        if !matches!(is_signed_family(registry, name), Ok(true)) {
            continue;
        }
        let outcome = registry.build(name, 6, 3).and_then(|s| {
            let u = registry.build(variant, 6, 3)?;
            check_marginal(s.as_ref(), u.as_ref(), 10, 1e-12)
        });
        report.record(&format!("signed marginal {name}"), outcome);
    }
    let outcome = registry
        .build(variant, 100, 50)
        .and_then(|c| check_mc_mean(c.as_ref(), 115, 100_000, MC_SEED, 4.0));
    report.record("monte carlo mean", outcome);
    let outcome = registry
        .build(variant, 10, 5)
        .and_then(|c| check_mc_tv(c.as_ref(), 3, 1_000_000, MC_SEED, 0.01));
    report.record("monte carlo tv", outcome);
}

/// Test fixture: a chain whose catalog misreports its first non-unit eigenvalue.
#[derive(Debug)]
pub struct PerturbedCatalog {
    inner: Box<dyn ChainModel>,
}

impl ChainModel for PerturbedCatalog {
    fn spec(&self) -> ModelSpec {
        self.inner.spec()
    }

    fn step(&self, state: State, rng: &mut dyn rand::RngCore) -> State {
        self.inner.step(state, rng)
    }

    fn for_each_transition(&self, state: State, visit: &mut dyn FnMut(State, Ratio<i64>)) {
        self.inner.for_each_transition(state, visit)
    }

    fn catalog(&self) -> Result<Catalog> {
        let mut cat = self.inner.catalog()?;
        if let Some(e) = cat
            .entries
            .iter_mut()
            .find(|e| e.eigenvalue != Ratio::from_integer(1))
        {
            e.eigenvalue += Ratio::new(1, 1000);
        }
        Ok(cat)
    }
}

/// Same families as `base`, every catalog perturbed.
pub fn perturbed_registry(base: &Registry) -> Registry {
    let mut out = Registry::empty();
    for name in base.names() {
        let factory = base.factory(name).expect("listed name");
        let factory = Arc::clone(&factory);
        out.register(name, move |n, r| {
            Ok(Box::new(PerturbedCatalog {
                inner: factory(n, r)?,
            }) as Box<dyn ChainModel>)
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        let report = run_suite(&Registry::builtin(), Level::Quick);
        assert!(report.passed(), "{report}");
        assert_eq!(report.checks.len(), 4 * 4);
    }

    #[test]
    fn perturbation_is_detected_as_spectrum_mismatch() {
        let report = run_suite(&perturbed_registry(&Registry::builtin()), Level::Quick);
        assert!(!report.passed());
        let failed: Vec<_> = report.failures().collect();
        assert_eq!(failed.len(), 4 * 3);
        for f in failed {
            assert!(f.name.starts_with("spectrum match"), "{}", f.name);
            assert!(f.detail.contains("spectrum mismatch"), "{}", f.detail);
        }
    }

    #[test]
    fn relative_error_handles_zero() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert_eq!(relative_error(1e-3, 0.0), 1e-3);
        assert!((relative_error(1.1, 1.0) - 0.1).abs() < 1e-12);
    }
}
