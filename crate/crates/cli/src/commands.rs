use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::json;
use urnmix::exact::{evolve_path, evolve_rational_path, space_size};
use urnmix::montecarlo::{self, SimConfig};
use urnmix::spectral::{
    big_to_f64, l2n_sq_bound, l2n_sq_bound_exact, lower_bound, theorem_k, tv_upper,
};
use urnmix::verify::{perturbed_registry, run_suite, Level};
use urnmix::{builtin_registry, catalog_for, ChainModel, Error, Family, ModelSpec, Result};

use crate::manifest::{OutputChecksum, RunManifest};
use crate::{BoundsArgs, Command, ExactArgs, LevelArg, ModelArgs, SimulateArgs, VerifyArgs};

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::CapExceeded { .. } => 3,
        _ => 2,
    }
}

pub fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Catalog(a) => catalog(a),
        Command::Bounds(a) => bounds(a),
        Command::Exact(a) => exact(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
    }
}

/// Collects outputs and writes the manifest at the end of a command.
struct Run {
    command: &'static str,
    model: Option<ModelSpec>,
    parameters: serde_json::Value,
    seed: Option<u64>,
    start: Instant,
    outputs: Vec<OutputChecksum>,
}

impl Run {
    fn new(command: &'static str, model: Option<ModelSpec>, parameters: serde_json::Value) -> Self {
        Run {
            command,
            model,
            parameters,
            seed: None,
            start: Instant::now(),
            outputs: vec![],
        }
    }

    /// Writes to `path`, or stdout when absent.
    fn emit(&mut self, path: Option<&Path>, bytes: &[u8]) -> Result<()> {
        match path {
            Some(p) => {
                fs::write(p, bytes)?;
                self.outputs
                    .push(OutputChecksum::of(&p.display().to_string(), bytes));
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()?;
                self.outputs.push(OutputChecksum::of("-", bytes));
            }
        }
        Ok(())
    }

    /// Manifest goes next to the primary output, or to stderr.
    fn finish(self, primary: Option<&Path>) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            model: self.model,
            parameters: self.parameters,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION"),
            wall_time_secs: self.start.elapsed().as_secs_f64(),
            outputs: self.outputs,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        match primary {
            Some(p) => {
                let mut name = p.as_os_str().to_owned();
                name.push(".manifest.json");
                fs::write(name, text)?;
            }
            None => eprint!("{text}"),
        }
        Ok(())
    }
}

fn model_spec(a: &ModelArgs) -> Result<ModelSpec> {
    let family: Family = a.family.parse()?;
    ModelSpec::new(family, a.n, a.r)
}

fn build_chain(a: &ModelArgs) -> Result<Box<dyn ChainModel>> {
    builtin_registry().build(&a.family, a.n, a.r)
}

fn parse_grid<T>(text: &str, parse: impl Fn(&str) -> Option<T>) -> Result<(T, T, T)> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::InvalidArgument(format!("grid `{text}` is not start:end:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok((
        parse(parts[0]).ok_or_else(bad)?,
        parse(parts[1]).ok_or_else(bad)?,
        parse(parts[2]).ok_or_else(bad)?,
    ))
}

pub fn k_values(k: Option<u64>, grid: Option<&str>) -> Result<Vec<u64>> {
    match (k, grid) {
        (Some(k), _) => Ok(vec![k]),
        (None, Some(g)) => {
            let (a, b, step) = parse_grid(g, |s| s.trim().parse::<u64>().ok())?;
            if step == 0 || a > b {
                return Err(Error::InvalidArgument(format!("empty step grid `{g}`")));
            }
            Ok((a..=b).step_by(step as usize).collect())
        }
        (None, None) => Err(Error::InvalidArgument("need --k or --k-grid".into())),
    }
}

pub fn c_values(c: Option<f64>, grid: Option<&str>) -> Result<Vec<f64>> {
    match (c, grid) {
        (Some(c), _) if c.is_finite() => Ok(vec![c]),
        (Some(c), _) => Err(Error::InvalidArgument(format!("c = {c} is not finite"))),
        (None, Some(g)) => {
            let (a, b, step) = parse_grid(g, |s| {
                s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
            })?;
            if step <= 0.0 || a > b {
                return Err(Error::InvalidArgument(format!("empty c grid `{g}`")));
            }
            let count = ((b - a) / step + 1e-9).floor() as u64;
            Ok((0..=count).map(|i| a + i as f64 * step).collect())
        }
        (None, None) => Ok(vec![]),
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn catalog(a: ModelArgs) -> Result<ExitCode> {
    let spec = model_spec(&a)?;
    let mut run = Run::new("catalog", Some(spec), json!({}));
    let cat = catalog_for(spec.family, spec.n, spec.r)?;
    let mut entries: Vec<_> = cat.entries.iter().collect();
    entries.sort_by_key(|e| e.label);
    let mut csv = String::from("family,n,r,label,dim,mult,eigenvalue_num,eigenvalue_den\n");
    for e in entries {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            spec.family,
            spec.n,
            spec.r,
            e.label,
            e.dim,
            e.mult,
            e.eigenvalue.numer(),
            e.eigenvalue.denom()
        )
        .unwrap();
    }
    let states = urnmix::space::state_count(spec.n, spec.r, spec.family.is_signed());
    writeln!(
        csv,
        "# totals: sum_dim_mult={} state_count={}",
        cat.total_dimension(),
        states
    )
    .unwrap();
    run.emit(a.output.as_deref(), csv.as_bytes())?;
    run.finish(a.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn bounds(a: BoundsArgs) -> Result<ExitCode> {
    let spec = model_spec(&a.model)?;
    let cat = catalog_for(spec.family, spec.n, spec.r)?;
    let cs = c_values(a.c, a.c_grid.as_deref())?;
    let mut run = Run::new(
        "bounds",
        Some(spec),
        json!({ "k": a.k, "k_grid": a.k_grid, "c": a.c, "c_grid": a.c_grid }),
    );
    let mut csv = String::new();
    if cs.is_empty() {
        csv.push_str("k,l2n_sq_bound,tv_upper,tv_upper_clamped\n");
        for k in k_values(a.k, a.k_grid.as_deref())? {
            let (raw, clamped) = tv_upper(&cat, k);
            writeln!(
                csv,
                "{k},{},{},{}",
                fmt_f(l2n_sq_bound(&cat, k)),
                fmt_f(raw),
                fmt_f(clamped)
            )
            .unwrap();
        }
    } else {
        let variant = spec.family == Family::Variant;
        csv.push_str("c,theorem_k,tv_upper_at_theorem_k");
        if variant {
            csv.push_str(",lower_k_threshold,lower_tv_guarantee");
        }
        csv.push('\n');
        for c in cs {
            let (tk, tv) = match theorem_k(spec.family, spec.n, spec.r, c) {
                Ok(k) => (k.to_string(), fmt_f(tv_upper(&cat, k).0)),
                Err(_) => (String::new(), String::new()),
            };
            write!(csv, "{c},{tk},{tv}").unwrap();
            if variant {
                match lower_bound(spec.n, spec.r, c) {
                    Ok(lb) => {
                        write!(csv, ",{},{}", lb.k_threshold, fmt_f(lb.tv_guarantee)).unwrap()
                    }
                    Err(_) => csv.push_str(",,"),
                }
            }
            csv.push('\n');
        }
    }
    run.emit(a.model.output.as_deref(), csv.as_bytes())?;
    run.finish(a.model.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn exact(a: ExactArgs) -> Result<ExitCode> {
    let chain = build_chain(&a.model)?;
    let spec = chain.spec();
    let ks = k_values(a.k, a.k_grid.as_deref())?;
    let kmax = *ks.iter().max().expect("nonempty grid");
    let cat = chain.catalog()?;
    let mut run = Run::new(
        "exact",
        Some(spec),
        json!({
            "k": a.k, "k_grid": a.k_grid, "rational": a.rational,
            "state_count": space_size(chain.as_ref()).to_string(),
        }),
    );
    let mut csv = String::from("k,tv_exact,l2n_sq_exact,tv_upper,plancherel_rel_err\n");
    let mut last = None;
    if a.rational {
        let path = evolve_rational_path(chain.as_ref(), kmax)?;
        for &k in &ks {
            let d = &path[k as usize];
            let l2 = d.l2n_sq_distance();
            let bound = l2n_sq_bound_exact(&cat, k);
            let rel = if bound == l2 {
                0.0
            } else {
                big_to_f64(&((l2.clone() - &bound) / &bound)).abs()
            };
            let tv = d.tv_distance().to_f64().unwrap_or(f64::NAN);
            writeln!(
                csv,
                "{k},{},{},{},{}",
                fmt_f(tv),
                fmt_f(big_to_f64(&l2)),
                fmt_f(tv_upper(&cat, k).0),
                fmt_f(rel)
            )
            .unwrap();
        }
        last = path.get(*ks.last().unwrap() as usize).map(|d| d.to_float());
    } else {
        let path = evolve_path(chain.as_ref(), kmax)?;
        for &k in &ks {
            let d = &path[k as usize];
            let l2 = d.l2n_sq_distance();
            let bound = l2n_sq_bound(&cat, k);
            let rel = urnmix::verify::relative_error(l2, bound);
            writeln!(
                csv,
                "{k},{},{},{},{}",
                fmt_f(d.tv_distance()),
                fmt_f(l2),
                fmt_f(tv_upper(&cat, k).0),
                fmt_f(rel)
            )
            .unwrap();
        }
        if a.distribution.is_some() {
            last = path.into_iter().nth(*ks.last().unwrap() as usize);
        }
    }
    run.emit(a.model.output.as_deref(), csv.as_bytes())?;
    if let (Some(p), Some(d)) = (a.distribution.as_deref(), last) {
        let mut bytes = Vec::new();
        d.write_csv(&mut bytes)?;
        run.emit(Some(p), &bytes)?;
    }
    run.finish(a.model.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SimulateOutput {
    model: ModelSpec,
    k: u64,
    walkers: u64,
    seed: u64,
    mean_s1: f64,
    stderr_s1: f64,
    expected_mean_s1: f64,
    empirical_tv: Option<f64>,
    tv_bias_ceiling: Option<f64>,
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let chain = build_chain(&a.model)?;
    let spec = chain.spec();
    if a.walkers == 0 {
        return Err(Error::InvalidArgument("walkers must be at least 1".into()));
    }
    let cfg = SimConfig {
        model: spec,
        k: a.k,
        walkers: a.walkers,
        seed: a.seed,
    };
    let mut run = Run::new(
        "simulate",
        Some(spec),
        json!({ "k": a.k, "walkers": a.walkers }),
    );
    run.seed = Some(a.seed);
    let start = Instant::now();
    let states = montecarlo::terminal_states(chain.as_ref(), cfg.k, cfg.walkers, cfg.seed);
    let s = montecarlo::summarize(chain.as_ref(), &cfg, &states, start.elapsed());
    let out = SimulateOutput {
        model: spec,
        k: s.k,
        walkers: s.walkers,
        seed: s.seed,
        mean_s1: s.mean_s1,
        stderr_s1: s.stderr_s1,
        expected_mean_s1: urnmix::spectral::moment_s1(spec.n, s.k),
        empirical_tv: s.empirical_tv,
        tv_bias_ceiling: s.tv_bias_ceiling,
    };
    let text = serde_json::to_string_pretty(&out).expect("summary serializes") + "\n";
    run.emit(a.model.output.as_deref(), text.as_bytes())?;
    if let Some(p) = a.records.as_deref() {
        let mut bytes = Vec::new();
        montecarlo::write_records(&mut bytes, &states)?;
        run.emit(Some(p), &bytes)?;
    }
    run.finish(a.model.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let level = match a.level {
        LevelArg::Quick => Level::Quick,
        LevelArg::Full => Level::Full,
    };
    let mut run = Run::new("verify", None, json!({ "level": level }));
    let report = if a.perturb_catalog {
        run_suite(&perturbed_registry(builtin_registry()), level)
    } else {
        run_suite(builtin_registry(), level)
    };
    let total = report.checks.len();
    let failed = report.failures().count();
    let text = format!("{report}{} of {total} checks passed\n", total - failed);
    run.emit(a.output.as_deref(), text.as_bytes())?;
    run.finish(a.output.as_deref())?;
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_grids() {
        assert_eq!(k_values(None, Some("0:10:5")).unwrap(), vec![0, 5, 10]);
        assert_eq!(k_values(None, Some("3:3:1")).unwrap(), vec![3]);
        assert_eq!(k_values(Some(7), None).unwrap(), vec![7]);
        assert!(k_values(None, Some("5:1:1")).is_err());
        assert!(k_values(None, Some("0:5:0")).is_err());
        assert!(k_values(None, Some("0:5")).is_err());
        assert!(k_values(None, None).is_err());
    }

    #[test]
    fn c_grids() {
        assert_eq!(
            c_values(None, Some("0:1:0.5")).unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        assert_eq!(c_values(None, Some("1:2:0.1")).unwrap().len(), 11);
        assert!(c_values(None, Some("0:1:-1")).is_err());
        assert!(c_values(Some(f64::NAN), None).is_err());
        assert!(c_values(None, None).unwrap().is_empty());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&Error::CapExceeded {
                required: 2,
                cap: 1
            }),
            3
        );
        assert_eq!(exit_code(&Error::InvalidModel("x".into())), 2);
    }
}
