//! The four subcommands as pure functions from arguments to output strings.

use crate::famspec;
use crate::fmt::{csv_cell, sig12};
use crate::reports::{
    status_name, AnalyzeReport, BifurcationJson, FailureCounts, Manifest, RunRecord, ScanReport,
    SolveReport, TallyEntry,
};
use crate::CliError;
use nalgebra::Vector3;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thomson5::constraint::CostFunction;
use thomson5::families::{
    self, classify, scan_bifurcations, Family, FamilyShape,
};
use thomson5::newton::{classify_run_endpoint, newton_solve, NewtonSettings};
use thomson5::riesz::{RieszEnergy, RieszExponent};
use thomson5::sphere::{Configuration, SphereProductConstraints};

fn exponent(s: f64) -> Result<RieszExponent, CliError> {
    RieszExponent::new(s).map_err(|e| CliError::Usage(e.to_string()))
}

// --- solve -----------------------------------------------------------------

pub struct SolveArgs {
    pub s: f64,
    pub starts: usize,
    pub seed: u64,
    /// Perturbation mode: family spec and magnitude.
    pub perturb: Option<(String, f64)>,
}

/// Gaussian perturbation of a base configuration, blockwise re-normalized.
fn perturb_configuration(
    base: &Configuration,
    eps: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Configuration, CliError> {
    use rand_distr::{Distribution, StandardNormal};
    let mut pts = *base.free_points();
    for p in &mut pts {
        let d = Vector3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        *p = (*p + d * eps).normalize();
    }
    Configuration::new(pts)
        .map_err(|e| CliError::Numerical(format!("perturbed start invalid: {e}")))
}

pub fn run_solve(args: &SolveArgs) -> Result<String, CliError> {
    let exp = exponent(args.s)?;
    let cost = RieszEnergy::new(exp);
    let cs = SphereProductConstraints::default();
    let settings = NewtonSettings::random_start();
    let known = families::known_families(args.s);

    let base = match &args.perturb {
        Some((spec, eps)) => {
            let valid = *eps > 0.0 && eps.is_finite();
            if !valid {
                return Err(CliError::Usage(format!(
                    "perturbation magnitude must be positive, got {eps}"
                )));
            }
            Some((famspec::resolve(spec, args.s)?.configuration, *eps))
        }
        None => None,
    };

    let mut runs = Vec::with_capacity(args.starts);
    let mut failures = FailureCounts {
        max_iters: 0,
        singular_system: 0,
        left_domain: 0,
    };
    let mut unknown_count = 0usize;
    let mut tally: Vec<TallyEntry> = Vec::new();

    for run in 0..args.starts {
        // One independent, counter-addressed stream per run: results do not
        // depend on execution order.
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        rng.set_stream(run as u64 + 1);
        let x0 = match &base {
            Some((cfg, eps)) => perturb_configuration(cfg, *eps, &mut rng)?.ambient(),
            None => Configuration::random(&mut rng).ambient(),
        };
        let trace = newton_solve(&cs, &cost, &cs, &x0, &settings);
        let energy = trace.endpoint().map(|x| cost.value(x));
        let label = classify_run_endpoint(&trace, &known);

        if trace.converged() {
            match label {
                Some(l) => {
                    let e = sig12(energy.expect("converged trace has an endpoint"));
                    match tally
                        .iter_mut()
                        .find(|t| t.family == l.name() && t.variant == l.variant_name())
                    {
                        Some(entry) => {
                            entry.count += 1;
                            if e < entry.energy {
                                entry.energy = e;
                            }
                        }
                        None => tally.push(TallyEntry {
                            family: l.name(),
                            variant: l.variant_name(),
                            count: 1,
                            energy: e,
                        }),
                    }
                }
                None => unknown_count += 1,
            }
        } else {
            match trace.status {
                thomson5::newton::NewtonStatus::MaxIters => failures.max_iters += 1,
                thomson5::newton::NewtonStatus::SingularSystem => failures.singular_system += 1,
                thomson5::newton::NewtonStatus::LeftDomain => failures.left_domain += 1,
                thomson5::newton::NewtonStatus::Converged => unreachable!(),
            }
        }

        runs.push(RunRecord {
            run,
            status: status_name(trace.status),
            iterations: trace.iterations(),
            grad_norm: trace.final_grad_norm().map(sig12),
            energy: energy.map(sig12),
            family: label.map(|l| l.name()),
            variant: label.map(|l| l.variant_name()),
        });
    }

    tally.sort_by(|a, b| (a.family, a.variant).cmp(&(b.family, b.variant)));

    let mut command = format!("solve --s {} --starts {} --seed {}", args.s, args.starts, args.seed);
    if let Some((spec, eps)) = &args.perturb {
        command.push_str(&format!(" --perturb {spec} {eps}"));
    }
    let manifest = Manifest::new(
        command,
        Some(args.seed),
        json!({
            "newton": &settings,
            "perturb": args.perturb.as_ref().map(|(spec, eps)| json!({"family": spec, "eps": eps})),
        }),
    );

    Ok(crate::reports::to_json_line(&SolveReport {
        manifest,
        s: sig12(args.s),
        starts: args.starts,
        runs,
        tally,
        unknown_count,
        failures,
    }))
}

// --- analyze ---------------------------------------------------------------

pub struct AnalyzeArgs {
    pub s: f64,
    pub config: String,
}

fn load_configuration(spec: &str, s: f64) -> Result<(Configuration, Option<nalgebra::DVector<f64>>, String), CliError> {
    let path = std::path::Path::new(spec);
    if path.exists() || spec.ends_with(".json") {
        let text = std::fs::read_to_string(path)?;
        let cfg: Configuration = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("cannot parse configuration file '{spec}': {e}")))?;
        Ok((cfg, None, spec.to_string()))
    } else {
        let resolved = famspec::resolve(spec, s)?;
        Ok((
            resolved.configuration,
            Some(resolved.tangent),
            resolved.resolved_spec,
        ))
    }
}

pub fn run_analyze(args: &AnalyzeArgs) -> Result<String, CliError> {
    let exp = exponent(args.s)?;
    let (cfg, tangent, source) = load_configuration(&args.config, args.s)?;
    let report = classify(&cfg, exp, tangent.as_ref())
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let manifest = Manifest::new(
        format!("analyze --s {} --config {}", args.s, args.config),
        None,
        json!({
            "criticality_tol": families::CRITICALITY_TOL,
            "zero_tol_factor": families::ZERO_TOL_FACTOR,
            "config": source,
        }),
    );
    Ok(crate::reports::to_json_line(&AnalyzeReport::from_report(
        manifest, args.s, source, &report,
    )))
}

// --- scan ------------------------------------------------------------------

pub struct ScanArgs {
    pub s_min: f64,
    pub s_max: f64,
    pub step: f64,
}

pub const SCAN_CSV_HEADER: &str =
    "s,family,variant,param1,param2,energy,morse_index,nullity,smallest_nonzero_eigenvalue";

/// Grid sweep: per-(s, family) branch rows for the CSV, plus the refined
/// bifurcation records as JSON.
pub fn run_scan(args: &ScanArgs) -> Result<(String, String), CliError> {
    let valid_range = args.s_min > 0.0 && args.s_max >= args.s_min && args.step > 0.0;
    if !valid_range {
        return Err(CliError::Usage(format!(
            "scan range must satisfy 0 < s-min <= s-max and step > 0, got [{}, {}] step {}",
            args.s_min, args.s_max, args.step
        )));
    }

    let mut csv = String::from(SCAN_CSV_HEADER);
    csv.push('\n');

    let mut grid = Vec::new();
    if args.s_max > args.s_min {
        let mut s = args.s_min;
        while s <= args.s_max + 1e-12 {
            grid.push(s.min(args.s_max));
            s += args.step;
        }
    }

    let mut dt_seed: Option<(f64, f64)> = None;
    for &s in &grid {
        for family in Family::ALL {
            let sample = families::branch_point(family, s, dt_seed)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let Some(point) = sample else { continue };
            let (p1, p2) = match point.shape {
                FamilyShape::BiPyramid | FamilyShape::RegularPentagon => (String::new(), String::new()),
                FamilyShape::SquareRightPyramid { alpha } => (csv_cell(alpha), String::new()),
                FamilyShape::DoubleTetrahedron { beta, gamma } => {
                    dt_seed = Some((beta, gamma));
                    (csv_cell(beta), csv_cell(gamma))
                }
            };
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                csv_cell(s),
                point.label.name(),
                point.label.variant_name(),
                p1,
                p2,
                csv_cell(point.energy),
                point.morse_index,
                point.nullity,
                csv_cell(point.smallest_nonzero_eigenvalue),
            ));
        }
    }

    let records = if grid.len() > 1 {
        scan_bifurcations(args.s_min, args.s_max, args.step, &Family::ALL)
    } else {
        Vec::new()
    };
    let manifest = Manifest::new(
        format!(
            "scan --s-min {} --s-max {} --step {}",
            args.s_min, args.s_max, args.step
        ),
        None,
        json!({
            "refine_tol": families::BIFURCATION_REFINE_TOL,
            "families": Family::ALL.iter().map(|f| f.name()).collect::<Vec<_>>(),
        }),
    );
    let json = crate::reports::to_json_line(&ScanReport {
        manifest,
        s_min: sig12(args.s_min),
        s_max: sig12(args.s_max),
        step: sig12(args.step),
        records: records.iter().map(BifurcationJson::from).collect(),
    });
    Ok((csv, json))
}

// --- generate ----------------------------------------------------------------

pub struct GenerateArgs {
    pub family: String,
    pub s: f64,
}

/// Produce the configuration JSON (4 unit triples, 12-significant-digit
/// coordinates) for a family spec.
pub fn run_generate(args: &GenerateArgs) -> Result<String, CliError> {
    exponent(args.s)?;
    let resolved = famspec::resolve(&args.family, args.s)?;
    let rounded: Vec<[f64; 3]> = resolved
        .configuration
        .free_points()
        .iter()
        .map(|p| [sig12(p.x), sig12(p.y), sig12(p.z)])
        .collect();
    let mut out = serde_json::to_string(&rounded).expect("configuration serialization");
    out.push('\n');
    Ok(out)
}
