use std::path::{Path, PathBuf};
use std::sync::Arc;

use modescent::audit::{audit_problem, AuditConfig, AuditReport};
use modescent::globalize::{dedup_by_x, mark_dominated, multistart, GridSpec, ParetoArchive};
use modescent::io::{archive_csv, to_json, trace_csv, trace_summary, write_text};
use modescent::{
    solve as run_solver, PolynomialProblem, Problem, ProblemError, ProblemRegistry, SolverConfig,
    Termination,
};

use crate::manifest::RunManifest;
use crate::{
    AuditArgs, FrontArgs, ProblemArgs, SolveArgs, EXIT_ERROR, EXIT_MAX_ITERS, EXIT_OK, EXIT_USAGE,
};

/// Failure with its exit code.
struct Failure(u8, String);

impl From<ProblemError> for Failure {
    fn from(e: ProblemError) -> Self {
        let code = match e {
            ProblemError::UnknownProblem { .. } | ProblemError::Dimension { .. } => EXIT_USAGE,
            _ => EXIT_ERROR,
        };
        Failure(code, e.to_string())
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure(EXIT_ERROR, format!("cannot write {}: {e}", path.display()))
}

fn report(f: Failure) -> u8 {
    eprintln!("error: {}", f.1);
    f.0
}

fn load(args: &ProblemArgs) -> Result<Arc<dyn Problem>, Failure> {
    match (&args.problem, &args.problem_file) {
        (Some(name), None) => Ok(ProblemRegistry::builtin().get(name)?),
        (None, Some(path)) => Ok(Arc::new(PolynomialProblem::from_path(path)?)),
        _ => Err(Failure(
            EXIT_USAGE,
            "one of --problem or --problem-file is required".into(),
        )),
    }
}

fn checked_config(config: SolverConfig) -> Result<SolverConfig, Failure> {
    config
        .validate()
        .map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;
    Ok(config)
}

fn write(out: &Path, name: &str, text: &str, outputs: &mut Vec<PathBuf>) -> Result<(), Failure> {
    let path = out.join(name);
    write_text(&path, text).map_err(|e| io_failure(&path, e))?;
    outputs.push(path);
    Ok(())
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    to_json(value).map_err(|e| Failure(EXIT_ERROR, e.to_string()))
}

pub fn solve(argv: &[String], args: &SolveArgs) -> u8 {
    solve_inner(argv, args).unwrap_or_else(report)
}

fn solve_inner(argv: &[String], args: &SolveArgs) -> Result<u8, Failure> {
    let problem = load(&args.problem)?;
    let config = checked_config(args.config.config())?;
    if args.x0.0.len() != problem.dim() {
        return Err(Failure(
            EXIT_USAGE,
            format!(
                "--x0 has {} coordinates, problem `{}` has {}",
                args.x0.0.len(),
                problem.name(),
                problem.dim()
            ),
        ));
    }
    let mut manifest = RunManifest::new("solve", argv);
    manifest.problem = Some(problem.name().to_string());
    manifest.problem_file = args.problem.problem_file.clone();
    manifest.config = Some(config.clone());

    let x0 = nalgebra_point(&args.x0.0);
    let (trace, code, error) = match run_solver(problem.as_ref(), &x0, &config) {
        Ok(out) => {
            let code = match out.trace.termination {
                Termination::TerminatedCritical => EXIT_OK,
                _ => EXIT_MAX_ITERS,
            };
            (out.trace, code, None)
        }
        Err(e) => (e.trace.clone(), EXIT_ERROR, Some(e.to_string())),
    };
    write(
        &args.out,
        "trace.csv",
        &trace_csv(&trace),
        &mut manifest.outputs,
    )?;
    write(
        &args.out,
        "trace.json",
        &json(&trace)?,
        &mut manifest.outputs,
    )?;

    let summary = trace_summary(&trace);
    match &error {
        Some(e) => eprintln!("error: {e}"),
        None => println!("{summary}"),
    }
    let termination = error.unwrap_or(summary);
    manifest
        .write(&args.out, termination, code)
        .map_err(|e| io_failure(&args.out, e))?;
    Ok(code)
}

fn nalgebra_point(x: &[f64]) -> modescent::nalgebra::DVector<f64> {
    modescent::nalgebra::DVector::from_column_slice(x)
}

pub fn front(argv: &[String], args: &FrontArgs) -> u8 {
    front_inner(argv, args).unwrap_or_else(report)
}

fn front_inner(argv: &[String], args: &FrontArgs) -> Result<u8, Failure> {
    let problem = load(&args.problem)?;
    let config = checked_config(args.config.config())?;
    let counts = args.grid.0.clone();
    let grid = match &args.x0 {
        Some(x0) => {
            if counts.iter().any(|&c| c != 1) || counts.len() != x0.0.len() {
                return Err(Failure(
                    EXIT_USAGE,
                    "--x0 requires a grid of ones matching the problem dimension".into(),
                ));
            }
            let g = GridSpec::at_point(&x0.0);
            g.validate(&problem.sampling_box())?;
            g
        }
        None => GridSpec::over_box(&problem.sampling_box(), counts)?,
    };

    let mut manifest = RunManifest::new("front", argv);
    manifest.problem = Some(problem.name().to_string());
    manifest.problem_file = args.problem.problem_file.clone();
    manifest.config = Some(config.clone());

    let mut archive = multistart(problem.as_ref(), &grid, &config)?;
    mark_dominated(&mut archive);
    let filtered = dedup_by_x(
        &ParetoArchive {
            entries: archive
                .entries
                .iter()
                .filter(|e| !e.dominated)
                .cloned()
                .collect(),
        },
        1e-6,
    );
    write(
        &args.out,
        "archive.csv",
        &archive_csv(&archive),
        &mut manifest.outputs,
    )?;
    write(
        &args.out,
        "archive.json",
        &json(&archive)?,
        &mut manifest.outputs,
    )?;
    write(
        &args.out,
        "front.csv",
        &archive_csv(&filtered),
        &mut manifest.outputs,
    )?;
    write(
        &args.out,
        "front.json",
        &json(&filtered)?,
        &mut manifest.outputs,
    )?;

    let failed = archive.entries.iter().filter(|e| e.failed()).count();
    let converged = archive.entries.iter().filter(|e| e.converged).count();
    let summary = format!(
        "{} runs: {converged} converged, {failed} failed; {} nondominated",
        archive.len(),
        filtered.len()
    );
    println!("{summary}");
    manifest
        .write(&args.out, summary, EXIT_OK)
        .map_err(|e| io_failure(&args.out, e))?;
    Ok(EXIT_OK)
}

pub fn audit(argv: &[String], args: &AuditArgs) -> u8 {
    audit_inner(argv, args).unwrap_or_else(report)
}

fn audit_inner(argv: &[String], args: &AuditArgs) -> Result<u8, Failure> {
    let registry = ProblemRegistry::builtin();
    let problems: Vec<Arc<dyn Problem>> = match (&args.problem.problem, &args.problem.problem_file)
    {
        (None, None) => registry
            .names()
            .into_iter()
            .map(|n| registry.get(n))
            .collect::<Result<_, _>>()?,
        _ => vec![load(&args.problem)?],
    };
    let cfg = AuditConfig::default();
    let reports: Vec<AuditReport> = problems
        .iter()
        .map(|p| audit_problem(p.as_ref(), &cfg))
        .collect();
    for r in &reports {
        println!("{}", r.problem);
        for c in &r.checks {
            println!(
                "  {} {:<36} {:.3e} (limit {:.0e}, {} samples){}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.threshold,
                c.samples,
                c.note
                    .as_deref()
                    .map(|n| format!(" {n}"))
                    .unwrap_or_default()
            );
        }
    }
    let passed = reports.iter().all(AuditReport::passed);
    let code = if passed { EXIT_OK } else { EXIT_ERROR };
    if let Some(out) = &args.out {
        let mut manifest = RunManifest::new("audit", argv);
        manifest.problem = args.problem.problem.clone();
        manifest.problem_file = args.problem.problem_file.clone();
        write(out, "audit.json", &json(&reports)?, &mut manifest.outputs)?;
        let summary = if passed {
            "all checks passed"
        } else {
            "checks failed"
        };
        manifest
            .write(out, summary.into(), code)
            .map_err(|e| io_failure(out, e))?;
    }
    Ok(code)
}
