//! The three subcommands. Each writes its JSON even on failure, with the
//! diagnostic embedded, before reporting the error.

use std::path::{Path, PathBuf};

use kernel_reduction::kernel::ProbeGrid;
use kernel_reduction::solvers::NEAR_SINGULAR;
use kernel_reduction::{
    build_sequence, m_factorize, reduce_chain, series_consistency, Complex64, GridFunction, MeasureSpace,
    Reduction, Report,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Run;
use crate::output::{write_json, write_kernel, write_matrix};
use crate::CliError;

#[derive(Debug, Serialize)]
struct ErrorReport {
    kind: String,
    message: String,
    exit_code: i32,
}

impl From<&CliError> for ErrorReport {
    fn from(e: &CliError) -> Self {
        Self {
            kind: e.kind(),
            message: e.to_string(),
            exit_code: e.exit_code(),
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum Envelope<T: Serialize> {
    Ok(T),
    Failed { error: ErrorReport, partial: Option<T> },
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))
}

/// Writes `Failed` into `path` and hands the error back.
fn fail<T: Serialize>(path: &Path, error: CliError, partial: Option<T>) -> CliError {
    let envelope = Envelope::Failed {
        error: ErrorReport::from(&error),
        partial,
    };
    match write_json(path, &envelope) {
        Ok(()) => error,
        Err(io) => io,
    }
}

/// Deterministic test function from the configured seed.
fn random_phi(space: MeasureSpace, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = DVector::from_fn(space.cell_count(), |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    GridFunction::from_values(space, values).expect("finite random values")
}

pub fn build_sequence_cmd(run: &Run, out: &Path) -> Result<(), CliError> {
    create_dir(out)?;
    let path = out.join("sequence.json");
    let space = run.space()?;
    let h = run.coefficient(space)?;
    let k = run.kernel(space)?;
    match build_sequence(&h, &k, run.alpha(), &run.params()) {
        Ok(seq) => write_json(&path, &Envelope::Ok(seq.report())),
        Err(e) => Err(fail::<()>(&path, CliError::from(e), None)),
    }
}

fn chain(run: &Run, report_path: &Path) -> Result<Reduction, CliError> {
    let space = run.space()?;
    let h = run.coefficient(space)?;
    let k = run.kernel(space)?;
    reduce_chain(&h, &k, run.alpha(), &run.params(), run.basis_size())
        .map_err(|e| fail::<()>(report_path, CliError::from(e), None))
}

#[derive(Debug, Serialize)]
struct LambdaReport {
    lambda: [f64; 2],
    alpha: [f64; 2],
    depth: u32,
    levels: Vec<u32>,
    report: Report,
}

fn lambda_report(chain: &Reduction, lambda: Complex64, report: Report) -> LambdaReport {
    let alpha = chain.alpha();
    LambdaReport {
        lambda: [lambda.re, lambda.im],
        alpha: [alpha.re, alpha.im],
        depth: chain.sequence.space().depth(),
        levels: chain.sequence.levels().to_vec(),
        report,
    }
}

fn lambda_dirs(run: &Run, out: &Path) -> Vec<(Complex64, PathBuf)> {
    let lambdas = run.lambdas();
    if run.is_sweep() {
        lambdas
            .into_iter()
            .enumerate()
            .map(|(i, l)| (l, out.join(format!("lambda_{i:03}"))))
            .collect()
    } else {
        vec![(lambdas[0], out.to_path_buf())]
    }
}

fn write_kernels(dir: &Path, chain: &Reduction, lambda: Complex64, probe: &ProbeGrid) -> Result<(), CliError> {
    let kernel = chain.pencil.kernel(lambda);
    let points = probe.points();
    for (i, j) in [(0, 0), (1, 0), (0, 1)] {
        let values = kernel.sample(i, j, &points, &points);
        write_kernel(&dir.join(format!("kernel_{i}{j}.csv")), &points, &values)?;
    }
    Ok(())
}

pub fn reduce_cmd(run: &Run, out: &Path, tolerance: f64, strict: bool) -> Result<(), CliError> {
    create_dir(out)?;
    let top_report = out.join("report.json");
    let chain = chain(run, &top_report)?;
    let options = run.verify_options()?;
    let phi = random_phi(chain.sequence.space(), run.config.seed);
    let (a0, a) = (chain.pencil.a0.entries(), chain.pencil.a.entries());
    write_matrix(&out.join("A0.csv"), a0)?;
    write_matrix(&out.join("A.csv"), a)?;

    let mut first_error = None;
    for (lambda, dir) in lambda_dirs(run, out) {
        create_dir(&dir)?;
        let path = dir.join("report.json");
        if run.is_sweep() {
            write_matrix(&dir.join("A0.csv"), a0)?;
            write_matrix(&dir.join("A.csv"), a)?;
        }
        let report = match chain.verify(lambda, &phi, &options) {
            Ok(r) => r,
            Err(e) => {
                let err = fail::<()>(&path, CliError::from(e), None);
                first_error.get_or_insert(err);
                continue;
            }
        };
        write_kernels(&dir, &chain, lambda, &options.probe)?;
        let problem = if strict && report.projected && report.round_trip_error > tolerance {
            Some(CliError::Numerical(format!(
                "projected surrogate loses {:.3e} of the test function (tolerance {tolerance:e})",
                report.round_trip_error
            )))
        } else if chain.alpha() != Complex64::new(0.0, 0.0) && !(report.condition <= NEAR_SINGULAR) {
            Some(CliError::Numerical(format!(
                "near singular: condition {:e}",
                report.condition
            )))
        } else {
            None
        };
        let body = lambda_report(&chain, lambda, report);
        match problem {
            None => write_json(&path, &Envelope::Ok(body))?,
            Some(err) => {
                let err = fail(&path, err, Some(body));
                first_error.get_or_insert(err);
            }
        }
    }
    match first_error {
        None => Ok(()),
        Some(e) => Err(e),
    }
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    value: f64,
    limit: f64,
    passed: bool,
}

#[derive(Debug, Default, Serialize)]
struct Checks(Vec<Check>);

impl Checks {
    fn at_most(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.0.push(Check {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        });
    }

    fn failures(&self) -> Vec<&str> {
        self.0.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    passed: bool,
    tolerance: f64,
    failed: Vec<String>,
    checks: Checks,
    runs: Vec<LambdaReport>,
}

fn sequence_checks(chain: &Reduction, checks: &mut Checks) {
    let seq = &chain.sequence;
    let f = seq.functions();
    let mut defect = 0.0f64;
    for i in 0..f.len() {
        for j in 0..f.len() {
            let expected = if i == j { 1.0 } else { 0.0 };
            let g = f[i].inner_product(&f[j]).expect("common grid");
            defect = defect.max((g - Complex64::new(expected, 0.0)).norm());
        }
    }
    checks.at_most("sequence.orthonormality", defect, 1e-12);
    for (n, d) in seq.diagnostics().iter().enumerate() {
        checks.at_most(format!("sequence.band_{}.norm_S1", n + 1), d.norm_s1, seq.epsilons()[n]);
        checks.at_most(
            format!("sequence.band_{}.norm_S2_sum", n + 1),
            d.norm_s2 + d.norm_s2_adjoint,
            1.0 / (n + 1) as f64,
        );
    }
    checks.at_most("surrogate.gram_defect", chain.surrogate.gram_defect(), 1e-10);
}

fn kernel_checks(chain: &Reduction, lambda: Complex64, tag: &str, checks: &mut Checks) {
    let kernel = chain.pencil.kernel(lambda);
    let factorization = m_factorize(kernel.coefficients());
    let mut worst = 0.0f64;
    for (s, t) in [(-1.5, 0.5), (0.0, 0.0), (0.7, -2.0), (2.5, 1.0)] {
        for (i, j) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let sc = series_consistency(&kernel, &factorization, i, j, s, t).expect("sizes agree");
            let scale = sc.abs_partial_sums.last().copied().unwrap_or(0.0).max(1.0);
            worst = worst.max(sc.discrepancy() / scale);
        }
    }
    checks.at_most(format!("{tag}.series_consistency"), worst, 1e-10);
}

fn report_checks(report: &Report, tolerance: f64, tag: &str, checks: &mut Checks) {
    checks.at_most(format!("{tag}.passage_residual"), report.passage_residual, tolerance);
    checks.at_most(format!("{tag}.round_trip_error"), report.round_trip_error, tolerance);
    checks.at_most(
        format!("{tag}.factorization_error"),
        report.factorization_error,
        1e-10 * report.hs_norm.max(1.0),
    );
    if let Some(e) = report.solve_error {
        checks.at_most(format!("{tag}.solve_error"), e, tolerance);
    } else if report.first_kind.is_none() {
        checks.at_most(format!("{tag}.condition"), report.condition, NEAR_SINGULAR);
    }
    if let Some(fk) = &report.first_kind {
        checks.at_most(format!("{tag}.first_kind.multiplied_residual"), fk.multiplied_residual, tolerance);
        checks.at_most(format!("{tag}.first_kind.hs_norm"), fk.hs_norm, fk.hs_bound);
        if fk.discarded_energy == 0.0 {
            checks.at_most(format!("{tag}.first_kind.recovery_error"), fk.recovery_error, 1e-8);
        }
    }
}

pub fn verify_cmd(run: &Run, out: &Path, tolerance: f64) -> Result<(), CliError> {
    create_dir(out)?;
    let path = out.join("report.json");
    let chain = chain(run, &path)?;
    let options = run.verify_options()?;
    let phi = random_phi(chain.sequence.space(), run.config.seed);

    let mut checks = Checks::default();
    sequence_checks(&chain, &mut checks);
    let mut runs = Vec::new();
    for (idx, lambda) in run.lambdas().into_iter().enumerate() {
        let tag = format!("lambda_{idx:03}");
        let report = chain
            .verify(lambda, &phi, &options)
            .map_err(|e| fail::<()>(&path, CliError::from(e), None))?;
        report_checks(&report, tolerance, &tag, &mut checks);
        kernel_checks(&chain, lambda, &tag, &mut checks);
        runs.push(lambda_report(&chain, lambda, report));
    }
    let failed: Vec<String> = checks.failures().into_iter().map(String::from).collect();
    let passed = failed.is_empty();
    let report = VerifyReport {
        passed,
        tolerance,
        failed: failed.clone(),
        checks,
        runs,
    };
    write_json(&path, &report)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("failed checks: {}", failed.join(", "))))
    }
}
