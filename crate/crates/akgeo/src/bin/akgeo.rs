//! Command-line interface for canonical-connection geometry on invariant
//! almost-Hermitian quotients.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on any error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use akgeo::cli_report::{
    build_report, checks, default_tolerance, load_spec, parse_grid, render_text, report_json,
    run_pipeline, structural_checks, verify, verify_spec, GridSweep, PipelineOptions,
};
use akgeo::model_families::{nakamura_with_zeta, zeta_default, FamilyParams};
use akgeo::plurigenus_analysis::{kodaira_dimension_with_bound, DEFAULT_MODE_BOUND};

#[derive(Parser)]
#[command(
    name = "akgeo",
    version,
    about = "Curvature of the canonical connection and Kodaira dimension \
             for invariant almost-Hermitian structures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a manifold description file and report
    /// connection, torsion, curvature, and (for deformation families)
    /// plurigenera.
    Analyze {
        /// Manifold description (JSON).
        spec: PathBuf,
        /// Output format.
        #[arg(long, value_enum, default_value = "text")]
        report: ReportFormat,
        /// Verification tolerance; overrides AKGEO_TOL.
        #[arg(long)]
        tol: Option<f64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a family description against its closed-form tables, optionally
    /// sweeping one parameter.
    Verify {
        /// Manifold description (JSON); must name a family.
        spec: PathBuf,
        /// Sweep, e.g. `t4=0:0.1:0.3` or `a=1:0.5:3`.
        #[arg(long)]
        grid: Option<String>,
        /// Verification tolerance; overrides AKGEO_TOL.
        #[arg(long)]
        tol: Option<f64>,
        /// Write the results here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plurigenera and Kodaira dimension of a deformed quotient.
    Kodaira {
        /// Deformation parameters t1,t2,t3,t4.
        #[arg(long, value_delimiter = ',')]
        t: Vec<f64>,
        /// Largest plurigenus power to decide.
        #[arg(long, default_value_t = 10)]
        m_max: u32,
        /// Exhaustive Fourier-mode search bound.
        #[arg(long, default_value_t = DEFAULT_MODE_BOUND)]
        mode_bound: i64,
        /// Lattice period of the solvable factor.
        #[arg(long, default_value_t = zeta_default())]
        zeta: f64,
    },
    /// Run the built-in verification suite and print one line per criterion.
    PaperCheck,
}

fn write_or_print(out: Option<&PathBuf>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => {
            fs::write(path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn options_with_tol(tol: Option<f64>) -> PipelineOptions {
    PipelineOptions {
        tolerance: tol.unwrap_or_else(default_tolerance),
        ..PipelineOptions::default()
    }
}

fn run_analyze(
    spec_path: &Path,
    format: ReportFormat,
    tol: Option<f64>,
    out: Option<&PathBuf>,
) -> Result<bool, String> {
    let spec = load_spec(spec_path).map_err(|e| e.to_string())?;
    let options = options_with_tol(tol);
    let output = run_pipeline(&spec, &options).map_err(|e| e.to_string())?;
    let mut verification = structural_checks(&output).map_err(|e| e.to_string())?;
    // Family points also get their closed-form tables; explicit manifolds
    // only have the structural identities.
    if !matches!(spec.family, FamilyParams::Generic) {
        let expected = akgeo::cli_report::expected_for(&spec).map_err(|e| e.to_string())?;
        verification
            .merge(verify(&output, &expected, options.tolerance).map_err(|e| e.to_string())?);
    }
    let pass = verification.pass;
    let content = match format {
        ReportFormat::Text => render_text(&output, Some(&verification)),
        ReportFormat::Json => report_json(&build_report(&output, Some(verification))),
    };
    write_or_print(out, &content)?;
    Ok(pass)
}

fn run_verify(
    spec_path: &Path,
    grid: Option<&str>,
    tol: Option<f64>,
    out: Option<&PathBuf>,
) -> Result<bool, String> {
    let spec = load_spec(spec_path).map_err(|e| e.to_string())?;
    let sweep: Option<GridSweep> = match grid {
        Some(text) => Some(parse_grid(text).map_err(|e| e.to_string())?),
        None => None,
    };
    let options = options_with_tol(tol);
    let results = verify_spec(&spec, sweep.as_ref(), &options).map_err(|e| e.to_string())?;
    let mut content = String::new();
    let mut pass = true;
    for (name, result) in &results {
        pass &= result.pass;
        content.push_str(&format!(
            "{} [{}]\n",
            name,
            if result.pass { "PASS" } else { "FAIL" }
        ));
        for item in &result.items {
            content.push_str(&format!(
                "  [{}] {}: residual {:.3e} (tolerance {:.1e})\n",
                if item.pass { "PASS" } else { "FAIL" },
                item.name,
                item.residual,
                item.tolerance
            ));
        }
    }
    content.push_str(&format!(
        "overall: {} ({} point{})\n",
        if pass { "PASS" } else { "FAIL" },
        results.len(),
        if results.len() == 1 { "" } else { "s" }
    ));
    write_or_print(out, &content)?;
    Ok(pass)
}

fn run_kodaira(t: &[f64], m_max: u32, mode_bound: i64, zeta: f64) -> Result<(), String> {
    let t: [f64; 4] = t
        .try_into()
        .map_err(|_| "expected exactly four deformation parameters".to_string())?;
    let spec = nakamura_with_zeta(t, zeta).map_err(|e| e.to_string())?;
    let def = spec.deformation().expect("family spec");
    let result = kodaira_dimension_with_bound(def, m_max, mode_bound).map_err(|e| e.to_string())?;
    println!(
        "t = [{}, {}, {}, {}], zeta = {zeta}",
        t[0], t[1], t[2], t[3]
    );
    for (m, p) in &result.per_m {
        println!("P_{m} = {p}");
    }
    println!("kappa = {}", result.kappa.as_str());
    println!(
        "delta = {:.6e}, mode bound = {}",
        result.evidence.delta + 0.0,
        result.evidence.mode_bound
    );
    Ok(())
}

fn run_paper_check() -> bool {
    let outcomes = checks::run_all();
    let mut pass = true;
    for outcome in &outcomes {
        pass &= outcome.passed;
        println!("{}", outcome.line());
    }
    println!(
        "suite: {} ({}/{} criteria passed)",
        if pass { "PASS" } else { "FAIL" },
        outcomes.iter().filter(|o| o.passed).count(),
        outcomes.len()
    );
    pass
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Analyze {
            spec,
            report,
            tol,
            out,
        } => run_analyze(spec, *report, *tol, out.as_ref()),
        Command::Verify {
            spec,
            grid,
            tol,
            out,
        } => run_verify(spec, grid.as_deref(), *tol, out.as_ref()),
        Command::Kodaira {
            t,
            m_max,
            mode_bound,
            zeta,
        } => run_kodaira(t, *m_max, *mode_bound, *zeta).map(|()| true),
        Command::PaperCheck => Ok(run_paper_check()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
