//! Command line driver: verification suites, example listing, reports, and
//! mesh export. Exits nonzero iff any executed check fails.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use blowup_core::registry::{default_seed, registry, run_verify};
use blowup_core::sample::{SamplePlan, Tolerances};

#[derive(Parser)]
#[command(
    name = "blowup",
    about = "Construct and verify real, complex, and augmented blowups at desk scale",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PlanArgs {
    /// Sampling seed (defaults to BLOWUP_SEED or 7).
    #[arg(long)]
    seed: Option<u64>,
    /// Pointwise identity tolerance tau_id.
    #[arg(long = "tol-id")]
    tol_id: Option<f64>,
    /// Composed-check tolerance tau_coc.
    #[arg(long = "tol-coc")]
    tol_coc: Option<f64>,
    /// Interior sample count per sweep.
    #[arg(long)]
    samples: Option<usize>,
}

impl PlanArgs {
    fn plan(&self) -> SamplePlan {
        let mut plan = SamplePlan::with_seed(self.seed.unwrap_or_else(default_seed));
        let mut tols = Tolerances::default();
        if let Some(t) = self.tol_id {
            tols.identity = t;
        }
        if let Some(t) = self.tol_coc {
            tols.cocycle = t;
        }
        plan.tols = tols;
        if let Some(n) = self.samples {
            plan.interior = n.max(8);
            plan.near_per_grade = (n / 8).max(4);
            plan.on_y = (n / 4).max(10);
        }
        plan
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite of one example; JSON records on stdout.
    Verify {
        /// Registered example name (see `list`).
        example: String,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// List the registered examples.
    List,
    /// Export sampled chart images of an example as an ASCII OBJ file.
    Mesh {
        example: String,
        /// Grid resolution per chart patch.
        #[arg(long)]
        resolution: usize,
        /// Output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every example and write the concatenated JSON records to a file.
    Report {
        /// Run all registered examples.
        #[arg(long)]
        all: bool,
        /// Output path.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Verify { example, plan } => {
            let report = run_verify(&example, &plan.plan())?;
            print!("{}", report.to_jsonl());
            eprint!("{}", report.to_summary());
            Ok(report.pass())
        }
        Command::List => {
            for e in registry() {
                println!(
                    "{:<26} kind={:<13} c={} c1={} m={} field={:?}",
                    e.name,
                    e.kind,
                    e.c,
                    e.c1.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
                    e.m,
                    e.field
                );
            }
            Ok(true)
        }
        Command::Mesh {
            example,
            resolution,
            out,
        } => {
            let mesh = blowup_core::mesh::export_mesh(&example, resolution, &out)?;
            eprintln!(
                "wrote {} ({} vertices, {} faces, groups: {})",
                out.display(),
                mesh.vertex_count(),
                mesh.face_count(),
                mesh.group_names().join(", ")
            );
            Ok(true)
        }
        Command::Report { all, out, plan } => {
            if !all {
                return Err("report requires --all".into());
            }
            let plan = plan.plan();
            let mut file = std::fs::File::create(&out)?;
            let mut ok = true;
            for e in registry() {
                let report = run_verify(e.name, &plan)?;
                file.write_all(report.to_jsonl().as_bytes())?;
                eprint!("{}", report.to_summary());
                ok &= report.pass();
            }
            Ok(ok)
        }
    }
}
