use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use diffchunk::bench::{bench_sweep, records_to_csv, SweepConfig};
use diffchunk::chunker::{chunk_error_report, plan_chunks, recombine, run_chunks, seed_states};
use diffchunk::datagen::{generate_dataset, generate_fixed_dataset, read_dataset, write_dataset, GenConfig};
use diffchunk::fd::{burgers_solve, heat_solve_2d, laplace_steady_state, BurgersProblem};
use diffchunk::io::{write_trajectory_bin, write_trajectory_csv};
use diffchunk::propagator::{fit_ridge, numerical_propagator, probe_affine, AnyPropagator, ProblemClass, Propagator};
use diffchunk::{BoundarySpec, HeatProblem, PermutationSample, Trajectory};

#[derive(Parser)]
#[command(name = "diffchunk", version, about = "Finite-difference solvers with chunked parallel-in-time execution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a transient problem and export its trajectory.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve the steady Laplace problem for the given edge values.
    Steady {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 1_000_000)]
        max_iters: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate a random heat dataset.
    Generate {
        #[arg(long, value_parser = parse_grid, default_value = "12")]
        grid: (usize, usize),
        #[arg(long, default_value_t = 10)]
        pred_step: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        batches: usize,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        /// Range of boundary and initial temperatures.
        #[arg(long, value_parser = parse_range, default_value = "0,100")]
        value_range: (f64, f64),
        #[arg(long, value_parser = parse_range, default_value = "0,1")]
        lambda_range: (f64, f64),
        /// Largest batch start step.
        #[arg(long, default_value_t = 1000)]
        t_max: usize,
        /// Fix the edge values (top, bottom, left, right); with --ic and
        /// --lambda this yields a single-permutation dataset.
        #[arg(long, value_parser = parse_bc, requires_all = ["ic", "lambda"])]
        bc: Option<[f64; 4]>,
        #[arg(long, requires = "bc")]
        ic: Option<f64>,
        #[arg(long, requires = "bc")]
        lambda: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Build the affine P-step propagator of a heat problem by probing.
    Probe {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 10)]
        pred_step: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit a ridge propagator to a dataset.
    Fit {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        reg: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Plan, seed, run and recombine chunks, then report errors against the solver.
    ChunkRun {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Last time index L.
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 10)]
        pred_step: usize,
        #[arg(long, value_enum, default_value_t = PropagatorChoice::Numerical)]
        propagator: PropagatorChoice,
        /// Saved propagator file; overrides --propagator and --pred-step.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Worker threads (0 uses every core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Time the solver against a propagator over grid and step sweeps.
    Bench {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Square grid sizes.
        #[arg(long, value_delimiter = ',', default_value = "12,24")]
        grids: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "100,200")]
        steps_list: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        pred_step: usize,
        #[arg(long, value_enum, default_value_t = PropagatorChoice::Affine)]
        propagator: PropagatorChoice,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the built-in oracle checks.
    Verify,
}

#[derive(Args, Clone)]
struct ProblemArgs {
    #[arg(long, value_enum, default_value_t = ProblemChoice::Heat)]
    problem: ProblemChoice,
    /// Rows and columns; Burgers uses the first value as the cell count.
    #[arg(long, value_parser = parse_grid, default_value = "12")]
    grid: (usize, usize),
    #[arg(long, default_value_t = 0.27047)]
    lambda: f64,
    /// Top, bottom, left and right edge values.
    #[arg(long, value_parser = parse_bc, default_value = "600,500,194,248")]
    bc: [f64; 4],
    #[arg(long, default_value_t = 254.0)]
    ic: f64,
    /// Burgers time step over cell width.
    #[arg(long, default_value_t = 0.5)]
    cfl: f64,
}

#[derive(Args, Clone)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum ProblemChoice {
    Heat,
    Burgers,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum PropagatorChoice {
    Numerical,
    Affine,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Bin,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |p: &str| p.trim().parse::<usize>().map_err(|e| format!("bad grid size {p:?}: {e}"));
    match parts.as_slice() {
        [n] => Ok((num(n)?, num(n)?)),
        [r, c] => Ok((num(r)?, num(c)?)),
        _ => Err("expected N or N,M".into()),
    }
}

fn parse_floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let values = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad number {p:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    values.try_into().map_err(|v: Vec<f64>| format!("expected {N} values, got {}", v.len()))
}

fn parse_bc(s: &str) -> Result<[f64; 4], String> {
    parse_floats::<4>(s)
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let [lo, hi] = parse_floats::<2>(s)?;
    Ok((lo, hi))
}

impl ProblemArgs {
    fn boundary(&self) -> anyhow::Result<BoundarySpec> {
        let [t, b, l, r] = self.bc;
        Ok(BoundarySpec::new(t, b, l, r)?)
    }

    fn heat(&self) -> anyhow::Result<HeatProblem> {
        Ok(HeatProblem::uniform(self.grid, self.boundary()?, self.ic, self.lambda)?)
    }

    /// Burgers runs a smooth bump on the unit interval.
    fn build(&self) -> anyhow::Result<ProblemClass> {
        Ok(match self.problem {
            ProblemChoice::Heat => ProblemClass::Heat(self.heat()?),
            ProblemChoice::Burgers => {
                let cells = self.grid.0;
                let dt = self.cfl / cells as f64;
                ProblemClass::Burgers(BurgersProblem::from_fn(cells, 1.0, dt, |x| {
                    0.5 + 0.5 * (-((x - 0.3) / 0.1).powi(2)).exp()
                })?)
            }
        })
    }

    fn permutation(&self) -> PermutationSample {
        let [bc1, bc2, bc3, bc4] = self.bc;
        PermutationSample {
            bc1,
            bc2,
            bc3,
            bc4,
            ic: self.ic,
            lambda: self.lambda,
        }
    }
}

fn sequential(problem: &ProblemClass, steps: usize) -> anyhow::Result<Trajectory> {
    Ok(match problem {
        ProblemClass::Heat(p) => heat_solve_2d(p, steps)?,
        ProblemClass::Burgers(p) => burgers_solve(p, steps)?,
    })
}

fn prepare_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn export(traj: &Trajectory, output: &OutputArgs) -> anyhow::Result<PathBuf> {
    prepare_out(&output.out)?;
    let path = match output.format {
        Format::Csv => {
            let path = output.out.join("trajectory.csv");
            write_trajectory_csv(traj, &path)?;
            path
        }
        Format::Bin => {
            let path = output.out.join("trajectory.trj");
            write_trajectory_bin(traj, &path)?;
            path
        }
    };
    Ok(path)
}

fn build_propagator(choice: PropagatorChoice, problem: &ProblemClass, pred_step: usize) -> diffchunk::Result<AnyPropagator> {
    Ok(match choice {
        PropagatorChoice::Numerical => numerical_propagator(problem, pred_step)?.into(),
        PropagatorChoice::Affine => probe_affine(problem, pred_step)?.into(),
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Solve { problem, steps, output } => {
            let traj = sequential(&problem.build()?, steps)?;
            let path = export(&traj, &output)?;
            println!("wrote {} states to {}", traj.len(), path.display());
        }
        Command::Steady {
            problem,
            tol,
            max_iters,
            out,
        } => {
            let solution = laplace_steady_state(problem.grid, &problem.boundary()?, tol, max_iters)?;
            if !solution.converged {
                log::warn!(
                    "not converged after {} sweeps (last update {:e})",
                    solution.iterations,
                    solution.last_update
                );
            }
            prepare_out(&out)?;
            let path = out.join("steady.csv");
            write_trajectory_csv(&Trajectory::new(vec![(0, solution.field)])?, &path)?;
            println!(
                "converged={} sweeps={} last_update={:e} -> {}",
                solution.converged,
                solution.iterations,
                solution.last_update,
                path.display()
            );
        }
        Command::Generate {
            grid,
            pred_step,
            seed,
            batches,
            batch_size,
            value_range,
            lambda_range,
            t_max,
            bc,
            ic,
            lambda,
            out,
        } => {
            let config = GenConfig {
                bc_ic_range: value_range,
                lambda_range,
                t_range: (0, t_max),
                pred_step,
                batches,
                batch_size,
                shape: grid,
                seed,
            };
            let dataset = match (bc, ic, lambda) {
                (Some([bc1, bc2, bc3, bc4]), Some(ic), Some(lambda)) => generate_fixed_dataset(
                    &config,
                    &PermutationSample {
                        bc1,
                        bc2,
                        bc3,
                        bc4,
                        ic,
                        lambda,
                    },
                )?,
                _ => generate_dataset(&config)?,
            };
            prepare_out(&out)?;
            let path = out.join("dataset.dnt");
            write_dataset(&dataset, &path)?;
            println!("wrote {} samples to {}", dataset.sample_count(), path.display());
        }
        Command::Probe { problem, pred_step, out } => {
            let affine: AnyPropagator = probe_affine(&problem.build()?, pred_step)?.into();
            prepare_out(&out)?;
            let path = out.join("affine.prp");
            affine.save(&path)?;
            println!("wrote affine propagator to {}", path.display());
        }
        Command::Fit { dataset, reg, out } => {
            let dataset = read_dataset(&dataset).with_context(|| format!("reading {}", dataset.display()))?;
            let ridge: AnyPropagator = fit_ridge(&dataset, reg)?.into();
            prepare_out(&out)?;
            let path = out.join("ridge.prp");
            ridge.save(&path)?;
            println!("fit on {} samples, wrote {}", dataset.sample_count(), path.display());
        }
        Command::ChunkRun {
            problem,
            steps,
            pred_step,
            propagator,
            model,
            threads,
            output,
        } => {
            let class = problem.build()?;
            let prop = match &model {
                Some(path) => AnyPropagator::load(path).with_context(|| format!("loading {}", path.display()))?,
                None => build_propagator(propagator, &class, pred_step)?,
            };
            if prop.shape() != class.shape() {
                bail!("propagator grid {:?} does not match problem grid {:?}", prop.shape(), class.shape());
            }
            let plan = plan_chunks(steps, prop.pred_step())?;
            let seeds = seed_states(&class, prop.pred_step())?;
            let runs = run_chunks(&plan, &seeds, &prop, threads)?;
            let traj = recombine(&runs)?;
            let report = chunk_error_report(&runs, &sequential(&class, steps)?)?;
            let path = export(&traj, &output)?;
            let report_path = output.out.join("chunk_report.json");
            fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
            println!(
                "{} chunks, {} states -> {}; full mse={:e} mae={:e} -> {}",
                runs.len(),
                traj.len(),
                path.display(),
                report.full_mse,
                report.full_mae,
                report_path.display()
            );
        }
        Command::Bench {
            problem,
            grids,
            steps_list,
            pred_step,
            propagator,
            reps,
            out,
        } => {
            let config = SweepConfig {
                grids,
                steps: steps_list,
                pred_step,
                reps,
                permutation: problem.permutation(),
            };
            let records = bench_sweep(&config, |p, step| build_propagator(propagator, p, step))?;
            let csv = records_to_csv(&records);
            prepare_out(&out)?;
            let path = out.join("bench.csv");
            fs::write(&path, &csv)?;
            print!("{csv}");
        }
        Command::Verify => {
            let checks = diffchunk::verify::run_all();
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if failed > 0 {
                bail!("{failed} of {} checks failed", checks.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
