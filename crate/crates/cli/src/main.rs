use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ramiperiod::covering::BranchedCover;
use ramiperiod::harness::{run_convergence, ExperimentPlan, Scheme, DEFAULT_SIZES};
use ramiperiod::homology::build_cut_system;
use ramiperiod::mesh::{generate, mesh_stats, read_rpm, write_rpm, MeshOptions, Sampler};
use ramiperiod::periods::{compare, period_matrix, CompareMode, Method, PeriodSolver};
use ramiperiod::weights::{build_weight_set, WeightMode};
use ramiperiod::{Config, Error, Result};

#[derive(Parser)]
#[command(name = "ramiperiod", version, about = "Discrete period matrices of branched covers of the sphere")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate or inspect cover meshes.
    #[command(subcommand)]
    Mesh(MeshCmd),
    /// Compute period matrices.
    #[command(subcommand)]
    Periods(PeriodsCmd),
    /// Convergence sweeps against a reference period matrix.
    #[command(subcommand)]
    Convergence(ConvergenceCmd),
}

#[derive(Subcommand)]
enum MeshCmd {
    Gen(GenArgs),
    Check {
        #[arg(long)]
        mesh: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Fibonacci,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightsArg {
    Chart,
    Spherical,
}

impl From<WeightsArg> for WeightMode {
    fn from(w: WeightsArg) -> Self {
        match w {
            WeightsArg::Chart => WeightMode::Chart,
            WeightsArg::Spherical => WeightMode::Spherical,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    curve: PathBuf,
    #[arg(long, value_enum, default_value = "fibonacci")]
    sampler: SamplerArg,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "on")]
    adapt: OnOff,
    /// Target chart edge length near branch points; defaults to the sample spacing.
    #[arg(long)]
    h_target: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum PeriodsCmd {
    Compute(ComputeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Direct,
    Energy,
    Both,
}

#[derive(Args)]
struct ComputeArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "chart")]
    weights: WeightsArg,
    /// Curve file supplying the name and reference matrix.
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Write u₀, v and the cycles of each holomorphic integral into this directory.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ConvergenceCmd {
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    curve: PathBuf,
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    seeds: Vec<u64>,
    #[arg(long, value_enum, default_value = "chart")]
    weights: WeightsArg,
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    svg: PathBuf,
    /// Record wall-clock times in the CSV (otherwise 0).
    #[arg(long)]
    timing: bool,
}

fn mesh_gen(a: GenArgs) -> Result<()> {
    let cover = BranchedCover::load(&a.curve)?;
    let sampler = match a.sampler {
        SamplerArg::Fibonacci => Sampler::Fibonacci,
        SamplerArg::Random => Sampler::Random,
    };
    let mut opts = MeshOptions::new(sampler, a.n, a.seed, matches!(a.adapt, OnOff::On));
    opts.h_target = a.h_target;
    let mesh = generate(&cover, &opts)?;
    write_rpm(&mesh, &a.out)?;
    println!("wrote {} ({} vertices, {} faces)", a.out.display(), mesh.n_vertices(), mesh.n_faces());
    Ok(())
}

fn mesh_check(path: &Path) -> Result<()> {
    let mesh = read_rpm(path)?;
    let s = mesh_stats(&mesh);
    println!("vertices           {}", s.n_vertices);
    println!("faces              {}", s.n_faces);
    println!("euler              {}", mesh.topo.euler_characteristic());
    println!("h                  {:.6}", s.h);
    println!("min_angle          {:.6} rad ({:.2} deg)", s.min_angle, s.min_angle.to_degrees());
    println!("min_chord_angle    {:.6} rad", s.min_chord_angle);
    println!("max_opposite_sum   {:.6} rad", s.max_opposite_sum);
    println!("max_local_density  {}", s.max_local_density);
    println!("(A) smallest angle {:.2} deg", s.min_angle.to_degrees());
    let d = if s.max_opposite_sum <= std::f64::consts::PI + 1e-12 { "holds" } else { "violated" };
    println!("(D) opposite sums <= pi: {d}");
    println!("(U) at most {} vertices per h-disk", s.max_local_density);
    Ok(())
}

fn periods_compute(a: ComputeArgs) -> Result<()> {
    let mesh = read_rpm(&a.mesh)?;
    let config = Config::default();
    let weights = build_weight_set(&mesh, a.weights.into(), config.quadrature_tol)?;
    let cuts = build_cut_system(&mesh)?;
    let method = match a.method {
        MethodArg::Direct => Method::Direct,
        MethodArg::Energy => Method::Energy,
        MethodArg::Both => Method::Both,
    };
    let res = period_matrix(&mesh, &weights, &cuts, method, &config)?;
    let (name, err) = match &a.curve {
        Some(c) => {
            let cover = BranchedCover::load(c)?;
            let err = match &cover.reference_pi {
                Some(r) => {
                    let mode = if r.nrows() == 1 { CompareMode::ModularG1 } else { CompareMode::SignedPerm };
                    Some(compare(&res.pi, r, mode)?)
                }
                None => None,
            };
            (cover.name, err)
        }
        None => (a.mesh.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(), None),
    };
    let json = serde_json::to_string_pretty(&res.to_json(&name, err))?;
    std::fs::write(&a.out, json + "\n")?;
    println!("pi = {}", res.pi);
    if let Some(e) = err {
        println!("error vs reference = {e:e}");
    }
    if let Some(dir) = a.dump {
        std::fs::create_dir_all(&dir)?;
        let ps = PeriodSolver::new(&mesh, &weights, &cuts, &config)?;
        for l in 0..cuts.genus {
            let phi = ps.holomorphic_integral(l)?;
            let u: String = phi.u.base.iter().enumerate().map(|(i, x)| format!("{i} {x:e}\n")).collect();
            let v: String = phi.v.values.iter().enumerate().map(|(i, x)| format!("{i} {x:e}\n")).collect();
            std::fs::write(dir.join(format!("phi{}_u.txt", l + 1)), u)?;
            std::fs::write(dir.join(format!("phi{}_v.txt", l + 1)), v)?;
        }
        let mut cyc = String::new();
        for (k, c) in cuts.cycles.iter().enumerate() {
            let label = if k < cuts.genus { format!("a{}", k + 1) } else { format!("b{}", k - cuts.genus + 1) };
            for seq in c.vertex_sequences(&mesh.topo) {
                let ids: Vec<String> = seq.iter().map(|v| v.to_string()).collect();
                cyc.push_str(&format!("{label} {}\n", ids.join(" ")));
            }
        }
        std::fs::write(dir.join("cycles.txt"), cyc)?;
    }
    Ok(())
}

fn convergence_run(a: RunArgs) -> Result<()> {
    let mut plan = ExperimentPlan::new(&a.curve);
    if let Some(s) = a.schemes {
        plan.schemes = s.iter().map(|x| x.parse()).collect::<Result<Vec<Scheme>>>()?;
    }
    plan.sizes = a.sizes.unwrap_or_else(|| DEFAULT_SIZES.to_vec());
    plan.seeds = a.seeds;
    plan.weights = a.weights.into();
    plan.csv = Some(a.csv);
    plan.svg = Some(a.svg);
    plan.timing = a.timing;
    let report = run_convergence(&plan, &Config::default())?;
    let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
    println!("{} rows ({} failed)", report.rows.len(), failed);
    for s in &report.slopes {
        match &s.slope {
            Ok(m) => println!("{:<22} slope {m:.3}", s.scheme.name()),
            Err(e) => println!("{:<22} slope unavailable: {e}", s.scheme.name()),
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Mesh(MeshCmd::Gen(a)) => mesh_gen(a),
        Cmd::Mesh(MeshCmd::Check { mesh }) => mesh_check(&mesh),
        Cmd::Periods(PeriodsCmd::Compute(a)) => periods_compute(a),
        Cmd::Convergence(ConvergenceCmd::Run(a)) => convergence_run(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::ZeroWeight(_) = e {
                eprintln!("hint: regenerate the mesh with a different seed");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
