use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use randham::config::{parse_config, parse_regularity_list, Command, ExperimentConfig};
use randham::experiments::{
    count_crossings, run_concentration, run_diffusion, run_intersections, run_inversion_test,
    run_tail_stats, TestLagrangian,
};
use randham::field::{gaussian_dimension, HamiltonianSampler};
use randham::flow::{advect_curve, LagrangianCurve};
use randham::output;
use randham::rkhs::{coefficient_expansion, rkhs_norm};
use randham::torus::{periodic_delta, TorusPoint};
use randham::walk::{induced_point_walk, sample_walk_indexed};
use randham::{rng, Result};

/// Random Hamiltonian diffeomorphisms of the flat torus.
#[derive(Parser)]
#[command(name = "randham", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Draw fields and plot X_H(t, ·).
    SampleField(Common),
    /// Advect S¹ × {0.5} under independent draws.
    Flow(Common),
    /// Spreading of a disc of points.
    Diffusion(Common),
    /// Expected crossings with the test Lagrangians.
    Intersections(Common),
    /// Point trajectories under random walks of autonomous draws.
    RandomWalk(Common),
    /// RKHS norms of sampled coefficient tables.
    RkhsNorm(Common),
    /// Sub-Gaussian tail check of the oscillation norm.
    Tails(Common),
    /// Mean oscillation norm against regularity.
    Concentration(Common),
    /// Displacement laws of φ and φ⁻¹.
    Inversion(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Comma-separated regularity values.
    #[arg(long)]
    regularity: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::SampleField(c) => (Command::SampleField, c),
            Sub::Flow(c) => (Command::Flow, c),
            Sub::Diffusion(c) => (Command::Diffusion, c),
            Sub::Intersections(c) => (Command::Intersections, c),
            Sub::RandomWalk(c) => (Command::RandomWalk, c),
            Sub::RkhsNorm(c) => (Command::RkhsNorm, c),
            Sub::Tails(c) => (Command::Tails, c),
            Sub::Concentration(c) => (Command::Concentration, c),
            Sub::Inversion(c) => (Command::Inversion, c),
        }
    }
}

fn load(command: Command, flags: Common) -> Result<ExperimentConfig> {
    let text = match &flags.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| randham::Error::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        })?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text, Some(command))?;
    if let Some(s) = flags.seed {
        cfg.seed = s;
    }
    if let Some(n) = flags.samples {
        cfg.samples = Some(n);
    }
    if let Some(r) = &flags.regularity {
        cfg.regularity = parse_regularity_list(r)?;
    }
    if let Some(o) = flags.out {
        cfg.out = o;
    }
    cfg.plot |= flags.plot;
    cfg.validate()?;
    // re-parse so the run uses exactly the echoed configuration
    parse_config(&cfg.echo()?, None)
}

fn first_regularity(cfg: &ExperimentConfig) -> f64 {
    cfg.regularity[0]
}

fn sample_field(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let p = TorusPoint::new(cfg.probe[0], cfg.probe[1]);
    let mut records = Vec::new();
    for &r in &cfg.regularity {
        let law = cfg.law(r);
        let sampler = HamiltonianSampler::new(law)?;
        let dim = gaussian_dimension(&law)?;
        for i in 0..cfg.samples() {
            let h = sampler.sample_index(i as u64);
            records.push(json!({
                "regularity": r,
                "sample": i,
                "gaussian_dimension": dim,
                "active_modes": h.active_modes(),
                "time": cfg.time,
                "probe": cfg.probe,
                "value": h.eval_h(cfg.time, p)?,
                "vector_field": h.eval_vector_field(cfg.time, p)?,
            }));
            if cfg.plot {
                output::render_field_svg(&h, cfg.time, &out.join(format!("field_r{r}_{i}.svg")), cfg.arrow_grid)?;
            }
        }
    }
    output::write_jsonl(&records, &out.join("field.jsonl"))?;
    println!("{} field draws written", records.len());
    Ok(())
}

fn flow(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let r = first_regularity(cfg);
    let sampler = HamiltonianSampler::new(cfg.law(r))?;
    let settings = cfg.flow_settings();
    let k = LagrangianCurve::horizontal(0.5, cfg.curve_vertices);
    let l2 = TestLagrangian::standard("L2")?;
    let mut curves = Vec::new();
    let mut records = Vec::new();
    for i in 0..cfg.samples() {
        let h = sampler.sample_index(i as u64);
        match advect_curve(&h, &k, 1.0, &settings) {
            Ok(c) => {
                records.push(json!({
                    "sample": i,
                    "regularity": r,
                    "vertices": c.len(),
                    "length": c.length(),
                    "crossings_l2": count_crossings(&c, &l2).ok(),
                }));
                curves.push(c);
            }
            Err(e) => records.push(json!({ "sample": i, "regularity": r, "error": e.to_string() })),
        }
    }
    output::write_jsonl(&records, &out.join("curves.jsonl"))?;
    if cfg.plot {
        output::render_curves_svg(&curves, &out.join("curves.svg"))?;
    }
    println!("{} of {} curves advected", curves.len(), cfg.samples());
    Ok(())
}

fn diffusion(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let d = run_diffusion(cfg)?;
    output::write_json(&d, &out.join("diffusion.json"))?;
    if cfg.plot {
        let last: Vec<f64> = d.run_chi_square.iter().map(|c| c[c.len() - 1]).collect();
        output::render_histogram_svg(&last, 20, "chi-square at the last time", &out.join("diffusion_chi_square.svg"))?;
    }
    for (t, c) in d.times.iter().zip(&d.chi_square) {
        println!("t={t} chi_square={c}");
    }
    println!("spreading fraction {}", d.spreading_fraction());
    Ok(())
}

fn table(cfg: &ExperimentConfig, out: &Path, name: &str, t: randham::experiments::ResultTable) -> Result<()> {
    output::write_table(&t, &out.join(format!("{name}.csv")))?;
    print!("{}", output::table_to_csv(&t)?);
    if cfg.plot {
        let est: Vec<f64> = t.rows.iter().map(|r| r.estimate).collect();
        output::render_histogram_svg(&est, 20, name, &out.join(format!("{name}.svg")))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct WalkRecord {
    walk: usize,
    regularity: f64,
    trajectory: Vec<[f64; 2]>,
}

fn random_walk(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let r = first_regularity(cfg);
    let law = cfg.law(r);
    let p = TorusPoint::new(cfg.probe[0], cfg.probe[1]);
    let mut records = Vec::new();
    let mut displacement = Vec::new();
    for i in 0..cfg.samples() {
        let w = sample_walk_indexed(&law, i as u64, cfg.walk_steps, cfg.flow_settings())?;
        let traj = induced_point_walk(&w, p)?;
        let end = traj[traj.len() - 1];
        displacement.push(periodic_delta(end.x, p.x).hypot(periodic_delta(end.y, p.y)));
        records.push(WalkRecord {
            walk: i,
            regularity: r,
            trajectory: traj.iter().map(|q| q.as_lift()).collect(),
        });
    }
    output::write_jsonl(&records, &out.join("walks.jsonl"))?;
    if cfg.plot {
        output::render_histogram_svg(&displacement, 20, "final displacement", &out.join("walk_displacement.svg"))?;
    }
    println!("{} walks of {} steps written", records.len(), cfg.walk_steps);
    Ok(())
}

fn rkhs(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let mut records = Vec::new();
    for &r in &cfg.regularity {
        let sampler = HamiltonianSampler::new(cfg.law(r))?;
        for i in 0..cfg.samples() {
            let c = coefficient_expansion(&sampler.sample_index(i as u64))?;
            let norm = rkhs_norm(&c, r)?;
            println!("r={r} sample={i} entries={} rkhs_norm={norm}", c.len());
            records.push(json!({ "regularity": r, "sample": i, "entries": c.len(), "rkhs_norm": norm }));
        }
    }
    output::write_jsonl(&records, &out.join("rkhs.jsonl"))
}

fn tails(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let rep = run_tail_stats(cfg)?;
    output::write_json(&rep, &out.join("tails.json"))?;
    if cfg.plot {
        let v: Vec<f64> = rep.survival.iter().map(|s| s.0).collect();
        output::render_histogram_svg(&v, 30, "oscillation norm", &out.join("tails.svg"))?;
    }
    println!(
        "R={} C={} u={} bound={} held-out={} passes={}",
        rep.r_fit, rep.c_fit, rep.u, rep.bound, rep.heldout_fraction, rep.passes
    );
    Ok(())
}

fn inversion(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let rep = run_inversion_test(cfg)?;
    output::write_json(&rep, &out.join("inversion.json"))?;
    println!(
        "norm D={} p={}; dx D={} p={}; dy D={} p={}; passes={}",
        rep.norm.statistic, rep.norm.p_value, rep.dx.statistic, rep.dx.p_value, rep.dy.statistic, rep.dy.p_value, rep.passes
    );
    Ok(())
}

fn run(command: Command, cfg: &ExperimentConfig) -> Result<()> {
    let out = cfg.out.clone();
    output::write_text(&cfg.echo()?, &out.join("config.toml"))?;
    rng::with_workers(|| match command {
        Command::SampleField => sample_field(cfg, &out),
        Command::Flow => flow(cfg, &out),
        Command::Diffusion => diffusion(cfg, &out),
        Command::Intersections => table(cfg, &out, "intersections", run_intersections(cfg)?),
        Command::RandomWalk => random_walk(cfg, &out),
        Command::RkhsNorm => rkhs(cfg, &out),
        Command::Tails => tails(cfg, &out),
        Command::Concentration => table(cfg, &out, "concentration", run_concentration(cfg)?),
        Command::Inversion => inversion(cfg, &out),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = cli.command.split();
    let result = load(command, flags).and_then(|cfg| run(command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
