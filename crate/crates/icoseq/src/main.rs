//! Command-line front end: group construction, sequence synthesis,
//! average-Hamiltonian verification, and trajectory simulation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use icoseq::avgham::{verify_two_paths, CoefficientHamiltonian};
use icoseq::error::Error;
use icoseq::presets::{nv_coefficient_hamiltonian, synthesize_preset};
use icoseq::rotgroup::{
    axis_angle_matrix, block_coupling, clifford_group, dump_group, generate_group,
    icosahedral_group, RotationGroup,
};
use icoseq::sim::{evolve, plus_x_state, EnsembleSpec, PulseMode};
use icoseq::svg::line_plot;
use icoseq::synth::{
    assemble_sequence, build_lp, lower_sequence, solve_lp, LpMode, LpStatus, PulseSequence,
};

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_VERIFY: u8 = 3;
const VERIFY_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "icoseq", version, about = "Pulse-sequence engineering for spin ensembles")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a rotation group by name or from generators and dump it as JSON.
    Group {
        /// clifford | icosahedral (omit when --config supplies generators)
        name: Option<String>,
        /// JSON file with {"generators": [{"axis": [..], "angle_rad": ..}]}
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Derive a pulse sequence for a preset or configured target.
    Synthesize {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Cycle time in seconds (default 1e-4)
        #[arg(long)]
        cycle_time: Option<f64>,
        /// Attach off-resonant drive parameters with this Rabi frequency (Hz)
        #[arg(long)]
        rabi: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a sequence's engineered coefficients along both derivation paths.
    Verify {
        /// Sequence JSON produced by `synthesize`
        sequence: PathBuf,
        /// Hamiltonian JSON: {"n": .., "zeeman_hz": .., "couplings": [[a,b,w],..]}
        #[arg(long)]
        config: PathBuf,
    },
    /// Evolve an ensemble under a sequence and write a trajectory CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// instantaneous | composite | off_resonant
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        cycles: Option<usize>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupConfig {
    generators: Vec<GeneratorSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorSpec {
    axis: [f64; 3],
    angle_rad: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FormSpec {
    #[serde(default)]
    one_spin: [f64; 3],
    #[serde(default)]
    gamma: [f64; 5],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthConfig {
    group: String,
    input: FormSpec,
    target: FormSpec,
    #[serde(default = "default_true")]
    symmetrize: bool,
    #[serde(default)]
    cycle_time_s: Option<f64>,
    #[serde(default)]
    rabi_hz: Option<f64>,
}

fn default_true() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HamiltonianConfig {
    n: usize,
    #[serde(default)]
    zeeman_hz: f64,
    #[serde(default)]
    couplings: Vec<(usize, usize, f64)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimConfig {
    n: usize,
    #[serde(default)]
    couplings_hz: Option<Vec<Vec<f64>>>,
    /// Draw symmetric couplings uniformly from [-scale, scale] using the seed.
    #[serde(default)]
    random_couplings_hz: Option<f64>,
    bz_t: f64,
    #[serde(default)]
    gyro_hz_per_t: Option<f64>,
    #[serde(default)]
    preset: Option<String>,
    #[serde(default)]
    sequence_path: Option<String>,
    #[serde(default)]
    cycle_time_s: Option<f64>,
    #[serde(default)]
    mode: Option<String>,
    #[serde(default)]
    cycles: Option<usize>,
    #[serde(default)]
    rabi_hz: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Group { name, config, out } => cmd_group(name.as_deref(), config.as_deref(), out.as_deref()),
        Cmd::Synthesize { preset, config, cycle_time, rabi, out } => {
            cmd_synthesize(preset.as_deref(), config.as_deref(), cycle_time, rabi, out.as_deref())
        }
        Cmd::Verify { sequence, config } => cmd_verify(&sequence, &config),
        Cmd::Simulate { config, out, svg, seed, mode, cycles } => {
            cmd_simulate(&config, out.as_deref(), svg.as_deref(), seed, mode.as_deref(), cycles)
        }
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Infeasible(_) => EXIT_INFEASIBLE,
                _ => EXIT_USAGE,
            };
            ExitCode::from(code)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn named_group(name: &str) -> Result<RotationGroup, Error> {
    match name {
        "clifford" => Ok(clifford_group()),
        "icosahedral" => Ok(icosahedral_group()),
        other => Err(Error::InvalidInput(format!(
            "unknown group '{other}' (expected clifford or icosahedral)"
        ))),
    }
}

fn cmd_group(name: Option<&str>, config: Option<&Path>, out: Option<&Path>) -> Result<u8, Error> {
    let group = match (name, config) {
        (Some(n), None) => named_group(n)?,
        (None, Some(cfg)) => {
            let gc: GroupConfig = read_json(cfg)?;
            let gens: Result<Vec<_>, Error> = gc
                .generators
                .iter()
                .map(|g| {
                    let axis = Vector3::from(g.axis).normalize();
                    axis_angle_matrix(&axis, g.angle_rad)
                })
                .collect();
            generate_group(&gens?, 1e-9)?
        }
        _ => {
            return Err(Error::InvalidInput(
                "pass exactly one of a group name or --config".into(),
            ))
        }
    };
    let max_coupling = group
        .elements
        .iter()
        .map(|e| block_coupling(&e.r5))
        .fold(0.0, f64::max);
    println!("order: {}", group.order());
    println!("max rep5 coupling between gamma blocks {{1,2}} and {{3,4,5}}: {max_coupling:.3e}");
    if let Some(p) = out {
        let dump = dump_group(&group);
        std::fs::write(p, serde_json::to_string_pretty(&dump)?)?;
        println!("wrote {}", p.display());
    }
    Ok(0)
}

fn cmd_synthesize(
    preset: Option<&str>,
    config: Option<&Path>,
    cycle_time: Option<f64>,
    rabi: Option<f64>,
    out: Option<&Path>,
) -> Result<u8, Error> {
    let cycle_time_s = cycle_time.unwrap_or(1e-4);
    let (mut sequence, scale) = match (preset, config) {
        (Some(name), None) => {
            let outcome = synthesize_preset(name, cycle_time_s)?;
            if outcome.status == LpStatus::Infeasible {
                eprintln!(
                    "infeasible: unreachable components: {}",
                    outcome.unreachable.join(", ")
                );
                return Ok(EXIT_INFEASIBLE);
            }
            (outcome.sequence, outcome.scale)
        }
        (None, Some(cfg)) => {
            let sc: SynthConfig = read_json(cfg)?;
            let group = named_group(&sc.group)?;
            let mut v_in = [0.0; 8];
            let mut target = [0.0; 8];
            v_in[..3].copy_from_slice(&sc.input.one_spin);
            v_in[3..].copy_from_slice(&sc.input.gamma);
            target[..3].copy_from_slice(&sc.target.one_spin);
            target[3..].copy_from_slice(&sc.target.gamma);
            let mut lp = build_lp(&group, &v_in, &target, LpMode::MaxScale)?;
            // leave one-spin rows unconstrained when the input carries none
            if sc.input.one_spin == [0.0; 3] && target[..3] == [0.0; 3] {
                lp.zero_rows.retain(|&i| i >= 3);
            }
            let sol = solve_lp(&lp)?;
            if sol.status == LpStatus::Infeasible {
                let names: Vec<String> = (0..8)
                    .filter(|&i| target[i] != 0.0)
                    .map(|i| icoseq::synth::component_name(8, i))
                    .collect();
                eprintln!("infeasible: unreachable components: {}", names.join(", "));
                return Ok(EXIT_INFEASIBLE);
            }
            let t = sc.cycle_time_s.unwrap_or(cycle_time_s);
            let seq = assemble_sequence(&group, &sol, t, sc.symmetrize)?;
            if let Some(r) = sc.rabi_hz {
                let mut seq = seq;
                lower_sequence(&mut seq, Some(r))?;
                (seq, sol.scale)
            } else {
                (seq, sol.scale)
            }
        }
        _ => {
            return Err(Error::InvalidInput(
                "pass exactly one of --preset or --config".into(),
            ))
        }
    };
    if let Some(r) = rabi {
        lower_sequence(&mut sequence, Some(r))?;
    }
    println!("pulses: {}", sequence.pulses.len());
    println!("cycle_time_s: {}", sequence.cycle_time_s);
    println!("achieved scale: {scale}");
    println!("cyclic deviation: {:.3e}", sequence.cyclic_deviation());
    let json = sequence.to_json()?;
    match out {
        Some(p) => {
            std::fs::write(p, &json)?;
            println!("wrote {}", p.display());
        }
        None => println!("{json}"),
    }
    Ok(0)
}

fn print_coefficients(label: &str, h: &CoefficientHamiltonian) {
    println!("{label}:");
    for (a, v) in h.one_spin.iter().enumerate() {
        println!("  spin {a}: n = [{:+.6e}, {:+.6e}, {:+.6e}]", v[0], v[1], v[2]);
    }
    for p in &h.pairs {
        println!(
            "  pair ({}, {}): alpha = {:+.6e}, beta = {:?}, gamma = {:?}",
            p.a, p.b, p.form.alpha, p.form.beta, p.form.gamma
        );
    }
}

fn cmd_verify(sequence: &Path, config: &Path) -> Result<u8, Error> {
    let seq = PulseSequence::from_json(&std::fs::read_to_string(sequence)?)?;
    seq.check_cyclic(1e-9)?;
    let hc: HamiltonianConfig = read_json(config)?;
    let h = nv_coefficient_hamiltonian(hc.n, &hc.couplings, hc.zeeman_hz);
    let report = verify_two_paths(&h, &seq)?;
    print_coefficients("input", &report.before);
    print_coefficients("engineered average", &report.after);
    println!("two-path max discrepancy: {:.3e}", report.two_path_deviation);
    if report.two_path_deviation > VERIFY_TOL {
        eprintln!("verification failed: discrepancy exceeds {VERIFY_TOL:.1e}");
        return Ok(EXIT_VERIFY);
    }
    Ok(0)
}

fn cmd_simulate(
    config: &Path,
    out: Option<&Path>,
    svg: Option<&Path>,
    seed: Option<u64>,
    mode: Option<&str>,
    cycles: Option<usize>,
) -> Result<u8, Error> {
    let sc: SimConfig = read_json(config)?;
    let seed = seed.or(sc.seed).unwrap_or(0);
    let couplings = match (&sc.couplings_hz, sc.random_couplings_hz) {
        (Some(c), None) => c.clone(),
        (None, Some(scale)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = vec![vec![0.0; sc.n]; sc.n];
            for a in 0..sc.n {
                for b in (a + 1)..sc.n {
                    let w = rng.gen_range(-scale..scale);
                    m[a][b] = w;
                    m[b][a] = w;
                }
            }
            m
        }
        _ => {
            return Err(Error::InvalidInput(
                "set exactly one of couplings_hz or random_couplings_hz".into(),
            ))
        }
    };
    let mut spec = EnsembleSpec::new(sc.n, couplings, sc.bz_t)?;
    if let Some(g) = sc.gyro_hz_per_t {
        spec.gyro_hz_per_t = g;
    }

    let cycle_time_s = sc.cycle_time_s.unwrap_or(1e-4);
    let mut sequence = match (&sc.preset, &sc.sequence_path) {
        (Some(name), None) => {
            let outcome = synthesize_preset(name, cycle_time_s)?;
            if outcome.status == LpStatus::Infeasible {
                return Err(Error::Infeasible(format!(
                    "preset '{name}' target unreachable"
                )));
            }
            outcome.sequence
        }
        (None, Some(p)) => PulseSequence::from_json(&std::fs::read_to_string(p)?)?,
        _ => {
            return Err(Error::InvalidInput(
                "set exactly one of preset or sequence_path".into(),
            ))
        }
    };

    let mode: PulseMode = mode
        .map(str::parse)
        .or_else(|| sc.mode.as_deref().map(str::parse))
        .transpose()?
        .unwrap_or(PulseMode::Instantaneous);
    let cycles = cycles.or(sc.cycles).unwrap_or(100);
    if mode == PulseMode::OffResonant {
        lower_sequence(&mut sequence, Some(sc.rabi_hz.unwrap_or(1e7)))?;
    }

    let initial = plus_x_state(spec.n)?;
    let traj = evolve(&spec, &sequence, mode, cycles, &initial, None)?;
    println!("seed: {seed}");
    println!("cycles: {cycles}, samples: {}", traj.times_s.len());
    println!("final fidelity vs ideal Zeeman: {:.6}", traj.fidelity.last().copied().unwrap_or(1.0));
    write_output(out, &traj.to_csv())?;
    if let Some(p) = out {
        println!("wrote {}", p.display());
    }
    if let Some(p) = svg {
        let plot = line_plot("fidelity vs time", &traj.times_s, &traj.fidelity);
        std::fs::write(p, plot)?;
        println!("wrote {}", p.display());
    }
    Ok(0)
}
