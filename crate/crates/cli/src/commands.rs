//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use slm_core::link::Modulation;
use slm_core::temporal::SequenceLibrary;

use crate::experiment::{NullDesign, NullRecord, Program, Scene, System};
use crate::output::{write_curve_csv, write_heatmap_csv, CurveRow, HeatmapRow};
use crate::preset::{Preset, PRESET_NAMES};
use crate::sweeps;
use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "slm", version, about = "Secure location modulation simulator")]
struct Cli {
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the array, near-field boundary and the resolved preset.
    Info(Common),
    /// Focus on Bob and write the focus field over the sweep grid.
    SynthFocus {
        #[command(flatten)]
        common: Common,
        /// Write the focusing phase matrix here.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Search a nulling design and write the null field over the grid.
    SynthNull {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        /// Write the design record (reusable with --snm) here.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Write the nulling phase matrix here.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Write the best-fitness trace as curve CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Build a perturbed-sequence library.
    BuildLibrary {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
    },
    /// Null-slot and interleaved EVM over the grid.
    SweepEvm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
    },
    /// Link BER over the grid.
    SweepBer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ProgramArg::Slm)]
        program: ProgramArg,
    },
    /// One link run at one location.
    SimulateLink {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        /// Receiver range (m); Bob's when absent.
        #[arg(long)]
        r: Option<f64>,
        /// Receiver angle (deg); Bob's when absent.
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long, value_enum, default_value_t = ProgramArg::Slm)]
        program: ProgramArg,
        /// Write equalised constellation samples as curve CSV here.
        #[arg(long)]
        constellation: Option<PathBuf>,
    },
    /// Surface off, focus only and full SLM at Bob and the eavesdropper points.
    Ablation {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
    },
    /// BER against slot width.
    SweepTau {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        /// Slot widths in seconds, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TAUS)]
        taus: Vec<f64>,
    },
    /// Eavesdropper BER against focus-to-null slot ratio.
    SweepRatio {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        /// `a..b` (inclusive) or a comma-separated list.
        #[arg(long, default_value = "1..9")]
        ratios: String,
    },
}

const DEFAULT_TAUS: [f64; 10] = [1e-6, 2e-6, 4e-6, 8e-6, 1e-4, 1e-3, 4e-3, 2e-2, 4e-2, 8e-2];

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProgramArg {
    RisOff,
    FocusOnly,
    Slm,
}

/// Preset selection, output and overrides shared by every subcommand.
/// Overrides win over the config file, which wins over the preset.
#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, default_value = "paper")]
    preset: String,
    /// TOML file overlaid on the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reuse a nulling design written by `synth-null --record`.
    #[arg(long)]
    snm: Option<PathBuf>,
    #[arg(long, value_parser = parse_modulation)]
    modulation: Option<Modulation>,
    #[arg(long)]
    evm0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long)]
    bits: Option<usize>,
    /// Slot width (s).
    #[arg(long)]
    tau: Option<f64>,
    /// Focus-to-null ratio; 0 draws ratios from the library bounds.
    #[arg(long)]
    ratio: Option<u32>,
    #[arg(long)]
    tracking_window: Option<usize>,
    #[arg(long)]
    preamble: Option<usize>,
    #[arg(long)]
    frame: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    eve_noise_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    strong_eve_db: Option<f64>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    snm_seed: Option<u64>,
    #[arg(long)]
    library_seed: Option<u64>,
    #[arg(long)]
    library_count: Option<usize>,
    #[arg(long)]
    library_length: Option<usize>,
}

fn parse_modulation(s: &str) -> Result<Modulation, String> {
    s.parse().map_err(|e: slm_core::Error| e.to_string())
}

fn parse_ratios(s: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::Config(format!("bad ratio list {s:?}"));
    let v: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if v.is_empty() || v.contains(&0) {
        return Err(bad());
    }
    Ok(v)
}

impl Common {
    fn preset(&self) -> Result<Preset, CliError> {
        let mut p = Preset::named(&self.preset)?;
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            // The file overlays the named preset key by key.
            let mut base = toml::Value::try_from(&p).map_err(|e| CliError::Config(e.to_string()))?;
            let over: toml::Value = toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
            merge(&mut base, over);
            p = Preset::from_toml(&toml::to_string(&base).map_err(|e| CliError::Config(e.to_string()))?)?;
        }
        let t = &mut p.temporal;
        set(&mut t.modulation, self.modulation);
        if self.evm0.is_some() {
            t.evm0 = self.evm0;
        }
        set(&mut t.ratio, self.ratio);
        set(&mut t.library_seed, self.library_seed);
        set(&mut t.library_count, self.library_count);
        set(&mut t.library_length, self.library_length);
        let l = &mut p.link;
        set(&mut l.snr_db, self.snr_db);
        set(&mut l.data_bits, self.bits);
        set(&mut l.slot_width_s, self.tau);
        set(&mut l.tracking_window, self.tracking_window);
        set(&mut l.preamble, self.preamble);
        set(&mut l.frame, self.frame);
        set(&mut l.eve_noise_db, self.eve_noise_db);
        set(&mut l.strong_eve_db, self.strong_eve_db);
        set(&mut p.snm.generations, self.generations);
        set(&mut p.snm.seed, self.snm_seed);
        p.validate()?;
        Ok(p)
    }

    fn system(&self, preset: &Preset) -> Result<System, CliError> {
        let scene = Scene::new(preset)?;
        let null = match &self.snm {
            Some(path) => NullDesign::from_record(&scene, &NullRecord::from_toml(&read(path)?)?)?,
            None => NullDesign::solve(&scene, preset.snm.seed)?,
        };
        Ok(System::new(scene, null))
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn heatmap(path: Option<&Path>, rows: &[HeatmapRow]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_heatmap_csv(&mut buf, rows)?;
    emit(path, &buf)
}

fn curve(path: Option<&Path>, rows: &[CurveRow]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_curve_csv(&mut buf, rows)?;
    emit(path, &buf)
}

fn library_for(system: &System, preset: &Preset) -> Result<SequenceLibrary, CliError> {
    system.default_library(preset.temporal.modulation, preset.link.slot_width_s)
}

fn program(arg: ProgramArg, preset: &Preset) -> Program {
    match arg {
        ProgramArg::RisOff => Program::RisOff,
        ProgramArg::FocusOnly => Program::FocusOnly,
        ProgramArg::Slm => Program::Slm(preset.ratio_policy()),
    }
}

fn info(common: &Common) -> Result<(), CliError> {
    let p = common.preset()?;
    let a = p.array_config()?;
    let mut text = format!(
        "array: {}x{} elements, dx {} m, dy {} m\nfrequency: {} GHz\nwavelength: {:.2} mm\naperture diagonal: {:.4} m\nnear-field boundary: {:.1} m\nbob: ({} m, {} deg)\npresets: {}\n\n",
        a.rows(),
        a.cols(),
        a.dx(),
        a.dy(),
        a.frequency() / 1e9,
        a.wavelength() * 1e3,
        a.aperture_diagonal(),
        a.fraunhofer_distance(),
        p.scene.bob_r_m,
        p.scene.bob_theta_deg,
        PRESET_NAMES.join(", ")
    );
    text.push_str(&p.to_toml());
    emit(common.out.as_deref(), text.as_bytes())
}

fn synth_null(
    common: &Common,
    seed: u64,
    record: Option<&Path>,
    matrix: Option<&Path>,
    trace: Option<&Path>,
) -> Result<(), CliError> {
    let mut p = common.preset()?;
    p.snm.seed = seed;
    let scene = Scene::new(&p)?;
    let (design, err) = match NullDesign::solve(&scene, seed) {
        Ok(d) => (d, None),
        Err(CliError::Infeasible(d)) => ((*d).clone(), Some(CliError::Infeasible(d))),
        Err(e) => return Err(e),
    };
    let r = &design.record;
    eprintln!(
        "objective {:.5} (baseline {:.5}, ratio {:.3}), centre {:.2} dB, feasible {}, {} generations",
        r.objective,
        r.baseline,
        r.objective / r.baseline,
        r.center_db,
        r.feasible,
        r.generations
    );
    if let Some(path) = record {
        emit(Some(path), r.to_toml().as_bytes())?;
    }
    if let Some(path) = matrix {
        emit(Some(path), design.matrix.to_text().as_bytes())?;
    }
    if let Some(path) = trace {
        let rows: Vec<CurveRow> = design
            .solution
            .iter()
            .flat_map(|s| s.trace.iter().enumerate())
            .map(|(g, &f)| CurveRow {
                parameter: "generation".into(),
                x: g as f64,
                metric: "best_fitness".into(),
                value: f,
                seed: Some(seed),
            })
            .collect();
        curve(Some(path), &rows)?;
    }
    let system = System::new(scene, design);
    heatmap(common.out.as_deref(), &sweeps::null_heatmap(&system, &p.sweep)?)?;
    err.map_or(Ok(()), Err)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Info(common) => info(&common),
        Command::SynthFocus { common, matrix } => {
            let p = common.preset()?;
            let scene = Scene::new(&p)?;
            if let Some(path) = matrix {
                emit(Some(&path), scene.focus.to_text().as_bytes())?;
            }
            heatmap(common.out.as_deref(), &sweeps::focus_heatmap(&scene, &p.sweep)?)
        }
        Command::SynthNull {
            common,
            seed,
            record,
            matrix,
            trace,
        } => synth_null(&common, seed, record.as_deref(), matrix.as_deref(), trace.as_deref()),
        Command::BuildLibrary { common, seed } => {
            let p = common.preset()?;
            let system = common.system(&p)?;
            let lib = system.library(p.evm0(), p.link.slot_width_s, seed)?;
            eprintln!(
                "{} sequences, acceptance rate {:.3}, {} excluded eve points",
                lib.len(),
                lib.acceptance_rate(),
                system.context()?.excluded().1
            );
            emit(common.out.as_deref(), lib.to_text().as_bytes())
        }
        Command::SweepEvm { common, seed } => {
            let p = common.preset()?;
            let system = common.system(&p)?;
            let lib = system.library(p.evm0(), p.link.slot_width_s, seed)?;
            heatmap(
                common.out.as_deref(),
                &sweeps::evm_heatmap(&system, &lib, p.ratio_policy(), &p.sweep, seed)?,
            )
        }
        Command::SweepBer { common, seed, program: prog } => {
            let p = common.preset()?;
            let system = common.system(&p)?;
            let lib = library_for(&system, &p)?;
            let rows = sweeps::ber_heatmap(
                &system,
                p.temporal.modulation,
                &p.link_config(seed),
                program(prog, &p),
                Some(&lib),
                &p.sweep,
            )?;
            heatmap(common.out.as_deref(), &rows)
        }
        Command::SimulateLink {
            common,
            seed,
            r,
            theta,
            program: prog,
            constellation,
        } => {
            let p = common.preset()?;
            let system = common.system(&p)?;
            let lib = library_for(&system, &p)?;
            let point = slm_core::PolarPoint::horizontal_deg(
                r.unwrap_or(p.scene.bob_r_m),
                theta.unwrap_or(p.scene.bob_theta_deg),
            )?;
            let link = p.link_config(seed);
            let s = system.survey(p.temporal.modulation, &link, program(prog, &p), Some(&lib), &[point])?;
            let o = &s.points[0];
            eprintln!(
                "ber {:.3e}, evm {:.4}, secrecy {:.3} bit/s/Hz, focus field {:.2} dB re Bob{}",
                o.result.ber,
                o.result.evm_measured,
                o.result.secrecy_bits,
                o.reference_db,
                if o.result.fallback { ", unequalised fallback used" } else { "" }
            );
            let rows: Vec<HeatmapRow> = [
                ("ber", o.result.ber),
                ("evm", o.result.evm_measured),
                ("secrecy_bits", o.result.secrecy_bits),
            ]
            .iter()
            .map(|&(m, v)| HeatmapRow {
                r_m: r.unwrap_or(p.scene.bob_r_m),
                theta_deg: theta.unwrap_or(p.scene.bob_theta_deg),
                metric: m.into(),
                value: v,
                seed: Some(seed),
            })
            .collect();
            if let Some(path) = constellation {
                let rows: Vec<CurveRow> = o
                    .result
                    .rx_constellation
                    .iter()
                    .enumerate()
                    .flat_map(|(i, c)| {
                        [("im", c.im), ("re", c.re)].map(|(m, v)| CurveRow {
                            parameter: "sample".into(),
                            x: i as f64,
                            metric: m.into(),
                            value: v,
                            seed: Some(seed),
                        })
                    })
                    .collect();
                curve(Some(&path), &rows)?;
            }
            heatmap(common.out.as_deref(), &rows)
        }
        Command::Ablation { common, seed } => {
            let p = common.preset()?;
            let system = common.system(&p)?;
            let lib = library_for(&system, &p)?;
            let a = sweeps::ablation(&system, p.temporal.modulation, &p.link_config(seed), &lib, p.ratio_policy())?;
            let db = p.link.strong_eve_db;
            for (name, s) in [("ris-off", &a.ris_off), ("focus-only", &a.focus_only), ("slm", &a.slm)] {
                eprintln!(
                    "{name}: bob {:.3e}, eve mean {:.4}, strong eve mean {:.4} ({} points)",
                    s.bob.ber,
                    s.mean_ber(),
                    s.strong_mean_ber(db),
                    s.strong(db).len()
                );
            }
            heatmap(common.out.as_deref(), &a.rows(&system.scene.bob, seed))
        }
        Command::SweepTau { common, seed, taus } => {
            if taus.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(CliError::Config("slot widths must be positive".into()));
            }
            let p = common.preset()?;
            let system = common.system(&p)?;
            let pts = sweeps::tau_sweep(&system, p.temporal.modulation, &p.link_config(seed), p.ratio_policy(), &taus)?;
            curve(common.out.as_deref(), &sweeps::TauPoint::rows(&pts, seed))
        }
        Command::SweepRatio { common, seed, ratios } => {
            let ratios = parse_ratios(&ratios)?;
            let p = common.preset()?;
            let system = common.system(&p)?;
            let lib = library_for(&system, &p)?;
            let pts = sweeps::ratio_sweep(&system, p.temporal.modulation, &p.link_config(seed), &lib, &ratios)?;
            curve(common.out.as_deref(), &sweeps::RatioPoint::rows(&pts, seed))
        }
    }
}

/// Run the program on `argv` (including the program name) and return the
/// exit code: 0 on success, 1 on usage or configuration errors, 2 when the
/// nulling synthesis is infeasible.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli)),
            Err(e) => Err(CliError::Config(format!("thread pool: {e}"))),
        },
        None => dispatch(cli),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_lists() {
        assert_eq!(parse_ratios("1..4").unwrap(), [1, 2, 3, 4]);
        assert_eq!(parse_ratios("2, 5,9").unwrap(), [2, 5, 9]);
        assert!(parse_ratios("0..3").is_err());
        assert!(parse_ratios("x").is_err());
        assert!(parse_ratios("5..1").is_err());
    }

    #[test]
    fn merge_overlays_nested_keys() {
        let mut base: toml::Value = toml::from_str("[a]\nx = 1\ny = 2\n").unwrap();
        merge(&mut base, toml::from_str("[a]\ny = 3\n").unwrap());
        assert_eq!(base["a"]["x"].as_integer(), Some(1));
        assert_eq!(base["a"]["y"].as_integer(), Some(3));
    }
}
