//! Implementation of the CLI subcommands on top of the library.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use squeezelab::correlations::{evaluate_orders, g2_twin_lowgain, OrderSpec};
use squeezelab::decomposition::{fit_thermal, schmidt_decompose, SqueezerSpectrum};
use squeezelab::estimation::{
    estimate_b_from_g11, estimate_b_single_from_g2, estimate_k_from_g2, estimate_mu_from_g2,
    map_slope_to_k, map_slope_to_mu, slope_table_k, slope_table_mu, thermal_mode_count,
    EstimationResult,
};
use squeezelab::export::{
    write_ensemble_csv, write_jsa_csv, write_modes_csv, JsaDocument, ModeArm, SpectrumSummary,
};
use squeezelab::simulator::{
    estimate_correlations, hbt_click_estimate_g2, sample_single_beam, sample_twin_beam,
    DetectorMode, DetectorModel, EstimatedCorrelation,
};
use squeezelab::{BeamKind, Error};

use crate::config::{
    BuiltSource, DetectorConfig, DetectorModeConfig, RunConfig, SourceConfig, SweepConfig,
};
use crate::{Cli, CliError, CommandKind};

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".to_string()))?;
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", cli.out.display())))?;

    match cli.command {
        CommandKind::Jsa => cmd_jsa(cli, &config),
        CommandKind::Decompose => cmd_decompose(cli, &config),
        CommandKind::Correlations => cmd_correlations(cli, &config),
        CommandKind::Estimate => cmd_estimate(cli, &config),
        CommandKind::Simulate => cmd_simulate(cli, &config),
        CommandKind::Sweep => cmd_sweep(cli, &config),
    }
}

fn say(cli: &Cli, message: impl AsRef<str>) {
    if !cli.quiet {
        println!("{}", message.as_ref());
    }
}

fn out_path(cli: &Cli, name: &str) -> PathBuf {
    cli.out.join(name)
}

fn open_out(path: &Path) -> Result<BufWriter<File>, CliError> {
    let file =
        File::create(path).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

/// Write a JSON payload with the config digest as its first concern.
fn write_json(path: &Path, digest: &str, payload: Value) -> Result<(), CliError> {
    let mut root = serde_json::Map::new();
    root.insert("config_digest".to_string(), json!(digest));
    match payload {
        Value::Object(map) => {
            for (k, v) in map {
                root.insert(k, v);
            }
        }
        other => {
            root.insert("data".to_string(), other);
        }
    }
    let mut w = open_out(path)?;
    serde_json::to_writer_pretty(&mut w, &Value::Object(root))
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
    writeln!(w).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
    Ok(())
}

/// Write CSV content prefixed by a digest comment line.
fn write_csv(
    path: &Path,
    digest: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let mut w = open_out(path)?;
    (|| -> std::io::Result<()> {
        writeln!(w, "# config_digest={digest}")?;
        body(&mut w)?;
        w.flush()
    })()
    .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn require_source<'c>(config: &'c RunConfig, command: &str) -> Result<&'c SourceConfig, CliError> {
    config
        .source
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("{command} requires a source block")))
}

fn parse_orders(labels: &[String]) -> Result<Vec<OrderSpec>, CliError> {
    labels
        .iter()
        .map(|label| label.parse::<OrderSpec>().map_err(CliError::Domain))
        .collect()
}

fn cmd_jsa(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    let source = require_source(config, "jsa")?;
    let jsa = source.build_jsa()?;
    let digest = config.digest();

    write_csv(&out_path(cli, "jsa.csv"), &digest, |w| {
        write_jsa_csv(w, &jsa)
    })?;
    let doc = JsaDocument::from_jsa(&jsa);
    write_json(
        &out_path(cli, "jsa.json"),
        &digest,
        serde_json::to_value(&doc).expect("document serializes"),
    )?;

    say(
        cli,
        format!(
            "jsa: {} x {} grid, Frobenius norm {:.6e}",
            jsa.grid().n_s(),
            jsa.grid().n_i(),
            jsa.frobenius_norm()
        ),
    );
    Ok(())
}

fn cmd_decompose(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    let digest = config.digest();

    let built = if let Some(path) = &config.jsa_input {
        let jsa = crate::config::load_jsa(Path::new(path))?;
        let (spectrum, modes) = schmidt_decompose(&jsa).map_err(CliError::Domain)?;
        BuiltSource::Spectral {
            jsa: Box::new(jsa),
            spectrum,
            modes: Box::new(modes),
        }
    } else {
        require_source(config, "decompose")?.build()?
    };

    let spectrum = built.spectrum();
    // a flat or short spectrum has no geometric parameter; record nulls
    let fit = fit_thermal(spectrum).ok();
    let summary = SpectrumSummary::new(spectrum, fit.as_ref());
    write_json(
        &out_path(cli, "decomposition.json"),
        &digest,
        serde_json::to_value(&summary).expect("summary serializes"),
    )?;

    if let BuiltSource::Spectral { modes, .. } = &built {
        write_csv(&out_path(cli, "modes_signal.csv"), &digest, |w| {
            write_modes_csv(w, modes, ModeArm::Signal)
        })?;
        write_csv(&out_path(cli, "modes_idler.csv"), &digest, |w| {
            write_modes_csv(w, modes, ModeArm::Idler)
        })?;
    }

    say(
        cli,
        format!(
            "decompose: {} modes, B = {:.6e}, K = {:.6}",
            spectrum.n_modes(),
            spectrum.gain(),
            summary.schmidt_number
        ),
    );
    Ok(())
}

fn cmd_correlations(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    let block = config
        .correlations
        .as_ref()
        .ok_or_else(|| CliError::Config("correlations requires a correlations block".into()))?;
    let built = require_source(config, "correlations")?.build()?;
    let orders = parse_orders(&block.orders)?;
    let values =
        evaluate_orders(built.spectrum(), block.beam, &orders).map_err(CliError::Domain)?;

    let digest = config.digest();
    write_json(
        &out_path(cli, "correlations.json"),
        &digest,
        json!({
            "beam": block.beam,
            "results": values,
        }),
    )?;
    say(cli, format!("correlations: {} orders evaluated", values.len()));
    Ok(())
}

fn cmd_estimate(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    let block = config
        .estimate
        .as_ref()
        .ok_or_else(|| CliError::Config("estimate requires an estimate block".into()))?;

    // a configured source provides the mode distribution for the exact
    // gain inversions; without one the low-gain closed forms are used
    let lambda: Option<Vec<f64>> = match &config.source {
        Some(source) => Some(source.build()?.spectrum().lambda().to_vec()),
        None => None,
    };

    let mut results: Vec<EstimationResult> = Vec::new();
    match block.beam {
        BeamKind::Twin => {
            if let Some(g2) = block.g2 {
                results.push(estimate_k_from_g2(g2).map_err(CliError::Domain)?);
                results.push(estimate_mu_from_g2(g2).map_err(CliError::Domain)?);
            }
            if let Some(g11) = block.g11 {
                results.push(
                    estimate_b_from_g11(g11, lambda.as_deref()).map_err(CliError::Domain)?,
                );
            }
        }
        BeamKind::Single => {
            if let Some(slope) = block.slope {
                results.push(map_slope_to_k(slope).map_err(CliError::Domain)?);
                results.push(map_slope_to_mu(slope).map_err(CliError::Domain)?);
            }
            if let Some(g2) = block.g2 {
                let lambda = lambda.as_deref().ok_or_else(|| {
                    CliError::Config(
                        "single-beam gain estimation needs a source with a mode distribution"
                            .into(),
                    )
                })?;
                results.push(estimate_b_single_from_g2(g2, lambda).map_err(CliError::Domain)?);
            }
        }
    }
    if results.is_empty() {
        return Err(CliError::Config(
            "estimate block carries no invertible measurement (need g2, g11 or slope)".into(),
        ));
    }

    let digest = config.digest();
    write_json(
        &out_path(cli, "estimates.json"),
        &digest,
        json!({
            "beam": block.beam,
            "results": results,
        }),
    )?;
    say(cli, format!("estimate: {} results", results.len()));
    Ok(())
}

fn build_detector(config: &DetectorConfig) -> Result<DetectorModel, CliError> {
    let mode = match config.mode {
        DetectorModeConfig::NumberResolving => DetectorMode::NumberResolving,
        DetectorModeConfig::HbtClick => DetectorMode::HbtClick,
    };
    DetectorModel::new(config.efficiency_signal, config.efficiency_idler, mode)
        .map_err(CliError::Domain)
}

fn cmd_simulate(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    let block = config
        .simulate
        .as_ref()
        .ok_or_else(|| CliError::Config("simulate requires a simulate block".into()))?;
    let detector_config = config
        .detector
        .as_ref()
        .ok_or_else(|| CliError::Config("simulate requires a detector block".into()))?;
    let detector = build_detector(detector_config)?;
    let built = require_source(config, "simulate")?.build()?;
    let spectrum = built.spectrum();
    let seed = config.effective_seed();

    let ensemble = match block.beam {
        BeamKind::Twin => sample_twin_beam(spectrum, &detector, block.n_pulses, seed),
        BeamKind::Single => sample_single_beam(spectrum, &detector, block.n_pulses, seed),
    }
    .map_err(CliError::Domain)?;

    let estimates: Vec<EstimatedCorrelation> = match detector.mode() {
        DetectorMode::NumberResolving => {
            let orders = parse_orders(&block.orders)?;
            estimate_correlations(&ensemble, &orders).map_err(CliError::Domain)?
        }
        DetectorMode::HbtClick => {
            let splitting = detector_config.splitting.unwrap_or(0.5);
            let mut estimate =
                hbt_click_estimate_g2(&ensemble, splitting).map_err(CliError::Domain)?;
            estimate.order = "g2_click".to_string();
            vec![estimate]
        }
    };

    let digest = config.digest();
    write_csv(&out_path(cli, "ensemble.csv"), &digest, |w| {
        write_ensemble_csv(w, &ensemble)
    })?;
    let summary = squeezelab::export::SimulationSummary::new(&ensemble, &estimates);
    let mut payload = serde_json::to_value(&summary).expect("summary serializes");
    payload["spectrum_hash"] = json!(ensemble.spectrum_hash());
    write_json(&out_path(cli, "simulation.json"), &digest, payload)?;

    say(
        cli,
        format!(
            "simulate: {} pulses, mean counts ({:.4}, {:.4})",
            ensemble.n_pulses(),
            ensemble.mean_signal(),
            ensemble.mean_idler()
        ),
    );
    Ok(())
}

/// (B, g2_twin, g11_twin, g2_single, g3_single)
type CorrelationRow = (f64, f64, f64, f64, f64);

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|j| lo + j as f64 * step).collect()
}

fn cmd_sweep(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    let block = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep requires a sweep block".into()))?;
    let digest = config.digest();
    let path = out_path(cli, "sweep.csv");

    match block {
        SweepConfig::KVsG2 { k_min, k_max } => {
            if *k_min < 1 || k_max < k_min {
                return Err(CliError::Config(format!(
                    "k_vs_g2 needs 1 <= k_min <= k_max, got [{k_min}, {k_max}]"
                )));
            }
            write_csv(&path, &digest, |w| {
                writeln!(w, "K,g2")?;
                for k in *k_min..=*k_max {
                    let spectrum = SqueezerSpectrum::uniform(k, 1.0).expect("k >= 1");
                    writeln!(w, "{k},{:e}", g2_twin_lowgain(&spectrum).value)?;
                }
                Ok(())
            })?;
        }
        SweepConfig::MuVsG2 {
            mu_min,
            mu_max,
            n_points,
        } => {
            if !(*mu_min >= 0.0 && mu_max > mu_min && *mu_max < 1.0) || *n_points < 2 {
                return Err(CliError::Config(format!(
                    "mu_vs_g2 needs 0 <= mu_min < mu_max < 1 and n_points >= 2, got [{mu_min}, {mu_max}] x {n_points}"
                )));
            }
            write_csv(&path, &digest, |w| {
                writeln!(w, "mu,g2")?;
                for mu in linspace(*mu_min, *mu_max, *n_points) {
                    let spectrum =
                        SqueezerSpectrum::thermal(mu, thermal_mode_count(mu), 1.0)
                            .expect("mu validated");
                    writeln!(w, "{mu:e},{:e}", g2_twin_lowgain(&spectrum).value)?;
                }
                Ok(())
            })?;
        }
        SweepConfig::CorrelationsVsB {
            b_min,
            b_max,
            n_points,
        } => {
            if !(*b_min > 0.0 && b_max > b_min) || *n_points < 2 {
                return Err(CliError::Config(format!(
                    "correlations_vs_b needs 0 < b_min < b_max and n_points >= 2, got [{b_min}, {b_max}] x {n_points}"
                )));
            }
            let built = require_source(config, "sweep correlations_vs_b")?.build()?;
            let base = built.spectrum();
            let rows: Result<Vec<CorrelationRow>, Error> =
                linspace(*b_min, *b_max, *n_points)
                    .into_iter()
                    .map(|gain| {
                        let s = base.with_gain(gain)?;
                        Ok((
                            gain,
                            squeezelab::correlations::g2_twin(&s)?.value,
                            squeezelab::correlations::g11_twin(&s)?.value,
                            squeezelab::correlations::g2_single(&s)?.value,
                            squeezelab::correlations::g3_single(&s)?.value,
                        ))
                    })
                    .collect();
            let rows = rows.map_err(CliError::Domain)?;
            write_csv(&path, &digest, |w| {
                writeln!(w, "B,g2_twin,g11_twin,g2_single,g3_single")?;
                for (b, g2t, g11, g2s, g3s) in rows {
                    writeln!(w, "{b:e},{g2t:e},{g11:e},{g2s:e},{g3s:e}")?;
                }
                Ok(())
            })?;
        }
        SweepConfig::G3VsG2 {
            b_min,
            b_max,
            n_points,
        } => {
            let built = require_source(config, "sweep g3_vs_g2")?.build()?;
            let curve = squeezelab::estimation::sweep_single_beam_curve(
                built.spectrum().lambda(),
                (*b_min, *b_max),
                *n_points,
            )
            .map_err(CliError::Domain)?;
            write_csv(&path, &digest, |w| {
                writeln!(w, "# slope={:e}", curve.slope)?;
                writeln!(w, "g2,g3")?;
                for (g2, g3) in &curve.points {
                    writeln!(w, "{g2:e},{g3:e}")?;
                }
                Ok(())
            })?;
        }
        SweepConfig::SlopeMu {} => {
            write_csv(&path, &digest, |w| {
                writeln!(w, "mu,slope")?;
                for (mu, slope) in slope_table_mu() {
                    writeln!(w, "{mu:e},{slope:e}")?;
                }
                Ok(())
            })?;
        }
        SweepConfig::SlopeK {} => {
            write_csv(&path, &digest, |w| {
                writeln!(w, "K,slope")?;
                for (k, slope) in slope_table_k() {
                    writeln!(w, "{k},{slope:e}")?;
                }
                Ok(())
            })?;
        }
    }

    say(cli, "sweep: wrote sweep.csv");
    Ok(())
}
