use std::io::Write;
use std::path::Path;
use std::time::Instant;

use vokit_core::curation::{filter_by_entropy, mix_datasets, scale_align_per_frame, score_entropy, DatasetManifest, FilterConfig};
use vokit_core::fisher::Expectation;
use vokit_core::io::{kitti_poses_to_string, looks_like_manifest, manifest_to_string, parse_kitti_poses, predictions_to_string, read_manifest};
use vokit_core::metrics::{aggregate_reports, evaluate_sequence, EvalConfig};
use vokit_core::synth::{synthesize, SynthSpec};
use vokit_core::TOOL_VERSION;

use crate::args::{Align, EvaluateArgs, FilterArgs, Format, Method, MixArgs, PlotArgs, SynthArgs};
use crate::plot::{render_svg, Series};
use crate::report::{ConfigEcho, InputDigest, RunReport, SequenceReport};
use crate::{write_atomic, CliResult, Failure, InputFile, Motion};

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).map_err(|e| Failure::input(format!("stdout: {e}")))
        }
    }
}

fn sequence_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

pub fn evaluate(a: &EvaluateArgs) -> CliResult<()> {
    let t0 = Instant::now();
    if a.gt.len() != a.pred.len() {
        return Err(Failure::usage(format!("{} --gt files but {} --pred files", a.gt.len(), a.pred.len())));
    }
    let cfg = EvalConfig { lengths: a.lengths.clone(), start_stride: a.stride, epsilon: a.epsilon };
    cfg.validate().map_err(|e| Failure::from_core("", &e))?;

    let mut sequences = Vec::with_capacity(a.gt.len());
    for (gt_path, pred_path) in a.gt.iter().zip(&a.pred) {
        let gt_file = InputFile::read(gt_path)?;
        let pred_file = InputFile::read(pred_path)?;
        let gt = Motion::parse(&gt_file)?.relatives();
        let mut pred = Motion::parse(&pred_file)?.relatives();
        if gt.len() != pred.len() {
            return Err(Failure::input(format!(
                "{} has {} frame pairs but {} has {}",
                gt_file.label(),
                gt.len(),
                pred_file.label(),
                pred.len()
            )));
        }
        if gt.is_empty() {
            return Err(Failure::input(format!("{}: need at least two poses", gt_file.label())));
        }
        let substituted_frames = match a.align {
            Align::None => None,
            Align::ScalePerFrame => {
                let aligned = scale_align_per_frame(&gt, &pred, cfg.epsilon).map_err(|e| Failure::from_core("", &e))?;
                pred = aligned.poses;
                Some(aligned.substituted)
            }
        };
        let ctx = format!("{} vs {}", gt_file.label(), pred_file.label());
        let report = evaluate_sequence(&gt, &pred, &cfg).map_err(|e| Failure::from_core(&ctx, &e))?;
        sequences.push(SequenceReport {
            name: sequence_name(gt_path),
            gt: InputDigest { path: gt_file.label(), sha256: gt_file.sha256 },
            pred: InputDigest { path: pred_file.label(), sha256: pred_file.sha256 },
            substituted_frames,
            report,
        });
    }
    let reports: Vec<_> = sequences.iter().map(|s| s.report.clone()).collect();
    let average = aggregate_reports(&reports).map_err(|e| Failure::from_core("", &e))?;
    let run = RunReport {
        tool_version: TOOL_VERSION,
        config: ConfigEcho {
            lengths: cfg.lengths.clone(),
            stride: cfg.start_stride,
            epsilon: cfg.epsilon,
            align: match a.align {
                Align::None => "none",
                Align::ScalePerFrame => "scale-per-frame",
            },
        },
        sequences,
        average,
        elapsed_seconds: a.timing.then(|| t0.elapsed().as_secs_f64()),
    };
    let text = match a.format {
        Format::Json => run.to_json(),
        Format::Csv => run.to_csv(),
        Format::Human => run.to_human(),
    };
    emit(a.out.as_deref(), &text)
}

pub fn filter(a: &FilterArgs) -> CliResult<()> {
    let file = InputFile::read(&a.pred)?;
    let records = match Motion::parse(&file)? {
        Motion::Predictions(r) => r,
        Motion::Poses(_) => {
            return Err(Failure::input(format!("{}: a pose file has no uncertainty; expected a prediction file", file.label())))
        }
    };
    let expectation = match a.method {
        Method::Quadrature => Expectation::Quadrature,
        Method::MonteCarlo => Expectation::MonteCarlo { samples: a.samples, seed: a.seed },
    };
    let cfg = FilterConfig { tau_u: a.tau, expectation, ..Default::default() };
    cfg.validate().map_err(|e| Failure::from_core("", &e))?;
    let scored = score_entropy(&records, &expectation).map_err(|e| Failure::from_core(&file.label(), &e))?;
    let (kept, rejected) = filter_by_entropy(&scored, &cfg).map_err(|e| Failure::from_core("", &e))?;
    let inputs = vec![file.descriptor("pred")];
    let kept = kept.with_inputs(inputs.clone());
    let rejected = rejected.with_inputs(inputs);
    let to_text = |m: &DatasetManifest| manifest_to_string(m).map_err(|e| Failure::from_core("", &e));
    write_atomic(&a.kept, to_text(&kept)?.as_bytes())?;
    write_atomic(&a.rejected, to_text(&rejected)?.as_bytes())?;
    println!("kept {} of {} samples (entropy < {})", kept.len(), scored.len(), a.tau);
    Ok(())
}

pub fn mix(a: &MixArgs) -> CliResult<()> {
    let labeled_file = InputFile::read(&a.labeled)?;
    let labeled = if looks_like_manifest(&labeled_file.text) {
        read_manifest(labeled_file.text.as_bytes()).map_err(|e| Failure::from_core(&labeled_file.label(), &e))?
    } else {
        let traj = parse_kitti_poses(labeled_file.text.as_bytes()).map_err(|e| Failure::from_core(&labeled_file.label(), &e))?;
        let poses: Vec<_> = traj.relatives().into_iter().enumerate().map(|(k, p)| (format!("{:06}", k + 1), p)).collect();
        DatasetManifest::labeled(&poses)
            .map_err(|e| Failure::from_core(&labeled_file.label(), &e))?
            .with_inputs(vec![labeled_file.descriptor("labeled")])
    };
    let pseudo_file = InputFile::read(&a.pseudo)?;
    let pseudo = read_manifest(pseudo_file.text.as_bytes()).map_err(|e| Failure::from_core(&pseudo_file.label(), &e))?;
    let mixed = mix_datasets(&labeled, &pseudo).map_err(|e| Failure::from_core("", &e))?;
    let text = manifest_to_string(&mixed).map_err(|e| Failure::from_core("", &e))?;
    write_atomic(&a.out, text.as_bytes())?;
    let c = mixed.header.counts;
    println!("mixed {} labeled + {} pseudo = {} records", c.labeled, c.pseudo, c.total);
    Ok(())
}

pub fn synth(a: &SynthArgs) -> CliResult<()> {
    let spec = SynthSpec {
        shape: a.shape.into(),
        frame_count: a.frames,
        step_meters: a.step,
        scale_noise: a.scale_noise,
        rotation_jitter: a.rotation_jitter,
        concentration: a.concentration,
        seed: a.seed,
        zigzag_schedule: a.zigzag_schedule.map(Into::into),
    };
    let s = synthesize(&spec).map_err(|e| Failure::from_core("", &e))?;
    let preds = predictions_to_string(&s.records).map_err(|e| Failure::from_core("", &e))?;
    write_atomic(&a.gt, kitti_poses_to_string(&s.gt).as_bytes())?;
    write_atomic(&a.pred, preds.as_bytes())?;
    let mut echo = serde_json::to_string_pretty(&serde_json::json!({
        "tool_version": TOOL_VERSION,
        "spec": spec,
        "gt": a.gt.display().to_string(),
        "pred": a.pred.display().to_string(),
    }))
    .expect("serializable");
    echo.push('\n');
    emit(a.out.as_deref(), &echo)
}

pub fn plot(a: &PlotArgs) -> CliResult<()> {
    let mut series = Vec::with_capacity(1 + a.pred.len());
    for (k, path) in std::iter::once(&a.gt).chain(&a.pred).enumerate() {
        let file = InputFile::read(path)?;
        let traj = Motion::parse(&file)?.trajectory();
        let label = if k == 0 { format!("ground truth ({})", sequence_name(path)) } else { sequence_name(path) };
        series.push(Series { label, points: traj.positions().map(|p| (p.x, p.z)).collect() });
    }
    write_atomic(&a.out, render_svg(&series).as_bytes())
}
