// SPDX-License-Identifier: MIT OR Apache-2.0

//! The `vdprobe` command line.
//!
//! Exit status: 0 on success, 1 for usage and validation errors, 2 for I/O
//! and format errors.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::CameraModel;
use crate::heuristics::{classify, classify_scene, HeuristicLabel, LabelCounts, DEFAULT_THRESHOLD_FRACTION};
use crate::pipeline::{
    check_logit_references, read_annotations, read_document, read_hidden_states, read_logits, read_manifest,
    read_questions, write_document, write_jsonl, write_manifest, write_report, InputDigest, ManifestVariant, RunReport,
    SceneManifest, MANIFEST_SCHEMA_VERSION,
};
use crate::probing::{
    build_swap_pairs, category_stats, coherence_report, layer_robustness, pair_deltas, pca_deltas, select_layer,
    similarity_matrix, Category, CoherenceReport, HiddenStateRecord, ModelCoherence, SelectionConfig, SwapPairSet,
};
use crate::scoring::{
    aggregate, exact_match_counts, heatmap, run_mock_agent, size_sweep_report, wilson_ci, AgentKind, AggregateConfig,
    ScoringMode, WilsonInterval, Z_95,
};
use crate::tunnelgen::{generate_grid, generate_qa, generate_size_sweep_grid, DepthPair, SizeSweepConfig, TunnelSpec};

#[derive(Debug, Parser)]
#[command(
    name = "vdprobe",
    version,
    about = "Depth-shortcut benchmark generation, scoring and hidden-state probing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the tunnel scene grid as a manifest.
    GenTunnel(GenTunnel),
    /// Generate the object-size sweep as a manifest.
    GenSizeSweep(GenSizeSweep),
    /// Write the four template questions of every scene in a manifest.
    GenQa(GenQa),
    /// Label annotations or manifest scenes as consistent / counter / ambiguous.
    Classify(Classify),
    /// Score logit records against questions, split by heuristic label.
    Score(Score),
    /// Score a size-sweep manifest bucket by bucket.
    SizeReport(SizeReport),
    /// Run a scripted reference agent and write its logit records.
    MockRun(MockRun),
    /// Build swap pairs and probe questions from relation annotations.
    BuildPairs(BuildPairs),
    /// Coherence, VD-EI, similarity and PCA from hidden states.
    Probe(Probe),
    /// Choose a representative layer from per-layer coherence reports.
    SelectLayer(SelectLayer),
    /// Sensitivity of a cross-model ranking to the layer choice.
    LayerRobustness(LayerRobustness),
}

#[derive(Debug, Args)]
struct Geometry {
    /// Angular slots around the tunnel.
    #[arg(long, default_value_t = 16)]
    slots: u32,
    /// Tunnel length, meters.
    #[arg(long, default_value_t = 12.0)]
    length: f64,
    /// Half the side of the square cross-section, meters.
    #[arg(long, default_value_t = 1.0)]
    half_extent: f64,
    /// Focal length, pixels.
    #[arg(long, default_value_t = 800.0)]
    focal: f64,
    #[arg(long, default_value_t = 1024)]
    width: u32,
    #[arg(long, default_value_t = 1024)]
    height: u32,
    /// Camera height above the floor; defaults to the half extent.
    #[arg(long)]
    camera_height: Option<f64>,
    #[arg(long, default_value_t = 6.0)]
    z_far: f64,
    #[arg(long, default_value_t = 3.0)]
    z_near: f64,
}

impl Geometry {
    fn build(&self) -> Result<(TunnelSpec<f64>, DepthPair<f64>)> {
        let camera = CameraModel::new(
            self.focal,
            self.camera_height.unwrap_or(self.half_extent),
            self.width,
            self.height,
        )?;
        let spec = TunnelSpec {
            half_extent: self.half_extent,
            length: self.length,
            angular_slots: self.slots,
            camera,
        };
        spec.validate()?;
        let depths = DepthPair {
            z_far: self.z_far,
            z_near: self.z_near,
        };
        depths.validate(&spec)?;
        Ok((spec, depths))
    }
}

#[derive(Debug, Args)]
struct GenTunnel {
    #[arg(long)]
    seed: u64,
    /// Scenes per (far slot, near slot) cell.
    #[arg(long, default_value_t = 12)]
    instances: u32,
    #[command(flatten)]
    geometry: Geometry,
    /// Manifest output path.
    #[arg(long)]
    out: PathBuf,
    /// Also write the QA records here.
    #[arg(long)]
    qa_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenSizeSweep {
    #[arg(long)]
    seed: u64,
    /// Base layouts per cell.
    #[arg(long, default_value_t = 1)]
    instances: u32,
    #[command(flatten)]
    geometry: Geometry,
    #[arg(long, default_value_t = 0.10)]
    s1_min: f64,
    #[arg(long, default_value_t = 0.30)]
    s1_max: f64,
    /// Sweep steps between the endpoints (points = intervals + 1).
    #[arg(long, default_value_t = 10)]
    intervals: u32,
    /// Fixed s1 + s2.
    #[arg(long, default_value_t = 0.4)]
    total: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    qa_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenQa {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Classify {
    /// JSONL annotation records.
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    annotations: Option<PathBuf>,
    /// Scene manifest; labels are recomputed and compared with the stored ones.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Ambiguity threshold as a fraction of image height (manifest input
    /// defaults to the manifest's own threshold).
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Logit,
    Exact,
}

impl From<ModeArg> for ScoringMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Logit => ScoringMode::Logit,
            ModeArg::Exact => ScoringMode::ExactMatch,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FilterArg {
    Consistent,
    Counter,
}

#[derive(Debug, Args)]
struct Score {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    qa: PathBuf,
    #[arg(long)]
    logits: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Logit)]
    mode: ModeArg,
    /// Count ambiguous scenes in the overall mean.
    #[arg(long)]
    include_ambiguous: bool,
    /// Add the per-cell heatmap.
    #[arg(long)]
    heatmap: bool,
    /// Restrict the heatmap to one split.
    #[arg(long, value_enum, requires = "heatmap")]
    filter: Option<FilterArg>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SizeReport {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    qa: PathBuf,
    #[arg(long)]
    logits: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Logit)]
    mode: ModeArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AgentArg {
    HeightHeuristic,
    AntiHeuristic,
    DepthOracle,
    SizeHeuristic,
    NoisyOracle,
}

#[derive(Debug, Args)]
struct MockRun {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    qa: PathBuf,
    #[arg(long, value_enum)]
    agent: AgentArg,
    /// Flip probability of the noisy oracle.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Seed of the noisy oracle.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BuildPairs {
    #[arg(long)]
    annotations: PathBuf,
    /// Seed for the distance-pair reference choice.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Probe {
    /// Swap-pair document written by `build-pairs`.
    #[arg(long)]
    pairs: PathBuf,
    /// SPRB hidden-state file.
    #[arg(long)]
    hidden: PathBuf,
    /// Layer to analyse in detail (similarity matrix and PCA).
    #[arg(long)]
    layer: Option<u32>,
    #[arg(long, default_value_t = 2)]
    pca_k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SelectLayer {
    /// Probe report, or a document with a `trajectories` array.
    #[arg(long)]
    trajectories: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    plateau_fraction: f64,
    #[arg(long, default_value_t = 3)]
    vd_window: usize,
    #[arg(long, default_value_t = 0.01)]
    stability_tol: f64,
    #[arg(long, default_value_t = 0.05)]
    final_band_fraction: f64,
    #[arg(long, default_value_t = 2)]
    min_final_band: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LayerRobustness {
    /// `{"models": [{"name", "coh_d", "candidate_range"}], "reference": [...]}`.
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Human-readable summaries go to `stdout`, errors to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                1
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match dispatch(cli.command) {
        Ok(summary) => {
            let _ = writeln!(stdout, "{summary}");
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<String> {
    match command {
        Command::GenTunnel(a) => gen_tunnel(a),
        Command::GenSizeSweep(a) => gen_size_sweep(a),
        Command::GenQa(a) => gen_qa(a),
        Command::Classify(a) => classify_cmd(a),
        Command::Score(a) => score(a),
        Command::SizeReport(a) => size_report(a),
        Command::MockRun(a) => mock_run(a),
        Command::BuildPairs(a) => build_pairs(a),
        Command::Probe(a) => probe(a),
        Command::SelectLayer(a) => select_layer_cmd(a),
        Command::LayerRobustness(a) => robustness(a),
    }
}

fn write_qa(path: &Path, manifest: &SceneManifest) -> Result<usize> {
    let mut records = Vec::with_capacity(manifest.scenes.len() * 4);
    for scene in &manifest.scenes {
        records.extend(generate_qa(scene)?);
    }
    write_jsonl(path, &records)?;
    Ok(records.len())
}

fn label_summary(manifest: &SceneManifest) -> String {
    let c: LabelCounts = manifest.scenes.iter().map(|s| s.heuristic_label).collect();
    format!(
        "{} consistent, {} counter, {} ambiguous",
        c.consistent, c.counter, c.ambiguous
    )
}

fn gen_tunnel(a: GenTunnel) -> Result<String> {
    let (tunnel, depths) = a.geometry.build()?;
    let scenes = generate_grid(&tunnel, &depths, a.instances, a.seed)?;
    let manifest = SceneManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        master_seed: a.seed,
        variant: ManifestVariant::Grid,
        tunnel,
        depths,
        instances_per_cell: a.instances,
        threshold_fraction: DEFAULT_THRESHOLD_FRACTION,
        size_sweep: None,
        scenes,
    };
    write_manifest(&a.out, &manifest)?;
    let mut summary = format!("{} scenes ({})", manifest.scenes.len(), label_summary(&manifest));
    if let Some(qa) = &a.qa_out {
        summary.push_str(&format!(", {} questions", write_qa(qa, &manifest)?));
    }
    Ok(summary)
}

fn gen_size_sweep(a: GenSizeSweep) -> Result<String> {
    let (tunnel, depths) = a.geometry.build()?;
    let sweep = SizeSweepConfig {
        s1_min: a.s1_min,
        s1_max: a.s1_max,
        intervals: a.intervals,
        total: a.total,
    };
    let scenes = generate_size_sweep_grid(&tunnel, &depths, &sweep, a.instances, a.seed)?;
    let manifest = SceneManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        master_seed: a.seed,
        variant: ManifestVariant::SizeSweep,
        tunnel,
        depths,
        instances_per_cell: a.instances,
        threshold_fraction: DEFAULT_THRESHOLD_FRACTION,
        size_sweep: Some(sweep),
        scenes,
    };
    write_manifest(&a.out, &manifest)?;
    let mut summary = format!(
        "{} sweep scenes ({} steps each)",
        manifest.scenes.len(),
        a.intervals + 1
    );
    if let Some(qa) = &a.qa_out {
        summary.push_str(&format!(", {} questions", write_qa(qa, &manifest)?));
    }
    Ok(summary)
}

fn gen_qa(a: GenQa) -> Result<String> {
    let manifest = read_manifest(&a.manifest)?;
    Ok(format!("{} questions", write_qa(&a.out, &manifest)?))
}

#[derive(Serialize)]
struct LabelledExample {
    example_id: String,
    label: HeuristicLabel,
}

fn percentages(c: &LabelCounts) -> Value {
    let total = c.total();
    let pct = |n: usize| {
        if total == 0 {
            0.0
        } else {
            100.0 * n as f64 / total as f64
        }
    };
    json!({
        "consistent": pct(c.consistent),
        "counter": pct(c.counter),
        "ambiguous": pct(c.ambiguous),
    })
}

fn classify_cmd(a: Classify) -> Result<String> {
    match (&a.annotations, &a.manifest) {
        (Some(path), None) => {
            let threshold = a.threshold.unwrap_or(DEFAULT_THRESHOLD_FRACTION);
            let records = read_annotations(path)?;
            let mut labels = Vec::new();
            let mut skipped = 0usize;
            for r in &records {
                if !r.has_depth_fields() {
                    skipped += 1;
                    continue;
                }
                labels.push(LabelledExample {
                    example_id: r.example_id.clone(),
                    label: classify(&r.to_depth_example()?, threshold)?,
                });
            }
            let counts: LabelCounts = labels.iter().map(|l| l.label).collect();
            let payload = json!({
                "counts": counts,
                "percentages": percentages(&counts),
                "labels": labels,
                "skipped_without_depth_fields": skipped,
            });
            let config = json!({ "source": "annotations", "threshold_fraction": threshold });
            let inputs = vec![InputDigest::of_file("annotations", path)?];
            write_report(&a.out, &RunReport::new("classify", inputs, &config, &payload)?)?;
            Ok(format!(
                "{} examples: {} consistent, {} counter, {} ambiguous ({skipped} skipped)",
                counts.total(),
                counts.consistent,
                counts.counter,
                counts.ambiguous
            ))
        }
        (None, Some(path)) => {
            let manifest = read_manifest(path)?;
            let threshold = a.threshold.unwrap_or(manifest.threshold_fraction);
            let mut counts = LabelCounts::default();
            let mut disagreements = Vec::new();
            for scene in &manifest.scenes {
                let label = classify_scene(scene, &manifest.tunnel.camera, threshold)?;
                counts.record(label);
                if label != scene.heuristic_label {
                    disagreements.push(json!({
                        "scene_id": scene.scene_id,
                        "stored": scene.heuristic_label,
                        "recomputed": label,
                    }));
                }
            }
            let payload = json!({
                "counts": counts,
                "percentages": percentages(&counts),
                "agreement": {
                    "scenes": manifest.scenes.len(),
                    "agree": manifest.scenes.len() - disagreements.len(),
                    "disagreements": disagreements,
                },
            });
            let config = json!({ "source": "manifest", "threshold_fraction": threshold });
            let inputs = vec![InputDigest::of_file("manifest", path)?];
            write_report(&a.out, &RunReport::new("classify", inputs, &config, &payload)?)?;
            Ok(format!(
                "{} scenes: {} consistent, {} counter, {} ambiguous; {} disagree with stored labels",
                counts.total(),
                counts.consistent,
                counts.counter,
                counts.ambiguous,
                disagreements.len()
            ))
        }
        _ => Err(Error::invalid("pass exactly one of --annotations or --manifest")),
    }
}

type ScoringInputs = (
    SceneManifest,
    Vec<crate::tunnelgen::QuestionRecord>,
    Vec<crate::scoring::LogitRecord<f64>>,
    Vec<InputDigest>,
);

/// Loads and cross-checks the manifest, questions and logits of a scoring run.
fn load_scoring_inputs(manifest: &Path, qa: &Path, logits: &Path) -> Result<ScoringInputs> {
    let m = read_manifest(manifest)?;
    let questions = read_questions(qa)?;
    let records = read_logits(logits)?;
    let scene_ids: HashSet<&str> = m.scenes.iter().map(|s| s.scene_id.as_str()).collect();
    if let Some(q) = questions.iter().find(|q| !scene_ids.contains(q.scene_id.as_str())) {
        return Err(Error::Dangling {
            kind: "question",
            id: q.question_id.clone(),
            target: "scene",
        });
    }
    check_logit_references(&records, &questions)?;
    let inputs = vec![
        InputDigest::of_file("manifest", manifest)?,
        InputDigest::of_file("qa", qa)?,
        InputDigest::of_file("logits", logits)?,
    ];
    Ok((m, questions, records, inputs))
}

fn score(a: Score) -> Result<String> {
    let (manifest, questions, records, inputs) = load_scoring_inputs(&a.manifest, &a.qa, &a.logits)?;
    let mode: ScoringMode = a.mode.into();
    let labels: BTreeMap<String, HeuristicLabel> = manifest
        .scenes
        .iter()
        .map(|s| (s.scene_id.clone(), s.heuristic_label))
        .collect();
    let config = AggregateConfig {
        mode,
        include_ambiguous: a.include_ambiguous,
    };
    let split = aggregate(&records, &questions, &labels, config)?;
    let filter = a.filter.map(|f| match f {
        FilterArg::Consistent => HeuristicLabel::Consistent,
        FilterArg::Counter => HeuristicLabel::Counter,
    });
    let map = if a.heatmap {
        Some(heatmap(
            &records,
            &questions,
            &manifest.scenes,
            manifest.tunnel.angular_slots,
            mode,
            filter,
        )?)
    } else {
        None
    };
    let wilson = if mode == ScoringMode::ExactMatch {
        let counts = exact_match_counts(&records, &questions, &labels)?;
        let interval = |label| -> Result<Option<WilsonInterval<f64>>> {
            match counts.get(&label) {
                Some(&(k, n)) if n > 0 => Ok(Some(wilson_ci(k, n, Z_95)?)),
                _ => Ok(None),
            }
        };
        Some(json!({
            "consistent": interval(HeuristicLabel::Consistent)?,
            "counter": interval(HeuristicLabel::Counter)?,
            "ambiguous": interval(HeuristicLabel::Ambiguous)?,
        }))
    } else {
        None
    };
    let payload = json!({ "split": split, "heatmap": map, "wilson_95": wilson });
    let config_echo = json!({
        "mode": mode,
        "include_ambiguous": a.include_ambiguous,
        "heatmap": a.heatmap,
        "filter": filter,
    });
    write_report(&a.out, &RunReport::new("score", inputs, &config_echo, &payload)?)?;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_owned(), |v| format!("{v:.4}"));
    Ok(format!(
        "v = {}, v_cons = {}, v_ctr = {}, gap = {} ({mode})",
        fmt(split.v_mean),
        fmt(split.v_consistent),
        fmt(split.v_counter),
        fmt(split.gap)
    ))
}

fn size_report(a: SizeReport) -> Result<String> {
    let (manifest, questions, records, inputs) = load_scoring_inputs(&a.manifest, &a.qa, &a.logits)?;
    if manifest.variant != ManifestVariant::SizeSweep {
        return Err(Error::invalid("size-report needs a size-sweep manifest"));
    }
    let mode: ScoringMode = a.mode.into();
    let report = size_sweep_report(&records, &questions, &manifest.scenes, mode)?;
    write_report(
        &a.out,
        &RunReport::new("size-report", inputs, &json!({ "mode": mode }), &report)?,
    )?;
    Ok(format!(
        "{} buckets, v = {:.4}, size gap = {:.4} ({mode})",
        report.s1_values.len(),
        report.v_mean,
        report.size_gap
    ))
}

fn mock_run(a: MockRun) -> Result<String> {
    let kind = match (a.agent, a.epsilon, a.seed) {
        (AgentArg::NoisyOracle, Some(epsilon), Some(seed)) => AgentKind::NoisyOracle { epsilon, seed },
        (AgentArg::NoisyOracle, _, _) => return Err(Error::invalid("noisy-oracle needs --epsilon and --seed")),
        (_, Some(_), _) | (_, _, Some(_)) => {
            return Err(Error::invalid("--epsilon and --seed only apply to noisy-oracle"))
        }
        (AgentArg::HeightHeuristic, None, None) => AgentKind::HeightHeuristic,
        (AgentArg::AntiHeuristic, None, None) => AgentKind::AntiHeuristic,
        (AgentArg::DepthOracle, None, None) => AgentKind::DepthOracle,
        (AgentArg::SizeHeuristic, None, None) => AgentKind::SizeHeuristic,
    };
    let manifest = read_manifest(&a.manifest)?;
    let questions = read_questions(&a.qa)?;
    let records = run_mock_agent(kind, &manifest.scenes, &questions, &manifest.tunnel.camera)?;
    write_jsonl(&a.out, &records)?;
    Ok(format!("{} logit records from {kind}", records.len()))
}

fn build_pairs(a: BuildPairs) -> Result<String> {
    let records = read_annotations(&a.annotations)?;
    let examples = records
        .iter()
        .filter(|r| r.relation.is_some())
        .map(|r| r.to_relation_example())
        .collect::<Result<Vec<_>>>()?;
    let set = build_swap_pairs(&examples, a.seed)?;
    write_document(&a.out, &set)?;
    Ok(format!(
        "{} swap pairs, {} questions ({} distance examples skipped without a distractor)",
        set.pairs.len(),
        set.questions.len(),
        set.skipped_no_distractor
    ))
}

#[derive(Serialize)]
struct LayerDetail {
    layer: u32,
    report: CoherenceReport<f64>,
    category_counts: BTreeMap<Category, usize>,
    /// Rows and columns in left, right, above, below, far, close order;
    /// absent unless all six categories have deltas.
    similarity: Option<[[f64; 6]; 6]>,
    pca: Option<crate::probing::DeltaPca<f64>>,
    pca_error: Option<String>,
}

fn probe(a: Probe) -> Result<String> {
    let set: SwapPairSet = read_document(&a.pairs)?;
    for p in &set.pairs {
        p.validate()?;
    }
    let (header, states) = read_hidden_states(&a.hidden, None)?;
    let known: HashSet<&str> = set
        .pairs
        .iter()
        .flat_map(|p| [p.q_original.as_str(), p.q_swapped.as_str()])
        .collect();
    let mut by_layer: BTreeMap<u32, HashMap<String, Vec<f64>>> = BTreeMap::new();
    for HiddenStateRecord {
        question_id,
        layer,
        vector,
    } in states
    {
        if !known.contains(question_id.as_str()) {
            return Err(Error::Dangling {
                kind: "hidden state",
                id: question_id,
                target: "swap-pair question",
            });
        }
        if by_layer
            .entry(layer)
            .or_default()
            .insert(question_id.clone(), vector)
            .is_some()
        {
            return Err(Error::DuplicateId {
                kind: "hidden state",
                id: format!("{question_id}@{layer}"),
            });
        }
    }
    if by_layer.is_empty() {
        return Err(Error::invalid("hidden-state file has no records"));
    }
    let mut trajectories = Vec::new();
    let mut detail = None;
    for (&layer, states) in &by_layer {
        let deltas = pair_deltas(&set.pairs, states)?;
        let report = coherence_report(&deltas, layer)?;
        if a.layer == Some(layer) {
            let stats = category_stats(&deltas)?;
            let similarity = if stats.len() == Category::ALL.len() {
                Some(similarity_matrix(&stats)?)
            } else {
                None
            };
            let (pca, pca_error) = match pca_deltas(&deltas, a.pca_k) {
                Ok(p) => (Some(p), None),
                Err(e) => (None, Some(e.to_string())),
            };
            detail = Some(LayerDetail {
                layer,
                report: report.clone(),
                category_counts: stats.iter().map(|(c, s)| (*c, s.count)).collect(),
                similarity,
                pca,
                pca_error,
            });
        }
        trajectories.push(report);
    }
    if let Some(l) = a.layer {
        if detail.is_none() {
            return Err(Error::invalid(format!(
                "layer {l} not present in the hidden-state file"
            )));
        }
    }
    let payload = json!({
        "dim": header.dim,
        "pairs": set.pairs.len(),
        "trajectories": trajectories,
        "detail": detail,
    });
    let config = json!({ "layer": a.layer, "pca_k": a.pca_k });
    let inputs = vec![
        InputDigest::of_file("pairs", &a.pairs)?,
        InputDigest::of_file("hidden", &a.hidden)?,
    ];
    write_report(&a.out, &RunReport::new("probe", inputs, &config, &payload)?)?;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_owned(), |v| format!("{v:.4}"));
    Ok(match &detail {
        Some(d) => format!(
            "layer {}: Coh_H {}, Coh_V {}, Coh_D {}, VD-EI {}",
            d.layer,
            fmt(d.report.coh_horizontal),
            fmt(d.report.coh_vertical),
            fmt(d.report.coh_distance),
            fmt(d.report.vd_ei)
        ),
        None => format!("{} layers probed over {} pairs", trajectories.len(), set.pairs.len()),
    })
}

fn load_trajectories(path: &Path) -> Result<Vec<CoherenceReport<f64>>> {
    let doc: Value = read_document(path)?;
    let list = doc
        .get("payload")
        .and_then(|p| p.get("trajectories"))
        .or_else(|| doc.get("trajectories"))
        .cloned()
        .ok_or_else(|| Error::format(path.display().to_string(), "no `trajectories` array"))?;
    serde_json::from_value(list).map_err(|e| Error::format(path.display().to_string(), e.to_string()))
}

fn select_layer_cmd(a: SelectLayer) -> Result<String> {
    let trajectories = load_trajectories(&a.trajectories)?;
    let config = SelectionConfig {
        plateau_fraction: a.plateau_fraction,
        vd_window: a.vd_window,
        stability_tol: a.stability_tol,
        final_band_fraction: a.final_band_fraction,
        min_final_band: a.min_final_band,
    };
    let report = select_layer(&trajectories, &config)?;
    let inputs = vec![InputDigest::of_file("trajectories", &a.trajectories)?];
    write_report(&a.out, &RunReport::new("select-layer", inputs, &config, &report)?)?;
    let mut summary = format!(
        "L* = {} of {} (candidates {:?})",
        report.selected_layer, report.total_layers, report.candidate_range
    );
    for w in &report.warnings {
        summary.push_str(&format!("\nwarning: {w}"));
    }
    Ok(summary)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RobustnessTable {
    models: Vec<ModelCoherence<f64>>,
    reference: Vec<f64>,
}

fn robustness(a: LayerRobustness) -> Result<String> {
    let table: RobustnessTable = read_document(&a.table)?;
    let report = layer_robustness(&table.models, &table.reference, a.samples, a.seed)?;
    let inputs = vec![InputDigest::of_file("table", &a.table)?];
    let config = json!({ "samples": a.samples, "seed": a.seed });
    write_report(&a.out, &RunReport::new("layer-robustness", inputs, &config, &report)?)?;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_owned(), |v| format!("{v:.4}"));
    Ok(format!(
        "mean rho = {} over {} samples (min {}, max {})",
        fmt(report.mean_rho),
        report.samples,
        fmt(report.min_rho),
        fmt(report.max_rho)
    ))
}
