//! Stage orchestration over a job store.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use clipsmith_core::metrics::{build_report, MetricsConfig, MetricsError, MetricsReport, DEFAULT_TAU};
use clipsmith_core::select::{
    build_prompt, heuristic_select, request_selection, sanitize_cutlist, select_visual, ChatRequest,
    HeuristicConfig, ParseMode, RetryPolicy, SelectError,
};
use clipsmith_core::subtitles::generate_subtitles;
use clipsmith_core::transcribe::{sha256_file, transcribe_dual, TranscribeError};
use clipsmith_core::transcript::{detect_pauses, DEFAULT_PAUSE_MIN_GAP};
use clipsmith_core::{
    normalize_timestamp, validate_cutlist, AudioArtifact, AudioFormat, Container, CutList, CutSegment,
    Persona, Transcript, ValidatedCutList, VideoMeta,
};
use clipsmith_media::{burn_subtitles, extract_audio, merge, probe_video, reframe, MediaError, MergeConfig, Transcoder};
use parking_lot::Mutex;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backends::Backends;
use crate::clock::{Clock, IdStrategy, SystemClock};
use crate::manifest::{ArtifactKind, Artifacts, JobFailure, JobManifest, JobState, Stage, Transition};
use crate::store::{write_atomic, JobStore};
use crate::ServiceError;

pub const TRANSCRIPT_FILE: &str = "transcript.json";
pub const TRANSCRIPT_FAST_FILE: &str = "transcript.fast.json";
pub const LLM_EXCHANGE_FILE: &str = "llm_exchange.json";
pub const SUBTITLES_FILE: &str = "final.srt";
pub const METRICS_FILE: &str = "metrics.json";
pub const MERGE_DIR: &str = "merge";

/// How the select stage picks segments for a voiced source. Sources
/// without speech always go to the visual selector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorKind {
    #[default]
    Llm,
    Heuristic,
}

impl SelectorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectorKind::Llm => "llm",
            SelectorKind::Heuristic => "heuristic",
        }
    }
}

impl FromStr for SelectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "llm" | "backend" => Ok(SelectorKind::Llm),
            "heuristic" => Ok(SelectorKind::Heuristic),
            other => Err(format!("unknown selector {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub transcoder: Transcoder,
    pub audio_format: AudioFormat,
    pub selector: SelectorKind,
    pub retry: RetryPolicy,
    /// Scoring weights plus the fragment merging applied after transcription.
    pub heuristic: HeuristicConfig,
    pub forced_language: Option<String>,
    pub merge: MergeConfig,
    pub tau: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            transcoder: Transcoder::from_env(),
            audio_format: AudioFormat::Wav,
            selector: SelectorKind::default(),
            retry: RetryPolicy::default(),
            heuristic: HeuristicConfig::default(),
            forced_language: None,
            merge: MergeConfig::default(),
            tau: DEFAULT_TAU,
        }
    }
}

/// Where a new job's video comes from.
#[derive(Debug, Clone)]
pub enum JobSource {
    /// A file on the service host; it is copied into the job directory.
    Path(PathBuf),
    Upload { file_name: String, bytes: Vec<u8> },
}

impl JobSource {
    fn file_name(&self) -> String {
        let raw = match self {
            JobSource::Path(p) => p.as_os_str().to_string_lossy().into_owned(),
            JobSource::Upload { file_name, .. } => file_name.clone(),
        };
        raw.rsplit(['/', '\\']).next().unwrap_or_default().to_string()
    }
}

/// One edit to the current cut-list. Indices refer to playback order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum CutListEdit {
    Remove {
        index: usize,
    },
    /// Moves the segment's edges by the given number of seconds.
    Adjust {
        index: usize,
        #[serde(default)]
        delta_start: f64,
        #[serde(default)]
        delta_end: f64,
    },
    /// New playback order as a permutation of current indices.
    Reorder {
        order: Vec<usize>,
    },
}

pub struct Pipeline {
    store: Arc<dyn JobStore>,
    backends: Backends,
    cfg: PipelineConfig,
    clock: Arc<dyn Clock>,
    ids: IdStrategy,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("backends", &self.backends)
            .field("cfg", &self.cfg)
            .field("ids", &self.ids)
            .finish_non_exhaustive()
    }
}

fn storage(e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Storage(e.to_string())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_slice(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let mut body = serde_json::to_vec_pretty(value).map_err(|e| e.to_string())?;
    body.push(b'\n');
    write_atomic(path, &body).map_err(|e| format!("{}: {e}", path.display()))
}

fn relative(dir: &Path, path: &Path) -> String {
    path.strip_prefix(dir).unwrap_or(path).to_string_lossy().replace('\\', "/")
}

fn seconds_to_centis(delta: f64) -> Result<i64, String> {
    let magnitude = normalize_timestamp(delta.abs()).map_err(|e| format!("bad offset {delta}: {e}"))?;
    let c = i64::try_from(magnitude.centis()).map_err(|_| format!("offset {delta} too large"))?;
    Ok(if delta < 0.0 { -c } else { c })
}

/// Applies edits to segments listed in playback order.
pub fn apply_edits(mut segs: Vec<CutSegment>, edits: &[CutListEdit]) -> Result<Vec<CutSegment>, String> {
    for (k, edit) in edits.iter().enumerate() {
        let out_of_range = |i: usize, n: usize| format!("edit {k}: index {i} out of range for {n} segment(s)");
        match edit {
            CutListEdit::Remove { index } => {
                if *index >= segs.len() {
                    return Err(out_of_range(*index, segs.len()));
                }
                segs.remove(*index);
            }
            CutListEdit::Adjust {
                index,
                delta_start,
                delta_end,
            } => {
                let n = segs.len();
                let seg = segs.get_mut(*index).ok_or_else(|| out_of_range(*index, n))?;
                let ds = seconds_to_centis(*delta_start).map_err(|e| format!("edit {k}: {e}"))?;
                let de = seconds_to_centis(*delta_end).map_err(|e| format!("edit {k}: {e}"))?;
                seg.range.start = seg.range.start.offset_clamped(ds);
                seg.range.end = seg.range.end.offset_clamped(de);
                if !seg.range.is_valid() {
                    return Err(format!("edit {k}: segment {index} would end before it starts"));
                }
            }
            CutListEdit::Reorder { order } => {
                let mut seen = vec![false; segs.len()];
                let permutation = order.len() == segs.len()
                    && order.iter().all(|&i| i < seen.len() && !std::mem::replace(&mut seen[i], true));
                if !permutation {
                    return Err(format!(
                        "edit {k}: order {order:?} is not a permutation of 0..{}",
                        segs.len()
                    ));
                }
                segs = order.iter().map(|&i| segs[i].clone()).collect();
            }
        }
    }
    if segs.is_empty() {
        return Err("edits leave no segments".into());
    }
    Ok(segs)
}

fn artifact_mime(kind: ArtifactKind, m: &JobManifest) -> &'static str {
    match kind {
        ArtifactKind::Video => m.source.container.mime_type(),
        ArtifactKind::Audio => match m.audio.as_ref().map(|a| a.format).unwrap_or_default() {
            AudioFormat::Wav => "audio/wav",
            AudioFormat::Mp3 => "audio/mpeg",
            AudioFormat::M4a => "audio/mp4",
            AudioFormat::Flac => "audio/flac",
        },
        ArtifactKind::Clip => "video/mp4",
        ArtifactKind::Subtitles => "application/x-subrip",
        ArtifactKind::Transcript | ArtifactKind::Cutlist | ArtifactKind::Metrics | ArtifactKind::LlmExchange => {
            "application/json"
        }
    }
}

impl Pipeline {
    pub fn new(store: Arc<dyn JobStore>, backends: Backends, cfg: PipelineConfig) -> Self {
        Pipeline {
            store,
            backends,
            cfg,
            clock: Arc::new(SystemClock),
            ids: IdStrategy::Random,
            locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_ids(mut self, ids: IdStrategy) -> Self {
        self.ids = ids;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn backends(&self) -> &Backends {
        &self.backends
    }

    pub fn store(&self) -> &Arc<dyn JobStore> {
        &self.store
    }

    fn job_lock(&self, id: &str) -> Arc<Mutex<()>> {
        self.locks.lock().entry(id.to_string()).or_default().clone()
    }

    fn absolute_meta(&self, m: &JobManifest) -> VideoMeta {
        let mut meta = m.source.clone();
        meta.path = self.store.dir(&m.job_id).join(&m.source.path);
        meta
    }

    pub fn create_job(&self, source: JobSource, persona: Persona) -> Result<JobManifest, ServiceError> {
        if !persona.is_valid() {
            return Err(ServiceError::BadRequest("persona max_duration must be positive".into()));
        }
        let name = source.file_name();
        let container = Container::from_path(Path::new(&name))
            .ok_or_else(|| ServiceError::UnsupportedFormat(format!("{name:?} is not a supported container")))?;
        let digest = match &source {
            JobSource::Path(p) => {
                if !p.is_file() {
                    return Err(ServiceError::BadRequest(format!("{} is not a readable file", p.display())));
                }
                sha256_file(p).map_err(|e| ServiceError::BadRequest(format!("{}: {e}", p.display())))?
            }
            JobSource::Upload { bytes, .. } => hex::encode(Sha256::digest(bytes)),
        };
        let persona_id = persona.id();
        let (job_id, dir) = loop {
            let id = self.ids.make(&digest, &persona_id, |id| self.store.exists(id));
            match self.store.create(&id) {
                Ok(dir) => break (id, dir),
                Err(ServiceError::JobCreateFailed(_)) if self.store.exists(&id) => continue,
                Err(e) => return Err(e),
            }
        };
        let cleanup = |e: ServiceError| {
            let _ = self.store.remove(&job_id);
            e
        };
        let rel = format!("source.{}", container.extension());
        let abs = dir.join(&rel);
        let placed = match &source {
            JobSource::Path(p) => fs::hard_link(p, &abs).or_else(|_| fs::copy(p, &abs).map(|_| ())),
            JobSource::Upload { bytes, .. } => fs::write(&abs, bytes),
        };
        placed.map_err(|e| cleanup(ServiceError::JobCreateFailed(format!("{}: {e}", abs.display()))))?;
        let mut meta = probe_video(&self.cfg.transcoder, &abs).map_err(|e| {
            cleanup(match e {
                MediaError::UnsupportedFormat { .. } | MediaError::ProbeFailed { .. } => {
                    ServiceError::UnsupportedFormat(format!("{name}: {e}"))
                }
                other => ServiceError::JobCreateFailed(other.to_string()),
            })
        })?;
        meta.path = PathBuf::from(&rel);
        let m = JobManifest {
            job_id: job_id.clone(),
            state: JobState::Created,
            persona,
            source: meta,
            source_name: name,
            artifacts: Artifacts {
                video: rel,
                ..Artifacts::default()
            },
            audio: None,
            cutlist_version: 0,
            voiceover_free: false,
            language: None,
            selector: None,
            transitions: vec![Transition {
                state: JobState::Created,
                at: self.clock.now(),
            }],
            error: None,
            resume_from: None,
        };
        self.store.save(&m).map_err(|e| cleanup(ServiceError::JobCreateFailed(e.to_string())))?;
        tracing::info!(job = %job_id, "job created");
        Ok(m)
    }

    pub fn get(&self, id: &str) -> Result<JobManifest, ServiceError> {
        self.store.load(id)
    }

    pub fn list(&self) -> Result<Vec<JobManifest>, ServiceError> {
        self.store.list()?.iter().map(|id| self.store.load(id)).collect()
    }

    /// Runs `stage`, which must follow the job's current state. A failing
    /// stage moves the job to FAILED; the same stage may then be retried.
    pub fn advance(&self, id: &str, stage: Stage) -> Result<JobManifest, ServiceError> {
        let lock = self.job_lock(id);
        let _guard = lock.lock();
        let mut m = self.store.load(id)?;
        let from = m.effective_state();
        if stage.from() != from {
            return Err(ServiceError::InvalidTransition { from: m.state, stage });
        }
        let dir = self.store.dir(id);
        let mut next = m.clone();
        tracing::info!(job = %id, %stage, "stage started");
        match self.run_stage(&mut next, &dir, stage) {
            Ok(()) => {
                next.error = None;
                next.resume_from = None;
                next.record(stage.to(), self.clock.now());
                self.store.save(&next)?;
                tracing::info!(job = %id, state = %next.state, "stage finished");
                Ok(next)
            }
            Err(message) => {
                tracing::warn!(job = %id, %stage, "stage failed: {message}");
                if m.artifacts.llm_exchange.is_none() && dir.join(LLM_EXCHANGE_FILE).is_file() {
                    m.artifacts.llm_exchange = Some(LLM_EXCHANGE_FILE.into());
                }
                m.error = Some(JobFailure {
                    stage,
                    message: message.clone(),
                });
                m.resume_from = Some(from);
                m.record(JobState::Failed, self.clock.now());
                self.store.save(&m)?;
                Err(ServiceError::StageFailed { stage, message })
            }
        }
    }

    /// Advances through every remaining stage.
    pub fn run_to_end(&self, id: &str) -> Result<JobManifest, ServiceError> {
        let mut m = self.store.load(id)?;
        while let Some(stage) = Stage::after(m.effective_state()) {
            m = self.advance(id, stage)?;
        }
        Ok(m)
    }

    fn run_stage(&self, m: &mut JobManifest, dir: &Path, stage: Stage) -> Result<(), String> {
        match stage {
            Stage::ExtractAudio => self.stage_extract(m, dir),
            Stage::Transcribe => self.stage_transcribe(m, dir),
            Stage::Select => self.stage_select(m, dir),
            Stage::Merge => self.stage_merge(m, dir),
        }
    }

    fn stage_extract(&self, m: &mut JobManifest, dir: &Path) -> Result<(), String> {
        let meta = self.absolute_meta(m);
        if !meta.has_audio {
            m.voiceover_free = true;
            m.audio = None;
            m.artifacts.audio = None;
            return Ok(());
        }
        let rel = format!("audio.{}", self.cfg.audio_format.extension());
        let art = extract_audio(&self.cfg.transcoder, &meta, self.cfg.audio_format, &dir.join(&rel))
            .map_err(|e| e.to_string())?;
        m.audio = Some(AudioArtifact {
            path: PathBuf::from(&rel),
            ..art
        });
        m.artifacts.audio = Some(rel);
        Ok(())
    }

    fn stage_transcribe(&self, m: &mut JobManifest, dir: &Path) -> Result<(), String> {
        let silent = |backend: &str| Transcript::new(backend, m.source.duration, Vec::new());
        let transcript = match &m.audio {
            None => silent("none"),
            Some(a) => {
                let mut audio = a.clone();
                audio.path = dir.join(&a.path);
                let res = transcribe_dual(
                    &*self.backends.fast,
                    &*self.backends.accurate,
                    &audio,
                    self.cfg.forced_language.as_deref(),
                    self.cfg.heuristic.fragments,
                );
                match res {
                    Ok(d) => {
                        m.language = Some(d.verdict);
                        if let Some(fast) = &d.fast {
                            write_json(&dir.join(TRANSCRIPT_FAST_FILE), fast)?;
                            m.artifacts.transcript_fast = Some(TRANSCRIPT_FAST_FILE.into());
                        }
                        d.transcript
                    }
                    Err(TranscribeError::EmptyTranscript) => silent(self.backends.accurate.id()),
                    Err(e) => return Err(e.to_string()),
                }
            }
        };
        m.voiceover_free = transcript.is_empty();
        write_json(&dir.join(TRANSCRIPT_FILE), &transcript)?;
        m.artifacts.transcript = Some(TRANSCRIPT_FILE.into());
        Ok(())
    }

    fn load_transcript(&self, m: &JobManifest, dir: &Path) -> Result<Transcript, String> {
        let rel = m.artifacts.transcript.as_deref().ok_or("transcript missing")?;
        read_json(&dir.join(rel))
    }

    fn load_cutlist(&self, m: &JobManifest, dir: &Path) -> Result<ValidatedCutList, String> {
        let rel = m.artifacts.cutlist.as_deref().ok_or("cut-list missing")?;
        let c: CutList = read_json(&dir.join(rel))?;
        validate_cutlist(c, m.source.duration).map_err(|e| format!("{rel}: {e}"))
    }

    fn save_cutlist(&self, m: &mut JobManifest, dir: &Path, c: &ValidatedCutList) -> Result<(), String> {
        let version = m.cutlist_version + 1;
        let rel = format!("cutlist.v{version}.json");
        let mut body = c.to_json_pretty().into_bytes();
        body.push(b'\n');
        write_atomic(&dir.join(&rel), &body).map_err(|e| format!("{rel}: {e}"))?;
        m.cutlist_version = version;
        m.artifacts.cutlist = Some(rel);
        m.artifacts.clip = None;
        m.artifacts.subtitles = None;
        m.artifacts.metrics = None;
        Ok(())
    }

    fn stage_select(&self, m: &mut JobManifest, dir: &Path) -> Result<(), String> {
        let t = self.load_transcript(m, dir)?;
        let duration = m.source.duration;
        let audit = dir.join(LLM_EXCHANGE_FILE);
        let selected: Result<(ValidatedCutList, &str), SelectError> = if m.voiceover_free || t.is_empty() {
            let meta = self.absolute_meta(m);
            select_visual(&meta, &m.persona, Some(&t), &*self.backends.llm, self.cfg.retry, Some(&audit))
                .map(|(c, _)| (c, "visual"))
        } else {
            match self.cfg.selector {
                SelectorKind::Llm => {
                    let req = ChatRequest::from_bundle(&build_prompt(&t, &m.persona));
                    request_selection(&req, &*self.backends.llm, self.cfg.retry, &t, duration, ParseMode::Verbatim, Some(&audit))
                        .and_then(|resp| {
                            let parsed = resp.parsed.ok_or(SelectError::SelectionParseError { raw: resp.raw })?;
                            sanitize_cutlist(&parsed, duration, &m.persona)
                        })
                        .map(|c| (c, "llm"))
                }
                SelectorKind::Heuristic => {
                    let pauses = detect_pauses(&t, DEFAULT_PAUSE_MIN_GAP);
                    heuristic_select(&t, &m.persona, &pauses, &self.cfg.heuristic).map(|s| (s.cutlist, "heuristic"))
                }
            }
        };
        if audit.is_file() {
            m.artifacts.llm_exchange = Some(LLM_EXCHANGE_FILE.into());
        }
        let (cut, selector) = selected.map_err(|e| e.to_string())?;
        let cut = cut.with_ids(m.job_id.clone(), m.persona.id());
        self.save_cutlist(m, dir, &cut)?;
        m.selector = Some(selector.into());
        Ok(())
    }

    fn stage_merge(&self, m: &mut JobManifest, dir: &Path) -> Result<(), String> {
        let cut = self.load_cutlist(m, dir)?;
        let t = self.load_transcript(m, dir)?;
        let tool = &self.cfg.transcoder;
        let workdir = dir.join(MERGE_DIR);
        if workdir.exists() {
            fs::remove_dir_all(&workdir).map_err(|e| format!("{}: {e}", workdir.display()))?;
        }
        let mut clip = merge(tool, &self.absolute_meta(m), &cut, &self.cfg.merge, &workdir).map_err(|e| e.to_string())?;
        let subs = generate_subtitles(&t, &clip.segment_map);
        m.artifacts.subtitles = None;
        if !subs.is_empty() {
            let srt = dir.join(SUBTITLES_FILE);
            write_atomic(&srt, subs.to_srt().as_bytes()).map_err(|e| format!("{}: {e}", srt.display()))?;
            m.artifacts.subtitles = Some(SUBTITLES_FILE.into());
            if self.cfg.merge.burn_subtitles {
                clip = burn_subtitles(tool, &clip, &srt).map_err(|e| e.to_string())?;
            }
        }
        clip = reframe(tool, &clip, self.cfg.merge.orientation).map_err(|e| e.to_string())?;
        m.artifacts.clip = Some(relative(dir, &clip.path));
        m.artifacts.metrics = None;
        match self.report(&t, &cut, self.cfg.tau) {
            Ok(r) => {
                write_json(&dir.join(METRICS_FILE), &r)?;
                m.artifacts.metrics = Some(METRICS_FILE.into());
            }
            Err(e) => tracing::warn!(job = %m.job_id, "metrics skipped: {e}"),
        }
        Ok(())
    }

    fn report(&self, t: &Transcript, c: &CutList, tau: f64) -> Result<MetricsReport, MetricsError> {
        let mut cfg = MetricsConfig::with_tau(tau)?;
        cfg.provider = self.backends.embedding.id().to_string();
        build_report(t, c, &cfg, &*self.backends.embedding)
    }

    /// Applies edits to the current cut-list, re-sanitizes it and stores it
    /// as a new version. Editing a merged job returns it to SELECTED.
    pub fn patch_cutlist(&self, id: &str, edits: &[CutListEdit]) -> Result<JobManifest, ServiceError> {
        let lock = self.job_lock(id);
        let _guard = lock.lock();
        let mut m = self.store.load(id)?;
        if !matches!(m.effective_state(), JobState::Selected | JobState::Merged) {
            return Err(ServiceError::NotReady(format!(
                "cut-list editing needs state SELECTED or MERGED, job is {}",
                m.state
            )));
        }
        let dir = self.store.dir(id);
        let current = self.load_cutlist(&m, &dir).map_err(ServiceError::Storage)?;
        let segs = apply_edits(current.playback().cloned().collect(), edits).map_err(ServiceError::EditRejected)?;
        let mut c = CutList::in_play_order(m.job_id.clone(), m.persona.id(), segs);
        c.voiceover_free = current.voiceover_free;
        let cut = sanitize_cutlist(&c, m.source.duration, &m.persona)
            .map_err(|e| ServiceError::EditRejected(e.to_string()))?
            .with_ids(m.job_id.clone(), m.persona.id());
        self.save_cutlist(&mut m, &dir, &cut).map_err(ServiceError::Storage)?;
        if m.state != JobState::Selected {
            m.error = None;
            m.resume_from = None;
            m.record(JobState::Selected, self.clock.now());
        }
        self.store.save(&m)?;
        Ok(m)
    }

    /// Path and media type of an artifact.
    pub fn artifact(&self, id: &str, kind: ArtifactKind) -> Result<(PathBuf, &'static str), ServiceError> {
        let m = self.store.load(id)?;
        let rel = m
            .artifacts
            .get(kind)
            .ok_or_else(|| ServiceError::NotReady(format!("{} is not available in state {}", kind.as_str(), m.state)))?;
        let path = self.store.dir(id).join(rel);
        if !path.is_file() {
            return Err(ServiceError::NotFound(format!("{} file for job {id}", kind.as_str())));
        }
        Ok((path, artifact_mime(kind, &m)))
    }

    /// The stored report, or a fresh one when `tau` is given.
    pub fn metrics(&self, id: &str, tau: Option<f64>) -> Result<MetricsReport, ServiceError> {
        let m = self.store.load(id)?;
        let dir = self.store.dir(id);
        if let (None, Some(rel)) = (tau, &m.artifacts.metrics) {
            return read_json(&dir.join(rel)).map_err(storage);
        }
        if m.artifacts.cutlist.is_none() {
            return Err(ServiceError::NotReady(format!("metrics need a cut-list, job is {}", m.state)));
        }
        let t = self.load_transcript(&m, &dir).map_err(storage)?;
        let c = self.load_cutlist(&m, &dir).map_err(storage)?;
        self.report(&t, &c, tau.unwrap_or(self.cfg.tau)).map_err(|e| match e {
            MetricsError::InvalidTau(_) => ServiceError::BadRequest(e.to_string()),
            MetricsError::UndefinedMetric(_) => ServiceError::NotReady(e.to_string()),
        })
    }
}
