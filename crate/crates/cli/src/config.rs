//! Settings resolved from flags, then environment, then the config file.
//!
//! Flags and environment variables are merged by the argument parser; the
//! file only fills values neither of them supplied.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clipsmith_core::metrics::DEFAULT_TAU;
use clipsmith_core::persona::DEFAULT_MAX_DURATION;
use clipsmith_core::select::RetryPolicy;
use clipsmith_core::{Persona, Timestamp};
use clipsmith_media::{MergeConfig, Transcoder};
use clipsmith_service::{BackendConfig, HttpEndpoint, PipelineConfig, SelectorKind, TranscriberEndpoint};
use serde::Deserialize;

use crate::cli::{GlobalArgs, MergeArgs, PersonaArgs, SelectorArgs};
use crate::error::{CliError, CliResult};

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";
pub const DEFAULT_WORKDIR: &str = "clipsmith-jobs";
pub const DEFAULT_ROLE: &str = "general";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PersonaFile {
    pub role: Option<String>,
    pub extra_requirements: Option<String>,
    pub keywords: Option<Vec<String>>,
    pub max_duration: Option<Timestamp>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsFile {
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendsFile {
    pub llm: Option<HttpEndpoint>,
    pub transcriber_fast: Option<TranscriberEndpoint>,
    pub transcriber_accurate: Option<TranscriberEndpoint>,
    pub embedding: Option<HttpEndpoint>,
}

/// Contents of the TOML configuration file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub ffmpeg: Option<PathBuf>,
    pub mock: Option<bool>,
    pub mock_dir: Option<PathBuf>,
    pub language: Option<String>,
    pub selector: Option<SelectorKind>,
    pub workdir: Option<PathBuf>,
    pub listen: Option<SocketAddr>,
    pub persona: PersonaFile,
    pub merge: Option<MergeConfig>,
    pub metrics: MetricsFile,
    pub backends: BackendsFile,
}

impl FileConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// `$XDG_CONFIG_HOME/clipsmith/config.toml`, else `~/.config/clipsmith/config.toml`.
pub fn default_config_path() -> Option<PathBuf> {
    let base = std::env::var_os("XDG_CONFIG_HOME")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".config")))?;
    Some(base.join("clipsmith").join("config.toml"))
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub file: FileConfig,
    pub ffmpeg: Option<PathBuf>,
    pub mock: bool,
    pub mock_dir: Option<PathBuf>,
    pub language: Option<String>,
}

impl Settings {
    /// An explicit `--config` must exist; the default path is optional.
    pub fn load(global: &GlobalArgs) -> CliResult<Self> {
        let file = match &global.config {
            Some(p) => FileConfig::load(p)?,
            None => match default_config_path().filter(|p| p.is_file()) {
                Some(p) => FileConfig::load(&p)?,
                None => FileConfig::default(),
            },
        };
        Ok(Self::resolve(global, file))
    }

    pub fn resolve(global: &GlobalArgs, file: FileConfig) -> Self {
        Settings {
            ffmpeg: global.ffmpeg.clone().or_else(|| file.ffmpeg.clone()),
            mock: global.mock || file.mock.unwrap_or(false),
            mock_dir: global.mock_dir.clone().or_else(|| file.mock_dir.clone()),
            language: global.language.clone().or_else(|| file.language.clone()),
            file,
        }
    }

    pub fn transcoder(&self) -> Transcoder {
        match &self.ffmpeg {
            Some(p) => Transcoder::new(p),
            None => Transcoder::from_env(),
        }
    }

    pub fn backend_config(&self) -> BackendConfig {
        let b = &self.file.backends;
        BackendConfig {
            mock: self.mock,
            mock_dir: self.mock_dir.clone(),
            llm: b.llm.clone(),
            transcriber_fast: b.transcriber_fast.clone(),
            transcriber_accurate: b.transcriber_accurate.clone(),
            embedding: b.embedding.clone(),
        }
    }

    pub fn persona(&self, args: &PersonaArgs) -> CliResult<Persona> {
        let f = &self.file.persona;
        let role = args.role.clone().or_else(|| f.role.clone()).unwrap_or_else(|| DEFAULT_ROLE.into());
        let max = args.max_duration.or(f.max_duration).unwrap_or(DEFAULT_MAX_DURATION);
        let p = Persona::new(role, max)
            .with_requirements(args.extra_requirements.clone().or_else(|| f.extra_requirements.clone()).unwrap_or_default())
            .with_keywords(
                args.keywords
                    .clone()
                    .or_else(|| f.keywords.clone())
                    .unwrap_or_default()
                    .into_iter()
                    .map(|k| k.trim().to_string())
                    .filter(|k| !k.is_empty()),
            );
        if !p.is_valid() {
            return Err(CliError::Usage("max duration must be positive".into()));
        }
        Ok(p)
    }

    pub fn selector(&self, args: &SelectorArgs) -> SelectorKind {
        if args.heuristic {
            SelectorKind::Heuristic
        } else if args.backend {
            SelectorKind::Llm
        } else {
            self.file.selector.unwrap_or_default()
        }
    }

    pub fn merge_config(&self, args: &MergeArgs) -> CliResult<MergeConfig> {
        let mut m = self.file.merge.clone().unwrap_or_default();
        if let Some(v) = args.fade {
            m.fade_window = v;
        }
        if let Some(v) = args.crf {
            m.video_quality = v;
        }
        if let Some(v) = &args.preset {
            m.encode_preset = v.clone();
        }
        if let Some(v) = args.audio_bitrate {
            m.audio_bitrate = v;
        }
        if let Some(v) = args.orientation {
            m.orientation = v;
        }
        m.burn_subtitles |= args.burn_subtitles;
        m.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(m)
    }

    pub fn tau(&self, flag: Option<f64>) -> CliResult<f64> {
        let tau = flag.or(self.file.metrics.tau).unwrap_or(DEFAULT_TAU);
        if tau > 0.0 && tau < 1.0 {
            Ok(tau)
        } else {
            Err(CliError::Usage(format!("tau must lie in (0, 1), got {tau}")))
        }
    }

    pub fn listen(&self, flag: Option<SocketAddr>) -> SocketAddr {
        flag.or(self.file.listen)
            .unwrap_or_else(|| DEFAULT_LISTEN.parse().expect("valid default address"))
    }

    pub fn workdir(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| self.file.workdir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_WORKDIR))
    }

    pub fn pipeline_config(&self, selector: SelectorKind, merge: MergeConfig, tau: f64) -> PipelineConfig {
        PipelineConfig {
            transcoder: self.transcoder(),
            selector,
            retry: if self.mock { RetryPolicy::no_delay(0) } else { RetryPolicy::default() },
            forced_language: self.language.clone(),
            merge,
            tau,
            ..PipelineConfig::default()
        }
    }
}
