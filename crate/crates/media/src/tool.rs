//! Running the external transcoder.

use std::ffi::{OsStr, OsString};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

use crate::MediaError;

/// Environment variable naming the transcoder executable.
pub const TRANSCODER_ENV: &str = "CLIPSMITH_FFMPEG";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);
const STDERR_TAIL_BYTES: usize = 4096;

/// Outcome of one transcoder run that finished within its timeout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessResult {
    /// Exit code; `None` when terminated by a signal.
    pub status: Option<i32>,
    pub stdout: Vec<u8>,
    pub stderr: String,
    pub elapsed: Duration,
}

impl ProcessResult {
    pub fn success(&self) -> bool {
        self.status == Some(0)
    }

    /// Last few KiB of stderr, starting at a line boundary.
    pub fn stderr_tail(&self) -> String {
        tail(&self.stderr, STDERR_TAIL_BYTES)
    }
}

fn tail(s: &str, max: usize) -> String {
    if s.len() <= max {
        return s.trim_end().to_string();
    }
    let mut cut = s.len() - max;
    while !s.is_char_boundary(cut) {
        cut += 1;
    }
    let rest = &s[cut..];
    let rest = rest.find('\n').map_or(rest, |i| &rest[i + 1..]);
    rest.trim_end().to_string()
}

/// Handle on the transcoder executable plus the per-invocation timeout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcoder {
    pub program: PathBuf,
    pub timeout: Duration,
}

impl Default for Transcoder {
    fn default() -> Self {
        Transcoder::new("ffmpeg")
    }
}

impl Transcoder {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        Transcoder {
            program: program.into(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    /// Reads the program from [`TRANSCODER_ENV`], defaulting to `ffmpeg` on
    /// the search path.
    pub fn from_env() -> Self {
        match std::env::var_os(TRANSCODER_ENV) {
            Some(p) if !p.is_empty() => Transcoder::new(p),
            _ => Transcoder::default(),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Runs with the configured timeout in the system temp directory.
    pub fn run<I, S>(&self, args: I) -> Result<ProcessResult, MediaError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<OsStr>,
    {
        let args: Vec<OsString> = args.into_iter().map(|a| a.as_ref().to_owned()).collect();
        run_transcoder(self, &args, self.timeout, &std::env::temp_dir())
    }

    /// Like [`Transcoder::run`] but in an explicit working directory.
    pub fn run_in<I, S>(&self, args: I, cwd: &Path) -> Result<ProcessResult, MediaError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<OsStr>,
    {
        let args: Vec<OsString> = args.into_iter().map(|a| a.as_ref().to_owned()).collect();
        run_transcoder(self, &args, self.timeout, cwd)
    }
}

/// Spawns the transcoder with `args`, capturing stdout and stderr, and kills
/// it once `timeout` elapses. A non-zero exit is not an error here; callers
/// decide what failure means for their operation.
pub fn run_transcoder(
    tool: &Transcoder,
    args: &[OsString],
    timeout: Duration,
    cwd: &Path,
) -> Result<ProcessResult, MediaError> {
    let started = Instant::now();
    tracing::debug!(program = %tool.program.display(), ?args, "running transcoder");
    let mut child = Command::new(&tool.program)
        .args(args)
        .current_dir(cwd)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => MediaError::ToolNotFound {
                program: tool.program.clone(),
            },
            _ => MediaError::Io(e.to_string()),
        })?;
    let mut out_pipe = child.stdout.take().expect("stdout piped");
    let mut err_pipe = child.stderr.take().expect("stderr piped");
    let out_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = out_pipe.read_to_end(&mut buf);
        buf
    });
    let err_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = err_pipe.read_to_end(&mut buf);
        buf
    });
    let status = match child.wait_timeout(timeout).map_err(|e| MediaError::Io(e.to_string()))? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            let _ = out_reader.join();
            let _ = err_reader.join();
            return Err(MediaError::ToolTimeout {
                program: tool.program.clone(),
                after: timeout,
            });
        }
    };
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = String::from_utf8_lossy(&err_reader.join().unwrap_or_default()).into_owned();
    Ok(ProcessResult {
        status: status.code(),
        stdout,
        stderr,
        elapsed: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_keeps_whole_lines() {
        let s = "aaaa\nbbbb\ncccc\n";
        assert_eq!(tail(s, 100), "aaaa\nbbbb\ncccc");
        assert_eq!(tail(s, 8), "cccc");
    }

    #[test]
    fn missing_program_is_reported() {
        let t = Transcoder::new("/nonexistent/transcoder-binary");
        assert!(matches!(t.run(["-version"]), Err(MediaError::ToolNotFound { .. })));
    }
}
