use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

pub(crate) fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Writes `bytes` to `path` via a temporary file in the same directory and
/// an atomic rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub(crate) enum RunError {
    #[error("could not start {program}: {source}")]
    Spawn { program: String, source: std::io::Error },
    #[error("{program} timed out after {secs:.1}s")]
    Timeout { program: String, secs: f64 },
    #[error("{program} exited with {status}: {stderr}")]
    NonzeroExit { program: String, status: String, stderr: String },
    #[error("I/O error talking to {program}: {source}")]
    Io { program: String, source: std::io::Error },
}

/// Runs `program args...`, feeding `input` on stdin, and returns stdout.
/// The child is killed when `timeout` elapses.
pub(crate) fn run_with_timeout(
    program: &str,
    args: &[String],
    input: &[u8],
    timeout: std::time::Duration,
) -> Result<Vec<u8>, RunError> {
    use std::io::Read;
    use std::process::{Command, Stdio};
    use wait_timeout::ChildExt;

    let io_err = |source| RunError::Io { program: program.to_string(), source };
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| RunError::Spawn { program: program.to_string(), source })?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = input.to_vec();
    let writer = std::thread::spawn(move || {
        // a child that exits without reading produces a broken pipe; not an error here
        let _ = stdin.write_all(&input);
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        stdout.read_to_end(&mut buf).map(|_| buf)
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let err_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        buf
    });

    let status = match child.wait_timeout(timeout).map_err(io_err)? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(RunError::Timeout { program: program.to_string(), secs: timeout.as_secs_f64() });
        }
    };
    let _ = writer.join();
    let out = reader.join().expect("reader thread").map_err(io_err)?;
    let err = err_reader.join().unwrap_or_default();
    if !status.success() {
        return Err(RunError::NonzeroExit {
            program: program.to_string(),
            status: status.to_string(),
            stderr: String::from_utf8_lossy(&err).trim().to_string(),
        });
    }
    Ok(out)
}
