//! Support for the acceptance runner: locating the `wvg` binary and
//! collecting one verdict per criterion.

use std::env;
use std::fmt;
use std::path::PathBuf;
use std::process::Command;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {} [{tag}] {}: {}", self.id, self.title, self.detail)
    }
}

/// Ordered list of verdicts; the runner exits non-zero if any failed.
#[derive(Debug, Default)]
pub struct Report {
    verdicts: Vec<Verdict>,
}

impl Report {
    pub fn record(&mut self, id: u32, title: &'static str, passed: bool, detail: String) {
        let v = Verdict {
            id,
            title,
            passed,
            detail,
        };
        println!("{v}");
        self.verdicts.push(v);
    }

    /// Records an error from the check itself as a failure.
    pub fn record_result(&mut self, id: u32, title: &'static str, outcome: Result<(bool, String), String>) {
        match outcome {
            Ok((passed, detail)) => self.record(id, title, passed, detail),
            Err(e) => self.record(id, title, false, format!("error: {e}")),
        }
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    pub fn failed(&self) -> Vec<u32> {
        self.verdicts.iter().filter(|v| !v.passed).map(|v| v.id).collect()
    }
}

/// Path of the `wvg` binary next to the running test executable, building it
/// with the same profile when it is missing.
pub fn wvg_binary() -> Result<PathBuf, String> {
    let exe = env::current_exe().map_err(|e| e.to_string())?;
    let profile_dir = exe
        .parent()
        .and_then(|deps| deps.parent())
        .ok_or("unexpected test executable location")?
        .to_path_buf();
    let bin = profile_dir.join(format!("wvg{}", env::consts::EXE_SUFFIX));
    if bin.exists() {
        return Ok(bin);
    }
    let cargo = env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let mut cmd = Command::new(cargo);
    cmd.args(["build", "-p", "wvg-cli", "--bin", "wvg"]);
    if profile_dir.file_name().is_some_and(|n| n == "release") {
        cmd.arg("--release");
    }
    let status = cmd.status().map_err(|e| format!("building wvg: {e}"))?;
    if status.success() && bin.exists() {
        Ok(bin)
    } else {
        Err(format!("wvg binary not found at {}", bin.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_tracks_failures() {
        let mut r = Report::default();
        r.record(1, "one", true, "ok".into());
        r.record_result(2, "two", Err("boom".into()));
        r.record_result(3, "three", Ok((false, "off".into())));
        assert_eq!(r.failed(), vec![2, 3]);
        assert_eq!(r.verdicts().len(), 3);
        assert!(r.verdicts()[1].to_string().contains("[FAIL]"));
    }
}
