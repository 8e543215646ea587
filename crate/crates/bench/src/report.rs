//! Measurement rows and the CSV/JSON files they are written to.
//!
//! Every report starts with a header naming the backend, its group order and
//! the machine it ran on. CSV files carry the header as `#` comment lines
//! followed by the fixed columns `phase,u,k,ms,bytes,backend`.

use std::fmt;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use epass_core::group::BackendParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Setup,
    UserKeygen,
    ProviderKeygen,
    ServerKeygen,
    TrCreat,
    Aggregate,
    Ext,
    ReleasedDec,
    Adapt,
    Verify,
    LocalVerify,
    IndividualVerify,
    RedactPath,
    ReminePath,
}

impl Phase {
    pub const ALL: [Phase; 14] = [
        Phase::Setup,
        Phase::UserKeygen,
        Phase::ProviderKeygen,
        Phase::ServerKeygen,
        Phase::TrCreat,
        Phase::Aggregate,
        Phase::Ext,
        Phase::ReleasedDec,
        Phase::Adapt,
        Phase::Verify,
        Phase::LocalVerify,
        Phase::IndividualVerify,
        Phase::RedactPath,
        Phase::ReminePath,
    ];

    /// The columns of the per-algorithm cost table, in table order.
    pub const TABLE: [Phase; 10] = [
        Phase::Setup,
        Phase::UserKeygen,
        Phase::ProviderKeygen,
        Phase::ServerKeygen,
        Phase::TrCreat,
        Phase::Aggregate,
        Phase::Ext,
        Phase::ReleasedDec,
        Phase::Adapt,
        Phase::Verify,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Setup => "setup",
            Phase::UserKeygen => "user_keygen",
            Phase::ProviderKeygen => "provider_keygen",
            Phase::ServerKeygen => "server_keygen",
            Phase::TrCreat => "tr_creat",
            Phase::Aggregate => "aggregate",
            Phase::Ext => "ext",
            Phase::ReleasedDec => "released_dec",
            Phase::Adapt => "adapt",
            Phase::Verify => "verify",
            Phase::LocalVerify => "local_verify",
            Phase::IndividualVerify => "individual_verify",
            Phase::RedactPath => "redact_path",
            Phase::ReminePath => "remine_path",
        }
    }

    /// Operations whose count is independent of the number of users.
    pub fn is_keygen(self) -> bool {
        matches!(
            self,
            Phase::Setup | Phase::UserKeygen | Phase::ProviderKeygen | Phase::ServerKeygen
        )
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRow {
    pub phase: Phase,
    pub u: usize,
    pub k: usize,
    /// Median wall time over the repetitions.
    pub ms: f64,
    pub bytes: Option<u64>,
    pub backend: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineInfo {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    pub cpu_model: Option<String>,
    /// `parallel` or `sequential` core.
    pub exec: String,
    pub optimized: bool,
    pub version: String,
}

impl MachineInfo {
    pub fn detect(exec: epass_core::Exec) -> Self {
        let cpu_model = std::fs::read_to_string("/proc/cpuinfo").ok().and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        });
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            cpu_model,
            exec: match exec {
                epass_core::Exec::Sequential => "sequential".into(),
                epass_core::Exec::Parallel => "parallel".into(),
            },
            optimized: !cfg!(debug_assertions),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub command: String,
    pub backend: BackendParams,
    pub machine: MachineInfo,
    pub seed: u64,
    pub reps: usize,
    pub warmup: usize,
    /// False when fewer than five repetitions were taken, so the `ms` column
    /// holds a single or barely smoothed reading.
    pub smoothed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub header: ReportHeader,
    pub rows: Vec<MeasurementRow>,
    /// Command-specific summary (ratios, fits).
    #[serde(default)]
    pub summary: serde_json::Value,
}

impl Report {
    pub fn row(&self, phase: Phase, u: usize, k: usize) -> Option<&MeasurementRow> {
        self.rows
            .iter()
            .find(|r| r.phase == phase && r.u == u && r.k == k)
    }

    pub fn rows_for(&self, phase: Phase) -> impl Iterator<Item = &MeasurementRow> {
        self.rows.iter().filter(move |r| r.phase == phase)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> anyhow::Result<()> {
        let h = &self.header;
        writeln!(out, "# command: {}", h.command)?;
        writeln!(
            out,
            "# backend: {} ({}), order {} bits 0x{}",
            h.backend.name, h.backend.kind, h.backend.order_bits, h.backend.order_hex
        )?;
        let m = &h.machine;
        writeln!(
            out,
            "# machine: {}/{}, {} logical cpus, cpu {}, {} core, optimized={}, v{}",
            m.os,
            m.arch,
            m.logical_cpus,
            m.cpu_model.as_deref().unwrap_or("unknown"),
            m.exec,
            m.optimized,
            m.version
        )?;
        writeln!(
            out,
            "# seed: {}, reps: {}, warmup: {}, smoothed: {}",
            h.seed, h.reps, h.warmup, h.smoothed
        )?;
        if !h.smoothed {
            writeln!(
                out,
                "# UNSMOOTHED: ms values come from fewer than 5 repetitions"
            )?;
        }
        for note in &h.notes {
            writeln!(out, "# note: {note}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["phase", "u", "k", "ms", "bytes", "backend"])?;
        for r in &self.rows {
            w.write_record([
                r.phase.as_str().to_string(),
                r.u.to_string(),
                r.k.to_string(),
                format!("{:.3}", r.ms),
                r.bytes.map_or_else(String::new, |b| b.to_string()),
                r.backend.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.json` under `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> anyhow::Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let file = std::fs::File::create(&csv_path)
            .with_context(|| format!("creating {}", csv_path.display()))?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let json_path = dir.join(format!("{stem}.json"));
        std::fs::write(&json_path, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("writing {}", json_path.display()))?;
        log::info!("wrote {} and {}", csv_path.display(), json_path.display());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use epass_core::group::{PairingBackend, ToyBackend};

    fn sample(reps: usize) -> Report {
        let b = ToyBackend::golden();
        Report {
            header: ReportHeader {
                command: "bench".into(),
                backend: b.params(),
                machine: MachineInfo::detect(epass_core::Exec::Sequential),
                seed: 1,
                reps,
                warmup: 0,
                smoothed: reps >= 5,
                notes: vec![],
            },
            rows: vec![
                MeasurementRow {
                    phase: Phase::Aggregate,
                    u: 8,
                    k: 8,
                    ms: 1.25,
                    bytes: Some(640),
                    backend: "toy".into(),
                },
                MeasurementRow {
                    phase: Phase::Adapt,
                    u: 8,
                    k: 8,
                    ms: 0.5,
                    bytes: None,
                    backend: "toy".into(),
                },
            ],
            summary: serde_json::Value::Null,
        }
    }

    #[test]
    fn csv_has_fixed_columns_after_header_comments() {
        let mut out = Vec::new();
        sample(5).write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data[0], "phase,u,k,ms,bytes,backend");
        assert_eq!(data[1], "aggregate,8,8,1.250,640,toy");
        assert_eq!(data[2], "adapt,8,8,0.500,,toy");
        assert!(text.contains("# backend: "));
        assert!(text.contains("# machine: "));
        assert!(!text.contains("UNSMOOTHED"));
    }

    #[test]
    fn single_repetition_is_flagged() {
        let mut out = Vec::new();
        sample(1).write_csv(&mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().contains("# UNSMOOTHED"));
    }

    #[test]
    fn phase_names_match_serde() {
        for p in Phase::ALL {
            assert_eq!(
                serde_json::to_value(p).unwrap(),
                serde_json::Value::String(p.as_str().into())
            );
        }
    }

    #[test]
    fn json_roundtrip() {
        let r = sample(5);
        let back: Report = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
