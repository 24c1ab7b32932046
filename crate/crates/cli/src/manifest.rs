use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::hash::{BuildHasher, Hasher};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Flag,
    Config,
    Generated,
}

/// Root seed plus the purpose-specific seeds derived from it.
#[derive(Debug, Clone, Serialize)]
pub struct Seeds {
    pub root: u64,
    pub source: SeedSource,
    pub derived: BTreeMap<String, u64>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
fn fnv(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

impl Seeds {
    /// `root = None` draws a fresh seed from OS-randomised hasher state.
    pub fn new(root: Option<u64>, source: SeedSource) -> Self {
        let (root, source) = match root {
            Some(r) => (r, source),
            None => {
                let mut h = std::collections::hash_map::RandomState::new().build_hasher();
                h.write_u128(SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos()));
                (h.finish(), SeedSource::Generated)
            }
        };
        Seeds {
            root,
            source,
            derived: BTreeMap::new(),
        }
    }

    /// Seed for one purpose; recorded in the manifest.
    pub fn derive(&mut self, purpose: &str) -> u64 {
        let s = splitmix(self.root ^ fnv(purpose));
        self.derived.insert(purpose.to_string(), s);
        s
    }
}

/// SHA-256 of the canonical JSON of the config, with `out` and `threads`
/// cleared since neither changes results.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.out = None;
    c.threads = None;
    let json = serde_json::to_vec(&c).expect("config serialises");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub status: &'a str,
    pub library_version: &'a str,
    pub cli_version: &'a str,
    pub config_sha256: String,
    pub seeds: &'a Seeds,
    pub execution: vtergm::Execution,
    pub threads: Option<usize>,
    pub outputs: &'a [PathBuf],
}

pub fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| anyhow::Error::new(e).context(format!("writing {}", path.display())))
}

/// Append-only sidecar log; the only place wall-clock times are written.
pub struct RunLog {
    path: PathBuf,
}

impl RunLog {
    pub fn new(out: &Path) -> Self {
        RunLog {
            path: out.join("run.log"),
        }
    }

    pub fn line(&self, msg: &str) {
        let t = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
        if let Ok(mut f) = OpenOptions::new().create(true).append(true).open(&self.path) {
            let _ = writeln!(f, "{}.{:03} {msg}", t.as_secs(), t.subsec_millis());
        }
    }
}
