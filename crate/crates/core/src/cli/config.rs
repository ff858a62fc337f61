//! JSON run configuration for `train`, `eval` and `sweep`. Unknown keys are
//! rejected and relative paths are taken relative to the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conv::GrayImage;
use crate::error::{Error, Result};
use crate::sr::image::load_pgm;
use crate::sr::net::NetworkConfig;
use crate::sr::scenes::synthetic_corpus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub edges: usize,
    #[serde(default)]
    pub noise: usize,
    #[serde(default = "default_scene_size")]
    pub size: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_scene_size() -> usize {
    48
}

/// Where images come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ImageSource {
    /// Every `*.pgm` in a directory, by file name.
    Dir(PathBuf),
    /// A manifest written by `split`.
    Manifest(PathBuf),
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub train: ImageSource,
    pub test: ImageSource,
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Side of each target patch.
    #[serde(default = "default_output")]
    pub output: usize,
    #[serde(default = "default_output")]
    pub stride: usize,
}

fn default_scale() -> f64 {
    2.0
}
fn default_output() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// Defaults to `<output_dir>/params.bin`.
    #[serde(default)]
    pub params: Option<PathBuf>,
    /// Second parameter file scored on the same pairs for a paired comparison.
    #[serde(default)]
    pub baseline_params: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCorpusConfig {
    pub name: String,
    pub train: ImageSource,
    pub test: ImageSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub depths: Vec<usize>,
    pub seeds: Vec<u64>,
    pub corpora: Vec<SweepCorpusConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub data: DataConfig,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub eval: Option<EvalConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ImageSource {
    fn resolved(&self, base: &Path) -> Self {
        match self {
            ImageSource::Dir(p) => ImageSource::Dir(resolve(base, p)),
            ImageSource::Manifest(p) => ImageSource::Manifest(resolve(base, p)),
            ImageSource::Synthetic(s) => ImageSource::Synthetic(s.clone()),
        }
    }

    pub fn load(&self) -> Result<Vec<GrayImage>> {
        match self {
            ImageSource::Dir(dir) => pgm_files(dir)?.iter().map(load_pgm).collect(),
            ImageSource::Manifest(m) => read_manifest(m)?.iter().map(|(p, _)| load_pgm(p)).collect(),
            ImageSource::Synthetic(s) => Ok(synthetic_corpus(s.edges, s.noise, s.size, s.seed)?
                .into_iter()
                .map(|s| s.image)
                .collect()),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.network.validate()?;
        if !(cfg.data.scale > 1.0 && cfg.data.scale.is_finite()) {
            return Err(Error::Config("data.scale must exceed 1".into()));
        }
        if cfg.data.output == 0 || cfg.data.stride == 0 {
            return Err(Error::Config("data.output and data.stride must be positive".into()));
        }
        cfg.output_dir = resolve(base, &cfg.output_dir);
        cfg.data.train = cfg.data.train.resolved(base);
        cfg.data.test = cfg.data.test.resolved(base);
        if let Some(ev) = &mut cfg.eval {
            ev.params = ev.params.as_ref().map(|p| resolve(base, p));
            ev.baseline_params = ev.baseline_params.as_ref().map(|p| resolve(base, p));
        }
        if let Some(sw) = &mut cfg.sweep {
            if sw.depths.is_empty() || sw.seeds.is_empty() || sw.corpora.is_empty() {
                return Err(Error::Config("sweep needs depths, seeds and corpora".into()));
            }
            if let Some(d) = sw.depths.iter().find(|&&d| d < 2) {
                return Err(Error::Config(format!("sweep depth {d} < 2")));
            }
            for c in &mut sw.corpora {
                c.train = c.train.resolved(base);
                c.test = c.test.resolved(base);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }
}

/// `*.pgm` files directly inside `dir`, sorted by file name.
pub fn pgm_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

pub const MANIFEST_ROOT: &str = "#root";

/// Lines `path<TAB>mu`, with an optional leading `#root<TAB>dir` line that
/// the paths are relative to (otherwise the manifest's own directory).
pub fn read_manifest(path: &Path) -> Result<Vec<(PathBuf, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut root = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let mut parts = line.split('\t');
        let first = parts.next().unwrap_or_default();
        let second = parts.next().ok_or_else(|| Error::Config(format!("{}: bad line {line:?}", path.display())))?;
        if first == MANIFEST_ROOT {
            root = resolve(&root, Path::new(second));
            continue;
        }
        let mu: f64 = second
            .parse()
            .map_err(|_| Error::Config(format!("{}: bad score in {line:?}", path.display())))?;
        out.push((resolve(&root, Path::new(first)), mu));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"{
        "network": {"depth": 3, "width": 4},
        "data": {"train": {"synthetic": {"edges": 2}}, "test": {"dir": "imgs"}},
        "output_dir": "out"
    }"#;

    #[test]
    fn parses_and_resolves() {
        let cfg = RunConfig::parse(MIN, Path::new("/cfg")).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("/cfg/out"));
        assert_eq!(cfg.data.test, ImageSource::Dir(PathBuf::from("/cfg/imgs")));
        assert_eq!(cfg.network.kernel, 3);
        assert_eq!(cfg.data.output, 8);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = MIN.replace("\"width\": 4", "\"width\": 4, \"colour\": true");
        assert!(matches!(RunConfig::parse(&bad, Path::new(".")), Err(Error::Config(_))));
        let bad = MIN.replace("\"output_dir\"", "\"extra\": 1, \"output_dir\"");
        assert!(RunConfig::parse(&bad, Path::new(".")).is_err());
        let bad = MIN.replace("\"depth\": 3", "\"depth\": 1");
        assert!(RunConfig::parse(&bad, Path::new(".")).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("x.manifest");
        fs::write(&m, "#root\t/data\na.pgm\t0.5\nsub/b.pgm\t0.25\n").unwrap();
        let rows = read_manifest(&m).unwrap();
        assert_eq!(rows, vec![(PathBuf::from("/data/a.pgm"), 0.5), (PathBuf::from("/data/sub/b.pgm"), 0.25)]);
        fs::write(&m, "a.pgm\t0.5\n").unwrap();
        assert_eq!(read_manifest(&m).unwrap()[0].0, dir.path().join("a.pgm"));
    }
}
