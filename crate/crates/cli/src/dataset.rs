//! Dataset directories.
//!
//! `pda gen` writes `block_<k>.pdap` files and a `manifest.toml` recording
//! the generator and every block's seed. `pda split` adds `split.csv`
//! (`file,set` with `set` one of `train` / `test`).

use std::path::Path;

use pda_core::io::{read_pattern, split_indices, GENERATOR_ID};
use pda_core::BlockPattern;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const SPLIT_FILE: &str = "split.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub generator: String,
    pub num_wordlines: usize,
    pub cells_per_page: usize,
    pub base_seed: u64,
    pub blocks: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub file: String,
    pub seed: u64,
}

impl Manifest {
    /// Block `k` is generated from `base_seed + k` (wrapping).
    pub fn new(num_wordlines: usize, cells_per_page: usize, base_seed: u64, blocks: usize) -> Self {
        Manifest {
            generator: GENERATOR_ID.to_string(),
            num_wordlines,
            cells_per_page,
            base_seed,
            blocks: (0..blocks)
                .map(|k| ManifestEntry {
                    file: block_file_name(k),
                    seed: base_seed.wrapping_add(k as u64),
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Data(format!("manifest: {e}")))
    }

    pub fn load(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::at(path.display(), e))?;
        toml::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

pub fn block_file_name(k: usize) -> String {
    format!("block_{k}.pdap")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitSet {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRow {
    pub file: String,
    pub set: SplitSet,
}

/// Which blocks of a dataset directory a command operates on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Subset {
    All,
    Train,
    Test,
}

#[derive(Clone, Debug)]
pub struct NamedBlock {
    pub file: String,
    pub pattern: BlockPattern,
}

/// Block file names of a directory in manifest order; without a manifest,
/// every `block_<k>.pdap` in increasing `k`.
pub fn block_files(dir: &Path) -> CliResult<Vec<String>> {
    if dir.join(MANIFEST_FILE).exists() {
        return Ok(Manifest::load(dir)?.blocks.into_iter().map(|b| b.file).collect());
    }
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::at(dir.display(), e))?;
    let mut found = Vec::new();
    for entry in entries {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(k) = name
            .strip_prefix("block_")
            .and_then(|s| s.strip_suffix(".pdap"))
            .and_then(|s| s.parse::<usize>().ok())
        {
            found.push((k, name));
        }
    }
    found.sort();
    Ok(found.into_iter().map(|(_, name)| name).collect())
}

pub fn read_block(path: &Path) -> CliResult<BlockPattern> {
    let bytes = std::fs::read(path).map_err(|e| CliError::at(path.display(), e))?;
    read_pattern(&bytes).map_err(|e| CliError::at(path.display(), e))
}

/// Writes the 7:3 split of the directory's blocks and returns it.
pub fn write_split(dir: &Path, seed: u64) -> CliResult<Vec<SplitRow>> {
    let files = block_files(dir)?;
    let (train, test) = split_indices(files.len(), seed)?;
    let mut rows: Vec<SplitRow> = train
        .iter()
        .map(|&i| (i, SplitSet::Train))
        .chain(test.iter().map(|&i| (i, SplitSet::Test)))
        .map(|(i, set)| SplitRow {
            file: files[i].clone(),
            set,
        })
        .collect();
    rows.sort_by_key(|r| files.iter().position(|f| *f == r.file));
    let mut w = csv::Writer::from_path(dir.join(SPLIT_FILE))?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(rows)
}

pub fn read_split(dir: &Path) -> CliResult<Vec<SplitRow>> {
    let path = dir.join(SPLIT_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(|e| CliError::at(path.display(), e))?;
    r.deserialize()
        .collect::<Result<Vec<SplitRow>, _>>()
        .map_err(|e| CliError::at(path.display(), e))
}

/// Loads the requested subset in directory order. `Train` and `Test`
/// require a split file.
pub fn load_blocks(dir: &Path, subset: Subset) -> CliResult<Vec<NamedBlock>> {
    let mut files = block_files(dir)?;
    if subset != Subset::All {
        let want = if subset == Subset::Train { SplitSet::Train } else { SplitSet::Test };
        let split = read_split(dir)?;
        files.retain(|f| split.iter().any(|r| r.file == *f && r.set == want));
    }
    if files.is_empty() {
        return Err(CliError::Data(format!("{}: no blocks selected", dir.display())));
    }
    let blocks = files
        .into_iter()
        .map(|file| {
            let pattern = read_block(&dir.join(&file))?;
            Ok(NamedBlock { file, pattern })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let (n, c) = (blocks[0].pattern.num_wordlines(), blocks[0].pattern.cells_per_page());
    if let Some(b) = blocks
        .iter()
        .find(|b| (b.pattern.num_wordlines(), b.pattern.cells_per_page()) != (n, c))
    {
        return Err(CliError::Data(format!(
            "{}: shape {}x{} differs from {n}x{c}",
            b.file,
            b.pattern.num_wordlines(),
            b.pattern.cells_per_page()
        )));
    }
    Ok(blocks)
}
