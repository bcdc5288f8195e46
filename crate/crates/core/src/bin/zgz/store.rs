use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use zigzag::codec::Codec;
use zigzag::shard::{shard_path, write_shard, Shard, ShardHeader};
use zigzag::Elem;

/// The shards found in one directory, checked for agreement.
pub struct ShardSet {
    pub dir: PathBuf,
    pub codec: Codec,
    pub template: ShardHeader,
    pub shards: Vec<Option<Shard>>,
}

fn node_of(path: &Path) -> Option<usize> {
    let name = path.file_name()?.to_str()?;
    name.strip_prefix("shard_")?
        .strip_suffix(".zgz")?
        .parse()
        .ok()
}

impl ShardSet {
    pub fn load(dir: &Path) -> Result<Self> {
        let mut found = Vec::new();
        for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
            let path = entry?.path();
            let Some(node) = node_of(&path) else { continue };
            let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
            let shard =
                Shard::from_bytes(&bytes).with_context(|| format!("parsing {}", path.display()))?;
            if shard.header.node as usize != node {
                bail!("{} holds node {}", path.display(), shard.header.node);
            }
            found.push(shard);
        }
        found.sort_by_key(|s| s.header.node);
        let Some(first) = found.first() else {
            bail!("no shard files in {}", dir.display());
        };
        let template = first.header.clone();
        let codec = Codec::from_descriptor(&template.codec)?;
        let p = codec.p() as u64;
        let mut shards = vec![None; codec.n()];
        for s in found {
            let h = &s.header;
            if h.codec != template.codec
                || h.stripes != template.stripes
                || h.original_len != template.original_len
                || h.pad != template.pad
            {
                bail!("shard {} disagrees with shard {}", h.node, template.node);
            }
            if h.payload_len != h.stripes * p {
                bail!(
                    "shard {} payload length {} is not stripes * rows",
                    h.node,
                    h.payload_len
                );
            }
            let node = h.node as usize;
            if node >= shards.len() {
                bail!("shard node {} out of range for n = {}", node, shards.len());
            }
            if let Some(bad) = s
                .payload
                .iter()
                .find(|&&x| !codec.field().contains(x as u32))
            {
                bail!(
                    "shard {node} holds {bad}, outside GF({})",
                    codec.field().order()
                );
            }
            shards[node] = Some(s);
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            codec,
            template,
            shards,
        })
    }

    pub fn stripes(&self) -> usize {
        self.template.stripes as usize
    }

    pub fn missing(&self) -> Vec<usize> {
        (0..self.shards.len())
            .filter(|&j| self.shards[j].is_none())
            .collect()
    }

    pub fn stripe(&self, s: usize) -> Vec<Option<Vec<Elem>>> {
        let p = self.codec.p();
        self.shards
            .iter()
            .map(|sh| sh.as_ref().map(|sh| sh.column(s, p).to_vec()))
            .collect()
    }

    /// Writes `node` with the given per-stripe columns.
    pub fn write_node(&self, node: usize, columns: &[Vec<Elem>]) -> Result<()> {
        let mut header = self.template.clone();
        header.node = node as u16;
        let shard = Shard {
            header,
            payload: columns.concat(),
        };
        write_shard(&self.dir, &shard)?;
        Ok(())
    }

    pub fn path(&self, node: usize) -> PathBuf {
        shard_path(&self.dir, node)
    }
}
