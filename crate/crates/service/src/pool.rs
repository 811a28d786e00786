//! Servable instances with their PNG panels.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use spatial_captcha::difficulty::DifficultyModel;
use spatial_captcha::manifest::{Bin, FamilyType, Manifest, ParamValue};
use spatial_captcha::pipeline::{
    png_name, read_dataset, read_panel, synthesize_batch, Artifact, BatchEntry, BatchOptions, Instance, PipelineError,
    Synthesizer,
};
use spatial_captcha::renderer::{rasterize, Panel, PanelFormat};
use spatial_captcha::rng::Stream;

#[derive(Debug, Clone)]
pub struct PoolItem {
    pub instance: Instance,
    /// PNG bytes keyed by the instance's panel file name.
    pub png: BTreeMap<String, Vec<u8>>,
}

impl PoolItem {
    pub fn from_artifact(a: Artifact) -> Result<Self, PipelineError> {
        let mut png = BTreeMap::new();
        for (file, panel) in &a.panels {
            png.insert(file.clone(), rasterize(panel)?.bytes);
        }
        Ok(Self { instance: a.instance, png })
    }

    /// Panel files in presentation order: stimulus, then candidates.
    pub fn panel_files(&self) -> Vec<&str> {
        self.instance.panels.iter().map(|p| p.file.as_str()).collect()
    }
}

struct Entry {
    item: Arc<PoolItem>,
    bin: Option<Bin>,
}

pub struct Pool {
    entries: RwLock<Vec<Entry>>,
    manifests: Vec<Manifest>,
    seeds: Stream,
    next: AtomicU64,
}

impl Pool {
    pub fn new(manifests: Vec<Manifest>, seed: u64) -> Self {
        Self {
            entries: RwLock::new(Vec::new()),
            manifests,
            seeds: Stream::new(seed).split("on_demand"),
            next: AtomicU64::new(0),
        }
    }

    pub fn manifests(&self) -> &[Manifest] {
        &self.manifests
    }

    pub fn manifest(&self, key: &str) -> Option<&Manifest> {
        self.manifests.iter().find(|m| m.key() == key)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("pool lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&self, item: PoolItem) -> Arc<PoolItem> {
        let item = Arc::new(item);
        let bin = item.instance.difficulty.map(|d| d.bin);
        self.entries.write().expect("pool lock").push(Entry { item: item.clone(), bin });
        item
    }

    /// Instances of a stored dataset. Stored PNGs are used when present.
    pub fn load_dataset(&self, dir: &Path) -> Result<usize, PipelineError> {
        let data = read_dataset(dir)?;
        let n = data.instances.len();
        for instance in data.instances {
            let mut png = BTreeMap::new();
            for p in &instance.panels {
                let id = &instance.instance_id;
                let bytes = match read_panel(dir, id, &png_name(&p.file)) {
                    Ok(b) => b,
                    Err(_) => {
                        let canvas = self.manifest(&instance.manifest).map_or(512, |m| m.renderer.canvas);
                        let svg = Panel {
                            role: p.role,
                            format: PanelFormat::Svg,
                            width: canvas,
                            height: canvas,
                            bytes: read_panel(dir, id, &p.file)?,
                        };
                        rasterize(&svg)?.bytes
                    }
                };
                png.insert(p.file.clone(), bytes);
            }
            self.push(PoolItem { instance, png });
        }
        Ok(n)
    }

    /// `size` instances spread evenly over the manifests.
    pub fn generate(&self, size: usize, seed: u64, model: Option<&DifficultyModel>) -> Result<usize, PipelineError> {
        let n = self.manifests.len().max(1);
        let entries: Vec<BatchEntry> = self
            .manifests
            .iter()
            .enumerate()
            .map(|(i, m)| BatchEntry {
                manifest: m.clone(),
                count: size / n + usize::from(i < size % n),
                mix: None,
            })
            .collect();
        let opts = BatchOptions {
            model,
            ..Default::default()
        };
        let data = synthesize_batch(&entries, seed, opts)?;
        for a in data.artifacts {
            self.push(PoolItem::from_artifact(a)?);
        }
        Ok(size)
    }

    /// Recompute every entry's bin with `model`.
    pub fn rebin(&self, model: &DifficultyModel) {
        let mut entries = self.entries.write().expect("pool lock");
        for e in entries.iter_mut() {
            let i = &e.item.instance;
            e.bin = self
                .manifest(&i.manifest)
                .and_then(|m| model.predict(m, &i.params))
                .map(|d| d.bin)
                .or(e.bin);
        }
    }

    /// A random entry matching the filter, `pick` choosing among the matches.
    pub fn choose(
        &self,
        family: Option<FamilyType>,
        bin: Option<Bin>,
        pick: impl FnOnce(usize) -> usize,
    ) -> Option<(Arc<PoolItem>, Option<Bin>)> {
        let entries = self.entries.read().expect("pool lock");
        let matches: Vec<&Entry> = entries
            .iter()
            .filter(|e| family.is_none_or(|f| e.item.instance.family == f) && bin.is_none_or(|b| e.bin == Some(b)))
            .collect();
        if matches.is_empty() {
            return None;
        }
        let e = matches[pick(matches.len()) % matches.len()];
        Some((e.item.clone(), e.bin))
    }

    pub fn find(&self, instance_id: &str) -> Option<(Arc<PoolItem>, Option<Bin>)> {
        let entries = self.entries.read().expect("pool lock");
        entries.iter().find(|e| e.item.instance.instance_id == instance_id).map(|e| (e.item.clone(), e.bin))
    }

    pub fn instances(&self) -> Vec<Instance> {
        self.entries.read().expect("pool lock").iter().map(|e| e.item.instance.clone()).collect()
    }

    fn next_seed(&self) -> u64 {
        self.seeds.derive_seed(self.next.fetch_add(1, Ordering::SeqCst))
    }

    /// Synthesize a fresh instance without adding it to the pool.
    pub fn synthesize(
        &self,
        manifest: &Manifest,
        bin: Option<Bin>,
        model: Option<&DifficultyModel>,
        overrides: BTreeMap<String, ParamValue>,
    ) -> Result<PoolItem, PipelineError> {
        let a = Synthesizer::new(manifest).model(model).overrides(overrides).run(self.next_seed(), bin)?;
        PoolItem::from_artifact(a)
    }

    /// Generate one instance for the filter and add it to the pool.
    pub fn generate_one(
        &self,
        family: Option<FamilyType>,
        bin: Option<Bin>,
        model: Option<&DifficultyModel>,
    ) -> Result<(Arc<PoolItem>, Option<Bin>), PipelineError> {
        let candidates: Vec<&Manifest> =
            self.manifests.iter().filter(|m| family.is_none_or(|f| m.family() == f)).collect();
        let Some(&m) = candidates.get(self.next.load(Ordering::SeqCst) as usize % candidates.len().max(1)) else {
            return Err(PipelineError::Format {
                path: family.map_or("pool".into(), |f| f.to_string()),
                message: "no manifest for this family".into(),
            });
        };
        let item = self.synthesize(m, bin, model, BTreeMap::new())?;
        let bin = item.instance.difficulty.map(|d| d.bin);
        Ok((self.push(item), bin))
    }
}
