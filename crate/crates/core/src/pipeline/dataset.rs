//! On-disk layout: `index.json` plus `instances/<id>/` holding `instance.json` and panels.

use std::fs;
use std::path::{Path, PathBuf};

use super::{Dataset, DatasetIndex, Instance, PipelineError};
use crate::canonical::to_canonical_string;

pub const INDEX_FILE: &str = "index.json";
pub const INSTANCE_FILE: &str = "instance.json";
const INSTANCES_DIR: &str = "instances";

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn instance_dir(root: &Path, instance_id: &str) -> PathBuf {
    root.join(INSTANCES_DIR).join(instance_id)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, bytes).map_err(io(path))
}

/// Write every instance and its panels, then the index. With `png`, raster copies of
/// the panels are written next to the SVG files.
pub fn write_dataset(root: &Path, dataset: &Dataset, png: bool) -> Result<(), PipelineError> {
    fs::create_dir_all(root).map_err(io(root))?;
    for a in &dataset.artifacts {
        let dir = instance_dir(root, &a.instance.instance_id);
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        let mut json = a.instance.to_canonical_json();
        json.push('\n');
        write(&dir.join(INSTANCE_FILE), json.as_bytes())?;
        for (file, panel) in &a.panels {
            write(&dir.join(file), &panel.bytes)?;
        }
        if png {
            for (file, panel) in a.rasters()? {
                write(&dir.join(file), &panel.bytes)?;
            }
        }
    }
    let mut index = to_canonical_string(&dataset.index).expect("index serializes");
    index.push('\n');
    write(&root.join(INDEX_FILE), index.as_bytes())
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn read_index(root: &Path) -> Result<DatasetIndex, PipelineError> {
    parse(&root.join(INDEX_FILE))
}

pub fn read_instance(root: &Path, instance_id: &str) -> Result<Instance, PipelineError> {
    let path = instance_dir(root, instance_id).join(INSTANCE_FILE);
    let instance: Instance = parse(&path)?;
    if instance.instance_id != instance_id {
        return Err(PipelineError::Format {
            path: path.display().to_string(),
            message: format!("holds instance {}", instance.instance_id),
        });
    }
    if instance.content_hash() != instance_id {
        return Err(PipelineError::Format {
            path: path.display().to_string(),
            message: "content does not match its id".into(),
        });
    }
    Ok(instance)
}

/// Panel bytes by file name. Names with path separators are refused.
pub fn read_panel(root: &Path, instance_id: &str, file: &str) -> Result<Vec<u8>, PipelineError> {
    let unsafe_name = |s: &str| s.is_empty() || s.contains(['/', '\\']) || s.starts_with('.');
    if unsafe_name(file) || unsafe_name(instance_id) {
        return Err(PipelineError::Format {
            path: file.to_owned(),
            message: "not a panel file name".into(),
        });
    }
    let path = instance_dir(root, instance_id).join(file);
    fs::read(&path).map_err(io(&path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredDataset {
    pub index: DatasetIndex,
    /// Index order.
    pub instances: Vec<Instance>,
}

pub fn read_dataset(root: &Path) -> Result<StoredDataset, PipelineError> {
    let index = read_index(root)?;
    let instances = index
        .instances
        .iter()
        .map(|e| read_instance(root, &e.instance_id))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StoredDataset { index, instances })
}
