use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::image::{decode_pgm, write_image, Image};
use super::phoenix::{parse_mstar_phoenix, SENTINEL};
use super::synth::{synth_sample, SynthConfig};
use super::{fit_to_size, min_max_normalize, SarImage};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::SplitMix64;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    fn salt(self) -> u64 {
        match self {
            Split::Train => 1,
            Split::Test => 2,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidConfig(format!("unknown split {s:?} (expected train or test)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum DataSource {
    /// `<root>/<split>/<class_name>/<files>`
    MstarDir(PathBuf),
    Synth(SynthConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Vec<SarImage>,
    pub class_names: Vec<String>,
    pub split: Split,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.class_names.len()];
        for img in &self.images {
            h[img.label] += 1;
        }
        h
    }

    /// Stacks the selected images into an N×1×H×W tensor plus labels.
    pub fn batch(&self, indices: &[usize]) -> (Tensor, Vec<usize>) {
        let first = &self.images[indices[0]];
        let (h, w) = (first.height, first.width);
        let mut data = Vec::with_capacity(indices.len() * h * w);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(&self.images[i].values);
            labels.push(self.images[i].label);
        }
        (Tensor::from_parts(vec![indices.len(), 1, h, w], data), labels)
    }
}

pub fn load_dataset(source: &DataSource, split: Split, size: usize) -> Result<Dataset> {
    match source {
        DataSource::Synth(cfg) => Ok(synth_dataset(cfg, split)),
        DataSource::MstarDir(root) => {
            let mut ds = load_split_dir(&root.join(split.as_str()), size)?;
            ds.split = split;
            Ok(ds)
        }
    }
}

/// Synthetic split, ordered by (class, index). Each image is min-max
/// normalized after speckle so every chip spans [0, 1].
pub fn synth_dataset(cfg: &SynthConfig, split: Split) -> Dataset {
    let per_class = match split {
        Split::Train => cfg.train_per_class,
        Split::Test => cfg.test_per_class,
    };
    let images = Exec::default().map(cfg.classes * per_class, |i| {
        let (class, index) = (i / per_class, i % per_class);
        let seed = cfg.sample_seed(split.salt(), class, index);
        let mut img = synth_sample(cfg, class, &mut SplitMix64::new(seed));
        min_max_normalize(&mut img.values);
        img.source = format!("synth:{split}:{class}:{index}:{seed}");
        img
    });
    Dataset { images, class_names: cfg.class_names(), split }
}

/// One `index\tclass_id\tclass_name\tseed` line per image.
pub fn synth_manifest(cfg: &SynthConfig, split: Split) -> String {
    let per_class = match split {
        Split::Train => cfg.train_per_class,
        Split::Test => cfg.test_per_class,
    };
    let names = cfg.class_names();
    let mut out = String::new();
    for class in 0..cfg.classes {
        for index in 0..per_class {
            let seed = cfg.sample_seed(split.salt(), class, index);
            out.push_str(&format!("{}\t{class}\t{}\t{seed}\n", class * per_class + index, names[class]));
        }
    }
    out
}

/// Writes `<dir>/manifest.tsv` and `<dir>/<class_name>/NNNNN.pgm`.
pub fn write_synth_split(cfg: &SynthConfig, split: Split, dir: &Path) -> Result<usize> {
    let ds = synth_dataset(cfg, split);
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for name in &ds.class_names {
        let d = dir.join(name);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    for (i, img) in ds.images.iter().enumerate() {
        let path = dir.join(&ds.class_names[img.label]).join(format!("{i:05}.pgm"));
        write_image(&path, &Image::Gray(img.to_gray()))?;
    }
    let manifest = dir.join("manifest.tsv");
    fs::write(&manifest, synth_manifest(cfg, split)).map_err(|e| Error::io(&manifest, e))?;
    Ok(ds.len())
}

fn read_chip(path: &Path, size: usize) -> Result<SarImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let with_path = |e: Error| Error::BadImage(format!("{}: {e}", path.display()));
    let mut img = if bytes.starts_with(SENTINEL) {
        parse_mstar_phoenix(&bytes, size).map_err(with_path)?.image
    } else {
        let g = decode_pgm(&bytes).map_err(with_path)?;
        let mut values = fit_to_size(&g.values, g.height, g.width, size);
        min_max_normalize(&mut values);
        SarImage { height: size, width: size, values, label: 0, source: String::new() }
    };
    img.source = path.display().to_string();
    Ok(img)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        out.push(entry.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

/// Loads `<dir>/<class_name>/<files>`; classes and files in lexicographic
/// order. Non-directory entries at the top level (e.g. a manifest) are skipped.
pub fn load_split_dir(dir: &Path, size: usize) -> Result<Dataset> {
    let class_dirs: Vec<PathBuf> = sorted_entries(dir)?.into_iter().filter(|p| p.is_dir()).collect();
    if class_dirs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut class_names = Vec::new();
    let mut files = Vec::new();
    for (label, cdir) in class_dirs.iter().enumerate() {
        let name = cdir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let chips: Vec<PathBuf> = sorted_entries(cdir)?.into_iter().filter(|p| p.is_file()).collect();
        if chips.is_empty() {
            return Err(Error::EmptyClass(name));
        }
        files.extend(chips.into_iter().map(|p| (label, p)));
        class_names.push(name);
    }
    let images = Exec::default()
        .map(files.len(), |i| {
            let (label, path) = &files[i];
            read_chip(path, size).map(|img| SarImage { label: *label, ..img })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { images, class_names, split: Split::Train })
}
