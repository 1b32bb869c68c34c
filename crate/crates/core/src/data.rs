//! Dataset ingestion (IDX containers) and synthetic long-range task
//! generation at desk scale.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LasError, Result};

/// Labeled token sequences plus the metadata a model needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    pub examples: Vec<(Vec<u32>, usize)>,
    pub num_classes: usize,
    pub max_length: usize,
    /// Where the data came from, for artifact bookkeeping.
    pub provenance: String,
}

impl SequenceDataset {
    fn check(&self) -> Result<()> {
        for (i, (seq, label)) in self.examples.iter().enumerate() {
            if *label >= self.num_classes {
                return Err(LasError::Format(format!(
                    "example {i}: label {label} out of {} classes",
                    self.num_classes
                )));
            }
            if seq.len() > self.max_length {
                return Err(LasError::Format(format!(
                    "example {i}: length {} over max {}",
                    seq.len(),
                    self.max_length
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Task selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// MNIST flattened to a pixel sequence.
    Smnist,
    /// Same, under one fixed pixel permutation.
    Pmnist,
    /// Two marked values must be added and bucketized.
    Adding,
    /// A token planted early must be recalled at the end.
    SelectiveCopy,
}

/// Everything needed to materialize a dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskSpec {
    pub task: Task,
    /// Sequence length for generated tasks.
    pub length: usize,
    /// Image side downsampling factor for the MNIST tasks.
    pub downsample: usize,
    /// Seed of the fixed pixel permutation (pmnist).
    pub permutation_seed: u64,
    /// Fraction of examples used for training; the rest validate.
    pub train_fraction: f64,
    /// Generated dataset size (ignored when loading IDX files).
    pub num_examples: usize,
    /// Directory holding the IDX files for the MNIST tasks.
    pub data_dir: Option<PathBuf>,
}

impl Default for TaskSpec {
    fn default() -> Self {
        Self {
            task: Task::SelectiveCopy,
            length: 128,
            downsample: 2,
            permutation_seed: 0,
            train_fraction: 0.8,
            num_examples: 5000,
            data_dir: None,
        }
    }
}

impl TaskSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(LasError::Config(format!(
                "train_fraction must lie in (0,1], got {}",
                self.train_fraction
            )));
        }
        match self.task {
            Task::Adding | Task::SelectiveCopy => {
                if self.length < 4 {
                    return Err(LasError::Config(format!(
                        "length must be at least 4, got {}",
                        self.length
                    )));
                }
                if self.num_examples == 0 {
                    return Err(LasError::Config("num_examples must be positive".into()));
                }
            }
            Task::Smnist | Task::Pmnist => {
                if self.downsample == 0 {
                    return Err(LasError::Config("downsample must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// IDX containers
// ---------------------------------------------------------------------------

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| LasError::Format(format!("truncated IDX header at byte {at}")))
}

/// Load an IDX image/label pair into pixel sequences (row-major flatten,
/// 256 intensity bins).
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<SequenceDataset> {
    let img = fs::read(images_path)?;
    let lab = fs::read(labels_path)?;

    if be_u32(&img, 0)? != IDX_IMAGES_MAGIC {
        return Err(LasError::Format(format!(
            "bad image magic in {}",
            images_path.display()
        )));
    }
    if be_u32(&lab, 0)? != IDX_LABELS_MAGIC {
        return Err(LasError::Format(format!(
            "bad label magic in {}",
            labels_path.display()
        )));
    }
    let count = be_u32(&img, 4)? as usize;
    let rows = be_u32(&img, 8)? as usize;
    let cols = be_u32(&img, 12)? as usize;
    let label_count = be_u32(&lab, 4)? as usize;
    if count != label_count {
        return Err(LasError::Format(format!(
            "{count} images vs {label_count} labels"
        )));
    }
    let pixel_len = rows * cols;
    if img.len() != 16 + count * pixel_len {
        return Err(LasError::Format(format!(
            "image payload is {} bytes, header implies {}",
            img.len() - 16.min(img.len()),
            count * pixel_len
        )));
    }
    if lab.len() != 8 + count {
        return Err(LasError::Format("label payload length mismatch".into()));
    }

    let mut examples = Vec::with_capacity(count);
    for i in 0..count {
        let start = 16 + i * pixel_len;
        let seq: Vec<u32> = img[start..start + pixel_len].iter().map(|&b| b as u32).collect();
        let label = lab[8 + i] as usize;
        if label > 9 {
            return Err(LasError::Format(format!(
                "example {i}: label {label} outside 0..9"
            )));
        }
        examples.push((seq, label));
    }
    let ds = SequenceDataset {
        examples,
        num_classes: 10,
        max_length: pixel_len,
        provenance: format!("idx:{}", images_path.display()),
    };
    ds.check()?;
    Ok(ds)
}

/// Average-pool each (square) image by `factor` per side, then flatten
/// again. Pixel means are preserved to within one intensity bin.
pub fn downsample(ds: &SequenceDataset, factor: usize) -> Result<SequenceDataset> {
    if factor == 0 {
        return Err(LasError::Parameter("factor must be positive".into()));
    }
    if factor == 1 {
        return Ok(ds.clone());
    }
    let side = (ds.max_length as f64).sqrt().round() as usize;
    if side * side != ds.max_length {
        return Err(LasError::Parameter(format!(
            "dataset length {} is not a square image",
            ds.max_length
        )));
    }
    if side % factor != 0 {
        return Err(LasError::Parameter(format!(
            "factor {factor} does not divide image side {side}"
        )));
    }
    let new_side = side / factor;
    let area = (factor * factor) as f64;
    let mut examples = Vec::with_capacity(ds.len());
    for (seq, label) in &ds.examples {
        let mut out = Vec::with_capacity(new_side * new_side);
        for bi in 0..new_side {
            for bj in 0..new_side {
                let mut acc = 0.0f64;
                for di in 0..factor {
                    for dj in 0..factor {
                        acc += seq[(bi * factor + di) * side + (bj * factor + dj)] as f64;
                    }
                }
                out.push((acc / area).round() as u32);
            }
        }
        examples.push((out, *label));
    }
    let out = SequenceDataset {
        examples,
        num_classes: ds.num_classes,
        max_length: new_side * new_side,
        provenance: format!("{}|down{factor}", ds.provenance),
    };
    out.check()?;
    Ok(out)
}

/// The fixed position permutation drawn from a seed.
pub fn fixed_permutation(len: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..len).collect();
    perm.shuffle(&mut rng);
    perm
}

/// Apply one seed-drawn permutation identically to every example.
pub fn permute_fixed(ds: &SequenceDataset, seed: u64) -> Result<SequenceDataset> {
    let Some(len) = ds.examples.first().map(|(s, _)| s.len()) else {
        return Ok(ds.clone());
    };
    if ds.examples.iter().any(|(s, _)| s.len() != len) {
        return Err(LasError::Parameter(
            "permutation requires uniform sequence lengths".into(),
        ));
    }
    let perm = fixed_permutation(len, seed);
    let examples = ds
        .examples
        .iter()
        .map(|(seq, label)| {
            let permuted: Vec<u32> = perm.iter().map(|&p| seq[p]).collect();
            (permuted, *label)
        })
        .collect();
    Ok(SequenceDataset {
        examples,
        num_classes: ds.num_classes,
        max_length: ds.max_length,
        provenance: format!("{}|perm{seed}", ds.provenance),
    })
}

// ---------------------------------------------------------------------------
// synthetic tasks
// ---------------------------------------------------------------------------

/// Adding task vocabulary: tokens 0..=9 carry values bin/20 (0.00..0.45);
/// tokens 10..=19 are the marked twins of the same bins.
pub const ADDING_VALUE_BINS: u32 = 10;
pub const ADDING_VOCAB: usize = 2 * ADDING_VALUE_BINS as usize;
pub const ADDING_CLASSES: usize = 10;

/// Two positions carry marked value tokens; the label is the bucket of
/// the summed values with boundaries at i/10. Labels are drawn uniformly
/// first and a consistent bin pair is sampled afterwards, so chance
/// accuracy is exactly 1/num_classes by construction.
pub fn gen_adding(spec: &TaskSpec, seed: u64) -> Result<SequenceDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = spec.length;
    let mut examples = Vec::with_capacity(spec.num_examples);
    for _ in 0..spec.num_examples {
        // label = floor((v1+v2)*10) with v = bin/20, i.e. (b1+b2) div 2.
        let label = rng.gen_range(0..ADDING_CLASSES as u32);
        // The top bucket is only reachable via bin sum 18.
        let parity = if label == 9 { 0 } else { rng.gen_range(0..2) };
        let s = 2 * label + parity; // b1 + b2
        let lo = s.saturating_sub(ADDING_VALUE_BINS - 1);
        let hi = s.min(ADDING_VALUE_BINS - 1);
        let b1 = rng.gen_range(lo..=hi);
        let b2 = s - b1;

        let mut seq: Vec<u32> = (0..l)
            .map(|_| rng.gen_range(0..ADDING_VALUE_BINS))
            .collect();
        let p1 = rng.gen_range(0..l);
        let mut p2 = rng.gen_range(0..l - 1);
        if p2 >= p1 {
            p2 += 1;
        }
        seq[p1] = ADDING_VALUE_BINS + b1;
        seq[p2] = ADDING_VALUE_BINS + b2;
        examples.push((seq, label as usize));
    }
    let ds = SequenceDataset {
        examples,
        num_classes: ADDING_CLASSES,
        max_length: l,
        provenance: format!("adding:L{l}:seed{seed}"),
    };
    ds.check()?;
    Ok(ds)
}

/// Bucket of a summed pair of adding-task value bins; boundaries i/10.
pub fn adding_bucket(bin1: u32, bin2: u32) -> usize {
    ((bin1 + bin2) / 2) as usize
}

/// Selective-copy alphabet: 8 content symbols (tokens 1..=8) planted
/// among noise tokens 9..=16, with token 0 unused padding.
pub const SELECTIVE_COPY_CLASSES: usize = 8;
pub const SELECTIVE_COPY_VOCAB: usize = 17;

/// One content token sits at a random position in the first quarter of a
/// noise sequence; the label is that token's symbol, read out at the
/// sequence end. Chance accuracy is 1/8.
pub fn gen_selective_copy(spec: &TaskSpec, seed: u64) -> Result<SequenceDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = spec.length;
    let quarter = (l / 4).max(1);
    let mut examples = Vec::with_capacity(spec.num_examples);
    for _ in 0..spec.num_examples {
        let mut seq: Vec<u32> = (0..l).map(|_| rng.gen_range(9..17)).collect();
        let class = rng.gen_range(0..SELECTIVE_COPY_CLASSES as u32);
        let pos = rng.gen_range(0..quarter);
        seq[pos] = 1 + class;
        examples.push((seq, class as usize));
    }
    let ds = SequenceDataset {
        examples,
        num_classes: SELECTIVE_COPY_CLASSES,
        max_length: l,
        provenance: format!("selective_copy:L{l}:seed{seed}"),
    };
    ds.check()?;
    Ok(ds)
}

/// Seeded class-stratified subset. Per class, a single seeded shuffle
/// fixes an inclusion order, so smaller fractions are nested inside
/// larger ones under the same seed; output keeps the original example
/// order.
pub fn subsample(ds: &SequenceDataset, fraction: f64, seed: u64) -> Result<SequenceDataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(LasError::Parameter(format!(
            "fraction must lie in (0,1], got {fraction}"
        )));
    }
    if fraction == 1.0 {
        return Ok(ds.clone());
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.num_classes];
    for (i, (_, label)) in ds.examples.iter().enumerate() {
        by_class[*label].push(i);
    }
    let mut keep = vec![false; ds.len()];
    for (class, mut members) in by_class.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let take = (members.len() as f64 * fraction).ceil() as usize;
        if take == 0 {
            return Err(LasError::Parameter(format!(
                "fraction {fraction} leaves class {class} empty"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (class as u64).wrapping_mul(0x9e37_79b9));
        members.shuffle(&mut rng);
        for &idx in &members[..take] {
            keep[idx] = true;
        }
    }
    let examples = ds
        .examples
        .iter()
        .enumerate()
        .filter(|(i, _)| keep[*i])
        .map(|(_, e)| e.clone())
        .collect();
    Ok(SequenceDataset {
        examples,
        num_classes: ds.num_classes,
        max_length: ds.max_length,
        provenance: format!("{}|frac{fraction}", ds.provenance),
    })
}

/// Materialize the dataset a task spec describes.
pub fn build_dataset(spec: &TaskSpec, seed: u64) -> Result<SequenceDataset> {
    spec.validate()?;
    match spec.task {
        Task::Adding => gen_adding(spec, seed),
        Task::SelectiveCopy => gen_selective_copy(spec, seed),
        Task::Smnist | Task::Pmnist => {
            let dir = spec.data_dir.as_ref().ok_or_else(|| {
                LasError::Config("data_dir is required for the MNIST tasks".into())
            })?;
            let ds = load_idx(
                &dir.join("train-images-idx3-ubyte"),
                &dir.join("train-labels-idx1-ubyte"),
            )?;
            let ds = downsample(&ds, spec.downsample)?;
            let ds = if spec.task == Task::Pmnist {
                permute_fixed(&ds, spec.permutation_seed)?
            } else {
                ds
            };
            if spec.num_examples > 0 && spec.num_examples < ds.len() {
                subsample(&ds, spec.num_examples as f64 / ds.len() as f64, seed)
            } else {
                Ok(ds)
            }
        }
    }
}

/// Vocabulary size a task needs.
pub fn task_vocab(task: Task) -> usize {
    match task {
        Task::Smnist | Task::Pmnist => 256,
        Task::Adding => ADDING_VOCAB,
        Task::SelectiveCopy => SELECTIVE_COPY_VOCAB,
    }
}

/// Class count a task produces.
pub fn task_classes(task: Task) -> usize {
    match task {
        Task::Smnist | Task::Pmnist => 10,
        Task::Adding => ADDING_CLASSES,
        Task::SelectiveCopy => SELECTIVE_COPY_CLASSES,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Tiny synthetic IDX pair written to disk.
    fn write_idx(dir: &Path, count: usize, side: usize, bad_label: bool) -> (PathBuf, PathBuf) {
        let ip = dir.join("train-images-idx3-ubyte");
        let lp = dir.join("train-labels-idx1-ubyte");
        let mut img = Vec::new();
        img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
        img.extend_from_slice(&(count as u32).to_be_bytes());
        img.extend_from_slice(&(side as u32).to_be_bytes());
        img.extend_from_slice(&(side as u32).to_be_bytes());
        for i in 0..count * side * side {
            img.push((i % 251) as u8);
        }
        let mut lab = Vec::new();
        lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
        lab.extend_from_slice(&(count as u32).to_be_bytes());
        for i in 0..count {
            lab.push(if bad_label && i == 1 { 11 } else { (i % 10) as u8 });
        }
        fs::write(&ip, img).unwrap();
        fs::write(&lp, lab).unwrap();
        (ip, lp)
    }

    #[test]
    fn idx_header_arithmetic_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = write_idx(dir.path(), 6, 4, false);
        let a = load_idx(&ip, &lp).unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(a.max_length, 16);
        assert!(a.examples.iter().all(|(s, _)| s.len() == 16));
        let b = load_idx(&ip, &lp).unwrap();
        assert_eq!(a.examples[0], b.examples[0]);
    }

    #[test]
    fn idx_error_paths() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = write_idx(dir.path(), 4, 4, true);
        assert!(matches!(load_idx(&ip, &lp).unwrap_err(), LasError::Format(_)));

        // Bad magic.
        let (ip, lp) = write_idx(dir.path(), 4, 4, false);
        let mut bytes = fs::read(&ip).unwrap();
        bytes[3] = 0x99;
        fs::write(&ip, &bytes).unwrap();
        assert!(matches!(load_idx(&ip, &lp).unwrap_err(), LasError::Format(_)));

        // Truncated payload.
        let (ip, lp) = write_idx(dir.path(), 4, 4, false);
        let bytes = fs::read(&ip).unwrap();
        fs::write(&ip, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_idx(&ip, &lp).unwrap_err(), LasError::Format(_)));

        // Count mismatch.
        let (ip, lp) = write_idx(dir.path(), 4, 4, false);
        let mut bytes = fs::read(&lp).unwrap();
        bytes[7] = 3;
        bytes.truncate(8 + 3);
        fs::write(&lp, &bytes).unwrap();
        assert!(matches!(load_idx(&ip, &lp).unwrap_err(), LasError::Format(_)));
    }

    #[test]
    fn downsample_identity_and_constant_image() {
        let constant = SequenceDataset {
            examples: vec![(vec![100; 28 * 28], 3)],
            num_classes: 10,
            max_length: 28 * 28,
            provenance: "test".into(),
        };
        assert_eq!(downsample(&constant, 1).unwrap(), constant);
        let half = downsample(&constant, 2).unwrap();
        assert_eq!(half.max_length, 196);
        assert!(half.examples[0].0.iter().all(|&p| p == 100));
        assert!(matches!(
            downsample(&constant, 3).unwrap_err(),
            LasError::Parameter(_)
        ));
    }

    #[test]
    fn downsample_preserves_mean_within_one_bin() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = write_idx(dir.path(), 3, 28, false);
        let ds = load_idx(&ip, &lp).unwrap();
        let down = downsample(&ds, 2).unwrap();
        for (orig, small) in ds.examples.iter().zip(&down.examples) {
            let m1: f64 = orig.0.iter().map(|&p| p as f64).sum::<f64>() / orig.0.len() as f64;
            let m2: f64 = small.0.iter().map(|&p| p as f64).sum::<f64>() / small.0.len() as f64;
            assert!((m1 - m2).abs() <= 1.0, "{m1} vs {m2}");
        }
    }

    #[test]
    fn permutation_is_a_seeded_bijection_with_inverse() {
        let ds = SequenceDataset {
            examples: vec![((0..16u32).collect(), 0), ((16..32u32).collect(), 1)],
            num_classes: 2,
            max_length: 16,
            provenance: "test".into(),
        };
        let p1 = permute_fixed(&ds, 42).unwrap();
        let p2 = permute_fixed(&ds, 42).unwrap();
        assert_eq!(p1, p2);

        let perm = fixed_permutation(16, 42);
        let mut seen = vec![false; 16];
        for &p in &perm {
            assert!(!seen[p]);
            seen[p] = true;
        }
        // Applying the inverse permutation restores the original.
        let mut inverse = vec![0usize; 16];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        for (orig, permuted) in ds.examples.iter().zip(&p1.examples) {
            let restored: Vec<u32> = inverse.iter().map(|&i| permuted.0[i]).collect();
            assert_eq!(restored, orig.0);
        }
        // Same multiset of values per example.
        let mut a = ds.examples[0].0.clone();
        let mut b = p1.examples[0].0.clone();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn adding_bucket_hand_example() {
        // Values 0.2 and 0.3 are bins 4 and 6; the sum 0.5 lands in
        // bucket 5 with boundaries at i/10.
        assert_eq!(adding_bucket(4, 6), 5);
        assert_eq!(adding_bucket(0, 0), 0);
        assert_eq!(adding_bucket(9, 9), 9);
    }

    #[test]
    fn adding_task_shapes_and_determinism() {
        let spec = TaskSpec {
            task: Task::Adding,
            length: 16,
            num_examples: 200,
            ..Default::default()
        };
        let a = gen_adding(&spec, 9).unwrap();
        let b = gen_adding(&spec, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_classes, 10);
        for (seq, label) in &a.examples {
            assert_eq!(seq.len(), 16);
            let marked: Vec<u32> = seq
                .iter()
                .filter(|&&t| t >= ADDING_VALUE_BINS)
                .map(|&t| t - ADDING_VALUE_BINS)
                .collect();
            assert_eq!(marked.len(), 2);
            assert_eq!(adding_bucket(marked[0], marked[1]), *label);
        }
        // Labels are uniform by construction: each class appears.
        let mut counts = [0usize; 10];
        for (_, l) in &a.examples {
            counts[*l] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0));
    }

    #[test]
    fn selective_copy_plants_in_first_quarter() {
        let spec = TaskSpec {
            task: Task::SelectiveCopy,
            length: 128,
            num_examples: 100,
            ..Default::default()
        };
        let ds = gen_selective_copy(&spec, 4).unwrap();
        assert_eq!(ds.num_classes, 8);
        for (seq, label) in &ds.examples {
            let planted: Vec<(usize, u32)> = seq
                .iter()
                .enumerate()
                .filter(|(_, &t)| (1..=8).contains(&t))
                .map(|(i, &t)| (i, t))
                .collect();
            assert_eq!(planted.len(), 1);
            let (pos, tok) = planted[0];
            assert!(pos < 32, "planted at {pos}");
            assert_eq!(*label, (tok - 1) as usize);
        }
        assert_eq!(ds, gen_selective_copy(&spec, 4).unwrap());
    }

    fn balanced_dataset(n_per_class: usize, classes: usize) -> SequenceDataset {
        let mut examples = Vec::new();
        for c in 0..classes {
            for i in 0..n_per_class {
                examples.push((vec![i as u32 % 7; 8], c));
            }
        }
        SequenceDataset {
            examples,
            num_classes: classes,
            max_length: 8,
            provenance: "balanced".into(),
        }
    }

    #[test]
    fn subsample_identity_and_stratification() {
        let ds = balanced_dataset(20, 10);
        let full = subsample(&ds, 1.0, 3).unwrap();
        assert_eq!(full.examples, ds.examples);

        let half = subsample(&ds, 0.5, 3).unwrap();
        let mut counts = vec![0usize; 10];
        for (_, l) in &half.examples {
            counts[*l] += 1;
        }
        for c in counts {
            assert!((9..=11).contains(&c), "per-class count {c}");
        }
    }

    #[test]
    fn subsample_is_nested_under_one_seed() {
        let ds = balanced_dataset(40, 4);
        let quarter = subsample(&ds, 0.25, 8).unwrap();
        let half = subsample(&ds, 0.5, 8).unwrap();
        for e in &quarter.examples {
            assert!(half.examples.contains(e));
        }
        assert!(quarter.len() <= half.len());
    }

    #[test]
    fn subsample_rejects_emptying_fractions() {
        let ds = balanced_dataset(1, 2);
        assert!(subsample(&ds, 1.1, 0).is_err());
        assert!(subsample(&ds, 0.0, 0).is_err());
    }
}
