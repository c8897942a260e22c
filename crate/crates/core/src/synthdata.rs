//! Seeded synthetic tasks: Gaussian blobs, two moons, rule-constrained
//! attribute clusters and the 1-D two-Gaussian problem.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmix::{self, GaussianMixture1D};
use crate::logicc::{bit_string, enumerate_valid, Formula, ValidSet};
use crate::rng::{seeded_rng, SeededRng};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Label {
    Class(usize),
    Attributes(Vec<bool>),
}

impl Label {
    pub fn render(&self) -> String {
        match self {
            Label::Class(c) => c.to_string(),
            Label::Attributes(v) => bit_string(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Class,
    Attributes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: Vec<f64>,
    pub y: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dims: usize,
    /// Number of classes, or of attributes.
    pub num_outputs: usize,
    pub label_kind: LabelKind,
    pub labelled: Vec<Example>,
    pub unlabelled: Vec<Vec<f64>>,
    /// Labels of `unlabelled`, index-aligned; for evaluation only.
    pub hidden_labels: Vec<Label>,
    pub test: Vec<Example>,
}

impl Dataset {
    /// The unlabelled split paired with its hidden labels.
    pub fn unlabelled_examples(&self) -> Vec<Example> {
        self.unlabelled
            .iter()
            .zip(&self.hidden_labels)
            .map(|(x, y)| Example {
                x: x.clone(),
                y: y.clone(),
            })
            .collect()
    }

    /// One row per point: features, label (`?` when unlabelled), split tag.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for d in 0..self.dims {
            let _ = write!(out, "x{d},");
        }
        out.push_str("label,split\n");
        let mut row = |x: &[f64], label: &str, split: &str| {
            for v in x {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{label},{split}");
        };
        for e in &self.labelled {
            row(&e.x, &e.y.render(), "labelled");
        }
        for x in &self.unlabelled {
            row(x, "?", "unlabelled");
        }
        for e in &self.test {
            row(&e.x, &e.y.render(), "test");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub classes: usize,
    pub dims: usize,
    /// Smallest distance between two class means, in noise standard deviations.
    pub separation: f64,
    pub labelled_per_class: usize,
    pub unlabelled: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoonsSpec {
    pub noise: f64,
    pub labelled_per_class: usize,
    pub unlabelled: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeTaskSpec {
    pub clusters_per_label: usize,
    pub dims: usize,
    pub separation: f64,
    pub labelled_per_label: usize,
    pub unlabelled: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gauss1dSpec {
    pub mixture: GaussianMixture1D,
    pub labelled_per_class: usize,
    pub unlabelled: usize,
    pub test: usize,
}

fn gaussian_vec(rng: &mut SeededRng, dims: usize) -> Vec<f64> {
    (0..dims).map(|_| rng.sample(StandardNormal)).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `count` centres whose closest pair is exactly `separation` apart:
/// a regular polygon in 2-D, seeded orthogonal directions otherwise.
pub fn cluster_centers(count: usize, dims: usize, separation: f64, rng: &mut SeededRng) -> Result<Vec<Vec<f64>>> {
    if count == 0 || dims == 0 {
        return Err(Error::Parameter("need at least one centre and one dimension".into()));
    }
    if !(separation > 0.0) {
        return Err(Error::Parameter(format!(
            "separation must be positive, got {separation}"
        )));
    }
    if count == 1 {
        return Ok(vec![vec![0.0; dims]]);
    }
    let centers = match dims {
        1 => (0..count)
            .map(|k| vec![separation * (k as f64 - 0.5 * (count - 1) as f64)])
            .collect(),
        2 => {
            let radius = separation / (2.0 * (PI / count as f64).sin());
            (0..count)
                .map(|k| {
                    let a = 2.0 * PI * k as f64 / count as f64;
                    vec![radius * a.cos(), radius * a.sin()]
                })
                .collect()
        }
        _ if count <= dims => {
            // Gram–Schmidt on Gaussian draws; e_i·s/√2 are pairwise s apart.
            let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
            while basis.len() < count {
                let mut v = gaussian_vec(rng, dims);
                for b in &basis {
                    let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-8 {
                    basis.push(v.into_iter().map(|x| x / norm).collect());
                }
            }
            let scale = separation / 2f64.sqrt();
            basis
                .into_iter()
                .map(|b| b.into_iter().map(|x| x * scale).collect())
                .collect()
        }
        _ => {
            let raw: Vec<Vec<f64>> = (0..count)
                .map(|_| {
                    let v = gaussian_vec(rng, dims);
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                    v.into_iter().map(|x| x / n).collect()
                })
                .collect();
            let mut min = f64::INFINITY;
            for i in 0..count {
                for j in i + 1..count {
                    min = min.min(dist(&raw[i], &raw[j]));
                }
            }
            if min < 1e-9 {
                return Err(Error::Parameter("degenerate centre draw".into()));
            }
            let scale = separation / min;
            raw.into_iter()
                .map(|v| v.into_iter().map(|x| x * scale).collect())
                .collect()
        }
    };
    Ok(centers)
}

fn around(center: &[f64], rng: &mut SeededRng) -> Vec<f64> {
    center
        .iter()
        .map(|c| c + rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Class sequence of length `n` cycling through `k` classes, shuffled.
fn balanced_classes(n: usize, k: usize, rng: &mut SeededRng) -> Vec<usize> {
    let mut classes: Vec<usize> = (0..n).map(|i| i % k).collect();
    classes.shuffle(rng);
    classes
}

pub fn gen_blobs(spec: &BlobSpec, seed: u64) -> Result<Dataset> {
    if spec.classes < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 classes, got {}",
            spec.classes
        )));
    }
    let mut rng = seeded_rng(seed);
    let centers = cluster_centers(spec.classes, spec.dims, spec.separation, &mut rng)?;
    let draw = |rng: &mut SeededRng, c: usize| Example {
        x: around(&centers[c], rng),
        y: Label::Class(c),
    };
    let labelled = (0..spec.classes)
        .flat_map(|c| std::iter::repeat_n(c, spec.labelled_per_class))
        .collect::<Vec<_>>()
        .into_iter()
        .map(|c| draw(&mut rng, c))
        .collect();
    let unlabelled: Vec<Example> = balanced_classes(spec.unlabelled, spec.classes, &mut rng)
        .into_iter()
        .map(|c| draw(&mut rng, c))
        .collect();
    let test = balanced_classes(spec.test, spec.classes, &mut rng)
        .into_iter()
        .map(|c| draw(&mut rng, c))
        .collect();
    let (unlabelled, hidden_labels) = unlabelled.into_iter().map(|e| (e.x, e.y)).unzip();
    Ok(Dataset {
        dims: spec.dims,
        num_outputs: spec.classes,
        label_kind: LabelKind::Class,
        labelled,
        unlabelled,
        hidden_labels,
        test,
    })
}

/// Point on the noiseless moon of `class` at angle `t ∈ [0, π]`.
pub fn moon_point(class: usize, t: f64) -> [f64; 2] {
    if class == 0 {
        [t.cos(), t.sin()]
    } else {
        [1.0 - t.cos(), 0.5 - t.sin()]
    }
}

pub fn gen_two_moons(spec: &MoonsSpec, seed: u64) -> Result<Dataset> {
    if !(spec.noise >= 0.0) {
        return Err(Error::Parameter(format!(
            "noise must be non-negative, got {}",
            spec.noise
        )));
    }
    let mut rng = seeded_rng(seed);
    let noise = spec.noise;
    let draw = |rng: &mut SeededRng, c: usize| {
        let t = rng.random_range(0.0..=PI);
        let p = moon_point(c, t);
        let x = p
            .iter()
            .map(|v| v + noise * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Example { x, y: Label::Class(c) }
    };
    let labelled = (0..2)
        .flat_map(|c| std::iter::repeat_n(c, spec.labelled_per_class))
        .collect::<Vec<_>>()
        .into_iter()
        .map(|c| draw(&mut rng, c))
        .collect();
    let unlabelled: Vec<Example> = balanced_classes(spec.unlabelled, 2, &mut rng)
        .into_iter()
        .map(|c| draw(&mut rng, c))
        .collect();
    let test = balanced_classes(spec.test, 2, &mut rng)
        .into_iter()
        .map(|c| draw(&mut rng, c))
        .collect();
    let (unlabelled, hidden_labels) = unlabelled.into_iter().map(|e| (e.x, e.y)).unzip();
    Ok(Dataset {
        dims: 2,
        num_outputs: 2,
        label_kind: LabelKind::Class,
        labelled,
        unlabelled,
        hidden_labels,
        test,
    })
}

/// Clusters per valid attribute vector of `rules`; every emitted label is valid.
pub fn gen_attribute_task(rules: &Formula, num_attrs: usize, spec: &AttributeTaskSpec, seed: u64) -> Result<Dataset> {
    let valid = enumerate_valid(rules, num_attrs)?;
    gen_attribute_task_from_valid(&valid, spec, seed)
}

pub fn gen_attribute_task_from_valid(valid: &ValidSet, spec: &AttributeTaskSpec, seed: u64) -> Result<Dataset> {
    if valid.is_empty() {
        return Err(Error::Unsatisfiable);
    }
    if spec.clusters_per_label == 0 {
        return Err(Error::Parameter("clusters_per_label must be at least 1".into()));
    }
    let labels: Vec<Vec<bool>> = valid.iter().cloned().collect();
    let mut rng = seeded_rng(seed);
    let n_clusters = labels.len() * spec.clusters_per_label;
    let mut centers = cluster_centers(n_clusters, spec.dims, spec.separation, &mut rng)?;
    centers.shuffle(&mut rng);
    let per = spec.clusters_per_label;
    let draw = |rng: &mut SeededRng, l: usize| {
        let cluster = l * per + rng.random_range(0..per);
        Example {
            x: around(&centers[cluster], rng),
            y: Label::Attributes(labels[l].clone()),
        }
    };
    let labelled = (0..labels.len())
        .flat_map(|l| std::iter::repeat_n(l, spec.labelled_per_label))
        .collect::<Vec<_>>()
        .into_iter()
        .map(|l| draw(&mut rng, l))
        .collect();
    let unlabelled: Vec<Example> = balanced_classes(spec.unlabelled, labels.len(), &mut rng)
        .into_iter()
        .map(|l| draw(&mut rng, l))
        .collect();
    let test = balanced_classes(spec.test, labels.len(), &mut rng)
        .into_iter()
        .map(|l| draw(&mut rng, l))
        .collect();
    let (unlabelled, hidden_labels) = unlabelled.into_iter().map(|e| (e.x, e.y)).unzip();
    Ok(Dataset {
        dims: spec.dims,
        num_outputs: valid.num_attrs(),
        label_kind: LabelKind::Attributes,
        labelled,
        unlabelled,
        hidden_labels,
        test,
    })
}

/// Stratified split of a mixture sample stream: the first draws of each
/// class fill the labelled quota, later draws go to unlabelled then test.
pub fn gen_gauss1d(spec: &Gauss1dSpec, seed: u64) -> Result<Dataset> {
    spec.mixture.validate()?;
    let need_l = 2 * spec.labelled_per_class;
    let mut pool_size = (need_l * 4 + spec.unlabelled + spec.test).max(16);
    loop {
        let pool = gaussmix::sample(&spec.mixture, pool_size, seed)?;
        let mut counts = [0usize; 2];
        let mut labelled = Vec::with_capacity(need_l);
        let mut rest = Vec::new();
        for (x, y) in pool {
            if counts[y] < spec.labelled_per_class {
                counts[y] += 1;
                labelled.push(Example {
                    x: vec![x],
                    y: Label::Class(y),
                });
            } else if rest.len() < spec.unlabelled + spec.test {
                rest.push(Example {
                    x: vec![x],
                    y: Label::Class(y),
                });
            }
            if labelled.len() == need_l && rest.len() == spec.unlabelled + spec.test {
                break;
            }
        }
        if labelled.len() == need_l && rest.len() == spec.unlabelled + spec.test {
            let test = rest.split_off(spec.unlabelled);
            let (unlabelled, hidden_labels) = rest.into_iter().map(|e| (e.x, e.y)).unzip();
            return Ok(Dataset {
                dims: 1,
                num_outputs: 2,
                label_kind: LabelKind::Class,
                labelled,
                unlabelled,
                hidden_labels,
                test,
            });
        }
        pool_size *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(sep: f64) -> BlobSpec {
        BlobSpec {
            classes: 4,
            dims: 2,
            separation: sep,
            labelled_per_class: 4,
            unlabelled: 200,
            test: 400,
        }
    }

    #[test]
    fn centres_have_requested_separation() {
        let mut rng = seeded_rng(0);
        for (count, dims) in [(4, 2), (3, 5), (6, 3), (2, 1), (5, 2)] {
            let c = cluster_centers(count, dims, 3.0, &mut rng).unwrap();
            let mut min = f64::INFINITY;
            for i in 0..count {
                for j in i + 1..count {
                    min = min.min(dist(&c[i], &c[j]));
                }
            }
            assert!((min - 3.0).abs() < 1e-9, "{count} in {dims}-D: {min}");
        }
    }

    #[test]
    fn blobs_are_seeded_and_stratified() {
        let a = gen_blobs(&blobs(3.0), 7).unwrap();
        assert_eq!(a, gen_blobs(&blobs(3.0), 7).unwrap());
        assert_ne!(a, gen_blobs(&blobs(3.0), 8).unwrap());
        for c in 0..4 {
            assert_eq!(a.labelled.iter().filter(|e| e.y == Label::Class(c)).count(), 4);
        }
        assert_eq!(a.unlabelled.len(), 200);
        assert_eq!(a.hidden_labels.len(), 200);
        assert_eq!(a.test.len(), 400);
    }

    #[test]
    fn well_separated_blobs_are_nearest_mean_separable() {
        let spec = BlobSpec {
            test: 4000,
            ..blobs(10.0)
        };
        let data = gen_blobs(&spec, 1).unwrap();
        let mut rng = seeded_rng(1);
        let centers = cluster_centers(4, 2, 10.0, &mut rng).unwrap();
        let correct = data
            .test
            .iter()
            .filter(|e| {
                let best = (0..4)
                    .min_by(|&a, &b| dist(&e.x, &centers[a]).total_cmp(&dist(&e.x, &centers[b])))
                    .unwrap();
                e.y == Label::Class(best)
            })
            .count();
        assert!(correct as f64 / 4000.0 >= 0.999);
    }

    #[test]
    fn noiseless_moons_lie_on_half_circles() {
        let spec = MoonsSpec {
            noise: 0.0,
            labelled_per_class: 3,
            unlabelled: 100,
            test: 100,
        };
        let data = gen_two_moons(&spec, 2).unwrap();
        for e in data.test.iter().chain(&data.labelled) {
            let (cx, cy, up) = match e.y {
                Label::Class(0) => (0.0, 0.0, true),
                _ => (1.0, 0.5, false),
            };
            let r = ((e.x[0] - cx).powi(2) + (e.x[1] - cy).powi(2)).sqrt();
            assert!((r - 1.0).abs() < 1e-12);
            assert!(if up { e.x[1] >= -1e-12 } else { e.x[1] <= 0.5 + 1e-12 });
        }
        assert_eq!(data, gen_two_moons(&spec, 2).unwrap());
        let noisy = MoonsSpec {
            noise: 0.1,
            labelled_per_class: 3,
            unlabelled: 1000,
            test: 500,
        };
        let d = gen_two_moons(&noisy, 3).unwrap();
        assert_eq!((d.labelled.len(), d.unlabelled.len(), d.test.len()), (6, 1000, 500));
        assert!(gen_two_moons(&MoonsSpec { noise: -1.0, ..noisy }, 3).is_err());
    }

    #[test]
    fn attribute_labels_are_valid() {
        let attrs: Vec<String> = ["legs", "fins"].iter().map(|s| s.to_string()).collect();
        let rules = crate::logicc::parse_rules("legs -> !fins", &attrs).unwrap();
        let spec = AttributeTaskSpec {
            clusters_per_label: 2,
            dims: 2,
            separation: 3.0,
            labelled_per_label: 3,
            unlabelled: 300,
            test: 300,
        };
        let data = gen_attribute_task(&rules, 2, &spec, 4).unwrap();
        let all = data
            .labelled
            .iter()
            .map(|e| &e.y)
            .chain(&data.hidden_labels)
            .chain(data.test.iter().map(|e| &e.y));
        for y in all {
            let Label::Attributes(v) = y else { panic!("class label") };
            assert!(!(v[0] && v[1]));
        }
        assert_eq!(data.labelled.len(), 9);
        assert_eq!(data, gen_attribute_task(&rules, 2, &spec, 4).unwrap());
        assert_eq!(
            gen_attribute_task(&Formula::Const(false), 2, &spec, 4),
            Err(Error::Unsatisfiable)
        );
    }

    #[test]
    fn gauss1d_splits() {
        let spec = Gauss1dSpec {
            mixture: GaussianMixture1D::new(-1.0, 1.0, 1.0, 0.3).unwrap(),
            labelled_per_class: 5,
            unlabelled: 3000,
            test: 2000,
        };
        let d = gen_gauss1d(&spec, 11).unwrap();
        assert_eq!(d, gen_gauss1d(&spec, 11).unwrap());
        assert_eq!(d.labelled.len(), 10);
        assert_eq!(d.labelled.iter().filter(|e| e.y == Label::Class(1)).count(), 5);
        assert_eq!((d.unlabelled.len(), d.test.len()), (3000, 2000));
        let ones = d
            .hidden_labels
            .iter()
            .chain(d.test.iter().map(|e| &e.y))
            .filter(|y| **y == Label::Class(1))
            .count() as f64;
        let n = 5000.0;
        assert!((ones / n - 0.3).abs() < 3.0 * (0.3f64 * 0.7 / n).sqrt());
    }

    #[test]
    fn csv_layout() {
        let d = gen_blobs(
            &BlobSpec {
                classes: 2,
                dims: 2,
                separation: 2.0,
                labelled_per_class: 1,
                unlabelled: 1,
                test: 1,
            },
            0,
        )
        .unwrap();
        let csv = d.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x0,x1,label,split");
        assert_eq!(lines.len(), 5);
        assert!(lines[3].ends_with(",?,unlabelled"));
        assert!(lines[4].ends_with(",test"));
    }
}
