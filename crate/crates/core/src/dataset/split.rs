//! Stratified splits. Rows sharing a group id (the antennas of one window)
//! always land on the same side.

use std::collections::HashMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::seed;

/// Groups in first-appearance order, each with its label and member rows.
fn groups_by_label(labels: &[usize], groups: &[u64]) -> Result<Vec<(usize, Vec<Vec<usize>>)>> {
    if labels.len() != groups.len() {
        return Err(Error::Shape { expected: labels.len(), got: groups.len() });
    }
    let mut slot: HashMap<u64, usize> = HashMap::new();
    let mut members: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, (&l, &g)) in labels.iter().zip(groups).enumerate() {
        let k = *slot.entry(g).or_insert_with(|| {
            members.push((l, Vec::new()));
            members.len() - 1
        });
        if members[k].0 != l {
            return Err(Error::Stratification(format!("group {g} mixes labels {} and {l}", members[k].0)));
        }
        members[k].1.push(i);
    }
    let mut by_label: Vec<(usize, Vec<Vec<usize>>)> = Vec::new();
    let mut label_slot: HashMap<usize, usize> = HashMap::new();
    for (l, rows) in members {
        let k = *label_slot.entry(l).or_insert_with(|| {
            by_label.push((l, Vec::new()));
            by_label.len() - 1
        });
        by_label[k].1.push(rows);
    }
    by_label.sort_by_key(|(l, _)| *l);
    Ok(by_label)
}

/// Test indices of `k` folds; each class is spread round-robin over the folds.
pub fn stratified_kfold(labels: &[usize], groups: &[u64], k: usize, seed_value: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::config(format!("need at least 2 folds, got {k}")));
    }
    let by_label = groups_by_label(labels, groups)?;
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for (label, mut members) in by_label {
        if members.len() < k {
            return Err(Error::Stratification(format!(
                "class {label} has {} groups, fewer than {k} folds",
                members.len()
            )));
        }
        members.shuffle(&mut seed::rng(seed::derive(seed_value, &[label as u64])));
        for (j, rows) in members.into_iter().enumerate() {
            folds[(offset + j) % k].extend(rows);
        }
        offset += 1;
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// `(train, test)` with about `test_fraction` of every class held out.
pub fn stratified_holdout(
    labels: &[usize],
    groups: &[u64],
    test_fraction: f64,
    seed_value: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::config(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut members) in groups_by_label(labels, groups)? {
        if members.len() < 2 {
            return Err(Error::Stratification(format!("class {label} has a single group")));
        }
        members.shuffle(&mut seed::rng(seed::derive(seed_value, &[label as u64])));
        let n_test = ((members.len() as f64 * test_fraction).round() as usize).clamp(1, members.len() - 1);
        for (j, rows) in members.into_iter().enumerate() {
            if j < n_test {
                test.extend(rows);
            } else {
                train.extend(rows);
            }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitScheme {
    Holdout { test_fraction: f64 },
    KFold { folds: usize },
}

/// `(train, test)` index pairs, grouped by window seed and stratified by label.
pub fn split(m: &FeatureMatrix, scheme: SplitScheme, seed_value: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let groups: Vec<u64> = m.meta().iter().map(|r| r.seed).collect();
    match scheme {
        SplitScheme::Holdout { test_fraction } => {
            Ok(vec![stratified_holdout(m.labels(), &groups, test_fraction, seed_value)?])
        }
        SplitScheme::KFold { folds } => {
            let tests = stratified_kfold(m.labels(), &groups, folds, seed_value)?;
            Ok(tests
                .into_iter()
                .map(|test| {
                    let mut in_test = vec![false; m.len()];
                    test.iter().for_each(|&i| in_test[i] = true);
                    ((0..m.len()).filter(|&i| !in_test[i]).collect(), test)
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<u64> {
        (0..n as u64).collect()
    }

    #[test]
    fn kfold_partitions_and_balances() {
        let labels: Vec<usize> = (0..103).map(|i| i % 4).collect();
        let folds = stratified_kfold(&labels, &ids(103), 5, 9).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..103).collect::<Vec<_>>());
        for class in 0..4 {
            let counts: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == class).count()).collect();
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            assert!(hi - lo <= 1, "{counts:?}");
        }
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1, "{sizes:?}");
        assert_eq!(folds, stratified_kfold(&labels, &ids(103), 5, 9).unwrap());
    }

    #[test]
    fn groups_stay_together() {
        let labels: Vec<usize> = (0..40).map(|i| (i / 2) % 2).collect();
        let groups: Vec<u64> = (0..40).map(|i| (i / 2) as u64).collect();
        let folds = stratified_kfold(&labels, &groups, 5, 1).unwrap();
        for f in &folds {
            for &i in f {
                assert!(f.contains(&(i ^ 1)));
            }
        }
        let (train, test) = stratified_holdout(&labels, &groups, 0.2, 3).unwrap();
        assert_eq!(train.len() + test.len(), 40);
        assert_eq!(test.len(), 8);
        for &i in &test {
            assert!(test.contains(&(i ^ 1)));
        }
    }

    #[test]
    fn kfold_on_64_classes_of_ten() {
        let labels: Vec<usize> = (0..640).map(|i| i % 64).collect();
        let m = FeatureMatrix::from_labeled(1, vec![0.0; 640], labels.clone()).unwrap();
        let folds = split(&m, SplitScheme::KFold { folds: 5 }, 2).unwrap();
        for (train, test) in &folds {
            assert_eq!(test.len(), 128);
            assert_eq!(train.len(), 512);
            for c in 0..64 {
                assert_eq!(test.iter().filter(|&&i| labels[i] == c).count(), 2);
            }
        }
        let (train, test) = &split(&m, SplitScheme::Holdout { test_fraction: 0.2 }, 2).unwrap()[0];
        assert_eq!((train.len(), test.len()), (512, 128));
    }

    #[test]
    fn too_few_members_is_reported() {
        let labels = vec![0, 0, 0, 1, 1];
        assert!(matches!(stratified_kfold(&labels, &ids(5), 3, 0), Err(Error::Stratification(_))));
        assert!(matches!(stratified_holdout(&[0, 1, 1], &ids(3), 0.5, 0), Err(Error::Stratification(_))));
        assert!(stratified_kfold(&labels, &[0, 0, 1, 1, 2], 2, 0).is_err());
    }
}
