use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Category, EvalError};
use crate::corpus::LabeledExample;

/// Balanced training/CV set plus the held-out remainder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub balanced: Vec<LabeledExample>,
    pub holdout: Vec<LabeledExample>,
    /// Category sizes of the input.
    pub counts: BTreeMap<Category, usize>,
    pub rng_seed: u64,
}

fn count(examples: &[LabeledExample]) -> BTreeMap<Category, usize> {
    let mut c: BTreeMap<Category, usize> = Category::ALL.iter().map(|&k| (k, 0)).collect();
    for ex in examples {
        *c.get_mut(&Category::of(ex)).unwrap() += 1;
    }
    c
}

fn describe(c: &BTreeMap<Category, usize>) -> String {
    c.iter().map(|(k, v)| format!("{k} {v}")).collect::<Vec<_>>().join(", ")
}

impl DatasetBundle {
    pub fn balanced_counts(&self) -> BTreeMap<Category, usize> {
        count(&self.balanced)
    }

    pub fn holdout_counts(&self) -> BTreeMap<Category, usize> {
        count(&self.holdout)
    }

    /// Examples per category in the balanced set.
    pub fn per_category(&self) -> usize {
        self.balanced.len() / 4
    }
}

/// Samples `|Hard+|` examples from every category into the balanced set;
/// everything else goes to the holdout. Hard+ is therefore fully consumed.
pub fn build_bundle(all: &[LabeledExample], rng_seed: u64) -> Result<DatasetBundle, EvalError> {
    let counts = count(all);
    let n = counts[&Category::HardPos];
    if n == 0 {
        return Err(EvalError::Categories {
            counts: describe(&counts),
            reason: "Hard+ is empty".into(),
        });
    }
    if let Some((k, v)) = counts.iter().find(|(_, &v)| v < n) {
        return Err(EvalError::Categories {
            counts: describe(&counts),
            reason: format!("{k} has {v} examples, fewer than Hard+ ({n})"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut balanced = Vec::with_capacity(4 * n);
    let mut holdout = Vec::with_capacity(all.len() - 4 * n);
    for cat in Category::ALL {
        let members: Vec<&LabeledExample> = all.iter().filter(|e| Category::of(e) == cat).collect();
        let mut chosen = vec![false; members.len()];
        let mut picks = index::sample(&mut rng, members.len(), n).into_vec();
        picks.sort_unstable();
        for i in picks {
            chosen[i] = true;
        }
        for (ex, take) in members.into_iter().zip(chosen) {
            if take {
                balanced.push(ex.clone());
            } else {
                holdout.push(ex.clone());
            }
        }
    }
    Ok(DatasetBundle {
        balanced,
        holdout,
        counts,
        rng_seed,
    })
}

/// Index split for one fold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold: each category is shuffled and dealt round-robin into
/// the folds, the dealing position carrying over between categories, so fold
/// sizes differ by at most one.
pub fn kfold<T>(items: &[T], category: impl Fn(&T) -> Category, k: usize, rng_seed: u64) -> Result<Vec<Fold>, EvalError> {
    if k == 0 || k > items.len() {
        return Err(EvalError::InvalidFolds { k, n: items.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut assignment = vec![0usize; items.len()];
    let mut next = 0usize;
    for cat in Category::ALL {
        let mut members: Vec<usize> = (0..items.len()).filter(|&i| category(&items[i]) == cat).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % k;
            next += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train) = (0..items.len()).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::corpus::{Label, LabeledExample};
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    pub(crate) fn examples(hp: usize, hn: usize, ep: usize, en: usize) -> Vec<LabeledExample> {
        let at = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        let mut out = Vec::new();
        for i in 0..hp {
            out.push(LabeledExample::annotated(format!("hp{i}"), Label::Positive, None, at));
        }
        for i in 0..hn {
            out.push(LabeledExample::annotated(format!("hn{i}"), Label::Negative, None, at));
        }
        for i in 0..ep {
            out.push(LabeledExample::seed(format!("ep{i}"), at));
        }
        for i in 0..en {
            out.push(LabeledExample::anti_seed(format!("en{i}"), at));
        }
        out
    }

    fn counts_vec(c: &BTreeMap<Category, usize>) -> Vec<usize> {
        Category::ALL.iter().map(|k| c[k]).collect()
    }

    #[test]
    fn synthetic_counts() {
        let b = build_bundle(&examples(10, 20, 30, 40), 1).unwrap();
        assert_eq!(b.balanced.len(), 40);
        assert_eq!(counts_vec(&b.balanced_counts()), vec![10; 4]);
        assert_eq!(counts_vec(&b.holdout_counts()), vec![0, 10, 20, 30]);
        let even = build_bundle(&examples(5, 5, 5, 5), 1).unwrap();
        assert!(even.holdout.is_empty());
    }

    #[test]
    fn scarcity_errors() {
        let e = build_bundle(&examples(10, 9, 30, 40), 1).unwrap_err();
        assert!(e.to_string().contains("Hard- has 9"), "{e}");
        assert!(build_bundle(&examples(0, 9, 30, 40), 1).is_err());
    }

    #[test]
    fn kfold_shapes() {
        let ex = examples(10, 10, 10, 10);
        let folds = kfold(&ex, Category::of, 5, 3).unwrap();
        for f in &folds {
            let c = count(&f.test.iter().map(|&i| ex[i].clone()).collect::<Vec<_>>());
            assert_eq!(counts_vec(&c), vec![2; 4]);
            assert_eq!(f.train.len(), 32);
        }
        let ten = examples(3, 3, 2, 2);
        assert!(kfold(&ten, Category::of, 5, 0).unwrap().iter().all(|f| f.test.len() == 2));
        assert!(kfold(&ten, Category::of, 11, 0).is_err());
    }

    proptest! {
        #[test]
        fn bundle_invariants(hp in 1usize..15, extra in proptest::collection::vec(0usize..20, 3), seed in any::<u64>()) {
            let ex = examples(hp, hp + extra[0], hp + extra[1], hp + extra[2]);
            let b = build_bundle(&ex, seed).unwrap();
            prop_assert_eq!(counts_vec(&b.balanced_counts()), vec![hp; 4]);
            prop_assert_eq!(b.holdout_counts()[&Category::HardPos], 0);
            let mut ids: Vec<&str> = b.balanced.iter().chain(&b.holdout).map(|e| e.patent_id.as_str()).collect();
            prop_assert_eq!(ids.len(), ex.len());
            ids.sort_unstable();
            ids.dedup();
            prop_assert_eq!(ids.len(), ex.len());
            prop_assert_eq!(build_bundle(&ex, seed).unwrap(), b);
        }

        #[test]
        fn kfold_partitions(n in 1usize..80, k in 1usize..8, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let ex = examples(n / 4 + n % 4, n / 4, n / 4, n / 4);
            let folds = kfold(&ex, Category::of, k, seed).unwrap();
            let mut seen = vec![0; ex.len()];
            for f in &folds {
                for &i in &f.test { seen[i] += 1; }
                prop_assert_eq!(f.train.len() + f.test.len(), ex.len());
            }
            prop_assert!(seen.iter().all(|&s| s == 1));
            let sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
