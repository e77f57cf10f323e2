//! Ensemble marginal and the total = aleatoric + epistemic entropy split.
//!
//! Members are weighted uniformly. Per instance, the total is the entropy of
//! the averaged distribution, the aleatoric part is the mean member entropy,
//! and the epistemic part is the mean KL divergence from each member to the
//! average.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::prediction::{EnsemblePredictions, Matrix, PredictionSet, RawPredictions, PROB_FLOOR};
use crate::scores::entropy_nats;

/// Uniform average of the member probabilities, labels copied.
pub fn marginal(ens: &EnsemblePredictions) -> Result<PredictionSet> {
    let first = &ens.members()[0];
    if ens.len() == 1 {
        return Ok(first.clone());
    }
    let m = ens.len() as f64;
    let mut probs = vec![0.0; first.n() * first.k()];
    for member in ens.members() {
        for (acc, &p) in probs.iter_mut().zip(member.probs()) {
            *acc += p;
        }
    }
    probs.iter_mut().for_each(|p| *p /= m);
    PredictionSet::validate(RawPredictions {
        probs: Some(Matrix::new(first.n(), first.k(), probs)?),
        labels: first.labels().iter().map(|&l| l as i64).collect(),
        class_names: first.class_names().map(<[String]>::to_vec),
        provenance: first.provenance().map(<[_]>::to_vec),
        ..Default::default()
    })
}

/// `KL(p || q)` in nats. Zero entries of `p` contribute nothing; other terms
/// floor both probabilities at [`PROB_FLOOR`] inside the logarithm.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi.max(PROB_FLOOR).ln() - qi.max(PROB_FLOOR).ln()))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionMeans {
    pub total: f64,
    pub aleatoric: f64,
    pub epistemic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub total: Vec<f64>,
    pub aleatoric: Vec<f64>,
    pub epistemic: Vec<f64>,
    pub means: DecompositionMeans,
    /// Whether values are divided by `ln K`.
    pub normalized: bool,
}

/// Decomposition with every component normalized by `ln K`.
pub fn decompose(ens: &EnsemblePredictions) -> Result<DecompositionResult> {
    decompose_with(ens, true)
}

/// Decomposition in nats when `normalized` is false.
pub fn decompose_with(ens: &EnsemblePredictions, normalized: bool) -> Result<DecompositionResult> {
    let mix = marginal(ens)?;
    let scale = if normalized {
        (ens.k() as f64).ln()
    } else {
        1.0
    };
    let m = ens.len() as f64;
    let n = ens.n();
    let mut total = Vec::with_capacity(n);
    let mut aleatoric = Vec::with_capacity(n);
    let mut epistemic = Vec::with_capacity(n);
    for i in 0..n {
        let q = mix.row(i);
        let mut h = 0.0;
        let mut kl = 0.0;
        for member in ens.members() {
            let p = member.row(i);
            h += entropy_nats(p);
            kl += kl_divergence(p, q);
        }
        total.push(entropy_nats(q) / scale);
        aleatoric.push(h / m / scale);
        epistemic.push((kl / m / scale).max(0.0));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let means = DecompositionMeans {
        total: mean(&total),
        aleatoric: mean(&aleatoric),
        epistemic: mean(&epistemic),
    };
    Ok(DecompositionResult {
        total,
        aleatoric,
        epistemic,
        means,
        normalized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;

    fn member(rows: &[&[f64]], labels: &[usize]) -> PredictionSet {
        PredictionSet::from_probs(Matrix::from_rows(rows).unwrap(), labels.to_vec()).unwrap()
    }

    #[test]
    fn single_member_is_its_own_marginal() {
        let a = member(&[&[0.7, 0.2, 0.1], &[0.3, 0.3, 0.4]], &[0, 2]);
        let ens = EnsemblePredictions::new(vec![a.clone()]).unwrap();
        assert_eq!(marginal(&ens).unwrap(), a);
        let d = decompose(&ens).unwrap();
        assert!(d.epistemic.iter().all(|&e| e == 0.0));
        assert_eq!(d.total, d.aleatoric);
    }

    #[test]
    fn disagreeing_one_hot_members() {
        let ens = EnsemblePredictions::new(vec![
            member(&[&[1.0, 0.0]], &[0]),
            member(&[&[0.0, 1.0]], &[0]),
        ])
        .unwrap();
        assert_eq!(marginal(&ens).unwrap().row(0), &[0.5, 0.5]);
        let d = decompose(&ens).unwrap();
        assert_eq!(d.aleatoric[0], 0.0);
        assert!((d.total[0] - 1.0).abs() < 1e-15);
        assert!((d.epistemic[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn marginal_is_rowwise_mean() {
        let members = vec![
            member(&[&[0.2, 0.5, 0.3], &[0.9, 0.05, 0.05]], &[1, 0]),
            member(&[&[0.6, 0.1, 0.3], &[0.1, 0.1, 0.8]], &[1, 0]),
            member(&[&[0.1, 0.1, 0.8], &[0.4, 0.4, 0.2]], &[1, 0]),
        ];
        let ens = EnsemblePredictions::new(members.clone()).unwrap();
        let mix = marginal(&ens).unwrap();
        for i in 0..2 {
            for k in 0..3 {
                let mut acc = 0.0;
                for m in &members {
                    acc += m.row(i)[k];
                }
                assert!((mix.row(i)[k] - acc / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn misaligned_members_rejected() {
        let a = member(&[&[0.5, 0.5]], &[0]);
        let b = member(&[&[0.5, 0.5], &[0.5, 0.5]], &[0, 0]);
        assert!(matches!(
            EnsemblePredictions::new(vec![a, b]),
            Err(Error::EnsembleMisaligned(_))
        ));
    }

    #[test]
    fn nat_variant_scales_by_log_k() {
        let ens = EnsemblePredictions::new(vec![
            member(&[&[0.6, 0.3, 0.1]], &[0]),
            member(&[&[0.2, 0.2, 0.6]], &[0]),
        ])
        .unwrap();
        let norm = decompose(&ens).unwrap();
        let nats = decompose_with(&ens, false).unwrap();
        let ln3 = 3f64.ln();
        assert!((nats.total[0] / ln3 - norm.total[0]).abs() < 1e-15);
        assert!((nats.epistemic[0] / ln3 - norm.epistemic[0]).abs() < 1e-15);
        assert!(!nats.normalized);
    }

    fn ensemble(m: usize, k: usize, n: usize) -> impl Strategy<Value = Vec<Vec<Vec<f64>>>> {
        let row = prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..1.0], k)
            .prop_filter_map("mass", |v| {
                let s: f64 = v.iter().sum();
                (s > 1e-3).then(|| v.iter().map(|x| x / s).collect::<Vec<f64>>())
            });
        prop::collection::vec(prop::collection::vec(row, n), m)
    }

    fn build(rows: &[Vec<Vec<f64>>]) -> EnsemblePredictions {
        let n = rows[0].len();
        let labels: Vec<usize> = (0..n).map(|i| i % rows[0][0].len()).collect();
        EnsemblePredictions::new(
            rows.iter()
                .map(|r| PredictionSet::from_probs(Matrix::from_rows(r).unwrap(), labels.clone()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn additive_and_non_negative(rows in (1usize..6, 2usize..6).prop_flat_map(|(m, k)| ensemble(m, k, 5))) {
            let d = decompose(&build(&rows)).unwrap();
            for i in 0..d.total.len() {
                prop_assert!(d.total[i] >= 0.0 && d.aleatoric[i] >= 0.0 && d.epistemic[i] >= 0.0);
                prop_assert!((d.total[i] - d.aleatoric[i] - d.epistemic[i]).abs() < 1e-9);
            }
        }

        #[test]
        fn member_order_and_duplication_do_not_matter(rows in ensemble(3, 4, 4)) {
            let base = decompose(&build(&rows)).unwrap();
            let mut reversed = rows.clone();
            reversed.reverse();
            let rev = decompose(&build(&reversed)).unwrap();
            let doubled: Vec<_> = rows.iter().chain(rows.iter()).cloned().collect();
            let dup = decompose(&build(&doubled)).unwrap();
            for other in [rev, dup] {
                for i in 0..base.total.len() {
                    prop_assert!((base.total[i] - other.total[i]).abs() < 1e-12);
                    prop_assert!((base.aleatoric[i] - other.aleatoric[i]).abs() < 1e-12);
                    prop_assert!((base.epistemic[i] - other.epistemic[i]).abs() < 1e-12);
                }
            }
        }
    }
}
