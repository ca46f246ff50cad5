use serde::Serialize;

use super::params::ModelParams;
use super::spec::ModelKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedFeature {
    pub feature: usize,
    pub name: String,
    pub weight: f64,
}

/// The most positive and most negative weights of one class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopWeights {
    pub disease: String,
    pub positive: Vec<WeightedFeature>,
    pub negative: Vec<WeightedFeature>,
}

/// The `m` largest and `m` smallest weights of the logistic-regression row
/// for `disease`. Ties are broken by feature index.
pub fn top_weights(params: &ModelParams, disease: &str, m: usize) -> Result<TopWeights> {
    if params.spec.kind != ModelKind::LogisticRegression {
        return Err(Error::invalid_arg("top_weights needs a logistic regression model"));
    }
    let class = params
        .label_index
        .iter()
        .position(|l| l == disease)
        .ok_or_else(|| Error::UnknownLabel(disease.to_string()))?;
    let w = params
        .tensor("out.weight")
        .ok_or_else(|| Error::Artifact("missing out.weight".into()))?;
    let column: Vec<(usize, f64)> = (0..w.rows).map(|j| (j, w.data[j * w.cols + class])).collect();
    let pick = |mut v: Vec<(usize, f64)>, descending: bool| {
        v.sort_by(|a, b| {
            let ord = if descending {
                b.1.total_cmp(&a.1)
            } else {
                a.1.total_cmp(&b.1)
            };
            ord.then(a.0.cmp(&b.0))
        });
        v.into_iter()
            .take(m)
            .map(|(feature, weight)| WeightedFeature {
                feature,
                name: params.feature_name(feature),
                weight,
            })
            .collect()
    };
    Ok(TopWeights {
        disease: disease.to_string(),
        positive: pick(column.clone(), true),
        negative: pick(column, false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ehr::SymptomUniverse;
    use crate::models::spec::ModelSpec;

    fn lr() -> ModelParams {
        let mut p = ModelParams::zeros(&ModelSpec::logistic_regression(6, 2))
            .unwrap()
            .with_labels(vec!["uti".into(), "flu".into()])
            .unwrap();
        p.attach_universe(&SymptomUniverse::from_names(["dysuria", "fever", "cough"]).unwrap())
            .unwrap();
        p
    }

    #[test]
    fn zero_weights_follow_index_order() {
        let t = top_weights(&lr(), "uti", 2).unwrap();
        let idx = |v: &[WeightedFeature]| v.iter().map(|f| f.feature).collect::<Vec<_>>();
        assert_eq!(idx(&t.positive), vec![0, 1]);
        assert_eq!(idx(&t.negative), vec![0, 1]);
    }

    #[test]
    fn known_extremes() {
        let mut p = lr();
        // column 0 is "uti"
        for (j, w) in [(0, 3.0), (4, 1.5), (1, -2.0), (5, -0.5)] {
            p.tensors[0].data[j * 2] = w;
        }
        let t = top_weights(&p, "uti", 2).unwrap();
        let names = |v: &[WeightedFeature]| v.iter().map(|f| f.name.clone()).collect::<Vec<_>>();
        assert_eq!(names(&t.positive), vec!["dysuria", "NOT fever"]);
        assert_eq!(names(&t.negative), vec!["fever", "NOT cough"]);
        assert!(matches!(top_weights(&p, "gout", 1), Err(Error::UnknownLabel(_))));
        let mlp = ModelParams::zeros(&ModelSpec::mlp(6, 2)).unwrap();
        assert!(top_weights(&mlp, "class_0", 1).is_err());
    }
}
