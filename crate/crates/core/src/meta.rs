//! Meta-validation: predict which technique will benefit tuning on a nested
//! chronological holdout, then deploy the winner per nominal confidence.

use std::fmt;
use std::str::FromStr;

use crate::audit::Probe;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::split::holdout_split;
use crate::tuning::{evaluation_split, tune_in_frame, BenefitTag, TuningReport, TuningSettings};
use crate::validation::TechniqueId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetaTechnique {
    Meta25_75,
    Meta50_50,
    Meta75_25,
}

impl MetaTechnique {
    pub const ALL: [MetaTechnique; 3] = [Self::Meta25_75, Self::Meta50_50, Self::Meta75_25];

    pub fn train_fraction(self) -> f64 {
        match self {
            Self::Meta25_75 => 0.25,
            Self::Meta50_50 => 0.50,
            Self::Meta75_25 => 0.75,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Meta25_75 => "Meta-25/75",
            Self::Meta50_50 => "Meta-50/50",
            Self::Meta75_25 => "Meta-75/25",
        }
    }

    /// Audit scope for the inner frame.
    pub fn inner_scope(self) -> &'static str {
        match self {
            Self::Meta25_75 => "meta 25/75 inner",
            Self::Meta50_50 => "meta 50/50 inner",
            Self::Meta75_25 => "meta 75/25 inner",
        }
    }
}

impl fmt::Display for MetaTechnique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MetaTechnique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "");
        match key.trim_start_matches("meta") {
            "25/75" => Ok(Self::Meta25_75),
            "50/50" => Ok(Self::Meta50_50),
            "75/25" => Ok(Self::Meta75_25),
            _ => Err(Error::InvalidParameter(format!("unknown meta technique `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaChoice {
    pub nc: f64,
    pub chosen_technique: TechniqueId,
    pub predicted_tag: BenefitTag,
    pub actual_tag: BenefitTag,
    pub selected_mtry: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaOutcome {
    pub meta_technique: MetaTechnique,
    pub choices: Vec<MetaChoice>,
    /// The inner tuning experiment on train′ / test′.
    pub inner: TuningReport,
}

/// Highest benefit rank wins; ties go to the earliest technique in the
/// canonical order.
pub fn choose_technique(candidates: &[(TechniqueId, BenefitTag)]) -> Option<(TechniqueId, BenefitTag)> {
    candidates.iter().copied().min_by(|a, b| {
        b.1.benefit_rank()
            .cmp(&a.1.benefit_rank())
            .then(a.0.canonical_index().cmp(&b.0.canonical_index()))
    })
}

/// Runs the inner experiment on `train` and resolves actual tags from an
/// already computed outer report (which must cover every technique).
pub fn run_meta_with_outer(
    train: &Dataset,
    meta: MetaTechnique,
    techniques: &[TechniqueId],
    ncs: &[f64],
    settings: &TuningSettings,
    outer: &TuningReport,
    probe: Probe<'_>,
) -> Result<MetaOutcome> {
    let split = holdout_split(train.len(), meta.train_fraction())
        .map_err(|e| Error::too_few(meta.label(), e.to_string()))?;
    let inner_train = train.subset(&split.train);
    let inner_test = train.subset(&split.test);
    let inner = tune_in_frame(
        &inner_train,
        &inner_test,
        techniques,
        ncs,
        settings,
        probe.with_scope(meta.inner_scope()),
    )
    .map_err(|e| match e {
        Error::TooFewRows { layer, detail } => Error::TooFewRows {
            layer: format!("{} inner: {layer}", meta.label()),
            detail,
        },
        other => other,
    })?;

    let mut choices = Vec::with_capacity(ncs.len());
    for &nc in ncs {
        let candidates: Vec<(TechniqueId, BenefitTag)> = techniques
            .iter()
            .map(|&t| (t, inner.outcome(t, nc).expect("inner covers technique").tag))
            .collect();
        let (chosen, predicted_tag) = choose_technique(&candidates)
            .ok_or_else(|| Error::InvalidParameter("no techniques".into()))?;
        let deployed = outer.outcome(chosen, nc).ok_or_else(|| {
            Error::InvalidParameter(format!("outer report lacks {chosen} at nc {nc}"))
        })?;
        choices.push(MetaChoice {
            nc,
            chosen_technique: chosen,
            predicted_tag,
            actual_tag: deployed.tag,
            selected_mtry: deployed.selected_mtry,
        });
    }
    Ok(MetaOutcome {
        meta_technique: meta,
        choices,
        inner,
    })
}

/// Full meta-validation for one meta technique. The composite is deployed
/// only for the techniques actually chosen, each inside the evaluation frame.
pub fn run_meta(
    data: &Dataset,
    meta: MetaTechnique,
    techniques: &[TechniqueId],
    ncs: &[f64],
    settings: &TuningSettings,
    probe: Probe<'_>,
) -> Result<MetaOutcome> {
    let (train, test) = evaluation_split(data)?;
    let outer = tune_in_frame(&train, &test, techniques, ncs, settings, probe)?;
    run_meta_with_outer(&train, meta, techniques, ncs, settings, &outer, probe)
}

/// All three meta techniques sharing one outer report.
pub fn run_meta_all(
    data: &Dataset,
    techniques: &[TechniqueId],
    ncs: &[f64],
    settings: &TuningSettings,
    probe: Probe<'_>,
) -> Result<(TuningReport, Vec<MetaOutcome>)> {
    let (train, test) = evaluation_split(data)?;
    let outer = tune_in_frame(&train, &test, techniques, ncs, settings, probe)?;
    let metas = MetaTechnique::ALL
        .iter()
        .map(|&m| run_meta_with_outer(&train, m, techniques, ncs, settings, &outer, probe))
        .collect::<Result<Vec<_>>>()?;
    Ok((outer, metas))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_labels() {
        for m in MetaTechnique::ALL {
            assert_eq!(m.label().parse::<MetaTechnique>().unwrap(), m);
        }
        assert_eq!("75/25".parse::<MetaTechnique>().unwrap(), MetaTechnique::Meta75_25);
        assert!("60/40".parse::<MetaTechnique>().is_err());
    }

    #[test]
    fn ties_go_to_canonical_order() {
        let c = [
            (TechniqueId::Tscv, BenefitTag::Nsd),
            (TechniqueId::Bootstrap, BenefitTag::Nsd),
            (TechniqueId::Loo, BenefitTag::Nsd),
        ];
        assert_eq!(choose_technique(&c).unwrap().0, TechniqueId::Bootstrap);
        let c = [
            (TechniqueId::Bootstrap, BenefitTag::Tu),
            (TechniqueId::Tshvcv, BenefitTag::Du),
            (TechniqueId::Tscv, BenefitTag::Du),
        ];
        assert_eq!(choose_technique(&c).unwrap(), (TechniqueId::Tscv, BenefitTag::Du));
        assert!(choose_technique(&[]).is_none());
    }
}
