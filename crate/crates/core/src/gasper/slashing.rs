use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ValidatorId, Vote};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffenseKind {
    DoubleVote,
    SurroundVote,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlashingOffense {
    pub kind: OffenseKind,
    pub validator: ValidatorId,
    pub votes: (Vote, Vote),
}

/// Every FFG double vote (distinct votes, same target epoch) and surround
/// vote (`s1 < s2 < t2 < t1`) among `votes`, grouped per validator in input
/// order.
pub fn detect_slashing<'a>(votes: impl IntoIterator<Item = &'a Vote>) -> Vec<SlashingOffense> {
    let mut by_validator: BTreeMap<ValidatorId, Vec<&Vote>> = BTreeMap::new();
    for v in votes {
        let list = by_validator.entry(v.validator).or_default();
        if !list.contains(&v) {
            list.push(v);
        }
    }

    let mut offenses = Vec::new();
    for (validator, list) in by_validator {
        for (i, a) in list.iter().enumerate() {
            for b in &list[i + 1..] {
                let kind = if a.ffg_target.epoch == b.ffg_target.epoch {
                    Some(OffenseKind::DoubleVote)
                } else if surrounds(a, b) || surrounds(b, a) {
                    Some(OffenseKind::SurroundVote)
                } else {
                    None
                };
                if let Some(kind) = kind {
                    offenses.push(SlashingOffense {
                        kind,
                        validator,
                        votes: ((*a).clone(), (*b).clone()),
                    });
                }
            }
        }
    }
    offenses
}

fn surrounds(outer: &Vote, inner: &Vote) -> bool {
    outer.ffg_source.epoch < inner.ffg_source.epoch
        && inner.ffg_source.epoch < inner.ffg_target.epoch
        && inner.ffg_target.epoch < outer.ffg_target.epoch
}
