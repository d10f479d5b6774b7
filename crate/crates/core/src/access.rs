// Copyright 2026 The qss Authors
// SPDX-License-Identifier: Apache-2.0

//! Access structures over participants `1..=K`, stored as bitmasks
//! (bit `k-1` set means participant `k` is in the set).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{QssError, Result};

pub const MAX_PARTICIPANTS: usize = 20;

/// Participant subset as a bitmask.
pub type Subset = u32;

/// Converts 1-based participant indices to a mask.
pub fn subset_from_participants(k: usize, participants: &[usize]) -> Result<Subset> {
    let mut mask = 0;
    for &p in participants {
        if p == 0 || p > k {
            return Err(QssError::InvalidStructure(format!(
                "participant {p} outside 1..={k}"
            )));
        }
        mask |= 1 << (p - 1);
    }
    Ok(mask)
}

/// 1-based participant indices of a mask, ascending.
pub fn participants(mask: Subset) -> Vec<usize> {
    (0..32).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect()
}

/// Complement of `set` in `[K]`.
pub fn complement(k: usize, set: Subset) -> Subset {
    full_set(k) & !set
}

pub fn full_set(k: usize) -> Subset {
    if k >= 32 {
        u32::MAX
    } else {
        (1u32 << k) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub upward_closed: bool,
    pub no_disjoint_qualified: bool,
    pub self_dual: bool,
}

impl StructureReport {
    /// Upward closure plus the no-cloning condition.
    pub fn is_valid(&self) -> bool {
        self.upward_closed && self.no_disjoint_qualified
    }
}

/// The family of qualified subsets of `[K]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessStructure {
    participants: usize,
    qualified: BTreeSet<Subset>,
}

impl AccessStructure {
    /// `{T : |T| ≥ t}`; requires `2t > K`.
    pub fn from_threshold(t: usize, k: usize) -> Result<Self> {
        check_participants(k)?;
        if t == 0 || t > k {
            return Err(QssError::InvalidStructure(format!("threshold {t} for {k} participants")));
        }
        if 2 * t <= k {
            return Err(QssError::CloningViolation { t, k });
        }
        let qualified = (0..=full_set(k))
            .filter(|m| m.count_ones() as usize >= t)
            .collect();
        Ok(Self {
            participants: k,
            qualified,
        })
    }

    /// Takes the listed sets verbatim (no closure is applied), so that
    /// malformed families can be represented and reported by [`validate`].
    ///
    /// [`validate`]: AccessStructure::validate
    pub fn from_qualified(k: usize, sets: &[Vec<usize>]) -> Result<Self> {
        check_participants(k)?;
        let qualified = sets
            .iter()
            .map(|s| subset_from_participants(k, s))
            .collect::<Result<_>>()?;
        Ok(Self {
            participants: k,
            qualified,
        })
    }

    pub fn participants(&self) -> usize {
        self.participants
    }

    pub fn is_qualified(&self, set: Subset) -> bool {
        self.qualified.contains(&set)
    }

    /// Qualified sets in increasing mask order.
    pub fn qualified(&self) -> impl Iterator<Item = Subset> + '_ {
        self.qualified.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.qualified.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qualified.is_empty()
    }

    pub fn full(&self) -> Subset {
        full_set(self.participants)
    }

    /// Exhaustive checks over all `2^K` subsets.
    pub fn validate(&self) -> StructureReport {
        let k = self.participants;
        let n = 1usize << k;
        let mut member = vec![false; n];
        for &m in &self.qualified {
            member[m as usize] = true;
        }

        let upward_closed = self
            .qualified
            .iter()
            .all(|&m| (0..k).all(|b| member[(m | 1 << b) as usize]));

        // contains_qualified[m]: some qualified set is a subset of m
        let mut contains_qualified = member.clone();
        for b in 0..k {
            for m in 0..n {
                if m >> b & 1 == 1 && contains_qualified[m ^ (1 << b)] {
                    contains_qualified[m] = true;
                }
            }
        }
        let full = self.full();
        let no_disjoint_qualified = self
            .qualified
            .iter()
            .all(|&m| !contains_qualified[complement(k, m) as usize]);

        let self_dual = (0..=full).all(|m| member[m as usize] != member[(full & !m) as usize]);

        StructureReport {
            upward_closed,
            no_disjoint_qualified,
            self_dual,
        }
    }

    /// Errors unless upward closed and free of disjoint qualified pairs.
    pub fn ensure_valid(&self) -> Result<StructureReport> {
        let report = self.validate();
        if !report.upward_closed {
            return Err(QssError::InvalidStructure("not upward closed".into()));
        }
        if !report.no_disjoint_qualified {
            return Err(QssError::InvalidStructure(
                "two disjoint qualified sets violate no-cloning".into(),
            ));
        }
        Ok(report)
    }

    /// Inclusion-minimal qualified sets.
    pub fn minimal_qualified(&self) -> Vec<Subset> {
        self.qualified
            .iter()
            .copied()
            .filter(|&m| {
                !self
                    .qualified
                    .iter()
                    .any(|&other| other != m && other & m == other)
            })
            .collect()
    }

    /// Inclusion-maximal non-qualified sets (including the empty set when
    /// every singleton is qualified).
    pub fn maximal_non_qualified(&self) -> Vec<Subset> {
        let k = self.participants;
        (0..=self.full())
            .filter(|&m| !self.is_qualified(m))
            .filter(|&m| (0..k).all(|b| m >> b & 1 == 1 || self.is_qualified(m | 1 << b)))
            .collect()
    }

    /// Qualified sets used as compound-channel members: the minimal ones
    /// plus the full set.
    pub fn minimal_and_full(&self) -> Vec<Subset> {
        let mut sets = self.minimal_qualified();
        let full = self.full();
        if self.is_qualified(full) && !sets.contains(&full) {
            sets.push(full);
        }
        sets
    }
}

fn check_participants(k: usize) -> Result<()> {
    if k == 0 {
        return Err(QssError::InvalidStructure("no participants".into()));
    }
    if k > MAX_PARTICIPANTS {
        return Err(QssError::ParticipantCapExceeded(k));
    }
    Ok(())
}

/// JSON descriptor: `{"K": 3, "threshold": 2}` or
/// `{"K": 2, "qualified": [[1], [2], [1, 2]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessDescriptor {
    #[serde(rename = "K")]
    pub participants: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualified: Option<Vec<Vec<usize>>>,
}

impl AccessDescriptor {
    pub fn build(&self) -> Result<AccessStructure> {
        match (&self.threshold, &self.qualified) {
            (Some(t), None) => AccessStructure::from_threshold(*t, self.participants),
            (None, Some(sets)) => AccessStructure::from_qualified(self.participants, sets),
            _ => Err(QssError::InvalidStructure(
                "descriptor needs exactly one of \"threshold\" or \"qualified\"".into(),
            )),
        }
    }
}

impl std::str::FromStr for AccessStructure {
    type Err = QssError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_str::<AccessDescriptor>(s)?.build()
    }
}
