//! Named point groups with lock and annotation state.
//!
//! Group membership is a partition: a point belongs to at most one group.
//! Every mutating method either applies completely or returns an error and
//! leaves the registry untouched.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Selection;

/// Maximum number of groups a registry holds (one histogram panel each).
pub const MAX_GROUPS: usize = 20;

/// Display colors handed out to new groups.
pub const PALETTE: [&str; MAX_GROUPS] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94", "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5",
];

pub type GroupId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("registry already holds {MAX_GROUPS} groups")]
    GroupLimitExceeded,
    #[error("group {0} is locked")]
    GroupLocked(GroupId),
    #[error("unknown group {0}")]
    UnknownGroup(GroupId),
    #[error("point {point} out of range for a dataset of {point_count} points")]
    UnknownPoint { point: usize, point_count: usize },
}

impl GroupError {
    pub fn code(&self) -> &'static str {
        match self {
            GroupError::GroupLimitExceeded => "GroupLimitExceeded",
            GroupError::GroupLocked(_) => "GroupLocked",
            GroupError::UnknownGroup(_) => "UnknownGroup",
            GroupError::UnknownPoint { .. } => "UnknownPoint",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointGroup {
    pub group_id: GroupId,
    pub name: String,
    pub color: String,
    pub members: BTreeSet<usize>,
    pub locked: bool,
    #[serde(default)]
    pub annotation: Option<String>,
}

/// Result of moving a selection into a group.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignOutcome {
    /// Points now in the target group.
    pub assigned: BTreeSet<usize>,
    /// Points left alone because another, locked group owns them.
    pub skipped: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RegistryParts")]
pub struct GroupRegistry {
    point_count: usize,
    next_id: GroupId,
    active_group: Option<GroupId>,
    groups: Vec<PointGroup>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryParts {
    point_count: usize,
    next_id: GroupId,
    active_group: Option<GroupId>,
    groups: Vec<PointGroup>,
}

impl TryFrom<RegistryParts> for GroupRegistry {
    type Error = String;

    fn try_from(p: RegistryParts) -> Result<Self, String> {
        GroupRegistry::from_parts(p.point_count, p.next_id, p.active_group, p.groups)
    }
}

impl GroupRegistry {
    pub fn new(point_count: usize) -> GroupRegistry {
        GroupRegistry {
            point_count,
            next_id: 0,
            active_group: None,
            groups: Vec::new(),
        }
    }

    /// Rebuild a registry from parts, checking every invariant.
    pub fn from_parts(
        point_count: usize,
        next_id: GroupId,
        active_group: Option<GroupId>,
        mut groups: Vec<PointGroup>,
    ) -> Result<GroupRegistry, String> {
        groups.sort_by_key(|g| g.group_id);
        if groups.len() > MAX_GROUPS {
            return Err(format!("{} groups exceed the limit of {MAX_GROUPS}", groups.len()));
        }
        let mut seen = BTreeSet::new();
        for w in groups.windows(2) {
            if w[0].group_id == w[1].group_id {
                return Err(format!("duplicate group id {}", w[0].group_id));
            }
        }
        for g in &groups {
            if g.group_id >= next_id {
                return Err(format!("group id {} not below next_id {next_id}", g.group_id));
            }
            for &m in &g.members {
                if m >= point_count {
                    return Err(format!(
                        "member {m} of group {} out of range ({point_count} points)",
                        g.group_id
                    ));
                }
                if !seen.insert(m) {
                    return Err(format!("point {m} belongs to more than one group"));
                }
            }
        }
        if let Some(a) = active_group {
            if !groups.iter().any(|g| g.group_id == a) {
                return Err(format!("active group {a} does not exist"));
            }
        }
        Ok(GroupRegistry {
            point_count,
            next_id,
            active_group,
            groups,
        })
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn next_id(&self) -> GroupId {
        self.next_id
    }

    pub fn groups(&self) -> &[PointGroup] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn active_group(&self) -> Option<GroupId> {
        self.active_group
    }

    pub fn get(&self, id: GroupId) -> Result<&PointGroup, GroupError> {
        self.groups
            .iter()
            .find(|g| g.group_id == id)
            .ok_or(GroupError::UnknownGroup(id))
    }

    fn index_of(&self, id: GroupId) -> Result<usize, GroupError> {
        self.groups
            .iter()
            .position(|g| g.group_id == id)
            .ok_or(GroupError::UnknownGroup(id))
    }

    /// Group owning `point`, if any.
    pub fn group_of(&self, point: usize) -> Option<&PointGroup> {
        self.groups.iter().find(|g| g.members.contains(&point))
    }

    fn check_points(&self, sel: &Selection) -> Result<(), GroupError> {
        match sel.iter().next_back() {
            Some(&max) if max >= self.point_count => Err(GroupError::UnknownPoint {
                point: max,
                point_count: self.point_count,
            }),
            _ => Ok(()),
        }
    }

    /// Append a new empty group with the first palette color not in use and
    /// make it active.
    pub fn create_group(&mut self, name: impl Into<String>) -> Result<GroupId, GroupError> {
        if self.groups.len() >= MAX_GROUPS {
            return Err(GroupError::GroupLimitExceeded);
        }
        let color = PALETTE
            .iter()
            .find(|c| !self.groups.iter().any(|g| g.color == **c))
            .expect("a free color exists below the group limit");
        let id = self.next_id;
        self.next_id += 1;
        self.groups.push(PointGroup {
            group_id: id,
            name: name.into(),
            color: color.to_string(),
            members: BTreeSet::new(),
            locked: false,
            annotation: None,
        });
        self.active_group = Some(id);
        Ok(id)
    }

    pub fn set_active(&mut self, id: GroupId) -> Result<(), GroupError> {
        self.index_of(id)?;
        self.active_group = Some(id);
        Ok(())
    }

    /// Move the selected points into `id`. Points owned by other unlocked
    /// groups are moved; points owned by locked groups are skipped.
    pub fn assign_selection(&mut self, id: GroupId, sel: &Selection) -> Result<AssignOutcome, GroupError> {
        let target = self.index_of(id)?;
        if self.groups[target].locked {
            return Err(GroupError::GroupLocked(id));
        }
        self.check_points(sel)?;

        let mut outcome = AssignOutcome::default();
        for &p in sel {
            match self.groups.iter().position(|g| g.members.contains(&p)) {
                Some(owner) if owner == target => {
                    outcome.assigned.insert(p);
                }
                Some(owner) if self.groups[owner].locked => {
                    outcome.skipped.insert(p);
                }
                Some(owner) => {
                    self.groups[owner].members.remove(&p);
                    self.groups[target].members.insert(p);
                    outcome.assigned.insert(p);
                }
                None => {
                    self.groups[target].members.insert(p);
                    outcome.assigned.insert(p);
                }
            }
        }
        Ok(outcome)
    }

    pub fn remove_from_group(&mut self, id: GroupId, sel: &Selection) -> Result<(), GroupError> {
        let target = self.index_of(id)?;
        if self.groups[target].locked {
            return Err(GroupError::GroupLocked(id));
        }
        let group = &mut self.groups[target];
        group.members.retain(|m| !sel.contains(m));
        Ok(())
    }

    /// Replace the annotation. An empty string clears it. Allowed on locked
    /// groups.
    pub fn annotate_group(&mut self, id: GroupId, text: &str) -> Result<(), GroupError> {
        let idx = self.index_of(id)?;
        self.groups[idx].annotation = if text.is_empty() { None } else { Some(text.to_string()) };
        Ok(())
    }

    pub fn set_locked(&mut self, id: GroupId, locked: bool) -> Result<(), GroupError> {
        let idx = self.index_of(id)?;
        self.groups[idx].locked = locked;
        Ok(())
    }

    /// Points not in any group.
    pub fn ungrouped(&self) -> Selection {
        let grouped: BTreeSet<usize> = self.groups.iter().flat_map(|g| g.members.iter().copied()).collect();
        (0..self.point_count).filter(|p| !grouped.contains(p)).collect()
    }
}
