//! Revisioned plans and the edit algebra used to move between them.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{ScoreDelta, CRITERIA};
use crate::participants::ParticipantId;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub String);

impl ItemId {
    pub fn new(s: impl Into<String>) -> Self {
        ItemId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanItem {
    pub item_id: ItemId,
    pub text: String,
}

/// An ordered list of addressable items at a given revision.
///
/// Fresh item ids come from a per-plan counter that only moves forward, so
/// an id is never handed out twice within one lineage.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Plan {
    pub revision: u64,
    pub parent_revision: Option<u64>,
    pub items: Vec<PlanItem>,
    next_item: u64,
}

impl Plan {
    /// Revision 0 from the initial item texts.
    pub fn draft<S: AsRef<str>>(texts: &[S]) -> Result<Plan> {
        let mut plan = Plan { revision: 0, parent_revision: None, items: Vec::new(), next_item: 1 };
        for t in texts {
            let text = checked_text(t.as_ref())?;
            let id = plan.fresh_id();
            plan.items.push(PlanItem { item_id: id, text });
        }
        Ok(plan)
    }

    fn fresh_id(&mut self) -> ItemId {
        let id = ItemId(format!("i{}", self.next_item));
        self.next_item += 1;
        id
    }

    /// The id the next inserted item will receive.
    pub fn peek_next_id(&self) -> ItemId {
        ItemId(format!("i{}", self.next_item))
    }

    pub fn position(&self, id: &ItemId) -> Option<usize> {
        self.items.iter().position(|i| &i.item_id == id)
    }

    pub fn get(&self, id: &ItemId) -> Option<&PlanItem> {
        self.items.iter().find(|i| &i.item_id == id)
    }

    pub fn texts(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.text.as_str()).collect()
    }

    /// Item texts joined by newlines.
    pub fn full_text(&self) -> String {
        self.texts().join("\n")
    }

    /// SHA-256 over the revision and the canonical item array.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.revision.to_le_bytes());
        hasher.update(serde_json::to_vec(&self.items).expect("items serialize"));
        hasher.finalize().iter().map(|b| format!("{:02x}", b)).collect()
    }
}

fn checked_text(text: &str) -> Result<String> {
    if text.trim().is_empty() {
        return Err(Error::validation("plan item text must not be empty"));
    }
    if text.contains('\n') || text.contains('\r') {
        return Err(Error::validation("plan item text must be a single line"));
    }
    Ok(text.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Edit {
    InsertAfter { target_id: ItemId, new_text: String },
    InsertAtStart { new_text: String },
    Replace { target_id: ItemId, new_text: String },
    Delete { target_id: ItemId },
}

impl Edit {
    pub fn insert_after(target: &ItemId, text: impl Into<String>) -> Result<Edit> {
        Ok(Edit::InsertAfter { target_id: target.clone(), new_text: checked_text(&text.into())? })
    }

    pub fn insert_at_start(text: impl Into<String>) -> Result<Edit> {
        Ok(Edit::InsertAtStart { new_text: checked_text(&text.into())? })
    }

    pub fn replace(target: &ItemId, text: impl Into<String>) -> Result<Edit> {
        Ok(Edit::Replace { target_id: target.clone(), new_text: checked_text(&text.into())? })
    }

    pub fn delete(target: &ItemId) -> Edit {
        Edit::Delete { target_id: target.clone() }
    }

    pub fn target(&self) -> Option<&ItemId> {
        match self {
            Edit::InsertAfter { target_id, .. } | Edit::Replace { target_id, .. } | Edit::Delete { target_id } => {
                Some(target_id)
            }
            Edit::InsertAtStart { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Edit::InsertAfter { new_text, .. } | Edit::InsertAtStart { new_text } | Edit::Replace { new_text, .. } => {
                checked_text(new_text).map(|_| ())
            }
            Edit::Delete { .. } => Ok(()),
        }
    }
}

impl<'de> Deserialize<'de> for Edit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        #[serde(tag = "kind", rename_all = "snake_case")]
        enum Raw {
            InsertAfter { target_id: ItemId, new_text: String },
            InsertAtStart { new_text: String },
            Replace { target_id: ItemId, new_text: String },
            Delete { target_id: ItemId },
        }
        let edit = match Raw::deserialize(d)? {
            Raw::InsertAfter { target_id, new_text } => Edit::InsertAfter { target_id, new_text },
            Raw::InsertAtStart { new_text } => Edit::InsertAtStart { new_text },
            Raw::Replace { target_id, new_text } => Edit::Replace { target_id, new_text },
            Raw::Delete { target_id } => Edit::Delete { target_id },
        };
        edit.validate().map_err(D::Error::custom)?;
        Ok(edit)
    }
}

/// Applies one edit. The revision is left alone; proposals bump it.
pub fn apply_edit(plan: &Plan, edit: &Edit) -> Result<Plan> {
    let mut next = plan.clone();
    apply_in_place(&mut next, edit)?;
    Ok(next)
}

fn apply_in_place(plan: &mut Plan, edit: &Edit) -> Result<()> {
    let locate = |plan: &Plan, id: &ItemId| plan.position(id).ok_or_else(|| Error::StaleTarget(id.clone()));
    match edit {
        Edit::InsertAfter { target_id, new_text } => {
            let at = locate(plan, target_id)?;
            let item_id = plan.fresh_id();
            plan.items.insert(at + 1, PlanItem { item_id, text: new_text.clone() });
        }
        Edit::InsertAtStart { new_text } => {
            let item_id = plan.fresh_id();
            plan.items.insert(0, PlanItem { item_id, text: new_text.clone() });
        }
        Edit::Replace { target_id, new_text } => {
            let at = locate(plan, target_id)?;
            plan.items[at].text = new_text.clone();
        }
        Edit::Delete { target_id } => {
            let at = locate(plan, target_id)?;
            plan.items.remove(at);
        }
    }
    Ok(())
}

/// An edit that undoes `edit` when applied right after it.
pub fn inverse_edit(plan_before: &Plan, edit: &Edit) -> Result<Edit> {
    let locate = |id: &ItemId| plan_before.position(id).ok_or_else(|| Error::StaleTarget(id.clone()));
    Ok(match edit {
        Edit::InsertAfter { target_id, .. } => {
            locate(target_id)?;
            Edit::delete(&plan_before.peek_next_id())
        }
        Edit::InsertAtStart { .. } => Edit::delete(&plan_before.peek_next_id()),
        Edit::Replace { target_id, .. } => {
            let at = locate(target_id)?;
            Edit::Replace { target_id: target_id.clone(), new_text: plan_before.items[at].text.clone() }
        }
        Edit::Delete { target_id } => {
            let at = locate(target_id)?;
            let text = plan_before.items[at].text.clone();
            match at.checked_sub(1) {
                Some(prev) => Edit::InsertAfter { target_id: plan_before.items[prev].item_id.clone(), new_text: text },
                None => Edit::InsertAtStart { new_text: text },
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProposalId(pub String);

impl ProposalId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ProposalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A proposal before the engine has assigned it an id and author.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProposalDraft {
    pub edits: Vec<Edit>,
    pub rationale: String,
    pub claimed_deltas: [ScoreDelta; CRITERIA],
}

impl ProposalDraft {
    pub fn new(edits: Vec<Edit>, rationale: impl Into<String>, claimed_deltas: [ScoreDelta; CRITERIA]) -> Result<Self> {
        let draft = ProposalDraft { edits, rationale: rationale.into(), claimed_deltas };
        draft.validate()?;
        Ok(draft)
    }

    fn validate(&self) -> Result<()> {
        if self.edits.is_empty() {
            return Err(Error::validation("a proposal needs at least one edit"));
        }
        if self.rationale.trim().is_empty() {
            return Err(Error::validation("a proposal needs a rationale"));
        }
        if self.rationale.contains('\n') {
            return Err(Error::validation("rationale must be a single line"));
        }
        self.edits.iter().try_for_each(Edit::validate)
    }
}

impl<'de> Deserialize<'de> for ProposalDraft {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        struct Raw {
            edits: Vec<Edit>,
            rationale: String,
            claimed_deltas: [ScoreDelta; CRITERIA],
        }
        let raw = Raw::deserialize(d)?;
        ProposalDraft::new(raw.edits, raw.rationale, raw.claimed_deltas).map_err(D::Error::custom)
    }
}

/// A participant's atomic bundle of edits, the unit that gets voted on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub proposal_id: ProposalId,
    pub author: ParticipantId,
    pub edits: Vec<Edit>,
    pub rationale: String,
    pub claimed_deltas: [ScoreDelta; CRITERIA],
}

impl Proposal {
    pub fn from_draft(proposal_id: ProposalId, author: ParticipantId, draft: ProposalDraft) -> Self {
        Proposal {
            proposal_id,
            author,
            edits: draft.edits,
            rationale: draft.rationale,
            claimed_deltas: draft.claimed_deltas,
        }
    }

    pub fn draft(&self) -> ProposalDraft {
        ProposalDraft {
            edits: self.edits.clone(),
            rationale: self.rationale.clone(),
            claimed_deltas: self.claimed_deltas,
        }
    }
}

/// Applies every edit in order, all or nothing, and bumps the revision once.
pub fn apply_proposal(plan: &Plan, edits: &[Edit]) -> Result<Plan> {
    let mut next = plan.clone();
    for edit in edits {
        apply_in_place(&mut next, edit)?;
    }
    next.parent_revision = Some(plan.revision);
    next.revision = plan.revision + 1;
    Ok(next)
}
