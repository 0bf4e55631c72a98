//! Line-oriented response grammar spoken by remote participants.
//!
//! ```text
//! SCORES: <s1> <s2> <s3>
//! EDIT <n>: INSERT_AFTER <item-id> :: <text>
//! EDIT <n>: INSERT_AT_START :: <text>
//! EDIT <n>: REPLACE <item-id> :: <text>
//! EDIT <n>: DELETE <item-id>
//! RATIONALE <n>: <text>
//! DELTAS <n>: <d1> <d2> <d3>
//! VOTE: <proposal-id> | HOLD_STEADY
//! ABSTAIN
//! ```
//!
//! `<n>` numbers the proposal within a response. One proposal per response
//! is accepted, so `<n>` is always 1. Blank lines are ignored.

use crate::error::{Error, Result};
use crate::model::{ScoreDelta, ScoreValue, ScoreVector, CRITERIA};
use crate::plan::{apply_proposal, Edit, ItemId, Plan, ProposalDraft};
use crate::session::{Choice, Phase};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedResponse {
    Scores(ScoreVector),
    Proposal(ProposalDraft),
    Ballot(Choice),
    Abstain,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

pub fn render_scores(scores: &ScoreVector) -> String {
    format!("SCORES: {}\n", scores)
}

pub fn render_ballot(choice: &Choice) -> String {
    format!("VOTE: {}\n", choice)
}

pub fn render_proposal(draft: &ProposalDraft) -> String {
    let mut out = String::new();
    for edit in &draft.edits {
        let body = match edit {
            Edit::InsertAfter { target_id, new_text } => format!("INSERT_AFTER {} :: {}", target_id, new_text),
            Edit::InsertAtStart { new_text } => format!("INSERT_AT_START :: {}", new_text),
            Edit::Replace { target_id, new_text } => format!("REPLACE {} :: {}", target_id, new_text),
            Edit::Delete { target_id } => format!("DELETE {}", target_id),
        };
        out.push_str(&format!("EDIT 1: {}\n", body));
    }
    out.push_str(&format!("RATIONALE 1: {}\n", draft.rationale));
    let [a, b, c] = draft.claimed_deltas;
    out.push_str(&format!("DELTAS 1: {} {} {}\n", a, b, c));
    out
}

/// Splits `TAG <n>: rest`, checking the ordinal.
fn numbered<'a>(line: &'a str, tag: &str, no: usize) -> Result<Option<&'a str>> {
    let Some(rest) = line.strip_prefix(tag).and_then(|r| r.strip_prefix(' ')) else {
        return Ok(None);
    };
    let (n, body) = rest.split_once(':').ok_or_else(|| err(no, format!("{} line lacks ':'", tag)))?;
    if n.trim() != "1" {
        return Err(err(no, format!("{} ordinal must be 1, found `{}`", tag, n.trim())));
    }
    Ok(Some(body.trim()))
}

fn parse_text(text: &str, no: usize) -> Result<String> {
    let text = text.trim();
    if text.is_empty() {
        return Err(err(no, "empty text"));
    }
    Ok(text.to_string())
}

fn parse_item_id(tok: &str, no: usize) -> Result<ItemId> {
    if tok.is_empty() || tok.contains(char::is_whitespace) {
        return Err(err(no, format!("bad item id `{}`", tok)));
    }
    Ok(ItemId::new(tok))
}

fn parse_edit(body: &str, no: usize) -> Result<Edit> {
    let (op, rest) = body.split_once(' ').unwrap_or((body, ""));
    let with_text = |rest: &str| -> Result<(String, String)> {
        let (head, text) = rest.split_once("::").ok_or_else(|| err(no, format!("{} needs `:: <text>`", op)))?;
        Ok((head.trim().to_string(), parse_text(text, no)?))
    };
    match op {
        "INSERT_AFTER" => {
            let (id, text) = with_text(rest)?;
            Ok(Edit::InsertAfter { target_id: parse_item_id(&id, no)?, new_text: text })
        }
        "INSERT_AT_START" => {
            let (head, text) = with_text(rest)?;
            if !head.is_empty() {
                return Err(err(no, "INSERT_AT_START takes no item id"));
            }
            Ok(Edit::InsertAtStart { new_text: text })
        }
        "REPLACE" => {
            let (id, text) = with_text(rest)?;
            Ok(Edit::Replace { target_id: parse_item_id(&id, no)?, new_text: text })
        }
        "DELETE" => Ok(Edit::Delete { target_id: parse_item_id(rest.trim(), no)? }),
        other => Err(err(no, format!("unknown edit operation `{}`", other))),
    }
}

fn parse_triple<T>(body: &str, no: usize, parse: impl Fn(&str) -> Result<T>) -> Result<[T; CRITERIA]> {
    let parts: Vec<&str> = body.split_whitespace().collect();
    if parts.len() != CRITERIA {
        return Err(err(no, format!("expected {} values, found {}", CRITERIA, parts.len())));
    }
    let mut out = Vec::with_capacity(CRITERIA);
    for p in parts {
        out.push(parse(p).map_err(|e| err(no, e.to_string()))?);
    }
    Ok(out.try_into().ok().expect("length checked"))
}

/// Parses a full response for `phase`. Proposals are dry-run against `plan`
/// so edits naming unknown items are rejected here.
pub fn parse_response(raw: &str, phase: Phase, plan: &Plan) -> Result<ParsedResponse> {
    let lines: Vec<(usize, &str)> =
        raw.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty()).collect();
    if phase.required_capability().is_none() {
        return Err(err(0, format!("no response is expected in phase {}", phase)));
    }
    let Some(&(first_no, first)) = lines.first() else {
        return Err(err(0, "empty response"));
    };
    if first == "ABSTAIN" {
        if let Some(&(no, _)) = lines.get(1) {
            return Err(err(no, "nothing may follow ABSTAIN"));
        }
        return Ok(ParsedResponse::Abstain);
    }
    let single = |lines: &[(usize, &str)]| -> Result<()> {
        match lines.get(1) {
            Some(&(no, _)) => Err(err(no, "unexpected extra line")),
            None => Ok(()),
        }
    };
    match phase {
        Phase::AwaitingScores => {
            let body = first.strip_prefix("SCORES:").ok_or_else(|| err(first_no, "expected `SCORES:` or `ABSTAIN`"))?;
            single(&lines)?;
            let scores = parse_triple(body, first_no, |t| t.parse::<ScoreValue>())?;
            Ok(ParsedResponse::Scores(ScoreVector(scores)))
        }
        Phase::AwaitingVotes => {
            let body = first.strip_prefix("VOTE:").ok_or_else(|| err(first_no, "expected `VOTE:` or `ABSTAIN`"))?;
            single(&lines)?;
            let choice = body.trim().parse::<Choice>().map_err(|e| err(first_no, e.to_string()))?;
            Ok(ParsedResponse::Ballot(choice))
        }
        Phase::AwaitingProposals => parse_proposal(&lines, plan).map(ParsedResponse::Proposal),
        _ => unreachable!("acting phases handled above"),
    }
}

fn parse_proposal(lines: &[(usize, &str)], plan: &Plan) -> Result<ProposalDraft> {
    let mut edits = Vec::new();
    let mut idx = 0;
    while let Some(&(no, line)) = lines.get(idx) {
        match numbered(line, "EDIT", no)? {
            Some(body) => edits.push((no, parse_edit(body, no)?)),
            None => break,
        }
        idx += 1;
    }
    let next = |idx: usize| lines.get(idx).copied().unwrap_or((lines.last().map_or(0, |l| l.0) + 1, ""));
    if edits.is_empty() {
        let (no, _) = next(0);
        return Err(err(no, "expected `EDIT 1:` or `ABSTAIN`"));
    }
    let (no, line) = next(idx);
    let rationale = numbered(line, "RATIONALE", no)?.ok_or_else(|| err(no, "expected `RATIONALE 1:`"))?;
    let rationale = parse_text(rationale, no)?;
    let (no, line) = next(idx + 1);
    let deltas = numbered(line, "DELTAS", no)?.ok_or_else(|| err(no, "expected `DELTAS 1:`"))?;
    let deltas = parse_triple(deltas, no, |t| t.parse::<ScoreDelta>())?;
    if let Some(&(no, _)) = lines.get(idx + 2) {
        return Err(err(no, "unexpected line after DELTAS"));
    }

    // dry-run so a stale id is pinned to the line that names it
    let mut probe = plan.clone();
    for (no, edit) in &edits {
        probe = apply_proposal(&probe, std::slice::from_ref(edit)).map_err(|e| err(*no, e.to_string()))?;
    }
    let edits = edits.into_iter().map(|(_, e)| e).collect();
    ProposalDraft::new(edits, rationale, deltas).map_err(|e| err(no, e.to_string()))
}
