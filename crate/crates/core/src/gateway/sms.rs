//! Text-message commands and the XML replies sent back to the handset.
//!
//! ```text
//! GIVE <assetId> VIEW u1[,u2...] [EDIT u3[,u4...]]
//! REVOKE <assetId> u1[,u2...]
//! REQUEST <assetId> VIEW|EDIT
//! CHECK <assetId> <userId>
//! VIEW <assetId>
//! ```
//!
//! Keywords are case-insensitive; identifiers are kept as typed.

use serde_json::{json, Value};

use crate::network::valid_id;

/// Longest accepted message body, in characters.
pub const MAX_BODY_CHARS: usize = 1600;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmsCommand {
    Give { asset_id: String, viewers: Vec<String>, editors: Vec<String> },
    Revoke { asset_id: String, users: Vec<String> },
    Request { asset_id: String, level: String },
    Check { asset_id: String, user_id: String },
    View { asset_id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("PARSE_ERROR")]
pub struct ParseError;

fn id(token: Option<&str>) -> Result<String, ParseError> {
    token.filter(|t| valid_id(t)).map(str::to_owned).ok_or(ParseError)
}

fn id_list(token: Option<&str>) -> Result<Vec<String>, ParseError> {
    token.ok_or(ParseError)?.split(',').map(|t| id(Some(t))).collect()
}

fn keyword(token: Option<&str>, expected: &str) -> Result<(), ParseError> {
    match token {
        Some(t) if t.eq_ignore_ascii_case(expected) => Ok(()),
        _ => Err(ParseError),
    }
}

impl SmsCommand {
    pub fn parse(body: &str) -> Result<Self, ParseError> {
        if body.chars().count() > MAX_BODY_CHARS {
            return Err(ParseError);
        }
        let mut tokens = body.split_whitespace();
        let verb = tokens.next().ok_or(ParseError)?.to_ascii_uppercase();
        let asset_id = id(tokens.next())?;
        let command = match verb.as_str() {
            "GIVE" => {
                keyword(tokens.next(), "VIEW")?;
                let viewers = id_list(tokens.next())?;
                let editors = match tokens.next() {
                    None => Vec::new(),
                    some => {
                        keyword(some, "EDIT")?;
                        id_list(tokens.next())?
                    }
                };
                SmsCommand::Give { asset_id, viewers, editors }
            }
            "REVOKE" => SmsCommand::Revoke { asset_id, users: id_list(tokens.next())? },
            "REQUEST" => {
                let level = tokens.next().ok_or(ParseError)?.to_ascii_uppercase();
                if level != "VIEW" && level != "EDIT" {
                    return Err(ParseError);
                }
                SmsCommand::Request { asset_id, level }
            }
            "CHECK" => SmsCommand::Check { asset_id, user_id: id(tokens.next())? },
            "VIEW" => SmsCommand::View { asset_id },
            _ => return Err(ParseError),
        };
        if tokens.next().is_some() {
            return Err(ParseError);
        }
        Ok(command)
    }

    pub fn asset_id(&self) -> &str {
        match self {
            SmsCommand::Give { asset_id, .. }
            | SmsCommand::Revoke { asset_id, .. }
            | SmsCommand::Request { asset_id, .. }
            | SmsCommand::Check { asset_id, .. }
            | SmsCommand::View { asset_id } => asset_id,
        }
    }

    /// Transaction payload equivalent to this command. `check_tx` names
    /// the decision transaction to use for CHECK.
    pub fn to_tx(&self, check_tx: &str) -> (String, Value) {
        match self {
            SmsCommand::Give { asset_id, viewers, editors } => (
                "GiveAccess".into(),
                json!({"assetId": asset_id, "viewers": viewers, "editors": editors}),
            ),
            SmsCommand::Revoke { asset_id, users } => {
                ("RevokeAccess".into(), json!({"assetId": asset_id, "users": users}))
            }
            SmsCommand::Request { asset_id, level } => {
                ("RequestAccess".into(), json!({"assetId": asset_id, "level": level}))
            }
            SmsCommand::Check { asset_id, user_id } => {
                (check_tx.to_owned(), json!({"assetId": asset_id, "userId": user_id}))
            }
            SmsCommand::View { asset_id } => ("ViewAsset".into(), json!({"assetId": asset_id})),
        }
    }
}

fn escape_xml(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn xml_reply(text: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?><Response><Message>{}</Message></Response>",
        escape_xml(text)
    )
}
