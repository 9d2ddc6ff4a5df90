//! Business-network model files: declared participant, asset and
//! transaction types with their field schemas.
//!
//! ```text
//! # comment
//! network bibac
//! participant Person {
//!   participantId: string required
//!   orgId: string
//! }
//! transaction GiveAccess {
//!   assetId: string required
//!   viewers: stringList required
//! }
//! ```

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FieldType {
    String,
    Integer,
    Boolean,
    StringList,
    /// A JSON object (free-form metadata). Must still encode canonically.
    Object,
}

impl FieldType {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldType::String => "string",
            FieldType::Integer => "integer",
            FieldType::Boolean => "boolean",
            FieldType::StringList => "stringList",
            FieldType::Object => "object",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "string" => FieldType::String,
            "integer" => FieldType::Integer,
            "boolean" => FieldType::Boolean,
            "stringList" => FieldType::StringList,
            "object" => FieldType::Object,
            _ => return None,
        })
    }

    pub fn accepts(self, v: &Value) -> bool {
        match self {
            FieldType::String => v.is_string(),
            FieldType::Integer => v.is_i64() || v.is_u64(),
            FieldType::Boolean => v.is_boolean(),
            FieldType::StringList => v.as_array().is_some_and(|a| a.iter().all(Value::is_string)),
            FieldType::Object => v.is_object(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FieldDecl {
    pub name: String,
    pub field_type: FieldType,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TypeDecl {
    pub type_name: String,
    pub fields: Vec<FieldDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TxDecl {
    pub tx_type: String,
    pub payload_fields: Vec<FieldDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NetworkModel {
    pub network_name: String,
    pub participant_decls: Vec<TypeDecl>,
    pub asset_decls: Vec<TypeDecl>,
    pub tx_decls: Vec<TxDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("SYNTAX_ERROR at line {line}: {message}")]
    SyntaxError { line: usize, message: String },
    #[error("DUPLICATE_TYPE: `{name}` is declared more than once")]
    DuplicateType { name: String },
    #[error("UNKNOWN_FIELD_TYPE: `{name}` at line {line}")]
    UnknownFieldType { name: String, line: usize },
    #[error("DUPLICATE_FIELD: `{name}` at line {line}")]
    DuplicateField { name: String, line: usize },
    #[error("cannot read model file: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationReason {
    Missing,
    WrongType,
    Undeclared,
    NotAnObject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub reason: ViolationReason,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PayloadError {
    #[error("UNKNOWN_TX_TYPE")]
    UnknownTxType,
    #[error("payload violates schema: {0:?}")]
    Violations(Vec<Violation>),
}

/// Standard model shipped for the identity-based network.
pub const BIBAC_MODEL: &str = include_str!("../models/bibac.model");
/// Standard model shipped for the role-based network.
pub const BRBAC_MODEL: &str = include_str!("../models/brbac.model");
/// Both networks on one ledger.
pub const COMBINED_MODEL: &str = include_str!("../models/combined.model");

#[derive(Clone, Copy)]
enum DeclKind {
    Participant,
    Asset,
    Transaction,
}

struct OpenDecl {
    kind: DeclKind,
    name: String,
    fields: Vec<FieldDecl>,
    seen: HashSet<String>,
    line: usize,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl NetworkModel {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    /// Parse model text. Line numbers in errors are 1-based.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut model = NetworkModel {
            network_name: String::new(),
            participant_decls: Vec::new(),
            asset_decls: Vec::new(),
            tx_decls: Vec::new(),
        };
        let mut names: HashSet<String> = HashSet::new();
        let mut open: Option<OpenDecl> = None;
        let mut last_line = 0;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            last_line = line;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let syntax = |message: &str| ModelError::SyntaxError { line, message: message.to_owned() };

            if let Some(decl) = open.as_mut() {
                if content == "}" {
                    let decl = open.take().expect("open declaration");
                    close(&mut model, &mut names, decl)?;
                    continue;
                }
                let (name, rest) = content.split_once(':').ok_or_else(|| syntax("expected `<field>: <type> [required]`"))?;
                let name = name.trim();
                if !is_ident(name) {
                    return Err(syntax("invalid field name"));
                }
                let mut words = rest.split_whitespace();
                let ty = words.next().ok_or_else(|| syntax("missing field type"))?;
                let required = match words.next() {
                    None => false,
                    Some("required") => true,
                    Some(_) => return Err(syntax("expected `required` or end of line")),
                };
                if words.next().is_some() {
                    return Err(syntax("trailing tokens after field"));
                }
                let field_type =
                    FieldType::parse(ty).ok_or_else(|| ModelError::UnknownFieldType { name: ty.to_owned(), line })?;
                if !decl.seen.insert(name.to_owned()) {
                    return Err(ModelError::DuplicateField { name: name.to_owned(), line });
                }
                decl.fields.push(FieldDecl { name: name.to_owned(), field_type, required });
                continue;
            }

            let mut words = content.split_whitespace();
            let keyword = words.next().unwrap_or_default();
            if keyword == "network" {
                let name = words.next().ok_or_else(|| syntax("missing network name"))?;
                if words.next().is_some() || !model.network_name.is_empty() {
                    return Err(syntax("network name must be declared once, as a single word"));
                }
                model.network_name = name.to_owned();
                continue;
            }
            let kind = match keyword {
                "participant" => DeclKind::Participant,
                "asset" => DeclKind::Asset,
                "transaction" => DeclKind::Transaction,
                _ => return Err(syntax("expected `network`, `participant`, `asset` or `transaction`")),
            };
            let name = words.next().ok_or_else(|| syntax("missing type name"))?;
            if !is_ident(name) {
                return Err(syntax("invalid type name"));
            }
            let decl = OpenDecl { kind, name: name.to_owned(), fields: Vec::new(), seen: HashSet::new(), line };
            match (words.next(), words.next(), words.next()) {
                (Some("{"), None, _) => open = Some(decl),
                (Some("{"), Some("}"), None) | (Some("{}"), None, _) => close(&mut model, &mut names, decl)?,
                _ => return Err(syntax("expected `{` after type name")),
            }
        }
        if let Some(decl) = open {
            return Err(ModelError::SyntaxError {
                line: last_line.max(decl.line),
                message: format!("unterminated declaration `{}`", decl.name),
            });
        }
        Ok(model)
    }

    /// Canonical text form; `parse(render(m)) == m`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.network_name.is_empty() {
            out.push_str(&format!("network {}\n", self.network_name));
        }
        let mut block = |keyword: &str, name: &str, fields: &[FieldDecl]| {
            out.push('\n');
            out.push_str(&format!("{keyword} {name} {{\n"));
            for f in fields {
                out.push_str(&format!("  {}: {}", f.name, f.field_type.as_str()));
                if f.required {
                    out.push_str(" required");
                }
                out.push('\n');
            }
            out.push_str("}\n");
        };
        for d in &self.participant_decls {
            block("participant", &d.type_name, &d.fields);
        }
        for d in &self.asset_decls {
            block("asset", &d.type_name, &d.fields);
        }
        for d in &self.tx_decls {
            block("transaction", &d.tx_type, &d.payload_fields);
        }
        out
    }

    pub fn tx_decl(&self, tx_type: &str) -> Option<&TxDecl> {
        self.tx_decls.iter().find(|d| d.tx_type == tx_type)
    }

    pub fn declares_tx(&self, tx_type: &str) -> bool {
        self.tx_decl(tx_type).is_some()
    }

    /// Ok iff `tx_type` is declared, required fields are present with
    /// their declared types, and no undeclared fields appear.
    pub fn validate_payload(&self, tx_type: &str, payload: &Value) -> Result<(), PayloadError> {
        let decl = self.tx_decl(tx_type).ok_or(PayloadError::UnknownTxType)?;
        let Some(obj) = payload.as_object() else {
            return Err(PayloadError::Violations(vec![Violation {
                field: String::new(),
                reason: ViolationReason::NotAnObject,
            }]));
        };
        let mut violations = Vec::new();
        for f in &decl.payload_fields {
            match obj.get(&f.name) {
                None if f.required => {
                    violations.push(Violation { field: f.name.clone(), reason: ViolationReason::Missing })
                }
                None => {}
                Some(v) if !f.field_type.accepts(v) => {
                    violations.push(Violation { field: f.name.clone(), reason: ViolationReason::WrongType })
                }
                Some(_) => {}
            }
        }
        let mut undeclared: Vec<&String> =
            obj.keys().filter(|k| !decl.payload_fields.iter().any(|f| &f.name == *k)).collect();
        undeclared.sort();
        violations.extend(
            undeclared
                .into_iter()
                .map(|k| Violation { field: k.clone(), reason: ViolationReason::Undeclared }),
        );
        if violations.is_empty() {
            Ok(())
        } else {
            Err(PayloadError::Violations(violations))
        }
    }
}

fn close(model: &mut NetworkModel, names: &mut HashSet<String>, decl: OpenDecl) -> Result<(), ModelError> {
    if !names.insert(decl.name.clone()) {
        return Err(ModelError::DuplicateType { name: decl.name });
    }
    match decl.kind {
        DeclKind::Participant => model.participant_decls.push(TypeDecl { type_name: decl.name, fields: decl.fields }),
        DeclKind::Asset => model.asset_decls.push(TypeDecl { type_name: decl.name, fields: decl.fields }),
        DeclKind::Transaction => model.tx_decls.push(TxDecl { tx_type: decl.name, payload_fields: decl.fields }),
    }
    Ok(())
}

impl fmt::Display for NetworkModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
