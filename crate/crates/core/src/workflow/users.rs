use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    SuperUser,
    LeadAnnotator,
    Annotator,
}

impl Role {
    pub const ALL: &'static [Role] = &[Role::SuperUser, Role::LeadAnnotator, Role::Annotator];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::SuperUser => "super-user",
            Role::LeadAnnotator => "lead-annotator",
            Role::Annotator => "annotator",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Role::ALL
            .iter()
            .copied()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown role {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub id: String,
    pub role: Role,
    /// Dialect or language pair the user works on; the super-user has none.
    pub dialect: Option<String>,
    /// Opaque key into the credential store.
    pub credentials_ref: String,
}

/// Registered users with the role constraints: one super-user system-wide,
/// one lead per dialect.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Directory {
    users: BTreeMap<String, User>,
}

impl Directory {
    pub fn register(&mut self, user: User) -> Result<()> {
        if self.users.contains_key(&user.id) {
            return Err(Error::State(format!("user {} already exists", user.id)));
        }
        match user.role {
            Role::SuperUser => {
                if self.users.values().any(|u| u.role == Role::SuperUser) {
                    return Err(Error::State("a super-user already exists".into()));
                }
            }
            Role::LeadAnnotator => {
                let Some(d) = &user.dialect else {
                    return Err(Error::State("lead annotators need a dialect".into()));
                };
                if self.lead_for(d).is_some() {
                    return Err(Error::State(format!("dialect {d} already has a lead")));
                }
            }
            Role::Annotator => {
                if user.dialect.is_none() {
                    return Err(Error::State("annotators need a dialect".into()));
                }
            }
        }
        self.users.insert(user.id.clone(), user);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&User> {
        self.users.get(id)
    }

    pub fn lead_for(&self, dialect: &str) -> Option<&User> {
        self.users
            .values()
            .find(|u| u.role == Role::LeadAnnotator && u.dialect.as_deref() == Some(dialect))
    }

    pub fn annotators(&self, dialect: &str) -> Vec<&User> {
        self.users
            .values()
            .filter(|u| u.role == Role::Annotator && u.dialect.as_deref() == Some(dialect))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &User> {
        self.users.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn user(id: &str, role: Role, dialect: Option<&str>) -> User {
        User {
            id: id.into(),
            role,
            dialect: dialect.map(Into::into),
            credentials_ref: id.into(),
        }
    }

    #[test]
    fn one_super_user() {
        let mut d = Directory::default();
        d.register(user("root", Role::SuperUser, None)).unwrap();
        assert!(d.register(user("root2", Role::SuperUser, None)).is_err());
    }

    #[test]
    fn one_lead_per_dialect() {
        let mut d = Directory::default();
        d.register(user("l1", Role::LeadAnnotator, Some("EGY")))
            .unwrap();
        assert!(d
            .register(user("l2", Role::LeadAnnotator, Some("EGY")))
            .is_err());
        d.register(user("l3", Role::LeadAnnotator, Some("LEV")))
            .unwrap();
        assert_eq!(d.lead_for("LEV").unwrap().id, "l3");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut d = Directory::default();
        d.register(user("a", Role::Annotator, Some("EGY"))).unwrap();
        assert!(d.register(user("a", Role::Annotator, Some("EGY"))).is_err());
        assert!(d.register(user("b", Role::Annotator, None)).is_err());
    }
}
