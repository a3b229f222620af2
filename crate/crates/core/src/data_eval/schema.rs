use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    A,
    B,
    C,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::A => "A",
            Task::B => "B",
            Task::C => "C",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Task::A),
            "B" => Ok(Task::B),
            "C" => Ok(Task::C),
            _ => Err(Error::Config(format!("unknown task {s:?}, expected A, B or C"))),
        }
    }
}

/// Ordered class names. For the two binary tasks index 1 is the positive
/// class, so a sigmoid output is P(labels[1]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSchema {
    labels: Vec<String>,
}

impl LabelSchema {
    pub fn for_task(task: Task) -> Self {
        let labels: &[&str] = match task {
            Task::A => &["NOT", "OFF"],
            Task::B => &["UNT", "TIN"],
            Task::C => &["IND", "GRP", "OTH"],
        };
        LabelSchema {
            labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn custom<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|l| l.as_ref().trim().to_string()).collect();
        if labels.len() < 2 {
            return Err(Error::invalid("a label schema needs at least two classes"));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() || l.contains(['\t', '\n']) || labels[..i].contains(l) {
                return Err(Error::invalid(format!("invalid or repeated label {l:?}")));
            }
        }
        Ok(LabelSchema { labels })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Index of `label` after trimming; case-sensitive.
    pub fn index(&self, label: &str) -> Option<usize> {
        let label = label.trim();
        self.labels.iter().position(|l| l == label)
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn positive(&self) -> Option<usize> {
        (self.labels.len() == 2).then_some(1)
    }
}
