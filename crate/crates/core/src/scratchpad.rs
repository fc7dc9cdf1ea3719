//! Persistent agent notes, capped in size.

use serde::{Deserialize, Serialize};

use crate::error::SessionError;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scratchpad {
    content: String,
    cap_bytes: usize,
}

impl Scratchpad {
    pub fn new(cap_bytes: usize) -> Self {
        Scratchpad { content: String::new(), cap_bytes }
    }

    pub fn with_content(content: String, cap_bytes: usize) -> Self {
        Scratchpad { content, cap_bytes }
    }

    pub fn content(&self) -> &str {
        &self.content
    }

    pub fn cap_bytes(&self) -> usize {
        self.cap_bytes
    }

    fn check(&self, size: usize) -> Result<(), SessionError> {
        if size > self.cap_bytes {
            return Err(SessionError::ScratchpadOverflow { size, cap: self.cap_bytes });
        }
        Ok(())
    }

    pub fn write(&mut self, content: &str) -> Result<(), SessionError> {
        self.check(content.len())?;
        self.content = content.to_string();
        Ok(())
    }

    /// Appends on a new line; an empty pad takes the text as-is.
    pub fn append(&mut self, content: &str) -> Result<(), SessionError> {
        let size = if self.content.is_empty() { content.len() } else { self.content.len() + 1 + content.len() };
        self.check(size)?;
        if !self.content.is_empty() {
            self.content.push('\n');
        }
        self.content.push_str(content);
        Ok(())
    }
}
