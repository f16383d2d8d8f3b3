//! Resource budgets. Several exact checks in this crate are intrinsically
//! exponential, so every operation that can blow up takes an explicit budget
//! and fails hard instead of truncating silently.

use crate::error::{BudgetKind, Error, Result};
use std::cell::Cell;

pub const DEFAULT_ELEMENTS: u64 = 1_000_000;
pub const DEFAULT_NODES: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Budget {
    /// Maximum number of elements in any constructed product structure, and
    /// maximum number of cells in any operation table.
    pub elements: u64,
    /// Maximum number of search nodes per solver call or game evaluation.
    pub nodes: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            elements: DEFAULT_ELEMENTS,
            nodes: DEFAULT_NODES,
        }
    }
}

impl Budget {
    pub fn new(elements: u64, nodes: u64) -> Self {
        Budget { elements, nodes }
    }

    pub fn check_elements(&self, needed: u64) -> Result<()> {
        if needed > self.elements {
            Err(Error::Budget {
                kind: BudgetKind::Elements,
                needed,
                budget: self.elements,
            })
        } else {
            Ok(())
        }
    }

    /// Fresh node counter for one solver call.
    pub fn meter(&self) -> NodeMeter {
        NodeMeter {
            used: Cell::new(0),
            limit: self.nodes,
        }
    }
}

/// Counts search nodes within a single call. Interior mutability keeps the
/// solver functions otherwise pure.
#[derive(Debug)]
pub struct NodeMeter {
    used: Cell<u64>,
    limit: u64,
}

impl NodeMeter {
    pub fn tick(&self) -> Result<()> {
        let n = self.used.get() + 1;
        self.used.set(n);
        if n > self.limit {
            Err(Error::Budget {
                kind: BudgetKind::Nodes,
                needed: n,
                budget: self.limit,
            })
        } else {
            Ok(())
        }
    }

    pub fn used(&self) -> u64 {
        self.used.get()
    }
}
