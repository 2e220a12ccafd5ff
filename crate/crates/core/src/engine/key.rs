use std::fmt;

/// Index of a table in a [`Store`](super::Store) schema.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TableId(pub u16);

/// Address of one tuple. Ordered by `(table, row)`; commit-time latching
/// walks write sets in this order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key {
    pub table: TableId,
    pub row: u64,
}

impl Key {
    pub const fn new(table: u16, row: u64) -> Self {
        Key {
            table: TableId(table),
            row,
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.table.0, self.row)
    }
}

/// Transaction identifier. Every attempt of a transaction gets a fresh id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TxnId(pub u64);

impl TxnId {
    /// Writer recorded on the versions installed at load time.
    pub const LOADER: TxnId = TxnId(0);
}

impl fmt::Display for TxnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}
