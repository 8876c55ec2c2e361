use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// PaySim transaction types, in one-hot column order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TxType {
    CashIn,
    CashOut,
    Debit,
    Payment,
    Transfer,
}

impl TxType {
    pub const ALL: [TxType; 5] = [
        TxType::CashIn,
        TxType::CashOut,
        TxType::Debit,
        TxType::Payment,
        TxType::Transfer,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TxType::CashIn => "CASH_IN",
            TxType::CashOut => "CASH_OUT",
            TxType::Debit => "DEBIT",
            TxType::Payment => "PAYMENT",
            TxType::Transfer => "TRANSFER",
        }
    }

    /// Money leaves the originating account.
    pub fn is_outgoing(self) -> bool {
        !matches!(self, TxType::CashIn)
    }
}

impl fmt::Display for TxType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TxType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TxType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown transaction type {s:?}"))
    }
}

/// Behavioural pattern a transaction belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PatternLabel {
    Normal,
    Fraud,
    Laundering,
}

impl PatternLabel {
    pub const ALL: [PatternLabel; 3] = [PatternLabel::Normal, PatternLabel::Fraud, PatternLabel::Laundering];

    pub fn as_str(self) -> &'static str {
        match self {
            PatternLabel::Normal => "NORMAL",
            PatternLabel::Fraud => "FRAUD",
            PatternLabel::Laundering => "LAUNDERING",
        }
    }

    /// Binary collapse used for detection metrics.
    pub fn is_suspicious(self) -> bool {
        self != PatternLabel::Normal
    }
}

impl fmt::Display for PatternLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PatternLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown pattern label {s:?}"))
    }
}

/// One payment event in PaySim form.
#[derive(Clone, Debug, PartialEq)]
pub struct TransactionRecord {
    /// Simulation hour.
    pub step: u32,
    pub tx_type: TxType,
    pub amount: f64,
    pub orig_account: String,
    pub orig_balance_before: f64,
    pub orig_balance_after: f64,
    pub dest_account: String,
    pub dest_balance_before: f64,
    pub dest_balance_after: f64,
    pub label: PatternLabel,
}

impl TransactionRecord {
    pub fn balances(&self) -> [f64; 4] {
        [
            self.orig_balance_before,
            self.orig_balance_after,
            self.dest_balance_before,
            self.dest_balance_after,
        ]
    }
}

/// Number of records carrying each label, in [`PatternLabel::ALL`] order.
pub fn label_counts(records: &[TransactionRecord]) -> [usize; 3] {
    let mut counts = [0; 3];
    for r in records {
        counts[r.label as usize] += 1;
    }
    counts
}
