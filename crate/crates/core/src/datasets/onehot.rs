use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::LabeledBitDataset;
use crate::bits::BitString;
use crate::error::{Error, Result};

/// Rows of categorical cells with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl CategoricalTable {
    pub fn subset(&self, indices: &[usize]) -> Self {
        CategoricalTable {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }
}

/// Per-column sorted vocabularies. Categories unseen at fit time encode as
/// an all-zero block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotEncoder {
    vocabularies: Vec<Vec<String>>,
}

impl OneHotEncoder {
    pub fn fit(train: &CategoricalTable) -> Result<Self> {
        let width = train.columns.len();
        let mut vocab = vec![BTreeSet::new(); width];
        for row in &train.rows {
            if row.len() != width {
                return Err(Error::Schema(format!("row has {} cells, expected {width}", row.len())));
            }
            for (set, cell) in vocab.iter_mut().zip(row) {
                set.insert(cell.clone());
            }
        }
        if let Some(col) = vocab.iter().position(BTreeSet::is_empty) {
            let name = train.columns.get(col).map(String::as_str).unwrap_or("?");
            return Err(Error::Fit(format!("empty vocabulary for column `{name}`")));
        }
        Ok(OneHotEncoder {
            vocabularies: vocab.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    pub fn width(&self) -> usize {
        self.vocabularies.iter().map(Vec::len).sum()
    }

    pub fn vocabularies(&self) -> &[Vec<String>] {
        &self.vocabularies
    }

    pub fn transform_row(&self, row: &[String]) -> Result<BitString> {
        if row.len() != self.vocabularies.len() {
            return Err(Error::dim(self.vocabularies.len(), row.len()));
        }
        let mut out = BitString::zeros(self.width());
        let mut offset = 0;
        for (vocab, cell) in self.vocabularies.iter().zip(row) {
            if let Ok(pos) = vocab.binary_search(cell) {
                out.set(offset + pos, true);
            }
            offset += vocab.len();
        }
        Ok(out)
    }

    pub fn transform(&self, table: &CategoricalTable) -> Result<LabeledBitDataset> {
        let samples = table
            .rows
            .iter()
            .map(|r| self.transform_row(r))
            .collect::<Result<Vec<_>>>()?;
        LabeledBitDataset::new(self.width(), samples, table.labels.clone(), table.classes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[&[&str]]) -> CategoricalTable {
        let width = rows.first().map_or(0, |r| r.len());
        CategoricalTable {
            columns: (0..width).map(|i| format!("c{i}")).collect(),
            rows: rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
            labels: vec![0; rows.len()],
            classes: 2,
        }
    }

    #[test]
    fn single_column_three_categories() {
        let enc = OneHotEncoder::fit(&table(&[&["a"], &["b"], &["c"]])).unwrap();
        assert_eq!(enc.transform_row(&["b".into()]).unwrap().to_string(), "010");
    }

    #[test]
    fn two_columns_one_bit_each() {
        let t = table(&[&["x", "p"], &["y", "q"], &["x", "r"]]);
        let enc = OneHotEncoder::fit(&t).unwrap();
        assert_eq!(enc.width(), 5);
        for row in enc.transform(&t).unwrap().samples() {
            assert_eq!(row.count_ones(), 2);
        }
    }

    #[test]
    fn unseen_category_is_zero_block() {
        let enc = OneHotEncoder::fit(&table(&[&["a"], &["b"], &["c"]])).unwrap();
        assert_eq!(enc.transform_row(&["z".into()]).unwrap().to_string(), "000");
    }

    #[test]
    fn empty_table_cannot_fit() {
        let t = CategoricalTable {
            columns: vec!["c0".into()],
            rows: vec![],
            labels: vec![],
            classes: 2,
        };
        assert!(matches!(OneHotEncoder::fit(&t), Err(Error::Fit(_))));
    }
}
