use std::io::{BufRead, Write};

use super::LinearHead;
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::parity::ParityWord;

const HEADER: &str = "parity-clf v1";

/// Signed-parity features followed by a linear head. Evaluation needs
/// only AND, popcount and a K-term dot product per class.
#[derive(Debug, Clone, PartialEq)]
pub struct DeployedParityClassifier {
    pub n: usize,
    pub words: Vec<ParityWord>,
    pub head: LinearHead,
    /// When set, real inputs are rounded to this grid before evaluation.
    pub grid_step: Option<f64>,
}

impl DeployedParityClassifier {
    pub fn new(n: usize, words: Vec<ParityWord>, head: LinearHead) -> Result<Self> {
        if let Some(w) = words.iter().find(|w| w.len() != n) {
            return Err(Error::dim(n, w.len()));
        }
        if head.k() != words.len() && head.classes() > 0 && !words.is_empty() {
            return Err(Error::dim(words.len(), head.k()));
        }
        Ok(DeployedParityClassifier {
            n,
            words,
            head,
            grid_step: None,
        })
    }

    pub fn features(&self, b: &BitString) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::dim(self.n, b.len()));
        }
        Ok(self.words.iter().map(|w| w.eval(b)).collect())
    }

    pub fn predict(&self, b: &BitString) -> Result<usize> {
        let f = self.features(b)?;
        Ok(self.head.predict_logits(&self.head.logits(&f)))
    }

    /// Rounds each coordinate to the grid (clamped to {0, 1} for the unit
    /// step) and classifies the resulting bit string.
    pub fn predict_rounded(&self, x: &[f64]) -> Result<usize> {
        let step = self.grid_step.unwrap_or(1.0);
        let bits: Vec<bool> = x.iter().map(|&v| round_bit(v, step)).collect();
        self.predict(&BitString::from_bools(&bits))
    }

    pub fn accuracy(&self, samples: &[BitString], labels: &[usize]) -> Result<f64> {
        let mut hits = 0usize;
        for (b, &y) in samples.iter().zip(labels) {
            hits += usize::from(self.predict(b)? == y);
        }
        Ok(100.0 * hits as f64 / labels.len().max(1) as f64)
    }

    pub fn write(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "{HEADER} n={} K={} C={}", self.n, self.words.len(), self.head.classes())?;
        for (k, w) in self.words.iter().enumerate() {
            write!(out, "{w}")?;
            for row in &self.head.weights {
                write!(out, " {:e}", row[k])?;
            }
            writeln!(out)?;
        }
        write!(out, "bias")?;
        for b in &self.head.bias {
            write!(out, " {b:e}")?;
        }
        writeln!(out)?;
        Ok(())
    }

    pub fn read(input: impl BufRead) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse {
            path: "<classifier>".into(),
            line,
            msg: msg.to_string(),
        };
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| bad(1, "empty file"))??;
        let rest = header
            .strip_prefix(HEADER)
            .ok_or_else(|| bad(1, "missing `parity-clf v1` header"))?;
        let mut dims = [None; 3];
        for tok in rest.split_whitespace() {
            let (key, val) = tok.split_once('=').ok_or_else(|| bad(1, "expected key=value"))?;
            let idx = match key {
                "n" => 0,
                "K" => 1,
                "C" => 2,
                _ => return Err(bad(1, &format!("unknown header key `{key}`"))),
            };
            dims[idx] = Some(val.parse::<usize>().map_err(|e| bad(1, &e.to_string()))?);
        }
        let [Some(n), Some(k), Some(c)] = dims else {
            return Err(bad(1, "header needs n, K and C"));
        };
        let mut words = Vec::with_capacity(k);
        let mut weights = vec![vec![0.0; k]; c];
        for i in 0..k {
            let lineno = i + 2;
            let line = lines.next().ok_or_else(|| bad(lineno, "missing word line"))??;
            let mut toks = line.split_whitespace();
            let word: ParityWord = toks
                .next()
                .ok_or_else(|| bad(lineno, "missing word"))?
                .parse()
                .map_err(|e: Error| bad(lineno, &e.to_string()))?;
            let vals = parse_floats(toks, c).map_err(|m| bad(lineno, &m))?;
            for (row, v) in weights.iter_mut().zip(vals) {
                row[i] = v;
            }
            words.push(word);
        }
        let lineno = k + 2;
        let line = lines.next().ok_or_else(|| bad(lineno, "missing bias line"))??;
        let mut toks = line.split_whitespace();
        if toks.next() != Some("bias") {
            return Err(bad(lineno, "expected `bias`"));
        }
        let bias = parse_floats(toks, c).map_err(|m| bad(lineno, &m))?;
        Self::new(n, words, LinearHead { weights, bias })
    }
}

fn parse_floats<'a>(toks: impl Iterator<Item = &'a str>, expected: usize) -> std::result::Result<Vec<f64>, String> {
    let vals = toks
        .map(|t| t.parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if vals.len() != expected {
        return Err(format!("expected {expected} values, got {}", vals.len()));
    }
    Ok(vals)
}

fn round_bit(v: f64, step: f64) -> bool {
    (v / step + 0.5).floor() * step >= 0.5
}
