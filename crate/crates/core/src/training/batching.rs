use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::model::SequenceInput;
use crate::numerics::Matrix;

/// One training sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: SequenceInput,
    pub labels: Vec<Label>,
}

impl Example {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Sequences of similar length, identified by their index in the training list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bucket {
    pub members: Vec<usize>,
    pub max_len: usize,
}

/// Groups sequences whose lengths fall in the same `width`-token range
/// (`1..=width`, `width+1..=2·width`, …). Buckets come out shortest first;
/// members keep their input order.
pub fn make_buckets(lengths: &[usize], width: usize) -> Result<Vec<Bucket>> {
    if width == 0 {
        return Err(Error::contract("bucket width must be positive"));
    }
    if lengths.is_empty() {
        return Err(Error::contract("nothing to bucket"));
    }
    let mut by_key: std::collections::BTreeMap<usize, Bucket> = Default::default();
    for (i, &len) in lengths.iter().enumerate() {
        let b = by_key.entry(len.saturating_sub(1) / width).or_insert(Bucket {
            members: Vec::new(),
            max_len: 0,
        });
        b.members.push(i);
        b.max_len = b.max_len.max(len);
    }
    Ok(by_key.into_values().collect())
}

/// Sequences padded to a common length, with a mask marking real positions.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedBatch {
    pub inputs: Vec<SequenceInput>,
    pub labels: Vec<Vec<Label>>,
    pub mask: Vec<Vec<bool>>,
}

impl PaddedBatch {
    pub fn padded_len(&self) -> usize {
        self.mask.first().map_or(0, Vec::len)
    }

    pub fn active_len(&self, i: usize) -> usize {
        self.mask[i].iter().take_while(|&&m| m).count()
    }

    pub fn active_total(&self) -> usize {
        (0..self.mask.len()).map(|i| self.active_len(i)).sum()
    }
}

fn pad_input(input: &SequenceInput, len: usize) -> SequenceInput {
    match input {
        SequenceInput::Tokens { words, tags } => {
            let pad = |ids: &Vec<usize>| {
                if ids.is_empty() {
                    Vec::new()
                } else {
                    let mut v = ids.clone();
                    v.resize(len, 0);
                    v
                }
            };
            SequenceInput::Tokens {
                words: pad(words),
                tags: pad(tags),
            }
        }
        SequenceInput::Features(x) => {
            let mut data = x.as_slice().to_vec();
            data.resize(len * x.cols(), 0.0);
            SequenceInput::Features(Matrix::from_vec(len, x.cols(), data).expect("padded shape"))
        }
    }
}

/// Pads `examples` to `pad_to` (at least the longest member).
pub fn pad_batch(examples: &[&Example], pad_to: Option<usize>) -> Result<PaddedBatch> {
    let longest = examples.iter().map(|e| e.len()).max().unwrap_or(0);
    let len = pad_to.unwrap_or(longest);
    if len < longest {
        return Err(Error::contract(format!("cannot pad to {len}, longest sequence is {longest}")));
    }
    let mut batch = PaddedBatch {
        inputs: Vec::with_capacity(examples.len()),
        labels: Vec::with_capacity(examples.len()),
        mask: Vec::with_capacity(examples.len()),
    };
    for e in examples {
        batch.inputs.push(pad_input(&e.input, len));
        let mut labels = e.labels.clone();
        labels.resize(len, Label::NB);
        batch.labels.push(labels);
        let mut mask = vec![true; e.len()];
        mask.resize(len, false);
        batch.mask.push(mask);
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_fifty_splits_long_text() {
        let b = make_buckets(&[12, 14, 80], 50).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].members, vec![0, 1]);
        assert_eq!(b[0].max_len, 14);
        assert_eq!(b[1].members, vec![2]);
    }

    #[test]
    fn wide_buckets_merge_everything() {
        let b = make_buckets(&[12, 14, 80], 80).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].members.len(), 3);
    }

    #[test]
    fn every_sequence_in_exactly_one_bucket() {
        let lengths: Vec<usize> = (0..200).map(|i| 1 + (i * 37) % 311).collect();
        let buckets = make_buckets(&lengths, 50).unwrap();
        let mut seen: Vec<usize> = buckets.iter().flat_map(|b| b.members.clone()).collect();
        seen.sort();
        assert_eq!(seen, (0..200).collect::<Vec<_>>());
        for b in &buckets {
            let lens: Vec<usize> = b.members.iter().map(|&i| lengths[i]).collect();
            assert!(lens.iter().max().unwrap() - lens.iter().min().unwrap() < 50);
        }
    }

    #[test]
    fn padding_adds_masked_rows() {
        let e = Example {
            input: SequenceInput::Features(Matrix::zeros(3, 2)),
            labels: vec![Label::NB, Label::NB, Label::B],
        };
        let b = pad_batch(&[&e], Some(5)).unwrap();
        assert_eq!(b.padded_len(), 5);
        assert_eq!(b.active_len(0), 3);
        assert_eq!(b.mask[0], [true, true, true, false, false]);
        assert_eq!(b.inputs[0].len(), 5);
        assert!(pad_batch(&[&e], Some(2)).is_err());
    }
}
