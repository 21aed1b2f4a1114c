use serde::{Deserialize, Serialize};

use crate::seed;

/// Where a transition's action came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[repr(u8)]
pub enum Provenance {
    Random = 0,
    ProposerDerived = 1,
}

impl Provenance {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Self::Random),
            1 => Some(Self::ProposerDerived),
            _ => None,
        }
    }
}

/// One `(s_t, a_t, s_{t+1})` experience triplet.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Vec<f32>,
    pub a: Vec<f32>,
    pub s_next: Vec<f32>,
    pub provenance: Provenance,
}

impl Transition {
    pub fn new(s: &[f64], a: &[f64], s_next: &[f64], provenance: Provenance) -> Self {
        let f = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<f32>>();
        Self {
            s: f(s),
            a: f(a),
            s_next: f(s_next),
            provenance,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.s
            .iter()
            .chain(&self.a)
            .chain(&self.s_next)
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("transition dims ({s}, {a}, {s_next}) do not match dataset schema ({sensor_dim}, {action_dim})")]
    Schema {
        s: usize,
        a: usize,
        s_next: usize,
        sensor_dim: usize,
        action_dim: usize,
    },
    #[error("transition contains non-finite values")]
    NonFinite,
}

/// Append-only experience store with a stable train/validation split.
///
/// A record's split is a pure function of its index and the split seed, so
/// records never migrate between splits as the dataset grows.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperienceDataset {
    sensor_dim: usize,
    action_dim: usize,
    records: Vec<Transition>,
    validation_fraction: f64,
    split_seed: u64,
}

impl ExperienceDataset {
    pub fn new(
        sensor_dim: usize,
        action_dim: usize,
        validation_fraction: f64,
        split_seed: u64,
    ) -> Self {
        assert!(
            (0.0..1.0).contains(&validation_fraction),
            "validation fraction must be in [0, 1)"
        );
        Self {
            sensor_dim,
            action_dim,
            records: Vec::new(),
            validation_fraction,
            split_seed,
        }
    }

    pub fn sensor_dim(&self) -> usize {
        self.sensor_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Transition] {
        &self.records
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.records[i]
    }

    pub fn push(&mut self, t: Transition) -> Result<(), DatasetError> {
        if t.s.len() != self.sensor_dim
            || t.s_next.len() != self.sensor_dim
            || t.a.len() != self.action_dim
        {
            return Err(DatasetError::Schema {
                s: t.s.len(),
                a: t.a.len(),
                s_next: t.s_next.len(),
                sensor_dim: self.sensor_dim,
                action_dim: self.action_dim,
            });
        }
        if !t.is_finite() {
            return Err(DatasetError::NonFinite);
        }
        self.records.push(t);
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = Transition>>(
        &mut self,
        it: I,
    ) -> Result<(), DatasetError> {
        for t in it {
            self.push(t)?;
        }
        Ok(())
    }

    pub fn is_validation(&self, index: usize) -> bool {
        seed::unit_hash(self.split_seed, &[seed::stream::SPLIT, index as u64])
            < self.validation_fraction
    }

    /// `(train, validation)` index lists; disjoint and covering every record.
    pub fn split(&self) -> (Vec<usize>, Vec<usize>) {
        (0..self.records.len()).partition(|&i| !self.is_validation(i))
    }

    pub fn count_by(&self, p: Provenance) -> usize {
        self.records.iter().filter(|t| t.provenance == p).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: f64) -> Transition {
        Transition::new(&[v, v], &[v], &[v + 1.0, v], Provenance::Random)
    }

    #[test]
    fn split_is_disjoint_and_stable_under_growth() {
        let mut ds = ExperienceDataset::new(2, 1, 0.2, 9);
        ds.extend((0..500).map(|i| t(i as f64))).unwrap();
        let (tr, va) = ds.split();
        assert_eq!(tr.len() + va.len(), 500);
        assert!(tr.iter().all(|i| !va.contains(i)));
        assert!((60..140).contains(&va.len()));
        ds.extend((500..1000).map(|i| t(i as f64))).unwrap();
        let (_, va2) = ds.split();
        assert_eq!(&va2[..va.len()], &va[..]);
    }

    #[test]
    fn schema_and_finiteness_enforced() {
        let mut ds = ExperienceDataset::new(2, 1, 0.0, 0);
        assert!(matches!(
            ds.push(Transition::new(
                &[1.0],
                &[0.0],
                &[1.0, 2.0],
                Provenance::Random
            )),
            Err(DatasetError::Schema { .. })
        ));
        assert_eq!(ds.push(t(f64::NAN)), Err(DatasetError::NonFinite));
        assert!(ds.is_empty());
    }
}
