use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points per axis of the training grid (spacing 0.02 on [-1, 1]).
pub const TRAIN_GRID: i64 = 100;
/// Points per axis of the validation grid (spacing 0.05 on [-1, 1]).
pub const VAL_GRID: i64 = 40;

/// `(r cos t, r sin t) -> (r cos kt, r sin kt)`.
pub fn rot_k(p: [f64; 2], k: u32) -> [f64; 2] {
    if k == 1 {
        // exactly the identity, without polar round-off
        return p;
    }
    let r = p[0].hypot(p[1]);
    if r == 0.0 {
        return [0.0, 0.0];
    }
    let theta = p[1].atan2(p[0]) * k as f64;
    [r * theta.cos(), r * theta.sin()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Train,
    Validation,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Train => "train",
            Role::Validation => "validation",
        })
    }
}

/// Input/target pairs in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub role: Role,
    pub inputs: Vec<[f64; 2]>,
    pub targets: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    x: f64,
    y: f64,
    target_x: f64,
    target_y: f64,
}

impl Dataset {
    pub fn new(role: Role, inputs: Vec<[f64; 2]>, targets: Vec<[f64; 2]>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::Dimension(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        Ok(Dataset { role, inputs, targets })
    }

    /// Targets `f(x)` for every input.
    pub fn from_fn(role: Role, inputs: Vec<[f64; 2]>, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let targets = inputs.iter().map(|&p| f(p)).collect();
        Dataset { role, inputs, targets }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&[f64; 2], &[f64; 2])> {
        self.inputs.iter().zip(&self.targets)
    }

    pub(crate) fn require_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyDataset(format!("{} set has no pairs", self.role)))
        } else {
            Ok(())
        }
    }

    /// Writes `x,y,target_x,target_y` rows with round-trip precision.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (p, t) in self.pairs() {
            w.serialize(Row {
                x: p[0],
                y: p[1],
                target_x: t[0],
                target_y: t[1],
            })
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(role: Role, reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers().map_err(csv_error)?;
        if headers != vec!["x", "y", "target_x", "target_y"] {
            return Err(Error::Parse {
                location: "header".into(),
                message: format!("expected x,y,target_x,target_y, got {}", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for row in r.deserialize::<Row>() {
            let row = row.map_err(csv_error)?;
            inputs.push([row.x, row.y]);
            targets.push([row.target_x, row.target_y]);
        }
        Dataset::new(role, inputs, targets)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(role: Role, path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(role, std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let location = e
        .position()
        .map_or_else(|| "csv".to_string(), |p| format!("line {}", p.line()));
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            location,
            message: format!("{kind:?}"),
        },
    }
}

/// Grid points `-1 + 2i/steps` of `[-1, 1]^2` lying in the closed unit disk.
///
/// Membership is decided in integers, so points on the circle such as
/// `(0.6, 0.8)` are kept. Coordinates are the correctly rounded values of
/// the grid points, which makes points shared by two grids compare equal.
fn disk_grid(steps: i64) -> Vec<(i64, i64, [f64; 2])> {
    let half = steps / 2;
    let coord = |i: i64| (i - half) as f64 / half as f64;
    let mut out = Vec::new();
    for i in 0..=steps {
        for j in 0..=steps {
            let (di, dj) = (i - half, j - half);
            if di * di + dj * dj <= half * half {
                out.push((i, j, [coord(i), coord(j)]));
            }
        }
    }
    out
}

/// The DISK training and validation sets with `rot_k` targets.
///
/// Training uses the 0.02 grid, validation the 0.05 grid minus the points
/// that are also on the training grid (those with both coordinates a
/// multiple of 0.1, i.e. even validation indices).
pub fn gen_disk(k: u32) -> (Dataset, Dataset) {
    let train: Vec<[f64; 2]> = disk_grid(TRAIN_GRID).into_iter().map(|(_, _, p)| p).collect();
    let val: Vec<[f64; 2]> = disk_grid(VAL_GRID)
        .into_iter()
        .filter(|(i, j, _)| i % 2 != 0 || j % 2 != 0)
        .map(|(_, _, p)| p)
        .collect();
    (
        Dataset::from_fn(Role::Train, train, |p| rot_k(p, k)),
        Dataset::from_fn(Role::Validation, val, |p| rot_k(p, k)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn close(a: [f64; 2], b: [f64; 2]) -> bool {
        (a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15
    }

    #[test]
    fn rot_examples() {
        assert_eq!(rot_k([1.0, 0.0], 2), [1.0, 0.0]);
        assert!(close(rot_k([0.0, 1.0], 2), [-1.0, 0.0]));
        let h = 0.5f64.sqrt();
        assert!(close(rot_k([h, h], 3), [-h, h]));
        assert_eq!(rot_k([0.0, 0.0], 5), [0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn rot_preserves_radius(x in -1.0f64..1.0, y in -1.0f64..1.0, k in 1u32..8) {
            let q = rot_k([x, y], k);
            prop_assert!((q[0].hypot(q[1]) - x.hypot(y)).abs() < 1e-12);
        }

        #[test]
        fn rot_composes(x in -1.0f64..1.0, y in -1.0f64..1.0, a in 1u32..4, b in 1u32..4) {
            let lhs = rot_k(rot_k([x, y], a), b);
            let rhs = rot_k([x, y], a * b);
            prop_assert!((lhs[0] - rhs[0]).abs() < 1e-12 && (lhs[1] - rhs[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn disk_counts_match_brute_force() {
        // Exhaustive count over the index square, decided in exact integers.
        let count = |steps: i64, keep: &dyn Fn(i64, i64) -> bool| {
            let h = steps / 2;
            let mut c = 0;
            for i in 0..=steps {
                for j in 0..=steps {
                    if (i - h).pow(2) + (j - h).pow(2) <= h * h && keep(i, j) {
                        c += 1;
                    }
                }
            }
            c
        };
        let (train, val) = gen_disk(2);
        assert_eq!(train.len(), count(100, &|_, _| true));
        assert_eq!(train.len(), 7845);
        assert_eq!(val.len(), count(40, &|i, j| i % 2 == 1 || j % 2 == 1));
        assert!(train.inputs.contains(&[0.0, 0.0]));
        assert!(train.inputs.contains(&[0.6, 0.8]));
        assert!(train.inputs.iter().chain(&val.inputs).all(|p| p[0] * p[0] + p[1] * p[1] <= 1.0 + 1e-15));
    }

    #[test]
    fn validation_is_disjoint_from_training() {
        let (train, val) = gen_disk(3);
        let bits = |p: &[f64; 2]| (p[0].to_bits(), p[1].to_bits());
        let train_set: HashSet<_> = train.inputs.iter().map(bits).collect();
        assert!(val.inputs.iter().all(|p| !train_set.contains(&bits(p))));
        // Every excluded validation point really is a training point.
        let all_val = disk_grid(VAL_GRID);
        let excluded: Vec<_> = all_val.iter().filter(|(i, j, _)| i % 2 == 0 && j % 2 == 0).collect();
        assert!(!excluded.is_empty());
        assert!(excluded.iter().all(|(_, _, p)| train_set.contains(&bits(p))));
        assert_eq!(excluded.len() + val.len(), all_val.len());
    }

    #[test]
    fn targets_are_rot_k() {
        let (train, _) = gen_disk(2);
        for (p, t) in train.pairs() {
            assert_eq!(*t, rot_k(*p, 2));
        }
    }

    #[test]
    fn csv_round_trip() {
        let (_, val) = gen_disk(2);
        let mut buf = Vec::new();
        val.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,y,target_x,target_y\n"));
        let back = Dataset::read_csv(Role::Validation, buf.as_slice()).unwrap();
        assert_eq!(back, val);
        assert!(Dataset::read_csv(Role::Train, "a,b,c,d\n1,2,3,4\n".as_bytes()).is_err());
        assert!(Dataset::read_csv(Role::Train, "x,y,target_x,target_y\n1,2,3\n".as_bytes()).is_err());
    }
}
