//! Comma-separated lists and `start:stop:step` ranges for command-line
//! values.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use wfmgf::MultiIndex;

#[derive(Debug)]
pub struct ListError(String);

impl fmt::Display for ListError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ListError {}

fn items(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

/// Real values: `0.1,0.5,1` or `0:2:0.5` (stop included).
#[derive(Clone, Debug, PartialEq)]
pub struct Floats(pub Vec<f64>);

impl FromStr for Floats {
    type Err = ListError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |x: &str| x.parse::<f64>().map_err(|e| ListError(format!("bad number {x:?}: {e}")));
        let mut out = Vec::new();
        for item in items(s) {
            let parts: Vec<&str> = item.split(':').collect();
            match parts.as_slice() {
                [x] => out.push(num(x)?),
                [a, b, c] => {
                    let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
                    if step.is_nan() || step <= 0.0 || stop < start {
                        return Err(ListError(format!("range {item:?} needs step > 0 and stop ≥ start")));
                    }
                    let count = ((stop - start) / step + 1e-9).floor() as usize;
                    out.extend((0..=count).map(|i| start + i as f64 * step));
                }
                _ => return Err(ListError(format!("expected a number or start:stop:step, got {item:?}"))),
            }
        }
        if out.is_empty() {
            return Err(ListError("empty list".into()));
        }
        Ok(Floats(out))
    }
}

impl Serialize for Floats {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// Generation counts: `0,50,100` or `0:200:50`.
#[derive(Clone, Debug, PartialEq)]
pub struct Counts(pub Vec<u32>);

impl FromStr for Counts {
    type Err = ListError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |x: &str| x.parse::<u32>().map_err(|e| ListError(format!("bad count {x:?}: {e}")));
        let mut out = Vec::new();
        for item in items(s) {
            let parts: Vec<&str> = item.split(':').collect();
            match parts.as_slice() {
                [x] => out.push(num(x)?),
                [a, b, c] => {
                    let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
                    if step == 0 || stop < start {
                        return Err(ListError(format!("range {item:?} needs step > 0 and stop ≥ start")));
                    }
                    out.extend((start..=stop).step_by(step as usize));
                }
                _ => return Err(ListError(format!("expected a count or start:stop:step, got {item:?}"))),
            }
        }
        if out.is_empty() {
            return Err(ListError("empty list".into()));
        }
        Ok(Counts(out))
    }
}

impl Serialize for Counts {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// Moment orders: `0,1,2` for two alleles, `1:0,0:2` for more.
#[derive(Clone, Debug, PartialEq)]
pub struct Orders(pub Vec<MultiIndex>);

impl FromStr for Orders {
    type Err = ListError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let out = items(s)
            .map(|x| x.parse::<MultiIndex>().map_err(|e| ListError(format!("bad order {x:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if out.is_empty() {
            return Err(ListError("empty list".into()));
        }
        Ok(Orders(out))
    }
}

impl Serialize for Orders {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}
