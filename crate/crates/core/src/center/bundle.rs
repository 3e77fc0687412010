use std::collections::HashMap;

use num_integer::Integer;
use num_rational::BigRational;
use serde_json::{json, Map, Value};

use crate::cyclotomic::Cyclotomic;
use crate::error::{Error, Result};

/// Rank-3 tensor of cyclotomic numbers stored as ids into a palette of
/// distinct values.
#[derive(Clone, Debug)]
pub struct Tensor3 {
    n: usize,
    palette: Vec<Cyclotomic>,
    ids: Vec<u32>,
}

pub struct Tensor3Builder {
    n: usize,
    palette: Vec<Cyclotomic>,
    index: HashMap<(u64, Vec<(u64, BigRational)>), u32>,
    ids: Vec<u32>,
}

impl Tensor3Builder {
    pub fn intern(&mut self, v: Cyclotomic) -> u32 {
        let key = (v.conductor(), v.terms().to_vec());
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        // equal values at different conductors must share an id
        if let Some(pos) = self.palette.iter().position(|p| p.conductor() != v.conductor() && *p == v) {
            self.index.insert(key, pos as u32);
            return pos as u32;
        }
        let id = self.palette.len() as u32;
        self.palette.push(v);
        self.index.insert(key, id);
        id
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, id: u32) {
        self.ids[(i * self.n + j) * self.n + k] = id;
    }

    pub fn finish(self) -> Result<Tensor3> {
        if let Some(pos) = self.ids.iter().position(|&id| id == u32::MAX) {
            return Err(Error::InternalConsistency(format!("tensor entry {pos} was never set")));
        }
        Ok(Tensor3 { n: self.n, palette: self.palette, ids: self.ids })
    }
}

impl Tensor3 {
    pub fn builder(n: usize) -> Tensor3Builder {
        Tensor3Builder { n, palette: Vec::new(), index: HashMap::new(), ids: vec![u32::MAX; n * n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> Cyclotomic) -> Tensor3 {
        let mut b = Self::builder(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let id = b.intern(f(i, j, k));
                    b.set(i, j, k, id);
                }
            }
        }
        b.finish().expect("every entry set")
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &Cyclotomic {
        &self.palette[self.id(i, j, k) as usize]
    }

    #[inline]
    pub fn id(&self, i: usize, j: usize, k: usize) -> u32 {
        self.ids[(i * self.n + j) * self.n + k]
    }

    pub fn palette(&self) -> &[Cyclotomic] {
        &self.palette
    }

    pub fn conductor(&self) -> u64 {
        self.palette.iter().fold(1, |acc, v| acc.lcm(&v.conductor()))
    }

    pub fn to_json(&self) -> Value {
        let rendered: Vec<Value> = self.palette.iter().map(Cyclotomic::to_json).collect();
        Value::Array(
            (0..self.n)
                .map(|i| {
                    Value::Array(
                        (0..self.n)
                            .map(|j| Value::Array((0..self.n).map(|k| rendered[self.id(i, j, k) as usize].clone()).collect()))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = || Error::Schema("B must be an n×n×n array".into());
        let outer = v.as_array().ok_or_else(bad)?;
        let n = outer.len();
        let mut b = Self::builder(n);
        for (i, row) in outer.iter().enumerate() {
            let row = row.as_array().filter(|r| r.len() == n).ok_or_else(bad)?;
            for (j, fiber) in row.iter().enumerate() {
                let fiber = fiber.as_array().filter(|r| r.len() == n).ok_or_else(bad)?;
                for (k, x) in fiber.iter().enumerate() {
                    let id = b.intern(cyclotomic_from_any(x)?);
                    b.set(i, j, k, id);
                }
            }
        }
        b.finish()
    }
}

/// Accepts the object form `{"N", "terms"}` or a rendered string.
pub(crate) fn cyclotomic_from_any(v: &Value) -> Result<Cyclotomic> {
    match v {
        Value::String(s) => Cyclotomic::parse(s),
        Value::Number(n) => n
            .as_i64()
            .map(Cyclotomic::from_integer)
            .ok_or_else(|| Error::Schema(format!("non-integer number {n}"))),
        _ => Cyclotomic::from_json(v),
    }
}

/// Modular data and the Borromean tensor of one category, indexed by the
/// same ordering of simples.
#[derive(Clone, Debug)]
pub struct InvariantBundle {
    pub simples: Vec<(usize, usize)>,
    pub dims: Vec<u64>,
    pub t: Vec<Cyclotomic>,
    pub s: Option<Vec<Vec<Cyclotomic>>>,
    pub b: Option<Tensor3>,
}

impl InvariantBundle {
    pub fn len(&self) -> usize {
        self.simples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simples.is_empty()
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("simples".into(), json!(self.simples.iter().map(|&(c, r)| json!([c, r])).collect::<Vec<_>>()));
        m.insert("dims".into(), json!(self.dims));
        m.insert("T".into(), Value::Array(self.t.iter().map(Cyclotomic::to_json).collect()));
        if let Some(s) = &self.s {
            m.insert(
                "S".into(),
                Value::Array(s.iter().map(|r| Value::Array(r.iter().map(Cyclotomic::to_json).collect())).collect()),
            );
        }
        if let Some(b) = &self.b {
            m.insert("B".into(), b.to_json());
        }
        Value::Object(m)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::Schema(format!("bundle: {m}"));
        let simples = v
            .get("simples")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing simples"))?
            .iter()
            .map(|p| {
                let p = p.as_array().filter(|p| p.len() == 2).ok_or_else(|| bad("simple label must be a pair"))?;
                let c = p[0].as_u64().ok_or_else(|| bad("class index"))? as usize;
                let r = p[1].as_u64().ok_or_else(|| bad("character index"))? as usize;
                Ok((c, r))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = simples.len();
        let dims = v
            .get("dims")
            .and_then(Value::as_array)
            .filter(|d| d.len() == n)
            .ok_or_else(|| bad("dims must have one entry per simple"))?
            .iter()
            .map(|d| d.as_u64().filter(|&d| d > 0).ok_or_else(|| bad("dims must be positive integers")))
            .collect::<Result<Vec<_>>>()?;
        let t = v
            .get("T")
            .and_then(Value::as_array)
            .filter(|t| t.len() == n)
            .ok_or_else(|| bad("T must have one entry per simple"))?
            .iter()
            .map(cyclotomic_from_any)
            .collect::<Result<Vec<_>>>()?;
        let s = match v.get("S") {
            None | Some(Value::Null) => None,
            Some(s) => Some(
                s.as_array()
                    .filter(|s| s.len() == n)
                    .ok_or_else(|| bad("S must be n×n"))?
                    .iter()
                    .map(|row| {
                        row.as_array()
                            .filter(|r| r.len() == n)
                            .ok_or_else(|| bad("S must be n×n"))?
                            .iter()
                            .map(cyclotomic_from_any)
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        let b = match v.get("B") {
            None | Some(Value::Null) => None,
            Some(b) => {
                let b = Tensor3::from_json(b)?;
                if b.len() != n {
                    return Err(bad("B must be n×n×n"));
                }
                Some(b)
            }
        };
        Ok(InvariantBundle { simples, dims, t, s, b })
    }

    /// The same data with index `i` moved to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> InvariantBundle {
        let n = self.len();
        let mut inv = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        InvariantBundle {
            simples: (0..n).map(|i| self.simples[inv[i]]).collect(),
            dims: (0..n).map(|i| self.dims[inv[i]]).collect(),
            t: (0..n).map(|i| self.t[inv[i]].clone()).collect(),
            s: self.s.as_ref().map(|s| (0..n).map(|i| (0..n).map(|j| s[inv[i]][inv[j]].clone()).collect()).collect()),
            b: self.b.as_ref().map(|b| Tensor3::from_fn(n, |i, j, k| b.get(inv[i], inv[j], inv[k]).clone())),
        }
    }

    pub fn to_string_pretty(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundle_round_trip() {
        let z = Cyclotomic::root_of_unity(3, 1);
        let b = Tensor3::from_fn(2, |i, j, k| if i + j + k == 0 { Cyclotomic::one() } else { z.clone() });
        let bundle = InvariantBundle {
            simples: vec![(0, 0), (1, 0)],
            dims: vec![1, 1],
            t: vec![Cyclotomic::one(), z.clone()],
            s: Some(vec![vec![Cyclotomic::one(); 2]; 2]),
            b: Some(b),
        };
        let text = bundle.to_string_pretty();
        let back = InvariantBundle::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.to_string_pretty(), text);
        assert_eq!(back.b.as_ref().unwrap().get(0, 1, 1), &z);
        assert_eq!(back.b.as_ref().unwrap().palette().len(), 2);
    }

    #[test]
    fn equal_values_at_different_conductors_share_an_id() {
        let mut b = Tensor3::builder(1);
        let x = b.intern(Cyclotomic::root_of_unity(3, 1));
        let y = b.intern(Cyclotomic::root_of_unity(3, 1).lift(6));
        assert_eq!(x, y);
    }

    #[test]
    fn rejects_ragged_tensors() {
        let v: Value = serde_json::from_str(r#"[[["1"],["1"]],[["1","1"],["1","1"]]]"#).unwrap();
        assert!(Tensor3::from_json(&v).is_err());
    }
}
